use nalgebra::ComplexField;
use num_complex::Complex64;

/// Element type of tensors: `f64` or `Complex64`.
///
/// Real data stays real until a complex transform is applied; see
/// [`crate::Tensor3::to_complex`].
pub trait Scalar:
    ComplexField<RealField = f64> + Copy + Default + Send + Sync + std::fmt::Debug + 'static
{
    const IS_COMPLEX: bool;
    /// Number of `f64` values needed to store one scalar.
    const FLOATS: usize;

    fn to_c64(self) -> Complex64;
    /// Converts from a complex value; real scalars keep only the real part.
    fn from_c64(z: Complex64) -> Self;
    fn push_floats(self, out: &mut Vec<f64>);
    /// Reads one scalar from the front of `src` (`FLOATS` values).
    fn read_floats(src: &[f64]) -> Self;
    /// Reinterprets a slice as complex, when `Self` is `Complex64`.
    fn as_complex_mut(s: &mut [Self]) -> Option<&mut [Complex64]>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    const FLOATS: usize = 1;

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
    fn push_floats(self, out: &mut Vec<f64>) {
        out.push(self);
    }
    fn read_floats(src: &[f64]) -> Self {
        src[0]
    }
    fn as_complex_mut(_: &mut [Self]) -> Option<&mut [Complex64]> {
        None
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;
    const FLOATS: usize = 2;

    fn to_c64(self) -> Complex64 {
        self
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn push_floats(self, out: &mut Vec<f64>) {
        out.push(self.re);
        out.push(self.im);
    }
    fn read_floats(src: &[f64]) -> Self {
        Complex64::new(src[0], src[1])
    }
    fn as_complex_mut(s: &mut [Self]) -> Option<&mut [Complex64]> {
        Some(s)
    }
}

/// Packs scalars into a flat float buffer (complex values interleaved re/im).
pub fn pack<T: Scalar>(values: &[T], out: &mut Vec<f64>) {
    out.reserve(values.len() * T::FLOATS);
    for &v in values {
        v.push_floats(out);
    }
}

/// Inverse of [`pack`]. Returns `None` when `floats` has the wrong length.
pub fn unpack<T: Scalar>(floats: &[f64], count: usize) -> Option<Vec<T>> {
    if floats.len() != count * T::FLOATS {
        return None;
    }
    Some(floats.chunks_exact(T::FLOATS).map(T::read_floats).collect())
}
