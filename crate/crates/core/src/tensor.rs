//! Dense third- and fourth-order tensors.
//!
//! Scalars are stored column-major: index `i` (mode 1) varies fastest, then
//! `j`, then `k` (then `l` for fourth order). All indices in this crate are
//! zero-based.

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which domain the scalars of a tensor live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Domain {
    #[default]
    Spatial,
    /// Transform domain of the transform with the given fingerprint.
    Transform(u64),
}

/// A dense `m × p × n` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T = f64> {
    dims: [usize; 3],
    data: Vec<T>,
    domain: Domain,
}

/// A dense `m × p × n × q` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T = f64> {
    dims: [usize; 4],
    data: Vec<T>,
    domain: Domain,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "all extents must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

/// Mode-`mode` product on a raw column-major buffer: contracts the extent
/// `dims[mode]` against the columns of `mx`.
pub(crate) fn mode_product<T: Scalar>(
    data: &[T],
    dims: &[usize],
    mode: usize,
    mx: &DMatrix<T>,
) -> Vec<T> {
    let left: usize = dims[..mode].iter().product();
    let d = dims[mode];
    let right: usize = dims[mode + 1..].iter().product();
    let nd = mx.nrows();
    debug_assert_eq!(mx.ncols(), d);

    if left == 1 {
        let x = DMatrixView::from_slice(data, d, right);
        return (mx * x).as_slice().to_vec();
    }
    let mt = mx.transpose();
    let mut out = Vec::with_capacity(left * nd * right);
    for r in 0..right {
        let block = &data[r * left * d..(r + 1) * left * d];
        let x = DMatrixView::from_slice(block, left, d);
        out.extend_from_slice((x * &mt).as_slice());
    }
    out
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(m: usize, p: usize, n: usize) -> Self {
        Self {
            dims: [m, p, n],
            data: vec![T::zero(); m * p * n],
            domain: Domain::Spatial,
        }
    }

    /// Builds a tensor from column-major scalars.
    pub fn from_vec(dims: [usize; 3], data: Vec<T>) -> Result<Self> {
        check_dims(&dims)?;
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "{} scalars for dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self {
            dims,
            data,
            domain: Domain::Spatial,
        })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let [m, p, n] = dims;
        let mut data = Vec::with_capacity(m * p * n);
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims,
            data,
            domain: Domain::Spatial,
        }
    }

    /// Stacks `m × p` frontal faces into an `m × p × n` tensor.
    pub fn from_faces(faces: &[DMatrix<T>]) -> Result<Self> {
        let first = faces
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no faces".into()))?;
        let (m, p) = first.shape();
        let mut data = Vec::with_capacity(m * p * faces.len());
        for f in faces {
            if f.shape() != (m, p) {
                return Err(Error::DimensionMismatch(format!(
                    "face of shape {:?}, expected {:?}",
                    f.shape(),
                    (m, p)
                )));
            }
            data.extend_from_slice(f.as_slice());
        }
        Self::from_vec([m, p, faces.len()], data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn m(&self) -> usize {
        self.dims[0]
    }
    pub fn p(&self) -> usize {
        self.dims[1]
    }
    pub fn n(&self) -> usize {
        self.dims[2]
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub(crate) fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    /// Frontal face `k` as an `m × p` matrix.
    pub fn face(&self, k: usize) -> DMatrix<T> {
        let mp = self.dims[0] * self.dims[1];
        DMatrix::from_column_slice(self.dims[0], self.dims[1], &self.data[k * mp..(k + 1) * mp])
    }

    pub fn faces(&self) -> Vec<DMatrix<T>> {
        (0..self.n()).map(|k| self.face(k)).collect()
    }

    pub fn set_face(&mut self, k: usize, face: &DMatrix<T>) -> Result<()> {
        if face.shape() != (self.dims[0], self.dims[1]) {
            return Err(Error::DimensionMismatch(format!(
                "face {:?} into tensor {:?}",
                face.shape(),
                self.dims
            )));
        }
        let mp = self.dims[0] * self.dims[1];
        self.data[k * mp..(k + 1) * mp].copy_from_slice(face.as_slice());
        Ok(())
    }

    /// The tube fiber `A[i, j, :]`.
    pub fn tube(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.n()).map(|k| self.get(i, j, k)).collect()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x.modulus_squared()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Mode-`mode` unfolding (`mode` in 1..=3).
    ///
    /// * mode 1: `m × pn`, `[A₁, …, Aₙ]`
    /// * mode 2: `p × mn`, `[A₁ᵀ, …, Aₙᵀ]`
    /// * mode 3: `n × mp`, columns indexed by `i + m·j`
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<T>> {
        let [m, p, n] = self.dims;
        match mode {
            1 => Ok(DMatrix::from_column_slice(m, p * n, &self.data)),
            2 => Ok(DMatrix::from_fn(p, m * n, |j, c| self.get(c % m, j, c / m))),
            3 => Ok(DMatrix::from_column_slice(m * p, n, &self.data).transpose()),
            _ => Err(Error::InvalidMode(mode)),
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(mx: &DMatrix<T>, mode: usize, dims: [usize; 3]) -> Result<Self> {
        check_dims(&dims)?;
        let [m, p, n] = dims;
        let expected = match mode {
            1 => (m, p * n),
            2 => (p, m * n),
            3 => (n, m * p),
            _ => return Err(Error::InvalidMode(mode)),
        };
        if mx.shape() != expected {
            return Err(Error::DimensionMismatch(format!(
                "matrix {:?} cannot fold at mode {} into {:?}",
                mx.shape(),
                mode,
                dims
            )));
        }
        Ok(match mode {
            1 => Self::from_vec(dims, mx.as_slice().to_vec())?,
            2 => Self::from_fn(dims, |i, j, k| mx[(j, i + m * k)]),
            _ => Self::from_vec(dims, mx.transpose().as_slice().to_vec())?,
        })
    }

    /// `X` (`m × n`) to the lateral slice `m × 1 × n`.
    pub fn twist(mx: &DMatrix<T>) -> Self {
        let (m, n) = mx.shape();
        Self::from_fn([m, 1, n], |i, _, k| mx[(i, k)])
    }

    /// Lateral slice `m × 1 × n` to the matrix `m × n`.
    pub fn squeeze(&self) -> Result<DMatrix<T>> {
        if self.dims[1] != 1 {
            return Err(Error::DimensionMismatch(format!(
                "squeeze needs p = 1, got dims {:?}",
                self.dims
            )));
        }
        Ok(DMatrix::from_column_slice(self.dims[0], self.dims[2], &self.data))
    }

    /// `permute(A, [3, 2, 1])`: transposes every lateral slice, giving `n × p × m`.
    pub fn permute_321(&self) -> Self {
        let [m, p, n] = self.dims;
        Self::from_fn([n, p, m], |k, j, i| self.get(i, j, k))
    }

    /// `A ×_mode Mx` (`mode` in 1..=3).
    pub fn mode_multiply(&self, mode: usize, mx: &DMatrix<T>) -> Result<Self> {
        if !(1..=3).contains(&mode) {
            return Err(Error::InvalidMode(mode));
        }
        let d = self.dims[mode - 1];
        if mx.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix against mode-{} extent {}",
                mx.nrows(),
                mx.ncols(),
                mode,
                d
            )));
        }
        let mut dims = self.dims;
        dims[mode - 1] = mx.nrows();
        check_dims(&dims)?;
        Ok(Self {
            dims,
            data: mode_product(&self.data, &self.dims, mode - 1, mx),
            domain: self.domain,
        })
    }

    /// Lateral slices `range` as a new `m × |range| × n` tensor.
    pub fn lateral_range(&self, range: std::ops::Range<usize>) -> Self {
        let [m, _, n] = self.dims;
        let lo = range.start;
        Self::from_fn([m, range.len(), n], |i, j, k| self.get(i, lo + j, k)).with_domain(self.domain)
    }

    /// Horizontal slices `range` as a new `|range| × p × n` tensor.
    pub fn horizontal_range(&self, range: std::ops::Range<usize>) -> Self {
        let [_, p, n] = self.dims;
        let lo = range.start;
        Self::from_fn([range.len(), p, n], |i, j, k| self.get(lo + i, j, k)).with_domain(self.domain)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor3<U> {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
            domain: self.domain,
        }
    }

    pub fn to_complex(&self) -> Tensor3<Complex64> {
        self.map(|x| x.to_c64())
    }

    /// Real parts of the scalars.
    pub fn real_part(&self) -> Tensor3<f64> {
        self.map(|x| x.to_c64().re)
    }

    /// Largest imaginary magnitude; zero for real tensors.
    pub fn max_imag(&self) -> f64 {
        if !T::IS_COMPLEX {
            return 0.0;
        }
        self.data
            .iter()
            .map(|x| x.to_c64().im.abs())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            domain: self.domain,
        })
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![T::zero(); dims.iter().product()],
            domain: Domain::Spatial,
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        check_dims(&dims)?;
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "{} scalars for dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self {
            dims,
            data,
            domain: Domain::Spatial,
        })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let [m, p, n, q] = dims;
        let mut data = Vec::with_capacity(m * p * n * q);
        for l in 0..q {
            for k in 0..n {
                for j in 0..p {
                    for i in 0..m {
                        data.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self {
            dims,
            data,
            domain: Domain::Spatial,
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub(crate) fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let [m, p, n, _] = self.dims;
        i + m * (j + p * (k + n * l))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[self.offset(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        let o = self.offset(i, j, k, l);
        self.data[o] = v;
    }

    /// The `m × p` face at `(k, l)`.
    pub fn face(&self, k: usize, l: usize) -> DMatrix<T> {
        let [m, p, n, _] = self.dims;
        let start = (k + n * l) * m * p;
        DMatrix::from_column_slice(m, p, &self.data[start..start + m * p])
    }

    pub fn set_face(&mut self, k: usize, l: usize, face: &DMatrix<T>) {
        let [m, p, n, _] = self.dims;
        let start = (k + n * l) * m * p;
        self.data[start..start + m * p].copy_from_slice(face.as_slice());
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x.modulus_squared()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// `A ×_mode Mx` (`mode` in 1..=4).
    pub fn mode_multiply(&self, mode: usize, mx: &DMatrix<T>) -> Result<Self> {
        if !(1..=4).contains(&mode) {
            return Err(Error::InvalidMode(mode));
        }
        let d = self.dims[mode - 1];
        if mx.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix against mode-{} extent {}",
                mx.nrows(),
                mx.ncols(),
                mode,
                d
            )));
        }
        let mut dims = self.dims;
        dims[mode - 1] = mx.nrows();
        check_dims(&dims)?;
        Ok(Self {
            dims,
            data: mode_product(&self.data, &self.dims, mode - 1, mx),
            domain: self.domain,
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor4<U> {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
            domain: self.domain,
        }
    }

    pub fn to_complex(&self) -> Tensor4<Complex64> {
        self.map(|x| x.to_c64())
    }

    pub fn real_part(&self) -> Tensor4<f64> {
        self.map(|x| x.to_c64().re)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).modulus_squared())
            .sum::<f64>()
            .sqrt())
    }

    /// Drops a trivial (`q = 1`) fourth mode.
    pub fn squeeze_last(&self) -> Result<Tensor3<T>> {
        let [m, p, n, q] = self.dims;
        if q != 1 {
            return Err(Error::DimensionMismatch(format!("q = {q}, expected 1")));
        }
        Tensor3::from_vec([m, p, n], self.data.clone())
    }

    /// Lifts a third-order tensor to `m × p × n × 1`.
    pub fn from_tensor3(a: &Tensor3<T>) -> Self {
        let [m, p, n] = a.dims();
        Self {
            dims: [m, p, n, 1],
            data: a.data().to_vec(),
            domain: Domain::Spatial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn example() -> Tensor3 {
        Tensor3::from_faces(&[dmatrix![1.0, 1.0; 1.0, 4.0], dmatrix![0.0, 0.0; 0.0, -3.0]]).unwrap()
    }

    fn lcg_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut s = seed;
        Tensor3::from_fn(dims, |_, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn norm_examples() {
        assert_eq!(Tensor3::<f64>::zeros(2, 2, 2).frobenius_norm(), 0.0);
        // direct summation: 1 + 1 + 1 + 16 + 9 = 28
        assert!((example().frobenius_norm() - 28f64.sqrt()).abs() < 1e-14);
        let ones = Tensor3::from_fn([3, 4, 5], |_, _, _| 1.0);
        assert!((ones.frobenius_norm() - 60f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn mode1_unfold_of_example() {
        let u = example().unfold(1).unwrap();
        assert_eq!(u, dmatrix![1.0, 1.0, 0.0, 0.0; 1.0, 4.0, 0.0, -3.0]);
        let back = Tensor3::fold(&u, 1, [2, 2, 2]).unwrap();
        assert_eq!(back, example());
    }

    #[test]
    fn unfold_index_walk() {
        let a = lcg_tensor([3, 4, 2], 3);
        let u2 = a.unfold(2).unwrap();
        let u3 = a.unfold(3).unwrap();
        assert_eq!(u2.shape(), (4, 6));
        assert_eq!(u3.shape(), (2, 12));
        for k in 0..2 {
            for j in 0..4 {
                for i in 0..3 {
                    assert_eq!(u2[(j, i + 3 * k)], a.get(i, j, k));
                    assert_eq!(u3[(k, i + 3 * j)], a.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn tube_unfolds_to_column() {
        let a = Tensor3::from_vec([1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.unfold(3).unwrap(), dmatrix![1.0; 2.0; 3.0; 4.0]);
    }

    #[test]
    fn fold_rejects_mismatch() {
        let mx = DMatrix::<f64>::zeros(3, 5);
        assert!(matches!(
            Tensor3::fold(&mx, 1, [2, 2, 2]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            example().unfold(4),
            Err(Error::InvalidMode(4))
        ));
    }

    #[test]
    fn fold_unfold_identity_many() {
        for seed in 0..100 {
            let a = lcg_tensor([3, 4, 2], seed);
            for mode in 1..=3 {
                let back = Tensor3::fold(&a.unfold(mode).unwrap(), mode, a.dims()).unwrap();
                assert_eq!(back, a);
            }
        }
    }

    #[test]
    fn twist_squeeze() {
        let t = Tensor3::twist(&DMatrix::<f64>::identity(2, 2));
        assert_eq!(t.dims(), [2, 1, 2]);
        assert_eq!(t.tube(0, 0), vec![1.0, 0.0]);
        assert_eq!(t.tube(1, 0), vec![0.0, 1.0]);

        let x = DMatrix::from_fn(5, 7, |i, j| (i * 7 + j) as f64 * 0.3 - 1.0);
        assert_eq!(Tensor3::twist(&x).squeeze().unwrap(), x);
        assert!(Tensor3::<f64>::zeros(3, 2, 4).squeeze().is_err());
    }

    #[test]
    fn permute_321_properties() {
        let one = Tensor3::from_vec([1, 1, 1], vec![2.5]).unwrap();
        assert_eq!(one.permute_321(), one);
        let a = lcg_tensor([4, 3, 5], 11);
        let ap = a.permute_321();
        assert_eq!(ap.dims(), [5, 3, 4]);
        assert_eq!(ap.permute_321(), a);
        assert!((ap.frobenius_norm() - a.frobenius_norm()).abs() < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn permute_unfolding_is_row_permutation() {
        // Rows of the lateral-slice matrix arrangement (column j = vec of the
        // squeezed slice j) get permuted by a stride permutation.
        let a = lcg_tensor([3, 2, 4], 5);
        let ap = a.permute_321();
        let [m, p, n] = a.dims();
        let mat = DMatrix::from_fn(m * n, p, |r, j| a.get(r % m, j, r / m));
        let matp = DMatrix::from_fn(n * m, p, |r, j| ap.get(r % n, j, r / n));
        for r in 0..m * n {
            let (i, k) = (r % m, r / m);
            let rp = k + n * i;
            for j in 0..p {
                assert_eq!(matp[(rp, j)], mat[(r, j)]);
            }
        }
    }

    #[test]
    fn mode3_by_dft2_on_example() {
        let f = dmatrix![1.0, 1.0; 1.0, -1.0];
        let hat = example().mode_multiply(3, &f).unwrap();
        assert_eq!(hat.face(0), dmatrix![1.0, 1.0; 1.0, 1.0]);
        assert_eq!(hat.face(1), dmatrix![1.0, 1.0; 1.0, 7.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(example().mode_multiply(3, &id).unwrap(), example());
        assert!(example().mode_multiply(3, &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn mode_multiply_matches_unfold_fold() {
        let a = lcg_tensor([3, 4, 5], 8);
        for mode in 1..=3 {
            let d = a.dims()[mode - 1];
            let mx = DMatrix::from_fn(2, d, |i, j| (i as f64 + 1.0) * 0.5 - j as f64 * 0.25);
            let got = a.mode_multiply(mode, &mx).unwrap();
            let mut dims = a.dims();
            dims[mode - 1] = 2;
            let want = Tensor3::fold(&(&mx * a.unfold(mode).unwrap()), mode, dims).unwrap();
            assert!(got.distance(&want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn mode_multiply_inverse_round_trip() {
        let a = lcg_tensor([3, 4, 5], 21);
        let mx = DMatrix::from_fn(5, 5, |i, j| if i == j { 2.0 } else { 0.1 * (i + 2 * j) as f64 });
        let inv = mx.clone().try_inverse().unwrap();
        let back = a.mode_multiply(3, &mx).unwrap().mode_multiply(3, &inv).unwrap();
        assert!(back.distance(&a).unwrap() <= 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn fourth_order_modes_commute() {
        let mut s = 1u64;
        let a = Tensor4::from_fn([2, 3, 4, 2], |_, _, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            (s >> 40) as f64 / 1e6
        });
        let m = DMatrix::from_fn(4, 4, |i, j| ((i * 3 + j) % 5) as f64 - 2.0);
        let b = DMatrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        let x = a.mode_multiply(3, &m).unwrap().mode_multiply(4, &b).unwrap();
        let y = a.mode_multiply(4, &b).unwrap().mode_multiply(3, &m).unwrap();
        assert!(x.distance(&y).unwrap() < 1e-12 * x.frobenius_norm());
        // index oracle for the mode-4 product
        for l in 0..2 {
            for k in 0..4 {
                let want: f64 = (0..2).map(|t| b[(l, t)] * a.get(1, 2, k, t)).sum();
                let got = a.mode_multiply(4, &b).unwrap().get(1, 2, k, l);
                assert!((want - got).abs() < 1e-12);
            }
        }
    }
}
