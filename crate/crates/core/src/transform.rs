//! Mode-3 transforms `M = c·W` defining the ★M algebras.
//!
//! Every named kind is a nonzero multiple of a unitary matrix. The
//! unnormalized DFT has `c = √n`; DCT, Haar, random orthogonal and the
//! identity have `c = 1`. Explicit matrices may be any invertible matrix;
//! the optimality results only apply to the scaled-unitary ones, which is
//! recorded by [`Transform::is_scaled_unitary`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, qr_q_positive};
use crate::scalar::Scalar;
use crate::tensor::{Domain, Tensor3, Tensor4};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    DftUnnormalized,
    DctOrthogonal,
    HaarOrthogonal,
    RandomOrthogonal,
    Explicit,
}

impl TransformKind {
    /// Parses the short CLI names (`identity`, `dft`, `dct`, `haar`, `randorth`).
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" | "id" => Self::Identity,
            "dft" | "dft_unnormalized" => Self::DftUnnormalized,
            "dct" | "dct_orthogonal" => Self::DctOrthogonal,
            "haar" | "haar_orthogonal" => Self::HaarOrthogonal,
            "randorth" | "random" | "random_orthogonal" => Self::RandomOrthogonal,
            "explicit" => Self::Explicit,
            other => return Err(Error::InvalidTransform(format!("unknown kind {other:?}"))),
        })
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::DftUnnormalized => "dft",
            Self::DctOrthogonal => "dct",
            Self::HaarOrthogonal => "haar",
            Self::RandomOrthogonal => "randorth",
            Self::Explicit => "explicit",
        }
    }

    pub const NAMED: [TransformKind; 5] = [
        Self::Identity,
        Self::DftUnnormalized,
        Self::DctOrthogonal,
        Self::HaarOrthogonal,
        Self::RandomOrthogonal,
    ];
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// An invertible `n × n` transform applied along tube fibers.
#[derive(Clone)]
pub struct Transform<T: Scalar> {
    kind: TransformKind,
    n: usize,
    scale: f64,
    seed: u64,
    matrix: DMatrix<T>,
    inverse: DMatrix<T>,
    scaled_unitary: bool,
    fft: Option<FftPair>,
    id: u64,
}

impl<T: Scalar> fmt::Debug for Transform<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("scale", &self.scale)
            .field("seed", &self.seed)
            .field("fast_path", &self.fft.is_some())
            .finish()
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidTransform("size must be at least 1".into()));
    }
    Ok(())
}

/// Orthonormal DCT-II matrix.
pub fn dct_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |k, j| {
        let alpha = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        alpha * (PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos()
    })
}

/// One full Haar decomposition of `x`: approximation first, then details
/// from coarsest to finest. At odd lengths the last approximation value is
/// carried to the next level unchanged.
fn haar_analysis(x: &[f64]) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = x.to_vec();
    let mut details: Vec<Vec<f64>> = Vec::new();
    while approx.len() > 1 {
        let half = approx.len() / 2;
        let mut next: Vec<f64> = (0..half).map(|i| (approx[2 * i] + approx[2 * i + 1]) * s).collect();
        details.push((0..half).map(|i| (approx[2 * i] - approx[2 * i + 1]) * s).collect());
        if approx.len() % 2 == 1 {
            next.push(approx[approx.len() - 1]);
        }
        approx = next;
    }
    approx.into_iter().chain(details.into_iter().rev().flatten()).collect()
}

/// Orthonormal Haar wavelet matrix (full decomposition). Powers of two give
/// the standard matrix.
pub fn haar_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_size(n)?;
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        for (r, v) in haar_analysis(&e).into_iter().enumerate() {
            h[(r, c)] = v;
        }
        e[c] = 0.0;
    }
    Ok(h)
}

/// Unnormalized DFT matrix `F[j,k] = exp(−2πi·jk/n)`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |j, k| {
        let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
        Complex64::new(ang.cos(), ang.sin())
    })
}

/// Orthogonal factor of the QR factorization of a seeded standard-normal
/// matrix, with `diag(R) ≥ 0`.
pub fn random_orthogonal_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    qr_q_positive(&g)
}

impl Transform<f64> {
    pub fn identity(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self::scaled_unitary(TransformKind::Identity, DMatrix::identity(n, n), 1.0, 0))
    }

    pub fn dct(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self::scaled_unitary(TransformKind::DctOrthogonal, dct_matrix(n), 1.0, 0))
    }

    pub fn haar(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self::scaled_unitary(TransformKind::HaarOrthogonal, haar_matrix(n)?, 1.0, 0))
    }

    pub fn random_orthogonal(n: usize, seed: u64) -> Result<Self> {
        check_size(n)?;
        Ok(Self::scaled_unitary(
            TransformKind::RandomOrthogonal,
            random_orthogonal_matrix(n, seed),
            1.0,
            seed,
        ))
    }

    /// Promotes to a complex transform with the same matrix.
    pub fn to_complex(&self) -> Transform<Complex64> {
        let mut t = Transform {
            kind: self.kind,
            n: self.n,
            scale: self.scale,
            seed: self.seed,
            matrix: self.matrix.map(|x| x.to_c64()),
            inverse: self.inverse.map(|x| x.to_c64()),
            scaled_unitary: self.scaled_unitary,
            fft: None,
            id: 0,
        };
        t.id = t.fingerprint();
        t
    }
}

impl Transform<Complex64> {
    /// Unnormalized DFT (`c = √n`), applied with an FFT.
    pub fn dft(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut t = Self::scaled_unitary(
            TransformKind::DftUnnormalized,
            dft_matrix(n),
            (n as f64).sqrt(),
            0,
        );
        let mut planner = FftPlanner::new();
        t.fft = Some(FftPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        });
        Ok(t)
    }
}

impl<T: Scalar> Transform<T> {
    fn scaled_unitary(kind: TransformKind, matrix: DMatrix<T>, scale: f64, seed: u64) -> Self {
        let inverse = matrix.adjoint().unscale(scale * scale);
        let mut t = Self {
            kind,
            n: matrix.nrows(),
            scale,
            seed,
            matrix,
            inverse,
            scaled_unitary: true,
            fft: None,
            id: 0,
        };
        t.id = t.fingerprint();
        t
    }

    /// Any invertible square matrix. Scaled-unitary matrices are detected
    /// and inverted through their adjoint; others through LU.
    pub fn explicit(matrix: DMatrix<T>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c {
            return Err(Error::InvalidTransform(format!("{r}×{c} matrix is not square")));
        }
        check_size(r)?;
        let gram = matrix.adjoint() * &matrix;
        let c2 = gram.trace().real() / r as f64;
        if !(c2 > 0.0) {
            return Err(Error::InvalidTransform("zero matrix".into()));
        }
        let scaled_identity = DMatrix::<T>::identity(r, r).scale(c2);
        if max_abs_diff(&gram, &scaled_identity) <= UNITARY_TOL * c2 {
            return Ok(Self::scaled_unitary(TransformKind::Explicit, matrix, c2.sqrt(), 0));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidTransform("matrix is singular".into()))?;
        let mut t = Self {
            kind: TransformKind::Explicit,
            n: r,
            scale: c2.sqrt(),
            seed: 0,
            matrix,
            inverse,
            scaled_unitary: false,
            fft: None,
            id: 0,
        };
        t.id = t.fingerprint();
        Ok(t)
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// The `c` in `M = c·W`.
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
    pub fn inverse_matrix(&self) -> &DMatrix<T> {
        &self.inverse
    }
    pub fn is_scaled_unitary(&self) -> bool {
        self.scaled_unitary
    }
    /// Fingerprint of the descriptor, used to tag transform-domain tensors.
    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn has_fast_path(&self) -> bool {
        self.fft.is_some()
    }

    /// The same transform applied by dense matrix products only.
    pub fn dense(&self) -> Self {
        Self {
            fft: None,
            ..self.clone()
        }
    }

    /// The same matrix re-tagged as an explicit transform.
    pub fn to_explicit(&self) -> Self {
        let mut t = Self {
            kind: TransformKind::Explicit,
            seed: 0,
            fft: None,
            ..self.clone()
        };
        t.id = t.fingerprint();
        t
    }

    /// Checks `MᴴM = |c|²·I` within `tol` (relative to `|c|²`).
    pub fn check_scaled_unitary(&self, tol: f64) -> bool {
        let c2 = self.scale * self.scale;
        let gram = self.matrix.adjoint() * &self.matrix;
        max_abs_diff(&gram, &DMatrix::identity(self.n, self.n).scale(c2)) <= tol * c2
    }

    fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        self.encode_descriptor(&mut bytes);
        let digest = Sha256::digest(&bytes);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::TransformMismatch(format!(
                "transform of size {} applied to mode extent {}",
                self.n, n
            )));
        }
        Ok(())
    }

    /// Applies the FFT along contiguous length-`n` runs of `buf`.
    fn apply_fft(&self, data: &mut [T], layout: (usize, usize, usize), inverse: bool) -> bool {
        let Some(fft) = &self.fft else {
            return false;
        };
        let Some(z) = T::as_complex_mut(data) else {
            return false;
        };
        // layout = (left, n, right); tubes are strided by `left`.
        let (left, n, right) = layout;
        let plan = if inverse { &fft.inverse } else { &fft.forward };
        let mut tubes = vec![Complex64::new(0.0, 0.0); left * n];
        for r in 0..right {
            let block = &mut z[r * left * n..(r + 1) * left * n];
            for k in 0..n {
                for i in 0..left {
                    tubes[i * n + k] = block[k * left + i];
                }
            }
            plan.process(&mut tubes);
            let norm = if inverse { 1.0 / n as f64 } else { 1.0 };
            for k in 0..n {
                for i in 0..left {
                    block[k * left + i] = tubes[i * n + k] * norm;
                }
            }
        }
        true
    }

    fn apply(&self, data: &[T], dims: &[usize], mode: usize, inverse: bool) -> Vec<T> {
        let left: usize = dims[..mode].iter().product();
        let right: usize = dims[mode + 1..].iter().product();
        let mut out = data.to_vec();
        if self.apply_fft(&mut out, (left, self.n, right), inverse) {
            return out;
        }
        let mx = if inverse { &self.inverse } else { &self.matrix };
        crate::tensor::mode_product(data, dims, mode, mx)
    }

    /// `Â = A ×₃ M`.
    pub fn forward(&self, a: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check_len(a.n())?;
        let data = self.apply(a.data(), &a.dims(), 2, false);
        Ok(Tensor3::from_vec(a.dims(), data)?.with_domain(Domain::Transform(self.id)))
    }

    /// `A = Â ×₃ M⁻¹`.
    pub fn inverse(&self, a_hat: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check_len(a_hat.n())?;
        if let Domain::Transform(id) = a_hat.domain() {
            if id != self.id {
                return Err(Error::TransformMismatch(
                    "tensor is in the domain of a different transform".into(),
                ));
            }
        }
        let data = self.apply(a_hat.data(), &a_hat.dims(), 2, true);
        Tensor3::from_vec(a_hat.dims(), data)
    }

    /// Applies `M` (or `M⁻¹`) to a single tube.
    pub fn apply_tube(&self, tube: &[T], inverse: bool) -> Vec<T> {
        self.apply(tube, &[1, tube.len(), 1], 1, inverse)
    }

    pub(crate) fn apply_mode4(&self, a: &Tensor4<T>, mode: usize, inverse: bool) -> Result<Tensor4<T>> {
        let dims = a.dims();
        self.check_len(dims[mode])?;
        let data = self.apply(a.data(), &dims, mode, inverse);
        Tensor4::from_vec(dims, data)
    }

    /// Descriptor: kind byte, `n` (u32), seed (u64), scale (f64), then for
    /// explicit transforms the row-major matrix (complex interleaved), all
    /// little-endian.
    pub fn encode_descriptor(&self, out: &mut Vec<u8>) {
        let code: u8 = match self.kind {
            TransformKind::Identity => 0,
            TransformKind::DftUnnormalized => 1,
            TransformKind::DctOrthogonal => 2,
            TransformKind::HaarOrthogonal => 3,
            TransformKind::RandomOrthogonal => 4,
            TransformKind::Explicit if T::IS_COMPLEX => 6,
            TransformKind::Explicit => 5,
        };
        out.push(code);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        if self.kind == TransformKind::Explicit {
            let mut floats = Vec::new();
            for i in 0..self.n {
                for j in 0..self.n {
                    self.matrix[(i, j)].push_floats(&mut floats);
                }
            }
            for f in floats {
                out.extend_from_slice(&f.to_le_bytes());
            }
        }
    }
}

/// Either scalar flavour of [`Transform`]; returned by [`make_transform`].
#[derive(Debug, Clone)]
pub enum AnyTransform {
    Real(Transform<f64>),
    Complex(Transform<Complex64>),
}

/// Builds a named transform of size `n`. The seed only matters for
/// `RandomOrthogonal`.
pub fn make_transform(kind: TransformKind, n: usize, seed: u64) -> Result<AnyTransform> {
    Ok(match kind {
        TransformKind::Identity => AnyTransform::Real(Transform::identity(n)?),
        TransformKind::DftUnnormalized => AnyTransform::Complex(Transform::dft(n)?),
        TransformKind::DctOrthogonal => AnyTransform::Real(Transform::dct(n)?),
        TransformKind::HaarOrthogonal => AnyTransform::Real(Transform::haar(n)?),
        TransformKind::RandomOrthogonal => AnyTransform::Real(Transform::random_orthogonal(n, seed)?),
        TransformKind::Explicit => {
            return Err(Error::InvalidTransform(
                "explicit transforms are built from a matrix".into(),
            ))
        }
    })
}

impl AnyTransform {
    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Real(t) => t.kind(),
            Self::Complex(t) => t.kind(),
        }
    }
    pub fn n(&self) -> usize {
        match self {
            Self::Real(t) => t.n(),
            Self::Complex(t) => t.n(),
        }
    }
    pub fn scale(&self) -> f64 {
        match self {
            Self::Real(t) => t.scale(),
            Self::Complex(t) => t.scale(),
        }
    }
    pub fn seed(&self) -> u64 {
        match self {
            Self::Real(t) => t.seed(),
            Self::Complex(t) => t.seed(),
        }
    }
    pub fn is_complex(&self) -> bool {
        matches!(self, Self::Complex(_))
    }
    pub fn to_complex(&self) -> Transform<Complex64> {
        match self {
            Self::Real(t) => t.to_complex(),
            Self::Complex(t) => t.clone(),
        }
    }
    pub fn encode_descriptor(&self, out: &mut Vec<u8>) {
        match self {
            Self::Real(t) => t.encode_descriptor(out),
            Self::Complex(t) => t.encode_descriptor(out),
        }
    }

    /// Decodes a descriptor written by [`Transform::encode_descriptor`],
    /// returning the transform and the number of bytes consumed.
    pub fn decode_descriptor(bytes: &[u8]) -> Result<(Self, usize)> {
        const HEAD: usize = 1 + 4 + 8 + 8;
        if bytes.len() < HEAD {
            return Err(Error::TruncatedPayload);
        }
        let code = bytes[0];
        let n = u32::from_le_bytes(bytes[1..5].try_into().expect("4 bytes")) as usize;
        let seed = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
        let scale = f64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
        let named = |kind| -> Result<(Self, usize)> {
            let t = make_transform(kind, n, seed)?;
            if (t.scale() - scale).abs() > 1e-12 * scale.abs().max(1.0) {
                return Err(Error::Corrupted("transform scale disagrees with kind".into()));
            }
            Ok((t, HEAD))
        };
        match code {
            0 => named(TransformKind::Identity),
            1 => named(TransformKind::DftUnnormalized),
            2 => named(TransformKind::DctOrthogonal),
            3 => named(TransformKind::HaarOrthogonal),
            4 => named(TransformKind::RandomOrthogonal),
            5 | 6 => {
                let floats_per = if code == 6 { 2 } else { 1 };
                let need = HEAD + n * n * floats_per * 8;
                if bytes.len() < need {
                    return Err(Error::TruncatedPayload);
                }
                let floats: Vec<f64> = bytes[HEAD..need]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect();
                let t = if code == 6 {
                    let mx = DMatrix::from_fn(n, n, |i, j| {
                        let o = 2 * (i * n + j);
                        Complex64::new(floats[o], floats[o + 1])
                    });
                    AnyTransform::Complex(Transform::explicit(mx)?)
                } else {
                    AnyTransform::Real(Transform::explicit(DMatrix::from_fn(n, n, |i, j| {
                        floats[i * n + j]
                    }))?)
                };
                Ok((t, need))
            }
            other => Err(Error::Corrupted(format!("unknown transform code {other}"))),
        }
    }
}

impl From<Transform<f64>> for AnyTransform {
    fn from(t: Transform<f64>) -> Self {
        Self::Real(t)
    }
}

impl From<Transform<Complex64>> for AnyTransform {
    fn from(t: Transform<Complex64>) -> Self {
        Self::Complex(t)
    }
}

/// `Â = A ×₃ M ×₄ B`.
pub fn forward4<T: Scalar>(tm: &Transform<T>, tb: &Transform<T>, a: &Tensor4<T>) -> Result<Tensor4<T>> {
    let x = tm.apply_mode4(a, 2, false)?;
    Ok(tb.apply_mode4(&x, 3, false)?.with_domain(Domain::Transform(tm.id ^ tb.id.rotate_left(1))))
}

/// `A = Â ×₃ M⁻¹ ×₄ B⁻¹`.
pub fn inverse4<T: Scalar>(tm: &Transform<T>, tb: &Transform<T>, a_hat: &Tensor4<T>) -> Result<Tensor4<T>> {
    let x = tb.apply_mode4(a_hat, 3, true)?;
    tm.apply_mode4(&x, 2, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn rand_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn dft2_matrix_and_scale() {
        let t = Transform::dft(2).unwrap();
        let want = dmatrix![1.0, 1.0; 1.0, -1.0].map(|x: f64| x.to_c64());
        assert!(max_abs_diff(t.matrix(), &want) < 1e-15);
        assert!((t.scale() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_kind() {
        let t = Transform::identity(4).unwrap();
        assert_eq!(t.matrix(), &DMatrix::identity(4, 4));
        assert_eq!(t.scale(), 1.0);
        let a = rand_tensor([2, 3, 4], 1);
        assert_eq!(t.forward(&a).unwrap().data(), a.data());
    }

    #[test]
    fn random_orthogonal_is_deterministic() {
        let a = Transform::random_orthogonal(8, 7).unwrap();
        let b = Transform::random_orthogonal(8, 7).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_ne!(a.matrix(), Transform::random_orthogonal(8, 8).unwrap().matrix());
    }

    #[test]
    fn haar_any_length() {
        assert!(Transform::haar(0).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h4 = haar_matrix(4).unwrap();
        let want = nalgebra::dmatrix![
            0.5, 0.5, 0.5, 0.5;
            0.5, 0.5, -0.5, -0.5;
            s, -s, 0.0, 0.0;
            0.0, 0.0, s, -s
        ];
        assert!((h4 - want).norm() < 1e-15);
        for n in 1..=9 {
            let h = haar_matrix(n).unwrap();
            assert!((&h * h.transpose() - DMatrix::<f64>::identity(n, n)).norm() < 1e-13, "n = {n}");
        }
        let h3 = haar_matrix(3).unwrap();
        assert!((h3.row(2) - nalgebra::RowDVector::from_row_slice(&[s, -s, 0.0])).norm() < 1e-15);
        assert!(Transform::dct(0).is_err());
        assert!(make_transform(TransformKind::Identity, 0, 0).is_err());
    }

    #[test]
    fn every_kind_is_scaled_unitary() {
        for kind in TransformKind::NAMED {
            for n in [1, 2, 4, 8] {
                let t = make_transform(kind, n, 3).unwrap();
                let ok = match &t {
                    AnyTransform::Real(t) => t.check_scaled_unitary(1e-10),
                    AnyTransform::Complex(t) => t.check_scaled_unitary(1e-10),
                };
                assert!(ok, "{kind} n={n}");
            }
        }
    }

    #[test]
    fn example_under_dft() {
        let a = Tensor3::from_faces(&[dmatrix![1.0, 1.0; 1.0, 4.0], dmatrix![0.0, 0.0; 0.0, -3.0]])
            .unwrap()
            .to_complex();
        let t = Transform::dft(2).unwrap();
        let hat = t.forward(&a).unwrap();
        assert!(max_abs_diff(&hat.face(0), &dmatrix![1.0, 1.0; 1.0, 1.0].map(|x: f64| x.to_c64())) < 1e-14);
        assert!(max_abs_diff(&hat.face(1), &dmatrix![1.0, 1.0; 1.0, 7.0].map(|x: f64| x.to_c64())) < 1e-14);
    }

    #[test]
    fn norm_scales_by_c_and_round_trips() {
        let a = rand_tensor([3, 4, 8], 2);
        for kind in TransformKind::NAMED {
            match make_transform(kind, 8, 5).unwrap() {
                AnyTransform::Real(t) => {
                    let hat = t.forward(&a).unwrap();
                    let ratio = hat.frobenius_norm() / a.frobenius_norm();
                    assert!((ratio - t.scale()).abs() < 1e-10 * t.scale());
                    let back = t.inverse(&hat).unwrap();
                    assert!(back.distance(&a).unwrap() < 1e-12 * a.frobenius_norm());
                }
                AnyTransform::Complex(t) => {
                    let ac = a.to_complex();
                    let hat = t.forward(&ac).unwrap();
                    let ratio = hat.frobenius_norm() / a.frobenius_norm();
                    assert!((ratio - 8f64.sqrt()).abs() < 1e-10 * ratio);
                    let back = t.inverse(&hat).unwrap();
                    assert!(back.distance(&ac).unwrap() < 1e-12 * a.frobenius_norm());
                }
            }
        }
    }

    #[test]
    fn fft_path_matches_dense() {
        for n in [1, 2, 3, 5, 8, 12] {
            let a = rand_tensor([3, 2, n], n as u64).to_complex();
            let fast = Transform::dft(n).unwrap();
            assert!(fast.has_fast_path());
            let dense = fast.dense();
            let x = fast.forward(&a).unwrap();
            let y = dense.forward(&a).unwrap();
            assert!(x.distance(&y).unwrap() <= 1e-10 * y.frobenius_norm());
            let xi = fast.inverse(&x).unwrap();
            let yi = dense.inverse(&y).unwrap();
            assert!(xi.distance(&yi).unwrap() <= 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn inverse_rejects_foreign_domain() {
        let a = rand_tensor([2, 2, 4], 9);
        let t1 = Transform::dct(4).unwrap();
        let t2 = Transform::haar(4).unwrap();
        let hat = t1.forward(&a).unwrap();
        assert!(matches!(t2.inverse(&hat), Err(Error::TransformMismatch(_))));
        assert!(t1.forward(&rand_tensor([2, 2, 3], 1)).is_err());
    }

    #[test]
    fn explicit_transforms() {
        let q = random_orthogonal_matrix(4, 1).scale(3.0);
        let t = Transform::explicit(q).unwrap();
        assert!(t.is_scaled_unitary());
        assert!((t.scale() - 3.0).abs() < 1e-12);

        let mx = dmatrix![2.0, 1.0; 0.0, 1.0];
        let t = Transform::explicit(mx.clone()).unwrap();
        assert!(!t.is_scaled_unitary());
        assert!(max_abs_diff(&(t.inverse_matrix() * &mx), &DMatrix::identity(2, 2)) < 1e-14);
        assert!(Transform::explicit(dmatrix![1.0, 2.0; 2.0, 4.0]).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let kinds = [
            make_transform(TransformKind::RandomOrthogonal, 6, 42).unwrap(),
            make_transform(TransformKind::DftUnnormalized, 5, 0).unwrap(),
            make_transform(TransformKind::HaarOrthogonal, 4, 0).unwrap(),
            AnyTransform::Real(Transform::explicit(dmatrix![2.0, 1.0; 0.0, 1.0]).unwrap()),
            AnyTransform::Complex(Transform::dft(3).unwrap().dense().to_explicit()),
        ];
        for t in kinds {
            let mut bytes = Vec::new();
            t.encode_descriptor(&mut bytes);
            let (back, used) = AnyTransform::decode_descriptor(&bytes).unwrap();
            assert_eq!(used, bytes.len());
            assert_eq!(back.kind(), t.kind());
            let mut again = Vec::new();
            back.encode_descriptor(&mut again);
            assert_eq!(again, bytes);
        }
        assert!(matches!(
            AnyTransform::decode_descriptor(&[1, 0, 0]),
            Err(Error::TruncatedPayload)
        ));
    }

    #[test]
    fn fourth_order_forward_orders_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = Tensor4::from_fn([2, 3, 4, 2], |_, _, _, _| StandardNormal.sample(&mut rng));
        let tm = Transform::dct(4).unwrap();
        let tb = Transform::random_orthogonal(2, 1).unwrap();
        let x = forward4(&tm, &tb, &a).unwrap();
        let y = a
            .mode_multiply(4, tb.matrix())
            .unwrap()
            .mode_multiply(3, tm.matrix())
            .unwrap();
        assert!(x.distance(&y).unwrap() < 1e-12 * y.frobenius_norm());
        let back = inverse4(&tm, &tb, &x).unwrap();
        assert!(back.distance(&a).unwrap() < 1e-12 * a.frobenius_norm());

        let id = Transform::identity(4).unwrap();
        let id2 = Transform::identity(2).unwrap();
        assert_eq!(forward4(&id, &id2, &a).unwrap().data(), a.data());
    }
}
