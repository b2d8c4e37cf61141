//! Comparison targets: truncated matrix SVD, HOSVD / truncated HOSVD, the
//! truncated HOSVD written as a ★M product, and CP export of multi-rank
//! truncations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{full_left_basis, svd};
use crate::mprod::{mprod_chain, replicated_faces};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::tsvd::{check_gamma, TSvdmIIRep};

/// How a third-order tensor is flattened into a matrix whose columns are
/// slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixOrientation {
    /// Column `j` is `vec(squeeze(A[:, j, :]))`: an `mn × p` matrix.
    #[default]
    Lateral,
    /// Column `i` is `vec(A[i, :, :])`: a `pn × m` matrix.
    Horizontal,
}

impl MatrixOrientation {
    pub fn to_matrix<T: Scalar>(self, a: &Tensor3<T>) -> DMatrix<T> {
        match self {
            Self::Lateral => a.unfold(2).expect("mode 2").transpose(),
            Self::Horizontal => {
                let [m, p, n] = a.dims();
                DMatrix::from_fn(p * n, m, |r, i| a.get(i, r % p, r / p))
            }
        }
    }

    pub fn from_matrix<T: Scalar>(self, mx: &DMatrix<T>, dims: [usize; 3]) -> Result<Tensor3<T>> {
        match self {
            Self::Lateral => Tensor3::fold(&mx.transpose(), 2, dims),
            Self::Horizontal => {
                let [m, p, n] = dims;
                if mx.shape() != (p * n, m) {
                    return Err(Error::DimensionMismatch(format!("{:?} for dims {dims:?}", mx.shape())));
                }
                Ok(Tensor3::from_fn(dims, |i, j, k| mx[(j + p * k, i)]))
            }
        }
    }
}

/// Target for a truncated matrix SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSpec {
    Rank(usize),
    /// Smallest rank whose retained energy share is at least `γ`.
    Energy(f64),
}

/// Best rank-`k` approximation of the slice matrix, `U_k · C` with
/// `C = S_k V_kᴴ`.
#[derive(Debug, Clone)]
pub struct MatrixSvdRep<T: Scalar> {
    pub basis: DMatrix<T>,
    pub coeffs: DMatrix<T>,
    pub dims: [usize; 3],
    pub orientation: MatrixOrientation,
    /// All singular values of the slice matrix.
    pub sigma: Vec<f64>,
}

pub fn matrix_truncated_svd<T: Scalar>(
    a: &Tensor3<T>,
    orientation: MatrixOrientation,
    spec: RankSpec,
) -> Result<MatrixSvdRep<T>> {
    let mx = orientation.to_matrix(a);
    let s = svd(&mx);
    let kmax = s.sigma.len();
    let k = match spec {
        RankSpec::Rank(k) => {
            if k == 0 || k > kmax {
                return Err(Error::OutOfRange(format!("rank {k} (valid 1..={kmax})")));
            }
            k
        }
        RankSpec::Energy(gamma) => {
            check_gamma(gamma)?;
            let total: f64 = s.sigma.iter().map(|x| x * x).sum();
            let mut cum = 0.0;
            let mut k = kmax;
            for (j, x) in s.sigma.iter().enumerate() {
                cum += x * x;
                if total <= 0.0 || cum / total >= gamma {
                    k = j + 1;
                    break;
                }
            }
            k
        }
    };
    let basis = s.u.columns(0, k).into_owned();
    let mut coeffs = s.v.columns(0, k).adjoint();
    for (j, &x) in s.sigma[..k].iter().enumerate() {
        for c in coeffs.row_mut(j).iter_mut() {
            *c *= T::from_real(x);
        }
    }
    Ok(MatrixSvdRep {
        basis,
        coeffs,
        dims: a.dims(),
        orientation,
        sigma: s.sigma,
    })
}

impl<T: Scalar> MatrixSvdRep<T> {
    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// `k(rows + cols)` scalars.
    pub fn storage_scalars(&self) -> usize {
        self.k() * (self.basis.nrows() + self.coeffs.ncols())
    }

    /// Squared error from the discarded singular values.
    pub fn predicted_error_sq(&self) -> f64 {
        self.sigma[self.k()..].iter().map(|x| x * x).sum()
    }

    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        self.orientation.from_matrix(&(&self.basis * &self.coeffs), self.dims)
    }
}

/// How the HOSVD truncation triple is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HosvdTruncation {
    Triple([usize; 3]),
    /// `(m, k₂, n)`: compress the second mode only.
    Mode2(usize),
    /// `(⌊k₂·m/n⌋, k₂, k₂)`: keeps mode-wise compression ratios close when
    /// modes 1 and 3 are similar in size.
    Balanced(usize),
    /// `⌊f·dim⌋` per mode, at least 1.
    Proportional(f64),
}

impl HosvdTruncation {
    pub fn resolve(self, dims: [usize; 3]) -> Result<[usize; 3]> {
        let [m, _, n] = dims;
        let triple = match self {
            Self::Triple(t) => t,
            Self::Mode2(k2) => [m, k2, n],
            Self::Balanced(k2) => [((k2 * m) / n).max(1), k2, k2],
            Self::Proportional(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::OutOfRange(format!("proportion {f}")));
                }
                dims.map(|d| ((f * d as f64).floor() as usize).clamp(1, d))
            }
        };
        for (d, (&k, &e)) in triple.iter().zip(&dims).enumerate() {
            if k == 0 || k > e {
                return Err(Error::OutOfRange(format!("mode-{} rank {k} (extent {e})", d + 1)));
            }
        }
        Ok(triple)
    }
}

/// `A ≈ C ×₁ Q ×₂ W ×₃ Z` with orthonormal factor columns.
#[derive(Debug, Clone)]
pub struct HosvdRep<T: Scalar> {
    pub core: Tensor3<T>,
    pub q: DMatrix<T>,
    pub w: DMatrix<T>,
    pub z: DMatrix<T>,
    pub dims: [usize; 3],
}

/// Full square factors of the three unfoldings, leading columns first.
fn hosvd_factors<T: Scalar>(a: &Tensor3<T>) -> [DMatrix<T>; 3] {
    let (f1, (f2, f3)) = rayon::join(
        || full_left_basis(&a.unfold(1).expect("mode 1")).0,
        || {
            rayon::join(
                || full_left_basis(&a.unfold(2).expect("mode 2")).0,
                || full_left_basis(&a.unfold(3).expect("mode 3")).0,
            )
        },
    );
    [f1, f2, f3]
}

fn project<T: Scalar>(a: &Tensor3<T>, q: &DMatrix<T>, w: &DMatrix<T>, z: &DMatrix<T>) -> Result<Tensor3<T>> {
    a.mode_multiply(1, &q.adjoint())?
        .mode_multiply(2, &w.adjoint())?
        .mode_multiply(3, &z.adjoint())
}

/// Untruncated HOSVD.
pub fn hosvd<T: Scalar>(a: &Tensor3<T>) -> Result<HosvdRep<T>> {
    tr_hosvd(a, a.dims())
}

/// HOSVD truncated to `(k₁, k₂, k₃)`.
pub fn tr_hosvd<T: Scalar>(a: &Tensor3<T>, triple: [usize; 3]) -> Result<HosvdRep<T>> {
    let triple = HosvdTruncation::Triple(triple).resolve(a.dims())?;
    let [q, w, z] = hosvd_factors(a);
    let q = q.columns(0, triple[0]).into_owned();
    let w = w.columns(0, triple[1]).into_owned();
    let z = z.columns(0, triple[2]).into_owned();
    let core = project(a, &q, &w, &z)?;
    Ok(HosvdRep { core, q, w, z, dims: a.dims() })
}

impl<T: Scalar> HosvdRep<T> {
    pub fn triple(&self) -> [usize; 3] {
        self.core.dims()
    }

    /// `k₁k₂k₃ + mk₁ + pk₂ + nk₃` scalars.
    pub fn storage_scalars(&self) -> usize {
        let [k1, k2, k3] = self.triple();
        let [m, p, n] = self.dims;
        k1 * k2 * k3 + m * k1 + p * k2 + n * k3
    }

    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        self.core
            .mode_multiply(1, &self.q)?
            .mode_multiply(2, &self.w)?
            .mode_multiply(3, &self.z)
    }
}

/// The truncated HOSVD evaluated as `Q ★M C ★M Wᴴ ★M P` with `M = Zᴴ`,
/// where `Q`, `W` have every transform-domain face equal to the HOSVD
/// factors and `P` masks transform-domain faces at index `k₃` and beyond.
pub fn hosvd_as_mprod<T: Scalar>(a: &Tensor3<T>, triple: [usize; 3]) -> Result<Tensor3<T>> {
    let [k1, k2, k3] = HosvdTruncation::Triple(triple).resolve(a.dims())?;
    let [m, p, n] = a.dims();
    let [q, w, z] = hosvd_factors(a);
    let t = hosvd_transform(&z)?;
    let spatial = |faces: Tensor3<T>| t.inverse(&faces);

    let q_t = spatial(replicated_faces(&q, n)?)?;
    let qh_t = spatial(replicated_faces(&q.adjoint(), n)?)?;
    let w_t = spatial(replicated_faces(&w, n)?)?;
    let wh_t = spatial(replicated_faces(&w.adjoint(), n)?)?;
    let c = mprod_chain(&[&qh_t, a, &w_t], &t)?;
    let c = c.horizontal_range(0..k1).lateral_range(0..k2);
    let q_k = q_t.lateral_range(0..k1);
    let wh_k = wh_t.horizontal_range(0..k2);
    let mask: Vec<DMatrix<T>> = (0..n)
        .map(|i| if i < k3 { DMatrix::identity(p, p) } else { DMatrix::zeros(p, p) })
        .collect();
    let p_t = spatial(Tensor3::from_faces(&mask)?)?;
    let out = mprod_chain(&[&q_k, &c, &wh_k, &p_t], &t)?;
    debug_assert_eq!(out.dims(), [m, p, n]);
    Ok(out)
}

/// The transform `M = Zᴴ` built from the full mode-3 HOSVD factor.
pub fn hosvd_transform<T: Scalar>(z: &DMatrix<T>) -> Result<Transform<T>> {
    Transform::explicit(z.adjoint())
}

/// The mode-3 HOSVD factor `Z` (`n × n`) of `a`.
pub fn hosvd_mode3_factor<T: Scalar>(a: &Tensor3<T>) -> DMatrix<T> {
    full_left_basis(&a.unfold(3).expect("mode 3")).0
}

/// `Σ_r λ_r · Ũ[:, r] ∘ Ṽ[:, r] ∘ W̃[:, r]` with unit-length factor columns
/// and `λ` nonincreasing.
#[derive(Debug, Clone)]
pub struct CpRep<T: Scalar> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    pub w: DMatrix<T>,
    pub lambda: Vec<f64>,
    /// Column of `M⁻¹` behind each term.
    pub face_index: Vec<usize>,
    pub dims: [usize; 3],
}

/// Reads a multi-rank truncation as a CP decomposition: each kept triplet
/// on face `i` becomes one rank-one term whose third factor is column `i`
/// of `M⁻¹`.
pub fn to_cp<T: Scalar>(rep: &TSvdmIIRep<T>) -> CpRep<T> {
    let [m, p, n] = rep.dims();
    let minv = rep.transform().inverse_matrix();
    let mut terms: Vec<(f64, usize, Vec<T>, Vec<T>, Vec<T>)> = Vec::new();
    for i in 0..n {
        let col = minv.column(i);
        let cnorm = col.norm();
        let w: Vec<T> = col.iter().map(|&x| x.unscale(cnorm)).collect();
        let u_f = &rep.u_faces()[i];
        let g_f = &rep.g_faces()[i];
        for j in 0..u_f.ncols() {
            let row = g_f.row(j);
            let sigma = row.norm();
            if sigma == 0.0 {
                continue;
            }
            // Ĝ row j = σ v̂ᴴ, so Ṽ = conj(v̂) = row / σ.
            let v: Vec<T> = row.iter().map(|&x| x.unscale(sigma)).collect();
            let u: Vec<T> = u_f.column(j).iter().copied().collect();
            terms.push((sigma * cnorm, i, u, v, w.clone()));
        }
    }
    terms.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let r = terms.len();
    let mut cp = CpRep {
        u: DMatrix::zeros(m, r),
        v: DMatrix::zeros(p, r),
        w: DMatrix::zeros(n, r),
        lambda: Vec::with_capacity(r),
        face_index: Vec::with_capacity(r),
        dims: [m, p, n],
    };
    for (c, (l, i, u, v, w)) in terms.into_iter().enumerate() {
        cp.u.column_mut(c).copy_from_slice(&u);
        cp.v.column_mut(c).copy_from_slice(&v);
        cp.w.column_mut(c).copy_from_slice(&w);
        cp.lambda.push(l);
        cp.face_index.push(i);
    }
    cp
}

impl<T: Scalar> CpRep<T> {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// Faces that contribute no term (their `M⁻¹` column is never used).
    pub fn skipped_faces(&self) -> Vec<usize> {
        (0..self.dims[2]).filter(|i| !self.face_index.contains(i)).collect()
    }

    /// Keeps the `j` largest terms.
    pub fn truncate(&self, j: usize) -> Self {
        let j = j.min(self.rank());
        Self {
            u: self.u.columns(0, j).into_owned(),
            v: self.v.columns(0, j).into_owned(),
            w: self.w.columns(0, j).into_owned(),
            lambda: self.lambda[..j].to_vec(),
            face_index: self.face_index[..j].to_vec(),
            dims: self.dims,
        }
    }

    /// `Σ_{k ≥ j} λ_k²`, the energy lost by [`truncate`](Self::truncate).
    pub fn tail_energy(&self, j: usize) -> f64 {
        self.lambda.iter().skip(j).map(|x| x * x).sum()
    }

    /// `(m + p)·r` scalars, plus `r` weights and `r` face indices kept as
    /// side data.
    pub fn storage_scalars(&self) -> usize {
        (self.dims[0] + self.dims[1]) * self.rank()
    }

    pub fn reconstruct(&self) -> Tensor3<T> {
        let [m, p, n] = self.dims;
        // mode-1 unfolding: U · diag(λ) · (W ⊙ V)ᵀ
        let mut ul = self.u.clone();
        for (c, &l) in self.lambda.iter().enumerate() {
            for x in ul.column_mut(c).iter_mut() {
                *x *= T::from_real(l);
            }
        }
        let kr = DMatrix::from_fn(p * n, self.rank(), |row, c| self.v[(row % p, c)] * self.w[(row / p, c)]);
        let mx = ul * kr.transpose();
        Tensor3::from_vec([m, p, n], mx.as_slice().to_vec()).expect("dims")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsvd::tsvdm2;
    use nalgebra::dmatrix;

    fn example() -> Tensor3<f64> {
        Tensor3::from_faces(&[dmatrix![1.0, 1.0; 1.0, 4.0], dmatrix![0.0, 0.0; 0.0, -3.0]]).unwrap()
    }

    fn pseudo(dims: [usize; 3], salt: usize) -> Tensor3<f64> {
        Tensor3::from_fn(dims, |i, j, k| (((i * 31 + j * 17 + k * 7 + salt * 13) % 23) as f64 - 11.0) / 7.0)
    }

    #[test]
    fn example_matrix_and_error() {
        let a = example();
        let mx = MatrixOrientation::Lateral.to_matrix(&a);
        assert_eq!(mx, dmatrix![1.0, 1.0; 1.0, 4.0; 0.0, 0.0; 0.0, -3.0]);
        let rep = matrix_truncated_svd(&a, MatrixOrientation::Lateral, RankSpec::Rank(1)).unwrap();
        let err = a.distance(&rep.reconstruct().unwrap()).unwrap();
        assert!((err - 1.0).abs() < 1e-12);
        assert!((rep.predicted_error_sq() - 1.0).abs() < 1e-12);
        assert_eq!(rep.storage_scalars(), 6);
    }

    #[test]
    fn orientations_round_trip() {
        let a = pseudo([3, 4, 5], 1);
        for o in [MatrixOrientation::Lateral, MatrixOrientation::Horizontal] {
            let mx = o.to_matrix(&a);
            assert_eq!(o.from_matrix(&mx, a.dims()).unwrap(), a);
            let full = matrix_truncated_svd(&a, o, RankSpec::Rank(mx.ncols().min(mx.nrows()))).unwrap();
            assert!(a.distance(&full.reconstruct().unwrap()).unwrap() < 1e-10);
        }
        assert!(matrix_truncated_svd(&a, MatrixOrientation::Lateral, RankSpec::Rank(5)).is_err());
    }

    #[test]
    fn energy_rank_choice() {
        let a = pseudo([4, 5, 3], 2);
        let rep = matrix_truncated_svd(&a, MatrixOrientation::Lateral, RankSpec::Energy(0.8)).unwrap();
        let total: f64 = rep.sigma.iter().map(|x| x * x).sum();
        let kept: f64 = rep.sigma[..rep.k()].iter().map(|x| x * x).sum();
        assert!(kept / total >= 0.8);
        let before: f64 = rep.sigma[..rep.k() - 1].iter().map(|x| x * x).sum();
        assert!(before / total < 0.8);
    }

    #[test]
    fn hosvd_exact_and_orthonormal() {
        let a = pseudo([5, 6, 4], 3);
        let rep = hosvd(&a).unwrap();
        assert!(a.distance(&rep.reconstruct().unwrap()).unwrap() < 1e-10);
        for f in [&rep.q, &rep.w, &rep.z] {
            let g = f.transpose() * f;
            assert!(crate::linalg::max_abs_diff(&g, &DMatrix::identity(g.nrows(), g.nrows())) < 1e-8);
        }
    }

    #[test]
    fn rank_one_tensor_exact() {
        let (u, v, w) = ([1.0, -2.0, 0.5], [3.0, 1.0], [2.0, 0.0, 1.0, -1.0]);
        let a = Tensor3::from_fn([3, 2, 4], |i, j, k| u[i] * v[j] * w[k]);
        let rep = tr_hosvd(&a, [1, 1, 1]).unwrap();
        assert!(a.distance(&rep.reconstruct().unwrap()).unwrap() < 1e-10);
        assert_eq!(rep.storage_scalars(), 1 + 3 + 2 + 4);
    }

    #[test]
    fn hosvd_as_mprod_matches() {
        let a = pseudo([4, 5, 3], 4);
        for triple in [[2, 3, 2], [1, 1, 1], [4, 5, 3], [3, 2, 1]] {
            let direct = tr_hosvd(&a, triple).unwrap().reconstruct().unwrap();
            let via = hosvd_as_mprod(&a, triple).unwrap();
            assert!(direct.distance(&via).unwrap() < 1e-10, "{triple:?}");
        }
        assert!(hosvd_as_mprod(&a, [1, 1, 1]).is_ok());
        assert!(hosvd_as_mprod(&a, [5, 1, 1]).is_err());
    }

    #[test]
    fn truncation_strategies() {
        let d = [6, 10, 4];
        assert_eq!(HosvdTruncation::Mode2(3).resolve(d).unwrap(), [6, 3, 4]);
        assert_eq!(HosvdTruncation::Balanced(2).resolve(d).unwrap(), [3, 2, 2]);
        assert_eq!(HosvdTruncation::Proportional(0.5).resolve(d).unwrap(), [3, 5, 2]);
        assert_eq!(HosvdTruncation::Proportional(0.01).resolve(d).unwrap(), [1, 1, 1]);
        assert!(HosvdTruncation::Triple([0, 1, 1]).resolve(d).is_err());
    }

    #[test]
    fn cp_from_hand_instance() {
        let t = Transform::identity(2).unwrap();
        let a = Tensor3::from_faces(&[dmatrix![3.0, 0.0; 0.0, 1.0], dmatrix![2.0, 0.0; 0.0, 0.0]]).unwrap();
        let rep = tsvdm2(&a, &t, 0.9).unwrap();
        let cp = to_cp(&rep);
        assert_eq!(cp.rank(), 2);
        assert_eq!(cp.lambda, vec![3.0, 2.0]);
        assert!(cp.reconstruct().distance(&rep.reconstruct().unwrap()).unwrap() < 1e-10);
        assert!(cp.skipped_faces().is_empty());
    }

    #[test]
    fn cp_single_face_and_dft_weights() {
        let t = Transform::identity(3).unwrap();
        let a = Tensor3::from_fn([2, 2, 3], |i, j, k| if k == 1 { (i + 1) as f64 * (j + 2) as f64 } else { 0.0 });
        let cp = to_cp(&tsvdm2(&a, &t, 1.0).unwrap());
        assert_eq!(cp.rank(), 1);
        assert_eq!(cp.skipped_faces(), vec![0, 2]);

        let t = Transform::dft(4).unwrap();
        let a = pseudo([3, 2, 4], 5).to_complex();
        let rep = tsvdm2(&a, &t, 0.95).unwrap();
        let cp = to_cp(&rep);
        let approx = rep.reconstruct().unwrap();
        assert!(cp.reconstruct().distance(&approx).unwrap() < 1e-10);
        for c in 0..cp.rank() {
            assert!((cp.u.column(c).norm() - 1.0).abs() < 1e-12);
            assert!((cp.v.column(c).norm() - 1.0).abs() < 1e-12);
            assert!((cp.w.column(c).norm() - 1.0).abs() < 1e-12);
        }
        let full_err = a.distance(&approx).unwrap().powi(2);
        for j in 0..=cp.rank() {
            let err = a.distance(&cp.truncate(j).reconstruct()).unwrap().powi(2);
            assert!((err - (full_err + cp.tail_energy(j))).abs() < 1e-9 * (1.0 + err));
        }
    }
}
