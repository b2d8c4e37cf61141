//! t-SVDM factorization, t-rank truncation and multi-rank energy truncation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, Svd};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;
use crate::transform::{Transform, TransformKind};

/// Relative cutoff (against the largest singular value overall) below which
/// a face singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Per-face ranks `ρᵢ` of the transform-domain faces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRank(pub Vec<usize>);

impl MultiRank {
    pub fn rho(&self) -> &[usize] {
        &self.0
    }

    /// `maxᵢ ρᵢ`.
    pub fn t_rank(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `Σᵢ ρᵢ`.
    pub fn implicit_rank(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn implicit_rank(rho: &MultiRank) -> usize {
    rho.implicit_rank()
}

/// True when the faces of `A ×₃ M` come in conjugate pairs, `Âₙ₋ᵢ = conj(Âᵢ)`:
/// a real tensor under the DFT.
pub(crate) fn conj_symmetric_input<T: Scalar>(a_data: &[T], t: &Transform<T>) -> bool {
    T::IS_COMPLEX
        && t.kind() == TransformKind::DftUnnormalized
        && a_data.iter().all(|x| x.to_c64().im == 0.0)
}

/// SVDs of all transform-domain faces. With `conj_sym`, only faces
/// `0..=n/2` are factored and the rest are mirrored, so paired faces carry
/// identical singular values.
pub(crate) fn face_svds<T: Scalar>(faces: &[DMatrix<T>], conj_sym: bool) -> Vec<Svd<T>> {
    let n = faces.len();
    if !conj_sym {
        return faces.par_iter().map(svd).collect();
    }
    let half = n / 2;
    let computed: Vec<Svd<T>> = (0..=half.min(n - 1))
        .into_par_iter()
        .map(|i| {
            if i == 0 || 2 * i == n {
                // self-conjugate face: exactly real
                let re = faces[i].map(|x| x.to_c64().re);
                let s = svd(&re);
                Svd {
                    u: s.u.map(|x| T::from_c64(Complex64::new(x, 0.0))),
                    sigma: s.sigma,
                    v: s.v.map(|x| T::from_c64(Complex64::new(x, 0.0))),
                }
            } else {
                svd(&faces[i])
            }
        })
        .collect();
    (0..n)
        .map(|i| {
            if i <= half {
                computed[i].clone()
            } else {
                let s = &computed[n - i];
                Svd {
                    u: s.u.map(|x| x.conjugate()),
                    sigma: s.sigma.clone(),
                    v: s.v.map(|x| x.conjugate()),
                }
            }
        })
        .collect()
}

/// The t-SVDM `A = U ★M S ★M Vᴴ` in reduced form, `k = min(m, p)`.
///
/// Factors are held in the transform domain; [`u`](Self::u), [`s`](Self::s)
/// and [`v`](Self::v) map them back on demand.
#[derive(Debug, Clone)]
pub struct TSvdmFactors<T: Scalar> {
    dims: [usize; 3],
    transform: Transform<T>,
    u_hat: Vec<DMatrix<T>>,
    sigma: Vec<Vec<f64>>,
    v_hat: Vec<DMatrix<T>>,
    conj_symmetric: bool,
}

pub fn tsvdm<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>) -> Result<TSvdmFactors<T>> {
    if a.n() != t.n() {
        return Err(Error::TransformMismatch(format!(
            "tube length {} vs transform size {}",
            a.n(),
            t.n()
        )));
    }
    let conj_sym = conj_symmetric_input(a.data(), t);
    let a_hat = t.forward(a)?;
    let svds = face_svds(&a_hat.faces(), conj_sym);
    let mut u_hat = Vec::with_capacity(a.n());
    let mut v_hat = Vec::with_capacity(a.n());
    let mut sigma = Vec::with_capacity(a.n());
    for s in svds {
        u_hat.push(s.u);
        v_hat.push(s.v);
        sigma.push(s.sigma);
    }
    Ok(TSvdmFactors {
        dims: a.dims(),
        transform: t.clone(),
        u_hat,
        sigma,
        v_hat,
        conj_symmetric: conj_sym,
    })
}

impl<T: Scalar> TSvdmFactors<T> {
    /// Rebuilds factors from transform-domain faces `Ûᵢ` (`m × k`) and
    /// `Ĝᵢ = Ŝᵢ V̂ᵢᴴ` (`k × p`): `σ` are the row norms of `Ĝᵢ`.
    pub fn from_parts(
        dims: [usize; 3],
        transform: Transform<T>,
        u_hat: Vec<DMatrix<T>>,
        g_hat: Vec<DMatrix<T>>,
        conj_symmetric: bool,
    ) -> Result<Self> {
        let [m, p, n] = dims;
        if transform.n() != n || u_hat.len() != n || g_hat.len() != n {
            return Err(Error::Corrupted("face count does not match dimensions".into()));
        }
        let k = u_hat.first().map_or(0, |u| u.ncols());
        let mut sigma = Vec::with_capacity(n);
        let mut v_hat = Vec::with_capacity(n);
        for (u, g) in u_hat.iter().zip(&g_hat) {
            if u.shape() != (m, k) || g.shape() != (k, p) {
                return Err(Error::Corrupted("factor shapes do not match dimensions".into()));
            }
            let mut s = Vec::with_capacity(k);
            let mut v = DMatrix::zeros(p, k);
            for j in 0..k {
                let row = g.row(j);
                let norm = row.norm();
                s.push(norm);
                if norm > 0.0 {
                    for (c, &x) in row.iter().enumerate() {
                        v[(c, j)] = x.conjugate().unscale(norm);
                    }
                }
            }
            sigma.push(s);
            v_hat.push(v);
        }
        Ok(Self { dims, transform, u_hat, sigma, v_hat, conj_symmetric })
    }

    /// Transform-domain faces `Ŝᵢ V̂ᵢᴴ` (`k × p`).
    pub fn g_hat_faces(&self) -> Vec<DMatrix<T>> {
        self.v_hat
            .iter()
            .zip(&self.sigma)
            .map(|(v, s)| {
                let mut g = v.adjoint();
                for (j, &x) in s.iter().enumerate() {
                    for c in g.row_mut(j).iter_mut() {
                        *c *= T::from_real(x);
                    }
                }
                g
            })
            .collect()
    }

    /// Dimensions of the factored tensor.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Number of singular tubes held.
    pub fn k(&self) -> usize {
        self.sigma.first().map_or(0, Vec::len)
    }

    pub fn transform(&self) -> &Transform<T> {
        &self.transform
    }

    pub fn transform_id(&self) -> u64 {
        self.transform.id()
    }

    pub fn is_conj_symmetric(&self) -> bool {
        self.conj_symmetric
    }

    /// Singular values of transform-domain face `i`, descending.
    pub fn face_singular_values(&self, i: usize) -> &[f64] {
        &self.sigma[i]
    }

    pub fn u_hat_face(&self, i: usize) -> &DMatrix<T> {
        &self.u_hat[i]
    }

    pub fn v_hat_face(&self, i: usize) -> &DMatrix<T> {
        &self.v_hat[i]
    }

    fn spatial(&self, faces: &[DMatrix<T>], rows: usize) -> Tensor3<T> {
        let hat = if faces.is_empty() || faces[0].ncols() == 0 {
            Tensor3::zeros(rows, 0, self.dims[2])
        } else {
            Tensor3::from_faces(faces).expect("consistent faces")
        };
        if hat.is_empty() {
            return hat;
        }
        self.transform.inverse(&hat).expect("transform size checked")
    }

    /// `U`, `m × k × n`.
    pub fn u(&self) -> Tensor3<T> {
        self.spatial(&self.u_hat, self.dims[0])
    }

    /// `V`, `p × k × n`.
    pub fn v(&self) -> Tensor3<T> {
        self.spatial(&self.v_hat, self.dims[1])
    }

    /// The f-diagonal `S`, `k × k × n`.
    pub fn s(&self) -> Tensor3<T> {
        let k = self.k();
        let faces: Vec<DMatrix<T>> = self
            .sigma
            .iter()
            .map(|s| DMatrix::from_fn(k, k, |i, j| if i == j { T::from_real(s[i]) } else { T::zero() }))
            .collect();
        self.spatial(&faces, k)
    }

    /// Singular tube `s_j = S[j, j, :]` in the spatial domain.
    pub fn singular_tube(&self, j: usize) -> Vec<T> {
        let tube: Vec<T> = self.sigma.iter().map(|s| T::from_real(s[j])).collect();
        self.transform.apply_tube(&tube, true)
    }

    /// `‖s_j‖_F` for every tube, nonincreasing.
    pub fn singular_tube_norms(&self) -> Vec<f64> {
        (0..self.k())
            .map(|j| self.singular_tube(j).iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt())
            .collect()
    }

    fn sigma_max(&self) -> f64 {
        self.sigma.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Multi-rank with the default relative cutoff.
    pub fn multirank(&self) -> MultiRank {
        self.multirank_with_tol(RANK_TOL * self.sigma_max())
    }

    /// Multi-rank counting face singular values strictly above `tol`.
    pub fn multirank_with_tol(&self, tol: f64) -> MultiRank {
        MultiRank(self.sigma.iter().map(|s| s.iter().filter(|&&x| x > tol).count()).collect())
    }

    /// Number of nonzero singular tubes, `maxᵢ ρᵢ`.
    pub fn trank(&self) -> usize {
        self.multirank().t_rank()
    }

    /// `Σ_{j≥k} ‖s_j‖²`: the squared error of the t-rank-`k` truncation.
    pub fn tail_energy(&self, k: usize) -> f64 {
        let norms = self.singular_tube_norms();
        norms.iter().skip(k).map(|x| x * x).sum()
    }

    /// Keeps the first `k` singular tubes, `1 ≤ k ≤ min(m, p)`.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::OutOfRange(format!("t-rank {k} (valid 1..={})", self.k())));
        }
        Ok(Self {
            dims: self.dims,
            transform: self.transform.clone(),
            u_hat: self.u_hat.iter().map(|u| u.columns(0, k).into_owned()).collect(),
            sigma: self.sigma.iter().map(|s| s[..k].to_vec()).collect(),
            v_hat: self.v_hat.iter().map(|v| v.columns(0, k).into_owned()).collect(),
            conj_symmetric: self.conj_symmetric,
        })
    }

    /// Transform-domain faces `Ûᵢ · diag(σᵢ) · V̂ᵢᴴ`.
    pub fn reconstruct_hat(&self) -> Vec<DMatrix<T>> {
        (0..self.dims[2])
            .into_par_iter()
            .map(|i| {
                let mut us = self.u_hat[i].clone();
                for (j, &s) in self.sigma[i].iter().enumerate() {
                    for x in us.column_mut(j).iter_mut() {
                        *x *= T::from_real(s);
                    }
                }
                us * self.v_hat[i].adjoint()
            })
            .collect()
    }

    /// `U ★M S ★M Vᴴ`.
    pub fn reconstruct(&self) -> Tensor3<T> {
        let hat = Tensor3::from_faces(&self.reconstruct_hat()).expect("consistent faces");
        self.transform.inverse(&hat).expect("transform size checked")
    }

    /// Storage of a t-rank-`k` truncation: `k(m + p)n` scalars.
    pub fn storage_scalars(&self) -> usize {
        self.k() * (self.dims[0] + self.dims[1]) * self.dims[2]
    }
}

/// `A_k = U[:, :k, :] ★ S[:k, :k, :] ★ V[:, :k, :]ᴴ`.
pub fn truncate_trank<T: Scalar>(f: &TSvdmFactors<T>, k: usize) -> Result<TSvdmFactors<T>> {
    f.truncate(k)
}

/// Outcome of the global energy selection shared by the 3D and 4D
/// multi-rank truncations.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Selection {
    /// Squared-value threshold `v_J`; values `≥` it are kept.
    pub threshold: f64,
    pub total: f64,
    pub kept: f64,
}

/// Sorts squared values descending (ties by key), finds the first `J` whose
/// cumulative share reaches `gamma`, and returns the threshold `v_J`.
pub(crate) fn select_by_energy<K: Ord + Copy>(values: &[(f64, K)], gamma: f64) -> Selection {
    let mut sorted: Vec<(f64, K)> = values.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let total: f64 = sorted.iter().map(|v| v.0).sum();
    if total <= 0.0 {
        return Selection { threshold: f64::INFINITY, total: 0.0, kept: 0.0 };
    }
    let mut cum = 0.0;
    let mut threshold = sorted.last().map_or(0.0, |v| v.0);
    for v in &sorted {
        cum += v.0;
        if cum / total >= gamma {
            threshold = v.0;
            break;
        }
    }
    let kept = sorted.iter().filter(|v| v.0 >= threshold).map(|v| v.0).sum();
    Selection { threshold, total, kept }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(())
}

/// Multi-rank truncation kept in the transform domain: face `i` holds
/// `Ûᵢ` (`m × ρᵢ`) and `Ĝᵢ = Ŝᵢ V̂ᵢᴴ` (`ρᵢ × p`).
#[derive(Debug, Clone)]
pub struct TSvdmIIRep<T: Scalar> {
    dims: [usize; 3],
    transform: Transform<T>,
    u_faces: Vec<DMatrix<T>>,
    g_faces: Vec<DMatrix<T>>,
    rho: MultiRank,
    gamma: f64,
    threshold: f64,
    total_energy: f64,
    kept_energy: f64,
    original_norm: f64,
    conj_symmetric: bool,
}

/// Keeps, across all faces, the largest squared face singular values whose
/// cumulative share of `‖Â‖²` first reaches `gamma`.
pub fn tsvdm2<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>, gamma: f64) -> Result<TSvdmIIRep<T>> {
    check_gamma(gamma)?;
    if !t.is_scaled_unitary() {
        return Err(Error::InvalidTransform("multi-rank truncation needs a scaled-unitary transform".into()));
    }
    let f = tsvdm(a, t)?;
    Ok(tsvdm2_from_factors(&f, gamma, a.frobenius_norm()))
}

/// Squared face singular values keyed by `(face, index)`, with values under
/// the rank cutoff zeroed.
fn keyed_squares<T: Scalar>(f: &TSvdmFactors<T>) -> Vec<(f64, (usize, usize))> {
    let cut = RANK_TOL * f.sigma_max();
    f.sigma
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            s.iter()
                .enumerate()
                .map(move |(j, &x)| (if x > cut { x * x } else { 0.0 }, (i, j)))
        })
        .collect()
}

pub(crate) fn tsvdm2_from_factors<T: Scalar>(f: &TSvdmFactors<T>, gamma: f64, original_norm: f64) -> TSvdmIIRep<T> {
    let sel = select_by_energy(&keyed_squares(f), gamma);
    let cut = RANK_TOL * f.sigma_max();
    let mut rho = Vec::with_capacity(f.dims[2]);
    let mut u_faces = Vec::with_capacity(f.dims[2]);
    let mut g_faces = Vec::with_capacity(f.dims[2]);
    for i in 0..f.dims[2] {
        let r = f.sigma[i]
            .iter()
            .take_while(|&&x| x > cut && x * x >= sel.threshold)
            .count();
        let u = f.u_hat[i].columns(0, r).into_owned();
        let mut g = f.v_hat[i].columns(0, r).adjoint();
        for (j, &s) in f.sigma[i][..r].iter().enumerate() {
            for x in g.row_mut(j).iter_mut() {
                *x *= T::from_real(s);
            }
        }
        rho.push(r);
        u_faces.push(u);
        g_faces.push(g);
    }
    let total_energy: f64 = f.sigma.iter().flatten().map(|x| x * x).sum();
    let kept_energy: f64 = f
        .sigma
        .iter()
        .zip(&rho)
        .map(|(s, &r)| s[..r].iter().map(|x| x * x).sum::<f64>())
        .sum();
    TSvdmIIRep {
        dims: f.dims,
        transform: f.transform.clone(),
        u_faces,
        g_faces,
        rho: MultiRank(rho),
        gamma,
        threshold: sel.threshold,
        total_energy,
        kept_energy,
        original_norm,
        conj_symmetric: f.conj_symmetric,
    }
}

impl<T: Scalar> TSvdmIIRep<T> {
    /// Rebuilds a representation from stored parts, checking consistency.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dims: [usize; 3],
        transform: Transform<T>,
        u_faces: Vec<DMatrix<T>>,
        g_faces: Vec<DMatrix<T>>,
        gamma: f64,
        total_energy: f64,
        original_norm: f64,
        conj_symmetric: bool,
    ) -> Result<Self> {
        let [m, p, n] = dims;
        if transform.n() != n || u_faces.len() != n || g_faces.len() != n {
            return Err(Error::Corrupted("face count does not match dimensions".into()));
        }
        let mut rho = Vec::with_capacity(n);
        for (u, g) in u_faces.iter().zip(&g_faces) {
            if u.nrows() != m || g.ncols() != p || u.ncols() != g.nrows() {
                return Err(Error::Corrupted("factor shapes do not match dimensions".into()));
            }
            rho.push(u.ncols());
        }
        let kept_energy = g_faces.iter().map(|g| g.norm_squared()).sum();
        let threshold = g_faces
            .iter()
            .flat_map(|g| g.row_iter().map(|r| r.norm_squared()).collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            dims,
            transform,
            u_faces,
            g_faces,
            rho: MultiRank(rho),
            gamma,
            threshold,
            total_energy,
            kept_energy,
            original_norm,
            conj_symmetric,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn transform(&self) -> &Transform<T> {
        &self.transform
    }

    pub fn multirank(&self) -> &MultiRank {
        &self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Squared threshold `v_J`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn u_faces(&self) -> &[DMatrix<T>] {
        &self.u_faces
    }

    pub fn g_faces(&self) -> &[DMatrix<T>] {
        &self.g_faces
    }

    pub fn original_norm(&self) -> f64 {
        self.original_norm
    }

    /// `‖Â‖²`.
    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// Transform-domain energy kept by the truncation.
    pub fn kept_energy(&self) -> f64 {
        self.kept_energy
    }

    /// Kept share of the transform-domain energy.
    pub fn retained_energy(&self) -> f64 {
        if self.total_energy > 0.0 {
            self.kept_energy / self.total_energy
        } else {
            1.0
        }
    }

    /// Predicted `‖A − A_ρ‖²` from the discarded face singular values.
    pub fn predicted_error_sq(&self) -> f64 {
        let c = self.transform.scale();
        ((self.total_energy - self.kept_energy) / (c * c)).max(0.0)
    }

    pub fn is_conj_symmetric(&self) -> bool {
        self.conj_symmetric
    }

    /// `(m + p) · Σρᵢ` scalars.
    pub fn storage_scalars(&self) -> usize {
        (self.dims[0] + self.dims[1]) * self.rho.implicit_rank()
    }

    /// Scalars that must be stored when conjugate faces are implied:
    /// only faces `0..=n/2` count.
    pub fn storage_scalars_conjsym(&self) -> usize {
        if !self.conj_symmetric {
            return self.storage_scalars();
        }
        let half = self.dims[2] / 2;
        (self.dims[0] + self.dims[1]) * self.rho.0[..=half].iter().sum::<usize>()
    }

    /// Transform-domain faces `Ûᵢ Ĝᵢ`.
    pub fn reconstruct_hat(&self) -> Tensor3<T> {
        let [m, p, n] = self.dims;
        let faces: Vec<DMatrix<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if self.rho.0[i] == 0 {
                    DMatrix::zeros(m, p)
                } else {
                    &self.u_faces[i] * &self.g_faces[i]
                }
            })
            .collect();
        Tensor3::from_faces(&faces).expect("shapes validated")
    }

    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        self.transform.inverse(&self.reconstruct_hat())
    }
}

/// Free-function form of [`TSvdmIIRep::reconstruct`].
pub fn reconstruct<T: Scalar>(rep: &TSvdmIIRep<T>) -> Result<Tensor3<T>> {
    rep.reconstruct()
}

/// An energy level `γ` whose multi-rank truncation matches the t-rank-`k`
/// truncation on both fronts: implicit rank at most that of `A_k` and error
/// at most `‖A − A_k‖_F` (plus `1e-10`).
///
/// Candidate levels are the cumulative shares of the sorted squared face
/// singular values at or above the share retained by `A_k`; the smallest
/// qualifying one is returned.
pub fn dominating_energy<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>, k: usize) -> Result<f64> {
    let f = tsvdm(a, t)?;
    if k == 0 || k > f.k() {
        return Err(Error::OutOfRange(format!("t-rank {k} (valid 1..={})", f.k())));
    }
    let keyed = keyed_squares(&f);
    let total: f64 = {
        let mut v: Vec<f64> = keyed.iter().map(|x| x.0).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v.iter().sum()
    };
    if total <= 0.0 {
        return Ok(1.0);
    }
    let rho_full = f.multirank();
    let rank_k: usize = rho_full.0.iter().map(|&r| r.min(k)).sum();
    let err_k = f.tail_energy(k).sqrt();
    let kept_k: f64 = keyed.iter().filter(|x| x.1 .1 < k).map(|x| x.0).sum();
    let mu = (kept_k / total).min(1.0);

    let mut sorted = keyed.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut levels = vec![mu];
    let mut cum = 0.0;
    for v in &sorted {
        cum += v.0;
        let level = cum / total;
        if level >= mu - 1e-12 && v.0 > 0.0 {
            levels.push(level.min(1.0));
        }
    }
    levels.sort_by(|a, b| a.total_cmp(b));
    levels.dedup();

    let norm = a.frobenius_norm();
    for &gamma in &levels {
        if gamma <= 0.0 {
            continue;
        }
        let rep = tsvdm2_from_factors(&f, gamma, norm);
        if rep.multirank().implicit_rank() <= rank_k && rep.predicted_error_sq().sqrt() <= err_k + 1e-10 {
            return Ok(gamma);
        }
    }
    Ok(mu)
}
