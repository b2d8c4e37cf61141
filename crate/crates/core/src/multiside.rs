//! Compression over both lateral-slice orientations: convex combinations of
//! the two one-sided approximations, and the sequential two-transform
//! factorization.

use crate::error::{Error, Result};
use crate::mprod::{conj_transpose, mprod};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::tsvd::{tsvdm, tsvdm2, TSvdmFactors, TSvdmIIRep};

/// Truncation applied on each side of a convex combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideSpec {
    /// t-rank `k₁` for `A`, `k₂` for `Aᵖ`.
    TRank(usize, usize),
    /// Energy levels `γ₁` for `A`, `γ₂` for `Aᵖ`.
    Energy(f64, f64),
}

/// One side of a convex combination.
#[derive(Debug, Clone)]
pub enum SideRep<T: Scalar> {
    TRank(TSvdmFactors<T>),
    Multi(TSvdmIIRep<T>),
}

impl<T: Scalar> SideRep<T> {
    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        match self {
            Self::TRank(f) => Ok(f.reconstruct()),
            Self::Multi(r) => r.reconstruct(),
        }
    }

    pub fn storage_scalars(&self) -> usize {
        match self {
            Self::TRank(f) => f.storage_scalars(),
            Self::Multi(r) => r.storage_scalars(),
        }
    }

    pub fn transform(&self) -> &Transform<T> {
        match self {
            Self::TRank(f) => f.transform(),
            Self::Multi(r) => r.transform(),
        }
    }
}

fn side<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>, rank: Option<usize>, gamma: Option<f64>) -> Result<SideRep<T>> {
    match (rank, gamma) {
        (Some(k), _) => Ok(SideRep::TRank(tsvdm(a, t)?.truncate(k)?)),
        (_, Some(g)) => Ok(SideRep::Multi(tsvdm2(a, t, g)?)),
        _ => unreachable!(),
    }
}

/// `α·approx(A) + (1 − α)·approx(Aᵖ)ᵖ`, kept as its two sides.
#[derive(Debug, Clone)]
pub struct ConvexRep<T: Scalar> {
    pub alpha: f64,
    pub primary: SideRep<T>,
    pub permuted: SideRep<T>,
    pub dims: [usize; 3],
}

impl<T: Scalar> ConvexRep<T> {
    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        let a1 = self.primary.reconstruct()?;
        let a2 = self.permuted.reconstruct()?.permute_321();
        if a1.dims() != self.dims || a2.dims() != self.dims {
            return Err(Error::Corrupted("side dimensions disagree".into()));
        }
        a1.scale(T::from_real(self.alpha))
            .add(&a2.scale(T::from_real(1.0 - self.alpha)))
    }

    /// Both sides' storage.
    pub fn storage_scalars(&self) -> usize {
        self.primary.storage_scalars() + self.permuted.storage_scalars()
    }
}

/// Errors of a convex combination and the triangle-inequality bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexReport {
    pub alpha: f64,
    pub error: f64,
    pub error_primary: f64,
    pub error_permuted: f64,
    /// `α·err₁ + (1 − α)·err₂`.
    pub bound: f64,
    pub storage_scalars: usize,
}

pub fn convex_rep<T: Scalar>(
    a: &Tensor3<T>,
    t_m: &Transform<T>,
    t_b: &Transform<T>,
    spec: SideSpec,
    alpha: f64,
) -> Result<ConvexRep<T>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!("alpha {alpha}")));
    }
    if t_b.n() != a.m() {
        return Err(Error::TransformMismatch(format!(
            "permuted side needs a transform of size {}, got {}",
            a.m(),
            t_b.n()
        )));
    }
    let ap = a.permute_321();
    let (primary, permuted) = match spec {
        SideSpec::TRank(k1, k2) => rayon::join(|| side(a, t_m, Some(k1), None), || side(&ap, t_b, Some(k2), None)),
        SideSpec::Energy(g1, g2) => rayon::join(|| side(a, t_m, None, Some(g1)), || side(&ap, t_b, None, Some(g2))),
    };
    Ok(ConvexRep {
        alpha,
        primary: primary?,
        permuted: permuted?,
        dims: a.dims(),
    })
}

pub fn convex_combo<T: Scalar>(
    a: &Tensor3<T>,
    t_m: &Transform<T>,
    t_b: &Transform<T>,
    spec: SideSpec,
    alpha: f64,
) -> Result<(Tensor3<T>, ConvexReport)> {
    let rep = convex_rep(a, t_m, t_b, spec, alpha)?;
    let approx = rep.reconstruct()?;
    let e1 = a.distance(&rep.primary.reconstruct()?)?;
    let e2 = a.distance(&rep.permuted.reconstruct()?.permute_321())?;
    let report = ConvexReport {
        alpha,
        error: a.distance(&approx)?,
        error_primary: e1,
        error_permuted: e2,
        bound: alpha * e1 + (1.0 - alpha) * e2,
        storage_scalars: rep.storage_scalars(),
    };
    Ok((approx, report))
}

/// `A ≈ U_k ★M (W_q ★B G)ᵖ`, all factors spatial.
#[derive(Debug, Clone)]
pub struct SequentialRep<T: Scalar> {
    /// `q × p × k`.
    pub g: Tensor3<T>,
    /// `m × k × n`.
    pub u_k: Tensor3<T>,
    /// `n × q × k`.
    pub w_q: Tensor3<T>,
    pub t_m: Transform<T>,
    pub t_b: Transform<T>,
    pub k: usize,
    pub q: usize,
    pub dims: [usize; 3],
    /// `Σ_{i>k}‖s_i‖² + Σ_{j>q}‖d_j‖²`.
    pub predicted_error_sq: f64,
    /// Real input under DFTs on both stages: all spatial factors are real.
    pub conj_symmetric: bool,
}

pub fn sequential_tsvdmb<T: Scalar>(
    a: &Tensor3<T>,
    t_m: &Transform<T>,
    t_b: &Transform<T>,
    k: usize,
    q: usize,
) -> Result<SequentialRep<T>> {
    let [m, p, n] = a.dims();
    if k == 0 || k > m.min(p) {
        return Err(Error::OutOfRange(format!("k = {k} (valid 1..={})", m.min(p))));
    }
    if q == 0 || q > n.min(p) {
        return Err(Error::OutOfRange(format!("q = {q} (valid 1..={})", n.min(p))));
    }
    if t_b.n() != k {
        return Err(Error::TransformMismatch(format!(
            "second stage needs a transform of size k = {k}, got {}",
            t_b.n()
        )));
    }
    let f = tsvdm(a, t_m)?;
    let conj_symmetric = f.is_conj_symmetric() && t_b.kind() == crate::transform::TransformKind::DftUnnormalized;
    let tail_m = f.tail_energy(k);
    let u_k = f.truncate(k)?.u();
    let c = mprod(&conj_transpose(&u_k, t_m)?, a, t_m)?;
    let cp = c.permute_321();
    let f2 = tsvdm(&cp, t_b)?;
    let tail_b = f2.tail_energy(q);
    let w_q = f2.truncate(q)?.u();
    let g = mprod(&conj_transpose(&w_q, t_b)?, &cp, t_b)?;
    Ok(SequentialRep {
        g,
        u_k,
        w_q,
        t_m: t_m.clone(),
        t_b: t_b.clone(),
        k,
        q,
        dims: a.dims(),
        predicted_error_sq: tail_m + tail_b,
        conj_symmetric,
    })
}

impl<T: Scalar> SequentialRep<T> {
    /// `qpk + mkn + kqn` scalars.
    pub fn storage_scalars(&self) -> usize {
        let [m, p, n] = self.dims;
        let (k, q) = (self.k, self.q);
        q * p * k + m * k * n + k * q * n
    }

    fn check(&self) -> Result<()> {
        let [m, p, n] = self.dims;
        let (k, q) = (self.k, self.q);
        if self.g.dims() != [q, p, k] || self.u_k.dims() != [m, k, n] || self.w_q.dims() != [n, q, k] {
            return Err(Error::Corrupted("sequential factor shapes disagree".into()));
        }
        if self.t_m.n() != n || self.t_b.n() != k {
            return Err(Error::Corrupted("sequential transform sizes disagree".into()));
        }
        Ok(())
    }

    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        self.check()?;
        let inner = mprod(&self.w_q, &self.g, &self.t_b)?.permute_321();
        mprod(&self.u_k, &inner, &self.t_m)
    }
}

pub fn reconstruct_sequential<T: Scalar>(rep: &SequentialRep<T>) -> Result<Tensor3<T>> {
    rep.reconstruct()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo(dims: [usize; 3], salt: usize) -> Tensor3<f64> {
        Tensor3::from_fn(dims, |i, j, k| (((i * 31 + j * 17 + k * 7 + salt * 13) % 23) as f64 - 11.0) / 7.0)
    }

    #[test]
    fn convex_endpoints() {
        let a = pseudo([5, 4, 6], 1);
        let tm = Transform::dct(6).unwrap();
        let tb = Transform::dct(5).unwrap();
        let one = tsvdm(&a, &tm).unwrap().truncate(2).unwrap().reconstruct();
        let (x, r) = convex_combo(&a, &tm, &tb, SideSpec::TRank(2, 2), 1.0).unwrap();
        assert!(x.distance(&one).unwrap() < 1e-14);
        assert!((r.error - r.error_primary).abs() < 1e-12);
        let other = tsvdm(&a.permute_321(), &tb).unwrap().truncate(2).unwrap().reconstruct().permute_321();
        let (x, _) = convex_combo(&a, &tm, &tb, SideSpec::TRank(2, 2), 0.0).unwrap();
        assert!(x.distance(&other).unwrap() < 1e-14);
    }

    #[test]
    fn convex_bound_and_errors() {
        let a = pseudo([5, 4, 6], 2);
        let tm = Transform::haar(2).unwrap();
        let tb = Transform::dct(5).unwrap();
        assert!(matches!(
            convex_combo(&a, &tm, &tb, SideSpec::TRank(2, 2), 0.5),
            Err(Error::TransformMismatch(_))
        ));
        let tm = Transform::dct(6).unwrap();
        let (_, r) = convex_combo(&a, &tm, &tb, SideSpec::TRank(2, 2), 0.5).unwrap();
        assert!(r.error <= r.bound + 1e-10);
        let (_, r) = convex_combo(&a, &tm, &tb, SideSpec::Energy(0.9, 0.8), 0.3).unwrap();
        assert!(r.error <= r.bound + 1e-10);
        assert!(convex_combo(&a, &tm, &tb, SideSpec::TRank(2, 2), 1.5).is_err());
    }

    #[test]
    fn sequential_shapes_and_exactness() {
        let a = pseudo([4, 3, 2], 3);
        let tm = Transform::dct(2).unwrap();
        let tb = Transform::dct(2).unwrap();
        let rep = sequential_tsvdmb(&a, &tm, &tb, 2, 2).unwrap();
        assert_eq!(rep.g.dims(), [2, 3, 2]);
        assert_eq!(rep.u_k.dims(), [4, 2, 2]);
        assert_eq!(rep.w_q.dims(), [2, 2, 2]);
        assert_eq!(rep.storage_scalars(), 12 + 16 + 8);

        let tb3 = Transform::dct(3).unwrap();
        let full = sequential_tsvdmb(&a, &tm, &tb3, 3, 2).unwrap();
        assert!(a.distance(&full.reconstruct().unwrap()).unwrap() < 1e-10);
        assert!(sequential_tsvdmb(&a, &tm, &tb, 2, 3).is_err());
        assert!(sequential_tsvdmb(&a, &tm, &tb3, 2, 2).is_err());
    }

    #[test]
    fn sequential_error_decomposes() {
        let a = pseudo([5, 4, 3], 4);
        let tm = Transform::dft(3).unwrap();
        let ac = a.to_complex();
        for (k, q) in [(1, 1), (2, 1), (2, 3), (4, 2)] {
            let tb = Transform::dft(k).unwrap();
            let rep = sequential_tsvdmb(&ac, &tm, &tb, k, q).unwrap();
            let err = ac.distance(&rep.reconstruct().unwrap()).unwrap().powi(2);
            assert!((err - rep.predicted_error_sq).abs() < 1e-8 * (1.0 + err), "{k},{q}");
        }
    }
}
