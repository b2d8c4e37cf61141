//! Matrix factorizations with deterministic ordering and sign conventions.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Thin SVD `A = U · diag(σ) · Vᴴ` with `σ` sorted descending.
///
/// Each left singular vector is rotated so that its largest-magnitude entry
/// is positive real; the matching right vector gets the same phase so the
/// product is unchanged.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U[:, ..k] · diag(σ[..k]) · V[:, ..k]ᴴ`.
    pub fn reconstruct(&self, k: usize) -> DMatrix<T> {
        let k = k.min(self.sigma.len());
        let mut us = self.u.columns(0, k).into_owned();
        for (j, &s) in self.sigma[..k].iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.columns(0, k).adjoint()
    }
}

/// Rotates column `j` of `u` so its largest-magnitude entry is real
/// positive, returning the applied unit factor.
fn normalize_phase<T: Scalar>(u: &mut DMatrix<T>, j: usize) -> T {
    let col = u.column(j);
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in col.iter().enumerate() {
        let a = x.modulus();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if best_abs <= 0.0 {
        return T::one();
    }
    let pivot = u[(best, j)];
    let phase = (pivot / T::from_real(pivot.modulus())).conjugate();
    u.column_mut(j).scale_mut_complex(phase);
    phase
}

trait ScaleComplex<T> {
    fn scale_mut_complex(&mut self, s: T);
}

impl<T: Scalar, S> ScaleComplex<T> for nalgebra::Matrix<T, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<T, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: T) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

/// Deterministic thin SVD.
pub fn svd<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (m, p) = a.shape();
    let k = m.min(p);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            sigma: vec![],
            v: DMatrix::zeros(p, 0),
        };
    }
    let raw = a.clone().svd(true, true);
    let u_raw = raw.u.expect("left vectors requested");
    let v_raw = raw.v_t.expect("right vectors requested").adjoint();
    let s_raw = raw.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| s_raw[y].total_cmp(&s_raw[x]).then(x.cmp(&y)));

    let mut u = DMatrix::zeros(m, k);
    let mut v = DMatrix::zeros(p, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        sigma.push(s_raw[src].max(0.0));
    }
    for j in 0..k {
        let phase = normalize_phase(&mut u, j);
        v.column_mut(j).scale_mut_complex(phase);
    }
    Svd { u, sigma, v }
}

/// Singular values only, descending.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Complete orthonormal basis of the column space's ambient space whose
/// leading columns are the left singular vectors of `a` (descending).
pub fn full_left_basis<T: Scalar>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>) {
    let (m, p) = a.shape();
    if p >= m {
        let s = svd(a);
        return (s.u, s.sigma);
    }
    let mut padded = DMatrix::zeros(m, m);
    padded.columns_mut(0, p).copy_from(a);
    let s = svd(&padded);
    (s.u, s.sigma)
}

/// Numerical rank with the relative cutoff `tol · σ_max`.
pub fn numerical_rank(sigma: &[f64], reference: f64, rel_tol: f64) -> usize {
    let cut = rel_tol * reference;
    sigma.iter().filter(|&&s| s > cut).count()
}

/// Orthogonal factor of a QR factorization with `diag(R) ≥ 0`.
pub fn qr_q_positive(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).modulus())
        .fold(0.0, f64::max)
}
