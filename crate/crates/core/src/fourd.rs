//! Fourth-order multi-rank truncation and the patch arrangement of image
//! collections.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{svd, Svd};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;
use crate::transform::{forward4, inverse4, Transform, TransformKind};
use crate::tsvd::{check_gamma, select_by_energy, RANK_TOL};

/// Kept transform-domain triplets of every `(i, j)` face.
#[derive(Debug, Clone)]
pub struct FourDRep<T: Scalar> {
    dims: [usize; 4],
    t_m: Transform<T>,
    t_b: Transform<T>,
    /// Indexed by `i + n·j`.
    u: Vec<DMatrix<T>>,
    sigma: Vec<Vec<f64>>,
    v: Vec<DMatrix<T>>,
    gamma: f64,
    threshold: f64,
    total_energy: f64,
    kept_energy: f64,
    conj_symmetric: bool,
}

fn mirror(i: usize, j: usize, n: usize, q: usize) -> (usize, usize) {
    ((n - i) % n, (q - j) % q)
}

fn real_svd<T: Scalar>(face: &DMatrix<T>) -> Svd<T> {
    let s = svd(&face.map(|x| x.to_c64().re));
    let lift = |x: f64| T::from_c64(Complex64::new(x, 0.0));
    Svd { u: s.u.map(lift), sigma: s.sigma, v: s.v.map(lift) }
}

pub fn tsvdm2_4d<T: Scalar>(a: &Tensor4<T>, t_m: &Transform<T>, t_b: &Transform<T>, gamma: f64) -> Result<FourDRep<T>> {
    check_gamma(gamma)?;
    let [m, p, n, q] = a.dims();
    if t_m.n() != n || t_b.n() != q {
        return Err(Error::TransformMismatch(format!(
            "transforms of size {} and {} for dims {:?}",
            t_m.n(),
            t_b.n(),
            a.dims()
        )));
    }
    if !t_m.is_scaled_unitary() || !t_b.is_scaled_unitary() {
        return Err(Error::InvalidTransform("multi-rank truncation needs scaled-unitary transforms".into()));
    }
    let conj_sym = T::IS_COMPLEX
        && t_m.kind() == TransformKind::DftUnnormalized
        && t_b.kind() == TransformKind::DftUnnormalized
        && a.data().iter().all(|x| x.to_c64().im == 0.0);
    let a_hat = forward4(t_m, t_b, a)?;

    let flat: Vec<(usize, usize)> = (0..q).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
    let canonical = |i: usize, j: usize| {
        let (mi, mj) = mirror(i, j, n, q);
        !conj_sym || (j, i) <= (mj, mi)
    };
    let computed: Vec<Option<Svd<T>>> = flat
        .par_iter()
        .map(|&(i, j)| {
            if !canonical(i, j) {
                return None;
            }
            let face = a_hat.face(i, j);
            Some(if conj_sym && mirror(i, j, n, q) == (i, j) {
                real_svd(&face)
            } else {
                svd(&face)
            })
        })
        .collect();
    let svds: Vec<Svd<T>> = flat
        .iter()
        .map(|&(i, j)| match &computed[i + n * j] {
            Some(s) => s.clone(),
            None => {
                let (mi, mj) = mirror(i, j, n, q);
                let s = computed[mi + n * mj].as_ref().expect("mirror computed");
                Svd {
                    u: s.u.map(|x| x.conjugate()),
                    sigma: s.sigma.clone(),
                    v: s.v.map(|x| x.conjugate()),
                }
            }
        })
        .collect();

    let smax = svds.iter().flat_map(|s| s.sigma.iter().copied()).fold(0.0, f64::max);
    let cut = RANK_TOL * smax;
    let keyed: Vec<(f64, (usize, usize, usize))> = flat
        .iter()
        .zip(&svds)
        .flat_map(|(&(i, j), s)| {
            s.sigma
                .iter()
                .enumerate()
                .map(move |(idx, &x)| (if x > cut { x * x } else { 0.0 }, (j, i, idx)))
        })
        .collect();
    let sel = select_by_energy(&keyed, gamma);

    let mut rep = FourDRep {
        dims: [m, p, n, q],
        t_m: t_m.clone(),
        t_b: t_b.clone(),
        u: Vec::with_capacity(n * q),
        sigma: Vec::with_capacity(n * q),
        v: Vec::with_capacity(n * q),
        gamma,
        threshold: sel.threshold,
        total_energy: svds.iter().flat_map(|s| s.sigma.iter()).map(|x| x * x).sum(),
        kept_energy: 0.0,
        conj_symmetric: conj_sym,
    };
    for s in svds {
        let r = s.sigma.iter().take_while(|&&x| x > cut && x * x >= sel.threshold).count();
        rep.kept_energy += s.sigma[..r].iter().map(|x| x * x).sum::<f64>();
        rep.u.push(s.u.columns(0, r).into_owned());
        rep.v.push(s.v.columns(0, r).into_owned());
        rep.sigma.push(s.sigma[..r].to_vec());
    }
    Ok(rep)
}

impl<T: Scalar> FourDRep<T> {
    /// Rebuilds a representation from stored per-face factors.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dims: [usize; 4],
        t_m: Transform<T>,
        t_b: Transform<T>,
        u: Vec<DMatrix<T>>,
        sigma: Vec<Vec<f64>>,
        v: Vec<DMatrix<T>>,
        gamma: f64,
        total_energy: f64,
        conj_symmetric: bool,
    ) -> Result<Self> {
        let [m, p, n, q] = dims;
        if t_m.n() != n || t_b.n() != q || u.len() != n * q || v.len() != n * q || sigma.len() != n * q {
            return Err(Error::Corrupted("face count does not match dimensions".into()));
        }
        for ((u, v), s) in u.iter().zip(&v).zip(&sigma) {
            if u.nrows() != m || v.nrows() != p || u.ncols() != s.len() || v.ncols() != s.len() {
                return Err(Error::Corrupted("factor shapes do not match dimensions".into()));
            }
        }
        let kept_energy = sigma.iter().flatten().map(|x| x * x).sum();
        let threshold = sigma.iter().flatten().map(|x| x * x).fold(f64::INFINITY, f64::min);
        Ok(Self {
            dims,
            t_m,
            t_b,
            u,
            sigma,
            v,
            gamma,
            threshold,
            total_energy,
            kept_energy,
            conj_symmetric,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn transforms(&self) -> (&Transform<T>, &Transform<T>) {
        (&self.t_m, &self.t_b)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_conj_symmetric(&self) -> bool {
        self.conj_symmetric
    }

    /// Whether face `(i, j)` is stored when conjugate faces are implied:
    /// one face of each conjugate pair, the first in `(j, i)` order.
    pub fn is_canonical_face(&self, i: usize, j: usize) -> bool {
        let [_, _, n, q] = self.dims;
        let (mi, mj) = mirror(i, j, n, q);
        !self.conj_symmetric || (j, i) <= (mj, mi)
    }

    /// Mirror partner of face `(i, j)`.
    pub fn mirror_face(&self, i: usize, j: usize) -> (usize, usize) {
        mirror(i, j, self.dims[2], self.dims[3])
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Kept triplets per face, indexed `i + n·j`.
    pub fn ranks(&self) -> Vec<usize> {
        self.sigma.iter().map(Vec::len).collect()
    }

    pub fn kept_triplets(&self) -> usize {
        self.sigma.iter().map(Vec::len).sum()
    }

    pub fn face_factors(&self, i: usize, j: usize) -> (&DMatrix<T>, &[f64], &DMatrix<T>) {
        let f = i + self.dims[2] * j;
        (&self.u[f], &self.sigma[f], &self.v[f])
    }

    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    pub fn retained_energy(&self) -> f64 {
        if self.total_energy > 0.0 {
            self.kept_energy / self.total_energy
        } else {
            1.0
        }
    }

    /// `Σ discarded σ̂² / |c_M c_B|²`.
    pub fn predicted_error_sq(&self) -> f64 {
        let c = self.t_m.scale() * self.t_b.scale();
        ((self.total_energy - self.kept_energy) / (c * c)).max(0.0)
    }

    /// `(m + p + 1)` scalars per kept triplet.
    pub fn storage_scalars(&self) -> usize {
        (self.dims[0] + self.dims[1] + 1) * self.kept_triplets()
    }

    pub fn reconstruct(&self) -> Result<Tensor4<T>> {
        let [m, p, n, q] = self.dims;
        let faces: Vec<DMatrix<T>> = (0..n * q)
            .into_par_iter()
            .map(|f| {
                let mut us = self.u[f].clone();
                for (c, &s) in self.sigma[f].iter().enumerate() {
                    for x in us.column_mut(c).iter_mut() {
                        *x *= T::from_real(s);
                    }
                }
                if us.ncols() == 0 {
                    DMatrix::zeros(m, p)
                } else {
                    us * self.v[f].adjoint()
                }
            })
            .collect();
        let mut hat = Tensor4::zeros([m, p, n, q]);
        for (f, face) in faces.iter().enumerate() {
            hat.set_face(f % n, f / n, face);
        }
        inverse4(&self.t_m, &self.t_b, &hat)
    }
}

/// Splits each `m₀ × n₀` image into an `x × y` grid of `m × n` patches
/// (`m = m₀/x`, `n = n₀/y`) and stacks them as `m × ℓ × n × xy`.
///
/// Patch `(a, b)` of the grid goes to index `s = a·y + b`, so that
/// `A[i, l, k, s] = image_l[a·m + i, b·n + k]`.
pub fn patchify<T: Scalar>(images: &[DMatrix<T>], x: usize, y: usize) -> Result<Tensor4<T>> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidInput("no images".into()))?;
    let (m0, n0) = first.shape();
    if images.iter().any(|im| im.shape() != (m0, n0)) {
        return Err(Error::DimensionMismatch("images differ in size".into()));
    }
    if x == 0 || y == 0 || m0 % x != 0 || n0 % y != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{m0}×{n0} image does not split into a {x}×{y} patch grid"
        )));
    }
    let (m, n) = (m0 / x, n0 / y);
    Ok(Tensor4::from_fn([m, images.len(), n, x * y], |i, l, k, s| {
        let (a, b) = (s / y, s % y);
        images[l][(a * m + i, b * n + k)]
    }))
}

/// Inverse of [`patchify`].
pub fn unpatchify<T: Scalar>(a4: &Tensor4<T>, x: usize, y: usize, m0: usize, n0: usize) -> Result<Vec<DMatrix<T>>> {
    let [m, l, n, s] = a4.dims();
    if x == 0 || y == 0 || m * x != m0 || n * y != n0 || s != x * y {
        return Err(Error::DimensionMismatch(format!(
            "{:?} is not a {x}×{y} patch grid of {m0}×{n0} images",
            a4.dims()
        )));
    }
    Ok((0..l)
        .map(|li| {
            DMatrix::from_fn(m0, n0, |r, c| {
                let (a, i) = (r / m, r % m);
                let (b, k) = (c / n, c % n);
                a4.get(i, li, k, a * y + b)
            })
        })
        .collect())
}
