//! The ★M algebra: facewise products in the transform domain.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::max_abs_diff;
use crate::scalar::Scalar;
use crate::tensor::Tensor3;
use crate::transform::Transform;

/// Facewise product of two transform-domain tensors: `Ĉᵢ = Âᵢ·B̂ᵢ`.
pub fn facewise_product<T: Scalar>(a_hat: &Tensor3<T>, b_hat: &Tensor3<T>) -> Result<Tensor3<T>> {
    let [m, p, n] = a_hat.dims();
    let [p2, r, n2] = b_hat.dims();
    if p != p2 || n != n2 {
        return Err(Error::DimensionMismatch(format!(
            "{:?} ★ {:?}",
            a_hat.dims(),
            b_hat.dims()
        )));
    }
    let faces: Vec<DMatrix<T>> = (0..n)
        .into_par_iter()
        .map(|i| a_hat.face(i) * b_hat.face(i))
        .collect();
    let mut data = Vec::with_capacity(m * r * n);
    for f in &faces {
        data.extend_from_slice(f.as_slice());
    }
    Ok(Tensor3::from_vec([m, r, n], data)?.with_domain(a_hat.domain()))
}

fn check_transform<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>) -> Result<()> {
    if a.n() != t.n() {
        return Err(Error::TransformMismatch(format!(
            "tube length {} vs transform size {}",
            a.n(),
            t.n()
        )));
    }
    Ok(())
}

/// `A ★M B` for `A: m×p×n`, `B: p×r×n`.
pub fn mprod<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>, t: &Transform<T>) -> Result<Tensor3<T>> {
    check_transform(a, t)?;
    check_transform(b, t)?;
    if a.p() != b.m() {
        return Err(Error::DimensionMismatch(format!(
            "inner extents {} and {}",
            a.p(),
            b.m()
        )));
    }
    let c_hat = facewise_product(&t.forward(a)?, &t.forward(b)?)?;
    t.inverse(&c_hat)
}

/// Chained product `A₁ ★ A₂ ★ … ★ Aₖ`, kept in the transform domain until
/// a single inverse at the end.
pub fn mprod_chain<T: Scalar>(factors: &[&Tensor3<T>], t: &Transform<T>) -> Result<Tensor3<T>> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::DimensionMismatch("empty product".into()))?;
    check_transform(first, t)?;
    let mut acc = t.forward(first)?;
    for f in rest {
        check_transform(f, t)?;
        acc = facewise_product(&acc, &t.forward(f)?)?;
    }
    t.inverse(&acc)
}

/// Applies `f` to every transform-domain face and maps back.
fn facewise_map<T: Scalar>(
    a: &Tensor3<T>,
    t: &Transform<T>,
    f: impl Fn(DMatrix<T>) -> DMatrix<T> + Sync,
) -> Result<Tensor3<T>> {
    check_transform(a, t)?;
    let a_hat = t.forward(a)?;
    let faces: Vec<DMatrix<T>> = (0..a.n()).into_par_iter().map(|i| f(a_hat.face(i))).collect();
    t.inverse(&Tensor3::from_faces(&faces)?.with_domain(a_hat.domain()))
}

/// Conjugate transpose under ★M: `(Âᴴ)ᵢ = (Âᵢ)ᴴ`.
pub fn conj_transpose<T: Scalar>(a: &Tensor3<T>, t: &Transform<T>) -> Result<Tensor3<T>> {
    facewise_map(a, t, |f| f.adjoint())
}

/// The `m × m × n` identity: every transform-domain face is `Iₘ`.
pub fn identity_tensor<T: Scalar>(m: usize, t: &Transform<T>) -> Result<Tensor3<T>> {
    let faces = vec![DMatrix::<T>::identity(m, m); t.n()];
    let hat = Tensor3::from_faces(&faces)?;
    t.inverse(&hat)
}

/// Transform-domain tensor with every face equal to `face`.
pub fn replicated_faces<T: Scalar>(face: &DMatrix<T>, n: usize) -> Result<Tensor3<T>> {
    Tensor3::from_faces(&vec![face.clone(); n])
}

/// `Qᴴ★Q = I = Q★Qᴴ`, compared entrywise against the identity tensor.
pub fn is_unitary<T: Scalar>(q: &Tensor3<T>, t: &Transform<T>, tol: f64) -> bool {
    if q.m() != q.p() || q.n() != t.n() {
        return false;
    }
    let (Ok(qh), Ok(id)) = (conj_transpose(q, t), identity_tensor(q.m(), t)) else {
        return false;
    };
    let close = |x: Result<Tensor3<T>>| {
        x.map(|x| {
            x.data()
                .iter()
                .zip(id.data())
                .all(|(&a, &b)| (a - b).modulus() <= tol)
        })
        .unwrap_or(false)
    };
    close(mprod(&qh, q, t)) && close(mprod(q, &qh, t))
}

/// Checks that the lateral slices of `q` (`m × k × n`, `k ≤ m`) are
/// ★M-orthonormal: `Qᴴ★Q = Iₖ`.
pub fn has_orthonormal_slices<T: Scalar>(q: &Tensor3<T>, t: &Transform<T>, tol: f64) -> bool {
    let Ok(q_hat) = t.forward(q) else {
        return false;
    };
    let id = DMatrix::<T>::identity(q.p(), q.p());
    (0..q.n()).all(|i| {
        let f = q_hat.face(i);
        max_abs_diff(&(f.adjoint() * &f), &id) <= tol
    })
}

/// `R[v] = Mᵀ·diag(v̂)·M⁻ᵀ`, the matrix through which the tube `v` acts on
/// squeezed lateral slices: `squeeze(B ★ v) = squeeze(B)·R[v]`.
///
/// The transposes are plain (not conjugate) transposes.
pub fn tube_action_matrix<T: Scalar>(v: &Tensor3<T>, t: &Transform<T>) -> Result<DMatrix<T>> {
    if v.m() != 1 || v.p() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "tube fiber must be 1×1×n, got {:?}",
            v.dims()
        )));
    }
    check_transform(v, t)?;
    let v_hat = t.apply_tube(v.data(), false);
    let mut left = t.matrix().transpose();
    for (j, &s) in v_hat.iter().enumerate() {
        for x in left.column_mut(j).iter_mut() {
            *x *= s;
        }
    }
    Ok(left * t.inverse_matrix().transpose())
}
