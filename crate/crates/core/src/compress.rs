//! One entry point for every compression method, dispatching between real
//! and complex arithmetic by transform kind.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baselines::{hosvd, matrix_truncated_svd, tr_hosvd, HosvdRep, HosvdTruncation, MatrixOrientation, MatrixSvdRep, RankSpec};
use crate::error::{Error, Result};
use crate::fourd::{tsvdm2_4d, FourDRep};
use crate::io::RawTensor;
use crate::metrics::{compression_ratio, CompressionReport, StorageCount};
use crate::multiside::{convex_rep, sequential_tsvdmb, ConvexRep, SequentialRep, SideRep, SideSpec};
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};
use crate::transform::{make_transform, Transform, TransformKind};
use crate::tsvd::{tsvdm, tsvdm2, TSvdmFactors, TSvdmIIRep};

/// Method identifiers, also the container's method byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum MethodTag {
    Tsvdm = 0,
    Tsvdm2 = 1,
    Matrix = 2,
    Hosvd = 3,
    Sequential = 4,
    Convex = 5,
    Fourd = 6,
}

impl MethodTag {
    pub const ALL: [MethodTag; 7] = [
        Self::Tsvdm,
        Self::Tsvdm2,
        Self::Matrix,
        Self::Hosvd,
        Self::Sequential,
        Self::Convex,
        Self::Fourd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tsvdm => "tsvdm",
            Self::Tsvdm2 => "tsvdm2",
            Self::Matrix => "matrix",
            Self::Hosvd => "hosvd",
            Self::Sequential => "sequential",
            Self::Convex => "convex",
            Self::Fourd => "fourd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }

    pub fn from_u8(b: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| *t as u8 == b)
            .ok_or_else(|| Error::Corrupted(format!("unknown method byte {b}")))
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A method together with its truncation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// t-rank truncation.
    Tsvdm { k: usize },
    /// Multi-rank truncation at energy level `γ`.
    Tsvdm2 { gamma: f64 },
    Matrix { spec: RankSpec, orientation: MatrixOrientation },
    Hosvd { truncation: HosvdTruncation },
    Sequential { k: usize, q: usize },
    Convex { spec: SideSpec, alpha: f64 },
    Fourd { gamma: f64 },
}

impl Method {
    pub fn tag(&self) -> MethodTag {
        match self {
            Self::Tsvdm { .. } => MethodTag::Tsvdm,
            Self::Tsvdm2 { .. } => MethodTag::Tsvdm2,
            Self::Matrix { .. } => MethodTag::Matrix,
            Self::Hosvd { .. } => MethodTag::Hosvd,
            Self::Sequential { .. } => MethodTag::Sequential,
            Self::Convex { .. } => MethodTag::Convex,
            Self::Fourd { .. } => MethodTag::Fourd,
        }
    }

    /// Whether the transform kind matters; the matrix and HOSVD baselines
    /// ignore it.
    pub fn uses_transform(&self) -> bool {
        !matches!(self, Self::Matrix { .. } | Self::Hosvd { .. })
    }

    /// Parameter column of sweep tables and reports.
    pub fn parameter(&self) -> String {
        match self {
            Self::Tsvdm { k } => format!("k={k}"),
            Self::Tsvdm2 { gamma } | Self::Fourd { gamma } => format!("gamma={gamma}"),
            Self::Matrix { spec: RankSpec::Rank(k), .. } => format!("k={k}"),
            Self::Matrix { spec: RankSpec::Energy(g), .. } => format!("gamma={g}"),
            Self::Hosvd { truncation } => match truncation {
                HosvdTruncation::Triple([a, b, c]) => format!("triple={a}x{b}x{c}"),
                HosvdTruncation::Mode2(k) => format!("mode2={k}"),
                HosvdTruncation::Balanced(k) => format!("balanced={k}"),
                HosvdTruncation::Proportional(f) => format!("proportional={f}"),
            },
            Self::Sequential { k, q } => format!("k={k};q={q}"),
            Self::Convex { spec, alpha } => match spec {
                SideSpec::TRank(a, b) => format!("k={a};k2={b};alpha={alpha}"),
                SideSpec::Energy(a, b) => format!("gamma={a};gamma2={b};alpha={alpha}"),
            },
        }
    }
}

/// A compressed representation in one scalar type.
#[derive(Debug, Clone)]
pub enum Rep<T: Scalar> {
    Tsvdm(TSvdmFactors<T>),
    Tsvdm2(TSvdmIIRep<T>),
    Matrix(MatrixSvdRep<T>),
    Hosvd(HosvdRep<T>),
    Sequential(SequentialRep<T>),
    Convex(ConvexRep<T>),
    Fourd(FourDRep<T>),
}

/// Either result of reconstruction.
#[derive(Debug, Clone)]
pub enum Approx<T: Scalar> {
    Three(Tensor3<T>),
    Four(Tensor4<T>),
}

fn side_storage<T: Scalar>(side: &SideRep<T>, conjsym: bool) -> StorageCount {
    match side {
        SideRep::TRank(f) => Rep::Tsvdm(f.clone()).storage(conjsym),
        SideRep::Multi(r) => Rep::Tsvdm2(r.clone()).storage(conjsym),
    }
}

impl<T: Scalar> Rep<T> {
    pub fn tag(&self) -> MethodTag {
        match self {
            Self::Tsvdm(_) => MethodTag::Tsvdm,
            Self::Tsvdm2(_) => MethodTag::Tsvdm2,
            Self::Matrix(_) => MethodTag::Matrix,
            Self::Hosvd(_) => MethodTag::Hosvd,
            Self::Sequential(_) => MethodTag::Sequential,
            Self::Convex(_) => MethodTag::Convex,
            Self::Fourd(_) => MethodTag::Fourd,
        }
    }

    /// Dimensions of the original tensor.
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Self::Tsvdm(f) => f.dims().to_vec(),
            Self::Tsvdm2(r) => r.dims().to_vec(),
            Self::Matrix(r) => r.dims.to_vec(),
            Self::Hosvd(r) => r.dims.to_vec(),
            Self::Sequential(r) => r.dims.to_vec(),
            Self::Convex(r) => r.dims.to_vec(),
            Self::Fourd(r) => r.dims().to_vec(),
        }
    }

    /// Whether conjugate-symmetric storage applies: a real tensor under
    /// the DFT.
    pub fn is_conj_symmetric(&self) -> bool {
        match self {
            Self::Tsvdm(f) => f.is_conj_symmetric(),
            Self::Tsvdm2(r) => r.is_conj_symmetric(),
            Self::Sequential(r) => r.conj_symmetric,
            Self::Convex(r) => {
                let cs = |s: &SideRep<T>| match s {
                    SideRep::TRank(f) => f.is_conj_symmetric(),
                    SideRep::Multi(r) => r.is_conj_symmetric(),
                };
                cs(&r.primary) && cs(&r.permuted)
            }
            Self::Fourd(r) => r.is_conj_symmetric(),
            Self::Matrix(_) | Self::Hosvd(_) => false,
        }
    }

    /// Payload size. With `conjsym` (and a conjugate-symmetric rep), only
    /// the independent half of the transform-domain data counts, or the
    /// real spatial factors for the methods stored spatially.
    pub fn storage(&self, conjsym: bool) -> StorageCount {
        let cs = conjsym && self.is_conj_symmetric();
        let fl = T::FLOATS;
        match self {
            Self::Tsvdm(f) => StorageCount::new(f.storage_scalars(), if cs { 1 } else { fl }, 0),
            Self::Tsvdm2(r) => {
                let n = r.dims()[2];
                if cs {
                    StorageCount::new(r.storage_scalars_conjsym(), 2, n)
                } else {
                    StorageCount::new(r.storage_scalars(), fl, n)
                }
            }
            Self::Matrix(r) => StorageCount::new(r.storage_scalars(), fl, 0),
            Self::Hosvd(r) => StorageCount::new(r.storage_scalars(), fl, 0),
            Self::Sequential(r) => StorageCount::new(r.storage_scalars(), if cs { 1 } else { fl }, 0),
            Self::Convex(r) => side_storage(&r.primary, cs) + side_storage(&r.permuted, cs),
            Self::Fourd(r) => {
                let [m, p, n, q] = r.dims();
                let ranks = r.ranks();
                let kept: usize = (0..n * q)
                    .filter(|&f| !cs || r.is_canonical_face(f % n, f / n))
                    .map(|f| ranks[f])
                    .sum();
                StorageCount::new((m + p + 1) * kept, if cs { 2 } else { fl }, n * q)
            }
        }
    }

    pub fn reconstruct(&self) -> Result<Approx<T>> {
        Ok(match self {
            Self::Tsvdm(f) => Approx::Three(f.reconstruct()),
            Self::Tsvdm2(r) => Approx::Three(r.reconstruct()?),
            Self::Matrix(r) => Approx::Three(r.reconstruct()?),
            Self::Hosvd(r) => Approx::Three(r.reconstruct()?),
            Self::Sequential(r) => Approx::Three(r.reconstruct()?),
            Self::Convex(r) => Approx::Three(r.reconstruct()?),
            Self::Fourd(r) => Approx::Four(r.reconstruct()?),
        })
    }
}

/// A representation in either scalar type.
#[derive(Debug, Clone)]
pub enum AnyRep {
    Real(Rep<f64>),
    Complex(Rep<Complex64>),
}

impl AnyRep {
    pub fn tag(&self) -> MethodTag {
        match self {
            Self::Real(r) => r.tag(),
            Self::Complex(r) => r.tag(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            Self::Real(r) => r.dims(),
            Self::Complex(r) => r.dims(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Self::Complex(_))
    }

    pub fn is_conj_symmetric(&self) -> bool {
        match self {
            Self::Real(r) => r.is_conj_symmetric(),
            Self::Complex(r) => r.is_conj_symmetric(),
        }
    }

    pub fn storage(&self, conjsym: bool) -> StorageCount {
        match self {
            Self::Real(r) => r.storage(conjsym),
            Self::Complex(r) => r.storage(conjsym),
        }
    }

    /// Real reconstruction (the real part, for complex arithmetic).
    pub fn reconstruct(&self) -> Result<RawTensor> {
        Ok(match self {
            Self::Real(r) => match r.reconstruct()? {
                Approx::Three(t) => RawTensor::Three(t),
                Approx::Four(t) => RawTensor::Four(t),
            },
            Self::Complex(r) => match r.reconstruct()? {
                Approx::Three(t) => RawTensor::Three(t.real_part()),
                Approx::Four(t) => RawTensor::Four(t.real_part()),
            },
        })
    }
}

fn compress3<T: Scalar>(a: &Tensor3<T>, method: &Method, make: &dyn Fn(usize) -> Result<Transform<T>>) -> Result<Rep<T>> {
    let n = a.n();
    Ok(match *method {
        Method::Tsvdm { k } => Rep::Tsvdm(tsvdm(a, &make(n)?)?.truncate(k)?),
        Method::Tsvdm2 { gamma } => Rep::Tsvdm2(tsvdm2(a, &make(n)?, gamma)?),
        Method::Matrix { spec, orientation } => Rep::Matrix(matrix_truncated_svd(a, orientation, spec)?),
        Method::Hosvd { truncation } => {
            let triple = truncation.resolve(a.dims())?;
            if triple == a.dims() {
                Rep::Hosvd(hosvd(a)?)
            } else {
                Rep::Hosvd(tr_hosvd(a, triple)?)
            }
        }
        Method::Sequential { k, q } => Rep::Sequential(sequential_tsvdmb(a, &make(n)?, &make(k)?, k, q)?),
        Method::Convex { spec, alpha } => Rep::Convex(convex_rep(a, &make(n)?, &make(a.m())?, spec, alpha)?),
        Method::Fourd { .. } => {
            return Err(Error::InvalidInput("the fourd method needs a fourth-order tensor".into()))
        }
    })
}

fn real_factory(kind: TransformKind, seed: u64) -> impl Fn(usize) -> Result<Transform<f64>> {
    move |n| match make_transform(kind, n, seed)? {
        crate::AnyTransform::Real(t) => Ok(t),
        crate::AnyTransform::Complex(_) => Err(Error::InvalidTransform("complex transform in real path".into())),
    }
}

fn complex_factory(kind: TransformKind, seed: u64) -> impl Fn(usize) -> Result<Transform<Complex64>> {
    move |n| Ok(make_transform(kind, n, seed)?.to_complex())
}

/// Compresses `a` with `method`. Transforms of kind `kind` are built at
/// whatever size each stage needs (seeded by `seed` for random kinds);
/// the DFT switches the whole computation to complex arithmetic.
pub fn compress(a: &RawTensor, method: &Method, kind: TransformKind, seed: u64) -> Result<AnyRep> {
    let complex = kind == TransformKind::DftUnnormalized && method.uses_transform();
    match (a, method) {
        (RawTensor::Four(a4), Method::Fourd { gamma }) => {
            let [_, _, n, q] = a4.dims();
            if complex {
                let f = complex_factory(kind, seed);
                Ok(AnyRep::Complex(Rep::Fourd(tsvdm2_4d(&a4.to_complex(), &f(n)?, &f(q)?, *gamma)?)))
            } else {
                let f = real_factory(kind, seed);
                Ok(AnyRep::Real(Rep::Fourd(tsvdm2_4d(a4, &f(n)?, &f(q)?, *gamma)?)))
            }
        }
        (RawTensor::Four(_), _) => Err(Error::InvalidInput(format!(
            "method {} needs a third-order tensor",
            method.tag()
        ))),
        (RawTensor::Three(a3), Method::Fourd { gamma }) => {
            compress(&RawTensor::Four(Tensor4::from_tensor3(a3)), &Method::Fourd { gamma: *gamma }, kind, seed)
        }
        (RawTensor::Three(a3), _) => {
            if complex {
                Ok(AnyRep::Complex(compress3(&a3.to_complex(), method, &complex_factory(kind, seed))?))
            } else {
                Ok(AnyRep::Real(compress3(a3, method, &real_factory(kind, seed))?))
            }
        }
    }
}

/// Compression ratio and relative error of `rep` against `a`.
pub fn report(a: &RawTensor, method: &Method, rep: &AnyRep, conjsym: bool) -> Result<CompressionReport> {
    let approx = rep.reconstruct()?;
    let payload = rep.storage(conjsym);
    let norm = a.frobenius_norm();
    let diff = a.distance(&approx)?;
    Ok(CompressionReport {
        method: method.tag().name().to_string(),
        parameter: method.parameter(),
        compression_ratio: compression_ratio(a.len(), payload.floats),
        relative_error: if norm > 0.0 { diff / norm } else { diff },
        original_floats: a.len(),
        payload,
    })
}
