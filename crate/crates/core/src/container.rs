//! The `TTCR` compressed container.
//!
//! Layout (little-endian): magic `TTCR`, version `u32`, method byte,
//! section count `u32`, then sections of `tag [u8; 4]`, length `u64`,
//! bytes. The file ends with the first 8 bytes of the SHA-256 of
//! everything before it.
//!
//! Sections: `DIMS` (u32 each), `TDSC` (u32 count, transform
//! descriptors), `META` (JSON), `PAYL` (f64 payload), `INDX` (u64 rank
//! array), `SUB0`/`SUB1` (nested containers of a convex combination).

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{HosvdRep, MatrixOrientation, MatrixSvdRep};
use crate::compress::{AnyRep, MethodTag, Rep};
use crate::error::{Error, Result};
use crate::fourd::FourDRep;
use crate::multiside::{ConvexRep, SequentialRep, SideRep};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;
use crate::transform::{AnyTransform, Transform};
use crate::tsvd::{TSvdmFactors, TSvdmIIRep};

pub const MAGIC: &[u8; 4] = b"TTCR";
pub const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 8;

/// Method-specific metadata, stored as JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub complex: bool,
    /// Only the independent half of conjugate-symmetric data is stored.
    pub conjsym: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<MatrixOrientation>,
    /// All singular values of a matrix baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_error_sq: Option<f64>,
}

/// A parsed container, independent of the scalar type.
#[derive(Debug, Clone)]
pub struct Container {
    pub method: MethodTag,
    pub dims: Vec<usize>,
    pub transforms: Vec<AnyTransform>,
    pub meta: Meta,
    pub payload: Vec<f64>,
    pub index: Vec<u64>,
    pub children: Vec<Container>,
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], body: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(body);
}

fn read_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes(s.try_into().expect("4 bytes")))
        .ok_or(Error::TruncatedPayload)
}

fn read_u64(b: &[u8], at: usize) -> Result<u64> {
    b.get(at..at + 8)
        .map(|s| u64::from_le_bytes(s.try_into().expect("8 bytes")))
        .ok_or(Error::TruncatedPayload)
}

fn checksum(bytes: &[u8]) -> [u8; CHECKSUM_LEN] {
    let d = Sha256::digest(bytes);
    d[..CHECKSUM_LEN].try_into().expect("digest is 32 bytes")
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.method as u8);
        let count = 4 + usize::from(!self.index.is_empty()) + self.children.len();
        out.extend_from_slice(&(count as u32).to_le_bytes());

        let dims: Vec<u8> = self.dims.iter().flat_map(|&d| (d as u32).to_le_bytes()).collect();
        section(&mut out, b"DIMS", &dims);
        let mut tdsc = (self.transforms.len() as u32).to_le_bytes().to_vec();
        for t in &self.transforms {
            t.encode_descriptor(&mut tdsc);
        }
        section(&mut out, b"TDSC", &tdsc);
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        section(&mut out, b"META", &meta);
        let payl: Vec<u8> = self.payload.iter().flat_map(|x| x.to_le_bytes()).collect();
        section(&mut out, b"PAYL", &payl);
        if !self.index.is_empty() {
            let indx: Vec<u8> = self.index.iter().flat_map(|x| x.to_le_bytes()).collect();
            section(&mut out, b"INDX", &indx);
        }
        for (c, tag) in self.children.iter().zip([b"SUB0", b"SUB1"]) {
            section(&mut out, tag, &c.to_bytes());
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(if MAGIC.starts_with(bytes) { Error::TruncatedPayload } else { Error::BadMagic });
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = read_u32(bytes, 4)?;
        if version != VERSION {
            return Err(Error::VersionMismatch(version));
        }
        let method_byte = *bytes.get(8).ok_or(Error::TruncatedPayload)?;
        let count = read_u32(bytes, 9)? as usize;
        let mut at = 13;
        let mut sections: Vec<([u8; 4], &[u8])> = Vec::with_capacity(count);
        for _ in 0..count {
            let tag: [u8; 4] = bytes.get(at..at + 4).ok_or(Error::TruncatedPayload)?.try_into().expect("4 bytes");
            let len = usize::try_from(read_u64(bytes, at + 4)?).map_err(|_| Error::TruncatedPayload)?;
            let start = at + 12;
            let end = start.checked_add(len).ok_or(Error::TruncatedPayload)?;
            let body = bytes.get(start..end).ok_or(Error::TruncatedPayload)?;
            sections.push((tag, body));
            at = end;
        }
        if bytes.len() < at + CHECKSUM_LEN {
            return Err(Error::TruncatedPayload);
        }
        if bytes.len() > at + CHECKSUM_LEN {
            return Err(Error::Corrupted("trailing bytes after checksum".into()));
        }
        if checksum(&bytes[..at]) != bytes[at..] {
            return Err(Error::Checksum);
        }

        let method = MethodTag::from_u8(method_byte)?;
        let find = |tag: &[u8; 4]| sections.iter().find(|(t, _)| t == tag).map(|(_, b)| *b);
        let need = |tag: &[u8; 4]| {
            find(tag).ok_or_else(|| Error::Corrupted(format!("missing section {}", String::from_utf8_lossy(tag))))
        };

        let dims_b = need(b"DIMS")?;
        if dims_b.len() % 4 != 0 {
            return Err(Error::Corrupted("DIMS length".into()));
        }
        let dims = dims_b
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
            .collect();

        let tdsc = need(b"TDSC")?;
        let nt = read_u32(tdsc, 0)? as usize;
        let mut transforms = Vec::with_capacity(nt);
        let mut off = 4;
        for _ in 0..nt {
            let (t, used) = AnyTransform::decode_descriptor(&tdsc[off..])?;
            transforms.push(t);
            off += used;
        }
        if off != tdsc.len() {
            return Err(Error::Corrupted("TDSC length".into()));
        }

        let meta: Meta = serde_json::from_slice(need(b"META")?)
            .map_err(|e| Error::Corrupted(format!("metadata: {e}")))?;

        let payl = need(b"PAYL")?;
        if payl.len() % 8 != 0 {
            return Err(Error::TruncatedPayload);
        }
        let payload = payl.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();

        let index = match find(b"INDX") {
            Some(b) if b.len() % 8 != 0 => return Err(Error::Corrupted("INDX length".into())),
            Some(b) => b.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect(),
            None => Vec::new(),
        };

        let mut children = Vec::new();
        for tag in [b"SUB0", b"SUB1"] {
            if let Some(b) = find(tag) {
                children.push(Container::from_bytes(b)?);
            }
        }
        Ok(Self { method, dims, transforms, meta, payload, index, children })
    }

    /// Float count of the payload, including nested containers.
    pub fn payload_floats(&self) -> usize {
        self.payload.len() + self.children.iter().map(Container::payload_floats).sum::<usize>()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Scalar types that can be rebuilt from a container.
trait Codec: Scalar {
    fn transform(t: &AnyTransform) -> Result<Transform<Self>>;
    fn wrap(rep: Rep<Self>) -> AnyRep;
}

impl Codec for f64 {
    fn transform(t: &AnyTransform) -> Result<Transform<f64>> {
        match t {
            AnyTransform::Real(t) => Ok(t.clone()),
            AnyTransform::Complex(_) => Err(Error::Corrupted("complex transform in a real container".into())),
        }
    }
    fn wrap(rep: Rep<f64>) -> AnyRep {
        AnyRep::Real(rep)
    }
}

impl Codec for Complex64 {
    fn transform(t: &AnyTransform) -> Result<Transform<Complex64>> {
        Ok(t.to_complex())
    }
    fn wrap(rep: Rep<Complex64>) -> AnyRep {
        AnyRep::Complex(rep)
    }
}

/// Payload writer; `real` stores only real parts.
struct Writer {
    out: Vec<f64>,
}

impl Writer {
    fn scalars<T: Scalar>(&mut self, xs: impl IntoIterator<Item = T>, real: bool) {
        for x in xs {
            if real {
                self.out.push(x.to_c64().re);
            } else {
                x.push_floats(&mut self.out);
            }
        }
    }

    fn mat<T: Scalar>(&mut self, m: &DMatrix<T>, real: bool) {
        self.scalars(m.iter().copied(), real);
    }
}

struct Reader<'a> {
    src: &'a [f64],
    at: usize,
}

impl Reader<'_> {
    fn scalars<T: Scalar>(&mut self, count: usize, real: bool) -> Result<Vec<T>> {
        let per = if real { 1 } else { T::FLOATS };
        let end = self.at + count * per;
        let s = self.src.get(self.at..end).ok_or(Error::TruncatedPayload)?;
        self.at = end;
        Ok(if real {
            s.iter().map(|&x| T::from_c64(Complex64::new(x, 0.0))).collect()
        } else {
            s.chunks_exact(per).map(T::read_floats).collect()
        })
    }

    fn mat<T: Scalar>(&mut self, r: usize, c: usize, real: bool) -> Result<DMatrix<T>> {
        Ok(DMatrix::from_vec(r, c, self.scalars(r * c, real)?))
    }

    fn tensor<T: Scalar>(&mut self, dims: [usize; 3], real: bool) -> Result<Tensor3<T>> {
        Tensor3::from_vec(dims, self.scalars(dims.iter().product(), real)?)
    }

    fn finish(&self) -> Result<()> {
        if self.at != self.src.len() {
            return Err(Error::Corrupted("payload longer than the representation".into()));
        }
        Ok(())
    }
}

fn dims3(c: &Container) -> Result<[usize; 3]> {
    c.dims.as_slice().try_into().map_err(|_| Error::Corrupted("expected three dimensions".into()))
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Corrupted(format!("missing metadata field {what}")))
}

fn transform_at<T: Codec>(c: &Container, i: usize) -> Result<Transform<T>> {
    T::transform(c.transforms.get(i).ok_or_else(|| Error::Corrupted("missing transform descriptor".into()))?)
}

fn conj_mat<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    m.map(|x| x.conjugate())
}

/// Transform-domain faces of a spatial tensor.
fn hat_faces<T: Scalar>(t: &Tensor3<T>, tr: &Transform<T>) -> Result<Vec<DMatrix<T>>> {
    Ok(tr.forward(t)?.faces())
}

fn spatial<T: Scalar>(faces: &[DMatrix<T>], rows: usize, cols: usize, tr: &Transform<T>) -> Result<Tensor3<T>> {
    if rows * cols == 0 {
        return Ok(Tensor3::zeros(rows, cols, faces.len()));
    }
    let hat = Tensor3::from_faces(faces)?;
    tr.inverse(&hat)
}

fn encode_rep<T: Scalar>(rep: &Rep<T>, conjsym: bool) -> Result<Container> {
    let cs = conjsym && rep.is_conj_symmetric();
    let mut meta = Meta { complex: T::IS_COMPLEX, conjsym: cs, ..Meta::default() };
    let mut w = Writer { out: Vec::new() };
    let mut transforms: Vec<AnyTransform> = Vec::new();
    let mut index = Vec::new();
    let mut children = Vec::new();
    let any = |t: &Transform<T>| -> AnyTransform {
        let mut b = Vec::new();
        t.encode_descriptor(&mut b);
        AnyTransform::decode_descriptor(&b).expect("own descriptor decodes").0
    };
    match rep {
        Rep::Tsvdm(f) => {
            let [m, p, _] = f.dims();
            let k = f.k();
            transforms.push(any(f.transform()));
            meta.k = Some(k);
            let g_hat = f.g_hat_faces();
            if cs {
                w.scalars(f.u().data().iter().copied(), true);
                w.scalars(spatial(&g_hat, k, p, f.transform())?.data().iter().copied(), true);
            } else {
                for (i, g) in g_hat.iter().enumerate() {
                    debug_assert_eq!(f.u_hat_face(i).shape(), (m, k));
                    w.mat(f.u_hat_face(i), false);
                    w.mat(g, false);
                }
            }
        }
        Rep::Tsvdm2(r) => {
            let n = r.dims()[2];
            transforms.push(any(r.transform()));
            meta.gamma = Some(r.gamma());
            meta.total_energy = Some(r.total_energy());
            meta.original_norm = Some(r.original_norm());
            index = r.multirank().rho().iter().map(|&x| x as u64).collect();
            let stored = if cs { n / 2 + 1 } else { n };
            for i in 0..stored {
                w.mat(&r.u_faces()[i], false);
                w.mat(&r.g_faces()[i], false);
            }
        }
        Rep::Matrix(r) => {
            meta.k = Some(r.k());
            meta.orientation = Some(r.orientation);
            meta.sigma = Some(r.sigma.clone());
            w.mat(&r.basis, false);
            w.mat(&r.coeffs, false);
        }
        Rep::Hosvd(r) => {
            meta.triple = Some(r.triple());
            w.scalars(r.core.data().iter().copied(), false);
            w.mat(&r.q, false);
            w.mat(&r.w, false);
            w.mat(&r.z, false);
        }
        Rep::Sequential(r) => {
            transforms.push(any(&r.t_m));
            transforms.push(any(&r.t_b));
            meta.k = Some(r.k);
            meta.q = Some(r.q);
            meta.predicted_error_sq = Some(r.predicted_error_sq);
            for t in [&r.g, &r.u_k, &r.w_q] {
                w.scalars(t.data().iter().copied(), cs);
            }
        }
        Rep::Convex(r) => {
            meta.alpha = Some(r.alpha);
            for side in [&r.primary, &r.permuted] {
                let child = match side {
                    SideRep::TRank(f) => Rep::Tsvdm(f.clone()),
                    SideRep::Multi(s) => Rep::Tsvdm2(s.clone()),
                };
                children.push(encode_rep(&child, conjsym)?);
            }
        }
        Rep::Fourd(r) => {
            let [_, _, n, q] = r.dims();
            let (tm, tb) = r.transforms();
            transforms.push(any(tm));
            transforms.push(any(tb));
            meta.gamma = Some(r.gamma());
            meta.total_energy = Some(r.total_energy());
            index = r.ranks().iter().map(|&x| x as u64).collect();
            for f in 0..n * q {
                let (i, j) = (f % n, f / n);
                if cs && !r.is_canonical_face(i, j) {
                    continue;
                }
                let (u, s, v) = r.face_factors(i, j);
                w.mat(u, false);
                w.scalars(s.iter().map(|&x| T::from_real(x)), false);
                w.mat(v, false);
            }
        }
    }
    let c = Container {
        method: rep.tag(),
        dims: rep.dims(),
        transforms,
        meta,
        payload: w.out,
        index,
        children,
    };
    let expected = rep.storage(conjsym).floats;
    if c.payload_floats() != expected {
        return Err(Error::Corrupted(format!(
            "payload of {} floats disagrees with the storage formula ({expected})",
            c.payload_floats()
        )));
    }
    Ok(c)
}

fn decode_rep<T: Codec>(c: &Container) -> Result<Rep<T>> {
    let cs = c.meta.conjsym;
    let mut rd = Reader { src: &c.payload, at: 0 };
    let rep = match c.method {
        MethodTag::Tsvdm => {
            let [m, p, n] = dims3(c)?;
            let k = need(c.meta.k, "k")?;
            let t = transform_at::<T>(c, 0)?;
            let (u_hat, g_hat) = if cs {
                let u = rd.tensor::<T>([m, k, n], true)?;
                let g = rd.tensor::<T>([k, p, n], true)?;
                (hat_faces(&u, &t)?, hat_faces(&g, &t)?)
            } else {
                let mut u_hat = Vec::with_capacity(n);
                let mut g_hat = Vec::with_capacity(n);
                for _ in 0..n {
                    u_hat.push(rd.mat(m, k, false)?);
                    g_hat.push(rd.mat(k, p, false)?);
                }
                (u_hat, g_hat)
            };
            let conj_symmetric = T::IS_COMPLEX && t.kind() == crate::TransformKind::DftUnnormalized && (cs || is_mirrored(&u_hat));
            Rep::Tsvdm(TSvdmFactors::from_parts([m, p, n], t, u_hat, g_hat, conj_symmetric)?)
        }
        MethodTag::Tsvdm2 => {
            let [m, p, n] = dims3(c)?;
            let t = transform_at::<T>(c, 0)?;
            if c.index.len() != n {
                return Err(Error::Corrupted("rank array length".into()));
            }
            let rho: Vec<usize> = c.index.iter().map(|&x| x as usize).collect();
            let stored = if cs { n / 2 + 1 } else { n };
            let mut u_faces = Vec::with_capacity(n);
            let mut g_faces = Vec::with_capacity(n);
            for &r in &rho[..stored] {
                u_faces.push(rd.mat(m, r, false)?);
                g_faces.push(rd.mat(r, p, false)?);
            }
            for i in stored..n {
                if rho[i] != rho[n - i] {
                    return Err(Error::Corrupted("rank array is not conjugate symmetric".into()));
                }
                u_faces.push(conj_mat(&u_faces[n - i]));
                g_faces.push(conj_mat(&g_faces[n - i]));
            }
            let conj_symmetric = T::IS_COMPLEX && t.kind() == crate::TransformKind::DftUnnormalized && (cs || is_mirrored(&u_faces));
            Rep::Tsvdm2(TSvdmIIRep::from_parts(
                [m, p, n],
                t,
                u_faces,
                g_faces,
                need(c.meta.gamma, "gamma")?,
                need(c.meta.total_energy, "total_energy")?,
                need(c.meta.original_norm, "original_norm")?,
                conj_symmetric,
            )?)
        }
        MethodTag::Matrix => {
            let dims @ [m, p, n] = dims3(c)?;
            let k = need(c.meta.k, "k")?;
            let orientation = need(c.meta.orientation, "orientation")?;
            let (rows, cols) = match orientation {
                MatrixOrientation::Lateral => (m * n, p),
                MatrixOrientation::Horizontal => (p * n, m),
            };
            let basis = rd.mat(rows, k, false)?;
            let coeffs = rd.mat(k, cols, false)?;
            let sigma = c.meta.sigma.clone().ok_or_else(|| Error::Corrupted("missing singular values".into()))?;
            Rep::Matrix(MatrixSvdRep { basis, coeffs, dims, orientation, sigma })
        }
        MethodTag::Hosvd => {
            let dims @ [m, p, n] = dims3(c)?;
            let [k1, k2, k3] = need(c.meta.triple, "triple")?;
            let core = rd.tensor([k1, k2, k3], false)?;
            let q = rd.mat(m, k1, false)?;
            let w = rd.mat(p, k2, false)?;
            let z = rd.mat(n, k3, false)?;
            Rep::Hosvd(HosvdRep { core, q, w, z, dims })
        }
        MethodTag::Sequential => {
            let dims @ [m, p, n] = dims3(c)?;
            let (k, q) = (need(c.meta.k, "k")?, need(c.meta.q, "q")?);
            let g = rd.tensor([q, p, k], cs)?;
            let u_k = rd.tensor([m, k, n], cs)?;
            let w_q = rd.tensor([n, q, k], cs)?;
            let t_m = transform_at::<T>(c, 0)?;
            let t_b = transform_at::<T>(c, 1)?;
            let conj_symmetric = T::IS_COMPLEX && t_m.kind() == crate::TransformKind::DftUnnormalized
                && t_b.kind() == crate::TransformKind::DftUnnormalized
                && [&g, &u_k, &w_q].iter().all(|t| t.max_imag() == 0.0);
            Rep::Sequential(SequentialRep {
                g,
                u_k,
                w_q,
                t_m,
                t_b,
                k,
                q,
                dims,
                predicted_error_sq: need(c.meta.predicted_error_sq, "predicted_error_sq")?,
                conj_symmetric,
            })
        }
        MethodTag::Convex => {
            let dims = dims3(c)?;
            if c.children.len() != 2 {
                return Err(Error::Corrupted("convex container needs two children".into()));
            }
            let side = |child: &Container| -> Result<SideRep<T>> {
                match decode_rep::<T>(child)? {
                    Rep::Tsvdm(f) => Ok(SideRep::TRank(f)),
                    Rep::Tsvdm2(r) => Ok(SideRep::Multi(r)),
                    _ => Err(Error::Corrupted("convex children must be t-SVDM representations".into())),
                }
            };
            Rep::Convex(ConvexRep {
                alpha: need(c.meta.alpha, "alpha")?,
                primary: side(&c.children[0])?,
                permuted: side(&c.children[1])?,
                dims,
            })
        }
        MethodTag::Fourd => {
            let dims: [usize; 4] =
                c.dims.as_slice().try_into().map_err(|_| Error::Corrupted("expected four dimensions".into()))?;
            let [m, p, n, q] = dims;
            let t_m = transform_at::<T>(c, 0)?;
            let t_b = transform_at::<T>(c, 1)?;
            if c.index.len() != n * q {
                return Err(Error::Corrupted("rank array length".into()));
            }
            let canonical = |i: usize, j: usize| {
                let (mi, mj) = ((n - i) % n, (q - j) % q);
                !cs || (j, i) <= (mj, mi)
            };
            let mut faces: Vec<Option<(DMatrix<T>, Vec<f64>, DMatrix<T>)>> = vec![None; n * q];
            for (f, slot) in faces.iter_mut().enumerate() {
                if !canonical(f % n, f / n) {
                    continue;
                }
                let r = c.index[f] as usize;
                let u = rd.mat(m, r, false)?;
                let s = rd.scalars::<T>(r, false)?.into_iter().map(|x| x.to_c64().re).collect();
                let v = rd.mat(p, r, false)?;
                *slot = Some((u, s, v));
            }
            for f in 0..n * q {
                if faces[f].is_none() {
                    let (i, j) = (f % n, f / n);
                    let g = (n - i) % n + n * ((q - j) % q);
                    let (u, s, v) = faces[g].clone().ok_or_else(|| Error::Corrupted("missing mirror face".into()))?;
                    if c.index[f] as usize != s.len() {
                        return Err(Error::Corrupted("rank array is not conjugate symmetric".into()));
                    }
                    faces[f] = Some((conj_mat(&u), s, conj_mat(&v)));
                }
            }
            let (mut us, mut ss, mut vs) = (Vec::new(), Vec::new(), Vec::new());
            for (u, s, v) in faces.into_iter().flatten() {
                us.push(u);
                ss.push(s);
                vs.push(v);
            }
            let conj_symmetric = T::IS_COMPLEX
                && t_m.kind() == crate::TransformKind::DftUnnormalized
                && t_b.kind() == crate::TransformKind::DftUnnormalized
                && (cs || mirrored4(&us, n, q));
            Rep::Fourd(FourDRep::from_parts(
                dims,
                t_m,
                t_b,
                us,
                ss,
                vs,
                need(c.meta.gamma, "gamma")?,
                need(c.meta.total_energy, "total_energy")?,
                conj_symmetric,
            )?)
        }
    };
    rd.finish()?;
    if rep.storage(cs).floats != c.payload_floats() {
        return Err(Error::Corrupted("payload size disagrees with the storage formula".into()));
    }
    Ok(rep)
}

fn close<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> bool {
    a.shape() == b.shape() && (a - b).norm() <= 1e-9 * a.norm().max(1.0)
}

/// Faces `n − i` are conjugates of faces `i`.
fn is_mirrored<T: Scalar>(faces: &[DMatrix<T>]) -> bool {
    let n = faces.len();
    (1..n).all(|i| close(&faces[n - i], &conj_mat(&faces[i])))
}

fn mirrored4<T: Scalar>(faces: &[DMatrix<T>], n: usize, q: usize) -> bool {
    (0..n * q).all(|f| {
        let (i, j) = (f % n, f / n);
        close(&faces[(n - i) % n + n * ((q - j) % q)], &conj_mat(&faces[f]))
    })
}

/// Builds a container. With `conjsym`, conjugate-symmetric
/// representations store only their independent half.
pub fn encode(rep: &AnyRep, conjsym: bool) -> Result<Container> {
    match rep {
        AnyRep::Real(r) => encode_rep(r, conjsym),
        AnyRep::Complex(r) => encode_rep(r, conjsym),
    }
}

pub fn decode(c: &Container) -> Result<AnyRep> {
    if c.meta.complex {
        Ok(Complex64::wrap(decode_rep::<Complex64>(c)?))
    } else {
        Ok(f64::wrap(decode_rep::<f64>(c)?))
    }
}

pub fn save(rep: &AnyRep, conjsym: bool, path: impl AsRef<Path>) -> Result<()> {
    encode(rep, conjsym)?.save(path)
}

pub fn load(path: impl AsRef<Path>) -> Result<AnyRep> {
    decode(&Container::load(path)?)
}
