//! Python bindings: tensors, real transforms, the ★M product, t-SVDM and
//! the compression/container pipeline.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mtensor::baselines::{HosvdTruncation, MatrixOrientation, RankSpec};
use mtensor::compress::{self as codec, AnyRep, Method, MethodTag};
use mtensor::container;
use mtensor::io::{self, RawTensor};
use mtensor::metrics::compression_ratio;
use mtensor::multiside::SideSpec;
use mtensor::mprod as mp;
use mtensor::synthetic::{gen_synthetic, SyntheticKind, SyntheticParams};
use mtensor::tsvd::{self, TSvdmFactors};
use mtensor::{make_transform, AnyTransform, Tensor3, Tensor4, TransformKind};

fn err(e: mtensor::Error) -> PyErr {
    match e {
        mtensor::Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for mtensor::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Dense real tensor of order 3 (`m × p × n`) or 4 (`m × p × n × q`).
#[pyclass(name = "Tensor", module = "mtensor")]
struct PyTensor {
    inner: RawTensor,
}

impl PyTensor {
    fn three(&self) -> PyResult<&Tensor3<f64>> {
        match &self.inner {
            RawTensor::Three(t) => Ok(t),
            RawTensor::Four(_) => Err(PyValueError::new_err("expected a third-order tensor")),
        }
    }
}

fn from3(t: Tensor3<f64>) -> PyTensor {
    PyTensor { inner: RawTensor::Three(t) }
}

#[pymethods]
impl PyTensor {
    /// Builds a tensor from nested sequences indexed `[i][j][k]` or
    /// `[i][j][k][l]` (lists or numpy arrays).
    #[new]
    fn new(data: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(v) = data.extract::<Vec<Vec<Vec<Vec<f64>>>>>() {
            let dims = [v.len(), first(&v)?.len(), first(first(&v)?)?.len(), first(first(first(&v)?)?)?.len()];
            let mut t = Tensor4::zeros(dims);
            for (i, a) in v.iter().enumerate() {
                for (j, b) in rect(a, dims[1])?.iter().enumerate() {
                    for (k, c) in rect(b, dims[2])?.iter().enumerate() {
                        for (l, &x) in rect(c, dims[3])?.iter().enumerate() {
                            t.set(i, j, k, l, x);
                        }
                    }
                }
            }
            return Ok(Self { inner: RawTensor::Four(t) });
        }
        let v: Vec<Vec<Vec<f64>>> = data.extract()?;
        let dims = [v.len(), first(&v)?.len(), first(first(&v)?)?.len()];
        let mut t = Tensor3::zeros(dims[0], dims[1], dims[2]);
        for (i, a) in v.iter().enumerate() {
            for (j, b) in rect(a, dims[1])?.iter().enumerate() {
                for (k, &x) in rect(b, dims[2])?.iter().enumerate() {
                    t.set(i, j, k, x);
                }
            }
        }
        Ok(from3(t))
    }

    /// Tensor from a column-major buffer (first index fastest).
    #[staticmethod]
    fn from_flat(dims: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        let inner = match dims[..] {
            [m, p, n] => RawTensor::Three(Tensor3::from_vec([m, p, n], data).py()?),
            [m, p, n, q] => RawTensor::Four(Tensor4::from_vec([m, p, n, q], data).py()?),
            _ => return Err(PyValueError::new_err("dims must have length 3 or 4")),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn zeros(dims: Vec<usize>) -> PyResult<Self> {
        let len = dims.iter().product();
        Self::from_flat(dims, vec![0.0; len])
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims()
    }

    fn flat(&self) -> Vec<f64> {
        match &self.inner {
            RawTensor::Three(t) => t.data().to_vec(),
            RawTensor::Four(t) => t.data().to_vec(),
        }
    }

    fn tolist(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        Ok(match &self.inner {
            RawTensor::Three(t) => {
                let [m, p, n] = t.dims();
                let v: Vec<Vec<Vec<f64>>> =
                    (0..m).map(|i| (0..p).map(|j| (0..n).map(|k| t.get(i, j, k)).collect()).collect()).collect();
                v.into_pyobject(py)?.into_any().unbind()
            }
            RawTensor::Four(t) => {
                let [m, p, n, q] = t.dims();
                let v: Vec<Vec<Vec<Vec<f64>>>> = (0..m)
                    .map(|i| {
                        (0..p).map(|j| (0..n).map(|k| (0..q).map(|l| t.get(i, j, k, l)).collect()).collect()).collect()
                    })
                    .collect();
                v.into_pyobject(py)?.into_any().unbind()
            }
        })
    }

    fn __getitem__(&self, idx: Vec<usize>) -> PyResult<f64> {
        let dims = self.inner.dims();
        if idx.len() != dims.len() || idx.iter().zip(&dims).any(|(i, d)| i >= d) {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("index {idx:?} for dims {dims:?}")));
        }
        Ok(match &self.inner {
            RawTensor::Three(t) => t.get(idx[0], idx[1], idx[2]),
            RawTensor::Four(t) => t.get(idx[0], idx[1], idx[2], idx[3]),
        })
    }

    fn norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    fn distance(&self, other: &PyTensor) -> PyResult<f64> {
        self.inner.distance(&other.inner).py()
    }

    /// `‖self − other‖ / ‖self‖`.
    fn relative_error(&self, other: &PyTensor) -> PyResult<f64> {
        let d = self.distance(other)?;
        let n = self.norm();
        Ok(if n > 0.0 { d / n } else { d })
    }

    fn permute_321(&self) -> PyResult<Self> {
        Ok(from3(self.three()?.permute_321()))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_raw(&self.inner, path).py()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: io::load_raw(path).py()? })
    }

    fn __repr__(&self) -> String {
        format!("Tensor(dims={:?})", self.inner.dims())
    }
}

fn first<T>(v: &[T]) -> PyResult<&T> {
    v.first().ok_or_else(|| PyValueError::new_err("empty dimension"))
}

fn rect<T>(v: &[T], len: usize) -> PyResult<&[T]> {
    if v.len() == len {
        Ok(v)
    } else {
        Err(PyValueError::new_err("ragged nested sequence"))
    }
}

/// Real invertible transform along mode 3.
#[pyclass(name = "Transform", module = "mtensor")]
struct PyTransform {
    inner: mtensor::Transform<f64>,
}

#[pymethods]
impl PyTransform {
    /// `kind` is one of identity, dct, haar, randorth.
    #[new]
    #[pyo3(signature = (kind, n, seed = 0))]
    fn new(kind: &str, n: usize, seed: u64) -> PyResult<Self> {
        match make_transform(TransformKind::parse(kind).py()?, n, seed).py()? {
            AnyTransform::Real(inner) => Ok(Self { inner }),
            AnyTransform::Complex(_) => {
                Err(PyValueError::new_err("complex transforms are only available through compress()"))
            }
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.matrix().nrows()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        let mx = self.inner.matrix();
        (0..mx.nrows()).map(|i| mx.row(i).iter().copied().collect()).collect()
    }

    fn forward(&self, a: &PyTensor) -> PyResult<PyTensor> {
        Ok(from3(self.inner.forward(a.three()?).py()?))
    }

    fn inverse(&self, a: &PyTensor) -> PyResult<PyTensor> {
        Ok(from3(self.inner.inverse(a.three()?).py()?))
    }
}

#[pyfunction]
fn mprod(a: &PyTensor, b: &PyTensor, t: &PyTransform) -> PyResult<PyTensor> {
    Ok(from3(mp::mprod(a.three()?, b.three()?, &t.inner).py()?))
}

#[pyfunction]
fn conj_transpose(a: &PyTensor, t: &PyTransform) -> PyResult<PyTensor> {
    Ok(from3(mp::conj_transpose(a.three()?, &t.inner).py()?))
}

#[pyfunction]
fn identity_tensor(m: usize, t: &PyTransform) -> PyResult<PyTensor> {
    Ok(from3(mp::identity_tensor(m, &t.inner).py()?))
}

/// Full t-SVDM factorization `A = U ★M S ★M Vᴴ`.
#[pyclass(name = "TSvdm", module = "mtensor")]
struct PyTSvdm {
    inner: TSvdmFactors<f64>,
}

#[pymethods]
impl PyTSvdm {
    #[getter]
    fn trank(&self) -> usize {
        self.inner.trank()
    }

    #[getter]
    fn multirank(&self) -> Vec<usize> {
        self.inner.multirank().rho().to_vec()
    }

    fn singular_values(&self, face: usize) -> PyResult<Vec<f64>> {
        if face >= self.inner.dims()[2] {
            return Err(pyo3::exceptions::PyIndexError::new_err("face out of range"));
        }
        Ok(self.inner.face_singular_values(face).to_vec())
    }

    fn u(&self) -> PyTensor {
        from3(self.inner.u())
    }

    fn s(&self) -> PyTensor {
        from3(self.inner.s())
    }

    fn v(&self) -> PyTensor {
        from3(self.inner.v())
    }

    /// Reconstruction, truncated to t-rank `k` when given.
    #[pyo3(signature = (k = None))]
    fn reconstruct(&self, k: Option<usize>) -> PyResult<PyTensor> {
        Ok(from3(match k {
            Some(k) => self.inner.truncate(k).py()?.reconstruct(),
            None => self.inner.reconstruct(),
        }))
    }
}

#[pyfunction]
fn tsvdm(a: &PyTensor, t: &PyTransform) -> PyResult<PyTSvdm> {
    Ok(PyTSvdm { inner: tsvd::tsvdm(a.three()?, &t.inner).py()? })
}

/// Smallest energy level whose multi-rank truncation beats t-rank `k`.
#[pyfunction]
fn dominating_energy(a: &PyTensor, t: &PyTransform, k: usize) -> PyResult<f64> {
    tsvd::dominating_energy(a.three()?, &t.inner, k).py()
}

#[pyfunction]
#[pyo3(signature = (kind, dims, seed = 0, noise = 0.0, rank = None))]
fn gen(kind: &str, dims: [usize; 3], seed: u64, noise: f64, rank: Option<usize>) -> PyResult<PyTensor> {
    let mut params = SyntheticParams { noise, ..SyntheticParams::default() };
    if let Some(r) = rank {
        params.rank = r;
    }
    Ok(from3(gen_synthetic(SyntheticKind::parse(kind).py()?, dims, seed, params).py()?))
}

/// A compressed representation, possibly loaded from a container file.
#[pyclass(name = "Compressed", module = "mtensor")]
struct PyCompressed {
    inner: AnyRep,
    parameter: Option<String>,
}

#[pymethods]
impl PyCompressed {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.tag().name()
    }

    #[getter]
    fn parameter(&self) -> Option<String> {
        self.parameter.clone()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims()
    }

    #[getter]
    fn is_complex(&self) -> bool {
        self.inner.is_complex()
    }

    /// `(floats, integers)` needed to store the representation.
    #[pyo3(signature = (conjsym = false))]
    fn storage(&self, conjsym: bool) -> (usize, usize) {
        let s = self.inner.storage(conjsym);
        (s.floats, s.integers)
    }

    fn reconstruct(&self) -> PyResult<PyTensor> {
        Ok(PyTensor { inner: self.inner.reconstruct().py()? })
    }

    /// Compression ratio and relative error against the original tensor.
    #[pyo3(signature = (original, conjsym = false))]
    fn report<'py>(&self, py: Python<'py>, original: &PyTensor, conjsym: bool) -> PyResult<Bound<'py, PyDict>> {
        let approx = self.inner.reconstruct().py()?;
        let s = self.inner.storage(conjsym);
        let norm = original.inner.frobenius_norm();
        let d = original.inner.distance(&approx).py()?;
        let out = PyDict::new(py);
        out.set_item("method", self.method())?;
        out.set_item("parameter", self.parameter.clone())?;
        out.set_item("cr", compression_ratio(original.inner.len(), s.floats))?;
        out.set_item("re", if norm > 0.0 { d / norm } else { d })?;
        out.set_item("floats", s.floats)?;
        out.set_item("integers", s.integers)?;
        Ok(out)
    }

    #[pyo3(signature = (path, conjsym = false))]
    fn save(&self, path: &str, conjsym: bool) -> PyResult<()> {
        container::save(&self.inner, conjsym, path).py()
    }

    #[pyo3(signature = (conjsym = false))]
    fn to_bytes(&self, conjsym: bool) -> PyResult<Vec<u8>> {
        Ok(container::encode(&self.inner, conjsym).py()?.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(bytes: Vec<u8>) -> PyResult<Self> {
        let c = container::Container::from_bytes(&bytes).py()?;
        Ok(Self { inner: container::decode(&c).py()?, parameter: None })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: container::load(path).py()?, parameter: None })
    }

    fn __repr__(&self) -> String {
        format!("Compressed(method={}, dims={:?})", self.method(), self.dims())
    }
}

#[allow(clippy::too_many_arguments)]
fn build_method(
    method: &str,
    k: Option<usize>,
    k2: Option<usize>,
    q: Option<usize>,
    gamma: Option<f64>,
    triple: Option<[usize; 3]>,
    alpha: f64,
    orientation: &str,
) -> PyResult<Method> {
    let need = |name: &str| PyValueError::new_err(format!("{method} requires {name}"));
    Ok(match MethodTag::parse(method).py()? {
        MethodTag::Tsvdm => Method::Tsvdm { k: k.ok_or_else(|| need("k"))? },
        MethodTag::Tsvdm2 => Method::Tsvdm2 { gamma: gamma.ok_or_else(|| need("gamma"))? },
        MethodTag::Fourd => Method::Fourd { gamma: gamma.ok_or_else(|| need("gamma"))? },
        MethodTag::Matrix => {
            let orientation = match orientation {
                "lateral" => MatrixOrientation::Lateral,
                "horizontal" => MatrixOrientation::Horizontal,
                o => return Err(PyValueError::new_err(format!("unknown orientation {o}"))),
            };
            let spec = match (k, gamma) {
                (Some(k), _) => RankSpec::Rank(k),
                (None, Some(g)) => RankSpec::Energy(g),
                _ => return Err(need("k or gamma")),
            };
            Method::Matrix { spec, orientation }
        }
        MethodTag::Hosvd => Method::Hosvd {
            truncation: match (triple, k) {
                (Some(t), _) => HosvdTruncation::Triple(t),
                (None, Some(k)) => HosvdTruncation::Balanced(k),
                _ => return Err(need("triple or k")),
            },
        },
        MethodTag::Sequential => {
            Method::Sequential { k: k.ok_or_else(|| need("k"))?, q: q.ok_or_else(|| need("q"))? }
        }
        MethodTag::Convex => {
            let spec = match (k, gamma) {
                (Some(k), _) => SideSpec::TRank(k, k2.unwrap_or(k)),
                (None, Some(g)) => SideSpec::Energy(g, g),
                _ => return Err(need("k or gamma")),
            };
            Method::Convex { spec, alpha }
        }
    })
}

/// Compresses `a` with one of tsvdm, tsvdm2, matrix, hosvd, sequential,
/// convex, fourd.
#[pyfunction]
#[pyo3(signature = (
    a, method, transform = "dct", seed = 0, k = None, k2 = None, q = None, gamma = None,
    triple = None, alpha = 0.5, orientation = "lateral"
))]
#[allow(clippy::too_many_arguments)]
fn compress(
    a: &PyTensor,
    method: &str,
    transform: &str,
    seed: u64,
    k: Option<usize>,
    k2: Option<usize>,
    q: Option<usize>,
    gamma: Option<f64>,
    triple: Option<[usize; 3]>,
    alpha: f64,
    orientation: &str,
) -> PyResult<PyCompressed> {
    let m = build_method(method, k, k2, q, gamma, triple, alpha, orientation)?;
    let kind = TransformKind::parse(transform).py()?;
    let rep = codec::compress(&a.inner, &m, kind, seed).py()?;
    Ok(PyCompressed { inner: rep, parameter: Some(m.parameter()) })
}

#[pymodule]
#[pyo3(name = "mtensor")]
fn mtensor_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PyTSvdm>()?;
    m.add_class::<PyCompressed>()?;
    m.add_function(wrap_pyfunction!(mprod, m)?)?;
    m.add_function(wrap_pyfunction!(conj_transpose, m)?)?;
    m.add_function(wrap_pyfunction!(identity_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(tsvdm, m)?)?;
    m.add_function(wrap_pyfunction!(dominating_energy, m)?)?;
    m.add_function(wrap_pyfunction!(gen, m)?)?;
    m.add_function(wrap_pyfunction!(compress, m)?)?;
    Ok(())
}
