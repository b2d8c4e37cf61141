//! Tensor-tensor products under invertible mode-3 transforms (★M), their
//! optimally truncated tensor SVDs, and the compression baselines they are
//! compared against.

pub mod baselines;
pub mod compress;
pub mod container;
pub mod error;
pub mod fourd;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod mprod;
pub mod multiside;
pub mod scalar;
pub mod sweep;
pub mod synthetic;
pub mod tensor;
pub mod transform;
pub mod tsvd;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Domain, Tensor3, Tensor4};
pub use transform::{make_transform, AnyTransform, Transform, TransformKind};
