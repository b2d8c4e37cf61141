//! Seeded synthetic tensors.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::qr_q_positive;
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `A[:, i, :] = U · circ(cᵢ)` with orthonormal `U` (`n × n`, so
    /// `m = n`) and orthonormal columns `cᵢ` (`p ≤ n`).
    CirculantSlices,
    RandomDense,
    /// Sum of `rank` Gaussian outer products.
    LowrankPlusNoise,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 3] = [Self::CirculantSlices, Self::RandomDense, Self::LowrankPlusNoise];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "circulant_slices" | "circulant" => Ok(Self::CirculantSlices),
            "random_dense" | "random" => Ok(Self::RandomDense),
            "lowrank_plus_noise" | "lowrank" => Ok(Self::LowrankPlusNoise),
            _ => Err(Error::InvalidInput(format!("unknown synthetic kind '{s}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::CirculantSlices => "circulant_slices",
            Self::RandomDense => "random_dense",
            Self::LowrankPlusNoise => "lowrank_plus_noise",
        }
    }
}

/// Extra knobs for [`gen_synthetic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Number of terms for [`SyntheticKind::LowrankPlusNoise`].
    pub rank: usize,
    /// Gaussian noise with Frobenius norm `noise · ‖A‖_F` (in expectation).
    pub noise: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self { rank: 2, noise: 0.0 }
    }
}

/// `circ(c)[i, j] = c[(i − j) mod n]`.
pub fn circulant(c: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    DMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n])
}

fn gaussian(rng: &mut ChaCha20Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

pub fn gen_synthetic(kind: SyntheticKind, dims: [usize; 3], seed: u64, params: SyntheticParams) -> Result<Tensor3<f64>> {
    let [m, p, n] = dims;
    if m == 0 || p == 0 || n == 0 {
        return Err(Error::InvalidInput(format!("dims {dims:?} must be positive")));
    }
    if !(params.noise >= 0.0 && params.noise.is_finite()) {
        return Err(Error::InvalidInput(format!("noise level {}", params.noise)));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut a = match kind {
        SyntheticKind::CirculantSlices => {
            if m != n || p > n {
                return Err(Error::InvalidInput(format!(
                    "circulant slices need m = n and p ≤ n, got {dims:?}"
                )));
            }
            let u = qr_q_positive(&gaussian(&mut rng, n, n));
            let c = qr_q_positive(&gaussian(&mut rng, n, n)).columns(0, p).into_owned();
            let mut a = Tensor3::zeros(m, p, n);
            for j in 0..p {
                let c_j: Vec<f64> = c.column(j).iter().copied().collect();
                let slice = &u * circulant(&c_j);
                for i in 0..m {
                    for k in 0..n {
                        a.set(i, j, k, slice[(i, k)]);
                    }
                }
            }
            a
        }
        SyntheticKind::RandomDense => Tensor3::from_fn(dims, |_, _, _| StandardNormal.sample(&mut rng)),
        SyntheticKind::LowrankPlusNoise => {
            if params.rank == 0 {
                return Err(Error::InvalidInput("rank must be positive".into()));
            }
            let (x, y, z) = (
                gaussian(&mut rng, m, params.rank),
                gaussian(&mut rng, p, params.rank),
                gaussian(&mut rng, n, params.rank),
            );
            Tensor3::from_fn(dims, |i, j, k| (0..params.rank).map(|r| x[(i, r)] * y[(j, r)] * z[(k, r)]).sum())
        }
    };
    if params.noise > 0.0 {
        let scale = params.noise * a.frobenius_norm() / (a.len() as f64).sqrt();
        let noise = Tensor3::from_fn(dims, |_, _, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        });
        a = a.add(&noise)?;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circulant_layout() {
        let c = circulant(&[1.0, 2.0, 3.0]);
        assert_eq!(c, nalgebra::dmatrix![1.0, 3.0, 2.0; 2.0, 1.0, 3.0; 3.0, 2.0, 1.0]);
    }

    #[test]
    fn seeded_and_validated() {
        let p = SyntheticParams::default();
        for kind in SyntheticKind::ALL {
            let a = gen_synthetic(kind, [4, 2, 4], 7, p).unwrap();
            assert_eq!(a, gen_synthetic(kind, [4, 2, 4], 7, p).unwrap());
            assert_ne!(a, gen_synthetic(kind, [4, 2, 4], 8, p).unwrap());
            assert_eq!(SyntheticKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(gen_synthetic(SyntheticKind::CirculantSlices, [3, 2, 4], 1, p).is_err());
        assert!(gen_synthetic(SyntheticKind::RandomDense, [0, 2, 4], 1, p).is_err());
    }

    #[test]
    fn circulant_slices_norm() {
        let a = gen_synthetic(SyntheticKind::CirculantSlices, [5, 3, 5], 2, SyntheticParams::default()).unwrap();
        assert!((a.frobenius_norm_sq() - 15.0).abs() < 1e-10);
    }
}

#[cfg(test)]
mod structure_tests {
    use super::*;
    use crate::baselines::{matrix_truncated_svd, MatrixOrientation, RankSpec};
    use crate::transform::Transform;
    use crate::tsvd::tsvdm;

    #[test]
    fn circulant_slices_trank_and_matrix_law() {
        let a = gen_synthetic(SyntheticKind::CirculantSlices, [4, 2, 4], 3, SyntheticParams::default()).unwrap();
        let f = tsvdm(&a.to_complex(), &Transform::dft(4).unwrap()).unwrap();
        assert_eq!(f.trank(), 1);
        let rep = matrix_truncated_svd(&a, MatrixOrientation::Lateral, RankSpec::Rank(1)).unwrap();
        let err = a.distance(&rep.reconstruct().unwrap()).unwrap();
        assert!((err - 2.0).abs() < 1e-10);
    }
}
