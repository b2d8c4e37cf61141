//! Raw tensor files and grayscale image stacks.
//!
//! Raw tensor layout: magic `TEN3` or `TEN4`, version (u32), one u32 per
//! dimension, then the entries as little-endian f64 in column-major order.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Tensor4};

pub const RAW_VERSION: u32 = 1;

/// A real tensor of order three or four.
#[derive(Debug, Clone, PartialEq)]
pub enum RawTensor {
    Three(Tensor3<f64>),
    Four(Tensor4<f64>),
}

impl RawTensor {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Self::Three(t) => t.dims().to_vec(),
            Self::Four(t) => t.dims().to_vec(),
        }
    }

    pub fn data(&self) -> &[f64] {
        match self {
            Self::Three(t) => t.data(),
            Self::Four(t) => t.data(),
        }
    }

    pub fn len(&self) -> usize {
        self.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.data().is_empty()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius distance; a fourth-order tensor with trailing dimension 1
    /// compares equal in shape to its third-order counterpart.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (Self::Three(a), Self::Three(b)) => a.distance(b),
            (Self::Four(a), Self::Four(b)) => a.distance(b),
            (Self::Three(a), Self::Four(b)) | (Self::Four(b), Self::Three(a)) => a.distance(&b.squeeze_last()?),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.dims();
        let mut out = Vec::with_capacity(8 + 4 * dims.len() + 8 * self.len());
        out.extend_from_slice(if dims.len() == 3 { b"TEN3" } else { b"TEN4" });
        out.extend_from_slice(&RAW_VERSION.to_le_bytes());
        for d in &dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for x in self.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(if bytes.len() >= 4 && !is_raw_magic(bytes) {
                Error::BadMagic
            } else {
                Error::TruncatedPayload
            });
        }
        let order = match &bytes[..4] {
            b"TEN3" => 3,
            b"TEN4" => 4,
            _ => return Err(Error::BadMagic),
        };
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != RAW_VERSION {
            return Err(Error::VersionMismatch(version));
        }
        let header = 8 + 4 * order;
        if bytes.len() < header {
            return Err(Error::TruncatedPayload);
        }
        let dims: Vec<usize> = bytes[8..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let count: usize = dims.iter().product();
        let body = &bytes[header..];
        if body.len() < 8 * count {
            return Err(Error::TruncatedPayload);
        }
        if body.len() > 8 * count {
            return Err(Error::Corrupted("trailing bytes after payload".into()));
        }
        let data: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(if order == 3 {
            Self::Three(Tensor3::from_vec([dims[0], dims[1], dims[2]], data)?)
        } else {
            Self::Four(Tensor4::from_vec([dims[0], dims[1], dims[2], dims[3]], data)?)
        })
    }
}

fn is_raw_magic(bytes: &[u8]) -> bool {
    bytes.starts_with(b"TEN3") || bytes.starts_with(b"TEN4")
}

pub fn save_raw(t: &RawTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, t.to_bytes())?;
    Ok(())
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<RawTensor> {
    RawTensor::from_bytes(&fs::read(path)?)
}

/// Reads a binary portable graymap (`P5`) as a `height × width` matrix of
/// raw sample values.
pub fn read_pgm(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::InvalidInput("not a binary graymap (P5)".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidInput("malformed graymap header".into()))?;
    }
    // exactly one whitespace byte separates the header from the samples
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidInput("graymap header out of range".into()));
    }
    let wide = maxval > 255;
    let need = width * height * if wide { 2 } else { 1 };
    let body = bytes.get(pos..pos + need).ok_or(Error::TruncatedPayload)?;
    Ok(DMatrix::from_fn(height, width, |r, c| {
        let idx = r * width + c;
        if wide {
            u16::from_be_bytes([body[2 * idx], body[2 * idx + 1]]) as f64
        } else {
            body[idx] as f64
        }
    }))
}

/// Writes `img` as an 8-bit `P5` graymap, clamping to `0..=255`.
pub fn write_pgm(img: &DMatrix<f64>) -> Vec<u8> {
    let (h, w) = img.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            out.push(img[(r, c)].round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// Placement of images in a third-order tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageOrientation {
    /// `m × n` image `l` becomes lateral slice `A[:, l, :]`: `m × ℓ × n`.
    #[default]
    Lateral,
    /// The transposed image becomes the lateral slice: `n × ℓ × m`.
    LateralTransposed,
    /// Image `l` becomes frontal slice `A[:, :, l]`: `m × n × ℓ`.
    Frontal,
}

impl ImageOrientation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lateral" => Ok(Self::Lateral),
            "lateral-transposed" => Ok(Self::LateralTransposed),
            "frontal" => Ok(Self::Frontal),
            _ => Err(Error::InvalidInput(format!("unknown orientation '{s}'"))),
        }
    }
}

/// Stacks equally sized images.
pub fn stack_images(images: &[DMatrix<f64>], orientation: ImageOrientation) -> Result<Tensor3<f64>> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidInput("no images".into()))?;
    let (m, n) = first.shape();
    if images.iter().any(|im| im.shape() != (m, n)) {
        return Err(Error::DimensionMismatch("images differ in size".into()));
    }
    let l = images.len();
    Ok(match orientation {
        ImageOrientation::Lateral => Tensor3::from_fn([m, l, n], |i, j, k| images[j][(i, k)]),
        ImageOrientation::LateralTransposed => Tensor3::from_fn([n, l, m], |i, j, k| images[j][(k, i)]),
        ImageOrientation::Frontal => Tensor3::from_fn([m, n, l], |i, j, k| images[k][(i, j)]),
    })
}

/// Inverse of [`stack_images`].
pub fn unstack_images(a: &Tensor3<f64>, orientation: ImageOrientation) -> Vec<DMatrix<f64>> {
    let [m, p, n] = a.dims();
    match orientation {
        ImageOrientation::Lateral => (0..p).map(|j| DMatrix::from_fn(m, n, |i, k| a.get(i, j, k))).collect(),
        ImageOrientation::LateralTransposed => {
            (0..p).map(|j| DMatrix::from_fn(n, m, |k, i| a.get(i, j, k))).collect()
        }
        ImageOrientation::Frontal => (0..n).map(|k| a.face(k)).collect(),
    }
}

fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Images from a directory of `.pgm` files (lexicographic order) or a
/// single `.pgm` file.
pub fn load_images(path: impl AsRef<Path>) -> Result<Vec<DMatrix<f64>>> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        pgm_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no .pgm images in {}", path.display())));
    }
    files
        .iter()
        .map(|f| {
            read_pgm(&fs::read(f)?).map_err(|e| Error::InvalidInput(format!("{}: {e}", f.display())))
        })
        .collect()
}

/// Loads a third-order tensor from a raw tensor file, a single graymap, or
/// a directory of graymaps.
pub fn load_image_stack(path: impl AsRef<Path>, orientation: ImageOrientation) -> Result<Tensor3<f64>> {
    let path = path.as_ref();
    if path.is_file() {
        let bytes = fs::read(path)?;
        if is_raw_magic(&bytes) {
            return match RawTensor::from_bytes(&bytes)? {
                RawTensor::Three(t) => Ok(t),
                RawTensor::Four(_) => Err(Error::InvalidInput("expected a third-order tensor".into())),
            };
        }
    }
    stack_images(&load_images(path)?, orientation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn raw_round_trip_and_errors() {
        let t = RawTensor::Three(Tensor3::from_fn([2, 3, 4], |i, j, k| (i * 12 + j * 4 + k) as f64 * 0.1));
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..4], b"TEN3");
        assert_eq!(bytes.len(), 8 + 12 + 8 * 24);
        assert_eq!(RawTensor::from_bytes(&bytes).unwrap(), t);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(RawTensor::from_bytes(&bad).unwrap_err().to_string(), "bad magic");
        assert_eq!(
            RawTensor::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err().to_string(),
            "truncated payload"
        );
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(RawTensor::from_bytes(&v), Err(Error::VersionMismatch(9))));

        let t4 = RawTensor::Four(Tensor4::from_fn([2, 1, 2, 3], |i, _, k, l| (i + k * l) as f64));
        assert_eq!(RawTensor::from_bytes(&t4.to_bytes()).unwrap(), t4);
    }

    #[test]
    fn pgm_round_trip() {
        let img = dmatrix![0.0, 10.0, 255.0; 7.0, 8.0, 9.0];
        let bytes = write_pgm(&img);
        assert_eq!(read_pgm(&bytes).unwrap(), img);
        let commented = b"P5\n# note\n2 1\n# more\n65535\n\x01\x00\x00\x02".to_vec();
        assert_eq!(read_pgm(&commented).unwrap(), dmatrix![256.0, 2.0]);
        assert!(matches!(read_pgm(b"P5\n2 2\n255\n\x01"), Err(Error::TruncatedPayload)));
        assert!(read_pgm(b"P2\n1 1\n255\n1").is_err());
    }

    #[test]
    fn stacking_orientations() {
        let imgs = vec![dmatrix![1.0, 2.0; 3.0, 4.0], dmatrix![5.0, 6.0; 7.0, 8.0]];
        let lat = stack_images(&imgs, ImageOrientation::Lateral).unwrap();
        assert_eq!(lat.dims(), [2, 2, 2]);
        for (l, img) in imgs.iter().enumerate() {
            assert_eq!(lat.lateral_range(l..l + 1).squeeze().unwrap(), *img);
        }
        let rect = vec![DMatrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64)];
        let lt = stack_images(&rect, ImageOrientation::LateralTransposed).unwrap();
        assert_eq!(lt.dims(), [3, 1, 2]);
        assert_eq!(lt.squeeze().unwrap(), rect[0].transpose());
        let fr = stack_images(&imgs, ImageOrientation::Frontal).unwrap();
        assert_eq!(fr.face(1), imgs[1]);
        for o in [ImageOrientation::Lateral, ImageOrientation::LateralTransposed, ImageOrientation::Frontal] {
            assert_eq!(unstack_images(&stack_images(&imgs, o).unwrap(), o), imgs);
        }
        let mixed = vec![DMatrix::zeros(2, 2), DMatrix::zeros(3, 2)];
        assert!(matches!(stack_images(&mixed, ImageOrientation::Lateral), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_image_stack(dir.path(), ImageOrientation::Lateral).is_err());
        fs::write(dir.path().join("b.pgm"), write_pgm(&dmatrix![5.0, 6.0; 7.0, 8.0])).unwrap();
        fs::write(dir.path().join("a.pgm"), write_pgm(&dmatrix![1.0, 2.0; 3.0, 4.0])).unwrap();
        fs::write(dir.path().join("notes.txt"), b"skip").unwrap();
        let t = load_image_stack(dir.path(), ImageOrientation::Lateral).unwrap();
        assert_eq!(t.get(0, 0, 1), 2.0);
        assert_eq!(t.get(0, 1, 1), 6.0);
        fs::write(dir.path().join("c.pgm"), write_pgm(&DMatrix::zeros(3, 3))).unwrap();
        assert!(load_image_stack(dir.path(), ImageOrientation::Lateral).is_err());
    }
}
