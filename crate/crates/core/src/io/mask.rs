use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{json_error, read_file, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Binary segmentation volume, x fastest. Voxel `(i, j, k)` is centred at
/// `origin + (i·sx, j·sy, k·sz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMask {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: Vec3,
    pub values: Vec<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    /// Raw byte file, relative to the header's directory.
    data: String,
}

impl VoxelMask {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: Vec3, values: Vec<u8>) -> Result<Self> {
        let m = VoxelMask {
            dims,
            spacing,
            origin,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::CorruptMask(format!(
                "dims {:?} must be at least 2 per axis",
                self.dims
            )));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::CorruptMask(format!(
                "spacing {:?} must be positive",
                self.spacing
            )));
        }
        if !crate::geometry::is_finite(&self.origin) {
            return Err(Error::CorruptMask("origin is not finite".into()));
        }
        let n = self.len();
        if self.values.len() != n {
            return Err(Error::CorruptMask(format!(
                "dims {:?} need {n} bytes, found {}",
                self.dims,
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|&v| v > 1) {
            return Err(Error::CorruptMask(format!(
                "byte {i} has value {} (expected 0 or 1)",
                self.values[i]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        self.values[self.index(i, j, k)]
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                i as f64 * self.spacing[0],
                j as f64 * self.spacing[1],
                k as f64 * self.spacing[2],
            )
    }

    /// Mask of voxels whose centre satisfies `inside`.
    pub fn from_fn(dims: [usize; 3], spacing: [f64; 3], origin: Vec3, inside: impl Fn(Vec3) -> bool) -> Result<Self> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = origin + Vec3::new(i as f64 * spacing[0], j as f64 * spacing[1], k as f64 * spacing[2]);
                    values.push(u8::from(inside(p)));
                }
            }
        }
        VoxelMask::new(dims, spacing, origin, values)
    }
}

fn data_path(header: &Path, data: &str) -> PathBuf {
    header.parent().unwrap_or(Path::new("")).join(data)
}

pub fn read_mask(path: &Path) -> Result<VoxelMask> {
    let text = read_file(path)?;
    let h: MaskHeader = serde_json::from_slice(&text).map_err(|e| json_error(path, e))?;
    let raw = data_path(path, &h.data);
    let values = std::fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    VoxelMask::new(h.dims, h.spacing, Vec3::from(h.origin), values)
}

/// Writes `<path>` (JSON header) and the raw bytes next to it as
/// `<stem>.raw`.
pub fn write_mask(mask: &VoxelMask, path: &Path) -> Result<()> {
    mask.validate()?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("bad mask path {}", path.display())))?;
    let data = format!("{stem}.raw");
    let h = MaskHeader {
        dims: mask.dims,
        spacing: mask.spacing,
        origin: mask.origin.into(),
        data: data.clone(),
    };
    write_atomic(&data_path(path, &data), &mask.values)?;
    let mut text = serde_json::to_vec_pretty(&h).expect("header serialises");
    text.push(b'\n');
    write_atomic(path, &text)
}
