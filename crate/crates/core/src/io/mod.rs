//! File formats, isosurfacing and surface sampling.

mod isosurface;
mod landmarks;
mod mask;
mod sample;
mod surface;
mod vtk;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use isosurface::{is_watertight, mask_to_surface};
pub use landmarks::{landmarks_json, parse_landmarks, read_landmarks, write_landmarks};
pub use mask::{read_mask, write_mask, VoxelMask};
pub use sample::sample_surface;
pub use surface::{read_surface, write_surface, write_surface_as, SurfaceFormat};
pub use vtk::{
    hex_vtk_string, quad_vtk_string, read_hex_vtk, read_quad_vtk, write_hex_vtk, write_quad_vtk, VtkData,
    VTK_HEXAHEDRON, VTK_QUAD,
};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::parse(path.display().to_string(), e.line(), e.to_string())
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
