use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{json_error, read_file, write_atomic};
use crate::error::Result;
use crate::geometry::{Centerline, LandmarkSet, Vec3};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CenterlineJson {
    points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radii: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarksJson {
    hinge_points: [[f64; 3]; 3],
    end_curve: Vec<[f64; 3]>,
    #[serde(default)]
    arch_curves: Vec<Vec<[f64; 3]>>,
    centerline: CenterlineJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region_breakpoints: Option<Vec<usize>>,
}

fn pts(v: &[[f64; 3]]) -> Vec<Vec3> {
    v.iter().map(|&p| Vec3::from(p)).collect()
}

fn arr(v: &[Vec3]) -> Vec<[f64; 3]> {
    v.iter().map(|&p| p.into()).collect()
}

pub fn parse_landmarks(path: &Path, text: &[u8]) -> Result<LandmarkSet> {
    let j: LandmarksJson = serde_json::from_slice(text).map_err(|e| json_error(path, e))?;
    let l = LandmarkSet {
        hinge_points: j.hinge_points.map(Vec3::from),
        end_curve: pts(&j.end_curve),
        arch_curves: j.arch_curves.iter().map(|c| pts(c)).collect(),
        centerline: Centerline {
            points: pts(&j.centerline.points),
            radii: j.centerline.radii,
        },
        region_breakpoints: j.region_breakpoints,
    };
    l.validate()?;
    Ok(l)
}

pub fn read_landmarks(path: &Path) -> Result<LandmarkSet> {
    parse_landmarks(path, &read_file(path)?)
}

pub fn landmarks_json(l: &LandmarkSet) -> String {
    let j = LandmarksJson {
        hinge_points: l.hinge_points.map(Into::into),
        end_curve: arr(&l.end_curve),
        arch_curves: l.arch_curves.iter().map(|c| arr(c)).collect(),
        centerline: CenterlineJson {
            points: arr(&l.centerline.points),
            radii: l.centerline.radii.clone(),
        },
        region_breakpoints: l.region_breakpoints.clone(),
    };
    serde_json::to_string_pretty(&j).expect("landmarks serialise") + "\n"
}

pub fn write_landmarks(l: &LandmarkSet, path: &Path) -> Result<()> {
    l.validate()?;
    write_atomic(path, landmarks_json(l).as_bytes())
}
