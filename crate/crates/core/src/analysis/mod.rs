//! Anatomical regions along the centerline and stress statistics per region.

mod cohort;

pub use cohort::{cohort_table, CohortSummary, Group, GroupSummary, MeanStd, PatientStats};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, Centerline, SpatialIndex, Vec3};
use crate::solidify::HexMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Root,
    Ascending,
    Arch,
    Descending,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Root, Region::Ascending, Region::Arch, Region::Descending];

    pub fn name(self) -> &'static str {
        match self {
            Region::Root => "root",
            Region::Ascending => "ascending",
            Region::Arch => "arch",
            Region::Descending => "descending",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Region of centerline index `k` given `[root|asc, asc|arch, arch|desc]`.
    pub fn of_index(k: usize, breakpoints: &[usize; 3]) -> Region {
        match breakpoints.iter().position(|&b| k < b) {
            Some(0) => Region::Root,
            Some(1) => Region::Ascending,
            Some(2) => Region::Arch,
            _ => Region::Descending,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub breakpoints: [usize; 3],
    pub labels: Vec<Region>,
}

impl RegionPartition {
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for r in &self.labels {
            c[r.index()] += 1;
        }
        c
    }
}

pub fn validate_breakpoints(b: &[usize], n_centerline: usize) -> Result<[usize; 3]> {
    let ok = b.len() == 3 && b[0] >= 1 && b[0] < b[1] && b[1] < b[2] && b[2] + 2 <= n_centerline;
    if ok {
        Ok([b[0], b[1], b[2]])
    } else {
        Err(Error::InvalidBreakpoints(b.to_vec()))
    }
}

/// Labels each element by the centerline index nearest its centroid (lowest
/// index on ties).
pub fn assign_regions(mesh: &HexMesh, centerline: &Centerline, breakpoints: &[usize]) -> Result<RegionPartition> {
    let breakpoints = validate_breakpoints(breakpoints, centerline.points.len())?;
    let index = SpatialIndex::new(centerline.points.clone())?;
    let labels = (0..mesh.hexes.len())
        .map(|e| {
            let c = centroid(&mesh.corners(e));
            Region::of_index(index.nearest_sq(&c).0, &breakpoints)
        })
        .collect();
    Ok(RegionPartition { breakpoints, labels })
}

/// Breakpoints when none are given: root ends at 10% of the centerline; the
/// arch spans the centerline indices nearest the arch-curve centroids, padded
/// by 5. Without arch curves the arch covers 40%–70%.
pub fn default_breakpoints(centerline: &[Vec3], arch_curves: &[Vec<Vec3>]) -> Result<[usize; 3]> {
    let n = centerline.len();
    if n < 5 {
        return Err(Error::invalid("centerline too short for four regions"));
    }
    let frac = |f: f64| (f * n as f64).round() as usize;
    let b0 = frac(0.1).max(1);
    let (lo, hi) = if arch_curves.is_empty() {
        (frac(0.4), frac(0.7))
    } else {
        let index = SpatialIndex::new(centerline.to_vec())?;
        let near: Vec<usize> = arch_curves.iter().map(|c| index.nearest_sq(&centroid(c)).0).collect();
        let lo = near.iter().min().unwrap().saturating_sub(5);
        let hi = near.iter().max().unwrap() + 5 + 1;
        (lo, hi)
    };
    // Keep the intervals non-empty and inside the valid range.
    let b2 = hi.clamp(b0 + 2, n - 2);
    let b1 = lo.clamp(b0 + 1, b2 - 1);
    validate_breakpoints(&[b0, b1, b2], n)
}

/// Mean, population standard deviation and peak of a non-empty sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub peak: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Moments> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Moments {
            mean,
            std: var.sqrt(),
            peak,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub region: Region,
    pub count: usize,
    /// Absent for an empty region.
    pub moments: Option<Moments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressStats {
    pub n_elements: usize,
    /// Whole-model peak (kPa).
    pub peak: f64,
    /// In [`Region::ALL`] order.
    pub regions: [RegionStats; 4],
}

impl StressStats {
    pub fn region(&self, r: Region) -> &RegionStats {
        &self.regions[r.index()]
    }
}

/// Per-region statistics of per-element max-abs-principal stresses (kPa).
pub fn region_stats(max_abs_principal: &[f64], partition: &RegionPartition) -> Result<StressStats> {
    if max_abs_principal.len() != partition.labels.len() {
        return Err(Error::invalid(format!(
            "{} stress values for {} labelled elements",
            max_abs_principal.len(),
            partition.labels.len()
        )));
    }
    if max_abs_principal.is_empty() {
        return Err(Error::EmptyInput("stress field"));
    }
    let mut buckets: [Vec<f64>; 4] = Default::default();
    for (s, r) in max_abs_principal.iter().zip(&partition.labels) {
        buckets[r.index()].push(*s);
    }
    let regions = Region::ALL.map(|r| RegionStats {
        region: r,
        count: buckets[r.index()].len(),
        moments: Moments::of(&buckets[r.index()]),
    });
    Ok(StressStats {
        n_elements: max_abs_principal.len(),
        peak: max_abs_principal.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solidify::extrude_to_hex;
    use crate::synthetic::cylinder_mesh;
    use nalgebra::{Rotation3, Translation3};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Unit-spaced tube with its centerline (one point per section).
    fn tube(ns: usize, nr: usize) -> (HexMesh, Centerline) {
        let len = (ns - 1) as f64;
        let h = extrude_to_hex(&cylinder_mesh(10.0, len, ns, nr).unwrap(), 2.0, 2).unwrap();
        let pts = (0..ns).map(|j| Vec3::new(0.0, 0.0, j as f64)).collect();
        (h, Centerline::new(pts, None).unwrap())
    }

    #[test]
    fn counts_follow_interval_lengths() {
        let (h, cl) = tube(320, 12);
        let p = assign_regions(&h, &cl, &[80, 160, 240]).unwrap();
        let per_slab = 12 * 2;
        let c = p.counts();
        // Slab j (between sections j and j+1) has centroid at j + 0.5: the
        // tie between j and j + 1 goes to j.
        assert_eq!(c, [80 * per_slab, 80 * per_slab, 80 * per_slab, 79 * per_slab]);
        assert_eq!(c.iter().sum::<usize>(), h.hexes.len());
    }

    #[test]
    fn degenerate_breakpoints() {
        let (h, cl) = tube(320, 12);
        let c = assign_regions(&h, &cl, &[1, 2, 3]).unwrap().counts();
        assert_eq!(c[1], 24);
        assert_eq!(c[2], 24);
        assert!(c[3] > 300 * 24);
    }

    #[test]
    fn equidistant_goes_to_lower_index() {
        let (h, cl) = tube(5, 8);
        // Element slab 1 is centred on z = 1.5, equidistant from indices 1 and 2.
        let p = assign_regions(&h, &cl, &[1, 2, 3]).unwrap();
        assert_eq!(p.labels[8], Region::Ascending);
        assert_eq!(p.labels[16], Region::Arch);
    }

    #[test]
    fn bad_breakpoints() {
        let (h, cl) = tube(20, 8);
        for b in [vec![3, 3, 5], vec![5, 4, 6], vec![0, 2, 4], vec![2, 5, 19], vec![1, 2]] {
            assert!(matches!(assign_regions(&h, &cl, &b), Err(Error::InvalidBreakpoints(_))));
        }
        assert!(assign_regions(&h, &cl, &[2, 5, 18]).is_ok());
    }

    #[test]
    fn rigid_motion_keeps_labels() {
        let (h, cl) = tube(60, 10);
        // Shifted centerline so no centroid sits on a tie.
        let cl = Centerline::new(cl.points.iter().map(|p| p + Vec3::new(0.0, 0.0, 0.25)).collect(), None).unwrap();
        let p = assign_regions(&h, &cl, &[10, 25, 40]).unwrap();
        let iso = Translation3::new(3.0, -7.0, 11.0) * Rotation3::from_euler_angles(0.3, 1.2, -0.7);
        let mut hm = h.clone();
        for x in &mut hm.nodes {
            *x = iso.transform_point(&(*x).into()).coords;
        }
        let pts = cl
            .points
            .iter()
            .map(|x| iso.transform_point(&(*x).into()).coords)
            .collect();
        let q = assign_regions(&hm, &Centerline::new(pts, None).unwrap(), &[10, 25, 40]).unwrap();
        assert_eq!(p.labels, q.labels);
    }

    #[test]
    fn default_breakpoints_rules() {
        let cl: Vec<Vec3> = (0..320).map(|j| Vec3::new(0.0, 0.0, j as f64)).collect();
        assert_eq!(default_breakpoints(&cl, &[]).unwrap(), [32, 128, 224]);
        let ring = |z: f64| {
            (0..8)
                .map(|k| Vec3::new(20.0 + (k as f64).cos(), (k as f64).sin(), z))
                .collect::<Vec<_>>()
        };
        let b = default_breakpoints(&cl, &[ring(150.0), ring(170.0)]).unwrap();
        assert_eq!(b, [32, 145, 176]);
    }

    #[test]
    fn constant_field() {
        let (h, cl) = tube(40, 8);
        let p = assign_regions(&h, &cl, &[5, 15, 30]).unwrap();
        let s = region_stats(&vec![7.5; h.hexes.len()], &p).unwrap();
        assert_eq!(s.peak, 7.5);
        for r in &s.regions {
            let m = r.moments.unwrap();
            assert_eq!((m.mean, m.std, m.peak), (7.5, 0.0, 7.5));
        }
    }

    #[test]
    fn two_point_statistics() {
        let p = RegionPartition {
            breakpoints: [1, 2, 3],
            labels: vec![Region::Arch, Region::Arch, Region::Descending],
        };
        let s = region_stats(&[1.0, 3.0, 10.0], &p).unwrap();
        let arch = s.region(Region::Arch).moments.unwrap();
        assert_eq!((arch.mean, arch.std, arch.peak), (2.0, 1.0, 3.0));
        assert_eq!(s.region(Region::Root).count, 0);
        assert!(s.region(Region::Root).moments.is_none());
        assert_eq!(s.peak, 10.0);
    }

    #[test]
    fn matches_streaming_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 5000;
        let labels: Vec<Region> = (0..n).map(|_| Region::ALL[rng.gen_range(0..4)]).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..300.0)).collect();
        let p = RegionPartition {
            breakpoints: [1, 2, 3],
            labels: labels.clone(),
        };
        let s = region_stats(&values, &p).unwrap();
        for r in Region::ALL {
            // Welford.
            let (mut k, mut mean, mut m2, mut peak) = (0.0, 0.0, 0.0, f64::NEG_INFINITY);
            for (v, l) in values.iter().zip(&labels) {
                if *l == r {
                    k += 1.0;
                    let d = v - mean;
                    mean += d / k;
                    m2 += d * (v - mean);
                    peak = f64::max(peak, *v);
                }
            }
            let m = s.region(r).moments.unwrap();
            assert!((m.mean - mean).abs() <= 1e-9 * mean);
            assert!((m.std - (m2 / k).sqrt()).abs() <= 1e-9 * m.std);
            assert_eq!(m.peak, peak);
        }
        assert!(matches!(region_stats(&values[1..], &p), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #[test]
        fn stats_permutation_invariant(values in proptest::collection::vec(0.0f64..500.0, 1..200), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<Region> = values.iter().map(|_| Region::ALL[rng.gen_range(0..4)]).collect();
            let p = RegionPartition { breakpoints: [1, 2, 3], labels: labels.clone() };
            let a = region_stats(&values, &p).unwrap();
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.shuffle(&mut rng);
            let q = RegionPartition { breakpoints: [1, 2, 3], labels: idx.iter().map(|&i| labels[i]).collect() };
            let v2: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let b = region_stats(&v2, &q).unwrap();
            prop_assert_eq!(a.n_elements, b.n_elements);
            prop_assert_eq!(a.peak, b.peak);
            prop_assert_eq!(a.regions.iter().map(|r| r.count).sum::<usize>(), values.len());
            for (x, y) in a.regions.iter().zip(&b.regions) {
                prop_assert_eq!(x.count, y.count);
                match (x.moments, y.moments) {
                    (Some(m), Some(n)) => {
                        prop_assert!((m.mean - n.mean).abs() <= 1e-9 * m.mean.abs().max(1.0));
                        prop_assert!((m.std - n.std).abs() <= 1e-9 * m.mean.abs().max(1.0));
                        prop_assert_eq!(m.peak, n.peak);
                        prop_assert!(m.peak >= m.mean && m.std >= 0.0);
                    }
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
