use super::Vec3;
use crate::error::{Error, Result};

pub fn polyline_length(poly: &[Vec3]) -> f64 {
    poly.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

fn cumulative_lengths(poly: &[Vec3]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(poly.len());
    let mut s = 0.0;
    acc.push(0.0);
    for w in poly.windows(2) {
        s += (w[1] - w[0]).norm();
        acc.push(s);
    }
    acc
}

/// Locations of `n` arc-length-uniform samples as (segment, fraction) pairs.
fn sample_locations(poly: &[Vec3], n: usize) -> Result<Vec<(usize, f64)>> {
    if n < 2 {
        return Err(Error::invalid(format!("resample count must be >= 2, got {n}")));
    }
    if poly.len() < 2 {
        return Err(Error::DegeneratePolyline);
    }
    let cum = cumulative_lengths(poly);
    let total = *cum.last().unwrap();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegeneratePolyline);
    }
    let last_seg = poly.len() - 2;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        if k == 0 {
            out.push((0, 0.0));
            continue;
        }
        if k == n - 1 {
            out.push((last_seg, 1.0));
            continue;
        }
        let s = total * k as f64 / (n - 1) as f64;
        while seg < last_seg && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 {
            ((s - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push((seg, t));
    }
    Ok(out)
}

/// Resamples `poly` to `n` points equally spaced by arc length along its
/// linear interpolant. The first and last input points are reproduced exactly.
pub fn resample_polyline(poly: &[Vec3], n: usize) -> Result<Vec<Vec3>> {
    let locs = sample_locations(poly, n)?;
    Ok(locs
        .into_iter()
        .map(|(seg, t)| {
            if t == 0.0 {
                poly[seg]
            } else if t == 1.0 {
                poly[seg + 1]
            } else {
                poly[seg] + (poly[seg + 1] - poly[seg]) * t
            }
        })
        .collect())
}

/// Like [`resample_polyline`], also interpolating one scalar per input point.
pub fn resample_with_values(poly: &[Vec3], values: &[f64], n: usize) -> Result<(Vec<Vec3>, Vec<f64>)> {
    if values.len() != poly.len() {
        return Err(Error::invalid("value count does not match polyline length"));
    }
    let locs = sample_locations(poly, n)?;
    let mut pts = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for (seg, t) in locs {
        if t == 0.0 {
            pts.push(poly[seg]);
            vals.push(values[seg]);
        } else if t == 1.0 {
            pts.push(poly[seg + 1]);
            vals.push(values[seg + 1]);
        } else {
            pts.push(poly[seg] + (poly[seg + 1] - poly[seg]) * t);
            vals.push(values[seg] + (values[seg + 1] - values[seg]) * t);
        }
    }
    Ok((pts, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn straight_segment_midpoint() {
        let out = resample_polyline(&[v(0., 0., 0.), v(0., 0., 10.)], 3).unwrap();
        assert_eq!(out, vec![v(0., 0., 0.), v(0., 0., 5.), v(0., 0., 10.)]);
    }

    #[test]
    fn two_samples_are_endpoints() {
        let poly = vec![v(1., 2., 3.), v(4., 0., 1.), v(-2., 7., 0.5), v(3., 3., 3.)];
        let out = resample_polyline(&poly, 2).unwrap();
        assert_eq!(out, vec![poly[0], poly[3]]);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            resample_polyline(&[v(1., 1., 1.)], 4),
            Err(Error::DegeneratePolyline)
        ));
        assert!(matches!(
            resample_polyline(&[v(1., 1., 1.), v(1., 1., 1.), v(1., 1., 1.)], 4),
            Err(Error::DegeneratePolyline)
        ));
    }

    #[test]
    fn quarter_circle_from_coarse_samples() {
        // Five samples of a radius-10 quarter circle. The polyline has four
        // equal chords, so 9 arc-length samples are the vertices and chord
        // midpoints; the exact arc at equal arc length is at angle k*pi/16.
        let r = 10.0;
        let coarse: Vec<Vec3> = (0..5)
            .map(|k| {
                let a = FRAC_PI_2 * k as f64 / 4.0;
                v(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect();
        let out = resample_polyline(&coarse, 9).unwrap();
        // Chord sagitta bounds the deviation of any linear interpolant.
        let sagitta = r * (1.0 - (FRAC_PI_2 / 8.0).cos());
        for (k, p) in out.iter().enumerate() {
            let a = FRAC_PI_2 * k as f64 / 8.0;
            let exact = v(r * a.cos(), r * a.sin(), 0.0);
            let d = (p - exact).norm();
            if k % 2 == 0 {
                assert!(d < 1e-12, "vertex sample {k} off by {d}");
            } else {
                assert!((d - sagitta).abs() < 1e-9, "midpoint sample {k}: {d}");
            }
        }
    }

    #[test]
    fn uniform_polyline_is_a_fixed_point() {
        let poly: Vec<Vec3> = (0..7).map(|k| v(k as f64 * 2.0, 0.0, 0.0)).collect();
        let bent: Vec<Vec3> = poly
            .iter()
            .enumerate()
            .map(|(k, p)| if k > 3 { v(6.0, p.x - 6.0, 0.0) } else { *p })
            .collect();
        let out = resample_polyline(&bent, 7).unwrap();
        for (a, b) in out.iter().zip(&bent) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn values_follow_points() {
        let poly = vec![v(0., 0., 0.), v(0., 0., 4.), v(0., 0., 8.)];
        let (_, r) = resample_with_values(&poly, &[1.0, 3.0, 2.0], 5).unwrap();
        assert_eq!(r, vec![1.0, 2.0, 3.0, 2.5, 2.0]);
    }

    fn collinear_poly() -> impl Strategy<Value = Vec<Vec3>> {
        (
            prop::collection::vec(0.01f64..5.0, 1..20),
            (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        )
            .prop_filter("nonzero direction", |(_, d)| d.0.abs() + d.1.abs() + d.2.abs() > 0.1)
            .prop_map(|(steps, d)| {
                let dir = v(d.0, d.1, d.2).normalize();
                let mut s = 0.0;
                let mut pts = vec![v(1.0, -2.0, 3.0)];
                for st in steps {
                    s += st;
                    pts.push(v(1.0, -2.0, 3.0) + dir * s);
                }
                pts
            })
    }

    fn any_poly() -> impl Strategy<Value = Vec<Vec3>> {
        prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 2..30)
            .prop_map(|p| p.into_iter().map(|(x, y, z)| v(x, y, z)).collect::<Vec<_>>())
            .prop_filter("needs length", |p| polyline_length(p) > 1e-3)
    }

    proptest! {
        #[test]
        fn idempotent_on_collinear_input(poly in collinear_poly(), n in 2usize..400) {
            let once = resample_polyline(&poly, n).unwrap();
            let twice = resample_polyline(&once, n).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).norm() <= 1e-9);
            }
        }

        #[test]
        fn length_preserved_on_collinear_input(poly in collinear_poly(), n in 2usize..400) {
            let out = resample_polyline(&poly, n).unwrap();
            let (l0, l1) = (polyline_length(&poly), polyline_length(&out));
            prop_assert!((l0 - l1).abs() <= 1e-9 * l0);
        }

        #[test]
        fn samples_uniform_in_input_arc_length(poly in any_poly(), n in 2usize..200) {
            let out = resample_polyline(&poly, n).unwrap();
            prop_assert_eq!(out.len(), n);
            prop_assert_eq!(out[0], poly[0]);
            prop_assert_eq!(out[n - 1], *poly.last().unwrap());
            // Independent walk: locate arc length s from the start for every sample.
            let total = polyline_length(&poly);
            for (k, p) in out.iter().enumerate() {
                let mut s = total * k as f64 / (n - 1) as f64;
                let mut expected = *poly.last().unwrap();
                for w in poly.windows(2) {
                    let len = (w[1] - w[0]).norm();
                    if s <= len {
                        expected = w[0] + (w[1] - w[0]) * (s / len);
                        break;
                    }
                    s -= len;
                }
                prop_assert!((p - expected).norm() <= 1e-9 * total.max(1.0));
            }
        }
    }
}
