use super::{Centerline, Vec3};
use crate::error::{Error, Result};

/// Orthonormal right-handed triad attached to a centerline point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
}

impl Frame {
    /// Builds a frame from a tangent and an approximate normal.
    pub fn from_tangent_normal(t: Vec3, n_hint: Vec3) -> Frame {
        let t = t.normalize();
        let n = (n_hint - t * t.dot(&n_hint)).normalize();
        let b = t.cross(&n);
        Frame { t, n, b }
    }

    /// Largest violation of orthonormality / handedness.
    pub fn orthonormality_error(&self) -> f64 {
        let errs = [
            (self.t.norm() - 1.0).abs(),
            (self.n.norm() - 1.0).abs(),
            (self.b.norm() - 1.0).abs(),
            self.t.dot(&self.n).abs(),
            self.t.dot(&self.b).abs(),
            self.n.dot(&self.b).abs(),
            (1.0 - self.t.cross(&self.n).dot(&self.b)).max(0.0),
        ];
        errs.into_iter().fold(0.0, f64::max)
    }
}

/// Seed normal for a tangent: the global axis least aligned with `t`,
/// projected onto the plane orthogonal to `t`. Ties go to the lowest axis.
pub fn initial_normal(t: &Vec3) -> Vec3 {
    let t = t.normalize();
    let mut axis = 0;
    for k in 1..3 {
        if t[k].abs() < t[axis].abs() {
            axis = k;
        }
    }
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    (e - t * t.dot(&e)).normalize()
}

fn tangents(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                points[1] - points[0]
            } else if i == n - 1 {
                points[n - 1] - points[n - 2]
            } else {
                points[i + 1] - points[i - 1]
            };
            d.normalize()
        })
        .collect()
}

/// Minimal rotation taking unit vector `a` onto unit vector `b`, applied to `v`.
fn rotate_between(a: &Vec3, b: &Vec3, v: &Vec3) -> Vec3 {
    let c = a.cross(b);
    let d = a.dot(b);
    let cv = c.cross(v);
    v + cv + c.cross(&cv) / (1.0 + d)
}

/// Rotation-minimizing frames along the centerline.
///
/// Tangents are central differences (one-sided at the ends); the first normal
/// comes from [`initial_normal`] and is carried along by the minimal rotation
/// between consecutive tangents.
pub fn transport_frames(centerline: &Centerline) -> Result<Vec<Frame>> {
    centerline.validate()?;
    let t = tangents(&centerline.points);
    transport_frames_with_tangents(&t)
}

/// Rotation-minimizing transport along explicitly supplied unit tangents.
pub fn transport_frames_with_tangents(tangents: &[Vec3]) -> Result<Vec<Frame>> {
    if tangents.is_empty() {
        return Err(Error::EmptyInput("tangent list"));
    }
    for (i, w) in tangents.windows(2).enumerate() {
        let dot = w[0].dot(&w[1]);
        if !(dot > -0.999) {
            return Err(Error::FrameTransport { index: i + 1, dot });
        }
    }
    let mut frames = Vec::with_capacity(tangents.len());
    let t0 = tangents[0].normalize();
    frames.push(Frame::from_tangent_normal(t0, initial_normal(&t0)));
    for i in 1..tangents.len() {
        let prev = frames[i - 1];
        let t = tangents[i].normalize();
        let n = rotate_between(&prev.t, &t, &prev.n);
        frames.push(Frame::from_tangent_normal(t, n));
    }
    Ok(frames)
}
