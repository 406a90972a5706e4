use crate::error::{Error, Result};
use crate::geometry::{SpatialIndex, Vec3};

/// Both directions of the chamfer distance and its gradient w.r.t. the moving set.
#[derive(Debug, Clone)]
pub struct ChamferEval {
    /// Mean squared distance from each moving point to the fixed set.
    pub forward: f64,
    /// Mean squared distance from each fixed point to the moving set.
    pub backward: f64,
    pub forward_grad: Vec<Vec3>,
    pub backward_grad: Vec<Vec3>,
}

impl ChamferEval {
    pub fn value(&self) -> f64 {
        self.forward + self.backward
    }

    pub fn gradient(&self) -> Vec<Vec3> {
        self.forward_grad
            .iter()
            .zip(&self.backward_grad)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Root mean of the two mean-squared nearest distances (mm).
    pub fn rms(&self) -> f64 {
        (0.5 * self.value()).sqrt()
    }
}

/// Symmetric chamfer distance between `moving` and the fixed cloud in `fixed`.
///
/// Nearest-neighbour assignments are those of the current positions; the
/// gradient treats them as fixed.
pub fn chamfer_eval(moving: &[Vec3], fixed: &SpatialIndex) -> Result<ChamferEval> {
    if moving.is_empty() {
        return Err(Error::EmptyInput("chamfer moving set"));
    }
    if fixed.is_empty() {
        return Err(Error::EmptyInput("chamfer fixed set"));
    }
    let na = moving.len() as f64;
    let nb = fixed.len() as f64;

    let mut forward = 0.0;
    let mut forward_grad = vec![Vec3::zeros(); moving.len()];
    for (i, a) in moving.iter().enumerate() {
        let (j, d2) = fixed.nearest_sq(a);
        forward += d2;
        forward_grad[i] = (a - fixed.points()[j]) * (2.0 / na);
    }
    forward /= na;

    let moving_index = SpatialIndex::new(moving.to_vec())?;
    let mut backward = 0.0;
    let mut backward_grad = vec![Vec3::zeros(); moving.len()];
    for b in fixed.points() {
        let (i, d2) = moving_index.nearest_sq(b);
        backward += d2;
        backward_grad[i] += (moving[i] - b) * (2.0 / nb);
    }
    backward /= nb;

    Ok(ChamferEval {
        forward,
        backward,
        forward_grad,
        backward_grad,
    })
}

/// Chamfer value (mm²) and gradient w.r.t. the points of `a`.
pub fn chamfer_loss(a: &[Vec3], b_index: &SpatialIndex) -> Result<(f64, Vec<Vec3>)> {
    let e = chamfer_eval(a, b_index)?;
    Ok((e.value(), e.gradient()))
}
