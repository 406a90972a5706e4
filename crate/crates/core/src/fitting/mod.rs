//! Template deformation by chamfer plus mesh-quality minimization.

mod chamfer;
mod quality;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use chamfer::{chamfer_eval, chamfer_loss, ChamferEval};
pub use quality::{inverted_quads, quality_loss, QualityComponents, QualityEval, DEGENERATE_QUAD_AREA};

use crate::error::{Error, Result};
use crate::geometry::{SpatialIndex, Vec3};
use crate::template::QuadMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub chamfer: f64,
    pub area: f64,
    pub flatness: f64,
    pub angle: f64,
    pub edge: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            chamfer: 1.0,
            area: 0.01,
            flatness: 0.1,
            angle: 0.1,
            edge: 0.01,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.chamfer, self.area, self.flatness, self.angle, self.edge];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("loss weights must be finite and non-negative"));
        }
        if self.chamfer <= 0.0 {
            return Err(Error::invalid("chamfer weight must be positive"));
        }
        Ok(())
    }

    pub fn chamfer_only() -> Self {
        LossWeights {
            chamfer: 1.0,
            area: 0.0,
            flatness: 0.0,
            angle: 0.0,
            edge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Adam learning rate (mm).
    pub step_size: f64,
    /// Relative loss change over `stop_window` iterations that counts as stagnation.
    pub stop_rel_change: f64,
    pub stop_window: usize,
    /// mm
    pub target_chamfer_rms: f64,
    pub weights: LossWeights,
    /// Points sampled from the target surface.
    pub sample_count: usize,
    /// Laplacian filtering passes applied to the gradient before each step.
    pub smoothing_passes: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 2000,
            step_size: 0.1,
            stop_rel_change: 1e-6,
            stop_window: 50,
            target_chamfer_rms: 0.5,
            weights: LossWeights::default(),
            sample_count: 100_000,
            smoothing_passes: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size must be positive"));
        }
        if !(self.stop_rel_change > 0.0) || !(self.target_chamfer_rms > 0.0) {
            return Err(Error::invalid("fit tolerances must be positive"));
        }
        if self.stop_window == 0 || self.sample_count == 0 {
            return Err(Error::invalid("stop_window and sample_count must be positive"));
        }
        self.weights.validate()
    }
}

/// One loss evaluation: weighted total plus the unweighted components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub total: f64,
    pub chamfer: f64,
    pub area: f64,
    pub flatness: f64,
    pub angle: f64,
    pub edge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    TargetReached,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations_run: usize,
    pub loss_history: Vec<LossRecord>,
    /// mm
    pub final_chamfer_rms: f64,
    pub terminated_by: Termination,
}

impl FitReport {
    /// Moving averages of the total loss over `window` consecutive iterations.
    pub fn moving_average(&self, window: usize) -> Vec<f64> {
        let totals: Vec<f64> = self.loss_history.iter().map(|r| r.total).collect();
        if window == 0 || totals.len() < window {
            return Vec::new();
        }
        totals
            .windows(window)
            .map(|w| w.iter().sum::<f64>() / window as f64)
            .collect()
    }

    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["iteration", "total", "chamfer", "area", "flatness", "angle", "edge"])
            .map_err(|e| csv_error(path, e))?;
        for (i, r) in self.loss_history.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:e}", r.total),
                format!("{:e}", r.chamfer),
                format!("{:e}", r.area),
                format!("{:e}", r.flatness),
                format!("{:e}", r.angle),
                format!("{:e}", r.edge),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    }
}

/// Template-side chamfer samples: every vertex used by a quad, then every quad centroid.
pub fn template_samples(mesh: &QuadMesh) -> (Vec<usize>, Vec<Vec3>) {
    let mut used = vec![false; mesh.vertices.len()];
    for q in &mesh.quads {
        for &v in q {
            used[v] = true;
        }
    }
    let ids: Vec<usize> = (0..mesh.vertices.len()).filter(|&v| used[v]).collect();
    let mut pts: Vec<Vec3> = ids.iter().map(|&v| mesh.vertices[v]).collect();
    pts.extend((0..mesh.quads.len()).map(|q| mesh.quad_centroid(q)));
    (ids, pts)
}

/// Full loss evaluation with the chamfer split kept for RMS reporting.
pub struct LossEval {
    pub record: LossRecord,
    pub chamfer: ChamferEval,
    pub gradient: Vec<Vec3>,
}

pub fn evaluate_loss(mesh: &QuadMesh, target: &SpatialIndex, w: &LossWeights) -> Result<LossEval> {
    let (ids, samples) = template_samples(mesh);
    let ch = chamfer_eval(&samples, target)?;
    let q = quality_loss(mesh)?;
    let c = q.components;

    let mut grad = vec![Vec3::zeros(); mesh.vertices.len()];
    let sample_grad = ch.gradient();
    for (k, &v) in ids.iter().enumerate() {
        grad[v] += sample_grad[k] * w.chamfer;
    }
    for (qi, quad) in mesh.quads.iter().enumerate() {
        let g = sample_grad[ids.len() + qi] * (0.25 * w.chamfer);
        for &v in quad {
            grad[v] += g;
        }
    }
    for v in 0..grad.len() {
        grad[v] += q.area_grad[v] * w.area
            + q.flatness_grad[v] * w.flatness
            + q.angle_grad[v] * w.angle
            + q.edge_grad[v] * w.edge;
    }

    let total =
        w.chamfer * ch.value() + w.area * c.area + w.flatness * c.flatness + w.angle * c.angle + w.edge * c.edge;
    Ok(LossEval {
        record: LossRecord {
            total,
            chamfer: ch.value(),
            area: c.area,
            flatness: c.flatness,
            angle: c.angle,
            edge: c.edge,
        },
        chamfer: ch,
        gradient: grad,
    })
}

/// Weighted meshing loss and its gradient w.r.t. every mesh vertex.
pub fn total_loss(mesh: &QuadMesh, target: &SpatialIndex, w: &LossWeights) -> Result<(f64, Vec<Vec3>)> {
    let e = evaluate_loss(mesh, target, w)?;
    Ok((e.record.total, e.gradient))
}

/// Edge graph of the live quads, used to low-pass filter the gradient.
struct GradientSmoother {
    neighbours: Vec<Vec<usize>>,
    alpha: f64,
}

impl GradientSmoother {
    fn new(mesh: &QuadMesh) -> Self {
        let mut sets = vec![BTreeSet::new(); mesh.vertices.len()];
        for q in &mesh.quads {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        let neighbours: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let max_degree = neighbours.iter().map(Vec::len).max().unwrap_or(0).max(1);
        GradientSmoother {
            neighbours,
            alpha: 0.5 / max_degree as f64,
        }
    }

    /// `passes` applications of `I − αL` (graph Laplacian `L`). With
    /// `α = 1 / (2 max degree)` the operator is symmetric with spectrum in
    /// [0, 1], so the filtered gradient is still a descent direction.
    fn apply(&self, g: &mut [Vec3], passes: usize) {
        for _ in 0..passes {
            let prev = g.to_vec();
            for (i, nb) in self.neighbours.iter().enumerate() {
                let lap = nb.iter().fold(Vec3::zeros(), |acc, &k| acc + (prev[k] - prev[i]));
                g[i] = prev[i] + lap * self.alpha;
            }
        }
    }
}

/// Adam whose second-moment estimate is shared by all coordinates: the
/// running mean of the squared gradient over the live vertices. Steps stay
/// proportional to each vertex's gradient, so vertices already on the target
/// are not pushed around by amplified noise.
struct Adam {
    lr: f64,
    m: Vec<Vec3>,
    v: f64,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![Vec3::zeros(); n],
            v: 0.0,
            t: 0,
        }
    }

    fn step(&mut self, x: &mut [Vec3], g: &[Vec3], live: &[usize]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mean_sq = live.iter().map(|&i| g[i].norm_squared()).sum::<f64>() / (3 * live.len().max(1)) as f64;
        self.v = self.v * Self::BETA2 + mean_sq * (1.0 - Self::BETA2);
        let scale = self.lr / (c1 * ((self.v / c2).sqrt() + Self::EPS));
        for i in 0..x.len() {
            self.m[i] = self.m[i] * Self::BETA1 + g[i] * (1.0 - Self::BETA1);
            x[i] -= self.m[i] * scale;
        }
    }
}

/// Deforms `template` toward the target cloud; connectivity is left untouched.
///
/// Each iteration evaluates the loss at the current positions, records it,
/// checks the stopping rules, then takes one Adam step along the smoothed
/// gradient. The returned mesh is
/// the one whose loss was recorded last.
pub fn fit_template(template: &QuadMesh, target: &SpatialIndex, cfg: &FitConfig) -> Result<(QuadMesh, FitReport)> {
    cfg.validate()?;
    template.validate()?;
    let mut mesh = template.clone();
    let mut adam = Adam::new(mesh.vertices.len(), cfg.step_size);
    let smoother = GradientSmoother::new(&mesh);
    let live = template_samples(&mesh).0;
    let mut history: Vec<LossRecord> = Vec::new();

    for iter in 0..cfg.max_iters {
        let e = match evaluate_loss(&mesh, target, &cfg.weights) {
            Ok(e) => e,
            // Collapsed quads mid-run mean the step blew the mesh apart.
            Err(Error::DegenerateElement { .. }) if iter > 0 => return Err(Error::Divergence { iteration: iter }),
            Err(err) => return Err(err),
        };
        let finite = e.record.total.is_finite() && e.gradient.iter().all(|g| g.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::Divergence { iteration: iter });
        }
        history.push(e.record);
        let rms = e.chamfer.rms();

        let done = if rms <= cfg.target_chamfer_rms {
            Some(Termination::TargetReached)
        } else if history.len() > cfg.stop_window && {
            let old = history[history.len() - 1 - cfg.stop_window].total;
            (old - e.record.total).abs() <= cfg.stop_rel_change * old.abs()
        } {
            Some(Termination::Converged)
        } else if iter + 1 == cfg.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if let Some(terminated_by) = done {
            let report = FitReport {
                iterations_run: history.len(),
                loss_history: history,
                final_chamfer_rms: rms,
                terminated_by,
            };
            return Ok((mesh, report));
        }
        let mut g = e.gradient;
        smoother.apply(&mut g, cfg.smoothing_passes);
        adam.step(&mut mesh.vertices, &g, &live);
    }
    unreachable!("loop always terminates through max_iters")
}
