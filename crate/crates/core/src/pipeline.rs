//! Configuration and per-stage orchestration from target surface to stress
//! statistics. Each stage function is what one CLI subcommand runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    assign_regions, default_breakpoints, region_stats, Group, PatientStats, RegionPartition, StressStats,
};
use crate::error::{Error, Result};
use crate::fea::{run_sda, BoundaryConditions, FeaResult, Material, SolverStats, DEFAULT_PRESSURE, DEFAULT_TOLERANCE};
use crate::fitting::{fit_template, FitConfig, FitReport};
use crate::geometry::{LandmarkSet, SpatialIndex, TriangleSurface};
use crate::io::{
    json_error, mask_to_surface, read_file, read_landmarks, read_mask, read_surface, sample_surface, write_atomic,
    write_hex_vtk, write_quad_vtk, write_surface, VtkData,
};
use crate::solidify::{extrude_to_hex, hex_quality, HexMesh, HexQualityReport};
use crate::template::{build_template, spine_centerline, QuadMesh, TemplateConfig};

/// Relative equilibrium error above which a simulation is rejected.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;
pub const STRESS_ARRAY: &str = "max_abs_principal_stress_kPa";
pub const REGION_ARRAY: &str = "region";
pub const DISPLACEMENT_ARRAY: &str = "displacement_mm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed for target-surface sampling.
    pub seed: u64,
    /// Level used when the target is a voxel mask.
    pub iso_level: f64,
    pub template: TemplateConfig,
    pub fit: FitConfig,
    /// Wall thickness (mm).
    pub thickness: f64,
    pub layers: usize,
    pub material: Material,
    /// kPa
    pub pressure: f64,
    pub solver_tolerance: f64,
    pub boundary_conditions: BoundaryConditions,
    /// Overrides the landmark file's breakpoints.
    pub region_breakpoints: Option<[usize; 3]>,
    pub inputs: Option<Inputs>,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            iso_level: 0.5,
            template: TemplateConfig::default(),
            fit: FitConfig::default(),
            thickness: 2.0,
            layers: 2,
            material: Material::default(),
            pressure: DEFAULT_PRESSURE,
            solver_tolerance: DEFAULT_TOLERANCE,
            boundary_conditions: BoundaryConditions::default(),
            region_breakpoints: None,
            inputs: None,
            output_dir: None,
        }
    }
}

/// One patient's input files. Relative paths in a config file are taken
/// relative to that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub patient_id: String,
    #[serde(default)]
    pub group: Option<String>,
    /// STL or OBJ target surface.
    #[serde(default)]
    pub surface: Option<PathBuf>,
    /// Voxel mask header, used when no surface is given.
    #[serde(default)]
    pub mask: Option<PathBuf>,
    pub landmarks: PathBuf,
}

impl Inputs {
    fn validate(&self) -> Result<()> {
        if self.patient_id.trim().is_empty() {
            return Err(Error::invalid("inputs.patient_id is empty"));
        }
        if let Some(g) = &self.group {
            g.parse::<Group>()?;
        }
        match (&self.surface, &self.mask) {
            (None, None) => Err(Error::invalid("inputs need a surface or a mask")),
            (Some(_), Some(_)) => Err(Error::invalid("inputs take a surface or a mask, not both")),
            _ => Ok(()),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.surface.iter_mut().for_each(join);
        self.mask.iter_mut().for_each(join);
        join(&mut self.landmarks);
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        self.fit.validate()?;
        self.material.validate()?;
        if !(self.iso_level > 0.0 && self.iso_level < 1.0) {
            return Err(Error::invalid(format!(
                "iso_level must lie in (0, 1), got {}",
                self.iso_level
            )));
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(Error::invalid(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        if self.layers == 0 {
            return Err(Error::invalid("layers must be at least 1"));
        }
        if !self.pressure.is_finite() {
            return Err(Error::invalid(format!(
                "pressure must be finite, got {}",
                self.pressure
            )));
        }
        if !(self.solver_tolerance > 0.0 && self.solver_tolerance < 1.0) {
            return Err(Error::invalid(format!(
                "solver_tolerance must lie in (0, 1), got {}",
                self.solver_tolerance
            )));
        }
        if self.boundary_conditions.fixed_node_sets.is_empty() {
            return Err(Error::invalid("boundary_conditions.fixed_node_sets is empty"));
        }
        if let Some(b) = self.region_breakpoints {
            crate::analysis::validate_breakpoints(&b, self.template.n_sections)?;
        }
        if let Some(i) = &self.inputs {
            i.validate()?;
        }
        Ok(())
    }

    /// Parses and validates; input and output paths become relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&text).map_err(|e| json_error(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        if let Some(i) = cfg.inputs.as_mut() {
            i.resolve(&base);
        }
        if let Some(o) = cfg.output_dir.as_mut() {
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

/// Target surface from an STL/OBJ file or, for `.json`, a voxel mask.
pub fn load_target(path: &Path, iso_level: f64) -> Result<TriangleSurface> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        mask_to_surface(&read_mask(path)?, iso_level)
    } else {
        read_surface(path)
    }
}

/// Area-uniform sample of the target, indexed for nearest-point queries.
pub fn target_index(surface: &TriangleSurface, cfg: &PipelineConfig) -> Result<SpatialIndex> {
    let cloud = sample_surface(surface, cfg.fit.sample_count, cfg.seed)?;
    SpatialIndex::new(cloud.points)
}

pub fn make_template(landmarks: &LandmarkSet, target: &SpatialIndex, cfg: &PipelineConfig) -> Result<QuadMesh> {
    build_template(landmarks, Some(target), &cfg.template)
}

pub fn fit(template: &QuadMesh, target: &SpatialIndex, cfg: &PipelineConfig) -> Result<(QuadMesh, FitReport)> {
    fit_template(template, target, &cfg.fit)
}

pub fn solidify(fitted: &QuadMesh, cfg: &PipelineConfig) -> Result<(HexMesh, HexQualityReport)> {
    let hex = extrude_to_hex(fitted, cfg.thickness, cfg.layers)?;
    let q = hex_quality(&hex);
    Ok((hex, q))
}

/// Validates the mesh, solves, and rejects results whose reactions do not
/// balance the load.
pub fn simulate(hex: &HexMesh, cfg: &PipelineConfig) -> Result<FeaResult> {
    hex.validate()?;
    let r = run_sda(
        hex,
        cfg.pressure,
        &cfg.material,
        &cfg.boundary_conditions,
        cfg.solver_tolerance,
    )?;
    let e = r.equilibrium.relative_error();
    if !(e <= EQUILIBRIUM_TOLERANCE) {
        return Err(Error::Equilibrium(e));
    }
    Ok(r)
}

/// Region partition of the hex elements along the landmark spine.
pub fn regions(hex: &HexMesh, landmarks: &LandmarkSet, cfg: &PipelineConfig) -> Result<RegionPartition> {
    let spine = spine_centerline(landmarks, cfg.template.n_sections)?;
    let b = match (cfg.region_breakpoints, &landmarks.region_breakpoints) {
        (Some(b), _) => b.to_vec(),
        (None, Some(b)) => b.clone(),
        (None, None) => default_breakpoints(&spine.points, &landmarks.arch_curves)?.to_vec(),
    };
    assign_regions(hex, &spine, &b)
}

pub fn stats(max_abs_principal: &[f64], partition: &RegionPartition) -> Result<StressStats> {
    region_stats(max_abs_principal, partition)
}

/// Solver summary written next to the result mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub solver: SolverStats,
    pub equilibrium: crate::fea::Equilibrium,
    pub equilibrium_relative_error: f64,
    pub max_displacement_mm: f64,
    pub peak_stress_kpa: f64,
}

impl SimulationReport {
    pub fn of(r: &FeaResult) -> Self {
        SimulationReport {
            solver: r.solver_stats,
            equilibrium: r.equilibrium,
            equilibrium_relative_error: r.equilibrium.relative_error(),
            max_displacement_mm: r.max_displacement(),
            peak_stress_kpa: r.max_abs_principal.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Cell stress and point displacement arrays, plus region labels if known.
pub fn result_data(r: &FeaResult, partition: Option<&RegionPartition>) -> VtkData {
    let mut d = VtkData::default();
    d.cell_scalars.insert(STRESS_ARRAY.into(), r.max_abs_principal.clone());
    if let Some(p) = partition {
        d.cell_scalars
            .insert(REGION_ARRAY.into(), p.labels.iter().map(|l| l.index() as f64).collect());
    }
    d.point_vectors
        .insert(DISPLACEMENT_ARRAY.into(), r.displacements.clone());
    d
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(format!("json: {e}")))? + "\n";
    write_atomic(path, text.as_bytes())
}

pub fn read_patient_stats(path: &Path) -> Result<PatientStats> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| json_error(path, e))
}

/// Single-patient CSV in the cohort column layout.
pub fn patient_csv(p: &PatientStats) -> Result<String> {
    let summary = crate::analysis::cohort_table(&[(p.patient_id.clone(), p.group.to_string(), p.stats.clone())])?;
    let csv = summary.to_csv()?;
    // Header and the patient row only.
    Ok(csv.lines().take(2).map(|l| format!("{l}\n")).collect())
}

/// Files written by [`run_pipeline`], relative to the output directory.
pub const SURFACE_FILE: &str = "target_surface.stl";
pub const TEMPLATE_FILE: &str = "template.vtk";
pub const FITTED_FILE: &str = "fitted.vtk";
pub const FIT_HISTORY_FILE: &str = "fit_history.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const HEX_FILE: &str = "hex.vtk";
pub const QUALITY_FILE: &str = "hex_quality.json";
pub const RESULT_FILE: &str = "result.vtk";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const STATS_CSV_FILE: &str = "stats.csv";
pub const STATS_JSON_FILE: &str = "stats.json";

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub fitted: QuadMesh,
    pub fit_report: FitReport,
    pub hex: HexMesh,
    pub quality: HexQualityReport,
    pub result: FeaResult,
    pub patient: PatientStats,
}

/// Runs every stage for the configured patient and writes all products to
/// `out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<PipelineOutput> {
    cfg.validate()?;
    let inputs = cfg
        .inputs
        .as_ref()
        .ok_or_else(|| Error::invalid("config has no inputs section"))?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let out = |name: &str| out_dir.join(name);

    let surface = match (&inputs.surface, &inputs.mask) {
        (Some(s), _) => read_surface(s)?,
        (None, Some(m)) => {
            let s = mask_to_surface(&read_mask(m)?, cfg.iso_level)?;
            write_surface(&s, &out(SURFACE_FILE))?;
            s
        }
        (None, None) => unreachable!("validated"),
    };
    let landmarks = read_landmarks(&inputs.landmarks)?;
    let target = target_index(&surface, cfg)?;

    let template = make_template(&landmarks, &target, cfg)?;
    write_quad_vtk(&template, &VtkData::default(), &out(TEMPLATE_FILE))?;

    let (fitted, fit_report) = fit(&template, &target, cfg)?;
    write_quad_vtk(&fitted, &VtkData::default(), &out(FITTED_FILE))?;
    fit_report.write_history_csv(&out(FIT_HISTORY_FILE))?;
    write_json(&fit_report, &out(FIT_REPORT_FILE))?;

    let (hex, quality) = solidify(&fitted, cfg)?;
    write_hex_vtk(&hex, &VtkData::default(), &out(HEX_FILE))?;
    write_json(&quality, &out(QUALITY_FILE))?;

    let result = simulate(&hex, cfg)?;
    let partition = regions(&hex, &landmarks, cfg)?;
    write_hex_vtk(&hex, &result_data(&result, Some(&partition)), &out(RESULT_FILE))?;
    write_json(&SimulationReport::of(&result), &out(SIMULATION_FILE))?;

    let group = inputs.group.as_deref().unwrap_or("control").parse()?;
    let patient = PatientStats {
        patient_id: inputs.patient_id.clone(),
        group,
        stats: stats(&result.max_abs_principal, &partition)?,
    };
    write_atomic(&out(STATS_CSV_FILE), patient_csv(&patient)?.as_bytes())?;
    write_json(&patient, &out(STATS_JSON_FILE))?;

    Ok(PipelineOutput {
        fitted,
        fit_report,
        hex,
        quality,
        result,
        patient,
    })
}
