//! Command-line front end. Exit codes: 0 success, 1 usage, 2 bad data,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{cohort_table, PatientStats};
use crate::error::{Error, Result};
use crate::io::{
    read_hex_vtk, read_landmarks, read_quad_vtk, write_atomic, write_hex_vtk, write_quad_vtk, write_surface, VtkData,
};
use crate::pipeline::{self, PipelineConfig, SimulationReport, STRESS_ARRAY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "aortamesh",
    version,
    about = "Fixed-topology aortic wall meshing and wall-stress analysis"
)]
struct Cli {
    #[command(flatten)]
    tunables: Tunables,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of `--config` (or the defaults).
#[derive(Args, Debug, Default)]
struct Tunables {
    /// Pipeline config JSON
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_sections: Option<usize>,
    #[arg(long, global = true)]
    n_ring: Option<usize>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    sample_count: Option<usize>,
    /// Wall thickness (mm)
    #[arg(long, global = true)]
    thickness: Option<f64>,
    #[arg(long, global = true)]
    layers: Option<usize>,
    /// Luminal pressure (kPa)
    #[arg(long, global = true)]
    pressure: Option<f64>,
    /// Young's modulus (kPa)
    #[arg(long, global = true)]
    youngs_modulus: Option<f64>,
    #[arg(long, global = true)]
    poisson_ratio: Option<f64>,
    /// Relative residual for the linear solver
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Voxel mask to triangle surface (STL or OBJ)
    Ingest {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Landmarks and target surface to template quad mesh (VTK)
    Template {
        #[arg(long)]
        landmarks: PathBuf,
        /// Target surface (STL/OBJ) or mask header (.json)
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a template to a target surface
    Fit {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration loss CSV
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Extrude a fitted quad mesh into a hex wall
    Solidify {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Element quality report (JSON)
        #[arg(long)]
        quality: Option<PathBuf>,
    },
    /// Pressurise a hex wall and write per-element stress
    Simulate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Solver and equilibrium summary (JSON)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Region-wise stress statistics of a simulation result
    Stats {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        patient_id: String,
        #[arg(long, default_value = "control")]
        group: String,
        /// Stats CSV
        #[arg(long)]
        out: PathBuf,
        /// Stats JSON, the input format of `cohort`
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Every stage for the patient in the config's `inputs`
    Pipeline {
        /// Overrides the config's output_dir
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Group summary over per-patient stats JSON files
    Cohort {
        #[arg(required = true)]
        stats: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Tunables {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag {
                    c.$($field)+ = v;
                }
            };
        }
        set!(seed => seed);
        set!(n_sections => template.n_sections);
        set!(n_ring => template.n_ring);
        set!(max_iters => fit.max_iters);
        set!(sample_count => fit.sample_count);
        set!(thickness => thickness);
        set!(layers => layers);
        set!(pressure => pressure);
        set!(youngs_modulus => material.youngs_modulus);
        set!(poisson_ratio => material.poisson_ratio);
        set!(tolerance => solver_tolerance);
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn say(msg: impl AsRef<str>) {
    eprintln!("{}", msg.as_ref());
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = cli.tunables.config()?;
    match cli.command {
        Command::Ingest { mask, out } => {
            let s = pipeline::load_target(&mask, cfg.iso_level)?;
            write_surface(&s, &out)?;
            say(format!("{} triangles, area {:.1} mm²", s.triangles.len(), s.area()));
        }
        Command::Template {
            landmarks,
            surface,
            out,
        } => {
            let lm = read_landmarks(&landmarks)?;
            let target = pipeline::target_index(&pipeline::load_target(&surface, cfg.iso_level)?, &cfg)?;
            let t = pipeline::make_template(&lm, &target, &cfg)?;
            write_quad_vtk(&t, &VtkData::default(), &out)?;
            say(format!("{} vertices, {} quads", t.vertices.len(), t.quads.len()));
        }
        Command::Fit {
            template,
            surface,
            out,
            history,
        } => {
            let (t, _) = read_quad_vtk(&template)?;
            let target = pipeline::target_index(&pipeline::load_target(&surface, cfg.iso_level)?, &cfg)?;
            let (fitted, report) = pipeline::fit(&t, &target, &cfg)?;
            write_quad_vtk(&fitted, &VtkData::default(), &out)?;
            if let Some(h) = history {
                report.write_history_csv(&h)?;
            }
            say(format!(
                "{} iterations ({:?}), chamfer rms {:.4} mm",
                report.iterations_run, report.terminated_by, report.final_chamfer_rms
            ));
        }
        Command::Solidify { mesh, out, quality } => {
            let (q, _) = read_quad_vtk(&mesh)?;
            let (hex, report) = pipeline::solidify(&q, &cfg)?;
            write_hex_vtk(&hex, &VtkData::default(), &out)?;
            if let Some(p) = quality {
                pipeline::write_json(&report, &p)?;
            }
            say(format!(
                "{} nodes, {} hexes, min scaled Jacobian {:.3}",
                hex.nodes.len(),
                hex.hexes.len(),
                report.min_scaled_jacobian
            ));
        }
        Command::Simulate { mesh, out, report } => {
            let (hex, _) = read_hex_vtk(&mesh)?;
            let r = pipeline::simulate(&hex, &cfg)?;
            write_hex_vtk(&hex, &pipeline::result_data(&r, None), &out)?;
            let rep = SimulationReport::of(&r);
            if let Some(p) = report {
                pipeline::write_json(&rep, &p)?;
            }
            say(format!(
                "{} CG iterations, peak {:.2} kPa, equilibrium error {:.2e}",
                rep.solver.iterations, rep.peak_stress_kpa, rep.equilibrium_relative_error
            ));
        }
        Command::Stats {
            result,
            landmarks,
            patient_id,
            group,
            out,
            json,
        } => {
            let (hex, data) = read_hex_vtk(&result)?;
            let stress = data
                .cell_scalars
                .get(STRESS_ARRAY)
                .ok_or_else(|| Error::invalid(format!("{} has no {STRESS_ARRAY} cell data", result.display())))?;
            let lm = read_landmarks(&landmarks)?;
            let partition = pipeline::regions(&hex, &lm, &cfg)?;
            let p = PatientStats {
                patient_id,
                group: group.parse()?,
                stats: pipeline::stats(stress, &partition)?,
            };
            write_atomic(&out, pipeline::patient_csv(&p)?.as_bytes())?;
            if let Some(j) = json {
                pipeline::write_json(&p, &j)?;
            }
            say(format!(
                "peak {:.2} kPa over {} elements",
                p.stats.peak, p.stats.n_elements
            ));
        }
        Command::Pipeline { out_dir } => {
            let dir = out_dir
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::invalid("no output directory: pass --out-dir or set output_dir"))?;
            let o = pipeline::run_pipeline(&cfg, &dir)?;
            say(format!(
                "fit rms {:.3} mm, {} hexes, peak {:.2} kPa; outputs in {}",
                o.fit_report.final_chamfer_rms,
                o.hex.hexes.len(),
                o.patient.stats.peak,
                dir.display()
            ));
        }
        Command::Cohort { stats, out } => {
            let rows = stats
                .iter()
                .map(|p| pipeline::read_patient_stats(p).map(|s| (s.patient_id, s.group.to_string(), s.stats)))
                .collect::<Result<Vec<_>>>()?;
            check_unique(&rows, &stats)?;
            let summary = cohort_table(&rows)?;
            write_atomic(&out, summary.to_csv()?.as_bytes())?;
            for g in &summary.groups {
                say(format!(
                    "{}: {} patients, peak {:.2} ± {:.2} kPa",
                    g.group,
                    g.patients.len(),
                    g.peak.mean,
                    g.peak.std
                ));
            }
        }
    }
    Ok(())
}

fn check_unique<T>(rows: &[(String, String, T)], paths: &[PathBuf]) -> Result<()> {
    let mut seen = std::collections::BTreeMap::<&str, &Path>::new();
    for ((id, _, _), p) in rows.iter().zip(paths) {
        if let Some(first) = seen.insert(id, p) {
            return Err(Error::invalid(format!(
                "patient {id} appears in both {} and {}",
                first.display(),
                p.display()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["aortamesh", "simulate", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["aortamesh"]), EXIT_USAGE);
        assert_eq!(run(["aortamesh", "--help"]), EXIT_OK);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let cli = Cli::try_parse_from(["aortamesh", "--layers", "3", "--pressure", "12", "pipeline"]).unwrap();
        let c = cli.tunables.config().unwrap();
        assert_eq!((c.layers, c.pressure), (3, 12.0));
        let cli = Cli::try_parse_from(["aortamesh", "pipeline", "--poisson-ratio", "0.7"]).unwrap();
        assert!(cli.tunables.config().is_err());
    }

    #[test]
    fn data_and_numerical_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_DATA);
        assert_eq!(exit_code(&Error::SingularSystem("x".into())), EXIT_NUMERICAL);
        assert_eq!(
            run([
                "aortamesh",
                "ingest",
                "--mask",
                "/nonexistent.json",
                "--out",
                "/tmp/x.stl"
            ]),
            EXIT_DATA
        );
    }
}
