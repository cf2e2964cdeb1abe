//! Command-line laboratory for corner singularities on rectangular annuli.
//!
//! Subcommands map one to one onto [`commands`]; each writes its report as
//! JSON plus CSV and SVG artifacts into the output directory.

use std::fs;
use std::io;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub mod commands;
pub mod config;
pub mod export;

use commands::Lab;
use config::{ConfigError, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "singlab", version, about = "Dual singular functions and regularity lines on rectangular annuli")]
pub struct Cli {
    /// TOML configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run probes and corners one after another. Execution is always serial;
    /// the flag is accepted for scripts that request it explicitly.
    #[arg(long, global = true)]
    pub serial: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand)]
pub enum Command {
    /// Solve the flux problem for each probe across the mesh levels.
    Solve,
    /// Build the normalized dual singular function.
    Singular,
    /// Side integrals and the regularity line.
    Regline,
    /// Corner expansions, gradient bounds and arc monotonicity.
    Cornerfit,
    /// Trace a level set of the dual singular function.
    Levelset {
        /// Level `k`, overriding `analysis.level`.
        #[arg(long, allow_hyphen_values = true)]
        level: Option<f64>,
    },
    /// Everything above in one JSON file and one SVG page.
    Report,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] singlab_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        use singlab_core::Error as E;
        match self {
            RunError::Config(_) => "config",
            RunError::Core(E::InvalidDomain(_) | E::InvalidMeshParameters(_) | E::InvalidProblem(_)) => "precondition",
            RunError::Core(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }

    /// 2 for configuration and precondition errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "precondition" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .expect("plain strings serialize")
    }
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if let Command::Levelset { level: Some(k) } = cli.command {
        cfg.analysis.level = k;
        cfg.validate()?;
    }
    let lab = Lab::new(&cfg)?;
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir)?;
    let out = &cfg.output;
    let json = |name: &str, v: &dyn erased::Json| -> Result<(), RunError> {
        if out.wants(Format::Json) {
            v.write(&dir.join(format!("{name}.json")))?;
        }
        Ok(())
    };
    match cli.command {
        Command::Solve => {
            let s = commands::solve(&lab)?;
            json("solve", &s.report)?;
            if out.wants(Format::Csv) {
                export::write_convergence_csv(&dir.join("convergence.csv"), &s.report)?;
                for (p, f) in s.report.probes.iter().zip(&s.fields) {
                    export::write_field_csv(&dir.join(probe_stem(p.a, p.b)), f)?;
                }
                export::write_mesh_csv(&dir, "mesh", &lab.meshes[lab.finest()])?;
            }
        }
        Command::Singular => {
            let r = commands::singular(&lab)?;
            json("singular", &r)?;
            if out.wants(Format::Csv) {
                export::write_field_csv(&dir.join("stilde.csv"), lab.stilde(lab.finest())?.nodal())?;
                export::write_mesh_csv(&dir, "mesh", &lab.meshes[lab.finest()])?;
            }
        }
        Command::Regline => json("regline", &commands::regline(&lab)?)?,
        Command::Cornerfit => json("cornerfit", &commands::cornerfit(&lab)?)?,
        Command::Levelset { .. } => {
            let r = commands::levelset(&lab, cfg.analysis.level)?;
            json("levelset", &r.report)?;
            write_contours(&lab, &dir, out, &r.contours)?;
        }
        Command::Report => {
            let r = commands::report(&lab)?;
            json("report", &r.report)?;
            write_contours(&lab, &dir, out, &r.contours)?;
            if out.wants(Format::Csv) {
                export::write_convergence_csv(&dir.join("convergence.csv"), &r.report.solve)?;
            }
        }
    }
    Ok(())
}

fn write_contours(lab: &Lab, dir: &std::path::Path, out: &config::OutputConfig, c: &singlab_core::levelset::ContourSet) -> Result<(), RunError> {
    if out.wants(Format::Csv) {
        export::write_contours_csv(&dir.join("contours.csv"), c)?;
    }
    if out.wants(Format::Svg) {
        fs::write(dir.join("contours.svg"), export::contour_svg(lab.stilde(lab.finest())?, c))?;
    }
    Ok(())
}

fn probe_stem(a: f64, b: f64) -> String {
    format!("field_a{a}_b{b}.csv")
}

mod erased {
    use serde::Serialize;
    use std::path::Path;

    /// Object-safe JSON writer.
    pub trait Json {
        fn write(&self, path: &Path) -> std::io::Result<()>;
    }

    impl<T: Serialize> Json for T {
        fn write(&self, path: &Path) -> std::io::Result<()> {
            crate::export::write_json(path, self)
        }
    }
}
