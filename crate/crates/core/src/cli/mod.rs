//! Command-line front end: configuration, adaptive runs and their artifacts.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adapt::{adaptive_loop, AdaptiveOptions, ConvergenceRecord};
use crate::problems::{self, DEFAULT_ETA_REF};
use crate::solver::NewtonConfig;
use crate::{Error, Result};

pub use output::{write_csv, write_metadata, write_plot, CSV_HEADER};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunConfig {
    /// Registry name, optionally with a parameter (`anisotropic:1e4`).
    pub benchmark: String,
    pub degrees: Vec<usize>,
    pub levels: usize,
    pub eta_ref: f64,
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    pub out_dir: PathBuf,
    pub plots: bool,
    pub dg_reference: bool,
}

/// Settings from the command line; `None` falls back to the file, then the defaults.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub benchmark: Option<String>,
    pub degrees: Option<Vec<usize>>,
    pub levels: Option<usize>,
    pub eta_ref: Option<f64>,
    pub newton_tolerance: Option<f64>,
    pub newton_max_iterations: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub plots: Option<bool>,
    pub dg_reference: Option<bool>,
}

impl ConfigOverrides {
    fn or(self, file: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            benchmark: self.benchmark.or(file.benchmark),
            degrees: self.degrees.or(file.degrees),
            levels: self.levels.or(file.levels),
            eta_ref: self.eta_ref.or(file.eta_ref),
            newton_tolerance: self.newton_tolerance.or(file.newton_tolerance),
            newton_max_iterations: self.newton_max_iterations.or(file.newton_max_iterations),
            out_dir: self.out_dir.or(file.out_dir),
            plots: self.plots.or(file.plots),
            dg_reference: self.dg_reference.or(file.dg_reference),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(format!("invalid value '{v}' for '{key}'")))
}

pub fn parse_degrees(v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|d| parse_value("degree", d.trim()))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("invalid value '{v}' for '{key}'"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<ConfigOverrides> {
    let mut c = ConfigOverrides::default();
    let mut seen = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected 'key = value'", no + 1)))?;
        let (key, v) = (key.trim(), value.trim());
        if seen.insert(key.to_string(), no + 1).is_some() {
            return Err(bad(format!("line {}: duplicate key '{key}'", no + 1)));
        }
        match key {
            "benchmark" => c.benchmark = Some(v.to_string()),
            "degree" | "degrees" | "p" => c.degrees = Some(parse_degrees(v)?),
            "levels" => c.levels = Some(parse_value(key, v)?),
            "eta_ref" => c.eta_ref = Some(parse_value(key, v)?),
            "newton_tol" => c.newton_tolerance = Some(parse_value(key, v)?),
            "newton_max_iter" => c.newton_max_iterations = Some(parse_value(key, v)?),
            "out" => c.out_dir = Some(PathBuf::from(v)),
            "plots" => c.plots = Some(parse_bool(key, v)?),
            "dg_reference" => c.dg_reference = Some(parse_bool(key, v)?),
            _ => return Err(bad(format!("line {}: unknown key '{key}'", no + 1))),
        }
    }
    Ok(c)
}

/// Merges flags over an optional config file and validates the result.
pub fn parse_config(file: Option<&Path>, flags: ConfigOverrides) -> Result<RunConfig> {
    let from_file = match file {
        Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
        None => ConfigOverrides::default(),
    };
    let c = flags.or(from_file);
    let benchmark = c.benchmark.ok_or_else(|| bad("no benchmark given"))?;
    let bench = problems::by_name(&benchmark)?;
    let defaults = NewtonConfig::default();
    let cfg = RunConfig {
        degrees: c.degrees.unwrap_or_else(|| bench.degrees.clone()),
        levels: c.levels.unwrap_or(10),
        eta_ref: c.eta_ref.unwrap_or(DEFAULT_ETA_REF),
        newton_tolerance: c.newton_tolerance.unwrap_or(defaults.tolerance),
        newton_max_iterations: c.newton_max_iterations.unwrap_or(defaults.max_iterations),
        out_dir: c.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        plots: c.plots.unwrap_or(false),
        dg_reference: c.dg_reference.unwrap_or(false),
        benchmark,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.degrees.iter().any(|&p| !(1..=4).contains(&p)) {
            return Err(bad(format!("degrees {:?} must lie in 1..=4", self.degrees)));
        }
        if self.levels == 0 {
            return Err(bad("levels must be at least 1"));
        }
        if !(self.eta_ref > 0.0 && self.eta_ref <= 1.0) {
            return Err(bad(format!("eta_ref {} outside (0, 1]", self.eta_ref)));
        }
        if !(self.newton_tolerance > 0.0) || self.newton_max_iterations == 0 {
            return Err(bad("Newton tolerance and iteration limit must be positive"));
        }
        Ok(())
    }

    fn options(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            levels: self.levels,
            eta_ref: self.eta_ref,
            newton: NewtonConfig {
                tolerance: self.newton_tolerance,
                max_iterations: self.newton_max_iterations,
                ..NewtonConfig::default()
            },
            reconstruct: true,
            dg_reference: self.dg_reference,
        }
    }

    /// File stem for one degree, e.g. `anisotropic_1e4_p2`.
    pub fn stem(&self, degree: usize) -> String {
        let name: String = self
            .benchmark
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        format!("{name}_p{degree}")
    }
}

/// Records of one `(benchmark, degree)` study.
pub struct DegreeRun {
    pub degree: usize,
    pub records: Vec<ConvergenceRecord>,
    pub seconds: f64,
}

/// Runs every configured degree and writes the CSV, metadata and optional plot for each.
pub fn run(cfg: &RunConfig) -> Result<Vec<DegreeRun>> {
    cfg.validate()?;
    let bench = problems::by_name(&cfg.benchmark)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut runs = Vec::with_capacity(cfg.degrees.len());
    for &p in &cfg.degrees {
        let start = Instant::now();
        let run = adaptive_loop(
            &bench.problem,
            p,
            bench.mesh.clone(),
            &cfg.options(),
            bench.initial_guess.as_ref(),
        )?;
        let dr = DegreeRun {
            degree: p,
            records: run.records,
            seconds: start.elapsed().as_secs_f64(),
        };
        let stem = cfg.stem(p);
        write_csv(&cfg.out_dir.join(format!("{stem}.csv")), &dr.records)?;
        if cfg.plots {
            write_plot(
                &cfg.out_dir.join(format!("{stem}.svg")),
                &format!("{} (p = {p})", cfg.benchmark),
                &dr.records,
            )?;
        }
        write_metadata(&cfg.out_dir.join(format!("{stem}.json")), cfg, &dr)?;
        runs.push(dr);
    }
    Ok(runs)
}

/// Maps a failure to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_)
        | Error::UnknownBenchmark(_)
        | Error::MarkingFraction(_)
        | Error::InvalidDegree(_) => EXIT_CONFIG,
        Error::Io(_) | Error::MeshFormat { .. } => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> ConfigOverrides {
        ConfigOverrides::default()
    }

    #[test]
    fn file_with_empty_flags() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.cfg");
        std::fs::write(&f, "# study\nbenchmark = lshape\np = 1\nlevels = 20\n").unwrap();
        let c = parse_config(Some(&f), flags()).unwrap();
        assert_eq!(c.benchmark, "lshape");
        assert_eq!(c.degrees, vec![1]);
        assert_eq!(c.levels, 20);
        assert_eq!(c.eta_ref, 0.25);
        assert_eq!(c.newton_tolerance, 1e-6);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.cfg");
        std::fs::write(&f, "benchmark = lshape\neta_ref = 0.25\n").unwrap();
        let c = parse_config(
            Some(&f),
            ConfigOverrides {
                eta_ref: Some(0.125),
                ..flags()
            },
        )
        .unwrap();
        assert_eq!(c.eta_ref, 0.125);
    }

    #[test]
    fn range_and_format_errors() {
        let with = |o: ConfigOverrides| {
            parse_config(
                None,
                ConfigOverrides {
                    benchmark: Some("lshape".into()),
                    ..o
                },
            )
        };
        assert!(matches!(
            with(ConfigOverrides {
                eta_ref: Some(1.5),
                ..flags()
            }),
            Err(Error::Config(_))
        ));
        assert!(with(ConfigOverrides {
            degrees: Some(vec![5]),
            ..flags()
        })
        .is_err());
        assert!(with(ConfigOverrides {
            levels: Some(0),
            ..flags()
        })
        .is_err());
        assert!(parse_config_text("levels 3").is_err());
        assert!(parse_config_text("levels = three").is_err());
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("levels = 1\nlevels = 2").is_err());
        let e = parse_config(
            None,
            ConfigOverrides {
                benchmark: Some("nosuch".into()),
                ..flags()
            },
        )
        .unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::NewtonStalled { iteration: 3 }.at_level(2)),
            EXIT_SOLVER
        );
        let io = Error::Io(std::io::Error::new(std::io::ErrorKind::Other, "x"));
        assert_eq!(exit_code(&io), EXIT_IO);
    }

    #[test]
    fn stems() {
        let c = RunConfig {
            benchmark: "anisotropic:1e4".into(),
            degrees: vec![1],
            levels: 1,
            eta_ref: 0.25,
            newton_tolerance: 1e-6,
            newton_max_iterations: 50,
            out_dir: PathBuf::new(),
            plots: false,
            dg_reference: false,
        };
        assert_eq!(c.stem(2), "anisotropic_1e4_p2");
    }
}
