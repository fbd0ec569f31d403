//! TOML run configuration: a measure description, process parameters, and
//! optional ensemble/output sections.
//!
//! ```toml
//! [measure]
//! family = "uniform"
//! a = 0.0
//! b = 1.0
//!
//! [process]
//! r = 0.25
//! n_admit = 1000000
//! engine = "threshold"
//! seed = 42
//! ```
//!
//! Mixtures nest component measures under `[[measure.components]]` tables;
//! tabulated tails reference a two-column CSV resolved relative to the
//! config file.

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::process::Engine;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub measure: MeasureSpec,
    pub process: ProcessSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub family: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub rate: Option<f64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    /// Two-column x,tail CSV for the tabulated family.
    pub csv: Option<PathBuf>,
    /// [[x, mass], ...] for the atom-list family.
    pub atoms: Option<Vec<(f64, f64)>>,
    pub components: Option<Vec<ComponentSpec>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub measure: MeasureSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub r: f64,
    pub n_admit: u64,
    pub engine: Engine,
    pub seed: u64,
    pub max_stall: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub replicas: u64,
    pub window_fraction: f64,
    pub cluster_gap: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { replicas: 1, window_fraction: 0.5, cluster_gap: None }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub thin: Option<usize>,
}

/// Parse a config file; the returned base dir anchors relative CSV paths.
pub fn load(path: &Path) -> Result<(ConfigFile, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ConfigFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    Ok((cfg, base))
}

fn require(value: Option<f64>, family: &str, field: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Config(format!("family \"{family}\" requires field \"{field}\"")))
}

pub fn build_measure(spec: &MeasureSpec, base: &Path) -> Result<Measure> {
    match spec.family.as_str() {
        "uniform" => Measure::uniform(
            require(spec.a, "uniform", "a")?,
            require(spec.b, "uniform", "b")?,
        ),
        "exponential" => Measure::exponential(require(spec.rate, "exponential", "rate")?),
        "normal" => Measure::normal(
            require(spec.mean, "normal", "mean")?,
            require(spec.stddev, "normal", "stddev")?,
        ),
        "compressed_exp" => {
            Measure::compressed_exp(require(spec.alpha, "compressed_exp", "alpha")?)
        }
        "geometric_atomic" => {
            Measure::geometric_atomic(require(spec.p, "geometric_atomic", "p")?)
        }
        "tabulated" => {
            let rel = spec.csv.as_ref().ok_or_else(|| {
                Error::Config("family \"tabulated\" requires field \"csv\"".into())
            })?;
            let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
            Measure::tabulated_from_csv(&path)
        }
        "atom_list" => {
            let atoms = spec.atoms.as_ref().ok_or_else(|| {
                Error::Config("family \"atom_list\" requires field \"atoms\"".into())
            })?;
            Measure::atom_list(atoms.clone())
        }
        "mixture" => {
            let comps = spec.components.as_ref().ok_or_else(|| {
                Error::Config("family \"mixture\" requires [[measure.components]]".into())
            })?;
            let mut built = Vec::with_capacity(comps.len());
            for comp in comps {
                built.push((comp.weight, build_measure(&comp.measure, base)?));
            }
            Measure::mixture(built)
        }
        other => Err(Error::Config(format!("unknown measure family \"{other}\""))),
    }
}
