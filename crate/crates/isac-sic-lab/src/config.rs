//! Experiment configuration files.
//!
//! A config is TOML with a mandatory `[system]` section and optional
//! `[sweep]` and `[run]` sections; powers are written in dB and converted
//! to linear scale here. The correlation matrix comes either as an
//! eigenvalue list (`r_eigenvalues`, materialized on the identity basis)
//! or as full real/imaginary parts (`r_re`, optional `r_im`).

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::matrixkit::ComplexMatrix;
use crate::model::{db_to_linear, validate_config, SicOrder, SystemConfig};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub pc_db: f64,
    pub ps_db: f64,
    pub alpha: Vec<f64>,
    pub r_eigenvalues: Option<Vec<f64>>,
    pub r_re: Option<Vec<Vec<f64>>>,
    pub r_im: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sic_order: SicOrder,
}

/// Grid definitions for the sweep commands. Power grids are in dB; the
/// region grids are point counts on [0, 1].
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
    /// Outage target rate in bits/s/Hz.
    pub rate_target: f64,
    /// Bandwidth fraction granted to communication in the baseline.
    pub alpha_bw: f64,
    /// Time-sharing grid resolution for the region command.
    pub p_grid_points: usize,
    /// Bandwidth grid resolution for the region command.
    pub alpha_grid_points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            start_db: 0.0,
            stop_db: 40.0,
            step_db: 5.0,
            rate_target: 5.0,
            alpha_bw: 0.5,
            p_grid_points: 101,
            alpha_grid_points: 21,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub trials: u64,
    pub seed: u64,
    pub out_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { trials: 100_000, seed: 7, out_dir: "out".into() }
    }
}

/// Parses a config file.
pub fn load(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text)
        .map_err(|e| Error::Parse(format!("config file {}: {e}", path.display())))
}

/// Builds and validates the scenario described by a `[system]` section.
pub fn build_system(section: &SystemSection) -> Result<SystemConfig> {
    let r = match (&section.r_eigenvalues, &section.r_re) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either r_eigenvalues or r_re, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "the correlation matrix needs r_eigenvalues or r_re".into(),
            ))
        }
        (Some(eigs), None) => ComplexMatrix::from_real_diagonal(eigs),
        (None, Some(re)) => build_matrix(re, section.r_im.as_deref())?,
    };
    if section.r_eigenvalues.is_some() && section.r_im.is_some() {
        return Err(Error::Config("r_im requires r_re".into()));
    }
    let cfg = SystemConfig {
        m: section.m,
        n: section.n,
        k: section.k,
        l: section.l,
        p_c: db_to_linear(section.pc_db),
        p_s: db_to_linear(section.ps_db),
        alpha: section.alpha.clone(),
        r,
        sic_order: section.sic_order,
    };
    validate_config(cfg)
}

fn build_matrix(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<ComplexMatrix> {
    let rows = re.len();
    if rows == 0 {
        return Err(Error::Config("r_re must not be empty".into()));
    }
    let cols = re[0].len();
    let rectangular =
        |name: &str, m: &[Vec<f64>]| -> Result<()> {
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(Error::Config(format!(
                    "{name} must be a {rows}x{cols} rectangle"
                )));
            }
            Ok(())
        };
    rectangular("r_re", re)?;
    if let Some(im) = im {
        rectangular("r_im", im)?;
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        Complex64::new(re[r][c], im.map_or(0.0, |m| m[r][c]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const BASE: &str = r#"
[system]
m = 3
n = 3
k = 3
l = 4
pc_db = 10.0
ps_db = 0.0
alpha = [0.1, 0.5, 1.0]
r_eigenvalues = [1.0, 0.1, 0.05]
"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let f = write_temp(BASE);
        let raw = load(f.path()).unwrap();
        let cfg = build_system(&raw.system).unwrap();
        assert_eq!(cfg.m, 3);
        assert_eq!(cfg.sic_order, SicOrder::CSic);
        assert!((cfg.p_c - 10.0).abs() < 1e-12);
        assert!((cfg.p_s - 1.0).abs() < 1e-12);
        assert_eq!(raw.run.trials, 100_000);
        assert_eq!(raw.sweep.alpha_grid_points, 21);
    }

    #[test]
    fn parses_full_matrix_form() {
        let text = r#"
[system]
m = 2
n = 2
k = 2
l = 2
pc_db = 0.0
ps_db = 0.0
alpha = [1.0, 1.0]
r_re = [[1.0, 0.1], [0.1, 1.0]]
r_im = [[0.0, 0.2], [-0.2, 0.0]]
sic_order = "s-sic"

[run]
trials = 50
seed = 3
"#;
        let f = write_temp(text);
        let raw = load(f.path()).unwrap();
        let cfg = build_system(&raw.system).unwrap();
        assert_eq!(cfg.sic_order, SicOrder::SSic);
        assert_eq!(cfg.r[(0, 1)], Complex64::new(0.1, 0.2));
        assert_eq!(raw.run.trials, 50);
    }

    #[test]
    fn rejects_malformed_toml() {
        let f = write_temp("[system\nm = 3");
        assert!(matches!(load(f.path()), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_unknown_keys() {
        let f = write_temp(&format!("{BASE}\nunknown_key = 1\n"));
        assert!(matches!(load(f.path()), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_matrix_ambiguity() {
        let with_both = BASE.replace(
            "r_eigenvalues = [1.0, 0.1, 0.05]",
            "r_eigenvalues = [1.0, 0.1, 0.05]\nr_re = [[1.0]]",
        );
        let f = write_temp(&with_both);
        let raw = load(f.path()).unwrap();
        assert!(matches!(build_system(&raw.system), Err(Error::Config(_))));

        let without_r = BASE.replace("r_eigenvalues = [1.0, 0.1, 0.05]\n", "");
        let f = write_temp(&without_r);
        let raw = load(f.path()).unwrap();
        assert!(matches!(build_system(&raw.system), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_ragged_matrix() {
        let ragged = BASE.replace(
            "r_eigenvalues = [1.0, 0.1, 0.05]",
            "r_re = [[1.0, 0.0], [0.0]]",
        );
        let f = write_temp(&ragged);
        let raw = load(f.path()).unwrap();
        assert!(matches!(build_system(&raw.system), Err(Error::Config(_))));
    }

    #[test]
    fn surfaces_validation_failures() {
        let bad = BASE.replace("alpha = [0.1, 0.5, 1.0]", "alpha = [0.1, 0.5]");
        let f = write_temp(&bad);
        let raw = load(f.path()).unwrap();
        let err = build_system(&raw.system).unwrap_err();
        assert!(err.to_string().contains("alpha length == K violated"));
    }
}
