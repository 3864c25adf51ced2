//! Experiment runner: maps a command plus a parsed config onto CSV, SVG,
//! and manifest artifacts in an output directory.
//!
//! Every run is deterministic for a fixed (config, seed): numbers are
//! written with 17 significant digits, nothing records wall-clock state,
//! and all Monte Carlo estimates flow through the keyed trial engine.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::chart::{render_chart, ChartSpec};
use crate::comms::{comm_gap, ecr_asymptote};
use crate::config::{RawConfig, SweepSection};
use crate::model::{db_to_linear, SicOrder, SystemConfig};
use crate::montecarlo::{estimate_ecr, op_sweep, LinkMode};
use crate::region::{fdsac_boundary, isac_boundary};
use crate::sensing::{banded_sr, design_for_order, sensing_gap, sr_asymptote, sr_for_order};
use crate::{Error, Result};

/// The experiments the tool can reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Outage probability of both cancellation orders and the baseline
    /// across a communication-power sweep.
    OpCurve,
    /// Ergodic sum rates with their high-power asymptote lines.
    EcrCurve,
    /// Exact sensing rates with their high-power asymptote lines.
    SrCurve,
    /// Achievable sensing/communication rate regions of both systems.
    Region,
    /// High-power slopes, offsets, and order-to-order gaps.
    Asymptotics,
    /// Diversity orders and high-power slopes implied by the config.
    Table1,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Command::OpCurve => "op-curve",
            Command::EcrCurve => "ecr-curve",
            Command::SrCurve => "sr-curve",
            Command::Region => "region",
            Command::Asymptotics => "asymptotics",
            Command::Table1 => "table1",
        };
        write!(f, "{name}")
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub cfg: SystemConfig,
    pub sweep: SweepSection,
    pub trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Files written by a run, plus an optional human-readable report that the
/// CLI prints to stdout.
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub report: Option<String>,
}

/// Builds an [`ExperimentSpec`] from a parsed config file and optional
/// command-line overrides.
pub fn assemble(
    command: Command,
    raw: &RawConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<ExperimentSpec> {
    let cfg = crate::config::build_system(&raw.system)?;
    Ok(ExperimentSpec {
        command,
        cfg,
        sweep: raw.sweep.clone(),
        trials: trials.unwrap_or(raw.run.trials),
        seed: seed.unwrap_or(raw.run.seed),
        out_dir: out_dir.unwrap_or_else(|| PathBuf::from(&raw.run.out_dir)),
    })
}

fn check_spec(spec: &ExperimentSpec) -> Result<()> {
    let s = &spec.sweep;
    if !(s.step_db > 0.0) {
        return Err(Error::Config(format!(
            "sweep step must be positive, got {}",
            s.step_db
        )));
    }
    if s.stop_db < s.start_db {
        return Err(Error::Config(format!(
            "sweep stop {} is below start {}",
            s.stop_db, s.start_db
        )));
    }
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&s.alpha_bw) {
        return Err(Error::Config(format!(
            "alpha_bw must lie in [0, 1], got {}",
            s.alpha_bw
        )));
    }
    if !(s.rate_target >= 0.0) {
        return Err(Error::Config(format!(
            "rate_target must be nonnegative, got {}",
            s.rate_target
        )));
    }
    if s.p_grid_points < 2 || s.alpha_grid_points < 2 {
        return Err(Error::Config(
            "region grids need at least 2 points".into(),
        ));
    }
    Ok(())
}

/// Runs one experiment: writes `<command>.csv`, `<command>.svg`, and
/// `manifest.txt` under the output directory.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    check_spec(spec)?;
    let table = match spec.command {
        Command::OpCurve => op_curve(spec)?,
        Command::EcrCurve => ecr_curve(spec)?,
        Command::SrCurve => sr_curve(spec)?,
        Command::Region => region(spec)?,
        Command::Asymptotics => asymptotics(spec)?,
        Command::Table1 => table1(spec)?,
    };

    std::fs::create_dir_all(&spec.out_dir)?;
    let stem = spec.command.to_string();
    let csv_path = spec.out_dir.join(format!("{stem}.csv"));
    let svg_path = spec.out_dir.join(format!("{stem}.svg"));
    let manifest_path = spec.out_dir.join("manifest.txt");

    write_csv(&csv_path, &table.header, &table.rows)?;
    render_chart(&csv_path, &table.chart, &svg_path)?;
    std::fs::write(&manifest_path, manifest(spec))?;

    Ok(RunOutput {
        files: vec![csv_path, svg_path, manifest_path],
        report: table.report,
    })
}

// ─────────────────────────── Commands ───────────────────────────

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    chart: ChartSpec,
    report: Option<String>,
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Full-precision float formatting; round-trips through f64 parsing.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn db_grid(sweep: &SweepSection) -> Vec<f64> {
    let count = ((sweep.stop_db - sweep.start_db) / sweep.step_db + 1e-9).floor() as usize + 1;
    (0..count).map(|i| sweep.start_db + i as f64 * sweep.step_db).collect()
}

fn linspace01(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn op_curve(spec: &ExperimentSpec) -> Result<Table> {
    let grid = db_grid(&spec.sweep);
    let modes = [
        LinkMode::CSic,
        LinkMode::SSic,
        LinkMode::Fdsac { alpha_bw: spec.sweep.alpha_bw },
    ];
    let curves: Vec<_> = modes
        .iter()
        .map(|&m| op_sweep(&spec.cfg, m, &grid, spec.sweep.rate_target, spec.trials, spec.seed))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(grid.len());
    for (i, &db) in grid.iter().enumerate() {
        let mut row = vec![fmt_f(db)];
        row.extend(curves.iter().map(|c| fmt_f(c.op[i].point)));
        row.extend(curves.iter().map(|c| fmt_f(c.op[i].half_width_95)));
        rows.push(row);
    }
    Ok(Table {
        header: headers(&[
            "pc_db",
            "op_csic",
            "op_ssic",
            "op_fdsac",
            "ci95_csic",
            "ci95_ssic",
            "ci95_fdsac",
        ]),
        rows,
        chart: ChartSpec {
            title: format!(
                "Outage probability, target {} bits/s/Hz",
                spec.sweep.rate_target
            ),
            x_label: "communication power (dB)".into(),
            y_label: "outage probability".into(),
            x_column: "pc_db".into(),
            series: vec!["op_csic".into(), "op_ssic".into(), "op_fdsac".into()],
            log_y: true,
            group_column: None,
            close_region: false,
        },
        report: None,
    })
}

fn ecr_curve(spec: &ExperimentSpec) -> Result<Table> {
    let grid = db_grid(&spec.sweep);
    let cfg = &spec.cfg;
    let slot_noise = design_for_order(cfg, SicOrder::SSic)?.slot_noise;
    let asym_c = ecr_asymptote(&with_order(cfg, SicOrder::CSic), None)?;
    let asym_s = ecr_asymptote(&with_order(cfg, SicOrder::SSic), Some(&slot_noise))?;
    let modes = [
        LinkMode::CSic,
        LinkMode::SSic,
        LinkMode::Fdsac { alpha_bw: spec.sweep.alpha_bw },
    ];

    let mut rows = Vec::with_capacity(grid.len());
    for &db in &grid {
        let mut point_cfg = cfg.clone();
        point_cfg.p_c = db_to_linear(db);
        let ests: Vec<_> = modes
            .iter()
            .map(|&m| estimate_ecr(&point_cfg, m, spec.trials, spec.seed))
            .collect::<Result<_>>()?;
        let mut row = vec![fmt_f(db)];
        row.extend(ests.iter().map(|e| fmt_f(e.point)));
        row.extend(ests.iter().map(|e| fmt_f(e.half_width_95)));
        row.push(fmt_f(asym_c.eval(point_cfg.p_c)));
        row.push(fmt_f(asym_s.eval(point_cfg.p_c)));
        rows.push(row);
    }
    Ok(Table {
        header: headers(&[
            "pc_db",
            "ecr_csic_bits",
            "ecr_ssic_bits",
            "ecr_fdsac_bits",
            "ci95_csic_bits",
            "ci95_ssic_bits",
            "ci95_fdsac_bits",
            "asym_csic_bits",
            "asym_ssic_bits",
        ]),
        rows,
        chart: ChartSpec {
            title: "Ergodic sum rate vs communication power".into(),
            x_label: "communication power (dB)".into(),
            y_label: "ergodic sum rate (bits/s/Hz)".into(),
            x_column: "pc_db".into(),
            series: vec![
                "ecr_csic_bits".into(),
                "ecr_ssic_bits".into(),
                "ecr_fdsac_bits".into(),
                "asym_csic_bits".into(),
                "asym_ssic_bits".into(),
            ],
            log_y: false,
            group_column: None,
            close_region: false,
        },
        report: None,
    })
}

fn sr_curve(spec: &ExperimentSpec) -> Result<Table> {
    let grid = db_grid(&spec.sweep);
    let cfg = &spec.cfg;
    let asym_c = sr_asymptote(&with_order(cfg, SicOrder::CSic))?;
    let asym_s = sr_asymptote(&with_order(cfg, SicOrder::SSic))?;

    let mut rows = Vec::with_capacity(grid.len());
    for &db in &grid {
        let mut point_cfg = cfg.clone();
        point_cfg.p_s = db_to_linear(db);
        let row = vec![
            fmt_f(db),
            fmt_f(sr_for_order(&point_cfg, SicOrder::CSic)?),
            fmt_f(sr_for_order(&point_cfg, SicOrder::SSic)?),
            fmt_f(banded_sr(&point_cfg, 1.0 - spec.sweep.alpha_bw)?),
            fmt_f(asym_c.eval(point_cfg.p_s)),
            fmt_f(asym_s.eval(point_cfg.p_s)),
        ];
        rows.push(row);
    }
    Ok(Table {
        header: headers(&[
            "ps_db",
            "sr_csic_bits",
            "sr_ssic_bits",
            "sr_fdsac_bits",
            "asym_csic_bits",
            "asym_ssic_bits",
        ]),
        rows,
        chart: ChartSpec {
            title: "Sensing rate vs sensing power".into(),
            x_label: "sensing power (dB)".into(),
            y_label: "sensing rate (bits/s/Hz)".into(),
            x_column: "ps_db".into(),
            series: vec![
                "sr_csic_bits".into(),
                "sr_ssic_bits".into(),
                "sr_fdsac_bits".into(),
                "asym_csic_bits".into(),
                "asym_ssic_bits".into(),
            ],
            log_y: false,
            group_column: None,
            close_region: false,
        },
        report: None,
    })
}

fn region(spec: &ExperimentSpec) -> Result<Table> {
    let p_grid = linspace01(spec.sweep.p_grid_points);
    let a_grid = linspace01(spec.sweep.alpha_grid_points);
    let isac = isac_boundary(&spec.cfg, &p_grid, spec.trials, spec.seed)?;
    let fdsac = fdsac_boundary(&spec.cfg, &a_grid, spec.trials, spec.seed)?;

    let mut rows = Vec::new();
    for b in [&isac, &fdsac] {
        for (param, pt) in b.params.iter().zip(&b.points) {
            rows.push(vec![
                b.label.to_string(),
                fmt_f(*param),
                fmt_f(pt.sr),
                fmt_f(pt.cr),
                fmt_f(pt.cr_ci95),
            ]);
        }
    }
    Ok(Table {
        header: headers(&["system", "param", "sr_bits", "cr_bits", "cr_ci95_bits"]),
        rows,
        chart: ChartSpec {
            title: "Achievable rate regions".into(),
            x_label: "sensing rate (bits/s/Hz)".into(),
            y_label: "ergodic sum rate (bits/s/Hz)".into(),
            x_column: "sr_bits".into(),
            series: vec!["cr_bits".into()],
            log_y: false,
            group_column: Some("system".into()),
            close_region: true,
        },
        report: None,
    })
}

fn asymptotics(spec: &ExperimentSpec) -> Result<Table> {
    let grid = db_grid(&spec.sweep);
    let cfg = &spec.cfg;
    let slot_noise = design_for_order(cfg, SicOrder::SSic)?.slot_noise;
    let sr_c = sr_asymptote(&with_order(cfg, SicOrder::CSic))?;
    let sr_s = sr_asymptote(&with_order(cfg, SicOrder::SSic))?;
    let ecr_c = ecr_asymptote(&with_order(cfg, SicOrder::CSic), None)?;
    let ecr_s = ecr_asymptote(&with_order(cfg, SicOrder::SSic), Some(&slot_noise))?;
    let e_s = sensing_gap(cfg);
    let e_c = comm_gap(cfg, &slot_noise);

    let rows = grid
        .iter()
        .map(|&db| {
            let p = db_to_linear(db);
            vec![
                fmt_f(db),
                fmt_f(sr_c.eval(p)),
                fmt_f(sr_s.eval(p)),
                fmt_f(ecr_c.eval(p)),
                fmt_f(ecr_s.eval(p)),
                fmt_f(e_s),
                fmt_f(e_c),
            ]
        })
        .collect();
    Ok(Table {
        header: headers(&[
            "db",
            "sr_asym_csic_bits",
            "sr_asym_ssic_bits",
            "ecr_asym_csic_bits",
            "ecr_asym_ssic_bits",
            "sensing_gap_bits",
            "comm_gap_bits",
        ]),
        rows,
        chart: ChartSpec {
            title: "High-power asymptote lines".into(),
            x_label: "power (dB)".into(),
            y_label: "rate (bits/s/Hz)".into(),
            x_column: "db".into(),
            series: vec![
                "sr_asym_csic_bits".into(),
                "sr_asym_ssic_bits".into(),
                "ecr_asym_csic_bits".into(),
                "ecr_asym_ssic_bits".into(),
            ],
            log_y: false,
            group_column: None,
            close_region: false,
        },
        report: None,
    })
}

fn table1(spec: &ExperimentSpec) -> Result<Table> {
    let cfg = &spec.cfg;
    let alpha_bw = spec.sweep.alpha_bw;
    let mk = (cfg.m * cfg.k) as f64;
    let k = cfg.k as f64;
    let sr_slope = cfg.n as f64 * cfg.m as f64 / cfg.l as f64;
    let entries = [
        ("isac", "cr_diversity_order", mk),
        ("isac", "cr_high_snr_slope", k),
        ("isac", "sr_high_snr_slope", sr_slope),
        ("fdsac", "cr_diversity_order", mk),
        ("fdsac", "cr_high_snr_slope", alpha_bw * k),
        ("fdsac", "sr_high_snr_slope", (1.0 - alpha_bw) * sr_slope),
    ];

    let rows = entries
        .iter()
        .enumerate()
        .map(|(i, (sys, metric, v))| {
            vec![i.to_string(), sys.to_string(), metric.to_string(), fmt_f(*v)]
        })
        .collect();
    let mut report = String::from("system   metric               value\n");
    for (sys, metric, v) in &entries {
        let _ = writeln!(report, "{sys:<8} {metric:<20} {v}");
    }
    Ok(Table {
        header: headers(&["entry_index", "system", "metric", "value"]),
        rows,
        chart: ChartSpec {
            // A tabular command still gets a chart: one marker per metric.
            title: "Diversity orders and high-power slopes".into(),
            x_label: "entry".into(),
            y_label: "value".into(),
            x_column: "entry_index".into(),
            series: vec!["value".into()],
            log_y: false,
            group_column: Some("system".into()),
            close_region: false,
        },
        report: Some(report),
    })
}

fn with_order(cfg: &SystemConfig, order: SicOrder) -> SystemConfig {
    let mut c = cfg.clone();
    c.sic_order = order;
    c
}

// ─────────────────────────── Output files ───────────────────────────

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn manifest(spec: &ExperimentSpec) -> String {
    let cfg = &spec.cfg;
    let mut m = String::new();
    let _ = writeln!(m, "tool = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "command = {}", spec.command);
    let _ = writeln!(m, "seed = {}", spec.seed);
    let _ = writeln!(m, "trials = {}", spec.trials);
    let _ = writeln!(m, "m = {}", cfg.m);
    let _ = writeln!(m, "n = {}", cfg.n);
    let _ = writeln!(m, "k = {}", cfg.k);
    let _ = writeln!(m, "l = {}", cfg.l);
    let _ = writeln!(m, "p_c = {}", fmt_f(cfg.p_c));
    let _ = writeln!(m, "p_s = {}", fmt_f(cfg.p_s));
    let alpha: Vec<String> = cfg.alpha.iter().map(|&a| fmt_f(a)).collect();
    let _ = writeln!(m, "alpha = {}", alpha.join(","));
    let _ = writeln!(m, "sic_order = {}", cfg.sic_order);
    let mut r_rows = Vec::with_capacity(cfg.r.rows());
    for i in 0..cfg.r.rows() {
        let cells: Vec<String> = (0..cfg.r.cols())
            .map(|j| {
                let z = cfg.r[(i, j)];
                format!("{}{:+}i", fmt_f(z.re), z.im)
            })
            .collect();
        r_rows.push(cells.join(","));
    }
    let _ = writeln!(m, "r = [{}]", r_rows.join("; "));
    let s = &spec.sweep;
    let _ = writeln!(m, "sweep_start_db = {}", fmt_f(s.start_db));
    let _ = writeln!(m, "sweep_stop_db = {}", fmt_f(s.stop_db));
    let _ = writeln!(m, "sweep_step_db = {}", fmt_f(s.step_db));
    let _ = writeln!(m, "rate_target = {}", fmt_f(s.rate_target));
    let _ = writeln!(m, "alpha_bw = {}", fmt_f(s.alpha_bw));
    let _ = writeln!(m, "p_grid_points = {}", s.p_grid_points);
    let _ = writeln!(m, "alpha_grid_points = {}", s.alpha_grid_points);
    m
}

// ─────────────────────────────── Tests ───────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(command: Command, out_dir: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            command,
            cfg: crate::model::tests::reference_config(),
            sweep: SweepSection {
                start_db: 0.0,
                stop_db: 10.0,
                step_db: 5.0,
                rate_target: 5.0,
                alpha_bw: 0.5,
                p_grid_points: 5,
                alpha_grid_points: 5,
            },
            trials: 300,
            seed: 5,
            out_dir,
        }
    }

    #[test]
    fn op_curve_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&tiny_spec(Command::OpCurve, dir.path().into())).unwrap();
        assert_eq!(out.files.len(), 3);
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pc_db,op_csic,op_ssic,op_fdsac,ci95_csic,ci95_ssic,ci95_fdsac"
        );
        assert_eq!(lines.count(), 3);
        let svg = std::fs::read_to_string(&out.files[1]).unwrap();
        assert!(svg.starts_with("<svg"));
        let manifest = std::fs::read_to_string(&out.files[2]).unwrap();
        assert!(manifest.contains("command = op-curve"));
        assert!(manifest.contains("seed = 5"));
        assert!(manifest.contains("trials = 300"));
    }

    #[test]
    fn every_command_round_trips() {
        for command in [
            Command::OpCurve,
            Command::EcrCurve,
            Command::SrCurve,
            Command::Region,
            Command::Asymptotics,
            Command::Table1,
        ] {
            let dir = tempfile::tempdir().unwrap();
            let out = run(&tiny_spec(command, dir.path().into()))
                .unwrap_or_else(|e| panic!("{command} failed: {e}"));
            for f in &out.files {
                assert!(f.exists(), "{command}: missing {}", f.display());
            }
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let a = run(&tiny_spec(Command::EcrCurve, d1.path().into())).unwrap();
        let b = run(&tiny_spec(Command::EcrCurve, d2.path().into())).unwrap();
        let bytes_a = std::fs::read(&a.files[0]).unwrap();
        let bytes_b = std::fs::read(&b.files[0]).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn table1_reports_config_derived_values() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&tiny_spec(Command::Table1, dir.path().into())).unwrap();
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let (header, rows) = crate::chart::parse_csv(&csv);
        assert_eq!(header, vec!["entry_index", "system", "metric", "value"]);
        let value = |sys: &str, metric: &str| -> f64 {
            rows.iter()
                .find(|r| r[1] == sys && r[2] == metric)
                .unwrap()[3]
                .parse()
                .unwrap()
        };
        assert_eq!(value("isac", "cr_diversity_order"), 9.0);
        assert_eq!(value("isac", "cr_high_snr_slope"), 3.0);
        assert_eq!(value("isac", "sr_high_snr_slope"), 2.25);
        assert_eq!(value("fdsac", "cr_high_snr_slope"), 1.5);
        assert_eq!(value("fdsac", "sr_high_snr_slope"), 1.125);
        assert!(out.report.unwrap().contains("cr_diversity_order"));
    }

    #[test]
    fn rejects_bad_sweeps_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = tiny_spec(Command::OpCurve, dir.path().join("never"));
        spec.sweep.step_db = 0.0;
        assert!(matches!(run(&spec), Err(Error::Config(_))));

        let mut spec = tiny_spec(Command::OpCurve, dir.path().join("never"));
        spec.sweep.stop_db = -10.0;
        assert!(matches!(run(&spec), Err(Error::Config(_))));

        let mut spec = tiny_spec(Command::OpCurve, dir.path().join("never"));
        spec.trials = 0;
        assert!(matches!(run(&spec), Err(Error::Config(_))));

        assert!(!dir.path().join("never").exists());
    }
}
