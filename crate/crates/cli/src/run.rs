//! Subcommand dispatch and artifact emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optomech::export::{grid_csv, heatmap_svg, to_json, wigner_csv, write_atomic, Manifest};
use optomech::gaussian::change_basis;
use optomech::measurement::{outcome_for_target, OutcomePolicy, PulseEvent};
use optomech::protocol::{
    generation_criteria, run_entangle_with, run_verify, single_pulse_entanglement, Criteria,
    ProtocolReport,
};
use optomech::sweep::{
    sweep_coupling_mismatch, sweep_en_vs_q, sweep_max_en_heatmap, sweep_timing_heatmap,
    sweep_verify_opt, Axis, SweepGrid, SweepOptions,
};
use optomech::wigner::{wigner_marginal_grid, GridSpec, WignerGrid};
use optomech::{BasisMap, GaussianState};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Two-pulse optomechanical entanglement: simulation, verification and sweeps.
///
/// Parameters default to omega2/omega1 = 3, chi = 2, Q = 1e6, n_th1 = 1e4,
/// n_th2 = n_th1/3. Precedence: defaults < --config file < --set < flags.
#[derive(Debug, Parser)]
#[command(name = "optomech", version, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the two-pulse entangling sequence.
    Entangle,
    /// Entangle, then reconstruct the state from three verification readouts.
    Verify,
    /// Two-mode squeezing from a single pulse.
    SinglePulse,
    /// Parameter sweeps.
    Sweep {
        #[arg(value_enum)]
        name: SweepName,
    },
    /// Wigner marginal of two quadratures at a stage of the sequence.
    Wigner {
        /// 0 thermal, 1 after the first pulse, 2 before the second, 3 after it.
        #[arg(long)]
        stage: Option<usize>,
        /// Quadrature pair, e.g. `X+,P+` or `X1,P2`.
        #[arg(long)]
        pair: Option<String>,
        /// Condition the first pulse on an outcome that puts <X+> here.
        #[arg(long, allow_hyphen_values = true)]
        mean_xplus: Option<f64>,
    },
    /// Evaluate the generation and verification criteria.
    Criteria,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepName {
    EnVsQ,
    Timing,
    VerifyOpt,
    Coupling,
    MaxEn,
}

impl SweepName {
    fn label(self) -> &'static str {
        match self {
            SweepName::EnVsQ => "en-vs-q",
            SweepName::Timing => "timing",
            SweepName::VerifyOpt => "verify-opt",
            SweepName::Coupling => "coupling",
            SweepName::MaxEn => "max-en",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML file with flat `key = value` pairs.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sweep worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Artifacts to write; repeat or comma-separate.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
    /// Any config key, e.g. `--set q_points=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Sets chi1 and chi2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub chi: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub chi1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub chi2: Option<f64>,
    /// Sets q1 and q2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long = "n-th1", global = true, allow_hyphen_values = true)]
    pub n_th1: Option<f64>,
    #[arg(long = "n-th2", global = true, allow_hyphen_values = true)]
    pub n_th2: Option<f64>,
    /// omega2 / omega1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ratio: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<f64>,
}

/// Resolves defaults, file, `--set` and flags into a validated config.
pub fn parse_config(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for s in &o.set {
        cfg.set(s)?;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.workers {
        cfg.workers = Some(v);
    }
    if !o.format.is_empty() {
        cfg.formats = o.format.clone();
    }
    if let Some(v) = o.chi {
        cfg.chi1 = v;
        cfg.chi2 = v;
    }
    if let Some(v) = o.chi1 {
        cfg.chi1 = v;
    }
    if let Some(v) = o.chi2 {
        cfg.chi2 = v;
    }
    if let Some(v) = o.q {
        cfg.q1 = v;
        cfg.q2 = v;
    }
    if let Some(v) = o.n_th1 {
        cfg.n_th1 = v;
    }
    if let Some(v) = o.n_th2 {
        cfg.n_th2 = v;
    }
    if let Some(v) = o.ratio {
        cfg.omega2 = v * cfg.omega1;
    }
    if let Some(v) = o.tau {
        cfg.tau = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Runs one command; returns the stdout summary.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<String, CliError> {
    let start = Instant::now();
    let mut out = Outputs::new(&cfg.out)?;
    let (label, summary) = match command {
        Command::Entangle => ("entangle".to_string(), entangle(cfg, &mut out, false)?),
        Command::Verify => ("verify".to_string(), entangle(cfg, &mut out, true)?),
        Command::SinglePulse => ("single-pulse".to_string(), single_pulse(cfg, &mut out)?),
        Command::Criteria => ("criteria".to_string(), criteria(cfg, &mut out)?),
        Command::Sweep { name } => (format!("sweep {}", name.label()), sweep(*name, cfg, &mut out)?),
        Command::Wigner {
            stage,
            pair,
            mean_xplus,
        } => {
            let mut c = cfg.clone();
            if let Some(s) = stage {
                c.stage = *s;
            }
            if let Some(p) = pair {
                c.pair = p.clone();
            }
            if mean_xplus.is_some() {
                c.mean_xplus = *mean_xplus;
            }
            c.validate()?;
            ("wigner".to_string(), wigner(&c, &mut out)?)
        }
    };
    let manifest = Manifest::new(&label, cfg, out.written.clone(), start.elapsed());
    out.write("manifest.json", &to_json(&manifest)?)?;
    Ok(summary)
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn criteria_lines(c: &Criteria, s: &mut String) {
    let _ = writeln!(s, "chi > 1/sqrt2: {} (chi = {})", flag(c.strong_measurement), c.chi);
    let _ = writeln!(
        s,
        "generation (chi^4-1)/chi^2 > 2 pi n/Q: {} (margin {:.6e})",
        flag(c.generation),
        c.generation_margin
    );
    let _ = writeln!(
        s,
        "verification 2 pi n/Q < 1: {} (margin {:.6e})",
        flag(c.verification),
        c.verification_margin
    );
}

fn entangle(cfg: &RunConfig, out: &mut Outputs, verify: bool) -> Result<String, CliError> {
    let params = cfg.params()?;
    let sched = cfg.entangle_schedule()?;
    let run = run_entangle_with(&params, &sched, cfg.outcomes())?;
    let mut report = ProtocolReport::from_entangle(&run, &params, &sched);
    if verify {
        let vs = cfg.verify_schedule()?;
        let ver = run_verify(&run.state, &params, sched.tau, &vs)?;
        report = report.with_verification(&ver, &vs);
    }
    if cfg.wants(Format::Json) {
        out.write("report.json", &to_json(&report)?)?;
    }
    let mut s = String::new();
    let _ = writeln!(s, "E_N_ent = {:.6}", report.e_n_ent);
    if let Some(e) = report.e_n_ver {
        let _ = writeln!(s, "E_N_ver = {e:.6}");
    }
    let v = report.collective_variances;
    let _ = writeln!(
        s,
        "collective variances (X+, P+, X-, P-) = ({:.6e}, {:.6e}, {:.6e}, {:.6e})",
        v[0], v[1], v[2], v[3]
    );
    criteria_lines(&report.criteria, &mut s);
    Ok(s)
}

fn single_pulse(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let r = single_pulse_entanglement(&cfg.params()?)?;
    if cfg.wants(Format::Json) {
        out.write("report.json", &to_json(&r)?)?;
    }
    Ok(format!(
        "n = {}, chi = {}\nE_N (diagonal model) = {:.6} ({})\nE_N (simulated pulse) = {:.6}\n",
        r.n,
        r.chi,
        r.e_n,
        if r.entangled { "entangled" } else { "separable" },
        r.simulated_e_n
    ))
}

fn criteria(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let c = generation_criteria(&cfg.params()?);
    if cfg.wants(Format::Json) {
        out.write("report.json", &to_json(&c)?)?;
    }
    let mut s = String::new();
    criteria_lines(&c, &mut s);
    match c.q_threshold {
        Some(q) => {
            let _ = writeln!(s, "Q threshold 2 pi n chi^2/(chi^4-1) = {q:.6e}");
        }
        None => {
            let _ = writeln!(s, "Q threshold: none (chi^4 <= 1)");
        }
    }
    Ok(s)
}

fn sweep(name: SweepName, cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let params = cfg.params()?;
    let opts = SweepOptions {
        workers: cfg.workers,
        optimizer: cfg.optimizer_config(),
    };
    let ratio = |d: (f64, f64, usize)| cfg.linear_axis("ratio", (cfg.ratio_min, cfg.ratio_max, cfg.ratio_points), d);
    let (grid, heat): (SweepGrid, Option<&str>) = match name {
        SweepName::EnVsQ => {
            let chis = cfg.chis.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0]);
            let q = Axis::log(
                "q",
                cfg.q_min.unwrap_or(1e3),
                cfg.q_max.unwrap_or(1e8),
                cfg.q_points.unwrap_or(200),
            );
            (sweep_en_vs_q(&chis, &q, &params, &opts)?, Some("e_n_ent"))
        }
        SweepName::Timing => {
            let tau = cfg.linear_axis(
                "tau",
                (cfg.tau_min, cfg.tau_max, cfg.tau_points),
                (0.0, 3.0 * std::f64::consts::PI, 200),
            );
            (
                sweep_timing_heatmap(&tau, &ratio((1.0, 9.0, 200)), &params, &opts)?,
                Some("e_n_ent"),
            )
        }
        SweepName::VerifyOpt => (sweep_verify_opt(&ratio((2.4, 3.6, 121)), &params, &opts)?, None),
        SweepName::Coupling => {
            let eps = cfg.linear_axis("epsilon", (cfg.eps_min, cfg.eps_max, cfg.eps_points), (-0.5, 1.0, 151));
            let chi1s = cfg.chi1s.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
            (sweep_coupling_mismatch(&eps, &chi1s, &params, &opts)?, Some("e_n_ent"))
        }
        SweepName::MaxEn => {
            let m = cfg.linear_axis(
                "mismatch",
                (cfg.mismatch_min, cfg.mismatch_max, cfg.mismatch_points),
                (0.1, 3.0, 59),
            );
            (
                sweep_max_en_heatmap(&ratio((1.0, 9.0, 81)), &m, &params, &opts)?,
                Some("e_n_max"),
            )
        }
    };
    if cfg.wants(Format::Csv) {
        out.write("grid.csv", &grid_csv(&grid)?)?;
    }
    if cfg.wants(Format::Json) {
        out.write("report.json", &to_json(&grid)?)?;
    }
    if cfg.wants(Format::Svg) {
        if let Some(col) = heat {
            if let Some(m) = grid.as_matrix(col) {
                let svg = heatmap_svg(&m, col, &grid.axes[1].name, &grid.axes[0].name);
                out.write("heatmap.svg", svg.as_bytes())?;
            }
        }
    }

    let mut s = format!("sweep {}: {} points\n", name.label(), grid.rows.len());
    for col in &grid.columns[grid.axes.len()..] {
        let vals = grid.column(col).unwrap_or_default();
        let (lo, hi) = vals
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let _ = writeln!(s, "  {col}: [{lo:.6}, {hi:.6}]");
    }
    Ok(s)
}

const QUADRATURES: [(&str, bool, usize); 8] = [
    ("X1", false, 0),
    ("P1", false, 1),
    ("X2", false, 2),
    ("P2", false, 3),
    ("X+", true, 0),
    ("P+", true, 1),
    ("X-", true, 2),
    ("P-", true, 3),
];

fn parse_pair(pair: &str) -> Result<(bool, (usize, usize)), CliError> {
    let bad = || CliError::Config {
        key: "pair".into(),
        reason: format!(
            "expected two of X1,P1,X2,P2 or two of X+,P+,X-,P-, got `{pair}`"
        ),
    };
    let look = |s: &str| QUADRATURES.iter().find(|q| q.0.eq_ignore_ascii_case(s.trim())).copied();
    let (a, b) = pair.split_once(',').ok_or_else(bad)?;
    let (a, b) = (look(a).ok_or_else(bad)?, look(b).ok_or_else(bad)?);
    if a.1 != b.1 || a.2 == b.2 {
        return Err(bad());
    }
    Ok((a.1, (a.2, b.2)))
}

#[derive(Serialize)]
struct WignerReport<'a> {
    stage: usize,
    stage_label: &'a str,
    pair: &'a str,
    first_outcome: f64,
    mean: Vec<f64>,
    peak: (f64, f64),
    total: f64,
    grid: &'a GridSpec,
}

fn wigner(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let (collective, pair) = parse_pair(&cfg.pair)?;
    let params = cfg.params()?;
    let sched = cfg.entangle_schedule()?;
    let mut outcomes = cfg.outcomes();
    if let Some(target) = cfg.mean_xplus {
        let thermal = optomech::gaussian::thermal_state(params.n1(), params.n2())?;
        let y = outcome_for_target(&thermal, &params, &PulseEvent::from_params(&params, 0.0), target)?;
        outcomes[0] = OutcomePolicy::Fixed(y);
    }
    let run = run_entangle_with(&params, &sched, outcomes)?;
    let stage = &run.stages[cfg.stage];
    let state: GaussianState = if collective {
        change_basis(&stage.state, &BasisMap::collective(2))?
    } else {
        stage.state.clone()
    };
    let spec = GridSpec::around(&state, pair, cfg.wigner_width, cfg.wigner_points)?;
    let w: WignerGrid = wigner_marginal_grid(&state, pair, &spec)?;
    let peak = w.peak();
    if cfg.wants(Format::Csv) {
        out.write("wigner.csv", &wigner_csv(&w)?)?;
    }
    if cfg.wants(Format::Svg) {
        let (a, b) = cfg.pair.split_once(',').unwrap_or(("x", "y"));
        out.write("heatmap.svg", heatmap_svg(&w.density, "W", a, b).as_bytes())?;
    }
    if cfg.wants(Format::Json) {
        let report = WignerReport {
            stage: cfg.stage,
            stage_label: stage.label,
            pair: &cfg.pair,
            first_outcome: run.records[0].outcome,
            mean: state.mean().iter().copied().collect(),
            peak,
            total: w.total(),
            grid: &spec,
        };
        out.write("report.json", &to_json(&report)?)?;
    }
    Ok(format!(
        "stage {} ({}), pair {}: peak at ({:.6}, {:.6}), integral {:.6}\n",
        cfg.stage,
        stage.label,
        cfg.pair,
        peak.0,
        peak.1,
        w.total()
    ))
}
