//! Parameter sweeps and delay optimization behind the figure data.
//!
//! Every grid point is recomputed from the covariance dynamics; the closed
//! forms in [`crate::protocol`] are only used as test oracles.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{change_basis, log_negativity_unclipped, BasisMap};
use crate::optimize::{maximize, OptimizerConfig};
use crate::params::SystemParams;
use crate::protocol::{
    readout_variance, reconstructed_e_n_unclipped, run_entangle, run_verify, EntangleSchedule,
    VerifySchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: AxisScale,
    /// Explicit sample list; overrides `min`/`max`/`count` spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            count,
            scale: AxisScale::Linear,
            values: None,
        }
    }

    pub fn log(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            scale: AxisScale::Log,
            ..Self::linear(name, min, max, count)
        }
    }

    pub fn list(name: &str, values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            values: Some(values.to_vec()),
            ..Self::linear(name, min, max, values.len())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = &self.values {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param("axis", format!("`{}` needs finite values", self.name)));
            }
            return Ok(());
        }
        if self.count < 2 {
            return Err(Error::param("axis", format!("`{}` needs count >= 2", self.name)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::param(
                "axis",
                format!("`{}` bounds [{}, {}] are invalid", self.name, self.min, self.max),
            ));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(Error::param("axis", format!("log axis `{}` needs min > 0", self.name)));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = self.count;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.scale {
                    AxisScale::Linear if i + 1 == n => self.max,
                    AxisScale::Linear => self.min + f * (self.max - self.min),
                    AxisScale::Log if i == 0 => self.min,
                    AxisScale::Log if i + 1 == n => self.max,
                    AxisScale::Log => 10f64.powf(self.min.log10() + f * (self.max.log10() - self.min.log10())),
                }
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.as_ref().map_or(self.count, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Axis definitions plus one row per grid point: axis values first, then
/// result columns. Rows are ordered with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub name: String,
    pub axes: Vec<Axis>,
    pub fixed: SystemParams,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepGrid {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Values of `column` reshaped to `[first axis][second axis]`.
    pub fn as_matrix(&self, column: &str) -> Option<Vec<Vec<f64>>> {
        if self.axes.len() != 2 {
            return None;
        }
        let values = self.column(column)?;
        Some(values.chunks(self.axes[1].len()).map(<[f64]>::to_vec).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the machine parallelism.
    pub workers: Option<usize>,
    pub optimizer: OptimizerConfig,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Evaluates `f` on every point, in parallel, keeping input order.
pub fn evaluate<P, R, F>(points: &[P], workers: Option<usize>, f: F) -> Result<Vec<R>>
where
    P: Sync,
    R: Send,
    F: Fn(&P) -> Result<R> + Sync + Send,
{
    if workers == Some(1) {
        return points.iter().map(f).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::param("workers", "must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| points.par_iter().map(&f).collect())
}

fn cartesian(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn collect_rows(inputs: &[(f64, f64)], results: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .zip(results)
        .map(|(&(a, b), r)| {
            let mut row = vec![a, b];
            row.extend(r);
            row
        })
        .collect()
}

fn columns(axes: &[Axis], results: &[&str]) -> Vec<String> {
    axes.iter()
        .map(|a| a.name.clone())
        .chain(results.iter().map(|s| (*s).to_string()))
        .collect()
}

/// E_N after entanglement and after verification against `Q`, one curve per
/// measurement strength.
pub fn sweep_en_vs_q(
    chis: &[f64],
    q_axis: &Axis,
    params: &SystemParams,
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    q_axis.validate()?;
    let chi_axis = Axis::list("chi", chis);
    chi_axis.validate()?;
    let inputs = cartesian(chis, &q_axis.points());
    let results = evaluate(&inputs, opts.workers, |&(chi, q)| {
        let p = params.with_chi(chi).with_q(q);
        let ent = EntangleSchedule::default().with_tau(FRAC_PI_2 / p.omega1);
        let run = run_entangle(&p, &ent)?;
        let ver = run_verify(&run.state, &p, ent.tau, &VerifySchedule::for_params(&p))?;
        let col = run.collective();
        let c = col.cov();
        Ok(vec![
            run.e_n,
            ver.e_n_ver,
            c[(0, 0)],
            c[(1, 1)],
            c[(2, 2)],
            c[(3, 3)],
            ver.sigma_ver[(0, 0)],
            ver.sigma_ver[(1, 1)],
            ver.sigma_ver[(3, 3)],
        ])
    })?;
    let axes = vec![chi_axis, q_axis.clone()];
    Ok(SweepGrid {
        name: "en-vs-q".into(),
        columns: columns(
            &axes,
            &[
                "e_n_ent", "e_n_ver", "var_x_plus", "var_p_plus", "var_x_minus", "var_p_minus",
                "ver_x_plus", "ver_cross", "ver_p_minus",
            ],
        ),
        axes,
        fixed: *params,
        rows: collect_rows(&inputs, results),
    })
}

/// E_N after the two pulses on a `(omega2/omega1, tau)` grid.
pub fn sweep_timing_heatmap(
    tau_axis: &Axis,
    ratio_axis: &Axis,
    params: &SystemParams,
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    tau_axis.validate()?;
    ratio_axis.validate()?;
    if tau_axis.points().iter().any(|&t| t < 0.0) || ratio_axis.points().iter().any(|&r| r <= 0.0) {
        return Err(Error::param("axis", "tau must be >= 0 and ratio > 0"));
    }
    let inputs = cartesian(&ratio_axis.points(), &tau_axis.points());
    let results = evaluate(&inputs, opts.workers, |&(ratio, tau)| {
        let p = params.with_ratio(ratio);
        if tau == 0.0 {
            // both pulses coincide: a single pulse of doubled strength squared
            let p0 = p.with_chi(p.chi_eff() * std::f64::consts::SQRT_2);
            let e = crate::protocol::single_pulse_simulated(&p0)?;
            return Ok(vec![e]);
        }
        Ok(vec![run_entangle(&p, &EntangleSchedule::default().with_tau(tau))?.e_n])
    })?;
    let axes = vec![ratio_axis.clone(), tau_axis.clone()];
    Ok(SweepGrid {
        name: "timing".into(),
        columns: columns(&axes, &["e_n_ent"]),
        axes,
        fixed: *params,
        rows: collect_rows(&inputs, results),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayOptimum {
    pub ratio: f64,
    pub tau: f64,
    pub e_n: f64,
    pub bracket: (f64, f64),
    pub evals: usize,
    pub diagnostic: Option<String>,
}

/// Bracket around the `(0,0)` sequence: between `tau omega1 = pi/2` and the
/// realignment `tau omega2 = 3 pi/2`, widened by half on each side.
pub fn entangle_bracket(params: &SystemParams) -> (f64, f64) {
    let a = FRAC_PI_2 / params.omega1;
    let b = 3.0 * FRAC_PI_2 / params.omega2;
    (0.5 * a.min(b), 1.5 * a.max(b))
}

pub fn optimize_entangle_delay(
    ratio: f64,
    params: &SystemParams,
    cfg: &OptimizerConfig,
) -> Result<DelayOptimum> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::param("ratio", format!("must be > 0, got {ratio}")));
    }
    let p = params.with_ratio(ratio);
    p.validate()?;
    let bracket = cfg.bounds_or(&[entangle_bracket(&p)])[0];
    let sched = EntangleSchedule::default();
    // unclipped E_N keeps a slope where the state is separable
    let opt = maximize(
        |x| {
            run_entangle(&p, &sched.with_tau(x[0]))
                .and_then(|r| log_negativity_unclipped(&r.state))
                .unwrap_or(f64::NAN)
        },
        &[bracket],
        cfg,
    )?;
    let diagnostic = (opt.value <= 0.0).then(|| {
        format!(
            "no entangling delay in [{:.6}, {:.6}] at ratio {ratio}",
            bracket.0, bracket.1
        )
    });
    Ok(DelayOptimum {
        ratio,
        tau: opt.x[0],
        e_n: opt.value.max(0.0),
        bracket,
        evals: opt.evals,
        diagnostic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptimum {
    pub ratio: f64,
    pub tau: f64,
    pub e_n_ent: f64,
    pub delays: VerifySchedule,
    pub e_n_ver: f64,
    /// E_N_ver of the unoptimized protocol (`tau = pi/2`, default delays).
    pub e_n_ver_default: f64,
    pub evals: usize,
    pub diagnostic: Option<String>,
}

/// Half-width of the search window around each default verification delay.
pub const VERIFY_DELAY_WINDOW: f64 = FRAC_PI_8;

/// Optimizes `tau` first, then the three verification delays, each searched
/// within [`VERIFY_DELAY_WINDOW`] of its default so that every readout keeps
/// its role.
pub fn optimize_verification(
    ratio: f64,
    params: &SystemParams,
    cfg: &OptimizerConfig,
) -> Result<VerifyOptimum> {
    let ent = optimize_entangle_delay(ratio, params, &OptimizerConfig { bounds: None, ..cfg.clone() })?;
    let p = params.with_ratio(ratio);
    let state = run_entangle(&p, &EntangleSchedule::default().with_tau(ent.tau))?.state;
    let defaults = VerifySchedule::for_params(&p);
    let w = VERIFY_DELAY_WINDOW / p.omega1;
    let default_bounds: Vec<(f64, f64)> = defaults.delays().iter().map(|&d| (d - w, d + w)).collect();
    let bounds = cfg.bounds_or(&default_bounds);

    let e_n_ver = |d: &[f64]| -> Result<f64> {
        let v: Vec<f64> = d
            .iter()
            .map(|&delay| readout_variance(&state, &p, ent.tau, delay, defaults.include_readout_imprecision).map(|r| r.0))
            .collect::<Result<_>>()?;
        Ok(reconstructed_e_n_unclipped(v[0], v[2], v[1])?.1)
    };
    let opt = maximize(|x| e_n_ver(x).unwrap_or(f64::NAN), &bounds, cfg)?;
    let tau0 = FRAC_PI_2 / p.omega1;
    let run0 = run_entangle(&p, &EntangleSchedule::default().with_tau(tau0))?;
    let e_default = run_verify(&run0.state, &p, tau0, &defaults)?.e_n_ver;
    let delays = VerifySchedule {
        d_plus: opt.x[0],
        d_minus: opt.x[1],
        d_cross: opt.x[2],
        ..defaults
    };
    let diagnostic = ent.diagnostic.clone().or_else(|| {
        (opt.value <= 0.0).then(|| format!("no verifiable entanglement at ratio {ratio}"))
    });
    Ok(VerifyOptimum {
        ratio,
        tau: ent.tau,
        e_n_ent: ent.e_n,
        delays,
        e_n_ver: opt.value.max(0.0),
        e_n_ver_default: e_default,
        evals: ent.evals + opt.evals,
        diagnostic,
    })
}

/// Optimized entanglement and verification across frequency ratios.
pub fn sweep_verify_opt(ratio_axis: &Axis, params: &SystemParams, opts: &SweepOptions) -> Result<SweepGrid> {
    ratio_axis.validate()?;
    let ratios = ratio_axis.points();
    let results = evaluate(&ratios, opts.workers, |&r| {
        let o = optimize_verification(r, params, &opts.optimizer)?;
        Ok(vec![
            o.tau,
            o.e_n_ent,
            o.e_n_ver,
            o.e_n_ver_default,
            o.delays.d_plus,
            o.delays.d_minus,
            o.delays.d_cross,
        ])
    })?;
    let axes = vec![ratio_axis.clone()];
    Ok(SweepGrid {
        name: "verify-opt".into(),
        columns: columns(
            &axes,
            &["tau", "e_n_ent", "e_n_ver", "e_n_ver_default", "d_plus", "d_minus", "d_cross"],
        ),
        axes,
        fixed: *params,
        rows: ratios
            .iter()
            .zip(results)
            .map(|(&r, mut v)| {
                v.insert(0, r);
                v
            })
            .collect(),
    })
}

/// E_N against the coupling mismatch `chi2 = (1 + eps) chi1`, at the default
/// schedule.
pub fn sweep_coupling_mismatch(
    eps_axis: &Axis,
    chi1s: &[f64],
    params: &SystemParams,
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    eps_axis.validate()?;
    let chi_axis = Axis::list("chi1", chi1s);
    chi_axis.validate()?;
    if eps_axis.points().iter().any(|&e| e < -1.0) {
        return Err(Error::param("epsilon", "chi2/chi1 = 1 + eps must be >= 0"));
    }
    let inputs = cartesian(chi1s, &eps_axis.points());
    let results = evaluate(&inputs, opts.workers, |&(chi1, eps)| {
        let p = SystemParams {
            chi1,
            chi2: (1.0 + eps) * chi1,
            ..*params
        };
        let ent = EntangleSchedule::default().with_tau(FRAC_PI_2 / p.omega1);
        let run = run_entangle(&p, &ent)?;
        let ver = run_verify(&run.state, &p, ent.tau, &VerifySchedule::for_params(&p))?;
        Ok(vec![run.e_n, ver.e_n_ver])
    })?;
    let axes = vec![chi_axis, eps_axis.clone()];
    Ok(SweepGrid {
        name: "coupling".into(),
        columns: columns(&axes, &["e_n_ent", "e_n_ver"]),
        axes,
        fixed: *params,
        rows: collect_rows(&inputs, results),
    })
}

/// Delay-optimized E_N over `(omega2/omega1, chi2/chi1)` with `chi1` fixed.
pub fn sweep_max_en_heatmap(
    ratio_axis: &Axis,
    mismatch_axis: &Axis,
    params: &SystemParams,
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    ratio_axis.validate()?;
    mismatch_axis.validate()?;
    if mismatch_axis.points().iter().any(|&m| m < 0.0) {
        return Err(Error::param("mismatch", "chi2/chi1 must be >= 0"));
    }
    let inputs = cartesian(&mismatch_axis.points(), &ratio_axis.points());
    let results = evaluate(&inputs, opts.workers, |&(m, ratio)| {
        let p = SystemParams {
            chi2: m * params.chi1,
            ..*params
        };
        if p.chi1 == 0.0 && p.chi2 == 0.0 {
            return Ok(vec![0.0, f64::NAN]);
        }
        let o = optimize_entangle_delay(ratio, &p, &opts.optimizer)?;
        Ok(vec![o.e_n, o.tau])
    })?;
    let axes = vec![mismatch_axis.clone(), ratio_axis.clone()];
    Ok(SweepGrid {
        name: "max-en".into(),
        columns: columns(&axes, &["e_n_max", "tau_opt"]),
        axes,
        fixed: *params,
        rows: collect_rows(&inputs, results),
    })
}

/// Least-squares `y = c0 + c1 x + c2 x^2`.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::param("fit", "need at least three points"));
    }
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| xs[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let c = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::param("fit", e.to_string()))?;
    Ok([c[0], c[1], c[2]])
}

/// Collective-basis covariance after the sequence, for inspection.
pub fn collective_after_entangle(params: &SystemParams, tau: f64) -> Result<DMatrix<f64>> {
    let run = run_entangle(params, &EntangleSchedule::default().with_tau(tau))?;
    Ok(change_basis(&run.state, &BasisMap::collective(2))?.cov().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serial() -> SweepOptions {
        SweepOptions {
            workers: Some(1),
            ..SweepOptions::default()
        }
    }

    #[test]
    fn axis_points() {
        let a = Axis::linear("t", 0.0, 1.0, 5);
        assert_eq!(a.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let l = Axis::log("q", 1e3, 1e6, 4).points();
        for (v, e) in l.iter().zip([1e3, 1e4, 1e5, 1e6]) {
            assert!((v / e - 1.0).abs() < 1e-12);
        }
        assert!(Axis::linear("t", 0.0, 1.0, 1).validate().is_err());
        assert!(Axis::log("q", 0.0, 1.0, 3).validate().is_err());
    }

    #[test]
    fn threshold_strength_gives_zero() {
        let g = sweep_en_vs_q(
            &[std::f64::consts::FRAC_1_SQRT_2],
            &Axis::log("q", 1e4, 1e8, 5),
            &SystemParams::default(),
            &serial(),
        )
        .unwrap();
        assert!(g.column("e_n_ent").unwrap().iter().all(|&e| e < 1e-3));
    }

    #[test]
    fn ideal_delay_at_ratio_three() {
        let p = SystemParams::ideal(1e4, 1e4 / 3.0, 2.0);
        let o = optimize_entangle_delay(3.0, &p, &OptimizerConfig::default()).unwrap();
        assert!((o.tau - FRAC_PI_2).abs() < 1e-4, "{o:?}");
        let zero = optimize_entangle_delay(3.0, &p.with_chi(0.0), &OptimizerConfig::default()).unwrap();
        assert_eq!(zero.e_n, 0.0);
        assert!(zero.diagnostic.is_some());
    }

    #[test]
    fn verification_optimum_matches_default_protocol() {
        let p = SystemParams::default();
        let o = optimize_verification(3.0, &p, &OptimizerConfig::default()).unwrap();
        assert!(o.e_n_ver <= o.e_n_ent + 1e-9);
        assert!((o.e_n_ver - o.e_n_ver_default).abs() < 1e-3, "{o:?}");
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let xs: Vec<f64> = (0..11).map(|i| -0.05 + 0.01 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 1.5 * x - 32.0 * x * x).collect();
        let c = quadratic_fit(&xs, &ys).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-10 && (c[1] - 1.5).abs() < 1e-8 && (c[2] + 32.0).abs() < 1e-6);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let tau = Axis::linear("tau", 0.1, 3.0, 7);
        let ratio = Axis::linear("ratio", 1.0, 5.0, 5);
        let p = SystemParams::default();
        let a = sweep_timing_heatmap(&tau, &ratio, &p, &serial()).unwrap();
        let b = sweep_timing_heatmap(
            &tau,
            &ratio,
            &p,
            &SweepOptions {
                workers: Some(4),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.as_matrix("e_n_ent").unwrap().len(), 5);
    }
}
