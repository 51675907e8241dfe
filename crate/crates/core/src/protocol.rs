//! Two-pulse entangling sequence, the verification sequence and the
//! closed-form reference expressions they are checked against.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{decohere, measured_quadrature};
use crate::error::{Error, Result};
use crate::gaussian::{
    change_basis, log_negativity, log_negativity_unclipped, thermal_state, BasisMap, GaussianState,
};
use crate::measurement::{measure_position, MeasurementRecord, OutcomePolicy, PulseEvent};
use crate::params::SystemParams;

/// Pulse delay and the `(k, l)` sequence it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangleSchedule {
    pub k: u32,
    pub l: u32,
    pub tau: f64,
}

impl Default for EntangleSchedule {
    fn default() -> Self {
        Self {
            k: 0,
            l: 0,
            tau: FRAC_PI_2,
        }
    }
}

impl EntangleSchedule {
    /// `tau omega1 = (2k+1) pi/2`.
    pub fn for_sequence(k: u32, l: u32, params: &SystemParams) -> Self {
        Self {
            k,
            l,
            tau: timing_root(k, l).0 / params.omega1,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("must be finite and > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Solution of `tau omega1 = (2k+1) pi/2`, `tau omega2 = (2k+3) pi/2 + 2 l pi`
/// as `(tau omega1, omega2 / omega1)`.
pub fn timing_root(k: u32, l: u32) -> (f64, f64) {
    let (k, l) = (f64::from(k), f64::from(l));
    (
        (2.0 * k + 1.0) * FRAC_PI_2,
        (2.0 * k + 3.0 + 4.0 * l) / (2.0 * k + 1.0),
    )
}

/// Delays of the three verification readouts after the last entangling
/// pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySchedule {
    pub d_plus: f64,
    pub d_minus: f64,
    pub d_cross: f64,
    /// Add the homodyne imprecision `1/(2 k^2)` of each readout.
    pub include_readout_imprecision: bool,
}

impl Default for VerifySchedule {
    fn default() -> Self {
        Self {
            d_plus: FRAC_PI_2,
            d_minus: PI,
            d_cross: FRAC_PI_4,
            include_readout_imprecision: false,
        }
    }
}

impl VerifySchedule {
    /// Default delays in units of `1/omega1`.
    pub fn for_params(params: &SystemParams) -> Self {
        let d = Self::default();
        Self {
            d_plus: d.d_plus / params.omega1,
            d_minus: d.d_minus / params.omega1,
            d_cross: d.d_cross / params.omega1,
            ..d
        }
    }

    pub fn delays(&self) -> [f64; 3] {
        [self.d_plus, self.d_minus, self.d_cross]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [
            ("d_plus", self.d_plus),
            ("d_minus", self.d_minus),
            ("d_cross", self.d_cross),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::param(name, format!("must be finite and > 0, got {d}")));
            }
        }
        Ok(())
    }
}

/// Entanglement criteria with signed margins (positive means satisfied).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub chi: f64,
    /// `2 pi n / Q`.
    pub heating: f64,
    /// `chi > 1/sqrt(2)`.
    pub strong_measurement: bool,
    pub strong_margin: f64,
    /// `(chi^4 - 1)/chi^2 > 2 pi n / Q`.
    pub generation: bool,
    pub generation_margin: f64,
    /// `2 pi n / Q < 1`.
    pub verification: bool,
    pub verification_margin: f64,
    /// Smallest `Q` allowed by the generation inequality above; `None` when
    /// no `Q` satisfies it.
    pub q_threshold: Option<f64>,
    /// Zero crossing of the approximate `E_N^ent`: `2 pi n chi^2 / (4 chi^4 - 1)`.
    pub q_threshold_en: Option<f64>,
}

/// Effective occupation for the `n / Q` criteria, `(n1 + (w2/w1) n2) / 2`,
/// which is `n` when `n1 = 3 n2 = n` at the ideal ratio.
fn criteria_occupation(params: &SystemParams) -> f64 {
    0.5 * (params.n1() + params.ratio() * params.n2())
}

pub fn generation_criteria(params: &SystemParams) -> Criteria {
    let chi = params.chi_eff();
    let heating = 2.0 * PI * params.heating_per_period();
    let chi2 = chi * chi;
    let n = criteria_occupation(params);
    let generation_lhs = if chi > 0.0 {
        (chi2 * chi2 - 1.0) / chi2
    } else {
        f64::NEG_INFINITY
    };
    let threshold = |den: f64| (den > 0.0).then(|| 2.0 * PI * n * chi2 / den);
    Criteria {
        chi,
        heating,
        strong_measurement: chi > FRAC_1_SQRT_2,
        strong_margin: chi - FRAC_1_SQRT_2,
        generation: generation_lhs > heating,
        generation_margin: generation_lhs - heating,
        verification: heating < 1.0,
        verification_margin: 1.0 - heating,
        q_threshold: threshold(chi2 * chi2 - 1.0),
        q_threshold_en: threshold(4.0 * chi2 * chi2 - 1.0),
    }
}

/// Exact two-pulse covariance for ideal frequencies, equal couplings and no
/// decoherence, with the parameters of its eigen-decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub a1: f64,
    pub a2: f64,
    pub c12: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
    /// `n_e e^{-r_e}`
    pub squeezed: f64,
    /// `n_e e^{+r_e}`
    pub anti_squeezed: f64,
    /// Canonical basis, `[[A1, C12], [C12, A2]]` with `C12 = -c12 sigma_z`.
    pub sigma: DMatrix<f64>,
}

pub fn closed_form_sigma_ent(params: &SystemParams) -> ClosedForm {
    let (n1, n2) = (params.n1(), params.n2());
    let chi2 = params.chi_eff().powi(2);
    let d = 1.0 + 2.0 * (n1 + n2) * chi2;
    // A1 = n1 + chi^2/2 - 2 n1^2 chi^2 / d, rearranged to avoid cancellation
    let a1 = n1 * (1.0 + 2.0 * n2 * chi2) / d + chi2 / 2.0;
    let a2 = n2 * (1.0 + 2.0 * n1 * chi2) / d + chi2 / 2.0;
    let c12 = chi2 / 2.0 + 2.0 * n1 * n2 * chi2 / d;
    let alpha_plus = (n1 + n2) / d;
    let alpha_minus = (n1 - n2) / d;
    let beta = chi2 * (1.0 + 4.0 * n1 * n2 / d);
    let root = alpha_minus.hypot(beta);
    #[rustfmt::skip]
    let sigma = DMatrix::from_row_slice(4, 4, &[
        a1,   0.0,  -c12, 0.0,
        0.0,  a1,   0.0,  c12,
        -c12, 0.0,  a2,   0.0,
        0.0,  c12,  0.0,  a2,
    ]);
    ClosedForm {
        a1,
        a2,
        c12,
        alpha_plus,
        alpha_minus,
        beta,
        squeezed: 0.5 * (alpha_plus + beta - root),
        anti_squeezed: 0.5 * (alpha_plus + beta + root),
        sigma,
    }
}

/// Leading order in `1/Q` of the collective-basis covariance after the
/// entangling sequence for `n1 = 3 n2 = n`:
/// `diag(1/4chi^2 + pi n/4 (1/Q1 + 1/Q2), n/2, n/2, 1/4chi^2)`.
pub fn approx_sigma_ent_collective(params: &SystemParams) -> [f64; 4] {
    let n = params.n1();
    let sq = 0.25 / params.chi_eff().powi(2);
    [
        sq + 0.25 * PI * n * (1.0 / params.q1 + 1.0 / params.q2),
        0.5 * n,
        0.5 * n,
        sq,
    ]
}

/// `-log2( (1/2chi^2) sqrt(1 + 2 pi n chi^2 / Q) )`, clipped at zero.
pub fn approx_e_n_ent(params: &SystemParams) -> f64 {
    let chi2 = params.chi_eff().powi(2);
    let h = 2.0 * PI * params.heating_per_period();
    (-(0.5 / chi2 * (1.0 + h * chi2).sqrt()).log2()).max(0.0)
}

/// `-log2( 1/2chi^2 + 2 pi n / Q )`, clipped at zero.
pub fn approx_e_n_ver(params: &SystemParams) -> f64 {
    let chi2 = params.chi_eff().powi(2);
    let h = 2.0 * PI * params.heating_per_period();
    (-(0.5 / chi2 + h).log2()).max(0.0)
}

/// Named snapshot of the mechanical state during the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub label: &'static str,
    pub t: f64,
    pub state: GaussianState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntangleRun {
    /// thermal, first pulse, decohered, second pulse
    pub stages: Vec<Stage>,
    pub records: Vec<MeasurementRecord>,
    pub state: GaussianState,
    pub e_n: f64,
}

impl EntangleRun {
    pub fn collective(&self) -> GaussianState {
        change_basis(&self.state, &BasisMap::collective(2)).expect("two-mode state")
    }
}

pub fn run_entangle(params: &SystemParams, schedule: &EntangleSchedule) -> Result<EntangleRun> {
    run_entangle_with(
        params,
        schedule,
        [OutcomePolicy::Marginalize, OutcomePolicy::Marginalize],
    )
}

pub fn run_entangle_with(
    params: &SystemParams,
    schedule: &EntangleSchedule,
    outcomes: [OutcomePolicy; 2],
) -> Result<EntangleRun> {
    params.validate()?;
    schedule.validate()?;
    let thermal = thermal_state(params.n1(), params.n2())?;
    run_entangle_from(thermal, params, schedule, outcomes)
}

/// Entangling sequence starting from an arbitrary two-mode state.
pub fn run_entangle_from(
    initial: GaussianState,
    params: &SystemParams,
    schedule: &EntangleSchedule,
    outcomes: [OutcomePolicy; 2],
) -> Result<EntangleRun> {
    let tau = schedule.tau;
    let first = PulseEvent::from_params(params, 0.0).with_outcome(outcomes[0]);
    let second = PulseEvent::from_params(params, tau).with_outcome(outcomes[1]);

    let (s1, r1) = measure_position(&initial, params, &first)?;
    let s2 = decohere(&s1, tau, params)?;
    let (s3, r2) = measure_position(&s2, params, &second)?;
    let e_n = log_negativity(&s3)?;
    Ok(EntangleRun {
        stages: vec![
            Stage { label: "thermal", t: 0.0, state: initial },
            Stage { label: "first-pulse", t: 0.0, state: s1 },
            Stage { label: "decohered", t: tau, state: s2 },
            Stage { label: "second-pulse", t: tau, state: s3.clone() },
        ],
        records: vec![r1, r2],
        state: s3,
        e_n,
    })
}

/// One verification readout branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyBranch {
    pub label: String,
    pub delay: f64,
    /// Canonical-basis quadrature read out at `tau + delay`.
    pub quadrature: Vec<f64>,
    pub variance: f64,
    /// Collective-basis covariance of the decohered state at readout.
    pub true_cov: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub branches: Vec<VerifyBranch>,
    /// `diag(v_plus, v_cross, v_cross, v_minus)` in the collective basis.
    pub sigma_ver: DMatrix<f64>,
    pub e_n_ver: f64,
}

/// Variance seen by a single readout at `tau + delay` on a copy of the
/// post-entanglement state.
pub fn readout_variance(
    state: &GaussianState,
    params: &SystemParams,
    tau: f64,
    delay: f64,
    include_imprecision: bool,
) -> Result<(f64, DVector<f64>, GaussianState)> {
    let decayed = decohere(state, delay, params)?;
    let u = measured_quadrature(params, tau + delay)?;
    let mut v = decayed.quadrature_variance(&u);
    if include_imprecision {
        let k2 = params.chi1 * params.chi1 + params.chi2 * params.chi2;
        if k2 == 0.0 {
            return Err(Error::param("chi", "readout imprecision is infinite at chi = 0"));
        }
        v += 0.5 / k2;
    }
    Ok((v, u, decayed))
}

/// E_N of the diagonal collective-basis reconstruction.
pub fn reconstructed_e_n(v_plus: f64, v_cross: f64, v_minus: f64) -> Result<(DMatrix<f64>, f64)> {
    let (sigma, raw) = reconstructed_e_n_unclipped(v_plus, v_cross, v_minus)?;
    Ok((sigma, raw.max(0.0)))
}

pub(crate) fn reconstructed_e_n_unclipped(
    v_plus: f64,
    v_cross: f64,
    v_minus: f64,
) -> Result<(DMatrix<f64>, f64)> {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![v_plus, v_cross, v_cross, v_minus]));
    let col = GaussianState::new(DVector::zeros(4), sigma.clone())?;
    let canonical = change_basis(&col, &BasisMap::collective(2).inverse())?;
    Ok((sigma, log_negativity_unclipped(&canonical)?))
}

pub fn run_verify(
    state: &GaussianState,
    params: &SystemParams,
    tau: f64,
    schedule: &VerifySchedule,
) -> Result<Verification> {
    schedule.validate()?;
    let b = BasisMap::collective(2);
    let labels = ["x-plus", "p-minus", "cross"];
    let mut branches = Vec::with_capacity(3);
    for (label, delay) in labels.iter().zip(schedule.delays()) {
        let (variance, u, decayed) =
            readout_variance(state, params, tau, delay, schedule.include_readout_imprecision)?;
        branches.push(VerifyBranch {
            label: (*label).to_string(),
            delay,
            quadrature: u.iter().copied().collect(),
            variance,
            true_cov: rows(change_basis(&decayed, &b)?.cov()),
        });
    }
    let (sigma_ver, e_n_ver) =
        reconstructed_e_n(branches[0].variance, branches[2].variance, branches[1].variance)?;
    Ok(Verification {
        branches,
        sigma_ver,
        e_n_ver,
    })
}

/// Row-major nested vectors for serialization.
pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEcho {
    pub entangle: EntangleSchedule,
    pub verify: Option<VerifySchedule>,
}

/// Results of a protocol run in a stable serialized layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    /// Canonical basis.
    pub sigma_ent: Vec<Vec<f64>>,
    /// Collective basis; absent before verification.
    pub sigma_ver: Option<Vec<Vec<f64>>>,
    pub e_n_ent: f64,
    pub e_n_ver: Option<f64>,
    pub criteria: Criteria,
    pub schedule: ScheduleEcho,
    pub params: SystemParams,
    /// Diagonal of `sigma_ent` in the collective basis `(X+, P+, X-, P-)`.
    pub collective_variances: [f64; 4],
    pub records: Vec<MeasurementRecord>,
    pub verification: Vec<VerifyBranch>,
}

impl ProtocolReport {
    pub fn from_entangle(run: &EntangleRun, params: &SystemParams, schedule: &EntangleSchedule) -> Self {
        let col = run.collective();
        let c = col.cov();
        Self {
            sigma_ent: rows(run.state.cov()),
            sigma_ver: None,
            e_n_ent: run.e_n,
            e_n_ver: None,
            criteria: generation_criteria(params),
            schedule: ScheduleEcho {
                entangle: *schedule,
                verify: None,
            },
            params: *params,
            collective_variances: [c[(0, 0)], c[(1, 1)], c[(2, 2)], c[(3, 3)]],
            records: run.records.clone(),
            verification: Vec::new(),
        }
    }

    pub fn with_verification(mut self, ver: &Verification, schedule: &VerifySchedule) -> Self {
        self.sigma_ver = Some(rows(&ver.sigma_ver));
        self.e_n_ver = Some(ver.e_n_ver);
        self.schedule.verify = Some(*schedule);
        self.verification = ver.branches.clone();
        self
    }
}

/// Full entangle-then-verify run.
pub fn run_protocol(
    params: &SystemParams,
    entangle: &EntangleSchedule,
    verify: &VerifySchedule,
) -> Result<ProtocolReport> {
    let run = run_entangle(params, entangle)?;
    let ver = run_verify(&run.state, params, entangle.tau, verify)?;
    Ok(ProtocolReport::from_entangle(&run, params, entangle).with_verification(&ver, verify))
}

/// E_N after one pulse at `t = 0` on the thermal state.
pub fn single_pulse_simulated(params: &SystemParams) -> Result<f64> {
    let thermal = thermal_state(params.n1(), params.n2())?;
    let (after, _) = measure_position(&thermal, params, &PulseEvent::from_params(params, 0.0))?;
    log_negativity(&after)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePulseReport {
    pub n: f64,
    pub chi: f64,
    /// Canonical basis covariance of `diag(1/4chi^2, n/2, n/3, n)`.
    pub cov: Vec<Vec<f64>>,
    pub e_n: f64,
    pub entangled: bool,
    /// E_N after one simulated pulse at `t = 0` on the thermal state.
    pub simulated_e_n: f64,
}

/// Single-pulse two-mode squeezing for `n1 = 3 n2 = n`, evaluated on the
/// collective-basis diagonal `(X+, P+, X-, P-) = (1/4chi^2, n/2, n/3, n)`.
pub fn single_pulse_entanglement(params: &SystemParams) -> Result<SinglePulseReport> {
    params.validate()?;
    let n = params.n1();
    let chi = params.chi_eff();
    let (cov, e_n) = if chi == 0.0 {
        let thermal = thermal_state(params.n1(), params.n2())?;
        (thermal.cov().clone(), 0.0)
    } else {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.25 / (chi * chi),
            n / 2.0,
            n / 3.0,
            n,
        ]));
        let col = GaussianState::new(DVector::zeros(4), diag)?;
        let canonical = change_basis(&col, &BasisMap::collective(2).inverse())?;
        let e = log_negativity(&canonical)?;
        (canonical.cov().clone(), e)
    };
    let simulated_e_n = single_pulse_simulated(params)?;
    Ok(SinglePulseReport {
        n,
        chi,
        cov: rows(&cov),
        e_n,
        entangled: e_n > 0.0,
        simulated_e_n,
    })
}
