//! Pulsed position measurements and homodyne conditioning.
//!
//! Convention: a pulse with measurement strengths `chi1`, `chi2` shifts the
//! optical phase quadrature by `P_L -> P_L + chi1 x1(t) + chi2 x2(t)`, where
//! `x_j(t) = X_j cos(w_j t) + P_j sin(w_j t)`. In the unit-normalized
//! eigenbasis this is `P_L -> P_L + k X~(t)` with eigenmode coupling
//! `k = sqrt(chi1^2 + chi2^2)`, so a single strong pulse on a broad state
//! leaves a conditional variance `1/(2k^2) = 1/(4 chi^2)`.

use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::eigen_map;
use crate::error::{Error, Result};
use crate::gaussian::{attach_vacuum_optical_mode, change_basis, GaussianState};
use crate::params::SystemParams;

/// Below this optical variance the readout carries no information and the
/// conditioning step is skipped.
pub const MIN_READOUT_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomePolicy {
    /// Use this homodyne outcome (optical `P_L` units).
    Fixed(f64),
    /// Draw from the Gaussian marginal of `P_L` with this seed.
    Sampled(u64),
    /// Condition on the mean outcome; first moments are unchanged.
    Marginalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub t: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub outcome: OutcomePolicy,
    /// Classical radiation-pressure kick on the measured eigenmode momentum.
    /// Only first moments see it.
    pub momentum_kick: f64,
}

impl PulseEvent {
    pub fn new(t: f64, chi1: f64, chi2: f64) -> Self {
        Self {
            t,
            chi1,
            chi2,
            outcome: OutcomePolicy::Marginalize,
            momentum_kick: 0.0,
        }
    }

    pub fn from_params(params: &SystemParams, t: f64) -> Self {
        Self::new(t, params.chi1, params.chi2)
    }

    pub fn with_outcome(mut self, outcome: OutcomePolicy) -> Self {
        self.outcome = outcome;
        self
    }

    /// `sqrt((chi1^2 + chi2^2)/2)`.
    pub fn chi_eff(&self) -> f64 {
        (0.5 * (self.chi1 * self.chi1 + self.chi2 * self.chi2)).sqrt()
    }

    /// Coupling of `P_L` to the normalized eigenmode quadrature.
    pub fn eigen_coupling(&self) -> f64 {
        self.chi1.hypot(self.chi2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.chi1 >= 0.0 && self.chi2 >= 0.0 && self.chi1.is_finite() && self.chi2.is_finite())
        {
            return Err(Error::param("chi", "measurement strengths must be finite and >= 0"));
        }
        if !self.t.is_finite() {
            return Err(Error::param("t", "pulse time must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub t: f64,
    pub outcome: f64,
    /// `outcome / chi_eff`, in position `x = sqrt(2) X` units.
    pub inferred_position: f64,
}

/// `prefactor * eta * sqrt(n_photons) * g / kappa`. The prefactor is device
/// dependent and left to the caller.
pub fn measurement_strength(
    eta: f64,
    n_photons: f64,
    g: f64,
    kappa: f64,
    prefactor: f64,
) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", "optical linewidth must be > 0"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", "efficiency must lie in [0, 1]"));
    }
    if !(n_photons >= 0.0 && g >= 0.0) {
        return Err(Error::param("n_photons", "photon number and coupling must be >= 0"));
    }
    Ok(prefactor * eta * n_photons.sqrt() * g / kappa)
}

/// QND pulse interaction on a three-mode state already expressed in the
/// eigenbasis `(X, P, Y, Q, X_L, P_L)` of the pulse:
/// `P -> P + k X_L`, `P_L -> P_L + k X`.
pub fn pulsed_interaction(state: &GaussianState, pulse: &PulseEvent) -> Result<GaussianState> {
    pulse.validate()?;
    if state.n_modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: state.cov().nrows(),
        });
    }
    let k = pulse.eigen_coupling();
    let mut s = DMatrix::identity(6, 6);
    s[(1, 4)] = k;
    s[(5, 0)] = k;
    let mut mean = &s * state.mean();
    mean[1] += pulse.momentum_kick;
    let cov = &s * state.cov() * s.transpose();
    Ok(GaussianState::from_parts(mean, cov))
}

fn draw_outcome(policy: &OutcomePolicy, mean: f64, variance: f64) -> f64 {
    match *policy {
        OutcomePolicy::Fixed(v) => v,
        OutcomePolicy::Marginalize => mean,
        OutcomePolicy::Sampled(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + variance.max(0.0).sqrt() * z
        }
    }
}

/// Ideal homodyne detection of the optical phase quadrature `P_L` (last
/// mode). Returns the two-mode mechanical state and the outcome used.
///
/// `cov_m' = cov_m - v v^T / s22`, `mean_m' = mean_m + v (y - <P_L>) / s22`
/// with `v = cov(mech, P_L)` and `s22 = Var(P_L)`.
pub fn homodyne_condition(
    state: &GaussianState,
    policy: &OutcomePolicy,
) -> Result<(GaussianState, f64)> {
    if state.n_modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: state.cov().nrows(),
        });
    }
    let cov = state.cov();
    let s22 = cov[(5, 5)];
    if !(s22 >= 0.0) {
        return Err(Error::Singular(s22));
    }
    let mean_pl = state.mean()[5];
    let outcome = draw_outcome(policy, mean_pl, s22);
    let cov_m = cov.view((0, 0), (4, 4)).into_owned();
    let mean_m = state.mean().rows(0, 4).into_owned();
    if s22 < MIN_READOUT_VARIANCE {
        return Ok((GaussianState::from_parts(mean_m, cov_m), outcome));
    }
    let v = cov.view((0, 5), (4, 1)).into_owned();
    let gain = &v / s22;
    let cov_m = cov_m - &gain * v.transpose();
    let mean_m = mean_m + gain * (outcome - mean_pl);
    Ok((GaussianState::from_parts(mean_m, cov_m), outcome))
}

/// General Gaussian conditioning on the optical mode with a finite
/// measurement covariance `sigma_hd`:
/// `cov_m - cov_mL (cov_L + sigma_hd)^-1 cov_Lm`. Returns the covariance
/// only; use [`homodyne_condition`] for the ideal limit.
pub fn condition_general(state: &GaussianState, sigma_hd: &Matrix2<f64>) -> Result<DMatrix<f64>> {
    if state.n_modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: state.cov().nrows(),
        });
    }
    let cov = state.cov();
    let cov_l: Matrix2<f64> = cov.fixed_view::<2, 2>(4, 4).into_owned() + sigma_hd;
    let inv = cov_l
        .try_inverse()
        .ok_or_else(|| Error::Singular(cov_l.determinant()))?;
    let inv = DMatrix::from_iterator(2, 2, inv.iter().copied());
    let cross = cov.view((0, 4), (4, 2)).into_owned();
    let cov_m = cov.view((0, 0), (4, 4)).into_owned();
    Ok(cov_m - &cross * inv * cross.transpose())
}

/// One pulsed position measurement at time `pulse.t` on a two-mode
/// mechanical state in the canonical basis. The result is again canonical.
pub fn measure_position(
    state: &GaussianState,
    params: &SystemParams,
    pulse: &PulseEvent,
) -> Result<(GaussianState, MeasurementRecord)> {
    pulse.validate()?;
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.cov().nrows(),
        });
    }
    if pulse.eigen_coupling() == 0.0 {
        let record = MeasurementRecord {
            t: pulse.t,
            outcome: 0.0,
            inferred_position: 0.0,
        };
        return Ok((state.clone(), record));
    }
    let pulse_params = SystemParams {
        chi1: pulse.chi1,
        chi2: pulse.chi2,
        ..*params
    };
    let to_eigen = eigen_map(&pulse_params, pulse.t)?;
    let eig = change_basis(state, &to_eigen)?;
    let joint = pulsed_interaction(&attach_vacuum_optical_mode(&eig), pulse)?;
    let (conditioned, outcome) = homodyne_condition(&joint, &pulse.outcome)?;
    let back = change_basis(&conditioned, &to_eigen.inverse())?;
    let record = MeasurementRecord {
        t: pulse.t,
        outcome,
        inferred_position: outcome / pulse.chi_eff(),
    };
    Ok((back, record))
}

/// Homodyne outcome that places the conditional mean of the measured
/// eigenmode quadrature `X(t)` at `target`.
pub fn outcome_for_target(
    state: &GaussianState,
    params: &SystemParams,
    pulse: &PulseEvent,
    target: f64,
) -> Result<f64> {
    let pulse_params = SystemParams {
        chi1: pulse.chi1,
        chi2: pulse.chi2,
        ..*params
    };
    let eig = change_basis(state, &eigen_map(&pulse_params, pulse.t)?)?;
    let k = pulse.eigen_coupling();
    let var_x = eig.cov()[(0, 0)];
    let mean_x = eig.mean()[0];
    let s22 = 0.5 + k * k * var_x;
    if k * var_x == 0.0 {
        return Err(Error::Singular(k * var_x));
    }
    // mean_x' = mean_x + k var_x (y - k mean_x) / s22
    Ok(k * mean_x + (target - mean_x) * s22 / (k * var_x))
}

/// Shortcut returning only the conditioned state.
pub fn measure(state: &GaussianState, params: &SystemParams, t: f64) -> Result<GaussianState> {
    Ok(measure_position(state, params, &PulseEvent::from_params(params, t))?.0)
}
