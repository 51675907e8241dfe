use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::VACUUM_VARIANCE;

/// Physical parameters of the two mechanical resonators and their coupling
/// to the light pulses. Frequencies are angular; time is measured in the
/// same inverse units (with `omega1 = 1` by convention).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub q1: f64,
    pub q2: f64,
    /// Thermal phonon occupations (without the vacuum 1/2).
    pub n_th1: f64,
    pub n_th2: f64,
    pub chi1: f64,
    pub chi2: f64,
}

impl Default for SystemParams {
    /// Two octaves detuned resonators, `Q = 1e6`, `chi = 2`,
    /// `n_th1 = 1e4` and `n_th2 = n_th1 / 3` (equal bath temperature).
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 3.0,
            q1: 1e6,
            q2: 1e6,
            n_th1: 1e4,
            n_th2: 1e4 / 3.0,
            chi1: 2.0,
            chi2: 2.0,
        }
    }
}

impl SystemParams {
    /// Ideal resonators: no decoherence, `omega2 = 3 omega1`, equal couplings.
    pub fn ideal(n_th1: f64, n_th2: f64, chi: f64) -> Self {
        Self {
            q1: f64::INFINITY,
            q2: f64::INFINITY,
            n_th1,
            n_th2,
            chi1: chi,
            chi2: chi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("q1", self.q1),
            ("q2", self.q2),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !self.omega1.is_finite() || !self.omega2.is_finite() {
            return Err(Error::param("omega", "frequencies must be finite"));
        }
        let nonneg = [
            ("n_th1", self.n_th1),
            ("n_th2", self.n_th2),
            ("chi1", self.chi1),
            ("chi2", self.chi2),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi1 = chi;
        self.chi2 = chi;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q1 = q;
        self.q2 = q;
        self
    }

    /// Keeps `omega1` and sets `omega2 = ratio * omega1`.
    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.omega2 = ratio * self.omega1;
        self
    }

    pub fn n1(&self) -> f64 {
        self.n_th1 + VACUUM_VARIANCE
    }

    pub fn n2(&self) -> f64 {
        self.n_th2 + VACUUM_VARIANCE
    }

    pub fn ratio(&self) -> f64 {
        self.omega2 / self.omega1
    }

    pub fn omega_avg(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }

    pub fn omega_rel(&self) -> f64 {
        0.5 * (self.omega1 - self.omega2)
    }

    pub fn gamma1(&self) -> f64 {
        self.omega1 / self.q1
    }

    pub fn gamma2(&self) -> f64 {
        self.omega2 / self.q2
    }

    /// `sqrt((chi1^2 + chi2^2)/2)`, equal to `chi` for matched couplings.
    pub fn chi_eff(&self) -> f64 {
        (0.5 * (self.chi1 * self.chi1 + self.chi2 * self.chi2)).sqrt()
    }

    /// Thermal heating per unit `omega1` time, averaged over the two modes:
    /// `(n1/Q1 + (omega2/omega1) n2/Q2) / 2`. Reduces to `n/Q` when
    /// `n1 = 3 n2 = n`, `omega2 = 3 omega1` and `Q1 = Q2 = Q`.
    pub fn heating_per_period(&self) -> f64 {
        0.5 * (self.n1() / self.q1 + self.ratio() * self.n2() / self.q2)
    }
}
