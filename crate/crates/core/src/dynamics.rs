//! Free evolution of the two mechanical modes between pulses.
//!
//! All quadratures live in the frame rotating at each mode's own frequency,
//! so free evolution is trivial and only the *measured* quadrature depends
//! on time. The rotations below build the instantaneous eigenbasis
//! `(X(t), P(t), Y(t), Q(t))` of the pulsed interaction from the collective
//! basis `(X+, P+, X-, P-)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{BasisLabel, BasisMap, GaussianState};
use crate::params::SystemParams;

/// `R_omega(t)`, `R_Omega(t)` and their product, all 6×6 on
/// `(mech, mech, optical)` with the optical block left as identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSet {
    pub t: f64,
    pub r_omega: DMatrix<f64>,
    pub r_omega_rel: DMatrix<f64>,
}

impl RotationSet {
    /// `P(t) = R_omega(t) R_Omega(t)`: collective basis to eigenbasis.
    pub fn product(&self) -> DMatrix<f64> {
        &self.r_omega * &self.r_omega_rel
    }
}

pub fn rotation_matrices(params: &SystemParams, t: f64) -> RotationSet {
    let (c, s) = ((params.omega_avg() * t).cos(), (params.omega_avg() * t).sin());
    let mut r_omega = DMatrix::identity(6, 6);
    for k in [0, 2] {
        r_omega[(k, k)] = c;
        r_omega[(k, k + 1)] = s;
        r_omega[(k + 1, k)] = -s;
        r_omega[(k + 1, k + 1)] = c;
    }

    let (c, s) = ((params.omega_rel() * t).cos(), (params.omega_rel() * t).sin());
    let mut r_omega_rel = DMatrix::identity(6, 6);
    let block = [
        [c, 0.0, 0.0, s],
        [0.0, c, -s, 0.0],
        [0.0, s, c, 0.0],
        [-s, 0.0, 0.0, c],
    ];
    for (i, row) in block.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            r_omega_rel[(i, j)] = v;
        }
    }
    RotationSet {
        t,
        r_omega,
        r_omega_rel,
    }
}

/// Extra mixing of the eigenmodes `b(t)`, `c(t)` when the two resonators
/// couple with different strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTransform {
    /// `(chi1 + chi2) / 2`
    pub g_avg: f64,
    /// `(chi1 - chi2) / 2`
    pub g_diff: f64,
    /// 4×4 transform on `(X, P, Y, Q)`.
    pub matrix: DMatrix<f64>,
}

impl CouplingTransform {
    /// `sqrt(g^2 + g'^2)`.
    pub fn norm(&self) -> f64 {
        self.g_avg.hypot(self.g_diff)
    }
}

pub fn coupling_transform(chi1: f64, chi2: f64) -> Result<CouplingTransform> {
    if !(chi1 >= 0.0 && chi2 >= 0.0) || !chi1.is_finite() || !chi2.is_finite() {
        return Err(Error::param("chi", "measurement strengths must be finite and >= 0"));
    }
    if chi1 == 0.0 && chi2 == 0.0 {
        return Err(Error::param("chi", "both measurement strengths are zero"));
    }
    let g = 0.5 * (chi1 + chi2);
    let gp = 0.5 * (chi1 - chi2);
    let norm = g.hypot(gp);
    let (a, b) = (g / norm, gp / norm);
    let matrix = DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, b, 0.0, //
            0.0, a, 0.0, b, //
            -b, 0.0, a, 0.0, //
            0.0, -b, 0.0, a,
        ],
    );
    Ok(CouplingTransform {
        g_avg: g,
        g_diff: gp,
        matrix,
    })
}

/// Canonical mechanical basis to the measurement eigenbasis at time `t`,
/// `T · P(t) · B`, where `B` is the beamsplitter to collective modes.
/// The first row is the quadrature read out by a pulse at `t`.
pub fn eigen_map(params: &SystemParams, t: f64) -> Result<BasisMap> {
    let p = rotation_matrices(params, t).product();
    let p4 = p.view((0, 0), (4, 4)).into_owned();
    let b = BasisMap::collective(2);
    let mut m = p4 * b.matrix();
    if params.chi1 != params.chi2 {
        m = coupling_transform(params.chi1, params.chi2)?.matrix * m;
    }
    Ok(BasisMap::from_matrix(m, BasisLabel::Eigen { t }))
}

/// Unit vector `u` (canonical basis) such that a pulse at `t` reads `u · X`.
pub fn measured_quadrature(params: &SystemParams, t: f64) -> Result<DVector<f64>> {
    Ok(eigen_map(params, t)?.matrix().row(0).transpose())
}

/// Thermal decoherence over a delay `t`: mixing with the bath state at
/// rates `Gamma_i = omega_i / Q_i`. Acts on the mechanical block (first two
/// modes) only.
pub fn decohere(state: &GaussianState, t: f64, params: &SystemParams) -> Result<GaussianState> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::param("t", format!("delay must be >= 0, got {t}")));
    }
    if state.n_modes() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.cov().nrows(),
        });
    }
    let g1 = (-params.gamma1() * t).exp();
    let g2 = (-params.gamma2() * t).exp();
    let gains = [g1, g1, g2, g2];
    let bath = [params.n1(), params.n1(), params.n2(), params.n2()];
    let dim = state.cov().nrows();
    let root = |i: usize| if i < 4 { gains[i].sqrt() } else { 1.0 };

    let mut cov = state.cov().clone();
    for i in 0..dim {
        for j in 0..dim {
            cov[(i, j)] *= root(i) * root(j);
        }
    }
    for i in 0..4 {
        cov[(i, i)] += (1.0 - gains[i]) * bath[i];
    }
    let mean = DVector::from_fn(dim, |i, _| state.mean()[i] * root(i));
    Ok(GaussianState::from_parts(mean, cov))
}
