//! Phase-space densities of two-quadrature marginals.
//!
//! For a Gaussian state the Wigner function of any pair of quadratures is
//! the bivariate normal density with the matching 2×2 covariance block.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    /// Square-ish window of `width` standard deviations around the mean.
    pub fn around(state: &GaussianState, pair: (usize, usize), width: f64, n: usize) -> Result<Self> {
        check_pair(state, pair)?;
        let (mx, my) = (state.mean()[pair.0], state.mean()[pair.1]);
        let sx = width * state.cov()[(pair.0, pair.0)].sqrt();
        let sy = width * state.cov()[(pair.1, pair.1)].sqrt();
        Ok(Self {
            x_min: mx - sx,
            x_max: mx + sx,
            nx: n,
            y_min: my - sy,
            y_max: my + sy,
            ny: n,
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo.is_finite() && hi.is_finite() && lo < hi && n >= 2;
        if !ok(self.x_min, self.x_max, self.nx) || !ok(self.y_min, self.y_max, self.ny) {
            return Err(Error::param("grid", "need finite bounds with min < max and >= 2 points"));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }

    pub fn cell_area(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64 * (self.y_max - self.y_min)
            / (self.ny - 1) as f64
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_pair(state: &GaussianState, (a, b): (usize, usize)) -> Result<()> {
    let dim = state.cov().nrows();
    if a == b || a >= dim || b >= dim {
        return Err(Error::param(
            "pair",
            format!("need two distinct quadrature indices below {dim}, got ({a}, {b})"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub pair: (usize, usize),
    pub grid: GridSpec,
    /// `density[j][i]` at `(xs[i], ys[j])`.
    pub density: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Riemann sum of the density over the grid.
    pub fn total(&self) -> f64 {
        self.density.iter().flatten().sum::<f64>() * self.grid.cell_area()
    }

    /// Grid coordinates of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        let (xs, ys) = (self.grid.xs(), self.grid.ys());
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (j, row) in self.density.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        (xs[best.1], ys[best.2])
    }
}

/// `W(d) = exp(-d^T S^-1 d / 2) / (2 pi sqrt(det S))` on the grid.
pub fn wigner_marginal_grid(
    state: &GaussianState,
    pair: (usize, usize),
    grid: &GridSpec,
) -> Result<WignerGrid> {
    check_pair(state, pair)?;
    grid.validate()?;
    let c = state.cov();
    let (a, b) = pair;
    let s = Matrix2::new(c[(a, a)], c[(a, b)], c[(b, a)], c[(b, b)]);
    let det = s.determinant();
    if !(det > 0.0) {
        return Err(Error::Singular(det));
    }
    let inv = s.try_inverse().ok_or(Error::Singular(det))?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let (mx, my) = (state.mean()[a], state.mean()[b]);
    let xs = grid.xs();
    let density = grid
        .ys()
        .iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    let (dx, dy) = (x - mx, y - my);
                    let q = inv[(0, 0)] * dx * dx + 2.0 * inv[(0, 1)] * dx * dy + inv[(1, 1)] * dy * dy;
                    norm * (-0.5 * q).exp()
                })
                .collect()
        })
        .collect();
    Ok(WignerGrid {
        pair,
        grid: *grid,
        density,
    })
}
