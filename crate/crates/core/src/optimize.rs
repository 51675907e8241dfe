//! Bounded derivative-free maximization: a coarse grid to find the right
//! basin, then local refinement inside the grid cell around the best sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerMethod {
    /// Repeated grid zoom around the incumbent.
    GridRefine,
    /// Nelder-Mead simplex clamped to the bounds.
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    /// Stop once the refinement bracket (or simplex) is narrower than this,
    /// in units of the variables.
    pub tolerance: f64,
    pub max_evals: usize,
    /// Coarse samples per variable.
    pub grid_points: usize,
    /// Optional bounds overriding the caller's default bracket.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: OptimizerMethod::Simplex,
            tolerance: 1e-6,
            max_evals: 2000,
            grid_points: 64,
            bounds: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be > 0"));
        }
        if self.grid_points < 2 {
            return Err(Error::param("grid_points", "need at least 2 samples per variable"));
        }
        if let Some(b) = &self.bounds {
            check_bounds(b)?;
        }
        Ok(())
    }

    /// Bounds from the config if set, else `default`.
    pub fn bounds_or(&self, default: &[(f64, f64)]) -> Vec<(f64, f64)> {
        match &self.bounds {
            Some(b) if b.len() == default.len() => b.clone(),
            _ => default.to_vec(),
        }
    }
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::param("bounds", "no variables"));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("bounds", format!("invalid interval [{lo}, {hi}]")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Best coarse-grid sample before refinement.
    pub grid_best: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

/// Maximizes `f` over the box `bounds`.
///
/// Each variable is first scanned on `grid_points` samples with the others
/// held at the box centre (a full tensor grid for one variable). The best
/// sample seeds the refinement, so the returned value is never below any
/// grid sample.
pub fn maximize<F>(f: F, bounds: &[(f64, f64)], cfg: &OptimizerConfig) -> Result<Optimum>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    check_bounds(bounds)?;
    let mut f = Counted { f, evals: 0 };
    let dim = bounds.len();
    let centre: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();

    // coordinate scans; the per-axis winners also form a combined candidate
    let mut best_x = centre.clone();
    let mut best_v = f.call(&centre);
    let mut combined = centre.clone();
    let mut cell: Vec<f64> = Vec::with_capacity(dim);
    for d in 0..dim {
        let (lo, hi) = bounds[d];
        let mut x = centre.clone();
        let mut axis_best = (f64::NEG_INFINITY, centre[d]);
        for xi in linspace(lo, hi, cfg.grid_points) {
            x[d] = xi;
            let v = f.call(&x);
            if v > axis_best.0 {
                axis_best = (v, xi);
            }
            if v > best_v {
                best_v = v;
                best_x = x.clone();
            }
        }
        combined[d] = axis_best.1;
        cell.push((hi - lo) / (cfg.grid_points - 1) as f64);
    }
    if dim > 1 {
        let v = f.call(&combined);
        if v > best_v {
            best_v = v;
            best_x = combined;
        }
    }
    let grid_best = best_v;

    let (x, value) = match cfg.method {
        OptimizerMethod::GridRefine => grid_refine(&mut f, bounds, best_x, best_v, &cell, cfg),
        OptimizerMethod::Simplex => nelder_mead(&mut f, bounds, best_x, best_v, &cell, cfg),
    };
    Ok(Optimum {
        x,
        value,
        evals: f.evals,
        grid_best,
    })
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn grid_refine<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    bounds: &[(f64, f64)],
    mut best_x: Vec<f64>,
    mut best_v: f64,
    cell: &[f64],
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64) {
    const SAMPLES: usize = 9;
    let mut half: Vec<f64> = cell.to_vec();
    while half.iter().any(|&h| h > cfg.tolerance) && f.evals < cfg.max_evals {
        for d in 0..best_x.len() {
            let (lo, hi) = (
                (best_x[d] - half[d]).max(bounds[d].0),
                (best_x[d] + half[d]).min(bounds[d].1),
            );
            let mut x = best_x.clone();
            for xi in linspace(lo, hi, SAMPLES) {
                x[d] = xi;
                let v = f.call(&x);
                if v > best_v {
                    best_v = v;
                    best_x[d] = xi;
                }
            }
            half[d] *= 2.0 / (SAMPLES - 1) as f64;
        }
    }
    (best_x, best_v)
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    bounds: &[(f64, f64)],
    start: Vec<f64>,
    start_v: f64,
    cell: &[f64],
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    // simplex stored for minimization of -f
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(start.clone(), -start_v)];
    for d in 0..dim {
        let mut x = start.clone();
        x[d] += if x[d] + cell[d] <= bounds[d].1 { cell[d] } else { -cell[d] };
        clamp(&mut x, bounds);
        let v = -f.call(&x);
        pts.push((x, v));
    }

    let diameter = |pts: &[(Vec<f64>, f64)]| {
        let mut d: f64 = 0.0;
        for p in &pts[1..] {
            for (a, b) in p.0.iter().zip(&pts[0].0) {
                d = d.max((a - b).abs());
            }
        }
        d
    };

    while f.evals < cfg.max_evals {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&pts) <= cfg.tolerance {
            break;
        }
        let worst = pts[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|k| pts[..dim].iter().map(|p| p.0[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut x, bounds);
            x
        };

        let xr = along(1.0);
        let fr = -f.call(&xr);
        if fr < pts[0].1 {
            let xe = along(2.0);
            let fe = -f.call(&xe);
            pts[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[dim - 1].1 {
            pts[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(0.5);
            let v = -f.call(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = -f.call(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            pts[dim] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = pts[0].0.clone();
        for p in pts.iter_mut().skip(1) {
            for (x, b) in p.0.iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            p.1 = -f.call(&p.0);
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = pts.swap_remove(0);
    (x, -v)
}
