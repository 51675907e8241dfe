//! Random valid states and symplectic maps shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2};
use optomech::GaussianState;
use rand::Rng;

pub fn rotation(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, s, -s, c)
}

pub fn squeezer(r: f64) -> Matrix2<f64> {
    Matrix2::new((-r).exp(), 0.0, 0.0, r.exp())
}

/// Random single-mode symplectic `R(a) S(r) R(b)`.
pub fn local_symplectic<R: Rng>(rng: &mut R, max_r: f64) -> Matrix2<f64> {
    rotation(rng.random_range(0.0..6.3))
        * squeezer(rng.random_range(-max_r..max_r))
        * rotation(rng.random_range(0.0..6.3))
}

fn embed(m: &mut DMatrix<f64>, mode: usize, block: &Matrix2<f64>) {
    let mut e = DMatrix::identity(m.nrows(), m.nrows());
    e.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(block);
    *m = e * &*m;
}

fn beamsplitter(m: &mut DMatrix<f64>, j: usize, k: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    let mut b = DMatrix::identity(m.nrows(), m.nrows());
    for q in 0..2 {
        let (a, bb) = (2 * j + q, 2 * k + q);
        b[(a, a)] = c;
        b[(a, bb)] = s;
        b[(bb, a)] = -s;
        b[(bb, bb)] = c;
    }
    *m = b * &*m;
}

/// Random symplectic matrix on `n_modes` modes built from local squeezers
/// and beamsplitters.
pub fn random_symplectic<R: Rng>(rng: &mut R, n_modes: usize, max_r: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for _ in 0..2 {
        for mode in 0..n_modes {
            let l = local_symplectic(rng, max_r);
            embed(&mut s, mode, &l);
        }
        for j in 0..n_modes {
            for k in (j + 1)..n_modes {
                beamsplitter(&mut s, j, k, rng.random_range(0.0..6.3));
            }
        }
    }
    s
}

/// `S diag(nu) S^T` with symplectic eigenvalues `nu` in `[1/2, max_nu]`.
pub fn random_state<R: Rng>(rng: &mut R, n_modes: usize, max_nu: f64, max_r: f64) -> GaussianState {
    let nu: Vec<f64> = (0..n_modes)
        .flat_map(|_| {
            let v = 0.5 + rng.random_range(0.0..max_nu - 0.5);
            [v, v]
        })
        .collect();
    let s = random_symplectic(rng, n_modes, max_r);
    let cov = &s * DMatrix::from_diagonal(&DVector::from_vec(nu)) * s.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = DVector::from_fn(2 * n_modes, |_, _| rng.random_range(-5.0..5.0));
    GaussianState::new(mean, cov).expect("symmetric by construction")
}

/// Largest entrywise deviation relative to the largest entry of `b`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}
