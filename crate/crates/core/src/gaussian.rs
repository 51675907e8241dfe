//! Gaussian states of a few bosonic modes.
//!
//! Quadratures are ordered `(X1, P1, X2, P2, ..., XN, PN)` with `[X, P] = i`,
//! so the vacuum covariance is `diag(1/2, ..., 1/2)`. For the optomechanical
//! three-mode system the optical mode is always the last one.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VACUUM_VARIANCE: f64 = 0.5;

/// Slack on the `nu >= 1/2` uncertainty bound.
pub const BONA_FIDE_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const SYMPLECTIC_TOL: f64 = 1e-12;

/// Block-diagonal symplectic form for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Symmetrizes `cov` after checking it is symmetric to relative tolerance.
fn symmetrized(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            got: cov.ncols(),
        });
    }
    let scale = max_abs(cov).max(f64::MIN_POSITIVE);
    let asym = max_abs(&(cov - cov.transpose()));
    if asym > SYMMETRY_TOL * scale || !asym.is_finite() {
        return Err(Error::NotSymmetric(asym / scale));
    }
    Ok((cov + cov.transpose()) * 0.5)
}

/// First and second moments of an `N`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from its moments. The covariance must be symmetric;
    /// physicality is checked separately by [`GaussianState::validate`].
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::param("cov", format!("dimension {dim} is not 2N")));
        }
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mean.len(),
            });
        }
        let cov = symmetrized(&cov)?;
        Ok(Self { mean, cov })
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        let cov = (&cov + cov.transpose()) * 0.5;
        Self { mean, cov }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * VACUUM_VARIANCE,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    /// Same covariance, new first moments.
    pub fn with_mean(&self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: mean.len(),
            });
        }
        Ok(Self {
            mean,
            cov: self.cov.clone(),
        })
    }

    /// Variance of the linear quadrature `u . X`.
    pub fn quadrature_variance(&self, u: &DVector<f64>) -> f64 {
        (u.transpose() * &self.cov * u)[(0, 0)]
    }

    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        Ok(symplectic_eigenvalues(&self.cov)?[0])
    }

    pub fn is_bona_fide(&self) -> bool {
        self.min_symplectic_eigenvalue()
            .map(|nu| nu >= VACUUM_VARIANCE - BONA_FIDE_TOL)
            .unwrap_or(false)
    }

    /// Checks the Heisenberg condition `cov + (i/2) Omega >= 0`.
    pub fn validate(&self) -> Result<()> {
        let nu = self.min_symplectic_eigenvalue()?;
        if nu < VACUUM_VARIANCE - BONA_FIDE_TOL {
            return Err(Error::NotBonaFide(nu));
        }
        Ok(())
    }
}

/// Uncorrelated thermal state of two mechanical modes with total
/// occupations `n1`, `n2` (thermal phonons plus 1/2).
pub fn thermal_state(n1: f64, n2: f64) -> Result<GaussianState> {
    for (name, n) in [("n1", n1), ("n2", n2)] {
        if !n.is_finite() || n < VACUUM_VARIANCE {
            return Err(Error::param(
                name,
                format!("total occupation {n} is below the vacuum value 1/2"),
            ));
        }
    }
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![n1, n1, n2, n2]));
    Ok(GaussianState::from_parts(DVector::zeros(4), cov))
}

/// Appends an optical mode in the vacuum state.
pub fn attach_vacuum_optical_mode(state: &GaussianState) -> GaussianState {
    let dim = state.cov.nrows();
    let mut cov = DMatrix::zeros(dim + 2, dim + 2);
    cov.view_mut((0, 0), (dim, dim)).copy_from(&state.cov);
    cov[(dim, dim)] = VACUUM_VARIANCE;
    cov[(dim + 1, dim + 1)] = VACUUM_VARIANCE;
    let mut mean = DVector::zeros(dim + 2);
    mean.rows_mut(0, dim).copy_from(&state.mean);
    GaussianState { mean, cov }
}

/// Reduced state on the modes in `keep` (0-based, in the given order).
pub fn partial_trace(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    if keep.is_empty() {
        return Err(Error::param("keep", "no modes to keep"));
    }
    let n = state.n_modes();
    for (i, &m) in keep.iter().enumerate() {
        if m >= n {
            return Err(Error::param("keep", format!("mode {m} out of range 0..{n}")));
        }
        if keep[..i].contains(&m) {
            return Err(Error::param("keep", format!("mode {m} listed twice")));
        }
    }
    let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| state.mean[i]));
    let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| state.cov[(idx[r], idx[c])]);
    Ok(GaussianState { mean, cov })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisLabel {
    Canonical,
    Collective,
    /// Instantaneous eigenbasis of the pulsed interaction at time `t`.
    Eigen { t: f64 },
    Custom,
}

/// Linear symplectic change of quadrature basis, `X' = M X`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMap {
    matrix: DMatrix<f64>,
    label: BasisLabel,
}

impl BasisMap {
    /// Wraps `matrix` after checking `M^T Omega M = Omega`.
    pub fn new(matrix: DMatrix<f64>, label: BasisLabel) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() % 2 != 0 {
            return Err(Error::param("matrix", "basis map must be 2N x 2N"));
        }
        let omega = symplectic_form(matrix.nrows() / 2);
        let defect = max_abs(&(matrix.transpose() * &omega * &matrix - &omega));
        if defect > SYMPLECTIC_TOL.max(1e-12 * max_abs(&matrix).powi(2)) {
            return Err(Error::param(
                "matrix",
                format!("not symplectic (defect {defect:e})"),
            ));
        }
        Ok(Self { matrix, label })
    }

    pub(crate) fn from_matrix(matrix: DMatrix<f64>, label: BasisLabel) -> Self {
        Self { matrix, label }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            label: BasisLabel::Canonical,
        }
    }

    /// Canonical to collective basis: `X± = (X1 ± X2)/√2`, `P± = (P1 ± P2)/√2`
    /// on the first two modes, identity on any further modes. The collective
    /// ordering is `(X+, P+, X-, P-, ...)`.
    pub fn collective(n_modes: usize) -> Self {
        assert!(n_modes >= 2, "collective basis needs two mechanical modes");
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bs = DMatrix::from_row_slice(
            4,
            4,
            &[
                h, 0.0, h, 0.0, //
                0.0, h, 0.0, h, //
                h, 0.0, -h, 0.0, //
                0.0, h, 0.0, -h,
            ],
        );
        m.view_mut((0, 0), (4, 4)).copy_from(&bs);
        Self {
            matrix: m,
            label: BasisLabel::Collective,
        }
    }

    /// Independent symplectic maps on mode 1 and mode 2.
    pub fn local(s1: &Matrix2<f64>, s2: &Matrix2<f64>) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(s1);
        m.view_mut((2, 2), (2, 2)).copy_from(s2);
        Self::new(m, BasisLabel::Custom)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn then(&self, next: &BasisMap) -> BasisMap {
        BasisMap {
            matrix: &next.matrix * &self.matrix,
            label: next.label,
        }
    }

    /// Inverse map; exact transpose for the orthogonal maps built here,
    /// general inverse otherwise.
    pub fn inverse(&self) -> BasisMap {
        let t = self.matrix.transpose();
        let matrix = if max_abs(&(&t * &self.matrix - DMatrix::identity(self.dim(), self.dim())))
            < 1e-12
        {
            t
        } else {
            let omega = symplectic_form(self.dim() / 2);
            // S^-1 = -Omega S^T Omega for symplectic S
            -(&omega * t * &omega)
        };
        BasisMap {
            matrix,
            label: BasisLabel::Canonical,
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        let n = self.dim();
        max_abs(&(self.matrix.transpose() * &self.matrix - DMatrix::identity(n, n))) < 1e-12
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &BasisMap) -> BasisMap {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        BasisMap {
            matrix: m,
            label: self.label,
        }
    }
}

/// `mean' = M mean`, `cov' = M cov M^T`.
pub fn change_basis(state: &GaussianState, map: &BasisMap) -> Result<GaussianState> {
    if map.dim() != state.cov.nrows() {
        return Err(Error::DimensionMismatch {
            expected: state.cov.nrows(),
            got: map.dim(),
        });
    }
    let m = &map.matrix;
    Ok(GaussianState::from_parts(
        m * &state.mean,
        m * &state.cov * m.transpose(),
    ))
}

/// Symplectic eigenvalues of a covariance matrix, ascending, one per mode.
///
/// Computed as the singular values of `S Omega S` with `S = cov^{1/2}`;
/// these are the moduli of the eigenvalues of `i Omega cov`, each doubled.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let cov = symmetrized(cov)?;
    let dim = cov.nrows();
    if dim % 2 != 0 {
        return Err(Error::param("cov", format!("dimension {dim} is not 2N")));
    }
    let eig = SymmetricEigen::new(cov);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -1e-12 * scale || !min.is_finite() {
        return Err(Error::NotPositive(min));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let sqrt_cov = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let k = &sqrt_cov * symplectic_form(dim / 2) * &sqrt_cov;
    let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    Ok(sv.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Partial transpose on `mode` (0-based): flips the sign of its momentum.
pub fn partial_transpose(cov: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
    let p = 2 * mode + 1;
    let mut out = cov.clone();
    for i in 0..cov.nrows() {
        if i != p {
            out[(i, p)] = -out[(i, p)];
            out[(p, i)] = -out[(p, i)];
        }
    }
    out
}

/// Logarithmic negativity (base 2) of a two-mode state.
pub fn log_negativity(state: &GaussianState) -> Result<f64> {
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.cov.nrows(),
        });
    }
    log_negativity_cov(&state.cov)
}

pub(crate) fn log_negativity_cov(cov: &DMatrix<f64>) -> Result<f64> {
    Ok(log_negativity_unclipped_cov(cov)?.max(0.0))
}

/// `-log2(2 nu~)` without clipping at zero. Negative for separable states;
/// useful as a smooth objective where the clipped value is flat.
pub fn log_negativity_unclipped(state: &GaussianState) -> Result<f64> {
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.cov.nrows(),
        });
    }
    log_negativity_unclipped_cov(&state.cov)
}

fn log_negativity_unclipped_cov(cov: &DMatrix<f64>) -> Result<f64> {
    let nu = symplectic_eigenvalues(&partial_transpose(cov, 1))?[0];
    Ok(-(2.0 * nu).log2())
}
