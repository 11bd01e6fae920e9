//! Dense symmetric eigendecomposition and occupied-mode selection.

use std::cmp::Ordering;

use nalgebra::{DMatrix, RowDVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::SingleParticleHamiltonian;

/// Orthonormality bound on the orbital rows.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Residual bound per mode, relative to the infinity norm of the matrix.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default zero-mode tolerance relative to the infinity norm of `H_0`.
pub const ZERO_MODE_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error(
        "eigensolver failed on a {dim}x{dim} matrix (residual {residual:e}, orthogonality {orthogonality:e})"
    )]
    Solver {
        dim: usize,
        residual: f64,
        orthogonality: f64,
    },
    #[error("zero modes within tolerance {tolerance:e}: energies {energies:?}")]
    ZeroModes { tolerance: f64, energies: Vec<f64> },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("base spectrum does not isolate the detector level on index 0")]
    DetectorNotIsolated,
}

/// Single-particle energies in ascending order with their orbitals.
///
/// Row `k` of the orbital matrix holds the amplitudes of mode `k` over the
/// matrix indices; in each row the entry of largest magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies: Vec<f64>,
    orbitals: DMatrix<f64>,
}

impl Spectrum {
    /// Builds a spectrum from unsorted eigenpairs (one orbital per row),
    /// applying the sign and ordering conventions.
    pub fn from_parts(energies: Vec<f64>, orbitals: DMatrix<f64>) -> Self {
        assert_eq!(energies.len(), orbitals.nrows());
        let mut rows: Vec<(f64, RowDVector<f64>)> = energies
            .into_iter()
            .zip(orbitals.row_iter())
            .map(|(e, r)| (e, fix_sign(r.into_owned())))
            .collect();
        rows.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                a.1.iter()
                    .zip(b.1.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
        });
        let n = rows.len();
        let cols = orbitals.ncols();
        let mut m = DMatrix::zeros(n, cols);
        let mut e = Vec::with_capacity(n);
        for (k, (energy, row)) in rows.into_iter().enumerate() {
            m.set_row(k, &row);
            e.push(energy);
        }
        Self {
            energies: e,
            orbitals: m,
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Orbital matrix, one mode per row.
    pub fn orbitals(&self) -> &DMatrix<f64> {
        &self.orbitals
    }

    /// Amplitude of mode `k` on matrix index `i`.
    pub fn amplitude(&self, k: usize, i: usize) -> f64 {
        self.orbitals[(k, i)]
    }

    /// Appends an isolated level on a new index 0, shifting the existing
    /// indices up by one. This is the spectrum of `H_S (+) mu` without
    /// mixing the detector into degenerate chain modes.
    pub fn with_isolated_level(&self, level: f64) -> Spectrum {
        let n = self.dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = 1.0;
        m.view_mut((1, 1), (n, n)).copy_from(&self.orbitals);
        let mut energies = Vec::with_capacity(n + 1);
        energies.push(level);
        energies.extend_from_slice(&self.energies);
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
        let sorted_e = order.iter().map(|&k| energies[k]).collect();
        let sorted_m = DMatrix::from_fn(n + 1, n + 1, |r, c| m[(order[r], c)]);
        Spectrum {
            energies: sorted_e,
            orbitals: sorted_m,
        }
    }

    /// Largest deviation of the row Gram matrix from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let g = &self.orbitals * self.orbitals.transpose();
        max_identity_deviation(&g)
    }

    /// Largest residual `max_k |H v_k - e_k v_k|_inf`.
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        let hv = h * self.orbitals.transpose();
        let mut worst = 0.0f64;
        for (k, &e) in self.energies.iter().enumerate() {
            for i in 0..self.dim() {
                worst = worst.max((hv[(i, k)] - e * self.orbitals[(k, i)]).abs());
            }
        }
        worst
    }

    /// Index of the mode carrying the most weight on matrix index `i`.
    pub fn dominant_mode(&self, i: usize) -> usize {
        let col = self.orbitals.column(i);
        col.iamax()
    }
}

pub(crate) fn max_identity_deviation(g: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

fn fix_sign(mut row: RowDVector<f64>) -> RowDVector<f64> {
    let max = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tie = max * (1.0 - 1e-12);
    if let Some(v) = row.iter().find(|v| v.abs() >= tie) {
        if *v < 0.0 {
            row.neg_mut();
        }
    }
    row
}

fn check_input(m: &DMatrix<f64>) -> Result<(), SpectralError> {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(SpectralError::NonFinite { row: i, col: j });
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            if m[(i, j)] != m[(j, i)] {
                return Err(SpectralError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn diagonalize_matrix(m: &DMatrix<f64>) -> Result<Spectrum, SpectralError> {
    assert!(m.is_square());
    check_input(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            energies: Vec::new(),
            orbitals: DMatrix::zeros(0, 0),
        });
    }
    let max_iter = 200 * n.max(10);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(
        SpectralError::Solver {
            dim: n,
            residual: f64::NAN,
            orthogonality: f64::NAN,
        },
    )?;
    let spectrum = Spectrum::from_parts(
        eig.eigenvalues.iter().copied().collect(),
        eig.eigenvectors.transpose(),
    );
    let scale = norm_inf(m).max(f64::MIN_POSITIVE);
    let residual = spectrum.max_residual(m);
    let orthogonality = spectrum.orthogonality_error();
    if residual > RESIDUAL_TOL * scale || orthogonality > ORTHOGONALITY_TOL {
        return Err(SpectralError::Solver {
            dim: n,
            residual,
            orthogonality,
        });
    }
    Ok(spectrum)
}

pub fn diagonalize(h: &SingleParticleHamiltonian) -> Result<Spectrum, SpectralError> {
    diagonalize_matrix(h.matrix())
}

/// What to do with modes whose energy lies within the zero-mode tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroModePolicy {
    /// Refuse the spectrum: the half-filled ground state is not unique.
    #[default]
    Reject,
    /// Occupy every zero mode with weight 1/2, the zero-temperature limit
    /// of the Fermi-Dirac distribution. The initial state is then the
    /// uniform mixture over the degenerate ground states.
    Half,
}

/// Modes filled in the initial state, each with its occupation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupiedSet {
    modes: Vec<usize>,
    weights: Vec<f64>,
}

impl OccupiedSet {
    pub fn new(modes: Vec<usize>, weights: Vec<f64>) -> Self {
        assert_eq!(modes.len(), weights.len());
        Self { modes, weights }
    }

    /// Fully occupied modes, weight one each.
    pub fn filled(modes: Vec<usize>) -> Self {
        let weights = vec![1.0; modes.len()];
        Self { modes, weights }
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.modes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Number of modes with non-zero occupation.
    pub fn count(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Expected particle number.
    pub fn particles(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `K = { k : e_k < -zeta }`, rejecting any `|e_k| < zeta`.
pub fn occupied_set(s: &Spectrum, zero_mode_tol: f64) -> Result<OccupiedSet, SpectralError> {
    occupied_set_with(s, zero_mode_tol, ZeroModePolicy::Reject)
}

pub fn occupied_set_with(
    s: &Spectrum,
    zero_mode_tol: f64,
    policy: ZeroModePolicy,
) -> Result<OccupiedSet, SpectralError> {
    let zeros: Vec<f64> = s
        .energies()
        .iter()
        .copied()
        .filter(|e| e.abs() < zero_mode_tol)
        .collect();
    if !zeros.is_empty() && policy == ZeroModePolicy::Reject {
        return Err(SpectralError::ZeroModes {
            tolerance: zero_mode_tol,
            energies: zeros,
        });
    }
    let mut modes = Vec::new();
    let mut weights = Vec::new();
    for (k, &e) in s.energies().iter().enumerate() {
        if e <= -zero_mode_tol {
            modes.push(k);
            weights.push(1.0);
        } else if e.abs() < zero_mode_tol {
            modes.push(k);
            weights.push(0.5);
        }
    }
    Ok(OccupiedSet { modes, weights })
}

/// Default zero-mode tolerance for a Hamiltonian.
pub fn default_zero_mode_tol(h: &SingleParticleHamiltonian) -> f64 {
    ZERO_MODE_REL_TOL * h.norm_inf()
}
