//! Two-level approximation of the detector coupling.
//!
//! Each occupied chain mode `k` is mixed only with the detector level,
//! through the effective matrix `[[E_k, g psi_k], [g psi_k, mu]]` where
//! `psi_k` is the mode amplitude at the attachment site. To leading order
//!
//! ```text
//! dE_k      = g^2 psi_k^2 / (E_k - mu)
//! |beta_k|^2 = g^2 psi_k^2 / (E_k - mu)^2
//! n0       ~= sum_k |beta_k|^2
//! ```

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{DetectorConfig, HamiltonianError};
use crate::quench::Quench;
use crate::spectral::{OccupiedSet, Spectrum};

/// Modes with `|E_k - mu|` below this are flagged as near the pole.
pub const POLE_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDeformation {
    pub mode: usize,
    pub energy: f64,
    /// Amplitude `psi_k` of the mode at the attachment site.
    pub amplitude: f64,
    /// Eigenvalues of the effective 2x2 matrix, lower then upper.
    pub branches: (f64, f64),
    /// The branch continuously connected to `energy` as `g -> 0`.
    pub adiabatic: f64,
    /// Leading-order shift `g^2 psi^2 / (E - mu)`.
    pub shift: f64,
    /// Detector weight of the adiabatic eigenvector of the 2x2 problem.
    pub weight_exact: f64,
    /// Leading-order weight `g^2 psi^2 / (E - mu)^2`.
    pub weight_leading: f64,
    /// `|E - mu| < POLE_GUARD`; the leading-order fields are unreliable.
    pub near_pole: bool,
}

/// Solves the effective two-level problem of one mode.
pub fn two_level_solve(energy: f64, mu: f64, g: f64, amplitude: f64) -> ModeDeformation {
    two_level_solve_mode(0, energy, mu, g, amplitude)
}

fn two_level_solve_mode(
    mode: usize,
    energy: f64,
    mu: f64,
    g: f64,
    amplitude: f64,
) -> ModeDeformation {
    let c = g * amplitude;
    let c2 = c * c;
    let gap = energy - mu;
    let root = gap.hypot(2.0 * c);
    let mean = 0.5 * (energy + mu);
    let branches = (mean - 0.5 * root, mean + 0.5 * root);

    // distance of the adiabatic branch from E, computed without cancellation
    let (adiabatic, displacement) = if c2 == 0.0 {
        (energy, 0.0)
    } else if gap < 0.0 {
        (branches.0, 2.0 * c2 / (gap - root))
    } else if gap > 0.0 {
        (branches.1, 2.0 * c2 / (gap + root))
    } else {
        (branches.0, -c.abs())
    };
    let weight_exact = if c2 == 0.0 {
        0.0
    } else {
        let d2 = displacement * displacement;
        d2 / (d2 + c2)
    };
    let (shift, weight_leading) = if c2 == 0.0 {
        (0.0, 0.0)
    } else {
        (c2 / gap, c2 / (gap * gap))
    };
    ModeDeformation {
        mode,
        energy,
        amplitude,
        branches,
        adiabatic,
        shift,
        weight_exact,
        weight_leading,
        near_pole: gap.abs() < POLE_GUARD,
    }
}

/// Per-mode deformations of the occupied chain modes.
///
/// `chain` is the spectrum of the bare chain (site `x` at index `x - 1`).
pub fn deformations(
    chain: &Spectrum,
    k: &OccupiedSet,
    det: &DetectorConfig,
) -> Result<Vec<ModeDeformation>, HamiltonianError> {
    det.validate(chain.dim())?;
    Ok(k.modes()
        .iter()
        .map(|&m| {
            let e = chain.energies()[m];
            let psi = chain.amplitude(m, det.site - 1);
            two_level_solve_mode(m, e, det.gap, det.coupling, psi)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalEstimate {
    /// `sum_k w_k g^2 psi_k^2 / (E_k - mu)^2`.
    pub n0: f64,
    /// Same sum with the weight of the exact 2x2 eigenvector.
    pub n0_exact_ratio: f64,
    /// Largest single contribution to `n0` as `(mode, value)`.
    pub largest: Option<(usize, f64)>,
    /// Number of occupied modes inside the pole guard.
    pub near_pole: usize,
}

/// Leading-order detector occupation.
pub fn variational_n0(
    chain: &Spectrum,
    k: &OccupiedSet,
    det: &DetectorConfig,
) -> Result<VariationalEstimate, HamiltonianError> {
    let modes = deformations(chain, k, det)?;
    let mut est = VariationalEstimate {
        n0: 0.0,
        n0_exact_ratio: 0.0,
        largest: None,
        near_pole: 0,
    };
    for (d, w) in modes.iter().zip(k.weights()) {
        let term = w * d.weight_leading;
        est.n0 += term;
        est.n0_exact_ratio += w * d.weight_exact;
        if est.largest.is_none_or(|(_, v)| term > v) {
            est.largest = Some((d.mode, term));
        }
        est.near_pole += d.near_pole as usize;
    }
    Ok(est)
}

/// Exact counterpart of one deformed mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub mode: usize,
    pub energy: f64,
    pub amplitude: f64,
    /// Mode of `H` with the largest overlap with the chain mode.
    pub coupled_mode: usize,
    pub shift_exact: f64,
    pub shift_variational: f64,
    pub weight_exact: f64,
    pub weight_variational: f64,
    pub near_pole: bool,
}

/// Matches every chain mode to the coupled mode it overlaps most and
/// compares shifts and detector weights with the leading-order formulas.
pub fn compare_modes(chain: &Spectrum, quench: &Quench) -> Vec<ModeComparison> {
    let det = quench.detector;
    let u = quench.overlap().matrix();
    let amps = quench.weights().detector_amplitudes();
    let eta = quench.energies();
    let mut out = Vec::with_capacity(chain.dim());
    // columns of U follow H_0, where the detector level is inserted in order
    let mut column = 0;
    let mut skipped = false;
    for (m, &e) in chain.energies().iter().enumerate() {
        if !skipped && is_detector_column(u, amps, column) {
            column += 1;
            skipped = true;
        }
        let l = (0..u.nrows())
            .max_by(|&a, &b| u[(a, column)].abs().total_cmp(&u[(b, column)].abs()))
            .unwrap_or(0);
        let psi = chain.amplitude(m, det.site - 1);
        let v = two_level_solve_mode(m, e, det.gap, det.coupling, psi);
        out.push(ModeComparison {
            mode: m,
            energy: e,
            amplitude: psi,
            coupled_mode: l,
            shift_exact: eta[l] - e,
            shift_variational: v.shift,
            weight_exact: amps[l] * amps[l],
            weight_variational: v.weight_leading,
            near_pole: v.near_pole,
        });
        column += 1;
    }
    out
}

// U_lk = <d_l|b_k>; the detector column of H_0 satisfies sum_l U_lk D_l0 = 1
fn is_detector_column(u: &nalgebra::DMatrix<f64>, amps: &[f64], column: usize) -> bool {
    let s: f64 = (0..u.nrows()).map(|l| u[(l, column)] * amps[l]).sum();
    s.abs() > 0.5
}
