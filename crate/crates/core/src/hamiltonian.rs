//! Single-particle matrices of the chain, the detector and their coupling.
//!
//! Index convention: when a detector is present it occupies index 0 and
//! chain site `x` (1-based) sits at index `x`. Without a detector, site `x`
//! sits at index `x - 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::HoppingProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("detector site {site} outside 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("detector gap mu = {0} must be positive and finite")]
    InvalidGap(f64),
    #[error("detector coupling g = {0} must be finite")]
    InvalidCoupling(f64),
}

/// Two-level probe attached to one chain site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Attachment site `p`, 1-based.
    pub site: usize,
    /// Coupling `g` of the `c0^dag c_p + h.c.` term. Its sign is a gauge
    /// choice and does not affect any occupation.
    pub coupling: f64,
    /// Gap `mu` of the detector level.
    pub gap: f64,
}

impl DetectorConfig {
    pub fn new(site: usize, coupling: f64, gap: f64) -> Self {
        Self {
            site,
            coupling,
            gap,
        }
    }

    pub fn validate(&self, sites: usize) -> Result<(), HamiltonianError> {
        if !(self.gap.is_finite() && self.gap > 0.0) {
            return Err(HamiltonianError::InvalidGap(self.gap));
        }
        if !self.coupling.is_finite() {
            return Err(HamiltonianError::InvalidCoupling(self.coupling));
        }
        if !(1..=sites).contains(&self.site) {
            return Err(HamiltonianError::SiteOutOfRange {
                site: self.site,
                sites,
            });
        }
        Ok(())
    }

    pub fn with_site(self, site: usize) -> Self {
        Self { site, ..self }
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        Self { coupling, ..self }
    }
}

/// Real symmetric one-body Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    matrix: DMatrix<f64>,
    detector: bool,
}

impl SingleParticleHamiltonian {
    /// Wraps an arbitrary square matrix; no detector index is assumed.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "hamiltonian must be square");
        Self {
            matrix,
            detector: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn has_detector(&self) -> bool {
        self.detector
    }

    /// Matrix index of chain site `x` (1-based).
    pub fn site_index(&self, x: usize) -> usize {
        if self.detector {
            x
        } else {
            x - 1
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn fill_chain(matrix: &mut DMatrix<f64>, profile: &HoppingProfile, offset: usize) {
    for (a, b, t) in profile.bonds() {
        let (i, j) = (a - 1 + offset, b - 1 + offset);
        matrix[(i, j)] = -t;
        matrix[(j, i)] = -t;
    }
}

/// `H_S = -sum_i t_i c_i^dag c_{i+1} + h.c.` on the bare chain.
pub fn system_matrix(profile: &HoppingProfile) -> SingleParticleHamiltonian {
    let l = profile.sites();
    let mut m = DMatrix::zeros(l, l);
    fill_chain(&mut m, profile, 0);
    SingleParticleHamiltonian {
        matrix: m,
        detector: false,
    }
}

/// `H = H_S + mu c0^dag c0 + g (c0^dag c_p + h.c.)`; `g = 0` gives `H_0`.
pub fn coupled_matrix(
    profile: &HoppingProfile,
    det: &DetectorConfig,
) -> Result<SingleParticleHamiltonian, HamiltonianError> {
    let l = profile.sites();
    det.validate(l)?;
    let mut m = DMatrix::zeros(l + 1, l + 1);
    fill_chain(&mut m, profile, 1);
    m[(0, 0)] = det.gap;
    m[(0, det.site)] = det.coupling;
    m[(det.site, 0)] = det.coupling;
    Ok(SingleParticleHamiltonian {
        matrix: m,
        detector: true,
    })
}
