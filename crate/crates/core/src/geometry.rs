//! Bond-amplitude profiles for inhomogeneous hopping chains.
//!
//! A profile stores the hopping amplitude `t_i` of every bond of a chain of
//! `L` sites. Bond `i` (1-based) joins sites `i` and `i + 1`; under periodic
//! boundary conditions the extra bond `L` joins site `L` back to site 1.
//! Slowly varying amplitudes read as a local lapse function (a local speed
//! of light) of a static background metric.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid chain size L = {0}: L must be even and at least 2")]
    InvalidSize(usize),
    #[error("negative bond amplitude t_{bond} = {value}")]
    NegativeAmplitude { bond: usize, value: f64 },
    #[error("non-finite bond amplitude at bond {bond}")]
    NonFinite { bond: usize },
    #[error("expected {expected} bond amplitudes for L = {sites} ({boundary:?}), got {found}")]
    LengthMismatch {
        sites: usize,
        boundary: Boundary,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl Boundary {
    /// Number of bonds of an `sites`-site chain with this boundary.
    pub fn bond_count(self, sites: usize) -> usize {
        match self {
            Boundary::Open => sites.saturating_sub(1),
            Boundary::Periodic => sites,
        }
    }
}

/// Closed-form families of hopping profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GeometryKind {
    /// `t_i = t0`.
    Homogeneous { t0: f64 },
    /// `t_i = i * dt`; the weak left edge behaves like a horizon.
    Rindler { dt: f64 },
    /// `t_i = alpha^|i - L/2|`, falling exponentially from the centre.
    Rainbow { alpha: f64 },
    /// `t_i = t0 + amplitude * sin(2 pi i / L)`.
    Sinusoidal { t0: f64, amplitude: f64 },
    /// `t_i = t0 + slope * i / L`.
    Affine { t0: f64, slope: f64 },
    /// Explicit amplitudes, one per bond.
    Custom { amplitudes: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub sites: usize,
    pub boundary: Boundary,
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, sites: usize, boundary: Boundary) -> Self {
        Self {
            kind,
            sites,
            boundary,
        }
    }

    pub fn homogeneous(sites: usize, t0: f64, boundary: Boundary) -> Self {
        Self::new(GeometryKind::Homogeneous { t0 }, sites, boundary)
    }

    pub fn rindler(sites: usize, dt: f64) -> Self {
        Self::new(GeometryKind::Rindler { dt }, sites, Boundary::Open)
    }

    pub fn rainbow(sites: usize, alpha: f64) -> Self {
        Self::new(GeometryKind::Rainbow { alpha }, sites, Boundary::Open)
    }

    pub fn sinusoidal(sites: usize, t0: f64, amplitude: f64) -> Self {
        Self::new(
            GeometryKind::Sinusoidal { t0, amplitude },
            sites,
            Boundary::Open,
        )
    }

    pub fn affine(sites: usize, t0: f64, slope: f64) -> Self {
        Self::new(GeometryKind::Affine { t0, slope }, sites, Boundary::Open)
    }
}

/// Validated bond amplitudes of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoppingProfile {
    sites: usize,
    boundary: Boundary,
    amplitudes: Vec<f64>,
}

impl HoppingProfile {
    pub fn new(
        sites: usize,
        boundary: Boundary,
        amplitudes: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if sites < 2 || !sites.is_multiple_of(2) {
            return Err(GeometryError::InvalidSize(sites));
        }
        let expected = boundary.bond_count(sites);
        if amplitudes.len() != expected {
            return Err(GeometryError::LengthMismatch {
                sites,
                boundary,
                expected,
                found: amplitudes.len(),
            });
        }
        for (i, &t) in amplitudes.iter().enumerate() {
            if !t.is_finite() {
                return Err(GeometryError::NonFinite { bond: i + 1 });
            }
            if t < 0.0 {
                return Err(GeometryError::NegativeAmplitude {
                    bond: i + 1,
                    value: t,
                });
            }
        }
        Ok(Self {
            sites,
            boundary,
            amplitudes,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Amplitude of bond `i` (1-based).
    pub fn bond(&self, i: usize) -> f64 {
        self.amplitudes[i - 1]
    }

    /// Bonds as `(left site, right site, amplitude)` with 1-based sites.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let l = self.sites;
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &t)| (i + 1, if i + 1 == l { 1 } else { i + 2 }, t))
    }

    /// Site-local hopping `t(x)`: the mean of the bonds touching site `x`.
    ///
    /// Under open boundaries the edge sites only have one bond, which is
    /// used as is.
    pub fn site_hopping(&self, x: usize) -> f64 {
        assert!(
            (1..=self.sites).contains(&x),
            "site {x} outside 1..={}",
            self.sites
        );
        let l = self.sites;
        match self.boundary {
            Boundary::Open if x == 1 => self.bond(1),
            Boundary::Open if x == l => self.bond(l - 1),
            Boundary::Open => 0.5 * (self.bond(x - 1) + self.bond(x)),
            Boundary::Periodic => {
                let left = if x == 1 { l } else { x - 1 };
                0.5 * (self.bond(left) + self.bond(x))
            }
        }
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<(), GeometryError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

/// Evaluates a geometry family on its bonds and validates the result.
pub fn build_profile(spec: &GeometrySpec) -> Result<HoppingProfile, GeometryError> {
    let l = spec.sites;
    if l < 2 || !l.is_multiple_of(2) {
        return Err(GeometryError::InvalidSize(l));
    }
    let n = spec.boundary.bond_count(l);
    let lf = l as f64;
    let bonds = 1..=n;
    let amplitudes: Vec<f64> = match &spec.kind {
        GeometryKind::Homogeneous { t0 } => {
            check_finite("t0", *t0)?;
            vec![*t0; n]
        }
        GeometryKind::Rindler { dt } => {
            check_finite("dt", *dt)?;
            bonds.map(|i| i as f64 * dt).collect()
        }
        GeometryKind::Rainbow { alpha } => {
            check_finite("alpha", *alpha)?;
            if *alpha <= 0.0 || *alpha > 1.0 {
                return Err(GeometryError::InvalidParameter {
                    name: "alpha",
                    value: *alpha,
                    reason: "must lie in (0, 1]",
                });
            }
            let centre = (l / 2) as i64;
            bonds
                .map(|i| alpha.powi((i as i64 - centre).unsigned_abs() as i32))
                .collect()
        }
        GeometryKind::Sinusoidal { t0, amplitude } => {
            check_finite("t0", *t0)?;
            check_finite("amplitude", *amplitude)?;
            bonds
                .map(|i| {
                    let t = t0 + amplitude * (2.0 * PI * i as f64 / lf).sin();
                    // sin(3 pi / 2) is not exactly -1 in floating point; a
                    // horizon at t0 = |A| must come out as an exact zero.
                    if t.abs() < 64.0 * f64::EPSILON * (t0.abs() + amplitude.abs()) {
                        0.0
                    } else {
                        t
                    }
                })
                .collect()
        }
        GeometryKind::Affine { t0, slope } => {
            check_finite("t0", *t0)?;
            check_finite("slope", *slope)?;
            bonds.map(|i| t0 + slope * (i as f64 / lf)).collect()
        }
        GeometryKind::Custom { amplitudes } => amplitudes.clone(),
    };
    HoppingProfile::new(l, spec.boundary, amplitudes)
}
