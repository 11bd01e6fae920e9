//! Position and coupling scans, and regressions of the local temperature
//! against the local hopping.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{build_profile, GeometryError, GeometrySpec, HoppingProfile};
use crate::hamiltonian::DetectorConfig;
use crate::quench::{DetectorSignal, QuenchError, QuenchOptions, QuenchSetup};
use crate::spectral::OccupiedSet;
use crate::variational::variational_n0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quench(#[from] QuenchError),
    #[error("site {site}, g = {coupling}: {source}")]
    Site {
        site: usize,
        coupling: f64,
        #[source]
        source: QuenchError,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("fit window {window} holds {found} points, need at least 3")]
    TooFewPoints { window: String, found: usize },
    #[error("all abscissas in the fit window are equal")]
    DegenerateAbscissas,
    #[error("non-finite value at site {site}")]
    NonFinite { site: usize },
}

/// One attachment site of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub site: usize,
    /// Mean of the bonds adjacent to the site.
    pub t_local: f64,
    /// Long-time mean of the detector occupation.
    pub n0: f64,
    pub beta: f64,
    pub n0_variational: f64,
    pub g: f64,
    pub mu: f64,
}

/// Sites to scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Sites {
    #[default]
    All,
    List(Vec<usize>),
}

impl Sites {
    pub fn resolve(&self, sites: usize) -> Vec<usize> {
        match self {
            Sites::All => (1..=sites).collect(),
            Sites::List(v) => v.clone(),
        }
    }
}

/// Shared state of a scan: the `H_0` spectrum and the occupied modes.
pub struct Scanner {
    setup: QuenchSetup,
    chain_occupied: OccupiedSet,
}

impl Scanner {
    pub fn new(
        profile: &HoppingProfile,
        mu: f64,
        options: QuenchOptions,
    ) -> Result<Self, ExperimentError> {
        let setup = QuenchSetup::new(profile, mu, options)?;
        let chain_occupied = setup.chain_occupied();
        Ok(Self {
            setup,
            chain_occupied,
        })
    }

    pub fn setup(&self) -> &QuenchSetup {
        &self.setup
    }

    pub fn record(&self, site: usize, g: f64) -> Result<ScanRecord, ExperimentError> {
        let wrap = |source| ExperimentError::Site {
            site,
            coupling: g,
            source,
        };
        let q = self.setup.attach(site, g).map_err(wrap)?;
        let est = q.temperature().map_err(wrap)?;
        let det = DetectorConfig::new(site, g, self.setup.gap());
        let var = variational_n0(self.setup.chain_spectrum(), &self.chain_occupied, &det)
            .map_err(|e| wrap(e.into()))?;
        Ok(ScanRecord {
            site,
            t_local: self.setup.profile().site_hopping(site),
            n0: est.n0,
            beta: est.beta,
            n0_variational: var.n0,
            g,
            mu: self.setup.gap(),
        })
    }

    /// One record per site, in request order.
    pub fn scan_positions(
        &self,
        g: f64,
        sites: &[usize],
    ) -> Result<Vec<ScanRecord>, ExperimentError> {
        sites.par_iter().map(|&s| self.record(s, g)).collect()
    }

    /// One record per coupling at a fixed site, in request order.
    pub fn scan_coupling(
        &self,
        site: usize,
        couplings: &[f64],
    ) -> Result<Vec<ScanRecord>, ExperimentError> {
        couplings
            .par_iter()
            .map(|&g| self.record(site, g))
            .collect()
    }
}

/// Scans the attachment site with the coupling and gap of `det`.
pub fn scan_positions(
    profile: &HoppingProfile,
    det: &DetectorConfig,
    sites: &Sites,
    options: QuenchOptions,
) -> Result<Vec<ScanRecord>, ExperimentError> {
    Scanner::new(profile, det.gap, options)?
        .scan_positions(det.coupling, &sites.resolve(profile.sites()))
}

pub fn scan_coupling(
    profile: &HoppingProfile,
    site: usize,
    mu: f64,
    couplings: &[f64],
    options: QuenchOptions,
) -> Result<Vec<ScanRecord>, ExperimentError> {
    Scanner::new(profile, mu, options)?.scan_coupling(site, couplings)
}

/// Selection of scan records entering a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    /// Inclusive site range, `None` for every site.
    pub sites: Option<(usize, usize)>,
    pub t_min: f64,
    /// Whether `t_local == t_min` is excluded.
    pub strict_min: bool,
    pub t_max: f64,
}

impl FitWindow {
    pub fn all() -> Self {
        Self {
            sites: None,
            t_min: f64::NEG_INFINITY,
            strict_min: false,
            t_max: f64::INFINITY,
        }
    }

    /// Interior sites (10% trimmed at each end of the chain) with `t > mu`.
    pub fn tolman(sites: usize, mu: f64) -> Self {
        let cut = sites / 10;
        Self {
            sites: Some((cut + 1, sites - cut)),
            t_min: mu,
            strict_min: true,
            t_max: f64::INFINITY,
        }
    }

    /// `t >= 1`.
    pub fn logbeta() -> Self {
        Self::hopping(1.0, f64::INFINITY)
    }

    /// `t_min <= t <= t_max` at any site.
    pub fn hopping(t_min: f64, t_max: f64) -> Self {
        Self {
            sites: None,
            t_min,
            strict_min: false,
            t_max,
        }
    }

    pub fn contains(&self, r: &ScanRecord) -> bool {
        let site_ok = self.sites.is_none_or(|(a, b)| (a..=b).contains(&r.site));
        let lower_ok = if self.strict_min {
            r.t_local > self.t_min
        } else {
            r.t_local >= self.t_min
        };
        site_ok && lower_ok && r.t_local <= self.t_max
    }

    pub fn select<'a>(&self, records: &'a [ScanRecord]) -> Vec<&'a ScanRecord> {
        records.iter().filter(|r| self.contains(r)).collect()
    }
}

impl fmt::Display for FitWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((a, b)) = self.sites {
            write!(f, "sites {a}..={b}, ")?;
        }
        let lo = if self.strict_min { "<" } else { "<=" };
        write!(f, "{} {lo} t <= {}", self.t_min, self.t_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// `g^2 / n0 = slope * t + intercept`.
    Linear,
    /// `beta = intercept + slope * ln t`.
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: String,
    pub points: usize,
}

fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64, f64), FitError> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0).powi(2) * n {
        return Err(FitError::DegenerateAbscissas);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r2))
}

fn fit(
    records: &[ScanRecord],
    window: &FitWindow,
    model: FitModel,
    point: impl Fn(&ScanRecord) -> (f64, f64),
) -> Result<FitResult, FitError> {
    let chosen = window.select(records);
    if chosen.len() < 3 {
        return Err(FitError::TooFewPoints {
            window: window.to_string(),
            found: chosen.len(),
        });
    }
    let points = chosen
        .iter()
        .map(|r| {
            let p = point(r);
            if p.0.is_finite() && p.1.is_finite() {
                Ok(p)
            } else {
                Err(FitError::NonFinite { site: r.site })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (slope, intercept, r2) = least_squares(&points)?;
    Ok(FitResult {
        model,
        slope,
        intercept,
        r2,
        window: window.to_string(),
        points: points.len(),
    })
}

/// Least-squares line of `g^2 / n0` against the local hopping.
pub fn fit_tolman(records: &[ScanRecord], window: &FitWindow) -> Result<FitResult, FitError> {
    fit(records, window, FitModel::Linear, |r| {
        (r.t_local, r.g * r.g / r.n0)
    })
}

/// Least-squares fit of `beta = a + b ln t`; `a` is the intercept.
pub fn fit_logbeta(records: &[ScanRecord], window: &FitWindow) -> Result<FitResult, FitError> {
    fit(records, window, FitModel::Log, |r| (r.t_local.ln(), r.beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSpread {
    /// Largest `(max - min) / mean` of `g^2 / n0` over matched sites.
    pub max: f64,
    pub median: f64,
    /// Site of the largest spread.
    pub worst_site: usize,
    pub sites: usize,
}

/// Spread of `g^2 / n0` across scans of the same chain at different
/// couplings, compared site by site inside the window.
pub fn collapse_spread(scans: &[Vec<ScanRecord>], window: &FitWindow) -> Option<CollapseSpread> {
    let first = scans.first()?;
    let mut spreads = Vec::new();
    for r in window.select(first) {
        let ys: Vec<f64> = scans
            .iter()
            .filter_map(|s| s.iter().find(|o| o.site == r.site))
            .map(|o| o.g * o.g / o.n0)
            .collect();
        if ys.len() != scans.len() {
            continue;
        }
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        spreads.push(((hi - lo) / mean, r.site));
    }
    if spreads.is_empty() {
        return None;
    }
    let (max, worst_site) = spreads
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty");
    let mut values: Vec<f64> = spreads.iter().map(|s| s.0).collect();
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let median = if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    };
    Some(CollapseSpread {
        max,
        median,
        worst_site,
        sites: m,
    })
}

/// Lag-1 autocorrelation of `n0` along the chain after subtracting a
/// centred 9-site moving average. Negative values signal the even/odd
/// alternation of the occupation.
pub fn parity_autocorrelation(records: &[ScanRecord], window: &FitWindow) -> Option<f64> {
    const HALF: usize = 4;
    let mut pts: Vec<(usize, f64)> = window
        .select(records)
        .iter()
        .map(|r| (r.site, r.n0))
        .collect();
    pts.sort_by_key(|p| p.0);
    if pts.len() < 2 * HALF + 3 {
        return None;
    }
    let res: Vec<f64> = (HALF..pts.len() - HALF)
        .map(|i| {
            let mean =
                pts[i - HALF..=i + HALF].iter().map(|p| p.1).sum::<f64>() / (2 * HALF + 1) as f64;
            pts[i].1 - mean
        })
        .collect();
    let m = res.iter().sum::<f64>() / res.len() as f64;
    let var: f64 = res.iter().map(|r| (r - m).powi(2)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = res.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Some(cov / var)
}

/// Chain used for the time-evolution figure, `t_i = 0.6 + 0.4 i / L`.
pub fn evolution_geometry(sites: usize) -> GeometrySpec {
    GeometrySpec::affine(sites, 0.6, 0.4)
}

/// Detector used for the time-evolution figure, attached at the centre.
pub fn evolution_detector(sites: usize) -> DetectorConfig {
    DetectorConfig::new(sites / 2, 0.6, 0.55)
}

/// Sampled `n0(t)` on `samples` equally spaced times in `[0, t_max]`.
pub fn evolve_experiment(
    profile: &HoppingProfile,
    det: &DetectorConfig,
    t_max: f64,
    samples: usize,
    options: QuenchOptions,
) -> Result<DetectorSignal, ExperimentError> {
    let setup = QuenchSetup::new(profile, det.gap, options)?;
    let q = setup.attach(det.site, det.coupling)?;
    Ok(q.series(&crate::quench::uniform_grid(t_max, samples)))
}

/// Convenience wrapper building the profile first.
pub fn evolve_spec(
    spec: &GeometrySpec,
    det: &DetectorConfig,
    t_max: f64,
    samples: usize,
    options: QuenchOptions,
) -> Result<DetectorSignal, ExperimentError> {
    evolve_experiment(&build_profile(spec)?, det, t_max, samples, options)
}
