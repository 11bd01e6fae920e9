//! Detector occupation after the coupling quench.
//!
//! The chain starts in the half-filled ground state of `H_0` with the
//! detector empty. At `t = 0` the coupling is switched on and the state
//! evolves under `H`. With `b_k` the modes of `H_0`, `d_l` the modes of `H`
//! and `U_lk = <d_l | b_k>`, the detector occupation is
//!
//! ```text
//! n0(t) = sum_{l,l'} W_{ll'} exp(-i (eta_l - eta_l') t)
//! W_{ll'} = D_l0 D_l'0 sum_{k in K} U_lk U_l'k
//! ```
//!
//! so its spectrum is a finite set of delta peaks at the differences of the
//! energies of `H`, and its long-time mean is the zero-frequency weight.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::HoppingProfile;
use crate::hamiltonian::{
    coupled_matrix, system_matrix, DetectorConfig, HamiltonianError, SingleParticleHamiltonian,
};
use crate::spectral::{
    diagonalize, max_identity_deviation, occupied_set_with, OccupiedSet, SpectralError, Spectrum,
    ZeroModePolicy, ZERO_MODE_REL_TOL,
};
use crate::update::{detector_update, CoupledModes};

/// Relative width of a degenerate cluster of `H` energies.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuenchError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("occupation n0 = {0} outside [0, 1]")]
    OccupationDomain(f64),
    #[error("detector gap mu = {0} must be positive")]
    InvalidGap(f64),
    #[error("imaginary residue {0:e} in a real observable")]
    ImaginaryResidue(f64),
}

/// `U_lk = <d_l | b_k>`; rows follow `H`, columns follow `H_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    matrix: DMatrix<f64>,
}

impl OverlapMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max |U U^T - 1|`.
    pub fn unitarity_error(&self) -> f64 {
        max_identity_deviation(&(&self.matrix * self.matrix.transpose()))
    }
}

/// `U = D B^T` with real orbitals.
pub fn overlap_matrix(b: &Spectrum, d: &Spectrum) -> Result<OverlapMatrix, QuenchError> {
    if b.dim() != d.dim() {
        return Err(SpectralError::DimensionMismatch {
            left: b.dim(),
            right: d.dim(),
        }
        .into());
    }
    Ok(OverlapMatrix::new(d.orbitals() * b.orbitals().transpose()))
}

/// Fourier weights of the detector occupation, kept in factored form
/// `W = diag(a) P P^T diag(a)` with `a_l = D_l0` and
/// `P[(l, j)] = sqrt(w_j) U[(l, K_j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    projected: DMatrix<f64>,
}

impl WeightMatrix {
    fn from_parts(
        energies: &[f64],
        amplitudes: Vec<f64>,
        overlap: &DMatrix<f64>,
        k: &OccupiedSet,
    ) -> Self {
        let n = energies.len();
        let mut projected = DMatrix::zeros(n, k.count());
        for (j, (mode, weight)) in k.iter().enumerate() {
            let s = weight.sqrt();
            for l in 0..n {
                projected[(l, j)] = s * overlap[(l, mode)];
            }
        }
        Self {
            frequencies: energies.to_vec(),
            amplitudes,
            projected,
        }
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    /// Energies `eta_l` of `H`; peak frequencies are their differences.
    pub fn energies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Detector amplitudes `D_l0`.
    pub fn detector_amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn entry(&self, l: usize, lp: usize) -> f64 {
        let dot = self.projected.row(l).dot(&self.projected.row(lp));
        self.amplitudes[l] * self.amplitudes[lp] * dot
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|l| self.entry(l, l)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&self.amplitudes));
        let ap = &a * &self.projected;
        &ap * ap.transpose()
    }

    /// `sum_{l,l'} W_{ll'}`, the occupation at `t = 0`.
    pub fn total(&self) -> f64 {
        let a = DVector::from_column_slice(&self.amplitudes);
        let v = self.projected.tr_mul(&a);
        v.norm_squared()
    }

    /// Frequency `eta_l - eta_l'` of entry `(l, l')`.
    pub fn frequency(&self, l: usize, lp: usize) -> f64 {
        self.frequencies[l] - self.frequencies[lp]
    }
}

/// Weights from dense spectra of `H` and the overlap with `H_0`.
pub fn weight_matrix(
    d: &Spectrum,
    u: &OverlapMatrix,
    k: &OccupiedSet,
) -> Result<WeightMatrix, QuenchError> {
    let n = d.dim();
    if u.matrix().nrows() != n || u.matrix().ncols() != n {
        return Err(SpectralError::DimensionMismatch {
            left: n,
            right: u.matrix().nrows(),
        }
        .into());
    }
    if let Some(&m) = k.modes().iter().find(|&&m| m >= n) {
        return Err(SpectralError::DimensionMismatch { left: m, right: n }.into());
    }
    let amplitudes = (0..n).map(|l| d.amplitude(l, 0)).collect();
    Ok(WeightMatrix::from_parts(
        d.energies(),
        amplitudes,
        u.matrix(),
        k,
    ))
}

/// Weights from the rank-one update of the `H_0` spectrum.
pub fn weight_matrix_from_modes(modes: &CoupledModes, k: &OccupiedSet) -> WeightMatrix {
    WeightMatrix::from_parts(
        modes.energies(),
        modes.detector_amplitudes(),
        modes.overlap(),
        k,
    )
}

/// Sampled detector occupation `<n0(t)>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DetectorSignal {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// `n0(t) = sum_j | sum_l D_l0 U_{l K_j} exp(-i eta_l t) |^2`, which is the
/// double sum over `W` regrouped by occupied mode.
pub fn occupation_series(w: &WeightMatrix, times: &[f64]) -> DetectorSignal {
    let n = w.dim();
    let mut re = DVector::zeros(n);
    let mut im = DVector::zeros(n);
    let values = times
        .iter()
        .map(|&t| {
            for l in 0..n {
                let (s, c) = (w.frequencies[l] * t).sin_cos();
                re[l] = w.amplitudes[l] * c;
                im[l] = -w.amplitudes[l] * s;
            }
            let a = w.projected.tr_mul(&re);
            let b = w.projected.tr_mul(&im);
            a.norm_squared() + b.norm_squared()
        })
        .collect();
    DetectorSignal {
        times: times.to_vec(),
        values,
    }
}

pub fn default_degeneracy_tol(w: &WeightMatrix) -> f64 {
    let e = w.energies();
    match (e.first(), e.last()) {
        (Some(lo), Some(hi)) => DEGENERACY_REL_TOL * (hi - lo),
        _ => 0.0,
    }
}

/// Consecutive runs of energies closer than `tol`.
fn clusters(energies: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=energies.len() {
        if i == energies.len() || energies[i] - energies[i - 1] >= tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Zero-frequency weight: the sum of `W_{ll'}` over pairs of (numerically)
/// degenerate energies, the diagonal sum for a non-degenerate spectrum.
pub fn long_term_average(w: &WeightMatrix, degeneracy_tol: f64) -> f64 {
    clusters(w.energies(), degeneracy_tol)
        .into_iter()
        .map(|r| {
            if r.len() == 1 {
                w.entry(r.start, r.start)
            } else {
                r.clone()
                    .flat_map(|l| r.clone().map(move |lp| (l, lp)))
                    .map(|(l, lp)| w.entry(l, lp))
                    .sum()
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeaks {
    pub peaks: Vec<Peak>,
}

impl SpectralPeaks {
    /// Smallest non-zero `|omega|` among the listed peaks.
    pub fn min_nonzero_gap(&self) -> Option<f64> {
        self.peaks
            .iter()
            .map(|p| p.omega.abs())
            .filter(|&w| w > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Weight of the zero-frequency peak.
    pub fn central_weight(&self) -> f64 {
        self.peaks
            .iter()
            .filter(|p| p.omega == 0.0)
            .map(|p| p.weight)
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight).sum()
    }
}

/// Delta-peak decomposition of `n0(t)`.
///
/// Pairs within the degeneracy tolerance are merged into a single peak at
/// `omega = 0`; every other pair `(l, l')` yields peaks at `+-omega_{ll'}`
/// with weight `W_{ll'}`. Peaks with `|W| < weight_floor` are dropped.
/// With `bin_width`, weights are summed over bins centred on multiples of
/// the width.
pub fn spectral_peaks(
    w: &WeightMatrix,
    weight_floor: f64,
    bin_width: Option<f64>,
) -> SpectralPeaks {
    spectral_peaks_with_tol(w, weight_floor, bin_width, default_degeneracy_tol(w))
}

pub fn spectral_peaks_with_tol(
    w: &WeightMatrix,
    weight_floor: f64,
    bin_width: Option<f64>,
    degeneracy_tol: f64,
) -> SpectralPeaks {
    let n = w.dim();
    let dense = w.to_dense();
    let mut central = 0.0;
    let mut peaks = Vec::new();
    for l in 0..n {
        central += dense[(l, l)];
        for lp in l + 1..n {
            let omega = w.frequency(l, lp);
            let weight = dense[(l, lp)];
            if omega.abs() < degeneracy_tol {
                central += 2.0 * weight;
            } else if weight.abs() >= weight_floor {
                peaks.push(Peak { omega, weight });
                peaks.push(Peak {
                    omega: -omega,
                    weight,
                });
            }
        }
    }
    if n > 0 && central.abs() >= weight_floor {
        peaks.push(Peak {
            omega: 0.0,
            weight: central,
        });
    }
    peaks.sort_by(|a, b| {
        a.omega
            .total_cmp(&b.omega)
            .then(a.weight.total_cmp(&b.weight))
    });

    if let Some(width) = bin_width {
        assert!(width > 0.0, "bin width must be positive");
        let mut binned: Vec<(i64, f64)> = Vec::new();
        for p in &peaks {
            let bin = (p.omega / width).round() as i64;
            match binned.last_mut() {
                Some((b, sum)) if *b == bin => *sum += p.weight,
                _ => binned.push((bin, p.weight)),
            }
        }
        peaks = binned
            .into_iter()
            .map(|(b, weight)| Peak {
                omega: b as f64 * width,
                weight,
            })
            .collect();
    }
    SpectralPeaks { peaks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `n0 < 1/2`, positive temperature.
    Normal,
    /// `n0 >= 1/2`, non-positive inverse temperature.
    Inverted,
}

/// Fermi-Dirac reading of a detector occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEstimate {
    pub n0: f64,
    /// Inverse temperature; `+inf` for an empty detector.
    pub beta: f64,
    /// `1 / beta`; exactly zero when `beta` is infinite.
    pub temperature: f64,
    pub regime: Regime,
}

/// Inverts `n0 = 1 / (1 + exp(beta mu))`.
pub fn infer_temperature(n0: f64, mu: f64) -> Result<TemperatureEstimate, QuenchError> {
    if !(0.0..=1.0).contains(&n0) {
        return Err(QuenchError::OccupationDomain(n0));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(QuenchError::InvalidGap(mu));
    }
    let beta = if n0 == 0.0 {
        f64::INFINITY
    } else if n0 == 1.0 {
        f64::NEG_INFINITY
    } else {
        ((-n0).ln_1p() - n0.ln()) / mu
    };
    let temperature = if beta.is_infinite() {
        0.0
    } else {
        beta.recip()
    };
    Ok(TemperatureEstimate {
        n0,
        beta,
        temperature,
        regime: if n0 < 0.5 {
            Regime::Normal
        } else {
            Regime::Inverted
        },
    })
}

/// One-body correlation matrix `C_ij = <c_i^dag c_j>` of the initial state.
pub fn initial_correlation(b: &Spectrum, k: &OccupiedSet) -> DMatrix<f64> {
    let n = b.dim();
    let mut c = DMatrix::zeros(n, n);
    for (mode, weight) in k.iter() {
        let row = b.orbitals().row(mode);
        for j in 0..n {
            let wj = weight * row[j];
            if wj == 0.0 {
                continue;
            }
            for i in 0..n {
                c[(i, j)] += row[i] * wj;
            }
        }
    }
    c
}

/// Single-particle propagator `V = exp(-i H t)` from the spectrum of `H`.
pub fn propagator(d: &Spectrum, t: f64) -> DMatrix<Complex<f64>> {
    let n = d.dim();
    let orb = d.orbitals();
    let mut v = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for (l, &eta) in d.energies().iter().enumerate() {
        let phase = Complex::new(0.0, -eta * t).exp();
        for j in 0..n {
            let pj = phase * orb[(l, j)];
            for i in 0..n {
                v[(i, j)] += pj * orb[(l, i)];
            }
        }
    }
    v
}

/// `C(t) = conj(V) C(0) V^T`, the Heisenberg-evolved correlation matrix.
pub fn evolved_correlation(d: &Spectrum, c0: &DMatrix<f64>, t: f64) -> DMatrix<Complex<f64>> {
    let v = propagator(d, t);
    let c0c = c0.map(|x| Complex::new(x, 0.0));
    v.conjugate() * c0c * v.transpose()
}

/// Detector occupation from the evolved correlation matrix, `C_00(t)`.
///
/// Independent of the weight-matrix route: no overlap matrix is formed and
/// the time dependence enters through the site-basis propagator.
pub fn correlation_oracle(
    h: &SingleParticleHamiltonian,
    b: &Spectrum,
    k: &OccupiedSet,
    times: &[f64],
) -> Result<DetectorSignal, QuenchError> {
    if h.dim() != b.dim() {
        return Err(SpectralError::DimensionMismatch {
            left: h.dim(),
            right: b.dim(),
        }
        .into());
    }
    let d = diagonalize(h)?;
    let c0 = initial_correlation(b, k);
    let n = d.dim();
    let c0c = c0.map(|x| Complex::new(x, 0.0));
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        // row 0 of exp(-i H t)
        let mut row = DVector::from_element(n, Complex::new(0.0, 0.0));
        for (l, &eta) in d.energies().iter().enumerate() {
            let coef = Complex::new(0.0, -eta * t).exp() * d.amplitude(l, 0);
            for m in 0..n {
                row[m] += coef * d.amplitude(l, m);
            }
        }
        let c00 = row.conjugate().dot(&(&c0c * &row));
        if c00.im.abs() > 1e-10 {
            return Err(QuenchError::ImaginaryResidue(c00.im));
        }
        values.push(c00.re);
    }
    Ok(DetectorSignal {
        times: times.to_vec(),
        values,
    })
}

/// Which eigensolver route produces the spectrum of `H` for each site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverRoute {
    /// Rank-one secular update of the shared `H_0` spectrum.
    #[default]
    Update,
    /// Dense diagonalization of the full `H`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuenchOptions {
    /// Absolute zero-mode tolerance; defaults to `1e-8 |H_0|_inf`.
    pub zero_mode_tol: Option<f64>,
    /// Absolute degeneracy tolerance; defaults to `1e-9 (eta_max - eta_min)`.
    pub degeneracy_tol: Option<f64>,
    pub zero_modes: ZeroModePolicy,
    pub solver: SolverRoute,
}

/// The pre-quench side of the pipeline, shared by every attachment site.
#[derive(Debug, Clone)]
pub struct QuenchSetup {
    profile: HoppingProfile,
    gap: f64,
    chain: Spectrum,
    base: Spectrum,
    occupied: OccupiedSet,
    options: QuenchOptions,
}

impl QuenchSetup {
    pub fn new(
        profile: &HoppingProfile,
        gap: f64,
        options: QuenchOptions,
    ) -> Result<Self, QuenchError> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(QuenchError::InvalidGap(gap));
        }
        let hs = system_matrix(profile);
        let chain = diagonalize(&hs)?;
        let base = chain.with_isolated_level(gap);
        // |H_0|_inf = max(|H_S|_inf, mu)
        let zero_tol = options
            .zero_mode_tol
            .unwrap_or_else(|| ZERO_MODE_REL_TOL * hs.norm_inf().max(gap));
        let occupied = occupied_set_with(&base, zero_tol, options.zero_modes)?;
        Ok(Self {
            profile: profile.clone(),
            gap,
            chain,
            base,
            occupied,
            options,
        })
    }

    pub fn profile(&self) -> &HoppingProfile {
        &self.profile
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Spectrum of the bare chain `H_S`.
    pub fn chain_spectrum(&self) -> &Spectrum {
        &self.chain
    }

    /// Spectrum of `H_0`, detector on index 0.
    pub fn base_spectrum(&self) -> &Spectrum {
        &self.base
    }

    /// Occupied modes of `H_0`.
    pub fn occupied(&self) -> &OccupiedSet {
        &self.occupied
    }

    /// Occupied modes of the bare chain (indices into `chain_spectrum`).
    pub fn chain_occupied(&self) -> OccupiedSet {
        let kd = self
            .base
            .energies()
            .iter()
            .enumerate()
            .position(|(k, _)| self.base.amplitude(k, 0) != 0.0)
            .expect("detector level present");
        let modes = self
            .occupied
            .modes()
            .iter()
            .map(|&m| if m > kd { m - 1 } else { m })
            .collect();
        OccupiedSet::new(modes, self.occupied.weights().to_vec())
    }

    pub fn options(&self) -> &QuenchOptions {
        &self.options
    }

    pub fn detector(&self, site: usize, coupling: f64) -> DetectorConfig {
        DetectorConfig::new(site, coupling, self.gap)
    }

    /// Switches on the coupling at `site` and decomposes the result.
    pub fn attach(&self, site: usize, coupling: f64) -> Result<Quench, QuenchError> {
        let det = self.detector(site, coupling);
        det.validate(self.profile.sites())?;
        let (energies, overlap, weights) = match self.options.solver {
            SolverRoute::Update => {
                let modes = detector_update(&self.base, site, coupling)?;
                let weights = weight_matrix_from_modes(&modes, &self.occupied);
                (
                    modes.energies().to_vec(),
                    OverlapMatrix::new(modes.overlap().clone()),
                    weights,
                )
            }
            SolverRoute::Dense => {
                let h = coupled_matrix(&self.profile, &det)?;
                let d = diagonalize(&h)?;
                let u = overlap_matrix(&self.base, &d)?;
                let weights = weight_matrix(&d, &u, &self.occupied)?;
                (d.energies().to_vec(), u, weights)
            }
        };
        let degeneracy_tol = self
            .options
            .degeneracy_tol
            .unwrap_or_else(|| default_degeneracy_tol(&weights));
        Ok(Quench {
            detector: det,
            energies,
            overlap,
            weights,
            degeneracy_tol,
        })
    }
}

/// Post-quench decomposition for one attachment site.
#[derive(Debug, Clone)]
pub struct Quench {
    pub detector: DetectorConfig,
    energies: Vec<f64>,
    overlap: OverlapMatrix,
    weights: WeightMatrix,
    degeneracy_tol: f64,
}

impl Quench {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn overlap(&self) -> &OverlapMatrix {
        &self.overlap
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn long_term_average(&self) -> f64 {
        long_term_average(&self.weights, self.degeneracy_tol)
    }

    pub fn series(&self, times: &[f64]) -> DetectorSignal {
        occupation_series(&self.weights, times)
    }

    pub fn peaks(&self, weight_floor: f64, bin_width: Option<f64>) -> SpectralPeaks {
        spectral_peaks_with_tol(&self.weights, weight_floor, bin_width, self.degeneracy_tol)
    }

    pub fn temperature(&self) -> Result<TemperatureEstimate, QuenchError> {
        infer_temperature(self.long_term_average().clamp(0.0, 1.0), self.detector.gap)
    }

    /// Largest frequency present, `eta_max - eta_min`.
    pub fn bandwidth(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// Uniform grid on `[0, t_max]` resolving the fastest oscillation of the
/// signal: step at most `pi / (4 omega_max)`.
pub fn default_time_grid(t_max: f64, omega_max: f64) -> Vec<f64> {
    let step = std::f64::consts::PI / (4.0 * omega_max.max(f64::MIN_POSITIVE));
    let samples = ((t_max / step).ceil() as usize).max(1) + 1;
    uniform_grid(t_max, samples)
}

/// `samples` equally spaced times from 0 to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..samples)
            .map(|i| t_max * i as f64 / (samples - 1) as f64)
            .collect(),
    }
}
