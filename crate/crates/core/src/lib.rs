//! Local thermometry of free-fermion chains with a two-level probe.
//!
//! A detector level of gap `mu` is coupled with strength `g` to one site of
//! an inhomogeneous hopping chain prepared in its half-filled ground state.
//! After the quench the detector occupation relaxes towards a time average
//! that reads as a Fermi-Dirac temperature. The crate builds the chain,
//! diagonalizes it, evolves the detector exactly and compares the result
//! with a two-level variational estimate.

pub mod experiments;
pub mod geometry;
pub mod hamiltonian;
pub mod quench;
pub mod spectral;
pub mod update;
pub mod variational;

pub use experiments::{
    collapse_spread, fit_logbeta, fit_tolman, scan_coupling, scan_positions, ExperimentError,
    FitError, FitModel, FitResult, FitWindow, ScanRecord, Scanner, Sites,
};
pub use geometry::{
    build_profile, Boundary, GeometryError, GeometryKind, GeometrySpec, HoppingProfile,
};
pub use hamiltonian::{
    coupled_matrix, system_matrix, DetectorConfig, HamiltonianError, SingleParticleHamiltonian,
};
pub use quench::{
    infer_temperature, long_term_average, occupation_series, overlap_matrix, spectral_peaks,
    weight_matrix, DetectorSignal, OverlapMatrix, Peak, Quench, QuenchError, QuenchOptions,
    QuenchSetup, Regime, SolverRoute, SpectralPeaks, TemperatureEstimate, WeightMatrix,
};
pub use spectral::{
    diagonalize, occupied_set, occupied_set_with, OccupiedSet, SpectralError, Spectrum,
    ZeroModePolicy,
};
pub use update::{detector_update, CoupledModes};
pub use variational::{
    compare_modes, two_level_solve, variational_n0, ModeComparison, ModeDeformation,
    VariationalEstimate,
};
