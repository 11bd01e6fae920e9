//! Built-in consistency checks on small chains.

use qtherm_core::quench::{correlation_oracle, uniform_grid, SolverRoute};
use qtherm_core::{
    build_profile, coupled_matrix, diagonalize, Boundary, DetectorConfig, GeometrySpec,
    QuenchOptions, QuenchSetup, ZeroModePolicy,
};

pub struct Check {
    pub instance: String,
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn instances() -> Vec<(&'static str, GeometrySpec, usize, f64)> {
    vec![
        (
            "two-site",
            GeometrySpec::homogeneous(2, 1.0, Boundary::Open),
            1,
            0.1,
        ),
        ("rindler-12", GeometrySpec::rindler(12, 0.1), 5, 0.2),
        ("rainbow-12", GeometrySpec::rainbow(12, 0.8), 6, 0.3),
        ("sine-16", GeometrySpec::sinusoidal(16, 1.0, 0.5), 9, 0.1),
        ("affine-16", GeometrySpec::affine(16, 0.6, 0.4), 8, 0.6),
        (
            "ring-8",
            GeometrySpec::homogeneous(8, 1.0, Boundary::Periodic),
            3,
            0.1,
        ),
    ]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs every check; numeric failures of the pipeline itself are returned
/// as errors.
pub fn run() -> Result<Vec<Check>, String> {
    let mut out = Vec::new();
    let times = uniform_grid(100.0, 201);
    for (name, spec, site, g) in instances() {
        let mu = 0.5;
        let profile = build_profile(&spec).map_err(|e| e.to_string())?;
        let options = QuenchOptions {
            zero_modes: ZeroModePolicy::Half,
            ..Default::default()
        };
        let setup = QuenchSetup::new(&profile, mu, options).map_err(|e| e.to_string())?;
        let dense_setup = QuenchSetup::new(
            &profile,
            mu,
            QuenchOptions {
                solver: SolverRoute::Dense,
                ..options
            },
        )
        .map_err(|e| e.to_string())?;
        let q = setup.attach(site, g).map_err(|e| e.to_string())?;
        let qd = dense_setup.attach(site, g).map_err(|e| e.to_string())?;
        let h = coupled_matrix(&profile, &DetectorConfig::new(site, g, mu))
            .map_err(|e| e.to_string())?;
        let d = diagonalize(&h).map_err(|e| e.to_string())?;
        let series = q.series(&times);
        let oracle = correlation_oracle(&h, setup.base_spectrum(), setup.occupied(), &times)
            .map_err(|e| e.to_string())?;
        let w = q.weights();
        let peaks = q.peaks(0.0, None);

        let mut push = |check: &'static str, value: f64, tolerance: f64| {
            out.push(Check {
                instance: name.to_string(),
                name: check,
                value,
                tolerance,
            })
        };
        push(
            "series vs correlation oracle",
            max_abs_diff(&series.values, &oracle.values),
            1e-8,
        );
        push(
            "update vs dense energies",
            max_abs_diff(q.energies(), qd.energies()),
            1e-10,
        );
        push(
            "unitarity of B",
            setup.base_spectrum().orthogonality_error(),
            1e-10,
        );
        push("unitarity of D", d.orthogonality_error(), 1e-10);
        push("unitarity of U", q.overlap().unitarity_error(), 1e-10);
        push("sum of W", w.total().abs(), 1e-10);
        push(
            "negative diagonal of W",
            -w.diagonal().iter().copied().fold(0.0, f64::min),
            0.0,
        );
        push("n0(0)", series.values[0].abs(), 1e-12);
        let outside = series
            .values
            .iter()
            .map(|&v| (-v).max(v - 1.0).max(0.0))
            .fold(0.0, f64::max);
        push("n0(t) outside [0, 1]", outside, 0.0);
        push("peak weight sum", peaks.total_weight().abs(), 1e-10);
        push(
            "central peak vs long-term average",
            (peaks.central_weight() - q.long_term_average()).abs(),
            1e-12,
        );
    }
    Ok(out)
}
