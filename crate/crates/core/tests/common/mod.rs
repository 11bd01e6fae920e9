#![allow(dead_code)]

pub mod fock;

use qtherm_core::{build_profile, Boundary, GeometryKind, GeometrySpec, HoppingProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Open chain of `sites` bonds drawn uniformly from `[0.2, 1.5]`.
pub fn random_profile(rng: &mut ChaCha8Rng, sites: usize) -> HoppingProfile {
    let amplitudes = (0..sites - 1).map(|_| rng.gen_range(0.2..1.5)).collect();
    build_profile(&GeometrySpec::new(
        GeometryKind::Custom { amplitudes },
        sites,
        Boundary::Open,
    ))
    .unwrap()
}

pub mod invariants {
    use qtherm_core::quench::{evolved_correlation, initial_correlation, uniform_grid};
    use qtherm_core::{
        coupled_matrix, diagonalize, overlap_matrix, DetectorConfig, HoppingProfile, QuenchOptions,
        QuenchSetup, ZeroModePolicy,
    };

    /// Worst violation of each invariant on one instance.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct Report {
        pub unitarity_b: f64,
        pub unitarity_d: f64,
        pub unitarity_u: f64,
        pub unitarity_u_dense: f64,
        pub weight_sum: f64,
        pub min_weight_diag: f64,
        pub series_min: f64,
        pub series_max: f64,
        pub n0_at_zero: f64,
        pub particle_hole: f64,
        pub density: f64,
        pub sign_of_g: f64,
        pub time_average: f64,
        /// Rigorous bound on `time_average` from the sampled Dirichlet kernel.
        pub time_average_bound: f64,
        pub particle_number: f64,
    }

    pub fn check(profile: &HoppingProfile, site: usize, g: f64, mu: f64) -> Report {
        let opts = QuenchOptions {
            zero_modes: ZeroModePolicy::Half,
            ..Default::default()
        };
        let setup = QuenchSetup::new(profile, mu, opts).unwrap();
        let q = setup.attach(site, g).unwrap();
        let det = DetectorConfig::new(site, g, mu);
        let h = coupled_matrix(profile, &det).unwrap();
        let d = diagonalize(&h).unwrap();
        let b = setup.base_spectrum();
        let w = q.weights();

        let chain = setup.chain_spectrum();
        let e = chain.energies();
        let n = e.len();
        let particle_hole = (0..n)
            .map(|k| (e[k] + e[n - 1 - k]).abs())
            .fold(0.0, f64::max);
        let c = initial_correlation(chain, &setup.chain_occupied());
        let density = (0..n).map(|i| (c[(i, i)] - 0.5).abs()).fold(0.0, f64::max);

        let times = uniform_grid(50.0, 251);
        let series = q.series(&times);
        let flipped = setup.attach(site, -g).unwrap().series(&times);
        let sign_of_g = series
            .values
            .iter()
            .zip(&flipped.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        let c0 = initial_correlation(b, setup.occupied());
        let particles: f64 = c0.trace();
        let particle_number = [0.0, 3.0, 40.0]
            .iter()
            .map(|&t| (evolved_correlation(&d, &c0, t).trace().re - particles).abs())
            .fold(0.0, f64::max);

        let peaks = q.peaks(1e-12, None);
        let (time_average, time_average_bound) = match peaks.min_nonzero_gap() {
            Some(gap) => {
                let tau = 50.0 / gap;
                let step = std::f64::consts::PI / (4.0 * q.bandwidth());
                let samples = ((tau / step).ceil() as usize + 1).max(2);
                let grid = uniform_grid(tau, samples);
                let h = grid[1] - grid[0];
                let s = q.series(&grid);
                let dense = w.to_dense();
                let eta = q.energies();
                let mut bound = 1e-12;
                for l in 0..eta.len() {
                    for lp in 0..eta.len() {
                        let omega = eta[l] - eta[lp];
                        if omega.abs() >= q.degeneracy_tol() {
                            let kernel = 1.0 / (samples as f64 * (0.5 * omega * h).sin().abs());
                            bound += dense[(l, lp)].abs() * kernel.min(1.0);
                        }
                    }
                }
                ((s.mean() - q.long_term_average()).abs(), bound)
            }
            None => (0.0, 0.0),
        };

        Report {
            unitarity_b: b.orthogonality_error(),
            unitarity_d: d.orthogonality_error(),
            unitarity_u: q.overlap().unitarity_error(),
            unitarity_u_dense: overlap_matrix(b, &d).unwrap().unitarity_error(),
            weight_sum: w.to_dense().sum().abs(),
            min_weight_diag: w.diagonal().iter().copied().fold(f64::INFINITY, f64::min),
            series_min: series.values.iter().copied().fold(f64::INFINITY, f64::min),
            series_max: series
                .values
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            n0_at_zero: series.values[0].abs(),
            particle_hole,
            density,
            sign_of_g,
            time_average,
            time_average_bound,
            particle_number,
        }
    }

    /// Names of the invariants `r` violates. With `strict_average` the
    /// finite-time average must be within 1e-4 of the zero-frequency weight;
    /// otherwise within the sampling bound of the instance.
    pub fn violations(r: &Report, strict_average: bool) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, what: &str, v: f64| {
            if !ok {
                out.push(format!("{what} = {v:e}"));
            }
        };
        need(r.unitarity_b <= 1e-10, "unitarity of B", r.unitarity_b);
        need(r.unitarity_d <= 1e-10, "unitarity of D", r.unitarity_d);
        need(r.unitarity_u <= 1e-10, "unitarity of U", r.unitarity_u);
        need(
            r.unitarity_u_dense <= 1e-10,
            "unitarity of dense U",
            r.unitarity_u_dense,
        );
        need(r.weight_sum <= 1e-10, "sum of W", r.weight_sum);
        need(
            r.min_weight_diag >= 0.0,
            "min diagonal of W",
            r.min_weight_diag,
        );
        need(r.series_min >= 0.0, "min n0(t)", r.series_min);
        need(r.series_max <= 1.0, "max n0(t)", r.series_max);
        need(r.n0_at_zero <= 1e-12, "n0(0)", r.n0_at_zero);
        need(
            r.particle_hole <= 1e-10,
            "particle-hole asymmetry",
            r.particle_hole,
        );
        need(r.density <= 1e-10, "density deviation from 1/2", r.density);
        need(r.sign_of_g <= 1e-12, "+-g difference", r.sign_of_g);
        if strict_average {
            need(
                r.time_average <= 1e-4,
                "finite-time average error",
                r.time_average,
            );
        } else {
            need(
                r.time_average <= r.time_average_bound,
                "finite-time average error",
                r.time_average,
            );
        }
        need(
            r.particle_number <= 1e-10,
            "particle number drift",
            r.particle_number,
        );
        out
    }
}
