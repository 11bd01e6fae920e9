//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{fock, invariants, random_profile};
use qtherm_core::experiments::parity_autocorrelation;
use qtherm_core::quench::{correlation_oracle, uniform_grid};
use qtherm_core::variational::compare_modes;
use qtherm_core::{
    build_profile, collapse_spread, coupled_matrix, fit_logbeta, fit_tolman, variational_n0,
    Boundary, DetectorConfig, FitWindow, GeometrySpec, HoppingProfile, QuenchOptions, ScanRecord,
    Scanner, ZeroModePolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MU: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rindler() -> HoppingProfile {
    build_profile(&GeometrySpec::rindler(500, 0.02)).unwrap()
}

fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean
}

fn tolman_and_logbeta() -> (Outcome, Outcome) {
    let p = rindler();
    let scanner = Scanner::new(&p, MU, QuenchOptions::default()).unwrap();
    let sites: Vec<usize> = (1..=500).collect();
    let window = FitWindow::tolman(500, MU);
    let mut scans: Vec<Vec<ScanRecord>> = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in [0.05, 0.1, 0.2] {
        let records = scanner.scan_positions(g, &sites).unwrap();
        let fit = fit_tolman(&records, &window).unwrap();
        let ok = (1.37..=1.87).contains(&fit.slope);
        pass &= ok;
        parts.push(format!("g={g}: slope {:.3} r2 {:.3}", fit.slope, fit.r2));
        scans.push(records);
    }
    let spread = collapse_spread(&scans, &window).unwrap();
    pass &= spread.max <= 0.10;
    parts.push(format!(
        "collapse spread max {:.3} at site {} (median {:.3}, {} sites)",
        spread.max, spread.worst_site, spread.median, spread.sites
    ));
    if let Some(c) = parity_autocorrelation(&scans[1], &window) {
        parts.push(format!("parity lag-1 autocorrelation {c:.3}"));
    }
    let first = outcome(pass, parts.join("; "));

    let fit = fit_logbeta(&scans[1], &FitWindow::hopping(1.0, 10.0)).unwrap();
    let ok = (1.5..=2.5).contains(&fit.slope) && (8.0..=12.0).contains(&fit.intercept);
    let second = outcome(
        ok,
        format!(
            "a {:.3} b {:.3} r2 {:.3} over {} sites",
            fit.intercept, fit.slope, fit.r2, fit.points
        ),
    );
    (first, second)
}

fn homogeneity() -> Outcome {
    let opts = QuenchOptions {
        zero_modes: ZeroModePolicy::Half,
        ..Default::default()
    };
    let sites: Vec<usize> = (1..=500).collect();
    let pbc = build_profile(&GeometrySpec::homogeneous(500, 1.0, Boundary::Periodic)).unwrap();
    let ring = Scanner::new(&pbc, MU, opts)
        .unwrap()
        .scan_positions(0.1, &sites)
        .unwrap();
    let n0: Vec<f64> = ring.iter().map(|r| r.n0).collect();
    let spread = relative_spread(&n0);
    let inv_pbc = 1.0 / (n0.iter().sum::<f64>() / n0.len() as f64);

    let obc = build_profile(&GeometrySpec::homogeneous(500, 1.0, Boundary::Open)).unwrap();
    let open = Scanner::new(&obc, MU, opts)
        .unwrap()
        .scan_positions(0.1, &sites)
        .unwrap();
    let inv_obc = open.iter().map(|r| 1.0 / r.n0).sum::<f64>() / open.len() as f64;
    let ratio = inv_obc / inv_pbc;
    outcome(
        spread <= 1e-8 && (ratio - 1.0).abs() <= 0.05,
        format!("PBC spread {spread:.2e}; OBC mean 1/n0 over PBC {ratio:.4}"),
    )
}

fn quadratic_law() -> Outcome {
    let scanner = Scanner::new(&rindler(), MU, QuenchOptions::default()).unwrap();
    let records = scanner.scan_coupling(250, &[0.0125, 0.025, 0.05]).unwrap();
    let ratios: Vec<f64> = records.iter().map(|r| r.n0 / (r.g * r.g)).collect();
    let spread = relative_spread(&ratios);
    let var = records[0].n0_variational / (records[0].g * records[0].g);
    outcome(
        spread <= 0.05,
        format!(
            "n0/g^2 = {:.4}, {:.4}, {:.4}; spread {spread:.3}; leading-order n0/g^2 {var:.4}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn variational_collapse() -> Outcome {
    let p = build_profile(&GeometrySpec::homogeneous(50, 1.0, Boundary::Open)).unwrap();
    let scanner = Scanner::new(&p, MU, QuenchOptions::default()).unwrap();
    let setup = scanner.setup();
    let chain = setup.chain_spectrum();
    let k = setup.chain_occupied();
    let mut pass = true;
    let mut parts = Vec::new();
    for site in [4, 25] {
        for g in [0.05, 0.1, 0.25] {
            let q = setup.attach(site, g).unwrap();
            let (mut de, mut dw) = (0.0f64, 0.0f64);
            for c in compare_modes(chain, &q) {
                if (c.energy - MU).abs() <= 0.2 || c.weight_variational == 0.0 {
                    continue;
                }
                de = de.max(((c.shift_exact - c.shift_variational) / c.shift_variational).abs());
                dw = dw.max(((c.weight_exact - c.weight_variational) / c.weight_variational).abs());
            }
            pass &= de <= 0.10 && dw <= 0.10;
            let mut part = format!("p={site} g={g}: max rel err shift {de:.3} weight {dw:.3}");
            if g <= 0.1 {
                let exact = q.long_term_average();
                let var = variational_n0(chain, &k, &DetectorConfig::new(site, g, MU))
                    .unwrap()
                    .n0;
                let rel = (var - exact).abs() / exact;
                pass &= rel <= 0.15;
                part.push_str(&format!(", n0 variational/exact {:.3}", var / exact));
            }
            parts.push(part);
        }
    }
    outcome(pass, parts.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let times = uniform_grid(100.0, 201);
    let (mut worst_oracle, mut worst_fock, mut fock_runs) = (0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let l = 2 * rng.gen_range(1..=10);
        let p = random_profile(&mut rng, l);
        let site = rng.gen_range(1..=l);
        let g = rng.gen_range(0.0..=0.5);
        let det = DetectorConfig::new(site, g, MU);
        let scanner = Scanner::new(&p, MU, QuenchOptions::default()).unwrap();
        let setup = scanner.setup();
        let series = setup.attach(site, g).unwrap().series(&times);
        let h = coupled_matrix(&p, &det).unwrap();
        let oracle =
            correlation_oracle(&h, setup.base_spectrum(), setup.occupied(), &times).unwrap();
        for (a, b) in series.values.iter().zip(&oracle.values) {
            worst_oracle = worst_oracle.max((a - b).abs());
        }
        if l < 10 {
            let h0 = coupled_matrix(&p, &det.with_coupling(0.0)).unwrap();
            let exact = fock::detector_series(h0.matrix(), h.matrix(), (l / 2) as u32, &times);
            for ((a, b), c) in series.values.iter().zip(&oracle.values).zip(&exact) {
                worst_fock = worst_fock.max((a - c).abs()).max((b - c).abs());
            }
            fock_runs += 1;
        }
    }
    outcome(
        worst_oracle <= 1e-8 && worst_fock <= 1e-8,
        format!("50 instances: series vs oracle {worst_oracle:.1e}; vs Fock space {worst_fock:.1e} ({fock_runs} instances)"),
    )
}

fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut failures: Vec<String> = Vec::new();
    let mut worst_average = 0.0f64;
    let mut instances = Vec::new();
    for _ in 0..50 {
        let l = 2 * rng.gen_range(1..=10);
        let periodic = rng.gen_bool(0.5);
        let profile = if periodic {
            let amplitudes = (0..l).map(|_| rng.gen_range(0.2..1.5)).collect();
            build_profile(&GeometrySpec::new(
                qtherm_core::GeometryKind::Custom { amplitudes },
                l,
                Boundary::Periodic,
            ))
            .unwrap()
        } else {
            random_profile(&mut rng, l)
        };
        let site = rng.gen_range(1..=l);
        let g = rng.gen_range(0.0..=0.5);
        instances.push((profile, site, g));
    }
    for (l, spec) in [
        (40, GeometrySpec::rindler(40, 0.1)),
        (40, GeometrySpec::rainbow(40, 0.9)),
        (40, GeometrySpec::sinusoidal(40, 1.0, 1.0)),
        (40, GeometrySpec::homogeneous(40, 1.0, Boundary::Periodic)),
    ] {
        instances.push((build_profile(&spec).unwrap(), l / 2 + 1, 0.1));
    }
    let count = instances.len();
    for (profile, site, g) in instances {
        let r = invariants::check(&profile, site, g, MU);
        worst_average = worst_average.max(r.time_average);
        for v in invariants::violations(&r, true) {
            failures.push(format!("L={} p={site} g={g:.3}: {v}", profile.sites()));
        }
    }
    let detail = if failures.is_empty() {
        format!("{count} instances clean; worst finite-time average error {worst_average:.1e}")
    } else {
        format!(
            "{} violations over {count} instances, first: {}; worst finite-time average error {worst_average:.1e}",
            failures.len(),
            failures[0]
        )
    };
    outcome(failures.is_empty(), detail)
}

fn fast_rise() -> Outcome {
    let p = build_profile(&qtherm_core::experiments::evolution_geometry(500)).unwrap();
    let det = qtherm_core::experiments::evolution_detector(500);
    let scanner = Scanner::new(&p, det.gap, QuenchOptions::default()).unwrap();
    let q = scanner.setup().attach(det.site, det.coupling).unwrap();
    let avg = q.long_term_average();
    let s = q.series(&[0.0, 5.0]);
    outcome(
        s.values[1] >= 0.5 * avg && s.values[0].abs() <= 1e-12,
        format!(
            "p={}: n0(0) {:.1e}, n0(5) {:.4}, long-term average {avg:.4}",
            det.site, s.values[0], s.values[1]
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    let t = Instant::now();
    let (c1, c2) = tolman_and_logbeta();
    let c1_time = t.elapsed().as_secs_f64();
    let c1 = Outcome {
        pass: c1.pass && c1_time <= 600.0,
        detail: format!("{}; {c1_time:.1} s", c1.detail),
    };
    results.push((1, "Tolman slope and collapse", c1));
    results.push((2, "log-beta law", c2));
    results.push((3, "homogeneity", homogeneity()));
    results.push((4, "quadratic coupling law", quadratic_law()));
    results.push((5, "variational collapse", variational_collapse()));
    results.push((6, "oracle equivalence", oracle_equivalence()));
    results.push((7, "invariant suite", invariant_suite()));
    results.push((8, "fast rise of n0(t)", fast_rise()));

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += (!o.pass) as usize;
        println!("criterion {id} [{name}]: {tag} ({})", o.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
