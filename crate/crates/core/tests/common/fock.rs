//! Many-body evolution in the occupation-number basis.
//!
//! States are bitmasks over the `n` single-particle orbitals (bit 0 is the
//! detector). Operators carry Jordan-Wigner signs. Nothing here uses the
//! single-particle machinery of the crate beyond the input matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn sector(n: usize, particles: u32) -> Vec<u32> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() == particles)
        .collect()
}

/// Second-quantized `sum_ij h_ij c_i^dag c_j` restricted to a sector.
fn many_body(h: &DMatrix<f64>, basis: &[u32]) -> DMatrix<f64> {
    let n = h.nrows();
    let index = |s: u32| basis.binary_search(&s).unwrap();
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (col, &s) in basis.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let hij = h[(i, j)];
                if hij == 0.0 || s & (1 << j) == 0 {
                    continue;
                }
                if i == j {
                    m[(col, col)] += hij;
                    continue;
                }
                if s & (1 << i) != 0 {
                    continue;
                }
                // c_i^dag c_j: sign from the occupied orbitals strictly below each index
                let below_j = (s & ((1 << j) - 1)).count_ones();
                let t = s ^ (1 << j);
                let below_i = (t & ((1 << i) - 1)).count_ones();
                let sign = if (below_i + below_j) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[(index(t | (1 << i)), col)] += sign * hij;
            }
        }
    }
    m
}

/// `<n0(t)>` after preparing the ground state of `h0` with `particles`
/// fermions and evolving under `h`.
pub fn detector_series(
    h0: &DMatrix<f64>,
    h: &DMatrix<f64>,
    particles: u32,
    times: &[f64],
) -> Vec<f64> {
    let basis = sector(h0.nrows(), particles);
    let e0 = SymmetricEigen::new(many_body(h0, &basis));
    let ground = (0..basis.len())
        .min_by(|&a, &b| e0.eigenvalues[a].total_cmp(&e0.eigenvalues[b]))
        .unwrap();
    let psi0: DVector<f64> = e0.eigenvectors.column(ground).into_owned();

    let e = SymmetricEigen::new(many_body(h, &basis));
    let coef = e.eigenvectors.tr_mul(&psi0);
    let occupied: Vec<f64> = basis.iter().map(|s| (s & 1) as f64).collect();
    times
        .iter()
        .map(|&t| {
            let mut re = DVector::zeros(basis.len());
            let mut im = DVector::zeros(basis.len());
            for (n, &en) in e.eigenvalues.iter().enumerate() {
                let (s, c) = (en * t).sin_cos();
                re.axpy(coef[n] * c, &e.eigenvectors.column(n), 1.0);
                im.axpy(-coef[n] * s, &e.eigenvectors.column(n), 1.0);
            }
            (0..basis.len())
                .map(|k| occupied[k] * (re[k] * re[k] + im[k] * im[k]))
                .sum()
        })
        .collect()
}

/// Diagonal-ensemble mean of `n0` for a non-degenerate many-body spectrum.
pub fn detector_mean(h0: &DMatrix<f64>, h: &DMatrix<f64>, particles: u32) -> f64 {
    let basis = sector(h0.nrows(), particles);
    let e0 = SymmetricEigen::new(many_body(h0, &basis));
    let ground = (0..basis.len())
        .min_by(|&a, &b| e0.eigenvalues[a].total_cmp(&e0.eigenvalues[b]))
        .unwrap();
    let psi0 = e0.eigenvectors.column(ground).into_owned();
    let e = SymmetricEigen::new(many_body(h, &basis));
    let coef = e.eigenvectors.tr_mul(&psi0);
    (0..basis.len())
        .map(|n| {
            let v = e.eigenvectors.column(n);
            let n0: f64 = basis
                .iter()
                .enumerate()
                .map(|(k, s)| (s & 1) as f64 * v[k] * v[k])
                .sum();
            coef[n] * coef[n] * n0
        })
        .sum()
}
