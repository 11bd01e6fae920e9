//! Spectrum of `H = H_0 + g (c0^dag c_p + h.c.)` from the spectrum of `H_0`.
//!
//! In the eigenbasis of `H_0` the coupled Hamiltonian is an arrowhead
//! matrix: the chain modes stay diagonal and only the detector level couples
//! to them, with strengths `g * B_kp`. Its eigenvalues are the roots of the
//! secular function
//!
//! ```text
//! f(x) = x - mu + sum_k c_k^2 / (d_k - x)
//! ```
//!
//! which has exactly one root between consecutive poles. Roots are stored
//! relative to their nearest pole, and the couplings are recomputed from the
//! roots (Loewner's formula) before forming eigenvectors, which keeps the
//! eigenvectors orthogonal to working precision. Decoupled modes and
//! clusters of equal poles are deflated first.
//!
//! The cost per attachment site is O(N^2), against O(N^3) for a dense
//! solve, and the eigenvectors come out directly as the overlap matrix
//! `U_lk = <d_l | b_k>`.

use nalgebra::DMatrix;

use crate::spectral::{SpectralError, Spectrum};

/// Eigenpairs of the coupled Hamiltonian expressed in the modes of `H_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModes {
    energies: Vec<f64>,
    overlap: DMatrix<f64>,
    detector_mode: usize,
    detector_sign: f64,
}

impl CoupledModes {
    /// Ascending energies `eta_l`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `U[(l, k)] = <d_l | b_k>`.
    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    /// Index of the detector level among the `H_0` modes.
    pub fn detector_mode(&self) -> usize {
        self.detector_mode
    }

    /// Detector amplitude `D_l0` of each coupled mode.
    pub fn detector_amplitudes(&self) -> Vec<f64> {
        self.overlap
            .column(self.detector_mode)
            .iter()
            .map(|v| v * self.detector_sign)
            .collect()
    }

    /// Orbitals of `H` in the site basis, one mode per row.
    pub fn orbitals(&self, base: &Spectrum) -> DMatrix<f64> {
        &self.overlap * base.orbitals()
    }
}

struct Pole {
    energy: f64,
    coupling: f64,
    combo: Vec<(usize, f64)>,
}

struct Root {
    origin: usize,
    offset: f64,
}

/// Locates the detector level of a base spectrum: the single mode with all
/// of its weight on index 0.
fn find_detector_mode(base: &Spectrum) -> Result<usize, SpectralError> {
    let n = base.dim();
    let mut found = None;
    for k in 0..n {
        let a = base.amplitude(k, 0).abs();
        if a >= 1.0 - 1e-12 {
            if found.is_some() {
                return Err(SpectralError::DetectorNotIsolated);
            }
            found = Some(k);
        } else if a > 1e-12 {
            return Err(SpectralError::DetectorNotIsolated);
        }
    }
    found.ok_or(SpectralError::DetectorNotIsolated)
}

/// Diagonalizes `H_0 + g (c0^dag c_p + h.c.)`, where `base` is the spectrum of
/// `H_0` with the detector isolated on index 0 and `site_index` is the matrix
/// index of the attachment site.
pub fn detector_update(
    base: &Spectrum,
    site_index: usize,
    coupling: f64,
) -> Result<CoupledModes, SpectralError> {
    let n = base.dim();
    if site_index == 0 || site_index >= n {
        return Err(SpectralError::DimensionMismatch {
            left: site_index,
            right: n,
        });
    }
    let kd = find_detector_mode(base)?;
    // the detector orbital is +-e_0; fold its sign into the coupling
    let det_sign = base.amplitude(kd, 0).signum();
    let alpha = base.energies()[kd];

    let poles: Vec<Pole> = (0..n)
        .filter(|&k| k != kd)
        .map(|k| Pole {
            energy: base.energies()[k],
            coupling: det_sign * coupling * base.amplitude(k, site_index),
            combo: vec![(k, 1.0)],
        })
        .collect();

    let coupling_norm = poles
        .iter()
        .map(|p| p.coupling * p.coupling)
        .sum::<f64>()
        .sqrt();
    let scale = poles
        .iter()
        .map(|p| p.energy.abs())
        .fold(alpha.abs(), f64::max)
        .max(coupling_norm);
    let tol = 8.0 * f64::EPSILON * scale;

    let mut kept: Vec<Pole> = Vec::with_capacity(poles.len());
    let mut deflated: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for pole in poles {
        if pole.coupling.abs() <= tol {
            deflated.push((pole.energy, pole.combo));
            continue;
        }
        if let Some(prev) = kept.last_mut() {
            let r = prev.coupling.hypot(pole.coupling);
            let (sp, sc) = (prev.coupling / r, pole.coupling / r);
            if (sp * sc * (pole.energy - prev.energy)).abs() <= tol {
                // rotate the pair so that only one combination couples
                let mut w = Vec::with_capacity(prev.combo.len() + 1);
                w.extend(prev.combo.iter().map(|&(k, v)| (k, sc * v)));
                w.push((pole.combo[0].0, -sp));
                deflated.push((sc * sc * prev.energy + sp * sp * pole.energy, w));

                for entry in prev.combo.iter_mut() {
                    entry.1 *= sp;
                }
                prev.combo.push((pole.combo[0].0, sc));
                prev.energy = sp * sp * prev.energy + sc * sc * pole.energy;
                prev.coupling = r;
                continue;
            }
        }
        kept.push(pole);
    }

    let m = kept.len();
    let d: Vec<f64> = kept.iter().map(|p| p.energy).collect();
    let c2: Vec<f64> = kept.iter().map(|p| p.coupling * p.coupling).collect();

    let mut energies = Vec::with_capacity(n);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);

    if m == 0 {
        energies.push(alpha);
        rows.push(vec![(kd, 1.0)]);
    } else {
        let roots: Vec<Root> = (0..=m)
            .map(|j| solve_root(j, &d, &c2, alpha, coupling_norm))
            .collect();
        let gap = |l: usize, k: usize| (d[roots[l].origin] - d[k]) + roots[l].offset;

        // couplings consistent with the computed roots
        let chat: Vec<f64> = (0..m)
            .map(|k| {
                let mut prod = gap(0, k).abs() * gap(m, k).abs();
                for i in 0..k {
                    prod *= gap(i + 1, k).abs() / (d[i] - d[k]).abs();
                }
                for i in k + 1..m {
                    prod *= gap(i, k).abs() / (d[i] - d[k]).abs();
                }
                prod.sqrt().copysign(kept[k].coupling)
            })
            .collect();

        let mut v = vec![0.0; m];
        for l in 0..=m {
            let mut norm2 = 1.0;
            for k in 0..m {
                v[k] = chat[k] / gap(l, k);
                norm2 += v[k] * v[k];
            }
            let inv = norm2.sqrt().recip();
            let mut row = Vec::with_capacity(n);
            row.push((kd, inv));
            for k in 0..m {
                let vk = v[k] * inv;
                row.extend(kept[k].combo.iter().map(|&(mode, coef)| (mode, vk * coef)));
            }
            energies.push(d[roots[l].origin] + roots[l].offset);
            rows.push(row);
        }
    }
    for (e, combo) in deflated {
        energies.push(e);
        rows.push(combo);
    }

    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut overlap = DMatrix::zeros(n, n);
    for (l, &src) in order.iter().enumerate() {
        for &(k, v) in &rows[src] {
            overlap[(l, k)] += v;
        }
    }
    Ok(CoupledModes {
        energies: order.iter().map(|&i| energies[i]).collect(),
        overlap,
        detector_mode: kd,
        detector_sign: det_sign,
    })
}

/// Root `j` of the secular function: `j = 0` lies below the first pole,
/// `j = m` above the last, otherwise between poles `j - 1` and `j`.
fn solve_root(j: usize, d: &[f64], c2: &[f64], alpha: f64, coupling_norm: f64) -> Root {
    let m = d.len();
    let secular = |origin: usize, tau: f64| -> (f64, f64) {
        let base = d[origin];
        let mut f = base - alpha + tau;
        let mut df = 1.0;
        for k in 0..m {
            let delta = (d[k] - base) - tau;
            let q = c2[k] / delta;
            f += q;
            df += q / delta;
        }
        (f, df)
    };

    let (origin, mut lo, mut hi) = if j == 0 {
        let bottom = d[0].min(alpha) - coupling_norm;
        (
            0,
            (bottom - d[0]) * (1.0 + 4.0 * f64::EPSILON) - f64::MIN_POSITIVE,
            0.0,
        )
    } else if j == m {
        let top = d[m - 1].max(alpha) + coupling_norm;
        (
            m - 1,
            0.0,
            (top - d[m - 1]) * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE,
        )
    } else {
        let half = 0.5 * (d[j] - d[j - 1]);
        let (fmid, _) = secular(j - 1, half);
        if fmid >= 0.0 {
            (j - 1, 0.0, half)
        } else {
            (j, -half, 0.0)
        }
    };

    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (f, df) = secular(origin, x);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 2.0 * f64::EPSILON * x.abs()
            || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs())
        {
            break;
        }
    }
    Root { origin, offset: x }
}
