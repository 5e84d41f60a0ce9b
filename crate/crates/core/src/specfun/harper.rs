use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix, DEFAULT_EIG_TOL, MAX_DIM};
use crate::spectra::{fit_log_linear, DecayFit};
use serde::Serialize;
use std::f64::consts::PI;

/// Golden-mean frequency `(√5 − 1)/2`.
pub const GOLDEN_FREQ: f64 = 0.618_033_988_749_894_9;

pub const MIN_BOX: usize = 128;
const MAX_BOX: usize = (MAX_DIM - 1) / 2;
/// Sites next to each box edge left out of the decay fit.
const FIT_EDGE_EXCLUSION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Selector {
    /// Smallest participation ratio among eigenvectors peaked in the central
    /// half of the box.
    MostLocalized,
    NearestTo(f64),
}

/// Eigenvector of the Dirichlet-truncated almost Mathieu operator,
/// re-indexed so its largest component sits at index 0.
#[derive(Debug, Clone, Serialize)]
pub struct LocalizedEigenvector {
    pub lambda: f64,
    pub theta_freq: f64,
    pub alpha_phase: f64,
    pub energy: f64,
    /// Original lattice site of the peak.
    pub center: i64,
    pub box_half: usize,
    /// `values[j + offset]` is `u` at re-indexed site `j`.
    values: Vec<f64>,
    offset: usize,
    pub decay: DecayFit,
    pub participation_ratio: f64,
    /// Interior residual of `u_{n+1} + u_{n−1} + λ cos 2π(nθ+α) u_n − E u_n`.
    pub residual: f64,
    pub edge_ratio: f64,
    pub diophantine: bool,
    pub warnings: Vec<String>,
}

impl LocalizedEigenvector {
    /// `u_j` at re-indexed site `j`; zero outside the box.
    pub fn u(&self, j: i64) -> f64 {
        let k = j + self.offset as i64;
        if k < 0 {
            return 0.0;
        }
        self.values.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Largest re-indexed site inside the box.
    pub fn right_extent(&self) -> i64 {
        self.values.len() as i64 - 1 - self.offset as i64
    }

    /// Phase seen from the re-indexed origin, `α + n₀θ mod 1`.
    pub fn shifted_phase(&self) -> f64 {
        (self.alpha_phase + self.center as f64 * self.theta_freq).rem_euclid(1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_{k≥x} u_k²`.
    pub fn tail_energy(&self, x: i64) -> f64 {
        (x..=self.right_extent()).map(|k| self.u(k).powi(2)).sum()
    }
}

/// Rational-looking frequencies: `|qθ − p| < 1e−9` for some `q ≤ 1000`.
pub fn looks_rational(theta: f64) -> bool {
    (1..=1000).any(|q| {
        let x = q as f64 * theta;
        (x - x.round()).abs() < 1e-9
    })
}

fn potential(lambda: f64, theta: f64, alpha: f64, n: i64) -> f64 {
    lambda * (2.0 * PI * (n as f64 * theta + alpha)).cos()
}

pub fn almost_mathieu_eigen(
    lambda: f64,
    theta_freq: f64,
    alpha_phase: f64,
    box_half: usize,
    selector: Selector,
) -> Result<LocalizedEigenvector> {
    if !(lambda > 2.0) {
        return Err(Error::NotLocalized { lambda });
    }
    if box_half < MIN_BOX {
        return Err(Error::InvalidParameter(format!("box must be at least {MIN_BOX}, got {box_half}")));
    }
    let mut half = box_half.min(MAX_BOX);
    loop {
        let out = solve_box(lambda, theta_freq, alpha_phase, half, selector)?;
        if out.edge_ratio <= 1e-10 || half == MAX_BOX {
            return Ok(out);
        }
        half = (half * 3 / 2).min(MAX_BOX);
    }
}

fn solve_box(
    lambda: f64,
    theta: f64,
    alpha: f64,
    half: usize,
    selector: Selector,
) -> Result<LocalizedEigenvector> {
    let h = half as i64;
    let dim = 2 * half + 1;
    let site = |i: usize| i as i64 - h;
    let mat = SymMatrix::from_upper_fn(dim, |i, j| {
        if i == j {
            potential(lambda, theta, alpha, site(i))
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = sym_eigen(&mat, DEFAULT_EIG_TOL)?;

    let peak = |col: usize| -> usize {
        let mut p = 0;
        for k in 0..dim {
            if eig.eigenvectors[(k, col)].abs() > eig.eigenvectors[(p, col)].abs() {
                p = k;
            }
        }
        p
    };
    let ipr = |col: usize| -> f64 { (0..dim).map(|k| eig.eigenvectors[(k, col)].powi(4)).sum() };

    let chosen = match selector {
        Selector::MostLocalized => (0..dim)
            .filter(|&c| site(peak(c)).unsigned_abs() as usize <= half / 2)
            .max_by(|&a, &b| ipr(a).total_cmp(&ipr(b)).then(b.cmp(&a)))
            .ok_or_else(|| Error::InvalidParameter("no eigenvector peaked in the central half".into()))?,
        Selector::NearestTo(e0) => (0..dim)
            .min_by(|&a, &b| {
                (eig.eigenvalues[a] - e0).abs().total_cmp(&(eig.eigenvalues[b] - e0).abs()).then(a.cmp(&b))
            })
            .expect("nonempty spectrum"),
    };

    let mut values = eig.eigenvector(chosen);
    let p = peak(chosen);
    if values[p] < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    let energy = eig.eigenvalues[chosen];
    let center = site(p);
    let umax = values[p].abs();

    let mut residual = 0.0f64;
    for i in 2..dim - 2 {
        let r = values[i + 1] + values[i - 1] + potential(lambda, theta, alpha, site(i)) * values[i]
            - energy * values[i];
        residual = residual.max(r.abs());
    }
    let edge_ratio = values[0].abs().max(values[dim - 1].abs()) / umax;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in FIT_EDGE_EXCLUSION..dim - FIT_EDGE_EXCLUSION {
        if values[i].abs() > 1e-12 * umax {
            xs.push((site(i) - center).unsigned_abs() as f64);
            ys.push(values[i].abs().ln());
        }
    }
    let mut decay = fit_log_linear(&xs, &ys)?;
    // Envelope constant: smallest C with |u_n| ≤ C e^{−δ|n−n₀|} on the window.
    decay.envelope = xs.iter().zip(&ys).map(|(x, y)| (y + decay.delta * x).exp()).fold(0.0, f64::max);

    let diophantine = !looks_rational(theta);
    let mut warnings = Vec::new();
    if !diophantine {
        warnings.push(format!(
            "non-Diophantine frequency {theta}: localization hypotheses violated"
        ));
    }

    Ok(LocalizedEigenvector {
        lambda,
        theta_freq: theta,
        alpha_phase: alpha,
        energy,
        center,
        box_half: half,
        offset: p,
        values,
        decay,
        participation_ratio: 1.0 / ipr(chosen),
        residual,
        edge_ratio,
        diophantine,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> LocalizedEigenvector {
        almost_mathieu_eigen(10.0, GOLDEN_FREQ, 0.3, 128, Selector::MostLocalized).unwrap()
    }

    #[test]
    fn golden_mean_vector_decays_at_lyapunov_rate() {
        let v = golden();
        let lyap = (10.0f64 / 2.0).ln();
        assert!(v.decay.delta > 0.0);
        assert!((v.decay.delta - lyap).abs() <= 0.5 * lyap, "delta {}", v.decay.delta);
        assert!(v.decay.r2 >= 0.95, "r2 {}", v.decay.r2);
        assert!(v.diophantine && v.warnings.is_empty());
        assert!(v.u(0) > 0.0);
        assert_eq!(v.u(0), v.values().iter().fold(0.0, |m: f64, x| m.max(x.abs())));
    }

    #[test]
    fn satisfies_eigen_equation() {
        let v = golden();
        assert!(v.residual <= 1e-8, "{}", v.residual);
        assert!(v.edge_ratio <= 1e-10);
        // Re-indexed form with the shifted phase.
        let a = v.shifted_phase();
        for j in -20..=20i64 {
            let r = v.u(j + 1) + v.u(j - 1) + 10.0 * (2.0 * PI * (j as f64 * GOLDEN_FREQ + a)).cos() * v.u(j)
                - v.energy * v.u(j);
            assert!(r.abs() <= 1e-8, "j={j} r={r}");
        }
    }

    #[test]
    fn envelope_bounds_the_window() {
        let v = golden();
        for j in -15..=15i64 {
            let u = v.u(j).abs();
            if u > 1e-12 {
                assert!(u <= v.decay.envelope * (-v.decay.delta * j.abs() as f64).exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rational_frequency_flagged() {
        let v = almost_mathieu_eigen(10.0, 0.5, 0.3, 128, Selector::MostLocalized).unwrap();
        assert!(!v.diophantine);
        assert!(v.warnings[0].contains("non-Diophantine"));
    }

    #[test]
    fn delocalized_regime_rejected() {
        let err = almost_mathieu_eigen(1.5, GOLDEN_FREQ, 0.3, 128, Selector::MostLocalized).unwrap_err();
        assert!(err.to_string().contains("not in localized regime"));
    }

    #[test]
    fn nearest_selector() {
        let v = almost_mathieu_eigen(10.0, GOLDEN_FREQ, 0.3, 128, Selector::NearestTo(0.0)).unwrap();
        assert!(v.energy.abs() < 1.0);
    }

    #[test]
    fn deterministic() {
        let a = golden();
        let b = golden();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    }
}
