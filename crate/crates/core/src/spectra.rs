//! Spectral checks on factored kernels: singular-number transfer from `Γ` to
//! `K = Γ²`, multiplicity relations between the two spectra, and
//! log-linear decay fits.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, HankelOperator, SymMatrix, DEFAULT_EIG_TOL};
use serde::Serialize;

pub const MIN_FIT_POINTS: usize = 8;
pub const FIT_FLOOR: f64 = 1e-14;

/// `|u_x| ≈ C e^{−δx}` fitted by least squares on `ln|u_x|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// `exp(intercept)`.
    pub c: f64,
    pub delta: f64,
    pub r2: f64,
    pub points: usize,
    /// Smallest `C` with every fitted point under `C e^{−δx}`.
    pub envelope: f64,
}

/// Least squares line through `(x, y = ln value)`; `delta` is minus the slope.
pub fn fit_log_linear(xs: &[f64], ys: &[f64]) -> Result<DecayFit> {
    let n = xs.len().min(ys.len());
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { found: n, required: MIN_FIT_POINTS });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("decay fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let envelope = xs.iter().zip(ys).map(|(x, y)| (y - slope * x).exp()).fold(0.0, f64::max);
    Ok(DecayFit { c: intercept.exp(), delta: -slope, r2, points: n, envelope })
}

/// Fit over the positions `0, 1, …` of the entries of `seq` above [`FIT_FLOOR`].
pub fn decay_fit(seq: &[f64]) -> Result<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = seq
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > FIT_FLOOR)
        .map(|(i, v)| (i as f64, v.ln()))
        .unzip();
    fit_log_linear(&xs, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityProfile {
    pub clusters: Vec<Cluster>,
    pub tol: f64,
}

impl MultiplicityProfile {
    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }
}

/// Greedy clustering of sorted eigenvalues: a gap larger than `tol` starts a
/// new cluster.
pub fn multiplicity_profile(eigs: &[f64], tol: f64) -> MultiplicityProfile {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    let flush = |members: &mut Vec<f64>, clusters: &mut Vec<Cluster>| {
        if members.is_empty() {
            return;
        }
        let value = members.iter().sum::<f64>() / members.len() as f64;
        let min = members.iter().copied().fold(f64::INFINITY, f64::min);
        let max = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        clusters.push(Cluster { value, multiplicity: members.len(), min, max });
        members.clear();
    };
    for &e in eigs {
        if let Some(&last) = members.last() {
            if (e - last).abs() > tol {
                flush(&mut members, &mut clusters);
            }
        }
        members.push(e);
    }
    flush(&mut members, &mut clusters);
    MultiplicityProfile { clusters, tol }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityCheck {
    pub lambda: f64,
    pub nu_k: usize,
    pub nu_plus: usize,
    pub nu_minus: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityRelations {
    pub tol: f64,
    pub clusters: Vec<MultiplicityCheck>,
    pub offending: Vec<f64>,
    /// Eigenvalues of the finite section within `tol` of zero; descriptive only.
    pub near_zero_count: usize,
    pub pass: bool,
}

/// For every cluster `λ > tol` of `K`: `ν_K(λ) = ν_Γ(√λ) + ν_Γ(−√λ)` with
/// the split equal for even `ν_K` and differing by one for odd `ν_K`.
pub fn check_multiplicity_relations(k_eigs: &[f64], gamma_eigs: &[f64], tol: f64) -> MultiplicityRelations {
    let mut sorted = k_eigs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let profile = multiplicity_profile(&sorted, tol);
    let mut clusters = Vec::new();
    let mut offending = Vec::new();
    for c in profile.clusters.iter().filter(|c| c.value > tol) {
        let (lo, hi) = (c.min - tol, c.max + tol);
        let hits = |positive: bool| {
            gamma_eigs
                .iter()
                .filter(|s| (**s > 0.0) == positive && **s != 0.0)
                .filter(|s| {
                    let sq = *s * *s;
                    sq >= lo && sq <= hi
                })
                .count()
        };
        let (nu_plus, nu_minus) = (hits(true), hits(false));
        let split = nu_plus.abs_diff(nu_minus);
        let parity_ok = if c.multiplicity % 2 == 0 { split == 0 } else { split == 1 };
        let ok = c.multiplicity == nu_plus + nu_minus && parity_ok;
        if !ok {
            offending.push(c.value);
        }
        clusters.push(MultiplicityCheck { lambda: c.value, nu_k: c.multiplicity, nu_plus, nu_minus, ok });
    }
    let near_zero_count = sorted.iter().filter(|v| v.abs() <= tol).count();
    MultiplicityRelations { tol, pass: offending.is_empty(), clusters, offending, near_zero_count }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationBound {
    pub rank: usize,
    /// `s_{rank+1}(Γ)`, the best achievable error at this rank.
    pub singular_number: f64,
    /// `‖Γ − Γ_rank^trunc‖`.
    pub remainder_norm: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularTransferReport {
    pub tol: f64,
    /// `max_n |s_n(K) − s_n(Γ)²| / s_1(K)`.
    pub relative_error: f64,
    pub singular_k: Vec<f64>,
    pub singular_gamma: Vec<f64>,
    pub truncations: Vec<TruncationBound>,
    pub pass: bool,
}

pub const TRUNCATION_RANKS: [usize; 4] = [1, 2, 4, 8];

/// Compares `s_n(K)` with `s_n(Γ)²` where `Γ` is the `K.dim()` section of
/// `gamma`, and checks `s_{n+1}(Γ) ≤ ‖Γ − Γ_n‖` for anti-triangular cuts.
pub fn singular_transfer_check(k: &SymMatrix, gamma: &HankelOperator, tol: f64) -> Result<SingularTransferReport> {
    let n = k.dim();
    let g = HankelOperator::new(gamma.symbol().to_vec(), n)?;
    let gm = g.materialize();
    let singular_k = sym_eigen(k, DEFAULT_EIG_TOL)?.singular_numbers();
    let singular_gamma = sym_eigen(&gm, DEFAULT_EIG_TOL)?.singular_numbers();
    let s1 = singular_k.first().copied().unwrap_or(0.0);
    let worst = singular_k
        .iter()
        .zip(&singular_gamma)
        .map(|(a, b)| (a - b * b).abs())
        .fold(0.0, f64::max);
    let relative_error = if s1 > 0.0 { worst / s1 } else { worst };

    let mut truncations = Vec::new();
    for &rank in TRUNCATION_RANKS.iter().filter(|r| **r < n) {
        let cut = g.truncated(rank).materialize();
        let rem = SymMatrix::from_upper_fn(n, |i, j| gm.get(i, j) - cut.get(i, j));
        let remainder_norm = sym_eigen(&rem, DEFAULT_EIG_TOL)?.singular_numbers()[0];
        let singular_number = singular_gamma[rank];
        let slack = 1e-12 * singular_gamma[0] + 1e-300;
        truncations.push(TruncationBound {
            rank,
            singular_number,
            remainder_norm,
            holds: singular_number <= remainder_norm + slack,
        });
    }
    let pass = relative_error <= tol && truncations.iter().all(|t| t.holds);
    Ok(SingularTransferReport { tol, relative_error, singular_k, singular_gamma, truncations, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_sequence_fit() {
        let seq: Vec<f64> = (0..20).map(|n| (-(n as f64)).exp()).collect();
        let f = decay_fit(&seq).unwrap();
        assert!((f.delta - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let seq = [1.0, 0.5, 0.25, 1e-20, 0.0];
        assert!(matches!(decay_fit(&seq), Err(Error::TooFewPoints { found: 3, .. })));
    }

    #[test]
    fn constructed_profile() {
        let p = multiplicity_profile(&[1.0, 1.0 + 1e-14, 0.5], 1e-10);
        assert_eq!(p.clusters.len(), 2);
        assert_eq!(p.clusters[0].multiplicity, 2);
        assert!((p.clusters[0].value - 1.0).abs() < 1e-13);
        assert_eq!(p.clusters[1].multiplicity, 1);
        assert_eq!(p.total(), 3);
        assert!(multiplicity_profile(&[], 1e-8).clusters.is_empty());
    }

    #[test]
    fn constructed_multiplicity_relations() {
        let r = check_multiplicity_relations(&[4.0, 4.0, 1.0], &[2.0, -2.0, 1.0], 1e-10);
        assert!(r.pass);
        assert_eq!(r.clusters[0].nu_k, 2);
        assert_eq!((r.clusters[0].nu_plus, r.clusters[0].nu_minus), (1, 1));
        assert_eq!((r.clusters[1].nu_plus, r.clusters[1].nu_minus), (1, 0));
    }

    #[test]
    fn multiplicity_relations_detect_bad_split() {
        // ν_K(4) = 2 but both square roots positive: parity violated.
        let r = check_multiplicity_relations(&[4.0, 4.0], &[2.0, 2.0], 1e-10);
        assert!(!r.pass);
        assert_eq!(r.offending, vec![4.0]);
        // Perturbed Γ eigenvalue no longer accounts for its K cluster.
        let r = check_multiplicity_relations(&[4.0, 1.0], &[2.0 + 1e-3, 1.0], 1e-8);
        assert!(!r.pass);
    }

    #[test]
    fn delta_symbol_transfer() {
        let mut sym = vec![0.0; 20];
        sym[0] = 1.0;
        let h = HankelOperator::new(sym, 6).unwrap();
        let k = SymMatrix::from_upper_fn(6, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let r = singular_transfer_check(&k, &h, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.singular_gamma[0], 1.0);
        assert_eq!(r.singular_gamma[1], 0.0);
        assert_eq!(r.truncations[0].remainder_norm, 0.0);
    }
}
