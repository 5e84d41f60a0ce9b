//! Determinantal point process built on the discrete Bessel kernel: band
//! validation, spectral (HKPV) sampling, Monte Carlo checks of the
//! correlation functions, gap probabilities and the longest increasing
//! subsequence of a poissonized random permutation.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SpectralDecomposition, SymMatrix, DEFAULT_EIG_TOL};
use crate::models::build_bessel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

/// Eigenvalues may leave `[0, 1]` by this much before they are clamped.
pub const SPECTRUM_BAND: f64 = 1e-10;
/// Largest diagonal mass allowed beyond a gap window.
pub const GAP_TAIL_MAX: f64 = 1e-12;
pub const SIGMA_LIMIT: f64 = 4.0;
pub const MAX_SET_SIZE: usize = 3;
pub const SAMPLER_TAG: &str = "hkpv-spectral/chacha8";
/// Gap on `{n+1, ...}` pairs with `P(L ≤ n + o)`.
pub const PINNED_OFFSET: i64 = 1;

#[derive(Debug, Clone)]
pub struct DppKernel {
    pub kernel: SymMatrix,
    /// Eigenvalues clamped to `[0, 1]`.
    pub eig: SpectralDecomposition,
    /// Label of the first row; the window is `first..first + dim`.
    pub first: usize,
    /// Largest distance an eigenvalue was moved by clamping.
    pub clamped_by: f64,
    /// `Σ K(j,j)` over labels past the window, when the kernel continues.
    pub tail_mass: f64,
}

impl DppKernel {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn window(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.dim()
    }

    fn position(&self, label: usize) -> Option<usize> {
        self.window().contains(&label).then(|| label - self.first)
    }

    /// `E[#points] = trace K`.
    pub fn expected_count(&self) -> f64 {
        self.eig.eigenvalues.iter().sum()
    }

    /// `Var[#points] = Σ λ(1−λ)`.
    pub fn count_variance(&self) -> f64 {
        self.eig.eigenvalues.iter().map(|l| l * (1.0 - l)).sum()
    }
}

pub fn validate_dpp(kernel: SymMatrix, first: usize) -> Result<DppKernel> {
    validate_with_tail(kernel, first, 0.0)
}

fn validate_with_tail(kernel: SymMatrix, first: usize, tail_mass: f64) -> Result<DppKernel> {
    let mut eig = sym_eigen(&kernel, DEFAULT_EIG_TOL)?;
    let bad: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|l| !(*l >= -SPECTRUM_BAND && *l <= 1.0 + SPECTRUM_BAND))
        .collect();
    if !bad.is_empty() {
        return Err(Error::SpectrumOutOfBand(bad));
    }
    let mut clamped_by = 0.0f64;
    for l in eig.eigenvalues.iter_mut() {
        let c = l.clamp(0.0, 1.0);
        clamped_by = clamped_by.max((c - *l).abs());
        *l = c;
    }
    Ok(DppKernel { kernel, eig, first, clamped_by, tail_mass })
}

/// Discrete Bessel kernel on labels `1..=window`, validated.
pub fn bessel_dpp(theta: f64, window: usize) -> Result<DppKernel> {
    // The symbol must reach well past the window for the tail mass.
    let tail = window.max(64);
    let d = build_bessel(theta, window, tail)?;
    // K = Γ², so Σ_{j>W} K(j,j) = Σ_{i>W} (i − W) φ(i)².
    let tail_mass: f64 = d.phi.iter().enumerate().skip(window).map(|(i, p)| (i + 1 - window) as f64 * p * p).sum();
    validate_with_tail(d.kernel.matrix, 1, tail_mass)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointSample {
    /// Sorted labels.
    pub points: Vec<usize>,
    pub seed: u64,
    pub algorithm: String,
}

/// One draw, from its own stream.
pub fn sample(dpp: &DppKernel, seed: u64) -> PointSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointSample { points: draw(dpp, &mut rng), seed, algorithm: SAMPLER_TAG.into() }
}

/// `trials` draws from a single stream seeded by `seed`.
pub fn sample_many(dpp: &DppKernel, trials: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| draw(dpp, &mut rng)).collect()
}

/// Keep eigenvector `i` with probability `λ_i`, then sample the projection
/// DPP spanned by the kept vectors one point at a time.
fn draw<R: Rng>(dpp: &DppKernel, rng: &mut R) -> Vec<usize> {
    let n = dpp.dim();
    let mut basis: Vec<Vec<f64>> = dpp
        .eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| rng.random::<f64>() < **l)
        .map(|(i, _)| dpp.eig.eigenvector(i))
        .collect();
    let mut points = Vec::with_capacity(basis.len());
    while !basis.is_empty() {
        let weights: Vec<f64> = (0..n).map(|j| basis.iter().map(|v| v[j] * v[j]).sum()).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (j, w) in weights.iter().enumerate() {
            if u < *w {
                pick = j;
                break;
            }
            u -= w;
        }
        points.push(pick + dpp.first);

        // Project the span onto vectors vanishing at `pick`.
        let pivot = (0..basis.len())
            .max_by(|a, b| basis[*a][pick].abs().total_cmp(&basis[*b][pick].abs()))
            .unwrap();
        let p = basis.swap_remove(pivot);
        for v in basis.iter_mut() {
            let f = v[pick] / p[pick];
            for (x, y) in v.iter_mut().zip(&p) {
                *x -= f * y;
            }
        }
        for k in 0..basis.len() {
            for m in 0..k {
                let proj: f64 = basis[k].iter().zip(&basis[m]).map(|(a, b)| a * b).sum();
                let (head, tail) = basis.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[m]) {
                    *x -= proj * y;
                }
            }
            let norm = basis[k].iter().map(|x| x * x).sum::<f64>().sqrt();
            basis[k].iter_mut().for_each(|x| *x /= norm);
        }
    }
    points.sort_unstable();
    points
}

/// Determinant of a small symmetric matrix by Gaussian elimination.
fn small_det(m: &SymMatrix) -> f64 {
    let n = m.dim();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|x, y| a[*x][c].abs().total_cmp(&a[*y][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

#[derive(Debug, Clone, Serialize)]
pub struct SetCheck {
    pub set: Vec<usize>,
    /// `det K_A`.
    pub expected: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub trials: usize,
    pub seed: u64,
    pub sets: Vec<SetCheck>,
    pub expected_count: f64,
    pub mean_count: f64,
    pub count_z: f64,
    pub pass: bool,
}

fn z_score(empirical: f64, expected: f64, se: f64) -> f64 {
    let diff = empirical - expected;
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Empirical `P(A ⊆ X)` against `det K_A` for each `A`, and the mean
/// number of points against `trace K`, all within [`SIGMA_LIMIT`] standard errors.
pub fn correlation_check(dpp: &DppKernel, sets: &[Vec<usize>], trials: usize, seed: u64) -> Result<CorrelationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let mut positions = Vec::with_capacity(sets.len());
    for set in sets {
        if set.is_empty() || set.len() > MAX_SET_SIZE {
            return Err(Error::InvalidIndexSet(format!("{set:?}: need 1 to {MAX_SET_SIZE} labels")));
        }
        let mut sorted = set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != set.len() {
            return Err(Error::InvalidIndexSet(format!("{set:?}: duplicate label")));
        }
        let pos: Vec<usize> = set
            .iter()
            .map(|l| dpp.position(*l).ok_or_else(|| Error::InvalidIndexSet(format!("label {l} outside window {:?}", dpp.window()))))
            .collect::<Result<_>>()?;
        positions.push(pos);
    }

    let mut hits = vec![0u64; sets.len()];
    let mut total_points = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut member = vec![false; dpp.dim()];
    for _ in 0..trials {
        let x = draw(dpp, &mut rng);
        total_points += x.len() as u64;
        x.iter().for_each(|l| member[l - dpp.first] = true);
        for (h, pos) in hits.iter_mut().zip(&positions) {
            if pos.iter().all(|p| member[*p]) {
                *h += 1;
            }
        }
        x.iter().for_each(|l| member[l - dpp.first] = false);
    }

    let t = trials as f64;
    let checks: Vec<SetCheck> = sets
        .iter()
        .zip(&positions)
        .zip(&hits)
        .map(|((set, pos), h)| {
            let expected = small_det(&dpp.kernel.principal(pos)).clamp(0.0, 1.0);
            let empirical = *h as f64 / t;
            let std_error = (expected * (1.0 - expected) / t).sqrt();
            let z = z_score(empirical, expected, std_error);
            SetCheck { set: set.clone(), expected, empirical, std_error, z, pass: z.abs() <= SIGMA_LIMIT }
        })
        .collect();
    let expected_count = dpp.expected_count();
    let mean_count = total_points as f64 / t;
    let count_z = z_score(mean_count, expected_count, (dpp.count_variance() / t).sqrt());
    let pass = checks.iter().all(|c| c.pass) && count_z.abs() <= SIGMA_LIMIT;
    Ok(CorrelationReport { trials, seed, sets: checks, expected_count, mean_count, count_z, pass })
}

/// `det(I − K)` on labels `n+1..` of the window, as `Π(1 − λ_i)`.
pub fn gap_determinant(dpp: &DppKernel, n: usize) -> Result<f64> {
    if dpp.tail_mass > GAP_TAIL_MAX {
        return Err(Error::TailNotNegligible { mass: dpp.tail_mass });
    }
    let end = dpp.first + dpp.dim();
    let start = (n + 1).max(dpp.first);
    if start >= end {
        return Ok(1.0);
    }
    let block = dpp.kernel.window(start - dpp.first, end - start);
    let eig = sym_eigen(&block, DEFAULT_EIG_TOL)?;
    Ok(eig.eigenvalues.iter().map(|l| 1.0 - l.clamp(0.0, 1.0)).product())
}

/// Longest strictly increasing subsequence, by patience sorting.
pub fn lis_length<T: Ord>(seq: &[T]) -> usize {
    let mut piles: Vec<&T> = Vec::new();
    for x in seq {
        let at = piles.partition_point(|top| *top < x);
        if at == piles.len() {
            piles.push(x);
        } else {
            piles[at] = x;
        }
    }
    piles.len()
}

#[derive(Debug, Clone, Serialize)]
pub struct LisDistribution {
    pub theta: f64,
    pub trials: usize,
    pub seed: u64,
    /// `counts[l]` trials had longest increasing subsequence `l`.
    pub counts: Vec<u64>,
}

impl LisDistribution {
    pub fn probability(&self, l: usize) -> f64 {
        self.counts.get(l).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// Empirical `P(L ≤ n)`.
    pub fn cdf(&self, n: i64) -> f64 {
        if n < 0 {
            return 0.0;
        }
        let hits: u64 = self.counts.iter().take(n as usize + 1).sum();
        hits as f64 / self.trials as f64
    }
}

pub const MAX_LIS_THETA: f64 = 16.0;
pub const MIN_LIS_TRIALS: usize = 10_000;

/// Draw `N ~ Poisson(θ)`, shuffle `0..N`, record the LIS length.
pub fn rsk_lis_mc(theta: f64, trials: usize, seed: u64) -> Result<LisDistribution> {
    if !(theta > 0.0 && theta <= MAX_LIS_THETA) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, {MAX_LIS_THETA}], got {theta}")));
    }
    if trials < MIN_LIS_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_LIS_TRIALS} trials, got {trials}")));
    }
    let poisson = Poisson::new(theta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::new();
    let mut perm = Vec::new();
    for _ in 0..trials {
        let size = poisson.sample(&mut rng) as usize;
        perm.clear();
        perm.extend(0..size);
        perm.shuffle(&mut rng);
        let l = lis_length(&perm);
        if counts.len() <= l {
            counts.resize(l + 1, 0);
        }
        counts[l] += 1;
    }
    Ok(LisDistribution { theta, trials, seed, counts })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapPoint {
    pub n: usize,
    pub gap: f64,
    pub lis_cdf: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OffsetCheck {
    pub offset: i64,
    pub points: Vec<GapPoint>,
    pub pass: bool,
}

/// Gap determinants against `P(L ≤ n + o)` for `n` in `ns` and each offset.
pub fn offset_checks(dpp: &DppKernel, lis: &LisDistribution, ns: &[usize]) -> Result<Vec<OffsetCheck>> {
    let gaps: Vec<f64> = ns.iter().map(|n| gap_determinant(dpp, *n)).collect::<Result<_>>()?;
    let t = lis.trials as f64;
    Ok([-1i64, 0, 1]
        .iter()
        .map(|&offset| {
            let points: Vec<GapPoint> = ns
                .iter()
                .zip(&gaps)
                .map(|(n, gap)| {
                    let lis_cdf = lis.cdf(*n as i64 + offset);
                    let std_error = (gap * (1.0 - gap) / t).sqrt();
                    GapPoint { n: *n, gap: *gap, lis_cdf, std_error, z: z_score(lis_cdf, *gap, std_error) }
                })
                .collect();
            let pass = points.iter().all(|p| p.z.abs() <= SIGMA_LIMIT);
            OffsetCheck { offset, points, pass }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DppVerification {
    pub theta: f64,
    pub window: usize,
    pub trials: usize,
    pub seed: u64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub clamped_by: f64,
    pub tail_mass: f64,
    pub correlations: CorrelationReport,
    /// `(n, det(I − K) on labels n+1..)`.
    pub gaps: Vec<(usize, f64)>,
    pub gaps_in_unit_interval: bool,
    pub gaps_monotone: bool,
    pub offsets: Vec<OffsetCheck>,
    pub pinned_offset: i64,
    pub pass: bool,
}

/// Singletons `{i}` for `i ≤ min(20, W)`, neighbour pairs, a few wider
/// pairs and triples.
pub fn default_sets(window: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (1..=window.min(20)).map(|i| vec![i]).collect();
    sets.extend((1..window.min(8)).map(|i| vec![i, i + 1]));
    for s in [vec![1, 3], vec![2, 5], vec![1, 2, 3], vec![2, 3, 4], vec![1, 3, 5]] {
        if s.iter().all(|l| *l <= window) {
            sets.push(s);
        }
    }
    sets
}

/// `⌈2√θ⌉ − 2 ..= ⌈2√θ⌉ + 4`, clipped at zero.
pub fn gap_sweep(theta: f64) -> Vec<usize> {
    let c = (2.0 * theta.sqrt()).ceil() as i64;
    ((c - 2).max(0)..=c + 4).map(|n| n as usize).collect()
}

pub fn verify_dpp(theta: f64, window: usize, trials: usize, seed: u64) -> Result<DppVerification> {
    let dpp = bessel_dpp(theta, window)?;
    let correlations = correlation_check(&dpp, &default_sets(window), trials, seed)?;
    let sweep = gap_sweep(theta);
    let gaps: Vec<(usize, f64)> = (0..=*sweep.last().unwrap())
        .map(|n| gap_determinant(&dpp, n).map(|g| (n, g)))
        .collect::<Result<_>>()?;
    let gaps_in_unit_interval = gaps.iter().all(|(_, g)| (0.0..=1.0).contains(g));
    let gaps_monotone = gaps.windows(2).all(|w| w[1].1 >= w[0].1);
    let lis = rsk_lis_mc(theta, trials.max(MIN_LIS_TRIALS), seed.wrapping_add(1))?;
    let offsets = offset_checks(&dpp, &lis, &sweep)?;
    let pinned_ok = offsets.iter().any(|o| o.offset == PINNED_OFFSET && o.pass);
    let pass = correlations.pass && gaps_in_unit_interval && gaps_monotone && pinned_ok;
    let ev = &dpp.eig.eigenvalues;
    Ok(DppVerification {
        theta,
        window,
        trials,
        seed,
        spectrum_min: ev.last().copied().unwrap_or(0.0),
        spectrum_max: ev.first().copied().unwrap_or(0.0),
        clamped_by: dpp.clamped_by,
        tail_mass: dpp.tail_mass,
        correlations,
        gaps,
        gaps_in_unit_interval,
        gaps_monotone,
        offsets,
        pinned_offset: PINNED_OFFSET,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_eigenvalue_two() {
        let k = SymMatrix::from_diagonal(&[2.0, 2.0]);
        match validate_dpp(k, 1) {
            Err(Error::SpectrumOutOfBand(bad)) => assert_eq!(bad, vec![2.0, 2.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clamps_inside_band_only() {
        let d = validate_dpp(SymMatrix::from_diagonal(&[1.0 + 5e-11, -5e-11]), 1).unwrap();
        assert_eq!(d.eig.eigenvalues, vec![1.0, 0.0]);
        assert!(d.clamped_by > 4e-11 && d.clamped_by < 6e-11);
        assert!(validate_dpp(SymMatrix::from_diagonal(&[-1e-9]), 1).is_err());
    }

    #[test]
    fn zero_and_identity_kernels() {
        let zero = validate_dpp(SymMatrix::zeros(5), 1).unwrap();
        let full = validate_dpp(SymMatrix::identity(5), 1).unwrap();
        for seed in 0..20 {
            assert!(sample(&zero, seed).points.is_empty());
            assert_eq!(sample(&full, seed).points, vec![1, 2, 3, 4, 5]);
        }
        assert_eq!(gap_determinant(&zero, 0).unwrap(), 1.0);
        assert!(gap_determinant(&full, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = bessel_dpp(4.0, 24).unwrap();
        assert_eq!(sample(&d, 7), sample(&d, 7));
        assert_eq!(sample_many(&d, 50, 3), sample_many(&d, 50, 3));
        assert_ne!(sample_many(&d, 50, 3), sample_many(&d, 50, 4));
    }

    #[test]
    fn bessel_kernel_in_band() {
        let d = bessel_dpp(1.0, 48).unwrap();
        assert!(d.eig.eigenvalues[0] <= 1.0 && d.clamped_by <= SPECTRUM_BAND);
        assert!(d.tail_mass < 1e-30);
    }

    #[test]
    fn duplicate_and_oversized_sets_rejected() {
        let d = bessel_dpp(1.0, 8).unwrap();
        assert!(matches!(correlation_check(&d, &[vec![1, 1]], 10, 0), Err(Error::InvalidIndexSet(_))));
        assert!(matches!(correlation_check(&d, &[vec![1, 2, 3, 4]], 10, 0), Err(Error::InvalidIndexSet(_))));
        assert!(matches!(correlation_check(&d, &[vec![9]], 10, 0), Err(Error::InvalidIndexSet(_))));
    }

    #[test]
    fn singleton_reduces_to_diagonal() {
        let d = bessel_dpp(1.0, 16).unwrap();
        let r = correlation_check(&d, &[vec![2]], 1000, 1).unwrap();
        assert_eq!(r.sets[0].expected, d.kernel.get(1, 1));
    }

    #[test]
    fn small_determinants() {
        let m = SymMatrix::from_upper_fn(3, |i, j| if i == j { 2.0 } else { 1.0 });
        assert!((small_det(&m) - 4.0).abs() < 1e-14);
        assert_eq!(small_det(&SymMatrix::zeros(2)), 0.0);
    }

    #[test]
    fn lis_hand_cases() {
        assert_eq!(lis_length::<u32>(&[]), 0);
        assert_eq!(lis_length(&[3, 1, 2]), 2);
        assert_eq!(lis_length(&[0, 8, 4, 12, 2, 10, 6, 14, 1, 9, 5, 13, 3, 11, 7, 15]), 6);
        assert_eq!(lis_length(&[5, 4, 3, 2, 1]), 1);
    }

    #[test]
    fn lis_empty_probability_at_unit_theta() {
        let d = rsk_lis_mc(1.0, 40_000, 11).unwrap();
        let p0 = (-1.0f64).exp();
        let se = (p0 * (1.0 - p0) / 40_000.0).sqrt();
        assert!((d.probability(0) - p0).abs() <= 4.0 * se);
        assert!(rsk_lis_mc(1.0, 100, 0).is_err());
        assert!(rsk_lis_mc(20.0, 20_000, 0).is_err());
    }

    #[test]
    fn tiny_theta_is_almost_surely_empty() {
        let d = rsk_lis_mc(1e-9, 10_000, 0).unwrap();
        assert_eq!(d.counts[0], 10_000);
    }

    #[test]
    fn far_gaps_are_one() {
        let d = bessel_dpp(1.0, 48).unwrap();
        for n in 12..20 {
            assert!((gap_determinant(&d, n).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn short_window_tail_rejected() {
        let d = bessel_dpp(16.0, 4).unwrap();
        assert!(matches!(gap_determinant(&d, 0), Err(Error::TailNotNegligible { .. })));
    }

    fn lis_brute(seq: &[u8]) -> usize {
        let n = seq.len();
        let mut best = vec![1usize; n];
        for i in 0..n {
            for j in 0..i {
                if seq[j] < seq[i] {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        best.into_iter().max().unwrap_or(0)
    }

    proptest! {
        #[test]
        fn patience_matches_quadratic(seq in proptest::collection::vec(0u8..20, 0..40)) {
            prop_assert_eq!(lis_length(&seq), lis_brute(&seq));
        }

        #[test]
        fn samples_stay_in_window(seed in 0u64..1000) {
            let d = bessel_dpp(4.0, 12).unwrap();
            let s = sample(&d, seed);
            prop_assert!(s.points.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.points.iter().all(|p| d.window().contains(p)));
        }
    }
}
