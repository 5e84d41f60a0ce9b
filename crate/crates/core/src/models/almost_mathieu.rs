use super::ModelReport;
use crate::error::{Error, Result};
use crate::factorize::{skew, KernelMatrix};
use crate::linalg::{hankel_cross, hankel_square, matmul, sym_eigen, HankelOperator, Matrix, SymMatrix, DEFAULT_EIG_TOL};
use crate::specfun::{almost_mathieu_eigen, LocalizedEigenvector, Selector, MIN_BOX};
use std::f64::consts::PI;

pub const KERNEL_TOL: f64 = 1e-8;
pub const BLOCK_TOL: f64 = 1e-7;
pub const RESONANCE_FLOOR: f64 = 1e-12;
pub const MAX_EXCLUDED_FRACTION: f64 = 0.02;
pub const TRUNCATION_RANKS: [usize; 2] = [16, 32];

#[derive(Debug, Clone)]
pub struct AlmostMathieuData {
    pub lambda: f64,
    pub theta_freq: f64,
    pub n: usize,
    pub tail: usize,
    pub eigen: LocalizedEigenvector,
    /// Phase seen from the localization center.
    pub alpha_shifted: f64,
    /// `u[j] = u_j` for `j = 0..=2N + tail`.
    pub u: Vec<f64>,
    /// `c_sym[i-1] = cos π(α′ + (i+1)θ) u_{i+1}`, the symbol of `Γ_c`.
    pub c_sym: Vec<f64>,
    pub s_sym: Vec<f64>,
}

pub fn build_almost_mathieu(
    lambda: f64,
    theta_freq: f64,
    alpha_phase: f64,
    n: usize,
    tail: usize,
) -> Result<AlmostMathieuData> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {n}")));
    }
    let eigen = almost_mathieu_eigen(lambda, theta_freq, alpha_phase, MIN_BOX, Selector::MostLocalized)?;
    let alpha_shifted = eigen.shifted_phase();
    let len = 2 * n - 1 + tail;
    let u: Vec<f64> = (0..=len as i64 + 1).map(|j| eigen.u(j)).collect();
    let angle = |i: usize| PI * (alpha_shifted + (i + 1) as f64 * theta_freq);
    let c_sym = (1..=len).map(|i| angle(i).cos() * u[i + 1]).collect();
    let s_sym = (1..=len).map(|i| angle(i).sin() * u[i + 1]).collect();
    Ok(AlmostMathieuData { lambda, theta_freq, n, tail, eigen, alpha_shifted, u, c_sym, s_sym })
}

pub fn assess_almost_mathieu(d: &AlmostMathieuData) -> Result<ModelReport> {
    let (n, lam, th) = (d.n, d.lambda, d.theta_freq);
    let gc = HankelOperator::new(d.c_sym.clone(), n)?;
    let gs = HankelOperator::new(d.s_sym.clone(), n)?;
    let cs = hankel_cross(&gc, &gs, d.tail)?;
    let k_mat = SymMatrix::symmetric_part(&cs.matrix.add(&cs.matrix.transpose())?)?;
    let (cc, ss) = (hankel_square(&gc, d.tail)?, hankel_square(&gs, d.tail)?);
    let l_mat = SymMatrix::from_upper_fn(n, |i, j| cc.matrix.get(i, j) + ss.matrix.get(i, j));

    let kernel = KernelMatrix { matrix: k_mat.clone(), model: "almost-mathieu".into(), diagonal_rule: "from-factorization".into() };
    let mut r = ModelReport::new("almost-mathieu", n, d.tail, kernel);
    r.param("lambda", lam);
    r.param("theta_freq", th);
    r.param("alpha_phase", d.eigen.alpha_phase);
    r.param("alpha_shifted", d.alpha_shifted);
    r.diag("energy", d.eigen.energy);
    r.diag("localization_center", d.eigen.center as f64);
    r.diag("box_half", d.eigen.box_half as f64);
    r.diag("eigen_residual", d.eigen.residual);
    r.diag("edge_ratio", d.eigen.edge_ratio);
    r.warnings.extend(d.eigen.warnings.iter().cloned());

    let u = |j: usize| d.u.get(j).copied().unwrap_or(0.0);
    let sine = |m: usize, k: usize| (PI * th * (m as f64 - k as f64)).sin();

    // Off-diagonal closed form with a(m) = [u_m, u_{m+1}], excluding
    // near-resonant denominators.
    let mut excluded = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_printed = 0.0f64;
    let mut worst_linear = 0.0f64;
    for m in 1..=n {
        for k in (m + 1)..=n {
            let den = sine(m, k);
            if den.abs() < RESONANCE_FLOOR {
                excluded.push((m, k));
                continue;
            }
            let km = k_mat.get(m - 1, k - 1);
            let closed = skew(&[u(m), u(m + 1)], &[u(k), u(k + 1)]) / (2.0 * lam * den);
            worst = worst.max((km - closed).abs());
            let printed = skew(&[u(m - 1), u(m)], &[u(k - 1), u(k)]) / (2.0 * lam * den);
            worst_printed = worst_printed.max((km - printed).abs());
            let linear = skew(&[u(m), u(m + 1)], &[u(k), u(k + 1)])
                / (2.0 * lam * (PI * th).sin() * (m as f64 - k as f64));
            worst_linear = worst_linear.max((km - linear).abs());
        }
    }
    let pairs = n * (n - 1) / 2;
    let frac = excluded.len() as f64 / pairs as f64;
    if !excluded.is_empty() {
        r.warnings.push(format!("{} near-resonant pairs excluded: {:?}", excluded.len(), excluded));
    }
    r.diag("excluded_pairs", excluded.len() as f64);
    r.check("excluded_fraction", frac <= MAX_EXCLUDED_FRACTION);
    r.error("k_closed_form", worst, KERNEL_TOL);
    r.alternatives.insert("k_closed_form_unshifted_index".into(), worst_printed);
    r.alternatives.insert("k_closed_form_linear_denominator".into(), worst_linear);

    // L(m,n) = cos(πθ(m−n)) Σ_{k≥1} u_{m+k}u_{n+k}.
    let lcorr = |m: usize, k: usize| -> f64 { (1..d.u.len()).map(|i| u(m + i) * u(k + i)).sum() };
    let l_err = (1..=n)
        .flat_map(|m| (1..=n).map(move |k| (m, k)))
        .map(|(m, k)| {
            let closed = (PI * th * (m as f64 - k as f64)).cos() * lcorr(m, k);
            (l_mat.get(m - 1, k - 1) - closed).abs()
        })
        .fold(0.0, f64::max);
    r.error("l_closed_form", l_err, KERNEL_TOL);

    // [[L, K], [K, L]] against the square of [[Γ_c, Γ_s], [Γ_s, Γ_c]] built
    // from long dense sections.
    let big = d.c_sym.len().div_ceil(2);
    let dc = HankelOperator::new(d.c_sym.clone(), big)?.materialize();
    let ds = HankelOperator::new(d.s_sym.clone(), big)?.materialize();
    let phi_block = Matrix::from_fn(2 * big, 2 * big, |i, j| {
        let (bi, bj) = (i / big, j / big);
        let (ii, jj) = (i % big, j % big);
        if bi == bj { dc.get(ii, jj) } else { ds.get(ii, jj) }
    });
    let sq = matmul(&phi_block, &phi_block)?;
    let block = SymMatrix::from_upper_fn(2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let (ii, jj) = (i % n, j % n);
        if bi == bj { l_mat.get(ii, jj) } else { k_mat.get(ii, jj) }
    });
    let mut resid = 0.0;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let (bi, bj) = (i / n, j / n);
            let v = sq[(bi * big + i % n, bj * big + j % n)];
            resid += (block.get(i, j) - v).powi(2);
        }
    }
    r.error("block_identity_frobenius", resid.sqrt(), BLOCK_TOL);

    let block_eig = sym_eigen(&block, DEFAULT_EIG_TOL)?;
    let bnorm = block_eig.eigenvalues[0].abs();
    let bmin = *block_eig.eigenvalues.last().unwrap();
    r.diag("block_min_eigenvalue", bmin);
    r.check("block_positive_semidefinite", bmin >= -1e-10 * bnorm.max(f64::MIN_POSITIVE));
    let sk = sym_eigen(&k_mat, DEFAULT_EIG_TOL)?.singular_numbers();
    let sb = block_eig.singular_numbers();
    let dominated = sk.iter().zip(&sb).all(|(a, b)| *a <= b + 1e-12 * bnorm);
    r.check("k_singular_numbers_dominated", dominated);

    // ‖Γ_s − Γ_s^{(r)}‖ ≤ Σ_{k>r} k|u_k|.
    for &rank in TRUNCATION_RANKS.iter().filter(|r| **r < big) {
        let cut = HankelOperator::new(d.s_sym.clone(), big)?.truncated(rank).materialize();
        let rem = SymMatrix::from_upper_fn(big, |i, j| ds.get(i, j) - cut.get(i, j));
        let norm = sym_eigen(&rem, DEFAULT_EIG_TOL)?.singular_numbers()[0];
        let bound: f64 = ((rank + 1)..d.u.len()).map(|k| k as f64 * u(k).abs()).sum();
        r.diag(&format!("truncation_norm_{rank}"), norm);
        r.diag(&format!("truncation_bound_{rank}"), bound);
        r.check(&format!("truncation_bound_{rank}"), norm <= bound * (1.0 + 1e-12) + 1e-300);
    }

    let fit = d.eigen.decay;
    let lyap = (lam / 2.0).ln();
    r.diag("decay_delta", fit.delta);
    r.diag("decay_r2", fit.r2);
    r.diag("lyapunov_exponent", lyap);
    r.check("decay_rate", (fit.delta - lyap).abs() <= 0.5 * lyap);
    r.check("decay_r2", fit.r2 >= 0.95);

    r.symbol("c", &d.c_sym);
    r.symbol("s", &d.s_sym);
    Ok(r.finish())
}

/// Almost Mathieu factorization: `K = Γ_cΓ_s + Γ_sΓ_c`, `L = Γ_c² + Γ_s²`.
pub fn almost_mathieu_model(
    lambda: f64,
    theta_freq: f64,
    alpha_phase: f64,
    n: usize,
    tail: usize,
) -> Result<ModelReport> {
    assess_almost_mathieu(&build_almost_mathieu(lambda, theta_freq, alpha_phase, n, tail)?)
}
