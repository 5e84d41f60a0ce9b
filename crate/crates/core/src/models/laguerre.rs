use super::ModelReport;
use crate::error::{Error, Result};
use crate::factorize::{mat2_mul, mat2_norm, mat2_vec, tw_kernel, DiagonalRule, KernelMatrix, Mat2, Vec2, I2, J};
use crate::linalg::{diagonal_constancy_residual, hankel_square, HankelOperator, Matrix, ToeplitzOperator};
use crate::specfun::{poly_exact_rational, poly_generating_coeffs, poly_sequence, PolySequence};
use std::f64::consts::PI;

pub const T_INFTY_STEPS: usize = 100_000;
pub const TOEPLITZ_TOL: f64 = 1e-4;
const T_INFTY_STEP_TOL: f64 = 1e-10;
pub const POLY_ORACLE_TOL: f64 = 1e-12;
/// Oracle comparisons cover `p_0..=p_12`.
pub const POLY_ORACLE_DEGREE: usize = 12;

#[derive(Debug, Clone)]
pub struct LaguerreData {
    pub theta: f64,
    pub n: usize,
    pub tail: usize,
    pub poly: PolySequence,
    /// `phi[j-1] = p_j/(j+1)`.
    pub phi: Vec<f64>,
    pub a: Vec<Vec2>,
    /// `θΓ_φ²` on `1..=N`.
    pub gamma_sq: Matrix,
    pub gamma_sq_tail_bound: f64,
    pub t_infty: Mat2,
    pub t_infty_steps_used: usize,
    pub t_infty_last_step: f64,
}

fn t(theta: f64, j: usize) -> Mat2 {
    [[theta / (j as f64 + 1.0), -1.0], [1.0, 0.0]]
}

/// `T(4j)T(4j−1)T(4j−2)T(4j−3)`.
pub fn bunch(theta: f64, j: usize) -> Mat2 {
    let mut b = I2;
    for k in (4 * j - 3)..=(4 * j) {
        b = mat2_mul(&t(theta, k), &b);
    }
    b
}

fn rot(angle: f64) -> Mat2 {
    // exp(angle·J)
    let (s, c) = angle.sin_cos();
    [[c, -s], [s, c]]
}

/// `lim C_k`, `C_k = exp(θJ Σ_{j≤k} 1/(2j)) B(k)…B(1)`. The product runs
/// until consecutive steps differ by at most 1e−10 or `max_steps` is reached.
/// Since `C_k − T∞ = O(1/k)`, the returned value is `2C_k − C_{k/2}`.
/// Returns the limit, the `k` used and the last step size.
pub fn t_infty(theta: f64, max_steps: usize) -> (Mat2, usize, f64) {
    let max_steps = max_steps.max(2);
    let c_of = |prod: &Mat2, harmonic: f64| mat2_mul(&rot(theta * harmonic), prod);
    let (mut full, mut h_full) = (I2, 0.0);
    let (mut half, mut h_half) = (I2, 0.0);
    let mut prev = I2;
    let mut last_step = f64::INFINITY;
    let mut k = 0;
    loop {
        k += 1;
        full = mat2_mul(&bunch(theta, k), &full);
        h_full += 0.5 / k as f64;
        let c = c_of(&full, h_full);
        if k > 1 {
            let d = [[c[0][0] - prev[0][0], c[0][1] - prev[0][1]], [c[1][0] - prev[1][0], c[1][1] - prev[1][1]]];
            last_step = mat2_norm(&d);
        }
        prev = c;
        if k % 2 == 0 {
            let j = k / 2;
            half = mat2_mul(&bunch(theta, j), &half);
            h_half += 0.5 / j as f64;
            if last_step <= T_INFTY_STEP_TOL || k >= max_steps {
                break;
            }
        }
    }
    let ch = c_of(&half, h_half);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = 2.0 * prev[i][j] - ch[i][j];
        }
    }
    (out, k, last_step)
}

/// `W(d) = ⟨J^{d̄+1}x, x⟩/d` with `x = T∞a(1)`; since `J⁴ = I` this is
/// `−|x|² sin(πd/2)/d`.
pub fn w_from_t_infty(t_inf: &Mat2, a1: &Vec2, d: i64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let x = mat2_vec(t_inf, a1);
    let mut y = x;
    for _ in 0..(d.rem_euclid(4) + 1) {
        y = mat2_vec(&J, &y);
    }
    (y[0] * x[0] + y[1] * x[1]) / d as f64
}

pub fn build_laguerre(theta: f64, n: usize, tail: usize, t_infty_steps: usize) -> Result<LaguerreData> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::InvalidParameter("theta must be nonzero".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {n}")));
    }
    let len = 2 * n - 1 + tail;
    let poly = poly_sequence(theta, len + 1);
    let phi: Vec<f64> = (1..=len).map(|j| poly.p(j) / (j as f64 + 1.0)).collect();
    let a: Vec<Vec2> = (1..=n).map(|j| [poly.p(j), poly.p(j - 1)]).collect();
    let sup = poly.sup_norm();
    let h = HankelOperator::new(phi.clone(), n)?.with_beyond_bound(sup * sup / (len as f64 + 1.0));
    let sq = hankel_square(&h, tail)?;
    let gamma_sq = sq.matrix.as_matrix().scale(theta);
    let (t_inf, steps, last) = t_infty(theta, t_infty_steps);
    Ok(LaguerreData {
        theta,
        n,
        tail,
        poly,
        phi,
        a,
        gamma_sq,
        gamma_sq_tail_bound: theta.abs() * sq.tail_bound,
        t_infty: t_inf,
        t_infty_steps_used: steps,
        t_infty_last_step: last,
    })
}

pub fn assess_laguerre(d: &LaguerreData) -> Result<ModelReport> {
    let (n, th) = (d.n, d.theta);
    // The diagonal is the θΓ_φ² diagonal, which sets the remainder's W(0) = 0.
    let gsq = d.gamma_sq.clone();
    let diag = move |j: usize| gsq[(j - 1, j - 1)];
    let kernel: KernelMatrix = tw_kernel(&d.a, n, DiagonalRule::Supplied(&diag), "laguerre")?;
    let mut r = ModelReport::new("laguerre", n, d.tail, kernel.clone());
    r.param("theta", th);

    let k = kernel.matrix.as_matrix();
    let remainder = |s: f64| Matrix::from_fn(n, n, |i, j| k[(i, j)] - s * d.gamma_sq[(i, j)]);
    let (r_plus, r_minus) = (remainder(1.0), remainder(-1.0));
    let (res_plus, res_minus) = (diagonal_constancy_residual(&r_plus), diagonal_constancy_residual(&r_minus));
    r.diag("toeplitz_residual_plus", res_plus);
    r.diag("toeplitz_residual_minus", res_minus);
    let (sign, rm, res) = match (res_plus <= TOEPLITZ_TOL, res_minus <= TOEPLITZ_TOL) {
        (true, false) => (1.0, r_plus, res_plus),
        (false, true) => (-1.0, r_minus, res_minus),
        (true, true) => {
            r.warnings.push("both remainder signs are Toeplitz within tolerance".into());
            (1.0, r_plus, res_plus)
        }
        (false, false) => return Err(Error::SignUnresolved { plus: res_plus, minus: res_minus }),
    };
    r.check("exactly_one_sign", (res_plus <= TOEPLITZ_TOL) != (res_minus <= TOEPLITZ_TOL));
    r.resolved_signs.insert("remainder_sign".into(), sign);
    r.error("remainder_toeplitz", res, TOEPLITZ_TOL);
    r.diag("gamma_sq_tail_bound", d.gamma_sq_tail_bound);

    // Symbol of the remainder: diagonal means against the T∞ formula.
    let a1 = [th, 1.0];
    let mut symbol_err = 0.0f64;
    for dd in -(n as i64 - 1)..(n as i64) {
        let cells: Vec<f64> = (0..n)
            .filter_map(|i| {
                let j = i as i64 - dd;
                (0..n as i64).contains(&j).then(|| rm[(i, j as usize)])
            })
            .collect();
        let mean = cells.iter().sum::<f64>() / cells.len() as f64;
        symbol_err = symbol_err.max((mean - w_from_t_infty(&d.t_infty, &a1, dd)).abs());
    }
    r.error("remainder_symbol_vs_t_infty", symbol_err, TOEPLITZ_TOL);
    let x = mat2_vec(&d.t_infty, &a1);
    r.diag("t_infty_image_norm_sq", x[0] * x[0] + x[1] * x[1]);
    r.diag("t_infty_steps", d.t_infty_steps_used as f64);
    r.diag("t_infty_last_step", d.t_infty_last_step);
    if d.t_infty_last_step > T_INFTY_STEP_TOL {
        r.warnings.push(format!(
            "T∞ product stopped at the step budget with last step {:e}; extrapolated",
            d.t_infty_last_step
        ));
    }
    // Same-sign W(d) closed form, to show both routes agree.
    let sq = x[0] * x[0] + x[1] * x[1];
    let closed = (1..n as i64)
        .map(|dd| (w_from_t_infty(&d.t_infty, &a1, dd) + sq * (PI * dd as f64 / 2.0).sin() / dd as f64).abs())
        .fold(0.0, f64::max);
    r.error("w_closed_form", closed, 1e-12 * sq.max(1.0));

    let tel = (1..n)
        .flat_map(|m| (1..n).map(move |j| (m, j)))
        .filter(|(m, j)| m != j)
        .map(|(m, j)| {
            let lhs = kernel.get(m + 1, j + 1) - kernel.get(m, j);
            (lhs + th * d.phi[m - 1] * d.phi[j - 1]).abs()
        })
        .fold(0.0, f64::max);
    r.error("telescoping", tel, 1e-12);
    r.error("poly_recurrence", d.poly.recurrence_residual(), 1e-12);
    let deg = POLY_ORACLE_DEGREE.min(d.poly.len() - 1);
    let series = poly_generating_coeffs(th, deg);
    let series_err = (0..=deg).map(|j| (d.poly.p(j) - series[j]).abs()).fold(0.0, f64::max);
    r.error("poly_vs_generating_series", series_err, POLY_ORACLE_TOL);
    match rational_of(th).and_then(|(num, den)| poly_exact_rational(num, den, deg)) {
        Some(exact) => {
            let err = exact
                .iter()
                .enumerate()
                .map(|(j, (a, b))| (d.poly.p(j) - *a as f64 / *b as f64).abs())
                .fold(0.0, f64::max);
            r.error("poly_vs_exact_rational", err, POLY_ORACLE_TOL);
        }
        None => r.warnings.push(format!("theta = {th} has no small exact fraction; rational oracle skipped")),
    }

    // B(j) = I − (θ/2j)J + O(1/j²).
    let bunch_const = |j: usize| {
        let b = bunch(th, j);
        let approx = [[1.0, th / (2.0 * j as f64)], [-th / (2.0 * j as f64), 1.0]];
        let diff = [[b[0][0] - approx[0][0], b[0][1] - approx[0][1]], [b[1][0] - approx[1][0], b[1][1] - approx[1][1]]];
        mat2_norm(&diff) * (j * j) as f64
    };
    let early = (10..=20).map(bunch_const).fold(0.0, f64::max);
    let late = (10..=2000).map(bunch_const).fold(0.0, f64::max);
    r.diag("bunch_second_order_constant", late);
    r.check("bunch_second_order", late <= 2.0 * early + 1e-12);

    r.remainder = Some(ToeplitzOperator::from_fn(n, |dd| w_from_t_infty(&d.t_infty, &a1, dd)));
    r.symbol("phi", &d.phi);
    Ok(r.finish())
}

/// `θ = num/den` exactly with `den ≤ 1024`, if there is such a fraction.
fn rational_of(theta: f64) -> Option<(i64, i64)> {
    (1..=1024i64).find_map(|den| {
        let num = (theta * den as f64).round();
        (num.abs() < 1e12 && num / den as f64 == theta).then_some((num as i64, den))
    })
}

/// Laguerre-type kernel with Toeplitz remainder `W = K̃ − sθΓ_φ²`.
pub fn laguerre_model(theta: f64, n: usize, tail: usize, t_infty_steps: usize) -> Result<ModelReport> {
    assess_laguerre(&build_laguerre(theta, n, tail, t_infty_steps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bunch_expansion() {
        for &th in &[1.0, -0.5, 2.0] {
            for j in [10usize, 100, 1000] {
                let b = bunch(th, j);
                let approx = [[1.0, th / (2.0 * j as f64)], [-th / (2.0 * j as f64), 1.0]];
                let diff = [[b[0][0] - approx[0][0], b[0][1] - approx[0][1]], [b[1][0] - approx[1][0], b[1][1] - approx[1][1]]];
                assert!(mat2_norm(&diff) * (j * j) as f64 <= 2.0 * th * th + 1.0);
            }
        }
    }

    #[test]
    fn w_signs_cycle() {
        let t = I2;
        let a1 = [1.0, 0.0];
        assert_eq!(w_from_t_infty(&t, &a1, 1), -1.0);
        assert_eq!(w_from_t_infty(&t, &a1, 2), 0.0);
        assert!((w_from_t_infty(&t, &a1, 3) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(w_from_t_infty(&t, &a1, -1), -1.0);
    }

    #[test]
    fn t_infty_converges() {
        let (t, steps, last) = t_infty(1.0, T_INFTY_STEPS);
        assert!(steps >= 2);
        assert!(last.is_finite());
        assert!(last <= 1e-10, "{last}");
        // Oscillating O(1/k) terms survive the extrapolation, so shorter runs
        // agree only to a few parts in 1e5.
        let (t2, _, _) = t_infty(1.0, 4096);
        assert!(mat2_norm(&[[t[0][0] - t2[0][0], t[0][1] - t2[0][1]], [t[1][0] - t2[1][0], t[1][1] - t2[1][1]]]) < 1e-4);
    }

    #[test]
    fn small_run_resolves_plus_sign() {
        let r = laguerre_model(1.0, 16, 20_000, 4096).unwrap();
        assert_eq!(r.resolved_signs["remainder_sign"], 1.0);
        assert!(r.diagnostics["toeplitz_residual_minus"] > 0.1);
        assert!(r.identity_errors["remainder_toeplitz"] <= 1e-3);
    }

    #[test]
    fn zero_theta_rejected() {
        assert!(matches!(laguerre_model(0.0, 8, 8, 16), Err(Error::InvalidParameter(_))));
    }
}
