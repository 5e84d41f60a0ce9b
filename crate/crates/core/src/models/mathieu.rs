use super::{offdiag_max, ModelReport};
use crate::error::{Error, Result};
use crate::factorize::{tw_kernel, DiagonalRule, KernelMatrix, Vec2};
use crate::linalg::{hankel_cross, HankelOperator, Matrix, SymMatrix};
use crate::specfun::{mathieu_coeffs, MathieuCoeffs};
use std::f64::consts::PI;

pub const MATHIEU_TOL: f64 = 1e-10;
const MIN_COEFFS: usize = 40;
const QUADRATURE_POINTS: usize = 1024;

#[derive(Debug, Clone)]
pub struct MathieuData {
    pub beta: f64,
    pub n: usize,
    pub tail: usize,
    pub coeffs: MathieuCoeffs,
    /// `u_sym[j-1] = b_j`.
    pub u_sym: Vec<f64>,
    /// `v_sym[j-1] = j b_j`.
    pub v_sym: Vec<f64>,
    /// `⟨Ja(j), a(k)⟩/(j−k)` with `a(j) = [b_{j−1}, b_j]`, zero diagonal.
    pub kernel_tilde: KernelMatrix,
}

pub fn build_mathieu(beta: f64, branch: usize, n: usize, tail: usize) -> Result<MathieuData> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {n}")));
    }
    let coeffs = mathieu_coeffs(beta, branch, MIN_COEFFS)?;
    let len = 2 * n - 1 + tail;
    let u_sym: Vec<f64> = (1..=len).map(|j| coeffs.b(j as i64)).collect();
    let v_sym: Vec<f64> = (1..=len).map(|j| j as f64 * coeffs.b(j as i64)).collect();
    let a: Vec<Vec2> = (1..=n).map(|j| [coeffs.b(j as i64 - 1), coeffs.b(j as i64)]).collect();
    let kernel_tilde = tw_kernel(&a, n, DiagonalRule::Zero, "mathieu")?;
    Ok(MathieuData { beta, n, tail, coeffs, u_sym, v_sym, kernel_tilde })
}

pub fn assess_mathieu(d: &MathieuData) -> Result<ModelReport> {
    let (n, beta) = (d.n, d.beta);
    let gu = HankelOperator::new(d.u_sym.clone(), n)?;
    let gv = HankelOperator::new(d.v_sym.clone(), n)?;
    let uv = hankel_cross(&gu, &gv, d.tail)?;
    let sum = uv.matrix.add(&uv.matrix.transpose())?;
    let sym = SymMatrix::symmetric_part(&sum)?;

    let kt = &d.kernel_tilde;
    let err_for = |s: f64| offdiag_max(n, |j, k| kt.get(j, k) - s * 2.0 / beta * sym.get(j - 1, k - 1));
    let (plus, minus) = (err_for(1.0), err_for(-1.0));
    let sign = match (plus <= MATHIEU_TOL, minus <= MATHIEU_TOL) {
        (true, false) => 1.0,
        (false, true) => -1.0,
        _ if plus <= MATHIEU_TOL => 1.0,
        _ => return Err(Error::SignUnresolved { plus, minus }),
    };
    let k = SymMatrix::from_upper_fn(n, |i, j| sign * 2.0 / beta * sym.get(i, j));
    let kernel = KernelMatrix { matrix: k.clone(), model: "mathieu".into(), diagonal_rule: "from-factorization".into() };
    let mut r = ModelReport::new("mathieu", n, d.tail, kernel);
    r.param("beta", beta);
    r.param("branch", d.coeffs.branch as f64);
    r.param("alpha", d.coeffs.alpha);
    r.resolved_signs.insert("prefactor_sign".into(), sign);
    r.diag("offdiag_error_plus", plus);
    r.diag("offdiag_error_minus", minus);
    r.check("exactly_one_sign", (plus <= MATHIEU_TOL) != (minus <= MATHIEU_TOL));
    r.error("offdiag_formula", plus.min(minus), MATHIEU_TOL);
    r.diag("product_tail_bound", uv.tail_bound);

    // Telescoping: K̃(m+1,n+1) − K̃(m,n) = (−2/β)(m + n) b_m b_n.
    let b = |j: usize| d.coeffs.b(j as i64);
    let tel = offdiag_max(n - 1, |m, j| {
        kt.get(m + 1, j + 1) - kt.get(m, j) + 2.0 / beta * (m + j) as f64 * b(m) * b(j)
    });
    r.error("telescoping", tel, MATHIEU_TOL);
    r.error("coefficient_recurrence", d.coeffs.recurrence_residual(), MATHIEU_TOL);

    // trace = (4/β) Σ m² b_m² = (2/β) mean |u′|².
    let trace = k.trace();
    let moment = 4.0 / beta * (1..=d.coeffs.n_max()).map(|m| (m * m) as f64 * b(m) * b(m)).sum::<f64>();
    let mean_du = (0..QUADRATURE_POINTS)
        .map(|q| d.coeffs.du(2.0 * PI * q as f64 / QUADRATURE_POINTS as f64).powi(2))
        .sum::<f64>()
        / QUADRATURE_POINTS as f64;
    let quad = 2.0 / beta * mean_du;
    r.diag("trace", trace);
    r.diag("trace_moment", moment);
    r.diag("trace_quadrature", quad);
    r.error("trace_vs_moment", (trace - moment).abs(), MATHIEU_TOL * moment.abs().max(1.0));
    r.error("moment_vs_quadrature", (moment - quad).abs(), MATHIEU_TOL * moment.abs().max(1.0));

    // Hilbert–Schmidt norms Σ k b_k² and Σ k³ b_k², with their tails.
    let hs_u: f64 = (1..=d.coeffs.n_max()).map(|j| j as f64 * b(j) * b(j)).sum();
    let hs_v: f64 = (1..=d.coeffs.n_max()).map(|j| (j as f64).powi(3) * b(j) * b(j)).sum();
    r.diag("hs_norm_sq_u", hs_u);
    r.diag("hs_norm_sq_v", hs_v);
    let tail_from = d.coeffs.n_max().saturating_sub(4);
    r.check("hilbert_schmidt_tails", d.coeffs.fourth_moment_tail(tail_from) < 1e-12);

    r.symbol("u", &d.u_sym);
    r.symbol("v", &d.v_sym);
    Ok(r.finish())
}

/// `K = s(2/β)(Γ_uΓ_v + Γ_vΓ_u)` from even Mathieu Fourier coefficients.
pub fn mathieu_model(beta: f64, branch: usize, n: usize, tail: usize) -> Result<ModelReport> {
    assess_mathieu(&build_mathieu(beta, branch, n, tail)?)
}

/// Dense `Γ_uΓ_v + Γ_vΓ_u` from long finite sections; test oracle.
pub fn dense_anticommutator(u: &[f64], v: &[f64], n: usize) -> Result<Matrix> {
    let big = u.len().min(v.len()).div_ceil(2);
    let gu = HankelOperator::new(u.to_vec(), big)?.materialize();
    let gv = HankelOperator::new(v.to_vec(), big)?.materialize();
    let p = crate::linalg::matmul(gu.as_matrix(), gv.as_matrix())?;
    let s = p.add(&p.transpose())?;
    Ok(s.block(0, 0, n, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_beta_resolves_plus() {
        let r = mathieu_model(1.0, 0, 32, 64).unwrap();
        assert!(r.pass, "{:?}", r.failures());
        assert_eq!(r.resolved_signs["prefactor_sign"], 1.0);
        assert!(r.diagnostics["offdiag_error_minus"] > 1e-3);
    }

    #[test]
    fn other_branches_and_negative_beta() {
        for &(beta, branch) in &[(-2.0, 0usize), (3.0, 1), (0.5, 2)] {
            let r = mathieu_model(beta, branch, 24, 48).unwrap();
            assert!(r.pass, "beta={beta} branch={branch}: {:?}", r.failures());
        }
    }

    #[test]
    fn suffix_products_match_dense_sections() {
        let d = build_mathieu(1.0, 0, 16, 200).unwrap();
        let gu = HankelOperator::new(d.u_sym.clone(), 16).unwrap();
        let gv = HankelOperator::new(d.v_sym.clone(), 16).unwrap();
        let uv = hankel_cross(&gu, &gv, 200).unwrap();
        let fast = uv.matrix.add(&uv.matrix.transpose()).unwrap();
        let dense = dense_anticommutator(&d.u_sym, &d.v_sym, 16).unwrap();
        assert!(crate::linalg::max_abs_diff(&fast, &dense, crate::linalg::DiffMask::All).unwrap() < 1e-14);
    }

    #[test]
    fn decoupled_limit_kernel_vanishes() {
        let d = build_mathieu(1e-12, 0, 8, 16).unwrap();
        assert!(d.kernel_tilde.matrix.as_matrix().max_abs() < 1e-10);
    }

    #[test]
    fn zero_beta_rejected() {
        let e = mathieu_model(0.0, 0, 8, 8).unwrap_err();
        assert!(e.to_string().contains("beta must be nonzero"));
    }

    #[test]
    fn perturbed_symbol_is_detected() {
        let mut d = build_mathieu(1.0, 0, 32, 64).unwrap();
        d.u_sym[1] += 1e-3;
        match assess_mathieu(&d) {
            Err(Error::SignUnresolved { .. }) => {}
            Ok(r) => assert!(!r.pass),
            Err(e) => panic!("{e}"),
        }
    }
}
