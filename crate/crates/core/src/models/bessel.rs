use super::{offdiag_max, ModelReport};
use crate::error::{Error, Result};
use crate::factorize::{
    builtin_system, default_pairs, extract_symbol, rank_one_certificate, tw_kernel, verify_factorization, DiagonalRule,
    KernelMatrix, RankOneCertificate, SystemParams, Vec2,
};
use crate::linalg::{sym_eigen, HankelOperator, DEFAULT_EIG_TOL};
use crate::specfun::{bessel_table, BesselTable};
use crate::spectra::{check_multiplicity_relations, decay_fit, singular_transfer_check};

pub const FACTOR_TOL: f64 = 1e-10;
pub const DIRECT_TOL: f64 = 1e-13;
pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const CERTIFICATE_TOL: f64 = 1e-13;
pub const SPECTRAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BesselData {
    pub theta: f64,
    pub n: usize,
    pub tail: usize,
    pub table: BesselTable,
    /// `a[j-1] = [√θ J_j, J_{j+1}]`.
    pub a: Vec<Vec2>,
    pub certificate: RankOneCertificate,
    /// `phi[j-1] = φ(j)`, nominally `J_{j+1}`.
    pub phi: Vec<f64>,
    pub kernel: KernelMatrix,
}

pub fn build_bessel(theta: f64, n: usize, tail: usize) -> Result<BesselData> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {n}")));
    }
    let len = 2 * n - 1 + tail;
    let table = bessel_table(theta, len + 2)?;
    let s = theta.sqrt();
    let a: Vec<Vec2> = (1..=len).map(|j| [s * table.j(j), table.j(j + 1)]).collect();
    let sys = builtin_system("bessel", SystemParams { theta, ..Default::default() })?;
    let certificate = rank_one_certificate(&sys, &default_pairs(), CERTIFICATE_TOL)?;
    let phi = extract_symbol(&certificate, &sys, &a, len)?;
    let kernel = tw_kernel(&a, n, DiagonalRule::FromFactorization(Some(&phi)), "bessel")?;
    Ok(BesselData { theta, n, tail, table, a, certificate, phi, kernel })
}

pub fn assess_bessel(d: &BesselData) -> Result<ModelReport> {
    let (n, th) = (d.n, d.theta);
    let mut r = ModelReport::new("bessel", n, d.tail, d.kernel.clone());
    r.param("theta", th);
    let j = |k: usize| d.table.j(k);
    let s = th.sqrt();

    let f = verify_factorization(&d.kernel, &d.phi, d.tail, FACTOR_TOL)?;
    r.error("factorization_offdiag", f.max_offdiag_error, FACTOR_TOL);
    r.error("telescoping", f.telescoping_error, FACTOR_TOL);
    r.diag("tail_bound", f.tail_bound);

    let scale = d.kernel.matrix.as_matrix().max_abs().max(1.0);
    let direct = offdiag_max(n, |m, k| {
        d.kernel.get(m, k) - s * (j(m) * j(k + 1) - j(m + 1) * j(k)) / (m as f64 - k as f64)
    });
    r.error("direct_formula", direct, DIRECT_TOL * scale);
    // The variant s(J_m J_{n−1} − J_n J_{m−1})/(m−n) is the same kernel
    // shifted by one index with opposite sign.
    let shifted = offdiag_max(n, |m, k| {
        let (mp, kp) = (m + 1, k + 1);
        let variant = s * (j(mp) * j(kp - 1) - j(kp) * j(mp - 1)) / (mp as f64 - kp as f64);
        variant + d.kernel.get(m, k)
    });
    r.error("shifted_variant_relation", shifted, DIRECT_TOL * scale);
    r.error("bessel_normalization", (d.table.normalization() - 1.0).abs(), NORMALIZATION_TOL);

    let c = &d.certificate;
    r.error("certificate_residual", c.max_residual, CERTIFICATE_TOL);
    let c_err = [c.c[0][0], c.c[0][1], c.c[1][1] + 1.0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    r.error("certificate_c", c_err, CERTIFICATE_TOL);
    r.resolved_signs.insert("v_lambda_second_component".into(), c.v_lambda[1].signum());
    r.diag("lambda", c.lambda);

    let eig = sym_eigen(&d.kernel.matrix, DEFAULT_EIG_TOL)?;
    let min_eig = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let norm = eig.eigenvalues.first().copied().unwrap_or(0.0).abs();
    r.check("positive_semidefinite", min_eig >= -1e-10 * norm.max(f64::MIN_POSITIVE));
    r.diag("min_eigenvalue", min_eig);
    r.diag("trace", d.kernel.matrix.trace());

    let gamma = HankelOperator::new(d.phi.clone(), n)?;
    let st = singular_transfer_check(&d.kernel.matrix, &gamma, SPECTRAL_TOL)?;
    r.error("singular_transfer", st.relative_error, SPECTRAL_TOL);
    r.check("truncation_bounds", st.truncations.iter().all(|t| t.holds));
    let g_eig = sym_eigen(&gamma.materialize(), DEFAULT_EIG_TOL)?;
    let p23 = check_multiplicity_relations(&eig.eigenvalues, &g_eig.eigenvalues, SPECTRAL_TOL);
    r.check("multiplicity_relations", p23.pass);
    let distinct = p23.clusters.iter().all(|c| c.nu_k == 1);
    r.diag("all_multiplicities_one", if distinct { 1.0 } else { 0.0 });
    // The eigenvalues of K fall below the fit floor after about 2√θ + 3
    // terms; the singular numbers of Γ cover twice the range of decades.
    match decay_fit(&st.singular_k) {
        Ok(fit) => {
            r.diag("eigenvalue_decay_delta", fit.delta);
            r.diag("eigenvalue_decay_r2", fit.r2);
        }
        Err(e) => r.warnings.push(format!("eigenvalue decay fit skipped: {e}")),
    }
    match decay_fit(&st.singular_gamma) {
        Ok(fit) => {
            r.diag("gamma_decay_delta", fit.delta);
            r.diag("gamma_decay_r2", fit.r2);
        }
        Err(e) => r.warnings.push(format!("singular number decay fit of the factor skipped: {e}")),
    }
    r.singular_transfer = Some(st);
    r.multiplicities = Some(p23);
    r.symbol("phi", &d.phi);
    Ok(r.finish())
}

/// Discrete Bessel kernel on `1..=N` with symbol `J_{j+1}(2√θ)`.
pub fn bessel_model(theta: f64, n: usize, tail: usize) -> Result<ModelReport> {
    assess_bessel(&build_bessel(theta, n, tail)?)
}
