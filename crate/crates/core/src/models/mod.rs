//! The four worked kernels: discrete Bessel, the Laguerre-type recurrence
//! with its Toeplitz remainder, Mathieu Fourier coefficients, and the
//! almost Mathieu eigenvector.
//!
//! Each model is split into `build_*` (numerical data, public so callers can
//! perturb it) and `assess_*` (identity checks into a [`ModelReport`]).

pub mod almost_mathieu;
pub mod bessel;
pub mod laguerre;
pub mod mathieu;

pub use almost_mathieu::{almost_mathieu_model, assess_almost_mathieu, build_almost_mathieu, AlmostMathieuData};
pub use bessel::{assess_bessel, bessel_model, build_bessel, BesselData};
pub use laguerre::{assess_laguerre, build_laguerre, laguerre_model, LaguerreData, T_INFTY_STEPS};
pub use mathieu::{assess_mathieu, build_mathieu, mathieu_model, MathieuData};

use crate::factorize::KernelMatrix;
use crate::linalg::ToeplitzOperator;
use crate::spectra::{MultiplicityRelations, SingularTransferReport};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub tail: usize,
    pub diagonal_rule: String,
    /// Named identity residuals; each has a tolerance in `tolerances`.
    pub identity_errors: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    /// Inequalities and structural checks.
    pub checks: BTreeMap<String, bool>,
    pub resolved_signs: BTreeMap<String, f64>,
    /// Descriptive values, never part of `pass`.
    pub diagnostics: BTreeMap<String, f64>,
    /// Residuals of rejected readings of a formula, reported for the record.
    pub alternatives: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    /// Leading `2N − 1` entries of each factor symbol.
    pub symbols: BTreeMap<String, Vec<f64>>,
    pub remainder: Option<ToeplitzOperator>,
    pub singular_transfer: Option<SingularTransferReport>,
    pub multiplicities: Option<MultiplicityRelations>,
    #[serde(skip)]
    pub kernel: KernelMatrix,
    pub pass: bool,
}

impl ModelReport {
    pub fn new(model: &str, n: usize, tail: usize, kernel: KernelMatrix) -> Self {
        ModelReport {
            model: model.to_string(),
            parameters: BTreeMap::new(),
            n,
            tail,
            diagonal_rule: kernel.diagonal_rule.clone(),
            identity_errors: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            checks: BTreeMap::new(),
            resolved_signs: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            alternatives: BTreeMap::new(),
            warnings: Vec::new(),
            symbols: BTreeMap::new(),
            remainder: None,
            singular_transfer: None,
            multiplicities: None,
            kernel,
            pass: false,
        }
    }

    pub fn param(&mut self, name: &str, value: f64) {
        self.parameters.insert(name.to_string(), value);
    }

    pub fn error(&mut self, name: &str, err: f64, tol: f64) {
        self.identity_errors.insert(name.to_string(), err);
        self.tolerances.insert(name.to_string(), tol);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    pub fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }

    pub fn symbol(&mut self, name: &str, values: &[f64]) {
        let keep = (2 * self.n).saturating_sub(1).min(values.len());
        self.symbols.insert(name.to_string(), values[..keep].to_vec());
    }

    /// Names of the failing identities and checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .identity_errors
            .iter()
            .filter(|(k, v)| !(**v <= self.tolerances[*k]))
            .map(|(k, _)| k.clone())
            .collect();
        out.extend(self.checks.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.clone()));
        out
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.failures().is_empty();
        self
    }

    pub fn passes(&self, name: &str) -> Option<bool> {
        if let Some(e) = self.identity_errors.get(name) {
            return Some(*e <= self.tolerances[name]);
        }
        self.checks.get(name).copied()
    }
}

/// `max_{m≠n} |a(m,n) − b(m,n)|` over 1-based index functions.
pub(crate) fn offdiag_max(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for m in 1..=n {
        for k in 1..=n {
            if m != k {
                let v = f(m, k);
                worst = if v.is_nan() { f64::NAN } else { worst.max(v.abs()) };
                if worst.is_nan() {
                    return worst;
                }
            }
        }
    }
    worst
}
