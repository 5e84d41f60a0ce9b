use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix, DEFAULT_EIG_TOL, MAX_DIM};
use serde::Serialize;

const MIN_ORDER: usize = 16;
const TAIL_TOL: f64 = 1e-14;

/// Even (`b_{−n} = b_n`) Fourier coefficients of a 2π-periodic Mathieu
/// function, `Σ_{n∈Z} b_n² = 1`, `b₀ ≥ 0`.
#[derive(Debug, Clone, Serialize)]
pub struct MathieuCoeffs {
    pub beta: f64,
    pub alpha: f64,
    pub branch: usize,
    /// `b_n` for `n = 0..=n_max`.
    b: Vec<f64>,
}

impl MathieuCoeffs {
    pub fn n_max(&self) -> usize {
        self.b.len() - 1
    }

    /// `b_n` for any integer `n`; zero outside `|n| ≤ n_max`.
    pub fn b(&self, n: i64) -> f64 {
        self.b.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    pub fn nonnegative(&self) -> &[f64] {
        &self.b
    }

    /// `max_{|n| < n_max} |2(α − n²) b_n + β(b_{n+1} + b_{n−1})|`.
    pub fn recurrence_residual(&self) -> f64 {
        let nm = self.n_max() as i64;
        ((-(nm - 1))..nm)
            .map(|n| {
                (2.0 * (self.alpha - (n * n) as f64) * self.b(n)
                    + self.beta * (self.b(n + 1) + self.b(n - 1)))
                .abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        self.b[0] * self.b[0] + 2.0 * self.b[1..].iter().map(|v| v * v).sum::<f64>()
    }

    /// `Σ_{n≥from} n⁴ b_n²`.
    pub fn fourth_moment_tail(&self, from: usize) -> f64 {
        self.b.iter().enumerate().skip(from).map(|(n, v)| (n as f64).powi(4) * v * v).sum()
    }

    /// `u(t) = b₀ + 2 Σ b_n cos nt`.
    pub fn u(&self, t: f64) -> f64 {
        self.b[0] + 2.0 * self.b.iter().enumerate().skip(1).map(|(n, v)| v * (n as f64 * t).cos()).sum::<f64>()
    }

    /// `u′(t) = −2 Σ n b_n sin nt`.
    pub fn du(&self, t: f64) -> f64 {
        -2.0 * self.b.iter().enumerate().skip(1).map(|(n, v)| n as f64 * v * (n as f64 * t).sin()).sum::<f64>()
    }
}

/// The even restriction of `M(n,n) = n²`, `M(n,n±1) = −β/2` to `n = 0..=n_max`,
/// symmetrized through `x₀ = b₀/√2`.
fn even_matrix(beta: f64, n_max: usize) -> SymMatrix {
    SymMatrix::from_upper_fn(n_max + 1, |i, j| {
        if i == j {
            (i * i) as f64
        } else if j == i + 1 {
            if i == 0 {
                -beta / std::f64::consts::SQRT_2
            } else {
                -beta / 2.0
            }
        } else {
            0.0
        }
    })
}

/// `branch`-th smallest even eigenpair `(α, b)` of the Fourier recurrence
/// `2(−n² + α) b_n + β(b_{n+1} + b_{n−1}) = 0`.
pub fn mathieu_coeffs(beta: f64, branch: usize, n_max: usize) -> Result<MathieuCoeffs> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be nonzero".into()));
    }
    let mut order = n_max.max(MIN_ORDER).max(branch + MIN_ORDER);
    loop {
        let m = even_matrix(beta, order);
        let eig = sym_eigen(&m, DEFAULT_EIG_TOL)?;
        let idx = order - branch;
        let x = eig.eigenvector(idx);
        let mut b: Vec<f64> = x.iter().enumerate().map(|(n, v)| if n == 0 { *v } else { v / std::f64::consts::SQRT_2 }).collect();
        let first = b.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0);
        if first < 0.0 {
            b.iter_mut().for_each(|v| *v = -*v);
        }
        let tail_ok = b[order].abs() < TAIL_TOL;
        if tail_ok || order + 1 >= MAX_DIM {
            return Ok(MathieuCoeffs { beta, alpha: eig.eigenvalues[idx], branch, b });
        }
        order = (order * 2).min(MAX_DIM - 1);
    }
}
