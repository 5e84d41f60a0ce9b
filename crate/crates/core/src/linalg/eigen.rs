use super::{Matrix, SymMatrix, MAX_DIM};
use crate::error::{Error, Result};

/// Relative off-diagonal tolerance used when callers do not pick one.
pub const DEFAULT_EIG_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 64;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
    /// `max_i ‖A v_i − λ_i v_i‖₂`.
    pub residual: f64,
    /// `max_{i,j} |⟨v_i, v_j⟩ − δ_ij|`.
    pub orthogonality: f64,
    pub sweeps: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|k| self.eigenvectors[(k, i)]).collect()
    }

    /// `V Λ Vᵗ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.eigenvectors[(i, k)] * self.eigenvalues[k] * self.eigenvectors[(j, k)])
                .sum()
        })
    }

    /// Singular numbers `|λ_i|`, sorted descending.
    pub fn singular_numbers(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.eigenvalues.iter().map(|v| v.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

pub fn sym_eigen(a: &SymMatrix, eig_tol: f64) -> Result<SpectralDecomposition> {
    sym_eigen_with(a, eig_tol, DEFAULT_MAX_SWEEPS)
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops to
/// `eig_tol * ‖A‖_F`, followed by one polishing sweep.
pub fn sym_eigen_with(
    a: &SymMatrix,
    eig_tol: f64,
    max_sweeps: usize,
) -> Result<SpectralDecomposition> {
    let n = a.dim();
    if n > MAX_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_DIM });
    }
    let mut w: Vec<f64> = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.frobenius();
    let target = eig_tol * norm;

    let off_norm = |w: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += w[p * n + q] * w[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    let mut polished = false;
    loop {
        let off = off_norm(&w);
        if off == 0.0 || (off <= target && polished) {
            break;
        }
        if off <= target {
            polished = true;
        }
        if sweeps == max_sweeps {
            if off <= target {
                break;
            }
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                // Negligible relative to both diagonal entries: drop it.
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    w[p * n + q] = 0.0;
                    w[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    w[k * n + p] = np;
                    w[p * n + k] = np;
                    w[k * n + q] = nq;
                    w[q * n + k] = nq;
                }
                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j * n + j].total_cmp(&w[i * n + i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[i * n + i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // Sign: largest-magnitude component positive (first one on ties).
        let mut pivot = 0;
        for k in 0..n {
            if v[k * n + src].abs() > v[pivot * n + src].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vecs[(k, col)] = sign * v[k * n + src];
        }
    }

    let mut residual = 0.0f64;
    let mut orthogonality = 0.0f64;
    for i in 0..n {
        let vi: Vec<f64> = (0..n).map(|k| vecs[(k, i)]).collect();
        let avi = a.mul_vec(&vi);
        let r: f64 = avi
            .iter()
            .zip(&vi)
            .map(|(x, y)| (x - eigenvalues[i] * y).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
        for j in i..n {
            let d: f64 = (0..n).map(|k| vecs[(k, i)] * vecs[(k, j)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            orthogonality = orthogonality.max((d - target).abs());
        }
    }

    Ok(SpectralDecomposition { eigenvalues, eigenvectors: vecs, residual, orthogonality, sweeps })
}

/// `s_1 ≥ s_2 ≥ … ≥ 0`, the absolute eigenvalues.
pub fn singular_numbers(a: &SymMatrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(a, DEFAULT_EIG_TOL)?.singular_numbers())
}
