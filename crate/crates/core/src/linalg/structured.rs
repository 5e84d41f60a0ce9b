use super::{Matrix, SymMatrix};
use crate::error::{Error, Result};
use serde::Serialize;

/// Hankel matrix `[φ(j+k−1)]` on `1..=N`. `symbol[0]` is `φ(1)`.
#[derive(Debug, Clone)]
pub struct HankelOperator {
    symbol: Vec<f64>,
    logical_dim: usize,
    /// Upper bound on `Σ_{k>L} φ(k)²` for the part of the symbol not stored.
    beyond_sq_bound: f64,
}

impl HankelOperator {
    pub fn new(symbol: Vec<f64>, logical_dim: usize) -> Result<Self> {
        let required = (2 * logical_dim).saturating_sub(1);
        if symbol.len() < required {
            return Err(Error::SymbolTooShort { required, available: symbol.len() });
        }
        Ok(HankelOperator { symbol, logical_dim, beyond_sq_bound: 0.0 })
    }

    /// Declares an analytic bound on the energy of the unstored tail.
    pub fn with_beyond_bound(mut self, sq_bound: f64) -> Self {
        self.beyond_sq_bound = sq_bound.max(0.0);
        self
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_dim
    }

    /// `φ(k)` with 1-based `k`; zero past the stored symbol.
    pub fn phi(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.symbol.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `Σ_{k≥from} φ(k)²` (1-based), including the declared unstored bound.
    pub fn tail_energy(&self, from: usize) -> f64 {
        let start = from.max(1) - 1;
        let stored: f64 = self.symbol.iter().skip(start).map(|v| v * v).sum();
        stored + self.beyond_sq_bound
    }

    /// Finite section on `1..=N`.
    pub fn materialize(&self) -> SymMatrix {
        SymMatrix::from_upper_fn(self.logical_dim, |i, j| self.symbol[i + j])
    }

    /// Anti-triangular cut keeping only `φ(1..=rank)`; a Hankel matrix of
    /// rank at most `rank`.
    pub fn truncated(&self, rank: usize) -> HankelOperator {
        let symbol =
            self.symbol.iter().enumerate().map(|(i, v)| if i < rank { *v } else { 0.0 }).collect();
        HankelOperator { symbol, logical_dim: self.logical_dim, beyond_sq_bound: 0.0 }
    }
}

/// Toeplitz matrix `[w(m−n)]` on `1..=N`.
#[derive(Debug, Clone, Serialize)]
pub struct ToeplitzOperator {
    dim: usize,
    /// `w(d)` stored at `d + dim − 1`.
    symbol: Vec<f64>,
}

impl ToeplitzOperator {
    pub fn from_fn(dim: usize, w: impl Fn(i64) -> f64) -> Self {
        let n = dim as i64;
        let symbol = ((-(n - 1))..n).map(w).collect();
        ToeplitzOperator { dim, symbol }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w(&self, d: i64) -> f64 {
        self.symbol[(d + self.dim as i64 - 1) as usize]
    }

    pub fn materialize_dense(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.w(i as i64 - j as i64))
    }

    /// Symmetric materialization; rejected unless `w(d) = w(−d)` to within
    /// `1e−12·max|w|`.
    pub fn materialize(&self) -> Result<SymMatrix> {
        SymMatrix::try_from_matrix(self.materialize_dense(), 1e-12)
    }
}

/// Result of a tail-truncated Hankel product.
#[derive(Debug, Clone)]
pub struct HankelSquare {
    pub matrix: SymMatrix,
    /// Uniform bound on the per-entry truncation error.
    pub tail_bound: f64,
    /// Last symbol index used in the sums.
    pub symbol_len_used: usize,
}

#[derive(Debug, Clone)]
pub struct HankelProduct {
    pub matrix: Matrix,
    pub tail_bound: f64,
    pub symbol_len_used: usize,
}

fn required_len(n: usize, tail_len: usize) -> usize {
    (2 * n).saturating_sub(1) + tail_len
}

/// Backward suffix pass along one diagonal: calls `emit(j, Σ_{i≥j} lead(i+d)·trail(i))`
/// for `j = 1..=n_emit` (1-based), summing while `i + d ≤ last`.
fn diagonal_suffix(
    lead: &[f64],
    trail: &[f64],
    d: usize,
    last: usize,
    n_emit: usize,
    mut emit: impl FnMut(usize, f64),
) {
    if last <= d {
        return;
    }
    let mut acc = 0.0;
    let mut i = last - d;
    loop {
        acc += lead[i + d - 1] * trail[i - 1];
        if i <= n_emit {
            emit(i, acc);
        }
        if i == 1 {
            break;
        }
        i -= 1;
    }
}

/// `Γ_φ²` on `1..=N` with inner sums over the symbol up to index
/// `2N − 1 + tail_len`, one suffix pass per diagonal.
pub fn hankel_square(h: &HankelOperator, tail_len: usize) -> Result<HankelSquare> {
    let n = h.logical_dim;
    let last = required_len(n, tail_len);
    if h.symbol.len() < last {
        return Err(Error::SymbolTooShort { required: last, available: h.symbol.len() });
    }
    let sym = &h.symbol;
    let mut m = SymMatrix::zeros(n);
    for d in 0..n {
        diagonal_suffix(sym, sym, d, last, n - d, |j, v| m.set(j - 1 + d, j - 1, v));
    }
    let tail_bound = (h.tail_energy(last + 1) * h.tail_energy((last + 2).saturating_sub(n))).sqrt();
    Ok(HankelSquare { matrix: m, tail_bound, symbol_len_used: last })
}

/// `Γ_a Γ_b` on `1..=N` (not symmetric in general), same truncation as
/// [`hankel_square`].
pub fn hankel_cross(a: &HankelOperator, b: &HankelOperator, tail_len: usize) -> Result<HankelProduct> {
    let n = a.logical_dim;
    if b.logical_dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.logical_dim });
    }
    let last = required_len(n, tail_len);
    for h in [a, b] {
        if h.symbol.len() < last {
            return Err(Error::SymbolTooShort { required: last, available: h.symbol.len() });
        }
    }
    let mut m = Matrix::zeros(n, n);
    for d in 0..n {
        // row ≥ col: Σ a(j+d) b(j)
        diagonal_suffix(&a.symbol, &b.symbol, d, last, n - d, |j, v| m[(j - 1 + d, j - 1)] = v);
        if d > 0 {
            // row < col: Σ a(i) b(i+d)
            diagonal_suffix(&b.symbol, &a.symbol, d, last, n - d, |i, v| m[(i - 1, i - 1 + d)] = v);
        }
    }
    let from = (last + 2).saturating_sub(n);
    let tail_bound = (a.tail_energy(last + 1) * b.tail_energy(from))
        .sqrt()
        .max((b.tail_energy(last + 1) * a.tail_energy(from)).sqrt());
    Ok(HankelProduct { matrix: m, tail_bound, symbol_len_used: last })
}
