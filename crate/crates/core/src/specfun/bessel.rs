use crate::error::{Error, Result};

/// `J_n(2√θ)` for `n = 0..len`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub theta: f64,
    values: Vec<f64>,
    /// Index the backward recurrence was started from.
    pub start_index: usize,
}

impl BesselTable {
    /// `J_n(2√θ)`; zero beyond the table (the table always runs past the
    /// point where the sequence has underflowed relative to `J_0`).
    pub fn j(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `J₀² + 2 Σ_{m≥1} J_m²`, equal to one.
    pub fn normalization(&self) -> f64 {
        let tail: f64 = self.values[1..].iter().rev().map(|v| v * v).sum();
        self.values[0] * self.values[0] + 2.0 * tail
    }

    /// `max_n |J_{n+1} + J_{n−1} − (n/√θ) J_n| / max(|J_{n−1}|, |J_n|, |J_{n+1}|)`.
    pub fn recurrence_residual(&self) -> f64 {
        let z = self.theta.sqrt();
        let mut worst = 0.0f64;
        for n in 1..self.values.len() - 1 {
            let (a, b, c) = (self.values[n - 1], self.values[n], self.values[n + 1]);
            let scale = a.abs().max(b.abs()).max(c.abs());
            if scale == 0.0 {
                continue;
            }
            worst = worst.max((c + a - (n as f64 / z) * b).abs() / scale);
        }
        worst
    }
}

/// Smallest `n ≥ x` with `(x/2)^n / n! < 1e−20`, a safe upper estimate of
/// where `J_n(x)` has fallen below double precision relative to unity.
fn underflow_order(x: f64) -> usize {
    let mut n = x.ceil() as usize;
    loop {
        let log_term = n as f64 * (0.5 * x).ln() - ln_factorial(n);
        if log_term < -46.0 {
            return n;
        }
        n += 1;
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Miller's backward recurrence for `J_n(2√θ)`, normalized by
/// `J₀² + 2ΣJ_m² = 1` with the sign taken from `J₀ + 2ΣJ_{2k} = 1`.
pub fn bessel_table(theta: f64, n_max: usize) -> Result<BesselTable> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let x = 2.0 * theta.sqrt();
    let n_eff = n_max.max(underflow_order(x));
    let margin = 20usize.max((4.0 * theta.sqrt()).ceil() as usize);
    let start = n_eff + margin;

    let mut f = vec![0.0f64; start + 2];
    f[start] = 1.0;
    for n in (1..=start).rev() {
        f[n - 1] = (2.0 * n as f64 / x) * f[n] - f[n + 1];
        if f[n - 1].abs() > 1e100 {
            for v in &mut f[n - 1..] {
                *v *= 1e-100;
            }
        }
    }
    let sq: f64 = f[1..=start].iter().rev().map(|v| v * v).sum::<f64>() * 2.0 + f[0] * f[0];
    let even: f64 = f[0] + 2.0 * f[2..=start].iter().step_by(2).rev().sum::<f64>();
    let scale = even.signum() / sq.sqrt();
    let values: Vec<f64> = f[..=n_eff].iter().map(|v| v * scale).collect();
    Ok(BesselTable { theta, values, start_index: start })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Σ (−1)^k (x/2)^{n+2k} / (k! (n+k)!)
    fn series_j(n: usize, x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = h.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 1..200 {
            term *= -h * h / (k as f64 * (n + k) as f64);
            sum += term;
            if term.abs() < 1e-30 * sum.abs() {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_ascending_series() {
        for &theta in &[0.25, 1.0, 4.0] {
            let t = bessel_table(theta, 30).unwrap();
            let x = 2.0 * f64::sqrt(theta);
            for n in 0..=20 {
                let want = series_j(n, x);
                let rel = (t.j(n) - want).abs() / want.abs();
                assert!(rel <= 1e-12, "theta={theta} n={n} rel={rel}");
            }
        }
        let t = bessel_table(1.0, 2).unwrap();
        assert!((t.j(0) - 0.223_890_779_141_235_67).abs() < 1e-15);
        assert!((t.j(1) - 0.576_724_807_756_873_4).abs() < 1e-15);
    }

    #[test]
    fn normalization_identity() {
        for &theta in &[0.25, 1.0, 4.0] {
            let t = bessel_table(theta, 5).unwrap();
            assert!((t.normalization() - 1.0).abs() <= 1e-12, "{}", t.normalization());
            assert!(t.recurrence_residual() <= 1e-12);
        }
    }

    #[test]
    fn small_argument_limit() {
        let t = bessel_table(1e-30, 10).unwrap();
        assert!((t.j(0) - 1.0).abs() < 1e-15);
        for n in 1..=10 {
            assert!(t.j(n).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_tail_bound() {
        for &theta in &[0.25, 1.0, 4.0, 16.0] {
            let t = bessel_table(theta, 10).unwrap();
            let lhs: f64 = (1..t.len() - 1).map(|n| n as f64 * t.j(n + 1).powi(2)).sum();
            let rhs: f64 = 4.0 * theta * (1..t.len()).map(|n| t.j(n).powi(2)).sum::<f64>();
            assert!(lhs.is_finite() && lhs < rhs, "theta={theta}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_nonpositive_theta() {
        assert!(bessel_table(0.0, 5).is_err());
        assert!(bessel_table(-1.0, 5).is_err());
    }

    #[test]
    fn deterministic() {
        let a = bessel_table(2.5, 40).unwrap();
        let b = bessel_table(2.5, 40).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
