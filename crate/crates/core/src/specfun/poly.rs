/// `p_j(θ)` for `j = 0..=j_max`, from `p_{n+1} + p_{n−1} = θ p_n / (n+1)`,
/// `p₀ = 1`, `p₁ = θ`.
#[derive(Debug, Clone)]
pub struct PolySequence {
    pub theta: f64,
    values: Vec<f64>,
}

impl PolySequence {
    pub fn p(&self, j: usize) -> f64 {
        self.values[j]
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

    /// `max_n |p_{n+1} + p_{n−1} − θ p_n/(n+1)| / max(1, |p_n|)`.
    pub fn recurrence_residual(&self) -> f64 {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .map(|n| {
                (v[n + 1] + v[n - 1] - self.theta / (n + 1) as f64 * v[n]).abs() / v[n].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn poly_sequence(theta: f64, j_max: usize) -> PolySequence {
    let mut values = Vec::with_capacity(j_max + 1);
    values.push(1.0);
    if j_max >= 1 {
        values.push(theta);
    }
    for n in 1..j_max {
        let next = theta / (n + 1) as f64 * values[n] - values[n - 1];
        values.push(next);
    }
    PolySequence { theta, values }
}

/// `p_j(num/den)` in exact rational arithmetic, as reduced `(numerator,
/// denominator)` pairs. `None` once an entry overflows `i128`.
pub fn poly_exact_rational(num: i64, den: i64, j_max: usize) -> Option<Vec<(i128, i128)>> {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    fn reduce(n: i128, d: i128) -> (i128, i128) {
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        (s * n / g, s * d / g)
    }
    if den == 0 {
        return None;
    }
    let theta = reduce(num as i128, den as i128);
    let mut out = vec![(1, 1)];
    if j_max >= 1 {
        out.push(theta);
    }
    for n in 1..j_max {
        let (pn, pd) = out[n];
        let (qn, qd) = out[n - 1];
        // θ p_n / (n+1) − p_{n−1}
        let an = theta.0.checked_mul(pn)?;
        let ad = theta.1.checked_mul(pd)?.checked_mul(n as i128 + 1)?;
        let (an, ad) = reduce(an, ad);
        let num = an.checked_mul(qd)?.checked_sub(qn.checked_mul(ad)?)?;
        out.push(reduce(num, ad.checked_mul(qd)?));
    }
    Some(out)
}

/// Taylor coefficients of `e^{θ·arctan z} / (1 + z²)` up to `z^n`; these
/// are `p_0..p_n`.
pub fn poly_generating_coeffs(theta: f64, n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n + 1]; // θ·arctan z
    for k in 0.. {
        let p = 2 * k + 1;
        if p > n {
            break;
        }
        g[p] = theta * if k % 2 == 0 { 1.0 } else { -1.0 } / p as f64;
    }
    // e = exp(g): e' = g' e
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for m in 1..=n {
        e[m] = (1..=m).map(|k| k as f64 * g[k] * e[m - k]).sum::<f64>() / m as f64;
    }
    (0..=n)
        .map(|m| (0..=m / 2).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * e[m - 2 * k]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_zero_alternates() {
        let p = poly_sequence(0.0, 9);
        assert_eq!(p.values(), &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_rational_recurrence() {
        // Hand values: p_2 = 1/2 − 1, p_3 = (1/3)(−1/2) − 1.
        let exact = poly_exact_rational(1, 1, 12).unwrap();
        assert_eq!(exact[2], (-1, 2));
        assert_eq!(exact[3], (-7, 6));
        let p = poly_sequence(1.0, 12);
        for (j, (n, d)) in exact.iter().enumerate() {
            assert!((p.p(j) - *n as f64 / *d as f64).abs() <= 1e-12, "j={j}");
        }
        let half = poly_exact_rational(-1, 2, 12).unwrap();
        let q = poly_sequence(-0.5, 12);
        for (j, (n, d)) in half.iter().enumerate() {
            assert!((q.p(j) - *n as f64 / *d as f64).abs() <= 1e-12, "j={j}");
        }
    }

    #[test]
    fn generating_function_coefficients() {
        // e^{arctan z}/(1+z²) = 1 + z − z²/2 − 7z³/6 + ...
        let c = poly_generating_coeffs(1.0, 3);
        for (got, want) in c.iter().zip([1.0, 1.0, -0.5, -7.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        for &theta in &[1.0, 0.5, -2.0] {
            let want = poly_generating_coeffs(theta, 12);
            let p = poly_sequence(theta, 12);
            for j in 0..=12 {
                assert!((p.p(j) - want[j]).abs() <= 1e-12, "theta={theta} j={j}");
            }
        }
    }

    #[test]
    fn bounded_with_small_residual() {
        let p = poly_sequence(1.0, 100_000);
        assert!(p.recurrence_residual() <= 1e-12);
        assert!(p.sup_norm() < 3.0);
    }
}
