//! Legendre polynomials normalised on [-1, 1] and Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// p̃_1(x), ..., p̃_count(x) with p̃_n = √(n - 1/2) P_{n-1}, orthonormal on [-1, 1].
pub fn normalized_legendre(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..count {
        out.push(cur * (k as f64 + 0.5).sqrt());
        // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        let next = ((2 * k + 1) as f64 * x * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    out
}

/// P_n(x) and P_n'(x).
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    let d = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, d)
}

/// Nodes and weights of the `q`-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre(q: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = mid - half * x;
        nodes[q - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[q - 1 - i] = half * w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormality() {
        let (x, w) = gauss_legendre(80, -1.0, 1.0);
        let vals: Vec<Vec<f64>> = x.iter().map(|&t| normalized_legendre(40, t)).collect();
        for i in 0..40 {
            for j in 0..40 {
                let s: f64 = vals.iter().zip(&w).map(|(v, wk)| v[i] * v[j] * wk).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "{i} {j} {s}");
            }
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(t, wk)| t.powi(13) * wk).sum();
        assert!((s - 2f64.powi(14) / 14.0).abs() < 1e-9);
        let (x, w) = gauss_legendre(1100, 0.0, 1.0);
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, wk)| (8.0 * PI * t).cos() * wk)
            .sum();
        assert!(s.abs() < 1e-13);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_values() {
        let v = normalized_legendre(10, 1.0);
        for (k, p) in v.iter().enumerate() {
            assert!((p - (k as f64 + 0.5).sqrt()).abs() < 1e-13);
        }
    }
}
