//! Spherical Bessel functions j_n and half-integer Bessel functions J_{n+1/2}.
//!
//! Both use Miller's downward recurrence, which is stable for the minimal
//! solution. They differ in normalisation: j_n is pinned to the closed forms
//! of j_0 / j_1, while J_{n+1/2} uses the sum rule Σ_k (k+1/2) J²_{k+1/2}(x) = x/π,
//! so each serves as an independent check of the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESCALE_ABOVE: f64 = 1e120;
const RESCALE_BY: f64 = 1e-120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselEvalConfig {
    /// Below this |x| the power series is used.
    pub series_threshold: f64,
    /// Extra orders above max(n, x) where the recurrence starts.
    pub start_base: f64,
    pub start_sqrt_factor: f64,
}

impl Default for BesselEvalConfig {
    fn default() -> Self {
        BesselEvalConfig {
            series_threshold: 0.5,
            start_base: 10.0,
            start_sqrt_factor: 2.0,
        }
    }
}

impl BesselEvalConfig {
    fn start_order(&self, nmax: usize, x: f64) -> usize {
        let m = (nmax as f64).max(x.ceil());
        m as usize + (self.start_base + self.start_sqrt_factor * m.sqrt()).ceil() as usize
    }
}

fn series(nmax: usize, x: f64) -> Vec<f64> {
    // j_n(x) = x^n/(2n+1)!! Σ_m (-x²/2)^m / (m! (2n+3)(2n+5)...(2n+2m+1))
    let mut out = Vec::with_capacity(nmax + 1);
    let mut lead = 1.0;
    for n in 0..=nmax {
        if n > 0 {
            lead *= x / (2 * n + 1) as f64;
        }
        let mut term = lead;
        let mut sum = lead;
        for m in 1..40 {
            term *= -0.5 * x * x / (m as f64 * (2 * n + 2 * m + 1) as f64);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        out.push(sum);
    }
    out
}

/// Unnormalised downward recurrence f_{k-1} = (2k+1)/x f_k - f_{k+1} from
/// `start`, storing orders 0..=nmax. Returns the values and Σ (k+1/2) f_k²
/// over all orders visited, both in the same (arbitrary) scale.
fn downward(nmax: usize, x: f64, start: usize) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; nmax + 1];
    let mut top = nmax;
    let mut next = 0.0;
    let mut cur = 1e-100;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        sum += (k as f64 + 0.5) * cur * cur;
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            sum *= RESCALE_BY * RESCALE_BY;
            if k <= nmax {
                while top >= k && out[top] == 0.0 {
                    top -= 1;
                }
                for v in &mut out[k..=top.max(k)] {
                    *v *= RESCALE_BY;
                }
            }
        }
    }
    out[0] = cur;
    sum += 0.5 * cur * cur;
    (out, sum)
}

/// j_0(x), ..., j_nmax(x) for real x.
pub fn spherical_bessel_all(nmax: usize, x: f64, cfg: &BesselEvalConfig) -> Vec<f64> {
    let ax = x.abs();
    let mut out = if ax < cfg.series_threshold {
        series(nmax, ax)
    } else {
        let (mut v, _) = downward(nmax.max(1), ax, cfg.start_order(nmax.max(1), ax));
        let j0 = ax.sin() / ax;
        let j1 = ax.sin() / (ax * ax) - ax.cos() / ax;
        let scale = if j0.abs() >= j1.abs() {
            j0 / v[0]
        } else {
            j1 / v[1]
        };
        v.iter_mut().for_each(|t| *t *= scale);
        v.truncate(nmax + 1);
        v
    };
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Spherical Bessel function j_n(x), with j_n(-x) = (-1)^n j_n(x).
pub fn spherical_bessel(n: usize, x: f64) -> f64 {
    spherical_bessel_all(n, x, &BesselEvalConfig::default())[n]
}

/// J_{n+1/2}(x) for x > 0, normalised through the sum rule.
pub fn bessel_half(n: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "bessel_half",
            detail: format!("x must be positive and finite, got {x}"),
        });
    }
    let cfg = BesselEvalConfig::default();
    if x < cfg.series_threshold {
        // J_ν(x) = Σ_m (-x²/4)^m (x/2)^ν / (m! Γ(m+ν+1)), ν = n + 1/2
        let mut lead = (0.5 * x).sqrt() / (0.5 * std::f64::consts::PI.sqrt());
        for k in 1..=n {
            lead *= 0.5 * x / (k as f64 + 0.5);
        }
        let nu = n as f64 + 0.5;
        let mut term = lead;
        let mut sum = lead;
        for m in 1..40 {
            term *= -0.25 * x * x / (m as f64 * (m as f64 + nu));
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum);
    }
    let (v, norm) = downward(n.max(1), x, cfg.start_order(n.max(1), x));
    // Σ (k+1/2) J²_{k+1/2}(x) = x/π
    let scale = (x / std::f64::consts::PI / norm).sqrt();
    // The sum rule fixes the scale up to sign; take the sign from the larger
    // of J_{1/2} ∝ sin x and J_{3/2} ∝ sin x / x - cos x.
    let (s0, s1) = (x.sin(), x.sin() / x - x.cos());
    let reference = if s0.abs() >= s1.abs() {
        s0 * v[0]
    } else {
        s1 * v[1]
    };
    let sign = if reference >= 0.0 { 1.0 } else { -1.0 };
    Ok(sign * scale * v[n])
}

/// j_n'(x) = j_{n-1}(x) - (n+1)/x j_n(x).
fn derivative(n: usize, x: f64) -> f64 {
    let v = spherical_bessel_all(n, x, &BesselEvalConfig::default());
    v[n - 1] - (n + 1) as f64 / x * v[n]
}

/// First positive stationary point a'_{n,1} of j_n, n in 1..=10⁴.
///
/// Scans [n+1/2, n+3n^{1/3}+3] for the first sign change of j_n' and bisects
/// it to 1e-10.
pub fn first_stationary_point(n: usize) -> Result<f64> {
    if !(1..=10_000).contains(&n) {
        return Err(Error::invalid(format!(
            "stationary point order must be in 1..=10000, got {n}"
        )));
    }
    let nf = n as f64;
    let lo = nf + 0.5;
    let hi = nf + 3.0 * nf.cbrt() + 3.0;
    let steps = 256;
    let mut a = lo;
    if derivative(n, a) <= 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    for i in 1..=steps {
        let b = lo + (hi - lo) * i as f64 / steps as f64;
        let fb = derivative(n, b);
        if fb <= 0.0 {
            let (mut l, mut r) = (a, b);
            while r - l > 1e-10 {
                let mid = 0.5 * (l + r);
                if derivative(n, mid) > 0.0 {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            return Ok(0.5 * (l + r));
        }
        a = b;
    }
    Err(Error::NoSignChange { lo, hi })
}

/// sup_x |j_n(x)|, attained at the first stationary point.
pub fn spherical_bessel_sup(n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let a = first_stationary_point(n)?;
    Ok(spherical_bessel(n, a).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Power series with exact rational coefficients accumulated in f64,
    /// valid (to ~1e-13 relative) for moderate x.
    fn series_oracle(n: usize, x: f64) -> f64 {
        // Σ (-1)^m 2^{n+1} (n+m+1)! x^{n+2m} / (m! (2(n+m+1))!)
        // built by term ratios to avoid factorial overflow.
        let mut term = {
            // m = 0: 2^{n+1} (n+1)! x^n / (2n+2)! = x^n / (2n+1)!!
            let mut t = 1.0;
            for k in 1..=n {
                t *= x / (2 * k + 1) as f64;
            }
            t
        };
        let mut sum = term;
        for m in 1..200 {
            let nm = (n + m) as f64;
            // t_m / t_{m-1} = -x² (n+m+1) / (m (2n+2m+1)(2n+2m+2))
            term *= -x * x * (nm + 1.0) / (m as f64 * (2.0 * nm + 1.0) * (2.0 * nm + 2.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && m > 2 {
                break;
            }
        }
        sum
    }

    #[test]
    fn closed_forms() {
        for &x in &[0.1, 0.7, 1.3, 2.0, 5.5, 17.0, 80.0] {
            let v = spherical_bessel_all(2, x, &BesselEvalConfig::default());
            let j0 = x.sin() / x;
            let j1 = x.sin() / (x * x) - x.cos() / x;
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert!((v[0] - j0).abs() < 1e-13);
            assert!((v[1] - j1).abs() < 1e-13);
            assert!((v[2] - j2).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(spherical_bessel(0, 0.0), 1.0);
        for n in 1..6 {
            assert_eq!(spherical_bessel(n, 0.0), 0.0);
        }
    }

    #[test]
    fn agrees_with_series_oracle() {
        for n in [0usize, 1, 3, 7, 15, 30] {
            for &x in &[0.3, 0.6, 1.5, 4.0, 9.0] {
                let a = spherical_bessel(n, x);
                let b = series_oracle(n, x);
                assert!(
                    (a - b).abs() <= 1e-11 * b.abs().max(1e-300) + 1e-300,
                    "n={n} x={x} {a} {b}"
                );
            }
        }
    }

    #[test]
    fn parity() {
        for n in 0..8 {
            let a = spherical_bessel(n, 3.7);
            let b = spherical_bessel(n, -3.7);
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(a, s * b);
        }
    }

    #[test]
    fn half_integer_relation() {
        for n in [0usize, 1, 2, 5, 20, 100, 400] {
            for &x in &[0.2, 0.9, 3.0, 12.5, 60.0, 333.3, 1500.0] {
                let j = spherical_bessel(n, x);
                let big_j = bessel_half(n, x).unwrap();
                let want = (2.0 * x / std::f64::consts::PI).sqrt() * j;
                assert!(
                    (big_j - want).abs() <= 1e-10 * want.abs() + 1e-290,
                    "n={n} x={x} {big_j} {want}"
                );
            }
        }
    }

    #[test]
    fn bessel_half_domain() {
        assert!(bessel_half(3, 0.0).is_err());
        assert!(bessel_half(3, -1.0).is_err());
    }

    #[test]
    fn large_order_underflows_gracefully() {
        let v = spherical_bessel_all(5000, 2.0, &BesselEvalConfig::default());
        assert!(v.iter().all(|t| t.is_finite()));
        assert_eq!(v[5000], 0.0);
        assert!((v[0] - 2.0f64.sin() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_point_of_j1() {
        // tan x = 2x/(2 - x²) at the first maximum of j_1
        let a = first_stationary_point(1).unwrap();
        let residual = a.tan() - 2.0 * a / (2.0 - a * a);
        assert!(residual.abs() < 1e-8);
        assert!((a - 2.081_575_977_818_1).abs() < 1e-9);
        assert!((spherical_bessel(1, a) - 0.436_182_2).abs() < 1e-6);
    }

    #[test]
    fn stationary_point_is_the_global_sup() {
        for n in [1usize, 4, 10, 50] {
            let a = first_stationary_point(n).unwrap();
            let peak = spherical_bessel(n, a).abs();
            let grid = (1..40_000)
                .map(|i| spherical_bessel(n, i as f64 * 0.005 * (n as f64 + 5.0) / 10.0).abs())
                .fold(0.0, f64::max);
            assert!(peak >= grid - 1e-9, "n={n}");
            assert!(peak - grid < 1e-6);
        }
    }

    #[test]
    fn stationary_point_rejects_bad_orders() {
        assert!(first_stationary_point(0).is_err());
        assert!(first_stationary_point(10_001).is_err());
    }

    #[test]
    fn scaled_peak_increases_towards_its_limit() {
        let ns = [1usize, 5, 10, 50, 100, 200];
        let g: Vec<f64> = ns
            .iter()
            .map(|&n| (n as f64 + 0.5).powf(5.0 / 6.0) * spherical_bessel_sup(n).unwrap())
            .collect();
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(g.iter().all(|&v| v > 0.5 && v < 1.0));
    }

    proptest! {
        #[test]
        fn satisfies_bessel_ode(n in 0usize..40, x in 0.6f64..60.0) {
            // x² j'' + 2x j' + (x² - n(n+1)) j = 0 with j', j'' from the recurrences
            let v = spherical_bessel_all(n + 2, x, &BesselEvalConfig::default());
            let d = |k: usize| -> f64 {
                // j_k' = k/x j_k - j_{k+1}
                k as f64 / x * v[k] - v[k + 1]
            };
            let jn = v[n];
            let dn = d(n);
            // j_n'' = d/dx (n/x j_n - j_{n+1}) = -n/x² j_n + n/x j_n' - j_{n+1}'
            let d_next = (n + 1) as f64 / x * v[n + 1] - v[n + 2];
            let ddn = -(n as f64) / (x * x) * jn + n as f64 / x * dn - d_next;
            let lhs = x * x * ddn + 2.0 * x * dn + (x * x - (n * (n + 1)) as f64) * jn;
            let scale = x * x * (jn.abs() + dn.abs() + ddn.abs()) + 1e-300;
            prop_assert!(lhs.abs() <= 1e-10 * scale.max(1.0), "lhs={lhs}");
        }

        #[test]
        fn bounded_by_one(n in 0usize..200, x in -500.0f64..500.0) {
            prop_assert!(spherical_bessel(n, x).abs() <= 1.0 + 1e-12);
        }
    }
}
