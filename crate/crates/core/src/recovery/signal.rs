//! The test function f(x) = (1 - cos 8πx)·1_[0,1](x), its Fourier samples,
//! its coefficients in the reconstruction bases, and synthesis on a dyadic
//! grid for L¹ errors.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bases::{frequency_index, WaveletBasisSpec, WaveletKind};
use crate::error::{Error, Result};
use crate::special::{cascade_values, gauss_legendre, normalized_legendre, CascadeValues};

/// Quadrature and synthesis resolution 2^{-GRID_LEVEL}.
pub const GRID_LEVEL: u32 = 15;

pub fn test_function(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        1.0 - (8.0 * PI * x).cos()
    } else {
        0.0
    }
}

/// ∫₀¹ e^{-2πiνx} dx = e^{-πiν} sin(πν)/(πν).
fn unit_interval_ft(nu: f64) -> Complex64 {
    let s = if nu == 0.0 {
        1.0
    } else {
        (PI * nu).sin() / (PI * nu)
    };
    Complex64::cis(-PI * nu) * s
}

/// ⟨f, ρ⟩ for the Fourier element of frequency λ: √ε ∫₀¹ f(x) e^{-2πiελx} dx.
pub fn fourier_sample(epsilon: f64, lambda: i64) -> Complex64 {
    let w = epsilon * lambda as f64;
    let v = unit_interval_ft(w) - 0.5 * (unit_interval_ft(w - 4.0) + unit_interval_ft(w + 4.0));
    v * epsilon.sqrt()
}

/// Samples at frequency-ordered positions 1..=count.
pub fn fourier_samples_of_f(epsilon: f64, count: usize) -> Result<Vec<Complex64>> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("ε = {epsilon} outside (0, 1/2]")));
    }
    (1..=count)
        .map(|m| Ok(fourier_sample(epsilon, frequency_index(m)?)))
        .collect()
}

fn cascade_for(spec: &WaveletBasisSpec) -> Result<CascadeValues> {
    cascade_values(spec.family, GRID_LEVEL)
}

fn max_level(spec: &WaveletBasisSpec, count: usize) -> Result<u32> {
    let level = spec.level_of(count.max(1))?;
    if level > GRID_LEVEL {
        return Err(Error::invalid(format!(
            "level {level} is finer than the 2^-{GRID_LEVEL} grid"
        )));
    }
    Ok(level)
}

/// ⟨f, τ(n)⟩ for leveled positions n = 1..=count, by the trapezoid rule on
/// the 2^{-15} grid against cascade values.
pub fn wavelet_coefficients(spec: &WaveletBasisSpec, count: usize) -> Result<Vec<f64>> {
    max_level(spec, count)?;
    let cv = cascade_for(spec)?;
    let lo = spec.family.support().0;
    let h = (-(GRID_LEVEL as f64)).exp2();
    let samples: Vec<f64> = (0..=1usize << GRID_LEVEL)
        .map(|i| test_function(i as f64 * h))
        .collect();
    (1..=count)
        .into_par_iter()
        .map(|n| {
            let idx = spec.leveled_enumerate(n)?;
            let scale = 1i64 << idx.level;
            let offset = (idx.shift + lo) << GRID_LEVEL;
            let mut acc = 0.0;
            for (i, &fx) in samples.iter().enumerate() {
                if fx == 0.0 {
                    continue;
                }
                let t = i as i64 * scale - offset;
                acc += fx
                    * match idx.kind {
                        WaveletKind::Scaling => cv.phi_at(t),
                        WaveletKind::Wavelet => cv.psi_at(t),
                    };
            }
            // endpoints vanish, so the trapezoid rule is a plain sum
            Ok(acc * h * (scale as f64).sqrt())
        })
        .collect()
}

/// ⟨f, p̃_n⟩ for n = 1..=count by Gauss–Legendre on [0, 1] with count + 64 nodes.
pub fn legendre_coefficients(count: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(count + 64, 0.0, 1.0);
    let mut out = vec![0.0; count];
    for (x, w) in nodes.iter().zip(&weights) {
        let fx = test_function(*x) * w;
        for (o, p) in out.iter_mut().zip(normalized_legendre(count, *x)) {
            *o += fx * p;
        }
    }
    out
}

/// Evaluates expansions Σ x_n τ(n) on the grid x_i = -1 + i·2^{-15}.
pub enum Synthesizer {
    Wavelet {
        spec: WaveletBasisSpec,
        cascade: Box<CascadeValues>,
    },
    Legendre,
}

impl Synthesizer {
    pub fn wavelet(spec: &WaveletBasisSpec) -> Result<Self> {
        Ok(Synthesizer::Wavelet {
            spec: *spec,
            cascade: Box::new(cascade_for(spec)?),
        })
    }

    pub fn grid_len() -> usize {
        (2usize << GRID_LEVEL) + 1
    }

    pub fn abscissa(i: usize) -> f64 {
        -1.0 + i as f64 * (-(GRID_LEVEL as f64)).exp2()
    }

    pub fn synthesize(&self, coef: &[Complex64]) -> Result<Vec<Complex64>> {
        let len = Self::grid_len();
        match self {
            Synthesizer::Legendre => Ok((0..len)
                .into_par_iter()
                .map(|i| {
                    normalized_legendre(coef.len(), Self::abscissa(i))
                        .iter()
                        .zip(coef)
                        .map(|(p, c)| c * p)
                        .sum()
                })
                .collect()),
            Synthesizer::Wavelet { spec, cascade } => {
                max_level(spec, coef.len())?;
                let lo = spec.family.support().0;
                let mut out = vec![Complex64::new(0.0, 0.0); len];
                let support = cascade.phi.len() as i64;
                for (n, c) in coef.iter().enumerate() {
                    if *c == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let idx = spec.leveled_enumerate(n + 1)?;
                    let scale = 1i64 << idx.level;
                    // cascade index = i·2^j - (2^j + k + lo)·2^15
                    let offset = (scale + idx.shift + lo) << GRID_LEVEL;
                    let amp = (scale as f64).sqrt();
                    let first = (offset + scale - 1).div_euclid(scale).max(0);
                    for i in first..len as i64 {
                        let t = i * scale - offset;
                        if t >= support {
                            break;
                        }
                        let v = match idx.kind {
                            WaveletKind::Scaling => cascade.phi_at(t),
                            WaveletKind::Wavelet => cascade.psi_at(t),
                        };
                        out[i as usize] += c * (amp * v);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// ∫_{-1}^{1} |f - g| by the trapezoid rule on the synthesis grid.
pub fn l1_error(values: &[Complex64]) -> Result<f64> {
    if values.len() != Synthesizer::grid_len() {
        return Err(Error::invalid("values are not on the synthesis grid"));
    }
    let h = (-(GRID_LEVEL as f64)).exp2();
    let d: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (Complex64::new(test_function(Synthesizer::abscissa(i)), 0.0) - v).norm())
        .collect();
    let inner: f64 = d[1..d.len() - 1].iter().sum();
    Ok(h * (inner + 0.5 * (d[0] + d[d.len() - 1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature of a complex integrand.
    fn adaptive(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
        fn step(
            f: &dyn Fn(f64) -> Complex64,
            a: f64,
            b: f64,
            fa: Complex64,
            fm: Complex64,
            fb: Complex64,
            whole: Complex64,
            tol: f64,
            depth: u32,
        ) -> Complex64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.norm() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        // start from panels finer than the oscillation so that no symmetry
        // of the integrand makes the first estimates vanish
        let panels = 97;
        let w = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
                let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
                let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
                step(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 50)
            })
            .sum()
    }

    #[test]
    fn closed_form_matches_adaptive_quadrature() {
        for &eps in &[0.5, 0.4776, 0.3] {
            for &lambda in &[0i64, 1, -3, 8, -8, 9, 40, -131, 250] {
                let want = adaptive(
                    &|x| Complex64::cis(-2.0 * PI * eps * lambda as f64 * x) * test_function(x),
                    0.0,
                    1.0,
                    1e-13,
                ) * eps.sqrt();
                let got = fourier_sample(eps, lambda);
                assert!(
                    (got - want).norm() < 1e-10,
                    "ε={eps} λ={lambda}: {got} vs {want}"
                );
            }
        }
        assert!((fourier_sample(0.5, 0) - Complex64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn parseval_and_alignment() {
        let s = fourier_samples_of_f(0.5, 200_001).unwrap();
        let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        assert!((energy - 1.5).abs() < 1e-4, "{energy}");
        // at ε = 1/2 the cosine sits at λ = ±8
        let at = |l: i64| fourier_sample(0.5, l);
        // ελ = ±4 picks up half of the cosine term: √ε·(0 - 1/2·1)
        for l in [8, -8] {
            assert!((at(l) + Complex64::new(0.5f64.sqrt() * 0.5, 0.0)).norm() < 1e-12);
        }
        // other integer frequencies ελ ∈ ℤ vanish
        assert!(at(2).norm() < 1e-15 && at(-6).norm() < 1e-15);
    }

    #[test]
    fn legendre_expansion_reproduces_f() {
        let c = legendre_coefficients(200);
        let energy: f64 = c.iter().map(|v| v * v).sum();
        assert!((energy - 1.5).abs() < 1e-6, "{energy}");
        let z: Vec<Complex64> = c.iter().map(|&v| v.into()).collect();
        let e = l1_error(&Synthesizer::Legendre.synthesize(&z).unwrap()).unwrap();
        assert!(e < 1e-3, "{e}");
    }

    #[test]
    fn haar_expansion_reproduces_f() {
        let spec = WaveletBasisSpec::new(1, 2).unwrap();
        // scaling block and wavelet levels 2..=9
        let count = spec.block_start(WaveletKind::Wavelet, 10) - 1;
        let c = wavelet_coefficients(&spec, count).unwrap();
        let z: Vec<Complex64> = c.iter().map(|&v| v.into()).collect();
        let e = l1_error(&Synthesizer::wavelet(&spec).unwrap().synthesize(&z).unwrap()).unwrap();
        // piecewise-constant approximation at scale 2^-10
        assert!(e < 5e-3, "{e}");
        // Haar coefficients are exact dyadic sums: the first scaling function at level 2
        // on [0, 1/4] has ⟨f, φ⟩ = 2·∫₀^{1/4}(1 - cos 8πx) = 1/2
        let pos = spec
            .leveled_position(&crate::bases::WaveletIndex {
                kind: WaveletKind::Scaling,
                level: 2,
                shift: 0,
            })
            .unwrap();
        assert!((c[pos - 1] - 0.5).abs() < 1e-8, "{}", c[pos - 1]);
    }

    #[test]
    fn db4_expansion_reproduces_f() {
        let spec = WaveletBasisSpec::new(4, 6).unwrap();
        let c = wavelet_coefficients(&spec, 1024).unwrap();
        let z: Vec<Complex64> = c.iter().map(|&v| v.into()).collect();
        let e = l1_error(&Synthesizer::wavelet(&spec).unwrap().synthesize(&z).unwrap()).unwrap();
        assert!(e < 1e-4, "{e}");
    }
}
