//! Daubechies scaling functions and wavelets: Fourier transforms from the
//! infinite product of the low-pass symbol, and point values from the
//! cascade (dyadic refinement) algorithm.
//!
//! Conventions: `Ff(ω) = ∫ f(x) e^{-2πiωx} dx`, the filter h_k lives on
//! k = -p+1..=p so that φ and ψ are supported on [-p+1, p], and the high-pass
//! filter is g_k = (-1)^k h_{1-k}.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::filters;
use crate::error::{Error, Result};

/// Residual arguments below this magnitude end the infinite product.
pub const PRODUCT_CUTOFF: f64 = 1.0 / 1_048_576.0;

/// Grid size used by [`band_infimum`].
pub const BAND_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct WaveletFamily {
    p: usize,
}

impl TryFrom<usize> for WaveletFamily {
    type Error = Error;
    fn try_from(p: usize) -> Result<Self> {
        WaveletFamily::daubechies(p)
    }
}

impl From<WaveletFamily> for usize {
    fn from(f: WaveletFamily) -> usize {
        f.p
    }
}

/// Measured envelope constants of |Fφ| and |Fψ|.
#[derive(Debug, Clone, Copy)]
pub struct FourierEnvelope {
    /// sup_ω |Fψ(ω)|²
    pub psi_sup_sq: f64,
    /// sup_ω |ω|·|Fφ(ω)|²
    pub phi_decay_sq: f64,
    /// sup_ω |ω|·|Fψ(ω)|²
    pub psi_decay_sq: f64,
}

impl WaveletFamily {
    /// Daubechies wavelet with `p` vanishing moments, `p` in 1..=10.
    pub fn daubechies(p: usize) -> Result<Self> {
        if filters::taps(p).is_none() {
            return Err(Error::invalid(format!(
                "Daubechies order p must be in 1..=10, got {p}"
            )));
        }
        Ok(WaveletFamily { p })
    }

    pub fn haar() -> Self {
        WaveletFamily { p: 1 }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Low-pass taps h_{-p+1}, ..., h_p.
    pub fn taps(&self) -> &'static [f64] {
        filters::taps(self.p).expect("order validated at construction")
    }

    /// Index of the first tap, -p+1.
    pub fn first_index(&self) -> i64 {
        1 - self.p as i64
    }

    /// Integer support [-p+1, p] shared by φ and ψ.
    pub fn support(&self) -> (i64, i64) {
        (1 - self.p as i64, self.p as i64)
    }

    /// High-pass tap g_k = (-1)^k h_{1-k}.
    pub fn highpass(&self, k: i64) -> f64 {
        let (lo, hi) = self.support();
        let idx = 1 - k;
        if idx < lo || idx > hi {
            return 0.0;
        }
        let h = self.taps()[(idx - lo) as usize];
        if k.rem_euclid(2) == 0 {
            h
        } else {
            -h
        }
    }

    /// First moment ∫ x φ(x) dx = 2^{-1/2} Σ k h_k.
    pub fn first_moment(&self) -> f64 {
        let k0 = self.first_index();
        self.taps()
            .iter()
            .enumerate()
            .map(|(i, h)| (k0 + i as i64) as f64 * h)
            .sum::<f64>()
            / SQRT_2
    }

    /// Low-pass symbol m0(ω) = 2^{-1/2} Σ h_k e^{-2πikω}.
    pub fn m0(&self, omega: f64) -> Complex64 {
        let step = Complex64::cis(-2.0 * PI * omega);
        let mut z = Complex64::cis(-2.0 * PI * omega * self.first_index() as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for &h in self.taps() {
            acc += z * h;
            z *= step;
        }
        acc / SQRT_2
    }

    /// Fφ(ω) = Π_{j≥1} m0(ω 2^{-j}).
    ///
    /// The product stops at the first factor whose argument drops below
    /// [`PRODUCT_CUTOFF`]. The remaining tail Fφ(t), t = 2u, is replaced by its
    /// first-order expansion e^{-2πi t M₁}, which has modulus one.
    pub fn scaling_ft(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut u = 0.5 * omega;
        while u.abs() >= PRODUCT_CUTOFF {
            acc *= self.m0(u);
            u *= 0.5;
        }
        acc * Complex64::cis(-4.0 * PI * u * self.first_moment())
    }

    /// Fψ(ω) = -e^{-πiω} · conj(m0(ω/2 + 1/2)) · Fφ(ω/2).
    pub fn wavelet_ft(&self, omega: f64) -> Complex64 {
        -Complex64::cis(-PI * omega)
            * self.m0(0.5 * omega + 0.5).conj()
            * self.scaling_ft(0.5 * omega)
    }

    /// Envelope constants measured on a dense grid of [0, 256].
    pub fn envelope(&self) -> FourierEnvelope {
        static CACHE: [OnceLock<FourierEnvelope>; 10] = [const { OnceLock::new() }; 10];
        *CACHE[self.p - 1].get_or_init(|| self.measure_envelope())
    }

    fn measure_envelope(&self) -> FourierEnvelope {
        let steps = 256 * 128;
        let mut env = FourierEnvelope {
            psi_sup_sq: 0.0,
            phi_decay_sq: 0.0,
            psi_decay_sq: 0.0,
        };
        for i in 0..=steps {
            let w = i as f64 / 128.0;
            let phi = self.scaling_ft(w).norm_sqr();
            let psi = self.wavelet_ft(w).norm_sqr();
            env.psi_sup_sq = env.psi_sup_sq.max(psi);
            env.phi_decay_sq = env.phi_decay_sq.max(w * phi);
            env.psi_decay_sq = env.psi_decay_sq.max(w * psi);
        }
        // Grid gaps: inflate slightly so the constants bound the true suprema.
        env.psi_sup_sq *= 1.02;
        env.phi_decay_sq *= 1.02;
        env.psi_decay_sq *= 1.02;
        env
    }
}

/// Point values of φ and ψ on the dyadic grid x_i = -p+1 + i·2^{-level}.
#[derive(Debug, Clone)]
pub struct CascadeValues {
    pub family: WaveletFamily,
    pub level: u32,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl CascadeValues {
    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn start(&self) -> f64 {
        self.family.support().0 as f64
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        self.start() + i as f64 * self.step()
    }

    /// φ at grid index `i`, zero outside the support.
    pub fn phi_at(&self, i: i64) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.phi.get(i as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn psi_at(&self, i: i64) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.psi.get(i as usize).copied().unwrap_or(0.0)
        }
    }
}

/// Values of φ at the integers of its support: the eigenvector of
/// T_{ij} = √2 h_{2i-j} for eigenvalue 1, normalised to sum one.
fn integer_values(family: &WaveletFamily) -> Result<Vec<f64>> {
    let (lo, hi) = family.support();
    let n = (hi - lo + 1) as usize;
    let taps = family.taps();
    let tap = |k: i64| -> f64 {
        if k < lo || k > hi {
            0.0
        } else {
            taps[(k - lo) as usize]
        }
    };
    let mut v = vec![0.0; n];
    v[(-lo) as usize] = 1.0;
    for _ in 0..5000 {
        let mut next = vec![0.0; n];
        for (i, out) in next.iter_mut().enumerate() {
            let xi = lo + i as i64;
            *out = (0..n)
                .map(|j| SQRT_2 * tap(2 * xi - (lo + j as i64)) * v[j])
                .sum();
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < 1e-15 {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence(format!(
        "refinement eigenvector for p = {} did not stabilise",
        family.p
    )))
}

/// Cascade algorithm: φ and ψ at all points of the 2^{-level} grid.
pub fn cascade_values(family: WaveletFamily, level: u32) -> Result<CascadeValues> {
    if !(4..=20).contains(&level) {
        return Err(Error::invalid(format!(
            "cascade level must be in 4..=20, got {level}"
        )));
    }
    let (lo, hi) = family.support();
    let scale = 1usize << level;
    let len = (hi - lo) as usize * scale + 1;
    let mut phi = vec![0.0; len];
    for (i, v) in integer_values(&family)?.into_iter().enumerate() {
        phi[i * scale] = v;
    }
    let taps = family.taps();
    // x = lo + i/2^L  =>  2x - k = lo + ((lo - k) 2^L + 2i) / 2^L
    let refine = |i: usize, k: i64| -> i64 { (lo - k) * scale as i64 + 2 * i as i64 };
    for l in 1..=level {
        let stride = 1usize << (level - l);
        let mut i = stride;
        while i < len {
            let mut acc = 0.0;
            for (t, &h) in taps.iter().enumerate() {
                let j = refine(i, lo + t as i64);
                if j >= 0 && (j as usize) < len {
                    acc += h * phi[j as usize];
                }
            }
            phi[i] = SQRT_2 * acc;
            i += 2 * stride;
        }
    }
    let mut psi = vec![0.0; len];
    for (i, out) in psi.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in lo..=hi {
            let j = refine(i, k);
            if j >= 0 && (j as usize) < len {
                acc += family.highpass(k) * phi[j as usize];
            }
        }
        *out = SQRT_2 * acc;
    }
    Ok(CascadeValues {
        family,
        level,
        phi,
        psi,
    })
}

/// L_q = inf |Fψ| over a [`BAND_GRID`]-point grid of [2^{-(q+1)}, 2^{-q}],
/// returned together with the supremum over the same grid.
pub fn band_infimum(family: &WaveletFamily, q: u32) -> (f64, f64) {
    let a = (-(q as f64) - 1.0).exp2();
    let b = 2.0 * a;
    let mut inf = f64::INFINITY;
    let mut sup = 0.0f64;
    for i in 0..BAND_GRID {
        let w = a + (b - a) * i as f64 / (BAND_GRID - 1) as f64;
        let v = family.wavelet_ft(w).norm();
        inf = inf.min(v);
        sup = sup.max(v);
    }
    (inf, sup)
}

/// Smallest q₀ ≤ `q_max` such that every band q in q₀..=q₀+8 has
/// inf/sup above `rel_threshold`, i.e. Fψ has no zero there.
pub fn band_onset(family: &WaveletFamily, q_max: u32, rel_threshold: f64) -> Option<u32> {
    let ok: Vec<bool> = (0..=q_max + 8)
        .map(|q| {
            let (inf, sup) = band_infimum(family, q);
            inf > rel_threshold * sup
        })
        .collect();
    (0..=q_max).find(|&q0| ok[q0 as usize..=q0 as usize + 8].iter().all(|&b| b))
}
