use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use parking_lot::RwLock;
use rayon::prelude::*;

use super::{DenseBlock, LineSup};
use crate::bases::{frequency_position, FourierSpec, WaveletBasisSpec, WaveletIndex, WaveletKind};

const SCAN_CHUNK: i64 = 512;
const MAX_LEVELS: u32 = 64;

/// 2^{-j/2} Fθ(ω 2^{-j}) for θ = φ or ψ: the shift-free part of Fθ_{j,k}(ω).
fn level_factor(
    wavelet: &WaveletBasisSpec,
    kind: WaveletKind,
    level: u32,
    omega: f64,
) -> Complex64 {
    let scale = (-(level as f64)).exp2();
    let t = omega * scale;
    let ft = match kind {
        WaveletKind::Scaling => wavelet.family.scaling_ft(t),
        WaveletKind::Wavelet => wavelet.family.wavelet_ft(t),
    };
    ft * scale.sqrt()
}

fn shift_phase(shift: i64, level: u32, omega: f64) -> Complex64 {
    Complex64::cis(-2.0 * PI * shift as f64 * omega * (-(level as f64)).exp2())
}

/// √ε Fτ(ελ) for τ = θ_{j,k}, using Fθ_{j,k}(ω) = e^{-2πikω2^{-j}} 2^{-j/2} Fθ(2^{-j}ω).
pub fn entry_fourier_wavelet(
    fourier: &FourierSpec,
    wavelet: &WaveletBasisSpec,
    lambda: i64,
    idx: &WaveletIndex,
) -> Complex64 {
    let omega = fourier.epsilon * lambda as f64;
    let factor = level_factor(wavelet, idx.kind, idx.level, omega) * fourier.epsilon.sqrt();
    factor * shift_phase(idx.shift, idx.level, omega)
}

/// Rows λ, columns `idx`; the level factor is computed once per (row, level).
pub(super) fn dense_rows(
    fourier: &FourierSpec,
    wavelet: &WaveletBasisSpec,
    lambdas: &[i64],
    idx: &[WaveletIndex],
) -> DenseBlock {
    let mut data = vec![Complex64::new(0.0, 0.0); lambdas.len() * idx.len()];
    if !idx.is_empty() {
        data.par_chunks_mut(idx.len())
            .zip(lambdas)
            .for_each(|(row, &lambda)| {
                let omega = fourier.epsilon * lambda as f64;
                let mut memo: HashMap<(WaveletKind, u32), Complex64> = HashMap::new();
                for (v, i) in row.iter_mut().zip(idx) {
                    let factor = *memo.entry((i.kind, i.level)).or_insert_with(|| {
                        level_factor(wavelet, i.kind, i.level, omega) * fourier.epsilon.sqrt()
                    });
                    *v = factor * shift_phase(i.shift, i.level, omega);
                }
            });
    }
    DenseBlock::new(lambdas.len(), idx.len(), data).expect("shape matches by construction")
}

/// sup over columns of |U_{λ,n}|². Every shift within a level has the same
/// modulus, so the scan runs over levels and stops once ε2^{-j}·sup|Fψ|²
/// drops below best/safety.
pub(super) fn row_sup(
    fourier: &FourierSpec,
    wavelet: &WaveletBasisSpec,
    lambda: i64,
    safety: f64,
) -> LineSup {
    let eps = fourier.epsilon;
    let omega = eps * lambda as f64;
    let j0 = wavelet.coarse_level;
    let psi_sup = wavelet.family.envelope().psi_sup_sq;
    let mut best = LineSup {
        value: eps * level_factor(wavelet, WaveletKind::Scaling, j0, omega).norm_sqr(),
        witness: 1,
        certified: false,
    };
    for level in j0..j0 + MAX_LEVELS {
        if eps * (-(level as f64)).exp2() * psi_sup < best.value / safety {
            best.certified = true;
            break;
        }
        let v = eps * level_factor(wavelet, WaveletKind::Wavelet, level, omega).norm_sqr();
        if v > best.value {
            best.value = v;
            best.witness = wavelet.block_start(WaveletKind::Wavelet, level);
        }
    }
    best
}

/// sup over λ of ε2^{-j}|Fθ(ελ2^{-j})|², scanning λ ≥ 0 (the modulus is even
/// in λ) until K²/λ drops below best/safety, where K² = sup |ω||Fθ(ω)|².
/// The witness is a canonical row position.
pub(super) fn class_sup(
    fourier: &FourierSpec,
    wavelet: &WaveletBasisSpec,
    kind: WaveletKind,
    level: u32,
    safety: f64,
) -> LineSup {
    let eps = fourier.epsilon;
    let env = wavelet.family.envelope();
    let k2 = match kind {
        WaveletKind::Scaling => env.phi_decay_sq,
        WaveletKind::Wavelet => env.psi_decay_sq,
    };
    let value_at =
        |lambda: i64| eps * level_factor(wavelet, kind, level, eps * lambda as f64).norm_sqr();
    let mut best = LineSup {
        value: value_at(0),
        witness: 1,
        certified: false,
    };
    let limit = 1i64 << 40;
    let mut start = 1i64;
    while start < limit {
        let vals: Vec<f64> = (start..start + SCAN_CHUNK)
            .into_par_iter()
            .map(value_at)
            .collect();
        for (i, v) in vals.into_iter().enumerate() {
            if v > best.value {
                best.value = v;
                best.witness = frequency_position(start + i as i64);
            }
        }
        start += SCAN_CHUNK;
        if k2 / start as f64 <= best.value / safety {
            best.certified = true;
            break;
        }
    }
    best
}

/// Column suprema depend only on (kind, level); computed once per class.
#[derive(Debug, Default)]
pub(super) struct ClassCache {
    map: RwLock<HashMap<(WaveletKind, u32, u64), LineSup>>,
}

impl ClassCache {
    pub(super) fn get(
        &self,
        fourier: &FourierSpec,
        wavelet: &WaveletBasisSpec,
        kind: WaveletKind,
        level: u32,
        safety: f64,
    ) -> LineSup {
        let key = (kind, level, safety.to_bits());
        if let Some(s) = self.map.read().get(&key) {
            return *s;
        }
        let s = class_sup(fourier, wavelet, kind, level, safety);
        *self.map.write().entry(key).or_insert(s)
    }
}
