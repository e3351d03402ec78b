//! Sampling and reconstruction bases and their orderings.
//!
//! Positions are 1-based throughout. Each basis has a canonical enumeration
//! (frequency ordering for Fourier, leveled ordering for wavelets, natural
//! ordering for Legendre polynomials); an [`OrderingRule`] may permute a finite
//! prefix of it and keep the identity on the tail.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::WaveletFamily;

/// Frequency λ of the m-th element under the frequency ordering:
/// 1 ↦ 0, 2n ↦ n, 2n+1 ↦ -n.
pub fn frequency_index(m: usize) -> Result<i64> {
    if m == 0 {
        return Err(Error::invalid("positions start at 1"));
    }
    let n = (m / 2) as i64;
    Ok(if m.is_multiple_of(2) { n } else { -n })
}

/// Inverse of [`frequency_index`].
pub fn frequency_position(lambda: i64) -> usize {
    if lambda > 0 {
        2 * lambda as usize
    } else {
        2 * (-lambda) as usize + 1
    }
}

/// Fourier basis χ_k(x) = √ε e^{2πiεkx} 1_{[-1/(2ε), 1/(2ε)]}(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    pub epsilon: f64,
}

impl FourierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(FourierSpec { epsilon })
    }

    /// Half-width 1/(2ε) of the sampling interval.
    pub fn half_width(&self) -> f64 {
        0.5 / self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletKind {
    Scaling,
    Wavelet,
}

/// φ_{J,k} or ψ_{j,k}(x) = 2^{j/2} ψ(2^j x - k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub kind: WaveletKind,
    pub level: u32,
    pub shift: i64,
}

/// Standard wavelet basis: the functions of {φ_{J,k}} ∪ {ψ_{j,k} : j ≥ J}
/// whose support meets (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletBasisSpec {
    pub family: WaveletFamily,
    pub coarse_level: u32,
}

impl WaveletBasisSpec {
    pub fn new(p: usize, coarse_level: u32) -> Result<Self> {
        let family = WaveletFamily::daubechies(p)?;
        let min_level = (p as f64).log2().ceil() as u32;
        if coarse_level < min_level {
            return Err(Error::invalid(format!(
                "coarse level J = {coarse_level} must be at least ceil(log2 p) = {min_level}"
            )));
        }
        if coarse_level > 40 {
            return Err(Error::invalid("coarse level J must be at most 40"));
        }
        Ok(WaveletBasisSpec {
            family,
            coarse_level,
        })
    }

    /// a = 2p - 1, the length of the support.
    pub fn support_length(&self) -> usize {
        2 * self.family.order() - 1
    }

    /// Number of functions at a level: 2^{j+1} + a - 1.
    pub fn level_size(&self, level: u32) -> usize {
        (1usize << (level + 1)) + self.support_length() - 1
    }

    /// Smallest shift k whose support meets (-1, 1) at this level.
    pub fn first_shift(&self, level: u32) -> i64 {
        -(1i64 << level) - self.family.order() as i64 + 1
    }

    /// Right end of the admissible interval I_{J,p} = (0, (2 + 2^{1-J}(p-1))^{-1}].
    pub fn epsilon_bound(&self) -> f64 {
        let p = self.family.order() as f64;
        1.0 / (2.0 + (1.0 - self.coarse_level as f64).exp2() * (p - 1.0))
    }

    pub fn validate_epsilon(&self, epsilon: f64) -> Result<()> {
        let bound = self.epsilon_bound();
        if epsilon > 0.0 && epsilon <= bound * (1.0 + 1e-15) {
            Ok(())
        } else {
            Err(Error::EpsilonOutOfRange { epsilon, bound })
        }
    }

    /// Position where the level block starts (1-based); the scaling block starts at 1.
    pub fn block_start(&self, kind: WaveletKind, level: u32) -> usize {
        let j0 = self.coarse_level;
        match kind {
            WaveletKind::Scaling => 1,
            WaveletKind::Wavelet => {
                let mut start = 1 + self.level_size(j0);
                for j in j0..level {
                    start += self.level_size(j);
                }
                start
            }
        }
    }

    /// Leveled enumeration: scaling block, then wavelet levels J, J+1, ...,
    /// shifts ascending within each block.
    pub fn leveled_enumerate(&self, n: usize) -> Result<WaveletIndex> {
        if n == 0 {
            return Err(Error::invalid("positions start at 1"));
        }
        let j0 = self.coarse_level;
        let scaling = self.level_size(j0);
        if n <= scaling {
            return Ok(WaveletIndex {
                kind: WaveletKind::Scaling,
                level: j0,
                shift: self.first_shift(j0) + (n - 1) as i64,
            });
        }
        let mut rest = n - scaling;
        let mut j = j0;
        loop {
            let size = self.level_size(j);
            if rest <= size {
                return Ok(WaveletIndex {
                    kind: WaveletKind::Wavelet,
                    level: j,
                    shift: self.first_shift(j) + (rest - 1) as i64,
                });
            }
            rest -= size;
            j += 1;
        }
    }

    /// Inverse of [`Self::leveled_enumerate`].
    pub fn leveled_position(&self, idx: &WaveletIndex) -> Result<usize> {
        let first = self.first_shift(idx.level);
        let offset = idx.shift - first;
        let valid_level = match idx.kind {
            WaveletKind::Scaling => idx.level == self.coarse_level,
            WaveletKind::Wavelet => idx.level >= self.coarse_level,
        };
        if !valid_level || offset < 0 || offset as usize >= self.level_size(idx.level) {
            return Err(Error::invalid(format!("{idx:?} is not in the basis")));
        }
        Ok(self.block_start(idx.kind, idx.level) + offset as usize)
    }

    /// Wavelet level of position n: J for the scaling block.
    pub fn level_of(&self, n: usize) -> Result<u32> {
        Ok(self.leveled_enumerate(n)?.level)
    }
}

/// Ordering of a basis relative to its canonical enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum OrderingRule {
    /// The canonical enumeration (frequency, leveled or natural ordering).
    #[default]
    Canonical,
    /// Position m ≤ P maps to canonical index prefix[m-1]; identity after P.
    Permutation { prefix: Vec<usize> },
}

impl OrderingRule {
    pub fn permutation(prefix: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; prefix.len()];
        for &v in &prefix {
            if v == 0 || v > prefix.len() || seen[v - 1] {
                return Err(Error::invalid(
                    "ordering prefix must be a permutation of 1..=P",
                ));
            }
            seen[v - 1] = true;
        }
        Ok(OrderingRule::Permutation { prefix })
    }

    /// First `len` canonical elements in reverse, then the identity.
    pub fn reversed_prefix(len: usize) -> Self {
        OrderingRule::Permutation {
            prefix: (1..=len).rev().collect(),
        }
    }

    /// Uniformly random permutation of the first `len` elements.
    pub fn random_prefix(len: usize, seed: u64) -> Self {
        let mut prefix: Vec<usize> = (1..=len).collect();
        prefix.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        OrderingRule::Permutation { prefix }
    }

    /// Length of the permuted prefix (0 for the canonical ordering).
    pub fn prefix_len(&self) -> usize {
        match self {
            OrderingRule::Canonical => 0,
            OrderingRule::Permutation { prefix } => prefix.len(),
        }
    }

    /// Canonical index at position m.
    pub fn canonical(&self, m: usize) -> usize {
        match self {
            OrderingRule::Permutation { prefix } if m >= 1 && m <= prefix.len() => prefix[m - 1],
            _ => m,
        }
    }

    /// Inverse map from canonical indices to positions.
    pub fn inverse(&self) -> OrderingInverse {
        match self {
            OrderingRule::Canonical => OrderingInverse {
                map: HashMap::new(),
            },
            OrderingRule::Permutation { prefix } => OrderingInverse {
                map: prefix
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, i + 1))
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderingInverse {
    map: HashMap<usize, usize>,
}

impl OrderingInverse {
    pub fn position(&self, canonical: usize) -> usize {
        self.map.get(&canonical).copied().unwrap_or(canonical)
    }
}

/// An ordering is consistent with a level function F when F(f) < F(g) forces
/// f before g; on a prefix this means F is non-decreasing along it.
pub fn is_consistent<T>(prefix: &[T], level: impl Fn(&T) -> f64) -> bool {
    prefix.windows(2).all(|w| level(&w[0]) <= level(&w[1]))
}

/// Basis description as found in JSON configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum BasisConfig {
    Fourier {
        /// Omitted: the right end of the admissible interval of the paired
        /// wavelet basis (or 1/2 for Legendre).
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        ordering: OrderingConfig,
    },
    Daubechies {
        p: usize,
        #[serde(rename = "J")]
        coarse_level: u32,
        #[serde(default)]
        ordering: OrderingConfig,
    },
    Legendre {
        #[serde(default)]
        ordering: OrderingConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderingConfig {
    #[default]
    Frequency,
    Leveled,
    Natural,
    Permutation {
        prefix: Vec<usize>,
    },
    ReversedPrefix {
        length: usize,
    },
    RandomPrefix {
        length: usize,
        seed: u64,
    },
}

impl OrderingConfig {
    pub fn to_rule(&self) -> Result<OrderingRule> {
        Ok(match self {
            OrderingConfig::Frequency | OrderingConfig::Leveled | OrderingConfig::Natural => {
                OrderingRule::Canonical
            }
            OrderingConfig::Permutation { prefix } => OrderingRule::permutation(prefix.clone())?,
            OrderingConfig::ReversedPrefix { length } => OrderingRule::reversed_prefix(*length),
            OrderingConfig::RandomPrefix { length, seed } => {
                OrderingRule::random_prefix(*length, *seed)
            }
        })
    }
}
