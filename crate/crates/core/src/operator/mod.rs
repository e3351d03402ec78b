//! Change-of-basis operators U_{m,n} = ⟨τ(n), ρ(m)⟩ between the Fourier
//! sampling basis ρ and a wavelet or Legendre reconstruction basis τ.
//!
//! Entries come from closed forms in the Fourier domain:
//! U_{m,n} = √ε Fτ(n)(ελ(m)). Line suprema over the infinite index sets are
//! found by scanning until a decay envelope falls below the running maximum
//! divided by a safety factor.

mod cache;
mod dense;
mod legendre;
mod wavelet;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::BlockCache;
pub use dense::DenseBlock;
pub use legendre::{entry_fourier_legendre, entry_fourier_legendre_bessel};
pub use wavelet::entry_fourier_wavelet;

use crate::bases::{
    frequency_index, frequency_position, BasisConfig, FourierSpec, OrderingInverse, OrderingRule,
    WaveletBasisSpec, WaveletKind,
};
use crate::error::{Error, Result};

/// Default byte budget of the dense-block cache and of a single block.
pub const DEFAULT_BLOCK_BUDGET: usize = 1 << 30;

/// The pair of bases behind an operator.
#[derive(Debug, Clone)]
pub enum Pair {
    FourierWavelet {
        fourier: FourierSpec,
        wavelet: WaveletBasisSpec,
    },
    FourierLegendre {
        fourier: FourierSpec,
    },
    /// A finite matrix; lines end at its edges.
    Dense(Arc<DenseBlock>),
}

/// Supremum of |U|² along one row or column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSup {
    pub value: f64,
    /// Position (1-based, in the opposite ordering) where the supremum is attained.
    pub witness: usize,
    /// False when the scan stopped before its envelope fell below value/safety.
    pub certified: bool,
}

/// Lazy change-of-basis matrix with orderings on both sides.
#[derive(Debug)]
pub struct OperatorHandle {
    pair: Pair,
    left: OrderingRule,
    right: OrderingRule,
    left_inv: OrderingInverse,
    right_inv: OrderingInverse,
    cache: BlockCache,
    column_classes: wavelet::ClassCache,
}

impl OperatorHandle {
    pub fn new(pair: Pair, left: OrderingRule, right: OrderingRule) -> Result<Self> {
        match &pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                wavelet.validate_epsilon(fourier.epsilon)?
            }
            Pair::FourierLegendre { fourier } => {
                if fourier.epsilon > 0.5 {
                    return Err(Error::EpsilonOutOfRange {
                        epsilon: fourier.epsilon,
                        bound: 0.5,
                    });
                }
            }
            Pair::Dense(b) => {
                if b.rows() == 0 || b.cols() == 0 {
                    return Err(Error::Empty);
                }
            }
        }
        Ok(OperatorHandle {
            left_inv: left.inverse(),
            right_inv: right.inverse(),
            pair,
            left,
            right,
            cache: BlockCache::new(DEFAULT_BLOCK_BUDGET),
            column_classes: wavelet::ClassCache::default(),
        })
    }

    /// Fourier-wavelet operator with canonical orderings on both sides.
    pub fn fourier_wavelet(epsilon: f64, p: usize, coarse_level: u32) -> Result<Self> {
        let wavelet = WaveletBasisSpec::new(p, coarse_level)?;
        Self::new(
            Pair::FourierWavelet {
                fourier: FourierSpec::new(epsilon)?,
                wavelet,
            },
            OrderingRule::Canonical,
            OrderingRule::Canonical,
        )
    }

    /// Fourier-wavelet operator with ε at the right end of I_{J,p}.
    pub fn fourier_wavelet_endpoint(p: usize, coarse_level: u32) -> Result<Self> {
        let eps = WaveletBasisSpec::new(p, coarse_level)?.epsilon_bound();
        Self::fourier_wavelet(eps, p, coarse_level)
    }

    pub fn fourier_legendre(epsilon: f64) -> Result<Self> {
        Self::new(
            Pair::FourierLegendre {
                fourier: FourierSpec::new(epsilon)?,
            },
            OrderingRule::Canonical,
            OrderingRule::Canonical,
        )
    }

    pub fn dense(block: DenseBlock) -> Result<Self> {
        Self::new(
            Pair::Dense(Arc::new(block)),
            OrderingRule::Canonical,
            OrderingRule::Canonical,
        )
    }

    /// Build from a pair of basis configurations (sampling side first).
    pub fn from_config(left: &BasisConfig, right: &BasisConfig) -> Result<Self> {
        let BasisConfig::Fourier { epsilon, ordering } = left else {
            return Err(Error::invalid(
                "the sampling basis must be the Fourier basis",
            ));
        };
        let left_rule = ordering.to_rule()?;
        match right {
            BasisConfig::Daubechies {
                p,
                coarse_level,
                ordering: r,
            } => {
                let wavelet = WaveletBasisSpec::new(*p, *coarse_level)?;
                let eps = epsilon.unwrap_or_else(|| wavelet.epsilon_bound());
                Self::new(
                    Pair::FourierWavelet {
                        fourier: FourierSpec::new(eps)?,
                        wavelet,
                    },
                    left_rule,
                    r.to_rule()?,
                )
            }
            BasisConfig::Legendre { ordering: r } => Self::new(
                Pair::FourierLegendre {
                    fourier: FourierSpec::new(epsilon.unwrap_or(0.5))?,
                },
                left_rule,
                r.to_rule()?,
            ),
            BasisConfig::Fourier { .. } => Err(Error::invalid(
                "the reconstruction basis cannot be the Fourier basis",
            )),
        }
    }

    /// Replace the block cache with an empty one holding at most `bytes`.
    pub fn with_block_budget(mut self, bytes: usize) -> Self {
        self.cache = BlockCache::new(bytes);
        self
    }

    /// Same bases, different orderings.
    pub fn with_orderings(&self, left: OrderingRule, right: OrderingRule) -> Result<Self> {
        Self::new(self.pair.clone(), left, right)
    }

    pub fn pair(&self) -> &Pair {
        &self.pair
    }

    pub fn left_ordering(&self) -> &OrderingRule {
        &self.left
    }

    pub fn right_ordering(&self) -> &OrderingRule {
        &self.right
    }

    pub fn cache(&self) -> &BlockCache {
        &self.cache
    }

    pub fn epsilon(&self) -> Option<f64> {
        match &self.pair {
            Pair::FourierWavelet { fourier, .. } | Pair::FourierLegendre { fourier } => {
                Some(fourier.epsilon)
            }
            Pair::Dense(_) => None,
        }
    }

    /// Number of rows and columns (None for infinite operators).
    pub fn finite_shape(&self) -> Option<(usize, usize)> {
        match &self.pair {
            Pair::Dense(b) => Some((b.rows(), b.cols())),
            _ => None,
        }
    }

    fn check_position(&self, m: usize, n: usize) -> Result<()> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("positions start at 1"));
        }
        if let Some((r, c)) = self.finite_shape() {
            if m > r || n > c {
                return Err(Error::invalid(format!(
                    "({m}, {n}) outside a {r}x{c} matrix"
                )));
            }
        }
        Ok(())
    }

    /// Frequency of the sampling element at row position m.
    pub fn row_frequency(&self, m: usize) -> Result<i64> {
        frequency_index(self.left.canonical(m))
    }

    /// Row position of the sampling element with frequency λ.
    pub fn row_position_of_frequency(&self, lambda: i64) -> usize {
        self.left_inv.position(frequency_position(lambda))
    }

    pub(crate) fn column_position(&self, canonical: usize) -> usize {
        self.right_inv.position(canonical)
    }

    /// U_{m,n} at 1-based positions.
    pub fn entry(&self, m: usize, n: usize) -> Result<Complex64> {
        self.check_position(m, n)?;
        let cm = self.left.canonical(m);
        let cn = self.right.canonical(n);
        match &self.pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                let idx = wavelet.leveled_enumerate(cn)?;
                Ok(entry_fourier_wavelet(
                    fourier,
                    wavelet,
                    frequency_index(cm)?,
                    &idx,
                ))
            }
            Pair::FourierLegendre { fourier } => Ok(entry_fourier_legendre(
                fourier.epsilon,
                frequency_index(cm)?,
                cn,
            )),
            Pair::Dense(b) => Ok(b.get(cm - 1, cn - 1)),
        }
    }

    /// The leading rows×cols section, cached under an LRU byte budget.
    pub fn dense_truncation(&self, rows: usize, cols: usize) -> Result<Arc<DenseBlock>> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        self.check_position(rows, cols)?;
        self.cache
            .get_or_insert(rows, cols, || self.compute_block(rows, cols))
    }

    fn compute_block(&self, rows: usize, cols: usize) -> Result<DenseBlock> {
        match &self.pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                let idx = (1..=cols)
                    .map(|n| wavelet.leveled_enumerate(self.right.canonical(n)))
                    .collect::<Result<Vec<_>>>()?;
                let lambdas = (1..=rows)
                    .map(|m| self.row_frequency(m))
                    .collect::<Result<Vec<_>>>()?;
                Ok(wavelet::dense_rows(fourier, wavelet, &lambdas, &idx))
            }
            Pair::FourierLegendre { fourier } => {
                let lambdas = (1..=rows)
                    .map(|m| self.row_frequency(m))
                    .collect::<Result<Vec<_>>>()?;
                let canon: Vec<usize> = (1..=cols).map(|n| self.right.canonical(n)).collect();
                Ok(legendre::dense_rows(fourier.epsilon, &lambdas, &canon))
            }
            Pair::Dense(b) => Ok(DenseBlock::from_fn(rows, cols, |i, j| {
                b.get(
                    self.left.canonical(i + 1) - 1,
                    self.right.canonical(j + 1) - 1,
                )
            })),
        }
    }

    /// y = U[1..=rows, 1..=x.len()] x.
    pub fn apply(&self, x: &[Complex64], rows: usize) -> Result<Vec<Complex64>> {
        self.dense_truncation(rows, x.len())?.apply(x)
    }

    /// x = U[1..=y.len(), 1..=cols]* y.
    pub fn apply_adjoint(&self, y: &[Complex64], cols: usize) -> Result<Vec<Complex64>> {
        self.dense_truncation(y.len(), cols)?.apply_adjoint(y)
    }

    /// μ(π_m U): supremum of |U_{m,n}|² over all columns n.
    pub fn row_sup(&self, m: usize, safety: f64) -> Result<LineSup> {
        self.check_position(m, 1)?;
        let mut sup = match &self.pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                wavelet::row_sup(fourier, wavelet, self.row_frequency(m)?, safety)
            }
            Pair::FourierLegendre { fourier } => {
                legendre::row_sup(fourier.epsilon, self.row_frequency(m)?, safety)
            }
            Pair::Dense(b) => {
                let i = self.left.canonical(m) - 1;
                let (j, v) = b
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, z)| (j, z.norm_sqr()))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                LineSup {
                    value: v,
                    witness: j + 1,
                    certified: true,
                }
            }
        };
        sup.witness = self.column_position(sup.witness);
        Ok(sup)
    }

    /// μ(U π_n): supremum of |U_{m,n}|² over all rows m.
    pub fn column_sup(&self, n: usize, safety: f64) -> Result<LineSup> {
        self.check_position(1, n)?;
        let cn = self.right.canonical(n);
        let mut sup = match &self.pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                let idx = wavelet.leveled_enumerate(cn)?;
                self.column_classes
                    .get(fourier, wavelet, idx.kind, idx.level, safety)
            }
            Pair::FourierLegendre { fourier } => legendre::column_sup(fourier.epsilon, cn, safety),
            Pair::Dense(b) => {
                let j = cn - 1;
                let (i, v) = (0..b.rows())
                    .map(|i| (i, b.get(i, j).norm_sqr()))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                LineSup {
                    value: v,
                    witness: i + 1,
                    certified: true,
                }
            }
        };
        sup.witness = self.left_inv.position(sup.witness);
        Ok(sup)
    }

    /// μ(π_m U) for m = 1..=count.
    pub fn row_lines(&self, count: usize, safety: f64) -> Result<Vec<LineSup>> {
        if let Some((r, _)) = self.finite_shape() {
            if count > r {
                return Err(Error::invalid(format!("{count} rows requested from {r}")));
            }
        }
        (1..=count)
            .into_par_iter()
            .map(|m| self.row_sup(m, safety))
            .collect()
    }

    /// μ(U π_n) for n = 1..=count.
    pub fn column_lines(&self, count: usize, safety: f64) -> Result<Vec<LineSup>> {
        if let Some((_, c)) = self.finite_shape() {
            if count > c {
                return Err(Error::invalid(format!(
                    "{count} columns requested from {c}"
                )));
            }
        }
        match &self.pair {
            Pair::FourierLegendre { fourier } => {
                let canon: Vec<usize> = (1..=count).map(|n| self.right.canonical(n)).collect();
                let top = canon.iter().copied().max().unwrap_or(0);
                let sweep = legendre::column_sweep(fourier.epsilon, top, safety);
                Ok(canon
                    .iter()
                    .map(|&c| {
                        let mut s = sweep[c - 1];
                        s.witness = self.left_inv.position(s.witness);
                        s
                    })
                    .collect())
            }
            _ => (1..=count)
                .into_par_iter()
                .map(|n| self.column_sup(n, safety))
                .collect(),
        }
    }

    /// Upper bound on μ(π_M U) for every M ≥ `from`.
    pub fn row_tail_cap(&self, from: usize) -> f64 {
        let from = from.max(1);
        let min_canonical = match &self.left {
            OrderingRule::Permutation { prefix } if from <= prefix.len() => prefix[from - 1..]
                .iter()
                .copied()
                .min()
                .unwrap_or(from)
                .min(prefix.len() + 1),
            _ => from,
        };
        let lambda = (min_canonical / 2) as f64;
        match &self.pair {
            Pair::FourierWavelet { wavelet, .. } => {
                let env = wavelet.family.envelope();
                if lambda == 0.0 {
                    return 1.0;
                }
                (env.psi_decay_sq.max(env.phi_decay_sq) / lambda).min(1.0)
            }
            Pair::FourierLegendre { fourier } => legendre::row_cap(fourier.epsilon, lambda),
            Pair::Dense(b) => {
                if from > b.rows() {
                    0.0
                } else {
                    (from..=b.rows())
                        .filter_map(|m| self.row_sup(m, 1.0).ok())
                        .map(|s| s.value)
                        .fold(0.0, f64::max)
                }
            }
        }
    }

    /// Upper bound on μ(U π_N) for every N ≥ `from`.
    pub fn column_tail_cap(&self, from: usize) -> f64 {
        let from = from.max(1);
        let min_canonical = match &self.right {
            OrderingRule::Permutation { prefix } if from <= prefix.len() => prefix[from - 1..]
                .iter()
                .copied()
                .min()
                .unwrap_or(from)
                .min(prefix.len() + 1),
            _ => from,
        };
        match &self.pair {
            Pair::FourierWavelet { fourier, wavelet } => {
                let Ok(idx) = wavelet.leveled_enumerate(min_canonical) else {
                    return 1.0;
                };
                let env = wavelet.family.envelope();
                let scale = fourier.epsilon * (-(idx.level as f64)).exp2();
                // slack for rounding in the entry moduli
                let slack = 1.0 + 1e-12;
                match idx.kind {
                    WaveletKind::Scaling => scale * env.psi_sup_sq.max(1.0) * slack,
                    WaveletKind::Wavelet => scale * env.psi_sup_sq * slack,
                }
            }
            Pair::FourierLegendre { fourier } => {
                legendre::column_cap(fourier.epsilon, min_canonical)
            }
            Pair::Dense(b) => {
                if from > b.cols() {
                    0.0
                } else {
                    (from..=b.cols())
                        .filter_map(|n| self.column_sup(n, 1.0).ok())
                        .map(|s| s.value)
                        .fold(0.0, f64::max)
                }
            }
        }
    }
}

/// Gram-deviation tolerances max |(A*A - I)_{ij}| for A = U[1..=M, 1..=N],
/// Fourier-wavelet operators with ε at the right end of I_{J,p}. For fixed
/// (p, J) the measured deviation depends on M/N only (checked for N = 128,
/// 256, 512); entries are the calibration values inflated by 25%.
/// Columns: (p, J, M/N, tolerance).
pub const GRAM_TOLERANCES: &[(usize, u32, usize, f64)] = &[
    (1, 0, 2, 0.18),
    (1, 0, 4, 0.094),
    (1, 0, 8, 0.047),
    (1, 0, 16, 0.024),
    (1, 3, 2, 0.18),
    (1, 3, 4, 0.094),
    (1, 3, 8, 0.047),
    (1, 3, 16, 0.024),
    (2, 1, 2, 0.081),
    (2, 1, 4, 0.047),
    (2, 1, 8, 0.0067),
    (2, 1, 16, 0.0026),
    (4, 4, 2, 8.9e-3),
    (4, 4, 4, 1.1e-3),
    (4, 4, 8, 1.1e-4),
    (4, 4, 16, 7.5e-6),
];

/// Tolerance for an M×N truncation: the entry with the largest tabulated
/// ratio not exceeding M/N.
pub fn gram_tolerance(p: usize, coarse_level: u32, rows: usize, cols: usize) -> Option<f64> {
    GRAM_TOLERANCES
        .iter()
        .filter(|(q, j, r, _)| *q == p && *j == coarse_level && r * cols <= rows)
        .max_by_key(|(_, _, r, _)| *r)
        .map(|(_, _, _, t)| *t)
}
