//! Multilevel sampling, measurement budgets, basis pursuit and the
//! reconstruction and flip experiments built on them.

mod experiment;
mod signal;
mod solver;

use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use experiment::{
    flip_test, reconstruct_experiment, sampling_pattern, FlipConfig, FlipMode, FlipOutcome,
    ReconstructionBasis, ReconstructionConfig, ReconstructionOutcome, SamplingPattern,
};
pub use signal::{
    fourier_sample, fourier_samples_of_f, l1_error, legendre_coefficients, test_function,
    wavelet_coefficients, Synthesizer,
};
pub use solver::{operator_norm, solve_bp, RecoveryResult, SolverConfig};

fn check_boundaries(b: &[usize], what: &str) -> Result<()> {
    if b.is_empty() || b[0] == 0 || b.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "{what} boundaries must be strictly increasing and positive"
        )));
    }
    Ok(())
}

/// Sampled positions drawn uniformly without replacement inside each level
/// {N_{k-1}+1, ..., N_k}, N_0 = 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultilevelScheme {
    pub boundaries: Vec<usize>,
    pub budgets: Vec<usize>,
    /// Sorted 1-based positions.
    pub omega: Vec<usize>,
    pub seed: u64,
}

impl MultilevelScheme {
    pub fn levels(&self) -> usize {
        self.boundaries.len()
    }

    /// Positions drawn in level k (0-based level index).
    pub fn level(&self, k: usize) -> &[usize] {
        let lo = if k == 0 { 0 } else { self.boundaries[k - 1] };
        let hi = self.boundaries[k];
        let a = self.omega.partition_point(|&m| m <= lo);
        let b = self.omega.partition_point(|&m| m <= hi);
        &self.omega[a..b]
    }

    /// 0-based row indices for [`crate::operator::DenseBlock::select_rows`].
    pub fn row_indices(&self) -> Vec<usize> {
        self.omega.iter().map(|m| m - 1).collect()
    }

    /// `index,taken` over 1..=N_r.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "index,taken")?;
        let mut it = self.omega.iter().peekable();
        for m in 1..=*self.boundaries.last().unwrap_or(&0) {
            let taken = it.peek() == Some(&&m);
            if taken {
                it.next();
            }
            writeln!(w, "{},{}", m, u8::from(taken))?;
        }
        w.flush()
    }
}

pub fn draw_scheme(boundaries: &[usize], budgets: &[usize], seed: u64) -> Result<MultilevelScheme> {
    check_boundaries(boundaries, "sampling")?;
    if budgets.len() != boundaries.len() {
        return Err(Error::invalid("one budget per level is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = Vec::with_capacity(budgets.iter().sum());
    let mut lo = 0;
    for (k, (&hi, &m)) in boundaries.iter().zip(budgets).enumerate() {
        let width = hi - lo;
        if m > width {
            return Err(Error::invalid(format!(
                "budget {m} exceeds the width {width} of level {}",
                k + 1
            )));
        }
        let mut pick: Vec<usize> = sample(&mut rng, width, m)
            .into_iter()
            .map(|i| lo + i + 1)
            .collect();
        pick.sort_unstable();
        omega.extend(pick);
        lo = hi;
    }
    Ok(MultilevelScheme {
        boundaries: boundaries.to_vec(),
        budgets: budgets.to_vec(),
        omega,
        seed,
    })
}

/// Counts of entries above a threshold in each level of M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityInLevels {
    pub boundaries: Vec<usize>,
    pub counts: Vec<usize>,
    pub threshold: f64,
}

pub fn sparsity_in_levels<T: Copy + Into<num_complex::Complex64>>(
    x: &[T],
    boundaries: &[usize],
    threshold: f64,
) -> Result<SparsityInLevels> {
    check_boundaries(boundaries, "sparsity")?;
    if *boundaries.last().expect("nonempty") > x.len() {
        return Err(Error::invalid("sparsity levels extend past the vector"));
    }
    let mut counts = Vec::new();
    let mut lo = 0;
    for &hi in boundaries {
        counts.push(
            x[lo..hi]
                .iter()
                .filter(|v| (**v).into().norm() > threshold)
                .count(),
        );
        lo = hi;
    }
    Ok(SparsityInLevels {
        boundaries: boundaries.to_vec(),
        counts,
        threshold,
    })
}

/// Per-level measurement budgets and the single-level estimate for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub budgets: Vec<usize>,
    pub total: usize,
    /// ⌈C μ N s log(1/ε) log N⌉ capped at N.
    pub single_level: usize,
}

/// m_k = min(N_k - N_{k-1}, ⌈C (N_k - N_{k-1}) log(1/ε) (Σ_l μ(k,l) s_l) log N⌉)
/// with N = N_r. `global_mu` is μ of the whole truncated section, used for
/// the single-level comparison.
pub fn plan_budgets(
    local: &[Vec<f64>],
    n_bounds: &[usize],
    s: &[usize],
    epsilon_fail: f64,
    c: f64,
    global_mu: f64,
) -> Result<BudgetPlan> {
    check_boundaries(n_bounds, "sampling")?;
    if local.len() != n_bounds.len() || local.iter().any(|row| row.len() != s.len()) {
        return Err(Error::invalid(
            "local coherence table does not match N and s",
        ));
    }
    if !(epsilon_fail > 0.0 && epsilon_fail < 1.0) || !(c > 0.0) {
        return Err(Error::invalid("need 0 < ε < 1 and C > 0"));
    }
    let n = *n_bounds.last().expect("nonempty");
    let log_n = (n as f64).ln().max(1.0);
    let log_e = (1.0 / epsilon_fail).ln();
    let mut lo = 0;
    let mut budgets = Vec::new();
    for (row, &hi) in local.iter().zip(n_bounds) {
        let width = hi - lo;
        let weight: f64 = row.iter().zip(s).map(|(mu, &sl)| mu * sl as f64).sum();
        let m = (c * width as f64 * log_e * weight * log_n).ceil();
        budgets.push((m as usize).min(width));
        lo = hi;
    }
    let s_total: usize = s.iter().sum();
    let single = (c * global_mu * n as f64 * s_total as f64 * log_e * log_n).ceil();
    Ok(BudgetPlan {
        total: budgets.iter().sum(),
        budgets,
        single_level: (single as usize).min(n),
    })
}
