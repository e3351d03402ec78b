//! Reconstruction of the test function from subsampled Fourier data, and
//! the flip test.

use std::io::Write;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::signal::{
    fourier_samples_of_f, l1_error, legendre_coefficients, wavelet_coefficients, Synthesizer,
};
use super::solver::{solve_bp, RecoveryResult, SolverConfig};
use super::{draw_scheme, MultilevelScheme};
use crate::bases::{WaveletBasisSpec, WaveletKind};
use crate::error::{Error, Result};
use crate::operator::{DenseBlock, OperatorHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum ReconstructionBasis {
    Wavelet {
        p: usize,
        #[serde(rename = "J")]
        coarse_level: u32,
    },
    Legendre,
}

impl ReconstructionBasis {
    /// Daubechies-4 at J = 6.
    pub fn default_wavelet() -> Self {
        ReconstructionBasis::Wavelet {
            p: 4,
            coarse_level: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum SamplingPattern {
    /// Levels (0, 101, 501] with budgets (96, 5).
    A,
    /// Levels (0, 101, 301, 501] with budgets (81, 110, 60).
    B,
    /// All 501 samples.
    Full,
    Custom {
        boundaries: Vec<usize>,
        budgets: Vec<usize>,
    },
}

/// Level boundaries and budgets of a pattern, in frequency-ordered positions.
pub fn sampling_pattern(pattern: &SamplingPattern) -> (Vec<usize>, Vec<usize>) {
    match pattern {
        SamplingPattern::A => (vec![101, 501], vec![96, 5]),
        SamplingPattern::B => (vec![101, 301, 501], vec![81, 110, 60]),
        SamplingPattern::Full => (vec![501], vec![501]),
        SamplingPattern::Custom {
            boundaries,
            budgets,
        } => (boundaries.clone(), budgets.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub basis: ReconstructionBasis,
    pub pattern: SamplingPattern,
    pub seed: u64,
    /// Number of reconstruction coefficients.
    #[serde(default = "default_r")]
    pub r: usize,
    /// Fourier ε; defaults to the admissible endpoint for wavelets and 1/2 for Legendre.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_r() -> usize {
    1024
}

impl ReconstructionConfig {
    pub fn new(basis: ReconstructionBasis, pattern: SamplingPattern, seed: u64) -> Self {
        ReconstructionConfig {
            basis,
            pattern,
            seed,
            r: default_r(),
            epsilon: None,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOutcome {
    pub l1_error: f64,
    pub epsilon: f64,
    pub scheme: MultilevelScheme,
    pub recovery: RecoveryResult,
    /// Coefficients of f in the reconstruction basis (quadrature).
    pub truth: Vec<f64>,
}

impl ReconstructionOutcome {
    /// CSV `n,re,im,truth`.
    pub fn write_coefficients<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "n,re,im,truth")?;
        for (n, (x, t)) in self.recovery.solution.iter().zip(&self.truth).enumerate() {
            writeln!(w, "{},{:e},{:e},{:e}", n + 1, x.re, x.im, t)?;
        }
        w.flush()
    }
}

pub fn reconstruct_experiment(cfg: &ReconstructionConfig) -> Result<ReconstructionOutcome> {
    let (boundaries, budgets) = sampling_pattern(&cfg.pattern);
    let rows = *boundaries.last().ok_or(Error::Empty)?;
    let scheme = draw_scheme(&boundaries, &budgets, cfg.seed)?;
    let (u, synth, truth) = match cfg.basis {
        ReconstructionBasis::Wavelet { p, coarse_level } => {
            let spec = WaveletBasisSpec::new(p, coarse_level)?;
            let eps = cfg.epsilon.unwrap_or(spec.epsilon_bound());
            (
                OperatorHandle::fourier_wavelet(eps, p, coarse_level)?,
                Synthesizer::wavelet(&spec)?,
                wavelet_coefficients(&spec, cfg.r)?,
            )
        }
        ReconstructionBasis::Legendre => (
            OperatorHandle::fourier_legendre(cfg.epsilon.unwrap_or(0.5))?,
            Synthesizer::Legendre,
            legendre_coefficients(cfg.r),
        ),
    };
    let epsilon = u.epsilon().expect("Fourier sampling");
    let a = u
        .dense_truncation(rows, cfg.r)?
        .select_rows(&scheme.row_indices())?;
    let samples = fourier_samples_of_f(epsilon, rows)?;
    let y: Vec<Complex64> = scheme.omega.iter().map(|&m| samples[m - 1]).collect();
    let recovery = solve_bp(&a, &y, &cfg.solver)?;
    let l1 = l1_error(&synth.synthesize(&recovery.solution)?)?;
    Ok(ReconstructionOutcome {
        l1_error: l1,
        epsilon,
        scheme,
        recovery,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FlipMode {
    /// x'_i = x_{R+1-i}.
    Full,
    /// Uniform random permutation inside each level.
    WithinLevel { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipOutcome {
    /// ‖α - x‖₂ / ‖x‖₂ for the original vector.
    pub error_original: f64,
    /// Same for the un-permuted reconstruction of the permuted vector.
    pub error_modified: f64,
    pub ratio: f64,
    pub original: RecoveryResult,
    pub modified: RecoveryResult,
}

fn flip_permutation(r: usize, mode: FlipMode, levels: &[usize]) -> Result<Vec<usize>> {
    match mode {
        FlipMode::Full => Ok((0..r).rev().collect()),
        FlipMode::WithinLevel { seed } => {
            if levels.is_empty()
                || *levels.last().unwrap() != r
                || levels.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::invalid(
                    "levels must increase and end at the vector length",
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..r).collect();
            let mut lo = 0;
            for &hi in levels {
                perm[lo..hi].shuffle(&mut rng);
                lo = hi;
            }
            Ok(perm)
        }
    }
}

/// Solve for x and for its permutation x'_i = x_{π(i)} with the same rows,
/// undo the permutation on the second solution and compare both with x.
pub fn flip_test(
    block: &DenseBlock,
    omega: &[usize],
    x_true: &[Complex64],
    mode: FlipMode,
    levels: &[usize],
    solver: &SolverConfig,
) -> Result<FlipOutcome> {
    let r = x_true.len();
    if block.cols() != r {
        return Err(Error::invalid(
            "vector length differs from the number of columns",
        ));
    }
    let idx: Vec<usize> = omega.iter().map(|m| m - 1).collect();
    let a = block.select_rows(&idx)?;
    let perm = flip_permutation(r, mode, levels)?;
    let x_perm: Vec<Complex64> = perm.iter().map(|&p| x_true[p]).collect();
    let original = solve_bp(&a, &a.apply(x_true)?, solver)?;
    let modified = solve_bp(&a, &a.apply(&x_perm)?, solver)?;
    for res in [&original, &modified] {
        if !res.converged {
            return Err(Error::NoConvergence(format!(
                "basis pursuit stopped after {} iterations with residual {:e}",
                res.iterations, res.residual
            )));
        }
    }
    let mut back = vec![Complex64::new(0.0, 0.0); r];
    for (i, &p) in perm.iter().enumerate() {
        back[p] = modified.solution[i];
    }
    let xn = x_true.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let err = |z: &[Complex64]| {
        z.iter()
            .zip(x_true)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / xn
    };
    let error_original = err(&original.solution);
    let error_modified = err(&back);
    Ok(FlipOutcome {
        error_original,
        error_modified,
        ratio: error_modified / error_original,
        original,
        modified,
    })
}

/// Flip test of Fourier-Haar wavelet coefficients of the test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipConfig {
    #[serde(rename = "J", default)]
    pub coarse_level: u32,
    /// Finest wavelet level kept; R is the size of the basis up to it.
    pub finest_level: u32,
    pub boundaries: Vec<usize>,
    pub budgets: Vec<usize>,
    pub seed: u64,
    pub mode: FlipMode,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl FlipConfig {
    pub fn new(mode: FlipMode, seed: u64) -> Self {
        FlipConfig {
            coarse_level: 0,
            finest_level: 6,
            boundaries: vec![8, 16, 32, 64, 128, 256, 512],
            budgets: vec![8, 8, 16, 24, 32, 32, 32],
            seed,
            mode,
            solver: SolverConfig::default(),
        }
    }

    /// Ends of the scaling block and of each wavelet level, as positions.
    pub fn levels(&self) -> Result<Vec<usize>> {
        let spec = WaveletBasisSpec::new(1, self.coarse_level)?;
        if self.finest_level < self.coarse_level {
            return Err(Error::invalid("finest level is below the coarse level"));
        }
        Ok((self.coarse_level..=self.finest_level + 1)
            .map(|j| spec.block_start(WaveletKind::Wavelet, j) - 1)
            .collect())
    }

    pub fn run(&self) -> Result<FlipOutcome> {
        let levels = self.levels()?;
        let r = *levels.last().expect("nonempty");
        let spec = WaveletBasisSpec::new(1, self.coarse_level)?;
        let u = OperatorHandle::fourier_wavelet(spec.epsilon_bound(), 1, self.coarse_level)?;
        let rows = *self.boundaries.last().ok_or(Error::Empty)?;
        let block = u.dense_truncation(rows, r)?;
        let scheme = draw_scheme(&self.boundaries, &self.budgets, self.seed)?;
        let x: Vec<Complex64> = wavelet_coefficients(&spec, r)?
            .into_iter()
            .map(Into::into)
            .collect();
        flip_test(&block, &scheme.omega, &x, self.mode, &levels, &self.solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_flip_is_exact() {
        let block = DenseBlock::identity(8);
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[1] = 1.0.into();
        x[2] = (-2.0).into();
        let omega = [2, 3, 6, 7];
        let out = flip_test(
            &block,
            &omega,
            &x,
            FlipMode::Full,
            &[8],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(out.error_original < 1e-6 && out.error_modified < 1e-6);
    }

    #[test]
    fn within_level_permutation_stays_in_level() {
        let p = flip_permutation(10, FlipMode::WithinLevel { seed: 3 }, &[2, 5, 10]).unwrap();
        assert!(p[..2].iter().all(|&i| i < 2));
        assert!(p[2..5].iter().all(|&i| (2..5).contains(&i)));
        assert!(flip_permutation(10, FlipMode::WithinLevel { seed: 3 }, &[2, 5]).is_err());
    }

    #[test]
    fn haar_levels() {
        let cfg = FlipConfig::new(FlipMode::Full, 0);
        assert_eq!(cfg.levels().unwrap(), vec![2, 4, 8, 16, 32, 64, 128, 256]);
    }
}
