//! Basis pursuit min ‖x‖₁ s.t. Ax = y by Douglas–Rachford splitting.
//!
//! The rows of A are orthonormalised once (classical Gram–Schmidt with
//! reorthogonalisation), which makes the projection onto {Ax = y} exact.
//! The iteration is z ← z + P(2 prox(z) - z) - prox(z) with the complex
//! soft threshold as prox.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DenseBlock;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Converged iterates satisfy ‖Ax - y‖ ≤ feas_tol·‖y‖.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Threshold γ = gamma_scale · ‖A*y‖_∞ / ‖A‖².
    pub gamma_scale: f64,
    /// Relative ℓ1 change tolerated across `window` iterations at convergence.
    pub objective_tol: f64,
    pub window: usize,
    pub power_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-6,
            max_iter: 20_000,
            gamma_scale: 0.005,
            objective_tol: 1e-8,
            window: 50,
            power_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub solution: Vec<Complex64>,
    /// ‖Ax - y‖₂ of the returned solution.
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Power-method estimate of ‖A‖.
    pub operator_norm: f64,
    pub gamma: f64,
    /// Rows dropped as numerically dependent.
    pub dependent_rows: usize,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

fn conj_transpose(a: &DenseBlock) -> DenseBlock {
    DenseBlock::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i).conj())
}

/// Largest singular value by power iteration on A*A from a fixed start.
pub fn operator_norm(a: &DenseBlock, iterations: usize) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Complex64> = (0..a.cols())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut sigma = 0.0;
    for _ in 0..iterations.max(1) {
        let n = norm2(&x);
        if n == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= n);
        let ax = a.apply(&x).expect("shape");
        sigma = norm2(&ax);
        x = a.apply_adjoint(&ax).expect("shape");
    }
    sigma
}

/// Orthonormal rows Q and b with {Ax = y} = {Qx = b}.
struct AffineSet {
    q: DenseBlock,
    qh: DenseBlock,
    b: Vec<Complex64>,
    dropped: usize,
}

impl AffineSet {
    fn new(a: &DenseBlock, y: &[Complex64], norm: f64) -> Result<Self> {
        let r = a.cols();
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        let mut b = Vec::new();
        let mut dropped = 0;
        let tol = 1e-10 * norm.max(f64::MIN_POSITIVE);
        let ynorm = norm2(y);
        for (i, &yi) in y.iter().enumerate() {
            let mut v = a.row(i).to_vec();
            let mut bi = yi;
            for _ in 0..2 {
                let coef: Vec<Complex64> = rows
                    .par_iter()
                    .map(|q| q.iter().zip(&v).map(|(qk, vk)| qk.conj() * vk).sum())
                    .collect();
                for ((q, c), bk) in rows.iter().zip(&coef).zip(&b) {
                    for (vk, qk) in v.iter_mut().zip(q) {
                        *vk -= c * qk;
                    }
                    bi -= c * bk;
                }
            }
            let n = norm2(&v);
            if n <= tol {
                dropped += 1;
                if bi.norm() > 1e-8 * ynorm.max(1.0) {
                    return Err(Error::invalid(format!(
                        "measurement row {} is dependent on earlier rows but inconsistent",
                        i + 1
                    )));
                }
                continue;
            }
            v.iter_mut().for_each(|x| *x /= n);
            rows.push(v);
            b.push(bi / n);
        }
        let m = rows.len();
        let q = DenseBlock::new(m, r, rows.into_iter().flatten().collect())?;
        let qh = conj_transpose(&q);
        Ok(AffineSet { q, qh, b, dropped })
    }

    fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut d = self.q.apply(v).expect("shape");
        d.iter_mut().zip(&self.b).for_each(|(x, b)| *x -= b);
        let c = self.qh.apply(&d).expect("shape");
        v.iter().zip(&c).map(|(a, b)| a - b).collect()
    }

    fn min_norm_point(&self) -> Vec<Complex64> {
        self.qh.apply(&self.b).expect("shape")
    }
}

fn soft_threshold(z: &[Complex64], gamma: f64) -> Vec<Complex64> {
    z.iter()
        .map(|&v| {
            let m = v.norm();
            if m <= gamma {
                Complex64::new(0.0, 0.0)
            } else {
                v * ((m - gamma) / m)
            }
        })
        .collect()
}

/// Minimise ‖x‖₁ subject to Ax = y. Non-convergence is reported in the
/// result, not raised.
pub fn solve_bp(a: &DenseBlock, y: &[Complex64], cfg: &SolverConfig) -> Result<RecoveryResult> {
    if y.len() != a.rows() {
        return Err(Error::invalid(format!(
            "{} measurements for {} rows",
            y.len(),
            a.rows()
        )));
    }
    if a.cols() == 0 {
        return Err(Error::Empty);
    }
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("measurements must be finite"));
    }
    let norm = operator_norm(a, cfg.power_iterations);
    let ynorm = norm2(y);
    let zero = vec![Complex64::new(0.0, 0.0); a.cols()];
    if ynorm == 0.0 || norm == 0.0 {
        return Ok(RecoveryResult {
            solution: zero,
            residual: ynorm,
            objective: 0.0,
            iterations: 0,
            converged: ynorm == 0.0,
            operator_norm: norm,
            gamma: 0.0,
            dependent_rows: 0,
        });
    }
    let set = AffineSet::new(a, y, norm)?;
    let aty = a.apply_adjoint(y)?;
    let gamma = cfg.gamma_scale * aty.iter().map(|v| v.norm()).fold(0.0, f64::max) / (norm * norm);
    let tol = cfg.feas_tol * ynorm;
    let residual_of = |x: &[Complex64]| -> f64 {
        let ax = a.apply(x).expect("shape");
        ax.iter()
            .zip(y)
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let mut z = set.min_norm_point();
    let mut best: Option<(f64, f64, Vec<Complex64>)> = None;
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iter);
    let mut last = zero;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let x = soft_threshold(&z, gamma);
        let reflected: Vec<Complex64> = x.iter().zip(&z).map(|(a, b)| 2.0 * a - b).collect();
        let w = set.project(&reflected);
        for ((zk, wk), xk) in z.iter_mut().zip(&w).zip(&x) {
            *zk += wk - xk;
        }
        let obj = l1(&x);
        history.push(obj);
        let res = residual_of(&x);
        if res <= tol && best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, res, x.clone()));
        }
        if res <= tol && it > cfg.window {
            let old = history[it - 1 - cfg.window];
            if (obj - old).abs() <= cfg.objective_tol * obj.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        last = x;
    }
    let (solution, residual, objective) = match best {
        Some((obj, res, x)) if converged => (x, res, obj),
        _ => {
            let res = residual_of(&last);
            let obj = l1(&last);
            (last, res, obj)
        }
    };
    Ok(RecoveryResult {
        solution,
        residual,
        objective,
        iterations,
        converged,
        operator_norm: norm,
        gamma,
        dependent_rows: set.dropped,
    })
}
