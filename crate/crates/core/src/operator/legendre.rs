use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{DenseBlock, LineSup};
use crate::bases::frequency_position;
use crate::error::{Error, Result};
use crate::special::{bessel_half, spherical_bessel_all, BesselEvalConfig};

/// Landau's uniform bound |J_ν(x)| ≤ c x^{-1/3}.
const LANDAU_X: f64 = 0.785746;

const SWEEP_CHUNK: usize = 64;
const MAX_LAMBDA: i64 = 1 << 24;

/// Orders are evaluated in buckets 31, 63, 127, ... so that a single entry
/// and a whole dense row run the same recurrence and agree bit for bit.
fn bucket(order: usize) -> usize {
    (order + 1).next_power_of_two().max(32) - 1
}

fn bessel_row(order: usize, x: f64) -> Vec<f64> {
    spherical_bessel_all(bucket(order), x, &BesselEvalConfig::default())
}

/// (-i)^k
fn phase(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

fn amplitude(epsilon: f64, n: usize) -> f64 {
    2.0 * (epsilon * (n as f64 - 0.5)).sqrt()
}

/// ⟨p̃_n, χ_λ⟩ = (-i)^{n-1} 2√(ε(n-1/2)) j_{n-1}(2πελ).
pub fn entry_fourier_legendre(epsilon: f64, lambda: i64, n: usize) -> Complex64 {
    let x = 2.0 * PI * epsilon * lambda as f64;
    let j = bessel_row(n - 1, x)[n - 1];
    phase(n - 1) * (amplitude(epsilon, n) * j)
}

/// Same entry through J_{n-1/2}: (-i)^{n-1} √(n-1/2)/√|λ| J_{n-1/2}(2πε|λ|),
/// with the sign of λ restored from the parity of j_{n-1}.
pub fn entry_fourier_legendre_bessel(epsilon: f64, lambda: i64, n: usize) -> Result<Complex64> {
    if lambda == 0 || n == 0 {
        return Err(Error::Domain {
            function: "entry_fourier_legendre_bessel",
            detail: "needs λ ≠ 0 and n ≥ 1".into(),
        });
    }
    let x = 2.0 * PI * epsilon * lambda.unsigned_abs() as f64;
    let mut v =
        (n as f64 - 0.5).sqrt() / (lambda.unsigned_abs() as f64).sqrt() * bessel_half(n - 1, x)?;
    if lambda < 0 && (n - 1) % 2 == 1 {
        v = -v;
    }
    Ok(phase(n - 1) * v)
}

pub(super) fn dense_rows(epsilon: f64, lambdas: &[i64], canon: &[usize]) -> DenseBlock {
    let mut data = vec![Complex64::new(0.0, 0.0); lambdas.len() * canon.len()];
    let mut buckets: Vec<usize> = canon.iter().map(|&n| bucket(n - 1)).collect();
    buckets.sort_unstable();
    buckets.dedup();
    if !canon.is_empty() {
        data.par_chunks_mut(canon.len())
            .zip(lambdas)
            .for_each(|(row, &lambda)| {
                let x = 2.0 * PI * epsilon * lambda as f64;
                let rows: Vec<Vec<f64>> = buckets
                    .iter()
                    .map(|&b| spherical_bessel_all(b, x, &BesselEvalConfig::default()))
                    .collect();
                for (v, &n) in row.iter_mut().zip(canon) {
                    let b = buckets
                        .binary_search(&bucket(n - 1))
                        .expect("bucket listed");
                    *v = phase(n - 1) * (amplitude(epsilon, n) * rows[b][n - 1]);
                }
            });
    }
    DenseBlock::new(lambdas.len(), canon.len(), data).expect("shape matches by construction")
}

/// sup over n of 4ε(n-1/2) j²_{n-1}(2πε|λ|). All orders up to well past the
/// turning point n ≈ x come from one recurrence; beyond it |j_n(x)| decreases
/// in n, so the scan is certified once the last value is below best/safety.
pub(super) fn row_sup(epsilon: f64, lambda: i64, safety: f64) -> LineSup {
    let x = 2.0 * PI * epsilon * lambda.unsigned_abs() as f64;
    let nmax = (x + 8.0 * x.cbrt() + 40.0).ceil() as usize;
    let j = bessel_row(nmax, x);
    let mut best = LineSup {
        value: -1.0,
        witness: 1,
        certified: false,
    };
    for (k, v) in j.iter().take(nmax + 1).enumerate() {
        let e = 4.0 * epsilon * (k as f64 + 0.5) * v * v;
        if e > best.value {
            best.value = e;
            best.witness = k + 1;
        }
    }
    let last = 4.0 * epsilon * (nmax as f64 + 0.5) * j[nmax] * j[nmax];
    best.certified = (nmax as f64) > x && last < best.value / safety;
    best
}

/// Column envelope at λ ≠ 0: (n-1/2)/|λ| · c² (2πε|λ|)^{-2/3}.
fn column_envelope(epsilon: f64, n: usize, lambda: i64) -> f64 {
    let x = 2.0 * PI * epsilon * lambda as f64;
    (n as f64 - 0.5) / lambda as f64 * LANDAU_X * LANDAU_X * x.powf(-2.0 / 3.0)
}

/// sup over λ of 4ε(n-1/2) j²_{n-1}(2πελ) for a single column.
pub(super) fn column_sup(epsilon: f64, n: usize, safety: f64) -> LineSup {
    column_sweep_from(epsilon, &[n], safety).remove(0)
}

/// Column suprema for n = 1..=top with one recurrence per frequency.
pub(super) fn column_sweep(epsilon: f64, top: usize, safety: f64) -> Vec<LineSup> {
    let cols: Vec<usize> = (1..=top).collect();
    column_sweep_from(epsilon, &cols, safety)
}

fn column_sweep_from(epsilon: f64, cols: &[usize], safety: f64) -> Vec<LineSup> {
    let top = cols.iter().copied().max().unwrap_or(1);
    let mut best: Vec<LineSup> = cols
        .iter()
        .map(|&n| LineSup {
            value: if n == 1 { 2.0 * epsilon } else { 0.0 },
            witness: 1,
            certified: false,
        })
        .collect();
    let mut start = 1i64;
    while start < MAX_LAMBDA {
        let rows: Vec<Vec<f64>> = (start..start + SWEEP_CHUNK as i64)
            .into_par_iter()
            .map(|lambda| {
                let x = 2.0 * PI * epsilon * lambda as f64;
                let j = spherical_bessel_all(top - 1, x, &BesselEvalConfig::default());
                cols.iter()
                    .map(|&n| 4.0 * epsilon * (n as f64 - 0.5) * j[n - 1] * j[n - 1])
                    .collect()
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (b, &v) in best.iter_mut().zip(row) {
                if v > b.value {
                    b.value = v;
                    b.witness = frequency_position(start + i as i64);
                }
            }
        }
        start += SWEEP_CHUNK as i64;
        let mut done = true;
        for (b, &n) in best.iter_mut().zip(cols) {
            if !b.certified && column_envelope(epsilon, n, start) < b.value / safety {
                b.certified = true;
            }
            done &= b.certified;
        }
        if done {
            break;
        }
    }
    best
}

/// Bound on μ(π_m U) for |λ(m)| ≥ λ_min ≥ 1.
pub(super) fn row_cap(epsilon: f64, lambda_min: f64) -> f64 {
    if lambda_min < 1.0 {
        return 2.0 * epsilon;
    }
    let x = 2.0 * PI * epsilon * lambda_min;
    (4.0 * PI * epsilon * LANDAU_X * LANDAU_X * x.powf(-2.0 / 3.0)).min(2.0 * epsilon)
}

/// Bound on μ(U π_n) for n ≥ n_min, from sup|j_k| ≤ (k+1/2)^{-5/6}.
pub(super) fn column_cap(epsilon: f64, n_min: usize) -> f64 {
    (4.0 * epsilon * (n_min as f64 - 0.5).powf(-2.0 / 3.0)).min(2.0 * epsilon)
}
