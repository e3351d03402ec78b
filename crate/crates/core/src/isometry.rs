//! An isometry of ℓ²(ℕ) whose row and column block coherences stay below
//! any prescribed decreasing envelopes f and g, provided Σf diverges.
//!
//! ℕ is split into Ω_j = 2^{j-1}ℕ \ 2^jℕ. Column j lives on Ω_j and takes
//! entries √(g(j)f(N)) until the next one would overshoot unit norm, then one
//! closing entry √(1 - Σ), then zeros. Supports are disjoint, so the columns
//! are orthonormal as soon as each closes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A decreasing positive sequence on ℕ = {1, 2, ...}, capped at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Envelope {
    /// 1/N
    Harmonic,
    /// min(1, 1/(N ln(N+1)))
    LogHarmonic,
    /// 2^{-N}
    Geometric,
    /// 1/N²
    InverseSquare,
    Constant {
        value: f64,
    },
    /// Values for N = 1..=len, extended by the last value.
    Table {
        values: Vec<f64>,
    },
}

impl Envelope {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "harmonic" => Envelope::Harmonic,
            "log_harmonic" => Envelope::LogHarmonic,
            "geometric" => Envelope::Geometric,
            "inverse_square" => Envelope::InverseSquare,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown envelope preset '{name}' (harmonic, log_harmonic, geometric, inverse_square)"
                )))
            }
        })
    }

    pub fn eval(&self, n: usize) -> f64 {
        let x = n as f64;
        let v = match self {
            Envelope::Harmonic => 1.0 / x,
            Envelope::LogHarmonic => 1.0 / (x * (x + 1.0).ln()),
            Envelope::Geometric => 0.5f64.powi(n.min(2000) as i32),
            Envelope::InverseSquare => 1.0 / (x * x),
            Envelope::Constant { value } => *value,
            Envelope::Table { values } => values[(n - 1).min(values.len() - 1)],
        };
        v.min(1.0)
    }

    fn validate(&self, name: &str, upto: usize) -> Result<()> {
        match self {
            Envelope::Constant { value } if !(*value > 0.0) => {
                return Err(Error::invalid(format!("{name}: constant must be positive")))
            }
            Envelope::Table { values } if values.is_empty() => {
                return Err(Error::invalid(format!("{name}: empty table")))
            }
            _ => {}
        }
        let mut prev = f64::INFINITY;
        for n in 1..=upto {
            let v = self.eval(n);
            if !(v > 0.0) || v > prev {
                return Err(Error::invalid(format!(
                    "{name} must be positive and nonincreasing; fails at N = {n}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Row envelope f and column envelope g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub f: Envelope,
    pub g: Envelope,
}

impl EnvelopePair {
    pub fn new(f: Envelope, g: Envelope) -> Self {
        EnvelopePair { f, g }
    }

    /// Monotonicity and positivity of f on 1..=horizon and of g on the
    /// columns touching that range.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        self.f.validate("f", horizon)?;
        self.g.validate("g", column_count(horizon))
    }
}

/// Number of Ω_j meeting {1, ..., horizon}.
pub fn column_count(horizon: usize) -> usize {
    if horizon == 0 {
        0
    } else {
        horizon.ilog2() as usize + 1
    }
}

/// {N ≤ horizon : N ≡ 2^{j-1} mod 2^j}.
pub fn omega_partition(j: usize, horizon: usize) -> Vec<usize> {
    omega(j, horizon).collect()
}

fn omega(j: usize, horizon: usize) -> impl Iterator<Item = usize> {
    let base = if j == 0 || j > 63 {
        usize::MAX
    } else {
        1usize << (j - 1)
    };
    (0usize..)
        .map(move |k| base.saturating_mul(2 * k + 1))
        .take_while(move |&n| n <= horizon && base != usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseColumn {
    pub j: usize,
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
    /// Unit norm reached within the horizon.
    pub closed: bool,
}

impl SparseColumn {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Column j truncated to the horizon; may be open.
pub fn build_column_truncated(
    j: usize,
    env: &EnvelopePair,
    horizon: usize,
) -> Result<SparseColumn> {
    if j == 0 {
        return Err(Error::invalid("columns are numbered from 1"));
    }
    let gj = env.g.eval(j);
    let mut col = SparseColumn {
        j,
        positions: Vec::new(),
        values: Vec::new(),
        closed: false,
    };
    let mut sum = 0.0;
    for n in omega(j, horizon) {
        let step = gj * env.f.eval(n);
        if sum + step <= 1.0 {
            let v = step.sqrt();
            col.positions.push(n);
            col.values.push(v);
            sum += step;
            if sum == 1.0 {
                col.closed = true;
                break;
            }
        } else {
            let v = (1.0 - sum).sqrt();
            if v > 0.0 {
                col.positions.push(n);
                col.values.push(v);
            }
            col.closed = true;
            break;
        }
    }
    Ok(col)
}

/// Column j, which must close within the horizon.
pub fn build_column(j: usize, env: &EnvelopePair, horizon: usize) -> Result<SparseColumn> {
    let col = build_column_truncated(j, env, horizon)?;
    if !col.closed {
        return Err(Error::MassNotReached {
            column: j,
            mass: col.norm_sqr(),
            horizon,
        });
    }
    Ok(col)
}

/// The leading horizon × column_count(horizon) section of the isometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologicalIsometry {
    pub env: EnvelopePair,
    pub horizon: usize,
    pub columns: Vec<SparseColumn>,
}

pub fn build_isometry(env: &EnvelopePair, horizon: usize) -> Result<PathologicalIsometry> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    env.validate(horizon)?;
    let columns = (1..=column_count(horizon))
        .into_par_iter()
        .map(|j| build_column_truncated(j, env, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathologicalIsometry {
        env: env.clone(),
        horizon,
        columns,
    })
}

impl PathologicalIsometry {
    /// Squared entry in each row 1..=horizon (each row meets at most one column).
    pub fn row_moduli(&self) -> Vec<f64> {
        let mut rows = vec![0.0f64; self.horizon];
        for c in &self.columns {
            for (&n, &v) in c.positions.iter().zip(&c.values) {
                if n <= self.horizon {
                    rows[n - 1] = rows[n - 1].max(v * v);
                }
            }
        }
        rows
    }

    /// μ(R_N U) for N = 1..=horizon.
    pub fn row_blocks(&self) -> Vec<f64> {
        suffix_max(self.row_moduli())
    }

    /// μ(U R_N) for N = 1..=columns (later columns vanish within the horizon).
    pub fn column_blocks(&self) -> Vec<f64> {
        suffix_max(
            self.columns
                .iter()
                .map(|c| c.values.iter().map(|v| v * v).fold(0.0, f64::max))
                .collect(),
        )
    }

    /// Sparse triplets `N,j,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "N,j,value")?;
        for c in &self.columns {
            for (n, v) in c.positions.iter().zip(&c.values) {
                writeln!(w, "{},{},{:e}", n, c.j, v)?;
            }
        }
        w.flush()
    }
}

fn suffix_max(mut v: Vec<f64>) -> Vec<f64> {
    for i in (0..v.len().saturating_sub(1)).rev() {
        v[i] = v[i].max(v[i + 1]);
    }
    v
}

/// Location of a failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub column: Option<usize>,
    pub row: Option<usize>,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub horizon: usize,
    pub columns: usize,
    pub closed_columns: usize,
    pub checks: Vec<Check>,
    /// Σ_{N ≤ K} μ(R_N U) at K = 2^k ≤ horizon.
    pub dyadic_partial_sums: Vec<(usize, f64)>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

const NORM_TOL: f64 = 1e-14;
const ENVELOPE_SLACK: f64 = 1e-12;

fn check(name: &str, witness: Option<Witness>) -> Check {
    Check {
        name: name.into(),
        passed: witness.is_none(),
        witness,
    }
}

/// Supports in Ω_j, disjointness, norms (unit for closed columns, at most 1
/// for open ones, nothing after the closing entry), and both envelopes over
/// the whole horizon.
pub fn verify_counterexample(iso: &PathologicalIsometry) -> VerificationReport {
    let env = &iso.env;
    let h = iso.horizon;

    let support = iso.columns.iter().find_map(|c| {
        let base = 1usize << (c.j - 1);
        let bad = c
            .positions
            .iter()
            .zip(&c.values)
            .zip(std::iter::once(0).chain(c.positions.iter().copied()))
            .find(|((&n, _), prev)| n > h || n % base != 0 || (n / base) % 2 != 1 || n <= *prev);
        bad.map(|((&n, &v), _)| Witness {
            column: Some(c.j),
            row: Some(n),
            value: v,
            bound: 0.0,
        })
    });

    let mut owner = vec![0usize; h];
    let mut overlap = None;
    'outer: for c in &iso.columns {
        for &n in &c.positions {
            if n == 0 || n > h {
                continue;
            }
            if owner[n - 1] != 0 {
                overlap = Some(Witness {
                    column: Some(c.j),
                    row: Some(n),
                    value: owner[n - 1] as f64,
                    bound: 0.0,
                });
                break 'outer;
            }
            owner[n - 1] = c.j;
        }
    }

    let norms = iso.columns.iter().find_map(|c| {
        let s = c.norm_sqr();
        let bad = if c.closed {
            (s - 1.0).abs() > NORM_TOL
        } else {
            s > 1.0 + NORM_TOL
        };
        bad.then_some(Witness {
            column: Some(c.j),
            row: None,
            value: s,
            bound: 1.0,
        })
    });

    let closing = iso.columns.iter().find_map(|c| {
        // before the last entry the running sum plus the full step stays ≤ 1
        let gj = env.g.eval(c.j);
        let mut sum = 0.0;
        let k = c.values.len();
        for (i, (&n, &v)) in c.positions.iter().zip(&c.values).enumerate() {
            let step = gj * env.f.eval(n);
            let last = c.closed && i + 1 == k;
            if !last && (v * v - step).abs() > 4.0 * f64::EPSILON * step {
                return Some(Witness {
                    column: Some(c.j),
                    row: Some(n),
                    value: v * v,
                    bound: step,
                });
            }
            sum += v * v;
        }
        (sum > 1.0 + NORM_TOL).then_some(Witness {
            column: Some(c.j),
            row: None,
            value: sum,
            bound: 1.0,
        })
    });

    let entry_env = iso.columns.iter().find_map(|c| {
        let gj = env.g.eval(c.j);
        c.positions.iter().zip(&c.values).find_map(|(&n, &v)| {
            let b = gj * env.f.eval(n);
            (v * v > b * (1.0 + ENVELOPE_SLACK)).then_some(Witness {
                column: Some(c.j),
                row: Some(n),
                value: v * v,
                bound: b,
            })
        })
    });

    let rows = iso.row_blocks();
    let row_env = rows.iter().enumerate().find_map(|(i, &m)| {
        let b = env.f.eval(i + 1);
        (m > b * (1.0 + ENVELOPE_SLACK)).then(|| Witness {
            column: None,
            row: Some(i + 1),
            value: m,
            bound: b,
        })
    });

    let col_env = iso.column_blocks().iter().enumerate().find_map(|(i, &m)| {
        let b = env.g.eval(i + 1);
        (m > b * (1.0 + ENVELOPE_SLACK)).then(|| Witness {
            column: Some(i + 1),
            row: None,
            value: m,
            bound: b,
        })
    });

    let mut dyadic = Vec::new();
    let mut s = 0.0;
    for (i, m) in rows.iter().enumerate() {
        s += m;
        if (i + 1).is_power_of_two() {
            dyadic.push((i + 1, s));
        }
    }

    VerificationReport {
        horizon: h,
        columns: iso.columns.len(),
        closed_columns: iso.columns.iter().filter(|c| c.closed).count(),
        checks: vec![
            check("support in omega_j", support),
            check("disjoint supports", overlap),
            check("column norms", norms),
            check("recursion and single closing entry", closing),
            check("entry envelope f(N)g(j)", entry_env),
            check("row block envelope", row_env),
            check("column block envelope", col_env),
        ],
        dyadic_partial_sums: dyadic,
    }
}

/// Double one stored entry of the first column; verification must fail.
pub fn negative_control(iso: &PathologicalIsometry) -> PathologicalIsometry {
    let mut bad = iso.clone();
    if let Some(c) = bad.columns.iter_mut().find(|c| !c.values.is_empty()) {
        c.values[0] *= 2.0;
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> EnvelopePair {
        EnvelopePair::new(
            Envelope::Constant { value: 0.5 },
            Envelope::Constant { value: 0.5 },
        )
    }

    #[test]
    fn partition_examples() {
        assert_eq!(omega_partition(1, 10), vec![1, 3, 5, 7, 9]);
        assert_eq!(omega_partition(2, 12), vec![2, 6, 10]);
        let h = 1000;
        let mut seen = vec![0; h];
        for j in 1..=column_count(h) {
            for n in omega_partition(j, h) {
                seen[n - 1] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn constant_half_column() {
        let c = build_column(1, &half(), 100).unwrap();
        assert_eq!(c.positions, vec![1, 3, 5, 7]);
        assert_eq!(c.values, vec![0.5; 4]);
        assert_eq!(c.norm_sqr(), 1.0);
        let iso = build_isometry(&half(), 1 << 10).unwrap();
        assert!(verify_counterexample(&iso).passed());
    }

    #[test]
    fn harmonic_unit_g_is_first_unit_vector() {
        let env = EnvelopePair::new(Envelope::Harmonic, Envelope::Constant { value: 1.0 });
        let c = build_column(1, &env, 10).unwrap();
        assert_eq!((c.positions, c.values), (vec![1], vec![1.0]));
    }

    #[test]
    fn short_horizon_reports_mass() {
        let env = EnvelopePair::new(Envelope::Harmonic, Envelope::Geometric);
        match build_column(2, &env, 1000) {
            Err(Error::MassNotReached {
                column,
                mass,
                horizon,
            }) => {
                assert_eq!((column, horizon), (2, 1000));
                assert!(mass > 0.0 && mass < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn harmonic_geometric_passes_and_control_fails() {
        let env = EnvelopePair::new(Envelope::Harmonic, Envelope::Geometric);
        let iso = build_isometry(&env, 1 << 14).unwrap();
        let r = verify_counterexample(&iso);
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(r.closed_columns >= 1);
        // Σ μ(R_N U) ≤ Σ 1/N
        for &(k, s) in &r.dyadic_partial_sums {
            let h: f64 = (1..=k).map(|n| 1.0 / n as f64).sum();
            assert!(s <= h * (1.0 + 1e-12));
        }
        let bad = verify_counterexample(&negative_control(&iso));
        let f = bad.first_failure().unwrap();
        assert_eq!(f.name, "column norms");
        assert_eq!(f.witness.as_ref().unwrap().column, Some(1));
    }

    #[test]
    fn unknown_preset_and_increasing_table_error() {
        assert!(Envelope::preset("cubic").is_err());
        let env = EnvelopePair::new(
            Envelope::Table {
                values: vec![0.5, 0.6],
            },
            Envelope::Geometric,
        );
        assert!(build_isometry(&env, 8).is_err());
    }

    #[test]
    fn log_harmonic_is_capped() {
        assert_eq!(Envelope::LogHarmonic.eval(1), 1.0);
        assert!(Envelope::LogHarmonic.eval(2) < 1.0);
    }

    proptest! {
        #[test]
        fn entries_respect_envelope(c in 0.05f64..1.0, a in 0.3f64..1.0, j in 1usize..4) {
            let f: Vec<f64> = (1..=4096).map(|n| c * (n as f64).powf(-a)).collect();
            let env = EnvelopePair::new(Envelope::Table { values: f }, Envelope::InverseSquare);
            let col = build_column_truncated(j, &env, 4096).unwrap();
            let gj = env.g.eval(j);
            for (&n, &v) in col.positions.iter().zip(&col.values) {
                prop_assert!(v * v <= gj * env.f.eval(n) * (1.0 + 1e-15));
                prop_assert_eq!(n % (1 << (j - 1)), 0);
            }
            prop_assert!(col.norm_sqr() <= 1.0 + 1e-14);
            if col.closed {
                prop_assert!((col.norm_sqr() - 1.0).abs() <= 1e-14);
            }
        }
    }
}
