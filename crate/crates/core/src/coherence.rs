//! Coherence functionals of a change-of-basis operator.
//!
//! Line coherences μ(π_N U), μ(U π_N) are suprema of |U|² along one row or
//! column; block coherences μ(R_N U), μ(U R_N) drop the first N-1 rows or
//! columns. Blocks are computed as suffix maxima of lines over a scanned
//! range, reported both as measured and with an analytic tail cap added.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bases::OrderingRule;
use crate::error::{Error, Result};
use crate::operator::{DenseBlock, LineSup, OperatorHandle};

/// Largest squared modulus of an entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub value: f64,
    /// 1-based row and column of the first maximal entry.
    pub row: usize,
    pub col: usize,
}

pub fn mu(block: &DenseBlock) -> Result<Coherence> {
    if block.rows() == 0 || block.cols() == 0 {
        return Err(Error::Empty);
    }
    let mut best = Coherence {
        value: -1.0,
        row: 1,
        col: 1,
    };
    for i in 0..block.rows() {
        for (j, z) in block.row(i).iter().enumerate() {
            let v = z.norm_sqr();
            if v > best.value {
                best = Coherence {
                    value: v,
                    row: i + 1,
                    col: j + 1,
                };
            }
        }
    }
    Ok(best)
}

/// {1, ..., 64} ∪ {128, 256, ...} up to `n_max`.
pub fn default_grid(n_max: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (1..=n_max.min(64)).collect();
    let mut d = 128;
    while d <= n_max {
        g.push(d);
        d *= 2;
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub grid: Vec<usize>,
    /// Stopping factor of the adaptive line scans.
    pub safety: f64,
    /// Lines are computed up to scan_factor · max(grid).
    pub scan_factor: usize,
}

impl ProfileConfig {
    pub fn new(n_max: usize) -> Self {
        ProfileConfig {
            grid: default_grid(n_max),
            safety: 4.0,
            scan_factor: 4,
        }
    }
}

/// One grid row of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    pub line_left: f64,
    pub block_left: f64,
    pub block_left_capped: f64,
    pub line_right: f64,
    pub block_right: f64,
    pub block_right_capped: f64,
    /// Row attaining μ(R_N U) within the scanned range.
    pub argmax_m: usize,
    /// Column attaining μ(U R_N) within the scanned range.
    pub argmax_n: usize,
}

/// Suffix maxima of a line sequence, with the position attaining each.
fn suffix_max(lines: &[f64]) -> Vec<(f64, usize)> {
    let mut out = vec![(0.0, 0); lines.len()];
    let mut best = (f64::NEG_INFINITY, 0);
    for i in (0..lines.len()).rev() {
        if lines[i] >= best.0 {
            best = (lines[i], i + 1);
        }
        out[i] = best;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceProfile {
    pub rows: Vec<ProfileRow>,
    /// μ(π_M U) for M = 1..=scanned.
    pub row_lines: Vec<LineSup>,
    /// μ(U π_M) for M = 1..=scanned.
    pub column_lines: Vec<LineSup>,
    /// Caps on lines beyond the scanned range.
    pub row_tail: f64,
    pub column_tail: f64,
    /// True when every adaptive scan met its stopping rule.
    pub certified: bool,
}

impl CoherenceProfile {
    /// Build from precomputed lines (both of length ≥ max(grid)).
    pub fn from_lines(
        grid: &[usize],
        row_lines: Vec<LineSup>,
        column_lines: Vec<LineSup>,
        row_tail: f64,
        column_tail: f64,
    ) -> Result<Self> {
        let n_max = grid.iter().copied().max().ok_or(Error::Empty)?;
        if grid.contains(&0) {
            return Err(Error::invalid("grid positions start at 1"));
        }
        if row_lines.len() < n_max || column_lines.len() < n_max {
            return Err(Error::invalid("lines shorter than the grid"));
        }
        let rv: Vec<f64> = row_lines.iter().map(|s| s.value).collect();
        let cv: Vec<f64> = column_lines.iter().map(|s| s.value).collect();
        let rs = suffix_max(&rv);
        let cs = suffix_max(&cv);
        let rows = grid
            .iter()
            .map(|&n| ProfileRow {
                n,
                line_left: rv[n - 1],
                block_left: rs[n - 1].0,
                block_left_capped: rs[n - 1].0.max(row_tail),
                line_right: cv[n - 1],
                block_right: cs[n - 1].0,
                block_right_capped: cs[n - 1].0.max(column_tail),
                argmax_m: rs[n - 1].1,
                argmax_n: cs[n - 1].1,
            })
            .collect();
        let certified = row_lines.iter().chain(&column_lines).all(|s| s.certified);
        Ok(CoherenceProfile {
            rows,
            row_lines,
            column_lines,
            row_tail,
            column_tail,
            certified,
        })
    }

    pub fn grid(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn row(&self, n: usize) -> Option<&ProfileRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// μ(R_N U) for every N = 1..=scanned (measured).
    pub fn block_left_all(&self) -> Vec<f64> {
        let v: Vec<f64> = self.row_lines.iter().map(|s| s.value).collect();
        suffix_max(&v).into_iter().map(|(x, _)| x).collect()
    }

    /// μ(U R_N) for every N = 1..=scanned (measured).
    pub fn block_right_all(&self) -> Vec<f64> {
        let v: Vec<f64> = self.column_lines.iter().map(|s| s.value).collect();
        suffix_max(&v).into_iter().map(|(x, _)| x).collect()
    }

    /// Grid-sampled sequence selected by `f`, as (N, value) pairs.
    pub fn series(&self, f: impl Fn(&ProfileRow) -> f64) -> (Vec<usize>, Vec<f64>) {
        (self.grid(), self.rows.iter().map(f).collect())
    }

    /// CSV `N,mu_line_left,mu_block_left,mu_line_right,mu_block_right,argmax_m,argmax_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(
            w,
            "N,mu_line_left,mu_block_left,mu_line_right,mu_block_right,argmax_m,argmax_n"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{},{}",
                r.n, r.line_left, r.block_left, r.line_right, r.block_right, r.argmax_m, r.argmax_n
            )?;
        }
        w.flush()
    }

    /// CSV `N,mu_block_left_capped,mu_block_right_capped`.
    pub fn write_capped_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "N,mu_block_left_capped,mu_block_right_capped")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e}",
                r.n, r.block_left_capped, r.block_right_capped
            )?;
        }
        w.flush()
    }
}

/// Line and block coherences of `u` on the configured grid.
pub fn coherence_profile(u: &OperatorHandle, cfg: &ProfileConfig) -> Result<CoherenceProfile> {
    let n_max = cfg.grid.iter().copied().max().ok_or(Error::Empty)?;
    if !(cfg.safety >= 1.0) {
        return Err(Error::invalid("safety factor must be at least 1"));
    }
    let scan = n_max * cfg.scan_factor.max(1);
    let (scan_rows, scan_cols) = match u.finite_shape() {
        Some((r, c)) if n_max > r.min(c) => {
            return Err(Error::invalid(format!(
                "grid reaches {n_max} but the matrix is {r}x{c}"
            )))
        }
        Some((r, c)) => (r, c),
        None => (scan, scan),
    };
    let row_lines = u.row_lines(scan_rows, cfg.safety)?;
    let column_lines = u.column_lines(scan_cols, cfg.safety)?;
    CoherenceProfile::from_lines(
        &cfg.grid,
        row_lines,
        column_lines,
        u.row_tail_cap(scan_rows + 1),
        u.column_tail_cap(scan_cols + 1),
    )
}

/// Least-squares fit of log μ against log N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
    /// max(N^α μ)/min(N^α μ) over the fitted points, α the hypothesised exponent.
    pub ratio_spread: f64,
    /// Smallest and largest N fitted.
    pub range: (usize, usize),
    pub points: usize,
}

impl DecayFit {
    /// JSON `{slope, ci, ratio_spread, range}` plus the remaining fields.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "ci": [self.ci.0, self.ci.1],
            "ratio_spread": self.ratio_spread,
            "range": [self.range.0, self.range.1],
            "intercept": self.intercept,
            "residual": self.residual,
            "points": self.points,
        })
    }
}

pub const MIN_FIT_POINTS: usize = 8;

/// Fit `values` ~ C N^{slope} over the points with N ≥ `burn_in`.
pub fn decay_fit(ns: &[usize], values: &[f64], alpha0: f64, burn_in: usize) -> Result<DecayFit> {
    if ns.len() != values.len() {
        return Err(Error::invalid("grid and values differ in length"));
    }
    let pts: Vec<(f64, f64, usize, f64)> = ns
        .iter()
        .zip(values)
        .filter(|(n, _)| **n >= burn_in)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln(), n, v))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            got: pts.len(),
            need: MIN_FIT_POINTS,
        });
    }
    if let Some(&(_, _, n, v)) = pts.iter().find(|p| !(p.3 > 0.0) || !p.3.is_finite()) {
        return Err(Error::invalid(format!("nonpositive value {v} at N = {n}")));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = (sse / (k - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, k - 2.0)
        .expect("at least 6 degrees of freedom")
        .inverse_cdf(0.975);
    let scaled: Vec<f64> = pts
        .iter()
        .map(|p| (p.2 as f64).powf(alpha0) * p.3)
        .collect();
    Ok(DecayFit {
        slope,
        intercept,
        residual: (sse / k).sqrt(),
        ci: (slope - t * se, slope + t * se),
        ratio_spread: spread(&scaled),
        range: (pts[0].2, pts[pts.len() - 1].2),
        points: pts.len(),
    })
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// max(N^α v_N)/min(N^α v_N) over N in [lo, hi], where `values[i]` belongs to N = i+1.
pub fn ratio_spread(values: &[f64], alpha: f64, lo: usize, hi: usize) -> Result<f64> {
    if lo == 0 || hi < lo || hi > values.len() {
        return Err(Error::invalid(format!(
            "range [{lo}, {hi}] outside 1..={}",
            values.len()
        )));
    }
    let scaled: Vec<f64> = (lo..=hi)
        .map(|n| (n as f64).powf(alpha) * values[n - 1])
        .collect();
    if scaled.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("nonpositive value in ratio spread"));
    }
    Ok(spread(&scaled))
}

/// Local coherences μ_{N,M}(k,l) with N_0 = M_0 = 0, and the upper bound
/// √(min(μ(R_{N_{k-1}+1}U), μ(UR_{M_{l-1}+1})) · μ(R_{N_{k-1}+1}U)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCoherenceTable {
    pub n_bounds: Vec<usize>,
    pub m_bounds: Vec<usize>,
    /// exact[k][l]
    pub exact: Vec<Vec<f64>>,
    pub bound: Vec<Vec<f64>>,
}

fn check_bounds(v: &[usize], what: &str) -> Result<()> {
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "{what} boundaries must be strictly increasing and positive"
        )));
    }
    Ok(())
}

pub fn local_coherence(
    u: &OperatorHandle,
    n_bounds: &[usize],
    m_bounds: &[usize],
    safety: f64,
) -> Result<LocalCoherenceTable> {
    check_bounds(n_bounds, "sampling")?;
    check_bounds(m_bounds, "sparsity")?;
    let nr = *n_bounds.last().expect("nonempty");
    let mr = *m_bounds.last().expect("nonempty");
    let block = u.dense_truncation(nr, mr)?;
    let rows = u.row_lines(nr, safety)?;
    // block coherences of the infinite operator, including tail caps
    let row_block = |from: usize| -> f64 {
        rows[from - 1..]
            .iter()
            .map(|s| s.value)
            .fold(u.row_tail_cap(nr + 1), f64::max)
    };
    let cols = u.column_lines(mr, safety)?;
    let col_block = |from: usize| -> f64 {
        cols[from - 1..]
            .iter()
            .map(|s| s.value)
            .fold(u.column_tail_cap(mr + 1), f64::max)
    };
    let mut exact = Vec::new();
    let mut bound = Vec::new();
    let mut n_lo = 0;
    for &n_hi in n_bounds {
        let band = rows[n_lo..n_hi].iter().map(|s| s.value).fold(0.0, f64::max);
        let rb = row_block(n_lo + 1);
        let mut ex_row = Vec::new();
        let mut bd_row = Vec::new();
        let mut m_lo = 0;
        for &m_hi in m_bounds {
            let mut sub = 0.0f64;
            for i in n_lo..n_hi {
                for z in &block.row(i)[m_lo..m_hi] {
                    sub = sub.max(z.norm_sqr());
                }
            }
            ex_row.push((sub * band).sqrt());
            bd_row.push((rb.min(col_block(m_lo + 1)) * rb).sqrt());
            m_lo = m_hi;
        }
        exact.push(ex_row);
        bound.push(bd_row);
        n_lo = n_hi;
    }
    for (e, b) in exact.iter().flatten().zip(bound.iter().flatten()) {
        if *e > *b * (1.0 + 1e-12) {
            return Err(Error::NoConvergence(format!(
                "local coherence {e} exceeds its bound {b}; tail caps are too small"
            )));
        }
    }
    Ok(LocalCoherenceTable {
        n_bounds: n_bounds.to_vec(),
        m_bounds: m_bounds.to_vec(),
        exact,
        bound,
    })
}

/// Local coherences of a finite matrix; the row band is taken over its columns.
pub fn local_coherence_dense(
    block: &DenseBlock,
    n_bounds: &[usize],
    m_bounds: &[usize],
) -> Result<Vec<Vec<f64>>> {
    check_bounds(n_bounds, "sampling")?;
    check_bounds(m_bounds, "sparsity")?;
    if *n_bounds.last().unwrap() > block.rows() || *m_bounds.last().unwrap() > block.cols() {
        return Err(Error::invalid("boundaries exceed the matrix"));
    }
    let mut out = Vec::new();
    let mut n_lo = 0;
    for &n_hi in n_bounds {
        let band = (n_lo..n_hi)
            .flat_map(|i| block.row(i).iter().map(|z| z.norm_sqr()))
            .fold(0.0, f64::max);
        let mut row = Vec::new();
        let mut m_lo = 0;
        for &m_hi in m_bounds {
            let sub = (n_lo..n_hi)
                .flat_map(|i| block.row(i)[m_lo..m_hi].iter().map(|z| z.norm_sqr()))
                .fold(0.0, f64::max);
            row.push((sub * band).sqrt());
            m_lo = m_hi;
        }
        out.push(row);
        n_lo = n_hi;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// First decays faster: μ₁ ≤ C μ₂ with small C, not conversely.
    Faster,
    Slower,
    Equivalent,
    Incomparable,
}

/// ≺ evidence between two block sequences on a common grid. Verdicts hold
/// at truncation scale only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingComparison {
    /// Smallest C with μ(R_N U₁) ≤ C μ(R_N U₂) on the grid.
    pub c12: f64,
    /// Smallest C with μ(R_N U₂) ≤ C μ(R_N U₁) on the grid.
    pub c21: f64,
    pub threshold: f64,
    pub verdict: Relation,
    pub scale: String,
}

pub fn compare_orderings(
    block1: &[f64],
    block2: &[f64],
    threshold: f64,
) -> Result<OrderingComparison> {
    if block1.len() != block2.len() || block1.is_empty() {
        return Err(Error::invalid("sequences must share a nonempty grid"));
    }
    if block1.iter().chain(block2).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("block coherences must be positive"));
    }
    let c12 = block1
        .iter()
        .zip(block2)
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max);
    let c21 = block1
        .iter()
        .zip(block2)
        .map(|(a, b)| b / a)
        .fold(0.0, f64::max);
    let verdict = match (c12 <= threshold, c21 <= threshold) {
        (true, true) => Relation::Equivalent,
        (true, false) => Relation::Faster,
        (false, true) => Relation::Slower,
        (false, false) => Relation::Incomparable,
    };
    Ok(OrderingComparison {
        c12,
        c21,
        threshold,
        verdict,
        scale: format!("at truncation scale, {} grid points", block1.len()),
    })
}

/// Compare the left orderings of two operators over the same grid.
pub fn compare_operator_orderings(
    u1: &OperatorHandle,
    u2: &OperatorHandle,
    cfg: &ProfileConfig,
    threshold: f64,
) -> Result<OrderingComparison> {
    let p1 = coherence_profile(u1, cfg)?;
    let p2 = coherence_profile(u2, cfg)?;
    let b1: Vec<f64> = p1.rows.iter().map(|r| r.block_left).collect();
    let b2: Vec<f64> = p2.rows.iter().map(|r| r.block_left).collect();
    compare_orderings(&b1, &b2, threshold)
}

/// Greedy best ordering of the first `rows` positions: sorted by descending
/// row supremum (ties keep the current order). Returns the new left ordering.
pub fn greedy_best_ordering(u: &OperatorHandle, rows: usize, safety: f64) -> Result<OrderingRule> {
    let lines = u.row_lines(rows, safety)?;
    let mut pos: Vec<usize> = (1..=rows).collect();
    pos.sort_by(|&a, &b| lines[b - 1].value.total_cmp(&lines[a - 1].value));
    let prefix = pos
        .iter()
        .map(|&m| u.left_ordering().canonical(m))
        .collect();
    OrderingRule::permutation(prefix)
}

/// S_K = Σ_{N ≤ K} μ(R_N U) for K = 1..=len.
pub fn divergence_partial_sums(blocks: &[f64]) -> Vec<f64> {
    blocks
        .iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

/// Decreasing envelope c N^α lying below `lines` (values for N = 1..), with
/// α taken from a fit and c the largest constant keeping it below.
pub fn lower_power_envelope(lines: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if !(alpha <= 0.0) {
        return Err(Error::invalid("envelope exponent must be nonpositive"));
    }
    let c = lines
        .iter()
        .enumerate()
        .map(|(i, v)| v / ((i + 1) as f64).powf(alpha))
        .fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Err(Error::invalid("lines must be positive"));
    }
    Ok((c, alpha))
}

/// Lines of U' whose left ordering is `rule`, given the lines of U under the
/// canonical left ordering (row suprema depend only on the row element).
pub fn reorder_lines(canonical_lines: &[LineSup], rule: &OrderingRule) -> Result<Vec<LineSup>> {
    (1..=canonical_lines.len())
        .map(|m| {
            let c = rule.canonical(m);
            canonical_lines.get(c - 1).copied().ok_or_else(|| {
                Error::invalid(format!("canonical index {c} outside the scanned lines"))
            })
        })
        .collect()
}
