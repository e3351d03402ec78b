//! Acceptance criteria, one PASS/FAIL line each. Criteria listed in
//! `KNOWN_RED` are reported but do not fail the run; any other failure does.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use incoherence::bases::OrderingRule;
use incoherence::coherence::{
    coherence_profile, decay_fit, divergence_partial_sums, lower_power_envelope, ratio_spread,
    reorder_lines, CoherenceProfile, ProfileConfig,
};
use incoherence::isometry::{
    build_isometry, negative_control, verify_counterexample, Envelope, EnvelopePair,
};
use incoherence::operator::{
    entry_fourier_legendre, entry_fourier_legendre_bessel, DenseBlock, OperatorHandle,
};
use incoherence::recovery::{
    reconstruct_experiment, solve_bp, FlipConfig, FlipMode, ReconstructionBasis,
    ReconstructionConfig, SamplingPattern, SolverConfig,
};
use incoherence::special::{cascade_values, spherical_bessel_sup, CascadeValues, WaveletFamily};

/// Criteria expected to fail, with the reason printed next to them.
const KNOWN_RED: &[(u32, &str)] = &[
    (
        3,
        "the Fourier-Legendre entry formula gives μ(π_1 U) = 2ε, not ε",
    ),
    (
        7,
        "two-level pattern A leaves 5 central rows unsampled; Legendre ℓ1 recovery fails",
    ),
];

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: u32, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = f();
    Outcome {
        id,
        name,
        passed,
        detail,
        elapsed: t.elapsed(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn wavelet_profile(p: usize, j: u32, n_max: usize) -> CoherenceProfile {
    let u = OperatorHandle::fourier_wavelet_endpoint(p, j).unwrap();
    coherence_profile(&u, &ProfileConfig::new(n_max)).unwrap()
}

/// Slopes of both block coherences and the ratio spread of N^α μ(R_N U).
fn decay_check(
    profile: &CoherenceProfile,
    alpha: f64,
    slope_range: (f64, f64),
    spread_range: (usize, usize),
) -> (bool, String) {
    let (ns, left) = profile.series(|r| r.block_left);
    let (_, right) = profile.series(|r| r.block_right);
    let fl = decay_fit(&ns, &left, alpha, 32).unwrap();
    let fr = decay_fit(&ns, &right, alpha, 32).unwrap();
    let spread = ratio_spread(
        &profile.block_left_all(),
        alpha,
        spread_range.0,
        spread_range.1,
    )
    .unwrap();
    let inside = |s: f64| s >= slope_range.0 && s <= slope_range.1;
    (
        inside(fl.slope) && inside(fr.slope) && spread <= 10.0,
        format!(
            "slopes {:.3}/{:.3}, spread {:.2}",
            fl.slope, fr.slope, spread
        ),
    )
}

fn criterion_1(haar: &CoherenceProfile) -> (bool, String) {
    let n_max = 1 << 13;
    let db4 = wavelet_profile(4, 4, n_max);
    let (a, da) = decay_check(haar, 1.0, (-1.15, -0.85), (32, n_max));
    let (b, db) = decay_check(&db4, 1.0, (-1.15, -0.85), (32, n_max));
    (a && b, format!("haar J=3: {da}; db4 J=4: {db}"))
}

fn criterion_2() -> (bool, String) {
    let n_max = 1 << 11;
    let u = OperatorHandle::fourier_legendre(0.4).unwrap();
    let profile = coherence_profile(&u, &ProfileConfig::new(n_max)).unwrap();
    let (ok, d) = decay_check(&profile, 2.0 / 3.0, (-0.80, -0.55), (32, n_max));
    (ok, format!("legendre ε=0.4: {d}"))
}

fn criterion_3() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, j) in [(1usize, 3u32), (4, 4)] {
        let u = OperatorHandle::fourier_wavelet_endpoint(p, j).unwrap();
        let eps = u.epsilon().unwrap();
        let got = u.row_sup(1, 4.0).unwrap().value;
        let want = eps * (-(j as f64)).exp2();
        ok &= (got - want).abs() < 1e-10;
        parts.push(format!("p={p} J={j}: {got:.12} vs ε2^-J {want:.12}"));
    }
    let u = OperatorHandle::fourier_legendre(0.4).unwrap();
    let got = u.row_sup(1, 4.0).unwrap().value;
    ok &= (got - 0.4).abs() < 1e-10;
    parts.push(format!("legendre: {got:.12} vs ε 0.4"));
    (ok, parts.join("; "))
}

fn criterion_4() -> (bool, String) {
    let ns = [1usize, 5, 10, 50, 100, 200];
    let v: Vec<f64> = ns
        .iter()
        .map(|&n| (n as f64 + 0.5).powf(5.0 / 6.0) * spherical_bessel_sup(n).unwrap())
        .collect();
    let in_range = v.iter().all(|&x| x > 0.5 && x < 1.0);
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0);
    // per unit of log n the steps shrink
    let rates: Vec<f64> = d
        .iter()
        .zip(ns.windows(2))
        .map(|(x, w)| x.abs() / (w[1] as f64 / w[0] as f64).ln())
        .collect();
    let converging = rates.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    (
        in_range && monotone && converging,
        format!("(n+1/2)^(5/6) sup|j_n| = [{}]", shown.join(", ")),
    )
}

fn criterion_5() -> (bool, String) {
    let horizon = 1 << 20;
    let pairs = [
        ("f=1/N g=2^-j", Envelope::Harmonic, Envelope::Geometric),
        (
            "f=1/(N ln(N+1)) g=1/j^2",
            Envelope::LogHarmonic,
            Envelope::InverseSquare,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f, g) in pairs {
        let iso = build_isometry(&EnvelopePair::new(f, g), horizon).unwrap();
        let report = verify_counterexample(&iso);
        let control = verify_counterexample(&negative_control(&iso));
        ok &= report.passed() && !control.passed();
        parts.push(format!(
            "{name}: checks {}, negative control {}",
            if report.passed() { "pass" } else { "FAIL" },
            if control.passed() {
                "ACCEPTED"
            } else {
                "rejected"
            }
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_6(haar: &CoherenceProfile) -> (bool, String) {
    let blocks = haar.block_left_all();
    let s = divergence_partial_sums(&blocks[..1 << 13]);
    let at = |k: u32| s[(1usize << k) - 1];
    let inc: Vec<f64> = (0..=12).map(|k| at(k + 1) - at(k)).collect();
    let min_ratio = inc.iter().map(|d| d / inc[0]).fold(f64::INFINITY, f64::min);
    (
        min_ratio >= 0.2,
        format!(
            "increments k=0 {:.4}, k=10..12 {:.4} {:.4} {:.4}; min ratio to first {:.3}",
            inc[0], inc[10], inc[11], inc[12], min_ratio
        ),
    )
}

fn criterion_7() -> (bool, String) {
    let cases = [
        (ReconstructionBasis::default_wavelet(), SamplingPattern::A),
        (ReconstructionBasis::default_wavelet(), SamplingPattern::B),
        (ReconstructionBasis::Legendre, SamplingPattern::A),
        (ReconstructionBasis::Legendre, SamplingPattern::B),
    ];
    let jobs: Vec<(usize, u64)> = (0..cases.len())
        .flat_map(|c| (0..5).map(move |s| (c, s)))
        .collect();
    let errors: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let (basis, pattern) = cases[c].clone();
            let out =
                reconstruct_experiment(&ReconstructionConfig::new(basis, pattern, seed)).unwrap();
            (c, out.l1_error)
        })
        .collect();
    let med: Vec<f64> = (0..cases.len())
        .map(|c| median(errors.iter().filter(|e| e.0 == c).map(|e| e.1).collect()))
        .collect();
    let (wa, wb, la, lb) = (med[0], med[1], med[2], med[3]);
    let ok = wb < wa && la < lb && wb < 5e-2 && la < 5e-2;
    (
        ok,
        format!(
            "median L1: wav A {wa:.3e}, wav B {wb:.3e}, leg A {la:.3e}, leg B {lb:.3e}; \
             wB<wA {}, lA<lB {}, wB<5e-2 {}, lA<5e-2 {}",
            wb < wa,
            la < lb,
            wb < 5e-2,
            la < 5e-2
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let runs: Vec<(f64, f64)> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let full = FlipConfig::new(FlipMode::Full, seed).run().unwrap();
            let within = FlipConfig::new(FlipMode::WithinLevel { seed }, seed)
                .run()
                .unwrap();
            (full.ratio, within.ratio)
        })
        .collect();
    let full = median(runs.iter().map(|r| r.0).collect());
    let within = median(runs.iter().map(|r| r.1).collect());
    (
        full >= 2.0 && within <= 2.0,
        format!("median ratio full flip {full:.3}, within-level {within:.3}"),
    )
}

fn gauss_solve(mut g: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = g.len();
    for col in 0..k {
        let p = (col..k).max_by(|&i, &j| g[i][col].abs().total_cmp(&g[j][col].abs()))?;
        if g[p][col].abs() < 1e-9 {
            return None;
        }
        g.swap(col, p);
        for r in 0..k {
            if r != col {
                let f = g[r][col] / g[col][col];
                for c in col..=k {
                    g[r][c] -= f * g[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| g[i][k] / g[i][i]).collect())
}

/// min ‖x‖₁ subject to Ax = y over real x, by enumerating square supports.
fn vertex_enumeration(a: &[Vec<f64>], y: &[f64]) -> f64 {
    let (m, n) = (a.len(), a[0].len());
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let s: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let g = (0..m)
            .map(|i| {
                let mut row: Vec<f64> = s.iter().map(|&j| a[i][j]).collect();
                row.push(y[i]);
                row
            })
            .collect();
        if let Some(z) = gauss_solve(g) {
            best = best.min(z.iter().map(|v| v.abs()).sum());
        }
    }
    best
}

fn cascade_quadrature(values: &[f64], c: &CascadeValues, w: f64) -> Complex64 {
    // composite midpoint rule on the odd grid points
    let h = 2.0 * c.step();
    (1..values.len())
        .step_by(2)
        .map(|i| Complex64::cis(-2.0 * PI * w * c.abscissa(i)) * values[i])
        .sum::<Complex64>()
        * h
}

fn criterion_9() -> (bool, String) {
    // basis pursuit against vertex enumeration; real data, so the complex
    // optimum is the real one
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let cfg = SolverConfig {
        feas_tol: 1e-9,
        max_iter: 200_000,
        objective_tol: 1e-12,
        ..SolverConfig::default()
    };
    let (m, n) = (5, 8);
    let mut solver_gap = 0.0f64;
    for _ in 0..10 {
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = vertex_enumeration(&a, &y);
        let block = DenseBlock::new(
            m,
            n,
            a.iter()
                .flatten()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        )
        .unwrap();
        let yc: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let r = solve_bp(&block, &yc, &cfg).unwrap();
        let gap = if r.converged {
            (r.objective - oracle).abs()
        } else {
            f64::INFINITY
        };
        solver_gap = solver_gap.max(gap);
    }

    let ft_gap = (1..=6usize)
        .into_par_iter()
        .map(|p| {
            let f = WaveletFamily::daubechies(p).unwrap();
            let c = cascade_values(f, 19).unwrap();
            (-32..=32)
                .map(|i| {
                    let w = i as f64 + 0.031;
                    let a = (f.scaling_ft(w) - cascade_quadrature(&c.phi, &c, w)).norm();
                    let b = (f.wavelet_ft(w) - cascade_quadrature(&c.psi, &c, w)).norm();
                    a.max(b)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(0x1e9e);
    let mut dual_gap = 0.0f64;
    for _ in 0..1000 {
        let eps = rng.gen_range(0.05..0.5);
        let mut lambda = rng.gen_range(-400i64..=400);
        if lambda == 0 {
            lambda = 1;
        }
        let k = rng.gen_range(1usize..=300);
        let a = entry_fourier_legendre(eps, lambda, k);
        let b = entry_fourier_legendre_bessel(eps, lambda, k).unwrap();
        dual_gap = dual_gap.max((a - b).norm());
    }
    (
        solver_gap < 1e-6 && ft_gap < 1e-6 && dual_gap < 1e-10,
        format!(
            "ℓ1 gap {solver_gap:.2e}, transform gap {ft_gap:.2e}, Legendre dual gap {dual_gap:.2e}"
        ),
    )
}

fn criterion_10(haar: &CoherenceProfile) -> (bool, String) {
    let n_max = 1 << 13;
    let canonical: Vec<f64> = haar.row_lines[..n_max].iter().map(|s| s.value).collect();
    let grid = haar.grid();
    let line_values: Vec<f64> = grid.iter().map(|&n| canonical[n - 1]).collect();
    let fit = decay_fit(&grid, &line_values, 1.0, 32).unwrap();
    let (c, alpha) = lower_power_envelope(&canonical, fit.slope.min(0.0)).unwrap();
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let rule = OrderingRule::random_prefix(2048, seed);
        let lines = reorder_lines(&haar.row_lines, &rule).unwrap();
        // μ(R_N U') from the scanned lines, a lower estimate of the true value
        let mut suffix = vec![0.0f64; lines.len() + 1];
        for i in (0..lines.len()).rev() {
            suffix[i] = suffix[i + 1].max(lines[i].value);
        }
        for &n in &grid {
            worst = worst.min(suffix[n - 1] / (c * (n as f64).powf(alpha)));
        }
    }
    (
        worst >= 1.0,
        format!("envelope {c:.3e} N^{alpha:.3}; min ratio μ(R_N U')/envelope over 20 orderings {worst:.3}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut out = Vec::new();
    // the Haar profile is shared with criteria 6 and 10 and timed with 1
    let t1 = Instant::now();
    let haar = wavelet_profile(1, 3, 1 << 13);
    let mut first = timed(1, "Fourier-wavelet decay", || criterion_1(&haar));
    first.elapsed = t1.elapsed();
    out.push(first);
    out.push(timed(2, "Fourier-Legendre decay", criterion_2));
    out.push(timed(3, "exact first-row anchors", criterion_3));
    out.push(timed(4, "Bessel extremal law", criterion_4));
    out.push(timed(5, "pathological isometry", criterion_5));
    out.push(timed(6, "divergence of block coherence sums", || {
        criterion_6(&haar)
    }));
    out.push(timed(7, "reconstruction cross-over", criterion_7));
    out.push(timed(8, "flip test", criterion_8));
    out.push(timed(9, "oracle equivalences", criterion_9));
    out.push(timed(10, "ordering optimality", || criterion_10(&haar)));

    let limits = [(1, 300.0), (2, 300.0), (5, 60.0), (7, 600.0)];
    let mut unexpected = Vec::new();
    println!();
    for o in &out {
        let limit = limits.iter().find(|l| l.0 == o.id).map(|l| l.1);
        let secs = o.elapsed.as_secs_f64();
        let slow = limit.is_some_and(|l| secs > l);
        let passed = o.passed && !slow;
        let red = KNOWN_RED.iter().find(|r| r.0 == o.id);
        println!(
            "[{}] {:>2} {}: {} ({secs:.1}s{})",
            if passed { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail,
            limit
                .map(|l| format!(", limit {l:.0}s"))
                .unwrap_or_default()
        );
        match (passed, red) {
            (false, Some((_, why))) => println!("       known failure: {why}"),
            (false, None) => unexpected.push(o.id),
            _ => {}
        }
    }
    println!("\ntotal {:.1}s", start.elapsed().as_secs_f64());
    assert!(
        unexpected.is_empty(),
        "unexpected acceptance failures: {unexpected:?}"
    );
}
