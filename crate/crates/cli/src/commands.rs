use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use incoherence::bases::{BasisConfig, OrderingConfig};
use incoherence::coherence::{self, coherence_profile, decay_fit, local_coherence, ProfileConfig};
use incoherence::isometry::{
    build_isometry, negative_control, verify_counterexample, Envelope, EnvelopePair,
};
use incoherence::operator::OperatorHandle;
use incoherence::recovery::{
    plan_budgets, reconstruct_experiment, FlipConfig, FlipMode, ReconstructionBasis,
    ReconstructionConfig, SamplingPattern, SolverConfig,
};

use crate::run::Run;
use crate::CliError;

/// Settings from `--config`, or the defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn fourier() -> BasisConfig {
    BasisConfig::Fourier {
        epsilon: None,
        ordering: OrderingConfig::Frequency,
    }
}

fn haar() -> BasisConfig {
    BasisConfig::Daubechies {
        p: 1,
        coarse_level: 0,
        ordering: OrderingConfig::Leveled,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSettings {
    pub left: BasisConfig,
    pub right: BasisConfig,
    pub n_max: usize,
    pub safety: f64,
    pub scan_factor: usize,
    pub burn_in: usize,
    /// Hypothesised decay exponent; 2/3 for Legendre and 1 otherwise when omitted.
    pub alpha: Option<f64>,
}

impl Default for CoherenceSettings {
    fn default() -> Self {
        CoherenceSettings {
            left: fourier(),
            right: haar(),
            n_max: 1024,
            safety: 4.0,
            scan_factor: 4,
            burn_in: 32,
            alpha: None,
        }
    }
}

const PROFILE_PLOT: &str = "\
set datafile separator ','
set logscale xy
set xlabel 'N'
set ylabel 'coherence'
set key top right
plot 'profile.csv' using 1:3 with linespoints title 'mu(R_N U)', \\
     'profile.csv' using 1:5 with linespoints title 'mu(U R_N)', \\
     'profile_capped.csv' using 1:2 with lines dashtype 2 title 'mu(R_N U) with tail cap', \\
     'profile_capped.csv' using 1:3 with lines dashtype 2 title 'mu(U R_N) with tail cap'
";

fn fit_json(ns: &[usize], values: &[f64], alpha: f64, burn_in: usize) -> Result<Value, CliError> {
    match decay_fit(ns, values, alpha, burn_in) {
        Ok(fit) => Ok(fit.to_json()),
        Err(e @ incoherence::Error::TooFewPoints { .. }) => Ok(json!({ "error": e.to_string() })),
        Err(e) => Err(e.into()),
    }
}

pub fn coherence_cmd(cfg: &CoherenceSettings, out: &Path, seed: u64) -> Result<(), CliError> {
    if cfg.n_max == 0 {
        return Err(CliError::Config("n_max must be positive".into()));
    }
    let alpha = cfg.alpha.unwrap_or(match cfg.right {
        BasisConfig::Legendre { .. } => 2.0 / 3.0,
        _ => 1.0,
    });
    let mut run = Run::start(out, "coherence", cfg, seed)?;
    let u = OperatorHandle::from_config(&cfg.left, &cfg.right)?;
    let profile = coherence_profile(
        &u,
        &ProfileConfig {
            safety: cfg.safety,
            scan_factor: cfg.scan_factor,
            ..ProfileConfig::new(cfg.n_max)
        },
    )?;
    run.text("profile.csv", |w| profile.write_csv(w))?;
    run.text("profile_capped.csv", |w| profile.write_capped_csv(w))?;
    let (ns, left) = profile.series(|r| r.block_left);
    let (_, right) = profile.series(|r| r.block_right);
    run.json(
        "fit.json",
        json!({
            "epsilon": u.epsilon(),
            "alpha": alpha,
            "burn_in": cfg.burn_in,
            "certified": profile.certified,
            "row_tail_cap": profile.row_tail,
            "column_tail_cap": profile.column_tail,
            "mu_block_left": fit_json(&ns, &left, alpha, cfg.burn_in)?,
            "mu_block_right": fit_json(&ns, &right, alpha, cfg.burn_in)?,
        }),
    )?;
    run.text("plot.gp", |w| w.write_all(PROFILE_PLOT.as_bytes()))?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSettings {
    pub left: BasisConfig,
    pub right: BasisConfig,
    pub rows: usize,
    pub cols: usize,
}

impl Default for MatrixSettings {
    fn default() -> Self {
        MatrixSettings {
            left: fourier(),
            right: haar(),
            rows: 20,
            cols: 20,
        }
    }
}

pub fn matrix_cmd(cfg: &MatrixSettings, out: &Path, seed: u64) -> Result<(), CliError> {
    let mut run = Run::start(out, "matrix", cfg, seed)?;
    let u = OperatorHandle::from_config(&cfg.left, &cfg.right)?;
    let block = u.dense_truncation(cfg.rows, cfg.cols)?;
    let top = coherence::mu(&block)?;
    run.text("matrix.csv", |w| block.write_csv(w))?;
    run.json(
        "matrix.json",
        json!({
            "rows": cfg.rows,
            "cols": cfg.cols,
            "epsilon": u.epsilon(),
            "mu": top.value,
            "argmax": [top.row, top.col],
            "column_norms": block.column_norms(),
        }),
    )?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsometrySettings {
    pub f: Envelope,
    pub g: Envelope,
    pub horizon: usize,
}

impl Default for IsometrySettings {
    fn default() -> Self {
        IsometrySettings {
            f: Envelope::Harmonic,
            g: Envelope::Geometric,
            horizon: 1 << 16,
        }
    }
}

pub fn isometry_cmd(cfg: &IsometrySettings, out: &Path, seed: u64) -> Result<(), CliError> {
    let mut run = Run::start(out, "isometry", cfg, seed)?;
    let iso = build_isometry(
        &EnvelopePair::new(cfg.f.clone(), cfg.g.clone()),
        cfg.horizon,
    )?;
    let report = verify_counterexample(&iso);
    let control = verify_counterexample(&negative_control(&iso));
    run.text("columns.csv", |w| iso.write_csv(w))?;
    run.json(
        "report.json",
        json!({
            "passed": report.passed(),
            "report": report,
            "negative_control": {
                "rejected": !control.passed(),
                "first_failure": control.first_failure(),
            },
        }),
    )?;
    run.finish()?;
    if let Some(c) = report.first_failure() {
        return Err(CliError::Numerical(format!(
            "verification failed: {}",
            c.name
        )));
    }
    if control.passed() {
        return Err(CliError::Numerical(
            "the negative control was not rejected".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSettings {
    pub basis: ReconstructionBasis,
    pub pattern: SamplingPattern,
    pub r: usize,
    pub epsilon: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for ReconstructSettings {
    fn default() -> Self {
        let base = ReconstructionConfig::new(
            ReconstructionBasis::default_wavelet(),
            SamplingPattern::B,
            0,
        );
        ReconstructSettings {
            basis: base.basis,
            pattern: base.pattern,
            r: base.r,
            epsilon: base.epsilon,
            solver: base.solver,
        }
    }
}

const COEFFICIENT_PLOT: &str = "\
set datafile separator ','
set logscale y
set xlabel 'n'
set ylabel '|coefficient|'
plot 'coefficients.csv' using 1:(abs($4)) with points pt 7 ps 0.4 title 'truth', \\
     'coefficients.csv' using 1:(sqrt($2**2 + $3**2)) with points pt 6 ps 0.6 title 'recovered'
";

pub fn reconstruct_cmd(cfg: &ReconstructSettings, out: &Path, seed: u64) -> Result<(), CliError> {
    let exp = ReconstructionConfig {
        basis: cfg.basis,
        pattern: cfg.pattern.clone(),
        seed,
        r: cfg.r,
        epsilon: cfg.epsilon,
        solver: cfg.solver,
    };
    let mut run = Run::start(out, "reconstruct", cfg, seed)?;
    let outcome = reconstruct_experiment(&exp)?;
    let rec = &outcome.recovery;
    run.text("coefficients.csv", |w| outcome.write_coefficients(w))?;
    run.text("pattern.csv", |w| outcome.scheme.write_csv(w))?;
    run.json(
        "errors.json",
        json!({
            "basis": cfg.basis,
            "pattern": cfg.pattern,
            "epsilon": outcome.epsilon,
            "samples": outcome.scheme.omega.len(),
            "l1_error": outcome.l1_error,
            "converged": rec.converged,
            "iterations": rec.iterations,
            "residual": rec.residual,
            "objective": rec.objective,
            "operator_norm": rec.operator_norm,
            "gamma": rec.gamma,
        }),
    )?;
    run.text("plot.gp", |w| w.write_all(COEFFICIENT_PLOT.as_bytes()))?;
    run.finish()?;
    if !rec.converged {
        return Err(CliError::Numerical(format!(
            "basis pursuit stopped after {} iterations without converging",
            rec.iterations
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipKind {
    Full,
    Within,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlipSettings {
    #[serde(rename = "J")]
    pub coarse_level: u32,
    pub finest_level: u32,
    pub boundaries: Vec<usize>,
    pub budgets: Vec<usize>,
    pub mode: FlipKind,
    pub solver: SolverConfig,
}

impl Default for FlipSettings {
    fn default() -> Self {
        let base = FlipConfig::new(FlipMode::Full, 0);
        FlipSettings {
            coarse_level: base.coarse_level,
            finest_level: base.finest_level,
            boundaries: base.boundaries,
            budgets: base.budgets,
            mode: FlipKind::Full,
            solver: base.solver,
        }
    }
}

pub fn fliptest_cmd(cfg: &FlipSettings, out: &Path, seed: u64) -> Result<(), CliError> {
    let mode = match cfg.mode {
        FlipKind::Full => FlipMode::Full,
        FlipKind::Within => FlipMode::WithinLevel { seed },
    };
    let exp = FlipConfig {
        coarse_level: cfg.coarse_level,
        finest_level: cfg.finest_level,
        boundaries: cfg.boundaries.clone(),
        budgets: cfg.budgets.clone(),
        seed,
        mode,
        solver: cfg.solver,
    };
    let mut run = Run::start(out, "fliptest", cfg, seed)?;
    let levels = exp.levels()?;
    let outcome = exp.run()?;
    run.json(
        "flip.json",
        json!({
            "mode": cfg.mode,
            "coefficients": levels.last(),
            "samples": cfg.budgets.iter().sum::<usize>(),
            "error_original": outcome.error_original,
            "error_modified": outcome.error_modified,
            "ratio": outcome.ratio,
            "iterations": [outcome.original.iterations, outcome.modified.iterations],
        }),
    )?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSettings {
    pub left: BasisConfig,
    pub right: BasisConfig,
    pub n_bounds: Vec<usize>,
    pub m_bounds: Vec<usize>,
    pub s: Vec<usize>,
    pub epsilon_fail: f64,
    pub c: f64,
    pub safety: f64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        PlanSettings {
            left: fourier(),
            right: haar(),
            n_bounds: vec![64, 256],
            m_bounds: vec![64, 256],
            s: vec![12, 4],
            epsilon_fail: 0.1,
            c: 0.1,
            safety: 4.0,
        }
    }
}

pub fn plan_cmd(cfg: &PlanSettings, out: &Path, seed: u64) -> Result<(), CliError> {
    let mut run = Run::start(out, "plan", cfg, seed)?;
    let u = OperatorHandle::from_config(&cfg.left, &cfg.right)?;
    let table = local_coherence(&u, &cfg.n_bounds, &cfg.m_bounds, cfg.safety)?;
    let (nr, mr) = (
        *cfg.n_bounds.last().expect("validated"),
        *cfg.m_bounds.last().expect("validated"),
    );
    let global = coherence::mu(&*u.dense_truncation(nr, mr)?)?.value;
    let exact = plan_budgets(
        &table.exact,
        &cfg.n_bounds,
        &cfg.s,
        cfg.epsilon_fail,
        cfg.c,
        global,
    )?;
    let bound = plan_budgets(
        &table.bound,
        &cfg.n_bounds,
        &cfg.s,
        cfg.epsilon_fail,
        cfg.c,
        global,
    )?;
    run.json(
        "plan.json",
        json!({
            "epsilon": u.epsilon(),
            "local_coherence": table,
            "global_mu": global,
            "budgets": exact,
            "budgets_from_bound": bound,
        }),
    )?;
    run.finish()?;
    Ok(())
}
