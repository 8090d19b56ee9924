//! Monte Carlo harnesses: type-I error and power tables, and the CLT and
//! expansion diagnostics.
//!
//! Every replicate draws its graphs from streams keyed by `(seed, n,
//! replicate, view)`, so results do not depend on the number of worker
//! threads, and all cells at one `n` share the first view of a replicate
//! (common random numbers across `gamma` and `ell`).

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sbmtest_core::clustering::plant_alternative;
use sbmtest_core::error::Error;
use sbmtest_core::graph::{CompactGraph, Weight};
use sbmtest_core::inference::{
    expectation_spectrum, two_sample_from_spectra, MomentEstimates, TestOptions,
};
use sbmtest_core::model::{fits_u8, sample_into, BlockModelSpec, LawDocument, Membership};
use sbmtest_core::rng::derive_seed;
use sbmtest_core::spectral::{linear_term, sin_theta_frobenius, top_k_operator, top_k_warm, SpectralOptions, Transform};

use crate::stats::{ks_standard_normal, mean_var, median, KsResult};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Type1,
    Power,
    CltDiag,
    ExpansionDiag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    Oracle,
    #[default]
    PlugIn,
}

fn default_gammas() -> Vec<f64> {
    vec![1.0]
}

fn default_replicates() -> usize {
    2000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_tol() -> f64 {
    1e-8
}

/// On-disk grid (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub mode: Mode,
    /// Relative block sizes; `K` is its length.
    pub block_ratio: Vec<usize>,
    pub intra: LawDocument,
    pub inter: LawDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub ns: Vec<usize>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub ells: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub moments: MomentMode,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default = "default_tol")]
    pub spectral_tol: f64,
    /// Keep every replicate's z (or remainder) in the result.
    #[serde(default)]
    pub dump_samples: bool,
}

impl GridConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }
}

/// A validated grid.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub config: GridConfig,
    pub base_spec: BlockModelSpec,
}

impl TryFrom<GridConfig> for ExperimentGrid {
    type Error = CliError;

    fn try_from(config: GridConfig) -> CliResult<Self> {
        let invalid = |msg: String| CliError::Core(Error::InvalidSpec(msg));
        if config.replicates == 0 {
            return Err(invalid("replicates must be at least 1".into()));
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", config.alpha)));
        }
        if config.ns.is_empty() || config.gammas.is_empty() {
            return Err(invalid("ns and gammas must be non-empty".into()));
        }
        if let Some(g) = config.gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid(format!("gammas must be positive, got {g}")));
        }
        if let Some(l) = config.ells.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(invalid(format!("ells must lie in [0, 1], got {l}")));
        }
        if config.mode == Mode::Power && config.ells.is_empty() {
            return Err(invalid("power mode needs ells".into()));
        }
        if !(config.spectral_tol > 0.0) {
            return Err(invalid("spectral_tol must be positive".into()));
        }
        let base_spec = BlockModelSpec::new(
            Membership::from_block_sizes(&config.block_ratio)?,
            config.intra.try_into()?,
            config.inter.try_into()?,
            config.beta.unwrap_or(BlockModelSpec::DEFAULT_BETA),
        )?;
        if base_spec.k() < 2 {
            return Err(invalid("the two-sample test needs at least two blocks".into()));
        }
        Ok(Self { config, base_spec })
    }
}

impl ExperimentGrid {
    pub fn spec_at(&self, n: usize) -> sbmtest_core::error::Result<BlockModelSpec> {
        self.base_spec.rescaled(n)
    }

    fn spectral(&self) -> SpectralOptions {
        SpectralOptions {
            tol: self.config.spectral_tol,
            ..SpectralOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(CellStats),
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// Replicates that produced a statistic.
    pub replicates: usize,
    /// Replicates that failed (for example a plug-in clustering error).
    pub failures: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// `sqrt(r (1 - r) / replicates)`.
    pub mc_se: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub ks: Option<KsResult>,
    /// Expansion diagnostic: median `|T - linear term|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_remainder: Option<f64>,
    /// Median remainder divided by `K log^2 n / n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn stats(&self) -> Option<&CellStats> {
        match &self.outcome {
            CellOutcome::Ok(s) => Some(s),
            CellOutcome::Skipped { .. } => None,
        }
    }
}

/// Everything deterministic about a run; serializes to the result JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: GridConfig,
    pub cells: Vec<Cell>,
}

impl ExperimentResult {
    pub fn cell(&self, n: usize, gamma: f64, ell: Option<f64>) -> Option<&Cell> {
        self.cells.iter().find(|c| c.n == n && c.gamma == gamma && c.ell == ell)
    }
}

/// A result plus wall-clock time per `n` (kept out of the JSON so that
/// identical inputs give identical bytes).
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub result: ExperimentResult,
    pub seconds_per_n: Vec<(usize, f64)>,
}

pub fn run(grid: &ExperimentGrid) -> CliResult<ExperimentRun> {
    match grid.config.mode {
        Mode::Type1 => run_type1(grid),
        Mode::Power => run_power(grid),
        Mode::CltDiag => run_clt_diag(grid),
        Mode::ExpansionDiag => run_expansion_diag(grid),
    }
}

const VIEW1: u64 = 1;
const VIEW2: u64 = 2;
const CLUSTER: u64 = 3;
const PLANT: u64 = 4;

/// One alternative for view 2 within a replicate.
#[derive(Clone)]
struct Variant {
    gamma: f64,
    ell: Option<f64>,
    spec2: Option<BlockModelSpec>,
}

type Outcome = Result<(f64, bool), Error>;

fn mc_stats(outcomes: &[Outcome], keep: bool) -> CellStats {
    let z: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok().map(|(z, _)| *z)).collect();
    let rejections = outcomes.iter().filter(|o| matches!(o, Ok((_, true)))).count();
    let reps = z.len();
    let rate = if reps == 0 { f64::NAN } else { rejections as f64 / reps as f64 };
    let (mean_z, var_z) = mean_var(&z);
    CellStats {
        replicates: reps,
        failures: outcomes.len() - reps,
        rejections,
        rejection_rate: rate,
        mc_se: (rate * (1.0 - rate) / reps as f64).sqrt(),
        mean_z,
        var_z,
        ks: (reps > 0).then(|| ks_standard_normal(&z)),
        median_remainder: None,
        remainder_ratio: None,
        samples: keep.then_some(z),
    }
}

fn test_options(grid: &ExperimentGrid, spec1: &BlockModelSpec, spec2: &BlockModelSpec, cluster_seed: u64) -> Result<TestOptions, Error> {
    let mut opts = match grid.config.moments {
        MomentMode::Oracle => TestOptions::oracle(MomentEstimates::oracle(spec1, spec2)?),
        MomentMode::PlugIn => TestOptions::plug_in(cluster_seed),
    };
    opts.alpha = grid.config.alpha;
    opts.transform = grid.config.transform;
    opts.spectral = grid.spectral();
    Ok(opts)
}

/// Runs `replicates` of view 1 against every variant at one `n`.
fn null_or_alternative<T: Weight>(
    grid: &ExperimentGrid,
    n: usize,
    spec1: &BlockModelSpec,
    variants: &[Variant],
) -> Vec<Vec<Outcome>> {
    let seed = grid.config.seed;
    let k = spec1.k();
    let per_rep: Vec<Vec<Outcome>> = (0..grid.config.replicates as u64)
        .into_par_iter()
        .map_init(
            || (CompactGraph::<T>::zeros(n), CompactGraph::<T>::zeros(n)),
            |(g1, g2), r| {
                let path = |view: u64| derive_seed(seed, &[n as u64, r, view]);
                let first = sample_into(spec1, path(VIEW1), g1)
                    .and_then(|_| top_k_operator(&*g1, k, &grid.spectral()));
                variants
                    .iter()
                    .map(|v| {
                        let Some(base2) = &v.spec2 else {
                            return Err(Error::InvalidSpec("skipped".into()));
                        };
                        let top1 = first.as_ref().map_err(Clone::clone)?;
                        let spec2 = match v.ell {
                            Some(ell) => {
                                let m2 = plant_alternative(spec1.membership(), ell, path(PLANT))?;
                                base2.with_membership(m2)?
                            }
                            None => base2.clone(),
                        };
                        sample_into(&spec2, path(VIEW2), g2)?;
                        let opts = test_options(grid, spec1, &spec2, path(CLUSTER))?;
                        let top2 = top_k_warm(&*g2, k, &opts.spectral, &top1.vectors)?;
                        let report = two_sample_from_spectra(&*g1, &*g2, top1, &top2, &opts)?;
                        Ok((report.z, report.reject))
                    })
                    .collect()
            },
        )
        .collect();
    (0..variants.len())
        .map(|i| per_rep.iter().map(|rep| rep[i].clone()).collect())
        .collect()
}

fn all_fit_u8(spec1: &BlockModelSpec, variants: &[Variant]) -> bool {
    fits_u8(spec1) && variants.iter().filter_map(|v| v.spec2.as_ref()).all(fits_u8)
}

fn run_cells(grid: &ExperimentGrid, with_ells: bool) -> CliResult<ExperimentRun> {
    let cfg = &grid.config;
    let mut cells = Vec::new();
    let mut seconds = Vec::new();
    for &n in &cfg.ns {
        let start = Instant::now();
        let spec1 = grid.spec_at(n)?;
        let ells: Vec<Option<f64>> = if with_ells { cfg.ells.iter().map(|&l| Some(l)).collect() } else { vec![None] };
        let mut variants = Vec::new();
        let mut skipped = Vec::new();
        for &gamma in &cfg.gammas {
            for &ell in &ells {
                let reason = match (spec1.scaled(gamma), ell) {
                    (Err(e), _) => Some(e.to_string()),
                    (Ok(_), Some(l)) if l > 0.0 && (l * n as f64).round() == 0.0 => {
                        Some(format!("ell = {l} moves no node at n = {n}"))
                    }
                    (Ok(_), Some(l)) => plant_alternative(spec1.membership(), l, derive_seed(cfg.seed, &[n as u64, 0, PLANT]))
                        .and_then(|m2| spec1.with_membership(m2))
                        .err()
                        .map(|e| e.to_string()),
                    (Ok(_), None) => None,
                };
                skipped.push(reason.clone());
                variants.push(Variant {
                    gamma,
                    ell,
                    spec2: if reason.is_none() { spec1.scaled(gamma).ok() } else { None },
                });
            }
        }
        let outcomes = if all_fit_u8(&spec1, &variants) {
            null_or_alternative::<u8>(grid, n, &spec1, &variants)
        } else {
            null_or_alternative::<f64>(grid, n, &spec1, &variants)
        };
        for ((v, reason), out) in variants.iter().zip(skipped).zip(outcomes) {
            let outcome = match reason {
                Some(reason) => CellOutcome::Skipped { reason },
                None => CellOutcome::Ok(mc_stats(&out, cfg.dump_samples)),
            };
            cells.push(Cell {
                n,
                gamma: v.gamma,
                ell: v.ell,
                outcome,
            });
        }
        seconds.push((n, start.elapsed().as_secs_f64()));
    }
    Ok(ExperimentRun {
        result: ExperimentResult {
            config: cfg.clone(),
            cells,
        },
        seconds_per_n: seconds,
    })
}

fn expect_mode(grid: &ExperimentGrid, modes: &[Mode]) -> CliResult<()> {
    if modes.contains(&grid.config.mode) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("grid mode is {:?}, expected one of {modes:?}", grid.config.mode)))
    }
}

/// Rejection rates under the null for every `(n, gamma)`.
pub fn run_type1(grid: &ExperimentGrid) -> CliResult<ExperimentRun> {
    expect_mode(grid, &[Mode::Type1])?;
    run_cells(grid, false)
}

/// Rejection rates with view 2's membership planted at distance `ell`.
pub fn run_power(grid: &ExperimentGrid) -> CliResult<ExperimentRun> {
    expect_mode(grid, &[Mode::Power])?;
    run_cells(grid, true)
}

/// The null distribution of z: mean, variance and a KS test against N(0, 1).
pub fn run_clt_diag(grid: &ExperimentGrid) -> CliResult<ExperimentRun> {
    expect_mode(grid, &[Mode::CltDiag])?;
    run_cells(grid, false)
}

fn remainder_samples<T: Weight>(
    grid: &ExperimentGrid,
    n: usize,
    spec1: &BlockModelSpec,
    spec2: &BlockModelSpec,
    gamma: f64,
) -> Vec<Result<f64, Error>> {
    let seed = grid.config.seed;
    let k = spec1.k();
    let v_e = spec1.membership().normalized_indicator();
    (0..grid.config.replicates as u64)
        .into_par_iter()
        .map_init(
            || (CompactGraph::<T>::zeros(n), CompactGraph::<T>::zeros(n)),
            |(g1, g2), r| {
                let path = |view: u64| derive_seed(seed, &[n as u64, r, view]);
                sample_into(spec1, path(VIEW1), g1)?;
                sample_into(spec2, path(VIEW2), g2)?;
                let opts = grid.spectral();
                let top1 = top_k_operator(&*g1, k, &opts)?;
                let top2 = top_k_warm(&*g2, k, &opts, &top1.vectors)?;
                let t = sbmtest_core::spectral::scaled_subspace_statistic(
                    &top1.vectors,
                    &top2.vectors,
                    &top2.values,
                    grid.config.transform,
                )?;
                let lin = linear_term(&*g1, &*g2, gamma, &v_e)?;
                Ok((t - lin).abs())
            },
        )
        .collect()
}

/// Median `|T - linear term|` per `(n, gamma)`.
pub fn run_expansion_diag(grid: &ExperimentGrid) -> CliResult<ExperimentRun> {
    expect_mode(grid, &[Mode::ExpansionDiag])?;
    let cfg = &grid.config;
    let mut cells = Vec::new();
    let mut seconds = Vec::new();
    for &n in &cfg.ns {
        let start = Instant::now();
        let spec1 = grid.spec_at(n)?;
        for &gamma in &cfg.gammas {
            let outcome = match spec1.scaled(gamma) {
                Err(e) => CellOutcome::Skipped { reason: e.to_string() },
                Ok(spec2) => {
                    let samples = if fits_u8(&spec1) && fits_u8(&spec2) {
                        remainder_samples::<u8>(grid, n, &spec1, &spec2, gamma)
                    } else {
                        remainder_samples::<f64>(grid, n, &spec1, &spec2, gamma)
                    };
                    let ok: Vec<f64> = samples.iter().filter_map(|s| s.as_ref().ok().copied()).collect();
                    let med = median(&ok);
                    let nf = n as f64;
                    let scale = spec1.k() as f64 * nf.ln().powi(2) / nf;
                    let (mean, var) = mean_var(&ok);
                    CellOutcome::Ok(CellStats {
                        replicates: ok.len(),
                        failures: samples.len() - ok.len(),
                        rejections: 0,
                        rejection_rate: f64::NAN,
                        mc_se: f64::NAN,
                        mean_z: mean,
                        var_z: var,
                        ks: None,
                        median_remainder: Some(med),
                        remainder_ratio: Some(med / scale),
                        samples: cfg.dump_samples.then_some(ok),
                    })
                }
            };
            cells.push(Cell {
                n,
                gamma,
                ell: None,
                outcome,
            });
        }
        seconds.push((n, start.elapsed().as_secs_f64()));
    }
    Ok(ExperimentRun {
        result: ExperimentResult {
            config: cfg.clone(),
            cells,
        },
        seconds_per_n: seconds,
    })
}

/// Monte Carlo draws of `(1/(nK)) ||(gamma W1 - W2) V_E||_F^2` under the null.
pub fn linear_term_samples(spec1: &BlockModelSpec, gamma: f64, replicates: usize, seed: u64) -> CliResult<Vec<f64>> {
    let spec2 = spec1.scaled(gamma)?;
    let v_e: DMatrix<f64> = spec1.membership().normalized_indicator();
    fn go<T: Weight>(spec1: &BlockModelSpec, spec2: &BlockModelSpec, gamma: f64, v: &DMatrix<f64>, reps: usize, seed: u64) -> CliResult<Vec<f64>> {
        let n = spec1.n();
        (0..reps as u64)
            .into_par_iter()
            .map_init(
                || (CompactGraph::<T>::zeros(n), CompactGraph::<T>::zeros(n)),
                |(g1, g2), r| {
                    sample_into(spec1, derive_seed(seed, &[n as u64, r, VIEW1]), g1)?;
                    sample_into(spec2, derive_seed(seed, &[n as u64, r, VIEW2]), g2)?;
                    Ok(linear_term(&*g1, &*g2, gamma, v)?)
                },
            )
            .collect()
    }
    if fits_u8(spec1) && fits_u8(&spec2) {
        go::<u8>(spec1, &spec2, gamma, &v_e, replicates, seed)
    } else {
        go::<f64>(spec1, &spec2, gamma, &v_e, replicates, seed)
    }
}

/// Monte Carlo draws of `||V_W U - V_E||_F^2` for single graphs from `spec`.
pub fn sin_theta_sq_samples(spec: &BlockModelSpec, replicates: usize, seed: u64, tol: f64) -> CliResult<Vec<f64>> {
    let k = spec.k();
    let v_e = expectation_spectrum(spec)?.vectors;
    let opts = SpectralOptions {
        tol,
        ..SpectralOptions::default()
    };
    fn go<T: Weight>(spec: &BlockModelSpec, v_e: &DMatrix<f64>, k: usize, opts: &SpectralOptions, reps: usize, seed: u64) -> CliResult<Vec<f64>> {
        let n = spec.n();
        (0..reps as u64)
            .into_par_iter()
            .map_init(
                || CompactGraph::<T>::zeros(n),
                |g, r| {
                    sample_into(spec, derive_seed(seed, &[n as u64, r, VIEW1]), g)?;
                    let top = top_k_operator(&*g, k, opts)?;
                    Ok(sin_theta_frobenius(&top.vectors, v_e)?.powi(2))
                },
            )
            .collect()
    }
    if fits_u8(spec) {
        go::<u8>(spec, &v_e, k, &opts, replicates, seed)
    } else {
        go::<f64>(spec, &v_e, k, &opts, replicates, seed)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v}"))
}

/// Long-format table, one line per cell.
pub fn write_cells_csv<W: Write>(result: &ExperimentResult, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "gamma",
        "ell",
        "status",
        "replicates",
        "failures",
        "rejection_rate",
        "mc_se",
        "mean_z",
        "var_z",
        "ks_statistic",
        "ks_p_value",
        "median_remainder",
        "remainder_ratio",
    ])?;
    for c in &result.cells {
        let mut rec = vec![c.n.to_string(), c.gamma.to_string(), fmt_opt(c.ell)];
        match &c.outcome {
            CellOutcome::Skipped { reason } => {
                rec.push(format!("skipped: {reason}"));
                rec.extend(std::iter::repeat_n(String::new(), 10));
            }
            CellOutcome::Ok(s) => {
                rec.push("ok".into());
                rec.push(s.replicates.to_string());
                rec.push(s.failures.to_string());
                rec.push(format!("{}", s.rejection_rate));
                rec.push(format!("{}", s.mc_se));
                rec.push(format!("{}", s.mean_z));
                rec.push(format!("{}", s.var_z));
                rec.push(fmt_opt(s.ks.map(|k| k.statistic)));
                rec.push(fmt_opt(s.ks.map(|k| k.p_value)));
                rec.push(fmt_opt(s.median_remainder));
                rec.push(fmt_opt(s.remainder_ratio));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Wide table shaped like the published ones: rows `n`, columns `gamma`
/// (or `ell` for power). Entries are rejection percentages, or median
/// remainders for the expansion diagnostic; skipped cells are `--`.
pub fn write_wide_csv<W: Write>(result: &ExperimentResult, out: W) -> CliResult<()> {
    let cfg = &result.config;
    let power = cfg.mode == Mode::Power;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string()];
    let mut columns: Vec<(f64, Option<f64>)> = Vec::new();
    for &g in &cfg.gammas {
        if power {
            for &l in &cfg.ells {
                header.push(if cfg.gammas.len() > 1 { format!("gamma={g} ell={l}") } else { format!("ell={l}") });
                columns.push((g, Some(l)));
            }
        } else {
            header.push(format!("gamma={g}"));
            columns.push((g, None));
        }
    }
    w.write_record(&header)?;
    for &n in &cfg.ns {
        let mut rec = vec![n.to_string()];
        for &(g, l) in &columns {
            let v = result.cell(n, g, l).and_then(Cell::stats).map(|s| match cfg.mode {
                Mode::ExpansionDiag => format!("{}", s.median_remainder.unwrap_or(f64::NAN)),
                _ => format!("{:.1}", 100.0 * s.rejection_rate),
            });
            rec.push(v.unwrap_or_else(|| "--".into()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `result.json`, `cells.csv`, `table.csv` and `timing.json` into `dir`.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut json = serde_json::to_string_pretty(&run.result)?;
    json.push('\n');
    std::fs::write(dir.join("result.json"), json)?;
    write_cells_csv(&run.result, std::fs::File::create(dir.join("cells.csv"))?)?;
    write_wide_csv(&run.result, std::fs::File::create(dir.join("table.csv"))?)?;
    let timing: Vec<serde_json::Value> = run
        .seconds_per_n
        .iter()
        .map(|(n, s)| serde_json::json!({"n": n, "seconds": s}))
        .collect();
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    Ok(())
}
