//! Grid sweeps over losses and contamination settings, per-cell summaries
//! and CSV export.
//!
//! Every (cell, repetition) job derives its seeds from the sweep seed and
//! the job's grid coordinates, so the emitted records do not depend on
//! scheduling. Losses in the same data cell see identical training data,
//! test sets and initializations, which makes loss comparisons paired.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, BoundInputs, DEFAULT_A_CONSTANT};
use crate::complexity::{complexity_report, envelope_upper_bound, rademacher_upper_bound, ComplexityConfig};
use crate::datagen::{
    sample_contaminated, sample_oracle, theoretical_s_x, ContaminationConfig, CorruptionKind, Dataset, NoiseKind,
};
use crate::error::{Error, Result};
use crate::losses::LossFunction;
use crate::network::{Architecture, NetworkParams, OracleNetwork};
use crate::rng::derive_seed;
use crate::training::{empirical_risk, train_erm, TrainConfig};

/// Slack allowed when comparing Monte Carlo complexity estimates with their
/// closed-form upper bounds.
pub const DOMINANCE_SLACK: f64 = 0.05;

/// Lists whose Cartesian product forms the sweep cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub losses: Vec<LossFunction>,
    pub corruption_levels: Vec<f64>,
    pub gammas: Vec<f64>,
    pub ns: Vec<usize>,
    pub architectures: Vec<Architecture>,
    pub ball_radii: Vec<f64>,
}

/// The parts of [`ContaminationConfig`] that do not vary over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataModel {
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub noise_std: f64,
    #[serde(default = "default_cor_kind")]
    pub cor_kind: CorruptionKind,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default)]
    pub per_row: bool,
    #[serde(default = "default_point_mass")]
    pub point_mass: f64,
    #[serde(default = "default_custom_dof")]
    pub custom_dof: f64,
    #[serde(default)]
    pub custom_second_moment: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_cor_kind() -> CorruptionKind {
    CorruptionKind::LogNormal
}

fn default_point_mass() -> f64 {
    10.0
}

fn default_custom_dof() -> f64 {
    3.0
}

fn default_true() -> bool {
    true
}

fn default_t() -> f64 {
    0.1
}

impl Default for DataModel {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            noise_std: 1.0,
            cor_kind: default_cor_kind(),
            noise_kind: NoiseKind::Gaussian,
            per_row: false,
            point_mass: default_point_mass(),
            custom_dof: default_custom_dof(),
            custom_second_moment: None,
        }
    }
}

impl DataModel {
    pub fn contamination(&self, d: usize, corruption_level: f64, gamma: f64) -> ContaminationConfig {
        ContaminationConfig {
            d,
            sigma: self.sigma,
            corruption_level,
            cor_kind: self.cor_kind,
            gamma,
            noise_std: self.noise_std,
            noise_kind: self.noise_kind,
            per_row: self.per_row,
            point_mass: self.point_mass,
            custom_dof: self.custom_dof,
            custom_second_moment: self.custom_second_moment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: Grid,
    pub repetitions: usize,
    /// Size of each fresh test set; `None` means `max(10 n, 10⁴)`.
    #[serde(default)]
    pub test_set_size: Option<usize>,
    /// Confidence level of the bounds.
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub complexity: ComplexityConfig,
    /// Run the Monte Carlo complexity estimators for every record. The
    /// bounds never use them, so sweeps that only need risks can skip them.
    #[serde(default = "default_true")]
    pub estimate_complexity: bool,
    #[serde(default)]
    pub data: DataModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Least squares against Huber on clean and 20%-contaminated
    /// log-normal inputs with `γ = 2`: `n = 256`, a `4:8` network in the
    /// ball of radius 2, 300 full-batch steps of size 0.05, 50 repetitions.
    pub fn robustness_sweep() -> Self {
        Self {
            grid: Grid {
                losses: vec![LossFunction::least_squares(), LossFunction::huber(1.345).expect("valid scale")],
                corruption_levels: vec![0.0, 0.2],
                gammas: vec![2.0],
                ns: vec![256],
                architectures: vec![Architecture::new(4, vec![8]).expect("valid architecture")],
                ball_radii: vec![2.0],
            },
            repetitions: 50,
            test_set_size: None,
            t: 0.1,
            train: TrainConfig { step_size: 0.05, iterations: 300, ..TrainConfig::default() },
            complexity: ComplexityConfig::default(),
            estimate_complexity: false,
            data: DataModel::default(),
            seed: 2024,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let empty = [
            ("losses", g.losses.is_empty()),
            ("corruption_levels", g.corruption_levels.is_empty()),
            ("gammas", g.gammas.is_empty()),
            ("ns", g.ns.is_empty()),
            ("architectures", g.architectures.is_empty()),
            ("ball_radii", g.ball_radii.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidInput(format!("grid list `{name}` is empty")));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if self.test_set_size == Some(0) {
            return Err(Error::InvalidInput("test_set_size must be at least 1".into()));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Domain(format!("t must lie in (0, 1), got {}", self.t)));
        }
        if g.ns.contains(&0) {
            return Err(Error::InvalidInput("sample sizes must be at least 1".into()));
        }
        if let Some(b) = g.ball_radii.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidInput(format!("ball radius must be nonnegative, got {b}")));
        }
        self.train.validate()?;
        for cell in self.cells() {
            let cfg = self.data.contamination(cell.architecture.input_dim(), cell.corruption_level, cell.gamma);
            cfg.validate()?;
            theoretical_s_x(&cfg)?;
        }
        Ok(())
    }

    pub fn test_size(&self, n: usize) -> usize {
        self.test_set_size.unwrap_or_else(|| (10 * n).max(10_000))
    }

    /// Cells in emission order: loss varies fastest, then c, γ, n,
    /// architecture and ball radius.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let mut cells = Vec::new();
        let mut data_index = 0;
        for (ai, arch) in g.architectures.iter().enumerate() {
            for (bi, &b) in g.ball_radii.iter().enumerate() {
                for &n in &g.ns {
                    for &gamma in &g.gammas {
                        for &c in &g.corruption_levels {
                            for loss in &g.losses {
                                cells.push(Cell {
                                    index: cells.len(),
                                    data_index,
                                    oracle_index: ai * g.ball_radii.len() + bi,
                                    loss: *loss,
                                    corruption_level: c,
                                    gamma,
                                    n,
                                    architecture: arch.clone(),
                                    ball_radius: b,
                                });
                            }
                            data_index += 1;
                        }
                    }
                }
            }
        }
        cells
    }
}

/// One grid point. `data_index` ignores the loss, so cells that differ only
/// in the loss share data; `oracle_index` identifies the (architecture, b)
/// pair that fixes the target network.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub data_index: usize,
    pub oracle_index: usize,
    pub loss: LossFunction,
    pub corruption_level: f64,
    pub gamma: f64,
    pub n: usize,
    pub architecture: Architecture,
    pub ball_radius: f64,
}

const ORACLE_DOMAIN: u64 = 0x6f72_6163_6c65;
const DATA_DOMAIN: u64 = 0x6461_7461;

/// One row of `records.csv`. Column order is the field order. Risks are in
/// units of the loss, errors and scales in units of `y` and `x`. Fields
/// that do not apply (bounds for least squares, complexity estimates when
/// disabled, metrics of diverged runs) are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub cell: usize,
    pub repetition: usize,
    pub loss: String,
    pub loss_kind: String,
    pub loss_scale: Option<f64>,
    pub corruption_level: f64,
    pub gamma: f64,
    pub n: usize,
    pub architecture: String,
    pub ball_radius: f64,
    pub depth: usize,
    pub data_seed: u64,
    pub diverged: bool,
    pub empirical_risk: Option<f64>,
    pub heldout_risk: Option<f64>,
    pub heldout_median_abs_error: Option<f64>,
    pub clean_median_abs_error: Option<f64>,
    /// Median `|f̂(x) - f*(x)|` on the clean test inputs.
    pub clean_median_abs_deviation: Option<f64>,
    pub oracle_empirical_risk: f64,
    pub oracle_heldout_risk: f64,
    pub s_x_theory: f64,
    pub s_y_given_x_theory: f64,
    pub s_x_hat: Option<f64>,
    pub s_y_given_x_hat: Option<f64>,
    pub rademacher_estimate: Option<f64>,
    pub rademacher_std_error: Option<f64>,
    pub rademacher_upper: Option<f64>,
    pub envelope_estimate: Option<f64>,
    pub envelope_std_error: Option<f64>,
    pub envelope_upper: Option<f64>,
    pub dominance_ok: Option<bool>,
    pub c_h: Option<f64>,
    /// Certified `c_F` and `w_F` fed to the bounds.
    pub c_f: f64,
    pub w_f: f64,
    pub t: f64,
    pub theorem1_rhs: Option<f64>,
    pub corollary2_rhs: Option<f64>,
    pub theorem3_first_rhs: Option<f64>,
    pub theorem3_second_rhs: Option<f64>,
    pub theorem3_second_valid: Option<bool>,
    pub bound_violated: Option<bool>,
    /// Excluded from `records.csv` to keep it reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

/// Runs every (cell, repetition) job. Training divergence is flagged in the
/// record; any other failure aborts the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let oracles = oracles_for(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r))).collect();
    jobs.par_iter().map(|&(c, rep)| run_job(cfg, &cells[c], &oracles[cells[c].oracle_index], rep)).collect()
}

fn oracles_for(cfg: &ExperimentConfig) -> Result<Vec<OracleNetwork>> {
    let g = &cfg.grid;
    let mut out = Vec::new();
    for arch in &g.architectures {
        for &b in &g.ball_radii {
            let seed = derive_seed(derive_seed(cfg.seed, ORACLE_DOMAIN), out.len() as u64);
            out.push(sample_oracle(arch, b, seed)?);
        }
    }
    Ok(out)
}

fn median_abs(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.map(f64::abs).collect();
    quantile(&mut v, 0.5)
}

/// Linear-interpolation quantile (type 7). Sorts `values` in place.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
}

struct TestMetrics {
    risk: f64,
    median_abs_error: f64,
}

fn test_metrics(params: &NetworkParams, data: &Dataset, loss: &LossFunction) -> Result<TestMetrics> {
    let mut risk = 0.0;
    let mut residuals = Vec::with_capacity(data.len());
    for (x, y) in data.rows() {
        let r = y - params.forward(x)?;
        risk += loss.value(r);
        residuals.push(r);
    }
    Ok(TestMetrics { risk: risk / data.len() as f64, median_abs_error: median_abs(residuals.into_iter()) })
}

fn run_job(cfg: &ExperimentConfig, cell: &Cell, oracle: &OracleNetwork, rep: usize) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let data_cfg = cfg.data.contamination(cell.architecture.input_dim(), cell.corruption_level, cell.gamma);
    let data_seed = derive_seed(derive_seed(derive_seed(cfg.seed, DATA_DOMAIN), cell.data_index as u64), rep as u64);
    let train_data = sample_contaminated(&data_cfg, oracle, cell.n, derive_seed(data_seed, 0))?;
    let m = cfg.test_size(cell.n);
    let test = sample_contaminated(&data_cfg, oracle, m, derive_seed(data_seed, 1))?;
    let clean_test = sample_contaminated(&data_cfg.clean(), oracle, m, derive_seed(data_seed, 2))?;

    let l = cell.architecture.depth();
    let b = cell.ball_radius;
    let s_x = theoretical_s_x(&data_cfg)?.exact;
    let s_y = data_cfg.noise_rms();
    let c_f = rademacher_upper_bound(b, l, s_x, cell.n);
    let w_f = envelope_upper_bound(b, l, s_x);

    let train_cfg = TrainConfig { seed: derive_seed(data_seed, 3), ..cfg.train.clone() };
    let trained = match train_erm(&train_data, &cell.loss, &cell.architecture, b, &train_cfg) {
        Ok(r) => Some(r),
        Err(Error::Diverged { .. }) => None,
        Err(e) => return Err(e),
    };

    let oracle_emp = empirical_risk(oracle.params(), &train_data, &cell.loss)?;
    let oracle_heldout = test_metrics(oracle.params(), &test, &cell.loss)?.risk;

    let complexity = if cfg.estimate_complexity {
        Some(complexity_report(&train_data, oracle, &cfg.complexity, derive_seed(data_seed, 4))?)
    } else {
        None
    };

    let mut rec = ExperimentRecord {
        cell: cell.index,
        repetition: rep,
        loss: cell.loss.to_string(),
        loss_kind: cell.loss.kind().name().to_string(),
        loss_scale: cell.loss.kind().has_scale().then(|| cell.loss.scale()),
        corruption_level: cell.corruption_level,
        gamma: cell.gamma,
        n: cell.n,
        architecture: cell.architecture.to_string(),
        ball_radius: b,
        depth: l,
        data_seed,
        diverged: trained.is_none(),
        empirical_risk: None,
        heldout_risk: None,
        heldout_median_abs_error: None,
        clean_median_abs_error: None,
        clean_median_abs_deviation: None,
        oracle_empirical_risk: oracle_emp,
        oracle_heldout_risk: oracle_heldout,
        s_x_theory: s_x,
        s_y_given_x_theory: s_y,
        s_x_hat: complexity.as_ref().map(|c| c.s_x_hat),
        s_y_given_x_hat: complexity.as_ref().map(|c| c.s_y_given_x_hat),
        rademacher_estimate: complexity.as_ref().map(|c| c.rademacher_estimate),
        rademacher_std_error: complexity.as_ref().map(|c| c.rademacher_std_error),
        rademacher_upper: complexity.as_ref().map(|c| c.rademacher_upper),
        envelope_estimate: complexity.as_ref().map(|c| c.envelope_estimate),
        envelope_std_error: complexity.as_ref().map(|c| c.envelope_std_error),
        envelope_upper: complexity.as_ref().map(|c| c.envelope_upper),
        dominance_ok: complexity.as_ref().map(|c| c.dominance_holds(DOMINANCE_SLACK)),
        c_h: cell.loss.lipschitz_constant().ok(),
        c_f,
        w_f,
        t: cfg.t,
        theorem1_rhs: None,
        corollary2_rhs: None,
        theorem3_first_rhs: None,
        theorem3_second_rhs: None,
        theorem3_second_valid: None,
        bound_violated: None,
        wall_time_ms: 0.0,
    };

    if let Some(trained) = trained {
        let heldout = test_metrics(&trained.params, &test, &cell.loss)?;
        let clean = test_metrics(&trained.params, &clean_test, &cell.loss)?;
        let deviation = median_abs(
            clean_test
                .rows()
                .map(|(x, _)| trained.params.forward(x).and_then(|f| Ok(f - oracle.forward(x)?)))
                .collect::<Result<Vec<f64>>>()?
                .into_iter(),
        );
        rec.empirical_risk = Some(trained.best_empirical_risk);
        rec.heldout_risk = Some(heldout.risk);
        rec.heldout_median_abs_error = Some(heldout.median_abs_error);
        rec.clean_median_abs_error = Some(clean.median_abs_error);
        rec.clean_median_abs_deviation = Some(deviation);
        if let Some(c_h) = rec.c_h {
            let inputs = BoundInputs {
                empirical_risk: trained.best_empirical_risk,
                oracle_population_risk: oracle_heldout,
                oracle_empirical_risk: oracle_emp,
                c_h,
                c_f,
                w_f,
                s_x,
                s_y_given_x: s_y,
                n: cell.n,
                t: cfg.t,
                b,
                l,
                a_constant: DEFAULT_A_CONSTANT,
            };
            let report = bound_report(&inputs)?;
            rec.theorem1_rhs = Some(report.theorem1_rhs);
            rec.corollary2_rhs = Some(report.corollary2_rhs);
            rec.theorem3_first_rhs = report.theorem3_first_rhs;
            rec.theorem3_second_rhs = report.theorem3_second_rhs;
            rec.theorem3_second_valid = Some(report.theorem3_second_valid);
            rec.bound_violated = Some(heldout.risk > report.theorem1_rhs);
        }
    }
    rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

/// Per-cell aggregate. Quantiles skip diverged repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub loss: String,
    pub corruption_level: f64,
    pub gamma: f64,
    pub n: usize,
    pub architecture: String,
    pub ball_radius: f64,
    pub repetitions: usize,
    pub diverged: usize,
    pub empirical_risk_median: f64,
    pub heldout_risk_median: f64,
    pub heldout_risk_iqr: f64,
    pub heldout_median_abs_error_median: f64,
    pub heldout_median_abs_error_iqr: f64,
    pub clean_median_abs_error_median: f64,
    pub clean_median_abs_error_iqr: f64,
    /// `violated / repetitions`; empty when no bound applies.
    pub violation_rate: Option<f64>,
    /// Mean of `theorem1_rhs - heldout_risk`.
    pub mean_bound_slack: Option<f64>,
    pub dominance_failures: Option<usize>,
}

/// Groups records by cell, in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    let mut order: Vec<usize> = Vec::new();
    for r in records {
        if !order.contains(&r.cell) {
            order.push(r.cell);
        }
    }
    Ok(order
        .into_iter()
        .map(|cell| {
            let rs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.cell == cell).collect();
            let first = rs[0];
            let col =
                |f: fn(&ExperimentRecord) -> Option<f64>| -> Vec<f64> { rs.iter().filter_map(|r| f(r)).collect() };
            let med = |mut v: Vec<f64>| quantile(&mut v, 0.5);
            let iqr = |mut v: Vec<f64>| quantile(&mut v, 0.75) - quantile(&mut v, 0.25);
            let violations: Vec<bool> = rs.iter().filter_map(|r| r.bound_violated).collect();
            let slacks: Vec<f64> = rs.iter().filter_map(|r| Some(r.theorem1_rhs? - r.heldout_risk?)).collect();
            let dominance: Vec<bool> = rs.iter().filter_map(|r| r.dominance_ok).collect();
            let bounded = first.c_h.is_some();
            CellSummary {
                cell,
                loss: first.loss.clone(),
                corruption_level: first.corruption_level,
                gamma: first.gamma,
                n: first.n,
                architecture: first.architecture.clone(),
                ball_radius: first.ball_radius,
                repetitions: rs.len(),
                diverged: rs.iter().filter(|r| r.diverged).count(),
                empirical_risk_median: med(col(|r| r.empirical_risk)),
                heldout_risk_median: med(col(|r| r.heldout_risk)),
                heldout_risk_iqr: iqr(col(|r| r.heldout_risk)),
                heldout_median_abs_error_median: med(col(|r| r.heldout_median_abs_error)),
                heldout_median_abs_error_iqr: iqr(col(|r| r.heldout_median_abs_error)),
                clean_median_abs_error_median: med(col(|r| r.clean_median_abs_error)),
                clean_median_abs_error_iqr: iqr(col(|r| r.clean_median_abs_error)),
                violation_rate: bounded.then(|| violations.iter().filter(|v| **v).count() as f64 / rs.len() as f64),
                mean_bound_slack: (!slacks.is_empty()).then(|| slacks.iter().sum::<f64>() / slacks.len() as f64),
                dominance_failures: (!dominance.is_empty()).then(|| dominance.iter().filter(|d| !**d).count()),
            }
        })
        .collect())
}

/// Outcome of the sweep-level invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantCheck {
    /// Cells whose violation rate exceeds `t`.
    pub coverage_failures: Vec<usize>,
    /// Cells with at least one dominance failure.
    pub dominance_failures: Vec<usize>,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.coverage_failures.is_empty() && self.dominance_failures.is_empty()
    }
}

pub fn check_invariants(summary: &[CellSummary], t: f64) -> InvariantCheck {
    InvariantCheck {
        coverage_failures: summary.iter().filter(|s| s.violation_rate.is_some_and(|v| v > t)).map(|s| s.cell).collect(),
        dominance_failures: summary
            .iter()
            .filter(|s| s.dominance_failures.is_some_and(|f| f > 0))
            .map(|s| s.cell)
            .collect(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    write_rows(path.as_ref(), records)
}

pub fn write_summary_csv(path: impl AsRef<Path>, summary: &[CellSummary]) -> Result<()> {
    write_rows(path.as_ref(), summary)
}

/// Per-loss `(c, median clean error)` series, one `<loss>.dat` file per loss
/// and (γ, n, architecture, b) setting, for external plotting.
pub fn write_plot_data(dir: impl AsRef<Path>, summary: &[CellSummary]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for s in summary {
        let name = format!(
            "{}_gamma{}_n{}_arch{}_b{}",
            s.loss.replace(':', "-"),
            s.gamma,
            s.n,
            s.architecture.replace([':', ','], "-"),
            s.ball_radius
        );
        match series.iter_mut().find(|(k, _)| *k == name) {
            Some((_, pts)) => pts.push((s.corruption_level, s.clean_median_abs_error_median)),
            None => series.push((name, vec![(s.corruption_level, s.clean_median_abs_error_median)])),
        }
    }
    for (name, mut pts) in series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let body: String = pts.iter().map(|(c, e)| format!("{c} {e}\n")).collect();
        fs::write(dir.join(format!("{name}.dat")), format!("# c median_clean_abs_error\n{body}"))?;
    }
    Ok(())
}

/// Everything a finished sweep produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<CellSummary>,
    pub invariants: InvariantCheck,
}

/// Runs the sweep and writes `records.csv`, `summary.csv` and
/// `config.lock.json` (the fully defaulted config) into `out_dir`, plus
/// `plotdata/` when requested.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: impl AsRef<Path>,
    emit_plotdata: bool,
) -> Result<ExperimentOutcome> {
    let out_dir = out_dir.as_ref();
    let records = run_sweep(cfg)?;
    let summary = summarize(&records)?;
    let invariants = check_invariants(&summary, cfg.t);
    fs::create_dir_all(out_dir)?;
    let mut locked = cfg.clone();
    locked.output_dir = None;
    fs::write(out_dir.join("config.lock.json"), serde_json::to_string_pretty(&locked)? + "\n")?;
    write_records_csv(out_dir.join("records.csv"), &records)?;
    write_summary_csv(out_dir.join("summary.csv"), &summary)?;
    if emit_plotdata {
        write_plot_data(out_dir.join("plotdata"), &summary)?;
    }
    Ok(ExperimentOutcome { records, summary, invariants })
}
