//! Monte-Carlo benchmark harness: power curves over a scenario grid and a
//! feature-importance study, with reproducible per-trial seeding.
//!
//! Every trial's stream seed is derived from the master seed and the
//! (scenario, shift, trial) indices, so results are independent of worker
//! count and schedule: trials land in pre-assigned slots and aggregation
//! walks them in index order. With runtime measurement disabled the whole
//! report is bit-identical across runs and machines.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{hotelling_t2_paired, multiple_testing, UniTest};
use crate::error::{Error, Result};
use crate::mwsr::{mwsr_test_with, BisectorScale, DegeneratePolicy, MwsrOptions};
use crate::sample::PairedSample;
use crate::synth::{derive_stream_seed, generate_scenario, ScenarioConfig};
use crate::wsr::WsrMode;

/// Methods the harness can race against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    Mwsr,
    MtWsr,
    MtTtest,
    Ht2,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 4] = [
        BenchMethod::Mwsr,
        BenchMethod::MtWsr,
        BenchMethod::MtTtest,
        BenchMethod::Ht2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Mwsr => "mwsr",
            BenchMethod::MtWsr => "mt-wsr",
            BenchMethod::MtTtest => "mt-ttest",
            BenchMethod::Ht2 => "ht2",
        }
    }

    /// Canonical report order.
    fn ordinal(self) -> usize {
        match self {
            BenchMethod::Mwsr => 0,
            BenchMethod::MtWsr => 1,
            BenchMethod::MtTtest => 2,
            BenchMethod::Ht2 => 3,
        }
    }
}

impl std::fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_n() -> usize {
    30
}
fn default_std() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    0.5
}
fn default_shifted_fraction() -> f64 {
    0.1
}
fn default_trials() -> usize {
    200
}
fn default_alpha() -> f64 {
    0.05
}
fn default_methods() -> Vec<BenchMethod> {
    BenchMethod::ALL.to_vec()
}
fn default_bisectors() -> BisectorScale {
    BisectorScale::Unit
}
fn default_true() -> bool {
    true
}

/// One scenario of the grid; the harness crosses it with the shift grid and
/// fills in per-trial seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    #[serde(default = "default_n")]
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_std")]
    pub std: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_shifted_fraction")]
    pub shifted_fraction: f64,
}

impl ScenarioTemplate {
    pub fn instantiate(&self, shift: f64, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            n: self.n,
            d: self.d,
            std: self.std,
            rho: self.rho,
            shift,
            shifted_fraction: self.shifted_fraction,
            seed,
        }
    }
}

/// Full benchmark configuration. Unknown keys are rejected when
/// deserialized from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenarios: Vec<ScenarioTemplate>,
    /// Shift grid applied to every scenario.
    pub shifts: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<BenchMethod>,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 picks the runtime default. Never affects results.
    #[serde(default)]
    pub workers: usize,
    /// Coefficient scaling of the per-pair bisectors used by the mwsr rows.
    #[serde(default = "default_bisectors")]
    pub mwsr_bisectors: BisectorScale,
    /// Also run the per-feature importance study over the same grid.
    #[serde(default = "default_true")]
    pub importance: bool,
    /// Record wall-clock method runtimes. Disable for bit-identical output.
    #[serde(default = "default_true")]
    pub measure_runtime: bool,
}

/// One power-curve cell: a (method, scenario, shift) combination aggregated
/// over all trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub method: BenchMethod,
    pub n: usize,
    pub d: usize,
    pub std: f64,
    pub rho: f64,
    pub shift: f64,
    pub trials: usize,
    pub alpha: f64,
    /// Trials where the method ran and rejected the null.
    pub detections: usize,
    /// Trials where the method failed (counted as non-detections).
    pub errors: usize,
    pub detection_rate: f64,
    /// Mean wall-clock seconds per trial; exactly 0 when measurement is
    /// disabled.
    pub mean_runtime_s: f64,
}

/// One importance-study cell: a (scenario, shift, feature) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceRow {
    pub scenario_id: usize,
    pub shift: f64,
    pub feature_index: usize,
    pub feature_name: String,
    /// Mean absolute normalized rule coefficient across trials.
    pub mwsr_mean_abs_importance: f64,
    /// Fraction of trials where Bonferroni-corrected per-feature testing
    /// flagged the feature.
    pub mt_significant_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<PowerRow>,
    pub importance: Vec<ImportanceRow>,
    /// Hash of the statistically relevant configuration (everything except
    /// the worker count); equal digests mean comparable reports.
    pub config_digest: String,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Digest of the configuration fields that influence report content. The
/// worker count is excluded: parallelism never changes results.
pub fn config_digest(cfg: &BenchConfig) -> String {
    use std::fmt::Write;
    let mut s = String::from("v1");
    write!(
        s,
        "|seed={}|trials={}|alpha={}|bisectors={}|importance={}|runtime={}",
        cfg.master_seed,
        cfg.trials,
        cfg.alpha,
        match cfg.mwsr_bisectors {
            BisectorScale::Unit => "unit",
            BisectorScale::Raw => "raw",
        },
        cfg.importance,
        cfg.measure_runtime,
    )
    .unwrap();
    s.push_str("|methods=");
    for (i, m) in cfg.methods.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(m.name());
    }
    s.push_str("|shifts=");
    for (i, v) in cfg.shifts.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").unwrap();
    }
    s.push_str("|scenarios=");
    for (i, t) in cfg.scenarios.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        write!(
            s,
            "(n={},d={},std={},rho={},frac={})",
            t.n, t.d, t.std, t.rho, t.shifted_fraction
        )
        .unwrap();
    }
    format!("{:016x}", fnv1a64(s.as_bytes()))
}

fn validate_config(cfg: &BenchConfig) -> Result<()> {
    if cfg.scenarios.is_empty() {
        return Err(Error::InvalidArgument {
            message: "benchmark needs at least one scenario".into(),
        });
    }
    if cfg.shifts.is_empty() {
        return Err(Error::InvalidArgument {
            message: "benchmark needs a nonempty shift grid".into(),
        });
    }
    if let Some(bad) = cfg.shifts.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            message: format!("shift grid contains non-finite value {bad}"),
        });
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument {
            message: "benchmark needs at least one trial".into(),
        });
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {}", cfg.alpha),
        });
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidArgument {
            message: "benchmark needs at least one method".into(),
        });
    }
    for (i, m) in cfg.methods.iter().enumerate() {
        if cfg.methods[..i].contains(m) {
            return Err(Error::InvalidArgument {
                message: format!("method {m} listed twice"),
            });
        }
    }
    for (i, tpl) in cfg.scenarios.iter().enumerate() {
        tpl.instantiate(cfg.shifts[0], 0).validate().map_err(|e| {
            Error::InvalidArgument {
                message: format!("scenario {i}: {e}"),
            }
        })?;
    }
    Ok(())
}

fn run_method(
    method: BenchMethod,
    data: &PairedSample,
    alpha: f64,
    bisectors: BisectorScale,
) -> Result<bool> {
    match method {
        BenchMethod::Mwsr => mwsr_test_with(
            data,
            &MwsrOptions {
                alpha,
                degenerate_policy: DegeneratePolicy::Drop,
                bisector_scale: bisectors,
                mode: WsrMode::Auto,
            },
        )
        .map(|r| r.outcome.significant),
        BenchMethod::MtWsr => {
            multiple_testing(data, alpha, UniTest::Wsr).map(|r| r.overall_significant)
        }
        BenchMethod::MtTtest => {
            multiple_testing(data, alpha, UniTest::TTest).map(|r| r.overall_significant)
        }
        BenchMethod::Ht2 => hotelling_t2_paired(data, alpha).map(|r| r.significant),
    }
}

struct TrialOutcome {
    detected: Vec<bool>,
    errored: Vec<bool>,
    secs: Vec<f64>,
}

fn run_trial(
    cfg: &BenchConfig,
    scenario_idx: usize,
    shift_idx: usize,
    trial_idx: usize,
) -> TrialOutcome {
    let n_methods = cfg.methods.len();
    let seed = derive_stream_seed(
        cfg.master_seed,
        &[scenario_idx as u64, shift_idx as u64, trial_idx as u64],
    );
    let scenario = cfg.scenarios[scenario_idx].instantiate(cfg.shifts[shift_idx], seed);
    let data = match generate_scenario(&scenario) {
        Ok(data) => data,
        Err(_) => {
            return TrialOutcome {
                detected: vec![false; n_methods],
                errored: vec![true; n_methods],
                secs: vec![0.0; n_methods],
            }
        }
    };
    let mut detected = Vec::with_capacity(n_methods);
    let mut errored = Vec::with_capacity(n_methods);
    let mut secs = Vec::with_capacity(n_methods);
    for &method in &cfg.methods {
        let started = cfg.measure_runtime.then(Instant::now);
        let outcome = run_method(method, &data, cfg.alpha, cfg.mwsr_bisectors);
        secs.push(started.map_or(0.0, |t| t.elapsed().as_secs_f64()));
        match outcome {
            Ok(sig) => {
                detected.push(sig);
                errored.push(false);
            }
            Err(_) => {
                detected.push(false);
                errored.push(true);
            }
        }
    }
    TrialOutcome {
        detected,
        errored,
        secs,
    }
}

/// Runs the full power-curve grid (methods x scenarios x shifts x trials)
/// and, unless disabled, the importance study over the same grid.
///
/// Per-trial method failures (for example a singular covariance) are
/// recorded in the `errors` column as non-detections; they never abort the
/// run.
pub fn run_power_curve(cfg: &BenchConfig) -> Result<BenchReport> {
    validate_config(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument {
            message: format!("cannot build worker pool: {e}"),
        })?;

    let n_shifts = cfg.shifts.len();
    let n_trials = cfg.trials;
    let mut tasks = Vec::with_capacity(cfg.scenarios.len() * n_shifts * n_trials);
    for s in 0..cfg.scenarios.len() {
        for sh in 0..n_shifts {
            for t in 0..n_trials {
                tasks.push((s, sh, t));
            }
        }
    }

    let (outcomes, importance) = pool.install(|| -> Result<_> {
        let outcomes: Vec<TrialOutcome> = tasks
            .par_iter()
            .map(|&(s, sh, t)| run_trial(cfg, s, sh, t))
            .collect();
        let mut importance = Vec::new();
        if cfg.importance {
            for (s, tpl) in cfg.scenarios.iter().enumerate() {
                importance.extend(importance_study(
                    tpl,
                    s,
                    &cfg.shifts,
                    cfg.trials,
                    cfg.alpha,
                    cfg.master_seed,
                    cfg.mwsr_bisectors,
                )?);
            }
        }
        Ok((outcomes, importance))
    })?;

    let mut rows = Vec::with_capacity(cfg.scenarios.len() * n_shifts * cfg.methods.len());
    for (s, tpl) in cfg.scenarios.iter().enumerate() {
        for (sh, &shift) in cfg.shifts.iter().enumerate() {
            for (m, &method) in cfg.methods.iter().enumerate() {
                let mut detections = 0;
                let mut errors = 0;
                let mut total_secs = 0.0;
                for t in 0..n_trials {
                    let outcome = &outcomes[(s * n_shifts + sh) * n_trials + t];
                    detections += usize::from(outcome.detected[m]);
                    errors += usize::from(outcome.errored[m]);
                    total_secs += outcome.secs[m];
                }
                rows.push(PowerRow {
                    method,
                    n: tpl.n,
                    d: tpl.d,
                    std: tpl.std,
                    rho: tpl.rho,
                    shift,
                    trials: n_trials,
                    alpha: cfg.alpha,
                    detections,
                    errors,
                    detection_rate: detections as f64 / n_trials as f64,
                    mean_runtime_s: total_secs / n_trials as f64,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.method
            .ordinal()
            .cmp(&b.method.ordinal())
            .then(a.d.cmp(&b.d))
            .then(a.std.total_cmp(&b.std))
            .then(a.n.cmp(&b.n))
            .then(a.rho.total_cmp(&b.rho))
            .then(a.shift.total_cmp(&b.shift))
    });

    Ok(BenchReport {
        rows,
        importance,
        config_digest: config_digest(cfg),
    })
}

/// Per-feature study on one scenario: how strongly the multivariate rule
/// weights each feature (mean absolute normalized coefficient) versus how
/// often Bonferroni-corrected signed-rank testing flags it.
///
/// Trials reuse the power-curve seed derivation (scenario, shift, trial), so
/// both studies see identical data. Per-trial failures are skipped; each
/// mean is taken over the trials where the method ran.
#[allow(clippy::too_many_arguments)]
pub fn importance_study(
    template: &ScenarioTemplate,
    scenario_id: usize,
    shifts: &[f64],
    trials: usize,
    alpha: f64,
    master_seed: u64,
    bisectors: BisectorScale,
) -> Result<Vec<ImportanceRow>> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument {
            message: "importance study needs a nonempty shift grid".into(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument {
            message: "importance study needs at least one trial".into(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {alpha}"),
        });
    }
    template.instantiate(shifts[0], 0).validate()?;
    let d = template.d;

    struct StudyTrial {
        abs_importance: Option<Vec<f64>>,
        mt_flags: Option<Vec<bool>>,
    }

    let tasks: Vec<(usize, usize)> = (0..shifts.len())
        .flat_map(|sh| (0..trials).map(move |t| (sh, t)))
        .collect();
    let results: Vec<StudyTrial> = tasks
        .par_iter()
        .map(|&(sh, t)| {
            let seed = derive_stream_seed(
                master_seed,
                &[scenario_id as u64, sh as u64, t as u64],
            );
            let scenario = template.instantiate(shifts[sh], seed);
            let Ok(data) = generate_scenario(&scenario) else {
                return StudyTrial {
                    abs_importance: None,
                    mt_flags: None,
                };
            };
            let abs_importance = mwsr_test_with(
                &data,
                &MwsrOptions {
                    alpha,
                    degenerate_policy: DegeneratePolicy::Drop,
                    bisector_scale: bisectors,
                    mode: WsrMode::Auto,
                },
            )
            .ok()
            .map(|r| r.importance.iter().map(|v| v.abs()).collect());
            let mt_flags = multiple_testing(&data, alpha, UniTest::Wsr).ok().map(|r| {
                (0..d).map(|k| r.significant_features.contains(&k)).collect()
            });
            StudyTrial {
                abs_importance,
                mt_flags,
            }
        })
        .collect();

    let feature_names: Vec<String> = (1..=d).map(|k| format!("f{k}")).collect();
    let mut rows = Vec::with_capacity(shifts.len() * d);
    for (sh, &shift) in shifts.iter().enumerate() {
        let block = &results[sh * trials..(sh + 1) * trials];
        for k in 0..d {
            let mut imp_sum = 0.0;
            let mut imp_n = 0usize;
            let mut flag_sum = 0usize;
            let mut flag_n = 0usize;
            for trial in block {
                if let Some(imp) = &trial.abs_importance {
                    imp_sum += imp[k];
                    imp_n += 1;
                }
                if let Some(flags) = &trial.mt_flags {
                    flag_sum += usize::from(flags[k]);
                    flag_n += 1;
                }
            }
            rows.push(ImportanceRow {
                scenario_id,
                shift,
                feature_index: k,
                feature_name: feature_names[k].clone(),
                mwsr_mean_abs_importance: if imp_n > 0 {
                    imp_sum / imp_n as f64
                } else {
                    0.0
                },
                mt_significant_fraction: if flag_n > 0 {
                    flag_sum as f64 / flag_n as f64
                } else {
                    0.0
                },
            });
        }
    }
    Ok(rows)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::InvalidArgument {
            message: format!("cannot open {} for writing: {other:?}", path.display()),
        },
    })
}

fn csv_io_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::InvalidArgument {
            message: format!("cannot write {}: {other:?}", path.display()),
        },
    }
}

/// Writes the power-curve rows. Floats use the shortest decimal form that
/// parses back to identical bits.
pub fn emit_power_csv(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "method",
        "n",
        "d",
        "std",
        "rho",
        "shift",
        "trials",
        "alpha",
        "detections",
        "errors",
        "detection_rate",
        "mean_runtime_s",
    ])
    .map_err(|e| csv_io_err(path, e))?;
    for r in &report.rows {
        w.write_record([
            r.method.name().to_string(),
            r.n.to_string(),
            r.d.to_string(),
            format!("{}", r.std),
            format!("{}", r.rho),
            format!("{}", r.shift),
            r.trials.to_string(),
            format!("{}", r.alpha),
            r.detections.to_string(),
            r.errors.to_string(),
            format!("{}", r.detection_rate),
            format!("{}", r.mean_runtime_s),
        ])
        .map_err(|e| csv_io_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the importance-study rows.
pub fn emit_importance_csv(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "scenario_id",
        "shift",
        "feature_index",
        "feature_name",
        "mwsr_mean_abs_importance",
        "mt_significant_fraction",
    ])
    .map_err(|e| csv_io_err(path, e))?;
    for r in &report.importance {
        w.write_record([
            r.scenario_id.to_string(),
            format!("{}", r.shift),
            r.feature_index.to_string(),
            r.feature_name.clone(),
            format!("{}", r.mwsr_mean_abs_importance),
            format!("{}", r.mt_significant_fraction),
        ])
        .map_err(|e| csv_io_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
