//! Command-line front-end: run any of the paired tests on CSV data, or run
//! the Monte-Carlo benchmark grid from a config file.
//!
//! Exit codes: 0 the command ran (significant or not — a statistical
//! outcome is data, not an error), 2 bad input (files, flags, config), 3 a
//! method-level failure such as a singular covariance.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pairtest::baselines::{hotelling_t2_paired, multiple_testing, MtResult, UniTest};
use pairtest::bench::{emit_importance_csv, emit_power_csv, run_power_curve, BenchConfig};
use pairtest::mwsr::{mwsr_test_with, BisectorScale, DegeneratePolicy, MwsrOptions};
use pairtest::sample::{differences, load_paired_csv, standardize, PairedSample};
use pairtest::wsr::{signed_rank_statistic, wsr_test, Method, WsrMode};
use pairtest::Error;

#[derive(Parser)]
#[command(name = "paired-test", version, about = "Paired-sample hypothesis tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one test on a pair of CSV files (rows = subjects, columns =
    /// features; identical headers).
    Test(TestArgs),
    /// Run the Monte-Carlo benchmark grid described by a TOML config file.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMethod {
    /// Multivariate signed-rank test on bisecting-hyperplane scores.
    Mwsr,
    /// Paired Hotelling T-squared baseline.
    #[value(name = "ht2")]
    Ht2,
    /// Bonferroni-corrected per-feature testing.
    Mt,
    /// Univariate Wilcoxon signed-rank test (needs exactly one column).
    Wsr,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    /// Exact null distribution up to n = 25 without ties, else normal.
    Auto,
    /// Exact only; fails beyond the cap, falls back to normal on ties.
    Exact,
    /// Continuity-corrected normal approximation.
    Normal,
}

impl From<CliMode> for WsrMode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Auto => WsrMode::Auto,
            CliMode::Exact => WsrMode::Exact,
            CliMode::Normal => WsrMode::Normal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliUniTest {
    /// Wilcoxon signed-rank per feature.
    Wsr,
    /// Paired t-test per feature.
    Ttest,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliDegenerate {
    /// Skip coincident pairs and list them in the report.
    Drop,
    /// Fail on the first coincident pair.
    Abort,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliBisectors {
    /// Unit-norm bisector coefficients.
    Unit,
    /// Coefficients keep the pair displacement's length.
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    /// Human-readable report.
    Text,
    /// The same JSON document `--out` writes.
    Json,
}

#[derive(Args)]
struct TestArgs {
    /// Which test to run.
    #[arg(value_enum)]
    method: CliMethod,
    /// CSV with the first measurement occasion.
    #[arg(long, value_name = "FILE")]
    x: PathBuf,
    /// CSV with the second measurement occasion.
    #[arg(long, value_name = "FILE")]
    y: PathBuf,
    /// Significance level in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Standardize each feature to pooled mean 0, variance 1 first.
    #[arg(long)]
    standardize: bool,
    /// Signed-rank p-value mode (wsr and mwsr).
    #[arg(long, value_enum, default_value_t = CliMode::Auto)]
    mode: CliMode,
    /// Univariate test inside the Bonferroni baseline (mt only).
    #[arg(long, value_enum, default_value_t = CliUniTest::Wsr)]
    uni_test: CliUniTest,
    /// Hypothesized shift under the null (wsr only).
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    /// Handling of coincident pairs (mwsr only).
    #[arg(long, value_enum, default_value_t = CliDegenerate::Drop)]
    degenerate: CliDegenerate,
    /// Bisector coefficient scaling (mwsr only).
    #[arg(long, value_enum, default_value_t = CliBisectors::Unit)]
    bisectors: CliBisectors,
    /// Report format on stdout.
    #[arg(long, value_enum, default_value_t = CliFormat::Text)]
    format: CliFormat,
    /// Also write the JSON report to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML benchmark configuration.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory for power.csv, importance.csv, and config_digest.txt.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Override the config's worker count (0 = runtime default).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// The JSON report. Booleans and counts are plain; every float is emitted
/// in the shortest decimal form that parses back to the same bits, so the
/// document round-trips at full precision.
#[derive(Serialize)]
struct TestReport {
    method: Method,
    pairs: usize,
    features: usize,
    alpha: f64,
    standardized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    effect_size: Option<f64>,
    significant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wsr: Option<WsrDetails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mwsr: Option<MwsrDetails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hotelling: Option<Ht2Details>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiple_testing: Option<MtDetails>,
}

#[derive(Serialize)]
struct WsrDetails {
    theta0: f64,
    /// Differences left after dropping exact zeros.
    n_effective: usize,
    had_ties: bool,
    had_zeros: bool,
}

#[derive(Serialize)]
struct RuleDetails {
    coefficients: Vec<f64>,
    intercept: f64,
}

#[derive(Serialize)]
struct ImportanceEntry {
    index: usize,
    name: String,
    /// Signed normalized rule coefficient.
    importance: f64,
    /// The same coefficient scaled by the score-shift estimate: the
    /// feature-units displacement along the rule direction.
    effect: f64,
}

#[derive(Serialize)]
struct MwsrDetails {
    /// The univariate procedure that produced the p-value on score
    /// differences (exact or normal), for auditability.
    score_test: Method,
    rule: RuleDetails,
    /// Sorted by |importance| descending.
    importance: Vec<ImportanceEntry>,
    /// Back-projected shift estimate in feature units, natural order.
    effect_vector: Vec<f64>,
    scores_first: Vec<f64>,
    scores_second: Vec<f64>,
    score_differences: Vec<f64>,
    dropped_pairs: Vec<usize>,
}

#[derive(Serialize)]
struct Ht2Details {
    t_squared: f64,
    f_statistic: f64,
    df1: usize,
    df2: usize,
}

#[derive(Serialize)]
struct MtFeature {
    index: usize,
    name: String,
    p_value: f64,
    significant: bool,
    degenerate: bool,
}

#[derive(Serialize)]
struct MtDetails {
    uni_test: UniTest,
    corrected_alpha: f64,
    features: Vec<MtFeature>,
    significant_features: Vec<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn cmd_test(args: &TestArgs) -> pairtest::Result<()> {
    let mut sample = load_paired_csv(&args.x, &args.y)?;
    if args.standardize {
        sample = standardize(&sample)?;
    }
    let report = match args.method {
        CliMethod::Mwsr => run_mwsr(args, &sample)?,
        CliMethod::Ht2 => run_ht2(args, &sample)?,
        CliMethod::Mt => run_mt(args, &sample)?,
        CliMethod::Wsr => run_wsr(args, &sample)?,
    };
    let json = to_json(&report)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &json).map_err(|source| Error::Io {
            path: out.clone(),
            source,
        })?;
    }
    match args.format {
        CliFormat::Text => print!("{}", render_text(&report, &sample)),
        CliFormat::Json => print!("{json}"),
    }
    Ok(())
}

fn to_json(report: &TestReport) -> pairtest::Result<String> {
    let body = serde_json::to_string_pretty(report).map_err(|e| Error::InvalidArgument {
        message: format!("cannot serialize report: {e}"),
    })?;
    Ok(format!("{body}\n"))
}

fn report_skeleton(args: &TestArgs, sample: &PairedSample, method: Method) -> TestReport {
    TestReport {
        method,
        pairs: sample.n(),
        features: sample.d(),
        alpha: args.alpha,
        standardized: args.standardize,
        statistic: None,
        p_value: None,
        effect_size: None,
        significant: false,
        wsr: None,
        mwsr: None,
        hotelling: None,
        multiple_testing: None,
    }
}

fn run_mwsr(args: &TestArgs, sample: &PairedSample) -> pairtest::Result<TestReport> {
    let opts = MwsrOptions {
        alpha: args.alpha,
        degenerate_policy: match args.degenerate {
            CliDegenerate::Drop => DegeneratePolicy::Drop,
            CliDegenerate::Abort => DegeneratePolicy::Abort,
        },
        bisector_scale: match args.bisectors {
            CliBisectors::Unit => BisectorScale::Unit,
            CliBisectors::Raw => BisectorScale::Raw,
        },
        mode: args.mode.into(),
    };
    let res = mwsr_test_with(sample, &opts)?;
    let mut entries: Vec<ImportanceEntry> = sample
        .feature_names()
        .iter()
        .enumerate()
        .map(|(k, name)| ImportanceEntry {
            index: k,
            name: name.clone(),
            importance: res.importance[k],
            effect: res.effect_vector[k],
        })
        .collect();
    entries.sort_by(|a, b| b.importance.abs().total_cmp(&a.importance.abs()));

    let mut report = report_skeleton(args, sample, res.outcome.method);
    report.statistic = Some(res.outcome.statistic);
    report.p_value = Some(res.outcome.p_value);
    report.effect_size = Some(res.outcome.effect_size);
    report.significant = res.outcome.significant;
    report.mwsr = Some(MwsrDetails {
        score_test: res.score_test_method,
        rule: RuleDetails {
            coefficients: res.rule.w.clone(),
            intercept: res.rule.b,
        },
        importance: entries,
        effect_vector: res.effect_vector.clone(),
        scores_first: res.scores.s1.clone(),
        scores_second: res.scores.s2.clone(),
        score_differences: res.scores.differences(),
        dropped_pairs: res.dropped_pairs.clone(),
    });
    Ok(report)
}

fn run_ht2(args: &TestArgs, sample: &PairedSample) -> pairtest::Result<TestReport> {
    let outcome = hotelling_t2_paired(sample, args.alpha)?;
    let mut report = report_skeleton(args, sample, outcome.method);
    report.statistic = Some(outcome.statistic);
    report.p_value = Some(outcome.p_value);
    report.effect_size = Some(outcome.effect_size);
    report.significant = outcome.significant;
    report.hotelling = Some(Ht2Details {
        t_squared: outcome.effect_size,
        f_statistic: outcome.statistic,
        df1: sample.d(),
        df2: sample.n() - sample.d(),
    });
    Ok(report)
}

fn run_mt(args: &TestArgs, sample: &PairedSample) -> pairtest::Result<TestReport> {
    let uni_test = match args.uni_test {
        CliUniTest::Wsr => UniTest::Wsr,
        CliUniTest::Ttest => UniTest::TTest,
    };
    let res: MtResult = multiple_testing(sample, args.alpha, uni_test)?;
    let features = sample
        .feature_names()
        .iter()
        .enumerate()
        .map(|(k, name)| MtFeature {
            index: k,
            name: name.clone(),
            p_value: res.per_feature_p[k],
            significant: res.significant_features.contains(&k),
            degenerate: res.degenerate_features.contains(&k),
        })
        .collect();
    let mut report = report_skeleton(args, sample, Method::MtBonferroni);
    report.significant = res.overall_significant;
    report.multiple_testing = Some(MtDetails {
        uni_test: res.uni_test,
        corrected_alpha: res.corrected_alpha,
        features,
        significant_features: res.significant_features.clone(),
    });
    Ok(report)
}

fn run_wsr(args: &TestArgs, sample: &PairedSample) -> pairtest::Result<TestReport> {
    if sample.d() != 1 {
        return Err(Error::InvalidArgument {
            message: format!(
                "the univariate signed-rank test needs exactly one feature column, got {}",
                sample.d()
            ),
        });
    }
    let z = differences(sample).column(0);
    let outcome = wsr_test(&z, args.theta0, args.alpha, args.mode.into())?;
    let stat = signed_rank_statistic(&z, args.theta0)?;
    let mut report = report_skeleton(args, sample, outcome.method);
    report.statistic = Some(outcome.statistic);
    report.p_value = Some(outcome.p_value);
    report.effect_size = Some(outcome.effect_size);
    report.significant = outcome.significant;
    report.wsr = Some(WsrDetails {
        theta0: args.theta0,
        n_effective: stat.n_effective,
        had_ties: stat.had_ties,
        had_zeros: stat.had_zeros,
    });
    Ok(report)
}

fn render_text(report: &TestReport, sample: &PairedSample) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let mut kv = |label: &str, value: String| {
        let _ = writeln!(s, "{label:<18}{value}");
    };
    kv("method", report.method.to_string());
    kv("pairs", report.pairs.to_string());
    kv("features", report.features.to_string());
    kv("alpha", format!("{}", report.alpha));
    if report.standardized {
        kv("standardized", "yes".into());
    }
    if let Some(v) = report.statistic {
        kv("statistic", format!("{v}"));
    }
    if let Some(v) = report.p_value {
        kv("p-value", format!("{v}"));
    }
    if let Some(v) = report.effect_size {
        kv("effect size", format!("{v}"));
    }
    kv(
        "significant",
        if report.significant { "yes" } else { "no" }.into(),
    );
    drop(kv);

    let mut out = s;
    if let Some(w) = &report.wsr {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18}{}", "theta0", w.theta0);
        let _ = writeln!(s, "{:<18}{}", "effective n", w.n_effective);
        if w.had_zeros {
            let _ = writeln!(s, "{:<18}{}", "zeros dropped", "yes");
        }
        if w.had_ties {
            let _ = writeln!(s, "{:<18}{}", "ties", "yes");
        }
        out.push_str(&s);
    }
    if let Some(m) = &report.mwsr {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18}{}", "score test", m.score_test);
        if !m.dropped_pairs.is_empty() {
            let joined = m
                .dropped_pairs
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(s, "{:<18}{}", "dropped pairs", joined);
        }
        let _ = writeln!(s, "{:<18}{}", "rule intercept", m.rule.intercept);
        let _ = writeln!(s, "importance (signed, by magnitude; effect in feature units)");
        let width = m
            .importance
            .iter()
            .map(|e| e.name.len())
            .max()
            .unwrap_or(0)
            .max(4);
        for e in &m.importance {
            let _ = writeln!(
                s,
                "  {:<width$}  {:<24}  {}",
                e.name,
                format!("{}", e.importance),
                e.effect,
            );
        }
        let _ = writeln!(s, "scores (first, second, difference)");
        for i in 0..m.scores_first.len() {
            let _ = writeln!(
                s,
                "  {:<6}{:<24}  {:<24}  {}",
                i,
                format!("{}", m.scores_first[i]),
                format!("{}", m.scores_second[i]),
                m.score_differences[i],
            );
        }
        out.push_str(&s);
    }
    if let Some(h) = &report.hotelling {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18}{}", "t-squared", h.t_squared);
        let _ = writeln!(
            s,
            "{:<18}{}  df ({}, {})",
            "f statistic", h.f_statistic, h.df1, h.df2
        );
        out.push_str(&s);
    }
    if let Some(mt) = &report.multiple_testing {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18}{}", "uni test", mt.uni_test);
        let _ = writeln!(s, "{:<18}{}", "corrected alpha", mt.corrected_alpha);
        let names: Vec<&str> = mt
            .significant_features
            .iter()
            .map(|&k| sample.feature_names()[k].as_str())
            .collect();
        let _ = writeln!(
            s,
            "{:<18}{}",
            "flagged features",
            if names.is_empty() {
                "none".into()
            } else {
                names.join(", ")
            }
        );
        let _ = writeln!(s, "per-feature p-values");
        let width = mt.features.iter().map(|f| f.name.len()).max().unwrap_or(0).max(4);
        for f in &mt.features {
            let mut flags = String::new();
            if f.significant {
                flags.push_str("  significant");
            }
            if f.degenerate {
                flags.push_str("  degenerate");
            }
            let _ = writeln!(s, "  {:<width$}  {}{}", f.name, f.p_value, flags);
        }
        out.push_str(&s);
    }
    out
}

fn cmd_bench(args: &BenchArgs) -> pairtest::Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg: BenchConfig = toml::from_str(&text).map_err(|e| Error::InvalidArgument {
        message: format!("{}: {e}", args.config.display()),
    })?;
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let report = run_power_curve(&cfg)?;
    let power = args.out_dir.join("power.csv");
    let importance = args.out_dir.join("importance.csv");
    emit_power_csv(&report, &power)?;
    emit_importance_csv(&report, &importance)?;
    let digest_path = args.out_dir.join("config_digest.txt");
    write_text(&digest_path, &format!("{}\n", report.config_digest))?;
    println!("config digest     {}", report.config_digest);
    println!("power rows        {:<8}-> {}", report.rows.len(), power.display());
    println!(
        "importance rows   {:<8}-> {}",
        report.importance.len(),
        importance.display()
    );
    Ok(())
}

fn write_text(path: &Path, content: &str) -> pairtest::Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
