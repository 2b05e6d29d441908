//! Command-line front end of the `twistor` binary.
//!
//! `analyze` classifies sampled points, `verify` compares closed forms with
//! the finite-difference oracle, `report` prints the analysis as a table.
//! Exit codes: 0 success, 1 verification or theorem failure, 2 bad
//! configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{get_metric, list_metrics};
use crate::decomp::{curv_op, decompose, CLASSIFY_TOL};
use crate::error::{GeomError, Result};
use crate::harmonicity::{
    classify_unchecked, sigma_sum, tr_k, tr_k_horizontal_closed, tr_k_horizontal_exact, tr_k_vertical_closed,
    Classification, DefectReport, Tolerances, Verdict,
};
use crate::jet::MetricSpec;
use crate::oracle::{submersion_defect, verify_plan, FdScheme, ZChart};
use crate::riemann::{ricci, PointGeometry};
use crate::sampling::{sample_plan, SamplePlan};
use crate::twistor::TwistorPoint;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "twistor", version, about = "Harmonicity of the twistor almost complex structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify sampled points and print the JSON report.
    Analyze(RunArgs),
    /// Compare closed-form identities with the finite-difference oracle.
    Verify(RunArgs),
    /// Print the analysis as a summary table.
    Report(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Catalog metric; repeat for several. Defaults to the whole catalog.
    #[arg(long = "metric")]
    pub metric: Vec<String>,
    /// Fibre scale t > 0; repeat for several.
    #[arg(long = "t", allow_negative_numbers = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    #[arg(long = "fiber-points", default_value_t = 4)]
    pub fiber_points: usize,
    #[arg(long = "zero-tol", default_value_t = 1e-6, allow_negative_numbers = true)]
    pub zero_tol: f64,
    #[arg(long = "nonzero-floor", default_value_t = 1e-3, allow_negative_numbers = true)]
    pub nonzero_floor: f64,
    #[arg(long = "fd-step", default_value_t = 0.02, allow_negative_numbers = true)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub metrics: Vec<MetricSpec>,
    pub ts: Vec<f64>,
    pub points: usize,
    pub fiber_points: usize,
    pub tol: Tolerances,
    pub scheme: FdScheme,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self> {
        let names: Vec<String> = if a.metric.is_empty() {
            list_metrics().iter().map(|s| s.to_string()).collect()
        } else {
            a.metric.clone()
        };
        let metrics = names.iter().map(|n| get_metric(n).map(|e| e.spec)).collect::<Result<Vec<_>>>()?;
        let ts = if a.t.is_empty() { vec![1.0] } else { a.t.clone() };
        if let Some(bad) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(GeomError::BadParameter(format!("t must be positive, got {bad}")));
        }
        if a.points == 0 || a.fiber_points == 0 {
            return Err(GeomError::BadParameter("sample counts must be at least 1".into()));
        }
        let tol = Tolerances { zero_tol: a.zero_tol, nonzero_floor: a.nonzero_floor };
        tol.validate()?;
        Ok(RunConfig {
            metrics,
            ts,
            points: a.points,
            fiber_points: a.fiber_points,
            tol,
            scheme: FdScheme::new(a.fd_step, 8)?,
            seed: a.seed,
        })
    }

    pub fn plan(&self, spec: &MetricSpec) -> Result<SamplePlan> {
        sample_plan(spec, self.points, self.fiber_points, self.seed)
    }
}

#[derive(Serialize)]
struct PerK<T> {
    k1: T,
    k2: T,
}

impl<T: Copy> PerK<T> {
    fn of(v: [T; 2]) -> Self {
        PerK { k1: v[0], k2: v[1] }
    }
}

#[derive(Serialize)]
struct PointOut {
    coords: [f64; 4],
    s: f64,
    #[serde(rename = "norm_B")]
    norm_b: f64,
    #[serde(rename = "norm_Wminus")]
    norm_w_minus: f64,
    ds_norm: f64,
    eigen_pattern: crate::harmonicity::EigenPattern,
    tr1_max: f64,
    tr2_max: f64,
    closedform_residuals: PerK<Option<f64>>,
    verdicts: PerK<Verdict>,
}

#[derive(Serialize)]
struct RunOut {
    metric: String,
    t: f64,
    points: Vec<PointOut>,
    global_verdict: PerK<Verdict>,
    theorem_consistency: bool,
}

#[derive(Serialize)]
struct AnalyzeOut {
    schema_version: u32,
    runs: Vec<RunOut>,
}

fn point_out(r: &DefectReport) -> PointOut {
    PointOut {
        coords: r.point,
        s: r.s,
        norm_b: r.norm_b,
        norm_w_minus: r.norm_w_minus,
        ds_norm: r.ds_norm,
        eigen_pattern: r.pattern,
        tr1_max: r.tr1_max,
        tr2_max: r.tr2_max,
        closedform_residuals: PerK::of(r.closedform_residual),
        verdicts: PerK::of(r.verdicts),
    }
}

/// Classifications for every (metric, t) pair of the configuration.
pub fn run_analysis(cfg: &RunConfig) -> Result<Vec<Classification>> {
    let mut out = Vec::new();
    for spec in &cfg.metrics {
        let plan = cfg.plan(spec)?;
        for &t in &cfg.ts {
            out.push(classify_unchecked(spec, t, &plan, &cfg.tol)?);
        }
    }
    Ok(out)
}

pub fn analysis_json(runs: &[Classification]) -> String {
    let out = AnalyzeOut {
        schema_version: SCHEMA_VERSION,
        runs: runs
            .iter()
            .map(|c| RunOut {
                metric: c.metric.clone(),
                t: c.t,
                points: c.reports.iter().map(point_out).collect(),
                global_verdict: PerK::of(c.global_verdict),
                theorem_consistency: c.theorem_consistency,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&out).expect("report serializes") + "\n"
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn analysis_csv(runs: &[Classification]) -> String {
    let mut s = String::from(
        "metric,t,x1,x2,x3,x4,s,norm_B,norm_Wminus,ds_norm,eigen_pattern,tr1_max,tr2_max,closedform_residual_1,closedform_residual_2,verdict_1,verdict_2\n",
    );
    for c in runs {
        for r in &c.reports {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{},{:e},{:e},{},{},{},{}",
                c.metric,
                c.t,
                r.point[0],
                r.point[1],
                r.point[2],
                r.point[3],
                r.s,
                r.norm_b,
                r.norm_w_minus,
                r.ds_norm,
                r.pattern.label(),
                r.tr1_max,
                r.tr2_max,
                opt(r.closedform_residual[0]),
                opt(r.closedform_residual[1]),
                r.verdicts[0].name(),
                r.verdicts[1].name()
            );
        }
    }
    s
}

pub fn analysis_table(runs: &[Classification]) -> String {
    let mut s = format!(
        "{:<20} {:>5} {:>9} {:<24} {:>9} {:>9} {:>9} {:>9} {:>9}  {:<22} {:<22} {}\n",
        "metric", "t", "s", "eigenvalues", "|B|", "|W-|", "|ds|", "tr1", "tr2", "verdict k=1", "verdict k=2", "consistent"
    );
    for c in runs {
        let max = |f: &dyn Fn(&DefectReport) -> f64| c.reports.iter().fold(0.0f64, |m, r| m.max(f(r)));
        let first = &c.reports[0];
        let eig = first.eigenvalues.iter().map(|v| format!("{:.3}", v + 0.0)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            s,
            "{:<20} {:>5} {:>9.3} {:<24} {:>9.2e} {:>9.2e} {:>9.2e} {:>9.2e} {:>9.2e}  {:<22} {:<22} {}",
            c.metric,
            c.t,
            first.s,
            eig,
            max(&|r| r.norm_b),
            max(&|r| r.norm_w_minus),
            max(&|r| r.ds_norm),
            max(&|r| r.tr1_max),
            max(&|r| r.tr2_max),
            c.global_verdict[0].name(),
            c.global_verdict[1].name(),
            c.theorem_consistency
        );
    }
    s
}

/// One line of the verification table.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub identity: String,
    pub max_residual: Option<f64>,
    pub threshold: f64,
    pub samples: usize,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRun {
    pub metric: String,
    pub t: f64,
    pub rows: Vec<VerifyRow>,
    pub passed: bool,
}

/// Relative threshold for the oracle comparisons.
pub const ORACLE_THRESHOLD: f64 = 1e-5;
pub const VERTICAL_THRESHOLD: f64 = 1e-6;
pub const HORIZONTAL_THRESHOLD: f64 = 1e-5;
pub const SIGMA_THRESHOLD: f64 = 1e-7;

fn row(identity: &str, value: Option<f64>, threshold: f64, samples: usize, skip: &str) -> VerifyRow {
    let status = match value {
        None => format!("skipped: {skip}"),
        Some(v) if v < threshold => "pass".to_string(),
        Some(_) => "FAIL".to_string(),
    };
    VerifyRow { identity: identity.to_string(), max_residual: value, threshold, samples, status }
}

/// Max residuals of the self-dual trace formulas over the plan:
/// `[vertical, horizontal as quoted, horizontal exact, Σ]`, or `None` when
/// some sampled point is not self-dual.
pub fn lemma_residuals(spec: &MetricSpec, t: f64, plan: &SamplePlan, zero_tol: f64) -> Result<Option<[f64; 4]>> {
    let mut worst = [0.0f64; 4];
    for (p, fiber) in plan.points.iter().zip(&plan.fibers) {
        let pg = PointGeometry::new(spec, p)?;
        let d = decompose(&curv_op(&pg.curvature), &ricci(&pg.curvature), CLASSIFY_TOL)?;
        if d.norm_w_minus >= zero_tol {
            return Ok(None);
        }
        for sigma in fiber {
            let tp = TwistorPoint::new(&pg, sigma)?;
            for k in [1u8, 2] {
                for f in tp.ht_basis(t) {
                    let general = tr_k(&tp, k, &f, t)?;
                    if f.hor.norm() == 0.0 {
                        worst[0] = worst[0].max((general - tr_k_vertical_closed(&tp, k, &f.ver, t, zero_tol)?).abs());
                    } else {
                        worst[1] = worst[1].max((general - tr_k_horizontal_closed(&tp, k, &f.hor, t, zero_tol)?).abs());
                        worst[2] = worst[2].max((general - tr_k_horizontal_exact(&tp, k, &f.hor, t, zero_tol)?).abs());
                        worst[3] = worst[3].max(sigma_sum(&tp, &f.hor, t).abs());
                    }
                }
            }
        }
    }
    Ok(Some(worst))
}

pub fn run_verify(cfg: &RunConfig) -> Result<Vec<VerifyRun>> {
    let mut out = Vec::new();
    for spec in &cfg.metrics {
        let plan = cfg.plan(spec)?;
        let n = plan.points.len() * cfg.fiber_points;
        for &t in &cfg.ts {
            let rep = verify_plan(spec, t, cfg.scheme, &plan, n)?;
            let mut rows: Vec<VerifyRow> = rep
                .rows
                .iter()
                .map(|r| row(&r.identity, Some(r.max_rel), ORACLE_THRESHOLD, r.count, ""))
                .collect();
            let mut sub: f64 = 0.0;
            for (p, f) in plan.points.iter().zip(&plan.fibers) {
                let chart = ZChart::centered_on(spec, t, cfg.scheme, &f[0])?;
                sub = sub.max(submersion_defect(&chart, &chart.point(p, &f[0])?)?);
            }
            rows.push(row("submersion", Some(sub), 1e-9, plan.points.len(), ""));
            let lem = lemma_residuals(spec, t, &plan, cfg.tol.zero_tol)?;
            let why = "not self-dual";
            rows.push(row("lemma_vertical", lem.map(|l| l[0]), VERTICAL_THRESHOLD, n, why));
            rows.push(row("lemma_horizontal", lem.map(|l| l[1]), HORIZONTAL_THRESHOLD, n, why));
            rows.push(row("lemma_horizontal_exact", lem.map(|l| l[2]), HORIZONTAL_THRESHOLD, n, why));
            rows.push(row("sigma_sum", lem.map(|l| l[3]), SIGMA_THRESHOLD, n, why));
            let passed = rows.iter().all(|r| r.status != "FAIL");
            out.push(VerifyRun { metric: spec.name.to_string(), t, rows, passed });
        }
    }
    Ok(out)
}

pub fn verify_json(runs: &[VerifyRun]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        runs: &'a [VerifyRun],
    }
    serde_json::to_string_pretty(&Out { schema_version: SCHEMA_VERSION, runs }).expect("report serializes") + "\n"
}

pub fn verify_csv(runs: &[VerifyRun]) -> String {
    let mut s = String::from("metric,t,identity,max_residual,threshold,samples,status\n");
    for r in runs {
        for w in &r.rows {
            let _ = writeln!(s, "{},{},{},{},{:e},{},{}", r.metric, r.t, w.identity, opt(w.max_residual), w.threshold, w.samples, w.status);
        }
    }
    s
}

pub fn verify_table(runs: &[VerifyRun]) -> String {
    let mut s = String::new();
    for r in runs {
        let _ = writeln!(s, "{} at t = {}", r.metric, r.t);
        for w in &r.rows {
            let v = w.max_residual.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "  {:<24} {:>11} < {:<8.0e} {}", w.identity, v, w.threshold, w.status);
        }
    }
    s
}

/// Output text and exit code of one invocation.
pub fn execute(cli: &Cli) -> (String, i32) {
    let (args, default_format) = match &cli.command {
        Command::Analyze(a) => (a, Format::Json),
        Command::Verify(a) => (a, Format::Table),
        Command::Report(a) => (a, Format::Table),
    };
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => return (format!("configuration error: {e}\n"), 2),
    };
    let format = args.format.unwrap_or(default_format);
    match &cli.command {
        Command::Analyze(_) | Command::Report(_) => match run_analysis(&cfg) {
            Ok(runs) => {
                let text = match format {
                    Format::Json => analysis_json(&runs),
                    Format::Csv => analysis_csv(&runs),
                    Format::Table => analysis_table(&runs),
                };
                let code = if runs.iter().all(|r| r.theorem_consistency) { 0 } else { 1 };
                (text, code)
            }
            Err(e) => (format!("error: {e}\n"), 1),
        },
        Command::Verify(_) => match run_verify(&cfg) {
            Ok(runs) => {
                let text = match format {
                    Format::Json => verify_json(&runs),
                    Format::Csv => verify_csv(&runs),
                    Format::Table => verify_table(&runs),
                };
                (text, if runs.iter().all(|r| r.passed) { 0 } else { 1 })
            }
            Err(e) => (format!("error: {e}\n"), 1),
        },
    }
}

/// Parses arguments, runs, writes the output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (text, code) = execute(&cli);
    let out = match &cli.command {
        Command::Analyze(a) | Command::Verify(a) | Command::Report(a) => a.out.clone(),
    };
    match out {
        Some(path) if code != 2 => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return 2;
            }
        }
        _ if code == 2 => eprint!("{text}"),
        _ => print!("{text}"),
    }
    code
}
