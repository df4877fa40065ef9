//! `wfbs`: covariances, exact field samples, particle ensembles and checks.
//!
//! Exit status is 0 on success (every verdict passing), 1 on a numerical
//! failure or a failing verdict and 2 on bad input.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wfbs::covariance::{
    lrd_limit, long_increment_limit, ray_increment_cov, ray_lrd_limit, rect_increment_cov, sheet_cov,
    short_increment_limit, Rect, RayQuery,
};
use wfbs::exec::Execution;
use wfbs::field_sampler::{sample_field_with, GridSpec};
use wfbs::params::{validate_wfbs_params, ParticleParams, WfbsParams};
use wfbs::particle_system::{run_ensemble_with, ParticleConfig, TestFunction};
use wfbs::verify::{
    all_pass, check_holder, check_increment_limits, check_lrd, check_rescaled_increment_constant,
    check_theorem31_with, empirical_cov, limit_covariances, StatReport, Theorem31Options,
};
use wfbs::WfbsError;

use config::{load_json, VerifyConfig};
use output::{fmt_num, write_text};

#[derive(Parser)]
#[command(name = "wfbs", version, about = "Weighted fractional Brownian sheets")]
struct Cli {
    /// Worker threads for replications and samples; output does not depend on it.
    #[arg(long, global = true, env = "WFBS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate covariances or their limits.
    Cov(CovArgs),
    /// Sample the sheet exactly on a grid.
    Field(FieldArgs),
    /// Simulate the particle system.
    Particles(ParticleArgs),
    /// Run a verification suite from a JSON config.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SheetArgs {
    #[arg(long, allow_hyphen_values = true)]
    a1: f64,
    #[arg(long, allow_hyphen_values = true)]
    b1: f64,
    #[arg(long, allow_hyphen_values = true)]
    a2: f64,
    #[arg(long, allow_hyphen_values = true)]
    b2: f64,
}

impl SheetArgs {
    fn params(&self) -> Result<WfbsParams, Failure> {
        Ok(validate_wfbs_params(self.a1, self.b1, self.a2, self.b2)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Limit {
    /// Long-range limit of two rectangle increments (`--rect` twice).
    Lrd,
    /// Long-range limit along a ray (`--ray`).
    Ray,
    /// Short-increment limit at each `--at s,t`.
    Short,
    /// Limit of the normalized variance of large increments.
    Long,
}

#[derive(Args)]
struct CovArgs {
    #[command(flatten)]
    sheet: SheetArgs,
    /// Point pair `s,t,s2,t2` for the sheet covariance (repeatable); with
    /// `--limit short` a point `s,t`.
    #[arg(long, allow_hyphen_values = true)]
    at: Vec<String>,
    /// Rectangle `s,t,s2,t2` (repeatable); two of them give the covariance of
    /// their increments.
    #[arg(long)]
    rect: Vec<String>,
    /// Ray increments `theta,u,v,s,t,tau`.
    #[arg(long)]
    ray: Option<String>,
    #[arg(long, value_enum)]
    limit: Option<Limit>,
}

#[derive(Args)]
struct FieldArgs {
    #[command(flatten)]
    sheet: SheetArgs,
    /// `lo:hi:n x lo:hi:n`, evenly spaced points per axis, e.g. `0:1:5x0:1:5`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParticleArgs {
    /// JSON particle configuration, instead of the flags below.
    #[arg(long, conflicts_with_all = ["alpha", "gamma", "t", "eval", "phi", "psi"])]
    config: Option<PathBuf>,
    /// Stability indices `alpha1,alpha2`.
    #[arg(long, default_value = "2,2")]
    alpha: String,
    /// Intensity exponents `gamma1,gamma2`.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    gamma: String,
    #[arg(long = "T", default_value_t = 8.0)]
    t: f64,
    /// Evaluation point `s,t` (repeatable), default `1,1`.
    #[arg(long)]
    eval: Vec<String>,
    /// `gaussian:center:width` or `indicator:lo:hi`.
    #[arg(long, default_value = "gaussian:0:0.1", allow_hyphen_values = true)]
    phi: String,
    #[arg(long, default_value = "gaussian:0:0.1", allow_hyphen_values = true)]
    psi: String,
    #[arg(long)]
    time_steps: Option<usize>,
    #[arg(long)]
    trunc_eps: Option<f64>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated `T` values; runs the full convergence check instead
    /// of a single ensemble.
    #[arg(long)]
    ladder: Option<String>,
    /// Ensemble CSV destination (the largest `T` for a ladder); stdout when
    /// omitted and no ladder is given.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON destination for a ladder; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Theorem31,
    Lrd,
    Holder,
    Increments,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Report JSON destination; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Why a command stopped; decides the exit status.
#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<WfbsError> for Failure {
    fn from(e: WfbsError) -> Self {
        match e {
            WfbsError::QuadratureFailure { .. } | WfbsError::NotPsd { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

/// Comma-separated floats, exactly `n` of them when `n` is given.
fn floats(s: &str, n: Option<usize>, what: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad(format!("{what}: cannot parse '{s}' as numbers")))?;
    match n {
        Some(n) if v.len() != n => Err(bad(format!("{what}: expected {n} values, got {}", v.len()))),
        _ => Ok(v),
    }
}

fn rect(s: &str) -> Result<Rect, Failure> {
    let v = floats(s, Some(4), "--rect")?;
    Ok(Rect::new(v[0], v[1], v[2], v[3])?)
}

fn test_function(s: &str) -> Result<TestFunction, Failure> {
    let parts: Vec<&str> = s.splitn(2, ':').collect();
    let args = parts.get(1).map(|r| floats(&r.replace(':', ","), Some(2), s)).transpose()?;
    let f = match (parts[0], args) {
        ("gaussian", Some(v)) => TestFunction::gaussian(v[0], v[1])?,
        ("indicator", Some(v)) => TestFunction::indicator(v[0], v[1])?,
        _ => return Err(bad(format!("test function '{s}': use gaussian:center:width or indicator:lo:hi"))),
    };
    Ok(f)
}

fn grid(s: &str) -> Result<GridSpec, Failure> {
    let axes: Vec<&str> = s.split('x').collect();
    if axes.len() != 2 {
        return Err(bad(format!("--grid '{s}': expected lo:hi:n x lo:hi:n")));
    }
    let mut pts = Vec::new();
    for a in axes {
        let f: Vec<&str> = a.split(':').collect();
        let parsed = match f.as_slice() {
            [lo, hi, n] => lo.parse::<f64>().ok().zip(hi.parse::<f64>().ok()).zip(n.parse::<usize>().ok()),
            _ => None,
        };
        let ((lo, hi), n) = parsed.ok_or_else(|| bad(format!("--grid axis '{a}': expected lo:hi:n")))?;
        if n == 0 || !(lo <= hi) {
            return Err(bad(format!("--grid axis '{a}': need n >= 1 and lo <= hi")));
        }
        pts.push(GridSpec::linspace(lo, hi, n));
    }
    let t = pts.pop().unwrap();
    Ok(GridSpec::new(pts.pop().unwrap(), t)?)
}

fn cmd_cov(a: &CovArgs) -> Result<(), Failure> {
    let p = a.sheet.params()?;
    let mut out = String::new();
    match a.limit {
        None if a.rect.len() == 2 => {
            let (r1, r2) = (rect(&a.rect[0])?, rect(&a.rect[1])?);
            out.push_str(&format!("{}\n", fmt_num(rect_increment_cov(&p, &r1, &r2)?)));
        }
        None if a.ray.is_some() => {
            let q = ray(a.ray.as_deref().unwrap())?;
            out.push_str(&format!("{}\n", fmt_num(ray_increment_cov(&p, &q))));
        }
        None => {
            if a.at.is_empty() {
                return Err(bad("cov needs --at s,t,s2,t2, two --rect, --ray or --limit"));
            }
            out.push_str("s,t,s2,t2,value\n");
            for at in &a.at {
                let v = floats(at, Some(4), "--at")?;
                let c = sheet_cov(&p, v[0], v[1], v[2], v[3])?;
                let cells: Vec<String> = v.iter().chain([&c]).map(|x| fmt_num(*x)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Some(Limit::Lrd) => {
            if a.rect.len() != 2 {
                return Err(bad("--limit lrd needs exactly two --rect"));
            }
            let v = lrd_limit(&p, &rect(&a.rect[0])?, &rect(&a.rect[1])?)?;
            out.push_str(&format!("{}\n", fmt_num(v)));
        }
        Some(Limit::Ray) => {
            let q = ray(a.ray.as_deref().ok_or_else(|| bad("--limit ray needs --ray"))?)?;
            out.push_str(&format!("{}\n", fmt_num(ray_lrd_limit(&p, &q)?)));
        }
        Some(Limit::Short) => {
            if a.at.is_empty() {
                return Err(bad("--limit short needs --at s,t"));
            }
            out.push_str("s,t,value\n");
            for at in &a.at {
                let v = floats(at, Some(2), "--at")?;
                let c = short_increment_limit(&p, v[0], v[1])?;
                out.push_str(&format!("{},{},{}\n", fmt_num(v[0]), fmt_num(v[1]), fmt_num(c)));
            }
        }
        Some(Limit::Long) => out.push_str(&format!("{}\n", fmt_num(long_increment_limit(&p)))),
    }
    write_text(None, &out)
}

fn ray(s: &str) -> Result<RayQuery, Failure> {
    let v = floats(s, Some(6), "--ray")?;
    Ok(RayQuery::new(v[0], v[1], v[2], v[3], v[4], v[5])?)
}

fn cmd_field(a: &FieldArgs, exec: Execution) -> Result<(), Failure> {
    let p = a.sheet.params()?;
    let g = grid(&a.grid)?;
    let samples = sample_field_with(&p, &g, a.n, a.seed, exec)?;
    let mut out = String::from("sample,s,t,value\n");
    for (k, smp) in samples.iter().enumerate() {
        for (i, s) in g.s_points().iter().enumerate() {
            for (j, t) in g.t_points().iter().enumerate() {
                out.push_str(&format!("{k},{},{},{}\n", fmt_num(*s), fmt_num(*t), fmt_num(smp.values[(i, j)])));
            }
        }
    }
    write_text(a.out.as_deref(), &out)
}

fn particle_config(a: &ParticleArgs) -> Result<ParticleConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => load_json::<ParticleConfig>(path)?,
        None => {
            let alpha = floats(&a.alpha, Some(2), "--alpha")?;
            let gamma = floats(&a.gamma, Some(2), "--gamma")?;
            let pp = ParticleParams::new([alpha[0], alpha[1]], [gamma[0], gamma[1]])?;
            let eval = if a.eval.is_empty() { vec!["1,1".to_string()] } else { a.eval.clone() };
            let pts = eval
                .iter()
                .map(|e| floats(e, Some(2), "--eval").map(|v| (v[0], v[1])))
                .collect::<Result<_, _>>()?;
            ParticleConfig::new(pp, test_function(&a.phi)?, test_function(&a.psi)?, a.t, pts)?
        }
    };
    if let Some(n) = a.time_steps {
        cfg.time_steps = n;
    }
    if let Some(e) = a.trunc_eps {
        cfg.trunc_eps = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensemble_csv(e: &wfbs::particle_system::OccupationEnsemble) -> String {
    let mut out = String::from("replication,s,t,xt\n");
    for (r, row) in e.xt_values.iter().enumerate() {
        for ((s, t), x) in e.config.eval_points.iter().zip(row) {
            out.push_str(&format!("{r},{},{},{}\n", fmt_num(*s), fmt_num(*t), fmt_num(*x)));
        }
    }
    out
}

fn cmd_particles(a: &ParticleArgs, exec: Execution) -> Result<bool, Failure> {
    let cfg = particle_config(a)?;
    if let Some(l) = &a.ladder {
        let ladder = floats(l, None, "--ladder")?;
        let opts = Theorem31Options { exec, ..Default::default() };
        let ens = wfbs::verify::run_ladder(&cfg, &ladder, a.reps, a.seed, exec)?;
        let reports = wfbs::verify::theorem31_reports(&ens, &opts)?;
        if let Some(path) = &a.out {
            write_text(Some(path), &ensemble_csv(ens.last().unwrap()))?;
        }
        return finish_reports(&reports, a.report.as_deref());
    }
    let e = run_ensemble_with(&cfg, a.reps, a.seed, exec)?;
    write_text(a.out.as_deref(), &ensemble_csv(&e))?;
    let limits = limit_covariances(&cfg)?;
    eprintln!("T = {}, {} replications, norming F_T = {}", fmt_num(cfg.t), e.replications, fmt_num(cfg.norming()));
    for (j, (s, t)) in cfg.eval_points.iter().enumerate() {
        let col = e.column(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let (var, se) = empirical_cov(&e, j, j)?;
        let lim = limits.iter().find(|((a, b), _)| *a == j && *b == j).map(|x| x.1).unwrap_or(f64::NAN);
        eprintln!(
            "({}, {}): mean {mean:.5}, variance {var:.5} ± {se:.5}, limit variance {lim:.5}",
            fmt_num(*s),
            fmt_num(*t)
        );
    }
    Ok(true)
}

/// Writes the report JSON and one summary line per report to stderr.
fn finish_reports(reports: &[StatReport], dest: Option<&Path>) -> Result<bool, Failure> {
    let json = serde_json::to_string_pretty(reports).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_text(dest, &(json + "\n"))?;
    for r in reports {
        eprintln!(
            "{:<4} {}: estimate {} target {} tolerance {}",
            if r.passed() { "pass" } else { "FAIL" },
            r.name,
            fmt_num(r.estimate),
            fmt_num(r.target),
            fmt_num(r.tolerance)
        );
    }
    Ok(all_pass(reports))
}

fn cmd_verify(a: &VerifyArgs, exec: Execution) -> Result<bool, Failure> {
    let cfg: VerifyConfig = load_json(&a.config)?;
    let need_params = || cfg.params.ok_or_else(|| bad("this suite needs \"params\" in the config"));
    let reports = match a.suite {
        Suite::Theorem31 => {
            let pc = cfg.particles.clone().ok_or_else(|| bad("theorem31 needs \"particles\" in the config"))?;
            let ladder = cfg.ladder.clone().ok_or_else(|| bad("theorem31 needs a \"ladder\" of T values"))?;
            let reps = cfg.replications.ok_or_else(|| bad("theorem31 needs \"replications\""))?;
            let defaults = Theorem31Options::default();
            let opts = Theorem31Options {
                ci_multiplier: cfg.ci_multiplier.unwrap_or(defaults.ci_multiplier),
                prelimit_multiplier: cfg.prelimit_multiplier.unwrap_or(defaults.prelimit_multiplier),
                gaussianity_multiplier: cfg.gaussianity_multiplier.unwrap_or(defaults.gaussianity_multiplier),
                prelimit: cfg.prelimit.unwrap_or(defaults.prelimit),
                exec,
            };
            check_theorem31_with(&pc, &ladder, reps, a.seed, &opts)?
        }
        Suite::Lrd => {
            let ladder = cfg.ladder.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
            check_lrd(&need_params()?, &ladder)?
        }
        Suite::Holder => vec![check_holder(&need_params()?, cfg.grid_power.unwrap_or(8), a.seed)?],
        Suite::Increments => {
            let p = need_params()?;
            let mut r = check_increment_limits(&p)?;
            r.extend(check_rescaled_increment_constant(&p)?);
            r
        }
    };
    finish_reports(&reports, a.report.as_deref())
}

fn execution(jobs: Option<usize>) -> Result<Execution, Failure> {
    match jobs {
        Some(0) => Err(bad("--jobs must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // fails only if a pool already exists, which never happens here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::Parallel),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let exec = execution(cli.jobs)?;
    match &cli.command {
        Command::Cov(a) => cmd_cov(a).map(|_| true),
        Command::Field(a) => cmd_field(a, exec).map(|_| true),
        Command::Particles(a) => cmd_particles(a, exec),
        Command::Verify(a) => cmd_verify(a, exec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
