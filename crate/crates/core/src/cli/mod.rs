//! Batch front end: `hardy-spectral <task> --config <file> [options]`.
//!
//! Exit status is 0 when every bound check passes, 1 when one fails or a
//! numerical stage errors, and 2 for usage and validation errors.

mod config;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::geometry::Domain;
use crate::hardy_field::{delta_field, DeltaField};
use crate::packing::{lattice_variant, rozenblum_extract, verify_packing};
use crate::report::BoundReport;
use crate::spectral::{
    assemble, eigenvalues_covering, eigenvalues_with, floss_rhs, hardy_suite_fields, lambda_min, lieb_sweep,
    riesz_bound_rhs_2d, weyl_report, EigenOptions, HardySuiteOptions, LiebOptions, RieszOptions, SpectralResult,
};
use crate::{fmt, measure};

pub use config::{Params, RunConfig, Task};
pub use report::{report_all, Section, Summary};

#[derive(Debug, Parser)]
#[command(name = "hardy-spectral", version, about = "Hardy-type bounds and Dirichlet spectra on CSG domains")]
struct Cli {
    task: Task,
    /// Domain config (JSON), optionally with a `params` object.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "hs-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Sphere rule size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, num_args = 1..)]
    rho: Vec<f64>,
}

/// A failed run: the stage that raised the error and the error itself.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        if is_usage(&self.error) {
            2
        } else {
            1
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::Unbounded
            | Error::EmptyInterior
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension(_)
            | Error::BudgetExceeded { .. }
            | Error::NotInDomain(_)
    )
}

pub(crate) trait At<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> At<T> for Result<T, E> {
    fn at(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, error: e.into() })
    }
}

/// Files written by a run and the combined verdict; `None` when nothing was
/// checked.
#[derive(Debug)]
pub struct Outcome {
    pub pass: Option<bool>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass == Some(false) {
            1
        } else {
            0
        }
    }
}

pub fn main() -> i32 {
    run_args(std::env::args_os())
}

/// Parses arguments, runs the task and returns the exit status.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_threads();
    let mut cfg = match RunConfig::load(cli.task, &cli.config, &cli.out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return 2;
        }
    };
    cfg.params.overlay(&Params {
        h: cli.h,
        n: cli.n,
        rho: cli.rho,
        lambda: cli.lambda,
        theta: cli.theta,
        gamma: cli.gamma,
        mu: cli.mu,
        samples: cli.samples,
        seed: cli.seed,
        k: cli.k,
        ..Params::default()
    });
    match run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.pass == Some(false) {
                eprintln!("{}: a bound check failed", cfg.task.name());
            }
            outcome.exit_code()
        }
        Err(f) => {
            eprintln!("error in {f}");
            f.exit_code()
        }
    }
}

/// Caps the rayon pool at `HS_THREADS` when set.
fn init_threads() {
    if let Some(n) = std::env::var("HS_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate().at("config")?;
    let dom = cfg.build_domain().at("geometry")?;
    std::fs::create_dir_all(&cfg.out).at("output")?;
    match cfg.task {
        Task::Delta => task_delta(cfg, &dom),
        Task::HardyCheck => task_hardy(cfg, &dom),
        Task::Lieb => task_lieb(cfg, &dom),
        Task::RhoTheta => task_rho_theta(cfg, &dom),
        Task::Spectrum => task_spectrum(cfg, &dom),
        Task::Count => task_count(cfg, &dom),
        Task::Riesz => task_riesz(cfg, &dom),
        Task::Floss => task_floss(cfg, &dom),
        Task::Rozenblum => task_rozenblum(cfg, &dom),
        Task::Report => report_all(cfg, &dom),
    }
}

pub(crate) fn verdict(reports: &[BoundReport]) -> Option<bool> {
    if reports.iter().any(|r| r.pass == Some(false)) {
        Some(false)
    } else if reports.iter().any(|r| r.pass == Some(true)) {
        Some(true)
    } else {
        None
    }
}

pub(crate) fn status(pass: Option<bool>) -> &'static str {
    match pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "info",
    }
}

pub(crate) fn to_value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).at("output")
}

fn document(cfg: &RunConfig, dom: &Domain, pass: Option<bool>, result: Value) -> Value {
    json!({
        "task": cfg.task.name(),
        "domain": dom.name().unwrap_or("unnamed"),
        "domain_hash": format!("{:016x}", crate::spectral::domain_hash(dom)),
        "seed": cfg.seed(),
        "params": cfg.params,
        "status": status(pass),
        "result": result,
    })
}

pub(crate) fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).at("output")?;
    text.push('\n');
    std::fs::write(path, text).at("output")
}

pub(crate) fn write_with<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(BufWriter<File>) -> crate::Result<()>,
{
    let file = File::create(path).at("output")?;
    f(BufWriter::new(file)).at("output")
}

fn finish(cfg: &RunConfig, dom: &Domain, pass: Option<bool>, result: Value, mut files: Vec<PathBuf>) -> Result<Outcome, Failure> {
    let path = cfg.out.join(format!("{}.json", cfg.task.name()));
    write_json(&path, &document(cfg, dom, pass, result))?;
    files.insert(0, path);
    Ok(Outcome { pass, files })
}

pub(crate) fn field(cfg: &RunConfig, dom: &Domain, h: f64) -> Result<DeltaField, Failure> {
    let rule = cfg.rule(dom).at("geometry")?;
    delta_field(dom, h, &rule).at("hardy_field")
}

pub(crate) fn no_vectors() -> EigenOptions {
    EigenOptions { vectors: false, ..EigenOptions::default() }
}

pub(crate) fn covering(dom: &Domain, h: f64, lambda: f64) -> Result<SpectralResult, Failure> {
    let op = assemble(dom, h).at("spectral")?;
    eigenvalues_covering(&op, lambda, &no_vectors()).at("spectral")
}

pub(crate) fn field_summary(f: &DeltaField) -> Value {
    let max = f.max();
    json!({
        "h": fmt::Real(f.h()),
        "sphere_nodes": f.rule().len(),
        "interior": f.interior_count(),
        "quadrature_error": fmt::Real(f.quadrature_error()),
        "delta_max": max.map(|(_, v)| fmt::Real(v)),
        "argmax": max.map(|(i, _)| f.grid().point(i).into_iter().map(fmt::Real).collect::<Vec<_>>()),
    })
}

pub(crate) fn hardy_options(cfg: &RunConfig) -> HardySuiteOptions {
    let d = HardySuiteOptions::default();
    HardySuiteOptions {
        eigenfunctions: cfg.params.hardy_eigenfunctions.unwrap_or(d.eigenfunctions),
        random: cfg.params.hardy_random.unwrap_or(d.random),
        seed: cfg.seed(),
        ..d
    }
}

fn task_delta(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let f = field(cfg, dom, cfg.h(dom))?;
    let csv = cfg.out.join("delta.csv");
    write_with(&csv, |w| f.write_csv(w))?;
    finish(cfg, dom, None, field_summary(&f), vec![csv])
}

fn task_hardy(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let h = cfg.h(dom);
    let coarse = field(cfg, dom, h)?;
    let fine = field(cfg, dom, h / 2.0)?;
    let reps = hardy_suite_fields(dom, &coarse, &fine, &hardy_options(cfg)).at("spectral")?;
    finish(cfg, dom, verdict(&reps), to_value(&reps)?, vec![])
}

fn task_lieb(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let lambda1 = lambda_min(dom, cfg.h(dom)).at("spectral")?;
    let opts = LiebOptions { mc: cfg.mc(), ..LiebOptions::default() };
    let reps = lieb_sweep(dom, &cfg.rho_grid(dom), lambda1, &opts).at("spectral")?;
    let result = json!({"lambda1": fmt::Real(lambda1), "reports": to_value(&reps)?});
    finish(cfg, dom, verdict(&reps), result, vec![])
}

fn task_rho_theta(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let theta = cfg.params.theta.unwrap_or(0.5);
    let opts = measure::RhoThetaOptions { mc: cfg.mc(), grid_h: None };
    let r = measure::rho_theta(dom, theta, &cfg.rho_grid(dom), &opts).at("measure")?;
    finish(cfg, dom, None, to_value(&r)?, vec![])
}

fn task_spectrum(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let op = assemble(dom, cfg.h(dom)).at("spectral")?;
    let k = cfg.params.k.unwrap_or(10).min(op.dim());
    let res = eigenvalues_with(&op, k, &no_vectors()).at("spectral")?;
    let csv = cfg.out.join("spectrum.csv");
    write_with(&csv, |w| res.write_csv(w))?;
    finish(cfg, dom, None, to_value(&res)?, vec![csv])
}

fn task_count(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let lambda = cfg.params.lambda.unwrap_or_default();
    let res = covering(dom, cfg.h(dom), lambda)?;
    let rep = weyl_report(dom, &res, lambda, &cfg.mc()).at("spectral")?;
    finish(cfg, dom, rep.pass, to_value(&rep)?, vec![])
}

fn task_riesz(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let mu = cfg.mu().unwrap_or_default();
    let h = cfg.h(dom);
    let f = field(cfg, dom, h)?;
    let res = covering(dom, h, mu)?;
    let opts = RieszOptions { constant: cfg.params.riesz_constant.unwrap_or(1.0), ..RieszOptions::default() };
    let rep = riesz_bound_rhs_2d(&f, mu, cfg.gamma(), &opts, Some(&res)).at("spectral")?;
    finish(cfg, dom, rep.pass, to_value(&rep)?, vec![])
}

fn task_floss(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let lambda = cfg.params.lambda.unwrap_or_default();
    let h = cfg.h(dom);
    let f = field(cfg, dom, h)?;
    let res = covering(dom, h, lambda)?;
    let rep = floss_rhs(&f, lambda, cfg.params.floss_constant.unwrap_or(1.0), Some(&res)).at("spectral")?;
    finish(cfg, dom, rep.pass, to_value(&rep)?, vec![])
}

pub(crate) fn packing_run(cfg: &RunConfig, dom: &Domain, f: &DeltaField, res: &SpectralResult) -> Result<(Value, BoundReport, PathBuf), Failure> {
    let lambda = cfg.params.lambda.unwrap_or_default();
    let theta = cfg.params.theta.unwrap_or_default();
    let pk = match cfg.params.lattice_c {
        Some(c) => lattice_variant(dom, f, lambda, theta, c, &cfg.mc()),
        None => rozenblum_extract(dom, f, lambda, theta, &cfg.mc()),
    }
    .at("packing")?;
    let rep = verify_packing(&pk, res).at("packing")?;
    let csv = cfg.out.join("packing.csv");
    write_with(&csv, |w| pk.write_csv(w))?;
    let header = pk.header(rep.derived.get("c2_implied").copied());
    Ok((header, rep, csv))
}

fn task_rozenblum(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let h = cfg.h(dom);
    let f = field(cfg, dom, h)?;
    let res = covering(dom, h, cfg.params.lambda.unwrap_or_default())?;
    let (header, rep, csv) = packing_run(cfg, dom, &f, &res)?;
    let result = json!({"packing": header, "report": to_value(&rep)?});
    finish(cfg, dom, rep.pass, result, vec![csv])
}
