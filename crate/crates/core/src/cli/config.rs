use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{default_nodes, Domain, DomainConfig, SphereRule};
use crate::measure::McConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Delta,
    HardyCheck,
    Lieb,
    RhoTheta,
    Spectrum,
    Count,
    Riesz,
    Floss,
    Rozenblum,
    Report,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Delta => "delta",
            Task::HardyCheck => "hardy-check",
            Task::Lieb => "lieb",
            Task::RhoTheta => "rho-theta",
            Task::Spectrum => "spectrum",
            Task::Count => "count",
            Task::Riesz => "riesz",
            Task::Floss => "floss",
            Task::Rozenblum => "rozenblum",
            Task::Report => "report",
        }
    }
}

/// Numeric parameters, read from the `params` object of a config file and
/// overridden from the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Sphere rule size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of eigenvalues for `spectrum`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `L_d` in the counting bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floss_constant: Option<f64>,
    /// `L_{γ,2}` in the Riesz-mean bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riesz_constant: Option<f64>,
    /// Lattice constant `c`; switches `rozenblum` to lattice centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_c: Option<f64>,
    /// Points in the default ρ sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardy_random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardy_eigenfunctions: Option<usize>,
}

impl Params {
    /// Fills every field of `self` that `other` sets.
    pub fn overlay(&mut self, other: &Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(h, n, lambda, theta, gamma, mu, samples, seed, k, floss_constant, riesz_constant, lattice_c, rho_count, hardy_random, hardy_eigenfunctions);
        if !other.rho.is_empty() {
            self.rho = other.rho.clone();
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: Task,
    pub domain: DomainConfig,
    pub params: Params,
    pub out: PathBuf,
}

fn missing(task: Task, key: &str) -> Error {
    Error::Config { path: format!("params.{key}"), reason: format!("required by task `{}`", task.name()) }
}

impl RunConfig {
    /// Parses a config document: a domain description with an optional
    /// `params` object.
    pub fn from_json(task: Task, text: &str, out: impl Into<PathBuf>) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Config {
            path: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })?;
        let params = match value.as_object_mut().and_then(|o| o.remove("params")) {
            None => Params::default(),
            Some(p) => serde_json::from_value(p).map_err(|e| Error::Config { path: "params".into(), reason: e.to_string() })?,
        };
        let domain = DomainConfig::from_value(&value)?;
        Ok(RunConfig { task, domain, params, out: out.into() })
    }

    pub fn load(task: Task, path: &Path, out: impl Into<PathBuf>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_json(task, &text, out)
    }

    pub fn build_domain(&self) -> Result<Domain> {
        self.domain.build()
    }

    /// Checks that everything the task needs is present.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let need_lambda = matches!(self.task, Task::Count | Task::Floss | Task::Rozenblum | Task::Report);
        if need_lambda && p.lambda.is_none() {
            return Err(missing(self.task, "lambda"));
        }
        let need_theta = matches!(self.task, Task::RhoTheta | Task::Rozenblum | Task::Report);
        if need_theta && p.theta.is_none() {
            return Err(missing(self.task, "theta"));
        }
        if self.task == Task::Riesz && p.mu.is_none() && p.lambda.is_none() {
            return Err(missing(self.task, "mu"));
        }
        for (key, v) in [("h", p.h), ("lambda", p.lambda), ("theta", p.theta), ("gamma", p.gamma), ("mu", p.mu)] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::Config { path: format!("params.{key}"), reason: format!("must be positive, got {x}") });
                }
            }
        }
        if p.rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config { path: "params.rho".into(), reason: "radii must be positive".into() });
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    /// Grid spacing; defaults to the shortest bbox side over 64.
    pub fn h(&self, dom: &Domain) -> f64 {
        self.params.h.unwrap_or_else(|| dom.bbox().lengths().into_iter().fold(f64::INFINITY, f64::min) / 64.0)
    }

    pub fn rule(&self, dom: &Domain) -> Result<SphereRule> {
        let n = match self.params.n {
            Some(n) => n,
            None => default_nodes(dom.dim())?,
        };
        SphereRule::new(dom.dim(), n)
    }

    pub fn mc(&self) -> McConfig {
        McConfig::new(self.params.samples.unwrap_or(crate::measure::DEFAULT_SAMPLES), self.seed())
    }

    pub fn rho_grid(&self, dom: &Domain) -> Vec<f64> {
        if self.params.rho.is_empty() {
            crate::measure::default_rho_grid(dom, self.params.rho_count.unwrap_or(20))
        } else {
            let mut r = self.params.rho.clone();
            r.sort_by(f64::total_cmp);
            r.dedup();
            r
        }
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma.unwrap_or(1.0)
    }

    /// `μ`, defaulting to `2λ`.
    pub fn mu(&self) -> Option<f64> {
        self.params.mu.or(self.params.lambda.map(|l| 2.0 * l))
    }
}
