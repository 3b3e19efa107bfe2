//! Full suite on one domain: one JSON summary plus the CSV dumps.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use super::{
    covering, field, field_summary, hardy_options, no_vectors, packing_run, status, to_value, verdict, write_with, At, Failure, Outcome, RunConfig,
};
use crate::error::Error;
use crate::fmt;
use crate::geometry::Domain;
use crate::measure::{rho_theta, RhoThetaOptions};
use crate::spectral::{
    assemble, eigenvalues_with, floss_rhs, hardy_suite_fields, lieb_sweep, riesz_bound_rhs_2d, weyl_report,
    LiebOptions, RieszOptions,
};

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: &'static str,
    /// `pass`, `fail`, `info` or `error`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub data: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub domain: String,
    pub domain_hash: String,
    pub seed: u64,
    pub params: super::Params,
    pub status: &'static str,
    pub sections: Vec<Section>,
    pub files: Vec<String>,
}

impl Summary {
    pub fn failed(&self) -> bool {
        self.sections.iter().any(|s| s.status == "fail" || s.status == "error")
    }
}

type Step = Result<(Option<bool>, Value), Failure>;

fn section(name: &'static str, step: Step) -> Section {
    match step {
        Ok((pass, data)) => Section { name, status: status(pass), error: None, data },
        Err(f) => Section { name, status: "error", error: Some(f.to_string()), data: Value::Null },
    }
}

fn needs(what: &str) -> Failure {
    Failure { stage: "report", error: Error::NoConvergence(format!("{what} unavailable")) }
}

/// Runs every section; an error in one section is recorded and the rest
/// continue. Validation errors and an empty interior abort with status 2.
pub fn summarize(cfg: &RunConfig, dom: &Domain) -> Result<Summary, Failure> {
    let h = cfg.h(dom);
    let lambda = cfg.params.lambda.unwrap_or_default();
    let mu = cfg.mu().unwrap_or(2.0 * lambda);
    let mut files: Vec<PathBuf> = Vec::new();
    let mut sections = Vec::new();

    let coarse = field(cfg, dom, h)?;
    if coarse.interior_count() == 0 {
        return Err(Failure { stage: "hardy_field", error: Error::EmptyInterior });
    }
    let csv = cfg.out.join("delta.csv");
    write_with(&csv, |w| coarse.write_csv(w))?;
    files.push(csv);
    sections.push(section("delta", Ok((None, field_summary(&coarse)))));

    let low = assemble(dom, h).at("spectral").and_then(|op| {
        let k = cfg.params.k.unwrap_or(10).min(op.dim());
        eigenvalues_with(&op, k, &no_vectors()).at("spectral")
    });
    let cover = covering(dom, h, lambda.max(mu));
    let lambda1 = low.as_ref().ok().map(|r| r.eigenvalues[0]);
    sections.push(section(
        "spectrum",
        low.and_then(|r| {
            let csv = cfg.out.join("spectrum.csv");
            write_with(&csv, |w| r.write_csv(w))?;
            files.push(csv);
            Ok((None, to_value(&r)?))
        }),
    ));

    sections.push(section(
        "hardy",
        field(cfg, dom, h / 2.0).and_then(|fine| {
            let reps = hardy_suite_fields(dom, &coarse, &fine, &hardy_options(cfg)).at("spectral")?;
            let min_ratio = reps.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            Ok((verdict(&reps), json!({"min_ratio": fmt::Real(min_ratio), "reports": to_value(&reps)?})))
        }),
    ));

    let rhos = cfg.rho_grid(dom);
    sections.push(section(
        "lieb",
        lambda1.ok_or_else(|| needs("lambda1")).and_then(|l1| {
            let opts = LiebOptions { mc: cfg.mc(), ..LiebOptions::default() };
            let reps = lieb_sweep(dom, &rhos, l1, &opts).at("spectral")?;
            let best = reps.iter().map(|r| r.bound_value).fold(0.0, f64::max);
            let data = json!({
                "lambda1": fmt::Real(l1),
                "max_bound": fmt::Real(best),
                "max_bound_over_lambda1": fmt::Real(best / l1),
                "reports": to_value(&reps)?,
            });
            Ok((verdict(&reps), data))
        }),
    ));

    sections.push(section("rho_theta", {
        let opts = RhoThetaOptions { mc: cfg.mc(), grid_h: None };
        rho_theta(dom, cfg.params.theta.unwrap_or(0.5), &rhos, &opts)
            .at("measure")
            .and_then(|r| Ok((None, to_value(&r)?)))
    }));

    let cover = cover.map_err(|f| f.to_string());
    let spectrum = |what: &str| cover.as_ref().map_err(|e| needs(&format!("{what}: {e}")));

    sections.push(section(
        "counting",
        spectrum("spectrum").and_then(|res| {
            let rep = weyl_report(dom, res, lambda, &cfg.mc()).at("spectral")?;
            Ok((rep.pass, to_value(&rep)?))
        }),
    ));

    sections.push(section(
        "floss",
        spectrum("spectrum").and_then(|res| {
            let rep = floss_rhs(&coarse, lambda, cfg.params.floss_constant.unwrap_or(1.0), Some(res)).at("spectral")?;
            Ok((rep.pass, to_value(&rep)?))
        }),
    ));

    if dom.dim() == 2 {
        sections.push(section(
            "riesz",
            spectrum("spectrum").and_then(|res| {
                let opts = RieszOptions { constant: cfg.params.riesz_constant.unwrap_or(1.0), factor: mu / lambda };
                let rep = riesz_bound_rhs_2d(&coarse, mu, cfg.gamma(), &opts, Some(res)).at("spectral")?;
                Ok((rep.pass, to_value(&rep)?))
            }),
        ));
    }

    sections.push(section(
        "rozenblum",
        spectrum("spectrum").and_then(|res| {
            let (header, rep, csv) = packing_run(cfg, dom, &coarse, res)?;
            files.push(csv);
            Ok((rep.pass, json!({"packing": header, "report": to_value(&rep)?})))
        }),
    ));

    let mut summary = Summary {
        domain: dom.name().unwrap_or("unnamed").to_string(),
        domain_hash: format!("{:016x}", crate::spectral::domain_hash(dom)),
        seed: cfg.seed(),
        params: cfg.params.clone(),
        status: "pass",
        sections,
        files: files
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    };
    if summary.failed() {
        summary.status = "fail";
    }
    Ok(summary)
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes `report.json`. The timestamp sits alone on the second line so
/// that golden-file comparisons can mask it.
pub fn report_all(cfg: &RunConfig, dom: &Domain) -> Result<Outcome, Failure> {
    let summary = summarize(cfg, dom)?;
    let body = serde_json::to_string_pretty(&summary).at("output")?;
    let body = body.replace('\n', "\n  ");
    let text = format!("{{\n  \"header\": {{\"timestamp\": {}}},\n  \"summary\": {}\n}}\n", timestamp(), body);
    let path = cfg.out.join("report.json");
    std::fs::write(&path, text).at("output")?;
    let mut files = vec![path];
    files.extend(summary.files.iter().map(|f| cfg.out.join(f)));
    let pass = Some(!summary.failed());
    Ok(Outcome { pass, files })
}
