//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the summary lines are always printed; exits non-zero if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.
//!
//! `HS_ACCEPTANCE_SEED` overrides the Monte Carlo seed.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use hardy_spectral::geometry::SphereRule;
use hardy_spectral::measure::{lemma1_check, rho_theta, McConfig, RhoThetaOptions};
use hardy_spectral::packing::{growth_exponent, lattice_coordinates, lattice_variant, rozenblum_extract, verify_packing};
use hardy_spectral::spectral::{
    assemble, count_leq, eigenvalues_covering, eigenvalues_with, floss_rhs, hardy_sides, hardy_suite, lambda_min, lieb_sweep,
    riesz_bound_rhs_2d, EigenOptions, HardySuiteOptions, LiebOptions, RieszOptions,
};
use hardy_spectral::{delta_at, delta_field, Domain};
use rand::{Rng, SeedableRng};

const CORPUS: [&str; 6] = ["interval", "square", "disk", "l_shape", "annulus", "rooms"];

type Outcome = Result<String, String>;

fn seed() -> u64 {
    std::env::var("HS_ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(20_240_601)
}

fn corpus_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.json"))
}

fn corpus(name: &str) -> Domain {
    Domain::from_json(&std::fs::read_to_string(corpus_path(name)).unwrap()).unwrap()
}

fn domain(json: &str) -> Domain {
    Domain::from_json(json).unwrap()
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn no_vectors() -> EigenOptions {
    EigenOptions { vectors: false, ..EigenOptions::default() }
}

fn delta_identities() -> Outcome {
    let interval = domain(r#"{"dim": 1, "tree": {"box": [[0, 1]]}}"#);
    let r1 = SphereRule::default_for(1).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let x = (i as f64 + 0.5) / 100.0;
        let v = delta_at(&interval, &[x], &r1).unwrap();
        worst = worst.max((v - x.min(1.0 - x)).abs());
    }
    check(worst <= 1e-12, || format!("interval error {worst:e}"))?;

    for dim in 1..=3 {
        let rule = SphereRule::default_for(dim).unwrap();
        for radius in [1.0, 2.5] {
            let center = vec![0.3; dim];
            let json = format!(r#"{{"dim": {dim}, "tree": {{"ball": {{"center": {center:?}, "radius": {radius}}}}}}}"#);
            let v = delta_at(&domain(&json), &center, &rule).unwrap();
            let want = radius / (dim as f64).sqrt();
            check((v - want).abs() <= 1e-9, || format!("ball d={dim} R={radius}: {v} vs {want}"))?;
        }
    }

    let mut worst_rel: f64 = 0.0;
    for dim in 1..=3 {
        let rule = SphereRule::default_for(dim).unwrap();
        let mut normal = vec![0.0; dim];
        normal[dim - 1] = 1.0;
        let bbox: Vec<[f64; 2]> = (0..dim).map(|k| if k + 1 == dim { [0.0, 2.0] } else { [-2.0, 2.0] }).collect();
        let json = format!(r#"{{"dim": {dim}, "tree": {{"halfspace": {{"normal": {normal:?}, "offset": 0}}}}, "bbox": {bbox:?}}}"#);
        let half = domain(&json);
        for height in [0.05, 0.3, 1.0, 1.7] {
            let mut x = vec![0.1; dim];
            x[dim - 1] = height;
            let v = delta_at(&half, &x, &rule).unwrap();
            worst_rel = worst_rel.max((v - height).abs() / height);
        }
    }
    check(worst_rel <= 1e-3, || format!("half-space relative error {worst_rel:e}"))?;
    Ok(format!("interval max error {worst:.1e}, half-space max relative error {worst_rel:.1e}"))
}

fn random_point<R: Rng>(dom: &Domain, rng: &mut R) -> Vec<f64> {
    let b = dom.bbox();
    loop {
        let x: Vec<f64> = (0..dom.dim()).map(|k| rng.gen_range(b.lo()[k]..b.hi()[k])).collect();
        if dom.contains(&x).unwrap() {
            return x;
        }
    }
}

fn lemma1_suite() -> Outcome {
    let doms: Vec<Domain> = CORPUS.iter().map(|n| corpus(n)).collect();
    let rules: Vec<SphereRule> = doms.iter().map(|d| SphereRule::default_for(d.dim()).unwrap()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed());
    let (mut fails, mut vacuous) = (Vec::new(), 0);
    for t in 0..1000u64 {
        let k = rng.gen_range(0..doms.len());
        let dom = &doms[k];
        let x = random_point(dom, &mut rng);
        let delta = delta_at(dom, &x, &rules[k]).unwrap();
        let rho = rng.gen_range(0.0..1.5) * (dom.dim() as f64).sqrt() * delta;
        let rho = rho.max(1e-6);
        let r = lemma1_check(dom, &x, rho, delta, 100_000, seed() ^ t).unwrap();
        if r.bound_value == 0.0 {
            vacuous += 1;
        }
        if !r.passed() {
            fails.push(format!("{} x={x:?} rho={rho}: {} < {}", CORPUS[k], r.reference_value, r.bound_value));
        }
    }
    check(fails.is_empty(), || format!("{} of 1000 failed, first: {}", fails.len(), fails[0]))?;
    Ok(format!("1000 triples pass ({vacuous} with a vacuous bound)"))
}

fn hardy_suite_all() -> Outcome {
    let h = 1.0 / 256.0;
    let mut worst = (f64::INFINITY, String::new());
    let mut total = 0;
    for name in CORPUS {
        let dom = corpus(name);
        let rule = SphereRule::default_for(dom.dim()).unwrap();
        let opts = HardySuiteOptions { seed: seed(), ..HardySuiteOptions::default() };
        let reps = hardy_suite(&dom, h, &rule, &opts).map_err(|e| format!("{name}: {e}"))?;
        check(reps.len() == 25, || format!("{name}: {} test functions", reps.len()))?;
        for r in &reps {
            total += 1;
            check(r.passed(), || format!("{name} {:?}: ratio {} tol {:?}", r.notes, r.ratio, r.tolerances))?;
            // `ratio` is rhs/lhs; the summary shows the smallest lhs/rhs.
            if 1.0 / r.ratio < worst.0 {
                worst = (1.0 / r.ratio, format!("{name} {}", r.notes.join(" ")));
            }
        }
    }
    let (a, b) = sine_ratios(h)?;
    // The discrete quotient approaches its limit from above at first order.
    check(b >= a - h * a, || format!("interval sin: ratio(h/2) = {b} < ratio(h) = {a} by more than O(h)"))?;
    check(2.0 * b - a >= 1.0, || format!("interval sin: extrapolated ratio {} < 1", 2.0 * b - a))?;
    Ok(format!("{total} checks, smallest lhs/rhs {:.4} ({}); sin ratio {a:.6} -> {b:.6}", worst.0, worst.1))
}

fn sine_ratios(h: f64) -> Result<(f64, f64), String> {
    let dom = domain(r#"{"dim": 1, "tree": {"box": [[0, 1]]}}"#);
    let rule = SphereRule::default_for(1).unwrap();
    let ratio = |h: f64| -> Result<f64, String> {
        let f = delta_field(&dom, h, &rule).map_err(|e| e.to_string())?;
        let u: Vec<f64> = (0..f.grid().len())
            .map(|i| if f.is_inside(i) { (PI * f.grid().point(i)[0]).sin() } else { 0.0 })
            .collect();
        let (lhs, rhs) = hardy_sides(&f, &u).map_err(|e| e.to_string())?;
        Ok(lhs / rhs)
    };
    Ok((ratio(h)?, ratio(h / 2.0)?))
}

fn eigen_anchors() -> Outcome {
    let h = 1.0 / 256.0;
    let interval = domain(r#"{"dim": 1, "tree": {"box": [[0, 1]]}}"#);
    let l_int = lambda_min(&interval, h).unwrap();
    let e_int = (l_int / (PI * PI) - 1.0).abs();
    check(e_int <= 1e-3, || format!("interval lambda1 {l_int}"))?;

    let square = corpus("square");
    let op = assemble(&square, h).unwrap();
    let l_sq = eigenvalues_with(&op, 1, &no_vectors()).unwrap().eigenvalues[0];
    let e_sq = (l_sq / (2.0 * PI * PI) - 1.0).abs();
    check(e_sq <= 1e-3, || format!("square lambda1 {l_sq}"))?;

    let lambda = 5.0 * PI * PI;
    let res = eigenvalues_covering(&op, lambda, &no_vectors()).unwrap();
    let n = count_leq(&res, lambda).unwrap();
    let oracle = (1..10).flat_map(|m| (1..10).map(move |k| m * m + k * k)).filter(|&s| s <= 5).count();
    check(n == oracle && oracle == 3, || format!("N(5 pi^2) = {n}, analytic {oracle}"))?;
    Ok(format!("relative errors {e_int:.1e} (interval), {e_sq:.1e} (square); N(5 pi^2) = {n}"))
}

fn lieb_and_rho_theta() -> Outcome {
    let mut lines = Vec::new();
    for name in CORPUS {
        let dom = corpus(name);
        let l1 = lambda_min(&dom, 1.0 / 128.0).unwrap();
        let rhos = hardy_spectral::measure::default_rho_grid(&dom, 20);
        let opts = LiebOptions { mc: McConfig::new(100_000, seed()), ..LiebOptions::default() };
        let reps = lieb_sweep(&dom, &rhos, l1, &opts).unwrap();
        check(reps.len() == 20, || format!("{name}: {} radii", reps.len()))?;
        if let Some(r) = reps.iter().find(|r| !r.passed()) {
            return Err(format!("{name}: bound {} exceeds lambda1 {l1} at rho {}", r.bound_value, r.parameters["rho"]));
        }
        let best = reps.iter().map(|r| r.bound_value).fold(0.0, f64::max);
        lines.push(format!("{name} {:.2}", best / l1));
    }

    let square = corpus("square");
    let grid: Vec<f64> = (50..=100).map(|i| i as f64 / 100.0).collect();
    let opts = RhoThetaOptions { mc: McConfig::new(100_000, seed()), grid_h: None };
    let rt = rho_theta(&square, 0.5, &grid, &opts).unwrap();
    let want = (2.0 / PI).sqrt();
    let got = rt.value.ok_or("rho_0.5 not reached on the grid")?;
    check((got - want).abs() <= 0.01 && rt.later_violations.is_empty(), || {
        format!("rho_0.5 = {got}, expected {want:.4}; later violations {:?}", rt.later_violations)
    })?;
    Ok(format!("max bound/lambda1: {}; rho_0.5(square) = {got}", lines.join(", ")))
}

fn rozenblum_square() -> Outcome {
    let square = corpus("square");
    let rule = SphereRule::default_for(2).unwrap();
    let mc = McConfig::new(100_000, seed());

    let h = 1.0 / 128.0;
    let field = delta_field(&square, h, &rule).unwrap();
    let op = assemble(&square, h).unwrap();
    let res = eigenvalues_covering(&op, 200.0, &no_vectors()).unwrap();
    let pk = rozenblum_extract(&square, &field, 200.0, 0.5, &mc).unwrap();
    let rep = verify_packing(&pk, &res).unwrap();
    check(rep.passed(), || format!("verify_packing: {:?}", rep.notes))?;

    let c = 0.25;
    let lat = lattice_variant(&square, &field, 200.0, 0.5, c, &mc).unwrap();
    let s = c / 200f64.sqrt();
    let keys = lattice_coordinates(&lat).unwrap();
    let exact = lat.centers.iter().zip(&keys).all(|(x, k)| x.iter().zip(k).all(|(xi, ki)| *xi == *ki as f64 * s));
    check(exact && !lat.is_empty(), || "lattice centers off (c lambda^-1/2) Z^2".into())?;
    let lat_rep = verify_packing(&lat, &res).unwrap();
    check(lat_rep.passed(), || format!("lattice verify_packing: {:?}", lat_rep.notes))?;

    let fine = delta_field(&square, 1.0 / 512.0, &rule).unwrap();
    let lambdas = [200.0, 400.0, 800.0, 1400.0, 2000.0];
    let counts: Vec<usize> = lambdas
        .iter()
        .map(|&l| rozenblum_extract(&square, &fine, l, 0.5, &McConfig::new(10_000, seed())).unwrap().len())
        .collect();
    let p = growth_exponent(&lambdas, &counts);
    check((0.8..=1.2).contains(&p), || format!("growth exponent {p} for counts {counts:?}"))?;
    Ok(format!("M = {} (lattice {}), c2_implied {:.3}; M over lambda {counts:?}, exponent {p:.3}", pk.len(), lat.len(), rep.derived["c2_implied"]))
}

fn implied_constants() -> Outcome {
    let square = corpus("square");
    let rule = SphereRule::default_for(2).unwrap();
    let (lambda, mu, gamma) = (200.0, 400.0, 1.0);
    let at = |h: f64| -> (f64, f64) {
        let f = delta_field(&square, h, &rule).unwrap();
        let op = assemble(&square, h).unwrap();
        let res = eigenvalues_covering(&op, mu, &no_vectors()).unwrap();
        let fl = floss_rhs(&f, lambda, 1.0, Some(&res)).unwrap();
        let rz = riesz_bound_rhs_2d(&f, mu, gamma, &RieszOptions::default(), Some(&res)).unwrap();
        (fl.derived["implied_constant"], rz.derived["implied_constant"])
    };
    let (a1, b1) = at(1.0 / 128.0);
    let (a2, b2) = at(1.0 / 256.0);
    for (label, x, y) in [("counting", a1, a2), ("riesz", b1, b2)] {
        check(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0, || format!("{label}: {x}, {y}"))?;
        check((x / y - 1.0).abs() <= 0.2, || format!("{label} constant moved from {x} to {y}"))?;
    }
    Ok(format!("counting {a1:.4} -> {a2:.4}, riesz {b1:.4} -> {b2:.4}"))
}

fn masked(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.trim_start().starts_with("\"header\"")).collect::<Vec<_>>().join("\n")
}

fn reproducible_report() -> Outcome {
    let base = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-report");
    let seed = seed().to_string();
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let out = base.join(run);
        let _ = std::fs::remove_dir_all(&out);
        let status = Command::new(env!("CARGO_BIN_EXE_hardy-spectral"))
            .args(["report", "--config"])
            .arg(corpus_path("square"))
            .args(["--h", "0.0078125", "--lambda", "200", "--theta", "0.5", "--seed", &seed, "--out"])
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        check(status.code() == Some(0), || format!("report exited with {status}"))?;
        outs.push(out);
    }
    let mut compared = 0;
    for f in ["report.json", "delta.csv", "spectrum.csv", "packing.csv"] {
        let (a, b) = (masked(&outs[0].join(f)), masked(&outs[1].join(f)));
        check(a == b, || format!("{f} differs between runs"))?;
        compared += a.len();
    }
    Ok(format!("report.json and 3 CSVs identical ({compared} bytes compared)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("delta identities", delta_identities),
        ("lemma 1 suite", lemma1_suite),
        ("hardy inequality", hardy_suite_all),
        ("eigensolver anchors", eigen_anchors),
        ("lieb bound and rho_theta", lieb_and_rho_theta),
        ("rozenblum packing", rozenblum_square),
        ("implied constants", implied_constants),
        ("report reproducibility", reproducible_report),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name} [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL {name} [{secs:.1}s]: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
