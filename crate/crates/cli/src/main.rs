mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use torick::families::{self, FamilyId, Sign};
use torick::futaki::{self, TestFunction};
use torick::poly::rational;
use torick::polytope::{classify_quadrilateral, hirzebruch_delzant, min_over_vertices};
use torick::solver::{self, VerdictKind};
use torick::twist;
use torick::{AffineMap2, Error, ErrorClass, LabelledPolytope2, Result, VERSION};

use config::{ConfigArgs, RunConfig};

/// Distance kept from family domain endpoints on batch p-grids.
const GRID_GUARD: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "torick", version, about = "Weighted extremal checks on labelled toric quadrilaterals")]
struct Cli {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Aligned text instead of JSON
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Affine function of an explicit family on a Hirzebruch trapezoid
    Family {
        #[arg(long)]
        id: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        /// Allow the futaki-ono expression for k >= 5
        #[arg(long)]
        exploratory: bool,
    },
    /// Extremal affine function of a labelled polygon with weight f
    Zeta {
        #[arg(long)]
        polytope: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 4.0)]
        w: f64,
    },
    /// Weighted Donaldson-Futaki invariant of an affine or crease function
    Df {
        #[arg(long)]
        polytope: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 4.0)]
        w: f64,
        /// Affine test function c0,c1,c2
        #[arg(long, allow_hyphen_values = true, conflicts_with = "crease")]
        phi: Option<String>,
        /// Crease max(0, c0 + c1 x1 + c2 x2)
        #[arg(long, allow_hyphen_values = true)]
        crease: Option<String>,
    },
    /// Twisted labelled polygon
    Twist {
        #[arg(long)]
        polytope: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
    },
    /// Stability verdict through the twist
    Stability {
        #[arg(long)]
        polytope: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 4.0)]
        w: f64,
        /// Newton starts for the accompanying root list; 0 skips it
        #[arg(long, default_value_t = 400)]
        starts: usize,
    },
    /// Solve for weights whose extremal affine function is constant
    SolveA {
        #[arg(long, required_unless_present = "p")]
        polytope: Option<String>,
        /// Use the trapezoid with this p instead of a polytope file
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 4.0)]
        w: f64,
        #[arg(long, default_value_t = 400)]
        starts: usize,
    },
    /// Batch verification pipelines
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// Solver scan showing LeBrun-Calabi is the only positive root away from
    /// the other families, plus the case (1,2) scan
    Thm1Uniqueness {
        #[arg(long, default_value_t = 25)]
        grid: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 400)]
        starts: usize,
    },
    /// Stability verdicts for both futaki-ono branches on p-grids
    Thm2 {
        #[arg(long, num_args = 1.., default_values_t = [1u32, 2, 3, 4])]
        k: Vec<u32>,
        #[arg(long, default_value_t = 25)]
        grid: usize,
    },
    /// Exact check of the quartic identity at rational points
    IdentityE2,
    /// Non-positivity of the one-parameter family on sampled (p, b)
    Case12 {
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
}

/// A report plus whether the verification it describes passed.
struct Outcome {
    name: &'static str,
    body: Value,
    passed: bool,
}

impl Outcome {
    fn ok(name: &'static str, body: Value) -> Self {
        Self { name, body, passed: true }
    }
}

fn parse_coeffs(s: &str) -> Result<AffineMap2> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::ParameterOutOfRange(format!(
            "expected three comma-separated coefficients c0,c1,c2, got {s:?}"
        )));
    }
    let mut c = [0.0; 3];
    for (slot, part) in c.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::ParameterOutOfRange(format!("invalid coefficient {part:?}")))?;
    }
    Ok(AffineMap2::from_coefficients(c))
}

/// A JSON file, or `hirzebruch:p,k` for the standard trapezoid.
fn load_polytope(spec: &str) -> Result<LabelledPolytope2> {
    if let Some(rest) = spec.strip_prefix("hirzebruch:") {
        let (p, k) = rest
            .split_once(',')
            .ok_or_else(|| Error::ParameterOutOfRange(format!("expected hirzebruch:p,k, got {spec:?}")))?;
        let p: f64 = p.trim().parse().map_err(|_| Error::ParameterOutOfRange(format!("invalid p {p:?}")))?;
        let k: u32 = k.trim().parse().map_err(|_| Error::ParameterOutOfRange(format!("invalid k {k:?}")))?;
        return hirzebruch_delzant(p, k);
    }
    let path = PathBuf::from(spec);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::ParameterOutOfRange(format!("cannot read polytope {}: {e}", path.display())))?;
    LabelledPolytope2::from_json_str(&text)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn coeffs(f: &AffineMap2) -> Value {
    json!(f.coefficients())
}

/// `residual_a` by quadrature for positive weights, by the closed form at
/// `w = 4` otherwise.
fn residual_report(p: &LabelledPolytope2, f: &AffineMap2, positive: bool, tol: f64) -> Result<(f64, &'static str)> {
    if positive {
        Ok((futaki::extremal_affine(p, f, 4.0, tol)?.residual_a, "quadrature"))
    } else {
        Ok((futaki::extremal_affine_closed_form(p, f)?.residual_a, "closed-form"))
    }
}

fn cmd_family(cfg: &RunConfig, id: &str, p: f64, k: u32, sign: &str, b: Option<f64>, exploratory: bool) -> Result<Outcome> {
    let id: FamilyId = id.parse()?;
    let sign: Sign = sign.parse()?;
    let explore = exploratory && id == FamilyId::FutakiOno && k >= 5;
    let f = if explore {
        families::check_domain(FamilyId::LebrunCalabi, p, k, None)?;
        families::futaki_ono_raw(p, k, sign)?
    } else {
        families::family_f(id, p, k, sign, b)?
    };
    let poly = hirzebruch_delzant(p, k)?;
    let (min_vertex_value, argmin) = min_over_vertices(&poly, &f);
    let positive = min_vertex_value > 0.0;
    let (residual_a, backend) = residual_report(&poly, &f, positive, cfg.tol)?;
    let equipoised = families::equipoised_check(&poly, &f).ok();
    let vertex_sum: f64 = poly.vertices().iter().map(|v| f.eval(*v)).sum();
    let mut body = json!({
        "id": id.as_str(),
        "p": p,
        "k": k,
        "coefficients": coeffs(&f),
        "f": to_value(&f),
        "positive_on_polytope": positive,
        "min_vertex_value": min_vertex_value,
        "min_vertex_index": argmin,
        "vertex_sum": vertex_sum,
        "residual_a": residual_a,
        "residual_backend": backend,
        "equipoised_sum": equipoised,
        "exploratory": explore,
    });
    if id.has_sign() {
        body["sign"] = json!(sign.as_str());
    }
    if let Some(b) = b {
        body["b"] = json!(b);
    }
    Ok(Outcome::ok("family", body))
}

fn cmd_zeta(cfg: &RunConfig, polytope: &str, f: &str, w: f64) -> Result<Outcome> {
    let p = load_polytope(polytope)?;
    let f = parse_coeffs(f)?;
    let ea = futaki::extremal_affine(&p, &f, w, cfg.tol)?;
    let mut body = json!({
        "zeta": to_value(&ea.zeta),
        "coefficients": coeffs(&ea.zeta),
        "gram_condition_number": ea.gram_condition_number,
        "residual_a": ea.residual_a,
        "constant": ea.residual_a < cfg.tau_a,
        "orthogonality_defect": ea.orthogonality_defect(),
        "w": w,
    });
    if w.fract() == 0.0 && w >= 3.0 {
        body["ckem_constant"] = json!(futaki::ckem_constant(&p, &f, (w - 2.0) as u32, cfg.tol)?);
    }
    Ok(Outcome::ok("zeta", body))
}

fn cmd_df(cfg: &RunConfig, polytope: &str, f: &str, w: f64, phi: Option<&str>, crease: Option<&str>) -> Result<Outcome> {
    let p = load_polytope(polytope)?;
    let f = parse_coeffs(f)?;
    let test = match (phi, crease) {
        (Some(s), None) => TestFunction::Affine(parse_coeffs(s)?),
        (None, Some(s)) => TestFunction::Crease(futaki::CreaseFunction::new(parse_coeffs(s)?)),
        _ => return Err(Error::ParameterOutOfRange("pass exactly one of --phi or --crease".into())),
    };
    let zeta = futaki::extremal_affine(&p, &f, w, cfg.tol)?.zeta;
    let parts = futaki::df_parts(&p, &f, w, &test, &zeta, cfg.tol)?;
    let kind = match test {
        TestFunction::Affine(_) => "affine",
        TestFunction::Crease(_) => "crease",
    };
    Ok(Outcome::ok(
        "df",
        json!({
            "value": parts.value(),
            "boundary_term": parts.boundary,
            "interior_term": parts.interior,
            "scale": parts.scale(),
            "test_function": kind,
            "zeta": to_value(&zeta),
            "w": w,
        }),
    ))
}

fn cmd_twist(polytope: &str, f: &str) -> Result<Outcome> {
    let p = load_polytope(polytope)?;
    let f = parse_coeffs(f)?;
    let centered = twist::center(&p, &f)?;
    let twisted = twist::twist_polytope(&centered.polytope, &centered.f)?;
    let quad_type = if twisted.len() == 4 {
        Some(classify_quadrilateral(&twisted)?.as_str())
    } else {
        None
    };
    let identity = centered.f.max_coeff_distance(&AffineMap2::one()) == 0.0;
    Ok(Outcome::ok(
        "twist",
        json!({
            "polytope": twisted.to_json_value(),
            "translation": centered.translation,
            "f_centered": to_value(&centered.f),
            "f_tilde": to_value(&twist::dual_weight(&centered.f)?),
            "quad_type": quad_type,
            "identity": identity,
        }),
    ))
}

fn roots_value(roots: &[solver::ConditionASolution]) -> Value {
    to_value(&roots)
}

fn cmd_stability(cfg: &RunConfig, polytope: &str, f: &str, w: f64, starts: usize) -> Result<Outcome> {
    let p = load_polytope(polytope)?;
    let f = parse_coeffs(f)?;
    let mut v = solver::stability_verdict(&p, &f, w, &cfg.verdict_options())?;
    if starts > 0 && p.len() == 4 {
        v.roots = solver::solve_condition_a(&p, w, starts, cfg.seed, cfg.tau_a.min(1e-10)).unwrap_or_default();
    }
    let mut body = to_value(&v);
    body["twist"]["polytope"] = v.twist.polytope.to_json_value();
    body["roots"] = roots_value(&v.roots);
    Ok(Outcome::ok("stability", body))
}

fn cmd_solve_a(cfg: &RunConfig, polytope: Option<&str>, p: Option<f64>, k: u32, w: f64, starts: usize) -> Result<Outcome> {
    let poly = match (polytope, p) {
        (Some(s), _) => load_polytope(s)?,
        (None, Some(p)) => hirzebruch_delzant(p, k)?,
        (None, None) => return Err(Error::ParameterOutOfRange("pass --polytope or --p".into())),
    };
    let roots = solver::solve_condition_a(&poly, w, starts, cfg.seed, cfg.tau_a.min(1e-10))?;
    let positive = roots.iter().filter(|r| r.positive_on_polytope).count();
    Ok(Outcome::ok(
        "solve-a",
        json!({
            "polytope": poly.to_json_value(),
            "w": w,
            "starts": starts,
            "roots": roots_value(&roots),
            "root_count": roots.len(),
            "positive_root_count": positive,
        }),
    ))
}

/// `n` interior points of `(lo, hi)` after shrinking by the guard band.
fn p_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (lo + GRID_GUARD, hi - GRID_GUARD);
    (0..n).map(|i| lo + (hi - lo) * (i + 1) as f64 / (n + 1) as f64).collect()
}

fn error_value(e: &Error) -> Value {
    json!({
        "kind": e.kind(),
        "class": match e.class() {
            ErrorClass::Input => "input",
            ErrorClass::Numeric => "numeric",
        },
        "message": e.to_string(),
    })
}

fn thm2_sample(cfg: &RunConfig, k: u32, p: f64, sign: Sign) -> Result<Value> {
    let poly = hirzebruch_delzant(p, k)?;
    let f = families::family_f(FamilyId::FutakiOno, p, k, sign, None)?;
    let (min_vertex_value, _) = min_over_vertices(&poly, &f);
    let equipoised_vertex_sum = families::equipoised_check(&poly, &f)?;
    let v = solver::stability_verdict(&poly, &f, 4.0, &cfg.verdict_options())?;
    let stable = v.verdict == VerdictKind::StableByTheorem && min_vertex_value > 0.0;
    Ok(json!({
        "k": k,
        "p": p,
        "sign": sign.as_str(),
        "coefficients": coeffs(&f),
        "positive_on_polytope": min_vertex_value > 0.0,
        "min_vertex_value": min_vertex_value,
        "residual_a": v.residual_a,
        "equipoised_vertex_sum": equipoised_vertex_sum,
        "equipoised_sum": v.equipoised_sum,
        "quad_type": v.twist.quad_type.map(|q| q.as_str()),
        "branch": v.twist.branch,
        "translation": v.twist.translation,
        "crease_min": v.crease_min,
        "crease_min_relative": v.crease_scan.min_relative,
        "crease_violations": v.crease_scan.violations,
        "verdict": v.verdict.as_str(),
        "passed": stable,
    }))
}

fn cmd_thm2(cfg: &RunConfig, ks: &[u32], grid: usize) -> Result<Outcome> {
    let mut jobs = Vec::new();
    for &k in ks {
        if !(1..=4).contains(&k) {
            return Err(Error::ParameterOutOfDomain(format!("futaki-ono is stated for 1 <= k <= 4, got {k}")));
        }
        for p in p_grid(0.0, families::r_k(k), grid) {
            for sign in Sign::BOTH {
                jobs.push((k, p, sign));
            }
        }
    }
    let results: Vec<Result<Value>> = jobs.par_iter().map(|&(k, p, s)| thm2_sample(cfg, k, p, s)).collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut stable = 0;
    let mut numeric_error = None;
    let mut all_generic = true;
    let mut crease_min = f64::INFINITY;
    let mut max_equipoised = 0.0f64;
    let mut max_residual = 0.0f64;
    for (r, &(k, p, s)) in results.into_iter().zip(&jobs) {
        match r {
            Ok(v) => {
                if v["passed"] == json!(true) {
                    stable += 1;
                }
                all_generic &= v["quad_type"] == json!("GenericQuadrilateral");
                crease_min = crease_min.min(v["crease_min"].as_f64().unwrap_or(f64::NEG_INFINITY));
                max_equipoised = max_equipoised.max(v["equipoised_sum"].as_f64().map_or(f64::INFINITY, f64::abs));
                max_residual = max_residual.max(v["residual_a"].as_f64().unwrap_or(f64::INFINITY));
                samples.push(v);
            }
            Err(e) => {
                all_generic = false;
                if e.class() == ErrorClass::Numeric && numeric_error.is_none() {
                    numeric_error = Some(e.clone());
                }
                samples.push(json!({"k": k, "p": p, "sign": s.as_str(), "error": error_value(&e), "passed": false}));
            }
        }
    }
    if let Some(e) = numeric_error {
        return Err(e);
    }
    let total = samples.len();
    Ok(Outcome {
        name: "verify-thm2",
        passed: stable == total && total > 0,
        body: json!({
            "k": ks,
            "grid": grid,
            "samples": samples,
            "total": total,
            "stable_by_theorem": stable,
            "all_generic_quadrilateral": all_generic,
            "crease_min": crease_min,
            "max_abs_equipoised_sum": max_equipoised,
            "max_residual_a": max_residual,
        }),
    })
}

fn cmd_thm1_uniqueness(cfg: &RunConfig, grid: usize, samples: usize, starts: usize) -> Result<Outcome> {
    let grid_p = p_grid(families::r_k(1), 8.0 / 9.0, grid);
    let results: Vec<Result<Value>> = grid_p
        .par_iter()
        .map(|&p| {
            let poly = hirzebruch_delzant(p, 1)?;
            let roots = solver::solve_condition_a(&poly, 4.0, starts, cfg.seed, cfg.tau_a.min(1e-10))?;
            let positive: Vec<_> = roots.iter().filter(|r| r.positive_on_polytope).collect();
            let only_calabi = positive.len() == 1
                && positive[0]
                    .matched_family
                    .as_ref()
                    .is_some_and(|m| m.id == FamilyId::LebrunCalabi && !m.conjugate);
            Ok(json!({
                "p": p,
                "root_count": roots.len(),
                "positive_root_count": positive.len(),
                "positive_roots": to_value(&positive),
                "only_lebrun_calabi": only_calabi,
            }))
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.push(r?);
    }
    let unique = rows.iter().all(|r| r["only_lebrun_calabi"] == json!(true));
    let scan = families::positivity_scan_case12(&families::case12_samples(samples, cfg.seed))?;
    Ok(Outcome {
        name: "verify-thm1-uniqueness",
        passed: unique && scan.all_negative,
        body: json!({
            "p_range": [families::r_k(1), 8.0 / 9.0],
            "grid": rows,
            "only_lebrun_calabi_positive": unique,
            "case12": to_value(&scan),
        }),
    })
}

fn cmd_identity_e2() -> Result<Outcome> {
    let points = [(1, 2), (7, 10), (1, 3), (2, 7), (5, 9), (11, 13), (3, 100)];
    let mut zero_at = Vec::new();
    let mut nonzero_at = Vec::new();
    for (n, d) in points {
        let label = format!("{n}/{d}");
        if families::identity_e2_is_zero(&rational(n, d)) {
            zero_at.push(label);
        } else {
            nonzero_at.push(label);
        }
    }
    Ok(Outcome {
        name: "verify-identity-e2",
        passed: nonzero_at.is_empty(),
        body: json!({
            "exact_zero_at": zero_at,
            "exact_zero_count": zero_at.len(),
            "nonzero_at": nonzero_at,
        }),
    })
}

fn cmd_case12(cfg: &RunConfig, samples: usize) -> Result<Outcome> {
    let scan = families::positivity_scan_case12(&families::case12_samples(samples, cfg.seed))?;
    Ok(Outcome {
        name: "verify-case12",
        passed: scan.all_negative,
        body: to_value(&scan),
    })
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Outcome> {
    match &cli.cmd {
        Command::Family { id, p, k, sign, b, exploratory } => cmd_family(cfg, id, *p, *k, sign, *b, *exploratory),
        Command::Zeta { polytope, f, w } => cmd_zeta(cfg, polytope, f, *w),
        Command::Df { polytope, f, w, phi, crease } => cmd_df(cfg, polytope, f, *w, phi.as_deref(), crease.as_deref()),
        Command::Twist { polytope, f } => cmd_twist(polytope, f),
        Command::Stability { polytope, f, w, starts } => cmd_stability(cfg, polytope, f, *w, *starts),
        Command::SolveA { polytope, p, k, w, starts } => cmd_solve_a(cfg, polytope.as_deref(), *p, *k, *w, *starts),
        Command::Verify { what } => match what {
            Verify::Thm1Uniqueness { grid, samples, starts } => cmd_thm1_uniqueness(cfg, *grid, *samples, *starts),
            Verify::Thm2 { k, grid } => cmd_thm2(cfg, k, *grid),
            Verify::IdentityE2 => cmd_identity_e2(),
            Verify::Case12 { samples } => cmd_case12(cfg, *samples),
        },
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("TORICK_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn fail(e: &Error) -> ExitCode {
    eprint!("{}", report::to_json(&json!({ "error": error_value(e) })));
    match e.class() {
        ErrorClass::Input => ExitCode::from(2),
        ErrorClass::Numeric => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let cfg = match RunConfig::resolve(&cli.cfg) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outcome = match run(&cli, &cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let mut body = match outcome.body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    body.insert("command".into(), json!(outcome.name));
    body.insert("config".into(), to_value(&cfg));
    body.insert("version".into(), json!(VERSION));
    body.insert("passed".into(), json!(outcome.passed));
    let body = Value::Object(body);
    let text = if cli.human { report::to_human(&body) } else { report::to_json(&body) };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                return fail(&Error::ParameterOutOfRange(format!("cannot write {}: {e}", path.display())));
            }
        }
        None => print!("{text}"),
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
