//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any of them fails.

use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use torick::abreu::integration_by_parts;
use torick::families::{self, FamilyId, Sign};
use torick::futaki::{self, TestFunction};
use torick::polytope::{hirzebruch_delzant, unit_square};
use torick::solver::solve_condition_a;
use torick::twist::{self, check_df_covariance, check_hessian_det_law};
use torick::{AffineMap2, LabelledPolytope2};

const QUAD_TOL: f64 = 1e-10;
const GUARD: f64 = 1e-6;
// The curvature integrand carries finite-difference noise near 1e-8, so the
// adaptive rule cannot certify QUAD_TOL on it.
const PARTS_QUAD_TOL: f64 = 1e-7;

type Outcome = Result<String, String>;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (lo + GUARD, hi - GUARD);
    (0..n).map(|i| lo + (hi - lo) * (i + 1) as f64 / (n + 1) as f64).collect()
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Ok(format!("{detail}; {:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}; took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn family(id: FamilyId, p: f64, k: u32, sign: Sign) -> Result<(LabelledPolytope2, AffineMap2), String> {
    let poly = hirzebruch_delzant(p, k).map_err(|e| e.to_string())?;
    let f = families::family_f(id, p, k, sign, None).map_err(|e| format!("{id} p={p} k={k}: {e}"))?;
    Ok((poly, f))
}

fn square_baseline() -> Outcome {
    let t = Instant::now();
    let zeta = futaki::extremal_affine(&unit_square(), &AffineMap2::one(), 4.0, QUAD_TOL)
        .map_err(|e| e.to_string())?
        .zeta;
    let ok = (zeta.c0 - 8.0).abs() < 1e-8 && zeta.c1.abs() < 1e-9 && zeta.c2.abs() < 1e-9;
    let detail = format!("zeta = ({:e}, {:e}, {:e})", zeta.c0, zeta.c1, zeta.c2);
    if !ok {
        return Err(detail);
    }
    within(t.elapsed(), Duration::from_secs(1), detail)
}

fn family_instances() -> Vec<(FamilyId, f64, u32, Sign)> {
    let mut out = Vec::new();
    for k in 1..=4 {
        for p in grid(0.0, 1.0, 25) {
            out.push((FamilyId::LebrunCalabi, p, k, Sign::Plus));
        }
        for p in grid(0.0, families::r_k(k), 25) {
            for s in Sign::BOTH {
                out.push((FamilyId::FutakiOno, p, k, s));
            }
        }
    }
    for p in grid(8.0 / 9.0, 1.0, 25) {
        for s in Sign::BOTH {
            out.push((FamilyId::LebrunB, p, 1, s));
        }
    }
    out
}

fn condition_a_for_families() -> Outcome {
    let t = Instant::now();
    let instances = family_instances();
    let mut worst: f64 = 0.0;
    for &(id, p, k, s) in &instances {
        let (poly, f) = family(id, p, k, s)?;
        let r = futaki::extremal_affine(&poly, &f, 4.0, QUAD_TOL)
            .map_err(|e| format!("{id} {s} p={p} k={k}: {e}"))?
            .residual_a;
        if !(r < 1e-7) {
            return Err(format!("{id} {s} p={p} k={k}: residual_a = {r:e}"));
        }
        worst = worst.max(r);
    }
    within(
        t.elapsed(),
        Duration::from_secs(120),
        format!("{} samples, max residual_a {worst:e}", instances.len()),
    )
}

fn equipoised_identity() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 1..=4 {
        for p in grid(0.0, families::r_k(k), 50) {
            for s in Sign::BOTH {
                let (poly, f) = family(FamilyId::FutakiOno, p, k, s)?;
                let sum = families::equipoised_check(&poly, &f).map_err(|e| e.to_string())?;
                if !(sum.abs() < 1e-10) {
                    return Err(format!("k={k} p={p} {s}: alternating sum {sum:e}"));
                }
                worst = worst.max(sum.abs());
                count += 1;
            }
        }
    }
    let rationals = [(1, 2), (7, 10), (1, 3), (2, 7), (5, 9), (11, 13), (3, 100)];
    for (n, d) in rationals {
        let q = torick::poly::rational(n, d);
        if !families::identity_e2_is_zero(&q) {
            return Err(format!("e2({n}/{d}) = {} is not zero", families::identity_e2(&q)));
        }
    }
    within(
        t.elapsed(),
        Duration::from_secs(5),
        format!("{count} samples, max |sum| {worst:e}; e2 exactly 0 at {} rationals", rationals.len()),
    )
}

fn twist_covariance() -> Outcome {
    let mut detail = Vec::new();
    for s in Sign::BOTH {
        let (poly, f) = family(FamilyId::FutakiOno, 0.2, 1, s)?;
        let c = twist::center(&poly, &f).map_err(|e| e.to_string())?;
        let phis: Vec<TestFunction> = futaki::sample_creases(&c.polytope, 20, 42)
            .into_iter()
            .map(TestFunction::Crease)
            .collect();
        let r = check_df_covariance(&c.polytope, &c.f, &phis, QUAD_TOL).map_err(|e| e.to_string())?;
        let line = format!(
            "{s}: {} creases, max rel dev {:e}, zeta distance {:e}",
            r.entries.len(),
            r.max_relative_deviation,
            r.zeta_max_coeff_distance
        );
        if !(r.max_relative_deviation < 1e-7 && r.zeta_max_coeff_distance < 1e-7) || r.entries.len() != 20 {
            return Err(line);
        }
        detail.push(line);
    }
    Ok(detail.join("; "))
}

fn hessian_det_law() -> Outcome {
    let polys = [hirzebruch_delzant(0.2, 1).unwrap(), hirzebruch_delzant(0.5, 2).unwrap()];
    let mut worst: f64 = 0.0;
    for poly in &polys {
        let d = poly.diameter();
        let weights = [AffineMap2::new(1.0, -0.3 / d, -0.2 / d), AffineMap2::new(1.0, 0.25 / d, -0.4 / d)];
        for f in &weights {
            let c = twist::center(poly, f).map_err(|e| e.to_string())?;
            let (m, _) = torick::polytope::min_over_vertices(&c.polytope, &c.f);
            if !(m > 0.0) {
                return Err(format!("test weight {f:?} is not positive"));
            }
            let pts = c.polytope.sample_interior_points(50, 7, 0.05);
            let r = check_hessian_det_law(&c.polytope, &c.f, &pts).map_err(|e| e.to_string())?;
            if !(r.max_relative_deviation < 1e-6) || r.samples != 50 {
                return Err(format!("f = {f:?}: max rel dev {:e}", r.max_relative_deviation));
            }
            worst = worst.max(r.max_relative_deviation);
        }
    }
    Ok(format!("2 polytopes x 2 weights x 50 points, max rel dev {worst:e}"))
}

fn parts_identity() -> Outcome {
    let t = Instant::now();
    let polys = [unit_square(), hirzebruch_delzant(0.5, 1).unwrap(), hirzebruch_delzant(0.3, 2).unwrap()];
    let mut worst: f64 = 0.0;
    for poly in &polys {
        let d = poly.diameter();
        let weights = [
            (AffineMap2::one(), 0.0),
            (AffineMap2::new(1.0, 0.3 / d, 0.2 / d), 4.0),
            (AffineMap2::new(2.0, -0.5 / d, -0.2 / d), 3.0),
        ];
        for (f, w) in &weights {
            let r = integration_by_parts(poly, f, *w, PARTS_QUAD_TOL).map_err(|e| e.to_string())?;
            if !(r.max_relative_deviation < 1e-5) {
                return Err(format!("f = {f:?}, w = {w}: rel dev {:e}", r.max_relative_deviation));
            }
            worst = worst.max(r.max_relative_deviation);
        }
    }
    within(
        t.elapsed(),
        Duration::from_secs(60),
        format!("3 polytopes x 3 weights, max rel dev {worst:e}"),
    )
}

/// Runs the stability sweep through the binary; shared by criteria 7 and 10.
fn thm2_sweep() -> Result<(Value, Duration), String> {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_torick"))
        .args(["verify", "thm2", "--k", "1", "2", "3", "4", "--grid", "25", "--creases", "200"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    if out.status.code() != Some(0) {
        return Err(format!(
            "exit code {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok((v, elapsed))
}

fn thm2_pipeline(sweep: &Result<(Value, Duration), String>) -> Outcome {
    let (v, elapsed) = sweep.as_ref().map_err(Clone::clone)?;
    let samples = v["samples"].as_array().ok_or("no samples")?;
    if samples.len() != 200 {
        return Err(format!("{} samples, expected 200", samples.len()));
    }
    for s in samples {
        if s["verdict"] != "STABLE-BY-THEOREM" || s["quad_type"] != "GenericQuadrilateral" {
            return Err(format!("sample {s}"));
        }
    }
    within(
        *elapsed,
        Duration::from_secs(300),
        format!("{} samples STABLE-BY-THEOREM, all GenericQuadrilateral", samples.len()),
    )
}

fn crease_positivity(sweep: &Result<(Value, Duration), String>) -> Outcome {
    let (v, _) = sweep.as_ref().map_err(Clone::clone)?;
    if v["config"]["creases"] != 200 {
        return Err(format!("ran with {} creases", v["config"]["creases"]));
    }
    let samples = v["samples"].as_array().ok_or("no samples")?;
    let mut worst = f64::INFINITY;
    for s in samples {
        let m = s["crease_min"].as_f64().ok_or("missing crease_min")?;
        if !(m > 0.0) {
            return Err(format!("crease_min {m:e} at {s}"));
        }
        worst = worst.min(m);
    }
    Ok(format!("{} twisted polytopes, smallest crease DF {worst:e}", samples.len()))
}

fn case12_negativity() -> Outcome {
    let samples = families::case12_samples(500, 42);
    let report = families::positivity_scan_case12(&samples).map_err(|e| e.to_string())?;
    let negative = report.all_negative && report.counterexamples.is_empty();
    let detail = format!(
        "{} samples, {} evaluations, max of min vertex value {:e}",
        report.samples, report.evaluations, report.max_of_min_vertex_values
    );
    if negative && report.samples >= 500 && report.evaluations >= 2 * report.samples {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solver_recovery() -> Outcome {
    let mut detail = Vec::new();

    let t = Instant::now();
    let p = 0.95;
    let poly = hirzebruch_delzant(p, 1).unwrap();
    let roots = solve_condition_a(&poly, 4.0, 400, 42, QUAD_TOL).map_err(|e| e.to_string())?;
    let positive: Vec<_> = roots.iter().filter(|r| r.positive_on_polytope).collect();
    let targets = [
        (FamilyId::LebrunCalabi, Sign::Plus),
        (FamilyId::LebrunB, Sign::Plus),
        (FamilyId::LebrunB, Sign::Minus),
    ];
    for (id, s) in targets {
        let f = families::normalize_vertex_sum(&poly, &families::family_f(id, p, 1, s, None).unwrap());
        let hits = positive.iter().filter(|r| r.f.max_coeff_distance(&f) < 1e-6).count();
        if hits != 1 {
            return Err(format!("p = 0.95: {id} {s} matched by {hits} positive clusters"));
        }
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(30) {
        return Err(format!("p = 0.95 took {:.1}s", elapsed.as_secs_f64()));
    }
    detail.push(format!("p = 0.95: {} positive clusters cover all 3 families; {:.2}s", positive.len(), elapsed.as_secs_f64()));

    let t = Instant::now();
    let p = 0.5;
    let poly = hirzebruch_delzant(p, 1).unwrap();
    let roots = solve_condition_a(&poly, 4.0, 400, 42, QUAD_TOL).map_err(|e| e.to_string())?;
    let positive: Vec<_> = roots.iter().filter(|r| r.positive_on_polytope).collect();
    let f = families::normalize_vertex_sum(
        &poly,
        &families::family_f(FamilyId::LebrunCalabi, p, 1, Sign::Plus, None).unwrap(),
    );
    if positive.len() != 1 || positive[0].f.max_coeff_distance(&f) >= 1e-6 {
        return Err(format!("p = 0.5: positive roots {:?}", positive.iter().map(|r| r.f).collect::<Vec<_>>()));
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(30) {
        return Err(format!("p = 0.5 took {:.1}s", elapsed.as_secs_f64()));
    }
    detail.push(format!("p = 0.5: unique positive root is f_p; {:.2}s", elapsed.as_secs_f64()));
    Ok(detail.join("; "))
}

fn main() {
    let sweep = thm2_sweep();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "unit-square baseline", square_baseline()),
        (2, "condition (a) for all families", condition_a_for_families()),
        (3, "equipoised identity", equipoised_identity()),
        (4, "twist covariance", twist_covariance()),
        (5, "Hessian determinant law", hessian_det_law()),
        (6, "integration by parts", parts_identity()),
        (7, "stability sweep", thm2_pipeline(&sweep)),
        (8, "case (1,2) negativity", case12_negativity()),
        (9, "solver recovery", solver_recovery()),
        (10, "crease-scan positivity", crease_positivity(&sweep)),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("PASS criterion {n}: {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {n}: {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
