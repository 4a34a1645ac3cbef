use serde_json::{json, Value};

use dixiecup::asymptotics::{
    equal_case_expansion, expectation_expansion_case1, expectation_expansion_case2, logpower_expansion,
    second_rising_expansion_case2, variance_case1, variance_leading_case2,
};
use dixiecup::limitdist::{case1_limit_cdf, case1_normalization, gumbel_normalization, lambda_functional, limit_cdf};
use dixiecup::moments::{expectation, limit_constant, mgf, second_rising, variance};
use dixiecup::simulate::{exact_small, ks_statistic, normalized_samples, predicted_draws, run_mc};
use dixiecup::special::{EULER_GAMMA, ln_factorial};
use dixiecup::{build_model, classify, Case, CouponModel, Law, MomentEstimate, SequenceFamily};

use crate::report::{cell, num, rel_gap, Report, Table};

/// Largest unequal model the O(N)-per-point quadrature is run on.
pub const QUADRATURE_CAP: usize = 100_000;

const DEFAULT_Y_GRID: [f64; 7] = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0];
const DEFAULT_S_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const PGF_POINTS: [f64; 3] = [1.5, 2.0, 4.0];

fn value(e: &Option<MomentEstimate>) -> Option<f64> {
    e.as_ref().map(|e| e.value)
}

// exp-decay weights give the same probabilities as exp-growth in reverse
// order, so the growing-sequence constants and limit law apply to the model.
fn growing_equivalent(family: &SequenceFamily) -> Option<SequenceFamily> {
    match family {
        SequenceFamily::Power { .. } | SequenceFamily::ExpGrowth { .. } => Some(family.clone()),
        SequenceFamily::ExpDecay { p } => Some(SequenceFamily::ExpGrowth { p: *p }),
        _ => None,
    }
}

const EXP_DECAY_NOTE: &str =
    "exp-decay weights e^{-pj} give the same probabilities as e^{pj}; constants and limit law use the growing order";

fn model_for(report: &mut Report) -> Option<CouponModel> {
    let n = report.check("model", report.spec().require_n())?;
    let family = report.spec().family.clone();
    report.check("model", build_model(&family, n))
}

/// Moment estimates with `--tol` taken relative to the predicted size of each
/// quantity: `E` to `tol * s`, `E[T(T+1)]` and `V` to `tol * s^2`.
struct Quadrature {
    expectation: Option<MomentEstimate>,
    second_rising: Option<MomentEstimate>,
    variance: Option<MomentEstimate>,
}

fn quadrature(report: &mut Report, model: &CouponModel) -> Quadrature {
    let (m, tol) = (report.spec().m, report.spec().tol);
    let none = Quadrature {
        expectation: None,
        second_rising: None,
        variance: None,
    };
    if model.equal_count().is_none() && model.n() > QUADRATURE_CAP {
        report.error(
            "quadrature",
            format!("quadrature is capped at N <= {QUADRATURE_CAP} for unequal models, got N = {}", model.n()),
        );
        return none;
    }
    let s = predicted_draws(model, m);
    let q = Quadrature {
        expectation: report.check("quadrature.expectation", expectation(model, m, tol * s)),
        second_rising: report.check("quadrature.second_rising", second_rising(model, m, tol * s * s)),
        variance: report.check("quadrature.variance", variance(model, m, tol * s * s)),
    };
    report.put(
        "quadrature",
        json!({
            "expectation": q.expectation,
            "second_rising": q.second_rising,
            "variance": q.variance,
        }),
    );
    q
}

pub fn analyze(report: &mut Report) {
    let Some(model) = model_for(report) else { return };
    let spec = report.spec().clone();
    let (m, n, tol) = (spec.m, model.n(), spec.tol);
    let q = quadrature(report, &model);
    let mut table = Table::new(&["quantity", "quadrature", "expansion", "relative_gap"]);
    let mut gaps = serde_json::Map::new();
    let mut add = |name: &str, quad: Option<f64>, exp: Option<f64>, table: &mut Table| {
        let g = rel_gap(exp, quad);
        gaps.insert(name.to_string(), json!(g));
        table.push(vec![name.to_string(), cell(quad), cell(exp), cell(g)]);
    };

    match &spec.family {
        SequenceFamily::Power { .. } | SequenceFamily::ExpGrowth { .. } | SequenceFamily::ExpDecay { .. } => {
            let fam = growing_equivalent(&spec.family).expect("growing family");
            let l1 = report.check("expansion.L1", limit_constant(&fam, m, 1, tol));
            let l2 = report.check("expansion.L2", limit_constant(&fam, m, 2, tol));
            let e = report.check("expansion.expectation", expectation_expansion_case1(&fam, m, n, tol));
            let v = report.check("expansion.variance", variance_case1(&fam, m, n, tol));
            let mut body = json!({
                "A_N": build_model(&fam, n).map(|x| x.a_sum()).ok(),
                "L1": l1,
                "L2": l2,
                "expectation": e,
                "variance": v,
            });
            if matches!(spec.family, SequenceFamily::ExpDecay { .. }) {
                body["note"] = json!(EXP_DECAY_NOTE);
            }
            report.put("expansion", body);
            add("expectation", value(&q.expectation), value(&e), &mut table);
            add("variance", value(&q.variance), value(&v), &mut table);
        }
        SequenceFamily::Zipf { .. } => {
            let e = report.check("expansion", expectation_expansion_case2(&spec.family, m, n));
            let r2 = report.check("expansion.second_rising", second_rising_expansion_case2(&spec.family, m, n));
            let v = report.check("expansion.variance", variance_leading_case2(&spec.family, m, n));
            let mut body = serde_json::to_value(&e).unwrap_or(Value::Null);
            if let Value::Object(map) = &mut body {
                map.insert("second_rising".into(), serde_json::to_value(&r2).unwrap_or(Value::Null));
                map.insert("variance".into(), serde_json::to_value(&v).unwrap_or(Value::Null));
            }
            report.put("expansion", body);
            add("expectation", value(&q.expectation), e.map(|x| x.total), &mut table);
            add("second_rising", value(&q.second_rising), r2.map(|x| x.total), &mut table);
            add("variance", value(&q.variance), value(&v), &mut table);
        }
        SequenceFamily::Constant | SequenceFamily::LogPower { .. } => {
            let e = match spec.family {
                SequenceFamily::LogPower { p } => report.check("expansion", logpower_expansion(p, m, n)),
                _ => report.check("expansion", equal_case_expansion(m, n)),
            };
            let v = report.check("expansion.variance", variance_leading_case2(&spec.family, m, n));
            let mut body = serde_json::to_value(&e).unwrap_or(Value::Null);
            if let Value::Object(map) = &mut body {
                if spec.family == SequenceFamily::Constant {
                    map.insert("C_m".into(), json!(EULER_GAMMA - ln_factorial(m - 1)));
                }
                map.insert("variance".into(), serde_json::to_value(&v).unwrap_or(Value::Null));
            }
            report.put("expansion", body);
            add("expectation", value(&q.expectation), e.map(|x| x.total), &mut table);
            add("variance", value(&q.variance), value(&v), &mut table);
        }
        SequenceFamily::Explicit { .. } => {
            report.put(
                "expansion",
                json!({ "note": "no asymptotic expansion for an explicit finite list" }),
            );
            add("expectation", value(&q.expectation), None, &mut table);
            add("second_rising", value(&q.second_rising), None, &mut table);
            add("variance", value(&q.variance), None, &mut table);
        }
    }
    report.put("gap", gaps);
    report.table = table;
}

pub fn limits(report: &mut Report) {
    let spec = report.spec().clone();
    let m = spec.m;
    let growing = growing_equivalent(&spec.family);
    if growing.is_some() && spec.y_grid.is_some() {
        report.error("grid", "--y-grid applies to Gumbel-type laws; growing sequences take --s-grid");
        return;
    }
    if growing.is_none() && spec.s_grid.is_some() {
        report.error("grid", "--s-grid applies to growing sequences; Gumbel-type laws take --y-grid");
        return;
    }
    match growing {
        Some(fam) => limits_growing(report, &fam, m),
        None => limits_gumbel(report, m),
    }
}

fn limits_growing(report: &mut Report, fam: &SequenceFamily, m: u32) {
    let spec = report.spec().clone();
    let grid = spec.s_grid.clone().unwrap_or_else(|| DEFAULT_S_GRID.to_vec());
    let norm = match spec.n {
        Some(n) => report.check("normalization", case1_normalization(fam, m, n)).map(|z| json!(z)),
        None => Some(json!({ "b": 0.0, "k": null, "law": "case1-fixed-point", "m": m })),
    };
    report.put("normalization", norm);
    if matches!(spec.family, SequenceFamily::ExpDecay { .. }) {
        report.put("note", EXP_DECAY_NOTE);
    }
    let mut table = Table::new(&["s", "cdf"]);
    let mut points = Vec::new();
    for &s in &grid {
        let f = report.check("cdf", case1_limit_cdf(fam, m, s, spec.tol));
        table.push(vec![num(s), cell(f)]);
        points.push(json!({ "s": s, "cdf": f }));
    }
    report.put("grid", points);
    report.table = table;
    if spec.simulate == Some(true) {
        let Some(model) = model_for(report) else { return };
        let cdf = |x: f64| case1_limit_cdf(fam, m, x, spec.tol).unwrap_or(f64::NAN);
        simulate_ks(report, &model, Some(model.a_sum()), 0.0, cdf, "growing-sequence limit law of T / A_N");
    }
}

fn limits_gumbel(report: &mut Report, m: u32) {
    let spec = report.spec().clone();
    let Some(n) = report.check("normalization", spec.require_n()) else { return };
    let Some(norm) = report.check("normalization", gumbel_normalization(&spec.family, m, n)) else { return };
    report.put("normalization", norm);
    let model = report.check("model", build_model(&spec.family, n));
    let grid = spec.y_grid.clone().unwrap_or_else(|| DEFAULT_Y_GRID.to_vec());
    let mut table = Table::new(&["y", "cdf", "lambda"]);
    let mut points = Vec::new();
    for &y in &grid {
        let f = report.check("cdf", limit_cdf(&norm.law, y));
        let lambda = match &model {
            Some(model) => report.check("lambda", lambda_functional(model, m, norm.b, norm.k, y)),
            None => None,
        };
        table.push(vec![num(y), cell(f), cell(lambda)]);
        points.push(json!({ "y": y, "cdf": f, "lambda": lambda }));
    }
    report.put("grid", points);
    report.table = table;
    if spec.simulate == Some(true) {
        if let Some(model) = model {
            let law = norm.law;
            let cdf = move |y: f64| limit_cdf(&law, y).unwrap_or(f64::NAN);
            let reference = match law {
                Law::SlowDecayGumbel { .. } => "shifted Gumbel limit law",
                _ => "Gumbel limit law",
            };
            simulate_ks(report, &model, Some(norm.k), norm.b, cdf, reference);
        }
    }
}

fn simulate_ks(report: &mut Report, model: &CouponModel, k: Option<f64>, b: f64, cdf: impl Fn(f64) -> f64, reference: &str) {
    let spec = report.spec().clone();
    let Some(k) = k else { return };
    let Some(dist) = report.check("simulate", run_mc(model, spec.m, spec.samples, spec.seed, spec.shards)) else {
        return;
    };
    report.put(
        "monte_carlo",
        json!({
            "count": dist.count,
            "mean": dist.mean,
            "variance": dist.variance,
            "seed": dist.seed,
            "shards": dist.shards,
        }),
    );
    let norm = dixiecup::Normalization {
        b,
        k,
        law: Law::Gumbel { m: spec.m },
    };
    let Some(xs) = report.check("ks", normalized_samples(&dist, &norm)) else { return };
    let ks = report.check("ks", ks_statistic(&xs, cdf, reference));
    report.put("ks", ks);
}

pub fn oracle(report: &mut Report) {
    let Some(model) = model_for(report) else { return };
    let (m, tol) = (report.spec().m, report.spec().tol);
    let Some(exact) = report.check("oracle", exact_small(&model, m)) else { return };
    let q = quadrature(report, &model);
    let mut table = Table::new(&["quantity", "exact", "quadrature", "abs_gap"]);
    let mut gaps = serde_json::Map::new();
    let mut row = |name: String, ex: Option<f64>, qu: Option<f64>, table: &mut Table| {
        let g = match (ex, qu) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        gaps.insert(name.clone(), json!(g));
        table.push(vec![name, cell(ex), cell(qu), cell(g)]);
    };
    row("expectation".into(), Some(exact.expectation), value(&q.expectation), &mut table);
    row("second_rising".into(), Some(exact.second_rising), value(&q.second_rising), &mut table);
    row("variance".into(), Some(exact.variance), value(&q.variance), &mut table);
    let mut pgf = Vec::new();
    for z in PGF_POINTS {
        let ex = report.check("oracle.pgf", exact.pgf_at(z));
        let qu = report.check("quadrature.pgf", mgf(&model, m, z, tol));
        row(format!("pgf({z})"), ex, value(&qu), &mut table);
        pgf.push(json!({ "z": z, "exact": ex, "quadrature": qu }));
    }
    report.put("exact", &exact);
    report.put("pgf", pgf);
    report.put("abs_gap", gaps);
    report.table = table;
}

pub fn simulate(report: &mut Report) {
    let Some(model) = model_for(report) else { return };
    let spec = report.spec().clone();
    let Some(dist) = report.check("simulate", run_mc(&model, spec.m, spec.samples, spec.seed, spec.shards)) else {
        return;
    };
    if let Some(path) = &spec.raw_out {
        let r = std::fs::write(path, dist.raw_dump());
        report.check("raw_out", r);
    }
    let mut table = Table::new(&["index", "t"]);
    for (i, t) in dist.raw.iter().enumerate() {
        table.push(vec![i.to_string(), t.to_string()]);
    }
    report.put("distribution", &dist);
    report.table = table;
}

pub fn classify_cmd(report: &mut Report) {
    let family = report.spec().family.clone();
    let mut table = Table::new(&["family", "case", "justification"]);
    if let Some(label) = report.check("classify", classify(&family)) {
        let case = match label.value {
            Case::CaseI => "CaseI",
            Case::CaseII => "CaseII",
        };
        table.push(vec![family.name().to_string(), case.to_string(), label.justification.clone()]);
        report.put("classification", label);
    }
    report.table = table;
}
