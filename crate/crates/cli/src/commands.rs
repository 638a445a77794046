use anyhow::Context;
use hecke_sphere::gon::{
    a_growth_slope, cylinder_minima_ratios, dyadic_class_count, fit_constant, minkowski_check, product_bound_check,
    random_instances, shell_class_count,
};
use hecke_sphere::gon::loglog_fit;
use hecke_sphere::hecke::{hecke_relations_check, joint_eigenspaces, pretrace_check, t1_vanishing};
use hecke_sphere::moments::{gaussian_grid, growth_fit, moment_sweep};
use hecke_sphere::poly::harmonic_basis;
use hecke_sphere::quat::{enumerate_shell, r4_count};
use hecke_sphere::theta::{modularity_check, petersson_estimate, spectral_coefficient, theta_coefficient};
use hecke_sphere::{Parity, Quaternion, SpectralDecomposition};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::output::{num, to_value, Outcome, Table};

pub const MODULARITY_GAMMA: [[i64; 2]; 2] = [[1, 0], [4, 1]];
pub const MODULARITY_RESIDUAL: f64 = 1e-6;
pub const MODULARITY_TAIL: f64 = 1e-8;
pub const COUNTING_CONSTANT: f64 = 64.0;
pub const A_SLOPE: (f64, f64) = (2.5, 3.2);
pub const PETERSSON_SLOPE: f64 = 1.5;
pub const MOMENT_SLOPE: (f64, f64) = (2.0, 3.5);
pub const CLOSURE_TOLERANCE: f64 = 1e-7;
pub const MINIMA_INSTANCES: usize = 50;

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match cfg.command {
        Command::Shells => shells(cfg),
        Command::Basis => basis(cfg),
        Command::HeckeCheck => hecke_check(cfg),
        Command::Spectral => spectral(cfg),
        Command::PretraceCheck => pretrace(cfg),
        Command::ThetaIdentity => theta_identity(cfg),
        Command::Modularity => modularity(cfg),
        Command::Petersson => petersson(cfg),
        Command::Counting => counting(cfg),
        Command::Moments => moments(cfg),
        Command::Report => unreachable!("report is dispatched by main"),
    }
}

fn decomposition(cfg: &RunConfig, n: u32, extras: &[u64]) -> anyhow::Result<SpectralDecomposition> {
    joint_eigenspaces(&harmonic_basis(n), &cfg.primes, extras, cfg.seed, cfg.precision)
        .with_context(|| format!("spectral decomposition for n = {n}"))
}

fn shells(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let k = cfg.k.expect("validated");
    let shell = enumerate_shell(k, cfg.parity);
    let mut out = Outcome::default();
    let mut t = Table::new(&["d1", "d2", "d3", "d4", "nr", "tr"]);
    for m in shell.iter() {
        let mut row: Vec<String> = m.doubled().iter().map(i64::to_string).collect();
        row.push(m.nr().to_string());
        row.push(m.tr().to_string());
        out.check(m.nr() == k, || format!("{m} has norm {} != {k}", m.nr()));
        t.push(row);
    }
    if cfg.parity == Parity::Integral {
        let want = r4_count(k);
        out.check(shell.len() as u64 == want, || format!("shell size {} != r4({k}) = {want}", shell.len()));
    }
    out.result = json!({ "k": k, "parity": cfg.parity, "size": shell.len(), "coordinates": "doubled" });
    out.tables.push(("shells".into(), t));
    Ok(out)
}

fn basis(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "poly", "exponent", "coefficient"]);
    let mut exports = Vec::new();
    for &n in &cfg.n {
        let hb = harmonic_basis(n);
        let want = ((n + 1) * (n + 1)) as usize;
        out.check(hb.dim() == want, || format!("n = {n}: dimension {} != {want}", hb.dim()));
        let ex = hb.export();
        for (j, poly) in ex.polys.iter().enumerate() {
            for (e, c) in poly {
                t.push(vec![
                    n.to_string(),
                    j.to_string(),
                    format!("{} {} {} {}", e[0], e[1], e[2], e[3]),
                    c.clone(),
                ]);
            }
        }
        exports.push(ex);
    }
    out.result = to_value(&exports);
    out.tables.push(("basis".into(), t));
    Ok(out)
}

fn hecke_check(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "identity", "passed"]);
    let mut reports = Vec::new();
    for &n in &cfg.n {
        let hb = harmonic_basis(n);
        if n % 2 == 1 {
            let ok = t1_vanishing(&hb)?;
            out.check(ok, || format!("n = {n}: T_1 is not the zero matrix"));
            t.push(vec![n.to_string(), "T1 = 0".into(), ok.to_string()]);
            reports.push(json!({ "n": n, "t1_vanishing": ok }));
            continue;
        }
        let rep = hecke_relations_check(&hb, &cfg.primes, cfg.alpha_max)?;
        for c in &rep.checks {
            out.check(c.passed, || format!("n = {n}: {} fails", c.identity));
            t.push(vec![n.to_string(), c.identity.clone(), c.passed.to_string()]);
        }
        reports.push(to_value(&rep));
    }
    out.result = Value::Array(reports);
    out.tables.push(("hecke-check".into(), t));
    Ok(out)
}

fn spectral(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "space", "dim", "t1_flag", "operator", "eigenvalue"]);
    let mut exports = Vec::new();
    for &n in &cfg.n {
        let dec = decomposition(cfg, n, &[])?;
        let want = ((n + 1) * (n + 1)) as usize;
        out.check(dec.dim() == want, || format!("n = {n}: eigenforms span {} of {want}", dec.dim()));
        let ex = dec.export();
        for (s, space) in ex.spaces.iter().enumerate() {
            for (op, val) in &space.eigenvalues {
                t.push(vec![
                    n.to_string(),
                    s.to_string(),
                    space.dim.to_string(),
                    space.t1_flag.to_string(),
                    op.clone(),
                    num(*val),
                ]);
            }
        }
        exports.push(ex);
    }
    out.result = to_value(&exports);
    out.tables.push(("spectral".into(), t));
    Ok(out)
}

fn pretrace(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "pair", "spectral", "kernel", "residual"]);
    let mut summary = Vec::new();
    for &n in &cfg.n {
        let dec = decomposition(cfg, n, &[])?;
        let rep = pretrace_check(&dec, cfg.pairs, cfg.seed)?;
        out.check(rep.passed(), || {
            format!("n = {n}: residual {:e} > {:e}", rep.max_residual, rep.tolerance)
        });
        for (i, p) in rep.pairs.iter().enumerate() {
            t.push(vec![
                n.to_string(),
                i.to_string(),
                num(p.spectral),
                num(p.kernel),
                num((p.spectral - p.kernel).abs()),
            ]);
        }
        summary.push(json!({
            "n": n, "pairs": rep.pairs.len(), "max_residual": rep.max_residual, "tolerance": rep.tolerance,
        }));
    }
    out.result = Value::Array(summary);
    out.tables.push(("pretrace-check".into(), t));
    Ok(out)
}

/// Points of the identity test: `x = y` of norms 1, 9, 25 and one `x != y`.
pub fn theta_points() -> Vec<(Quaternion, Quaternion)> {
    let a = Quaternion::integral(1, 2, 2, 0);
    let b = Quaternion::integral(3, 4, 0, 0);
    vec![
        (Quaternion::ONE, Quaternion::ONE),
        (a, a),
        (b, b),
        (a, Quaternion::integral(0, 3, 0, 4)),
    ]
}

/// Operators beyond `1` and the primes needed to expand up to `k_max`.
pub fn theta_extras(primes: &[u64], k_max: u64) -> Vec<u64> {
    (2..=k_max).filter(|k| !primes.contains(k)).collect()
}

fn theta_identity(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let k_max = cfg.cutoff.unwrap_or(40);
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "x", "y", "k", "theta", "spectral", "error", "tolerance"]);
    let mut worst: f64 = 0.0;
    for &n in &cfg.n {
        let dec = decomposition(cfg, n, &theta_extras(&cfg.primes, k_max))?;
        for (x, y) in theta_points() {
            for k in 1..=k_max {
                let theta = theta_coefficient(n, &x, &y, k)?;
                let exact = hecke_sphere::exact::rat_to_f64(&theta.value);
                let spec = spectral_coefficient(n, &x, &y, k, &dec)?;
                let err = (spec - exact).abs();
                let tol = 1e-8 * (1.0 + exact.abs());
                worst = worst.max(err / tol);
                out.check(err <= tol, || format!("n = {n}, x = {x}, y = {y}, k = {k}: error {err:e} > {tol:e}"));
                t.push(vec![
                    n.to_string(),
                    x.to_string(),
                    y.to_string(),
                    k.to_string(),
                    theta.value.to_string(),
                    num(spec),
                    num(err),
                    num(tol),
                ]);
            }
        }
    }
    out.result = json!({ "k_max": k_max, "worst_error_over_tolerance": worst });
    out.tables.push(("theta-identity".into(), t));
    Ok(out)
}

fn modularity(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let cutoff = cfg.cutoff.unwrap_or(200);
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "measure", "residual", "tail_bound", "passed"]);
    let mut reports = Vec::new();
    let one = Quaternion::ONE;
    for &n in &cfg.n {
        let rep = modularity_check(n, &one, &one, MODULARITY_GAMMA, Complex64::new(0.0, 0.5), cutoff)?;
        let (r, tail) = rep.measures();
        let ok = rep.passed(MODULARITY_RESIDUAL, MODULARITY_TAIL);
        out.check(ok, || format!("n = {n}: residual {r:e}, tail {tail:e}"));
        let measure = if rep.identically_zero { "absolute" } else { "relative" };
        t.push(vec![n.to_string(), measure.into(), num(r), num(tail), ok.to_string()]);
        reports.push(rep);
    }
    out.result = to_value(&reports);
    out.tables.push(("modularity".into(), t));
    Ok(out)
}

fn petersson(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "cutoff", "ln_rho", "rho", "ln_tail", "tail_certified", "extended_rel_diff"]);
    let mut estimates = Vec::new();
    for &n in &cfg.n {
        let cutoff = cfg.cutoff.unwrap_or(10 * n as u64).max(10);
        let e = petersson_estimate(n, cutoff)?;
        out.check(e.tail_certified, || format!("n = {n}: tail not certified at K = {cutoff}"));
        t.push(vec![
            n.to_string(),
            cutoff.to_string(),
            num(e.ln_rho),
            num(e.rho),
            num(e.ln_tail),
            e.tail_certified.to_string(),
            num(e.extended_rel_diff),
        ]);
        estimates.push(e);
    }
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.n > 0 && e.rho > 0.0)
        .map(|e| (e.n as f64, e.rho))
        .collect();
    let slope = (pts.len() >= 2).then(|| loglog_fit(&pts).0);
    if let Some(s) = slope {
        out.check(s <= PETERSSON_SLOPE, || format!("rho(n) slope {s} > {PETERSSON_SLOPE}"));
    }
    out.result = json!({ "estimates": estimates, "slope": slope });
    out.tables.push(("petersson".into(), t));
    Ok(out)
}

fn counting(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let k_max = cfg.cutoff.unwrap_or(4096);
    let mut out = Outcome::default();
    let rs: Vec<u64> = (0..=6).map(|e| 1 << e).collect();
    let mut records = Vec::new();
    for e in 4..=12 {
        for &r in &rs {
            records.push(dyadic_class_count(1 << e, r)?);
        }
    }
    for k in 1..=k_max {
        for &r in &rs {
            records.push(shell_class_count(k, r)?);
        }
    }
    let constant = fit_constant(&records);
    out.check(constant <= COUNTING_CONSTANT, || format!("fitted constant {constant} > {COUNTING_CONSTANT}"));
    let mut counts = Table::new(&["family", "scale", "r", "count", "rhs", "ratio"]);
    for c in &records {
        counts.push(vec![
            c.family.into(),
            c.scale.to_string(),
            c.r.to_string(),
            c.count.to_string(),
            num(c.rhs),
            num(c.ratio()),
        ]);
    }

    let mut growth = Table::new(&["n", "a_slope"]);
    let mut slopes = Vec::new();
    for &n in &cfg.n {
        let s = a_growth_slope(n);
        out.check(s >= A_SLOPE.0 && s <= A_SLOPE.1, || format!("n = {n}: A(X) slope {s} outside {A_SLOPE:?}"));
        growth.push(vec![n.to_string(), num(s)]);
        slopes.push(json!({ "n": n, "slope": s }));
    }

    let mut minima = Table::new(&[
        "instance", "m", "r", "lambda1", "lambda2", "lambda3", "lambda4", "minkowski_product", "points", "product_bound",
    ]);
    let mut instances = Vec::new();
    for (i, inst) in random_instances(cfg.seed, MINIMA_INSTANCES).iter().enumerate() {
        let mk = minkowski_check(&inst.basis, &inst.body)?;
        let pb = product_bound_check(&inst.basis, &inst.body)?;
        out.check(mk.holds, || format!("instance {i}: Minkowski product {} outside [2/3, 16]", mk.normalized_product));
        out.check(pb.holds, || format!("instance {i}: {} points > bound {}", pb.count, pb.bound));
        let mut row = vec![i.to_string(), num(inst.body.m), num(inst.body.r)];
        row.extend(mk.minima.iter().map(|&l| num(l)));
        row.extend([num(mk.normalized_product), pb.count.to_string(), num(pb.bound)]);
        minima.push(row);
        instances.push(json!({ "instance": inst, "minkowski": mk, "product_bound": pb }));
    }
    let cylinder: Vec<Value> = [(16.0, 1.0), (64.0, 2.0), (256.0, 4.0), (1024.0, 8.0)]
        .iter()
        .map(|&(m, r)| Ok(json!({ "m": m, "r": r, "normalized_products": cylinder_minima_ratios(m, r)? })))
        .collect::<anyhow::Result<_>>()?;

    out.result = json!({
        "fitted_constant": constant,
        "singlebound_constant": fit_constant(&records.iter().filter(|c| c.family == "singlebound").cloned().collect::<Vec<_>>()),
        "intbound_constant": fit_constant(&records.iter().filter(|c| c.family == "intbound").cloned().collect::<Vec<_>>()),
        "epsilon": hecke_sphere::gon::EPSILON,
        "a_slopes": slopes,
        "instances": instances,
        "cylinder_minima": cylinder,
    });
    out.tables.push(("counting".into(), counts));
    out.tables.push(("counting-growth".into(), growth));
    out.tables.push(("counting-minima".into(), minima));
    Ok(out)
}

fn moments(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let grid = gaussian_grid(cfg.grid, cfg.seed);
    let mut t = Table::new(&["n", "stat", "value"]);
    let mut reports = Vec::new();
    for &n in &cfg.n {
        let dec = decomposition(cfg, n, &[])?;
        let r = moment_sweep(&dec, &grid, cfg.seed)?;
        out.check(r.closure_max_error <= CLOSURE_TOLERANCE, || {
            format!("n = {n}: closure error {:e}", r.closure_max_error)
        });
        out.check(r.pointwise_ok, || format!("n = {n}: fourth moment exceeds family sum"));
        for (stat, v) in [
            ("sup_family", r.sup_family.value),
            ("sup_fourth", r.sup_fourth.value),
            ("sup_individual", r.sup_individual.value),
            ("family_refinement_delta", r.sup_family.refinement_delta),
            ("closure_max_error", r.closure_max_error),
            ("family_count", r.family_count as f64),
        ] {
            t.push(vec![n.to_string(), stat.into(), num(v)]);
        }
        reports.push(r);
    }
    let mut fits = Table::new(&["stat", "slope", "intercept"]);
    let fit = match growth_fit(&reports) {
        Ok(fit) => {
            for f in &fit {
                fits.push(vec![f.stat.clone(), num(f.slope), num(f.intercept)]);
                if f.stat != "sup_individual" {
                    let ok = f.slope >= MOMENT_SLOPE.0 && f.slope <= MOMENT_SLOPE.1;
                    out.check(ok, || format!("{} slope {} outside {MOMENT_SLOPE:?}", f.stat, f.slope));
                }
            }
            to_value(&fit)
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    out.result = json!({ "reports": reports, "fit": fit });
    out.tables.push(("moments".into(), t));
    out.tables.push(("moments-fit".into(), fits));
    Ok(out)
}
