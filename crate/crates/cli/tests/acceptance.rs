//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hecke_sphere::exact::rat_to_f64;
use hecke_sphere::gon::{
    a_growth_slope, dyadic_class_count, fit_constant, loglog_fit, minkowski_check, product_bound_check,
    random_instances, shell_class_count,
};
use hecke_sphere::hecke::{hecke_relations_check, joint_eigenspaces, pretrace_check, t1_vanishing};
use hecke_sphere::moments::{gaussian_grid, growth_fit, moment_sweep};
use hecke_sphere::poly::{harmonic_basis, Precision};
use hecke_sphere::quat::{enumerate_shell, r4_count};
use hecke_sphere::theta::{modularity_check, petersson_estimate, spectral_coefficient, theta_coefficient};
use hecke_sphere::{Parity, Quaternion};
use num_complex::Complex64;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sigma_naive(k: u64) -> u64 {
    (1..=k).filter(|d| k.is_multiple_of(*d)).sum()
}

fn jacobi() -> Outcome {
    for k in (1..=2000u64).step_by(2) {
        let want = 8 * sigma_naive(k);
        let listed = enumerate_shell(k, Parity::Integral).len() as u64;
        if listed != want || r4_count(k) != want {
            return Err(format!("k = {k}: listed {listed}, r4 {}, 8 sigma {want}", r4_count(k)));
        }
    }
    Ok("1000 odd k".into())
}

fn hecke_algebra() -> Outcome {
    let ops = [1u64, 3, 5, 7, 9, 15];
    let mut required = vec!["T3*T5 = T15".to_string(), "T9 = T3*T3 - 3*T1".to_string()];
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            required.push(format!("[T{a}, T{b}] = 0"));
        }
    }
    for n in [2u32, 4, 6, 8, 10] {
        let rep = hecke_relations_check(&harmonic_basis(n), &[3, 5, 7], 2).map_err(|e| e.to_string())?;
        if let Some(f) = rep.failures().next() {
            return Err(format!("n = {n}: {} fails", f.identity));
        }
        for id in &required {
            if !rep.checks.iter().any(|c| &c.identity == id) {
                return Err(format!("n = {n}: {id} not checked"));
            }
        }
        for k in [1u64, 3, 5, 7, 9, 15] {
            let id = format!("T{k} self-adjoint");
            if !rep.checks.iter().any(|c| c.identity == id) {
                return Err(format!("n = {n}: {id} not checked"));
            }
        }
    }
    Ok(format!("{} identities per degree, all exact", required.len() + 6))
}

fn t1_odd() -> Outcome {
    for n in [1u32, 3, 5, 7] {
        if !t1_vanishing(&harmonic_basis(n)).map_err(|e| e.to_string())? {
            return Err(format!("T1 nonzero at n = {n}"));
        }
    }
    Ok("n = 1, 3, 5, 7".into())
}

fn pretrace() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in (2..=16u32).step_by(2) {
        let dec = joint_eigenspaces(&harmonic_basis(n), &[3, 5, 7], &[], 1, Precision::Double)
            .map_err(|e| e.to_string())?;
        let rep = pretrace_check(&dec, 100, 17 + n as u64).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_residual / rep.tolerance);
        if !rep.passed() {
            return Err(format!("n = {n}: residual {:e}", rep.max_residual));
        }
    }
    Ok(format!("worst residual / tolerance = {worst:.2e}"))
}

fn central_identity() -> Outcome {
    let a = Quaternion::integral(1, 2, 2, 0);
    let b = Quaternion::integral(3, 4, 0, 0);
    let points = [
        (Quaternion::ONE, Quaternion::ONE),
        (a, a),
        (b, b),
        (a, Quaternion::integral(0, 3, 0, 4)),
    ];
    let primes: Vec<u64> = vec![3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let extras: Vec<u64> = (2..=40).filter(|k| !primes.contains(k)).collect();
    let mut worst: f64 = 0.0;
    for n in [2u32, 4, 6, 8] {
        let dec = joint_eigenspaces(&harmonic_basis(n), &primes, &extras, 1, Precision::Double)
            .map_err(|e| e.to_string())?;
        for (x, y) in &points {
            for k in 1..=40 {
                let theta = rat_to_f64(&theta_coefficient(n, x, y, k).map_err(|e| e.to_string())?.value);
                let spec = spectral_coefficient(n, x, y, k, &dec).map_err(|e| e.to_string())?;
                let ratio = (spec - theta).abs() / (1e-8 * (1.0 + theta.abs()));
                worst = worst.max(ratio);
                if ratio > 1.0 {
                    return Err(format!("n = {n}, x = {x}, y = {y}, k = {k}: {spec} vs {theta}"));
                }
            }
        }
    }
    Ok(format!("worst error / tolerance = {worst:.2e}"))
}

fn modularity() -> Outcome {
    let one = Quaternion::ONE;
    let mut parts = Vec::new();
    for n in [2u32, 4] {
        let rep = modularity_check(n, &one, &one, [[1, 0], [4, 1]], Complex64::new(0.0, 0.5), 200)
            .map_err(|e| e.to_string())?;
        let (r, t) = rep.measures();
        parts.push(format!("n={n} residual {r:.1e} tail {t:.1e}"));
        if !rep.passed(1e-6, 1e-8) {
            return Err(parts.join(", "));
        }
    }
    Ok(parts.join(", "))
}

fn counting() -> Outcome {
    let mut records = Vec::new();
    for e in 4..=12 {
        for r in 0..=6 {
            records.push(dyadic_class_count(1 << e, 1 << r).map_err(|e| e.to_string())?);
        }
    }
    for k in 1..=4096 {
        for r in 0..=6 {
            records.push(shell_class_count(k, 1 << r).map_err(|e| e.to_string())?);
        }
    }
    let c = fit_constant(&records);
    ensure(c <= 64.0, format!("C = {c:.3} over {} records", records.len()))
}

fn geometry() -> Outcome {
    let mut range = (f64::INFINITY, 0.0f64);
    for (i, inst) in random_instances(2024, 50).iter().enumerate() {
        let mk = minkowski_check(&inst.basis, &inst.body).map_err(|e| e.to_string())?;
        let pb = product_bound_check(&inst.basis, &inst.body).map_err(|e| e.to_string())?;
        range = (range.0.min(mk.normalized_product), range.1.max(mk.normalized_product));
        if !mk.holds || !pb.holds {
            return Err(format!("instance {i}: Minkowski {}, points {} vs {}", mk.normalized_product, pb.count, pb.bound));
        }
    }
    Ok(format!("normalized products in [{:.3}, {:.3}]", range.0, range.1))
}

fn growth() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [64u32, 128, 256] {
        let s = a_growth_slope(n);
        ok &= (2.5..=3.2).contains(&s);
        parts.push(format!("A slope n={n}: {s:.3}"));
    }
    let mut pts = Vec::new();
    for n in (8..=64u32).step_by(2) {
        let e = petersson_estimate(n, 10 * n as u64).map_err(|e| e.to_string())?;
        ok &= e.tail_certified;
        pts.push((n as f64, e.rho));
    }
    let slope = loglog_fit(&pts).0;
    ok &= slope <= 1.5;
    parts.push(format!("rho slope {slope:.3}"));
    ensure(ok, parts.join(", "))
}

fn moments() -> Outcome {
    let grid = gaussian_grid(5000, 2024);
    let mut reports = Vec::new();
    let mut closure: f64 = 0.0;
    for n in (2..=24u32).step_by(2) {
        let dec = joint_eigenspaces(&harmonic_basis(n), &[3, 5, 7], &[], 1, Precision::Double)
            .map_err(|e| e.to_string())?;
        let r = moment_sweep(&dec, &grid, 2024).map_err(|e| e.to_string())?;
        closure = closure.max(r.closure_max_error);
        reports.push(r);
    }
    let fit = growth_fit(&reports).map_err(|e| e.to_string())?;
    let (fam, four) = (fit[0].slope, fit[1].slope);
    let ok = closure <= 1e-7 && (2.0..=3.5).contains(&fam) && (2.0..=3.5).contains(&four);
    ensure(ok, format!("slopes family {fam:.3}, fourth {four:.3}; closure {closure:.1e}"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hecke-sphere"))
        .args(args)
        .args(["--out", dir.to_str().unwrap(), "--threads", "2"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 10] = [
        &["shells", "--k", "30", "--parity", "coset"],
        &["basis", "--n-range", "0:3:1"],
        &["hecke-check", "--n-range", "1:4:1"],
        &["spectral", "--n", "6"],
        &["pretrace-check", "--n", "6", "--pairs", "20", "--seed", "7"],
        &["theta-identity", "--n", "4", "--cutoff", "12"],
        &["modularity", "--cutoff", "120"],
        &["petersson", "--n-range", "8:16:4"],
        &["counting", "--cutoff", "200", "--n", "64"],
        &["moments", "--n-range", "4:10:2", "--grid", "400", "--seed", "3"],
    ];
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for args in runs {
        run_cli(a.path(), args)?;
        run_cli(b.path(), args)?;
    }
    let mut files = 0;
    for entry in std::fs::read_dir(a.path()).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            let other = b.path().join(p.file_name().unwrap());
            let (x, y) = (std::fs::read(&p).unwrap(), std::fs::read(&other).map_err(|e| e.to_string())?);
            // the first line carries the config, which names the output directory
            let body = |v: &[u8]| v.splitn(2, |&c| c == b'\n').nth(1).map(<[u8]>::to_vec);
            if body(&x) != body(&y) {
                return Err(format!("{} differs between runs", p.display()));
            }
            files += 1;
        }
    }
    ensure(files >= 10, format!("{files} CSV bodies identical across two runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("jacobi oracle", jacobi, 10),
        ("hecke algebra relations", hecke_algebra, 120),
        ("T1 vanishing for odd n", t1_odd, 10),
        ("pre-trace formula", pretrace, 60),
        ("central identity", central_identity, 300),
        ("modularity", modularity, 60),
        ("counting bounds", counting, 600),
        ("geometry of numbers", geometry, 300),
        ("A(X) and Petersson growth", growth, 1200),
        ("moment growth", moments, 1800),
        ("determinism", determinism, 600),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({detail}; {:.1}s of {budget}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
