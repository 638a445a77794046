//! Small end-to-end runs through basis, Hecke operators, eigenspaces and
//! the theta side.

use hecke_sphere::exact::rat_to_f64;
use hecke_sphere::hecke::{hecke_matrix, joint_eigenspaces, pretrace_check};
use hecke_sphere::moments::{gaussian_grid, moment_sweep};
use hecke_sphere::poly::{harmonic_basis, Precision};
use hecke_sphere::theta::{spectral_coefficient, theta_coefficient};
use hecke_sphere::Quaternion;

#[test]
fn theta_side_matches_spectral_side() {
    let primes = [3, 5, 7, 11, 13];
    let extras: Vec<u64> = (2..=15).filter(|k| !primes.contains(k)).collect();
    let x = Quaternion::integral(1, 2, 2, 0);
    let y = Quaternion::integral(3, 4, 0, 0);
    for n in [2u32, 4] {
        let dec = joint_eigenspaces(&harmonic_basis(n), &primes, &extras, 5, Precision::Double).unwrap();
        for k in 1..=15 {
            let theta = rat_to_f64(&theta_coefficient(n, &x, &y, k).unwrap().value);
            let spec = spectral_coefficient(n, &x, &y, k, &dec).unwrap();
            assert!((theta - spec).abs() <= 1e-8 * (1.0 + theta.abs()), "n={n} k={k}: {theta} vs {spec}");
        }
    }
}

#[test]
fn extended_precision_agrees_with_double() {
    let hb = harmonic_basis(6);
    let a = joint_eigenspaces(&hb, &[3, 5], &[], 2, Precision::Double).unwrap();
    let b = joint_eigenspaces(&hb, &[3, 5], &[], 2, Precision::Extended).unwrap();
    let mut la = a.eigenvalues_of(3).unwrap();
    let mut lb = b.eigenvalues_of(3).unwrap();
    la.sort_by(f64::total_cmp);
    lb.sort_by(f64::total_cmp);
    for (u, v) in la.iter().zip(&lb) {
        assert!((u - v).abs() < 1e-9);
    }
    assert!(pretrace_check(&b, 30, 4).unwrap().passed());
}

#[test]
fn traces_match_eigenvalue_sums() {
    let hb = harmonic_basis(4);
    let dec = joint_eigenspaces(&hb, &[3, 5], &[], 9, Precision::Double).unwrap();
    for big_n in [3u64, 5] {
        let m = hecke_matrix(&hb, big_n).unwrap();
        let (num, den) = m.scale();
        let tr = hecke_sphere::exact::big_to_f64(&m.entries.trace())
            / hecke_sphere::exact::big_to_f64(&m.denominator)
            * hecke_sphere::exact::big_to_f64(&num)
            / hecke_sphere::exact::big_to_f64(&den);
        let sum: f64 = dec.eigenvalues_of(big_n).unwrap().iter().sum();
        assert!((tr - sum).abs() < 1e-8 * (1.0 + sum.abs()), "T{big_n}: {tr} vs {sum}");
    }
}

#[test]
fn moment_sweep_closes() {
    let dec = joint_eigenspaces(&harmonic_basis(8), &[3, 5, 7], &[], 1, Precision::Double).unwrap();
    let r = moment_sweep(&dec, &gaussian_grid(500, 8), 8).unwrap();
    assert!(r.closure_max_error < 1e-9);
    assert!(r.sup_family.value >= r.cauchy_schwarz_floor * (1.0 - 1e-12));
}
