use hecke_sphere::gon::{
    dyadic_partition, in_cylinder_class, loglog_fit, minkowski_check, product_bound_check, successive_minima, Cube,
    CylinderSpec,
};
use hecke_sphere::quat::{divisor_sum, enumerate_shell, r4_count};
use hecke_sphere::zonal::{chebyshev_u, chebyshev_u_exact, pretrace_kernel};
use hecke_sphere::{Parity, Quaternion};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn quaternion() -> impl Strategy<Value = Quaternion> {
    (prop::array::uniform4(-40i64..40), any::<bool>()).prop_map(|(c, odd)| {
        let c = c.map(|v| if odd { 2 * v + 1 } else { 2 * v });
        Quaternion::from_doubled(c).unwrap()
    })
}

fn unit_vector() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / r)
        })
}

proptest! {
    #[test]
    fn norm_is_multiplicative(a in quaternion(), b in quaternion()) {
        let p = a.mul(&b).unwrap();
        prop_assert_eq!(p.nr(), a.nr() * b.nr());
        prop_assert_eq!(a.conj().conj(), a);
        prop_assert_eq!(a.mul(&a.conj()).unwrap().doubled(), [2 * a.nr() as i64, 0, 0, 0]);
    }

    #[test]
    fn cylinder_classes_shrink(a in quaternion(), e in 0u32..6) {
        let r = 1u64 << e;
        if in_cylinder_class(&a, 2 * r) {
            prop_assert!(in_cylinder_class(&a, r));
        }
    }

    #[test]
    fn chebyshev_float_matches_exact(n in 0u32..40, p in -1000i64..=1000) {
        let x = BigRational::new(BigInt::from(p), BigInt::from(1000));
        let exact = hecke_sphere::exact::rat_to_f64(&chebyshev_u_exact(n, &x));
        let float = chebyshev_u(n, p as f64 / 1000.0);
        prop_assert!((exact - float).abs() <= 1e-9 * (n as f64 + 1.0).powi(2), "{} vs {}", exact, float);
    }

    #[test]
    fn kernel_is_symmetric_and_capped(n in 0u32..30, x in unit_vector(), y in unit_vector()) {
        let a = pretrace_kernel(n, &x, &y).unwrap();
        let b = pretrace_kernel(n, &y, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (n as f64 + 1.0).powi(2));
        prop_assert!(a.abs() <= (n as f64 + 1.0).powi(2) * (1.0 + 1e-9));
    }

    #[test]
    fn minima_on_diagonal_lattices(d in prop::array::uniform4(1i64..6)) {
        let b = [[d[0], 0, 0, 0], [0, d[1], 0, 0], [0, 0, d[2], 0], [0, 0, 0, d[3]]];
        let (l, _) = successive_minima(&b, &Cube { a: 1.0 }).unwrap();
        let mut want = d.map(|v| v as f64);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(l, want);
        let cube = Cube { a: 1.0 };
        prop_assert!(minkowski_check(&b, &cube).unwrap().holds);
    }

    #[test]
    fn cylinder_bounds_on_sheared_lattices(s in -3i64..=3, t in -3i64..=3, m in 1u32..30, e in 0u32..3) {
        let b = [[1, s, 0, 0], [0, 1, t, 0], [0, 0, 2, s], [t, 0, 0, 1]];
        let body = CylinderSpec::new(m as f64, (1u64 << e) as f64).unwrap();
        if let Ok(mk) = minkowski_check(&b, &body) {
            prop_assert!(mk.holds, "{:?}", mk);
            let (l, _) = successive_minima(&b, &body).unwrap();
            prop_assert!(l.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(product_bound_check(&b, &body).unwrap().holds);
        }
    }

    #[test]
    fn exact_power_laws_fit(e in -3.0f64..4.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = (1..8).map(|i| (i as f64, c * (i as f64).powf(e))).collect();
        let (slope, intercept) = loglog_fit(&pts);
        prop_assert!((slope - e).abs() < 1e-9);
        prop_assert!((intercept - c.ln()).abs() < 1e-9);
    }
}

#[test]
fn jacobi_and_partition_small_norms() {
    for k in 1..=300u64 {
        let listed = enumerate_shell(k, Parity::Integral).len() as u64;
        assert_eq!(listed, r4_count(k), "k = {k}");
        if k % 2 == 1 {
            assert_eq!(listed, 8 * divisor_sum(k));
        }
        assert_eq!(dyadic_partition(k).total(), listed);
    }
}

#[test]
fn coset_shells_have_the_right_norm() {
    for k in 1..=60u64 {
        for m in enumerate_shell(k, Parity::Coset).iter() {
            assert_eq!(m.nr(), k);
            assert_eq!(m.parity(), Parity::Coset);
        }
    }
}
