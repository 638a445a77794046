//! Log-space special functions for integer-order incomplete gamma values.

use twofloat::TwoFloat;

/// `ln(Σ exp(v))`, or `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `ln(n!)`.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln Γ(s)` for positive integer `s`.
pub fn ln_gamma_int(s: u32) -> f64 {
    assert!(s >= 1, "Γ has a pole at {s}");
    ln_factorial(s - 1)
}

/// `ln Γ(n+1, a) = ln(n!) - a + ln Σ_{j<=n} a^j / j!`, for `a > 0`.
pub fn ln_upper_gamma_int(n: u32, a: f64) -> f64 {
    assert!(a > 0.0);
    let la = a.ln();
    let mut terms = Vec::with_capacity(n as usize + 1);
    let mut lf = 0.0;
    for j in 0..=n {
        if j > 0 {
            lf += (j as f64).ln();
        }
        terms.push(j as f64 * la - lf);
    }
    ln_factorial(n) - a + log_sum_exp(&terms)
}

/// Upper bound `ln(a^{s-1} e^{-a} / (1 - (s-1)/a))` for `ln Γ(s, a)`,
/// valid when `a > s - 1`.
pub fn ln_upper_gamma_bound(s: u32, a: f64) -> Option<f64> {
    let r = (s as f64 - 1.0) / a;
    (r < 1.0).then(|| (s as f64 - 1.0) * a.ln() - a - (1.0 - r).ln())
}

/// `1/d` to double-double accuracy; `TwoFloat` division only keeps about
/// 53 bits.
pub fn recip_tf(d: f64) -> TwoFloat {
    let hi = 1.0 / d;
    let residual = (-hi).mul_add(d, 1.0);
    TwoFloat::new_add(hi, residual / d)
}

/// Double-double `exp`: `2^j · (exp(r / 256))^256` with `r = x - j ln 2`.
///
/// The `exp` shipped with `TwoFloat` is only good to about `1e-12`.
pub fn exp_tf(x: TwoFloat) -> TwoFloat {
    let xf = f64::from(x);
    if xf == f64::NEG_INFINITY || xf < -746.0 {
        return TwoFloat::from(0.0);
    }
    if xf.is_nan() || xf > 709.0 {
        return TwoFloat::from(f64::from(x).exp());
    }
    let j = (xf / std::f64::consts::LN_2).round();
    let r = (x - TwoFloat::from(j) * twofloat::consts::LN_2) * TwoFloat::from(1.0 / 256.0);
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    for i in 1..=14 {
        term = term * r * recip_tf(i as f64);
        sum += term;
    }
    for _ in 0..8 {
        sum = sum * sum;
    }
    // split the power of two so neither factor overflows
    let half = (j / 2.0).trunc();
    sum * TwoFloat::from(2f64.powi(half as i32)) * TwoFloat::from(2f64.powi((j - half) as i32))
}

/// Double-double natural logarithm by Newton steps on [`exp_tf`]; the
/// `TwoFloat` version is only good to about `1e-14`.
pub fn ln_tf(x: TwoFloat) -> TwoFloat {
    let xf = f64::from(x);
    if !(xf > 0.0) || !xf.is_finite() {
        return TwoFloat::from(xf.ln());
    }
    let mut y = TwoFloat::from(xf.ln());
    for _ in 0..2 {
        y += x * exp_tf(-y) - TwoFloat::from(1.0);
    }
    y
}

/// `ln(Σ exp(v))` in double-double arithmetic.
pub fn log_sum_exp_tf(values: &[TwoFloat]) -> TwoFloat {
    let Some(m) = values
        .iter()
        .copied()
        .filter(|v| f64::from(*v) > f64::NEG_INFINITY)
        .max_by(|a, b| f64::from(*a).total_cmp(&f64::from(*b)))
    else {
        return TwoFloat::from(f64::NEG_INFINITY);
    };
    let mut s = TwoFloat::from(0.0);
    for v in values.iter().filter(|v| f64::from(**v) > f64::NEG_INFINITY) {
        s += exp_tf(*v - m);
    }
    m + ln_tf(s)
}

/// `Γ(n+1, a)` in double-double arithmetic, unscaled; intended for moderate
/// arguments where the value stays within range.
pub fn upper_gamma_int_tf(n: u32, a: TwoFloat) -> TwoFloat {
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    for j in 1..=n {
        term = term * a * recip_tf(j as f64);
        sum += term;
    }
    let mut fact = TwoFloat::from(1.0);
    for j in 2..=n {
        fact *= TwoFloat::from(j as f64);
    }
    fact * sum * exp_tf(-a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        // Γ(1, a) = e^{-a}; Γ(2, a) = (1 + a) e^{-a}
        assert!((ln_upper_gamma_int(0, 2.0) + 2.0).abs() < 1e-14);
        assert!((ln_upper_gamma_int(1, 3.0) - (4.0f64.ln() - 3.0)).abs() < 1e-14);
        assert!((ln_gamma_int(5) - 24.0f64.ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn huge_parameters_stay_finite() {
        let v = ln_upper_gamma_int(200, 1500.0);
        assert!(v.is_finite());
        let b = ln_upper_gamma_bound(201, 1500.0).unwrap();
        assert!(v <= b);
        assert!(ln_upper_gamma_bound(10, 5.0).is_none());
    }

    #[test]
    fn double_double_exp() {
        // e^{-1} and e^{10} to about 32 digits
        let e1 = exp_tf(TwoFloat::from(-1.0));
        let want = TwoFloat::new_add(0.36787944117144233, -1.2428753672788363e-17);
        assert!(f64::from((e1 - want).abs()) < 1e-29, "{e1:?}");
        let e10 = exp_tf(TwoFloat::from(10.0));
        let want = TwoFloat::new_add(22026.465794806718, -1.3780134700517372e-12);
        assert!(f64::from((e10 - want).abs() / want) < 1e-29, "{e10:?}");
        assert_eq!(f64::from(exp_tf(TwoFloat::from(-1e4))), 0.0);
        let l2 = ln_tf(TwoFloat::from(2.0));
        assert!(f64::from((l2 - twofloat::consts::LN_2).abs()) < 1e-30);
        let l7 = ln_tf(TwoFloat::from(7.0));
        let want = TwoFloat::new_add(1.9459101490553132, 7.323586207904907e-17);
        assert!(f64::from((l7 - want).abs()) < 1e-30, "{l7:?}");
        let l = log_sum_exp_tf(&[TwoFloat::from(0.0), TwoFloat::from(0.0)]);
        assert!(f64::from((l - twofloat::consts::LN_2).abs()) < 1e-30, "{l:?} {l2:?}");
        let third = recip_tf(3.0) * TwoFloat::from(3.0) - TwoFloat::from(1.0);
        assert!(f64::from(third).abs() < 1e-31);
    }

    #[test]
    fn double_double_agrees() {
        for (n, a) in [(4u32, 3.0f64), (10, 12.5), (20, 40.0)] {
            let tf: f64 = upper_gamma_int_tf(n, TwoFloat::from(a)).into();
            let d = ln_upper_gamma_int(n, a).exp();
            assert!((tf - d).abs() <= 1e-12 * d, "{n} {a}: {tf} {d}");
        }
    }
}
