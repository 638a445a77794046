//! The theta series `F_n(x, y; z) = Σ_m nr(m)^{n/2} U_n(tr(m x ȳ) / (2 sqrt(nr m))) e(nr(m) z)`,
//! its spectral expansion over Hecke eigenforms, the expansion at the cusp
//! `1`, and a log-space estimate of its Petersson norm.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, rat_to_twofloat};
use crate::hecke::SpectralDecomposition;
use crate::quat::{enumerate_shell, Parity, Quaternion};
use crate::special::{
    ln_factorial, ln_upper_gamma_bound, ln_upper_gamma_int, ln_tf, log_sum_exp, log_sum_exp_tf,
};
use crate::zonal::{chebyshev_u, chebyshev_u_coefficients};

/// One Fourier coefficient of `F_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCoefficient {
    pub n: u32,
    pub k: u64,
    /// Unnormalized points; the unit points are `q / sqrt(nr q)`.
    pub x: Quaternion,
    pub y: Quaternion,
    pub value: BigRational,
    pub float_value: f64,
    /// `Σ |term|` of the floating sum, the scale for agreement tests.
    pub magnitude: f64,
}

impl ThetaCoefficient {
    /// Relative disagreement of the exact and floating values, measured
    /// against the size of the summands.
    pub fn agreement(&self) -> f64 {
        (rat_to_f64(&self.value) - self.float_value).abs() / self.magnitude.max(f64::MIN_POSITIVE)
    }
}

fn check_point(q: &Quaternion) -> Result<()> {
    if q.nr() == 0 {
        return Err(Error::InvalidArgument("the zero quaternion is not a point of the sphere".into()));
    }
    Ok(())
}

/// Multiplicities of `T = tr(m q_x q̄_y)` over the integral shell of norm `k`.
fn trace_counts(k: u64, x: &Quaternion, y: &Quaternion) -> BTreeMap<i128, u64> {
    let w = x.mul_wide(&y.conj());
    let mut counts = BTreeMap::new();
    for m in enumerate_shell(k, Parity::Integral).iter() {
        let c = m.doubled().map(i128::from);
        // first doubled coordinate of m w, i.e. tr(m w)
        let t = (c[0] * w[0] - c[1] * w[1] - c[2] * w[2] - c[3] * w[3]) / 2;
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

/// `Σ count · k^{n/2} U_n(T / (2 sqrt(k P)))` exactly, for even `n`, where
/// `P = N_x N_y`.
fn exact_sum(n: u32, k: u64, p: u64, counts: &BTreeMap<i128, u64>, a: &[BigInt]) -> BigRational {
    let w = BigInt::from(4u64) * BigInt::from(k) * BigInt::from(p);
    let half = (n / 2) as usize;
    let wpow: Vec<BigInt> = std::iter::successors(Some(BigInt::one()), |v| Some(v * &w))
        .take(half + 1)
        .collect();
    let mut num = BigInt::zero();
    for (&t, &count) in counts {
        let t = BigInt::from(t);
        let t2 = &t * &t;
        let mut tp = BigInt::one();
        let mut s = BigInt::zero();
        for i in 0..=half {
            s += &a[2 * i] * &tp * &wpow[half - i];
            tp *= &t2;
        }
        num += s * count;
    }
    let den = BigInt::from(2u32).pow(n) * BigInt::from(p).pow(n / 2);
    BigRational::new(num, den)
}

fn float_sum(n: u32, k: u64, p: u64, counts: &BTreeMap<i128, u64>) -> (f64, f64) {
    let scale = (k as f64).powf(n as f64 / 2.0);
    let r = 2.0 * ((k * p) as f64).sqrt();
    counts.iter().fold((0.0, 0.0), |(v, m), (&t, &c)| {
        let term = c as f64 * scale * chebyshev_u(n, (t as f64 / r).clamp(-1.0, 1.0));
        (v + term, m + term.abs())
    })
}

/// The `k`-th coefficient of `F_n(x, y; ·)` for even `n`, exactly and in
/// floating point.
pub fn theta_coefficient(n: u32, x: &Quaternion, y: &Quaternion, k: u64) -> Result<ThetaCoefficient> {
    if n % 2 == 1 {
        return Err(Error::InvalidArgument("theta coefficients are computed for even n".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive; F_n has no constant term".into()));
    }
    check_point(x)?;
    check_point(y)?;
    let p = x.nr() * y.nr();
    let counts = trace_counts(k, x, y);
    let value = exact_sum(n, k, p, &counts, &chebyshev_u_coefficients(n));
    let (float_value, magnitude) = float_sum(n, k, p, &counts);
    Ok(ThetaCoefficient {
        n,
        k,
        x: *x,
        y: *y,
        value,
        float_value,
        magnitude,
    })
}

/// Floating coefficient only, for any `n` (used for long expansions).
pub fn theta_coefficient_f64(n: u32, x: &Quaternion, y: &Quaternion, k: u64) -> f64 {
    float_sum(n, k, x.nr() * y.nr(), &trace_counts(k, x, y)).0
}

fn unit(q: &Quaternion) -> [f64; 4] {
    let r = (q.nr() as f64).sqrt();
    q.to_f64().map(|v| v / r)
}

/// `(8/(n+1)) Σ_j φ_j(x) φ_j(y) λ_j(k) k^{n/2}`.
pub fn spectral_coefficient(
    n: u32,
    x: &Quaternion,
    y: &Quaternion,
    k: u64,
    dec: &SpectralDecomposition,
) -> Result<f64> {
    if dec.n != n {
        return Err(Error::InvalidArgument(format!(
            "decomposition is for n = {}, not {n}",
            dec.n
        )));
    }
    check_point(x)?;
    check_point(y)?;
    let lambdas = dec.eigenvalues_of(k)?;
    let fx = dec.eval_eigenforms(&unit(x));
    let fy = dec.eval_eigenforms(&unit(y));
    let s: f64 = fx
        .iter()
        .zip(&fy)
        .zip(&lambdas)
        .map(|((a, b), l)| a * b * l)
        .sum();
    Ok(8.0 / (n as f64 + 1.0) * s * (k as f64).powf(n as f64 / 2.0))
}

/// Counts of coset quaternions of norm `k` by doubled real coordinate.
pub fn coset_real_part_distribution(k: u64) -> Vec<(i64, u64)> {
    if k.is_multiple_of(2) {
        return Vec::new();
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for m in enumerate_shell(k, Parity::Coset).iter() {
        *counts.entry(m.doubled()[0]).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

/// Coefficient of `e(kz/2)` in the expansion of `G_n(z) = F_n(z/2)` at the
/// cusp `1`, at `x = y` (where it does not depend on the point):
/// `-Σ_{m ∈ B(Z)+ξ, nr m = k} k^{n/2} U_n(tr(m) / (2 sqrt k))`.
pub fn coset_coefficient(n: u32, k: u64) -> Result<f64> {
    if n % 2 == 1 {
        return Err(Error::InvalidArgument("coset coefficients are computed for even n".into()));
    }
    Ok(-rat_to_f64(&coset_sum_exact(n, k, &chebyshev_u_coefficients(n))) * k_pow(n, k))
}

fn k_pow(n: u32, k: u64) -> f64 {
    (k as f64).powf(n as f64 / 2.0)
}

/// `Σ U_n(c/(2 sqrt k))` over a distribution of doubled real parts `c`,
/// exactly (even `n`).
fn u_sum_exact(n: u32, k: u64, dist: &[(i64, u64)], a: &[BigInt]) -> BigRational {
    // U_n(c/(2√k)) = Σ_i a_{2i} c^{2i} (4k)^{n/2-i} / (4k)^{n/2}
    let half = (n / 2) as usize;
    let four_k = BigInt::from(4 * k);
    let kpow: Vec<BigInt> = std::iter::successors(Some(BigInt::one()), |v| Some(v * &four_k))
        .take(half + 1)
        .collect();
    let mut num = BigInt::zero();
    for &(c, count) in dist {
        let c2 = BigInt::from(c) * BigInt::from(c);
        let mut cp = BigInt::one();
        let mut s = BigInt::zero();
        for i in 0..=half {
            s += &a[2 * i] * &cp * &kpow[half - i];
            cp *= &c2;
        }
        num += s * count;
    }
    BigRational::new(num, kpow[half].clone())
}

fn coset_sum_exact(n: u32, k: u64, a: &[BigInt]) -> BigRational {
    u_sum_exact(n, k, &coset_real_part_distribution(k), a)
}

/// `Σ U_n(c/(2 sqrt k))` in floating point.
fn u_sum_f64(n: u32, k: u64, dist: &[(i64, u64)]) -> f64 {
    let r = 2.0 * (k as f64).sqrt();
    dist.iter()
        .map(|&(c, count)| count as f64 * chebyshev_u(n, (c as f64 / r).clamp(-1.0, 1.0)))
        .sum()
}

/// Integral real-part distribution in doubled units.
fn integral_doubled_distribution(k: u64) -> Vec<(i64, u64)> {
    crate::quat::real_part_distribution(k)
        .into_iter()
        .map(|(m1, c)| (2 * m1, c))
        .collect()
}

/// Result of [`modularity_check`].
///
/// When every coefficient through the cutoff is exactly zero the relative
/// measures are undefined; the identity then holds exactly on the truncated
/// series and is judged by the absolute residual and tail.
#[derive(Debug, Clone, Serialize)]
pub struct ModularityReport {
    pub n: u32,
    pub gamma: [[i64; 2]; 2],
    pub z: [f64; 2],
    pub cutoff: u64,
    pub identically_zero: bool,
    /// `|F(γz) - (cz+d)^{n+2} F(z)| / |F(z)|`.
    pub residual: Option<f64>,
    /// Certified truncation bound relative to `|F(z)|`.
    pub tail_bound: Option<f64>,
    pub abs_residual: f64,
    pub abs_tail_bound: f64,
    pub f_z: [f64; 2],
    pub f_gamma_z: [f64; 2],
    /// `|F(z)|` over the largest single term of its series.
    pub conditioning: Option<f64>,
}

impl ModularityReport {
    /// `(residual, tail)` in the measure that applies: relative, or absolute
    /// for an identically vanishing series.
    pub fn measures(&self) -> (f64, f64) {
        match (self.residual, self.tail_bound) {
            (Some(r), Some(t)) => (r, t),
            _ => (self.abs_residual, self.abs_tail_bound),
        }
    }

    pub fn passed(&self, residual_tol: f64, tail_tol: f64) -> bool {
        let (r, t) = self.measures();
        r <= residual_tol && t < tail_tol
    }
}

/// `ln` of a bound on `Σ_{k > K} 24 (n+1) k^{n/2+1} (1 + ln k) r^k`, which
/// dominates `Σ_{k>K} |c_k| r^k` since `|U_n| <= n+1` and
/// `r4(k) <= 24 σ(k) <= 24 k (1 + ln k)`.
fn ln_series_tail(n: u32, cutoff: u64, r: f64) -> f64 {
    let k = (cutoff + 1) as f64;
    let e = n as f64 / 2.0 + 1.0;
    let ln_b = |k: f64| (24.0 * (n as f64 + 1.0)).ln() + e * k.ln() + (1.0 + k.ln()).ln();
    let ratio = ((k + 1.0) / k).powf(e) * (1.0 + (k + 1.0).ln()) / (1.0 + k.ln()) * r;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    ln_b(k) + k * r.ln() - (1.0 - ratio).ln()
}

fn eval_series(coeffs: &[f64], w: Complex64) -> (Complex64, f64) {
    let q = (Complex64::i() * 2.0 * PI * w).exp();
    let mut qk = q;
    let mut sum = Complex64::zero();
    let mut largest: f64 = 0.0;
    for c in coeffs {
        let term = qk * *c;
        largest = largest.max(term.norm());
        sum += term;
        qk *= q;
    }
    (sum, largest)
}

/// Tests `F_n(γz) = (cz+d)^{n+2} F_n(z)` with `K`-term expansions.
pub fn modularity_check(
    n: u32,
    x: &Quaternion,
    y: &Quaternion,
    gamma: [[i64; 2]; 2],
    z: Complex64,
    cutoff: u64,
) -> Result<ModularityReport> {
    let [[a, b], [c, d]] = gamma;
    if a * d - b * c != 1 || c % 4 != 0 {
        return Err(Error::InvalidArgument(format!("{gamma:?} is not in Γ0(4)")));
    }
    if z.im < 0.5 {
        return Err(Error::InvalidArgument("test point needs Im z >= 1/2".into()));
    }
    if n % 2 == 1 {
        return Err(Error::InvalidArgument("modularity is checked for even n".into()));
    }
    check_point(x)?;
    check_point(y)?;
    let exact: Vec<BigRational> = (1..=cutoff)
        .into_par_iter()
        .map(|k| theta_coefficient(n, x, y, k).map(|c| c.value))
        .collect::<Result<_>>()?;
    let identically_zero = exact.iter().all(Zero::is_zero);
    let coeffs: Vec<f64> = exact.iter().map(rat_to_f64).collect();
    let cz_d = z * c as f64 + d as f64;
    let gz = (z * a as f64 + b as f64) / cz_d;
    let (fz, largest) = eval_series(&coeffs, z);
    let (fgz, _) = eval_series(&coeffs, gz);
    let threshold = 1e-3 * largest;
    if !identically_zero && fz.norm() < threshold {
        return Err(Error::IllConditioned {
            value: fz.norm(),
            threshold,
        });
    }
    let factor = cz_d.powu(n + 2);
    let abs_residual = (fgz - factor * fz).norm();
    let tail = |w: Complex64| ln_series_tail(n, cutoff, (-2.0 * PI * w.im).exp()).exp();
    let abs_tail_bound = tail(gz) + factor.norm() * tail(z);
    let relative = |v: f64| (!identically_zero).then(|| v / fz.norm());
    Ok(ModularityReport {
        n,
        gamma,
        z: [z.re, z.im],
        cutoff,
        identically_zero,
        residual: relative(abs_residual),
        tail_bound: relative(abs_tail_bound),
        abs_residual,
        abs_tail_bound,
        f_z: [fz.re, fz.im],
        f_gamma_z: [fgz.re, fgz.im],
        conditioning: relative(fz.norm()).map(|_| fz.norm() / largest),
    })
}

/// Log-space estimate of the normalized Petersson norm of `F_n` at `x = y`.
#[derive(Debug, Clone, Serialize)]
pub struct PeterssonEstimate {
    pub n: u32,
    pub cutoff: u64,
    /// `ln Ĩ1`, `ln Ĩ2` (strip integrals above height `sqrt(3)/2`).
    pub ln_i1: f64,
    pub ln_i2: f64,
    /// `ln ρ` with `ρ = (4π)^n / Γ(n+2) · 2^{-n-1} (Ĩ1 + Ĩ2)`.
    pub ln_rho: f64,
    pub rho: f64,
    /// `ln` of the certified bound on the omitted terms `k > K` of `Ĩ1 + Ĩ2`.
    pub ln_tail: f64,
    pub tail_certified: bool,
    /// Relative change of `ρ` when recomputed in double-double arithmetic
    /// from exact coefficient sums.
    pub extended_rel_diff: f64,
}

const STRIP: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2

/// `ln[Γ(n+1, 2πk·h) / (2πk)^{n+1}]`, i.e. `ln ∫_h^∞ e^{-2πky} y^n dy`.
fn ln_strip(n: u32, k: u64) -> f64 {
    let s = 2.0 * PI * k as f64;
    ln_upper_gamma_int(n, s * STRIP) - (n as f64 + 1.0) * s.ln()
}

fn ln_strip_tf(n: u32, k: u64) -> TwoFloat {
    let two_pi = TwoFloat::from(2.0) * twofloat::consts::PI;
    let s = two_pi * TwoFloat::from(k as f64);
    // sqrt(3)/2 to double-double accuracy
    let a = s * TwoFloat::new_add(1.7320508075688772, 1.0035084221806903e-16) * TwoFloat::from(0.5);
    let la = ln_tf(a);
    let mut terms = Vec::with_capacity(n as usize + 1);
    let mut lf = TwoFloat::from(0.0);
    for j in 0..=n {
        if j > 0 {
            lf += ln_tf(TwoFloat::from(j as f64));
        }
        terms.push(TwoFloat::from(j as f64) * la - lf);
    }
    lf + log_sum_exp_tf(&terms) - a - TwoFloat::from(n as f64 + 1.0) * ln_tf(s)
}

/// `ln` of a bound on `Σ_{k>K} k^n ((n+1) 24 σ(k))^2 Γ(n+1, πk√3)/(2πk)^{n+1}`,
/// covering either strip sum.
fn ln_petersson_tail(n: u32, cutoff: u64) -> f64 {
    let nf = n as f64;
    let ln_term = |k: f64| {
        let a = 2.0 * PI * k * STRIP;
        let g = ln_upper_gamma_bound(n + 1, a)?;
        Some(
            nf * k.ln() + 2.0 * (24.0 * (nf + 1.0) * k * (1.0 + k.ln())).ln() + g
                - (nf + 1.0) * (2.0 * PI * k).ln(),
        )
    };
    let k = (cutoff + 1) as f64;
    let Some(first) = ln_term(k) else {
        return f64::INFINITY;
    };
    // the successive ratio of the bound decreases in k
    let ratio = ((k + 1.0) / k).powf(nf + 1.0)
        * ((1.0 + (k + 1.0).ln()) / (1.0 + k.ln())).powi(2)
        * (-2.0 * PI * STRIP).exp();
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    first - (1.0 - ratio).ln()
}

/// Estimates `ρ(n)` from the first `K` coefficients at both cusps.
///
/// The strip sums follow the proof: `Ĩ1 = Σ c_k^2 ∫_{√3/2}^∞ e^{-2πky} y^n dy`
/// with `c_k` the coefficients at `x = y`, and `Ĩ2` the same with the coset
/// coefficients. Requires `K >= 10 n`, the regime where the tail argument
/// applies.
pub fn petersson_estimate(n: u32, cutoff: u64) -> Result<PeterssonEstimate> {
    if n % 2 == 1 {
        return Err(Error::InvalidArgument("the Petersson estimate needs even n".into()));
    }
    if cutoff < 10 * n as u64 || cutoff == 0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} is below 10n = {}; the tail certificate needs K >= 10n",
            10 * n
        )));
    }
    let a = chebyshev_u_coefficients(n);
    struct Terms {
        d1: f64,
        d2: f64,
        e1: TwoFloat,
        e2: TwoFloat,
    }
    let ninf = f64::NEG_INFINITY;
    let terms: Vec<Terms> = (1..=cutoff)
        .into_par_iter()
        .map(|k| {
            let base = n as f64 * (k as f64).ln() + ln_strip(n, k);
            let base_tf = TwoFloat::from(n as f64) * ln_tf(TwoFloat::from(k as f64)) + ln_strip_tf(n, k);
            let side = |dist: &[(i64, u64)]| {
                if dist.is_empty() {
                    return (ninf, TwoFloat::from(ninf));
                }
                // exact sums decide vanishing; floating sums would leave roundoff
                let se = u_sum_exact(n, k, dist, &a).abs();
                if se.is_zero() {
                    return (ninf, TwoFloat::from(ninf));
                }
                let sd = u_sum_f64(n, k, dist).abs();
                let e = base_tf + TwoFloat::from(2.0) * ln_tf(rat_to_twofloat(&se));
                (base + 2.0 * sd.ln(), e)
            };
            let (d1, e1) = side(&integral_doubled_distribution(k));
            let (d2, e2) = side(&coset_real_part_distribution(k));
            Terms { d1, d2, e1, e2 }
        })
        .collect();
    let ln_i1 = log_sum_exp(&terms.iter().map(|t| t.d1).collect::<Vec<_>>());
    let ln_i2 = log_sum_exp(&terms.iter().map(|t| t.d2).collect::<Vec<_>>());
    let finite_tf = |f: fn(&Terms) -> TwoFloat| -> Vec<TwoFloat> {
        terms.iter().map(f).filter(|v| f64::from(*v).is_finite()).collect()
    };
    let mut all_tf = finite_tf(|t| t.e1);
    all_tf.extend(finite_tf(|t| t.e2));
    let ln_sum = log_sum_exp(&[ln_i1, ln_i2]);
    let nf = n as f64;
    let prefactor = nf * (4.0 * PI).ln() - ln_factorial(n + 1) - (nf + 1.0) * 2f64.ln();
    let ln_rho = prefactor + ln_sum;
    let extended_rel_diff = if all_tf.is_empty() {
        0.0
    } else {
        let ln_sum_tf = log_sum_exp_tf(&all_tf);
        let four_pi = TwoFloat::from(4.0) * twofloat::consts::PI;
        let mut lf = TwoFloat::from(0.0);
        for j in 2..=n + 1 {
            lf += ln_tf(TwoFloat::from(j as f64));
        }
        let pre_tf = TwoFloat::from(nf) * ln_tf(four_pi) - lf - TwoFloat::from(nf + 1.0) * twofloat::consts::LN_2;
        let ln_rho_tf = pre_tf + ln_sum_tf;
        f64::from(TwoFloat::from(ln_rho) - ln_rho_tf).exp_m1().abs()
    };
    let ln_tail = ln_petersson_tail(n, cutoff) + 2f64.ln();
    let tail_certified = ln_tail <= ln_sum + 1e-6f64.ln();
    Ok(PeterssonEstimate {
        n,
        cutoff,
        ln_i1,
        ln_i2,
        ln_rho,
        rho: ln_rho.exp(),
        ln_tail,
        tail_certified,
        extended_rel_diff,
    })
}
