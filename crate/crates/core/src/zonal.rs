//! Chebyshev polynomials of the second kind and the reproducing kernel of
//! the degree-`n` eigenspace on the sphere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Below this `|sin θ|` the trigonometric form is abandoned for the recurrence.
pub const TRIG_SWITCH: f64 = 1e-6;

/// Which evaluation path produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Endpoint `x = ±1`, the limit value `(±1)^n (n+1)`.
    Capped,
    Trig,
    Recurrence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub regime: Regime,
}

/// `U_n(x)` by the three-term recurrence.
pub fn chebyshev_u_recurrence(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `U_n(x)` in floating point, recording the path taken.
pub fn chebyshev_u_tagged(n: u32, x: f64) -> KernelValue {
    if x == 1.0 || x == -1.0 {
        let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        return KernelValue {
            value: sign * (n as f64 + 1.0),
            regime: Regime::Capped,
        };
    }
    if x.abs() > 1.0 {
        return KernelValue {
            value: chebyshev_u_recurrence(n, x),
            regime: Regime::Recurrence,
        };
    }
    let s = (1.0 - x * x).sqrt();
    if s < TRIG_SWITCH {
        return KernelValue {
            value: chebyshev_u_recurrence(n, x),
            regime: Regime::Recurrence,
        };
    }
    let theta = x.acos();
    KernelValue {
        value: ((n as f64 + 1.0) * theta).sin() / theta.sin(),
        regime: Regime::Trig,
    }
}

pub fn chebyshev_u(n: u32, x: f64) -> f64 {
    chebyshev_u_tagged(n, x).value
}

/// Exact `U_n(x)` for rational `x`.
pub fn chebyshev_u_exact(n: u32, x: &BigRational) -> BigRational {
    let two_x = x * BigInt::from(2);
    let (mut prev, mut cur) = (BigRational::zero(), BigRational::one());
    for _ in 0..n {
        let next = &two_x * &cur - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Integer monomial coefficients `a_j` of `U_n(x) = Σ a_j x^j`.
pub fn chebyshev_u_coefficients(n: u32) -> Vec<BigInt> {
    let mut prev: Vec<BigInt> = vec![];
    let mut cur: Vec<BigInt> = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c * 2;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// The bound `min{n+1, (1-x^2)^{-1/2}}` on `|U_n(x)|`, equal to `n+1` at `x = ±1`.
pub fn kernel_cap(n: u32, x: f64) -> f64 {
    let cap = n as f64 + 1.0;
    let d = 1.0 - x * x;
    if d <= 0.0 {
        return cap;
    }
    cap.min(1.0 / d.sqrt())
}

fn check_unit(q: &[f64; 4]) -> Result<()> {
    let nr: f64 = q.iter().map(|v| v * v).sum();
    if (nr - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "quaternion of norm {nr} is not a unit"
        )));
    }
    Ok(())
}

/// `(n+1) U_n(½ tr(x ȳ))`, the degree-`n` reproducing kernel at `(x, y)`.
pub fn pretrace_kernel(n: u32, x: &[f64; 4], y: &[f64; 4]) -> Result<f64> {
    check_unit(x)?;
    check_unit(y)?;
    // ½ tr(x ȳ) is the Euclidean inner product
    let t: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    if t.abs() > 1.0 + 1e-9 {
        return Err(Error::Domain { value: t });
    }
    Ok((n as f64 + 1.0) * chebyshev_u(n, t.clamp(-1.0, 1.0)))
}
