//! Integral quaternions of the Lipschitz order and its coset by
//! `xi = (1 + i + j + k) / 2`, stored with doubled coordinates so both
//! classes share exact integer arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which class a quaternion belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `B(Z)`: all doubled coordinates even.
    Integral,
    /// `B(Z) + xi`: all doubled coordinates odd.
    Coset,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Integral => "integral",
            Parity::Coset => "coset",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integral" => Ok(Parity::Integral),
            "coset" => Ok(Parity::Coset),
            other => Err(Error::InvalidArgument(format!(
                "unknown parity `{other}` (expected `integral` or `coset`)"
            ))),
        }
    }
}

/// A quaternion `(c1 + c2 i + c3 j + c4 k) / 2` with either all `c_i` even
/// or all `c_i` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quaternion {
    c: [i64; 4],
}

/// Conjugate, reduced norm and reduced trace of a quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Invariants {
    pub conjugate: Quaternion,
    pub nr: u64,
    /// `tr(a) = a + conj(a)`, always an integer on the Hurwitz order.
    pub tr: i64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion { c: [2, 0, 0, 0] };
    pub const ZERO: Quaternion = Quaternion { c: [0, 0, 0, 0] };
    pub const I: Quaternion = Quaternion { c: [0, 2, 0, 0] };
    pub const J: Quaternion = Quaternion { c: [0, 0, 2, 0] };
    pub const K: Quaternion = Quaternion { c: [0, 0, 0, 2] };
    pub const XI: Quaternion = Quaternion { c: [1, 1, 1, 1] };

    /// Builds a quaternion from doubled coordinates, rejecting mixed parity.
    pub fn from_doubled(c: [i64; 4]) -> Result<Self> {
        let odd = c.iter().filter(|v| v.rem_euclid(2) == 1).count();
        if odd == 0 || odd == 4 {
            Ok(Quaternion { c })
        } else {
            Err(Error::InvalidArgument(format!(
                "doubled coordinates {c:?} mix parities"
            )))
        }
    }

    /// Builds `a + b i + c j + d k` with integer coordinates.
    pub fn integral(a: i64, b: i64, c: i64, d: i64) -> Self {
        Quaternion {
            c: [2 * a, 2 * b, 2 * c, 2 * d],
        }
    }

    pub fn doubled(&self) -> [i64; 4] {
        self.c
    }

    /// True coordinates; only meaningful for integral elements.
    pub fn coords(&self) -> [i64; 4] {
        debug_assert_eq!(self.parity(), Parity::Integral);
        self.c.map(|v| v / 2)
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.c.map(|v| v as f64 / 2.0)
    }

    pub fn parity(&self) -> Parity {
        if self.c[0].rem_euclid(2) == 0 {
            Parity::Integral
        } else {
            Parity::Coset
        }
    }

    pub fn conj(&self) -> Self {
        Quaternion {
            c: [self.c[0], -self.c[1], -self.c[2], -self.c[3]],
        }
    }

    /// Reduced norm `(c1^2 + c2^2 + c3^2 + c4^2) / 4`.
    pub fn nr(&self) -> u64 {
        let s: i128 = self.c.iter().map(|&v| (v as i128) * (v as i128)).sum();
        (s / 4) as u64
    }

    /// Reduced trace, equal to the doubled real coordinate.
    pub fn tr(&self) -> i64 {
        self.c[0]
    }

    pub fn invariants(&self) -> Invariants {
        Invariants {
            conjugate: self.conj(),
            nr: self.nr(),
            tr: self.tr(),
        }
    }

    /// Sum of squares of the doubled imaginary coordinates, i.e.
    /// `4 (m2^2 + m3^2 + m4^2)`.
    pub fn imag_sq4(&self) -> u64 {
        self.c[1..]
            .iter()
            .map(|&v| (v as i128 * v as i128) as u64)
            .sum()
    }

    /// Hamilton product in doubled coordinates, widened to `i128`.
    pub fn mul_wide(&self, rhs: &Quaternion) -> [i128; 4] {
        let [a1, b1, c1, d1] = self.c.map(i128::from);
        let [a2, b2, c2, d2] = rhs.c.map(i128::from);
        // every component is even when both factors lie in the Hurwitz order
        [
            (a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2) / 2,
            (a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2) / 2,
            (a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2) / 2,
            (a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2) / 2,
        ]
    }

    /// Hamilton product; fails when a doubled coordinate leaves `i64`.
    pub fn mul(&self, rhs: &Quaternion) -> Result<Quaternion> {
        let w = self.mul_wide(rhs);
        let mut c = [0i64; 4];
        for (dst, src) in c.iter_mut().zip(w) {
            *dst = i64::try_from(src).map_err(|_| Error::Capacity("quaternion product"))?;
        }
        Ok(Quaternion { c })
    }

    /// Integer matrix `L` of `x -> self * x` on `R^4`, for integral `self`.
    pub fn left_mul_matrix(&self) -> [[i64; 4]; 4] {
        let [a, b, c, d] = self.coords();
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.c;
        write!(f, "({a} + {b}i + {c}j + {d}k)/2")
    }
}

/// Hamilton product of floating quaternions.
pub fn mul_f64(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn conj_f64(a: &[f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// All quaternions of a given parity and reduced norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormShell {
    pub k: u64,
    pub parity: Parity,
    /// Sorted lexicographically on the doubled coordinates.
    pub elements: Vec<Quaternion>,
}

impl NormShell {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Quaternion> {
        self.elements.iter()
    }
}

pub(crate) fn isqrt(v: u64) -> u64 {
    if v == 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Enumerates every quaternion of reduced norm `k` in the requested class.
///
/// Scans the doubled real coordinate, then the next two, and completes the
/// last coordinate with a perfect-square test.
pub fn enumerate_shell(k: u64, parity: Parity) -> NormShell {
    let mut elements = Vec::new();
    if k == 0 || (parity == Parity::Coset && k.is_multiple_of(2)) {
        return NormShell {
            k,
            parity,
            elements,
        };
    }
    let target = 4 * k;
    let start = match parity {
        Parity::Integral => 0,
        Parity::Coset => 1,
    };
    let bound = isqrt(target) as i64;
    // candidate doubled values in ascending order
    let values: Vec<i64> = (-bound..=bound)
        .filter(|v| v.rem_euclid(2) == start)
        .collect();
    for &c1 in &values {
        let r1 = target - (c1 * c1) as u64;
        for &c2 in &values {
            let s2 = (c2 * c2) as u64;
            if s2 > r1 {
                continue;
            }
            let r2 = r1 - s2;
            for &c3 in &values {
                let s3 = (c3 * c3) as u64;
                if s3 > r2 {
                    continue;
                }
                let r3 = r2 - s3;
                let c4 = isqrt(r3);
                if c4 * c4 != r3 || (c4 as i64).rem_euclid(2) != start {
                    continue;
                }
                let c4 = c4 as i64;
                elements.push(Quaternion { c: [c1, c2, c3, -c4] });
                if c4 != 0 {
                    elements.push(Quaternion { c: [c1, c2, c3, c4] });
                }
            }
        }
    }
    elements.sort_unstable();
    NormShell {
        k,
        parity,
        elements,
    }
}

/// Number of integral quaternions of norm `k`.
pub fn r4_count(k: u64) -> u64 {
    enumerate_shell(k, Parity::Integral).len() as u64
}

/// Sum of divisors.
pub fn divisor_sum(k: u64) -> u64 {
    let mut s = 0;
    let mut d = 1;
    while d * d <= k {
        if k.is_multiple_of(d) {
            s += d;
            if d * d != k {
                s += k / d;
            }
        }
        d += 1;
    }
    s
}

/// Counts of integral quaternions of norm `k` for every value of the real
/// coordinate `m1`, as `(m1, count)` with `m1` ascending.
///
/// Theta coefficients at `x = y` depend only on this distribution.
pub fn real_part_distribution(k: u64) -> Vec<(i64, u64)> {
    let b = isqrt(k) as i64;
    let r3 = three_square_counts(k);
    (-b..=b)
        .map(|m1| (m1, r3[(k - (m1 * m1) as u64) as usize]))
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// `r3[s]` = number of integer triples with `a^2 + b^2 + c^2 = s`, for `s <= k`.
pub fn three_square_counts(k: u64) -> Vec<u64> {
    let k = k as usize;
    let mut r2 = vec![0u64; k + 1];
    let b = isqrt(k as u64) as i64;
    for a in -b..=b {
        for c in -b..=b {
            let s = (a * a + c * c) as usize;
            if s <= k {
                r2[s] += 1;
            }
        }
    }
    let mut r3 = vec![0u64; k + 1];
    for a in -b..=b {
        let a2 = (a * a) as usize;
        for s in 0..=(k - a2) {
            r3[s + a2] += r2[s];
        }
    }
    r3
}
