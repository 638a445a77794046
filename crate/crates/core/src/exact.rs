//! Dense exact matrices over the integers and rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use twofloat::TwoFloat;

/// Row-major dense matrix of big integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IntMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[BigInt] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Exact product, parallel over rows of the result.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let (n, m) = (self.rows, other.cols);
        let data: Vec<BigInt> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = self.row(i);
                let mut acc = vec![BigInt::zero(); m];
                for (k, a) in row.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (dst, b) in acc.iter_mut().zip(other.row(k)) {
                        if !b.is_zero() {
                            *dst += a * b;
                        }
                    }
                }
                acc
            })
            .collect();
        IntMatrix {
            rows: n,
            cols: m,
            data,
        }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].clone())
            .sum()
    }

    /// Largest absolute entry, as a float.
    pub fn max_abs_f64(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major dense matrix of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    /// Integer numerator matrix and positive common denominator.
    pub fn to_int_with_denominator(&self) -> (IntMatrix, BigInt) {
        let den = self
            .data
            .iter()
            .fold(BigInt::one(), |acc, v| num_integer::Integer::lcm(&acc, v.denom()));
        let data = self
            .data
            .iter()
            .map(|v| v.numer() * (&den / v.denom()))
            .collect();
        (IntMatrix::from_vec(self.rows, self.cols, data), den)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(rat_to_f64).collect()
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = BigRational;

    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Nearest double to a rational, robust to numerators and denominators
/// beyond the `f64` range.
pub fn rat_to_f64(v: &BigRational) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (v.numer().to_f64(), v.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 1e300 && d < 1e300 {
            return n / d;
        }
    }
    let nb = v.numer().bits() as i64;
    let db = v.denom().bits() as i64;
    // shift so the quotient carries about 64 significant bits
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (v.numer() << shift as usize) / v.denom()
    } else {
        v.numer() / (v.denom() << (-shift) as usize)
    };
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

/// Double-double approximation of a rational (about 106 bits).
pub fn rat_to_twofloat(v: &BigRational) -> TwoFloat {
    let hi = rat_to_f64(v);
    if !hi.is_finite() || hi == 0.0 {
        return TwoFloat::from(hi);
    }
    let hi_exact = BigRational::from_float(hi).expect("finite");
    let lo = rat_to_f64(&(v - hi_exact));
    TwoFloat::new_add(hi, lo)
}

pub fn big_to_f64(v: &BigInt) -> f64 {
    rat_to_f64(&BigRational::from_integer(v.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_identity() {
        let a = IntMatrix::from_vec(2, 2, [1, 2, 3, 4].map(BigInt::from).to_vec());
        let id = IntMatrix::identity(2);
        assert_eq!(a.mul(&id), a);
        let sq = a.mul(&a);
        assert_eq!(sq.data(), &[7, 10, 15, 22].map(BigInt::from));
        assert_eq!(sq.trace(), BigInt::from(29));
    }

    #[test]
    fn rational_conversion_is_accurate() {
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(rat_to_f64(&third), 1.0 / 3.0);
        let huge = BigRational::new(BigInt::from(10).pow(400) + 1, BigInt::from(10).pow(399) * 3);
        assert!((rat_to_f64(&huge) - 10.0 / 3.0).abs() < 1e-15);
        let dd = rat_to_twofloat(&third);
        let err = (dd * TwoFloat::from(3.0) - TwoFloat::from(1.0)).abs();
        assert!(f64::from(err) < 1e-30);
    }
}
