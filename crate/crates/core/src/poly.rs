//! Homogeneous polynomials in four variables with exact rational
//! coefficients, harmonic bases of the Laplace eigenspaces on the sphere,
//! and their Gram matrices under the uniform probability measure.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, rat_to_twofloat, RatMatrix};
use crate::quat::{Parity, Quaternion};

/// Exponent tuple `(a1, a2, a3, a4)` of a monomial `x1^a1 x2^a2 x3^a3 x4^a4`.
pub type Exponent = [u32; 4];

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub(crate) fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn double_factorial_odd(k: u32) -> BigInt {
    // (2k - 1)!! with the empty product for k = 0
    (1..=k).fold(BigInt::one(), |acc, j| acc * (2 * j - 1))
}

/// All exponent tuples of total degree `n`, in descending lexicographic order.
pub fn monomials(n: u32) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(((n + 1) * (n + 2) * (n + 3) / 6) as usize);
    for a in (0..=n).rev() {
        for b in (0..=n - a).rev() {
            for c in (0..=n - a - b).rev() {
                out.push([a, b, c, n - a - b - c]);
            }
        }
    }
    out
}

/// `∫_{S^3} x^alpha dσ` for the uniform probability measure.
///
/// Vanishes unless every exponent is even; otherwise equals
/// `Π (2β_i - 1)!! / (2^|β| (|β| + 1)!)` with `alpha = 2β`.
pub fn monomial_sphere_integral(alpha: &Exponent) -> BigRational {
    if alpha.iter().any(|a| a % 2 == 1) {
        return BigRational::zero();
    }
    let beta = alpha.map(|a| a / 2);
    let total: u32 = beta.iter().sum();
    let num = beta
        .iter()
        .fold(BigInt::one(), |acc, &b| acc * double_factorial_odd(b));
    let den = (BigInt::one() << total as usize) * factorial(total + 1);
    BigRational::new(num, den)
}

/// A homogeneous polynomial in four variables with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly4 {
    degree: u32,
    terms: BTreeMap<Exponent, BigRational>,
}

impl Poly4 {
    pub fn zero(degree: u32) -> Self {
        Poly4 {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial([0; 4], c)
    }

    pub fn monomial(exp: Exponent, coeff: BigRational) -> Self {
        let mut p = Self::zero(exp.iter().sum());
        if !coeff.is_zero() {
            p.terms.insert(exp, coeff);
        }
        p
    }

    /// The coordinate function `x_{index+1}`.
    pub fn variable(index: usize) -> Self {
        let mut e = [0; 4];
        e[index] = 1;
        Self::monomial(e, BigRational::one())
    }

    pub fn from_terms<I>(degree: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, BigRational)>,
    {
        let mut p = Self::zero(degree);
        for (e, c) in terms {
            if e.iter().sum::<u32>() != degree {
                return Err(Error::InvalidArgument(format!(
                    "exponent {e:?} does not have degree {degree}"
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, BigRational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Exponent) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    fn add_term(&mut self, e: Exponent, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly4) -> Poly4 {
        assert!(self.is_zero() || other.is_zero() || self.degree == other.degree);
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Poly4 {
        if s.is_zero() {
            return Poly4::zero(self.degree);
        }
        Poly4 {
            degree: self.degree,
            terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly4) -> Poly4 {
        let mut out = Poly4::zero(self.degree + other.degree);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Euclidean Laplacian on `R^4`.
    pub fn laplacian(&self) -> Poly4 {
        let mut out = Poly4::zero(self.degree.saturating_sub(2));
        for (e, c) in &self.terms {
            for v in 0..4 {
                if e[v] >= 2 {
                    let mut d = *e;
                    d[v] -= 2;
                    out.add_term(d, c * BigInt::from(e[v] * (e[v] - 1)));
                }
            }
        }
        out
    }

    pub fn evaluate_rational(&self, p: &[BigRational; 4]) -> BigRational {
        let mut powers: [Vec<BigRational>; 4] = Default::default();
        for (v, pw) in powers.iter_mut().enumerate() {
            pw.push(BigRational::one());
            for k in 1..=self.degree as usize {
                let next = &pw[k - 1] * &p[v];
                pw.push(next);
            }
        }
        self.terms
            .iter()
            .map(|(e, c)| {
                c * &powers[0][e[0] as usize]
                    * &powers[1][e[1] as usize]
                    * &powers[2][e[2] as usize]
                    * &powers[3][e[3] as usize]
            })
            .sum()
    }

    pub fn evaluate_f64(&self, p: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                rat_to_f64(c)
                    * p[0].powi(e[0] as i32)
                    * p[1].powi(e[1] as i32)
                    * p[2].powi(e[2] as i32)
                    * p[3].powi(e[3] as i32)
            })
            .sum()
    }

    /// `∫_{S^3} self dσ` under the probability measure.
    pub fn sphere_integral(&self) -> BigRational {
        self.terms
            .iter()
            .map(|(e, c)| c * monomial_sphere_integral(e))
            .sum()
    }

    /// The polynomial `x -> self(m x)` for an integral quaternion `m`.
    ///
    /// For homogeneous `self` of degree `n`, `self(m x / sqrt(N)) =
    /// N^(-n/2) self(m x)` with `N = nr(m)`.
    pub fn substitute_left_mul(&self, m: &Quaternion) -> Result<Poly4> {
        if m.parity() != Parity::Integral {
            return Err(Error::InvalidArgument(
                "substitution requires an integral quaternion".into(),
            ));
        }
        let l = m.left_mul_matrix();
        let forms: Vec<Poly4> = l
            .iter()
            .map(|row| {
                let mut f = Poly4::zero(1);
                for (s, &v) in row.iter().enumerate() {
                    let mut e = [0; 4];
                    e[s] = 1;
                    f.add_term(e, BigRational::from_integer(v.into()));
                }
                f
            })
            .collect();
        let mut powers: Vec<Vec<Poly4>> = forms
            .iter()
            .map(|_| vec![Poly4::constant(BigRational::one())])
            .collect();
        for (r, f) in forms.iter().enumerate() {
            for k in 1..=self.degree as usize {
                let next = powers[r][k - 1].mul(f);
                powers[r].push(next);
            }
        }
        let mut out = Poly4::zero(self.degree);
        for (e, c) in &self.terms {
            let prod = powers[0][e[0] as usize]
                .mul(&powers[1][e[1] as usize])
                .mul(&powers[2][e[2] as usize])
                .mul(&powers[3][e[3] as usize]);
            for (pe, pc) in prod.terms {
                out.add_term(pe, pc * c);
            }
        }
        Ok(out)
    }
}

/// Fischer pairing `Σ alpha! p_alpha q_alpha`. On harmonic polynomials of
/// degree `n` it equals `2^n (n+1)!` times the sphere inner product.
pub fn fischer_pairing(p: &Poly4, q: &Poly4) -> BigRational {
    let (small, large) = if p.len() <= q.len() { (p, q) } else { (q, p) };
    small
        .terms
        .iter()
        .filter_map(|(e, c)| {
            large.terms.get(e).map(|d| {
                let w = e.iter().fold(BigInt::one(), |acc, &a| acc * factorial(a));
                c * d * w
            })
        })
        .sum()
}

/// `2^n (n+1)!`, the ratio between the Fischer pairing and the sphere
/// inner product on degree-`n` harmonics in four variables.
pub fn fischer_constant(n: u32) -> BigInt {
    (BigInt::one() << n as usize) * factorial(n + 1)
}

/// Exact basis of the degree-`n` harmonic polynomials.
///
/// Every harmonic `h = Σ_j x1^j p_j(x2, x3, x4)` is determined by `p_0` and
/// `p_1`, because `Δh = 0` forces `(j+2)(j+1) p_{j+2} = -Δ' p_j`. The
/// basis element with seed `β` is the harmonic polynomial whose `p_0, p_1`
/// part is the single monomial `x^β`; these seeds are the free columns of
/// the Laplacian's monomial matrix, so the basis is its reduced nullspace
/// and coordinates of any harmonic polynomial are read off at the seeds.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub n: u32,
    pub basis: Vec<Poly4>,
    pub seeds: Vec<Exponent>,
    /// `gram[i][j] = ∫ b_i b_j dσ`.
    pub gram: RatMatrix,
}

fn seeds(n: u32) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for s in 0..=1u32 {
        if s > n {
            break;
        }
        let d = n - s;
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([s, a, b, d - a - b]);
            }
        }
    }
    out
}

fn harmonic_from_seed(seed: Exponent) -> Poly4 {
    let n: u32 = seed.iter().sum();
    let mut poly = Poly4::zero(n);
    let mut slice: BTreeMap<[u32; 3], BigRational> = BTreeMap::new();
    slice.insert([seed[1], seed[2], seed[3]], BigRational::one());
    let mut j = seed[0];
    while !slice.is_empty() {
        for (e, c) in &slice {
            poly.add_term([j, e[0], e[1], e[2]], c.clone());
        }
        let mut next: BTreeMap<[u32; 3], BigRational> = BTreeMap::new();
        for (e, c) in &slice {
            for v in 0..3 {
                if e[v] >= 2 {
                    let mut d = *e;
                    d[v] -= 2;
                    *next.entry(d).or_insert_with(BigRational::zero) +=
                        c * BigInt::from(e[v] * (e[v] - 1));
                }
            }
        }
        let div = BigInt::from((j + 2) * (j + 1));
        slice = next
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e, -c / &div))
            .collect();
        j += 2;
    }
    poly
}

/// Parity pattern of an exponent tuple; the Gram matrix is block diagonal
/// in it.
pub fn parity_pattern(e: &Exponent) -> u8 {
    e.iter()
        .enumerate()
        .fold(0u8, |acc, (i, a)| acc | (((a % 2) as u8) << i))
}

/// Builds the exact harmonic basis of degree `n` and its Gram matrix.
pub fn harmonic_basis(n: u32) -> HarmonicBasis {
    let seeds = seeds(n);
    let basis: Vec<Poly4> = seeds.par_iter().map(|s| harmonic_from_seed(*s)).collect();
    let gram = gram_matrix(n, &basis, &seeds);
    HarmonicBasis {
        n,
        basis,
        seeds,
        gram,
    }
}

fn gram_matrix(n: u32, basis: &[Poly4], seeds: &[Exponent]) -> RatMatrix {
    let dim = basis.len();
    // integer-cleared copies: b_i = ints_i / dens_i
    let cleared: Vec<(HashMap<Exponent, BigInt>, BigInt)> = basis
        .iter()
        .map(|b| {
            let den = b
                .terms
                .values()
                .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let ints = b
                .terms
                .iter()
                .map(|(e, c)| (*e, c.numer() * (&den / c.denom())))
                .collect();
            (ints, den)
        })
        .collect();
    let facts: Vec<BigInt> = (0..=n).map(factorial).collect();
    let cn = fischer_constant(n);
    let patterns: Vec<u8> = seeds.iter().map(parity_pattern).collect();
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i..dim).map(move |j| (i, j)))
        .filter(|&(i, j)| patterns[i] == patterns[j])
        .collect();
    let entries: Vec<(usize, usize, BigRational)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (pi, di) = &cleared[i];
            let (pj, dj) = &cleared[j];
            let (small, large) = if pi.len() <= pj.len() { (pi, pj) } else { (pj, pi) };
            let mut acc = BigInt::zero();
            for (e, c) in small {
                if let Some(d) = large.get(e) {
                    let w = &facts[e[0] as usize]
                        * &facts[e[1] as usize]
                        * &facts[e[2] as usize]
                        * &facts[e[3] as usize];
                    acc += c * d * w;
                }
            }
            (i, j, BigRational::new(acc, di * dj * &cn))
        })
        .collect();
    let mut gram = RatMatrix::zeros(dim, dim);
    for (i, j, v) in entries {
        gram[(j, i)] = v.clone();
        gram[(i, j)] = v;
    }
    gram
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a harmonic polynomial, read off at the seed monomials.
    pub fn coordinates(&self, h: &Poly4) -> Vec<BigRational> {
        self.seeds.iter().map(|s| h.coeff(s)).collect()
    }

    /// Coordinates with a full reconstruction check; fails if `h` is not in
    /// the span (a non-harmonic input or a rank bug).
    pub fn coordinates_checked(&self, h: &Poly4) -> Result<Vec<BigRational>> {
        let coords = self.coordinates(h);
        let mut rebuilt = Poly4::zero(self.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            if !c.is_zero() {
                rebuilt = rebuilt.add(&b.scale(c));
            }
        }
        if rebuilt != *h {
            return Err(Error::Rank(format!(
                "polynomial of degree {} is not in the harmonic span",
                h.degree()
            )));
        }
        Ok(coords)
    }

    /// Parity block of each basis element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut by_pattern: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.seeds.iter().enumerate() {
            by_pattern.entry(parity_pattern(s)).or_default().push(i);
        }
        by_pattern.into_values().collect()
    }

    /// Gram matrix recomputed by multiplying basis elements and integrating
    /// monomials; an independent route to [`HarmonicBasis::gram`].
    pub fn gram_by_integration(&self) -> RatMatrix {
        let dim = self.dim();
        let mut g = RatMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = self.basis[i].mul(&self.basis[j]).sphere_integral();
                g[(i, j)] = v.clone();
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn export(&self) -> BasisExport {
        BasisExport {
            n: self.n,
            dim: self.dim(),
            polys: self
                .basis
                .iter()
                .map(|b| {
                    b.terms
                        .iter()
                        .map(|(e, c)| (*e, format!("{}/{}", c.numer(), c.denom())))
                        .collect()
                })
                .collect(),
        }
    }
}

/// JSON shape of an exported basis; rationals are `"p/q"` strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisExport {
    pub n: u32,
    pub dim: usize,
    pub polys: Vec<Vec<(Exponent, String)>>,
}

/// Floating precision used when whitening the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double (about 106 bits) for the Cholesky factor and the
    /// whitened coefficients.
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::InvalidArgument(format!(
                "unknown precision `{other}` (expected `double` or `extended`)"
            ))),
        }
    }
}

/// Precomputed table of the degree-`n` monomials for fast float evaluation.
#[derive(Debug, Clone)]
pub struct MonomialTable {
    pub n: u32,
    pub exponents: Vec<Exponent>,
    index: HashMap<Exponent, usize>,
}

impl MonomialTable {
    pub fn new(n: u32) -> Self {
        let exponents = monomials(n);
        let index = exponents.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        MonomialTable {
            n,
            exponents,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn index_of(&self, e: &Exponent) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Values of every monomial at `x`.
    pub fn values(&self, x: &[f64; 4]) -> Vec<f64> {
        let n = self.n as usize;
        let mut pw = [[1.0f64; 64]; 4];
        assert!(n < 64, "degree too large for the power table");
        for v in 0..4 {
            for k in 1..=n {
                pw[v][k] = pw[v][k - 1] * x[v];
            }
        }
        self.exponents
            .iter()
            .map(|e| {
                pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize] * pw[3][e[3] as usize]
            })
            .collect()
    }
}

/// Sparse float polynomial over a [`MonomialTable`].
#[derive(Debug, Clone, Default)]
pub struct SparsePoly {
    pub terms: Vec<(usize, f64)>,
}

impl SparsePoly {
    pub fn eval(&self, monomial_values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(i, c)| c * monomial_values[i])
            .sum()
    }
}

/// Orthonormal basis `ψ = L^{-1} b` obtained from the Cholesky factor
/// `G = L L^T` of the exact Gram matrix.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    pub n: u32,
    pub precision: Precision,
    pub table: MonomialTable,
    /// `ψ_i` expanded in monomials.
    pub polys: Vec<SparsePoly>,
    /// Cholesky factor `L` (dense, row-major, lower triangular).
    pub chol: Vec<f64>,
    /// `L^{-1}` (dense, row-major, lower triangular).
    pub chol_inv: Vec<f64>,
}

trait Real:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rat(v: &BigRational) -> Self;
    fn sqrt(self) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rat(v: &BigRational) -> Self {
        rat_to_f64(v)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn zero() -> Self {
        TwoFloat::from(0.0)
    }
    fn one() -> Self {
        TwoFloat::from(1.0)
    }
    fn from_rat(v: &BigRational) -> Self {
        rat_to_twofloat(v)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

struct Whitening {
    chol: Vec<f64>,
    chol_inv: Vec<f64>,
    polys: Vec<SparsePoly>,
}

fn whiten<R: Real + Send + Sync>(hb: &HarmonicBasis, table: &MonomialTable) -> Result<Whitening> {
    let dim = hb.dim();
    let blocks = hb.blocks();
    let per_block: Vec<(Vec<usize>, Vec<R>, Vec<R>)> = blocks
        .into_par_iter()
        .map(|idx| {
            let m = idx.len();
            let mut l = vec![R::zero(); m * m];
            for i in 0..m {
                for j in 0..=i {
                    let mut s = R::from_rat(&hb.gram[(idx[i], idx[j])]);
                    for k in 0..j {
                        s = s - l[i * m + k] * l[j * m + k];
                    }
                    if i == j {
                        if s.to_f64() <= 0.0 {
                            return Err(Error::Rank(format!(
                                "Gram matrix of degree {} is not positive definite",
                                hb.n
                            )));
                        }
                        l[i * m + i] = s.sqrt();
                    } else {
                        l[i * m + j] = s / l[j * m + j];
                    }
                }
            }
            // forward substitution for L^{-1}
            let mut inv = vec![R::zero(); m * m];
            for c in 0..m {
                inv[c * m + c] = R::one() / l[c * m + c];
                for i in c + 1..m {
                    let mut s = R::zero();
                    for k in c..i {
                        s = s - l[i * m + k] * inv[k * m + c];
                    }
                    inv[i * m + c] = s / l[i * m + i];
                }
            }
            Ok((idx, l, inv))
        })
        .collect::<Result<_>>()?;

    let mut chol = vec![0.0; dim * dim];
    let mut chol_inv = vec![0.0; dim * dim];
    let mut polys = vec![SparsePoly::default(); dim];
    for (idx, l, inv) in &per_block {
        let m = idx.len();
        for i in 0..m {
            for j in 0..=i {
                chol[idx[i] * dim + idx[j]] = l[i * m + j].to_f64();
                chol_inv[idx[i] * dim + idx[j]] = inv[i * m + j].to_f64();
            }
        }
    }
    let built: Vec<(usize, SparsePoly)> = per_block
        .par_iter()
        .flat_map_iter(|(idx, _, inv)| {
            let m = idx.len();
            (0..m).map(move |i| {
                let mut acc: BTreeMap<usize, R> = BTreeMap::new();
                for j in 0..=i {
                    let w = inv[i * m + j];
                    for (e, c) in hb.basis[idx[j]].terms() {
                        let slot = acc
                            .entry(table.index_of(e).expect("degree-n monomial"))
                            .or_insert_with(R::zero);
                        *slot = *slot + w * R::from_rat(c);
                    }
                }
                let terms = acc
                    .into_iter()
                    .map(|(k, v)| (k, v.to_f64()))
                    .filter(|(_, v)| *v != 0.0)
                    .collect();
                (idx[i], SparsePoly { terms })
            })
        })
        .collect();
    for (i, p) in built {
        polys[i] = p;
    }
    Ok(Whitening {
        chol,
        chol_inv,
        polys,
    })
}

impl OrthonormalBasis {
    pub fn new(hb: &HarmonicBasis, precision: Precision) -> Result<Self> {
        let table = MonomialTable::new(hb.n);
        let w = match precision {
            Precision::Double => whiten::<f64>(hb, &table)?,
            Precision::Extended => whiten::<TwoFloat>(hb, &table)?,
        };
        Ok(OrthonormalBasis {
            n: hb.n,
            precision,
            table,
            polys: w.polys,
            chol: w.chol,
            chol_inv: w.chol_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    /// Values `ψ_i(x)` of every orthonormal basis function.
    pub fn eval_all(&self, x: &[f64; 4]) -> Vec<f64> {
        let mv = self.table.values(x);
        self.polys.iter().map(|p| p.eval(&mv)).collect()
    }
}

/// Exact value of the harmonic basis elements at a rational point, and the
/// same value through floating evaluation.
pub fn evaluate_both(f: &Poly4, p: &[BigRational; 4]) -> (BigRational, f64) {
    let exact = f.evaluate_rational(p);
    let fp = p.clone().map(|v| rat_to_f64(&v));
    (exact, f.evaluate_f64(&fp))
}

/// Relative magnitude helper used by the float/exact comparisons.
pub fn abs_f64(v: &BigRational) -> f64 {
    rat_to_f64(&v.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u32, k: u32) -> usize {
        if k > n {
            return 0;
        }
        ((n - k + 1)..=n).product::<u32>() as usize / (1..=k).product::<u32>() as usize
    }

    #[test]
    fn monomial_moments() {
        assert_eq!(monomial_sphere_integral(&[2, 0, 0, 0]), rat(1, 4));
        assert_eq!(monomial_sphere_integral(&[1, 1, 0, 0]), rat(0, 1));
        assert_eq!(monomial_sphere_integral(&[4, 0, 0, 0]), rat(1, 8));
        assert_eq!(monomial_sphere_integral(&[2, 2, 0, 0]), rat(1, 24));
        assert_eq!(monomial_sphere_integral(&[0, 0, 0, 0]), rat(1, 1));
        // four equal second moments sum to one
        let total: BigRational = (0..4)
            .map(|v| {
                let mut e = [0; 4];
                e[v] = 2;
                monomial_sphere_integral(&e)
            })
            .sum();
        assert_eq!(total, rat(1, 1));
    }

    #[test]
    fn small_bases() {
        let b0 = harmonic_basis(0);
        assert_eq!(b0.dim(), 1);
        assert_eq!(b0.gram[(0, 0)], rat(1, 1));

        let b1 = harmonic_basis(1);
        assert_eq!(b1.dim(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { rat(1, 4) } else { rat(0, 1) };
                assert_eq!(b1.gram[(i, j)], expect);
            }
        }

        let b2 = harmonic_basis(2);
        assert_eq!(b2.dim(), binom(5, 3) - binom(3, 3));
        assert_eq!(b2.dim(), 9);
    }

    #[test]
    fn basis_is_harmonic_with_full_dimension() {
        for n in 0..=12 {
            let hb = harmonic_basis(n);
            assert_eq!(hb.dim(), ((n + 1) * (n + 1)) as usize);
            for b in &hb.basis {
                assert!(b.laplacian().is_zero(), "degree {n} element not harmonic");
            }
            assert!(hb.gram.is_symmetric());
        }
    }

    #[test]
    fn fischer_gram_matches_integration() {
        for n in 0..=5 {
            let hb = harmonic_basis(n);
            assert_eq!(hb.gram, hb.gram_by_integration(), "degree {n}");
        }
    }

    #[test]
    fn coordinates_read_off_reconstruct() {
        let hb = harmonic_basis(4);
        let h = hb.basis[3].scale(&rat(3, 7)).add(&hb.basis[20].scale(&rat(-2, 1)));
        let c = hb.coordinates_checked(&h).unwrap();
        assert_eq!(c[3], rat(3, 7));
        assert_eq!(c[20], rat(-2, 1));
        assert_eq!(c.iter().filter(|v| !v.is_zero()).count(), 2);
        let not_harmonic = Poly4::monomial([2, 2, 0, 0], rat(1, 1));
        assert!(hb.coordinates_checked(&not_harmonic).is_err());
    }

    #[test]
    fn substitution_examples() {
        let x1 = Poly4::variable(0);
        let got = x1.substitute_left_mul(&Quaternion::I).unwrap();
        assert_eq!(got, Poly4::monomial([0, 1, 0, 0], rat(-1, 1)));

        let one = Poly4::constant(rat(1, 1));
        let m = Quaternion::integral(2, -1, 3, 5);
        assert_eq!(one.substitute_left_mul(&m).unwrap(), one);

        let coset = Quaternion::XI;
        assert!(x1.substitute_left_mul(&coset).is_err());
    }

    #[test]
    fn substitution_matches_numeric_evaluation() {
        use rand::{Rng, SeedableRng};
        let f = Poly4::monomial([2, 0, 0, 0], rat(1, 1)).add(&Poly4::monomial([0, 2, 0, 0], rat(-1, 1)));
        let m = Quaternion::integral(1, 1, 0, 0);
        let g = f.substitute_left_mul(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let mx = crate::quat::mul_f64(&m.to_f64(), &x);
            let direct = f.evaluate_f64(&mx);
            let via = g.evaluate_f64(&x);
            assert!((direct - via).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn evaluation_examples() {
        let f = Poly4::monomial([1, 1, 0, 0], rat(1, 1));
        assert_eq!(f.evaluate_rational(&[rat(1, 1), rat(1, 1), rat(0, 1), rat(0, 1)]), rat(1, 1));
        let one = Poly4::constant(rat(1, 1));
        assert_eq!(one.evaluate_rational(&[rat(3, 5), rat(-4, 5), rat(7, 1), rat(0, 1)]), rat(1, 1));
        let hb = harmonic_basis(4);
        let p = [rat(3, 5), rat(4, 5), rat(0, 1), rat(0, 1)];
        for b in &hb.basis {
            let (exact, float) = evaluate_both(b, &p);
            assert!((rat_to_f64(&exact) - float).abs() <= 1e-12 * (1.0 + float.abs()));
        }
    }

    #[test]
    fn rotation_invariance_of_measure() {
        // ∫ b_i(m x) b_j(m x) = nr(m)^n ∫ b_i b_j for integral m
        let hb = harmonic_basis(2);
        let shells = [1u64, 2, 3, 5, 6, 9];
        let mut count = 0;
        for &k in &shells {
            for m in crate::quat::enumerate_shell(k, Parity::Integral).iter().step_by(7) {
                let subs: Vec<Poly4> = hb.basis.iter().map(|b| b.substitute_left_mul(m).unwrap()).collect();
                let scale = BigRational::from_integer(BigInt::from(k).pow(hb.n));
                for i in (0..hb.dim()).step_by(2) {
                    for j in i..hb.dim() {
                        let lhs = subs[i].mul(&subs[j]).sphere_integral();
                        assert_eq!(lhs, &hb.gram[(i, j)] * &scale);
                    }
                }
                count += 1;
                if count >= 20 {
                    return;
                }
            }
        }
        assert!(count >= 20);
    }

    #[test]
    fn gram_cholesky_succeeds() {
        for n in [2u32, 6, 10] {
            let hb = harmonic_basis(n);
            for precision in [Precision::Double, Precision::Extended] {
                let ob = OrthonormalBasis::new(&hb, precision).unwrap();
                assert_eq!(ob.dim(), hb.dim());
            }
        }
    }

    #[test]
    fn basis_export_round_trips() {
        let hb = harmonic_basis(2);
        let ex = hb.export();
        assert_eq!(ex.dim, 9);
        let json = serde_json::to_string(&ex).unwrap();
        let back: BasisExport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ex);
        assert!(json.contains("\"1/1\""));
    }
}
