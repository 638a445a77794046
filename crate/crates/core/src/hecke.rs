//! Hecke operators `T_N f(x) = (1/8) Σ_{nr(m)=N} f(m x / sqrt(N))` on the
//! degree-`n` harmonic polynomials: exact matrices, the Hecke algebra
//! relations, and the joint eigenspace decomposition.

mod spectral;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::IntMatrix;
use crate::poly::{monomials, Exponent, HarmonicBasis, OrthonormalBasis};
use crate::quat::{enumerate_shell, Parity, Quaternion};

pub use spectral::{
    joint_eigenspaces, pretrace_check, DecompositionExport, EigenSpace, PretracePair, PretraceReport, SpectralDecomposition,
};

/// Index of a seed (free) monomial `(a1, a2, a3, a4)` with `a1 <= 1` among
/// the free monomials of its degree; matches the ordering of
/// [`HarmonicBasis::seeds`].
fn free_index(d: u32, e: &[u32; 4]) -> usize {
    let idx3 = |a3: u32, a4: u32| {
        let t = (a3 + a4) as usize;
        t * (t + 1) / 2 + a4 as usize
    };
    let count3 = |d: u32| ((d + 1) * (d + 2) / 2) as usize;
    if e[0] == 0 {
        idx3(e[2], e[3])
    } else {
        count3(d) + idx3(e[2], e[3])
    }
}

fn free_exponents(d: u32) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(((d + 1) * (d + 1)) as usize);
    for s in 0..=1u32.min(d) {
        let r = d - s;
        for a in (0..=r).rev() {
            for b in (0..=r - a).rev() {
                out.push([s, a, b, r - a - b]);
            }
        }
    }
    out
}

/// `S[r][α]` = coefficient of the `r`-th seed monomial in
/// `Σ_{nr(m)=N} (m x)^α`, for every degree-`n` monomial `α`.
///
/// Only the part of each power with `x1`-degree at most one is needed to
/// read off harmonic coordinates, so products are truncated modulo `x1^2`.
#[derive(Debug, Clone)]
pub struct SubstitutionSums {
    pub n: u32,
    pub big_n: u64,
    pub rows: usize,
    /// Column-major: `cols[α]` has `rows` entries.
    pub cols: Vec<Vec<i128>>,
}

fn log2_bound(n: u32, big_n: u64, count: usize) -> f64 {
    (count.max(1) as f64).log2() + n as f64 * (2.0 * (big_n as f64).sqrt() + 1.0).log2()
}

fn truncated_powers(n: u32, m: &Quaternion) -> Vec<Vec<i128>> {
    let l = m.left_mul_matrix();
    let mut layer: Vec<Vec<i128>> = vec![vec![1]];
    let mut layer_index: HashMap<Exponent, usize> = HashMap::from([([0u32; 4], 0usize)]);
    for d in 1..=n {
        let parents = free_exponents(d - 1);
        let mons = monomials(d);
        let size = ((d + 1) * (d + 1)) as usize;
        let mut next = Vec::with_capacity(mons.len());
        for alpha in &mons {
            let s = alpha.iter().position(|&a| a > 0).expect("positive degree");
            let mut parent = *alpha;
            parent[s] -= 1;
            let src = &layer[layer_index[&parent]];
            let mut dst = vec![0i128; size];
            for (pi, pe) in parents.iter().enumerate() {
                let v = src[pi];
                if v == 0 {
                    continue;
                }
                for (t, &coef) in l[s].iter().enumerate() {
                    if coef == 0 || (t == 0 && pe[0] == 1) {
                        continue;
                    }
                    let mut e = *pe;
                    e[t] += 1;
                    dst[free_index(d, &e)] += v * coef as i128;
                }
            }
            next.push(dst);
        }
        layer_index = mons.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        layer = next;
    }
    layer
}

/// Sums of truncated substitutions over the norm-`N` shell.
pub fn substitution_sums(n: u32, big_n: u64) -> Result<SubstitutionSums> {
    if big_n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let shell = enumerate_shell(big_n, Parity::Integral);
    if log2_bound(n, big_n, shell.len()) > 125.0 {
        return Err(Error::Capacity("substitution sums exceed i128"));
    }
    let rows = ((n + 1) * (n + 1)) as usize;
    let ncols = monomials(n).len();
    let zero = || vec![vec![0i128; rows]; ncols];
    let cols = shell
        .elements
        .par_iter()
        .fold(zero, |mut acc, m| {
            for (a, p) in acc.iter_mut().zip(truncated_powers(n, m)) {
                for (x, y) in a.iter_mut().zip(p) {
                    *x += y;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
            }
            a
        });
    Ok(SubstitutionSums {
        n,
        big_n,
        rows,
        cols,
    })
}

/// Exact matrix of the unscaled operator `f -> Σ_{nr(m)=N} f(m x)`, which
/// equals `8 N^{n/2} T_N`, in the rational harmonic basis.
///
/// The matrix is `entries / denominator`; the denominator depends only on
/// `n`, so matrices of one degree combine by integer arithmetic. Column `i`
/// holds the coordinates of the image of basis element `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeckeMatrix {
    pub n: u32,
    pub big_n: u64,
    pub entries: IntMatrix,
    pub denominator: BigInt,
}

impl HeckeMatrix {
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    /// The factor `1/(8 N^{n/2})` turning the matrix into `T_N`, as
    /// `(numerator, denominator)`; requires even `n`.
    pub fn scale(&self) -> (BigInt, BigInt) {
        debug_assert!(self.n.is_multiple_of(2));
        (BigInt::one(), BigInt::from(8) * BigInt::from(self.big_n).pow(self.n / 2))
    }

    /// Floating `T_N` in the rational basis.
    pub fn to_f64_scaled(&self) -> Vec<f64> {
        let s = 8.0 * (self.big_n as f64).powf(self.n as f64 / 2.0);
        let d = crate::exact::big_to_f64(&self.denominator);
        self.entries
            .data()
            .iter()
            .map(|v| crate::exact::big_to_f64(v) / d / s)
            .collect()
    }
}

/// Integer-cleared basis columns: `b_i = ints_i / dens_i`.
struct ClearedBasis {
    columns: Vec<Vec<(usize, BigInt)>>,
    dens: Vec<BigInt>,
    common: BigInt,
}

fn clear_basis(hb: &HarmonicBasis) -> ClearedBasis {
    let table: HashMap<Exponent, usize> = monomials(hb.n)
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, i))
        .collect();
    let mut columns = Vec::with_capacity(hb.dim());
    let mut dens = Vec::with_capacity(hb.dim());
    for b in &hb.basis {
        let den = b
            .terms()
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        columns.push(
            b.terms()
                .iter()
                .map(|(e, c)| (table[e], c.numer() * (&den / c.denom())))
                .collect(),
        );
        dens.push(den);
    }
    let common = dens.iter().fold(BigInt::one(), |acc, d| acc.lcm(d));
    ClearedBasis {
        columns,
        dens,
        common,
    }
}

/// Exact unscaled Hecke matrix for any degree (used for odd `n` by the
/// `T_1` vanishing check).
pub fn unscaled_operator(hb: &HarmonicBasis, big_n: u64) -> Result<HeckeMatrix> {
    let sums = substitution_sums(hb.n, big_n)?;
    let cleared = clear_basis(hb);
    let dim = hb.dim();
    let cols: Vec<Vec<BigInt>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![BigInt::zero(); dim];
            for (alpha, c) in &cleared.columns[i] {
                for (dst, s) in acc.iter_mut().zip(&sums.cols[*alpha]) {
                    if *s != 0 {
                        *dst += c * BigInt::from(*s);
                    }
                }
            }
            let factor = &cleared.common / &cleared.dens[i];
            acc.into_iter().map(|v| v * &factor).collect()
        })
        .collect();
    let mut entries = IntMatrix::zeros(dim, dim);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            entries[(i, j)] = v;
        }
    }
    Ok(HeckeMatrix {
        n: hb.n,
        big_n,
        entries,
        denominator: cleared.common,
    })
}

/// Exact matrix of `8 N^{n/2} T_N` for even `n`.
pub fn hecke_matrix(hb: &HarmonicBasis, big_n: u64) -> Result<HeckeMatrix> {
    if hb.n % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "Hecke matrices are built for even degree only (got n = {})",
            hb.n
        )));
    }
    unscaled_operator(hb, big_n)
}

/// Same as [`hecke_matrix`] but via full polynomial substitution and a
/// checked coordinate solve; slow, used to cross-check the truncated route.
pub fn hecke_matrix_by_substitution(hb: &HarmonicBasis, big_n: u64) -> Result<HeckeMatrix> {
    let shell = enumerate_shell(big_n, Parity::Integral);
    let dim = hb.dim();
    let mut rat = crate::exact::RatMatrix::zeros(dim, dim);
    for (j, b) in hb.basis.iter().enumerate() {
        let mut image = crate::poly::Poly4::zero(hb.n);
        for m in shell.iter() {
            image = image.add(&b.substitute_left_mul(m)?);
        }
        let coords = hb.coordinates_checked(&image)?;
        for (i, c) in coords.into_iter().enumerate() {
            rat[(i, j)] = c;
        }
    }
    let cleared = clear_basis(hb);
    let mut entries = IntMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = &rat[(i, j)] * num_rational::BigRational::from_integer(cleared.common.clone());
            if !v.is_integer() {
                return Err(Error::Rank("coordinate denominator exceeds the basis denominator".into()));
            }
            entries[(i, j)] = v.to_integer();
        }
    }
    Ok(HeckeMatrix {
        n: hb.n,
        big_n,
        entries,
        denominator: cleared.common,
    })
}

/// `T_N` in the orthonormal basis `ψ`, as a dense row-major matrix.
///
/// Column `j` is `L^T S Ψ_j / (8 N^{n/2})`, where `Ψ_j` are the monomial
/// coefficients of `ψ_j` and `G = L L^T`.
pub fn orthonormal_operator(ob: &OrthonormalBasis, big_n: u64) -> Result<Vec<f64>> {
    let sums = substitution_sums(ob.n, big_n)?;
    let dim = ob.dim();
    let scale = 1.0 / (8.0 * (big_n as f64).powf(ob.n as f64 / 2.0));
    let cols_f64: Vec<Vec<f64>> = sums
        .cols
        .iter()
        .map(|c| c.iter().map(|&v| v as f64).collect())
        .collect();
    let images: Vec<Vec<f64>> = ob
        .polys
        .par_iter()
        .map(|p| {
            let mut coords = vec![0.0; dim];
            for &(alpha, c) in &p.terms {
                for (dst, s) in coords.iter_mut().zip(&cols_f64[alpha]) {
                    *dst += c * s;
                }
            }
            // w = L^T c
            (0..dim)
                .map(|r| {
                    (r..dim)
                        .map(|k| ob.chol[k * dim + r] * coords[k])
                        .sum::<f64>()
                        * scale
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; dim * dim];
    for (j, col) in images.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[i * dim + j] = *v;
        }
    }
    Ok(out)
}

/// Outcome of one exact identity.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct IdentityCheck {
    pub identity: String,
    pub passed: bool,
}

/// Results of [`hecke_relations_check`].
#[derive(Debug, Clone, Serialize)]
pub struct RelationsReport {
    pub n: u32,
    pub primes: Vec<u64>,
    pub alpha_max: u32,
    pub checks: Vec<IdentityCheck>,
}

impl RelationsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Verifies multiplicativity, the prime-power recursion, commutativity and
/// `T_1` idempotency as exact integer matrix identities.
pub fn hecke_relations_check(hb: &HarmonicBasis, primes: &[u64], alpha_max: u32) -> Result<RelationsReport> {
    if hb.n % 2 == 1 {
        return Err(Error::InvalidArgument("relations are checked for even n".into()));
    }
    for &p in primes {
        if p % 2 == 0 || !is_prime(p) {
            return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
        }
    }
    let alpha_max = alpha_max.max(1);
    let mut needed: Vec<u64> = vec![1];
    for &p in primes {
        for a in 1..=alpha_max {
            needed.push(p.pow(a));
        }
    }
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i + 1..] {
            needed.push(p * q);
        }
    }
    needed.sort_unstable();
    needed.dedup();
    let mats: BTreeMap<u64, HeckeMatrix> = needed
        .iter()
        .map(|&big_n| hecke_matrix(hb, big_n).map(|m| (big_n, m)))
        .collect::<Result<_>>()?;
    let e = |k: u64| &mats[&k].entries;
    let den = mats[&1].denominator.clone();
    let eight = BigInt::from(8);
    let eight_d = &eight * &den;
    let mut checks = Vec::new();

    // T_1 is a projection: A_1^2 = 8 A_1
    checks.push(IdentityCheck {
        identity: "T1*T1 = T1".into(),
        passed: e(1).mul(e(1)) == e(1).scale(&eight_d),
    });
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i + 1..] {
            checks.push(IdentityCheck {
                identity: format!("T{p}*T{q} = T{}", p * q),
                passed: e(p).mul(e(q)) == e(p * q).scale(&eight_d),
            });
        }
    }
    for &p in primes {
        let pn1 = BigInt::from(p).pow(hb.n + 1);
        for a in 1..alpha_max {
            let (lo, mid, hi) = (p.pow(a - 1), p.pow(a), p.pow(a + 1));
            let lhs = e(hi).scale(&eight_d).add(&e(lo).scale(&(&eight_d * &pn1)));
            checks.push(IdentityCheck {
                identity: format!("T{hi} = T{mid}*T{p} - {p}*T{lo}"),
                passed: lhs == e(mid).mul(e(p)),
            });
        }
    }
    let keys: Vec<u64> = mats.keys().copied().collect();
    for (i, &a) in keys.iter().enumerate() {
        for &b in &keys[i + 1..] {
            checks.push(IdentityCheck {
                identity: format!("[T{a}, T{b}] = 0"),
                passed: e(a).mul(e(b)) == e(b).mul(e(a)),
            });
        }
    }
    let (g, _) = hb.gram.to_int_with_denominator();
    for &k in &keys {
        checks.push(IdentityCheck {
            identity: format!("T{k} self-adjoint"),
            passed: selfadjoint_with(&g, e(k)),
        });
    }
    Ok(RelationsReport {
        n: hb.n,
        primes: primes.to_vec(),
        alpha_max,
        checks,
    })
}

fn selfadjoint_with(gram_int: &IntMatrix, a: &IntMatrix) -> bool {
    gram_int.mul(a) == a.transpose().mul(gram_int)
}

/// Exact test `G A = A^T G` of self-adjointness of `T_N`.
pub fn selfadjoint_check(hb: &HarmonicBasis, big_n: u64) -> Result<bool> {
    let a = hecke_matrix(hb, big_n)?;
    let (g, _) = hb.gram.to_int_with_denominator();
    Ok(selfadjoint_with(&g, &a.entries))
}

/// For odd `n`, whether the exact `T_1` matrix vanishes.
pub fn t1_vanishing(hb: &HarmonicBasis) -> Result<bool> {
    if hb.n.is_multiple_of(2) {
        return Err(Error::InvalidArgument("t1_vanishing expects odd n".into()));
    }
    Ok(unscaled_operator(hb, 1)?.entries.is_zero())
}
