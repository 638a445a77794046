//! Geometry of numbers for the counting argument: cylinder classes `C(R)`,
//! shell and dyadic counts, the function `A(X)`, and successive minima of
//! convex bodies on lattices in `R^4`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quat::{enumerate_shell, isqrt, three_square_counts, Parity, Quaternion};

/// Exponent `ε` folded into the single-shell bound.
pub const EPSILON: f64 = 0.1;

/// Default cap on enumerated lattice points.
pub const POINT_BUDGET: u64 = 10_000_000;

/// `m ∈ C(R)`, i.e. `m2^2 + m3^2 + m4^2 <= nr(m) / R^2`, decided exactly.
pub fn in_cylinder_class(m: &Quaternion, r: u64) -> bool {
    let c = m.doubled().map(|v| v as i128);
    let imag = c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
    let total = imag + c[0] * c[0];
    imag * (r as i128) * (r as i128) <= total
}

fn check_dyadic(r: u64) -> Result<()> {
    if r == 0 || !r.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("R = {r} is not a power of two")));
    }
    Ok(())
}

/// One exact count with the right-hand side it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord {
    pub family: &'static str,
    /// `k` for single shells, `M` for dyadic ranges `(M, 2M]`.
    pub scale: u64,
    pub r: u64,
    pub parity: Parity,
    pub count: u64,
    /// The bound without its implicit constant.
    pub rhs: f64,
}

impl CountRecord {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.rhs
    }
}

/// `|{nr m = k, m ∈ C(R)}|` against `(1 + k^{1/2}/R + k/R^3) k^ε`.
pub fn shell_class_count(k: u64, r: u64) -> Result<CountRecord> {
    check_dyadic(r)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let count = shell_class_count_raw(k, r);
    let (kf, rf) = (k as f64, r as f64);
    Ok(CountRecord {
        family: "singlebound",
        scale: k,
        r,
        parity: Parity::Integral,
        count,
        rhs: (1.0 + kf.sqrt() / rf + kf / rf.powi(3)) * kf.powf(EPSILON),
    })
}

/// Counts by real coordinate: `m1^2 + s = k` with `s` the imaginary norm,
/// and `m ∈ C(R)` iff `s R^2 <= k`.
fn shell_class_count_raw(k: u64, r: u64) -> u64 {
    let r3 = three_square_counts(k);
    class_count_with(k, r, &r3)
}

fn class_count_with(k: u64, r: u64, r3: &[u64]) -> u64 {
    let b = isqrt(k) as i64;
    (-b..=b)
        .map(|m1| {
            let s = k - (m1 * m1) as u64;
            if (s as u128) * (r as u128) * (r as u128) <= k as u128 {
                r3[s as usize]
            } else {
                0
            }
        })
        .sum()
}

/// `|{M < nr m <= 2M, m ∈ C(R)}|` against `M^{1/2} + M^2/R^3`.
pub fn dyadic_class_count(m: u64, r: u64) -> Result<CountRecord> {
    check_dyadic(r)?;
    if m == 0 {
        return Err(Error::InvalidArgument("M must be positive".into()));
    }
    let r3 = three_square_counts(2 * m);
    let count = (m + 1..=2 * m).map(|k| class_count_with(k, r, &r3)).sum();
    let (mf, rf) = (m as f64, r as f64);
    Ok(CountRecord {
        family: "intbound",
        scale: m,
        r,
        parity: Parity::Integral,
        count,
        rhs: mf.sqrt() + mf * mf / rf.powi(3),
    })
}

/// The smallest constant `C` with `count <= C · rhs` on every record.
pub fn fit_constant(records: &[CountRecord]) -> f64 {
    records.iter().map(CountRecord::ratio).fold(0.0, f64::max)
}

/// Splits the norm-`k` shell into `D(R) = C(R) \ C(2R)` for `R = 1, 2, 4, ...`
/// up to the first `R` with `R^2 > k`; `axis` counts the points in every
/// `C(R)` (`m2 = m3 = m4 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicPartition {
    pub k: u64,
    pub classes: Vec<(u64, u64)>,
    pub axis: u64,
}

impl DyadicPartition {
    pub fn total(&self) -> u64 {
        self.classes.iter().map(|c| c.1).sum::<u64>() + self.axis
    }
}

pub fn dyadic_partition(k: u64) -> DyadicPartition {
    let mut classes = Vec::new();
    let mut axis = 0;
    for m in enumerate_shell(k, Parity::Integral).iter() {
        let c = m.doubled();
        if c[1] == 0 && c[2] == 0 && c[3] == 0 {
            axis += 1;
            continue;
        }
        // largest dyadic R with m ∈ C(R)
        let mut r = 1u64;
        while in_cylinder_class(m, 2 * r) {
            r *= 2;
        }
        match classes.iter_mut().find(|(rr, _)| *rr == r) {
            Some((_, n)) => *n += 1,
            None => classes.push((r, 1)),
        }
    }
    classes.sort_unstable();
    DyadicPartition { k, classes, axis }
}

/// Inner sum of `A`: `Σ_{nr m = k} min{n+1, sqrt(k / (m2^2+m3^2+m4^2))}`,
/// with the cap on the axis.
fn a_summand(n: u32, k: u64, r3: &[u64]) -> f64 {
    let cap = n as f64 + 1.0;
    let b = isqrt(k) as i64;
    (-b..=b)
        .map(|m1| {
            let s = k - (m1 * m1) as u64;
            let w = if s == 0 { cap } else { cap.min((k as f64 / s as f64).sqrt()) };
            r3[s as usize] as f64 * w
        })
        .sum::<f64>()
        .powi(2)
}

/// `A(X) = Σ_{k <= X} (Σ_{nr m = k} min{n+1, sqrt(nr m)/|Im m|})^2`.
pub fn a_of_x(n: u32, x: f64) -> Result<f64> {
    if x < 1.0 {
        return Err(Error::InvalidArgument("A(X) needs X >= 1".into()));
    }
    Ok(*a_series(n, x.floor() as u64).last().expect("X >= 1"))
}

/// `[A(1), A(2), ..., A(X)]`.
pub fn a_series(n: u32, x: u64) -> Vec<f64> {
    let r3 = three_square_counts(x);
    let terms: Vec<f64> = (1..=x).into_par_iter().map(|k| a_summand(n, k, &r3)).collect();
    terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect()
}

/// Least-squares line through `(ln x, ln y)`: `(slope, intercept)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `ln A(X)` against `ln X` over integer `X` in `[n/8, n]`.
pub fn a_growth_slope(n: u32) -> f64 {
    let lo = (n as u64 / 8).max(1);
    let series = a_series(n, n as u64);
    let pts: Vec<(f64, f64)> = (lo..=n as u64)
        .map(|x| (x as f64, series[x as usize - 1]))
        .collect();
    loglog_fit(&pts).0
}

/// A closed, convex, 0-symmetric body given by its gauge function.
pub trait ConvexBody: Sync {
    /// Smallest `t >= 0` with `v ∈ t K`.
    fn gauge(&self, v: &[f64; 4]) -> f64;
    fn volume(&self) -> f64;
    /// Half-widths of an axis-parallel box containing `K`.
    fn half_widths(&self) -> [f64; 4];
}

/// `m1^2 <= 2M` and `m2^2 + m3^2 + m4^2 <= 2M / R^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderSpec {
    pub m: f64,
    pub r: f64,
}

impl CylinderSpec {
    pub fn new(m: f64, r: f64) -> Result<Self> {
        if !(m > 0.0 && r >= 1.0) {
            return Err(Error::InvalidArgument(format!("cylinder needs M > 0, R >= 1 (got {m}, {r})")));
        }
        Ok(CylinderSpec { m, r })
    }

    fn radii(&self) -> (f64, f64) {
        let h = (2.0 * self.m).sqrt();
        (h, h / self.r)
    }
}

impl ConvexBody for CylinderSpec {
    fn gauge(&self, v: &[f64; 4]) -> f64 {
        let (h, rho) = self.radii();
        let imag = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
        (v[0].abs() / h).max(imag / rho)
    }

    fn volume(&self) -> f64 {
        let (h, rho) = self.radii();
        2.0 * h * 4.0 / 3.0 * PI * rho.powi(3)
    }

    fn half_widths(&self) -> [f64; 4] {
        let (h, rho) = self.radii();
        [h, rho, rho, rho]
    }
}

/// The cube `[-a, a]^4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cube {
    pub a: f64,
}

impl ConvexBody for Cube {
    fn gauge(&self, v: &[f64; 4]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs())) / self.a
    }

    fn volume(&self) -> f64 {
        (2.0 * self.a).powi(4)
    }

    fn half_widths(&self) -> [f64; 4] {
        [self.a; 4]
    }
}

/// Lattice `Z^4 B` with the rows of `B` as basis vectors.
pub type Basis = [[i64; 4]; 4];

fn det_exact(b: &Basis) -> BigInt {
    let rows: Vec<Vec<BigInt>> = b.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    bareiss_det(rows)
}

/// Fraction-free elimination; returns the determinant of a square matrix.
fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone() * sign
}

/// Exact rank of a set of integer vectors.
fn rank(vectors: &[[i64; 4]]) -> usize {
    let mut rows: Vec<Vec<BigInt>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut r = 0;
    for col in 0..4 {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(p, r);
        for i in r + 1..rows.len() {
            if rows[i][col].is_zero() {
                continue;
            }
            let (a, b) = (rows[r][col].clone(), rows[i][col].clone());
            for j in 0..4 {
                rows[i][j] = &rows[i][j] * &a - &rows[r][j] * &b;
            }
        }
        r += 1;
    }
    r
}

fn det3(m: [[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Adjugate `adj` with `B adj = det(B) I`.
fn adjugate(b: &Basis) -> [[i128; 4]; 4] {
    let mut adj = [[0i128; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let minor: [[i128; 3]; 3] = std::array::from_fn(|r| {
                let rr = if r < i { r } else { r + 1 };
                std::array::from_fn(|c| {
                    let cc = if c < j { c } else { c + 1 };
                    b[rr][cc] as i128
                })
            });
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = sign * det3(minor);
        }
    }
    adj
}

/// Lattice points `v` with `gauge(v) <= t`, as `(gauge, v)`, origin excluded.
/// Walks the integer box containing `t K` and keeps `v` with `v adj(B)`
/// divisible by `det(B)`.
fn points_within(b: &Basis, body: &dyn ConvexBody, t: f64, budget: u64) -> Result<Vec<(f64, [i64; 4])>> {
    let adj = adjugate(b);
    let det: i128 = (0..4).map(|j| b[0][j] as i128 * adj[j][0]).sum();
    if det == 0 {
        return Err(Error::InvalidArgument("singular lattice basis".into()));
    }
    let h = body.half_widths();
    let bounds: [i64; 4] = std::array::from_fn(|i| (t * h[i] * (1.0 + 1e-12)).floor() as i64);
    let boxed: u64 = bounds.iter().map(|&z| 2 * z as u64 + 1).product();
    if boxed > budget {
        return Err(Error::Budget { budget, found: 0 });
    }
    let member = |v: &[i64; 4]| (0..4).all(|j| (0..4).map(|i| v[i] as i128 * adj[i][j]).sum::<i128>() % det == 0);
    let b0 = bounds[0];
    let mut out: Vec<(f64, [i64; 4])> = (-b0..=b0)
        .into_par_iter()
        .flat_map_iter(|v0| {
            let mut local = Vec::new();
            for v1 in -bounds[1]..=bounds[1] {
                for v2 in -bounds[2]..=bounds[2] {
                    for v3 in -bounds[3]..=bounds[3] {
                        let v = [v0, v1, v2, v3];
                        if v == [0; 4] {
                            continue;
                        }
                        let g = body.gauge(&v.map(|x| x as f64));
                        if g <= t * (1.0 + 1e-12) && member(&v) {
                            local.push((g, v));
                        }
                    }
                }
            }
            local
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(out)
}

/// Successive minima `λ1 <= ... <= λ4` of `body` on the lattice with basis
/// rows `b`, with the vectors attaining them.
///
/// Enumerates the dilate `t K` for `t` doubling from the smallest basis
/// gauge and picks linearly independent points in order of gauge; the
/// greedy choice realizes every minimum reached within `t`.
pub fn successive_minima(b: &Basis, body: &dyn ConvexBody) -> Result<([f64; 4], [[i64; 4]; 4])> {
    successive_minima_with_budget(b, body, POINT_BUDGET)
}

pub fn successive_minima_with_budget(
    b: &Basis,
    body: &dyn ConvexBody,
    budget: u64,
) -> Result<([f64; 4], [[i64; 4]; 4])> {
    if det_exact(b).is_zero() {
        return Err(Error::InvalidArgument("singular lattice basis".into()));
    }
    let gauges: Vec<f64> = b.iter().map(|r| body.gauge(&r.map(|x| x as f64))).collect();
    let t_max = gauges.iter().copied().fold(0.0, f64::max);
    let mut t = gauges.iter().copied().fold(f64::INFINITY, f64::min);
    loop {
        let pts = points_within(b, body, t, budget)?;
        let mut chosen: Vec<[i64; 4]> = Vec::new();
        let mut minima = Vec::new();
        for (g, v) in &pts {
            let mut trial = chosen.clone();
            trial.push(*v);
            if rank(&trial) == trial.len() {
                chosen = trial;
                minima.push(*g);
                if chosen.len() == 4 {
                    break;
                }
            }
        }
        if chosen.len() == 4 {
            return Ok((
                [minima[0], minima[1], minima[2], minima[3]],
                [chosen[0], chosen[1], chosen[2], chosen[3]],
            ));
        }
        if t >= t_max {
            return Err(Error::Budget {
                budget,
                found: chosen.len(),
            });
        }
        t = (2.0 * t).min(t_max);
    }
}

/// `2^4/4! · covol <= λ1λ2λ3λ4 · vol(K) <= 2^4 · covol`.
#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiCheck {
    pub minima: [f64; 4],
    pub covolume: f64,
    pub volume: f64,
    /// `λ1λ2λ3λ4 vol(K) / covol`, which must lie in `[2/3, 16]`.
    pub normalized_product: f64,
    pub holds: bool,
}

pub fn minkowski_check(b: &Basis, body: &dyn ConvexBody) -> Result<MinkowskiCheck> {
    let (minima, _) = successive_minima(b, body)?;
    let covolume = crate::exact::big_to_f64(&det_exact(b).abs());
    let volume = body.volume();
    let normalized_product = minima.iter().product::<f64>() * volume / covolume;
    let tol = 1e-9;
    let holds = normalized_product >= 16.0 / 24.0 * (1.0 - tol) && normalized_product <= 16.0 * (1.0 + tol);
    Ok(MinkowskiCheck {
        minima,
        covolume,
        volume,
        normalized_product,
        holds,
    })
}

/// `|K ∩ Λ| <= Π (1 + 2i/λ_i)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProductBound {
    pub minima: [f64; 4],
    pub count: u64,
    pub bound: f64,
    pub holds: bool,
}

pub fn product_bound_check(b: &Basis, body: &dyn ConvexBody) -> Result<ProductBound> {
    let (minima, _) = successive_minima(b, body)?;
    // all points of K, plus the origin
    let count = points_within(b, body, 1.0, POINT_BUDGET)?.len() as u64 + 1;
    let bound: f64 = minima
        .iter()
        .enumerate()
        .map(|(i, l)| 1.0 + 2.0 * (i + 1) as f64 / l)
        .product();
    Ok(ProductBound {
        minima,
        count,
        bound,
        holds: count as f64 <= bound,
    })
}

/// A random lattice and cylinder for the geometry-of-numbers sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    pub basis: Basis,
    pub body: CylinderSpec,
}

/// `count` instances: bases with entries in `[-3, 3]` (singular draws are
/// rejected), cylinders with `M ∈ [1, 40]`, `R ∈ {1, 2, 4}`.
pub fn random_instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let basis = loop {
                let b: Basis = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-3..=3)));
                if !det_exact(&b).is_zero() {
                    break b;
                }
            };
            let m = rng.random_range(1..=40) as f64;
            let r = [1.0, 2.0, 4.0][rng.random_range(0..3)];
            Instance {
                basis,
                body: CylinderSpec { m, r },
            }
        })
        .collect()
}

/// Normalized products `λ1 M^{1/2}`, `λ1λ2 M/R`, `λ1λ2λ3 M^{3/2}/R^2` and
/// `λ1λ2λ3λ4 M^2/R^3` of the cylinder on `Z^4`; bounded below if the lower
/// bounds used for the dyadic count hold.
pub fn cylinder_minima_ratios(m: f64, r: f64) -> Result<[f64; 4]> {
    let body = CylinderSpec::new(m, r)?;
    let id: Basis = std::array::from_fn(|i| std::array::from_fn(|j| (i == j) as i64));
    let (l, _) = successive_minima(&id, &body)?;
    Ok([
        l[0] * m.sqrt(),
        l[0] * l[1] * m / r,
        l[0] * l[1] * l[2] * m.powf(1.5) / (r * r),
        l[0] * l[1] * l[2] * l[3] * m * m / r.powi(3),
    ])
}
