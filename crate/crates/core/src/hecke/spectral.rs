use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{is_prime, orthonormal_operator};
use crate::error::{Error, Result};
use crate::poly::{HarmonicBasis, OrthonormalBasis, Precision};

/// Eigenvalues closer than this (relative to `max(1, |λ|)`) are identified.
pub const GROUP_TOLERANCE: f64 = 1e-7;
/// Residuals must stay below this fraction of `max(1, ‖T‖_F)`; some
/// operators vanish identically in low degree.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// One joint eigenspace `V_λ`.
#[derive(Debug, Clone)]
pub struct EigenSpace {
    /// Normalized eigenvalues `λ(N)` for `N` in the generating set.
    pub eigenvalues: BTreeMap<u64, f64>,
    /// Eigenvalue of `T_1`, rounded to 0 or 1.
    pub t1_flag: u8,
    /// Orthonormal eigenvectors in the whitened coordinates `ψ`.
    pub whitened: Vec<Vec<f64>>,
    /// The same eigenvectors as coefficient vectors in the rational basis.
    pub coefficients: Vec<Vec<f64>>,
    /// Per-vector eigenvalues of the extra operators.
    pub extra_eigenvalues: Vec<BTreeMap<u64, f64>>,
}

impl EigenSpace {
    pub fn dim(&self) -> usize {
        self.whitened.len()
    }
}

/// Joint eigenspace decomposition of the Hecke operators for one degree.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub n: u32,
    /// `1` together with the odd primes used.
    pub generators: Vec<u64>,
    pub extras: Vec<u64>,
    pub seed: u64,
    pub spaces: Vec<EigenSpace>,
    pub basis: OrthonormalBasis,
    /// Number of times a vector joined a non-adjacent space with an
    /// identical eigenvalue table.
    pub merges: usize,
    /// Largest residual `‖T v − λ v‖ / max(1, ‖T‖_F)` seen.
    pub max_residual: f64,
    /// Largest entry of `T - T^T` over the float operators used.
    pub max_asymmetry: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.spaces.iter().map(EigenSpace::dim).sum()
    }

    /// Eigenvalue of `T_N` on the `j`-th vector of space `s`.
    pub fn eigenvalue(&self, s: usize, j: usize, big_n: u64) -> Result<f64> {
        let space = &self.spaces[s];
        space
            .eigenvalues
            .get(&big_n)
            .or_else(|| space.extra_eigenvalues[j].get(&big_n))
            .copied()
            .ok_or(Error::MissingEigenvalue(big_n))
    }

    /// All eigenvalues of `T_N`, one per eigenform in the order of
    /// [`Self::eval_eigenforms`].
    pub fn eigenvalues_of(&self, big_n: u64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        for (s, space) in self.spaces.iter().enumerate() {
            for j in 0..space.dim() {
                out.push(self.eigenvalue(s, j, big_n)?);
            }
        }
        Ok(out)
    }

    pub fn t1_flags(&self) -> Vec<u8> {
        self.spaces
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.t1_flag, s.dim()))
            .collect()
    }

    /// Values `φ_j(x)` of every eigenform.
    pub fn eval_eigenforms(&self, x: &[f64; 4]) -> Vec<f64> {
        let psi = self.basis.eval_all(x);
        self.spaces
            .iter()
            .flat_map(|s| s.whitened.iter())
            .map(|w| w.iter().zip(&psi).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Number of spaces on which `T_1` acts as the identity.
    pub fn family_count(&self) -> usize {
        self.spaces.iter().filter(|s| s.t1_flag == 1).count()
    }

    pub fn export(&self) -> DecompositionExport {
        DecompositionExport {
            n: self.n,
            generators: self.generators.clone(),
            extras: self.extras.clone(),
            seed: self.seed,
            dim: self.dim(),
            merges: self.merges,
            max_residual: self.max_residual,
            spaces: self
                .spaces
                .iter()
                .map(|s| SpaceExport {
                    dim: s.dim(),
                    t1_flag: s.t1_flag,
                    eigenvalues: s.eigenvalues.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceExport {
    pub dim: usize,
    pub t1_flag: u8,
    pub eigenvalues: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionExport {
    pub n: u32,
    pub generators: Vec<u64>,
    pub extras: Vec<u64>,
    pub seed: u64,
    pub dim: usize,
    pub merges: usize,
    pub max_residual: f64,
    pub spaces: Vec<SpaceExport>,
}

fn to_matrix(dim: usize, data: &[f64]) -> (DMatrix<f64>, f64) {
    let m = DMatrix::from_row_slice(dim, dim, data);
    let asym = (&m - m.transpose()).amax();
    ((&m + m.transpose()) * 0.5, asym)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GROUP_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn residual(op: &DMatrix<f64>, v: &DVector<f64>, lambda: f64) -> f64 {
    (op * v - v * lambda).norm() / op.norm().max(1.0)
}

/// Splits the degree-`n` harmonics into joint eigenspaces of `T_1` and
/// `T_p`, `p` in `primes`, and attaches eigenvalues of `T_N` for each `N`
/// in `extras`.
///
/// A random integer combination of the generators (drawn from `seed`) is
/// diagonalized; every eigenvector is then checked against each generator.
pub fn joint_eigenspaces(
    hb: &HarmonicBasis,
    primes: &[u64],
    extras: &[u64],
    seed: u64,
    precision: Precision,
) -> Result<SpectralDecomposition> {
    let n = hb.n;
    if n % 2 == 1 {
        return Err(Error::InvalidArgument("joint eigenspaces need even n".into()));
    }
    if primes.is_empty() {
        return Err(Error::InvalidArgument("the prime set is empty".into()));
    }
    if let Some(p) = primes.iter().find(|&&p| p % 2 == 0 || !is_prime(p)) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    let mut generators = vec![1u64];
    generators.extend_from_slice(primes);
    generators.sort_unstable();
    generators.dedup();
    let mut extras: Vec<u64> = extras
        .iter()
        .copied()
        .filter(|e| !generators.contains(e))
        .collect();
    extras.sort_unstable();
    extras.dedup();
    if extras.contains(&0) {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }

    let basis = OrthonormalBasis::new(hb, precision)?;
    let dim = basis.dim();
    let mut max_asymmetry: f64 = 0.0;
    let mut load = |big_n: u64| -> Result<DMatrix<f64>> {
        let (m, asym) = to_matrix(dim, &orthonormal_operator(&basis, big_n)?);
        max_asymmetry = max_asymmetry.max(asym);
        Ok(m)
    };
    let gen_ops: Vec<DMatrix<f64>> = generators.iter().map(|&g| load(g)).collect::<Result<_>>()?;
    let extra_ops: Vec<DMatrix<f64>> = extras.iter().map(|&g| load(g)).collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut combo = DMatrix::<f64>::zeros(dim, dim);
    for op in &gen_ops {
        combo += op * (rng.random_range(1..=1000) as f64);
    }
    let eig = SymmetricEigen::new(combo);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut max_residual: f64 = 0.0;
    let mut groups: Vec<(Vec<f64>, Vec<DVector<f64>>)> = Vec::new();
    let mut merges = 0;
    for &i in &order {
        let v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let mut table = Vec::with_capacity(gen_ops.len());
        for op in &gen_ops {
            let lambda = v.dot(&(op * &v));
            let r = residual(op, &v, lambda);
            max_residual = max_residual.max(r);
            if r > RESIDUAL_TOLERANCE {
                return Err(Error::Degeneracy {
                    residual: r,
                    tolerance: RESIDUAL_TOLERANCE,
                });
            }
            table.push(lambda);
        }
        let matches = |t: &Vec<f64>| t.iter().zip(&table).all(|(a, b)| close(*a, *b));
        let last = groups.len().checked_sub(1);
        match groups.iter().position(|(t, _)| matches(t)) {
            Some(pos) => {
                if Some(pos) != last {
                    merges += 1;
                }
                groups[pos].1.push(v);
            }
            None => groups.push((table, vec![v])),
        }
    }

    let mut spaces = Vec::with_capacity(groups.len());
    for (_, vectors) in groups {
        let (vectors, extra_values) = refine(vectors, &extra_ops, &extras, &mut max_residual)?;
        let mut eigenvalues = BTreeMap::new();
        for (op, &g) in gen_ops.iter().zip(&generators) {
            let mean = vectors.iter().map(|v| v.dot(&(op * v))).sum::<f64>() / vectors.len() as f64;
            eigenvalues.insert(g, mean);
        }
        let t1 = eigenvalues[&1];
        let t1_flag = if (t1 - 1.0).abs() < 0.5 { 1 } else { 0 };
        if (t1 - t1_flag as f64).abs() > GROUP_TOLERANCE {
            return Err(Error::Degeneracy {
                residual: (t1 - t1_flag as f64).abs(),
                tolerance: GROUP_TOLERANCE,
            });
        }
        let coefficients = vectors
            .iter()
            .map(|w| {
                (0..dim)
                    .map(|i| (i..dim).map(|r| basis.chol_inv[r * dim + i] * w[r]).sum())
                    .collect()
            })
            .collect();
        spaces.push(EigenSpace {
            eigenvalues,
            t1_flag,
            whitened: vectors.iter().map(|v| v.iter().copied().collect()).collect(),
            coefficients,
            extra_eigenvalues: extra_values,
        });
    }

    Ok(SpectralDecomposition {
        n,
        generators,
        extras,
        seed,
        spaces,
        basis,
        merges,
        max_residual,
        max_asymmetry,
    })
}

type Refined = (Vec<DVector<f64>>, Vec<BTreeMap<u64, f64>>);

/// Diagonalizes each extra operator inside the span of `vectors`, keeping
/// previously separated eigenvalues apart.
fn refine(
    vectors: Vec<DVector<f64>>,
    ops: &[DMatrix<f64>],
    extras: &[u64],
    max_residual: &mut f64,
) -> Result<Refined> {
    let k = vectors.len();
    let mut values: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); k];
    if ops.is_empty() {
        return Ok((vectors, values));
    }
    let dim = vectors[0].len();
    let mut w = DMatrix::<f64>::zeros(dim, k);
    for (j, v) in vectors.iter().enumerate() {
        w.set_column(j, v);
    }
    let mut blocks: Vec<Vec<usize>> = vec![(0..k).collect()];
    for op in ops {
        let mut next_blocks = Vec::new();
        for block in blocks {
            let sub = w.select_columns(block.iter());
            let restricted = sub.transpose() * op * &sub;
            let restricted = (&restricted + restricted.transpose()) * 0.5;
            let eig = SymmetricEigen::new(restricted);
            let mut order: Vec<usize> = (0..block.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let rotated = &sub * &eig.eigenvectors;
            let mut current: Vec<usize> = Vec::new();
            let mut current_value = f64::NAN;
            for (slot, &o) in block.iter().zip(&order) {
                w.set_column(*slot, &rotated.column(o));
                let lambda = eig.eigenvalues[o];
                if current.is_empty() || close(lambda, current_value) {
                    if current.is_empty() {
                        current_value = lambda;
                    }
                    current.push(*slot);
                } else {
                    next_blocks.push(std::mem::take(&mut current));
                    current_value = lambda;
                    current.push(*slot);
                }
            }
            if !current.is_empty() {
                next_blocks.push(current);
            }
        }
        blocks = next_blocks;
    }
    let vectors: Vec<DVector<f64>> = (0..k).map(|j| w.column(j).into_owned()).collect();
    for (v, vals) in vectors.iter().zip(values.iter_mut()) {
        for (op, &big_n) in ops.iter().zip(extras) {
            let lambda = v.dot(&(op * v));
            let r = residual(op, v, lambda);
            *max_residual = max_residual.max(r);
            if r > RESIDUAL_TOLERANCE {
                return Err(Error::Degeneracy {
                    residual: r,
                    tolerance: RESIDUAL_TOLERANCE,
                });
            }
            vals.insert(big_n, lambda);
        }
    }
    Ok((vectors, values))
}

/// One sampled pair for the pre-trace identity.
#[derive(Debug, Clone, Serialize)]
pub struct PretracePair {
    pub x: [f64; 4],
    pub y: [f64; 4],
    /// `Σ_j φ_j(x) φ_j(y)`
    pub spectral: f64,
    /// `(n+1) U_n(<x, y>)`
    pub kernel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PretraceReport {
    pub n: u32,
    pub seed: u64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub pairs: Vec<PretracePair>,
}

impl PretraceReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Compares the eigenform expansion of the reproducing kernel with its
/// closed form at `pairs` random pairs of unit vectors; the tolerance is
/// `1e-8 (n+1)^2`.
pub fn pretrace_check(dec: &SpectralDecomposition, pairs: usize, seed: u64) -> Result<PretraceReport> {
    let n = dec.n;
    let pts = crate::moments::gaussian_grid(2 * pairs, seed);
    let pairs: Vec<PretracePair> = pts
        .chunks_exact(2)
        .map(|c| {
            let (x, y) = (c[0], c[1]);
            let fx = dec.eval_eigenforms(&x);
            let fy = dec.eval_eigenforms(&y);
            let spectral = fx.iter().zip(&fy).map(|(a, b)| a * b).sum();
            Ok(PretracePair {
                x,
                y,
                spectral,
                kernel: crate::zonal::pretrace_kernel(n, &x, &y)?,
            })
        })
        .collect::<Result<_>>()?;
    let max_residual = pairs
        .iter()
        .map(|p| (p.spectral - p.kernel).abs())
        .fold(0.0, f64::max);
    Ok(PretraceReport {
        n,
        seed,
        tolerance: 1e-8 * f64::from((n + 1) * (n + 1)),
        max_residual,
        pairs,
    })
}
