//! Fourth-moment statistics of Hecke-Laplace eigenforms over a point grid,
//! and power-law fits in the degree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hecke::SpectralDecomposition;
use crate::gon::loglog_fit;

/// Coordinate-ascent steps applied from the best grid point of each statistic.
pub const REFINE_STEPS: usize = 20;

/// `n` points drawn uniformly on `S^3` as normalized Gaussian vectors.
pub fn gaussian_grid(size: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            out.push(v.map(|x| x / r));
        }
    }
    out
}

/// The statistics at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointStats {
    /// `Σ_{λ(1)=1} (Σ_{φ_j ∈ V_λ} |φ_j(x)|^2)^2`
    pub family: f64,
    /// `Σ'_j |φ_j(x)|^4` over forms with `T_1 φ = φ`
    pub fourth: f64,
    /// `max_j |φ_j(x)|`
    pub individual: f64,
    /// `Σ_j |φ_j(x)|^2` over all forms
    pub total: f64,
    /// `Σ_λ Σ_j |φ_j(x)|^2` restricted to `λ(1) = 1`
    pub family_mass: f64,
}

pub fn point_stats(dec: &SpectralDecomposition, x: &[f64; 4]) -> PointStats {
    let values = dec.eval_eigenforms(x);
    let mut s = PointStats {
        family: 0.0,
        fourth: 0.0,
        individual: 0.0,
        total: 0.0,
        family_mass: 0.0,
    };
    let mut offset = 0;
    for space in &dec.spaces {
        let block = &values[offset..offset + space.dim()];
        offset += space.dim();
        let mass: f64 = block.iter().map(|v| v * v).sum();
        s.total += mass;
        s.individual = block.iter().fold(s.individual, |m, v| m.max(v.abs()));
        if space.t1_flag == 1 {
            s.family += mass * mass;
            s.family_mass += mass;
            s.fourth += block.iter().map(|v| v.powi(4)).sum::<f64>();
        }
    }
    s
}

/// A sup estimate: grid value, refined value and where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupEstimate {
    pub grid_value: f64,
    pub value: f64,
    pub point: [f64; 4],
    /// `value - grid_value`
    pub refinement_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: u32,
    pub grid_size: usize,
    pub grid: String,
    pub seed: u64,
    pub family_count: usize,
    pub sup_family: SupEstimate,
    pub sup_fourth: SupEstimate,
    pub sup_individual: SupEstimate,
    /// `max_x |Σ_j |φ_j(x)|^2 - (n+1)^2| / (n+1)^2` over the grid.
    pub closure_max_error: f64,
    /// `Σ'_j |φ_j|^4 <= Σ_λ (Σ_j |φ_j|^2)^2` held at every grid point.
    pub pointwise_ok: bool,
    /// `(Σ_{λ(1)=1} Σ_j |φ_j(x)|^2)^2 / #families` at the family argmax.
    pub cauchy_schwarz_floor: f64,
}

impl MomentReport {
    pub fn stat(&self, name: &str) -> Option<f64> {
        match name {
            "sup_family" => Some(self.sup_family.value),
            "sup_fourth" => Some(self.sup_fourth.value),
            "sup_individual" => Some(self.sup_individual.value),
            _ => None,
        }
    }
}

fn normalize(v: [f64; 4]) -> [f64; 4] {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / r)
}

/// Coordinate ascent on `S^3`: try `x ± δ e_i`, renormalized, take the best
/// improvement, halve `δ` when none improves.
fn refine<F: Fn(&[f64; 4]) -> f64>(f: F, start: [f64; 4], start_value: f64) -> ([f64; 4], f64) {
    let (mut x, mut best) = (start, start_value);
    let mut delta = 0.05;
    for _ in 0..REFINE_STEPS {
        let mut step = None;
        for i in 0..4 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[i] += sign * delta;
                let y = normalize(y);
                let v = f(&y);
                if v > step.map_or(best, |(_, b)| b) {
                    step = Some((y, v));
                }
            }
        }
        match step {
            Some((y, v)) => {
                x = y;
                best = v;
            }
            None => delta *= 0.5,
        }
    }
    (x, best)
}

fn sup_over<F: Fn(&PointStats) -> f64>(
    dec: &SpectralDecomposition,
    grid: &[[f64; 4]],
    stats: &[PointStats],
    pick: F,
) -> SupEstimate {
    // first index attaining the max, so ties resolve deterministically
    let (i, grid_value) = stats
        .iter()
        .map(&pick)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let (point, value) = refine(|y| pick(&point_stats(dec, y)), grid[i], grid_value);
    SupEstimate {
        grid_value,
        value,
        point,
        refinement_delta: value - grid_value,
    }
}

/// Evaluates every eigenform of `dec` on `grid` and reports the three sups.
pub fn moment_sweep(dec: &SpectralDecomposition, grid: &[[f64; 4]], seed: u64) -> Result<MomentReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let n = dec.n;
    let stats: Vec<PointStats> = grid.par_iter().map(|x| point_stats(dec, x)).collect();
    let full = ((n + 1) as f64).powi(2);
    let closure_max_error = stats
        .iter()
        .map(|s| (s.total - full).abs() / full)
        .fold(0.0, f64::max);
    let pointwise_ok = stats.iter().all(|s| s.fourth <= s.family * (1.0 + 1e-12));
    let sup_family = sup_over(dec, grid, &stats, |s| s.family);
    let sup_fourth = sup_over(dec, grid, &stats, |s| s.fourth);
    let sup_individual = sup_over(dec, grid, &stats, |s| s.individual);
    let family_count = dec.family_count();
    let at = point_stats(dec, &sup_family.point);
    Ok(MomentReport {
        n,
        grid_size: grid.len(),
        grid: "normalized Gaussian (ChaCha8)".into(),
        seed,
        family_count,
        sup_family,
        sup_fourth,
        sup_individual,
        closure_max_error,
        pointwise_ok,
        cauchy_schwarz_floor: at.family_mass.powi(2) / family_count.max(1) as f64,
    })
}

/// Least-squares fit of `ln sup` against `ln n` for one statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFit {
    pub stat: String,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub const STATS: [&str; 3] = ["sup_family", "sup_fourth", "sup_individual"];

/// Fits each statistic over the reports where it is positive; a statistic
/// that vanishes (no form with `T_1 φ = φ`, as at `n = 2`) has no logarithm.
pub fn growth_fit(reports: &[MomentReport]) -> Result<Vec<PowerFit>> {
    STATS
        .iter()
        .map(|&stat| {
            let mut pts: Vec<(f64, f64)> = reports
                .iter()
                .map(|r| (r.n as f64, r.stat(stat).expect("known stat")))
                .filter(|&(n, v)| n > 0.0 && v > 0.0)
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
            distinct.dedup();
            if distinct.len() < 4 {
                return Err(Error::InsufficientData(format!(
                    "{stat}: growth fit needs at least 4 distinct n with a positive value, got {distinct:?}"
                )));
            }
            let (slope, intercept) = loglog_fit(&pts);
            let residuals = pts
                .iter()
                .map(|(x, y)| y.ln() - (intercept + slope * x.ln()))
                .collect();
            Ok(PowerFit {
                stat: stat.to_string(),
                slope,
                intercept,
                residuals,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::joint_eigenspaces;
    use crate::poly::{harmonic_basis, Precision};

    fn decomposition(n: u32) -> SpectralDecomposition {
        joint_eigenspaces(&harmonic_basis(n), &[3, 5], &[], 1, Precision::Double).unwrap()
    }

    fn synthetic(n: u32, v: f64) -> MomentReport {
        let e = SupEstimate {
            grid_value: v,
            value: v,
            point: [1.0, 0.0, 0.0, 0.0],
            refinement_delta: 0.0,
        };
        MomentReport {
            n,
            grid_size: 1,
            grid: String::new(),
            seed: 0,
            family_count: 1,
            sup_family: e.clone(),
            sup_fourth: e.clone(),
            sup_individual: e,
            closure_max_error: 0.0,
            pointwise_ok: true,
            cauchy_schwarz_floor: 0.0,
        }
    }

    #[test]
    fn degree_zero() {
        let dec = decomposition(0);
        let r = moment_sweep(&dec, &gaussian_grid(50, 3), 3).unwrap();
        assert!((r.sup_family.value - 1.0).abs() < 1e-12);
        assert!((r.sup_fourth.value - 1.0).abs() < 1e-12);
        assert!(r.closure_max_error < 1e-12);
    }

    #[test]
    fn closure_and_ordering() {
        for n in [2u32, 4, 6] {
            let dec = decomposition(n);
            let r = moment_sweep(&dec, &gaussian_grid(300, 11), 11).unwrap();
            assert!(r.closure_max_error < 1e-10, "n={n}: {}", r.closure_max_error);
            assert!(r.pointwise_ok);
            assert!(r.sup_fourth.value <= r.sup_family.value * (1.0 + 1e-12));
            assert!(r.sup_family.value >= r.cauchy_schwarz_floor * (1.0 - 1e-12));
            for s in [&r.sup_family, &r.sup_fourth, &r.sup_individual] {
                assert!(s.refinement_delta >= 0.0);
            }
        }
    }

    fn rel_diff(a: f64, b: f64) -> f64 {
        if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
    }

    #[test]
    fn grid_refinement_agrees() {
        for n in [2u32, 4] {
            let dec = decomposition(n);
            let coarse = moment_sweep(&dec, &gaussian_grid(5000, 1), 1).unwrap();
            let fine = moment_sweep(&dec, &gaussian_grid(50000, 2), 2).unwrap();
            for s in STATS {
                let rel = rel_diff(coarse.stat(s).unwrap(), fine.stat(s).unwrap());
                assert!(rel < 0.02, "n={n} {s}: {rel}");
            }
        }
    }

    #[test]
    fn no_invariant_forms_at_degree_two() {
        let dec = decomposition(2);
        assert_eq!(dec.family_count(), 0);
        let r = moment_sweep(&dec, &gaussian_grid(20, 1), 1).unwrap();
        assert_eq!(r.sup_family.value, 0.0);
        assert!(r.sup_individual.value > 0.0);
    }

    #[test]
    fn deterministic() {
        let dec = decomposition(4);
        let a = moment_sweep(&dec, &gaussian_grid(200, 5), 5).unwrap();
        let b = moment_sweep(&dec, &gaussian_grid(200, 5), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_fits() {
        let cubic: Vec<_> = [2u32, 4, 8, 16].iter().map(|&n| synthetic(n, (n as f64).powi(3))).collect();
        let fit = growth_fit(&cubic).unwrap();
        assert!((fit[0].slope - 3.0).abs() < 1e-9);
        let flat: Vec<_> = [2u32, 4, 8, 16].iter().map(|&n| synthetic(n, 7.0)).collect();
        assert!(growth_fit(&flat).unwrap()[1].slope.abs() < 1e-12);
        assert!(matches!(growth_fit(&cubic[..3]), Err(Error::InsufficientData(_))));
        let mut with_zero = cubic.clone();
        with_zero.push(synthetic(32, 0.0));
        assert!((growth_fit(&with_zero).unwrap()[0].slope - 3.0).abs() < 1e-9);
    }
}
