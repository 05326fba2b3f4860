use std::f64::consts::LN_2;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::generators::ConcaveGenerator;
use crate::norms::{Profile, SpaceSpec};
use crate::special::{erfc, LnFactorial};
use crate::stepfn::StepFunction;

/// Largest `n` accepted by the exact Rademacher path.
pub const MAX_EXACT_N: u64 = 1 << 20;

/// Rearrangement of `|W_n|`, with masses in log space.
pub fn rademacher_sum_profile(n: u64) -> Result<Profile> {
    if n < 1 || n > MAX_EXACT_N {
        return Err(Error::invalid(format!("n = {n} outside [1, {MAX_EXACT_N}]")));
    }
    let n = n as usize;
    let lf = LnFactorial::new(n);
    let ln_half_n = n as f64 * LN_2;
    Profile::from_ln_masses((0..=n).map(|j| {
        let w = n as f64 - 2.0 * j as f64;
        (w, lf.ln_binomial(n, j) - ln_half_n)
    }))
}

/// Exact norm of `r_1 + ... + r_n` in `space`.
pub fn rademacher_sum_norm(n: u64, space: &SpaceSpec) -> Result<f64> {
    space.profile_norm(&rademacher_sum_profile(n)?)
}

/// Half-width of the lattice carrying one summand, in units of `x`.
const GAUSS_RANGE: f64 = 10.0;

/// Smallest lattice accepted by [`gaussian_selfsimilarity_check`].
pub const MIN_GAUSS_GRID: usize = 1 << 10;

/// Cell masses of `X ~ N(0, 1/2)` on the lattice `h·{-J..=J}`; the mass
/// beyond the last cell is folded into it.
fn gauss_lattice(grid_size: usize) -> (f64, Vec<f64>) {
    let j_max = (grid_size - 1) / 2;
    let h = GAUSS_RANGE / j_max as f64;
    // P(X > x) = erfc(x)/2
    let upper: Vec<f64> = (0..=j_max).map(|j| 0.5 * erfc((j as f64 + 0.5) * h)).collect();
    let mut half = Vec::with_capacity(j_max + 1);
    half.push(1.0 - 2.0 * upper[0]);
    for j in 1..=j_max {
        let next = if j == j_max { 0.0 } else { upper[j] };
        half.push(upper[j - 1] - next);
    }
    let mut cells = Vec::with_capacity(2 * j_max + 1);
    cells.extend(half[1..].iter().rev());
    cells.extend(&half);
    (h, cells)
}

/// Rearrangement of `|Σ|` for a symmetric lattice law centred at index `mid`.
fn lattice_profile(h: f64, cells: &[f64], mid: usize) -> Result<Profile> {
    Profile::from_ln_masses(
        cells
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| ((i as f64 - mid as f64) * h, p.ln())),
    )
}

/// `‖X_1 + ... + X_n‖ / ‖X_1‖` in `M(ψ)`, `ψ` the Gaussian generator, where
/// `|X|` has quantile function `G` (so `X ~ N(0, 1/2)`).
///
/// One summand is put on a lattice of `grid_size` cells; the sum's law is
/// the `n`-fold convolution, computed as `n - 1` products of the discrete
/// Fourier transform. Masses below `1e-13` are treated as transform noise.
pub fn gaussian_selfsimilarity_check(n: u32, grid_size: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if grid_size < MIN_GAUSS_GRID {
        return Err(Error::invalid(format!(
            "grid of {grid_size} cells is too coarse: cell width {:.3e} must not exceed {:.3e} (>= {MIN_GAUSS_GRID} cells)",
            2.0 * GAUSS_RANGE / grid_size as f64,
            2.0 * GAUSS_RANGE / MIN_GAUSS_GRID as f64
        )));
    }
    let space = SpaceSpec::Marcinkiewicz(ConcaveGenerator::Gauss);
    let (h, cells) = gauss_lattice(grid_size);
    let j_max = (cells.len() - 1) / 2;
    let single = space.profile_norm(&lattice_profile(h, &cells, j_max)?)?;
    if n == 1 {
        return Ok(1.0);
    }
    let n = n as usize;
    let len = (n * (cells.len() - 1) + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut base: Vec<Complex64> = cells.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    base.resize(len, Complex64::new(0.0, 0.0));
    forward.process(&mut base);
    let mut acc = base.clone();
    for _ in 1..n {
        for (a, b) in acc.iter_mut().zip(&base) {
            *a *= b;
        }
    }
    inverse.process(&mut acc);
    let sum_cells: Vec<f64> = acc
        .iter()
        .map(|c| c.re / len as f64)
        .map(|p| if p < 1e-13 { 0.0 } else { p })
        .collect();
    let total: f64 = sum_cells.iter().sum();
    let sum_cells: Vec<f64> = sum_cells.iter().map(|p| p / total).collect();
    let sum = space.profile_norm(&lattice_profile(h, &sum_cells, n * j_max)?)?;
    Ok(sum / single)
}

/// Norm of `Σ blocks`, blocks having pairwise disjoint supports.
pub fn disjoint_sum_norm(blocks: &[StepFunction<f64>], space: &SpaceSpec) -> Result<f64> {
    let supports: Vec<Vec<(f64, f64)>> = blocks.iter().map(|b| b.support_intervals()).collect();
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            for &(a, b) in &supports[i] {
                for &(c, d) in &supports[j] {
                    if a.max(c) < b.min(d) {
                        return Err(Error::OverlappingSupports(i, j));
                    }
                }
            }
        }
    }
    let Some(first) = blocks.first() else {
        return Ok(0.0);
    };
    let sum = blocks[1..].iter().fold(first.clone(), |acc, b| acc.add(b));
    space.norm(&sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::walks::{expectation_abs, walk_distribution};

    fn space(s: &str) -> SpaceSpec {
        SpaceSpec::from_dsl(s).unwrap()
    }

    #[test]
    fn small_rademacher_sums() {
        assert!((rademacher_sum_norm(1, &space("marcinkiewicz:logpow:2")).unwrap() - 1.0).abs() < 1e-15);
        assert!((rademacher_sum_norm(1, &space("lorentz:power:1")).unwrap() - 1.0).abs() < 1e-15);
        for n in [2u32, 7, 64] {
            let exact = Scalar::to_f64(&expectation_abs(&walk_distribution::<crate::scalar::Rational>(n)));
            let v = rademacher_sum_norm(n as u64, &space("lorentz:power:1")).unwrap();
            assert!((v - exact).abs() < 1e-12, "n={n}");
        }
        assert!(rademacher_sum_norm(0, &space("lorentz:power:1")).is_err());
        assert!(rademacher_sum_norm(MAX_EXACT_N + 1, &space("lorentz:power:1")).is_err());
    }

    /// The profile path agrees with the step-function path where both apply.
    #[test]
    fn profile_matches_step_function() {
        for n in [3u32, 10, 30] {
            let f = walk_distribution::<f64>(n).abs_rearranged();
            for s in ["lorentz:power:0.5", "marcinkiewicz:logpow:2", "orlicz:Np:2", "lpq:1.5:1.2"] {
                let a = space(s).norm(&f).unwrap();
                let b = rademacher_sum_norm(n as u64, &space(s)).unwrap();
                assert!((a / b - 1.0).abs() < 1e-12, "{s}, n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lattice_is_a_probability_law() {
        let (h, cells) = gauss_lattice(1 << 12);
        let total: f64 = cells.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let var: f64 = cells.iter().enumerate().map(|(i, p)| ((i as f64 - 2047.0) * h).powi(2) * p).sum();
        assert!((var - 0.5 - h * h / 12.0).abs() < 1e-9, "{var}");
    }

    #[test]
    fn gaussian_check_small_cases() {
        assert_eq!(gaussian_selfsimilarity_check(1, 1 << 12).unwrap(), 1.0);
        let r = gaussian_selfsimilarity_check(4, 1 << 12).unwrap();
        assert!((r - 2.0).abs() < 0.01, "{r}");
        assert!(gaussian_selfsimilarity_check(2, 100).is_err());
    }

    #[test]
    fn disjoint_sums() {
        let (p, q) = (2.0, 1.5);
        let lpq = SpaceSpec::lpq(p, q).unwrap();
        for n in [1usize, 4, 16] {
            let w = 1.0 / n as f64;
            let blocks: Vec<StepFunction<f64>> = (0..n)
                .map(|k| {
                    let (lo, hi) = (k as f64 * w, (k + 1) as f64 * w);
                    let (mut bps, mut vals) = (vec![0.0], vec![]);
                    if lo > 0.0 {
                        bps.push(lo);
                        vals.push(0.0);
                    }
                    bps.push(hi);
                    vals.push(1.0);
                    if k + 1 < n {
                        bps.push(1.0);
                        vals.push(0.0);
                    }
                    let b = StepFunction::new(bps, vals).unwrap();
                    let norm = lpq.norm(&b).unwrap();
                    b.scale(&(1.0 / norm)).unwrap()
                })
                .collect();
            let v = disjoint_sum_norm(&blocks, &lpq).unwrap();
            assert!((v - (n as f64).powf(1.0 / p)).abs() < 1e-12, "n={n}: {v}");
        }
        let psi = ConcaveGenerator::power(0.5).unwrap();
        let a = StepFunction::new(vec![0.0, 0.1, 1.0], vec![1.0, 0.0]).unwrap();
        let b = StepFunction::new(vec![0.0, 0.5, 0.8, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let v = disjoint_sum_norm(&[a.clone(), b.clone()], &SpaceSpec::Lorentz(psi.clone())).unwrap();
        assert!((v - psi.eval(0.4)).abs() < 1e-15);
        let single = disjoint_sum_norm(std::slice::from_ref(&a), &SpaceSpec::Lorentz(psi.clone())).unwrap();
        assert!((single - psi.eval(0.1)).abs() < 1e-15);
        let c = StepFunction::new(vec![0.0, 0.05, 1.0], vec![2.0, 0.0]).unwrap();
        match disjoint_sum_norm(&[a, b, c], &SpaceSpec::Lorentz(psi)) {
            Err(Error::OverlappingSupports(0, 2)) => {}
            other => panic!("{other:?}"),
        }
    }
}
