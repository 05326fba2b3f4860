use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `value ≈ C n^q` on log-log axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub pairs: Vec<(u64, f64)>,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Max relative deviation of `C n^q` from the value over the fitted range.
    pub residual: f64,
    pub burn_in: usize,
    /// Values decrease in `n` by more than the stated noise.
    pub degenerate: bool,
}

pub const DEFAULT_BURN_IN: usize = 2;

/// Fits `(q, C)` to `pairs[burn_in..]`. `noise` is the relative decrease
/// tolerated between consecutive values before the fit is flagged degenerate.
pub fn fit_growth(pairs: &[(u64, f64)], burn_in: usize, noise: f64) -> Result<GrowthFit> {
    if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("growth pairs must be strictly increasing in n"));
    }
    if let Some((n, v)) = pairs.iter().find(|(n, v)| *n == 0 || !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("cannot fit a power law through ({n}, {v})")));
    }
    let used = pairs.get(burn_in..).unwrap_or(&[]);
    if used.len() < 2 {
        return Err(Error::invalid(format!(
            "{} pairs after a burn-in of {burn_in}; need at least 2",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let q = sxy / sxx;
    let c = (my - q * mx).exp();
    let residual = used
        .iter()
        .map(|&(n, v)| (c * (n as f64).powf(q) / v - 1.0).abs())
        .fold(0.0, f64::max);
    let degenerate = used.windows(2).any(|w| w[1].1 < w[0].1 * (1.0 - noise));
    Ok(GrowthFit {
        pairs: pairs.to_vec(),
        q,
        c,
        residual,
        burn_in,
        degenerate,
    })
}

/// `1/q`, the Banach–Saks endpoint witnessed by the fit.
pub fn gamma_iid_endpoint(fit: &GrowthFit) -> Result<f64> {
    if !(fit.q > 0.0 && fit.q <= 1.0) {
        return Err(Error::invalid(format!("fitted exponent {} outside (0, 1]", fit.q)));
    }
    Ok(1.0 / fit.q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(u64, f64)> {
        (2..=12).map(|j| (1u64 << j, f((1u64 << j) as f64))).collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_growth(&synthetic(|n| n), DEFAULT_BURN_IN, 1e-9).unwrap();
        assert!((fit.q - 1.0).abs() < 1e-12 && (fit.c - 1.0).abs() < 1e-12 && fit.residual < 1e-12);
        let fit = fit_growth(&synthetic(|n| 3.0 * n.powf(0.7)), DEFAULT_BURN_IN, 1e-9).unwrap();
        assert!((fit.q - 0.7).abs() < 1e-12 && (fit.c - 3.0).abs() < 1e-11);
        assert!(!fit.degenerate);
    }

    #[test]
    fn burn_in_drops_transients() {
        let mut pairs = synthetic(|n| 2.0 * n.sqrt());
        pairs[0].1 = 100.0;
        pairs[1].1 = 50.0;
        let fit = fit_growth(&pairs, 2, 1e-9).unwrap();
        assert!((fit.q - 0.5).abs() < 1e-12);
        assert!(fit_growth(&pairs, 0, 1e-9).unwrap().degenerate);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_growth(&[(4, 1.0), (2, 2.0), (8, 3.0)], 0, 0.0).is_err());
        assert!(fit_growth(&[(2, 1.0), (4, 0.0), (8, 3.0)], 0, 0.0).is_err());
        assert!(fit_growth(&[(2, 1.0), (4, 2.0)], 1, 0.0).is_err());
    }

    #[test]
    fn endpoints() {
        let mut fit = fit_growth(&synthetic(|n| n.sqrt()), 0, 0.0).unwrap();
        assert!((gamma_iid_endpoint(&fit).unwrap() - 2.0).abs() < 1e-12);
        fit.q = 0.75;
        assert!((gamma_iid_endpoint(&fit).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        fit.q = 1.0;
        assert_eq!(gamma_iid_endpoint(&fit).unwrap(), 1.0);
        fit.q = 1.2;
        assert!(gamma_iid_endpoint(&fit).is_err());
        fit.q = 0.0;
        assert!(gamma_iid_endpoint(&fit).is_err());
    }
}
