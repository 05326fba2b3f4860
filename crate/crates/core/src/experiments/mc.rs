use std::io::Write;

use serde::{Deserialize, Serialize};

use super::exact::rademacher_sum_norm;
use super::fit::{fit_growth, GrowthFit, DEFAULT_BURN_IN};
use super::sampler::SamplerSpec;
use crate::error::{Error, Result};
use crate::norms::SpaceSpec;
use crate::stepfn::StepFunction;

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_QUANTILES: usize = 1 << 12;
pub const MIN_TRIALS: usize = 1000;
pub const MIN_QUANTILES: usize = 1 << 8;
/// Batches used for the standard error.
const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    /// Batch-means standard error.
    pub std_error: f64,
    pub trials: usize,
    pub m: usize,
}

fn empirical_norm(samples: &[f64], m: usize, space: &SpaceSpec) -> Result<f64> {
    space.norm(&StepFunction::quantile_from_samples(samples, m)?)
}

/// Norm of the empirical quantile function of `|ξ_1 + ... + ξ_n|`.
pub fn mc_iid_sum_norm(sampler: &SamplerSpec, n: u64, space: &SpaceSpec, trials: usize, m: usize) -> Result<McEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("trials = {trials} below {MIN_TRIALS}")));
    }
    if m < MIN_QUANTILES {
        return Err(Error::invalid(format!("m = {m} below {MIN_QUANTILES}")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let sums = sampler.sample_sums(n, trials);
    let value = empirical_norm(&sums, m, space)?;
    let size = trials / BATCHES;
    let batch: Vec<f64> = sums
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| empirical_norm(c, m, space))
        .collect::<Result<_>>()?;
    let mean = batch.iter().sum::<f64>() / BATCHES as f64;
    let var = batch.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(McEstimate {
        value,
        std_error: (var / BATCHES as f64).sqrt(),
        trials,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormSource {
    /// Exact law of `r_1 + ... + r_n`.
    ExactRademacher,
    Mc { sampler: SamplerSpec, trials: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: u64,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub space: String,
    pub source: String,
    pub rows: Vec<GrowthRow>,
    pub fit: GrowthFit,
}

/// Evaluates the norm of the `n`-term sum for each `n` and fits `C n^q`.
pub fn growth_table(source: &NormSource, space: &SpaceSpec, ns: &[u64], burn_in: Option<usize>) -> Result<GrowthTable> {
    if ns.len() < 4 {
        return Err(Error::invalid(format!("growth table needs >= 4 values of n, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ns must be strictly increasing"));
    }
    if (ns[ns.len() - 1] as f64) < 4.0 * ns[0] as f64 {
        return Err(Error::invalid("ns must span at least two octaves"));
    }
    let rows: Vec<GrowthRow> = ns
        .iter()
        .map(|&n| match source {
            NormSource::ExactRademacher => Ok(GrowthRow {
                n,
                value: rademacher_sum_norm(n, space)?,
                std_error: None,
            }),
            NormSource::Mc { sampler, trials, m } => {
                let e = mc_iid_sum_norm(sampler, n, space, *trials, *m)?;
                Ok(GrowthRow {
                    n,
                    value: e.value,
                    std_error: Some(e.std_error),
                })
            }
        })
        .collect::<Result<_>>()?;
    // a decrease within three standard errors is noise
    let noise = rows
        .iter()
        .filter_map(|r| r.std_error.map(|s| 3.0 * s / r.value))
        .fold(1e-9, f64::max);
    let pairs: Vec<(u64, f64)> = rows.iter().map(|r| (r.n, r.value)).collect();
    let fit = fit_growth(&pairs, burn_in.unwrap_or(DEFAULT_BURN_IN), noise)?;
    let source = match source {
        NormSource::ExactRademacher => "exact:rademacher".to_string(),
        NormSource::Mc { sampler, trials, m } => {
            format!("mc:{}:seed={}:trials={trials}:m={m}", sampler.label(), sampler.seed)
        }
    };
    Ok(GrowthTable {
        space: space.label(),
        source,
        rows,
        fit,
    })
}

impl GrowthTable {
    /// Columns `n,value,fit_q,fit_C,residual`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "value", "fit_q", "fit_C", "residual"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                format!("{:.17e}", r.value),
                format!("{:.17e}", self.fit.q),
                format!("{:.17e}", self.fit.c),
                format!("{:.17e}", self.fit.residual),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
