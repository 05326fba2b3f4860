use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trials per independently seeded block.
pub const BLOCK: usize = 4096;

/// Symmetric law of one summand `ξ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SamplerKind {
    /// `ε χ_A` with `m(A) = u` and an independent sign `ε`.
    SignedIndicator(f64),
    Rademacher,
    /// Standard normal.
    GaussianLaw,
    /// Uniform draw from a symmetric table of equally likely values.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, seed: u64) -> Result<Self> {
        match &kind {
            SamplerKind::SignedIndicator(u) if !(*u > 0.0 && *u <= 1.0) => {
                return Err(Error::invalid(format!("indicator measure {u} outside (0, 1]")));
            }
            SamplerKind::Custom(values) => check_symmetric(values)?,
            _ => {}
        }
        Ok(Self { kind, seed })
    }

    /// Parses `indicator:<u>`, `rademacher`, `gauss` or `custom:<v1>,<v2>,...`.
    pub fn from_dsl(s: &str, seed: u64) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let kind = match (head, rest) {
            ("indicator", Some(u)) => SamplerKind::SignedIndicator(u.trim().parse().map_err(|_| Error::dsl(u, s))?),
            ("rademacher", None) => SamplerKind::Rademacher,
            ("gauss", None) => SamplerKind::GaussianLaw,
            ("custom", Some(list)) => SamplerKind::Custom(
                list.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::dsl(v, s)))
                    .collect::<Result<_>>()?,
            ),
            (_, Some(r)) if matches!(head, "rademacher" | "gauss") => return Err(Error::dsl(r, s)),
            _ => return Err(Error::dsl(head, s)),
        };
        Self::new(kind, seed)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            SamplerKind::SignedIndicator(u) => format!("indicator:{u}"),
            SamplerKind::Rademacher => "rademacher".into(),
            SamplerKind::GaussianLaw => "gauss".into(),
            SamplerKind::Custom(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                format!("custom:{}", items.join(","))
            }
        }
    }

    /// One draw of `ξ`.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::SignedIndicator(u) => {
                if rng.random::<f64>() < *u {
                    sign(rng)
                } else {
                    0.0
                }
            }
            SamplerKind::Rademacher => sign(rng),
            SamplerKind::GaussianLaw => rng.sample(StandardNormal),
            SamplerKind::Custom(v) => v[rng.random_range(0..v.len())],
        }
    }

    /// One draw of `ξ_1 + ... + ξ_n`. Bernoulli-type laws go through exact
    /// binomial counts; the others are summed term by term.
    pub fn draw_sum<R: Rng>(&self, n: u64, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::SignedIndicator(u) => {
                let k = Binomial::new(n, *u).expect("u in (0, 1]").sample(rng);
                rademacher_sum(k, rng)
            }
            SamplerKind::Rademacher => rademacher_sum(n, rng),
            _ => (0..n).map(|_| self.draw(rng)).sum(),
        }
    }

    /// `trials` draws of `Σ_{k<=n} ξ_k`, reproducible for a given seed
    /// regardless of thread count: block `b` uses stream `b` of a generator
    /// keyed by the seed and `n`.
    pub fn sample_sums(&self, n: u64, trials: usize) -> Vec<f64> {
        self.blocks(n, trials, |rng| self.draw_sum(n, rng))
    }

    fn blocks(&self, key: u64, trials: usize, f: impl Fn(&mut ChaCha8Rng) -> f64 + Sync) -> Vec<f64> {
        let nblocks = trials.div_ceil(BLOCK);
        let per_block: Vec<Vec<f64>> = (0..nblocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(self.seed, key, b as u64);
                let len = BLOCK.min(trials - b * BLOCK);
                (0..len).map(|_| f(&mut rng)).collect()
            })
            .collect();
        per_block.concat()
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn rademacher_sum<R: Rng>(n: u64, rng: &mut R) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let up = Binomial::new(n, 0.5).expect("valid").sample(rng);
    2.0 * up as f64 - n as f64
}

pub(crate) fn block_rng(seed: u64, key: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(block);
    rng
}

fn check_symmetric(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("custom law has no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("custom law has non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = sorted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = sorted.len();
    for i in 0..n {
        if (sorted[i] + sorted[n - 1 - i]).abs() > 1e-12 * scale {
            return Err(Error::invalid(format!(
                "custom law is not symmetric: {} has no mirror image",
                sorted[i]
            )));
        }
    }
    Ok(())
}

/// Samples of `π(ξ) = Σ_{i<=N} ξ_i` with `N ~ Poisson(1)`.
pub fn kruglov_sampler(law: &SamplerSpec, trials: usize) -> Result<Vec<f64>> {
    if trials < 1 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let poisson = Poisson::new(1.0).expect("rate 1 is valid");
    Ok(law.blocks(u64::MAX, trials, |rng| {
        let n = poisson.sample(rng) as u64;
        (0..n).map(|_| law.draw(rng)).sum()
    }))
}
