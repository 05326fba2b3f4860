use std::collections::BTreeMap;
use std::path::Path;

use super::mc::{NormSource, DEFAULT_QUANTILES, DEFAULT_TRIALS};
use super::sampler::SamplerSpec;
use crate::error::{Error, Result};
use crate::norms::SpaceSpec;

/// Growth experiment read from a flat `key = value` file.
///
/// Keys: `space`, `ns`, `source` (`exact` or `mc`), `sampler`, `trials`,
/// `seed`, `m`, `burn_in`. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub ns: Vec<u64>,
    pub source: NormSource,
    pub burn_in: Option<usize>,
}

const KEYS: [&str; 8] = ["space", "ns", "source", "sampler", "trials", "seed", "m", "burn_in"];

/// Parses `a,b,c` or `2^a..2^b` (inclusive, powers of two).
pub fn parse_ns(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let exp = |t: &str| -> Result<u32> {
            let t = t.trim();
            t.strip_prefix("2^")
                .and_then(|e| e.parse::<u32>().ok())
                .filter(|e| *e < 63)
                .ok_or_else(|| Error::dsl(t, s))
        };
        let (a, b) = (exp(lo)?, exp(hi)?);
        if a > b {
            return Err(Error::invalid(format!("empty range {s}")));
        }
        return Ok((a..=b).map(|e| 1u64 << e).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Error::dsl(t.trim(), s)))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str, default_seed: u64) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::dsl(k, line));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::invalid(format!("line {}: duplicate key {k}", i + 1)));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| Error::invalid(format!("missing key {k}")));
        let num = |k: &str| -> Result<Option<u64>> {
            get(k)
                .map(|v| v.parse::<u64>().map_err(|_| Error::dsl(v, k)))
                .transpose()
        };
        let space = SpaceSpec::from_dsl(need("space")?)?;
        let ns = parse_ns(need("ns")?)?;
        let seed = num("seed")?.unwrap_or(default_seed);
        let source = match get("source").unwrap_or(if get("sampler").is_some() { "mc" } else { "exact" }) {
            "exact" => {
                if let Some(s) = get("sampler").filter(|s| *s != "rademacher") {
                    return Err(Error::invalid(format!("exact source only supports rademacher, got {s}")));
                }
                NormSource::ExactRademacher
            }
            "mc" => NormSource::Mc {
                sampler: SamplerSpec::from_dsl(need("sampler")?, seed)?,
                trials: num("trials")?.map_or(DEFAULT_TRIALS, |t| t as usize),
                m: num("m")?.map_or(DEFAULT_QUANTILES, |t| t as usize),
            },
            other => return Err(Error::dsl(other, "source")),
        };
        let burn_in = num("burn_in")?.map(|b| b as usize);
        Ok(Self {
            space,
            ns,
            source,
            burn_in,
        })
    }

    pub fn from_file(path: &Path, default_seed: u64) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, default_seed)
    }
}
