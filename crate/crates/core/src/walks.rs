//! Exact laws of the symmetric walk `W_k = r_1 + ... + r_k` and of
//! `|A_n χ_(0,u]|`, a sum of `n` independent signed indicators of measure `u`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};
use crate::special::{ln_add_exp, ln_one_minus_exp, ln_sum_exp, LnFactorial};
use crate::stepfn::StepFunction;

/// Finitely supported law on the integers.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerDistribution<P: Scalar = f64> {
    atoms: BTreeMap<i64, P>,
}

impl<P: Scalar> IntegerDistribution<P> {
    /// Atoms with equal values are merged; zero-mass atoms are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (i64, P)>) -> Result<Self> {
        let mut map: BTreeMap<i64, P> = BTreeMap::new();
        for (x, p) in atoms {
            if !(p >= P::zero()) || !p.is_finite() {
                return Err(Error::invalid(format!("negative or non-finite mass {p:?} at {x}")));
            }
            let slot = map.entry(x).or_insert_with(P::zero);
            *slot = slot.clone() + p;
        }
        map.retain(|_, p| !p.is_zero());
        let d = Self { atoms: map };
        let total = d.total_mass();
        if !total.same_level(&P::one()) && (total.to_f64() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("total mass {} is not 1", total.to_f64())));
        }
        Ok(d)
    }

    pub fn point_mass(x: i64) -> Self {
        Self {
            atoms: BTreeMap::from([(x, P::one())]),
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (i64, &P)> {
        self.atoms.iter().map(|(x, p)| (*x, p))
    }

    pub fn prob(&self, x: i64) -> P {
        self.atoms.get(&x).cloned().unwrap_or_else(P::zero)
    }

    pub fn total_mass(&self) -> P {
        self.atoms.values().cloned().fold(P::zero(), |a, b| a + b)
    }

    /// `P(|X| >= s)`.
    pub fn abs_tail(&self, s: i64) -> P {
        self.atoms
            .iter()
            .filter(|(x, _)| x.abs() >= s)
            .fold(P::zero(), |a, (_, p)| a + p.clone())
    }

    /// Law of `|X|`.
    pub fn abs(&self) -> Self {
        let mut out: BTreeMap<i64, P> = BTreeMap::new();
        for (x, p) in &self.atoms {
            let slot = out.entry(x.abs()).or_insert_with(P::zero);
            *slot = slot.clone() + p.clone();
        }
        Self { atoms: out }
    }

    /// The decreasing rearrangement of `|X|` realized on `(0, 1]`.
    pub fn abs_rearranged(&self) -> StepFunction<P> {
        let law = self.abs();
        let mut lengths = Vec::new();
        let mut values = Vec::new();
        for (x, p) in law.atoms.iter().rev() {
            lengths.push(p.clone());
            values.push(P::from_ratio(*x, 1));
        }
        StepFunction::from_lengths(&lengths, values).expect("law of |X| has total mass 1")
    }

    pub fn to_f64(&self) -> IntegerDistribution<f64> {
        IntegerDistribution {
            atoms: self.atoms.iter().map(|(x, p)| (*x, p.to_f64())).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    atoms: Vec<(i64, serde_json::Value)>,
}

impl<P: Scalar> Serialize for IntegerDistribution<P> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr {
            atoms: self.atoms.iter().map(|(x, p)| (*x, p.to_json())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, P: Scalar> Deserialize<'de> for IntegerDistribution<P> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = DistributionRepr::deserialize(deserializer)?;
        let atoms = repr
            .atoms
            .iter()
            .map(|(x, v)| P::from_json(v).map(|p| (*x, p)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Self::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// Law of `W_k`: atoms `k - 2j` with mass `C(k,j) 2^{-k}`.
pub fn walk_distribution<P: Scalar>(k: u32) -> IntegerDistribution<P> {
    let row = pascal_row(k as usize, &P::from_ratio(1, 2), &P::from_ratio(1, 2));
    IntegerDistribution {
        atoms: row
            .into_iter()
            .enumerate()
            .map(|(j, p)| (k as i64 - 2 * j as i64, p))
            .collect(),
    }
}

/// `[C(n,j) a^{n-j} b^j]_{j=0..n}` by repeated convolution with `[a, b]`.
fn pascal_row<P: Scalar>(n: usize, a: &P, b: &P) -> Vec<P> {
    let mut row = vec![P::one()];
    for _ in 0..n {
        let mut next = vec![P::zero(); row.len() + 1];
        for (j, p) in row.into_iter().enumerate() {
            next[j] = next[j].clone() + a.clone() * p.clone();
            next[j + 1] = next[j + 1].clone() + b.clone() * p;
        }
        row = next;
    }
    row
}

/// `P(|W_k| >= s)`; zero when `k < s`.
pub fn walk_abs_tail<P: Scalar>(k: u32, s: u32) -> P {
    if k < s {
        return P::zero();
    }
    walk_distribution::<P>(k).abs_tail(s as i64)
}

/// `[P(|W_k| >= s)]_{s=0..=n}` for every `k = 0..=n`.
fn walk_tail_rows<P: Scalar>(n: usize) -> Vec<Vec<P>> {
    let half = P::from_ratio(1, 2);
    let mut rows = Vec::with_capacity(n + 1);
    let mut law = vec![P::one()];
    for k in 0..=n {
        // law[j] = P(W_k = k - 2j); |W_k| >= s iff j <= (k-s)/2 or j >= (k+s)/2
        let mut tails = vec![P::zero(); n + 1];
        for s in 0..=k {
            let mut t = P::zero();
            for (j, p) in law.iter().enumerate() {
                if (k as i64 - 2 * j as i64).abs() >= s as i64 {
                    t = t + p.clone();
                }
            }
            tails[s] = t;
        }
        rows.push(tails);
        let mut next = vec![P::zero(); law.len() + 1];
        for (j, p) in law.into_iter().enumerate() {
            next[j] = next[j].clone() + half.clone() * p.clone();
            next[j + 1] = next[j + 1].clone() + half.clone() * p;
        }
        law = next;
    }
    rows
}

fn check_u<P: Scalar>(u: &P) -> Result<()> {
    if !(*u > P::zero() && *u <= P::one()) {
        return Err(Error::invalid(format!("u = {} outside (0, 1]", u.to_f64())));
    }
    Ok(())
}

/// `[m(|A_n χ_(0,u]| >= s)]_{s=1..=n}` as the binomial mixture
/// `Σ_k C(n,k) u^k (1-u)^{n-k} P(|W_k| >= s)`.
pub fn an_indicator_tails<P: Scalar>(n: u32, u: &P) -> Result<Vec<P>> {
    check_u(u)?;
    let n = n as usize;
    let weights = pascal_row(n, &(P::one() - u.clone()), u);
    let rows = walk_tail_rows::<P>(n);
    Ok((1..=n)
        .map(|s| {
            (s..=n).fold(P::zero(), |acc, k| acc + weights[k].clone() * rows[k][s].clone())
        })
        .collect())
}

/// `m(|A_n χ_(0,u]| >= s)` for `1 <= s <= n`.
pub fn an_indicator_tail<P: Scalar>(n: u32, u: &P, s: u32) -> Result<P> {
    if s < 1 || s > n {
        return Err(Error::invalid(format!("s = {s} outside [1, {n}]")));
    }
    Ok(an_indicator_tails(n, u)?.swap_remove(s as usize - 1))
}

/// Law of `|A_n χ_(0,u]|`.
pub fn an_indicator_law<P: Scalar>(n: u32, u: &P) -> Result<IntegerDistribution<P>> {
    let tails = an_indicator_tails(n, u)?;
    let mut atoms = Vec::with_capacity(tails.len() + 1);
    atoms.push((0, P::one() - tails.first().cloned().unwrap_or_else(P::zero)));
    for (i, t) in tails.iter().enumerate() {
        let next = tails.get(i + 1).cloned().unwrap_or_else(P::zero);
        atoms.push((i as i64 + 1, t.clone() - next));
    }
    IntegerDistribution::new(atoms)
}

/// Leading term `2^{1-s} C(n,s) u^s` of the tail as `u → 0`.
pub fn an_tail_asymptotic(n: u32, u: f64, s: u32) -> f64 {
    ln_an_tail_asymptotic(n, u.ln(), s).exp()
}

pub fn ln_an_tail_asymptotic(n: u32, ln_u: f64, s: u32) -> f64 {
    let lf = LnFactorial::new(n as usize);
    (1.0 - s as f64) * LN_2 + lf.ln_binomial(n as usize, s as usize) + s as f64 * ln_u
}

/// `E|X| = Σ |x| P(x)`.
pub fn expectation_abs<P: Scalar>(d: &IntegerDistribution<P>) -> P {
    d.atoms()
        .fold(P::zero(), |acc, (x, p)| acc + P::from_ratio(x.abs(), 1) * p.clone())
}

/// Precomputed `ln P(|W_k| >= s)` for `k, s <= n`, for fast float tails of `A_n`.
#[derive(Debug, Clone)]
pub struct WalkTailTable {
    n: usize,
    lf: LnFactorial,
    /// `ln_tail[k][s-1] = ln P(|W_k| >= s)` for `s = 1..=k`.
    ln_tail: Vec<Vec<f64>>,
}

impl WalkTailTable {
    pub fn new(n: u32) -> Self {
        let n = n as usize;
        let lf = LnFactorial::new(n);
        let ln_tail = (0..=n)
            .map(|k| {
                // P(|W_k| >= s) = 2 P(W_k >= s); W_k >= s iff j <= (k-s)/2
                let ln_atom = |j: usize| lf.ln_binomial(k, j) - k as f64 * LN_2;
                let mut tails = vec![f64::NEG_INFINITY; k];
                let mut acc = f64::NEG_INFINITY;
                let mut j = 0;
                for s in (1..=k).rev() {
                    while 2 * j + s <= k {
                        acc = ln_add_exp(acc, ln_atom(j));
                        j += 1;
                    }
                    tails[s - 1] = acc + LN_2;
                }
                tails
            })
            .collect();
        Self { n, lf, ln_tail }
    }

    pub fn n(&self) -> u32 {
        self.n as u32
    }

    pub fn ln_walk_abs_tail(&self, k: u32, s: u32) -> f64 {
        let (k, s) = (k as usize, s as usize);
        if s > k {
            f64::NEG_INFINITY
        } else if s == 0 {
            0.0
        } else {
            self.ln_tail[k][s - 1]
        }
    }

    /// `[ln m(|A_m χ_(0,u]| >= s)]_{s=1..=m}` for `m <= n`, given `ln u`.
    pub fn ln_an_tails(&self, m: u32, ln_u: f64) -> Vec<f64> {
        let m = m as usize;
        assert!(m <= self.n, "table built for n = {}, asked for {m}", self.n);
        let ln_1mu = if ln_u >= 0.0 { f64::NEG_INFINITY } else { ln_one_minus_exp(ln_u) };
        let ln_w: Vec<f64> = (0..=m)
            .map(|k| {
                let a = if k == 0 { 0.0 } else { k as f64 * ln_u };
                let b = if k == m { 0.0 } else { (m - k) as f64 * ln_1mu };
                self.lf.ln_binomial(m, k) + a + b
            })
            .collect();
        let mut buf = Vec::with_capacity(m);
        (1..=m)
            .map(|s| {
                buf.clear();
                buf.extend((s..=m).map(|k| ln_w[k] + self.ln_tail[k][s - 1]));
                ln_sum_exp(&buf)
            })
            .collect()
    }

    pub fn an_tails(&self, m: u32, u: f64) -> Vec<f64> {
        self.ln_an_tails(m, u.ln()).into_iter().map(f64::exp).collect()
    }

    /// `E|A_m χ_(0,u]|` by the layer sum.
    pub fn an_expectation(&self, m: u32, u: f64) -> f64 {
        compensated_sum(self.an_tails(m, u))
    }
}
