//! Norms of the averaging operators `A_n` on Lorentz spaces and the
//! alternative between `‖A_n‖ = n` and a power bound `C n^q`.
//!
//! `‖A_n‖_{Λ(ψ)}` is attained on indicators, so it equals `n · sup_u g_n(u)` with
//! `g_n(u) = (1/(n ψ(u))) Σ_s ψ(m(|A_n χ_(0,u]| >= s))`.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{limsup_general, limsup_ratio_k, limsup_ratio_l, ConcaveGenerator, LimitEstimate, LimitGrid};
use crate::norms::golden_max;
use crate::scalar::compensated_sum;
use crate::walks::WalkTailTable;

/// Evaluates `g_m` for every `m <= n` from one precomputed walk table.
#[derive(Debug, Clone)]
pub struct GnEvaluator {
    psi: ConcaveGenerator,
    table: WalkTailTable,
}

impl GnEvaluator {
    pub fn new(psi: &ConcaveGenerator, n: u32) -> Self {
        Self {
            psi: psi.clone(),
            table: WalkTailTable::new(n),
        }
    }

    /// `g_m(e^{ln_u})`.
    pub fn eval_ln(&self, m: u32, ln_u: f64) -> f64 {
        let ln_u = ln_u.min(0.0);
        let tails = self.table.ln_an_tails(m, ln_u);
        let sum = compensated_sum(tails.iter().map(|&t| self.psi.ln_ratio(ln_u, t - ln_u).exp()));
        sum / m as f64
    }

    pub fn eval(&self, m: u32, u: f64) -> f64 {
        self.eval_ln(m, u.ln())
    }
}

pub fn g_n(psi: &ConcaveGenerator, n: u32, u: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::invalid(format!("u = {u} outside (0, 1]")));
    }
    Ok(GnEvaluator::new(psi, n).eval(n, u))
}

/// `limsup_{u→0} g_n(u)`.
pub fn g_limit_zero(psi: &ConcaveGenerator, n: u32, grid: &LimitGrid) -> Result<LimitEstimate> {
    let mut est = limsup_general(psi, n, grid)?;
    est.value /= n as f64;
    Ok(est)
}

/// Probe grid for the interior supremum of `g_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupGrid {
    /// Octaves below `u = 1`.
    pub octaves: u32,
    pub per_octave: u32,
    /// Golden-section tolerance in `ln u`.
    pub refine_tol: f64,
}

impl Default for SupGrid {
    fn default() -> Self {
        Self {
            octaves: 40,
            per_octave: 4,
            refine_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupG {
    /// `max(interior, limit)`.
    pub value: f64,
    pub interior: f64,
    pub ln_u_argmax: f64,
    pub limit: LimitEstimate,
}

impl GnEvaluator {
    pub fn sup(&self, m: u32, grid: &SupGrid, limit_grid: &LimitGrid) -> Result<SupG> {
        let limit = g_limit_zero(&self.psi, m, limit_grid)?;
        let points: Vec<f64> = (0..=grid.octaves * grid.per_octave)
            .map(|j| -(j as f64) * LN_2 / grid.per_octave as f64)
            .collect();
        let values: Vec<f64> = points.par_iter().map(|&x| self.eval_ln(m, x)).collect();
        let (mut arg, mut best) = (0usize, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v > best {
                arg = i;
                best = v;
            }
        }
        let lo = points.get(arg + 1).copied().unwrap_or(points[arg]);
        let hi = if arg == 0 { 0.0 } else { points[arg - 1] };
        let (x, v) = golden_max(&|x| self.eval_ln(m, x), lo, hi, grid.refine_tol);
        let (ln_u_argmax, interior) = if v > best { (x, v) } else { (points[arg], best) };
        Ok(SupG {
            value: interior.max(limit.value).min(1.0),
            interior,
            ln_u_argmax,
            limit,
        })
    }
}

pub fn sup_g(psi: &ConcaveGenerator, n: u32) -> Result<SupG> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    GnEvaluator::new(psi, n).sup(n, &SupGrid::default(), &LimitGrid::default())
}

/// `‖A_n‖_{Λ(ψ)} = n · sup_u g_n(u)`.
pub fn lorentz_operator_norm(psi: &ConcaveGenerator, n: u32) -> Result<f64> {
    Ok(n as f64 * sup_g(psi, n)?.value)
}

/// `‖A_m‖` for each `m` in `ns`, sharing one walk table.
pub fn lorentz_operator_norms(psi: &ConcaveGenerator, ns: &[u32]) -> Result<Vec<f64>> {
    let Some(&top) = ns.iter().max() else {
        return Ok(vec![]);
    };
    if ns.contains(&0) {
        return Err(Error::invalid("n must be >= 1"));
    }
    let ev = GnEvaluator::new(psi, top);
    let (sg, lg) = (SupGrid::default(), LimitGrid::default());
    ns.iter().map(|&m| Ok(m as f64 * ev.sup(m, &sg, &lg)?.value)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    NormEqualsN,
    PowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub k_list: Vec<u32>,
    pub l_list: Vec<u32>,
    pub n_list: Vec<u32>,
    pub margin: f64,
    pub grid: LimitGrid,
    pub kruglov: KruglovParams,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            k_list: vec![2, 3, 4],
            l_list: vec![2, 3],
            n_list: vec![2, 4, 8, 16, 32, 64],
            margin: 1e-3,
            grid: LimitGrid::default(),
            kruglov: KruglovParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub generator: String,
    pub branch: Branch,
    pub witness_n0: Option<u32>,
    pub q: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    /// `‖A_{n0}‖` when a witness exists.
    pub witness_norm: Option<f64>,
    pub a_estimates: BTreeMap<u32, LimitEstimate>,
    pub c_estimates: BTreeMap<u32, LimitEstimate>,
    pub margin: f64,
    /// Conditions that failed, for the `NormEqualsN` branch.
    pub failing: Vec<String>,
    pub inconclusive: bool,
    pub kruglov: KruglovVerdict,
}

impl DichotomyReport {
    /// `C n^q` on the power-bound branch.
    pub fn bound(&self, n: u32) -> Option<f64> {
        Some(self.c? * (n as f64).powf(self.q?))
    }
}

pub fn classify(psi: &ConcaveGenerator, params: &ClassifyParams) -> Result<DichotomyReport> {
    if params.k_list.is_empty() || params.l_list.is_empty() || params.n_list.is_empty() {
        return Err(Error::invalid("k, l and n probe lists must be nonempty"));
    }
    let margin = params.margin;
    let a_estimates = params
        .k_list
        .iter()
        .map(|&k| Ok((k, limsup_ratio_k(psi, k, &params.grid)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let c_estimates = params
        .l_list
        .iter()
        .map(|&l| Ok((l, limsup_ratio_l(psi, l, &params.grid)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let inconclusive = a_estimates.values().chain(c_estimates.values()).any(|e| !e.converged);
    let first = a_estimates.iter().any(|(&k, e)| e.value < k as f64 - margin);
    let second = c_estimates.values().any(|e| e.value < 1.0 - margin);
    let kruglov = kruglov_check(psi, &params.kruglov)?;

    let mut report = DichotomyReport {
        generator: psi.label(),
        branch: Branch::NormEqualsN,
        witness_n0: None,
        q: None,
        c: None,
        witness_norm: None,
        a_estimates,
        c_estimates,
        margin,
        failing: vec![],
        inconclusive,
        kruglov,
    };
    if !first {
        report.failing.push(format!("a(k) >= k - {margin} for every probed k"));
    }
    if !second {
        report.failing.push(format!("c(l) >= 1 - {margin} for every probed l"));
    }
    if !report.failing.is_empty() {
        return Ok(report);
    }

    let mut ns = params.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    let top = *ns.last().expect("nonempty");
    let ev = GnEvaluator::new(psi, top);
    let (sg, lg) = (SupGrid::default(), LimitGrid::default());
    for &n0 in ns.iter().filter(|&&n| n >= 2) {
        let norm = n0 as f64 * ev.sup(n0, &sg, &lg)?.value;
        if norm < n0 as f64 * (1.0 - margin) {
            let q = (norm.ln() / (n0 as f64).ln()).max(0.5);
            let mut max_s = 1.0f64;
            for s in 2..=n0 {
                max_s = max_s.max(s as f64 * ev.sup(s, &sg, &lg)?.value);
            }
            report.branch = Branch::PowerBound;
            report.witness_n0 = Some(n0);
            report.q = Some(q);
            report.c = Some((SQRT_2 + 1.0) * (n0 as f64).powf(q) * max_s);
            report.witness_norm = Some(norm);
            return Ok(report);
        }
    }
    Err(Error::Degenerate(format!(
        "{}: both limit conditions hold but no n in {:?} has ‖A_n‖ < n",
        psi.label(),
        params.n_list
    )))
}

/// `(1/φ(t)) Σ_{n=1}^N φ(t^n/n!)` with `t^n/n!` formed in log space.
pub fn kruglov_series(phi: &ConcaveGenerator, t: f64, n_max: u64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid(format!("t = {t} outside (0, 1]")));
    }
    let mut partial = KruglovPartial::new(t.ln());
    Ok(partial.advance(phi, n_max, f64::INFINITY))
}

/// Running partial sum of the Kruglov series at one `t`.
struct KruglovPartial {
    ln_t: f64,
    n: u64,
    ln_fact: f64,
    sum: crate::scalar::CompensatedSum,
}

impl KruglovPartial {
    fn new(ln_t: f64) -> Self {
        Self {
            ln_t,
            n: 0,
            ln_fact: 0.0,
            sum: Default::default(),
        }
    }

    /// Adds terms up to `n_max` or until the sum passes `stop`.
    fn advance(&mut self, phi: &ConcaveGenerator, n_max: u64, stop: f64) -> f64 {
        while self.n < n_max {
            self.n += 1;
            let n = self.n as f64;
            self.ln_fact += n.ln();
            // argument t^n/n! relative to t
            let ln_k = (n - 1.0) * self.ln_t - self.ln_fact;
            let term = phi.ln_ratio(self.ln_t, ln_k).exp();
            self.sum.add(term);
            if term == 0.0 {
                self.n = n_max;
                break;
            }
            if self.sum.value() > stop {
                break;
            }
        }
        self.sum.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruglovParams {
    pub t_grid: Vec<f64>,
    pub n_max: u64,
    pub threshold: f64,
}

impl Default for KruglovParams {
    fn default() -> Self {
        let mut t_grid: Vec<f64> = [0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000]
            .iter()
            .map(|&j| 2f64.powi(-j))
            .collect();
        t_grid.push((-1.5f64).exp());
        Self {
            t_grid,
            n_max: 1_000_000,
            threshold: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruglovVerdict {
    pub finite: bool,
    /// `None` stands for `+∞`.
    pub sup_value: Option<f64>,
    pub n_used: u64,
    pub t_argmax: f64,
    pub inconclusive: bool,
}

/// Decides `sup_t (1/φ(t)) Σ φ(t^n/n!) < ∞` on a grid of `t`.
///
/// Finite when every partial sum at `N` matches the one at `N/4` within
/// `1e-6` relative and stays below the threshold; divergent as soon as a
/// partial sum crosses the threshold.
pub fn kruglov_check(phi: &ConcaveGenerator, params: &KruglovParams) -> Result<KruglovVerdict> {
    if params.t_grid.is_empty() {
        return Err(Error::invalid("empty t grid"));
    }
    if let Some(t) = params.t_grid.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::invalid(format!("t = {t} outside (0, 1]")));
    }
    let n_max = params.n_max.max(4);
    let runs: Vec<(f64, f64, f64, u64)> = params
        .t_grid
        .par_iter()
        .map(|&t| {
            let mut p = KruglovPartial::new(t.ln());
            let quarter = p.advance(phi, n_max / 4, params.threshold);
            let full = if quarter > params.threshold { quarter } else { p.advance(phi, n_max, params.threshold) };
            (t, quarter, full, p.n)
        })
        .collect();
    let (mut t_arg, mut sup, mut stable) = (runs[0].0, f64::NEG_INFINITY, true);
    for &(t, quarter, full, n) in &runs {
        if full > params.threshold {
            return Ok(KruglovVerdict {
                finite: false,
                sup_value: None,
                n_used: n,
                t_argmax: t,
                inconclusive: false,
            });
        }
        if (full - quarter).abs() > 1e-6 * full {
            stable = false;
        }
        if full > sup {
            sup = full;
            t_arg = t;
        }
    }
    Ok(KruglovVerdict {
        finite: stable,
        sup_value: Some(sup),
        n_used: n_max,
        t_argmax: t_arg,
        inconclusive: !stable,
    })
}
