//! Concave generators `ψ` (increasing, concave, `ψ(0) = 0`) and estimators
//! for their limiting ratios at zero.
//!
//! Every generator can be evaluated in log coordinates through
//! [`ConcaveGenerator::ln_eval`], which takes `ln t` and returns `ln ψ(t)`.
//! The limit estimators probe `u = 2^{-j}` far below the smallest positive
//! float, so asymptotics that converge like `1/ln(1/u)` become visible.

use std::f64::consts::LN_2;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erfcx, inverse_erfc_ln, LnFactorial, LN_SQRT_PI};

/// `e^{-3/2}`, where the example generator switches to its linear piece.
pub const EXAMPLE7_JUNCTION: f64 = 0.223_130_160_148_429_83;

#[derive(Debug, Clone, PartialEq)]
pub enum ConcaveGenerator {
    /// `t^α`, `0 < α <= 1`.
    Power { alpha: f64 },
    /// `t · log^{1/p}(e/t)`, `p >= 1`; generates `exp(L_p)` as a Marcinkiewicz space.
    LogPow { p: f64 },
    /// `log^{-1/2}(1/t)` on `(0, e^{-3/2}]`, extended linearly with matched slope.
    Example7,
    /// `∫_0^t G`, `G` the inverse of `erfc`; equals `e^{-G(t)²}/√π`.
    Gauss,
    Table(TableGenerator),
}

impl ConcaveGenerator {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("power exponent {alpha} outside (0, 1]")));
        }
        Ok(Self::Power { alpha })
    }

    pub fn logpow(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("logpow exponent {p} must be finite and >= 1")));
        }
        Ok(Self::LogPow { p })
    }

    pub fn example7() -> Self {
        Self::Example7
    }

    pub fn gauss() -> Self {
        Self::Gauss
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        TableGenerator::new(points, "table".to_string()).map(Self::Table)
    }

    /// Parses `power:<α>`, `logpow:<p>`, `example7`, `gauss` or `table:<path.csv>`.
    pub fn from_dsl(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let number = |tok: Option<&str>| -> Result<f64> {
            let tok = tok.ok_or_else(|| Error::dsl(head, s))?;
            tok.trim().parse::<f64>().map_err(|_| Error::dsl(tok, s))
        };
        match (head.trim(), rest) {
            ("power", r) => Self::power(number(r)?),
            ("logpow", r) => Self::logpow(number(r)?),
            ("example7", None) => Ok(Self::Example7),
            ("gauss", None) => Ok(Self::Gauss),
            ("table", Some(path)) if !path.is_empty() => TableGenerator::from_csv(path).map(Self::Table),
            (_, Some(r)) if matches!(head, "example7" | "gauss") => Err(Error::dsl(r, s)),
            _ => Err(Error::dsl(head, s)),
        }
    }

    /// The DSL string this generator parses from.
    pub fn label(&self) -> String {
        match self {
            Self::Power { alpha } => format!("power:{alpha}"),
            Self::LogPow { p } => format!("logpow:{p}"),
            Self::Example7 => "example7".into(),
            Self::Gauss => "gauss".into(),
            Self::Table(t) => t.label.clone(),
        }
    }

    /// `ψ(t)` for `t ∈ [0, 1]`; `ψ(0) = 0`.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t <= 1.0 + 1e-12, "generator evaluated at t = {t} > 1");
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(1.0);
        match self {
            Self::Power { alpha } => t.powf(*alpha),
            Self::LogPow { p } => t * (1.0 - t.ln()).powf(1.0 / p),
            Self::Example7 => {
                if t <= EXAMPLE7_JUNCTION {
                    (-t.ln()).powf(-0.5)
                } else {
                    example7_at_junction() + example7_slope() * (t - EXAMPLE7_JUNCTION)
                }
            }
            Self::Gauss => self.ln_eval(t.ln()).exp(),
            Self::Table(tab) => tab.eval(t),
        }
    }

    /// `ln ψ(e^{ln_t})` for `ln_t <= 0`, valid far below the float range of `t`.
    pub fn ln_eval(&self, ln_t: f64) -> f64 {
        if ln_t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let ln_t = ln_t.min(0.0);
        match self {
            Self::Power { alpha } => alpha * ln_t,
            Self::LogPow { p } => ln_t + (1.0 - ln_t).ln() / p,
            Self::Example7 => {
                if ln_t <= -1.5 {
                    -0.5 * (-ln_t).ln()
                } else {
                    self.eval(ln_t.exp()).ln()
                }
            }
            Self::Gauss => {
                // ψ(t) = e^{-G²}/√π = t / (√π erfcx(G))
                let g = inverse_erfc_ln(ln_t);
                ln_t - LN_SQRT_PI - erfcx(g).ln()
            }
            Self::Table(tab) => tab.ln_eval(ln_t),
        }
    }

    /// `ln ψ(ku) - ln ψ(u)` with `ln_k` and `ln_u` kept apart, so the ratio
    /// stays accurate when `|ln u|` is huge; `ku` is clamped to 1.
    pub fn ln_ratio(&self, ln_u: f64, ln_k: f64) -> f64 {
        let ln_ku = ln_u + ln_k;
        if ln_ku >= 0.0 {
            return self.ln_eval(0.0) - self.ln_eval(ln_u);
        }
        match self {
            Self::Power { alpha } => alpha * ln_k,
            Self::LogPow { p } => ln_k + (-ln_k / (1.0 - ln_u)).ln_1p() / p,
            Self::Example7 if ln_u <= -1.5 && ln_ku <= -1.5 => -0.5 * (ln_k / ln_u).ln_1p(),
            Self::Gauss => {
                let (g_u, g_ku) = (inverse_erfc_ln(ln_u), inverse_erfc_ln(ln_ku));
                ln_k + erfcx(g_u).ln() - erfcx(g_ku).ln()
            }
            Self::Table(tab) if ln_u.max(ln_ku) < tab.ts[1].ln() => ln_k,
            _ => self.ln_eval(ln_ku) - self.ln_eval(ln_u),
        }
    }

    /// `ψ'(t)` on `(0, 1)` where a closed form is available.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        if !(t > 0.0 && t < 1.0) {
            return None;
        }
        match self {
            Self::Power { alpha } => Some(alpha * t.powf(alpha - 1.0)),
            Self::LogPow { p } => {
                let l = 1.0 - t.ln();
                Some(l.powf(1.0 / p) - l.powf(1.0 / p - 1.0) / p)
            }
            Self::Example7 => {
                if t <= EXAMPLE7_JUNCTION {
                    let l = -t.ln();
                    Some(0.5 * l.powf(-1.5) / t)
                } else {
                    Some(example7_slope())
                }
            }
            Self::Gauss => Some(inverse_erfc_ln(t.ln())),
            Self::Table(tab) => Some(tab.slope_at(t)),
        }
    }

    /// Checks monotonicity, midpoint concavity, sublinearity and the limit
    /// at zero on the grid `u = 2^{-j}`, `j = 1..=j_max`.
    pub fn validate_on_grid(&self, j_max: u32) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidGenerator(format!("{}: {what}", self.label())));
        let grid: Vec<f64> = (0..=j_max).map(|j| (-(j as f64) * LN_2).exp()).collect();
        for w in grid.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            let (phi, plo) = (self.eval(hi), self.eval(lo));
            if !(plo < phi) {
                return fail(format!("not increasing between {lo} and {hi}"));
            }
            let mid = self.eval(0.5 * (hi + lo));
            if mid < 0.5 * (phi + plo) - 1e-12 {
                return fail(format!("midpoint concavity fails on [{lo}, {hi}]"));
            }
            for m in [2.0, 3.0, 10.0] {
                if self.eval(hi / m) < phi / m - 1e-12 {
                    return fail(format!("sublinearity ψ(u/{m}) >= ψ(u)/{m} fails at u = {hi}"));
                }
            }
        }
        let far = self.ln_eval(-1e15).exp();
        if !(far < 1e-6 * self.eval(1.0)) {
            return fail(format!("ψ(e^{{-1e15}}) = {far} does not tend to 0"));
        }
        Ok(())
    }
}

impl fmt::Display for ConcaveGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn example7_at_junction() -> f64 {
    (1.5f64).powf(-0.5)
}

/// Slope of the linear piece: the left derivative of `log^{-1/2}(1/t)` at `e^{-3/2}`.
pub fn example7_slope() -> f64 {
    0.5 * (1.5f64).powf(-1.5) / EXAMPLE7_JUNCTION
}

/// Piecewise-linear interpolant of user data through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGenerator {
    ts: Vec<f64>,
    psis: Vec<f64>,
    label: String,
}

impl TableGenerator {
    pub fn new(points: Vec<(f64, f64)>, label: String) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidGenerator(format!("{label}: {m}")));
        if points.is_empty() {
            return bad("no points".into());
        }
        let mut ts = vec![0.0];
        let mut psis = vec![0.0];
        for &(t, p) in &points {
            if !(t.is_finite() && p.is_finite()) {
                return bad(format!("non-finite point ({t}, {p})"));
            }
            ts.push(t);
            psis.push(p);
        }
        if (ts[ts.len() - 1] - 1.0).abs() > 1e-12 {
            return bad("last abscissa must be 1".into());
        }
        let n = ts.len();
        ts[n - 1] = 1.0;
        let mut last_slope = f64::INFINITY;
        for i in 1..n {
            if !(ts[i] > ts[i - 1]) {
                return bad(format!("abscissae not strictly increasing at {}", ts[i]));
            }
            if !(psis[i] > psis[i - 1]) {
                return bad(format!("values not strictly increasing at t = {}", ts[i]));
            }
            let slope = (psis[i] - psis[i - 1]) / (ts[i] - ts[i - 1]);
            if slope > last_slope * (1.0 + 1e-12) {
                return bad(format!("slopes increase at t = {}, table is not concave", ts[i - 1]));
            }
            last_slope = slope;
        }
        Ok(Self { ts, psis, label })
    }

    /// Reads `t,ψ(t)` rows; a non-numeric first row is treated as a header.
    pub fn from_csv(path: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(Path::new(path))?;
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidGenerator(format!("{path}: row {i} has fewer than 2 columns")));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(t), Ok(p)) => points.push((t, p)),
                _ if i == 0 => continue,
                _ => return Err(Error::InvalidGenerator(format!("{path}: row {i} is not numeric"))),
            }
        }
        Self::new(points, format!("table:{path}"))
    }

    fn segment(&self, t: f64) -> usize {
        self.ts[1..].partition_point(|&b| b < t).min(self.ts.len() - 2)
    }

    fn slope_at(&self, t: f64) -> f64 {
        let i = self.segment(t);
        (self.psis[i + 1] - self.psis[i]) / (self.ts[i + 1] - self.ts[i])
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        self.psis[i] + self.slope_at(t) * (t - self.ts[i])
    }

    fn ln_eval(&self, ln_t: f64) -> f64 {
        if ln_t < self.ts[1].ln() {
            (self.psis[1] / self.ts[1]).ln() + ln_t
        } else {
            self.eval(ln_t.exp()).ln()
        }
    }
}

/// Probe grid `u = 2^{-j}` for limits at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitGrid {
    /// Deepest exponent probed.
    pub j_max: u32,
    /// Number of tail points maximized over.
    pub window: u32,
    /// Agreement required between the last two window maxima.
    pub tolerance: f64,
}

impl Default for LimitGrid {
    fn default() -> Self {
        Self {
            j_max: 4096,
            window: 10,
            tolerance: 1e-4,
        }
    }
}

/// Tail-window estimate of a `limsup` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// `log2` of the smallest `u` probed.
    pub grid_min_log2: f64,
    pub window: u32,
    pub converged: bool,
}

impl LimitGrid {
    fn check(&self, min_j: f64) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("limit window must be >= 1"));
        }
        let first = self.j_max as f64 - 2.0 * self.window as f64 + 1.0;
        if first < min_j.max(1.0) {
            return Err(Error::invalid(format!(
                "grid j_max = {} too shallow for a window of {} above j = {min_j}",
                self.j_max, self.window
            )));
        }
        Ok(())
    }

    /// Evaluates `ratio(ln u)` on the last two windows of the grid.
    fn estimate(&self, ratio: impl Fn(f64) -> f64) -> LimitEstimate {
        let w = self.window as usize;
        let values: Vec<f64> = (0..2 * w)
            .map(|i| {
                let j = self.j_max as f64 - (2 * w - 1 - i) as f64;
                ratio(-j * LN_2)
            })
            .collect();
        let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let previous = max(&values[..w]);
        let last = max(&values[w..]);
        LimitEstimate {
            value: last,
            grid_min_log2: -(self.j_max as f64),
            window: self.window,
            converged: (last - previous).abs() <= self.tolerance,
        }
    }
}

/// Estimates `a_ψ(k) = limsup_{u→0} ψ(ku)/ψ(u)`.
pub fn limsup_ratio_k(psi: &ConcaveGenerator, k: u32, grid: &LimitGrid) -> Result<LimitEstimate> {
    if k < 2 {
        return Err(Error::invalid(format!("k = {k} must be >= 2")));
    }
    let ln_k = (k as f64).ln();
    grid.check(ln_k / LN_2)?;
    Ok(grid.estimate(|ln_u| psi.ln_ratio(ln_u, ln_k).exp()))
}

/// Estimates `c_ψ(l) = limsup_{u→0} ψ(u^l)/ψ(u)`.
pub fn limsup_ratio_l(psi: &ConcaveGenerator, l: u32, grid: &LimitGrid) -> Result<LimitEstimate> {
    if l < 2 {
        return Err(Error::invalid(format!("l = {l} must be >= 2")));
    }
    grid.check(1.0)?;
    let l = l as f64;
    Ok(grid.estimate(|ln_u| psi.ln_ratio(ln_u, (l - 1.0) * ln_u).exp()))
}

/// Estimates `limsup_{u→0} (1/ψ(u)) Σ_{s=1}^n ψ(2^{1-s} C(n,s) u^s)`.
///
/// The true limit never exceeds `n`; the estimate is capped there because
/// the finite-`u` sums approach it from above for near-linear `ψ`.
pub fn limsup_general(psi: &ConcaveGenerator, n: u32, grid: &LimitGrid) -> Result<LimitEstimate> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let lf = LnFactorial::new(n as usize);
    let ln_coef: Vec<f64> = (1..=n as usize)
        .map(|s| (1.0 - s as f64) * LN_2 + lf.ln_binomial(n as usize, s))
        .collect();
    // every argument 2^{1-s}C(n,s)u^s must lie in (0, 1]
    let min_j = ln_coef
        .iter()
        .enumerate()
        .map(|(i, c)| c / ((i + 1) as f64 * LN_2))
        .fold(0.0, f64::max);
    grid.check(min_j)?;
    let mut est = grid.estimate(|ln_u| {
        let terms = ln_coef
            .iter()
            .enumerate()
            .map(|(i, c)| psi.ln_ratio(ln_u, c + i as f64 * ln_u).exp());
        crate::scalar::compensated_sum(terms)
    });
    est.value = est.value.min(n as f64);
    Ok(est)
}

/// `c^{ln m / ln l - 1}`: the chained-ratio bound for `limsup ψ(w^m)/ψ(w)`.
pub fn power_ratio_bound(c: f64, m: u32, l: u32) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c = {c} outside (0, 1)")));
    }
    if l < 2 || m < l {
        return Err(Error::invalid(format!("need m >= l >= 2, got m = {m}, l = {l}")));
    }
    Ok(c.powf((m as f64).ln() / (l as f64).ln() - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<ConcaveGenerator> {
        vec![
            ConcaveGenerator::power(1.0).unwrap(),
            ConcaveGenerator::power(0.5).unwrap(),
            ConcaveGenerator::power(0.1).unwrap(),
            ConcaveGenerator::logpow(1.0).unwrap(),
            ConcaveGenerator::logpow(2.0).unwrap(),
            ConcaveGenerator::logpow(8.0).unwrap(),
            ConcaveGenerator::example7(),
            ConcaveGenerator::gauss(),
        ]
    }

    /// Adaptive Simpson on `[a, b]`.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        rec(f, a, b, f(a), f(m), f(b), whole, tol, depth)
    }

    #[test]
    fn builtins_pass_grid_invariants() {
        for psi in builtins() {
            psi.validate_on_grid(60).unwrap_or_else(|e| panic!("{psi}: {e}"));
        }
    }

    #[test]
    fn gauss_closed_form_matches_quadrature() {
        // ψ(t) = ∫_0^t G(z) dz; substitute z = t e^{-s} to tame the log singularity
        let psi = ConcaveGenerator::gauss();
        for &t in &[1.0, 0.5, 0.1, 1e-3, 1e-8] {
            let g = |s: f64| {
                let z = t * (-s).exp();
                if z <= 0.0 {
                    0.0
                } else {
                    crate::special::inverse_erfc(z) * z
                }
            };
            let integral = simpson(&g, 0.0, 80.0, 1e-14, 50);
            let closed = psi.eval(t);
            assert!((integral - closed).abs() < 1e-10, "t={t}: quadrature {integral} vs {closed}");
        }
    }

    #[test]
    fn gauss_derivative_is_inverse_erfc() {
        let psi = ConcaveGenerator::gauss();
        for &t in &[0.9, 0.3, 1e-4] {
            let h = 1e-6 * t;
            let fd = (psi.eval(t + h) - psi.eval(t - h)) / (2.0 * h);
            let d = psi.derivative(t).unwrap();
            assert!((fd / d - 1.0).abs() < 1e-7, "t={t}: {fd} vs {d}");
        }
    }

    #[test]
    fn example7_is_continuous_and_concave_at_the_junction() {
        let psi = ConcaveGenerator::example7();
        let j = EXAMPLE7_JUNCTION;
        assert!((j - (-1.5f64).exp()).abs() < 1e-16);
        assert!((psi.eval(j) - 1.5f64.powf(-0.5)).abs() < 1e-15);
        assert!((psi.eval(j * (1.0 + 1e-9)) - psi.eval(j)).abs() < 1e-8);
        let left = psi.derivative(j * (1.0 - 1e-9)).unwrap();
        let right = psi.derivative(j * (1.0 + 1e-9)).unwrap();
        assert!((left - right).abs() < 1e-6);
        assert!((example7_slope() - 0.5 * 1.5f64.powf(-1.5) * 1.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn ln_eval_agrees_with_eval() {
        for psi in builtins() {
            for &t in &[1.0f64, 0.7, 0.2, 1e-3, 1e-40, 1e-300] {
                let a = psi.ln_eval(t.ln());
                let b = psi.eval(t).ln();
                assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{psi} at {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ln_ratio_agrees_with_difference() {
        for psi in builtins() {
            for &ln_u in &[-0.1, -1.0, -3.0, -40.0, -700.0] {
                for &ln_k in &[-5.0, -0.3, 0.0, 0.7, 0.09] {
                    let a = psi.ln_ratio(ln_u, ln_k);
                    let b = psi.ln_eval((ln_u + ln_k).min(0.0)) - psi.ln_eval(ln_u);
                    assert!((a - b).abs() < 1e-12 * (1.0 + ln_u.abs()), "{psi}, ln u={ln_u}, ln k={ln_k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn ln_ratio_stays_accurate_deep() {
        let l = 1e12f64;
        let lp = ConcaveGenerator::logpow(2.0).unwrap();
        let expect = 3f64.ln() + (-(3f64.ln()) / (1.0 + l)).ln_1p() / 2.0;
        assert_eq!(lp.ln_ratio(-l, 3f64.ln()), expect);
        let g = ConcaveGenerator::gauss().ln_ratio(-l, 2f64.ln());
        // ψ(t) ~ t·ln^{1/2}(1/t), so ψ(2u)/ψ(u) ≈ 2(1 - ln 2/(2L))
        assert!((g - (2f64.ln() - 2f64.ln() / (2.0 * l))).abs() < 1e-15, "{g}");
    }

    #[test]
    fn ratio_k_examples() {
        let g = LimitGrid::default();
        let e = limsup_ratio_k(&ConcaveGenerator::power(1.0).unwrap(), 2, &g).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12 && e.converged);
        let e = limsup_ratio_k(&ConcaveGenerator::power(0.5).unwrap(), 2, &g).unwrap();
        assert!((e.value - 2f64.sqrt()).abs() < 1e-9);
        let e = limsup_ratio_k(&ConcaveGenerator::example7(), 2, &g).unwrap();
        assert!((e.value - 1.0).abs() < 1e-3, "{e:?}");
        assert!(e.converged);
        assert!(limsup_ratio_k(&ConcaveGenerator::example7(), 1, &g).is_err());
    }

    #[test]
    fn ratio_l_examples() {
        let g = LimitGrid::default();
        let e = limsup_ratio_l(&ConcaveGenerator::example7(), 2, &g).unwrap();
        assert!((e.value - 0.5f64.sqrt()).abs() < 1e-3);
        let e = limsup_ratio_l(&ConcaveGenerator::power(0.5).unwrap(), 2, &g).unwrap();
        assert!(e.value.abs() < 1e-12 && e.converged);
        let e = limsup_ratio_l(&ConcaveGenerator::power(1.0).unwrap(), 2, &g).unwrap();
        assert!(e.value.abs() < 1e-12);
    }

    #[test]
    fn general_limit_examples() {
        let g = LimitGrid::default();
        for n in [1, 2, 5, 33, 200] {
            let e = limsup_general(&ConcaveGenerator::power(1.0).unwrap(), n, &g).unwrap();
            assert!((e.value - n as f64).abs() < 1e-9 * n as f64, "n={n}: {e:?}");
        }
        let e = limsup_general(&ConcaveGenerator::power(0.5).unwrap(), 4, &g).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6);
        for psi in builtins() {
            let e = limsup_general(&psi, 1, &g).unwrap();
            assert!((e.value - 1.0).abs() < 1e-12, "{psi}");
        }
    }

    #[test]
    fn ratios_respect_concavity_bounds() {
        let g = LimitGrid::default();
        for psi in builtins() {
            for k in [2, 3, 5, 16] {
                let a = limsup_ratio_k(&psi, k, &g).unwrap();
                assert!(a.value <= k as f64 + 1e-12, "{psi}, k={k}: {a:?}");
            }
            for l in [2, 3, 7] {
                let c = limsup_ratio_l(&psi, l, &g).unwrap();
                assert!(c.value <= 1.0 + 1e-12, "{psi}, l={l}: {c:?}");
            }
            for n in [2, 8, 64] {
                let e = limsup_general(&psi, n, &g).unwrap();
                assert!(e.value > 0.0 && e.value <= n as f64);
            }
        }
    }

    #[test]
    fn power_ratio_bound_examples() {
        assert!((power_ratio_bound(0.5, 2, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((power_ratio_bound(0.5, 4, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((power_ratio_bound(0.707107, 8, 2).unwrap() - 0.5).abs() < 1e-6);
        assert!(power_ratio_bound(1.0, 4, 2).is_err());
        assert!(power_ratio_bound(0.0, 4, 2).is_err());
        assert!(power_ratio_bound(0.5, 2, 3).is_err());
    }

    #[test]
    fn chained_ratio_inequality() {
        let g = LimitGrid::default();
        for psi in builtins() {
            for l in [2u32, 3] {
                let c = limsup_ratio_l(&psi, l, &g).unwrap().value;
                if c + g.tolerance >= 1.0 {
                    continue;
                }
                for m in [l, l + 1, l * l, 20] {
                    let measured = limsup_ratio_l(&psi, m, &g).unwrap().value;
                    let bound = power_ratio_bound((c + g.tolerance).min(1.0 - 1e-15), m, l).unwrap();
                    assert!(measured <= bound + 1e-12, "{psi}, l={l}, m={m}: {measured} > {bound}");
                }
            }
        }
    }

    #[test]
    fn dsl_round_trip_and_errors() {
        for s in ["power:0.5", "logpow:2", "example7", "gauss"] {
            assert_eq!(ConcaveGenerator::from_dsl(s).unwrap().label(), s);
        }
        match ConcaveGenerator::from_dsl("powr:0.5") {
            Err(Error::Dsl { token, .. }) => assert_eq!(token, "powr"),
            other => panic!("{other:?}"),
        }
        match ConcaveGenerator::from_dsl("power:abc") {
            Err(Error::Dsl { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("{other:?}"),
        }
        assert!(ConcaveGenerator::from_dsl("power:1.5").is_err());
        assert!(ConcaveGenerator::from_dsl("logpow:0.5").is_err());
        assert!(ConcaveGenerator::from_dsl("gauss:1").is_err());
    }

    #[test]
    fn table_generator() {
        let t = ConcaveGenerator::table(vec![(0.25, 0.5), (0.5, 0.75), (1.0, 1.0)]).unwrap();
        assert!((t.eval(0.125) - 0.25).abs() < 1e-15);
        assert!((t.eval(0.75) - 0.875).abs() < 1e-15);
        assert!((t.ln_eval(-1000.0) - (2f64.ln() - 1000.0)).abs() < 1e-12);
        t.validate_on_grid(60).unwrap();
        assert!(ConcaveGenerator::table(vec![(0.5, 0.2), (1.0, 1.0)]).is_err(), "convex kink");
        assert!(ConcaveGenerator::table(vec![(0.5, 0.5), (0.9, 1.0)]).is_err(), "must end at 1");
        assert!(ConcaveGenerator::table(vec![(0.5, 0.5), (1.0, 0.4)]).is_err(), "decreasing");

        let dir = std::env::temp_dir().join(format!("rispace-table-{}.csv", std::process::id()));
        std::fs::write(&dir, "t,psi\n0.25,0.5\n0.5,0.75\n1,1\n").unwrap();
        let dsl = format!("table:{}", dir.display());
        let from_file = ConcaveGenerator::from_dsl(&dsl).unwrap();
        assert!((from_file.eval(0.75) - 0.875).abs() < 1e-15);
        assert_eq!(from_file.label(), dsl);
        std::fs::remove_file(dir).ok();
    }
}
