//! Lorentz, Marcinkiewicz, Orlicz and `L_{p,q}` norms of step functions.
//!
//! Norms are evaluated on a [`Profile`]: the decreasing rearrangement with
//! cumulative measures kept in log space, so laws with atoms of mass `2^{-1000}`
//! are handled without underflow.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::generators::ConcaveGenerator;
use crate::scalar::compensated_sum;
use crate::special::{ln_add_exp, ln_exp_m1, ln_one_minus_exp};
use crate::stepfn::StepFunction;

/// Convex Orlicz function `M` with `M(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrliczFn {
    /// `N_p(u) = e^{u^p} - 1`, `p >= 1`.
    Np(f64),
    /// `u^p`, `p >= 1`; the Luxemburg norm is the `L_p` norm.
    Power(f64),
}

impl OrliczFn {
    pub fn validate(&self) -> Result<()> {
        let p = match self {
            Self::Np(p) | Self::Power(p) => *p,
        };
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("Orlicz exponent {p} must be finite and >= 1")));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Np(p) => x.powf(*p).exp_m1(),
            Self::Power(p) => x.powf(*p),
        }
    }

    /// `ln M(x)` for `x >= 0`.
    pub fn ln_eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Self::Np(p) => ln_exp_m1(x.powf(*p)),
            Self::Power(p) => p * x.ln(),
        }
    }

    /// `M^{-1}(y)` for `y >= 0`.
    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            Self::Np(p) => y.ln_1p().powf(1.0 / p),
            Self::Power(p) => y.powf(1.0 / p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Np(p) => format!("Np:{p}"),
            Self::Power(p) => format!("power:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    Lorentz(ConcaveGenerator),
    Marcinkiewicz(ConcaveGenerator),
    Orlicz(OrliczFn),
    Lpq { p: f64, q: f64 },
}

impl SpaceSpec {
    pub fn lpq(p: f64, q: f64) -> Result<Self> {
        check_lpq(p, q)?;
        Ok(Self::Lpq { p, q })
    }

    pub fn orlicz(m: OrliczFn) -> Result<Self> {
        m.validate()?;
        Ok(Self::Orlicz(m))
    }

    /// Parses `lorentz:<gen>`, `marcinkiewicz:<gen>`, `orlicz:Np:<p>`,
    /// `orlicz:power:<p>` or `lpq:<p>:<q>`.
    pub fn from_dsl(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').ok_or_else(|| Error::dsl(s, s))?;
        let num = |tok: &str| tok.trim().parse::<f64>().map_err(|_| Error::dsl(tok, s));
        let regen = |r: &str| {
            ConcaveGenerator::from_dsl(r).map_err(|e| match e {
                Error::Dsl { token, .. } => Error::dsl(token, s),
                other => other,
            })
        };
        match head.trim() {
            "lorentz" => Ok(Self::Lorentz(regen(rest)?)),
            "marcinkiewicz" => Ok(Self::Marcinkiewicz(regen(rest)?)),
            "orlicz" => {
                let (kind, p) = rest.split_once(':').ok_or_else(|| Error::dsl(rest, s))?;
                match kind.trim() {
                    "Np" => Self::orlicz(OrliczFn::Np(num(p)?)),
                    "power" => Self::orlicz(OrliczFn::Power(num(p)?)),
                    other => Err(Error::dsl(other, s)),
                }
            }
            "lpq" => {
                let (p, q) = rest.split_once(':').ok_or_else(|| Error::dsl(rest, s))?;
                Self::lpq(num(p)?, num(q)?)
            }
            other => Err(Error::dsl(other, s)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Lorentz(g) => format!("lorentz:{}", g.label()),
            Self::Marcinkiewicz(g) => format!("marcinkiewicz:{}", g.label()),
            Self::Orlicz(m) => format!("orlicz:{}", m.label()),
            Self::Lpq { p, q } => format!("lpq:{p}:{q}"),
        }
    }

    pub fn norm(&self, f: &StepFunction<f64>) -> Result<f64> {
        self.profile_norm(&Profile::from_step(f))
    }

    pub fn profile_norm(&self, f: &Profile) -> Result<f64> {
        match self {
            Self::Lorentz(psi) => Ok(f.lorentz(psi)),
            Self::Marcinkiewicz(phi) => Ok(f.marcinkiewicz(phi)),
            Self::Orlicz(m) => f.orlicz(m),
            Self::Lpq { p, q } => f.lpq(*p, *q),
        }
    }

    /// Norm of `χ_(0,u]`.
    pub fn indicator_norm(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Lorentz(psi) => psi.eval(u),
            Self::Marcinkiewicz(phi) => u / phi.eval(u),
            Self::Orlicz(m) => 1.0 / m.inverse(1.0 / u),
            Self::Lpq { p, .. } => u.powf(1.0 / p),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_lpq(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("L_pq needs p > 1, got {p}")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("L_pq needs q >= 1, got {q}")));
    }
    Ok(())
}

/// Decreasing rearrangement `Σ v_i χ_(T_{i-1}, T_i]` with `v_1 > v_2 > ... > 0`,
/// stored through `ln T_i` and `ln (T_i - T_{i-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    ln_right: Vec<f64>,
    ln_len: Vec<f64>,
}

impl Profile {
    pub fn from_step(f: &StepFunction<f64>) -> Self {
        let r = f.rearrange();
        let pieces = r
            .pieces()
            .filter(|(_, _, v)| **v > 0.0)
            .map(|(l, r, v)| (v.abs(), (r - l).ln()));
        Self::from_ln_masses(pieces).expect("step function pieces have total length 1")
    }

    /// Builds the rearrangement of `|X|` from `(value, ln mass)` pairs; values
    /// may repeat and appear in any order, and missing mass is set to zero.
    pub fn from_ln_masses(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms
            .into_iter()
            .map(|(v, m)| (v.abs(), m))
            .filter(|&(v, m)| v > 0.0 && m > f64::NEG_INFINITY)
            .collect();
        if let Some(&(v, m)) = atoms.iter().find(|(v, m)| !v.is_finite() || m.is_nan()) {
            return Err(Error::invalid(format!("non-finite atom ({v}, ln mass {m})")));
        }
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values: Vec<f64> = Vec::new();
        let mut ln_len: Vec<f64> = Vec::new();
        for (v, m) in atoms {
            match values.last() {
                Some(&last) if last == v => {
                    let l = ln_len.last_mut().expect("parallel vectors");
                    *l = ln_add_exp(*l, m);
                }
                _ => {
                    values.push(v);
                    ln_len.push(m);
                }
            }
        }
        let mut ln_right = Vec::with_capacity(ln_len.len());
        let mut acc = f64::NEG_INFINITY;
        for &l in &ln_len {
            acc = ln_add_exp(acc, l);
            ln_right.push(acc);
        }
        if acc > 1e-12 {
            return Err(Error::invalid(format!("total mass e^{acc} exceeds 1")));
        }
        for t in &mut ln_right {
            *t = t.min(0.0);
        }
        Ok(Self {
            values,
            ln_right,
            ln_len,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn support_measure(&self) -> f64 {
        self.ln_right.last().map_or(0.0, |t| t.exp())
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    /// `(v_i, ln T_i, ln len_i)` for each positive level.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len()).map(|i| (self.values[i], self.ln_right[i], self.ln_len[i]))
    }

    pub fn scale(&self, c: f64) -> Self {
        let c = c.abs();
        if c == 0.0 {
            return Self { values: vec![], ln_right: vec![], ln_len: vec![] };
        }
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// `Σ (v_i - v_{i+1}) ψ(T_i)`, the Stieltjes sum in Abel form.
    pub fn lorentz(&self, psi: &ConcaveGenerator) -> f64 {
        let n = self.values.len();
        compensated_sum((0..n).map(|i| {
            let next = if i + 1 < n { self.values[i + 1] } else { 0.0 };
            (self.values[i] - next) * psi.ln_eval(self.ln_right[i]).exp()
        }))
    }

    /// `max_i F(T_i)/φ(T_i)`, `F(t) = ∫_0^t f*`.
    ///
    /// On each piece `F` is affine and `φ` concave, so the ratio is
    /// quasi-convex there and its maximum sits at a breakpoint.
    pub fn marcinkiewicz(&self, phi: &ConcaveGenerator) -> f64 {
        let mut ln_f = f64::NEG_INFINITY;
        let mut best = 0.0f64;
        for i in 0..self.values.len() {
            ln_f = ln_add_exp(ln_f, self.values[i].ln() + self.ln_len[i]);
            best = best.max((ln_f - phi.ln_eval(self.ln_right[i])).exp());
        }
        best
    }

    fn ln_modular(&self, m: &OrliczFn, ln_lambda: f64) -> f64 {
        let terms: Vec<f64> = (0..self.values.len())
            .map(|i| self.ln_len[i] + m.ln_eval((self.values[i].ln() - ln_lambda).exp()))
            .collect();
        crate::special::ln_sum_exp(&terms)
    }

    /// Luxemburg norm `inf{λ > 0 : Σ len_i M(v_i/λ) <= 1}`.
    pub fn orlicz(&self, m: &OrliczFn) -> Result<f64> {
        m.validate()?;
        if self.is_zero() {
            return Ok(0.0);
        }
        // at λ = sup/M^{-1}(1/m(supp)) the modular is at most 1
        let ln_supp = *self.ln_right.last().expect("nonzero");
        let y = (-ln_supp).exp();
        let mut hi = self.sup().ln() - m.inverse(y).ln();
        if !hi.is_finite() {
            hi = self.sup().ln();
            while self.ln_modular(m, hi) > 0.0 {
                hi += LN_2;
            }
        }
        let mut lo = hi - LN_2;
        let mut halvings = 0;
        while self.ln_modular(m, lo) <= 0.0 {
            hi = lo;
            lo -= LN_2;
            halvings += 1;
            if halvings > 2000 {
                return Err(Error::Degenerate(format!("{}: no lower bracket for the Luxemburg norm", m.label())));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(hi.exp());
            }
            if self.ln_modular(m, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Degenerate(format!("{}: bisection did not converge", m.label())))
    }

    /// `((q/p) ∫ (f*(t) t^{1/p})^q dt/t)^{1/q} = (Σ v_i^q (T_i^{q/p} - T_{i-1}^{q/p}))^{1/q}`.
    pub fn lpq(&self, p: f64, q: f64) -> Result<f64> {
        check_lpq(p, q)?;
        let a = q / p;
        let mut prev = f64::NEG_INFINITY;
        let terms = (0..self.values.len()).map(|i| {
            let t = self.ln_right[i];
            let ln_diff = a * t + ln_one_minus_exp(a * (prev - t));
            prev = t;
            (q * self.values[i].ln() + ln_diff).exp()
        });
        Ok(compensated_sum(terms.collect::<Vec<_>>()).powf(1.0 / q))
    }
}

pub fn lorentz_norm(f: &StepFunction<f64>, psi: &ConcaveGenerator) -> f64 {
    Profile::from_step(f).lorentz(psi)
}

pub fn marcinkiewicz_norm(f: &StepFunction<f64>, phi: &ConcaveGenerator) -> f64 {
    Profile::from_step(f).marcinkiewicz(phi)
}

pub fn orlicz_norm(f: &StepFunction<f64>, m: &OrliczFn) -> Result<f64> {
    Profile::from_step(f).orlicz(m)
}

pub fn lpq_norm(f: &StepFunction<f64>, p: f64, q: f64) -> Result<f64> {
    Profile::from_step(f).lpq(p, q)
}

/// `‖σ_τ‖` on `Λ(ψ)`: `sup_{0<u<=1} ψ(min(1, τu))/ψ(u)`.
///
/// Searched on `u = 2^{-j/8}` down to `2^{-64}`, then on `ln u = -e^x` out to
/// `|ln u| = 10^{12}` to capture suprema reached only as `u → 0`, with
/// golden-section refinement around the best point of the shallow grid.
pub fn dilation_norm_lorentz(tau: f64, psi: &ConcaveGenerator) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("dilation factor {tau} must be positive")));
    }
    let ln_tau = tau.ln();
    let ratio = |ln_u: f64| psi.ln_ratio(ln_u.min(0.0), ln_tau).exp();
    let start = (-ln_tau).min(0.0);
    let shallow: Vec<f64> = std::iter::once(0.0)
        .chain((0..=8 * 64).map(|j| start - j as f64 * LN_2 / 8.0))
        .collect();
    let (mut arg, mut best) = (0usize, ratio(0.0));
    for (i, &x) in shallow.iter().enumerate() {
        let r = ratio(x);
        if r > best {
            best = r;
            arg = i;
        }
    }
    let x0 = (-shallow[shallow.len() - 1]).ln();
    let x1 = 1e12f64.ln();
    for i in 0..=400 {
        let x = x0 + (x1 - x0) * i as f64 / 400.0;
        best = best.max(ratio(-x.exp()));
    }
    let lo = shallow.get(arg + 1).copied().unwrap_or(shallow[arg] - LN_2);
    let hi = if arg == 0 { 0.0 } else { shallow[arg - 1] };
    let (_, r) = golden_max(&ratio, lo, hi, 1e-12);
    Ok(best.max(r))
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd { (c, fc) } else { (d, fd) }
}
