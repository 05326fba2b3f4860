//! Special functions and log-space helpers.

use std::f64::consts::{LN_2, PI};


pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`, `-inf` for an empty or all-`-inf` input.
pub fn ln_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = crate::scalar::compensated_sum(xs.iter().map(|x| (x - max).exp()));
    max + s.ln()
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(e^x - 1)` for `x >= 0`.
pub fn ln_exp_m1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Table of `ln k!` built by compensated summation of `ln i`.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = crate::scalar::CompensatedSum::new();
        table.push(0.0);
        for i in 1..=max {
            acc.add((i as f64).ln());
            table.push(acc.value());
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Complementary error function, switching to the continued fraction for `x >= 3`.
pub fn erfc(x: f64) -> f64 {
    if x < ERFCX_SWITCH {
        libm::erfc(x)
    } else {
        erfcx(x) * (-x * x).exp()
    }
}

const ERFCX_SWITCH: f64 = 3.0;

/// Scaled complementary error function `e^{x²} erfc(x)` for `x >= 0`.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < ERFCX_SWITCH {
        (x * x).exp() * libm::erfc(x)
    } else {
        // continued fraction erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut tail = x;
        for k in (1..=40).rev() {
            tail = x + (k as f64 / 2.0) / tail;
        }
        1.0 / (SQRT_PI * tail)
    }
}

/// `ln erfc(x)` for `x >= 0`, accurate far into the tail.
pub fn ln_erfc(x: f64) -> f64 {
    erfcx(x).ln() - x * x
}

/// Inverse of `erfc` on `(0, 1]`, returning `G(z) >= 0` with `erfc(G(z)) = z`.
///
/// Written as the inverse of the tail function `F(t) = (2/√π)∫_t^∞ e^{-s²} ds`,
/// so `G` is the quantile function of `|X|` for `X ~ N(0, 1/2)`.
pub fn inverse_erfc(z: f64) -> f64 {
    assert!(z > 0.0 && z <= 1.0, "inverse_erfc: z = {z} outside (0, 1]");
    inverse_erfc_ln(z.ln())
}

/// [`inverse_erfc`] taking `ln z`, for arguments far below the float range.
pub fn inverse_erfc_ln(ln_z: f64) -> f64 {
    assert!(ln_z <= 0.0, "inverse_erfc_ln: ln z = {ln_z} > 0");
    if ln_z == 0.0 {
        return 0.0;
    }
    let mut g = initial_inverse_erfc(ln_z);
    // Newton on h(g) = ln erfc(g) - ln z, h'(g) = -2/(√π erfcx(g)).
    for _ in 0..50 {
        let ex = erfcx(g);
        let h = ex.ln() - g * g - ln_z;
        let step = h * SQRT_PI * ex / 2.0;
        let next = (g + step).max(0.0);
        if (next - g).abs() <= 1e-16 * next.max(1.0) || h.abs() < 1e-15 {
            return next;
        }
        g = next;
    }
    g
}

fn initial_inverse_erfc(ln_z: f64) -> f64 {
    if ln_z > -0.35 {
        // erfc(g) ≈ 1 - 2g/√π near g = 0, with the odd cubic correction
        let x = -ln_z.exp_m1();
        let a = SQRT_PI * x / 2.0;
        a + a * a * a / 3.0
    } else {
        // erfc(g) ≈ e^{-g²}/(g√π): g² ≈ w - ln(√π g)
        let w = -ln_z;
        let mut g = (w - 0.5 * (PI * w).ln()).max(0.25).sqrt();
        for _ in 0..3 {
            g = (w - (SQRT_PI * g).ln()).max(0.0625).sqrt();
        }
        g
    }
}
