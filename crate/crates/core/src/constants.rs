//! Routing-time constants and the closed-form quantities behind them.
//!
//! Products and factorials are evaluated in log space: `k!/∏(r+i)` is
//! `exp(-Σ log(1 + r/i))`, which stays finite for `k` in the tens of thousands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimize::minimize_positive;

/// Which infimum of `(r + offset) / Σ log(1 + r/i)` a constant is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// `c_k` (offset 0), the fixed-pair constant.
    Pair,
    /// `c_k′` (offset 1), the sup-over-targets constant.
    SupTargets,
    /// `c_k*` (offset 2), the sup-over-pairs constant.
    SupPairs,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 3] = [
        ConstantKind::Pair,
        ConstantKind::SupTargets,
        ConstantKind::SupPairs,
    ];

    pub fn offset(self) -> u32 {
        match self {
            ConstantKind::Pair => 0,
            ConstantKind::SupTargets => 1,
            ConstantKind::SupPairs => 2,
        }
    }

    pub fn from_offset(offset: u32) -> Option<Self> {
        ConstantKind::ALL.into_iter().find(|c| c.offset() == offset)
    }
}

/// The rate function `h(r) = (r + offset) / Σ_{i=1}^k log(1 + r/i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateFunctionSpec {
    pub k: usize,
    pub kind: ConstantKind,
}

impl RateFunctionSpec {
    pub fn new(k: usize, kind: ConstantKind) -> Self {
        assert!(k >= 1, "k must be at least 1");
        RateFunctionSpec { k, kind }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        rate_h(self.k, self.kind, r)
    }

    pub fn infimum(&self) -> f64 {
        constant(self.k, self.kind)
    }
}

/// One row of the constants table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub k: usize,
    pub c_k: f64,
    pub c_k_prime: f64,
    pub c_k_star: f64,
}

impl ConstantsRow {
    pub fn new(k: usize) -> Self {
        ConstantsRow {
            k,
            c_k: constant(k, ConstantKind::Pair),
            c_k_prime: constant(k, ConstantKind::SupTargets),
            c_k_star: constant(k, ConstantKind::SupPairs),
        }
    }

    pub fn get(&self, kind: ConstantKind) -> f64 {
        match kind {
            ConstantKind::Pair => self.c_k,
            ConstantKind::SupTargets => self.c_k_prime,
            ConstantKind::SupPairs => self.c_k_star,
        }
    }
}

/// `H_k`, summed from the smallest term up.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).rev().map(|i| 1.0 / i as f64).sum()
}

/// `Σ_{i=1}^k log(1 + r/i)`, smallest terms first.
pub fn log_sum(k: usize, r: f64) -> f64 {
    (1..=k).rev().map(|i| (r / i as f64).ln_1p()).sum()
}

/// `(r + offset) / Σ log(1 + r/i)` for `r > 0`.
pub fn rate_h(k: usize, kind: ConstantKind, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Domain { what: "r" });
    }
    Ok((r + kind.offset() as f64) / log_sum(k, r))
}

/// `c_k = 1/H_k` in closed form; `c_k′`, `c_k*` as `inf_{r>0}` of the rate function.
pub fn constant(k: usize, kind: ConstantKind) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    match kind {
        ConstantKind::Pair => 1.0 / harmonic(k),
        _ => {
            let offset = kind.offset() as f64;
            minimize_positive(|r| (r + offset) / log_sum(k, r)).value
        }
    }
}

pub fn constants_table(ks: impl IntoIterator<Item = usize>) -> Vec<ConstantsRow> {
    ks.into_iter().map(ConstantsRow::new).collect()
}

/// `E[(B_1 ⋯ B_t)^r] = (k! / ∏_{i=1}^k (r + i))^t` for `B_s` the minimum of `k` uniforms.
pub fn beta_product_moment(k: usize, r: f64, t: u32) -> f64 {
    (-(t as f64) * log_sum(k, r)).exp()
}

/// Log of the moment bound `(k!/∏(r+i))^t · n^r` (before clamping).
fn log_moment_bound(n: f64, k: usize, t: u32, r: f64) -> f64 {
    r * n.ln() - t as f64 * log_sum(k, r)
}

/// `P{n B_1⋯B_t ≥ 1} ≤ (k!/∏(r+i))^t n^r`, clamped to `[0, 1]`.
pub fn tail_bound(n: f64, k: usize, t: u32, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Domain { what: "r" });
    }
    Ok(log_moment_bound(n, k, t, r).exp().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizedBound {
    pub bound: f64,
    /// The exponent `r` attaining the bound.
    pub r: f64,
}

/// [`tail_bound`] minimized over `r > 0`.
pub fn optimized_tail_bound(n: f64, k: usize, t: u32) -> OptimizedBound {
    let m = minimize_positive(|r| log_moment_bound(n, k, t, r));
    OptimizedBound {
        bound: m.value.exp().min(1.0),
        r: m.argmin,
    }
}

/// `P{G_1 ≤ i} = (1 - 2^{-i})^k`.
pub fn g1_cdf(k: usize, i: u32) -> f64 {
    if i == 0 {
        return 0.0;
    }
    (k as f64 * (-(0.5f64).powi(i as i32)).ln_1p()).exp()
}

/// `P{G_1 > i}`, accurate in the far tail.
pub fn g1_tail(k: usize, i: u32) -> f64 {
    if i == 0 {
        return 1.0;
    }
    -(k as f64 * (-(0.5f64).powi(i as i32)).ln_1p()).exp_m1()
}

/// Truncation threshold for the `E[G_1]` series.
pub const G1_SERIES_TOL: f64 = 1e-15;

/// `E[G_1] = Σ_{i≥0} P{G_1 > i}`.
///
/// Since `1 - (1 - x)^k ≤ kx`, the remaining tail after term `i` is at most
/// `k 2^{-i}`; summation stops once that drops below [`G1_SERIES_TOL`].
pub fn expected_g1(k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let mut terms = Vec::new();
    let mut i = 0u32;
    loop {
        terms.push(g1_tail(k, i));
        if k as f64 * (0.5f64).powi(i as i32) < G1_SERIES_TOL {
            break;
        }
        i += 1;
    }
    terms.iter().rev().sum()
}

/// `g(k) = log 2 · E[G_1]`.
pub fn g_of_k(k: usize) -> f64 {
    std::f64::consts::LN_2 * expected_g1(k)
}
