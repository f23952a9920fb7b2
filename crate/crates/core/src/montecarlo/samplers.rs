//! Samplers for the dominating product process and the infinite-trie walk.

use rand::Rng;

use crate::constants::g1_cdf;

/// Minimum of `k` independent uniforms on `[0, 1)`.
pub fn sample_beta_min<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    (0..k).map(|_| rng.random::<f64>()).fold(1.0, f64::min)
}

/// `W_t = s0 · B_1 ⋯ B_t`.
pub fn sample_w<R: Rng + ?Sized>(s0: f64, k: usize, t: u32, rng: &mut R) -> f64 {
    (0..t).fold(s0, |w, _| w * sample_beta_min(k, rng))
}

/// One draw of `G_1`, by inverting `P{G_1 ≤ i} = (1 - 2^{-i})^k`.
///
/// Support is `{1, 2, …}`. The closed-form guess is corrected against the
/// exact CDF so rounding never shifts mass between neighbours.
pub fn sample_g1<R: Rng + ?Sized>(k: usize, rng: &mut R) -> u32 {
    assert!(k >= 1, "k must be at least 1");
    let u: f64 = rng.random();
    let guess = -(1.0 - u.powf(1.0 / k as f64)).log2();
    let mut i = if guess.is_finite() {
        (guess.ceil() as u32).clamp(1, 1100)
    } else {
        1100
    };
    while g1_cdf(k, i) < u {
        i += 1;
    }
    while i > 1 && g1_cdf(k, i - 1) >= u {
        i -= 1;
    }
    i
}

/// `T_n = min{t ≥ 1 : G_1 + ⋯ + G_t ≥ log₂ n}`.
pub fn sample_t_n<R: Rng + ?Sized>(n: u64, k: usize, rng: &mut R) -> u32 {
    assert!(n >= 2, "n must be at least 2");
    let level = (n as f64).log2();
    let mut sum = 0u64;
    let mut t = 0;
    while t == 0 || (sum as f64) < level {
        sum += u64::from(sample_g1(k, rng));
        t += 1;
    }
    t
}

/// First `t` at which `mult · B_1 ⋯ B_t < 1`, with `t = 0` when `mult < 1`.
/// `P{result > t} = P{mult · B_1 ⋯ B_t ≥ 1}`.
pub fn product_passage<R: Rng + ?Sized>(mult: f64, k: usize, rng: &mut R) -> u32 {
    let mut w = mult;
    let mut t = 0;
    while w >= 1.0 {
        w *= sample_beta_min(k, rng);
        t += 1;
    }
    t
}
