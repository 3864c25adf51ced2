//! Small special-function kit: digamma and harmonic numbers, which set the
//! power offsets of the high-SNR rate asymptotes.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma function for positive real arguments.
///
/// Small arguments are shifted up with `psi(x) = psi(x+1) - 1/x` until the
/// asymptotic expansion `ln x - 1/(2x) - sum B_2n / (2n x^2n)` is accurate
/// to around 1e-14.
pub fn digamma(mut x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires a positive argument, got {x}");
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 120.0
                    + inv2 * (1.0 / 252.0 + inv2 * (-1.0 / 240.0 + inv2 * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 * inv - tail
}

/// n-th harmonic number, `H_0 = 0`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}
