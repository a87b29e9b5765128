//! Smooth step and cutoff functions shared by the homotopy and the surgery construction.

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn flat(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// C^∞ step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `σ(x) + σ(1 − x) = 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = flat(x);
    let b = flat(1.0 - x);
    a / (a + b)
}
