//! Small numeric helpers shared across modules.

/// `base^exp` for `base >= 0` and `exp > 0`, with `0^exp = 0`.
///
/// Negative bases are clamped to zero: every caller feeds the positive part
/// of a quantity.
#[inline]
pub(crate) fn pow_pos(base: f64, exp: f64) -> f64 {
    if base <= 0.0 {
        0.0
    } else {
        base.powf(exp)
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Sign of `x` with `sign(0) = 0` (unlike `f64::signum`).
#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
