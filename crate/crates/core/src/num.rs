//! Tolerant comparisons for money amounts.
//!
//! The tolerance is 1e-9, scaled by the magnitude of the operands once they
//! exceed 1 so that satoshi-denominated instances do not trip on rounding.

pub const TOL: f64 = 1e-9;

#[inline]
fn scale(a: f64, b: f64) -> f64 {
    a.abs().max(b.abs()).max(1.0)
}

/// `a >= b` up to tolerance.
#[inline]
pub fn ge(a: f64, b: f64) -> bool {
    a >= b - TOL * scale(a, b)
}

/// `a <= b` up to tolerance.
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + TOL * scale(a, b)
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * scale(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons_absorb_rounding() {
        assert!(ge(0.1 + 0.2, 0.3));
        assert!(le(0.3, 0.1 + 0.2 - 1e-12));
        assert!(!ge(2.0, 4.0));
        assert!(ge(1e7 - 1e-3, 1e7));
        assert!(!ge(1e7 - 1.0, 1e7));
        assert!(approx_eq(1.0, 1.0 + 1e-12));
    }
}
