//! Reference rotation numbers and default tolerances.

/// √2 − 1 rounded to the nearest double.
pub const SQRT2_MINUS_1: f64 = 0.414_213_562_373_095_03;

/// (√5 − 1)/2 rounded to the nearest double.
pub const GOLDEN_MEAN_CONJ: f64 = 0.618_033_988_749_894_8;

/// Deck-equivariance and inverse-consistency tolerance.
pub const EPS_DECK: f64 = 1e-9;

/// Relative growth allowed between the N/2 and N rows of a sup ladder for a
/// quantity to still be called bounded.
pub const TOL_GROWTH: f64 = 0.05;

/// Absolute floor added to growth comparisons so that identically zero
/// ladders count as bounded.
pub const GROWTH_FLOOR: f64 = 1e-9;

/// Truncated Liouville number `Σ_{j=1..terms} 10^{-j!}` as a double.
pub fn liouville(terms: u32) -> f64 {
    let mut fact: u32 = 1;
    let mut sum = 0.0;
    for j in 1..=terms {
        fact *= j;
        sum += 10f64.powi(-(fact as i32));
    }
    sum
}

/// Resolution below which a rotation interval is reported as a point.
pub fn tol_singleton(m_max: usize) -> f64 {
    (4.0 / m_max as f64).max(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_closed_forms() {
        assert!((SQRT2_MINUS_1 - (2f64.sqrt() - 1.0)).abs() <= 2.0 * f64::EPSILON);
        assert!((GOLDEN_MEAN_CONJ - (5f64.sqrt() - 1.0) / 2.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn liouville_terms() {
        assert_eq!(liouville(1), 0.1);
        assert!((liouville(4) - 0.110_001).abs() < 1e-15);
    }

    #[test]
    fn singleton_tolerance_floor() {
        assert_eq!(tol_singleton(1000), 0.004);
        assert_eq!(tol_singleton(100_000_000), 1e-6);
    }
}
