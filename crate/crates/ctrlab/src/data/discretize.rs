//! Numeric-field discretization for Criteo-style integer columns.

/// Token for absent values.
pub const MISSING_TOKEN: &str = "<missing>";

/// Map a raw integer to its categorical token: values above 2 are bucketed
/// by `floor(ln(x)^2)` (the Criteo-winner convention), values at or below 2
/// pass through as their literal decimal string, absent values map to a
/// dedicated marker. Total over the raw domain.
pub fn discretize_numeric(x: Option<i64>) -> String {
    match x {
        None => MISSING_TOKEN.to_string(),
        Some(v) if v > 2 => {
            let l = (v as f64).ln();
            format!("{}", (l * l).floor() as i64)
        }
        Some(v) => format!("{v}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_gets_marker() {
        assert_eq!(discretize_numeric(None), "<missing>");
    }

    #[test]
    fn at_or_below_threshold_passes_through() {
        assert_eq!(discretize_numeric(Some(2)), "2");
        assert_eq!(discretize_numeric(Some(1)), "1");
        assert_eq!(discretize_numeric(Some(0)), "0");
        // Negative Criteo integers keep their literal token.
        assert_eq!(discretize_numeric(Some(-1)), "-1");
        assert_eq!(discretize_numeric(Some(-40)), "-40");
    }

    #[test]
    fn buckets_above_threshold() {
        // floor(ln(100)^2) = floor(21.2075...) = 21
        assert_eq!(discretize_numeric(Some(100)), "21");
        // floor(ln(3)^2) = floor(1.2069...) = 1
        assert_eq!(discretize_numeric(Some(3)), "1");
        // floor(ln(1e6)^2) = floor(190.88...) = 190
        assert_eq!(discretize_numeric(Some(1_000_000)), "190");
    }

    #[test]
    fn buckets_are_monotone_coarse() {
        let mut last = -1i64;
        for x in 3..10_000i64 {
            let b: i64 = discretize_numeric(Some(x)).parse().unwrap();
            assert!(b >= last);
            last = b;
        }
    }
}
