//! Fixed text formatting for exported numbers.

/// Scientific notation with 9 fractional digits; non-finite values print
/// as `nan`, `inf` or `-inf`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9e}")
    }
}

/// Parses what `sci` writes.
pub fn parse_sci(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_layout() {
        assert_eq!(sci(0.0), "0.000000000e0");
        assert_eq!(sci(-1234.5), "-1.234500000e3");
        assert_eq!(sci(f64::NAN), "nan");
        assert!(parse_sci("nan").unwrap().is_nan());
    }

    proptest! {
        #[test]
        fn round_trip_to_precision(x in -1e30f64..1e30) {
            let y = parse_sci(&sci(x)).unwrap();
            prop_assert!((y - x).abs() <= 1e-9 * x.abs());
        }
    }
}
