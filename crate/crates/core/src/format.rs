//! Locale-independent numeric formatting for CSV outputs.

/// Formats with 9 significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.00000000e0"
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sig9(1.0), "1.00000000e0");
        assert_eq!(sig9(-0.0), "0.00000000e0");
        assert_eq!(sig9(3.319e-17), "3.31900000e-17");
    }

    proptest! {
        #[test]
        fn reparse_is_stable(x in -1e30f64..1e30) {
            let s = sig9(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(sig9(back), s);
        }
    }
}
