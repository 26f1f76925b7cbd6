//! Numeric formatting shared by every serialized artifact (CSV, MDP text
//! files). One format, everywhere, so outputs are byte-reproducible.

/// Format a real with 17 significant digits, enough for exact f64 round-trips.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_exactly() {
        for &x in &[
            0.0,
            1.0,
            0.99,
            1.0 / 3.0,
            2.0_f64.powi(-40),
            123456.789,
            1e300,
        ] {
            let s = fmt_real(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s} did not round-trip");
        }
    }

    #[test]
    fn has_seventeen_significant_digits() {
        let s = fmt_real(0.99);
        let mantissa: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        assert!(mantissa.len() >= 17, "too few digits in {s}");
    }
}
