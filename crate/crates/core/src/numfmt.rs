//! Text rendering of reals for CSV and DOT output.

/// Significant digits used for every real written to CSV or DOT.
pub const SIG_DIGITS: usize = 12;

/// `x` rounded to [`SIG_DIGITS`] significant digits, trailing zeros removed.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = SIG_DIGITS as i32 - 1 - exp;
    let s = if (0..=20).contains(&decimals) {
        format!("{:.*}", decimals as usize, x)
    } else if decimals < 0 && exp < 21 {
        format!("{:.0}", x)
    } else {
        return format!("{:.*e}", SIG_DIGITS - 1, x);
    };
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_twelve_significant_digits() {
        assert_eq!(sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig(0.8), "0.8");
        assert_eq!(sig(-10.0), "-10");
        assert_eq!(sig(1639.8049871234), "1639.80498712");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(1e-30), "1.00000000000e-30");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for x in [228.8, 0.21620001, 1e5 / 7.0, -3.25e-4] {
            let back: f64 = sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11);
        }
    }
}
