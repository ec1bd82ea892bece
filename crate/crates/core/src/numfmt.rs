//! `%g`-style number formatting, used by every text file we write.

/// Formats `x` with `digits` significant digits the way C's `%.{digits}g` does:
/// fixed notation for moderate exponents, scientific otherwise, trailing zeros
/// removed. Parsing the output with `str::parse::<f64>` recovers `x` exactly
/// when `digits >= 17`.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_c_printf() {
        assert_eq!(format_significant(0.5, 9), "0.5");
        assert_eq!(format_significant(1.0, 9), "1");
        assert_eq!(format_significant(-0.123456789123, 9), "-0.123456789");
        assert_eq!(format_significant(123456789.0, 9), "123456789");
        assert_eq!(format_significant(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(format_significant(0.0001, 9), "0.0001");
        assert_eq!(format_significant(0.00001234, 9), "1.234e-05");
        assert_eq!(format_significant(1.0 / 3.0, 17), "0.33333333333333331");
        assert_eq!(format_significant(0.0, 17), "0");
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL) {
            let s = format_significant(x, 17);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
