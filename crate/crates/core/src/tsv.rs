//! Small helpers shared by the TSV writers and readers.

use std::io;

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation for very small or large magnitudes.
pub fn format_sig(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".to_string()
        } else if value > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, value)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub(crate) fn data_error(line: usize, reason: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {}", reason.into()))
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_sig(0.1, 12), "0.1");
        assert_eq!(format_sig(std::f64::consts::LN_2, 12), "0.69314718056");
        assert_eq!(format_sig(4.605170185988091, 12), "4.60517018599");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(1234567.0, 12), "1234567");
        assert_eq!(format_sig(1e-5, 12), "1e-05");
        assert_eq!(format_sig(1.5e-7, 12), "1.5e-07");
        assert_eq!(format_sig(1e15, 12), "1e+15");
        assert_eq!(format_sig(0.0001, 12), "0.0001");
        assert_eq!(format_sig(-2.5, 12), "-2.5");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for v in [0.123456789012345, 98765.4321012345, 3.3e-9, 7.0e12] {
            let back: f64 = format_sig(v, 12).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-11, "{v} -> {back}");
        }
    }
}
