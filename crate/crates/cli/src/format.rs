//! Locale-independent rendering of reals with a fixed number of
//! significant digits, following C's `%.*g`.

/// Significant digits used in CSV output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `v` with [`SIGNIFICANT_DIGITS`] significant digits, trailing zeros removed.
pub fn format_value(v: f64) -> String {
    format_significant(v, SIGNIFICANT_DIGITS)
}

pub fn format_significant(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        // also folds -0 into 0
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -4 || exponent >= digits as i32 {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exponent.abs())
    } else {
        let decimals = (digits as i32 - 1 - exponent) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
