//! Fixed-precision number formatting shared by every CSV table.

/// Significant digits in emitted numbers.
pub const SIG_DIGITS: usize = 12;

/// Formats like C's `%.12g`: shortest of fixed or exponent notation with
/// twelve significant digits and trailing zeros removed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Optional value as a number or an empty field.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn matches_printf_g12() {
        let cases = [
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (5.0 / 12.0, "0.416666666667"),
            (123456.0, "123456"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (0.0001234, "0.0001234"),
            (1e12, "1e+12"),
            (999999999999.0, "999999999999"),
            (-2.5, "-2.5"),
            (0.0, "0"),
            (0.098_612_181_134_002_7, "0.098612181134"),
        ];
        for (x, want) in cases {
            assert_eq!(num(x), want, "{x}");
        }
    }
}
