use repbf_core::RepBfResult;

/// Six significant digits, switching to exponent notation outside
/// `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        format!("{mantissa}e{exp}")
    }
}

pub fn text(r: &RepBfResult, test: &str) -> String {
    let rows = [
        ("test", test.to_string()),
        ("br0", sig6(r.br0)),
        ("log10_br0", sig6(r.log10_br0)),
        ("log_numerator", sig6(r.log_numerator)),
        ("log_denominator", sig6(r.log_denominator)),
        ("mc_se_log", sig6(r.mc_se_log)),
        ("interpretation", r.interpretation.to_string()),
        ("estimator", r.estimator.to_string()),
        ("n_draws", r.n_draws.to_string()),
        ("seed", r.seed.to_string()),
    ];
    rows.iter().map(|(k, v)| format!("{k:<16}{v}\n")).collect()
}

pub fn json(r: &RepBfResult) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("result serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0316585123), "0.0316585");
        assert_eq!(sig6(38.26149), "38.2615");
        assert_eq!(sig6(-1.4995321), "-1.49953");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(0.00150012345), "0.00150012");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(6.5984e25), "6.59840e25");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.0), "0");
    }
}
