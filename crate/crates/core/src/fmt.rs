//! Decimal formatting that round-trips IEEE-754 doubles.

/// Shortest decimal that parses back to exactly `v`. Plain notation for
/// moderate magnitudes, scientific notation otherwise.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Comma separated [`fmt_f64`] values.
pub fn fmt_list(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}
