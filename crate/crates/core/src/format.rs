/// Shortest decimal text that parses back to exactly `x`.
///
/// Plain notation in the everyday range, scientific notation for very large
/// or very small magnitudes.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
