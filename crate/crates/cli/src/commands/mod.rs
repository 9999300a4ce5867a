pub mod fluctuations;
pub mod kernel;
pub mod report;
pub mod shape;
pub mod simulate;

/// Shortest round-trip form, in exponent notation far from unity.
pub(crate) fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Empty CSV cell for missing values.
pub(crate) fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}
