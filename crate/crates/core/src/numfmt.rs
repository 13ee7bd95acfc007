//! Plot-ready numeric formatting shared by every text output.

/// Scientific notation with 12 significant digits, e.g. `4.90000000000e2`.
/// Negative zero prints as zero.
pub fn sci(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}
