//! Inverse-depth normalization to 16 bits (closer is brighter).

use super::{DepthBuffer, GroundTruthError};

fn check_range(near: f64, far: f64) -> Result<(), GroundTruthError> {
    if !(near > 0.0 && near < far && far.is_finite()) {
        return Err(GroundTruthError::DepthRange { near, far });
    }
    Ok(())
}

#[inline]
fn encode(z: f64, inv_far: f64, inv_span: f64) -> u16 {
    if !z.is_finite() || z <= 0.0 {
        return 0;
    }
    let n = ((1.0 / z - inv_far) * inv_span).clamp(0.0, 1.0);
    (65535.0 * n).round() as u16
}

/// `round(65535 * clamp((1/z - 1/far) / (1/near - 1/far), 0, 1))`; background maps to 0.
pub fn depth16_value(z: f64, near: f64, far: f64) -> Result<u16, GroundTruthError> {
    check_range(near, far)?;
    Ok(encode(z, 1.0 / far, 1.0 / (1.0 / near - 1.0 / far)))
}

pub fn encode_depth16(depth: &DepthBuffer, near: f64, far: f64) -> Result<Vec<u16>, GroundTruthError> {
    check_range(near, far)?;
    let (inv_far, inv_span) = (1.0 / far, 1.0 / (1.0 / near - 1.0 / far));
    Ok(depth.values.iter().map(|&z| encode(z as f64, inv_far, inv_span)).collect())
}
