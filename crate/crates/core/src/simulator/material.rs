use crate::dual::Dual;
use crate::error::{Error, Result};

use super::DetectorParams;

/// Interaction probabilities are clamped to `[floor, 1 - floor]`.
pub const PROBABILITY_FLOOR: f64 = 1e-9;

/// Radius about which the radial segmentation is phased.
const RADIAL_PHASE: f64 = 2.0;
/// Radial winding of the azimuthal segmentation.
const AZIMUTHAL_TWIST: f64 = 2.0;

/// `m = 1/2 * m_start * m_phi * m_r * m_end`, in dual arithmetic so the
/// tangent with respect to the inner radius flows through the inner and
/// outer edge factors.
pub fn material_map(pos: [f64; 2], params: &DetectorParams) -> Result<Dual> {
    let [x0, x1] = pos;
    if x0 == 0.0 && x1 == 0.0 {
        return Err(Error::InvalidPosition);
    }
    let beta = params.sharpness;
    let omega = params.seg_freq;
    let r = Dual::constant(x0 * x0 + x1 * x1).sqrt()?;
    // phi = arctan(x0 / x1), via atan2 to stay defined at x1 = 0
    let phi = Dual::constant(x0).atan2(Dual::constant(x1))?;

    let m_start = ((r - params.theta_r) * beta).sigmoid();
    let m_phi = (((phi + r * AZIMUTHAL_TWIST) * omega).sin() * -beta).sigmoid();
    let m_r = (((r - RADIAL_PHASE) * omega).cos() * -beta).sigmoid();
    let m_end = ((r - params.theta_r - params.r_max) * -beta).sigmoid();
    Ok(m_start * m_phi * m_r * m_end * 0.5)
}

/// The material map clamped away from 0 and 1, ready for a Bernoulli draw.
pub fn interaction_probability(pos: [f64; 2], params: &DetectorParams) -> Result<Dual> {
    Ok(material_map(pos, params)?.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
}

/// Row-major raster of map values at cell centres of an `nx * ny` grid over
/// `[x_min, x_max] * [y_min, y_max]`. Rows run along the second coordinate.
pub fn material_raster(
    params: &DetectorParams,
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Vec<f64> {
    let dx = (x_range.1 - x_range.0) / nx as f64;
    let dy = (y_range.1 - y_range.0) / ny as f64;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = y_range.0 + (j as f64 + 0.5) * dy;
        for i in 0..nx {
            let x = x_range.0 + (i as f64 + 0.5) * dx;
            values.push(material_map([x, y], params).map_or(0.0, |m| m.value));
        }
    }
    values
}
