//! Rule-based baseline controller: fixed setpoints, evaluated through the
//! same environment path as the learned policy but bypassing the `[-1, 1]`
//! action mapping (constants gain nothing from normalization).

use crate::env::{ActionSpec, EnvError};
use crate::unit::base_name;
use serde::{Deserialize, Serialize};

/// Fixed setpoints the baseline holds all day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbcConfig {
    /// Zone/floor cooling setpoint, °C.
    pub zone_setpoint: f64,
    /// Supply air temperature setpoint, °C.
    pub sat_setpoint: f64,
}

impl Default for RbcConfig {
    fn default() -> Self {
        RbcConfig {
            zone_setpoint: 25.0,
            sat_setpoint: 15.0,
        }
    }
}

/// Builds the per-unit physical setpoint lists the baseline applies at
/// every step: SAT dims get `sat_setpoint`, cooling-setpoint dims get
/// `zone_setpoint`. Errors when a configured value leaves a dim's bounds
/// or a dim's role cannot be told from its name.
pub fn rbc_action(spec: &ActionSpec, config: &RbcConfig) -> Result<Vec<Vec<f64>>, EnvError> {
    let unit_count = spec.dims().iter().map(|d| d.unit + 1).max().unwrap_or(0);
    let mut per_unit: Vec<Vec<f64>> = vec![Vec::new(); unit_count];
    for dim in spec.dims() {
        let base = base_name(&dim.name);
        let value = if base.contains("Supply Air Temperature") {
            config.sat_setpoint
        } else if base.contains("Cooling Setpoint") {
            config.zone_setpoint
        } else {
            return Err(EnvError::BadConfig(format!(
                "cannot infer a baseline rule for input {:?}",
                dim.name
            )));
        };
        if value < dim.lower || value > dim.upper {
            return Err(EnvError::BaselineOutOfBounds {
                name: dim.name.clone(),
                value,
                lower: dim.lower,
                upper: dim.upper,
            });
        }
        per_unit[dim.unit].push(value);
    }
    Ok(per_unit)
}

/// The same setpoints flattened in action-dimension order — the reset
/// baseline the relative action mapping starts from.
pub fn rbc_baselines(spec: &ActionSpec, config: &RbcConfig) -> Result<Vec<f64>, EnvError> {
    Ok(rbc_action(spec, config)?.into_iter().flatten().collect())
}
