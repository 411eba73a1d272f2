//! Reference building models.
//!
//! Physics-based stand-ins for the four case-study buildings: two five-zone
//! small offices and two three-floor medium offices, each served by packaged
//! VAV cooling. Zones are lumped RC nodes; the VAV response couples a
//! proportional thermostat to airflow, fan and coil power. All state
//! transitions are explicit and deterministic.

mod office;
mod thermal;
mod vav;
mod weather;

pub use office::{
    medium_office_metadata, small_office_metadata, MediumOffice, MediumOfficeParams, SmallOffice,
    SmallOfficeParams,
};
pub use thermal::{free_float_fixed_point, step_zone_thermal, zone_gains, ZoneParams, ZoneStep};
pub use vav::{compute_vav, VavOutput, VavParams};
pub use weather::{load_weather_csv, synthetic_weather, WeatherDay, WeatherSample};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildingError {
    #[error("{context}: {message}")]
    InvalidParams { context: String, message: String },
    #[error("weather day is malformed: {0}")]
    BadWeather(String),
    #[error("weather csv: {0}")]
    WeatherCsv(String),
}

impl BuildingError {
    pub(crate) fn params(context: &str, message: impl Into<String>) -> Self {
        Self::InvalidParams {
            context: context.to_string(),
            message: message.into(),
        }
    }
}

/// Hourly occupancy fraction profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancySchedule {
    pub fraction_by_hour: [f64; 24],
}

impl OccupancySchedule {
    pub fn new(fraction_by_hour: [f64; 24]) -> Result<Self, BuildingError> {
        if fraction_by_hour.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(BuildingError::params(
                "occupancy schedule",
                "fractions must lie in [0, 1]",
            ));
        }
        Ok(Self { fraction_by_hour })
    }

    /// Office profile holding a constant 0.9 fraction from 08:00 to 18:00.
    pub fn constant_office() -> Self {
        let mut f = [0.0; 24];
        for (h, slot) in f.iter_mut().enumerate() {
            if (8..18).contains(&h) {
                *slot = 0.9;
            }
        }
        Self { fraction_by_hour: f }
    }

    /// Office profile with a lunchtime dip: 0.9 from 08:00 to 18:00 except
    /// 0.4 during the 12:00 hour.
    pub fn lunch_dip_office() -> Self {
        let mut sched = Self::constant_office();
        sched.fraction_by_hour[12] = 0.4;
        sched
    }

    pub fn at_hour(&self, hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0).floor() as usize % 24;
        self.fraction_by_hour[h]
    }
}

/// Cooling plant availability window: on from 06:00 (precooling allowed)
/// until 18:00, off otherwise.
pub fn hvac_available(hour_of_day: f64) -> bool {
    let h = hour_of_day.rem_euclid(24.0);
    (6.0..18.0).contains(&h)
}
