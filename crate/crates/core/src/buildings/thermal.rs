//! Lumped-parameter zone thermal dynamics.
//!
//! Each zone is a single thermal node: capacitance C behind an envelope
//! resistance R to outdoors, with solar, occupant and equipment gains and
//! the VAV's delivered cooling as the only heat flows,
//!
//!   C dT/dt = (T_out - T) / R + Q_gains - Q_cool.
//!
//! Integration is explicit Euler with sub-steps capped at 60 s, which is
//! far below the shortest zone time constant used here (hours), so the
//! scheme stays stable and monotone.

use super::vav::{compute_vav, VavOutput, VavParams};
use super::weather::WeatherSample;
use super::BuildingError;

/// Maximum explicit-Euler sub-step, seconds.
const MAX_SUBSTEP: f64 = 60.0;

/// Thermal parameters of one lumped zone.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneParams {
    /// Effective heat capacitance, J/K.
    pub heat_capacitance: f64,
    /// Envelope resistance to outdoors, K/W.
    pub envelope_resistance: f64,
    /// Effective solar aperture, m^2 (irradiance multiplier).
    pub solar_aperture: f64,
    /// Occupants at full occupancy.
    pub max_occupants: f64,
    /// Sensible gain per occupant, W.
    pub gain_per_person: f64,
    /// Equipment gain at full utilization, W.
    pub equipment_gain: f64,
    /// Share of equipment that runs around the clock, in [0, 1]. The rest
    /// follows the occupancy fraction.
    pub equipment_base_fraction: f64,
}

impl ZoneParams {
    pub fn validate(&self, context: &str) -> Result<(), BuildingError> {
        for (name, v) in [
            ("heat_capacitance", self.heat_capacitance),
            ("envelope_resistance", self.envelope_resistance),
            ("solar_aperture", self.solar_aperture),
            ("max_occupants", self.max_occupants),
            ("gain_per_person", self.gain_per_person),
        ] {
            if !(v > 0.0) {
                return Err(BuildingError::params(
                    context,
                    format!("{name} must be > 0"),
                ));
            }
        }
        if !(self.equipment_gain >= 0.0) {
            return Err(BuildingError::params(
                context,
                "equipment_gain must be >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.equipment_base_fraction) {
            return Err(BuildingError::params(
                context,
                "equipment_base_fraction must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Zone time constant R*C, seconds.
    pub fn time_constant(&self) -> f64 {
        self.envelope_resistance * self.heat_capacitance
    }
}

/// Internal plus solar gains of a zone, W.
pub fn zone_gains(zone: &ZoneParams, weather: &WeatherSample, occupancy_fraction: f64) -> f64 {
    let equip_utilization = zone.equipment_base_fraction
        + (1.0 - zone.equipment_base_fraction) * occupancy_fraction;
    zone.solar_aperture * weather.direct_solar
        + zone.max_occupants * occupancy_fraction * zone.gain_per_person
        + zone.equipment_gain * equip_utilization
}

/// Temperature a free-floating zone relaxes to under constant boundary
/// conditions: T_out + R * Q_gains.
pub fn free_float_fixed_point(
    zone: &ZoneParams,
    weather: &WeatherSample,
    occupancy_fraction: f64,
) -> f64 {
    weather.dry_bulb + zone.envelope_resistance * zone_gains(zone, weather, occupancy_fraction)
}

/// Result of advancing a group of zones by one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneStep {
    /// Zone temperatures at the end of the interval, C.
    pub temps: Vec<f64>,
    /// Per-zone VAV operating point, time-averaged over the interval.
    pub per_zone: Vec<VavOutput>,
}

/// Advances `temps` by `dt` seconds under fixed boundary conditions.
///
/// All zones share one supply air temperature `sat` (one air loop); each
/// zone has its own setpoint and VAV branch. Weather and occupancy are
/// held constant over the interval (zero-order hold). With `hvac_on`
/// false, flows and powers are identically zero and zones free-float.
/// The VAV operating point is re-evaluated every sub-step against the
/// current zone temperature, and the returned operating points are the
/// arithmetic mean over sub-steps.
#[allow(clippy::too_many_arguments)]
pub fn step_zone_thermal(
    temps: &[f64],
    setpoints: &[f64],
    sat: f64,
    zones: &[ZoneParams],
    branches: &[VavParams],
    weather: &WeatherSample,
    occupancy_fraction: f64,
    hvac_on: bool,
    dt: f64,
) -> ZoneStep {
    assert!(dt > 0.0, "dt must be positive");
    assert_eq!(temps.len(), zones.len(), "temps/zones length mismatch");
    assert_eq!(setpoints.len(), zones.len(), "setpoints length mismatch");
    assert_eq!(branches.len(), zones.len(), "branches length mismatch");

    let n_sub = (dt / MAX_SUBSTEP).ceil().max(1.0) as usize;
    let h = dt / n_sub as f64;

    let mut state: Vec<f64> = temps.to_vec();
    let mut accum = vec![VavOutput::default(); zones.len()];

    for _ in 0..n_sub {
        for (i, zone) in zones.iter().enumerate() {
            let vav_out = if hvac_on {
                compute_vav(state[i], setpoints[i], sat, weather.dry_bulb, &branches[i])
            } else {
                VavOutput::default()
            };
            let gains = zone_gains(zone, weather, occupancy_fraction);
            let net = (weather.dry_bulb - state[i]) / zone.envelope_resistance + gains
                - vav_out.delivered_cooling;
            state[i] += h / zone.heat_capacitance * net;
            accum[i].mass_flow += vav_out.mass_flow;
            accum[i].fan_power += vav_out.fan_power;
            accum[i].coil_power += vav_out.coil_power;
            accum[i].delivered_cooling += vav_out.delivered_cooling;
        }
    }

    let inv = 1.0 / n_sub as f64;
    for a in &mut accum {
        a.mass_flow *= inv;
        a.fan_power *= inv;
        a.coil_power *= inv;
        a.delivered_cooling *= inv;
    }

    ZoneStep {
        temps: state,
        per_zone: accum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zone() -> ZoneParams {
        ZoneParams {
            heat_capacitance: 1.0e6,
            envelope_resistance: 0.01,
            solar_aperture: 0.0,
            max_occupants: 0.0,
            gain_per_person: 0.0,
            equipment_gain: 0.0,
            equipment_base_fraction: 0.0,
        }
    }

    fn branch() -> VavParams {
        VavParams {
            nominal_flow: 1.0,
            min_flow_fraction: 0.25,
            fan_nominal_power: 500.0,
            coil_cop: 3.5,
            outdoor_air_fraction: 0.15,
            air_cp: 1006.0,
            thermostat_gain: 1.0e6 / 300.0,
        }
    }

    fn still_air(dry_bulb: f64) -> WeatherSample {
        WeatherSample {
            dry_bulb,
            relative_humidity: 50.0,
            wind_speed: 0.0,
            direct_solar: 0.0,
        }
    }

    /// A zone that starts exactly at its fixed point stays there.
    #[test]
    fn fixed_point_is_stationary() {
        let mut z = zone();
        z.equipment_gain = 500.0;
        z.equipment_base_fraction = 1.0;
        let w = still_air(30.0);
        let fp = free_float_fixed_point(&z, &w, 0.0);
        assert_eq!(fp, 30.0 + 0.01 * 500.0);
        let out = step_zone_thermal(&[fp], &[25.0], 13.0, &[z], &[branch()], &w, 0.0, false, 3600.0);
        assert_eq!(out.temps[0], fp); // net flow is exactly zero each sub-step
        assert_eq!(out.per_zone[0], VavOutput::default());
    }

    /// Free-float decay matches the closed-form geometric relaxation of the
    /// discrete scheme: T_k = T_fp + (T_0 - T_fp) * (1 - h/(RC))^k.
    #[test]
    fn relaxation_matches_geometric_decay() {
        let z = zone(); // tau = RC = 1e4 s
        let w = still_air(20.0);
        let out = step_zone_thermal(&[30.0], &[25.0], 13.0, &[z], &[branch()], &w, 0.0, false, 600.0);
        // dt 600 -> 10 sub-steps of 60 s; ratio per sub-step 1 - 60/1e4.
        let expected = 20.0 + 10.0 * (1.0 - 60.0 / 1.0e4_f64).powi(10);
        assert!(
            (out.temps[0] - expected).abs() < 1e-12,
            "got {}, expected {expected}",
            out.temps[0]
        );
    }

    /// One 900 s step is exactly fifteen chained 60 s steps.
    #[test]
    fn steps_compose_exactly() {
        let mut z = zone();
        z.equipment_gain = 800.0;
        z.equipment_base_fraction = 0.5;
        z.solar_aperture = 2.0;
        let w = WeatherSample {
            dry_bulb: 33.0,
            relative_humidity: 40.0,
            wind_speed: 3.0,
            direct_solar: 600.0,
        };
        let one = step_zone_thermal(
            &[27.0],
            &[25.0],
            13.0,
            &[z],
            &[branch()],
            &w,
            0.7,
            true,
            900.0,
        );
        let mut temps = vec![27.0];
        let mut delivered_sum = 0.0;
        for _ in 0..15 {
            let s = step_zone_thermal(&temps, &[25.0], 13.0, &[z], &[branch()], &w, 0.7, true, 60.0);
            delivered_sum += s.per_zone[0].delivered_cooling;
            temps = s.temps;
        }
        assert_eq!(one.temps[0], temps[0], "temperature paths must be identical");
        assert!((one.per_zone[0].delivered_cooling - delivered_sum / 15.0).abs() < 1e-9);
    }

    /// Starting above the fixed point, the free-float trajectory decreases
    /// monotonically and never undershoots.
    #[test]
    fn approach_is_monotone_from_above() {
        let z = zone();
        let w = still_air(22.0);
        let fp = free_float_fixed_point(&z, &w, 0.0);
        let mut t = 30.0;
        for _ in 0..96 {
            let s = step_zone_thermal(&[t], &[25.0], 13.0, &[z], &[branch()], &w, 0.0, false, 900.0);
            assert!(s.temps[0] < t, "must strictly decrease");
            assert!(s.temps[0] >= fp, "must not undershoot the fixed point");
            t = s.temps[0];
        }
        assert!((t - fp).abs() < 0.05, "24 h free float should settle: {t}");
    }

    /// With cooling enabled and a branch sized to the zone's design load, a
    /// warm zone is pulled close to its setpoint. The branch must be sized
    /// to the zone: a grossly oversized box would overcool through its
    /// minimum ventilation flow alone.
    #[test]
    fn thermostat_pulls_toward_setpoint() {
        let z = zone(); // design load (34-25)/R = 900 W
        let sized = VavParams {
            nominal_flow: 0.12, // carries ~1.4 kW at a 12 K supply split
            ..branch()
        };
        let w = still_air(34.0);
        let mut t = 28.0;
        for _ in 0..16 {
            let s = step_zone_thermal(&[t], &[25.0], 13.0, &[z], &[sized], &w, 0.0, true, 900.0);
            t = s.temps[0];
        }
        assert!(t < 25.5, "zone should approach its setpoint, got {t}");
        assert!(t > 24.0, "zone should not be overcooled, got {t}");
    }

    #[test]
    fn hvac_off_means_zero_flows() {
        let z = zone();
        let w = still_air(35.0);
        let s = step_zone_thermal(&[30.0], &[25.0], 13.0, &[z], &[branch()], &w, 0.9, false, 900.0);
        assert_eq!(s.per_zone[0], VavOutput::default());
        assert!(s.temps[0] > 30.0, "zone must drift warm with cooling off");
    }

    #[test]
    fn params_validation() {
        // The zero-gain test fixture is intentionally not a valid production
        // zone; validation demands strictly positive physical parameters.
        let valid = ZoneParams {
            solar_aperture: 1.5,
            max_occupants: 4.0,
            gain_per_person: 90.0,
            equipment_gain: 0.0,
            ..zone()
        };
        assert!(valid.validate("zone").is_ok());
        let mut z = valid;
        z.heat_capacitance = 0.0;
        assert!(z.validate("zone").is_err());
        let mut z = valid;
        z.envelope_resistance = -1.0;
        assert!(z.validate("zone").is_err());
        let mut z = valid;
        z.max_occupants = 0.0;
        assert!(z.validate("zone").is_err());
        let mut z = valid;
        z.equipment_gain = -5.0;
        assert!(z.validate("zone").is_err());
        let mut z = valid;
        z.equipment_base_fraction = 1.2;
        assert!(z.validate("zone").is_err());
    }
}
