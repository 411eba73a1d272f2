//! Variable-air-volume cooling response.
//!
//! Each zone (or floor) is served by a VAV branch of a packaged air loop.
//! A proportional thermostat turns the temperature error into a demanded
//! cooling load; the branch translates that into a supply airflow bounded
//! by the box limits, and the airflow in turn fixes fan power (cube law)
//! and cooling-coil electrical power (outdoor-air mixing, coil efficiency).

use super::BuildingError;

/// Sizing and efficiency parameters of one VAV branch.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VavParams {
    /// Design (maximum) supply air mass flow, kg/s.
    pub nominal_flow: f64,
    /// Minimum flow as a fraction of nominal, in (0, 1).
    pub min_flow_fraction: f64,
    /// Fan electrical power at nominal flow, W.
    pub fan_nominal_power: f64,
    /// Coil coefficient of performance (thermal W removed per electrical W).
    pub coil_cop: f64,
    /// Fraction of supply air drawn from outdoors, in [0, 1].
    pub outdoor_air_fraction: f64,
    /// Specific heat of air, J/(kg K).
    pub air_cp: f64,
    /// Proportional thermostat gain, W of demanded cooling per K of
    /// zone-over-setpoint error.
    pub thermostat_gain: f64,
}

impl VavParams {
    pub fn validate(&self, context: &str) -> Result<(), BuildingError> {
        if !(self.nominal_flow > 0.0) {
            return Err(BuildingError::params(context, "nominal_flow must be > 0"));
        }
        if !(self.min_flow_fraction > 0.0 && self.min_flow_fraction < 1.0) {
            return Err(BuildingError::params(
                context,
                "min_flow_fraction must lie in (0, 1)",
            ));
        }
        if !(self.fan_nominal_power > 0.0) {
            return Err(BuildingError::params(
                context,
                "fan_nominal_power must be > 0",
            ));
        }
        if !(self.coil_cop > 1.0) {
            return Err(BuildingError::params(context, "coil_cop must be > 1"));
        }
        if !(0.0..=1.0).contains(&self.outdoor_air_fraction) {
            return Err(BuildingError::params(
                context,
                "outdoor_air_fraction must lie in [0, 1]",
            ));
        }
        if !(self.air_cp > 0.0) {
            return Err(BuildingError::params(context, "air_cp must be > 0"));
        }
        if !(self.thermostat_gain > 0.0) {
            return Err(BuildingError::params(
                context,
                "thermostat_gain must be > 0",
            ));
        }
        Ok(())
    }

    /// Splits an air-loop-level parameter set into a per-zone branch that
    /// carries `share` of the flow and fan capacity.
    pub fn scaled_branch(&self, share: f64, thermostat_gain: f64) -> VavParams {
        VavParams {
            nominal_flow: self.nominal_flow * share,
            fan_nominal_power: self.fan_nominal_power * share,
            thermostat_gain,
            ..*self
        }
    }
}

/// Instantaneous operating point of one VAV branch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VavOutput {
    /// Supply air mass flow, kg/s.
    pub mass_flow: f64,
    /// Fan electrical power, W.
    pub fan_power: f64,
    /// Cooling-coil electrical power, W.
    pub coil_power: f64,
    /// Sensible cooling delivered to the zone, W (>= 0).
    pub delivered_cooling: f64,
}

/// Computes the operating point of a VAV branch serving one zone.
///
/// The thermostat demands `gain * (zone_temp - setpoint)` watts of cooling
/// (zero when the zone is at or below setpoint). When the supply air is
/// colder than the zone, the demanded load maps to an airflow
/// `demand / (cp * (zone_temp - sat))` clamped between the minimum and
/// nominal flow; otherwise flow pins to the minimum and no cooling is
/// delivered. Fan power follows the cube of the flow fraction. The coil
/// cools a mix of outdoor and return air down to the supply temperature;
/// its electrical power is the sensible duty divided by the COP.
pub fn compute_vav(
    zone_temp: f64,
    setpoint: f64,
    sat: f64,
    outdoor_temp: f64,
    vav: &VavParams,
) -> VavOutput {
    let min_flow = vav.min_flow_fraction * vav.nominal_flow;
    let demand = (vav.thermostat_gain * (zone_temp - setpoint)).max(0.0);
    let supply_dt = zone_temp - sat;
    let mass_flow = if supply_dt > 0.0 {
        (demand / (vav.air_cp * supply_dt)).clamp(min_flow, vav.nominal_flow)
    } else {
        min_flow
    };
    let flow_fraction = mass_flow / vav.nominal_flow;
    let fan_power = vav.fan_nominal_power * flow_fraction.powi(3);
    let mixed_temp =
        vav.outdoor_air_fraction * outdoor_temp + (1.0 - vav.outdoor_air_fraction) * zone_temp;
    let coil_power = mass_flow * vav.air_cp * (mixed_temp - sat).max(0.0) / vav.coil_cop;
    let delivered_cooling = mass_flow * vav.air_cp * supply_dt.max(0.0);
    VavOutput {
        mass_flow,
        fan_power,
        coil_power,
        delivered_cooling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VavParams {
        VavParams {
            nominal_flow: 2.0,
            min_flow_fraction: 0.25,
            fan_nominal_power: 1000.0,
            coil_cop: 3.5,
            outdoor_air_fraction: 0.15,
            air_cp: 1006.0,
            thermostat_gain: 4000.0,
        }
    }

    /// Hand-computed operating point, frozen as the module's oracle.
    ///
    /// zone 27.5, setpoint 25, sat 13, outdoor 35 (flow stays strictly
    /// between the 0.5 kg/s minimum and the 2.0 kg/s nominal):
    ///   demand     = 4000 * 2.5                       = 10000 W
    ///   flow       = 10000 / (1006 * 14.5)            = 0.685537... kg/s
    ///   fraction   = flow / 2
    ///   fan        = 1000 * fraction^3                = 40.27... W
    ///   mixed      = 0.15*35 + 0.85*27.5              = 28.625 C
    ///   coil       = flow * 1006 * (28.625-13) / 3.5  = 3078.45... W
    ///   delivered  = flow * 1006 * 14.5               = 10000 W (demand met)
    #[test]
    fn operating_point_matches_hand_calculation() {
        let out = compute_vav(27.5, 25.0, 13.0, 35.0, &params());
        let flow = 10_000.0 / (1006.0 * 14.5);
        assert!((out.mass_flow - flow).abs() < 1e-12);
        assert!((out.fan_power - 1000.0 * (flow / 2.0).powi(3)).abs() < 1e-12);
        let mixed = 0.15 * 35.0 + 0.85 * 27.5;
        assert!((out.coil_power - flow * 1006.0 * (mixed - 13.0) / 3.5).abs() < 1e-9);
        assert!((out.delivered_cooling - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn no_demand_pins_to_minimum_flow() {
        let out = compute_vav(24.0, 25.0, 13.0, 35.0, &params());
        assert_eq!(out.mass_flow, 0.5); // 0.25 * 2.0
        assert!(out.delivered_cooling > 0.0); // ventilation still cools a warm zone
        assert!(out.fan_power > 0.0);
    }

    #[test]
    fn supply_warmer_than_zone_delivers_nothing() {
        let out = compute_vav(14.0, 25.0, 15.0, 35.0, &params());
        assert_eq!(out.mass_flow, 0.5);
        assert_eq!(out.delivered_cooling, 0.0);
        // The coil still works on the outdoor-air fraction of the mix.
        assert!(out.coil_power > 0.0);
    }

    #[test]
    fn demand_saturates_at_nominal_flow() {
        // Demand 60 kW needs 2.386 kg/s, above the 2.0 kg/s box limit.
        let out = compute_vav(40.0, 25.0, 15.0, 35.0, &params());
        assert_eq!(out.mass_flow, 2.0);
        assert_eq!(out.fan_power, 1000.0);
        let cap = 2.0 * 1006.0 * (40.0 - 15.0);
        assert!((out.delivered_cooling - cap).abs() < 1e-9);
    }

    /// Lowering the supply air temperature at fixed demand reduces the
    /// required flow, hence fan power (cube law) strictly decreases.
    #[test]
    fn lower_sat_reduces_flow_and_fan_power() {
        // Demand 12 kW keeps both flows strictly between min and nominal.
        let warm = compute_vav(28.0, 25.0, 14.5, 35.0, &params());
        let cold = compute_vav(28.0, 25.0, 11.0, 35.0, &params());
        assert!(cold.mass_flow < warm.mass_flow);
        assert!(cold.fan_power < warm.fan_power);
        // Both meet the same demand.
        assert!((cold.delivered_cooling - warm.delivered_cooling).abs() < 1e-9);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut p = params();
        p.min_flow_fraction = 1.0;
        assert!(p.validate("vav").is_err());
        let mut p = params();
        p.coil_cop = 1.0;
        assert!(p.validate("vav").is_err());
        let mut p = params();
        p.outdoor_air_fraction = 1.5;
        assert!(p.validate("vav").is_err());
        assert!(params().validate("vav").is_ok());
    }

    #[test]
    fn scaled_branch_preserves_fractions() {
        let base = params();
        let branch = base.scaled_branch(0.3, 1234.0);
        assert!((branch.nominal_flow - 0.6).abs() < 1e-12);
        assert!((branch.fan_nominal_power - 300.0).abs() < 1e-12);
        assert_eq!(branch.min_flow_fraction, base.min_flow_fraction);
        assert_eq!(branch.thermostat_gain, 1234.0);
    }
}
