//! The two office archetypes exposed as co-simulation units.
//!
//! A small office is five zones on one air loop (one shared supply air
//! temperature, five zone setpoints). A medium office is three floors,
//! each a single zone on its own air loop (three supply air temperatures,
//! three floor setpoints). Both declare Celsius setpoint inputs with a
//! 0.1 degree granularity and report weather, plant electrical powers,
//! supply conditions and zone temperatures as outputs.

use super::thermal::{step_zone_thermal, ZoneParams};
use super::vav::{VavOutput, VavParams};
use super::weather::WeatherDay;
use super::{hvac_available, BuildingError, OccupancySchedule};
use crate::unit::{
    validate_metadata, CoSimUnit, UnitError, UnitMetadata, VariableSpec, AMBIENT_OUTPUT_NAMES,
};

/// Thermostat proportional band divisor: gain = C / 150, i.e. a zone one
/// kelvin over setpoint demands enough cooling to remove it in 150 s.
/// Keeps steady-state droop around 0.1-0.3 K with the default sizing while
/// the 60 s sub-step remains well inside the stability limit.
const THERMOSTAT_GAIN_DIVISOR: f64 = 150.0;

fn weather_outputs() -> Vec<VariableSpec> {
    let units = ["°C", "%", "m/s", "W/m2"];
    let bounds = [(-30.0, 50.0), (0.0, 100.0), (0.0, 30.0), (0.0, 1200.0)];
    AMBIENT_OUTPUT_NAMES
        .iter()
        .zip(units)
        .zip(bounds)
        .map(|((name, unit), (lo, hi))| VariableSpec::output(name, unit, lo, hi))
        .collect()
}

/// Variable table of the five-zone small office: 6 inputs, 13 outputs.
pub fn small_office_metadata() -> UnitMetadata {
    let mut variables = vec![VariableSpec::input(
        "AHU Supply Air Temperature",
        "°C",
        10.0,
        15.0,
        0.1,
    )];
    for i in 1..=5 {
        variables.push(VariableSpec::input(
            &format!("Zone Cooling Setpoint {i}"),
            "°C",
            23.0,
            25.0,
            0.1,
        ));
    }
    variables.extend(weather_outputs());
    variables.push(VariableSpec::output(
        "Cooling Coil Electric Power",
        "W",
        0.0,
        25_000.0,
    ));
    variables.push(VariableSpec::output(
        "Supply Fan Electric Power",
        "W",
        0.0,
        2_000.0,
    ));
    variables.push(VariableSpec::output("Supply Air Temperature", "°C", 10.0, 15.0));
    variables.push(VariableSpec::output(
        "Supply Air Mass Flow Rate",
        "kg/s",
        0.0,
        3.0,
    ));
    for i in 1..=5 {
        variables.push(VariableSpec::output(
            &format!("Zone Air Temperature {i}"),
            "°C",
            15.0,
            45.0,
        ));
    }
    UnitMetadata {
        unit_type: "small_office".to_string(),
        variables,
        default_step: 900.0,
    }
}

/// Variable table of the three-floor medium office: 6 inputs, 19 outputs.
pub fn medium_office_metadata() -> UnitMetadata {
    let mut variables = Vec::new();
    for i in 1..=3 {
        variables.push(VariableSpec::input(
            &format!("AHU Supply Air Temperature {i}"),
            "°C",
            10.0,
            15.0,
            0.1,
        ));
    }
    for i in 1..=3 {
        variables.push(VariableSpec::input(
            &format!("Floor Cooling Setpoint {i}"),
            "°C",
            23.0,
            25.0,
            0.1,
        ));
    }
    variables.extend(weather_outputs());
    for i in 1..=3 {
        variables.push(VariableSpec::output(
            &format!("Cooling Coil Electric Power {i}"),
            "W",
            0.0,
            45_000.0,
        ));
    }
    for i in 1..=3 {
        variables.push(VariableSpec::output(
            &format!("Supply Fan Electric Power {i}"),
            "W",
            0.0,
            3_000.0,
        ));
    }
    for i in 1..=3 {
        variables.push(VariableSpec::output(
            &format!("Supply Air Temperature {i}"),
            "°C",
            10.0,
            15.0,
        ));
    }
    for i in 1..=3 {
        variables.push(VariableSpec::output(
            &format!("Supply Air Mass Flow Rate {i}"),
            "kg/s",
            0.0,
            6.0,
        ));
    }
    for i in 1..=3 {
        variables.push(VariableSpec::output(
            &format!("Floor Air Temperature {i}"),
            "°C",
            15.0,
            45.0,
        ));
    }
    UnitMetadata {
        unit_type: "medium_office".to_string(),
        variables,
        default_step: 900.0,
    }
}

/// Full description of a small office instance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallOfficeParams {
    /// Exactly five zones: four perimeter, one core (declared order).
    pub zones: Vec<ZoneParams>,
    /// Air-loop-level sizing; per-zone branches are carved out by
    /// capacitance share.
    pub air_loop: VavParams,
    pub schedule: OccupancySchedule,
    /// Zone temperature all zones start the day at, C.
    pub initial_temp: f64,
    /// Supply air temperature applied before the agent writes one, C.
    pub baseline_sat: f64,
    /// Cooling setpoint applied before the agent writes one, C.
    pub baseline_setpoint: f64,
}

impl SmallOfficeParams {
    fn with_schedule(schedule: OccupancySchedule) -> Self {
        let perimeter = |aperture: f64, occupants: f64| ZoneParams {
            heat_capacitance: 4.0e6,
            envelope_resistance: 4.0e-3,
            solar_aperture: aperture,
            max_occupants: occupants,
            gain_per_person: 90.0,
            equipment_gain: 700.0,
            equipment_base_fraction: 0.3,
        };
        let core = ZoneParams {
            heat_capacitance: 6.8e6,
            envelope_resistance: 2.5e-3,
            solar_aperture: 0.6,
            max_occupants: 8.0,
            gain_per_person: 90.0,
            equipment_gain: 1_100.0,
            equipment_base_fraction: 0.3,
        };
        SmallOfficeParams {
            zones: vec![
                // South-facing zone 1 is shaded and lightly occupied.
                perimeter(1.2, 4.0),
                perimeter(2.4, 6.0),
                perimeter(2.4, 6.0),
                perimeter(2.4, 6.0),
                core,
            ],
            air_loop: VavParams {
                nominal_flow: 2.6,
                min_flow_fraction: 0.25,
                fan_nominal_power: 1_300.0,
                coil_cop: 3.5,
                outdoor_air_fraction: 0.15,
                air_cp: 1006.0,
                thermostat_gain: 1.0, // replaced per branch
            },
            schedule,
            initial_temp: 25.0,
            baseline_sat: 15.0,
            baseline_setpoint: 25.0,
        }
    }

    /// Occupancy variant A: office day with a lunchtime dip.
    pub fn variant_a() -> Self {
        Self::with_schedule(OccupancySchedule::lunch_dip_office())
    }

    /// Occupancy variant B: constant office-day occupancy.
    pub fn variant_b() -> Self {
        Self::with_schedule(OccupancySchedule::constant_office())
    }

    fn validate(&self) -> Result<(), BuildingError> {
        if self.zones.len() != 5 {
            return Err(BuildingError::params(
                "small office",
                format!("expected 5 zones, got {}", self.zones.len()),
            ));
        }
        for (i, z) in self.zones.iter().enumerate() {
            z.validate(&format!("small office zone {}", i + 1))?;
        }
        self.air_loop.validate("small office air loop")?;
        Ok(())
    }
}

impl Default for SmallOfficeParams {
    fn default() -> Self {
        Self::variant_a()
    }
}

/// Full description of a medium office instance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumOfficeParams {
    /// Exactly three floors, bottom to top.
    pub floors: Vec<ZoneParams>,
    /// One VAV air loop per floor (same order).
    pub air_loops: Vec<VavParams>,
    pub schedule: OccupancySchedule,
    pub initial_temp: f64,
    pub baseline_sat: f64,
    pub baseline_setpoint: f64,
}

impl MediumOfficeParams {
    fn with_schedule(schedule: OccupancySchedule) -> Self {
        let floor = |resistance: f64, aperture: f64, occupants: f64, equipment: f64| ZoneParams {
            heat_capacitance: 1.35e8,
            envelope_resistance: resistance,
            solar_aperture: aperture,
            max_occupants: occupants,
            gain_per_person: 90.0,
            equipment_gain: equipment,
            equipment_base_fraction: 0.3,
        };
        let loop_params = VavParams {
            nominal_flow: 4.4,
            min_flow_fraction: 0.3,
            fan_nominal_power: 2_200.0,
            coil_cop: 3.5,
            outdoor_air_fraction: 0.15,
            air_cp: 1006.0,
            thermostat_gain: 1.35e8 / THERMOSTAT_GAIN_DIVISOR,
        };
        MediumOfficeParams {
            floors: vec![
                // Ground floor is shaded by surrounding buildings; the top
                // floor picks up the roof load.
                floor(7.5e-4, 2.0, 80.0, 9_000.0),
                floor(7.0e-4, 12.0, 92.0, 10_000.0),
                floor(6.2e-4, 16.0, 96.0, 10_000.0),
            ],
            air_loops: vec![loop_params, loop_params, loop_params],
            schedule,
            initial_temp: 25.0,
            baseline_sat: 15.0,
            baseline_setpoint: 25.0,
        }
    }

    /// Occupancy variant A: office day with a lunchtime dip.
    pub fn variant_a() -> Self {
        Self::with_schedule(OccupancySchedule::lunch_dip_office())
    }

    /// Occupancy variant B: constant office-day occupancy.
    pub fn variant_b() -> Self {
        Self::with_schedule(OccupancySchedule::constant_office())
    }

    fn validate(&self) -> Result<(), BuildingError> {
        if self.floors.len() != 3 || self.air_loops.len() != 3 {
            return Err(BuildingError::params(
                "medium office",
                format!(
                    "expected 3 floors and 3 air loops, got {}/{}",
                    self.floors.len(),
                    self.air_loops.len()
                ),
            ));
        }
        for (i, f) in self.floors.iter().enumerate() {
            f.validate(&format!("medium office floor {}", i + 1))?;
        }
        for (i, l) in self.air_loops.iter().enumerate() {
            l.validate(&format!("medium office air loop {}", i + 1))?;
        }
        Ok(())
    }
}

impl Default for MediumOfficeParams {
    fn default() -> Self {
        Self::variant_a()
    }
}

/// Five-zone small office behind the unit contract.
pub struct SmallOffice {
    meta: UnitMetadata,
    zones: Vec<ZoneParams>,
    branches: Vec<VavParams>,
    schedule: OccupancySchedule,
    weather: WeatherDay,
    initial_temp: f64,
    default_inputs: Vec<f64>,
    pending: Vec<f64>,
    applied: Vec<f64>,
    temps: Vec<f64>,
    last: Vec<VavOutput>,
    time: f64,
}

impl SmallOffice {
    pub fn new(params: SmallOfficeParams, weather: WeatherDay) -> Result<Self, BuildingError> {
        params.validate()?;
        weather.validate()?;
        let meta = small_office_metadata();
        validate_metadata(&meta).expect("small office metadata is well-formed");
        let total_c: f64 = params.zones.iter().map(|z| z.heat_capacitance).sum();
        let branches: Vec<VavParams> = params
            .zones
            .iter()
            .map(|z| {
                params.air_loop.scaled_branch(
                    z.heat_capacitance / total_c,
                    z.heat_capacitance / THERMOSTAT_GAIN_DIVISOR,
                )
            })
            .collect();
        let default_inputs = std::iter::once(params.baseline_sat)
            .chain(std::iter::repeat_n(params.baseline_setpoint, 5))
            .collect::<Vec<f64>>();
        let mut unit = SmallOffice {
            meta,
            zones: params.zones,
            branches,
            schedule: params.schedule,
            weather,
            initial_temp: params.initial_temp,
            default_inputs: default_inputs.clone(),
            pending: default_inputs.clone(),
            applied: default_inputs,
            temps: vec![params.initial_temp; 5],
            last: vec![VavOutput::default(); 5],
            time: 0.0,
        };
        unit.initialize(0.0);
        Ok(unit)
    }

    /// Per-zone supply flow as a fraction of branch nominal, averaged over
    /// the last completed step. Diagnostic only; not part of the declared
    /// output table.
    pub fn flow_fractions(&self) -> Vec<f64> {
        self.last
            .iter()
            .zip(&self.branches)
            .map(|(o, b)| o.mass_flow / b.nominal_flow)
            .collect()
    }
}

impl CoSimUnit for SmallOffice {
    fn metadata(&self) -> &UnitMetadata {
        &self.meta
    }

    fn initialize(&mut self, t0: f64) {
        self.pending.copy_from_slice(&self.default_inputs);
        self.applied.copy_from_slice(&self.default_inputs);
        self.temps.fill(self.initial_temp);
        self.last.fill(VavOutput::default());
        self.time = t0;
    }

    fn set_inputs(&mut self, values: &[f64]) -> Result<(), UnitError> {
        if values.len() != self.pending.len() {
            return Err(UnitError::InputShape {
                expected: self.pending.len(),
                got: values.len(),
            });
        }
        for ((slot, value), spec) in self.pending.iter_mut().zip(values).zip(self.meta.inputs()) {
            *slot = value.clamp(spec.lower_bound, spec.upper_bound);
        }
        Ok(())
    }

    fn do_step(&mut self, dt: f64) -> Result<(), UnitError> {
        if dt <= 0.0 {
            return Err(UnitError::BadStep(dt));
        }
        self.applied.copy_from_slice(&self.pending);
        let hour = (self.time / 3600.0).rem_euclid(24.0);
        let sample = self.weather.sample_at(self.time);
        let step = step_zone_thermal(
            &self.temps,
            &self.applied[1..6],
            self.applied[0],
            &self.zones,
            &self.branches,
            &sample,
            self.schedule.at_hour(hour),
            hvac_available(hour),
            dt,
        );
        self.temps = step.temps;
        self.last = step.per_zone;
        self.time += dt;
        Ok(())
    }

    fn get_outputs(&self) -> Vec<f64> {
        let w = self.weather.sample_at(self.time);
        let mut out = Vec::with_capacity(13);
        out.extend([w.dry_bulb, w.relative_humidity, w.wind_speed, w.direct_solar]);
        out.push(self.last.iter().map(|o| o.coil_power).sum());
        out.push(self.last.iter().map(|o| o.fan_power).sum());
        out.push(self.applied[0]);
        out.push(self.last.iter().map(|o| o.mass_flow).sum());
        out.extend(&self.temps);
        out
    }

    fn current_time(&self) -> f64 {
        self.time
    }
}

/// Three-floor medium office behind the unit contract.
pub struct MediumOffice {
    meta: UnitMetadata,
    floors: Vec<ZoneParams>,
    air_loops: Vec<VavParams>,
    schedule: OccupancySchedule,
    weather: WeatherDay,
    initial_temp: f64,
    default_inputs: Vec<f64>,
    pending: Vec<f64>,
    applied: Vec<f64>,
    temps: Vec<f64>,
    last: Vec<VavOutput>,
    time: f64,
}

impl MediumOffice {
    pub fn new(params: MediumOfficeParams, weather: WeatherDay) -> Result<Self, BuildingError> {
        params.validate()?;
        weather.validate()?;
        let meta = medium_office_metadata();
        validate_metadata(&meta).expect("medium office metadata is well-formed");
        let default_inputs = std::iter::repeat_n(params.baseline_sat, 3)
            .chain(std::iter::repeat_n(params.baseline_setpoint, 3))
            .collect::<Vec<f64>>();
        let mut unit = MediumOffice {
            meta,
            floors: params.floors,
            air_loops: params.air_loops,
            schedule: params.schedule,
            weather,
            initial_temp: params.initial_temp,
            default_inputs: default_inputs.clone(),
            pending: default_inputs.clone(),
            applied: default_inputs,
            temps: vec![params.initial_temp; 3],
            last: vec![VavOutput::default(); 3],
            time: 0.0,
        };
        unit.initialize(0.0);
        Ok(unit)
    }

    /// Per-floor supply flow as a fraction of loop nominal, averaged over
    /// the last completed step. Diagnostic only.
    pub fn flow_fractions(&self) -> Vec<f64> {
        self.last
            .iter()
            .zip(&self.air_loops)
            .map(|(o, l)| o.mass_flow / l.nominal_flow)
            .collect()
    }
}

impl CoSimUnit for MediumOffice {
    fn metadata(&self) -> &UnitMetadata {
        &self.meta
    }

    fn initialize(&mut self, t0: f64) {
        self.pending.copy_from_slice(&self.default_inputs);
        self.applied.copy_from_slice(&self.default_inputs);
        self.temps.fill(self.initial_temp);
        self.last.fill(VavOutput::default());
        self.time = t0;
    }

    fn set_inputs(&mut self, values: &[f64]) -> Result<(), UnitError> {
        if values.len() != self.pending.len() {
            return Err(UnitError::InputShape {
                expected: self.pending.len(),
                got: values.len(),
            });
        }
        for ((slot, value), spec) in self.pending.iter_mut().zip(values).zip(self.meta.inputs()) {
            *slot = value.clamp(spec.lower_bound, spec.upper_bound);
        }
        Ok(())
    }

    fn do_step(&mut self, dt: f64) -> Result<(), UnitError> {
        if dt <= 0.0 {
            return Err(UnitError::BadStep(dt));
        }
        self.applied.copy_from_slice(&self.pending);
        let hour = (self.time / 3600.0).rem_euclid(24.0);
        let sample = self.weather.sample_at(self.time);
        let frac = self.schedule.at_hour(hour);
        let on = hvac_available(hour);
        // Each floor is its own air loop with its own supply temperature.
        for i in 0..3 {
            let step = step_zone_thermal(
                &self.temps[i..=i],
                &self.applied[3 + i..=3 + i],
                self.applied[i],
                &self.floors[i..=i],
                &self.air_loops[i..=i],
                &sample,
                frac,
                on,
                dt,
            );
            self.temps[i] = step.temps[0];
            self.last[i] = step.per_zone[0];
        }
        self.time += dt;
        Ok(())
    }

    fn get_outputs(&self) -> Vec<f64> {
        let w = self.weather.sample_at(self.time);
        let mut out = Vec::with_capacity(19);
        out.extend([w.dry_bulb, w.relative_humidity, w.wind_speed, w.direct_solar]);
        out.extend(self.last.iter().map(|o| o.coil_power));
        out.extend(self.last.iter().map(|o| o.fan_power));
        out.extend(&self.applied[..3]);
        out.extend(self.last.iter().map(|o| o.mass_flow));
        out.extend(&self.temps);
        out
    }

    fn current_time(&self) -> f64 {
        self.time
    }
}
