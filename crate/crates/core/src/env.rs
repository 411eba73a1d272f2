//! Gym-contract reinforcement-learning environment over the hub.
//!
//! Responsibilities: assemble the normalized observation (weather
//! deduplication, min-max scaling, trailing hour feature), map agent actions
//! from `[-1, 1]` (or discrete bins) to physical setpoints, compute the
//! three-component reward, and provide `reset`/`step` episode semantics.

use crate::hub::{Hub, HubError, RewardRow, TimeAxis};
use crate::unit::{base_name, CoSimUnit};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error("raw output vector has {got} values, expected {expected}")]
    RawLength { expected: usize, got: usize },
    #[error("action vector has {got} dims, expected {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error("action dim {dim}: bin {bin} out of range (0..{count})")]
    BinOutOfRange { dim: usize, bin: i64, count: usize },
    #[error("action dim {dim}: {value} is not an integer bin index")]
    NonIntegerBin { dim: usize, value: f64 },
    #[error("negative power reading {value} W at output {name} (model bug)")]
    NegativePower { name: String, value: f64 },
    #[error("episode is done; call reset before stepping again")]
    EpisodeDone,
    #[error("episode day {day} out of range (0..{count})")]
    DayOutOfRange { day: usize, count: usize },
    #[error("baseline setpoint for {name}: {value} outside [{lower}, {upper}]")]
    BaselineOutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("reward config: {0}")]
    BadRewardConfig(String),
    #[error("environment config: {0}")]
    BadConfig(String),
}

/// How agent actions are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// Continuous vector, every dimension in `[-1, 1]`.
    Box,
    /// Integer bin index per dimension.
    Multidiscrete,
}

/// How `[-1, 1]` actions become physical setpoints (box mode only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMapping {
    /// Linear interpolation across the allowed range.
    Absolute,
    /// Bounded nudge of at most 0.5 °C from the previous setpoint.
    RelativeIncremental,
}

/// One observation dimension: a unit output with its normalization bounds.
#[derive(Debug, Clone)]
pub struct ObsDim {
    pub unit: usize,
    pub output: usize,
    /// Index into the concatenated raw output vector.
    pub flat: usize,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// Declares which raw outputs survive deduplication and how each is scaled.
/// The trailing hour-of-day feature is implicit.
#[derive(Debug, Clone)]
pub struct ObservationSpec {
    dims: Vec<ObsDim>,
    raw_len: usize,
}

impl ObservationSpec {
    /// Builds the observation layout from the fleet's metadata. Every unit reports the
    /// shared ambient conditions (the standard weather outputs), so those
    /// dims repeat across units; only the first unit's copies are kept.
    /// Unit-specific outputs always survive, even when two units of the
    /// same type share variable names.
    pub fn from_units(units: &[&crate::unit::UnitMetadata]) -> Self {
        let mut dims = Vec::new();
        let mut flat = 0usize;
        for (u, meta) in units.iter().enumerate() {
            for (j, var) in meta.outputs().enumerate() {
                let duplicate =
                    u > 0 && crate::unit::AMBIENT_OUTPUT_NAMES.contains(&var.name.as_str());
                if !duplicate {
                    dims.push(ObsDim {
                        unit: u,
                        output: j,
                        flat,
                        name: var.name.clone(),
                        lower: var.lower_bound,
                        upper: var.upper_bound,
                    });
                }
                flat += 1;
            }
        }
        ObservationSpec { dims, raw_len: flat }
    }

    /// Observation dimensionality including the trailing hour feature.
    pub fn dim(&self) -> usize {
        self.dims.len() + 1
    }

    /// Length of the concatenated raw output vector before deduplication.
    pub fn raw_len(&self) -> usize {
        self.raw_len
    }

    pub fn dims(&self) -> &[ObsDim] {
        &self.dims
    }

    pub fn normalize(&self, dim: usize, value: f64) -> f64 {
        let d = &self.dims[dim];
        ((value - d.lower) / (d.upper - d.lower)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, dim: usize, scaled: f64) -> f64 {
        let d = &self.dims[dim];
        d.lower + scaled * (d.upper - d.lower)
    }
}

/// Drops duplicate dims, scales everything to `[0, 1]`, and appends
/// `hour/24`.
pub fn assemble_observation(
    raw: &[f64],
    spec: &ObservationSpec,
    hour: f64,
) -> Result<Vec<f64>, EnvError> {
    if raw.len() != spec.raw_len {
        return Err(EnvError::RawLength {
            expected: spec.raw_len,
            got: raw.len(),
        });
    }
    let mut obs = Vec::with_capacity(spec.dim());
    for (i, d) in spec.dims.iter().enumerate() {
        obs.push(spec.normalize(i, raw[d.flat]));
    }
    obs.push(hour.rem_euclid(24.0) / 24.0);
    Ok(obs)
}

/// One controllable setpoint: a unit input with bounds and granularity.
#[derive(Debug, Clone)]
pub struct ActionDim {
    pub unit: usize,
    pub input: usize,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub granularity: f64,
}

/// The action space: every unit input in (unit, input) order.
#[derive(Debug, Clone)]
pub struct ActionSpec {
    pub mode: ActionMode,
    pub mapping: ActionMapping,
    dims: Vec<ActionDim>,
}

impl ActionSpec {
    pub fn from_units(
        units: &[&crate::unit::UnitMetadata],
        mode: ActionMode,
        mapping: ActionMapping,
    ) -> Self {
        let mut dims = Vec::new();
        for (u, meta) in units.iter().enumerate() {
            for (j, var) in meta.inputs().enumerate() {
                dims.push(ActionDim {
                    unit: u,
                    input: j,
                    name: var.name.clone(),
                    lower: var.lower_bound,
                    upper: var.upper_bound,
                    granularity: var.granularity.unwrap_or(0.1),
                });
            }
        }
        ActionSpec { mode, mapping, dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[ActionDim] {
        &self.dims
    }

    /// Discrete bins per dimension: (upper − lower)/granularity + 1.
    pub fn bin_count(&self, dim: usize) -> usize {
        let d = &self.dims[dim];
        ((d.upper - d.lower) / d.granularity).round() as usize + 1
    }
}

/// Snaps a physical value onto the granularity lattice anchored at the
/// lower bound, then clamps back into the range.
fn quantize(value: f64, lower: f64, upper: f64, granularity: f64) -> f64 {
    let snapped = lower + ((value - lower) / granularity).round() * granularity;
    snapped.clamp(lower, upper)
}

/// Bounded nudge: ΔT = 0.1·round(5a) (round half away from zero), applied
/// to the previous setpoint, clamped and snapped to the lattice.
pub fn map_action_relative(
    a: f64,
    prev: f64,
    lower: f64,
    upper: f64,
    granularity: f64,
) -> f64 {
    let a = a.clamp(-1.0, 1.0);
    let delta = 0.1 * (5.0 * a).round();
    quantize((prev + delta).clamp(lower, upper), lower, upper, granularity)
}

/// Linear interpolation of `[-1, 1]` across the range, snapped to the
/// lattice.
pub fn map_action_absolute(a: f64, lower: f64, upper: f64, granularity: f64) -> f64 {
    let a = a.clamp(-1.0, 1.0);
    quantize(
        lower + (a + 1.0) / 2.0 * (upper - lower),
        lower,
        upper,
        granularity,
    )
}

/// Decodes a discrete bin index: lower + bin·granularity.
pub fn map_action_discrete(
    bin: i64,
    dim: usize,
    lower: f64,
    upper: f64,
    granularity: f64,
) -> Result<f64, EnvError> {
    let count = ((upper - lower) / granularity).round() as i64 + 1;
    if bin < 0 || bin >= count {
        return Err(EnvError::BinOutOfRange {
            dim,
            bin,
            count: count as usize,
        });
    }
    Ok(quantize(
        lower + bin as f64 * granularity,
        lower,
        upper,
        granularity,
    ))
}

/// Reward weights, demand threshold, comfort band, and occupied window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    #[serde(default = "default_w_power")]
    pub w_power: f64,
    #[serde(default = "default_w_comfort")]
    pub w_comfort: f64,
    #[serde(default = "default_w_peak")]
    pub w_peak: f64,
    /// Demand-limiting threshold, W.
    pub p_max: f64,
    #[serde(default = "default_t_low")]
    pub t_low: f64,
    #[serde(default = "default_t_high")]
    pub t_high: f64,
    /// Comfort is only charged when hour ∈ [start, end).
    #[serde(default = "default_occupied_start")]
    pub occupied_start_hour: f64,
    #[serde(default = "default_occupied_end")]
    pub occupied_end_hour: f64,
}

fn default_w_power() -> f64 {
    0.5
}
fn default_w_comfort() -> f64 {
    1.0
}
fn default_w_peak() -> f64 {
    2.0
}
fn default_t_low() -> f64 {
    23.0
}
fn default_t_high() -> f64 {
    25.0
}
fn default_occupied_start() -> f64 {
    8.0
}
fn default_occupied_end() -> f64 {
    18.0
}

impl RewardConfig {
    pub fn with_threshold(p_max: f64) -> Self {
        RewardConfig {
            w_power: default_w_power(),
            w_comfort: default_w_comfort(),
            w_peak: default_w_peak(),
            p_max,
            t_low: default_t_low(),
            t_high: default_t_high(),
            occupied_start_hour: default_occupied_start(),
            occupied_end_hour: default_occupied_end(),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::BadRewardConfig(msg));
        if self.w_power < 0.0 || self.w_comfort < 0.0 || self.w_peak < 0.0 {
            return bad("weights must be >= 0".into());
        }
        if !(self.p_max > 0.0) {
            return bad(format!("p_max must be > 0, got {}", self.p_max));
        }
        if !(self.t_low < self.t_high) {
            return bad(format!(
                "comfort band [{}, {}] is inverted",
                self.t_low, self.t_high
            ));
        }
        if !(0.0 <= self.occupied_start_hour
            && self.occupied_start_hour < self.occupied_end_hour
            && self.occupied_end_hour <= 24.0)
        {
            return bad(format!(
                "occupied window [{}, {}) must sit inside [0, 24]",
                self.occupied_start_hour, self.occupied_end_hour
            ));
        }
        Ok(())
    }
}

/// Unweighted penalty components and the resulting reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub p_hvac: f64,
    pub p_temp: f64,
    pub p_peak: f64,
    pub reward: f64,
}

/// Sums coil and fan power per unit into the cluster demand and scales by
/// the threshold. Negative readings signal a model bug upstream.
pub fn power_penalty(
    coil_powers: &[f64],
    fan_powers: &[f64],
    p_max: f64,
) -> Result<(f64, f64), EnvError> {
    for (kind, values) in [("coil power", coil_powers), ("fan power", fan_powers)] {
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(EnvError::NegativePower {
                name: kind.to_string(),
                value: *v,
            });
        }
    }
    let p_t: f64 = coil_powers.iter().chain(fan_powers).sum();
    Ok((p_t, p_t / p_max))
}

/// Band-deviation penalty per zone: out-of-band distance, squared once it
/// exceeds 1 °C; zero outside the occupied window.
pub fn comfort_penalty(zone_temps: &[f64], cfg: &RewardConfig, hour: f64) -> f64 {
    let h = hour.rem_euclid(24.0);
    if h < cfg.occupied_start_hour || h >= cfg.occupied_end_hour {
        return 0.0;
    }
    zone_temps
        .iter()
        .map(|&t| {
            let dev = if t < cfg.t_low {
                cfg.t_low - t
            } else if t > cfg.t_high {
                t - cfg.t_high
            } else {
                0.0
            };
            if dev <= 1.0 {
                dev
            } else {
                dev * dev
            }
        })
        .sum()
}

/// Squared relative demand when the threshold is met or exceeded, a fixed
/// −0.5 bonus otherwise.
pub fn peak_penalty(p_t: f64, p_max: f64, p_hvac: f64) -> f64 {
    if p_t >= p_max {
        p_hvac * p_hvac
    } else {
        -0.5
    }
}

/// reward = −(w_power·p_hvac + w_comfort·p_temp + w_peak·p_peak).
pub fn compute_reward(p_hvac: f64, p_temp: f64, p_peak: f64, cfg: &RewardConfig) -> RewardBreakdown {
    RewardBreakdown {
        p_hvac,
        p_temp,
        p_peak,
        reward: -(cfg.w_power * p_hvac + cfg.w_comfort * p_temp + cfg.w_peak * p_peak),
    }
}

/// Extra step information alongside the scalar reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub breakdown: RewardBreakdown,
    /// Cluster HVAC demand for the interval, W.
    pub aggregate_power: f64,
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Builds a fresh fleet for the given episode day index.
pub type UnitFactory = Box<dyn Fn(usize) -> Vec<Box<dyn CoSimUnit>> + Send>;

/// Flat raw-vector indices of the outputs the reward reads.
#[derive(Debug, Clone, Default)]
struct OutputRoles {
    /// (unit, flat index) of each coil-power output.
    coil: Vec<(usize, usize)>,
    fan: Vec<(usize, usize)>,
    temp_names: Vec<String>,
    temps: Vec<usize>,
}

fn classify_outputs(units: &[&crate::unit::UnitMetadata]) -> OutputRoles {
    let mut roles = OutputRoles::default();
    let mut flat = 0usize;
    for (u, meta) in units.iter().enumerate() {
        for var in meta.outputs() {
            match base_name(&var.name) {
                "Cooling Coil Electric Power" => roles.coil.push((u, flat)),
                "Supply Fan Electric Power" => roles.fan.push((u, flat)),
                "Zone Air Temperature" | "Floor Air Temperature" => {
                    roles.temps.push(flat);
                    roles.temp_names.push(var.name.clone());
                }
                _ => {}
            }
            flat += 1;
        }
    }
    roles
}

/// The cluster environment: hub + observation/action spaces + reward.
pub struct ClusterEnv {
    hub: Hub,
    factory: UnitFactory,
    day_count: usize,
    day: usize,
    axis: TimeAxis,
    obs_spec: ObservationSpec,
    action_spec: ActionSpec,
    reward_cfg: RewardConfig,
    baselines: Vec<f64>,
    /// Previous physical setpoint per action dimension.
    mapper: Vec<f64>,
    roles: OutputRoles,
    last_seed: u64,
}

impl ClusterEnv {
    /// `factory(day)` must build the same fleet layout for every day; the
    /// baseline list holds one physical setpoint per action dimension and
    /// becomes the mapper state on reset.
    pub fn new(
        factory: UnitFactory,
        day_count: usize,
        axis: TimeAxis,
        mode: ActionMode,
        mapping: ActionMapping,
        reward_cfg: RewardConfig,
        baselines: Vec<f64>,
    ) -> Result<Self, EnvError> {
        reward_cfg.validate()?;
        if day_count == 0 {
            return Err(EnvError::BadConfig("need at least one episode day".into()));
        }
        let hub = Hub::new(factory(0), axis)?;
        let metas: Vec<_> = (0..hub.unit_count()).map(|i| hub.unit_metadata(i)).collect();
        let obs_spec = ObservationSpec::from_units(&metas);
        let action_spec = ActionSpec::from_units(&metas, mode, mapping);
        let roles = classify_outputs(&metas);
        if baselines.len() != action_spec.dim() {
            return Err(EnvError::ActionLength {
                expected: action_spec.dim(),
                got: baselines.len(),
            });
        }
        for (b, d) in baselines.iter().zip(action_spec.dims()) {
            if *b < d.lower || *b > d.upper {
                return Err(EnvError::BaselineOutOfBounds {
                    name: d.name.clone(),
                    value: *b,
                    lower: d.lower,
                    upper: d.upper,
                });
            }
        }
        let mapper = baselines.clone();
        Ok(ClusterEnv {
            hub,
            factory,
            day_count,
            day: 0,
            axis,
            obs_spec,
            action_spec,
            reward_cfg,
            baselines,
            mapper,
            roles,
            last_seed: 0,
        })
    }

    pub fn observation_spec(&self) -> &ObservationSpec {
        &self.obs_spec
    }

    pub fn action_spec(&self) -> &ActionSpec {
        &self.action_spec
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward_cfg
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    pub fn axis(&self) -> &TimeAxis {
        &self.axis
    }

    pub fn day(&self) -> usize {
        self.day
    }

    pub fn last_seed(&self) -> u64 {
        self.last_seed
    }

    pub fn is_done(&self) -> bool {
        self.hub.is_finished()
    }

    /// Current physical setpoints the relative mapping works from.
    pub fn mapper_state(&self) -> &[f64] {
        &self.mapper
    }

    /// Names of the zone-temperature observation dims (diagnostics).
    pub fn zone_temp_names(&self) -> &[String] {
        &self.roles.temp_names
    }

    /// Re-initializes the fleet on the requested day, restores baseline
    /// setpoints, and returns the first observation. The dynamics are
    /// deterministic; the seed is recorded for the Gym contract and for
    /// future stochastic extensions.
    pub fn reset(&mut self, seed: u64, day: usize) -> Result<Vec<f64>, EnvError> {
        if day >= self.day_count {
            return Err(EnvError::DayOutOfRange {
                day,
                count: self.day_count,
            });
        }
        if day != self.day || self.hub.steps_done() > 0 {
            self.hub = Hub::new((self.factory)(day), self.axis)?;
            self.day = day;
        } else {
            self.hub.reset();
        }
        self.last_seed = seed;
        self.mapper.copy_from_slice(&self.baselines);
        let raw = self.hub.collect_outputs()?;
        assemble_observation(&raw, &self.obs_spec, self.axis.hour_at(0))
    }

    /// Maps one agent action to physical setpoints per dimension, updating
    /// the mapper state.
    fn map_action(&mut self, action: &[f64]) -> Result<Vec<f64>, EnvError> {
        if action.len() != self.action_spec.dim() {
            return Err(EnvError::ActionLength {
                expected: self.action_spec.dim(),
                got: action.len(),
            });
        }
        let mut mapped = Vec::with_capacity(action.len());
        for (i, (&a, d)) in action.iter().zip(self.action_spec.dims()).enumerate() {
            let value = match self.action_spec.mode {
                ActionMode::Multidiscrete => {
                    if a.fract() != 0.0 || !a.is_finite() {
                        return Err(EnvError::NonIntegerBin { dim: i, value: a });
                    }
                    map_action_discrete(a as i64, i, d.lower, d.upper, d.granularity)?
                }
                ActionMode::Box => match self.action_spec.mapping {
                    ActionMapping::Absolute => {
                        map_action_absolute(a, d.lower, d.upper, d.granularity)
                    }
                    ActionMapping::RelativeIncremental => {
                        map_action_relative(a, self.mapper[i], d.lower, d.upper, d.granularity)
                    }
                },
            };
            mapped.push(value);
        }
        self.mapper.copy_from_slice(&mapped);
        Ok(mapped)
    }

    /// Splits per-dimension setpoints into per-unit sub-lists.
    fn group_by_unit(&self, mapped: &[f64]) -> Vec<Vec<f64>> {
        let mut grouped: Vec<Vec<f64>> = vec![Vec::new(); self.hub.unit_count()];
        for (v, d) in mapped.iter().zip(self.action_spec.dims()) {
            grouped[d.unit].push(*v);
        }
        grouped
    }

    /// One Gym step: map, apply, advance one interval, observe, score.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        if self.hub.is_finished() {
            return Err(EnvError::EpisodeDone);
        }
        let mapped = self.map_action(action)?;
        let grouped = self.group_by_unit(&mapped);
        self.advance(&grouped)
    }

    /// Steps with physical setpoints directly, bypassing the `[-1, 1]`
    /// mapping — the path rule-based control uses. The mapper state follows
    /// the injected values (clamped to the action bounds).
    pub fn step_physical(&mut self, per_unit: &[Vec<f64>]) -> Result<StepResult, EnvError> {
        if self.hub.is_finished() {
            return Err(EnvError::EpisodeDone);
        }
        let flat: Vec<f64> = per_unit.iter().flatten().copied().collect();
        if flat.len() != self.action_spec.dim() {
            return Err(EnvError::ActionLength {
                expected: self.action_spec.dim(),
                got: flat.len(),
            });
        }
        for (m, (v, d)) in self
            .mapper
            .iter_mut()
            .zip(flat.iter().zip(self.action_spec.dims()))
        {
            *m = v.clamp(d.lower, d.upper);
        }
        self.advance(per_unit)
    }

    fn advance(&mut self, grouped: &[Vec<f64>]) -> Result<StepResult, EnvError> {
        // Hour at the start of the interval the action governs.
        let interval_hour = self.axis.hour_at(self.hub.steps_done());
        let step_index = self.hub.steps_done();
        self.hub.apply_actions(grouped)?;
        self.hub.step_all()?;
        let raw = self.hub.collect_outputs()?;

        let coils: Vec<f64> = self.roles.coil.iter().map(|&(_, f)| raw[f]).collect();
        let fans: Vec<f64> = self.roles.fan.iter().map(|&(_, f)| raw[f]).collect();
        let temps: Vec<f64> = self.roles.temps.iter().map(|&f| raw[f]).collect();
        let (p_t, p_hvac) = power_penalty(&coils, &fans, self.reward_cfg.p_max)?;
        let p_temp = comfort_penalty(&temps, &self.reward_cfg, interval_hour);
        let p_peak = peak_penalty(p_t, self.reward_cfg.p_max, p_hvac);
        let breakdown = compute_reward(p_hvac, p_temp, p_peak, &self.reward_cfg);

        self.hub.push_reward(RewardRow {
            step: step_index,
            p_hvac,
            p_temp,
            p_peak,
            weighted_power: self.reward_cfg.w_power * p_hvac,
            weighted_comfort: self.reward_cfg.w_comfort * p_temp,
            weighted_peak: self.reward_cfg.w_peak * p_peak,
            reward: breakdown.reward,
        });

        let observation =
            assemble_observation(&raw, &self.obs_spec, self.axis.hour_at(self.hub.steps_done()))?;
        Ok(StepResult {
            observation,
            reward: breakdown.reward,
            done: self.hub.is_finished(),
            info: StepInfo {
                breakdown,
                aggregate_power: p_t,
            },
        })
    }

    /// Exports the run record (unit CSVs + rewards.csv) via the hub.
    pub fn export_csv(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>, EnvError> {
        Ok(self.hub.export_csv(dir)?)
    }
}
