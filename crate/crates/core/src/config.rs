//! Experiment configuration: one JSON document describing the fleet, the
//! weather schedule, the reward, the controller, and the learning setup.
//!
//! Keys are lower_snake_case and unknown keys are rejected everywhere, so a
//! misspelled hyperparameter fails loudly instead of silently taking a
//! default. Validation errors name the offending key path.

use crate::baseline::{rbc_baselines, RbcConfig};
use crate::buildings::{
    load_weather_csv, synthetic_weather, BuildingError, MediumOffice, MediumOfficeParams,
    SmallOffice, SmallOfficeParams, WeatherDay,
};
use crate::env::{ActionMapping, ActionMode, ActionSpec, ClusterEnv, EnvError, RewardConfig};
use crate::hub::{Hub, HubError, TimeAxis};
use crate::sac::{SacError, SacHyperparameters};
use crate::unit::CoSimUnit;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read configuration {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("configuration is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration at `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(transparent)]
    Building(#[from] BuildingError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error(transparent)]
    Sac(#[from] SacError),
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Which controller drives the cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    Rbc,
    Sac,
}

/// Embedded parameter-set selector for a building model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamVariant {
    /// Occupancy with a lunchtime dip.
    #[default]
    A,
    /// Constant office-day occupancy.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildingModel {
    SmallOffice,
    MediumOffice,
}

/// One fleet member. `small_params`/`medium_params` fully replace the
/// embedded defaults for the matching model kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitConfig {
    pub model: BuildingModel,
    #[serde(default)]
    pub variant: ParamVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_params: Option<SmallOfficeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium_params: Option<MediumOfficeParams>,
}

impl UnitConfig {
    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        match self.model {
            BuildingModel::SmallOffice if self.medium_params.is_some() => Err(invalid(
                format!("{key}.medium_params"),
                "not applicable to a small office",
            )),
            BuildingModel::MediumOffice if self.small_params.is_some() => Err(invalid(
                format!("{key}.small_params"),
                "not applicable to a medium office",
            )),
            _ => Ok(()),
        }
    }

    fn small_params(&self) -> SmallOfficeParams {
        self.small_params.clone().unwrap_or_else(|| match self.variant {
            ParamVariant::A => SmallOfficeParams::variant_a(),
            ParamVariant::B => SmallOfficeParams::variant_b(),
        })
    }

    fn medium_params(&self) -> MediumOfficeParams {
        self.medium_params.clone().unwrap_or_else(|| match self.variant {
            ParamVariant::A => MediumOfficeParams::variant_a(),
            ParamVariant::B => MediumOfficeParams::variant_b(),
        })
    }

    /// Builds the unit against one day of weather.
    pub fn build(&self, weather: &WeatherDay) -> Result<Box<dyn CoSimUnit>, BuildingError> {
        Ok(match self.model {
            BuildingModel::SmallOffice => {
                Box::new(SmallOffice::new(self.small_params(), weather.clone())?)
            }
            BuildingModel::MediumOffice => {
                Box::new(MediumOffice::new(self.medium_params(), weather.clone())?)
            }
        })
    }
}

fn default_step_seconds() -> f64 {
    900.0
}

fn default_action_mode() -> ActionMode {
    ActionMode::Box
}

fn default_action_mapping() -> ActionMapping {
    ActionMapping::RelativeIncremental
}

/// Fleet layout and stepping grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubConfig {
    /// Hub step in seconds; must divide a day evenly.
    #[serde(default = "default_step_seconds")]
    pub step_seconds: f64,
    /// Units in index order (the first entry becomes fmu_1).
    pub units: Vec<UnitConfig>,
    #[serde(default = "default_action_mode")]
    pub action_mode: ActionMode,
    #[serde(default = "default_action_mapping")]
    pub action_mapping: ActionMapping,
}

impl HubConfig {
    pub fn steps_per_day(&self) -> usize {
        (86_400.0 / self.step_seconds).round() as usize
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.units.is_empty() {
            return Err(invalid("hub.units", "at least one unit is required"));
        }
        if !(self.step_seconds.is_finite() && self.step_seconds > 0.0) {
            return Err(invalid(
                "hub.step_seconds",
                format!("must be positive, got {}", self.step_seconds),
            ));
        }
        let steps = 86_400.0 / self.step_seconds;
        if (steps - steps.round()).abs() > 1e-9 || steps < 1.0 {
            return Err(invalid(
                "hub.step_seconds",
                format!("{} s does not divide a day evenly", self.step_seconds),
            ));
        }
        for (i, unit) in self.units.iter().enumerate() {
            unit.validate(&format!("hub.units[{i}]"))?;
        }
        Ok(())
    }
}

fn default_peak_hour() -> f64 {
    16.0
}

/// Smooth synthetic hot-day profile parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticWeatherConfig {
    pub peak_temp: f64,
    pub min_temp: f64,
    #[serde(default = "default_peak_hour")]
    pub peak_hour: f64,
}

/// One weather day, either generated or loaded from CSV
/// (`dry_bulb,relative_humidity,wind_speed,direct_solar`, one row per step).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherDayConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticWeatherConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl WeatherDayConfig {
    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        match (&self.synthetic, &self.csv) {
            (Some(_), Some(_)) => Err(invalid(key, "give either `synthetic` or `csv`, not both")),
            (None, None) => Err(invalid(key, "needs a `synthetic` block or a `csv` path")),
            (Some(s), None) => {
                if !(s.min_temp.is_finite() && s.peak_temp.is_finite()) {
                    return Err(invalid(format!("{key}.synthetic"), "temperatures must be finite"));
                }
                if s.min_temp > s.peak_temp {
                    return Err(invalid(
                        format!("{key}.synthetic"),
                        format!("min_temp {} exceeds peak_temp {}", s.min_temp, s.peak_temp),
                    ));
                }
                if !(0.0..24.0).contains(&s.peak_hour) {
                    return Err(invalid(
                        format!("{key}.synthetic.peak_hour"),
                        format!("must lie in [0, 24), got {}", s.peak_hour),
                    ));
                }
                Ok(())
            }
            (None, Some(_)) => Ok(()),
        }
    }

    fn resolve(
        &self,
        key: &str,
        steps_per_day: usize,
        base_dir: Option<&Path>,
    ) -> Result<WeatherDay, ConfigError> {
        if let Some(s) = &self.synthetic {
            return Ok(synthetic_weather(
                s.peak_temp,
                s.min_temp,
                s.peak_hour,
                steps_per_day,
            ));
        }
        let raw = self.csv.as_ref().expect("validated: csv present");
        let path = match base_dir {
            Some(dir) if raw.is_relative() => dir.join(raw),
            _ => raw.clone(),
        };
        let day = load_weather_csv(&path)?;
        if day.samples_per_day() != steps_per_day {
            return Err(invalid(
                format!("{key}.csv"),
                format!(
                    "{} holds {} rows but the hub steps {} times per day",
                    path.display(),
                    day.samples_per_day(),
                    steps_per_day
                ),
            ));
        }
        Ok(day)
    }
}

fn default_episodes() -> usize {
    500
}

fn default_checkpoint_every() -> usize {
    25
}

/// The whole experiment document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hub: HubConfig,
    #[serde(default)]
    pub controller: ControllerKind,
    pub reward: RewardConfig,
    #[serde(default)]
    pub sac: SacHyperparameters,
    #[serde(default)]
    pub rbc: RbcConfig,
    /// All weather days known to this experiment, indexed from 0.
    pub weather: Vec<WeatherDayConfig>,
    /// Indices into `weather` cycled through during training.
    pub training_days: Vec<usize>,
    /// Index into `weather` used by simulate/evaluate.
    pub test_day: usize,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    /// Training writes a rolling recovery checkpoint every this many episodes.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    /// Directory the document was loaded from; resolves relative CSV paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl std::str::FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Self = text.parse()?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hub.validate()?;
        self.reward.validate()?;
        self.sac.validate()?;
        if self.weather.is_empty() {
            return Err(invalid("weather", "at least one weather day is required"));
        }
        for (i, day) in self.weather.iter().enumerate() {
            day.validate(&format!("weather[{i}]"))?;
        }
        if self.training_days.is_empty() {
            return Err(invalid("training_days", "at least one training day is required"));
        }
        for (i, &d) in self.training_days.iter().enumerate() {
            if d >= self.weather.len() {
                return Err(invalid(
                    format!("training_days[{i}]"),
                    format!("day {d} does not exist ({} weather days defined)", self.weather.len()),
                ));
            }
        }
        if self.test_day >= self.weather.len() {
            return Err(invalid(
                "test_day",
                format!(
                    "day {} does not exist ({} weather days defined)",
                    self.test_day,
                    self.weather.len()
                ),
            ));
        }
        if self.episodes == 0 {
            return Err(invalid("episodes", "must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(invalid("checkpoint_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn axis(&self) -> Result<TimeAxis, ConfigError> {
        Ok(TimeAxis::for_days(0.0, self.hub.step_seconds, 1)?)
    }

    /// Resolves every configured weather day into sampled series.
    pub fn resolve_weather(&self) -> Result<Vec<WeatherDay>, ConfigError> {
        let steps = self.hub.steps_per_day();
        self.weather
            .iter()
            .enumerate()
            .map(|(i, d)| d.resolve(&format!("weather[{i}]"), steps, self.base_dir.as_deref()))
            .collect()
    }

    /// Builds the fleet for one resolved weather day.
    pub fn build_units(&self, weather: &WeatherDay) -> Result<Vec<Box<dyn CoSimUnit>>, ConfigError> {
        self.hub
            .units
            .iter()
            .map(|u| Ok(u.build(weather)?))
            .collect()
    }

    /// Builds a hub on the test day (the RBC simulate path).
    pub fn build_hub(&self) -> Result<Hub, ConfigError> {
        let weather = self.resolve_weather()?;
        let units = self.build_units(&weather[self.test_day])?;
        Ok(Hub::new(units, self.axis()?)?)
    }

    /// Builds the learning environment over all configured weather days.
    /// Day indices passed to `reset` are indices into `weather`.
    pub fn build_env(&self) -> Result<ClusterEnv, ConfigError> {
        let weather = self.resolve_weather()?;
        let axis = self.axis()?;
        // Materialize one fleet now so unit parameters fail here, with a
        // config error, rather than inside the factory.
        for day in &weather {
            let _ = self.build_units(day)?;
        }
        let units_cfg = self.hub.units.clone();
        let factory_weather = weather.clone();
        let factory = Box::new(move |day: usize| {
            let w = &factory_weather[day % factory_weather.len()];
            units_cfg
                .iter()
                .map(|u| u.build(w).expect("unit parameters were validated"))
                .collect()
        });
        let env = ClusterEnv::new(
            factory,
            weather.len(),
            axis,
            self.hub.action_mode,
            self.hub.action_mapping,
            self.reward.clone(),
            self.rbc_baseline_values()?,
        )?;
        Ok(env)
    }

    /// Flattened baseline setpoints (the RBC rule) in action-dim order.
    pub fn rbc_baseline_values(&self) -> Result<Vec<f64>, ConfigError> {
        let weather = self.resolve_weather()?;
        let units = self.build_units(&weather[self.test_day])?;
        let hub = Hub::new(units, self.axis()?)?;
        let metas: Vec<_> = (0..hub.unit_count()).map(|i| hub.unit_metadata(i)).collect();
        let spec = ActionSpec::from_units(&metas, self.hub.action_mode, self.hub.action_mapping);
        Ok(rbc_baselines(&spec, &self.rbc)?)
    }

    /// The canonical four-building reference cluster on the synthetic hot
    /// day, with twelve cooler-to-similar training days.
    pub fn case_study(output_dir: &Path) -> Self {
        let mut weather: Vec<WeatherDayConfig> = (0..12)
            .map(|i| WeatherDayConfig {
                synthetic: Some(SyntheticWeatherConfig {
                    // Training days sweep 33.0..37.4 C peaks around the
                    // test-day shape.
                    peak_temp: 33.0 + 0.4 * i as f64,
                    min_temp: 25.0 + 0.3 * i as f64,
                    peak_hour: 16.0,
                }),
                csv: None,
            })
            .collect();
        weather.push(WeatherDayConfig {
            synthetic: Some(SyntheticWeatherConfig {
                peak_temp: 37.2,
                min_temp: 28.6,
                peak_hour: 16.0,
            }),
            csv: None,
        });
        ExperimentConfig {
            hub: HubConfig {
                step_seconds: 900.0,
                units: vec![
                    UnitConfig {
                        model: BuildingModel::SmallOffice,
                        variant: ParamVariant::A,
                        small_params: None,
                        medium_params: None,
                    },
                    UnitConfig {
                        model: BuildingModel::SmallOffice,
                        variant: ParamVariant::B,
                        small_params: None,
                        medium_params: None,
                    },
                    UnitConfig {
                        model: BuildingModel::MediumOffice,
                        variant: ParamVariant::A,
                        small_params: None,
                        medium_params: None,
                    },
                    UnitConfig {
                        model: BuildingModel::MediumOffice,
                        variant: ParamVariant::B,
                        small_params: None,
                        medium_params: None,
                    },
                ],
                action_mode: ActionMode::Box,
                action_mapping: ActionMapping::RelativeIncremental,
            },
            controller: ControllerKind::Rbc,
            reward: RewardConfig::with_threshold(103_500.0),
            sac: SacHyperparameters::default(),
            rbc: RbcConfig::default(),
            weather,
            training_days: (0..12).collect(),
            test_day: 12,
            episodes: default_episodes(),
            checkpoint_every: default_checkpoint_every(),
            output_dir: output_dir.to_path_buf(),
            master_seed: 1,
            base_dir: None,
        }
    }
}
