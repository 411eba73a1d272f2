//! The co-simulation unit contract.
//!
//! Every building model the hub can drive implements [`CoSimUnit`]: a
//! self-stepping simulator that declares its exchangeable variables up front
//! through [`UnitMetadata`]. The metadata plays the role of a model
//! description document: ordered input and output variables, physical bounds,
//! and the discretization granularity of each setpoint input.

use thiserror::Error;

/// Whether a variable is written into the unit or read out of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Causality {
    Input,
    Output,
}

/// Declaration of one exchangeable variable of a unit.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub causality: Causality,
    /// Physical unit string, e.g. "°C", "W", "kg/s".
    pub unit: String,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Discretization step for setpoint inputs (e.g. 0.1 °C). `None` for outputs.
    pub granularity: Option<f64>,
}

impl VariableSpec {
    pub fn input(name: &str, unit: &str, lower: f64, upper: f64, granularity: f64) -> Self {
        Self {
            name: name.to_string(),
            causality: Causality::Input,
            unit: unit.to_string(),
            lower_bound: lower,
            upper_bound: upper,
            granularity: Some(granularity),
        }
    }

    pub fn output(name: &str, unit: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            causality: Causality::Output,
            unit: unit.to_string(),
            lower_bound: lower,
            upper_bound: upper,
            granularity: None,
        }
    }
}

/// Ordered variable declarations of one unit type.
///
/// Input and output variables keep a stable declared order; the hub and the
/// environment both address variables by that order, so it is part of the
/// contract, not a presentation detail.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMetadata {
    /// Archetype identifier, e.g. `small_office` or `medium_office`.
    pub unit_type: String,
    pub variables: Vec<VariableSpec>,
    /// Preferred communication step in seconds.
    pub default_step: f64,
}

impl UnitMetadata {
    pub fn inputs(&self) -> impl Iterator<Item = &VariableSpec> {
        self.variables
            .iter()
            .filter(|v| v.causality == Causality::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &VariableSpec> {
        self.variables
            .iter()
            .filter(|v| v.causality == Causality::Output)
    }

    pub fn input_count(&self) -> usize {
        self.inputs().count()
    }

    pub fn output_count(&self) -> usize {
        self.outputs().count()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetadataError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("variable `{name}`: lower bound {lower} is not below upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("input `{0}` must declare a positive granularity")]
    BadGranularity(String),
    #[error("unit type `{unit_type}` must declare {expected_inputs} inputs and {expected_outputs} outputs, found {inputs}/{outputs}")]
    WrongCardinality {
        unit_type: String,
        expected_inputs: usize,
        expected_outputs: usize,
        inputs: usize,
        outputs: usize,
    },
    #[error("default step must be positive, got {0}")]
    BadDefaultStep(f64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Expected input/output cardinality for the known unit archetypes.
fn expected_io(unit_type: &str) -> Option<(usize, usize)> {
    match unit_type {
        "small_office" => Some((6, 13)),
        "medium_office" => Some((6, 19)),
        _ => None,
    }
}

/// Checks every variable declaration and, for known archetypes, the I/O
/// cardinality of the whole table.
pub fn validate_metadata(meta: &UnitMetadata) -> Result<(), MetadataError> {
    if meta.default_step <= 0.0 {
        return Err(MetadataError::BadDefaultStep(meta.default_step));
    }
    let mut seen = std::collections::HashSet::new();
    for var in &meta.variables {
        if !seen.insert(var.name.as_str()) {
            return Err(MetadataError::DuplicateName(var.name.clone()));
        }
        if !(var.lower_bound < var.upper_bound) {
            return Err(MetadataError::InvertedBounds {
                name: var.name.clone(),
                lower: var.lower_bound,
                upper: var.upper_bound,
            });
        }
        if var.causality == Causality::Input && !var.granularity.is_some_and(|g| g > 0.0) {
            return Err(MetadataError::BadGranularity(var.name.clone()));
        }
    }
    if let Some((n_in, n_out)) = expected_io(&meta.unit_type) {
        let (inputs, outputs) = (meta.input_count(), meta.output_count());
        if inputs != n_in || outputs != n_out {
            return Err(MetadataError::WrongCardinality {
                unit_type: meta.unit_type.clone(),
                expected_inputs: n_in,
                expected_outputs: n_out,
                inputs,
                outputs,
            });
        }
    }
    Ok(())
}

/// Ambient observations every reference unit reports first, in this order.
/// All units in a cluster are exposed to the same sky, so these outputs are
/// duplicates across units and observation assembly keeps only one copy.
pub const AMBIENT_OUTPUT_NAMES: [&str; 4] = [
    "Outdoor Air Drybulb Temperature",
    "Outdoor Air Relative Humidity",
    "Outdoor Wind Speed",
    "Direct Solar Irradiance",
];

/// Strips a trailing ` <digits>` instance suffix: `"Zone Air Temperature 3"`
/// → `"Zone Air Temperature"`. Names without the suffix pass through.
pub fn base_name(name: &str) -> &str {
    match name.rsplit_once(' ') {
        Some((base, suffix))
            if !suffix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit()) =>
        {
            base
        }
        _ => name,
    }
}

/// Finds a variable by name.
///
/// Exact names win. When a unit declares several indexed instances of the same
/// physical variable (`AHU Supply Air Temperature 1` … `3`), the bare base
/// name resolves to the first instance so callers can query a group without
/// knowing how many members it has.
pub fn lookup_variable<'a>(
    meta: &'a UnitMetadata,
    name: &str,
) -> Result<&'a VariableSpec, MetadataError> {
    if let Some(var) = meta.variables.iter().find(|v| v.name == name) {
        return Ok(var);
    }
    meta.variables
        .iter()
        .find(|v| {
            v.name
                .strip_prefix(name)
                .is_some_and(|rest| rest.starts_with(' ') && rest[1..].chars().all(|c| c.is_ascii_digit()))
        })
        .ok_or_else(|| MetadataError::UnknownVariable(name.to_string()))
}

#[derive(Debug, Error)]
pub enum UnitError {
    #[error("expected {expected} input values, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("unit stepped with non-positive dt {0}")]
    BadStep(f64),
}

/// Behavioral contract of a co-simulation unit.
///
/// Units encapsulate their own solver and state. `set_inputs` stages setpoints
/// that take effect at the next `do_step`; `get_outputs` is valid any time
/// after `initialize`. Units must be transferable between threads, but a
/// single unit is only ever driven by one thread at a time.
pub trait CoSimUnit: Send {
    fn metadata(&self) -> &UnitMetadata;

    /// Resets internal state and places the unit's clock at `t0` seconds.
    fn initialize(&mut self, t0: f64);

    /// Stages input values (declared input order) for the next step.
    /// Values are clamped to the declared physical bounds.
    fn set_inputs(&mut self, values: &[f64]) -> Result<(), UnitError>;

    /// Advances the unit by exactly `dt` seconds.
    fn do_step(&mut self, dt: f64) -> Result<(), UnitError>;

    /// Current output values in declared output order.
    fn get_outputs(&self) -> Vec<f64>;

    /// Position of the unit's clock in seconds.
    fn current_time(&self) -> f64;
}
