use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use varlp::certify::StepRecord;
use varlp::odenorm::StepFn;
use varlp::seqspace::Nesting;

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// Reads a JSON document and checks its optional `schema` field.
pub fn read<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: T = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    match value.schema() {
        None | Some(SCHEMA) => Ok(value),
        Some(other) => Err(CliError::Invalid(format!(
            "{}: field `schema` is {other}, only {SCHEMA} is supported",
            path.display()
        ))),
    }
}

pub trait Versioned {
    fn schema(&self) -> Option<u32>;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema(&self) -> Option<u32> {
                self.schema
            }
        })*
    };
}

/// A step function on `[0, 1]`; without breakpoints the cells are uniform.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepInput {
    pub schema: Option<u32>,
    pub breakpoints: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

impl StepInput {
    pub fn to_step(&self, path: &Path) -> Result<StepFn, CliError> {
        let built = match &self.breakpoints {
            Some(b) => StepFn::new(b.clone(), self.values.clone()),
            None => StepFn::uniform(self.values.clone()),
        };
        built.map_err(|e| CliError::Invalid(format!("{}: field `values`/`breakpoints`: {e}", path.display())))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqInput {
    pub schema: Option<u32>,
    pub x: Vec<f64>,
    pub connectors: Vec<f64>,
    #[serde(default)]
    pub nesting: NestingInput,
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "lowercase")]
pub enum NestingInput {
    #[default]
    Left,
    Right,
}

impl From<NestingInput> for Nesting {
    fn from(n: NestingInput) -> Self {
        match n {
            NestingInput::Left => Nesting::Left,
            NestingInput::Right => Nesting::Right,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInput {
    pub schema: Option<u32>,
    pub rows: Vec<Vec<f64>>,
    pub outer: Vec<f64>,
    pub inner: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisInput {
    pub schema: Option<u32>,
    pub basis: Vec<StepRecord>,
}

versioned!(StepInput, SeqInput, MatrixInput, BasisInput);

impl Versioned for varlp::certify::Certificate {
    fn schema(&self) -> Option<u32> {
        Some(self.schema)
    }
}

pub fn read_step(path: &Path) -> Result<StepFn, CliError> {
    read::<StepInput>(path)?.to_step(path)
}
