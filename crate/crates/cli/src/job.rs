use std::fmt;
use std::path::PathBuf;

use borel_core::{DeformError, GermError, PathError, SetError};

/// Failure of a job, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable input, malformed JSON or invalid configuration.
    Parse(String),
    /// Inputs violate a precondition of the requested operation.
    Precondition(String),
    /// The flow denominator vanished.
    Guard(String),
    /// A numerical result missed its tolerance.
    Tolerance(String),
}

impl Failure {
    pub const PARSE: u8 = 2;
    pub const PRECONDITION: u8 = 3;
    pub const GUARD: u8 = 4;
    pub const TOLERANCE: u8 = 5;

    pub fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => Self::PARSE,
            Failure::Precondition(_) => Self::PRECONDITION,
            Failure::Guard(_) => Self::GUARD,
            Failure::Tolerance(_) => Self::TOLERANCE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) | Failure::Precondition(m) | Failure::Guard(m) | Failure::Tolerance(m) => f.write_str(m),
        }
    }
}

impl From<SetError> for Failure {
    fn from(e: SetError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<DeformError> for Failure {
    fn from(e: DeformError) -> Self {
        match e {
            DeformError::Guard { .. } => Failure::Guard(e.to_string()),
            DeformError::LengthIdentity { .. } => Failure::Tolerance(e.to_string()),
            DeformError::Precondition(_) | DeformError::Set(_) | DeformError::Path(_) => {
                Failure::Precondition(e.to_string())
            }
        }
    }
}

impl From<GermError> for Failure {
    fn from(e: GermError) -> Self {
        match e {
            GermError::Deform(d) => d.into(),
            GermError::Tail { .. } | GermError::StepUnderflow { .. } | GermError::NonFiniteQuadrature(_) => {
                Failure::Tolerance(e.to_string())
            }
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

/// Validated numeric parameters and file locations of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub command: &'static str,
    pub inputs: Vec<PathBuf>,
    pub level: Option<f64>,
    pub n_s: usize,
    pub n_t: usize,
    pub n_q: usize,
    pub n_ser: usize,
    pub tolerances: Vec<(&'static str, f64)>,
    pub out_dir: PathBuf,
}

pub const MIN_GRID: usize = 8;

impl JobConfig {
    pub fn new(command: &'static str, inputs: Vec<PathBuf>, out_dir: PathBuf) -> Self {
        Self { command, inputs, level: None, n_s: MIN_GRID, n_t: MIN_GRID, n_q: 1, n_ser: 1, tolerances: Vec::new(), out_dir }
    }

    /// Grid sizes at least [`MIN_GRID`], every tolerance positive and
    /// finite, a positive finite level if given.
    pub fn validate(self) -> Result<Self, Failure> {
        let bad = |m: String| Err(Failure::Parse(format!("{}: {m}", self.command)));
        for (name, n) in [("n-s", self.n_s), ("n-t", self.n_t)] {
            if n < MIN_GRID {
                return bad(format!("--{name} must be at least {MIN_GRID}, got {n}"));
            }
        }
        if self.n_q == 0 || self.n_ser == 0 {
            return bad("--n-q and --n-ser must be positive".into());
        }
        for &(name, tol) in &self.tolerances {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("--{name} must be positive, got {tol}"));
            }
        }
        if let Some(l) = self.level {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("--level must be positive, got {l}"));
            }
        }
        Ok(self)
    }
}
