use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, ParseError};

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Derive,
    Constraint,
    Reduce,
    Potential,
    LinearSolve,
    Transform,
    Residual,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Derive => "derive",
            Stage::Constraint => "constraint",
            Stage::Reduce => "reduce",
            Stage::Potential => "potential",
            Stage::LinearSolve => "linear-solve",
            Stage::Transform => "transform",
            Stage::Residual => "residual",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("degenerate {what}: vanishes at x = {x}")]
    Degenerate { what: &'static str, x: f64 },
    #[error("non-positive diffusivity {value} at x = {x}")]
    NonPositiveDiffusivity { x: f64, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_parse(&self) -> bool {
        matches!(self.root(), Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
