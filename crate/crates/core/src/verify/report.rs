use std::fmt;

use serde::Serialize;

use crate::grid::Grid1D;
use crate::Stage;

/// Which equation or identity a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Burgers,
    Ode,
    BurgersConstraint,
    OdeConstraint,
    HOde,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Burgers => "burgers",
            Equation::Ode => "ode",
            Equation::BurgersConstraint => "burgers-constraint",
            Equation::OdeConstraint => "ode-constraint",
            Equation::HOde => "h-ode",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMeta {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
    pub dx: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl GridMeta {
    pub fn new(grid: &Grid1D, times: Option<&[f64]>) -> Self {
        GridMeta {
            x0: grid.x0(),
            x1: grid.x1(),
            n: grid.len(),
            dx: grid.dx(),
            levels: times.map(<[f64]>::len),
            t_end: times.and_then(|t| t.last().copied()),
        }
    }

    pub fn points(samples: &[f64]) -> Self {
        let (x0, x1) = (
            samples.first().copied().unwrap_or(f64::NAN),
            samples.last().copied().unwrap_or(f64::NAN),
        );
        GridMeta {
            x0,
            x1,
            n: samples.len(),
            dx: if samples.len() > 1 {
                (x1 - x0) / (samples.len() - 1) as f64
            } else {
                0.0
            },
            levels: None,
            t_end: None,
        }
    }
}

/// Residual values at the points that entered the norms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualSamples {
    pub x: Vec<f64>,
    pub t: Option<Vec<f64>>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: Equation,
    pub grid: GridMeta,
    /// Norms over the points that were evaluated; absent when none were.
    pub linf: Option<f64>,
    /// Root mean square.
    pub l2: Option<f64>,
    pub evaluated_points: usize,
    pub masked_fraction: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<Stage>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub samples: ResidualSamples,
}

impl ResidualReport {
    pub(crate) fn from_samples(
        equation: Equation,
        grid: GridMeta,
        samples: ResidualSamples,
        masked_fraction: f64,
        tolerance: f64,
    ) -> Self {
        let count = samples.r.len();
        let (linf, l2) = if count == 0 {
            (None, None)
        } else {
            let linf = samples.r.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            let l2 = (samples.r.iter().map(|r| r * r).sum::<f64>() / count as f64).sqrt();
            (Some(linf), Some(l2))
        };
        let pass = linf.is_some_and(|v| v <= tolerance);
        ResidualReport {
            equation,
            grid,
            linf,
            l2,
            evaluated_points: count,
            masked_fraction,
            tolerance,
            verdict: Verdict::from_bool(pass),
            degenerate: count == 0,
            failed_stage: None,
            notes: Vec::new(),
            samples,
        }
    }

    /// Report for a pipeline stopped at `stage` before any residual existed.
    pub(crate) fn stopped(equation: Equation, grid: GridMeta, tolerance: f64, stage: Stage, note: String) -> Self {
        ResidualReport {
            equation,
            grid,
            linf: None,
            l2: None,
            evaluated_points: 0,
            masked_fraction: 0.0,
            tolerance,
            verdict: Verdict::Fail,
            degenerate: false,
            failed_stage: Some(stage),
            notes: vec![note],
            samples: ResidualSamples::default(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
