//! `psi = P + Q phi_x / phi` applied to sampled linear fields.

use crate::burgers::TransformPair;
use crate::expr::ParamEnv;
use crate::grid::Grid1D;
use crate::linsolve::LinearField;
use crate::{Error, Result};

pub const DEFAULT_POLE_EPS: f64 = 1e-8;

/// Transformed samples. Masked points (where `|phi|` is below
/// `pole_eps * max|phi|` of their time level) hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedField {
    pub grid: Grid1D,
    pub times: Option<Vec<f64>>,
    pub psi: Vec<f64>,
    pub mask: Vec<bool>,
    pub pole_eps: f64,
}

impl TransformedField {
    /// An unmasked field from explicit samples, e.g. a candidate solution
    /// that did not come from a linear solve.
    pub fn from_samples(grid: Grid1D, times: Option<Vec<f64>>, psi: Vec<f64>) -> Result<Self> {
        let levels = times.as_ref().map_or(1, Vec::len);
        if psi.len() != levels * grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                levels * grid.len(),
                psi.len()
            )));
        }
        let mask = psi.iter().map(|v| !v.is_finite()).collect();
        Ok(Self {
            grid,
            times,
            psi,
            mask,
            pole_eps: 0.0,
        })
    }

    pub fn levels(&self) -> usize {
        self.times.as_ref().map_or(1, Vec::len)
    }

    pub fn masked_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    /// Every point masked.
    pub fn is_degenerate(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }
}

/// Applies the transform pointwise. Poles are masked, never fatal; only a
/// failure to evaluate `P` or `Q` on the grid is an error.
pub fn apply_transform(
    pair: &TransformPair,
    field: &LinearField,
    env: &ParamEnv,
    pole_eps: f64,
) -> Result<TransformedField> {
    let xs = field.grid.points();
    let p = pair.p.eval_many(&xs, env)?;
    let q = pair.q.eval_many(&xs, env)?;
    let n = xs.len();
    let mut psi = Vec::with_capacity(field.phi.len());
    let mut mask = Vec::with_capacity(field.phi.len());
    for k in 0..field.levels() {
        let phi = field.phi_level(k);
        let dphi = field.dphi_level(k);
        let peak = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let threshold = pole_eps * peak;
        for i in 0..n {
            let small = peak == 0.0 || phi[i].abs() < threshold;
            let value = p[i] + q[i] * dphi[i] / phi[i];
            if small || !value.is_finite() {
                psi.push(f64::NAN);
                mask.push(true);
            } else {
                psi.push(value);
                mask.push(false);
            }
        }
    }
    Ok(TransformedField {
        grid: field.grid,
        times: field.times.clone(),
        psi,
        mask,
        pole_eps,
    })
}
