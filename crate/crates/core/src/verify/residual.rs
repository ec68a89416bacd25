use crate::burgers::{BurgersProblem, IdentityCheck};
use crate::hopf::TransformedField;
use crate::ode::OdeProblem;
use crate::{Error, Result};

use super::report::{Equation, GridMeta, ResidualReport, ResidualSamples};

/// Spatial points dropped at each end of the grid.
pub const SPATIAL_TRIM: usize = 2;
/// Points excluded on each side of a masked pole.
pub const POLE_DILATION: usize = 3;

/// `mask` dilated by `POLE_DILATION` points along each row (and by one row in
/// time when `rows > 1`).
fn dilate(mask: &[bool], rows: usize, n: usize, time_reach: usize) -> Vec<bool> {
    let mut along = vec![false; mask.len()];
    for k in 0..rows {
        let row = &mask[k * n..(k + 1) * n];
        for (i, _) in row.iter().enumerate().filter(|(_, &m)| m) {
            let lo = i.saturating_sub(POLE_DILATION);
            let hi = (i + POLE_DILATION).min(n - 1);
            along[k * n + lo..=k * n + hi].iter_mut().for_each(|v| *v = true);
        }
    }
    if time_reach == 0 {
        return along;
    }
    let mut out = along.clone();
    for k in 0..rows {
        let lo = k.saturating_sub(time_reach);
        let hi = (k + time_reach).min(rows - 1);
        for i in 0..n {
            if (lo..=hi).any(|j| along[j * n + i]) {
                out[k * n + i] = true;
            }
        }
    }
    out
}

/// Substitutes `psi` into
///
/// ```text
/// r = psi_t - M psi_xx - H psi psi_x - V psi - W psi^2
/// ```
///
/// using centered differences on the stored levels. Two points at each
/// spatial end, the first and last level, and points within reach of a pole
/// are excluded.
pub fn pde_residual(problem: &BurgersProblem, psi: &TransformedField, tolerance: f64) -> Result<ResidualReport> {
    let times = psi
        .times
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("PDE residual needs time levels".into()))?;
    let n = psi.grid.len();
    let levels = times.len();
    if levels < 3 || n < 5 {
        return Err(Error::InvalidInput(format!(
            "PDE residual needs >= 3 levels and >= 5 points, got {levels} and {n}"
        )));
    }
    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let dt = steps[0];
    if steps.iter().any(|s| (s - dt).abs() > 1e-9 * dt.abs()) || dt <= 0.0 {
        return Err(Error::InvalidInput("PDE residual needs uniformly spaced levels".into()));
    }

    let xs = psi.grid.points();
    let env = &problem.env;
    let m = problem.m.eval_many(&xs, env)?;
    let h_c = problem.h.eval_many(&xs, env)?;
    let v_c = problem.v.eval_many(&xs, env)?;
    let w_c = problem.w.eval_many(&xs, env)?;
    let dx = psi.grid.dx();
    let excluded = dilate(&psi.mask, levels, n, 1);
    let f = &psi.psi;

    let mut samples = ResidualSamples {
        t: Some(Vec::new()),
        ..Default::default()
    };
    for k in 1..levels - 1 {
        for i in SPATIAL_TRIM..n - SPATIAL_TRIM {
            if excluded[k * n + i] {
                continue;
            }
            let at = |kk: usize, ii: usize| f[kk * n + ii];
            let c = at(k, i);
            let psi_t = (at(k + 1, i) - at(k - 1, i)) / (times[k + 1] - times[k - 1]);
            let psi_xx = (at(k, i + 1) - 2.0 * c + at(k, i - 1)) / (dx * dx);
            let psi_x = (at(k, i + 1) - at(k, i - 1)) / (2.0 * dx);
            let r = psi_t - m[i] * psi_xx - h_c[i] * c * psi_x - v_c[i] * c - w_c[i] * c * c;
            samples.x.push(xs[i]);
            samples.t.as_mut().unwrap().push(times[k]);
            samples.r.push(r);
        }
    }
    Ok(ResidualReport::from_samples(
        Equation::Burgers,
        GridMeta::new(&psi.grid, Some(times)),
        samples,
        psi.masked_fraction(),
        tolerance,
    ))
}

/// Substitutes `psi` into
///
/// ```text
/// r = psi'' - S - (V + F psi') psi - V1 psi' - W psi^2
/// ```
///
/// with centered differences, excluding two points at each end and points
/// within reach of a pole.
pub fn ode_residual(problem: &OdeProblem, psi: &TransformedField, tolerance: f64) -> Result<ResidualReport> {
    let n = psi.grid.len();
    if psi.times.is_some() {
        return Err(Error::InvalidInput("ODE residual expects a single level".into()));
    }
    if n < 5 {
        return Err(Error::InvalidInput(format!("ODE residual needs >= 5 points, got {n}")));
    }
    let xs = psi.grid.points();
    let env = &problem.env;
    let s_c = problem.s.eval_many(&xs, env)?;
    let v_c = problem.v.eval_many(&xs, env)?;
    let f_c = problem.f.eval_many(&xs, env)?;
    let w_c = problem.w.eval_many(&xs, env)?;
    let v1_c = match &problem.v1 {
        Some(v1) => v1.eval_many(&xs, env)?,
        None => vec![0.0; n],
    };
    let dx = psi.grid.dx();
    let excluded = dilate(&psi.mask, 1, n, 0);
    let f = &psi.psi;
    let mut samples = ResidualSamples::default();
    for i in SPATIAL_TRIM..n - SPATIAL_TRIM {
        if excluded[i] {
            continue;
        }
        let c = f[i];
        let d1 = (f[i + 1] - f[i - 1]) / (2.0 * dx);
        let d2 = (f[i + 1] - 2.0 * c + f[i - 1]) / (dx * dx);
        let r = d2 - s_c[i] - (v_c[i] + f_c[i] * d1) * c - v1_c[i] * d1 - w_c[i] * c * c;
        samples.x.push(xs[i]);
        samples.r.push(r);
    }
    Ok(ResidualReport::from_samples(
        Equation::Ode,
        GridMeta::new(&psi.grid, None),
        samples,
        psi.masked_fraction(),
        tolerance,
    ))
}

/// Report form of a sampled identity. The relative tolerance is converted to
/// an absolute one using the largest expanded term.
pub fn identity_report(equation: Equation, check: &IdentityCheck) -> ResidualReport {
    let samples = ResidualSamples {
        x: check.x.clone(),
        t: None,
        r: check.residual.clone(),
    };
    let absolute = check.tolerance * check.scale;
    let mut report = ResidualReport::from_samples(equation, GridMeta::points(&check.x), samples, 0.0, absolute);
    // from_samples compares against the absolute bound; keep the check's own
    // verdict so that a zero scale cannot flip it
    report.verdict = super::Verdict::from_bool(check.holds);
    report.notes.push(format!(
        "relative residual {:e} against largest term {:e} (relative tolerance {:e})",
        check.relative, check.scale, check.tolerance
    ));
    report
}
