//! Dormand-Prince 5(4) with the 5th-order-consistent continuous extension,
//! sampled at caller-supplied output points.

use thiserror::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Shorten steps so that every output point is a step endpoint instead
    /// of an interpolated value. Second differences of the output are then
    /// free of the interpolant's error, whose shape changes from step to step.
    pub land_on_outputs: bool,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_min: 1e-14,
            h_max: None,
            max_steps: 1_000_000,
            land_on_outputs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError<E> {
    #[error("right-hand side failed: {0}")]
    Rhs(E),
    #[error("step size underflow (h = {h:e}) at x = {x}")]
    StepUnderflow { x: f64, h: f64 },
    #[error("exceeded {steps} steps at x = {x}")]
    TooManySteps { x: f64, steps: usize },
    #[error("non-finite state at x = {x}")]
    NonFinite { x: f64 },
    #[error("output points must be finite and sorted")]
    BadOutputs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const N: usize> {
    pub x: Vec<f64>,
    pub y: Vec<[f64; N]>,
    /// Right-hand side evaluated at each output point.
    pub dy: Vec<[f64; N]>,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

struct Stepper<'a, const N: usize, F> {
    rhs: &'a mut F,
    dir: f64,
}

impl<const N: usize, F, E> Stepper<'_, N, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    // Integration runs in s = dir * x so the core loop always marches forward.
    fn f(&mut self, s: f64, y: &[f64; N]) -> Result<[f64; N], OdeError<E>> {
        let mut v = (self.rhs)(self.dir * s, y).map_err(OdeError::Rhs)?;
        for vi in v.iter_mut() {
            *vi *= self.dir;
        }
        Ok(v)
    }
}

fn err_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &Dopri5Options) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        sum += (err[i] / sk).powi(2);
    }
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F, E>(
    st: &mut Stepper<'_, N, F>,
    s0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    opts: &Dopri5Options,
) -> Result<f64, OdeError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let scaled = |v: &[f64; N]| {
        let mut s = 0.0;
        for i in 0..N {
            let sk = opts.atol + opts.rtol * y0[i].abs();
            s += (v[i] / sk).powi(2);
        }
        (s / N as f64).sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = st.f(s0 + h0, &y1)?;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrates `y' = rhs(x, y)` from `(x0, y0)` and samples the continuous
/// extension at every point of `outputs`. Outputs on either side of `x0` are
/// allowed; each side must be sorted ascending.
pub fn integrate_dense<const N: usize, F, E>(
    mut rhs: F,
    x0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &Dopri5Options,
) -> Result<DenseSolution<N>, OdeError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    if outputs.iter().any(|x| !x.is_finite()) || outputs.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::BadOutputs);
    }
    let split = outputs.partition_point(|&x| x < x0);
    let (below, above) = outputs.split_at(split);

    let mut backward_pts: Vec<f64> = below.iter().rev().map(|&x| -x).collect();
    backward_pts.dedup();
    let back = march(&mut rhs, -1.0, -x0, y0, &backward_pts, opts)?;
    let fwd = march(&mut rhs, 1.0, x0, y0, above, opts)?;

    let mut sol = DenseSolution {
        x: Vec::with_capacity(outputs.len()),
        y: Vec::with_capacity(outputs.len()),
        dy: Vec::with_capacity(outputs.len()),
        accepted: back.accepted + fwd.accepted,
        rejected: back.rejected + fwd.rejected,
    };
    for i in (0..back.x.len()).rev() {
        sol.x.push(back.x[i]);
        sol.y.push(back.y[i]);
        sol.dy.push(back.dy[i]);
    }
    sol.x.extend_from_slice(&fwd.x);
    sol.y.extend_from_slice(&fwd.y);
    sol.dy.extend_from_slice(&fwd.dy);
    Ok(sol)
}

fn march<const N: usize, F, E>(
    rhs: &mut F,
    dir: f64,
    s0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &Dopri5Options,
) -> Result<DenseSolution<N>, OdeError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let mut sol = DenseSolution {
        x: Vec::with_capacity(outputs.len()),
        y: Vec::with_capacity(outputs.len()),
        dy: Vec::with_capacity(outputs.len()),
        accepted: 0,
        rejected: 0,
    };
    if outputs.is_empty() {
        return Ok(sol);
    }
    let mut st = Stepper { rhs, dir };
    let s_end = *outputs.last().unwrap();
    let mut s = s0;
    let mut y = y0;
    let mut k1 = st.f(s, &y)?;
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= s {
        sol.x.push(outputs[next_out]);
        sol.y.push(y);
        sol.dy.push(k1);
        next_out += 1;
    }
    if next_out == outputs.len() {
        return Ok(sol);
    }
    let span = s_end - s0;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&mut st, s, &y, &k1, opts)?,
    }
    .min(h_max);
    let mut steps = 0;
    let mut last_rejected = false;

    while next_out < outputs.len() {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps { x: dir * s, steps });
        }
        if h < opts.h_min * s.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { x: dir * s, h });
        }
        let target = if opts.land_on_outputs { outputs[next_out] } else { s_end };
        let last = s + h >= target;
        if last {
            h = target - s;
        }
        steps += 1;

        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = st.f(s + C2 * h, &y2)?;
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = st.f(s + C3 * h, &y3)?;
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = st.f(s + C4 * h, &y4)?;
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = st.f(s + C5 * h, &y5)?;
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = st.f(s + h, &y6)?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite { x: dir * (s + h) });
        }
        let k7 = st.f(s + h, &y_new)?;

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = err_norm(&err, &y, &y_new, opts);
        let fac = (en.powf(0.2) / 0.9).clamp(0.2, 10.0);

        if en <= 1.0 {
            sol.accepted += 1;
            let s_new = if last { target } else { s + h };
            // continuous extension coefficients
            let mut r2 = [0.0; N];
            let mut r3 = [0.0; N];
            let mut r4 = [0.0; N];
            let mut r5 = [0.0; N];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r2[i] = ydiff;
                r3[i] = bspl;
                r4[i] = ydiff - h * k7[i] - bspl;
                r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_out < outputs.len() && outputs[next_out] <= s_new {
                let so = outputs[next_out];
                let (yo, fo) = if so == s_new {
                    (y_new, k7)
                } else {
                    let th = (so - s) / h;
                    let th1 = 1.0 - th;
                    let mut yo = [0.0; N];
                    for i in 0..N {
                        yo[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                    }
                    let fo = st.f(so, &yo)?;
                    (yo, fo)
                };
                sol.x.push(so);
                sol.y.push(yo);
                sol.dy.push(fo);
                next_out += 1;
            }
            s = s_new;
            y = y_new;
            k1 = k7;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(h_max);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            h /= (en.powf(0.2) / 0.9).min(10.0);
            last_rejected = true;
        }
    }
    for x in sol.x.iter_mut() {
        *x *= dir;
    }
    for d in sol.dy.iter_mut() {
        for v in d.iter_mut() {
            *v *= dir;
        }
    }
    Ok(sol)
}
