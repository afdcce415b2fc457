//! Dormand-Prince 5(4) embedded Runge-Kutta pair with proportional step control.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances and limits for [`rk45_integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step size; non-positive selects one automatically.
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 100_000,
            initial_step: 0.0,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_steps > 0) {
            return Err(Error::InvalidArgument(format!(
                "integrator needs rtol > 0, atol > 0, max_steps > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Result of one attempted step: the fifth-order solution, its derivative
/// (first stage of the next step) and the scaled error norm.
pub struct Step<const D: usize> {
    pub y: [f64; D],
    pub f: [f64; D],
    pub err: f64,
}

/// One Dormand-Prince step of size `h` from `(t, y)` given `f0 = field(t, y)`.
pub fn rk45_step<F, const D: usize>(
    field: &F,
    t: f64,
    y: &[f64; D],
    f0: &[f64; D],
    h: f64,
    cfg: &IntegratorConfig,
) -> Step<D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut k = [[0.0; D]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..D {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = field(t + C[s] * h, &ys);
    }
    // Stage 7 is evaluated at the fifth-order solution (FSAL).
    let mut y_new = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        for i in 0..D {
            y_new[i] += h * A[6][j] * kj[i];
        }
    }
    let mut err = 0.0f64;
    for i in 0..D {
        let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
        let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
        err = err.max(e.abs() / sc);
    }
    Step {
        y: y_new,
        f: k[6],
        err,
    }
}

fn initial_step<F, const D: usize>(
    field: &F,
    t0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    span: f64,
    cfg: &IntegratorConfig,
) -> f64
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    if cfg.initial_step > 0.0 {
        return cfg.initial_step.min(span);
    }
    let scale = |i: usize| cfg.atol + cfg.rtol * y0[i].abs();
    let rms =
        |v: &[f64; D]| ((0..D).map(|i| (v[i] / scale(i)).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let mut y1 = *y0;
    for i in 0..D {
        y1[i] += h0 * f0[i];
    }
    let f1 = field(t0 + h0, &y1);
    let mut df = [0.0; D];
    for i in 0..D {
        df[i] = f1[i] - f0[i];
    }
    let d2 = rms(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrate `dy/dt = field(t, y)` from `t0` to `t1` (requires `t1 >= t0`).
pub fn rk45_integrate<F, const D: usize>(
    field: F,
    y0: [f64; D],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<[f64; D]>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    cfg.validate()?;
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!(
            "integration interval must satisfy t1 >= t0 (got [{t0}, {t1}])"
        )));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut f = field(t, &y);
    let mut h = initial_step(&field, t0, &y0, &f, span, cfg);
    let mut attempts = 0;
    while t < t1 {
        if attempts >= cfg.max_steps {
            return Err(Error::IntegrationFailed {
                max_steps: cfg.max_steps,
                t,
            });
        }
        attempts += 1;
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        let step = rk45_step(&field, t, &y, &f, h_try, cfg);
        if !step.err.is_finite() {
            h = h_try * MIN_FACTOR;
            continue;
        }
        let factor = if step.err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * step.err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if step.err <= 1.0 {
            t = if last { t1 } else { t + h_try };
            y = step.y;
            f = step.f;
            h = h_try * factor;
        } else {
            h = h_try * factor.min(1.0);
        }
    }
    Ok(y)
}
