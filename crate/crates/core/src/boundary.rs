//! Boundary value and weight functions.

use serde::{Deserialize, Serialize};

use crate::geometry::{in_region, Region, State};
use crate::{Error, Result};

fn default_ha() -> f64 {
    -1.0
}
fn default_hb() -> f64 {
    1.0
}

/// Prescribed boundary values `h_bd` and enforcement weights `w_bd >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// Sharp strips `y < a + beta` (value `ha`) and `y > b - beta` (value `hb`).
    Indicator {
        a: f64,
        b: f64,
        beta: f64,
        #[serde(default = "default_ha")]
        ha: f64,
        #[serde(default = "default_hb")]
        hb: f64,
    },
    /// Sigmoid-smoothed strips of width `alpha`.
    Smoothed {
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        #[serde(default = "default_ha")]
        ha: f64,
        #[serde(default = "default_hb")]
        hb: f64,
    },
    /// Zero value on `region`, unit weight there and nowhere else.
    ZeroRegion { region: Region },
}

impl BoundarySpec {
    pub fn indicator_strips(a: f64, b: f64, beta: f64) -> Self {
        BoundarySpec::Indicator {
            a,
            b,
            beta,
            ha: default_ha(),
            hb: default_hb(),
        }
    }

    pub fn smoothed_strips(a: f64, b: f64, alpha: f64, beta: f64) -> Self {
        BoundarySpec::Smoothed {
            a,
            b,
            alpha,
            beta,
            ha: default_ha(),
            hb: default_hb(),
        }
    }

    pub fn zero_region(region: Region) -> Self {
        BoundarySpec::ZeroRegion { region }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundarySpec::Smoothed { alpha, .. } if !(*alpha > 0.0) => Err(Error::InvalidArgument(
                format!("smoothing width alpha must be positive, got {alpha}"),
            )),
            BoundarySpec::Indicator { beta, .. } | BoundarySpec::Smoothed { beta, .. }
                if !(*beta >= 0.0) =>
            {
                Err(Error::InvalidArgument(format!(
                    "buffer beta must be >= 0, got {beta}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// `(h_bd(p), w_bd(p))`.
    pub fn eval(&self, p: State) -> (f64, f64) {
        eval_boundary(self, p)
    }

    /// Boundary values and weights at each point.
    pub fn sample(&self, points: &[State]) -> (Vec<f64>, Vec<f64>) {
        points.iter().map(|&p| self.eval(p)).unzip()
    }

    /// Weights only.
    pub fn weights(&self, points: &[State]) -> Vec<f64> {
        points.iter().map(|&p| self.eval(p).1).collect()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn eval_boundary(spec: &BoundarySpec, p: State) -> (f64, f64) {
    let y = p.y;
    match *spec {
        BoundarySpec::Indicator { a, b, beta, ha, hb } => {
            let lower = f64::from(u8::from(y < a + beta));
            let upper = f64::from(u8::from(y > b - beta));
            (ha * lower + hb * upper, lower + upper)
        }
        BoundarySpec::Smoothed {
            a,
            b,
            alpha,
            beta,
            ha,
            hb,
        } => {
            let h = 0.5 * (ha + hb) + 0.5 * (hb - ha) * ((2.0 * y - a - b) / (2.0 * alpha)).tanh();
            let w = sigmoid((y - b + beta) / alpha) + sigmoid(-(y - a - beta) / alpha);
            (h, w)
        }
        BoundarySpec::ZeroRegion { ref region } => (0.0, f64::from(u8::from(in_region(p, region)))),
    }
}

/// `E_bd = sum_n w[n] (h[n] - h_bd[n])^2`.
pub fn boundary_energy(h: &[f64], h_bd: &[f64], w_bd: &[f64]) -> Result<f64> {
    for other in [h_bd.len(), w_bd.len()] {
        if other != h.len() {
            return Err(Error::LengthMismatch {
                expected: h.len(),
                actual: other,
            });
        }
    }
    Ok(h.iter()
        .zip(h_bd)
        .zip(w_bd)
        .map(|((h, g), w)| w * (h - g).powi(2))
        .sum())
}
