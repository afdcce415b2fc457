//! Symplectic map oracles and trajectory utilities.

mod rk45;

pub use rk45::{rk45_integrate, rk45_step, IntegratorConfig, Step};

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{State, Topology};
use crate::{Error, Result};

/// A (numerically) symplectic map of the plane or cylinder.
///
/// On the cylinder the returned state is wrapped so `x` lies in `[0, 1)`.
pub trait SymplecticMap: Send + Sync {
    fn apply(&self, s: State) -> Result<State>;
    fn topology(&self) -> Topology;
}

impl<M: SymplecticMap + ?Sized> SymplecticMap for &M {
    fn apply(&self, s: State) -> Result<State> {
        (**self).apply(s)
    }
    fn topology(&self) -> Topology {
        (**self).topology()
    }
}

/// Adapts an infallible closure into a [`SymplecticMap`].
pub struct FnMap<F> {
    f: F,
    topology: Topology,
}

impl<F: Fn(State) -> State + Send + Sync> FnMap<F> {
    pub fn new(topology: Topology, f: F) -> Self {
        Self { f, topology }
    }
}

impl<F: Fn(State) -> State + Send + Sync> SymplecticMap for FnMap<F> {
    fn apply(&self, s: State) -> Result<State> {
        Ok((self.f)(s).wrap(self.topology))
    }
    fn topology(&self) -> Topology {
        self.topology
    }
}

/// A time-dependent planar vector field `(t, [x, y]) -> [dx/dt, dy/dt]`.
pub type VectorField = Arc<dyn Fn(f64, &[f64; 2]) -> [f64; 2] + Send + Sync>;

/// Return map of a user supplied vector field over `[t0, t1]`.
#[derive(Clone)]
pub struct OdeFieldMap {
    pub field: VectorField,
    pub t_span: [f64; 2],
    pub topology: Topology,
    pub integrator: IntegratorConfig,
}

impl fmt::Debug for OdeFieldMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeFieldMap")
            .field("t_span", &self.t_span)
            .field("topology", &self.topology)
            .field("integrator", &self.integrator)
            .finish_non_exhaustive()
    }
}

/// The built-in maps plus a generic ODE-field return map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    /// The Chirikov standard map on the cylinder.
    Standard { k: f64 },
    /// Pendulum `x' = y, y' = -sin(2 pi x)` flowed for time `sqrt(2)`, on the cylinder.
    Pendulum {
        #[serde(default)]
        integrator: IntegratorConfig,
    },
    /// Periodically forced pendulum flowed over one forcing period `2 pi`, on the plane.
    PerturbedPendulum {
        #[serde(default)]
        integrator: IntegratorConfig,
    },
    #[serde(skip)]
    OdeField(OdeFieldMap),
}

impl MapSpec {
    pub fn standard(k: f64) -> Self {
        MapSpec::Standard { k }
    }

    pub fn pendulum() -> Self {
        MapSpec::Pendulum {
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn perturbed_pendulum() -> Self {
        MapSpec::PerturbedPendulum {
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::Standard { k } if !k.is_finite() => Err(Error::InvalidArgument(format!(
                "standard map k must be finite, got {k}"
            ))),
            MapSpec::Standard { .. } => Ok(()),
            MapSpec::Pendulum { integrator } | MapSpec::PerturbedPendulum { integrator } => {
                integrator.validate()
            }
            MapSpec::OdeField(m) => {
                if !(m.t_span[1] >= m.t_span[0]) {
                    return Err(Error::InvalidArgument(format!(
                        "ODE time span must satisfy t1 >= t0, got {:?}",
                        m.t_span
                    )));
                }
                m.integrator.validate()
            }
        }
    }
}

impl SymplecticMap for MapSpec {
    fn apply(&self, s: State) -> Result<State> {
        match self {
            MapSpec::Standard { k } => Ok(standard_map(s, *k)),
            MapSpec::Pendulum { integrator } => pendulum_map(s, integrator),
            MapSpec::PerturbedPendulum { integrator } => perturbed_pendulum_map(s, integrator),
            MapSpec::OdeField(m) => {
                let [x, y] = rk45_integrate(
                    |t, u| (m.field)(t, u),
                    [s.x, s.y],
                    m.t_span[0],
                    m.t_span[1],
                    &m.integrator,
                )?;
                Ok(State::new(x, y).wrap(m.topology))
            }
        }
    }

    fn topology(&self) -> Topology {
        match self {
            MapSpec::Standard { .. } | MapSpec::Pendulum { .. } => Topology::Cylinder,
            MapSpec::PerturbedPendulum { .. } => Topology::Plane,
            MapSpec::OdeField(m) => m.topology,
        }
    }
}

/// `b' = b - k/(2 pi) sin(2 pi a)`, `a' = a + b' (mod 1)`.
pub fn standard_map(s: State, k: f64) -> State {
    let b = s.y - k / TAU * (TAU * s.x).sin();
    State::new(s.x + b, b).wrap(Topology::Cylinder)
}

/// Pendulum Hamiltonian `y^2/2 - cos(2 pi x)/(2 pi)`, conserved by [`pendulum_map`].
pub fn pendulum_hamiltonian(s: State) -> f64 {
    0.5 * s.y * s.y - (TAU * s.x).cos() / TAU
}

pub fn pendulum_map(s: State, cfg: &IntegratorConfig) -> Result<State> {
    let [x, y] = rk45_integrate(
        |_, u: &[f64; 2]| [u[1], -(TAU * u[0]).sin()],
        [s.x, s.y],
        0.0,
        SQRT_2,
        cfg,
    )?;
    Ok(State::new(x, y).wrap(Topology::Cylinder))
}

/// Forced pendulum Hamiltonian
/// `y^2/2 - cos(x)/4 - (3 x y sin 2t + 0.7 x y sin 3t)/20`.
pub fn perturbed_pendulum_hamiltonian(s: State, t: f64) -> f64 {
    let forcing = 3.0 * (2.0 * t).sin() + 0.7 * (3.0 * t).sin();
    0.5 * s.y * s.y - 0.25 * s.x.cos() - s.x * s.y * forcing / 20.0
}

fn perturbed_pendulum_field(t: f64, u: &[f64; 2]) -> [f64; 2] {
    let forcing = 3.0 * (2.0 * t).sin() + 0.7 * (3.0 * t).sin();
    let [x, y] = *u;
    [y - x * forcing / 20.0, -0.25 * x.sin() + y * forcing / 20.0]
}

pub fn perturbed_pendulum_map(s: State, cfg: &IntegratorConfig) -> Result<State> {
    let [x, y] = rk45_integrate(perturbed_pendulum_field, [s.x, s.y], 0.0, 2.0 * PI, cfg)?;
    Ok(State::new(x, y))
}

/// `[s0, F(s0), ..., F^steps(s0)]`.
pub fn iterate<M: SymplecticMap + ?Sized>(map: &M, s0: State, steps: usize) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = s0;
    out.push(s);
    for index in 1..=steps {
        s = map.apply(s).map_err(|e| Error::MapFailed {
            index,
            source: Box::new(e),
        })?;
        out.push(s);
    }
    Ok(out)
}
