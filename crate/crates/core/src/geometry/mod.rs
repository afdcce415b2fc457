//! Phase-space points, sampling domains, boundary regions and low-discrepancy sampling.

mod sobol;

pub use sobol::{sobol_point, Sobol2};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Phase-space topology. On the cylinder the `x` coordinate has period 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Plane,
    Cylinder,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Plane => f.write_str("plane"),
            Topology::Cylinder => f.write_str("cylinder"),
        }
    }
}

/// A point `(x, y)` of the plane or the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Canonical representative: on the cylinder `x` is reduced to `[0, 1)`.
    pub fn wrap(self, topology: Topology) -> Self {
        match topology {
            Topology::Plane => self,
            Topology::Cylinder => Self::new(wrap_unit(self.x), self.y),
        }
    }
}

impl From<(f64, f64)> for State {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Reduce to `[0, 1)`. `rem_euclid` can round up to exactly 1.0 for tiny negative inputs.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Coordinate differences `p - q`.
///
/// On the cylinder `dx` is the raw difference; periodic kernels consume it through
/// `sin^2(pi * dx)`, which is 1-periodic.
pub fn separation(p: State, q: State, _topology: Topology) -> (f64, f64) {
    (p.x - q.x, p.y - q.y)
}

/// A rectangle on the plane or an annulus `T x [y_lo, y_hi]` on the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub topology: Topology,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
}

impl Domain {
    pub fn rectangle(x_range: [f64; 2], y_range: [f64; 2]) -> crate::Result<Self> {
        Self::new(Topology::Plane, x_range, y_range)
    }

    /// The annulus `T x [y_lo, y_hi]` covering the full period in `x`.
    pub fn annulus(y_lo: f64, y_hi: f64) -> crate::Result<Self> {
        Self::new(Topology::Cylinder, [0.0, 1.0], [y_lo, y_hi])
    }

    pub fn new(topology: Topology, x_range: [f64; 2], y_range: [f64; 2]) -> crate::Result<Self> {
        let d = Self {
            topology,
            x_range,
            y_range,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(crate::Error::InvalidArgument(format!(
                "domain ranges must be finite with lo < hi, got x {:?}, y {:?}",
                self.x_range, self.y_range
            )));
        }
        if self.topology == Topology::Cylinder && (self.x_range[0] < 0.0 || self.x_range[1] > 1.0) {
            return Err(crate::Error::InvalidArgument(format!(
                "cylinder x range must lie within one period [0, 1], got {:?}",
                self.x_range
            )));
        }
        Ok(())
    }

    /// Lebesgue measure of the domain.
    pub fn area(&self) -> f64 {
        (self.x_range[1] - self.x_range[0]) * (self.y_range[1] - self.y_range[0])
    }

    /// Affine image of a point of the unit square.
    pub fn from_unit(&self, u: f64, v: f64) -> State {
        State::new(
            self.x_range[0] + u * (self.x_range[1] - self.x_range[0]),
            self.y_range[0] + v * (self.y_range[1] - self.y_range[0]),
        )
    }
}

/// Closed-interval membership after wrapping.
pub fn in_domain(p: State, d: &Domain) -> bool {
    let p = p.wrap(d.topology);
    (d.x_range[0]..=d.x_range[1]).contains(&p.x) && (d.y_range[0]..=d.y_range[1]).contains(&p.y)
}

/// A region of phase space used as the support of a boundary condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// Everything outside the closed box `x_range x y_range`.
    ComplementOfRect {
        x_range: [f64; 2],
        y_range: [f64; 2],
    },
    /// The half strip `y < y_max`.
    Below {
        y_max: f64,
    },
    /// The half strip `y > y_min`.
    Above {
        y_min: f64,
    },
    Union {
        regions: Vec<Region>,
    },
}

impl Region {
    /// `R^2` minus the closed box.
    pub fn outside_box(x_range: [f64; 2], y_range: [f64; 2]) -> Self {
        Region::ComplementOfRect { x_range, y_range }
    }

    /// The two buffer strips `y < a + beta` and `y > b - beta`.
    pub fn strips(a: f64, b: f64, beta: f64) -> Self {
        Region::Union {
            regions: vec![
                Region::Below { y_max: a + beta },
                Region::Above { y_min: b - beta },
            ],
        }
    }

    pub fn contains(&self, p: State) -> bool {
        in_region(p, self)
    }
}

/// Exact membership test, defined on all of phase space.
pub fn in_region(p: State, r: &Region) -> bool {
    match r {
        Region::ComplementOfRect { x_range, y_range } => {
            !((x_range[0]..=x_range[1]).contains(&p.x) && (y_range[0]..=y_range[1]).contains(&p.y))
        }
        Region::Below { y_max } => p.y < *y_max,
        Region::Above { y_min } => p.y > *y_min,
        Region::Union { regions } => regions.iter().any(|r| in_region(p, r)),
    }
}

/// `n` Sobol points scaled into `domain`, skipping the first `skip` sequence entries.
pub fn sobol_sample(domain: &Domain, n: usize, skip: usize) -> Vec<State> {
    Sobol2::starting_at(skip as u64)
        .take(n)
        .map(|[u, v]| domain.from_unit(u, v))
        .collect()
}

/// Default number of leading Sobol entries to skip (index 0 is the domain corner).
pub const DEFAULT_SOBOL_SKIP: usize = 1;
