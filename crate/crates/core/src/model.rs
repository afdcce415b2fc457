//! Label functions `h(z) = norm * sum_n c_n K(z, z_n)`: evaluation, normalization,
//! grid export and versioned JSON persistence.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, State, Topology};
use crate::kernels::KernelSpec;
use crate::maps::MapSpec;
use crate::{Error, Result};

pub const MODEL_SCHEMA: &str = "label-model/1";

/// Kernel expansion centered at the sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub kernel: KernelSpec,
    pub topology: Topology,
    pub centers: Vec<State>,
    pub coefficients: Vec<f64>,
    pub normalization: f64,
}

impl LabelModel {
    pub fn new(
        kernel: KernelSpec,
        topology: Topology,
        centers: Vec<State>,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            kernel,
            topology,
            centers,
            coefficients,
            normalization: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.len() != self.coefficients.len() {
            return Err(Error::LengthMismatch {
                expected: self.centers.len(),
                actual: self.coefficients.len(),
            });
        }
        self.kernel.validate()
    }

    pub fn eval(&self, p: State) -> f64 {
        eval_label(self, p)
    }

    /// Evaluate at many points in parallel, order preserved.
    pub fn eval_many(&self, points: &[State]) -> Vec<f64> {
        points.par_iter().map(|&p| self.eval(p)).collect()
    }
}

pub fn eval_label(model: &LabelModel, p: State) -> f64 {
    let s: f64 = model
        .centers
        .iter()
        .zip(&model.coefficients)
        .map(|(&z, c)| c * model.kernel.eval(p, z, model.topology))
        .sum();
    s * model.normalization
}

const PROBE_RESOLUTION: usize = 200;

/// Rescale so the largest `|h|` on a 200 x 200 cell-centered grid over `domain` is 1.
pub fn normalize_maxabs(model: &LabelModel, domain: &Domain) -> Result<LabelModel> {
    let grid = eval_grid(model, domain, PROBE_RESOLUTION, PROBE_RESOLUTION)?;
    let peak = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Degenerate(
            "label function vanishes on the probe grid".into(),
        ));
    }
    let mut out = model.clone();
    out.normalization /= peak;
    Ok(out)
}

/// Values at the cell centers of an `nx x ny` grid, row-major with `y` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    /// CSV with header `x,y,h`, one row per node, `y` outer.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,h")?;
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                writeln!(w, "{},{},{}", x, y, self.value(ix, iy))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

pub fn grid_nodes(domain: &Domain, nx: usize, ny: usize) -> (Vec<f64>, Vec<f64>) {
    let cell = |r: [f64; 2], n: usize, i: usize| r[0] + (i as f64 + 0.5) * (r[1] - r[0]) / n as f64;
    let xs = (0..nx).map(|i| cell(domain.x_range, nx, i)).collect();
    let ys = (0..ny).map(|i| cell(domain.y_range, ny, i)).collect();
    (xs, ys)
}

pub fn eval_grid(model: &LabelModel, domain: &Domain, nx: usize, ny: usize) -> Result<Grid> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs nx, ny >= 2 (got {nx} x {ny})"
        )));
    }
    let (xs, ys) = grid_nodes(domain, nx, ny);
    let points: Vec<State> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| State::new(x, y)))
        .collect();
    let values = model.eval_many(&points);
    Ok(Grid { xs, ys, values })
}

/// Inputs that produced a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    pub domain: Domain,
    pub n: usize,
    pub epsilon: f64,
    pub sobol_skip: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Eigenmode index (0-based) for eigenproblem models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
}

/// The on-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    #[serde(flatten)]
    pub model: LabelModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ModelFile {
    pub fn new(model: LabelModel, provenance: Option<Provenance>) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_owned(),
            model,
            provenance,
        }
    }
}

pub fn write_model<W: Write>(
    mut w: W,
    model: &LabelModel,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let file = ModelFile::new(model.clone(), provenance.cloned());
    serde_json::to_writer_pretty(&mut w, &file)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(r: R) -> Result<ModelFile> {
    let value: serde_json::Value = serde_json::from_reader(r)?;
    let found = value
        .get("schema")
        .and_then(|s| s.as_str())
        .unwrap_or("<missing>");
    if found != MODEL_SCHEMA {
        return Err(Error::SchemaVersion {
            found: found.to_owned(),
            expected: MODEL_SCHEMA.to_owned(),
        });
    }
    let file: ModelFile = serde_json::from_value(value)?;
    file.model.validate()?;
    Ok(file)
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &LabelModel,
    provenance: Option<&Provenance>,
) -> Result<()> {
    write_model(
        std::io::BufWriter::new(std::fs::File::create(path)?),
        model,
        provenance,
    )
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    read_model(std::io::BufReader::new(std::fs::File::open(path)?))
}
