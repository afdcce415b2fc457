//! Sample sets `{x_1..x_N, F(x_1)..F(x_N)}` and the invariance difference operator.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::geometry::{sobol_sample, Domain, State, Topology};
use crate::maps::SymplecticMap;
use crate::{Error, Result};

/// `2N` points ordered as `N` inputs followed by their `N` images.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    z: Vec<State>,
    n: usize,
    domain: Domain,
    sobol_skip: usize,
}

impl SampleSet {
    /// Assemble from inputs and their images. Images may lie outside the domain.
    pub fn from_parts(
        domain: Domain,
        inputs: Vec<State>,
        images: Vec<State>,
        sobol_skip: usize,
    ) -> Result<Self> {
        if inputs.len() != images.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                actual: images.len(),
            });
        }
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("sample set needs N >= 1".into()));
        }
        let n = inputs.len();
        let mut z = inputs;
        z.extend(images);
        Ok(Self {
            z,
            n,
            domain,
            sobol_skip,
        })
    }

    /// All `2N` points.
    pub fn points(&self) -> &[State] {
        &self.z
    }
    pub fn inputs(&self) -> &[State] {
        &self.z[..self.n]
    }
    pub fn images(&self) -> &[State] {
        &self.z[self.n..]
    }
    /// Number of map evaluations `N`.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn topology(&self) -> Topology {
        self.domain.topology
    }
    pub fn sobol_skip(&self) -> usize {
        self.sobol_skip
    }

    /// CSV with header `index,x,y,image_x,image_y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "x", "y", "image_x", "image_y"])
            .map_err(csv_err)?;
        for (i, (p, q)) in self.inputs().iter().zip(self.images()).enumerate() {
            w.write_record([
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                q.x.to_string(),
                q.y.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, domain: Domain, sobol_skip: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut inputs = Vec::new();
        let mut images = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 5 {
                return Err(Error::InvalidArgument(format!(
                    "sample CSV row {row} has {} fields, expected 5",
                    rec.len()
                )));
            }
            let f = |i: usize| -> Result<f64> {
                rec[i].trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "sample CSV row {row}: bad number {:?}",
                        &rec[i]
                    ))
                })
            };
            inputs.push(State::new(f(1)?, f(2)?));
            images.push(State::new(f(3)?, f(4)?));
        }
        Self::from_parts(domain, inputs, images, sobol_skip)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: impl AsRef<Path>, domain: Domain, sobol_skip: usize) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, domain, sobol_skip)
    }
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::InvalidArgument(format!("CSV: {e}"))
    }
}

/// Sobol-sample `n` inputs in `domain` and map each once (in parallel, order preserved).
pub fn build_samples<M: SymplecticMap + ?Sized>(
    map: &M,
    domain: &Domain,
    n: usize,
    skip: usize,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample set needs N >= 1".into()));
    }
    domain.validate()?;
    if map.topology() != domain.topology {
        return Err(Error::InvalidArgument(format!(
            "map acts on the {} but the domain is on the {}",
            map.topology(),
            domain.topology
        )));
    }
    let inputs = sobol_sample(domain, n, skip);
    let images = inputs
        .par_iter()
        .enumerate()
        .map(|(index, &p)| {
            map.apply(p).map_err(|e| Error::MapFailed {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSet::from_parts(*domain, inputs, images, skip)
}

fn half_len(len: usize) -> Result<usize> {
    if !len.is_multiple_of(2) || len == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a nonempty vector of even length 2N, got {len}"
        )));
    }
    Ok(len / 2)
}

/// `G v = v[..N] - v[N..]`.
pub fn apply_ginv(v: &[f64]) -> Result<Vec<f64>> {
    let n = half_len(v.len())?;
    Ok((0..n).map(|i| v[i] - v[n + i]).collect())
}

/// `G^T u = (u; -u)`.
pub fn apply_ginv_t(u: &[f64]) -> Vec<f64> {
    u.iter().copied().chain(u.iter().map(|x| -x)).collect()
}

/// `G^T G v`, the block form `[[I, -I], [-I, I]] v`.
pub fn apply_gtg(v: &[f64]) -> Result<Vec<f64>> {
    let d = apply_ginv(v)?;
    Ok(apply_ginv_t(&d))
}

/// `E_inv = sum_n (h[n] - h[N + n])^2`.
pub fn invariance_energy(h: &[f64]) -> Result<f64> {
    let n = half_len(h.len())?;
    Ok((0..n).map(|i| (h[i] - h[n + i]).powi(2)).sum())
}
