//! Weighted Birkhoff averages and the out-of-sample invariance score.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{sobol_sample, Domain, State};
use crate::maps::SymplecticMap;
use crate::model::LabelModel;
use crate::{Error, Result};

/// Validation points start here in the Sobol sequence, away from training prefixes.
pub const DEFAULT_VALIDATION_SKIP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BirkhoffConfig {
    /// Number of trajectory points averaged (`t = 0 .. T-1`).
    pub t: usize,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        Self { t: 100 }
    }
}

/// Bump-function weights `g((t+1)/(T+1))`, normalized to sum to one.
pub fn birkhoff_weights(t_len: usize) -> Result<Vec<f64>> {
    if t_len == 0 {
        return Err(Error::InvalidArgument(
            "Birkhoff length must be positive".into(),
        ));
    }
    let denom = ((t_len + 1) as f64).powi(2);
    let raw: Vec<f64> = (0..t_len)
        .map(|t| {
            // s (1 - s) from integers keeps the weights exactly symmetric
            let prod = ((t + 1) * (t_len - t)) as f64 / denom;
            (-1.0 / prod).exp()
        })
        .collect();
    let total = neumaier_sum(&raw);
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!(
            "Birkhoff weights underflow for T = {t_len}"
        )));
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Weighted Birkhoff average of `f` along the orbit of `x0` (`T - 1` map calls).
pub fn weighted_birkhoff<M, F>(map: &M, f: F, x0: State, cfg: &BirkhoffConfig) -> Result<f64>
where
    M: SymplecticMap + ?Sized,
    F: Fn(State) -> f64,
{
    let w = birkhoff_weights(cfg.t)?;
    let mut x = x0;
    let mut terms = Vec::with_capacity(cfg.t);
    for (i, wt) in w.iter().enumerate() {
        if i > 0 {
            x = map.apply(x).map_err(|e| Error::MapFailed {
                index: i,
                source: Box::new(e),
            })?;
        }
        terms.push(wt * f(x));
    }
    Ok(neumaier_sum(&terms))
}

/// `S = sum (h - WB[h])^2 / sum (h - mean h)^2` over validation points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    #[serde(rename = "S")]
    pub s: f64,
    /// `(h(x_j), WB[h](x_j))` per validation point.
    pub pairs: Vec<(f64, f64)>,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "T")]
    pub t: usize,
}

impl ValidationReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,wb")?;
        for (h, b) in &self.pairs {
            writeln!(w, "{h},{b}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

pub fn score_from_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no validation points".into()));
    }
    let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let var: f64 = pairs.iter().map(|p| (p.0 - mean).powi(2)).sum();
    if var == 0.0 {
        return Err(Error::ConstantLabel);
    }
    let num: f64 = pairs.iter().map(|p| (p.0 - p.1).powi(2)).sum();
    Ok(num / var)
}

/// Score an arbitrary observable on `j` Sobol points starting at `skip`.
pub fn validation_score<M, F>(
    h: F,
    map: &M,
    domain: &Domain,
    j: usize,
    cfg: &BirkhoffConfig,
    skip: usize,
) -> Result<ValidationReport>
where
    M: SymplecticMap + ?Sized,
    F: Fn(State) -> f64 + Sync,
{
    domain.validate()?;
    if j < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 validation points, got {j}"
        )));
    }
    let points = sobol_sample(domain, j, skip);
    let pairs = points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let wb = weighted_birkhoff(map, &h, x, cfg).map_err(|e| Error::MapFailed {
                index: i,
                source: Box::new(e),
            })?;
            Ok((h(x), wb))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = score_from_pairs(&pairs)?;
    Ok(ValidationReport {
        s,
        pairs,
        j,
        t: cfg.t,
    })
}

pub fn validate_model<M: SymplecticMap + ?Sized>(
    model: &LabelModel,
    map: &M,
    domain: &Domain,
    j: usize,
    cfg: &BirkhoffConfig,
    skip: usize,
) -> Result<ValidationReport> {
    validation_score(|p| model.eval(p), map, domain, j, cfg, skip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Topology;
    use crate::maps::{FnMap, MapSpec};

    fn identity() -> FnMap<impl Fn(State) -> State + Send + Sync> {
        FnMap::new(Topology::Cylinder, |p| p)
    }

    #[test]
    fn weights_normalized_and_symmetric() {
        for t in [1usize, 2, 3, 10, 100, 1000, 4096] {
            let w = birkhoff_weights(t).unwrap();
            assert!((neumaier_sum(&w) - 1.0).abs() <= 1e-15, "T = {t}");
            for i in 0..t {
                assert_eq!(w[i], w[t - 1 - i]);
            }
            assert!(w.iter().all(|&x| x > 0.0 || t > 100));
        }
        assert!(birkhoff_weights(0).is_err());
    }

    #[test]
    fn constant_and_fixed_point_averages() {
        let cfg = BirkhoffConfig { t: 57 };
        let m = MapSpec::standard(0.9);
        let v = weighted_birkhoff(&m, |_| 3.25, State::new(0.2, 0.4), &cfg).unwrap();
        assert!((v - 3.25).abs() < 1e-14);
        let v = weighted_birkhoff(&identity(), |p| p.x * p.y, State::new(0.5, 0.3), &cfg).unwrap();
        assert!((v - 0.15).abs() < 1e-15);
    }

    #[test]
    fn golden_rotation_converges_fast() {
        let omega = (5f64.sqrt() - 1.0) / 2.0;
        let rot = FnMap::new(Topology::Cylinder, move |p: State| {
            State::new(p.x + omega, p.y).wrap(Topology::Cylinder)
        });
        let f = |p: State| (2.0 * std::f64::consts::PI * p.x).cos();
        let x0 = State::new(0.1, 0.0);
        let long = weighted_birkhoff(&rot, f, x0, &BirkhoffConfig { t: 200 }).unwrap();
        let short = weighted_birkhoff(&rot, f, x0, &BirkhoffConfig { t: 50 }).unwrap();
        assert!(long.abs() <= 1e-8, "WB(200) = {long}");
        assert!(
            long.abs() <= 1e-3 * short.abs(),
            "WB(200) = {long}, WB(50) = {short}"
        );
    }

    #[test]
    fn exact_invariant_scores_zero() {
        let d = Domain::annulus(0.0, 1.0).unwrap();
        let m = MapSpec::standard(0.0);
        let r = validation_score(
            |p| p.y,
            &m,
            &d,
            64,
            &BirkhoffConfig::default(),
            DEFAULT_VALIDATION_SKIP,
        )
        .unwrap();
        assert!(r.s <= 1e-25, "S = {}", r.s);
        assert_eq!(r.pairs.len(), 64);
    }

    #[test]
    fn score_properties() {
        let d = Domain::annulus(0.0, 1.0).unwrap();
        let m = MapSpec::standard(0.9);
        let cfg = BirkhoffConfig { t: 50 };
        let f = |p: State| (2.0 * std::f64::consts::PI * p.x).cos() + p.y;
        let r1 = validation_score(f, &m, &d, 100, &cfg, 100).unwrap();
        let r2 = validation_score(|p| 3.0 * f(p) + 7.0, &m, &d, 100, &cfg, 100).unwrap();
        assert!(r1.s >= 0.0);
        assert!((r1.s - r2.s).abs() <= 1e-10 * r1.s);
        assert!(matches!(
            validation_score(|_| 1.0, &m, &d, 10, &cfg, 1),
            Err(Error::ConstantLabel)
        ));
        assert!(validation_score(f, &m, &d, 1, &cfg, 1).is_err());
    }

    #[test]
    fn pairs_csv() {
        let r = ValidationReport {
            s: 0.5,
            pairs: vec![(1.0, 0.5), (-1.0, 0.25)],
            j: 2,
            t: 10,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,wb\n1,0.5\n-1,0.25\n");
    }
}
