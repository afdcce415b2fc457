//! JSON run configuration with `key=value` overrides.

use std::path::{Path, PathBuf};

use invlabel::evp::DEFAULT_DELTA;
use invlabel::validation::DEFAULT_VALIDATION_SKIP;
use invlabel::{
    sigma_from_density, BirkhoffConfig, BoundarySpec, Domain, KernelFamily, KernelSpec, MapSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Kernel family with either a fixed width or a density-scaled `sigma0 / sqrt(N)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
}

impl KernelConfig {
    pub fn resolve(&self, n: usize) -> CliResult<KernelSpec> {
        let sigma = match (self.sigma, self.sigma0) {
            (Some(s), None) => s,
            (None, Some(s0)) => sigma_from_density(s0, n)?,
            _ => {
                return Err(CliError::config(
                    "kernel needs exactly one of `sigma`, `sigma0`",
                ))
            }
        };
        Ok(KernelSpec::new(self.family, sigma)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSettings {
    /// Number of validation points.
    pub j: usize,
    /// Birkhoff average length.
    pub t: usize,
    pub sobol_skip: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            j: 500,
            t: 100,
            sobol_skip: DEFAULT_VALIDATION_SKIP,
        }
    }
}

impl ValidationSettings {
    pub fn birkhoff(&self) -> BirkhoffConfig {
        BirkhoffConfig { t: self.t }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareSettings {
    /// Explicit initial states; when absent, `n_seeds` states on the vertical midline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<[f64; 2]>>,
    pub n_seeds: usize,
    pub steps: usize,
}

impl Default for PoincareSettings {
    fn default() -> Self {
        Self {
            seeds: None,
            n_seeds: 80,
            steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Bvp,
    Evp,
    Validation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Dotted config key varied along the axis, e.g. `map.k` or `kernel.sigma0`.
    pub parameter: String,
    pub values: Vec<Value>,
    pub kind: ScanKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_n_eigs")]
    pub n_eigs: usize,
    #[serde(default = "default_skip")]
    pub sobol_skip: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default)]
    pub poincare: PoincareSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_n_eigs() -> usize {
    1
}

fn default_skip() -> usize {
    invlabel::geometry::DEFAULT_SOBOL_SKIP
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn required<'a, T>(v: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::config(format!("missing required field `{name}`")))
}

impl RunConfig {
    pub fn from_value(value: Value) -> CliResult<Self> {
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
        if let Some(m) = &cfg.map {
            m.validate()?;
        }
        if let Some(d) = &cfg.domain {
            d.validate()?;
        }
        if let Some(b) = &cfg.boundary {
            b.validate()?;
        }
        Ok(cfg)
    }

    pub fn map(&self) -> CliResult<&MapSpec> {
        required(&self.map, "map")
    }

    pub fn domain(&self) -> CliResult<&Domain> {
        required(&self.domain, "domain")
    }

    pub fn boundary(&self) -> CliResult<&BoundarySpec> {
        required(&self.boundary, "boundary")
    }

    pub fn n(&self) -> CliResult<usize> {
        let n = *required(&self.n, "n")?;
        if n == 0 {
            return Err(CliError::config("`n` must be positive"));
        }
        Ok(n)
    }

    pub fn epsilon(&self) -> CliResult<f64> {
        let e = *required(&self.epsilon, "epsilon")?;
        if !(e > 0.0) {
            return Err(CliError::config(format!(
                "`epsilon` must be positive, got {e}"
            )));
        }
        Ok(e)
    }

    pub fn kernel(&self) -> CliResult<KernelSpec> {
        required(&self.kernel, "kernel")?.resolve(self.n()?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Read a config document, or an empty one when no path is given.
pub fn read_config_value(path: Option<&Path>) -> CliResult<Value> {
    let Some(path) = path else {
        return Ok(Value::Object(Default::default()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Parse `key=value`; the value is JSON when it parses as JSON, else a string.
pub fn parse_override(s: &str) -> CliResult<(String, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{s}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((key.trim().to_owned(), value))
}

/// Set a dotted key, creating intermediate objects. Setting one of
/// `kernel.sigma` / `kernel.sigma0` clears the other.
pub fn apply_override(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    if key.is_empty() {
        return Err(CliError::config("empty override key"));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(CliError::config(format!(
                "`{key}`: `{part}` is not an object"
            )));
        }
        node = node
            .as_object_mut()
            .expect("checked")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::config(format!("`{key}`: parent is not an object")))?;
    let last = parts[parts.len() - 1];
    if parts.len() == 2 && parts[0] == "kernel" {
        match last {
            "sigma" => {
                obj.remove("sigma0");
            }
            "sigma0" => {
                obj.remove("sigma");
            }
            _ => {}
        }
    }
    obj.insert(last.to_owned(), value);
    Ok(())
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> CliResult<(RunConfig, Value)> {
    let mut doc = read_config_value(path)?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        apply_override(&mut doc, &k, v)?;
    }
    let cfg = RunConfig::from_value(doc.clone())?;
    Ok((cfg, doc))
}
