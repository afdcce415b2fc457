//! Subcommand implementations. Every command writes its data files plus the
//! effective configuration (`run_config.json`) into the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use invlabel::maps::iterate;
use invlabel::model::{load_model, ModelFile};
use invlabel::{
    build_samples, eval_grid, normalize_maxabs, save_model, solve_bvp, solve_evp, validate_model,
    Domain, Provenance, SampleSet, State, SymplecticMap,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{apply_override, RunConfig, ScanKind};
use crate::error::{CliError, CliResult};

fn out_path(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| CliError::io(format!("creating {}", cfg.output.display()), e))?;
    Ok(cfg.output.join(name))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_text(path, &text)
}

fn echo_config(cfg: &RunConfig) -> CliResult<()> {
    write_json(&out_path(cfg, "run_config.json")?, &cfg.to_value())
}

fn samples(cfg: &RunConfig) -> CliResult<SampleSet> {
    Ok(build_samples(
        cfg.map()?,
        cfg.domain()?,
        cfg.n()?,
        cfg.sobol_skip,
    )?)
}

fn provenance(cfg: &RunConfig, delta: Option<f64>, mode: Option<usize>) -> CliResult<Provenance> {
    Ok(Provenance {
        map: Some(cfg.map()?.clone()),
        domain: *cfg.domain()?,
        n: cfg.n()?,
        epsilon: cfg.epsilon()?,
        sobol_skip: cfg.sobol_skip,
        delta,
        mode,
    })
}

fn core_io(path: &Path, e: invlabel::Error) -> CliError {
    match e {
        invlabel::Error::Io(io) => CliError::io(format!("reading {}", path.display()), io),
        other => other.into(),
    }
}

fn open_model(path: &Path) -> CliResult<ModelFile> {
    load_model(path).map_err(|e| core_io(path, e))
}

/// Config domain, falling back to the one recorded with the model.
fn model_domain(cfg: &RunConfig, file: &ModelFile) -> CliResult<Domain> {
    match (&cfg.domain, &file.provenance) {
        (Some(d), _) => Ok(*d),
        (None, Some(p)) => Ok(p.domain),
        (None, None) => Err(CliError::config("missing required field `domain`")),
    }
}

pub fn poincare(cfg: &RunConfig) -> CliResult<()> {
    let map = cfg.map()?;
    let p = &cfg.poincare;
    let seeds: Vec<State> = match &p.seeds {
        Some(s) => s.iter().map(|&[x, y]| State::new(x, y)).collect(),
        None => {
            let d = cfg.domain()?;
            let x = 0.5 * (d.x_range[0] + d.x_range[1]);
            let (lo, hi) = (d.y_range[0], d.y_range[1]);
            (0..p.n_seeds)
                .map(|i| State::new(x, lo + (i as f64 + 0.5) * (hi - lo) / p.n_seeds as f64))
                .collect()
        }
    };
    if seeds.is_empty() {
        return Err(CliError::config("poincare needs at least one seed"));
    }
    let orbits = seeds
        .par_iter()
        .map(|&s| iterate(map, s.wrap(map.topology()), p.steps))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("trajectory_id,step,x,y\n");
    for (id, orbit) in orbits.iter().enumerate() {
        for (step, s) in orbit.iter().enumerate() {
            writeln!(csv, "{id},{step},{},{}", s.x, s.y).expect("string write");
        }
    }
    write_text(&out_path(cfg, "poincare.csv")?, &csv)?;
    echo_config(cfg)?;
    println!("{} trajectories x {} points", orbits.len(), p.steps + 1);
    Ok(())
}

pub fn solve_bvp_cmd(cfg: &RunConfig) -> CliResult<()> {
    let s = samples(cfg)?;
    let kernel = cfg.kernel()?;
    let eps = cfg.epsilon()?;
    let (model, report) = solve_bvp(&s, &kernel, cfg.boundary()?, eps)?;
    let prov = provenance(cfg, None, None)?;
    save_model(out_path(cfg, "model.json")?, &model, Some(&prov))?;
    s.save_csv(out_path(cfg, "samples.csv")?)?;
    write_json(
        &out_path(cfg, "report.json")?,
        &json!({ "report": report, "sigma": kernel.sigma, "config": cfg.to_value() }),
    )?;
    echo_config(cfg)?;
    println!(
        "R = {:e}  E_inv = {:e}  E_bd = {:e}  E_K = {:e}",
        report.residual, report.e_inv, report.e_bd, report.e_k
    );
    Ok(())
}

pub fn solve_evp_cmd(cfg: &RunConfig) -> CliResult<()> {
    let s = samples(cfg)?;
    let kernel = cfg.kernel()?;
    let eps = cfg.epsilon()?;
    let res = solve_evp(&s, &kernel, cfg.boundary()?, eps, cfg.delta, cfg.n_eigs)?;
    let mut modes = Vec::new();
    for (i, pair) in res.pairs.iter().enumerate() {
        let model = res.model(i, &kernel, &s)?;
        let name = format!("mode_{}.json", i + 1);
        save_model(
            out_path(cfg, &name)?,
            &model,
            Some(&provenance(cfg, Some(cfg.delta), Some(i))?),
        )?;
        let e_k: f64 = pair.c.iter().zip(&pair.h).map(|(c, h)| c * h).sum();
        modes.push(json!({ "lambda": pair.lambda, "E_K": e_k, "model": name }));
    }
    write_json(
        &out_path(cfg, "eigen.json")?,
        &json!({
            "eigenvalues": res.lambdas(),
            "modes": modes,
            "shift_delta": res.shift_delta,
            "epsilon": res.epsilon,
            "iterations": res.iterations,
            "jitter": res.jitter,
            "sigma": kernel.sigma,
            "config": cfg.to_value(),
        }),
    )?;
    echo_config(cfg)?;
    for (i, l) in res.lambdas().iter().enumerate() {
        println!("lambda_{} = {l:e}", i + 1);
    }
    Ok(())
}

pub fn validate_cmd(cfg: &RunConfig, model_path: &Path) -> CliResult<()> {
    let file = open_model(model_path)?;
    let map = match (
        &cfg.map,
        file.provenance.as_ref().and_then(|p| p.map.as_ref()),
    ) {
        (Some(m), _) | (None, Some(m)) => m.clone(),
        (None, None) => return Err(CliError::config("missing required field `map`")),
    };
    let domain = model_domain(cfg, &file)?;
    let v = &cfg.validation;
    let report = validate_model(&file.model, &map, &domain, v.j, &v.birkhoff(), v.sobol_skip)?;
    report.save_csv(out_path(cfg, "pairs.csv")?)?;
    write_json(
        &out_path(cfg, "validation.json")?,
        &json!({
            "S": report.s,
            "J": report.j,
            "T": report.t,
            "sobol_skip": v.sobol_skip,
            "model": model_path.display().to_string(),
            "map": map,
            "domain": domain,
        }),
    )?;
    echo_config(cfg)?;
    println!("S = {:e}", report.s);
    Ok(())
}

pub fn eval_grid_cmd(
    cfg: &RunConfig,
    model_path: &Path,
    nx: usize,
    ny: usize,
    normalize: bool,
) -> CliResult<()> {
    let file = open_model(model_path)?;
    let domain = model_domain(cfg, &file)?;
    let model = if normalize {
        normalize_maxabs(&file.model, &domain)?
    } else {
        file.model
    };
    let grid = eval_grid(&model, &domain, nx, ny)?;
    grid.save_csv(out_path(cfg, "grid.csv")?)?;
    echo_config(cfg)?;
    println!("{nx} x {ny} grid written");
    Ok(())
}

fn samples_key(cfg: &RunConfig) -> CliResult<String> {
    Ok(json!([cfg.map()?, cfg.domain()?, cfg.n()?, cfg.sobol_skip]).to_string())
}

fn scan_row(cfg: &RunConfig, kind: ScanKind, s: &SampleSet) -> CliResult<Vec<f64>> {
    let kernel = cfg.kernel()?;
    Ok(match kind {
        ScanKind::Bvp => {
            let (_, r) = solve_bvp(s, &kernel, cfg.boundary()?, cfg.epsilon()?)?;
            vec![r.residual, r.e_inv, r.e_bd, r.e_k]
        }
        ScanKind::Evp => solve_evp(
            s,
            &kernel,
            cfg.boundary()?,
            cfg.epsilon()?,
            cfg.delta,
            cfg.n_eigs,
        )?
        .lambdas(),
        ScanKind::Validation => {
            let (model, _) = solve_bvp(s, &kernel, cfg.boundary()?, cfg.epsilon()?)?;
            let v = &cfg.validation;
            let r = validate_model(
                &model,
                cfg.map()?,
                cfg.domain()?,
                v.j,
                &v.birkhoff(),
                v.sobol_skip,
            )?;
            vec![s.n() as f64, kernel.sigma, r.s]
        }
    })
}

/// One solve per axis value; sample sets are shared between points that differ
/// only in solver hyperparameters.
pub fn scan(cfg: &RunConfig, doc: &Value) -> CliResult<()> {
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| CliError::config("missing required field `scan`"))?;
    if scan.values.len() < 2 {
        return Err(CliError::config("scan axis needs at least 2 values"));
    }
    let points = scan
        .values
        .iter()
        .map(|v| {
            let mut d = doc.clone();
            if let Some(o) = d.as_object_mut() {
                o.remove("scan");
            }
            apply_override(&mut d, &scan.parameter, v.clone())?;
            RunConfig::from_value(d)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut keys = Vec::with_capacity(points.len());
    let mut unique: BTreeMap<String, &RunConfig> = BTreeMap::new();
    for p in &points {
        let k = samples_key(p)?;
        unique.entry(k.clone()).or_insert(p);
        keys.push(k);
    }
    let cache: BTreeMap<String, SampleSet> = unique
        .into_par_iter()
        .map(|(k, p)| Ok((k, samples(p)?)))
        .collect::<CliResult<_>>()?;
    log::info!("scan: {} points, {} sample sets", points.len(), cache.len());
    let rows = points
        .par_iter()
        .zip(&keys)
        .map(|(p, k)| scan_row(p, scan.kind, &cache[k]))
        .collect::<CliResult<Vec<_>>>()?;

    let mut header = vec![scan.parameter.clone()];
    match scan.kind {
        ScanKind::Bvp => header.extend(["R", "E_inv", "E_bd", "E_K"].map(String::from)),
        ScanKind::Evp => header.extend((1..=cfg.n_eigs).map(|i| format!("lambda_{i}"))),
        ScanKind::Validation => header.extend(["n", "sigma", "S"].map(String::from)),
    }
    let mut csv = header.join(",");
    csv.push('\n');
    for (v, row) in scan.values.iter().zip(&rows) {
        let label = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        writeln!(csv, "{label},{}", cells.join(",")).expect("string write");
    }
    write_text(&out_path(cfg, "scan.csv")?, &csv)?;
    echo_config(cfg)?;
    print!("{csv}");
    Ok(())
}
