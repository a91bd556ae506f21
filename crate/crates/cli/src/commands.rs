use std::fs;
use std::path::{Path, PathBuf};

use borel_core::deformation::validate;
use borel_core::germs::{convolve_run, default_level, ContinuationConfig};
use borel_core::{
    deform, glimpsed_inductive, singularity_probe, AdmissibleLevelInterval, ConvolveConfig, DeformConfig,
    DeformationGrid64, FilteredSet64, Germ64, Path64,
};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::job::{Failure, JobConfig};
use crate::output::{write_atomic, write_json, Csv, Layer, Svg};
use crate::{Cli, Command, DeformInputs, GridArgs, SetOp};

/// Contents of `path_check.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub length: f64,
    pub levels: AdmissibleLevelInterval<f64>,
    pub allowed: bool,
    /// Distance of the path to the set; absent when the path is not allowed.
    pub distance: Option<f64>,
}

/// Contents of `glimpse.json` with `--verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlimpseCheck {
    pub agrees: bool,
    pub inductive: Vec<Complex64>,
}

fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn written(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| format!("wrote {}", p.display())).collect::<Vec<_>>().join("\n")
}

pub fn run(cli: Cli) -> Result<String, Failure> {
    let out = cli.out_dir;
    match cli.command {
        Command::SetOp { op, a, b } => set_op(op, &a, b.as_deref(), &out),
        Command::PathCheck { set, path, samples } => path_check(&set, &path, samples, &out),
        Command::Glimpse { set, theta, verify } => glimpse(&set, theta, verify, &out),
        Command::Deform { inputs, grid } => {
            let job = grid_job("deform", &inputs, &grid, vec![], out)?;
            run_deform(&inputs, &grid, &job)
        }
        Command::Convolve { phi, psi, inputs, grid, n_q, n_ser, probe, probe_radius, tol_mono } => {
            let mut job = grid_job("convolve", &inputs, &grid, vec![phi.clone(), psi.clone()], out)?;
            job.n_q = n_q;
            job.n_ser = n_ser;
            job.tolerances.push(("tol-mono", tol_mono));
            let job = job.validate()?;
            let cfg = ConvolveConfig {
                n_q,
                continuation: ContinuationConfig { n_ser, ..ContinuationConfig::default() },
                deform: deform_config(&grid),
                tol_mono,
                ..ConvolveConfig::default()
            };
            run_convolve(&phi, &psi, &inputs, probe.map(|p| (p, probe_radius)), &cfg, &job)
        }
    }
}

fn grid_job(name: &'static str, inputs: &DeformInputs, grid: &GridArgs, mut extra: Vec<PathBuf>, out: PathBuf) -> Result<JobConfig, Failure> {
    extra.extend([inputs.gamma.clone(), inputs.set_a.clone(), inputs.set_b.clone()]);
    let job = JobConfig {
        level: inputs.level,
        n_s: grid.n_s,
        n_t: grid.n_t,
        tolerances: vec![("guard-rel", grid.guard_rel)],
        ..JobConfig::new(name, extra, out)
    };
    job.validate()
}

fn deform_config(grid: &GridArgs) -> DeformConfig<f64> {
    DeformConfig { n_s: grid.n_s, n_t: grid.n_t, guard_rel: grid.guard_rel, ..DeformConfig::default() }
}

fn set_op(op: SetOp, a: &Path, b: Option<&Path>, out: &Path) -> Result<String, Failure> {
    let a: FilteredSet64 = read_json(a)?;
    let second = || -> Result<FilteredSet64, Failure> {
        read_json(b.ok_or_else(|| Failure::Parse("this operation needs two sets".into()))?)
    };
    let result = match op {
        SetOp::Union => a.union(&second()?)?,
        SetOp::Sum => a.sum(&second()?)?,
        SetOp::FineSum => a.fine_sum(&second()?)?,
        SetOp::Saturate => {
            if b.is_some() {
                return Err(Failure::Parse("saturate takes one set".into()));
            }
            a.saturate()
        }
    };
    Ok(written(&[write_json(out, "set.json", &result)?]))
}

fn path_check(set: &Path, path: &Path, samples: usize, out: &Path) -> Result<String, Failure> {
    let set: FilteredSet64 = read_json(set)?;
    let path: Path64 = read_json(path)?;
    let levels = path.admissible_levels(&set)?;
    let allowed = !levels.is_empty();
    let report = PathCheck { length: path.length(), levels, allowed, distance: path.distance_to_set(&set).ok() };
    let mut csv = Csv::new(&["t", "re", "im", "s"]);
    for (t, z, s) in path.sample(samples.max(1)) {
        csv.row(&[t, z.re, z.im, s]);
    }
    let files = [write_json(out, "path_check.json", &report)?, write_atomic(out, "path.csv", &csv.into_bytes())?];
    Ok(written(&files))
}

fn glimpse(set: &Path, theta: f64, verify: bool, out: &Path) -> Result<String, Failure> {
    let set: FilteredSet64 = read_json(set)?;
    let g = set.glimpsed(theta);
    let mut files = vec![write_json(out, "glimpse.json", &g)?];
    if verify {
        let inductive = glimpsed_inductive(&set, theta);
        let closed: Vec<Complex64> = g.points.iter().map(|e| e.z).collect();
        let agrees = inductive.len() == closed.len() && inductive.iter().zip(&closed).all(|(x, y)| (x - y).norm() <= 1e-9);
        files.push(write_json(out, "glimpse_check.json", &GlimpseCheck { agrees, inductive })?);
        if !agrees {
            return Err(Failure::Tolerance(format!("glimpse cross-check failed; {}", written(&files))));
        }
    }
    Ok(written(&files))
}

struct Loaded {
    gamma: Path64,
    a: FilteredSet64,
    b: FilteredSet64,
    level: f64,
}

fn load(inputs: &DeformInputs) -> Result<Loaded, Failure> {
    let gamma: Path64 = read_json(&inputs.gamma)?;
    let a: FilteredSet64 = read_json(&inputs.set_a)?;
    let b: FilteredSet64 = read_json(&inputs.set_b)?;
    let level = match inputs.level {
        Some(l) => l,
        None => default_level(&gamma, &a, &b)?,
    };
    Ok(Loaded { gamma, a, b, level })
}

fn grid_csv(grid: &DeformationGrid64) -> Vec<u8> {
    let mut csv = Csv::new(&["s", "t", "re_h", "im_h", "re_h_star", "im_h_star"]);
    for j in 0..=grid.n_t() {
        for i in 0..=grid.n_s() {
            let (h, hs) = (grid.h(i, j), grid.h_star(i, j));
            csv.row(&[grid.s(i), grid.t(j), h.re, h.im, hs.re, hs.im]);
        }
    }
    csv.into_bytes()
}

fn overlay(grid: &DeformationGrid64) -> Result<String, Failure> {
    let level = grid.level();
    let gamma: Vec<Complex64> = grid.gamma().sample(256).into_iter().map(|(_, z, _)| z).collect();
    let columns: Vec<Vec<Complex64>> = (0..=6).map(|k| grid.column(k * grid.n_t() / 6)).collect();
    let a = grid.set_a().at_level(level)?;
    let b = grid.set_b().at_level(level)?;
    let ab = grid.set_a().fine_sum(grid.set_b())?.at_level(level)?;
    let mut layers: Vec<Layer> = columns.iter().map(|c| Layer::Polyline { points: c, colour: "#4a7bd0", width: 1.0 }).collect();
    layers.push(Layer::Polyline { points: &gamma, colour: "black", width: 2.0 });
    layers.push(Layer::Dots { points: &ab, colour: "#e08a1e", radius: 6.0 });
    layers.push(Layer::Dots { points: &a, colour: "#c0392b", radius: 4.0 });
    layers.push(Layer::Dots { points: &b, colour: "#27ae60", radius: 2.5 });
    Ok(Svg::render(&format!("deformation at level {level}"), &layers))
}

fn run_deform(inputs: &DeformInputs, grid_args: &GridArgs, job: &JobConfig) -> Result<String, Failure> {
    let Loaded { gamma, a, b, level } = load(inputs)?;
    let grid = deform(&gamma, &a, &b, level, &deform_config(grid_args))?;
    let report = validate(&grid);
    let out = &job.out_dir;
    let files = [
        write_atomic(out, "grid.csv", &grid_csv(&grid))?,
        write_json(out, "report.json", &report)?,
        write_atomic(out, "overlay.svg", overlay(&grid)?.as_bytes())?,
    ];
    if !report.passed {
        return Err(Failure::Tolerance(format!("validation failed: {}; {}", report.failures.join("; "), written(&files))));
    }
    Ok(written(&files))
}

fn run_convolve(
    phi: &Path,
    psi: &Path,
    inputs: &DeformInputs,
    probe: Option<([f64; 2], f64)>,
    cfg: &ConvolveConfig<f64>,
    job: &JobConfig,
) -> Result<String, Failure> {
    let phi: Germ64 = read_json(phi)?;
    let psi: Germ64 = read_json(psi)?;
    let Loaded { gamma, a, b, level } = load(inputs)?;
    let run = convolve_run(&phi, &psi, &gamma, &a, &b, Some(level), cfg)?;
    let mut csv = Csv::new(&["t", "re_gamma", "im_gamma", "re_value", "im_value"]);
    for s in run.trace.samples() {
        csv.row(&[s.t, s.z.re, s.z.im, s.value.re, s.value.im]);
    }
    let mut files = vec![write_atomic(&job.out_dir, "trace.csv", &csv.into_bytes())?];
    if let Some(([re, im], r)) = probe {
        let report = singularity_probe(&phi, &psi, &a, &b, Complex64::new(re, im), r, cfg)?;
        files.push(write_json(&job.out_dir, "probe.json", &report)?);
    }
    Ok(written(&files))
}
