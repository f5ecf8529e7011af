//! Command-line front end.
//!
//! Every run is first resolved into a [`RunConfig`] with all defaults filled
//! in. The config is written to `manifest.json` next to the outputs, and
//! feeding that file back through `--config` repeats the run exactly.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::density::{
    compare_densities, default_probe_levels, smoothness_probe, DensityGrid, GridGeometry, HeatmapField, Histogram,
    ProbeThresholds,
};
use crate::error::{Error, Result};
use crate::model::{ExampleParams, Mode, SwitchingSystem, SystemSpec, EXAMPLE_NAMES};
use crate::norm::StateSpace;
use crate::reach::{compute_gamma, default_gamma_box, GammaOptions, GammaSeed};
use crate::rng::SeedSpec;
use crate::simulate::{chain_ensemble, default_burn_in, default_stride, ensemble, simulate_pdmp, EnsembleConfig, Sampling};
use crate::theory::{
    qdelta_search, regularity_threshold, submersion_anchor, submersion_scan, DEFAULT_ETA, DEFAULT_FD_ACCURACY,
    DEFAULT_FD_STEP,
};
use crate::ulam::{ulam_invariant, UlamOptions};

#[derive(Debug, Parser)]
#[command(name = "pdmp-lab", version, about = "Random switching between two stable linear flows")]
pub struct Cli {
    /// Master seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default `pdmp-out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Repeat the run recorded in a manifest (or a bare run config).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Built-in system: malrieu, bhlm or vandermonde3.
    #[arg(long)]
    pub example: Option<String>,
    /// First diagonal rate of bhlm.
    #[arg(long)]
    pub l1: Option<f64>,
    /// Second diagonal rate of bhlm.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Diagonal rates of vandermonde3, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Switching rates alpha01 alpha10.
    #[arg(long, num_args = 2, value_names = ["ALPHA01", "ALPHA10"])]
    pub rates: Option<Vec<f64>>,
    /// JSON system description, explicit or named.
    #[arg(long, conflicts_with = "example")]
    pub system: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoxArgs {
    /// Lower corner of the grid box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "hi")]
    pub lo: Option<Vec<f64>>,
    /// Upper corner of the grid box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "lo")]
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    /// Sampling time per chain after burn-in.
    #[arg(long, conflicts_with = "samples")]
    pub t_max: Option<f64>,
    /// Total number of samples across chains.
    #[arg(long)]
    pub samples: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub chains: usize,
    /// Burn-in time (default 20 / min(|Λ_d|, α01, α10)).
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Sampling stride (default 0.1 / max rate).
    #[arg(long)]
    pub stride: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One trajectory as CSV.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        /// Initial point (default origin).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        i0: u8,
        /// Extra rows every `stride` time units.
        #[arg(long)]
        stride: Option<f64>,
    },
    /// Grid histogram of the invariant densities.
    Density {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[command(flatten)]
        bounds: BoxArgs,
    },
    /// Grid approximation of the accessible set.
    Gamma {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[command(flatten)]
        bounds: BoxArgs,
        /// Start from `origin` or `p`.
        #[arg(long, default_value = "origin")]
        from: String,
        /// Extra seed point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2)]
        reps: u8,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        t_horizon: Option<f64>,
    },
    /// Sup-density growth under grid refinement near a point.
    Probe {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Probe centre (default origin).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        /// Cell sizes, coarsest first (default 1/8, …, 1/128).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Rate threshold, parameter certificate and submersion checks.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Ulam discretisation of the induced chain.
    Ulam {
        #[command(flatten)]
        system: SystemArgs,
        /// Clock rate of the induced chain (default 4 × max rate).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[command(flatten)]
        bounds: BoxArgs,
        #[arg(long, default_value_t = 1000)]
        samples_per_cell: usize,
        /// Chain steps per discretised transition.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Chain samples for a Monte Carlo comparison (0 skips it).
        #[arg(long, default_value_t = 0.0)]
        compare: f64,
        #[arg(long, default_value_t = 8)]
        chains: usize,
    },
    /// List the built-in systems.
    Examples {
        /// Also write one JSON file per system.
        #[arg(long)]
        emit: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Rate threshold for C^r densities.
    Threshold {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 0)]
        r: u32,
    },
    /// Parameters of the P^n = Q + Δ split.
    Certificate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 0)]
        r: u32,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
    },
    /// Submersion determinant checks.
    Submersion {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_FD_ACCURACY)]
        accuracy: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Random offsets are drawn from (0, t_max).
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
    },
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Task {
    Simulate {
        system: SystemSpec,
        t_max: f64,
        x0: Vec<f64>,
        i0: Mode,
        stride: Option<f64>,
    },
    Density {
        system: SystemSpec,
        ensemble: EnsembleConfig,
        grid: GridGeometry,
    },
    Gamma {
        system: SystemSpec,
        grid: GridGeometry,
        options: GammaOptions,
    },
    Probe {
        system: SystemSpec,
        center: Vec<f64>,
        levels: Vec<f64>,
        ensemble: EnsembleConfig,
        thresholds: ProbeThresholds,
    },
    Threshold {
        system: SystemSpec,
        r: u32,
    },
    Certificate {
        system: SystemSpec,
        r: u32,
        eta: f64,
    },
    Submersion {
        system: SystemSpec,
        step: f64,
        accuracy: usize,
        draws: usize,
        t_max: f64,
    },
    Ulam {
        system: SystemSpec,
        alpha: f64,
        grid: GridGeometry,
        options: UlamOptions,
        compare_samples: u64,
        compare_chains: usize,
    },
    Examples {
        emit: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub artifacts: Vec<String>,
}

impl SystemArgs {
    fn resolve(&self) -> Result<SystemSpec> {
        let mut spec = match (&self.system, &self.example) {
            (Some(path), _) => SystemSpec::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => {
                if !EXAMPLE_NAMES.contains(&name.as_str()) {
                    return Err(Error::invalid(format!(
                        "unknown example '{name}' (expected one of {EXAMPLE_NAMES:?})"
                    )));
                }
                SystemSpec::Example {
                    example: name.clone(),
                    params: ExampleParams::default(),
                }
            }
            (None, None) => return Err(Error::invalid("choose a system with --example or --system")),
        };
        match &mut spec {
            SystemSpec::Example { params, .. } => {
                if self.l1.is_some() {
                    params.l1 = self.l1;
                }
                if self.l2.is_some() {
                    params.l2 = self.l2;
                }
                if self.lambdas.is_some() {
                    params.lambdas = self.lambdas.clone();
                }
                if let Some(r) = &self.rates {
                    params.alpha01 = Some(r[0]);
                    params.alpha10 = Some(r[1]);
                }
            }
            SystemSpec::Explicit { alpha01, alpha10, .. } => {
                if self.l1.is_some() || self.l2.is_some() || self.lambdas.is_some() {
                    return Err(Error::invalid("--l1, --l2 and --lambdas only apply to built-in examples"));
                }
                if let Some(r) = &self.rates {
                    *alpha01 = r[0];
                    *alpha10 = r[1];
                }
            }
        }
        spec.build()?;
        Ok(spec)
    }
}

fn example_name(spec: &SystemSpec) -> Option<&str> {
    match spec {
        SystemSpec::Example { example, .. } => Some(example),
        SystemSpec::Explicit { .. } => None,
    }
}

/// Explicit box, the built-in view box for planar examples, or the bounding
/// box of `M` inflated by 10%.
fn resolve_box(spec: &SystemSpec, sys: &SwitchingSystem, bounds: &BoxArgs, n: usize) -> Result<GridGeometry> {
    if let (Some(lo), Some(hi)) = (&bounds.lo, &bounds.hi) {
        if lo.len() != sys.dim() || hi.len() != sys.dim() {
            return Err(Error::invalid(format!("--lo and --hi need {} entries", sys.dim())));
        }
        return GridGeometry::cube(lo, hi, n);
    }
    if let Some((lo, hi)) = example_name(spec).and_then(default_gamma_box) {
        return GridGeometry::cube(&lo, &hi, n);
    }
    let m = StateSpace::for_system(sys)?;
    let (lo, hi) = m.bounding_box(1.1);
    GridGeometry::cube(&lo, &hi, n)
}

fn resolve_ensemble(sys: &SwitchingSystem, args: &EnsembleArgs, default_samples: f64, seed: u64) -> Result<EnsembleConfig> {
    if args.chains == 0 {
        return Err(Error::invalid("--chains must be at least 1"));
    }
    let stride = args.stride.unwrap_or_else(|| default_stride(sys));
    let t_max = match args.t_max {
        Some(t) => t,
        None => {
            let total = args.samples.unwrap_or(default_samples);
            if !(total >= 1.0 && total.is_finite()) {
                return Err(Error::invalid("--samples must be at least 1"));
            }
            let per_chain = (total / args.chains as f64).ceil();
            (per_chain + 0.5) * stride
        }
    };
    Ok(EnsembleConfig {
        n_chains: args.chains,
        t_max,
        burn_in: args.burn_in.unwrap_or_else(|| default_burn_in(sys)),
        sampling: Sampling::TimeAveraged { stride },
        x0: None,
        i0: Mode::Zero,
        seed: SeedSpec::new(seed, 0),
    })
}

fn resolve(command: &Command, seed: u64) -> Result<RunConfig> {
    let task = match command {
        Command::Simulate {
            system,
            t_max,
            x0,
            i0,
            stride,
        } => {
            let spec = system.resolve()?;
            let sys = spec.build()?;
            Task::Simulate {
                system: spec,
                t_max: *t_max,
                x0: x0.clone().unwrap_or_else(|| vec![0.0; sys.dim()]),
                i0: Mode::from_index(*i0 as usize)?,
                stride: *stride,
            }
        }
        Command::Density {
            system,
            ensemble,
            grid,
            bounds,
        } => {
            let spec = system.resolve()?;
            let sys = spec.build()?;
            Task::Density {
                grid: resolve_box(&spec, &sys, bounds, *grid)?,
                ensemble: resolve_ensemble(&sys, ensemble, 1e6, seed)?,
                system: spec,
            }
        }
        Command::Gamma {
            system,
            grid,
            bounds,
            from,
            point,
            reps,
            step,
            t_horizon,
        } => {
            let spec = system.resolve()?;
            let sys = spec.build()?;
            let seed_point = match (point, from.as_str()) {
                (Some(x), _) => GammaSeed::Point(x.clone()),
                (None, "origin") => GammaSeed::Origin,
                (None, "p") => GammaSeed::P,
                (None, other) => return Err(Error::invalid(format!("--from must be origin or p, got '{other}'"))),
            };
            Task::Gamma {
                grid: resolve_box(&spec, &sys, bounds, *grid)?,
                options: GammaOptions {
                    step: *step,
                    t_horizon: *t_horizon,
                    reps_per_cell: *reps,
                    seed: seed_point,
                },
                system: spec,
            }
        }
        Command::Probe {
            system,
            ensemble,
            center,
            levels,
        } => {
            let spec = system.resolve()?;
            let sys = spec.build()?;
            Task::Probe {
                center: center.clone().unwrap_or_else(|| vec![0.0; sys.dim()]),
                levels: levels.clone().unwrap_or_else(default_probe_levels),
                ensemble: resolve_ensemble(&sys, ensemble, 1e7, seed)?,
                thresholds: ProbeThresholds::default(),
                system: spec,
            }
        }
        Command::Theory(TheoryCommand::Threshold { system, r }) => Task::Threshold {
            system: system.resolve()?,
            r: *r,
        },
        Command::Theory(TheoryCommand::Certificate { system, r, eta }) => Task::Certificate {
            system: system.resolve()?,
            r: *r,
            eta: *eta,
        },
        Command::Theory(TheoryCommand::Submersion {
            system,
            step,
            accuracy,
            draws,
            t_max,
        }) => Task::Submersion {
            system: system.resolve()?,
            step: *step,
            accuracy: *accuracy,
            draws: *draws,
            t_max: *t_max,
        },
        Command::Ulam {
            system,
            alpha,
            grid,
            bounds,
            samples_per_cell,
            steps,
            compare,
            chains,
        } => {
            let spec = system.resolve()?;
            let sys = spec.build()?;
            if !(*compare >= 0.0 && compare.is_finite()) {
                return Err(Error::invalid("--compare must be a nonnegative count"));
            }
            Task::Ulam {
                alpha: alpha.unwrap_or(4.0 * sys.max_rate()),
                grid: resolve_box(&spec, &sys, bounds, *grid)?,
                options: UlamOptions {
                    steps_per_transition: *steps,
                    ..UlamOptions::new(*samples_per_cell, SeedSpec::new(seed, 0))
                },
                compare_samples: *compare as u64,
                compare_chains: (*chains).max(1),
                system: spec,
            }
        }
        Command::Examples { emit } => Task::Examples { emit: *emit },
    };
    Ok(RunConfig { seed, task })
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn grid_csv(&mut self, stem: &str, grid: &DensityGrid) -> Result<()> {
        if grid.geometry.dim() == 2 {
            let mut w = self.file(&format!("{stem}.csv"))?;
            grid.write_csv(&mut w)?;
            w.flush()?;
        } else {
            let mut w = self.file(&format!("{stem}_index.csv"))?;
            grid.write_index_csv(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ExampleEntry {
    name: &'static str,
    description: &'static str,
    system: SystemSpec,
}

fn example_entries() -> Result<Vec<ExampleEntry>> {
    let text = [
        ("malrieu", "A = [[-1,-1],[1,-1]], p = (1,0)"),
        ("bhlm", "A = diag(-l1,-l2), p = (1,1), l1 = 2, l2 = 1"),
        ("vandermonde3", "A = diag(-3,-2,-1), p = (1,1,1)"),
    ];
    text.iter()
        .map(|&(name, description)| {
            let named = SystemSpec::Example {
                example: name.to_string(),
                params: ExampleParams::default(),
            };
            Ok(ExampleEntry {
                name,
                description,
                system: named.build()?.to_spec(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SubmersionReport {
    independence: crate::linalg::VandermondeCheck,
    anchor: crate::theory::SubmersionAnchor,
    scan: crate::theory::SubmersionScan,
}

/// Executes a resolved run, writing outputs into `dir`. Returns the names of
/// the files written, in order.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Outputs {
        dir: dir.to_path_buf(),
        written: Vec::new(),
    };
    let seed = SeedSpec::new(cfg.seed, 0);
    match &cfg.task {
        Task::Simulate {
            system,
            t_max,
            x0,
            i0,
            stride,
        } => {
            let sys = system.build()?;
            let traj = simulate_pdmp(&sys, &DVector::from_column_slice(x0), *i0, *t_max, seed)?;
            let mut w = out.file("trajectory.csv")?;
            traj.write_csv(&sys, *stride, &mut w)?;
            w.flush()?;
        }
        Task::Density { system, ensemble: ens, grid } => {
            let sys = system.build()?;
            let h: Histogram = ensemble(&sys, ens, || Histogram::new(grid.clone()))?;
            let dens = h.finish()?;
            out.grid_csv("density", &dens)?;
            let mut scales = Vec::new();
            if grid.dim() == 2 {
                for (field, name) in [
                    (HeatmapField::Rho0, "density_rho0.pgm"),
                    (HeatmapField::Rho1, "density_rho1.pgm"),
                    (HeatmapField::Total, "density_total.pgm"),
                ] {
                    let (img, scale) = dens.heatmap(field)?;
                    let mut w = out.file(name)?;
                    img.write(&mut w)?;
                    w.flush()?;
                    scales.push(scale);
                }
            }
            out.json(
                "density.json",
                &serde_json::json!({ "grid": dens.sidecar(), "heatmaps": scales }),
            )?;
        }
        Task::Gamma { system, grid, options } => {
            let sys = system.build()?;
            let res = compute_gamma(&sys, grid, options)?;
            if grid.dim() == 2 {
                let mut w = out.file("gamma.pgm")?;
                res.region.to_pgm()?.write(&mut w)?;
                w.flush()?;
            }
            let mut w = out.file("gamma_cells.csv")?;
            res.region.write_index_csv(&mut w)?;
            w.flush()?;
            out.json(
                "gamma.json",
                &serde_json::json!({
                    "stats": res.stats,
                    "interior_cells": res.region.interior().count(),
                    "components": res.region.components(),
                    "geometry": res.region.geometry,
                }),
            )?;
        }
        Task::Probe {
            system,
            center,
            levels,
            ensemble: ens,
            thresholds,
        } => {
            let sys = system.build()?;
            let probe = smoothness_probe(&sys, &DVector::from_column_slice(center), levels, ens, *thresholds)?;
            out.json("probe.json", &probe)?;
        }
        Task::Threshold { system, r } => {
            let sys = system.build()?;
            out.json("threshold.json", &regularity_threshold(&sys, *r))?;
        }
        Task::Certificate { system, r, eta } => {
            let sys = system.build()?;
            out.json("certificate.json", &qdelta_search(&sys, *r, *eta)?)?;
        }
        Task::Submersion {
            system,
            step,
            accuracy,
            draws,
            t_max,
        } => {
            let sys = system.build()?;
            let report = SubmersionReport {
                independence: sys.independence(),
                anchor: submersion_anchor(sys.a(), sys.p(), *step, *accuracy)?,
                scan: submersion_scan(&sys, *draws, *t_max, 1e-12, seed)?,
            };
            out.json("submersion.json", &report)?;
        }
        Task::Ulam {
            system,
            alpha,
            grid,
            options,
            compare_samples,
            compare_chains,
        } => {
            let sys = system.build()?;
            let res = ulam_invariant(&sys, *alpha, grid, options)?;
            out.grid_csv("ulam_pi", &res.pi)?;
            out.grid_csv("ulam_big_pi", &res.big_pi)?;
            let l1 = if *compare_samples > 0 {
                let per_chain = compare_samples.div_ceil(*compare_chains as u64);
                let burn = (default_burn_in(&sys) * alpha).ceil() as u64;
                let h: Histogram = chain_ensemble(
                    &sys,
                    *alpha,
                    *compare_chains,
                    per_chain,
                    burn,
                    seed.with_stream(1 << 32),
                    || Histogram::new(grid.clone()),
                )?;
                Some(compare_densities(&res.pi, &h.finish()?)?)
            } else {
                None
            };
            out.json(
                "ulam.json",
                &serde_json::json!({
                    "alpha": res.alpha,
                    "sweeps": res.sweeps,
                    "residual": res.residual,
                    "leaked": res.leaked,
                    "mode_masses": res.pi.mode_masses(),
                    "stationary_modes": sys.stationary_modes(),
                    "l1_vs_chain_histogram": l1,
                }),
            )?;
        }
        Task::Examples { emit } => {
            let entries = example_entries()?;
            // a closed pipe on stdout is not an error
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&entries)?);
            if *emit {
                for e in &entries {
                    out.json(&format!("{}.json", e.name), &e.system)?;
                }
            }
        }
    }
    let manifest = Manifest {
        tool: "pdmp-lab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        artifacts: out.written.clone(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(out.written)
}

/// Reads a manifest or a bare run config.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = value.get("config").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner)?)
}

fn run_parsed(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot set up {n} threads: {e}")))?;
    }
    let cfg = match (&cli.config, &cli.command) {
        (Some(path), None) => load_config(path)?,
        (None, Some(cmd)) => resolve(cmd, cli.seed.unwrap_or(0))?,
        (Some(_), Some(_)) => return Err(Error::invalid("--config replaces the subcommand; give one or the other")),
        (None, None) => return Err(Error::invalid("no subcommand given; see --help")),
    };
    if cli.config.is_some() {
        if let Some(s) = cli.seed {
            if s != cfg.seed {
                return Err(Error::invalid("--seed conflicts with the seed recorded in --config"));
            }
        }
    }
    let dir = cli.out.unwrap_or_else(|| PathBuf::from("pdmp-out"));
    let mut stdout = std::io::stdout().lock();
    for name in execute(&cfg, &dir)? {
        let _ = writeln!(stdout, "{}", dir.join(name).display());
    }
    Ok(())
}

/// Entry point: parses `args` and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
