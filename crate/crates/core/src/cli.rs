//! `qgraph` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::control::{solve_null_control, ControlReport};
use crate::error::{Error, Result};
use crate::feller::decide_feller;
use crate::graph::MetricGraph;
use crate::io::{self, Manifest};
use crate::noise::NoiseModel;
use crate::spectral::{assemble, eigensolve, EigenSystem};
use crate::stochastic::{
    invariant_measure_check, regularity_profile, simulate, verify_covariance, SimConfig,
};
use crate::tree::{path_union_by_id, st_active_set};

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Kirchhoff-noise heat equations on metric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct GraphArgs {
    /// Graph description (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Elements per edge.
    #[arg(long, default_value_t = 256)]
    pub mesh: usize,
    /// Number of eigenmodes `K`.
    #[arg(long, default_value_t = 50)]
    pub modes: usize,
    /// Output directory; the manifest and all tables land here.
    #[arg(long, default_value = "qgraph-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct NoiseArgs {
    /// `diag:v1=1,v2=1`, an inline JSON object, or a JSON file.
    #[arg(long)]
    pub noise: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, clusters and vertex traces.
    Spectrum {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Strong Feller verdict.
    Feller {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Minimal-norm null control for the first `K` modes.
    Control {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Initial spectral coefficients, comma separated.
        #[arg(long, default_value = "1")]
        z0: String,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        /// Control intervals on `[0, T]`.
        #[arg(long, default_value_t = 200)]
        time_grid: usize,
    },
    /// Path union of a tree and its single-track active set.
    StActive {
        #[arg(long)]
        graph: PathBuf,
        /// Boundary vertex that starts no path.
        #[arg(long)]
        omit: Option<String>,
        #[arg(long, default_value = "qgraph-out")]
        out: PathBuf,
    },
    /// Invariant measure criterion.
    Invariant {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
    },
    /// Monte-Carlo ensemble, covariance check and regularity profile.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value = "")]
        z0: String,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "0.0,0.2,0.3")]
        alpha: String,
        /// Recorded time points besides `t = 0`.
        #[arg(long, default_value_t = 20)]
        record: usize,
        /// Also write every sample path.
        #[arg(long)]
        raw: bool,
        #[arg(long, env = "QGRAPH_THREADS")]
        threads: Option<usize>,
    },
}

fn positive(name: &str, x: usize) -> Result<()> {
    if x == 0 {
        return Err(Error::Invalid(format!("--{name} must be positive")));
    }
    Ok(())
}

fn spectrum_for(args: &GraphArgs) -> Result<(MetricGraph, EigenSystem)> {
    if args.mesh < 2 {
        return Err(Error::Invalid("--mesh must be at least 2".into()));
    }
    positive("modes", args.modes)?;
    let graph = io::read_graph(&args.graph)?;
    let op = assemble(&graph, args.mesh)?;
    if args.modes > op.dim() {
        return Err(Error::Invalid(format!("--modes {} exceeds the {} dofs", args.modes, op.dim())));
    }
    let eig = eigensolve(&op, args.modes)?;
    Ok((graph, eig))
}

fn noise_for(args: &NoiseArgs, graph: &MetricGraph) -> Result<NoiseModel> {
    io::parse_noise(&args.noise, graph)
}

fn create(dir: &Path, name: &str, manifest: &mut Manifest) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    manifest.outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &Value, manifest: &mut Manifest) -> Result<()> {
    let mut f = create(dir, name, manifest)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(())
}

fn spectrum_json(eig: &EigenSystem, graph: &MetricGraph) -> Value {
    let modes: Vec<Value> = eig
        .modes
        .iter()
        .enumerate()
        .map(|(k, m)| json!({ "k": k, "lambda": m.lambda, "cluster_id": eig.cluster_of(k), "trusted": m.trusted, "traces": m.traces }))
        .collect();
    let clusters: Vec<Value> = eig
        .clusters
        .iter()
        .map(|c| json!({ "value": c.value, "multiplicity": c.members.len(), "members": c.members, "trusted": c.trusted }))
        .collect();
    json!({ "vertices": graph.vertices(), "modes": modes, "clusters": clusters, "trusted_modes": eig.trusted_count() })
}

fn control_json(r: &ControlReport) -> Value {
    json!({
        "terminal_norm": r.terminal_norm,
        "uncontrolled_norm": r.uncontrolled_norm,
        "control_norm": r.control_norm,
        "reachable_residual": r.reachable_residual,
        "moment_residual": r.moment_residual,
        "uncontrolled": r.uncontrolled,
        "unreachable": r.unreachable,
        "gram_rank": r.rank,
        "gram_dropped": r.dropped,
    })
}

/// Prints to stdout; a closed pipe (`| head`) is not an error.
fn emit(v: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Runs one subcommand; the manifest is written even when it fails.
pub fn run(cli: Cli) -> i32 {
    let (name, out, config) = describe(&cli.command);
    let mut manifest = Manifest::new(name, config);
    let result = execute(&cli.command, &out, &mut manifest);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            manifest.status = format!("error[{}]: {e}", e.kind());
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    if let Err(e) = manifest.write(&out) {
        eprintln!("error: could not write manifest: {e}");
        return if code == 0 { 2 } else { code };
    }
    code
}

fn describe(cmd: &Command) -> (&'static str, PathBuf, Value) {
    match cmd {
        Command::Spectrum { graph } => ("spectrum", graph.out.clone(), json!({ "graph": graph })),
        Command::Feller { graph, noise } => ("feller", graph.out.clone(), json!({ "graph": graph, "noise": noise.noise })),
        Command::Control { graph, noise, z0, t, time_grid } => (
            "control",
            graph.out.clone(),
            json!({ "graph": graph, "noise": noise.noise, "z0": z0, "T": t, "time_grid": time_grid }),
        ),
        Command::StActive { graph, omit, out } => ("st-active", out.clone(), json!({ "graph": graph, "omit": omit })),
        Command::Invariant { graph, noise, t } => {
            ("invariant", graph.out.clone(), json!({ "graph": graph, "noise": noise.noise, "T": t }))
        }
        Command::Simulate { graph, noise, z0, t, steps, samples, seed, alpha, record, raw, threads } => (
            "simulate",
            graph.out.clone(),
            json!({
                "graph": graph, "noise": noise.noise, "z0": z0, "T": t, "steps": steps, "samples": samples,
                "seed": seed, "alpha": alpha, "record": record, "raw": raw, "threads": threads,
                "rng": "ChaCha8, seeded from the master seed, stream = sample index",
            }),
        ),
    }
}

fn execute(cmd: &Command, out: &Path, manifest: &mut Manifest) -> Result<()> {
    match cmd {
        Command::Spectrum { graph: args } => {
            let (graph, eig) = spectrum_for(args)?;
            match args.format {
                Format::Csv => {
                    io::write_spectrum_csv(create(out, "spectrum.csv", manifest)?, &eig, &graph)?;
                    io::write_eigenfunctions_csv(create(out, "eigenfunctions.csv", manifest)?, &eig, &graph, args.mesh)?;
                    io::write_spectrum_csv(std::io::stdout().lock(), &eig, &graph)?;
                }
                Format::Json => {
                    let v = spectrum_json(&eig, &graph);
                    write_json(out, "spectrum.json", &v, manifest)?;
                    emit(&v)?;
                }
            }
        }
        Command::Feller { graph: args, noise } => {
            let (graph, eig) = spectrum_for(args)?;
            let q = noise_for(noise, &graph)?;
            let v = decide_feller(&graph, &eig, &q)?.to_json();
            write_json(out, "feller.json", &v, manifest)?;
            emit(&v)?;
        }
        Command::Control { graph: args, noise, z0, t, time_grid } => {
            positive("time-grid", *time_grid)?;
            let (graph, eig) = spectrum_for(args)?;
            let q = noise_for(noise, &graph)?;
            let z0 = io::parse_list(z0)?;
            let report = solve_null_control(&eig, &q, &z0, *t, args.modes, *time_grid)?;
            io::write_control_csv(create(out, "control.csv", manifest)?, &report, &graph)?;
            let v = control_json(&report);
            write_json(out, "control.json", &v, manifest)?;
            emit(&v)?;
        }
        Command::StActive { graph, omit, .. } => {
            let g = io::read_graph(graph)?;
            let pu = path_union_by_id(&g, omit.as_deref())?;
            let st = st_active_set(&pu, &g)?;
            let ids = |s: &std::collections::BTreeSet<usize>| s.iter().map(|&v| g.vertex_id(v).to_string()).collect::<Vec<_>>();
            let v = json!({
                "path_union": pu.to_json(&g),
                "i_star": ids(&st.i_star),
                "j_star": st.j_star.iter().map(|&e| g.edge(e).id.clone()).collect::<Vec<_>>(),
            });
            write_json(out, "st-active.json", &v, manifest)?;
            emit(&v)?;
        }
        Command::Invariant { graph: args, noise, t } => {
            let (graph, eig) = spectrum_for(args)?;
            let q = noise_for(noise, &graph)?;
            let trusted = eig.trusted_count();
            let report = invariant_measure_check(&graph, &eig.truncate(trusted.max(1)), &q, *t)?;
            let v = serde_json::to_value(&report)?;
            write_json(out, "invariant.json", &v, manifest)?;
            emit(&v)?;
        }
        Command::Simulate { graph: args, noise, z0, t, steps, samples, seed, alpha, record, raw, threads } => {
            positive("steps", *steps)?;
            positive("samples", *samples)?;
            positive("record", *record)?;
            let (graph, eig) = spectrum_for(args)?;
            let q = noise_for(noise, &graph)?;
            if eig.modes[..args.modes].iter().any(|m| !m.trusted) {
                return Err(Error::SpectrumTooCoarse);
            }
            let z0 = io::parse_list(z0)?;
            let alphas = io::parse_list(alpha)?;
            let cfg = SimConfig {
                t: *t,
                steps: *steps,
                samples: *samples,
                seed: *seed,
                modes: args.modes,
                record_every: steps.div_ceil(*record).max(1),
                threads: *threads,
            };
            let ens = simulate(&eig, &q, &z0, &cfg)?;
            let cov = verify_covariance(&ens, &eig, &q)?;
            let reg = regularity_profile(&eig.truncate(args.modes), &q, *t, &alphas)?;
            io::write_ensemble_summary_csv(create(out, "summary.csv", manifest)?, &ens)?;
            io::write_regularity_csv(create(out, "regularity.csv", manifest)?, &reg)?;
            if *raw {
                io::write_ensemble_csv(create(out, "ensemble.csv", manifest)?, &ens)?;
            }
            let worst = cov.worst().cloned();
            let v = json!({
                "samples": ens.samples,
                "times": ens.times,
                "jitter": ens.jitter,
                "max_standardized_deviation": cov.max_deviation,
                "max_mean_deviation": cov.max_mean_deviation,
                "worst": worst,
                "regularity": reg.profiles.iter().map(|p| json!({
                    "alpha": p.alpha, "slope": p.slope, "convergent": p.convergent,
                    "partial_sum": p.partial_sums.last(),
                })).collect::<Vec<_>>(),
            });
            write_json(out, "covariance.json", &serde_json::to_value(&cov)?, manifest)?;
            write_json(out, "simulate.json", &v, manifest)?;
            emit(&v)?;
        }
    }
    Ok(())
}
