use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fourier_scattering::analysis::{
    diffeo_distance, energy_ledger, estimate_decay, proof_style_bound, signal_census,
    threshold_census, translation_series, BandLimitSpec, WarpField, DEFAULT_THRESHOLD,
};
use fourier_scattering::io::{read_signal, read_tree, write_tree, SignalFormat};
use fourier_scattering::{
    build_frame, build_window_profile, scatter, truncation_set, verify_partition,
    CoefficientStorage, Error, LatticeSpec, ScatterConfig, ScatteringTree, Signal,
    UniformCoveringFrame, Width,
};
use serde_json::{json, Value};

/// Exit status when the frame check fails.
const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "fst",
    version,
    about = "Fourier scattering transform on the periodic grid"
)]
struct Cli {
    /// Worker threads for layer evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scatter a signal and write a run directory.
    Scatter {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        scatter: ScatterArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the partition of unity of a frame.
    VerifyFrame {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        a: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value = "tent")]
        window: String,
        /// Check the tiling of P[M] instead of the full frame.
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Energy ledger and decay estimate.
    Energy {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        scatter: ScatterArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translation and warp stability reports.
    Stability {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        scatter: ScatterArgs,
        /// Integer shift such as `3` or `1,-2`; repeatable.
        #[arg(long = "shift", value_parser = parse_shift)]
        shifts: Vec<Vec<i64>>,
        /// Peak displacement of the sinusoidal warp, in samples.
        #[arg(long, default_value_t = 1.0)]
        warp_amplitude: f64,
        #[arg(long, default_value_t = 1)]
        warp_cycles: usize,
        /// Band-limit radius R in bins (default: a*M).
        #[arg(long)]
        band_radius: Option<f64>,
        /// Band-limit slack (default: the input's measured share outside R).
        #[arg(long)]
        band_eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count coefficients whose norm exceeds a fraction of ||f||.
    Census {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        scatter: ScatterArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Write the census as JSON, or CSV for a `.csv` name.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Signal file (`.pgm`, or raw float64 with a `.json` sidecar).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Existing run directory.
    #[arg(long)]
    run: Option<PathBuf>,
}

#[derive(Args)]
struct FrameArgs {
    /// Grid points per axis (default: from the input).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Lattice spacing in frequency bins.
    #[arg(long, default_value_t = 4)]
    a: usize,
    /// Dimension (default: from the input).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value = "tent")]
    window: String,
}

#[derive(Args)]
struct ScatterArgs {
    /// Width M, or `full` for every band filter.
    #[arg(long = "M", default_value = "8", value_parser = parse_width)]
    m: Width,
    /// Depth K.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 0.0)]
    prune_eps: f64,
    /// Compute one path of each mirror pair (real input only).
    #[arg(long)]
    mirror_halving: bool,
    /// `full`, `energy-only` or `downsample:<k>`.
    #[arg(long, value_parser = parse_storage)]
    storage: Option<CoefficientStorage>,
}

impl ScatterArgs {
    fn config(&self, default_storage: CoefficientStorage) -> ScatterConfig {
        ScatterConfig::new(self.m, self.depth)
            .with_prune_eps(self.prune_eps)
            .with_mirror_halving(self.mirror_halving)
            .with_storage(self.storage.unwrap_or(default_storage))
    }
}

fn parse_width(s: &str) -> Result<Width, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_storage(s: &str) -> Result<CoefficientStorage, String> {
    match s {
        "full" => Ok(CoefficientStorage::Full),
        "energy-only" => Ok(CoefficientStorage::EnergyOnly),
        _ => s
            .strip_prefix("downsample:")
            .and_then(|k| k.parse().ok())
            .map(CoefficientStorage::Downsampled)
            .ok_or_else(|| format!("unknown storage {s:?}")),
    }
}

fn parse_shift(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("bad shift {s:?}")))
        .collect()
}

fn load_input(path: &Path, frame: &FrameArgs) -> Result<(Signal, UniformCoveringFrame), Error> {
    let f = read_signal(path, SignalFormat::from_path(path))?;
    let grid = f.grid();
    let lattice = LatticeSpec::new(
        frame.d.unwrap_or(grid.dim),
        frame.n.unwrap_or(grid.n),
        frame.a,
    )?;
    let frame = build_frame(lattice, build_window_profile(&frame.window)?)?;
    f.check_grid(frame.grid())?;
    Ok((f, frame))
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("report serialises") + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tree_from_source(
    source: &Source,
    frame: &FrameArgs,
    args: &ScatterArgs,
    storage: CoefficientStorage,
) -> Result<ScatteringTree, Error> {
    if let Some(run) = &source.run {
        return Ok(read_tree(run)?.energies());
    }
    let input = source.input.as_ref().expect("clap enforces one source");
    let (f, frame) = load_input(input, frame)?;
    scatter(&f, &frame, &args.config(storage))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Scatter {
            input,
            frame,
            scatter: args,
            out,
        } => {
            let (f, frame) = load_input(&input, &frame)?;
            let tree = scatter(&f, &frame, &args.config(CoefficientStorage::Full))?;
            let manifest = write_tree(&tree, &out, Some(&input.to_string_lossy()))?;
            emit(
                &json!({
                    "out": out,
                    "nodes": manifest.nodes.len(),
                    "computed_per_layer": manifest.computed_per_layer,
                    "input_norm": manifest.input.norm,
                    "tree_norm": tree.norm(),
                }),
                None,
            )?;
        }
        Command::VerifyFrame { n, a, d, window, m } => {
            let lattice = LatticeSpec::new(d, n, a)?;
            let frame = build_frame(lattice, build_window_profile(&window)?)?;
            let set = m.map(|m| truncation_set(&lattice, m)).transpose()?;
            let report = verify_partition(&frame, set.as_ref());
            let passes = report.passes(VERIFY_TOLERANCE);
            emit(
                &json!({
                    "frame": frame.spec(),
                    "M": m,
                    "max_deviation": report.max_deviation,
                    "argmax_frequency": report.argmax_frequency,
                    "tolerance": VERIFY_TOLERANCE,
                    "passes": passes,
                }),
                None,
            )?;
            if !passes {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Energy {
            source,
            frame,
            scatter: args,
            out,
        } => {
            let tree = tree_from_source(&source, &frame, &args, CoefficientStorage::EnergyOnly)?;
            let ledger = energy_ledger(&tree);
            let decay = estimate_decay(&ledger);
            let lattice = LatticeSpec::new(tree.frame.d, tree.frame.n, tree.frame.a)?;
            emit(
                &json!({
                    "frame": tree.frame,
                    "config": tree.config,
                    "ledger": ledger,
                    "decay": decay,
                    "proof_style_bound": proof_style_bound(&lattice),
                }),
                out.as_deref(),
            )?;
        }
        Command::Stability {
            input,
            frame,
            scatter: args,
            shifts,
            warp_amplitude,
            warp_cycles,
            band_radius,
            band_eps,
            out,
        } => {
            let (f, frame) = load_input(&input, &frame)?;
            let config = args.config(CoefficientStorage::Full);
            let dim = frame.grid().dim;
            let shifts = if shifts.is_empty() {
                [1, 2, 4]
                    .iter()
                    .map(|&s| {
                        let mut y = vec![0; dim];
                        y[0] = s;
                        y
                    })
                    .collect()
            } else {
                shifts
            };
            let translation = translation_series(&f, &shifts, &frame, &config)?;
            let reach = match args.m {
                Width::Truncated(m) => (m * frame.lattice().spacing()) as f64,
                Width::Full => (frame.grid().n / 2) as f64,
            };
            let radius = band_radius.unwrap_or(reach);
            let spec = match band_eps {
                Some(eps) => BandLimitSpec::new(eps, radius)?,
                None => BandLimitSpec::measured(&f, radius)?,
            };
            let field = WarpField::sinusoidal(frame.grid(), warp_amplitude, warp_cycles)?;
            let diffeo = diffeo_distance(&f, &field, &frame, &config, spec)?;
            emit(
                &json!({ "translation": translation, "diffeomorphism": diffeo }),
                out.as_deref(),
            )?;
        }
        Command::Census {
            source,
            frame,
            scatter: args,
            threshold,
            out,
        } => {
            let census = match &source.input {
                Some(input) => {
                    let (f, frame) = load_input(input, &frame)?;
                    let mut config = args.config(CoefficientStorage::EnergyOnly);
                    config.mirror_halving |= f.is_real();
                    config.frontier_energy = false;
                    signal_census(&f, &frame, &config, threshold)?
                }
                None => threshold_census(
                    &tree_from_source(&source, &frame, &args, CoefficientStorage::EnergyOnly)?,
                    threshold,
                )?,
            };
            println!("{}", census.survivors_line());
            if let Some(p) = out {
                let text = if p.extension().is_some_and(|e| e == "csv") {
                    census.to_csv()
                } else {
                    serde_json::to_string_pretty(&census.to_json()).expect("census serialises")
                        + "\n"
                };
                fs::write(&p, text).map_err(|source| Error::Io {
                    path: p.clone(),
                    source,
                })?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string() }));
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let kind = match e {
                Error::Config(_) => "configuration",
                Error::Precondition(_) => "precondition",
                Error::ShapeMismatch { .. } => "shape-mismatch",
                Error::Format { .. } | Error::Digest(_) | Error::Json { .. } => "format",
                Error::Io { .. } => "io",
                _ => "runtime",
            };
            eprintln!("{}", json!({ "error": kind, "message": e.to_string() }));
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
