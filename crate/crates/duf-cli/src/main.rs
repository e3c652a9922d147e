//! `duf`: decode surface-code syndromes with serial and distributed
//! union-find engines, sweep configurations, and replay recorded trials.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use duf_sim::distributed::TraceEvent;
use duf_sim::experiment::{
    rows_to_csv, run_experiment_recorded, run_single_shot, sweep, ExperimentConfig, Mode,
    NoiseSpec, SweepRow, DEFAULT_CLOCK_NS, DEFAULT_P, DEFAULT_TRIALS,
};
use duf_sim::record::{read_records, replay, write_records, RecordHeader};

#[derive(Parser)]
#[command(
    name = "duf",
    version,
    about = "Union-find decoding of rotated surface codes: serial reference, staged and cycle-accurate distributed simulations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decode a single sampled shot and print the outcome as JSON.
    Decode(DecodeArgs),
    /// Sweep configurations and emit a CSV or JSON report.
    Bench(BenchArgs),
    /// Cross-check serial, staged and synchronous engines trial by trial.
    Verify(VerifyArgs),
    /// Re-decode trials from a recorded JSON-lines syndrome file.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct NoiseArgs {
    /// Physical error rate per edge (uniform mode).
    #[arg(long, default_value_t = DEFAULT_P)]
    p: f64,
    /// Draw per-edge error probabilities instead of a uniform rate.
    #[arg(long)]
    weighted: bool,
    /// Mean of the per-edge probability distribution (weighted mode).
    #[arg(long, default_value_t = 0.001)]
    mean: f64,
    /// Standard deviation of the per-edge distribution (weighted mode).
    #[arg(long, default_value_t = 0.0005)]
    stddev: f64,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, default_value_t = 5)]
    d: u32,
    /// Measurement rounds; defaults to d.
    #[arg(long)]
    rounds: Option<u32>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Weight resolution in weighted mode.
    #[arg(long, default_value_t = 16)]
    wmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// serial | staged | sync | verify
    #[arg(long, default_value = "sync")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_CLOCK_NS)]
    clock_ns: f64,
    /// Stream register changes (cycle,vertex_id,field,old,new) to stderr.
    #[arg(long)]
    trace: bool,
    /// Write the decoding graph as JSON to this path.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Record the shot as a JSON-lines file for replay.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Write the JSON outcome here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Code distances, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,9,13")]
    d: Vec<u32>,
    /// Measurement rounds; defaults to d.
    #[arg(long)]
    rounds: Option<u32>,
    /// Error rates, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    p: Vec<f64>,
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = 0.001)]
    mean: f64,
    #[arg(long, default_value_t = 0.0005)]
    stddev: f64,
    /// Weight resolutions (weighted mode), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    wmax: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// serial | staged | sync | verify
    #[arg(long, default_value = "sync")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_CLOCK_NS)]
    clock_ns: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Write every trial of the sweep as JSON-lines records; sweeps with a
    /// single config only.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,5")]
    d: Vec<u32>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    p: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CLOCK_NS)]
    clock_ns: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct ReplayArgs {
    /// JSON-lines record file (header line + one line per trial).
    file: PathBuf,
    /// Decode in this mode instead of the recorded one.
    #[arg(long)]
    mode: Option<String>,
    /// Stream register changes to stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Decode(args) => decode(args),
        Cmd::Bench(args) => bench(args),
        Cmd::Verify(args) => verify(args),
        Cmd::Replay(args) => replay_cmd(args),
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    s.parse::<Mode>().map_err(anyhow::Error::from)
}

fn noise_spec(noise: &NoiseArgs, wmax: u32) -> NoiseSpec {
    if noise.weighted {
        NoiseSpec::Weighted {
            mean: noise.mean,
            stddev: noise.stddev,
            w_max: wmax,
        }
    } else {
        NoiseSpec::Uniform { p: noise.p }
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn trace_to_stderr() -> impl FnMut(TraceEvent) {
    |e: TraceEvent| {
        let field = match e.edge {
            Some(idx) => format!("{}[{}]", e.field, idx),
            None => e.field.to_string(),
        };
        eprintln!("{},{},{},{},{}", e.cycle, e.vertex, field, e.old, e.new);
    }
}

fn decode(args: DecodeArgs) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let cfg = ExperimentConfig {
        d: args.d,
        rounds: args.rounds.unwrap_or(args.d),
        noise: noise_spec(&args.noise, args.wmax),
        trials: 1,
        seed: args.seed,
        mode,
        clock_ns: args.clock_ns,
    };

    if let Some(path) = &args.dump_graph {
        let ws = duf_sim::experiment::prepare_workspace(&cfg)?;
        let json = serde_json::to_string_pretty(&ws.graph.dump())?;
        write_output(Some(path), &json)?;
    }

    let mut sink = trace_to_stderr();
    let trace: Option<&mut dyn FnMut(TraceEvent)> = if args.trace {
        if mode == Mode::Serial {
            bail!("--trace needs a distributed mode (staged or sync)");
        }
        Some(&mut sink)
    } else {
        None
    };
    let shot = run_single_shot(&cfg, args.trial, trace)?;

    if let Some(path) = &args.record {
        let ws = duf_sim::experiment::prepare_workspace(&cfg)?;
        let weights = match cfg.noise {
            NoiseSpec::Weighted { .. } => {
                Some(ws.graph.edges().iter().map(|e| e.w).collect::<Vec<_>>())
            }
            NoiseSpec::Uniform { .. } => None,
        };
        let header = RecordHeader {
            config: cfg.clone(),
            weights,
        };
        let line = duf_sim::experiment::TrialLine {
            trial: args.trial,
            defects: shot.defects.clone(),
            flipped: shot.flipped.clone(),
        };
        let f = BufWriter::new(File::create(path)?);
        write_records(f, &header, &[line])?;
    }

    write_output(args.out.as_ref(), &serde_json::to_string_pretty(&shot)?)?;
    if !shot.annihilated {
        bail!("correction failed to annihilate the syndrome");
    }
    Ok(())
}

fn emit_rows(rows: &[SweepRow], format: &str, out: Option<&PathBuf>) -> Result<()> {
    let text = match format {
        "csv" => rows_to_csv(rows),
        "json" => serde_json::to_string_pretty(rows)?,
        other => bail!("unknown format `{other}` (expected csv|json)"),
    };
    write_output(out, &text)
}

fn bench(args: BenchArgs) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let mut configs = Vec::new();
    for &d in &args.d {
        for &p in &args.p {
            for &wmax in &args.wmax {
                let noise = if args.weighted {
                    NoiseSpec::Weighted {
                        mean: args.mean,
                        stddev: args.stddev,
                        w_max: wmax,
                    }
                } else {
                    NoiseSpec::Uniform { p }
                };
                configs.push(ExperimentConfig {
                    d,
                    rounds: args.rounds.unwrap_or(d),
                    noise,
                    trials: args.trials,
                    seed: args.seed,
                    mode,
                    clock_ns: args.clock_ns,
                });
            }
            if args.weighted {
                break; // p list is unused in weighted mode
            }
        }
    }
    configs.dedup();
    if let Some(path) = &args.record {
        if configs.len() != 1 {
            bail!(
                "--record needs exactly one config, the sweep has {}",
                configs.len()
            );
        }
        let cfg = &configs[0];
        let (stats, lines) = run_experiment_recorded(cfg)?;
        let ws = duf_sim::experiment::prepare_workspace(cfg)?;
        let weights = match cfg.noise {
            NoiseSpec::Weighted { .. } => {
                Some(ws.graph.edges().iter().map(|e| e.w).collect::<Vec<_>>())
            }
            NoiseSpec::Uniform { .. } => None,
        };
        let header = RecordHeader {
            config: cfg.clone(),
            weights,
        };
        let f = BufWriter::new(File::create(path)?);
        write_records(f, &header, &lines)?;
        let rows = vec![SweepRow::from_stats(cfg, &stats)];
        return emit_rows(&rows, &args.format, args.out.as_ref());
    }
    let rows = sweep(&configs)?;
    emit_rows(&rows, &args.format, args.out.as_ref())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let mut configs = Vec::new();
    for &d in &args.d {
        for &p in &args.p {
            configs.push(ExperimentConfig {
                d,
                rounds: args.rounds.unwrap_or(d),
                noise: NoiseSpec::Uniform { p },
                trials: args.trials,
                seed: args.seed,
                mode: Mode::Verify,
                clock_ns: args.clock_ns,
            });
        }
    }
    let rows = sweep(&configs)?;
    for row in &rows {
        if row.mismatches != 0 {
            bail!("equivalence mismatches at d={} p={}", row.d, row.p);
        }
    }
    emit_rows(&rows, &args.format, args.out.as_ref())
}

fn replay_cmd(args: ReplayArgs) -> Result<()> {
    let mode = args.mode.as_deref().map(parse_mode).transpose()?;
    let f = BufReader::new(
        File::open(&args.file).with_context(|| format!("opening {}", args.file.display()))?,
    );
    let (header, lines) = read_records(f)?;
    let mut sink = trace_to_stderr();
    let trace: Option<&mut dyn FnMut(TraceEvent)> =
        if args.trace { Some(&mut sink) } else { None };
    let report = replay(&header, &lines, mode, trace)?;
    write_output(args.out.as_ref(), &serde_json::to_string_pretty(&report)?)?;
    Ok(())
}
