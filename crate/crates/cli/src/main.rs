use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatdecode::io::read_annotations;
use heatdecode::{DecodeConfig, DecoderKind, EncodingMode, EvalConfig, Normalization, ResultTable, Space};
use heatdecode_cli::commands::{cmd_decode, cmd_encode, cmd_eval, DecodeOptions, EncodeOptions};
use heatdecode_cli::{run_bench, run_sweep, BenchConfig, CliError, SweepConfig};

#[derive(Parser)]
#[command(name = "heatdecode", version, about = "Keypoint heatmap encoding, decoding and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode/decode round-trip benchmark over heatmap resolutions.
    Bench(BenchArgs),
    /// Encode annotation landmarks into an HMAP file.
    Encode(EncodeArgs),
    /// Decode an HMAP file into annotations.
    Decode(DecodeArgs),
    /// Score prediction annotations against ground truth.
    Eval(EvalArgs),
    /// Multilateration NME by anchor window size and resolution.
    SweepAnchors(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Biased,
    Unbiased,
}

impl From<Encoding> for EncodingMode {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Biased => EncodingMode::Biased,
            Encoding::Unbiased => EncodingMode::Unbiased,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct TableOutput {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,32,16,8,4")]
    resolutions: Vec<u32>,
    /// Decoders to run, comma-separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    decoder: Vec<String>,
    #[arg(long, value_enum, default_value = "unbiased")]
    encoding: Encoding,
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    #[arg(long, default_value_t = 2)]
    kernel_size: usize,
    #[arg(long, default_value_t = 4)]
    anchors: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `256`, `constant:256`, `diagonal:WxH` or `heatmap-width:W`.
    #[arg(long, default_value = "256")]
    normalization: String,
    #[arg(long, default_value_t = 256.0)]
    image_size: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: TableOutput,
}

#[derive(Args)]
struct EncodeArgs {
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Heatmap side in pixels.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long, default_value_t = 256.0)]
    image_size: f64,
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "unbiased")]
    encoding: Encoding,
}

#[derive(Args)]
struct DecodeArgs {
    hmap: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "multilateration")]
    decoder: String,
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    #[arg(long, default_value_t = 2)]
    kernel_size: usize,
    #[arg(long, default_value_t = 4)]
    anchors: usize,
    #[arg(long, default_value_t = 256.0)]
    image_size: f64,
    /// Split the channels into records of this many landmarks.
    #[arg(long)]
    landmarks_per_record: Option<usize>,
    /// Take record ids from this annotation file.
    #[arg(long)]
    ids_from: Option<PathBuf>,
    /// Gaussian pre-blur for the distribution-aware decoder.
    #[arg(long)]
    smoothing: bool,
}

#[derive(Args)]
struct EvalArgs {
    gt: PathBuf,
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
    #[arg(long, default_value = "256")]
    normalization: String,
    #[command(flatten)]
    output: TableOutput,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,32,16,8,4")]
    resolutions: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    kernel_sizes: Vec<usize>,
    /// Anchors per window (default: every pixel of the window).
    #[arg(long)]
    anchors: Option<usize>,
    /// Standard deviation of additive heatmap noise.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Gaussian width of the swept heatmaps (`--sigma` is the decoder's).
    #[arg(long, default_value_t = 1.8)]
    heatmap_sigma: f64,
    #[arg(long, value_enum, default_value = "unbiased")]
    encoding: Encoding,
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    #[arg(long, default_value_t = 2_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "256")]
    normalization: String,
    #[arg(long, default_value_t = 256.0)]
    image_size: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: TableOutput,
}

fn parse_decoders(names: &[String]) -> Result<Vec<DecoderKind>, CliError> {
    if names.iter().any(|n| n == "all") {
        return Ok(DecoderKind::ALL.to_vec());
    }
    let mut kinds = names
        .iter()
        .map(|n| n.parse::<DecoderKind>())
        .collect::<Result<Vec<_>, _>>()?;
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

fn render(table: &ResultTable, format: Format) -> String {
    match format {
        Format::Text => table.to_text(),
        Format::Csv => table.to_csv(),
    }
}

/// Prints the table and writes it to `--out` when given.
fn emit(table: &ResultTable, output: &TableOutput) -> Result<(), CliError> {
    let text = render(table, output.format);
    print!("{text}");
    if let Some(path) = &output.out {
        write_text(path, &text)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::file(path)(e.into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bench(a) => {
            let config = BenchConfig {
                resolutions: a.resolutions,
                decoders: parse_decoders(&a.decoder)?,
                encoding_mode: a.encoding.into(),
                samples: a.samples,
                seed: a.seed,
                sigma: a.sigma,
                kernel_size: a.kernel_size,
                anchor_count: a.anchors,
                normalization: a.normalization.parse::<Normalization>()?,
                image_size: a.image_size,
                workers: a.workers,
            };
            let outcome = run_bench(&config)?;
            emit(&outcome.nme, &a.output)?;
            println!();
            print!("{}", render(&outcome.timing, a.output.format));
        }
        Command::Encode(a) => {
            let opts = EncodeOptions {
                resolution: a.resolution,
                image_size: a.image_size,
                sigma: a.sigma,
                mode: a.encoding.into(),
            };
            let n = cmd_encode(&a.annotations, &opts, &a.out)?;
            println!("wrote {n} heatmaps to {}", a.out.display());
        }
        Command::Decode(a) => {
            let ids = match &a.ids_from {
                Some(path) => Some(
                    read_annotations(path)
                        .map_err(CliError::file(path))?
                        .into_iter()
                        .map(|r| r.id)
                        .collect(),
                ),
                None => None,
            };
            let opts = DecodeOptions {
                config: DecodeConfig {
                    decoder: a.decoder.parse()?,
                    kernel_size: a.kernel_size,
                    anchor_count: a.anchors,
                    sigma: a.sigma,
                    smoothing: a.smoothing,
                    ..DecodeConfig::default()
                },
                image_size: a.image_size,
                landmarks_per_record: a.landmarks_per_record,
                ids,
            };
            let records = cmd_decode(&a.hmap, &opts, &a.out)?;
            let failed = records
                .iter()
                .flat_map(|r| r.landmarks.iter())
                .filter(|l| l.is_none())
                .count();
            println!(
                "wrote {} records to {} ({failed} landmarks failed)",
                records.len(),
                a.out.display()
            );
        }
        Command::Eval(a) => {
            let config = EvalConfig {
                normalization: a.normalization.parse()?,
                space: Space::Image,
            };
            let (_, table) = cmd_eval(&a.gt, &a.predictions, &config)?;
            emit(&table, &a.output)?;
        }
        Command::SweepAnchors(a) => {
            let config = SweepConfig {
                resolutions: a.resolutions,
                kernel_sizes: a.kernel_sizes,
                anchor_count: a.anchors,
                noise: a.noise,
                heatmap_sigma: a.heatmap_sigma,
                encoding_mode: a.encoding.into(),
                samples: a.samples,
                seed: a.seed,
                sigma: a.sigma,
                normalization: a.normalization.parse()?,
                image_size: a.image_size,
                workers: a.workers,
            };
            let table = run_sweep(&config)?;
            emit(&table, &a.output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
