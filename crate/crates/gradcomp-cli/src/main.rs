//! `gradcomp` — quantize, model, and losslessly compress gradient tensors.
//!
//! Subcommands: `fit` (distribution fit reports), `compress` /
//! `decompress` (GTF gradient files to/from GCB compressed blobs), and
//! `bench` (the federated-averaging compression benchmark).
//!
//! Exit codes: 0 success, 2 usage, 3 malformed input file or config,
//! 4 corrupted data, 5 fit failure, 6 filesystem errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gradcomp::coder::{
    build_huffman, decode_blob, encode, lz78_encode, parse_blob_stream, pmf_empirical,
    pmf_from_model, ModelClass,
};
use gradcomp::error::Error;
use gradcomp::gennorm::{fit, fit_norm};
use gradcomp::harness::{run_experiment, ExperimentConfig};
use gradcomp::io::{read_all, GradientRecord};
use gradcomp::quantizer::{build_grid, dequantize, quantize, Fp8Format};
use gradcomp::stats::{fit_report, write_fit_reports_csv};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "GRADCOMP_OUT_DIR";

#[derive(Parser)]
#[command(name = "gradcomp", version, about = "Gradient compression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit GenNorm and Norm models to every record of a gradient file and
    /// write a fit-report CSV.
    Fit {
        /// Input gradient file (GTF).
        input: PathBuf,
        /// Output CSV path; defaults to <input stem>_fit.csv in the
        /// default output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Quantize records of a gradient file and compress them into
    /// concatenated GCB blobs.
    Compress(CompressArgs),
    /// Reconstruct quantized gradient representatives from a GCB file.
    Decompress {
        /// Input compressed file (GCB).
        input: PathBuf,
        /// Output gradient file; defaults to <input stem>.gtf in the
        /// default output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the federated-averaging benchmark described by a config file
    /// and write ledger.csv, rounds.csv, and fits.csv.
    Bench {
        /// Benchmark config file (key = value lines).
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CompressArgs {
    /// Input gradient file (GTF).
    input: PathBuf,
    /// Output blob path; defaults to <input stem>.gcb in the default
    /// output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Distribution model driving the Huffman code (huffman coder only).
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Entropy coder.
    #[arg(long, value_enum, default_value_t = CoderArg::Huffman)]
    coder: CoderArg,
    /// Quantizer bit layout: sign,exponent,mantissa[,bias].
    #[arg(long, default_value = "1,5,2,16")]
    format: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Gennorm,
    Norm,
    Empirical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoderArg {
    Huffman,
    Lz78,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gradcomp: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Format { .. } | Error::Config(_) | Error::Parameter(_) | Error::Input(_) => 3,
        Error::Corruption { .. } | Error::Coding(_) => 4,
        Error::Fit(_) => 5,
        Error::Io(_) => 6,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit { input, output } => cmd_fit(&input, output),
        Command::Compress(args) => cmd_compress(args),
        Command::Decompress { input, output } => cmd_decompress(&input, output),
        Command::Bench { config, seed, output_dir } => cmd_bench(&config, seed, output_dir),
    }
}

fn default_output(input: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{stem}{suffix}.{extension}"))
}

fn cmd_fit(input: &Path, output: Option<PathBuf>) -> Result<(), Error> {
    let records = read_all(input)?;
    let mut reports = Vec::with_capacity(records.len());
    for record in &records {
        reports.push(fit_report(
            &record.values_f64(),
            record.epoch(),
            record.layer_label(),
        )?);
    }
    let mut csv = Vec::new();
    write_fit_reports_csv(&reports, &mut csv)?;
    let path = output.unwrap_or_else(|| default_output(input, "_fit", "csv"));
    gradcomp::fsutil::atomic_write(&path, &csv)?;
    println!("wrote {} fit reports to {}", reports.len(), path.display());
    Ok(())
}

fn parse_format(text: &str) -> Result<Fp8Format, Error> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(Error::Input(format!(
            "--format wants sign,exponent,mantissa[,bias], got {text:?}"
        )));
    }
    let parse =
        |s: &str| -> Result<u32, Error> { s.parse().map_err(|_| Error::Input(format!("bad --format field {s:?}"))) };
    let sign = parse(parts[0])?;
    let exp = parse(parts[1])?;
    let mant = parse(parts[2])?;
    let bias = if parts.len() == 4 { parse(parts[3])? as i32 } else { 16 };
    Fp8Format::new(sign, exp, mant, bias)
}

fn cmd_compress(args: CompressArgs) -> Result<(), Error> {
    if args.coder == CoderArg::Lz78 && args.model.is_some() {
        // Usage error, not a data error: report and exit like clap does.
        eprintln!("gradcomp: --model only applies to --coder huffman");
        std::process::exit(2);
    }
    let model = args.model.unwrap_or(ModelArg::Gennorm);
    let format = parse_format(&args.format)?;
    let grid = build_grid(format);
    let records = read_all(&args.input)?;
    if records.is_empty() {
        return Err(Error::Format {
            offset: 0,
            message: "input file contains no records".into(),
        });
    }

    let mut bytes = Vec::new();
    let mut total_bits = 0u64;
    let mut total_symbols = 0u64;
    for (i, record) in records.iter().enumerate() {
        let values = record.values_f64();
        let stream = quantize(&values, &grid)?;
        let blob = match args.coder {
            CoderArg::Lz78 => lz78_encode(&stream)?,
            CoderArg::Huffman => {
                let pmf = match model {
                    ModelArg::Gennorm => {
                        let params = fit(&values)?.params;
                        pmf_from_model(&params, &grid, ModelClass::GenNorm)?
                    }
                    ModelArg::Norm => {
                        let params = fit_norm(&values)?;
                        pmf_from_model(&params, &grid, ModelClass::Norm)?
                    }
                    ModelArg::Empirical => pmf_empirical(&stream, &grid)?,
                };
                encode(&stream, &build_huffman(&pmf)?)?
            }
        };
        let bits = blob.code_bits();
        let symbols = stream.len() as u64;
        println!(
            "record {i} ({:?}, {symbols} symbols): {bits} payload bits, {:.4} bits/symbol",
            record.layer_label(),
            bits as f64 / symbols.max(1) as f64
        );
        total_bits += bits;
        total_symbols += symbols;
        bytes.extend_from_slice(&blob.to_bytes());
    }
    if records.len() > 1 {
        println!(
            "total: {total_bits} payload bits over {total_symbols} symbols, {:.4} bits/symbol",
            total_bits as f64 / total_symbols.max(1) as f64
        );
    }
    let path = args.output.unwrap_or_else(|| default_output(&args.input, "", "gcb"));
    gradcomp::fsutil::atomic_write(&path, &bytes)?;
    println!("wrote {} blobs to {}", records.len(), path.display());
    Ok(())
}

fn cmd_decompress(input: &Path, output: Option<PathBuf>) -> Result<(), Error> {
    let bytes = std::fs::read(input)?;
    let blobs = parse_blob_stream(&bytes)?;
    let mut records = Vec::with_capacity(blobs.len());
    for (i, blob) in blobs.iter().enumerate() {
        let (stream, grid) = decode_blob(blob)?;
        let values: Vec<f32> = dequantize(&stream, &grid)?
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let n = values.len() as u64;
        records.push(GradientRecord::new(&format!("record_{i}"), 0, vec![n], values)?);
    }
    let path = output.unwrap_or_else(|| default_output(input, "", "gtf"));
    gradcomp::io::write_records(&path, &records)?;
    println!("restored {} records to {}", records.len(), path.display());
    Ok(())
}

fn cmd_bench(config_path: &Path, seed: Option<u64>, output_dir: Option<PathBuf>) -> Result<(), Error> {
    let mut config = ExperimentConfig::from_file(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    } else if config.output_dir == PathBuf::from("out") {
        if let Some(env_dir) = std::env::var_os(OUT_DIR_ENV) {
            config.output_dir = PathBuf::from(env_dir).join("out");
        }
    }

    let output = run_experiment(&config)?;
    output.write_outputs(&config.output_dir)?;

    println!(
        "bench complete: {} rounds, {} users, seed {}",
        config.rounds, config.users, config.seed
    );
    for &coder in &config.coders {
        println!(
            "  {:>18}: {} total bits",
            coder.label(),
            output.ledger.total_bits_for(coder)
        );
    }
    if let Some(last) = output.rounds.last() {
        println!(
            "  final loss {:.6}, test accuracy {:.4}",
            last.loss, last.test_accuracy
        );
    }
    println!("wrote ledger.csv, rounds.csv, fits.csv to {}", config.output_dir.display());
    Ok(())
}
