//! Desk-scale federated-averaging harness.
//!
//! Per round, every user computes its local gradient on the shared model,
//! the gradients are quantized per layer, both distribution families are
//! fitted to the round's pooled per-layer gradients, and every requested
//! coder compresses each user's symbol stream. Encoded sizes feed the
//! communication-overhead ledger; decode-verify runs on every blob, and a
//! mismatch aborts the experiment. The dequantized gradients are then
//! averaged (distributed mean estimation) and applied to the model.

mod data;
mod mlp;

pub use data::{make_blob_task, ClientDataset};
pub use mlp::{aggregate, local_gradient, update, Gradients, ToyModel, LAYER_LABELS};

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coder::{
    build_huffman, decode, encode, lz78_decode, lz78_encode, pmf_empirical, pmf_from_model,
    BitBlob, Codebook, ModelClass,
};
use crate::error::{Error, Result};
use crate::gennorm::GenNormParams;
use crate::quantizer::{build_grid, dequantize, quantize, Fp8Format, QuantGrid};
use crate::stats::{fit_report, write_fit_reports_csv, FitReport};

/// Coder + model combinations the harness can benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoderChoice {
    Lz78,
    HuffmanGenNorm,
    HuffmanNorm,
    HuffmanEmpirical,
}

impl CoderChoice {
    pub fn label(&self) -> &'static str {
        match self {
            CoderChoice::Lz78 => "lz78",
            CoderChoice::HuffmanGenNorm => "huffman_gennorm",
            CoderChoice::HuffmanNorm => "huffman_norm",
            CoderChoice::HuffmanEmpirical => "huffman_empirical",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "lz78" => Ok(CoderChoice::Lz78),
            "huffman_gennorm" => Ok(CoderChoice::HuffmanGenNorm),
            "huffman_norm" => Ok(CoderChoice::HuffmanNorm),
            "huffman_empirical" => Ok(CoderChoice::HuffmanEmpirical),
            other => Err(Error::Config(format!("unknown coder {other:?}"))),
        }
    }
}

/// Experiment parameters; see [`ExperimentConfig::parse`] for the file
/// format.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub users: usize,
    pub rounds: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub samples_per_user: usize,
    pub test_samples: usize,
    pub blob_separation: f64,
    pub learning_rate: f64,
    pub format: Fp8Format,
    pub coders: Vec<CoderChoice>,
    pub seed: u64,
    /// Train on quantize-dequantize gradients (the paper's setting) rather
    /// than raw ones.
    pub quantize_updates: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            users: 4,
            rounds: 50,
            input_dim: 20,
            hidden_dim: 32,
            classes: 2,
            samples_per_user: 250,
            test_samples: 1000,
            blob_separation: 3.0,
            learning_rate: 0.01,
            format: Fp8Format::e5m2(),
            coders: vec![
                CoderChoice::Lz78,
                CoderChoice::HuffmanGenNorm,
                CoderChoice::HuffmanNorm,
            ],
            seed: 7,
            quantize_updates: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parse a `key = value` config file. `#` starts a comment; keys not
    /// listed keep their defaults:
    ///
    /// users, rounds, input_dim, hidden_dim, classes, samples_per_user,
    /// test_samples, blob_separation, learning_rate, sign_bits,
    /// exponent_bits, mantissa_bits, exponent_bias, coders (comma list of
    /// lz78 | huffman_gennorm | huffman_norm | huffman_empirical), seed,
    /// quantize_updates (true/false), output_dir.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let (mut sign, mut exp, mut mant, mut bias) = (1u32, 5u32, 2u32, 16i32);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {what}: {value:?}", lineno + 1));
            match key {
                "users" => cfg.users = value.parse().map_err(|_| bad("users"))?,
                "rounds" => cfg.rounds = value.parse().map_err(|_| bad("rounds"))?,
                "input_dim" => cfg.input_dim = value.parse().map_err(|_| bad("input_dim"))?,
                "hidden_dim" => cfg.hidden_dim = value.parse().map_err(|_| bad("hidden_dim"))?,
                "classes" => cfg.classes = value.parse().map_err(|_| bad("classes"))?,
                "samples_per_user" => {
                    cfg.samples_per_user = value.parse().map_err(|_| bad("samples_per_user"))?
                }
                "test_samples" => cfg.test_samples = value.parse().map_err(|_| bad("test_samples"))?,
                "blob_separation" => {
                    cfg.blob_separation = value.parse().map_err(|_| bad("blob_separation"))?
                }
                "learning_rate" => {
                    cfg.learning_rate = value.parse().map_err(|_| bad("learning_rate"))?
                }
                "sign_bits" => sign = value.parse().map_err(|_| bad("sign_bits"))?,
                "exponent_bits" => exp = value.parse().map_err(|_| bad("exponent_bits"))?,
                "mantissa_bits" => mant = value.parse().map_err(|_| bad("mantissa_bits"))?,
                "exponent_bias" => bias = value.parse().map_err(|_| bad("exponent_bias"))?,
                "coders" => {
                    cfg.coders = value
                        .split(',')
                        .map(CoderChoice::parse)
                        .collect::<Result<Vec<_>>>()?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "quantize_updates" => {
                    cfg.quantize_updates = value.parse().map_err(|_| bad("quantize_updates"))?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        cfg.format = Fp8Format::new(sign, exp, mant, bias)
            .map_err(|e| Error::Config(format!("invalid quantizer format: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Config("users must be positive".into()));
        }
        if self.coders.is_empty() {
            return Err(Error::Config("at least one coder is required".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        // Distribution fitting needs enough pooled gradient values per
        // layer; the output layer is the smallest.
        let output_layer = self.users * (self.hidden_dim * self.classes + self.classes);
        if output_layer < crate::gennorm::MIN_FIT_SAMPLES {
            return Err(Error::Config(format!(
                "users x (hidden_dim x classes + classes) = {output_layer} pooled \
                 output-layer gradients, but fitting needs at least {}",
                crate::gennorm::MIN_FIT_SAMPLES
            )));
        }
        Ok(())
    }
}

/// One ledger row: the up-link cost of one (round, user, layer, coder)
/// transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub round: usize,
    pub user: usize,
    pub layer: &'static str,
    pub coder: CoderChoice,
    pub payload_bits: u64,
    pub header_bits: u64,
    pub symbols: u64,
}

/// Accumulated communication-overhead ledger: the total is the sum of
/// expected lengths over users and rounds.
#[derive(Debug, Clone, Default)]
pub struct OverheadLedger {
    entries: Vec<LedgerEntry>,
    total_bits: u64,
}

impl OverheadLedger {
    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Grand total over every entry, payload plus header bits.
    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    /// Total for one coder, payload plus header bits.
    pub fn total_bits_for(&self, coder: CoderChoice) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.coder == coder)
            .map(|e| e.payload_bits + e.header_bits)
            .sum()
    }

    fn push(&mut self, entry: LedgerEntry) {
        self.total_bits += entry.payload_bits + entry.header_bits;
        self.entries.push(entry);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,user,layer,coder,payload_bits,header_bits,symbols")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.round,
                e.user,
                e.layer,
                e.coder.label(),
                e.payload_bits,
                e.header_bits,
                e.symbols
            )?;
        }
        Ok(())
    }
}

/// Per-layer compression rate achieved by one coder in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRate {
    pub layer: &'static str,
    pub coder: CoderChoice,
    pub bits_per_symbol: f64,
}

/// Distribution parameters fitted to one layer's pooled gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFit {
    pub layer: &'static str,
    pub gennorm: GenNormParams,
    pub norm: GenNormParams,
}

/// Everything observable about one training round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub loss: f64,
    pub test_accuracy: f64,
    pub rates: Vec<LayerRate>,
    pub fits: Vec<LayerFit>,
}

/// Harness output bundle.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub ledger: OverheadLedger,
    pub rounds: Vec<RoundReport>,
    pub fit_reports: Vec<FitReport>,
    pub final_model: ToyModel,
}

impl ExperimentOutput {
    pub fn write_rounds_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "round,loss,test_accuracy,layer,coder,bits_per_symbol,\
             gennorm_mu,gennorm_alpha,gennorm_beta,norm_mu,norm_alpha"
        )?;
        for round in &self.rounds {
            for rate in &round.rates {
                let fit = round
                    .fits
                    .iter()
                    .find(|f| f.layer == rate.layer)
                    .expect("every rated layer has a fit");
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    round.round,
                    round.loss,
                    round.test_accuracy,
                    rate.layer,
                    rate.coder.label(),
                    rate.bits_per_symbol,
                    fit.gennorm.mu(),
                    fit.gennorm.alpha(),
                    fit.gennorm.beta(),
                    fit.norm.mu(),
                    fit.norm.alpha()
                )?;
            }
        }
        Ok(())
    }

    /// Write ledger.csv, rounds.csv, and fits.csv into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut ledger = Vec::new();
        self.ledger.write_csv(&mut ledger)?;
        crate::fsutil::atomic_write(&dir.join("ledger.csv"), &ledger)?;

        let mut rounds = Vec::new();
        self.write_rounds_csv(&mut rounds)?;
        crate::fsutil::atomic_write(&dir.join("rounds.csv"), &rounds)?;

        let mut fits = Vec::new();
        write_fit_reports_csv(&self.fit_reports, &mut fits)?;
        crate::fsutil::atomic_write(&dir.join("fits.csv"), &fits)?;
        Ok(())
    }
}

/// Deterministic experiment setup: model initialization and data shards
/// derived from the config seed.
fn setup(config: &ExperimentConfig) -> Result<(ToyModel, Vec<ClientDataset>, ClientDataset)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let mut data_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let model = ToyModel::init(config.input_dim, config.hidden_dim, config.classes, &mut init_rng);
    let (shards, test) = make_blob_task(
        config.input_dim,
        config.classes,
        config.users,
        config.samples_per_user,
        config.test_samples,
        config.blob_separation,
        &mut data_rng,
    )?;
    Ok((model, shards, test))
}

fn encode_with(
    coder: CoderChoice,
    stream: &crate::quantizer::SymbolStream,
    grid: &QuantGrid,
    cb_gennorm: &Codebook,
    cb_norm: &Codebook,
) -> Result<(BitBlob, Option<Codebook>)> {
    match coder {
        CoderChoice::Lz78 => Ok((lz78_encode(stream)?, None)),
        CoderChoice::HuffmanGenNorm => Ok((encode(stream, cb_gennorm)?, None)),
        CoderChoice::HuffmanNorm => Ok((encode(stream, cb_norm)?, None)),
        CoderChoice::HuffmanEmpirical => {
            let cb = build_huffman(&pmf_empirical(stream, grid)?)?;
            let blob = encode(stream, &cb)?;
            Ok((blob, Some(cb)))
        }
    }
}

/// Run the full pipeline: train for `rounds` rounds, fitting, coding,
/// verifying, and metering every user's gradient upload.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let grid = build_grid(config.format);
    let (mut model, shards, test) = setup(config)?;
    let mut ledger = OverheadLedger::default();
    let mut rounds = Vec::with_capacity(config.rounds);
    let mut fit_reports = Vec::with_capacity(config.rounds * LAYER_LABELS.len());

    for round in 0..config.rounds {
        let grads: Vec<Gradients> = shards
            .iter()
            .map(|shard| local_gradient(&model, shard))
            .collect::<Result<_>>()?;

        let mut rates = Vec::new();
        let mut fits = Vec::new();
        let mut dequantized: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; config.users];
        for (layer_idx, &layer) in LAYER_LABELS.iter().enumerate() {
            // Fit both families to the round's pooled per-layer gradients;
            // every user's stream is then coded against the shared fit.
            let pooled: Vec<f64> = grads
                .iter()
                .flat_map(|g| g.layer_values(layer_idx))
                .collect();
            let report = fit_report(&pooled, round as u64, layer)?;
            let (gennorm, norm) = (report.gennorm, report.norm);
            fit_reports.push(report);
            fits.push(LayerFit { layer, gennorm, norm });

            let cb_gennorm = build_huffman(&pmf_from_model(&gennorm, &grid, ModelClass::GenNorm)?)?;
            let cb_norm = build_huffman(&pmf_from_model(&norm, &grid, ModelClass::Norm)?)?;

            let mut layer_bits = vec![0u64; config.coders.len()];
            let mut layer_symbols = 0u64;
            for (user, grad) in grads.iter().enumerate() {
                let values = grad.layer_values(layer_idx);
                let stream = quantize(&values, &grid)?;
                layer_symbols += stream.len() as u64;
                for (slot, &coder) in config.coders.iter().enumerate() {
                    let (blob, cb_emp) =
                        encode_with(coder, &stream, &grid, &cb_gennorm, &cb_norm)?;
                    let decoded = match coder {
                        CoderChoice::Lz78 => lz78_decode(&blob)?,
                        CoderChoice::HuffmanGenNorm => decode(&blob, &cb_gennorm)?,
                        CoderChoice::HuffmanNorm => decode(&blob, &cb_norm)?,
                        CoderChoice::HuffmanEmpirical => {
                            decode(&blob, cb_emp.as_ref().expect("empirical codebook"))?
                        }
                    };
                    if decoded.indices != stream.indices {
                        return Err(Error::corruption(format!(
                            "lossless round-trip failed: round {round}, user {user}, \
                             layer {layer}, coder {}",
                            coder.label()
                        )));
                    }
                    layer_bits[slot] += blob.code_bits();
                    ledger.push(LedgerEntry {
                        round,
                        user,
                        layer,
                        coder,
                        payload_bits: blob.code_bits(),
                        header_bits: blob.side_bits(),
                        symbols: stream.len() as u64,
                    });
                }
                dequantized[user][layer_idx] = dequantize(&stream, &grid)?;
            }
            for (slot, &coder) in config.coders.iter().enumerate() {
                rates.push(LayerRate {
                    layer,
                    coder,
                    bits_per_symbol: layer_bits[slot] as f64 / layer_symbols.max(1) as f64,
                });
            }
        }

        let update_grads: Vec<Gradients> = if config.quantize_updates {
            dequantized
                .iter()
                .map(|layers| {
                    Gradients::from_layer_values(&model, [&layers[0], &layers[1]])
                })
                .collect::<Result<_>>()?
        } else {
            grads
        };
        let aggregated = aggregate(&update_grads)?;
        model = update(&model, &aggregated, config.learning_rate)?;

        let mut loss = 0.0;
        for shard in &shards {
            loss += model.evaluate(shard)?.0;
        }
        loss /= shards.len() as f64;
        let (_, test_accuracy) = model.evaluate(&test)?;
        rounds.push(RoundReport { round, loss, test_accuracy, rates, fits });
    }

    Ok(ExperimentOutput { ledger, rounds, fit_reports, final_model: model })
}

/// Loss/accuracy curves of one training arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCurve {
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
}

/// Paired training curves: raw-gradient updates versus
/// quantize-dequantize updates, from identical seeds and data.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyComparison {
    pub full_precision: ArmCurve,
    pub quantized: ArmCurve,
}

/// Train twice from the same seed: once on raw gradients, once on
/// quantized ones (respecting `config.quantize_updates`; disabling it
/// makes both arms identical).
pub fn accuracy_comparison(config: &ExperimentConfig) -> Result<AccuracyComparison> {
    config.validate()?;
    let grid = build_grid(config.format);
    let run_arm = |quantize_updates: bool| -> Result<ArmCurve> {
        let (mut model, shards, test) = setup(config)?;
        let mut curve = ArmCurve { loss: Vec::new(), accuracy: Vec::new() };
        for _ in 0..config.rounds {
            let grads: Vec<Gradients> = shards
                .iter()
                .map(|shard| local_gradient(&model, shard))
                .collect::<Result<_>>()?;
            let update_grads: Vec<Gradients> = if quantize_updates {
                grads
                    .iter()
                    .map(|g| {
                        let l0 = dequantize(&quantize(&g.layer_values(0), &grid)?, &grid)?;
                        let l1 = dequantize(&quantize(&g.layer_values(1), &grid)?, &grid)?;
                        Gradients::from_layer_values(&model, [&l0, &l1])
                    })
                    .collect::<Result<_>>()?
            } else {
                grads
            };
            let aggregated = aggregate(&update_grads)?;
            model = update(&model, &aggregated, config.learning_rate)?;
            let mut loss = 0.0;
            for shard in &shards {
                loss += model.evaluate(shard)?.0;
            }
            curve.loss.push(loss / shards.len() as f64);
            curve.accuracy.push(model.evaluate(&test)?.1);
        }
        Ok(curve)
    };
    Ok(AccuracyComparison {
        full_precision: run_arm(false)?,
        quantized: run_arm(config.quantize_updates)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            users: 3,
            rounds: 4,
            input_dim: 8,
            hidden_dim: 16,
            classes: 2,
            samples_per_user: 60,
            test_samples: 200,
            seed: 11,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_rounds_returns_initial_model() {
        let config = ExperimentConfig { rounds: 0, ..small_config() };
        let out = run_experiment(&config).unwrap();
        assert!(out.ledger.entries().is_empty());
        assert_eq!(out.ledger.total_bits(), 0);
        assert!(out.rounds.is_empty());
        let (initial, _, _) = setup(&config).unwrap();
        assert_eq!(out.final_model, initial);
    }

    #[test]
    fn ledger_total_matches_entry_sum() {
        let out = run_experiment(&small_config()).unwrap();
        let recount: u64 = out
            .ledger
            .entries()
            .iter()
            .map(|e| e.payload_bits + e.header_bits)
            .sum();
        assert_eq!(out.ledger.total_bits(), recount);
        let per_coder: u64 = [
            CoderChoice::Lz78,
            CoderChoice::HuffmanGenNorm,
            CoderChoice::HuffmanNorm,
        ]
        .iter()
        .map(|&c| out.ledger.total_bits_for(c))
        .sum();
        assert_eq!(per_coder, recount);
        // 3 users x 4 rounds x 2 layers x 3 coders
        assert_eq!(out.ledger.entries().len(), 3 * 4 * 2 * 3);
    }

    #[test]
    fn experiment_is_deterministic() {
        let config = small_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.final_model, b.final_model);
        assert_eq!(a.ledger.entries(), b.ledger.entries());
        assert_eq!(a.rounds, b.rounds);

        let different = ExperimentConfig { seed: 12, ..config };
        let c = run_experiment(&different).unwrap();
        assert_ne!(a.final_model, c.final_model);
    }

    #[test]
    fn rates_are_positive_and_below_raw_width() {
        let out = run_experiment(&small_config()).unwrap();
        for round in &out.rounds {
            for rate in &round.rates {
                assert!(rate.bits_per_symbol > 0.0);
                if rate.coder != CoderChoice::Lz78 {
                    assert!(
                        rate.bits_per_symbol < 8.0,
                        "{} rate {} should beat the raw 8-bit width",
                        rate.coder.label(),
                        rate.bits_per_symbol
                    );
                }
            }
            assert!((0.0..=1.0).contains(&round.test_accuracy));
        }
    }

    #[test]
    fn comparison_arms_identical_when_quantization_disabled() {
        let config = ExperimentConfig { quantize_updates: false, rounds: 3, ..small_config() };
        let cmp = accuracy_comparison(&config).unwrap();
        assert_eq!(cmp.full_precision, cmp.quantized);
    }

    #[test]
    fn comparison_losses_decrease() {
        let config = ExperimentConfig { rounds: 10, ..small_config() };
        let cmp = accuracy_comparison(&config).unwrap();
        assert!(cmp.full_precision.loss[9] < cmp.full_precision.loss[0]);
        assert!(cmp.quantized.loss[9] < cmp.quantized.loss[0]);
    }

    #[test]
    fn config_parsing_roundtrip_and_errors() {
        let text = "
            # benchmark settings
            users = 2
            rounds = 5
            input_dim = 10
            hidden_dim = 24
            classes = 2
            samples_per_user = 50
            learning_rate = 0.02
            coders = lz78, huffman_gennorm
            seed = 99
            quantize_updates = true
            output_dir = /tmp/bench-out
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.users, 2);
        assert_eq!(cfg.hidden_dim, 24);
        assert_eq!(cfg.rounds, 5);
        assert_eq!(cfg.coders, vec![CoderChoice::Lz78, CoderChoice::HuffmanGenNorm]);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/bench-out"));

        assert!(ExperimentConfig::parse("users 2").is_err());
        assert!(ExperimentConfig::parse("users = x").is_err());
        assert!(ExperimentConfig::parse("nonsense = 1").is_err());
        assert!(ExperimentConfig::parse("coders = arithmetic").is_err());
        assert!(ExperimentConfig::parse("exponent_bits = 9").is_err());
        // Too few pooled output-layer gradients for the fitter.
        assert!(ExperimentConfig::parse("users = 1\nhidden_dim = 4").is_err());
    }

    #[test]
    fn csv_outputs_have_expected_schemas() {
        let out = run_experiment(&ExperimentConfig { rounds: 2, ..small_config() }).unwrap();
        let dir = std::env::temp_dir().join(format!("gradcomp-harness-{}", std::process::id()));
        out.write_outputs(&dir).unwrap();
        let ledger = std::fs::read_to_string(dir.join("ledger.csv")).unwrap();
        assert!(ledger.starts_with("round,user,layer,coder,payload_bits,header_bits,symbols"));
        assert_eq!(ledger.lines().count(), 1 + out.ledger.entries().len());
        let rounds = std::fs::read_to_string(dir.join("rounds.csv")).unwrap();
        assert!(rounds.lines().count() > 1);
        let fits = std::fs::read_to_string(dir.join("fits.csv")).unwrap();
        assert!(fits.starts_with("epoch,layer,"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
