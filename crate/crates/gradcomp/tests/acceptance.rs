//! Acceptance suite: one test per release criterion, each printing a
//! single pass/fail line (visible with `--nocapture`).
//!
//! Run with:
//!
//! ```text
//! cargo test -p gradcomp --test acceptance -- --nocapture
//! ```

use std::time::Instant;

use gradcomp::coder::{
    build_huffman, decode, encode, expected_length, lz78_decode, lz78_encode, pmf_empirical,
    pmf_from_model, BinPmf, BitBlob, ModelClass,
};
use gradcomp::gennorm::{fit, fit_norm, GenNormParams};
use gradcomp::harness::{
    accuracy_comparison, run_experiment, CoderChoice, ExperimentConfig, Gradients, ToyModel,
};
use gradcomp::io::{read_all, write_records, GradientRecord};
use gradcomp::quantizer::{build_grid, dequantize, quantize, Fp8Format, SymbolStream};
use gradcomp::stats::{wasserstein, WassersteinOrder};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "pass" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} [{status}] {name}: {detail}");
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// Adaptive Simpson quadrature, the oracle for density normalization.
fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn rec<F: Fn(f64) -> f64 + Copy>(
        f: F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, depth)
}

#[test]
fn criterion_01_gennorm_analytics() {
    let kurt2 = GenNormParams::new(0.0, 1.0, 2.0).unwrap().moments().kurtosis;
    let kurt1 = GenNormParams::new(0.0, 1.0, 1.0).unwrap().moments().kurtosis;
    let kurt_ok = (kurt2 - 3.0).abs() <= 1e-12 && (kurt1 - 6.0).abs() <= 1e-12;

    let mut worst_mass_err: f64 = 0.0;
    for &beta in &[0.5, 1.0, 1.5, 2.0, 4.0] {
        let p = GenNormParams::new(0.0, 1.0, beta).unwrap();
        // Integrate out to where the remaining tail mass is far below the
        // tolerance; heavy tails need many more scale units than light ones.
        let span = 80.0_f64.powf(1.0 / beta).max(40.0);
        let breaks: Vec<f64> = [-1.0, -0.25, -0.05, -0.01, 0.0, 0.01, 0.05, 0.25, 1.0]
            .iter()
            .map(|c| c * span)
            .collect();
        let mut mass = 0.0;
        for w in breaks.windows(2) {
            mass += simpson(|x| p.pdf(x), w[0], w[1], 1e-11, 40);
        }
        worst_mass_err = worst_mass_err.max((mass - 1.0).abs());
    }
    let mass_ok = worst_mass_err <= 1e-6;

    let mut worst_roundtrip: f64 = 0.0;
    for &beta in &[0.5, 1.0, 1.5, 2.0, 4.0] {
        let p = GenNormParams::new(0.2, 1.3, beta).unwrap();
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            let x = p.quantile(q).unwrap();
            worst_roundtrip = worst_roundtrip.max((p.cdf(x) - q).abs());
        }
    }
    let roundtrip_ok = worst_roundtrip <= 1e-8;

    report(
        1,
        "gennorm analytics",
        kurt_ok && mass_ok && roundtrip_ok,
        &format!(
            "kurtosis(2)={kurt2:.15}, kurtosis(1)={kurt1:.15}, \
             max |mass-1|={worst_mass_err:.2e}, max quantile-cdf residual={worst_roundtrip:.2e}"
        ),
    );
}

#[test]
fn criterion_02_estimator_consistency() {
    let mut detail = String::new();
    let mut all_ok = true;
    for &beta in &[0.8, 1.0, 1.5, 2.0] {
        let truth = GenNormParams::new(0.0, 1.0, beta).unwrap();
        let mut hits = 0;
        for trial in 0..20 {
            let data = truth.sample(100_000, 61_000 + trial);
            let est = fit(&data).unwrap().params.beta();
            if (est - beta).abs() <= 0.08 {
                hits += 1;
            }
        }
        all_ok &= hits >= 18;
        detail.push_str(&format!("beta {beta}: {hits}/20  "));
    }
    report(2, "estimator consistency", all_ok, detail.trim());
}

#[test]
fn criterion_03_quantizer_exactness() {
    let grid = build_grid(Fp8Format::e5m2());
    let smallest = grid.edges().iter().copied().find(|&e| e > 0.0).unwrap();
    let largest = *grid.edges().last().unwrap();
    let range_ok = smallest == 2.0_f64.powi(-16) && largest == 2.0_f64.powi(15);

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut values: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let magnitude = 10.0_f64.powf(rng.random_range(-6.0..5.0));
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * magnitude
        })
        .collect();

    // Symmetry: the negated inputs land in mirrored bins.
    let stream = quantize(&values, &grid).unwrap();
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let neg_stream = quantize(&negated, &grid).unwrap();
    let n_bins = grid.bin_count() as u16;
    let symmetric = stream
        .indices
        .iter()
        .zip(&neg_stream.indices)
        .all(|(&a, &b)| a + b == n_bins - 1);

    // Idempotence: quantizing the reconstruction reproduces the symbols.
    let centers = dequantize(&stream, &grid).unwrap();
    let again = quantize(&centers, &grid).unwrap();
    let idempotent = again.indices == stream.indices;

    // Monotonicity over the sorted inputs.
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sorted_stream = quantize(&values, &grid).unwrap();
    let monotone = sorted_stream.indices.windows(2).all(|w| w[0] <= w[1]);

    report(
        3,
        "quantizer exactness",
        range_ok && symmetric && idempotent && monotone,
        &format!(
            "edges [{smallest:e}, {largest:e}], 10^6 fuzzed inputs: symmetric={symmetric}, \
             idempotent={idempotent}, monotone={monotone}"
        ),
    );
}

/// Depth multisets of all full binary trees with `n` leaves.
fn tree_depth_profiles(n: usize) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for left in 1..n {
        for lp in tree_depth_profiles(left) {
            for rp in tree_depth_profiles(n - left) {
                let mut profile: Vec<u32> = lp
                    .iter()
                    .chain(rp.iter())
                    .map(|d| d + 1)
                    .collect();
                profile.sort_unstable();
                out.push(profile);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Best expected length over every prefix code, by exhausting tree shapes
/// and assigning shorter depths to heavier symbols.
fn exhaustive_optimum(probs: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = probs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    tree_depth_profiles(probs.len())
        .into_iter()
        .map(|profile| {
            sorted
                .iter()
                .zip(&profile)
                .map(|(p, &d)| p * d as f64)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn random_pmf(rng: &mut ChaCha8Rng, n: usize) -> BinPmf {
    let mut probs: Vec<f64> = (0..n).map(|_| rng.random::<f64>().max(1e-9)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    BinPmf::from_probabilities(probs)
}

#[test]
fn criterion_04_huffman_optimality_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    // Entropy sandwich over 1000 random PMFs.
    let mut sandwich_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(2..=256);
        let pmf = random_pmf(&mut rng, n);
        let cb = build_huffman(&pmf).unwrap();
        let h = pmf.entropy_bits();
        let l = expected_length(&pmf, &cb).unwrap();
        sandwich_ok &= h <= l + 1e-9 && l < h + 1.0;
    }

    // Exhaustive optimality on alphabets up to 6 symbols.
    let mut optimal_ok = true;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let pmf = random_pmf(&mut rng, n);
        let cb = build_huffman(&pmf).unwrap();
        let l = expected_length(&pmf, &cb).unwrap();
        let best = exhaustive_optimum(pmf.probabilities());
        worst_gap = worst_gap.max(l - best);
        optimal_ok &= l <= best + 1e-12;
    }

    // Dyadic PMF meets the entropy exactly.
    let dyadic = BinPmf::from_probabilities(vec![0.5, 0.25, 0.125, 0.0625, 0.0625]);
    let cb = build_huffman(&dyadic).unwrap();
    let l = expected_length(&dyadic, &cb).unwrap();
    let dyadic_ok = (l - dyadic.entropy_bits()).abs() <= 1e-12;

    report(
        4,
        "huffman optimality and bounds",
        sandwich_ok && optimal_ok && dyadic_ok,
        &format!(
            "sandwich={sandwich_ok}, exhaustive gap={worst_gap:.2e}, dyadic L={l} = H"
        ),
    );
}

#[test]
fn criterion_05_losslessness() {
    let grid = build_grid(Fp8Format::e5m2());
    let n_bins = grid.bin_count();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut checked = 0u32;
    for case in 0..10_000 {
        let len = match case % 10 {
            0 => 0,
            1 => 1,
            2 => rng.random_range(2..10),
            _ => rng.random_range(10..600),
        };
        let indices: Vec<u16> = match case % 5 {
            // Constant, alternating, heavy-tail, and uniform streams.
            0 => vec![rng.random_range(0..n_bins) as u16; len],
            1 => (0..len).map(|i| ((i % 2) * (n_bins - 1)) as u16).collect(),
            2 => (0..len)
                .map(|_| {
                    if rng.random::<f64>() < 0.95 {
                        (n_bins / 2) as u16
                    } else {
                        rng.random_range(0..n_bins) as u16
                    }
                })
                .collect(),
            _ => (0..len).map(|_| rng.random_range(0..n_bins) as u16).collect(),
        };
        let stream = SymbolStream {
            indices,
            grid_id: grid.descriptor(),
            original_length: len,
        };

        let lz = lz78_encode(&stream).unwrap();
        assert_eq!(lz78_decode(&lz).unwrap().indices, stream.indices);

        if !stream.is_empty() {
            let cb = build_huffman(&pmf_empirical(&stream, &grid).unwrap()).unwrap();
            let blob = encode(&stream, &cb).unwrap();
            assert_eq!(decode(&blob, &cb).unwrap().indices, stream.indices);
        }
        checked += 1;
    }

    // The harness treats losslessness as a hard invariant and must not
    // abort on a clean run.
    let config = ExperimentConfig {
        rounds: 3,
        coders: vec![
            CoderChoice::Lz78,
            CoderChoice::HuffmanGenNorm,
            CoderChoice::HuffmanNorm,
            CoderChoice::HuffmanEmpirical,
        ],
        ..ExperimentConfig::default()
    };
    let harness_clean = run_experiment(&config).is_ok();

    report(
        5,
        "losslessness",
        checked == 10_000 && harness_clean,
        &format!("{checked} fuzzed streams round-tripped on both coders; harness clean={harness_clean}"),
    );
}

#[test]
fn criterion_06_coder_ordering_fig5_analog() {
    let grid = build_grid(Fp8Format::e5m2());
    let mut gennorm_wins = 0;
    let mut lz_losses = 0;
    let trials = 100;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(60_000 + trial);
        let beta = rng.random_range(0.5..=1.5);
        let alpha = 10.0_f64.powf(rng.random_range(-4.0..-2.0));
        let truth = GenNormParams::new(0.0, alpha, beta).unwrap();
        let values = truth.sample(100_000, 70_000 + trial);
        let stream = quantize(&values, &grid).unwrap();

        let gn = fit(&values).unwrap().params;
        let nm = fit_norm(&values).unwrap();
        let cb_gn = build_huffman(&pmf_from_model(&gn, &grid, ModelClass::GenNorm).unwrap()).unwrap();
        let cb_nm = build_huffman(&pmf_from_model(&nm, &grid, ModelClass::Norm).unwrap()).unwrap();

        let bits_gn = encode(&stream, &cb_gn).unwrap().code_bits();
        let bits_nm = encode(&stream, &cb_nm).unwrap().code_bits();
        let bits_lz = lz78_encode(&stream).unwrap().code_bits();

        if bits_gn <= bits_nm {
            gennorm_wins += 1;
        }
        if bits_lz > bits_gn {
            lz_losses += 1;
        }
    }
    report(
        6,
        "coder ordering (compression-rate analog)",
        gennorm_wins >= 95 && lz_losses == trials,
        &format!(
            "huffman-gennorm <= huffman-norm in {gennorm_wins}/{trials}, \
             lz78 worse than huffman-gennorm in {lz_losses}/{trials}"
        ),
    );
}

#[test]
fn criterion_07_fit_quality_ordering_fig2_analog() {
    let mut wins = 0;
    let trials = 100;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(71_000 + trial);
        let beta = rng.random_range(0.5..=1.5);
        let truth = GenNormParams::new(0.0, 1.0, beta).unwrap();
        let data = truth.sample(100_000, 72_000 + trial);
        let gn = fit(&data).unwrap().params;
        let nm = fit_norm(&data).unwrap();
        let w2_gn = wasserstein(&data, &gn, WassersteinOrder::Two).unwrap();
        let w2_nm = wasserstein(&data, &nm, WassersteinOrder::Two).unwrap();
        if w2_gn < w2_nm {
            wins += 1;
        }
    }
    report(
        7,
        "fit-quality ordering (Wasserstein analog)",
        wins >= 95,
        &format!("w2_gennorm < w2_norm in {wins}/{trials} trials"),
    );
}

#[test]
fn criterion_08_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (d, h, c, n) = (4usize, 5usize, 3usize, 8usize);
    let model = ToyModel::init(d, h, c, &mut rng);
    let data = gradcomp::harness::ClientDataset {
        client_id: 0,
        input_dim: d,
        features: (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        labels: (0..n).map(|i| i % c).collect(),
    };
    let grads = gradcomp::harness::local_gradient(&model, &data).unwrap();

    let flat_grad = |g: &Gradients, idx: usize| -> f64 {
        let (n1, n2, n3) = (d * h, d * h + h, d * h + h + h * c);
        if idx < n1 {
            g.w1[idx]
        } else if idx < n2 {
            g.b1[idx - n1]
        } else if idx < n3 {
            g.w2[idx - n2]
        } else {
            g.b2[idx - n3]
        }
    };
    let nudge = |m: &ToyModel, idx: usize, delta: f64| -> ToyModel {
        let mut out = m.clone();
        let (n1, n2, n3) = (d * h, d * h + h, d * h + h + h * c);
        if idx < n1 {
            out.w1[idx] += delta;
        } else if idx < n2 {
            out.b1[idx - n1] += delta;
        } else if idx < n3 {
            out.w2[idx - n2] += delta;
        } else {
            out.b2[idx - n3] += delta;
        }
        out
    };

    let total = d * h + h + h * c + c;
    let step = 1e-5;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..200 {
        let idx = rng.random_range(0..total);
        let plus = nudge(&model, idx, step).evaluate(&data).unwrap().0;
        let minus = nudge(&model, idx, -step).evaluate(&data).unwrap().0;
        let numeric = (plus - minus) / (2.0 * step);
        let analytic = flat_grad(&grads, idx);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2);
        worst_rel = worst_rel.max(rel);
    }
    report(
        8,
        "gradient correctness",
        worst_rel <= 1e-6,
        &format!("200 probed coordinates, worst relative deviation {worst_rel:.2e}"),
    );
}

#[test]
fn criterion_09_end_to_end_ledger() {
    let started = Instant::now();
    let config = ExperimentConfig::default(); // U=4, T=50, blob task
    let out_a = run_experiment(&config).unwrap();
    let out_b = run_experiment(&config).unwrap();
    let elapsed = started.elapsed();

    // Eq-5 style total versus an independent recount of the entries.
    let recount: u64 = out_a
        .ledger
        .entries()
        .iter()
        .map(|e| e.payload_bits + e.header_bits)
        .sum();
    let totals_ok = out_a.ledger.total_bits() == recount;

    // Byte-identical reruns.
    let dir = std::env::temp_dir().join(format!("gradcomp-acceptance-{}", std::process::id()));
    let (dir_a, dir_b) = (dir.join("a"), dir.join("b"));
    out_a.write_outputs(&dir_a).unwrap();
    out_b.write_outputs(&dir_b).unwrap();
    let mut identical = true;
    for file in ["ledger.csv", "rounds.csv", "fits.csv"] {
        identical &= std::fs::read(dir_a.join(file)).unwrap() == std::fs::read(dir_b.join(file)).unwrap();
    }
    std::fs::remove_dir_all(&dir).unwrap();

    // Quantized-gradient training stays close to full precision.
    let cmp = accuracy_comparison(&config).unwrap();
    let fp_final = *cmp.full_precision.accuracy.last().unwrap();
    let q_final = *cmp.quantized.accuracy.last().unwrap();
    let accuracy_ok = (fp_final - q_final).abs() <= 0.05;

    let within_budget = elapsed.as_secs() < 300;
    report(
        9,
        "end-to-end ledger",
        totals_ok && identical && accuracy_ok && within_budget,
        &format!(
            "total {} bits == recount, reruns byte-identical={identical}, \
             accuracy fp={fp_final:.4} vs quantized={q_final:.4}, two runs took {elapsed:?}",
            out_a.ledger.total_bits()
        ),
    );
}

#[test]
fn criterion_10_wire_formats() {
    let grid = build_grid(Fp8Format::e5m2());
    let params = GenNormParams::new(0.0, 1e-3, 1.1).unwrap();
    let values = params.sample(400, 1010);
    let stream = quantize(&values, &grid).unwrap();

    // Bit-exact round-trips for both containers.
    let cb = build_huffman(&pmf_from_model(&params, &grid, ModelClass::GenNorm).unwrap()).unwrap();
    let blob_bytes = encode(&stream, &cb).unwrap().to_bytes();
    let blob_roundtrip = BitBlob::from_bytes(&blob_bytes).unwrap().to_bytes() == blob_bytes;

    let dir = std::env::temp_dir().join(format!("gradcomp-acceptance-gtf-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let gtf_path = dir.join("x.gtf");
    let record = GradientRecord::new(
        "upper",
        3,
        vec![values.len() as u64],
        values.iter().map(|&v| v as f32).collect(),
    )
    .unwrap();
    write_records(&gtf_path, &[record.clone()]).unwrap();
    let gtf_bytes = std::fs::read(&gtf_path).unwrap();
    let reread = read_all(&gtf_path).unwrap();
    write_records(&gtf_path, &reread).unwrap();
    let gtf_roundtrip = std::fs::read(&gtf_path).unwrap() == gtf_bytes && reread == vec![record];

    // Corruption fuzz across both formats: every mutation must be caught
    // by a structural check or the CRC.
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut undetected = 0u32;
    for case in 0..10_000 {
        let target = if case % 2 == 0 { &blob_bytes } else { &gtf_bytes };
        let mut mutated = target.clone();
        for _ in 0..rng.random_range(1..=4) {
            let at = rng.random_range(0..mutated.len());
            mutated[at] ^= 1 << rng.random_range(0..8);
        }
        if &mutated == target {
            continue;
        }
        let detected = if case % 2 == 0 {
            BitBlob::from_bytes(&mutated).is_err()
        } else {
            std::fs::write(&gtf_path, &mutated).unwrap();
            read_all(&gtf_path).is_err()
        };
        if !detected {
            undetected += 1;
        }
    }
    std::fs::remove_dir_all(&dir).unwrap();

    report(
        10,
        "wire formats",
        blob_roundtrip && gtf_roundtrip && undetected == 0,
        &format!(
            "GCB1 bit-exact={blob_roundtrip}, GTF1 bit-exact={gtf_roundtrip}, \
             corrupted-file detections missed {undetected}/10000"
        ),
    );
}
