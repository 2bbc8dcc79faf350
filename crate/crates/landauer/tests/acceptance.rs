//! Acceptance suite: every release-gating property, one test per criterion,
//! each printing a PASS line with the measured numbers (run with
//! `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criteria 1-3 are exhaustive-counting theorems (zero tolerance), 4-12 are
//! Monte-Carlo checks at frozen seeds with explicitly computed statistical
//! bands.

use landauer::bits::{BitString, SubsetIndex};
use landauer::games::{
    GameAdversary, GameVariant, MemoryGameConfig, ReversiblePermutation, run_memory_game,
};
use landauer::hashing::{
    lhl_distance_oracle, min_entropy, toeplitz_family_size, toeplitz_pair_count,
    FiniteDistribution,
};
use landauer::ledger::AgentId;
use landauer::protocol::{
    run_ot, run_ot_batch, run_ske, run_ske_batch, transcript_view, AliceStrategy, BobStrategy,
    EveStrategy, NoiseModel, OtParams, OtStatus, SkeParams, SkeStatus,
};
use landauer::recon::estimate_error;
use landauer::rng::{derive_seed, stream_rng};
use rand::Rng;

fn pass(criterion: u32, detail: String) {
    println!("acceptance {criterion:02}: PASS ({detail})");
}

fn ske_desk() -> SkeParams {
    SkeParams {
        nu: 12,
        k: 4,
        t: 2000,
        s: 2000,
        delta_prime: 0.05,
        eta: 30,
        epsilon_pa: 30.0,
        abort_threshold: None,
        key_len_cap: None,
    }
}

fn ot_desk() -> OtParams {
    OtParams {
        nu: 10,
        n: 128,
        eta: 40,
        classicize: false,
    }
}

/// Criterion 1: counting bound over the full grid, 100 random permutations,
/// zero violations; the adversarially structured permutation achieves the
/// bound with equality.
#[test]
fn c01_landauer_counting_bound_and_tightness() {
    let (len_x, len_y) = (12usize, 6usize);
    let grid: Vec<(usize, usize)> = [0usize, 2, 4]
        .iter()
        .flat_map(|&w_in| (w_in + 1..=w_in + 8).map(move |w_out| (w_in, w_out)))
        .collect();
    assert_eq!(grid.len(), 24);

    let mut checked = 0u64;
    for seed in 0..100u64 {
        let perm = ReversiblePermutation::random(len_x, len_y, seed).unwrap();
        for &(w_in, w_out) in &grid {
            let out = perm.count_pow_couples(w_in, w_out);
            assert!(
                out.within_bound,
                "seed {seed} w_in {w_in} w_out {w_out}: count {} > bound {}",
                out.count, out.bound
            );
            assert!(out.probability <= out.bound_probability + f64::EPSILON);
            checked += 1;
        }
    }

    for &(w_in, w_out) in &grid {
        let perm = ReversiblePermutation::adversarial(len_x, len_y, w_in, w_out).unwrap();
        let out = perm.count_pow_couples(w_in, w_out);
        assert_eq!(
            out.count, out.bound,
            "adversarial permutation not tight at w_in {w_in} w_out {w_out}"
        );
    }

    pass(1, format!("{checked} grid cells, 0 violations; 24/24 tight"));
}

/// Criterion 2: exact 2-universality count over the full family.
#[test]
fn c02_two_universality_exact_count() {
    let mut rng = stream_rng(0xACC2, 0);
    let mut checked = 0u64;
    for &(n, m) in &[(3usize, 1usize), (4, 2), (5, 2)] {
        let expected = toeplitz_family_size(n, m) >> (2 * m);
        for _ in 0..50 {
            let x1: u64 = rng.gen_range(0..1u64 << n);
            let x2 = loop {
                let v = rng.gen_range(0..1u64 << n);
                if v != x1 {
                    break v;
                }
            };
            for y1 in 0..1u64 << m {
                for y2 in 0..1u64 << m {
                    let count = toeplitz_pair_count(n, m, x1, x2, y1, y2).unwrap();
                    assert_eq!(
                        count, expected,
                        "(n,m)=({n},{m}) x=({x1},{x2}) y=({y1},{y2})"
                    );
                    checked += 1;
                }
            }
        }
    }
    pass(2, format!("{checked} (pair, output) cells, all equal #H/2^2m"));
}

/// Criterion 3: exact leftover-hash distance never violates `2^-epsilon`
/// across 100 randomized distributions.
#[test]
fn c03_leftover_hash_lemma_bound() {
    let mut rng = stream_rng(0xACC3, 0);
    let mut worst_margin = f64::INFINITY;
    for i in 0..100u32 {
        let epsilon = 1 + (i % 3) as i32;
        // weights in [0.5, 1.5] bound the top probability by 3/support, so
        // H_inf >= log2(support) - 1.6; these supports keep
        // floor(H_inf) >= 2 eps + 1 and hence m >= 1
        let (support_size, n_min) = match epsilon {
            1 => (64usize, 6usize),
            2 => (128, 7),
            _ => (512, 9),
        };
        let n = n_min + (i as usize % (11 - n_min));
        let mut values: Vec<u64> = Vec::with_capacity(support_size);
        while values.len() < support_size {
            let v = rng.gen_range(0..1u64 << n);
            if !values.contains(&v) {
                values.push(v);
            }
        }
        let mut weights: Vec<f64> = (0..support_size).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let drift = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        let dist = FiniteDistribution::new(
            values.iter().cloned().zip(weights.iter().cloned()).collect(),
        )
        .unwrap();

        let h_min = min_entropy(&dist);
        let m = (h_min.floor() as i32 - 2 * epsilon) as usize;
        assert!(m >= 1, "distribution {i}: m = {m}");
        // the lemma's precondition H_inf >= m + 2 eps holds by construction
        assert!(h_min >= m as f64 + 2.0 * epsilon as f64);
        let delta = lhl_distance_oracle(&dist, n, m).unwrap();
        let bound = 2f64.powi(-epsilon);
        assert!(
            delta <= bound,
            "distribution {i}: delta {delta} > 2^-{epsilon}"
        );
        worst_margin = worst_margin.min(bound - delta);
    }
    pass(3, format!("100 distributions, 0 violations, worst margin {worst_margin:.4}"));
}

/// Criterion 4: Chernoff coverage of the test-rate estimate.
#[test]
fn c04_chernoff_estimation_coverage() {
    let mut rng = stream_rng(0xACC4, 0);
    let (s, t, eps, p) = (1000usize, 1000usize, 0.05f64, 0.1f64);
    let trials = 10_000u32;
    let mut covered = 0u32;
    for _ in 0..trials {
        let a = BitString::zeros(s + t);
        let mut b = a.clone();
        for i in 0..s + t {
            if rng.gen_bool(p) {
                b.flip(i);
            }
        }
        let p_error = b.hamming_weight() as f64 / (s + t) as f64;
        let test = SubsetIndex::sample(s + t, t, &mut rng).unwrap();
        let est = estimate_error(
            &a.extract(&test).unwrap(),
            &b.extract(&test).unwrap(),
            s,
            eps,
        )
        .unwrap();
        if p_error <= est.p_test + eps {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    let required = 0.9933 - 0.005;
    assert!(coverage >= required, "coverage {coverage} < {required}");
    pass(4, format!("coverage {coverage:.4} >= {required}"));
}

/// Criterion 5: SKE soundness at desk scale, noiseless and under BSC(0.05).
#[test]
fn c05_ske_soundness() {
    let params = ske_desk();

    let clean = run_ske_batch(&params, None, NoiseModel::Noiseless, 0xC05A, 1000).unwrap();
    let clean_matches = clean
        .iter()
        .filter(|s| s.status == SkeStatus::KeyEstablished && s.keys_match == Some(true))
        .count();
    assert_eq!(clean_matches, 1000, "noiseless runs must all match");

    let noisy = run_ske_batch(&params, None, NoiseModel::Bsc { p: 0.05 }, 0xC05B, 1000).unwrap();
    let established = noisy
        .iter()
        .filter(|s| s.status == SkeStatus::KeyEstablished)
        .count();
    let mismatches = noisy
        .iter()
        .filter(|s| s.keys_match == Some(false))
        .count();
    assert_eq!(established, 1000, "BSC(0.05) sits far below the abort threshold");
    let rate = mismatches as f64 / established as f64;
    let bound = 2f64.powi(-(params.eta as i32) + 1);
    assert!(rate <= bound, "mismatch rate {rate} > 2^-(eta-1) = {bound}");
    pass(5, format!(
        "1000/1000 noiseless matches; {mismatches} mismatches in 1000 noisy runs (bound {bound:.1e})"
    ));
}

/// Criterion 6: the produced key length equals the accounting formula
/// exactly.
#[test]
fn c06_ske_key_length_accounting() {
    let params = ske_desk();
    let mut checked = 0;
    for (seed, noise) in [
        (0xC061u64, NoiseModel::Noiseless),
        (0xC062, NoiseModel::Bsc { p: 0.03 }),
        (0xC063, NoiseModel::Bsc { p: 0.05 }),
    ] {
        let out = run_ske(&params, None, noise, seed).unwrap();
        assert_eq!(out.status, SkeStatus::KeyEstablished);
        let w = out.w.unwrap();
        let s = params.s as f64;
        let k = params.k as f64;
        let formula =
            (s * (k - 1.0) / k - s * params.delta_prime - w as f64 - params.epsilon_pa).floor();
        assert_eq!(
            out.key_len.unwrap() as f64,
            formula,
            "key length deviates from the formula at w = {w}"
        );
        assert_eq!(out.key_alice.unwrap().len() as f64, formula);
        checked += 1;
    }
    pass(6, format!("{checked} runs, key length == formula with tolerance 0"));
}

/// Criterion 7: a budget-compliant intercepting Eve guesses an 8-bit key no
/// better than chance (99% binomial CI).
#[test]
fn c07_ske_security_store_fraction_eve() {
    let params = SkeParams {
        key_len_cap: Some(8),
        ..ske_desk()
    };
    let trials = 5000u64;
    let eve = EveStrategy::StoreFraction {
        bits: 1 << params.nu,
    };
    let summaries =
        run_ske_batch(&params, Some(eve), NoiseModel::Noiseless, 0xC07, trials).unwrap();
    let mut hits = 0u64;
    for s in &summaries {
        assert_eq!(s.status, SkeStatus::KeyEstablished);
        assert!(s.eve_consumed.unwrap() <= 1 << params.nu);
        if s.eve_guess_matches == Some(true) {
            hits += 1;
        }
    }
    let p = 2f64.powi(-8);
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    let z = 2.576; // 99% two-sided
    assert!(
        (hits as f64 - mean).abs() <= z * sd,
        "hits {hits} outside {mean} +/- {:.1}",
        z * sd
    );
    pass(7, format!("{hits} exact guesses in {trials} runs, CI {mean:.1} +/- {:.1}", z * sd));
}

/// Criterion 8: OT delivers m_i exactly, always.
#[test]
fn c08_ot_perfect_soundness() {
    let params = ot_desk();
    for choice in [0u8, 1] {
        let summaries = run_ot_batch(
            &params,
            AliceStrategy::Honest,
            BobStrategy::Honest { choice },
            0xC08 + choice as u64,
            1000,
        )
        .unwrap();
        let good = summaries
            .iter()
            .filter(|s| s.status == OtStatus::Delivered && s.message_matches == Some(true))
            .count();
        assert_eq!(good, 1000, "choice {choice}");
    }
    pass(8, "2000/2000 honest deliveries equal m_i".into());
}

/// Criterion 9: Alice's transcript view is bit-identical across Bob's
/// choice when all other randomness is fixed.
#[test]
fn c09_ot_security_for_bob() {
    let params = ot_desk();
    let mut compared = 0;
    for pair in 0..100u64 {
        let seed = derive_seed(0xC09, pair);
        let a = run_ot(&params, AliceStrategy::Honest, BobStrategy::Honest { choice: 0 }, seed)
            .unwrap();
        let b = run_ot(&params, AliceStrategy::Honest, BobStrategy::Honest { choice: 1 }, seed)
            .unwrap();
        let view_a =
            serde_json::to_vec(&transcript_view(&a.transcript, AgentId::Alice)).unwrap();
        let view_b =
            serde_json::to_vec(&transcript_view(&b.transcript, AgentId::Alice)).unwrap();
        assert_eq!(view_a, view_b, "seed pair {pair}");
        compared += 1;
    }
    pass(9, format!("{compared} seed pairs, 0 view differences"));
}

/// Criterion 10: a Bob who flips f bits of the returned XOR register is
/// caught at the hypergeometric rate.
#[test]
fn c10_ot_cheat_detection() {
    let params = ot_desk();
    let register = params.register_len() as f64;
    let raw = params.raw_len() as f64;
    let trials = 10_000u64;
    let mut details = Vec::new();
    for (i, flips) in [1usize, 16, 256].into_iter().enumerate() {
        let summaries = run_ot_batch(
            &params,
            AliceStrategy::Honest,
            BobStrategy::FlipBits { choice: 0, flips },
            0xC10 + i as u64,
            trials,
        )
        .unwrap();
        let aborts = summaries
            .iter()
            .filter(|s| s.status == OtStatus::AbortedCheck)
            .count();
        // P(all flips miss the raw set) by the hypergeometric product
        let mut miss = 1.0f64;
        for j in 0..raw as usize {
            miss *= (register - flips as f64 - j as f64) / (register - j as f64);
        }
        let expect = 1.0 - miss;
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        let rate = aborts as f64 / trials as f64;
        assert!(
            (rate - expect).abs() <= 3.0 * sigma,
            "flips {flips}: rate {rate} expect {expect} (3 sigma {:.4})",
            3.0 * sigma
        );
        details.push(format!("f={flips}: {rate:.4} vs {expect:.4}"));
    }
    pass(10, details.join(", "));
}

/// Criterion 11: exhaustive memory game, compliant copy-quarter adversary:
/// full-string success stays below the min-entropy bound.
#[test]
fn c11_memory_game_exhaustive_bound() {
    let cfg = MemoryGameConfig {
        nu: 3,
        k: 4,
        variant: GameVariant::Exhaustive,
        adversary: GameAdversary::CopyPrefix { bits: 8 },
        trials: 100_000,
    };
    let stats = run_memory_game(&cfg, 0xC11).unwrap();
    assert_eq!(stats.budget_violations, 0);
    let bound = 2f64.powi(-((cfg.k as i32 - 1) * (1 << cfg.nu)));
    let sigma = (cfg.trials as f64 * bound).sqrt();
    let allowed = cfg.trials as f64 * bound + 3.0 * sigma;
    assert!(
        (stats.full_success as f64) <= allowed,
        "{} successes > {allowed}",
        stats.full_success
    );
    pass(11, format!(
        "{} full-string successes in {} trials (allowed {allowed:.2})",
        stats.full_success, cfg.trials
    ));
}

/// Criterion 12: never-copied bits are unguessable for every compliant
/// adversary (4-sigma binomial around 1/2).
#[test]
fn c12_never_copied_bits_unguessable() {
    let adversaries = [
        GameAdversary::CopyPrefix { bits: 64 },
        GameAdversary::CopyRandom { bits: 64 },
        GameAdversary::NoCopy,
    ];
    let mut details = Vec::new();
    for adversary in adversaries {
        let cfg = MemoryGameConfig {
            nu: 6,
            k: 4,
            variant: GameVariant::Sampled { t: 32 },
            adversary,
            trials: 100_000,
        };
        let stats = run_memory_game(&cfg, 0xC12).unwrap();
        assert_eq!(stats.budget_violations, 0);
        let rate = stats.unknown_bit_rate();
        let sigma = 0.5 / (stats.unknown_total as f64).sqrt();
        assert!(
            (rate - 0.5).abs() <= 4.0 * sigma,
            "{}: rate {rate} off 0.5 by more than 4 sigma ({sigma:.2e})",
            adversary.label()
        );
        details.push(format!("{}: {rate:.5}", adversary.label()));
    }
    pass(12, details.join(", "));
}
