//! Executes a resolved [`RunConfig`] and produces the stdout summary plus
//! optional detail files. Summaries carry the configuration echo so a run
//! is reproducible from its own output.

use serde::Serialize;
use serde_json::json;

use landauer::bits::BitString;
use landauer::games::{
    aggregate_stats, run_memory_game_detailed, GamesError, MemoryGameConfig,
    ReversiblePermutation,
};
use landauer::hashing::{
    lhl_distance_oracle, min_entropy, toeplitz_family_size, toeplitz_pair_count,
    FiniteDistribution, HashingError, ToeplitzHash,
};
use landauer::protocol::{
    run_ot_batch, run_ske_batch, AliceStrategy, OtStatus, ProtocolError, SkeStatus,
};
use landauer::recon::{ir_hash_length, reconcile, ReconError};
use landauer::rng::{derive_seed, stream_rng};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{OutputFormat, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Games(#[from] GamesError),
    #[error(transparent)]
    Hashing(#[from] HashingError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

pub struct RunReport {
    pub summary: serde_json::Value,
    /// Invariant violations observed; a nonzero count is the test signal
    /// and maps to exit code 2.
    pub violations: u64,
}

pub fn execute(config: &RunConfig) -> Result<RunReport, RunnerError> {
    let pool = rayon_pool(config)?;
    pool.install(|| dispatch(config))
}

fn rayon_pool(config: &RunConfig) -> Result<rayon::ThreadPool, RunnerError> {
    let jobs = match config {
        RunConfig::Ske { common, .. }
        | RunConfig::Ot { common, .. }
        | RunConfig::MemoryGame { common, .. }
        | RunConfig::LandauerCount { common, .. }
        | RunConfig::LhlCheck { common, .. }
        | RunConfig::UniversalityCheck { common, .. }
        | RunConfig::ReconcileBench { common, .. } => common.jobs.unwrap_or(0),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunnerError::Config(format!("cannot build worker pool: {e}")))
}

fn write_detail(
    path: &Option<std::path::PathBuf>,
    format: OutputFormat,
    json: impl FnOnce() -> serde_json::Value,
    csv: impl FnOnce() -> String,
) -> Result<(), RunnerError> {
    if let Some(path) = path {
        let bytes = match format {
            OutputFormat::Json => {
                let mut text = serde_json::to_string_pretty(&json()).expect("serializable");
                text.push('\n');
                text
            }
            OutputFormat::Csv => csv(),
        };
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

fn dispatch(config: &RunConfig) -> Result<RunReport, RunnerError> {
    match config {
        RunConfig::Ske {
            params,
            eve,
            noise,
            common,
        } => {
            let summaries = run_ske_batch(params, *eve, *noise, common.seed, common.trials)?;
            let count = |status: SkeStatus| {
                summaries.iter().filter(|s| s.status == status).count() as u64
            };
            let established = count(SkeStatus::KeyEstablished);
            let mismatches = summaries
                .iter()
                .filter(|s| s.keys_match == Some(false))
                .count() as u64;
            let key_lens: Vec<usize> = summaries.iter().filter_map(|s| s.key_len).collect();
            let mean =
                |f: &dyn Fn(&landauer::protocol::SkeSummary) -> f64| -> f64 {
                    if summaries.is_empty() {
                        0.0
                    } else {
                        summaries.iter().map(|s| f(s)).sum::<f64>() / summaries.len() as f64
                    }
                };
            let eve_hits = summaries
                .iter()
                .filter(|s| s.eve_guess_matches == Some(true))
                .count() as u64;
            let summary = json!({
                "config": config,
                "results": {
                    "established": established,
                    "aborted_no_receipt": count(SkeStatus::AbortedNoReceipt),
                    "aborted_error_rate": count(SkeStatus::AbortedErrorRate),
                    "aborted_reconcile": count(SkeStatus::AbortedReconcile),
                    "key_mismatches": mismatches,
                    "mismatch_rate": if established > 0 { mismatches as f64 / established as f64 } else { 0.0 },
                    "key_len_min": key_lens.iter().min(),
                    "key_len_max": key_lens.iter().max(),
                    "mean_p_test": mean(&|s| s.p_test.unwrap_or(0.0)),
                    "mean_alice_consumed": mean(&|s| s.alice_consumed as f64),
                    "mean_bob_consumed": mean(&|s| s.bob_consumed as f64),
                    "alice_budget": params.alice_budget(),
                    "bob_budget": params.bob_budget(),
                    "max_eve_consumed": summaries.iter().filter_map(|s| s.eve_consumed).max(),
                    "eve_guess_hits": eve_hits,
                },
            });
            write_detail(
                &common.output,
                common.format,
                || serde_json::to_value(&summaries).expect("serializable"),
                || {
                    let mut out = String::from(
                        "run,status,key_len,keys_match,p_test,w,alice_consumed,bob_consumed,eve_consumed,eve_guess\n",
                    );
                    for (i, s) in summaries.iter().enumerate() {
                        out.push_str(&format!(
                            "{i},{:?},{},{},{},{},{},{},{},{}\n",
                            s.status,
                            opt(s.key_len),
                            opt(s.keys_match),
                            opt(s.p_test),
                            opt(s.w),
                            s.alice_consumed,
                            s.bob_consumed,
                            opt(s.eve_consumed),
                            opt(s.eve_guess_matches),
                        ));
                    }
                    out
                },
            )?;
            Ok(RunReport {
                summary,
                violations: 0,
            })
        }

        RunConfig::Ot {
            params,
            bob,
            common,
        } => {
            let summaries =
                run_ot_batch(params, AliceStrategy::Honest, *bob, common.seed, common.trials)?;
            let delivered = summaries
                .iter()
                .filter(|s| s.status == OtStatus::Delivered)
                .count() as u64;
            let mismatches = summaries
                .iter()
                .filter(|s| s.message_matches == Some(false))
                .count() as u64;
            let summary = json!({
                "config": config,
                "results": {
                    "delivered": delivered,
                    "aborted_check": common.trials - delivered,
                    "message_mismatches": mismatches,
                    "mean_alice_consumed": summaries.iter().map(|s| s.alice_consumed as f64).sum::<f64>() / summaries.len().max(1) as f64,
                    "mean_bob_consumed": summaries.iter().map(|s| s.bob_consumed as f64).sum::<f64>() / summaries.len().max(1) as f64,
                    "alice_budget": params.alice_budget(),
                    "bob_budget": params.bob_budget(),
                },
            });
            write_detail(
                &common.output,
                common.format,
                || serde_json::to_value(&summaries).expect("serializable"),
                || {
                    let mut out =
                        String::from("run,status,bob_choice,message_matches,alice_consumed,bob_consumed\n");
                    for (i, s) in summaries.iter().enumerate() {
                        out.push_str(&format!(
                            "{i},{:?},{},{},{},{}\n",
                            s.status,
                            s.bob_choice,
                            opt(s.message_matches),
                            s.alice_consumed,
                            s.bob_consumed
                        ));
                    }
                    out
                },
            )?;
            Ok(RunReport {
                summary,
                violations: mismatches,
            })
        }

        RunConfig::MemoryGame { config: game, common } => {
            let game = MemoryGameConfig {
                trials: common.trials,
                ..*game
            };
            let records = run_memory_game_detailed(&game, common.seed)?;
            let stats = aggregate_stats(&game, &records);
            let summary = json!({
                "config": config,
                "results": {
                    "stats": stats,
                    "full_success_rate": stats.full_success_rate(),
                    "known_bit_rate": stats.known_bit_rate(),
                    "unknown_bit_rate": stats.unknown_bit_rate(),
                    "min_entropy_rate": stats.min_entropy_rate(),
                    "min_entropy_rate_target": (game.k as f64 - 1.0) / game.k as f64,
                },
            });
            write_detail(
                &common.output,
                common.format,
                || serde_json::to_value(&records).expect("serializable"),
                || {
                    let mut out = String::from(
                        "trial,quiz_size,known_in_quiz,unknown_in_quiz,known_correct,unknown_correct,full_success,budget_violation\n",
                    );
                    for r in &records {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            r.trial,
                            r.quiz_size,
                            r.known_in_quiz,
                            r.unknown_in_quiz,
                            r.known_correct,
                            r.unknown_correct,
                            r.full_success,
                            r.budget_violation
                        ));
                    }
                    out
                },
            )?;
            Ok(RunReport {
                summary,
                violations: stats.budget_violations,
            })
        }

        RunConfig::LandauerCount {
            len_x,
            len_y,
            cells,
            common,
        } => {
            #[derive(Serialize)]
            struct CellReport {
                w_in: usize,
                w_out: usize,
                bound: u64,
                max_count: u64,
                violations: u64,
                adversarial_count: u64,
                adversarial_tight: bool,
            }
            let per_perm: Vec<Vec<u64>> = (0..common.trials)
                .into_par_iter()
                .map(|i| {
                    let perm = ReversiblePermutation::random(
                        *len_x,
                        *len_y,
                        derive_seed(common.seed, i),
                    )
                    .expect("validated dimensions");
                    cells
                        .iter()
                        .map(|&(w_in, w_out)| perm.count_pow_couples(w_in, w_out).count)
                        .collect()
                })
                .collect::<Vec<_>>();
            // validate once up front so dimension errors surface as config
            // errors rather than worker panics
            ReversiblePermutation::identity(*len_x, *len_y)?;

            let mut reports = Vec::with_capacity(cells.len());
            let mut total_violations = 0u64;
            for (ci, &(w_in, w_out)) in cells.iter().enumerate() {
                let adv = ReversiblePermutation::adversarial(*len_x, *len_y, w_in, w_out)?;
                let adv_out = adv.count_pow_couples(w_in, w_out);
                let bound = adv_out.bound;
                let mut max_count = 0u64;
                let mut violations = 0u64;
                for counts in &per_perm {
                    max_count = max_count.max(counts[ci]);
                    if counts[ci] > bound {
                        violations += 1;
                    }
                }
                total_violations += violations;
                if !adv_out.within_bound {
                    total_violations += 1;
                }
                reports.push(CellReport {
                    w_in,
                    w_out,
                    bound,
                    max_count,
                    violations,
                    adversarial_count: adv_out.count,
                    adversarial_tight: adv_out.count == bound,
                });
            }
            let all_tight = reports.iter().all(|r| r.adversarial_tight);
            let summary = json!({
                "config": config,
                "results": {
                    "permutations": common.trials,
                    "cells": reports,
                    "total_violations": total_violations,
                    "all_adversarial_tight": all_tight,
                },
            });
            write_detail(
                &common.output,
                common.format,
                || summary["results"].clone(),
                || {
                    let mut out =
                        String::from("w_in,w_out,bound,max_count,violations,adversarial_count\n");
                    if let Some(cells) = summary["results"]["cells"].as_array() {
                        for c in cells {
                            out.push_str(&format!(
                                "{},{},{},{},{},{}\n",
                                c["w_in"], c["w_out"], c["bound"], c["max_count"],
                                c["violations"], c["adversarial_count"]
                            ));
                        }
                    }
                    out
                },
            )?;
            Ok(RunReport {
                summary,
                violations: total_violations,
            })
        }

        RunConfig::LhlCheck {
            distributions,
            common,
        } => {
            #[derive(Serialize)]
            struct DistReport {
                index: u32,
                n: usize,
                m: usize,
                epsilon: i32,
                h_min: f64,
                delta: f64,
                bound: f64,
                ok: bool,
            }
            let mut rng = stream_rng(common.seed, 0);
            let mut reports = Vec::new();
            let mut violations = 0u64;
            let mut worst_margin = f64::INFINITY;
            for i in 0..*distributions {
                let epsilon = 1 + (i % 3) as i32;
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
                let mut weights: Vec<f64> =
                    (0..support_size).map(|_| rng.gen_range(0.5..1.5)).collect();
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                let drift = 1.0 - weights.iter().sum::<f64>();
                weights[0] += drift;
                let dist = FiniteDistribution::new(
                    values.iter().cloned().zip(weights.iter().cloned()).collect(),
                )?;
                let h_min = min_entropy(&dist);
                let m = (h_min.floor() as i32 - 2 * epsilon).max(1) as usize;
                let delta = lhl_distance_oracle(&dist, n, m)?;
                let bound = 2f64.powi(-epsilon);
                let ok = delta <= bound;
                if !ok {
                    violations += 1;
                }
                worst_margin = worst_margin.min(bound - delta);
                reports.push(DistReport {
                    index: i,
                    n,
                    m,
                    epsilon,
                    h_min,
                    delta,
                    bound,
                    ok,
                });
            }
            let summary = json!({
                "config": config,
                "results": {
                    "distributions": distributions,
                    "violations": violations,
                    "worst_margin": worst_margin,
                },
            });
            write_detail(
                &common.output,
                common.format,
                || serde_json::to_value(&reports).expect("serializable"),
                || {
                    let mut out = String::from("index,n,m,epsilon,h_min,delta,bound,ok\n");
                    for r in &reports {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            r.index, r.n, r.m, r.epsilon, r.h_min, r.delta, r.bound, r.ok
                        ));
                    }
                    out
                },
            )?;
            Ok(RunReport {
                summary,
                violations,
            })
        }

        RunConfig::UniversalityCheck { dims, pairs, common } => {
            let mut rng = stream_rng(common.seed, 0);
            let mut checked = 0u64;
            let mut mismatches = 0u64;
            for &(n, m) in dims {
                let expected = toeplitz_family_size(n, m) >> (2 * m);
                for _ in 0..*pairs {
                    let x1: u64 = rng.gen_range(0..1u64 << n);
                    let x2 = loop {
                        let v = rng.gen_range(0..1u64 << n);
                        if v != x1 {
                            break v;
                        }
                    };
                    for y1 in 0..1u64 << m {
                        for y2 in 0..1u64 << m {
                            let count = toeplitz_pair_count(n, m, x1, x2, y1, y2)?;
                            checked += 1;
                            if count != expected {
                                mismatches += 1;
                            }
                        }
                    }
                }
            }
            let summary = json!({
                "config": config,
                "results": { "cells_checked": checked, "mismatches": mismatches },
            });
            Ok(RunReport {
                summary,
                violations: mismatches,
            })
        }

        RunConfig::ReconcileBench {
            s,
            p,
            delta_prime,
            eta,
            common,
        } => {
            if *s > 24 {
                return Err(RunnerError::Config(format!(
                    "reconcile-bench runs the literal ball search; s must be <= 24, got {s}"
                )));
            }
            let w = ir_hash_length(*s, *p, *delta_prime, *eta)?;
            let results: Vec<(bool, bool)> = (0..common.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream_rng(common.seed, trial);
                    let a = BitString::random(*s, &mut rng);
                    let mut b = a.clone();
                    for i in 0..*s {
                        if rng.gen_bool(*p) {
                            b.flip(i);
                        }
                    }
                    let radius = (*s as f64 * (p + delta_prime)).floor() as usize;
                    let typical = a.hamming_distance(&b).expect("equal lengths") <= radius;
                    let h = ToeplitzHash::random(*s, w, &mut rng);
                    let target = h.hash(&b).expect("lengths match");
                    let ok = reconcile(&a, &h, &target).map(|x| x == b).unwrap_or(false);
                    (typical, ok)
                })
                .collect();
            let typical = results.iter().filter(|r| r.0).count() as u64;
            let typical_failures = results.iter().filter(|r| r.0 && !r.1).count() as u64;
            let failures = results.iter().filter(|r| !r.1).count() as u64;
            let summary = json!({
                "config": config,
                "results": {
                    "w": w,
                    "trials": common.trials,
                    "failures": failures,
                    "typical_trials": typical,
                    "typical_failures": typical_failures,
                    "typical_failure_rate": typical_failures as f64 / typical.max(1) as f64,
                    "failure_bound_within_typical": 2f64.powi(-(*eta as i32) + 1),
                },
            });
            Ok(RunReport {
                summary,
                violations: 0,
            })
        }
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}
