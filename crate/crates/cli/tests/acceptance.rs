//! Acceptance suite: one test per shipped guarantee, each printing a single
//! PASS line. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use std::path::Path;
use std::time::Instant;

use ensemble_core::evaluation::transition_report;
use ensemble_core::inference::{
    average_aggregate, e_step, final_scores, init_posterior, log_likelihood, m_step_alpha,
    m_step_pi, run_em, EmConfig,
};
use ensemble_core::scoring::{
    build_schedule, parse_judge_output, render_score_mapping, Strategy, Template,
};
use ensemble_core::selection::select_best;
use ensemble_core::simulation::{brute_force_posterior, grid_search_mle, sample_synthetic, SyntheticSpec};
use ensemble_core::{
    Error, ModelParams, Posterior, Response, ResponseSet, ScoreLevels, ScoreTensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(line: &str) {
    println!("PASS {line}");
}

/// Random tensor where every response keeps at least one judge score.
/// Scores cluster around a per-response category so every category collects
/// posterior mass at initialization.
fn random_tensor(rng: &mut ChaCha8Rng, integer_only: bool) -> ScoreTensor {
    let k = rng.gen_range(2..=5);
    let levels = ScoreLevels::one_to(k);
    let queries = rng.gen_range(1..=6);
    let responses = rng.gen_range(1..=4);
    let judges = rng.gen_range(1..=4);
    let mut tensor = ScoreTensor::new_missing(queries, responses, judges, levels);
    for i in 0..queries {
        for j in 0..responses {
            let anchor = rng.gen_range(1..=k) as f64;
            for jp in 0..judges {
                // The last judge always scores so no response is all-missing.
                if jp + 1 < judges && rng.gen_bool(0.15) {
                    continue;
                }
                let y = if integer_only || rng.gen_bool(0.5) {
                    if rng.gen_bool(0.7) {
                        anchor
                    } else {
                        rng.gen_range(1..=k) as f64
                    }
                } else {
                    rng.gen_range(1.0..=k as f64)
                };
                tensor.set(i, j, jp, y).unwrap();
            }
        }
    }
    tensor
}

fn assert_simplex(row: &[f64], what: &str) {
    let sum: f64 = row.iter().sum();
    assert!((sum - 1.0).abs() <= 1e-9, "{what} sums to {sum}");
    assert!(row.iter().all(|&v| v >= 0.0), "{what} has a negative entry");
}

#[test]
fn acceptance_fractional_posterior_reads_out_exact_mean() {
    let levels = ScoreLevels::one_to(5);
    let rows = vec![0.0, 0.0, 0.0, 0.5, 0.5];
    let posterior = Posterior::new(1, 1, 5, rows).unwrap();
    let s = final_scores(&posterior, &levels)[0][0];
    assert!((s - 4.5).abs() <= 1e-12, "expected 4.5, got {s}");
    pass("a half-half posterior over levels 4 and 5 reads out exactly 4.5");
}

#[test]
fn acceptance_every_step_preserves_probability_simplexes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    for _ in 0..1000 {
        let tensor = random_tensor(&mut rng, false);
        let init = init_posterior(&tensor).unwrap();
        for i in 0..tensor.num_queries() {
            for j in 0..tensor.num_responses() {
                assert_simplex(init.row(i, j), "initial posterior row");
            }
        }
        let alpha = m_step_alpha(&init);
        assert_simplex(&alpha, "updated prior");
        let smoothing = if rng.gen_bool(0.5) { 1e-6 } else { 0.1 };
        let pis = m_step_pi(&init, &tensor, smoothing).unwrap();
        for pi in &pis {
            for row in pi {
                assert_simplex(row, "updated transition row");
            }
        }
        let params = ModelParams::new(alpha, pis).unwrap();
        let post = e_step(&tensor, &params).unwrap();
        for i in 0..tensor.num_queries() {
            for j in 0..tensor.num_responses() {
                assert_simplex(post.row(i, j), "updated posterior row");
            }
        }
    }
    pass("prior, transition rows, and posterior rows stay on the simplex through 1000 random init/E/M steps");
}

#[test]
fn acceptance_unsmoothed_fit_likelihood_never_decreases() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    for case in 0..50 {
        let k = rng.gen_range(2..=5);
        let levels = ScoreLevels::one_to(k);
        let queries = rng.gen_range(10..=20);
        let responses = 4;
        let judges = 4;
        let mut tensor = ScoreTensor::new_missing(queries, responses, judges, levels);
        for i in 0..queries {
            for j in 0..responses {
                let anchor = rng.gen_range(1..=k) as f64;
                for jp in 0..judges {
                    let y = if rng.gen_bool(0.7) {
                        anchor
                    } else {
                        rng.gen_range(1..=k) as f64
                    };
                    tensor.set(i, j, jp, y).unwrap();
                }
            }
        }
        let cfg = EmConfig {
            smoothing: 0.0,
            track_likelihood: true,
            ..EmConfig::default()
        };
        let (_, _, trace) = run_em(&tensor, &cfg).unwrap();
        for (step, pair) in trace.log_likelihood.windows(2).enumerate() {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "case {case}: likelihood fell from {} to {} at step {step}",
                pair[0],
                pair[1]
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass("log-likelihood is non-decreasing on 50 unsmoothed fits of complete integer tensors");
}

#[test]
fn acceptance_posterior_update_matches_direct_bayes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0004);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=5);
        let levels = ScoreLevels::one_to(k);
        let judges = rng.gen_range(1..=4);
        let diags: Vec<f64> = (0..judges).map(|_| rng.gen_range(0.15..0.95)).collect();
        let params = SyntheticSpec::diagonal_params(k, &diags).unwrap();
        let mut tensor = ScoreTensor::new_missing(1, 1, judges, levels.clone());
        for jp in 0..judges {
            if rng.gen_bool(0.8) {
                let y = if rng.gen_bool(0.5) {
                    rng.gen_range(1..=k) as f64
                } else {
                    rng.gen_range(1.0..=k as f64)
                };
                tensor.set(0, 0, jp, y).unwrap();
            }
        }
        let expected = brute_force_posterior(tensor.judge_scores(0, 0), &params, &levels).unwrap();
        let q = e_step(&tensor, &params).unwrap();
        for (a, b) in q.row(0, 0).iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12, "posterior {a} vs oracle {b}");
        }
    }
    pass("posterior update matches the direct-Bayes oracle within 1e-12 on 1000 random instances");
}

#[test]
fn acceptance_fit_likelihood_certified_by_grid_search() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0025 ^ seed);
        let diags = [rng.gen_range(0.55..0.95), rng.gen_range(0.55..0.95)];
        let spec = SyntheticSpec {
            num_queries: 6,
            num_responses: 2,
            levels: ScoreLevels::one_to(2),
            true_params: SyntheticSpec::diagonal_params(2, &diags).unwrap(),
            seed: 1200 + seed,
            fractional: false,
        };
        let (_, tensor) = sample_synthetic(&spec).unwrap();
        let (_, grid_opt) = grid_search_mle(&tensor, 0.05).unwrap();
        let (_, params, _) = run_em(&tensor, &EmConfig::default()).unwrap();
        let em_ll = log_likelihood(&tensor, &params).unwrap();
        assert!(
            em_ll >= grid_opt - 0.05,
            "seed {seed}: fit reached {em_ll}, grid optimum {grid_opt}"
        );
    }
    pass("fitted likelihood is within 0.05 nats of the exhaustive grid optimum on 20 seeds");
}

#[test]
fn acceptance_recovers_generating_parameters() {
    let start = Instant::now();
    let spec = SyntheticSpec {
        num_queries: 500,
        num_responses: 4,
        levels: ScoreLevels::one_to(5),
        true_params: SyntheticSpec::diagonal_params(5, &[0.7, 0.7, 0.7, 0.7]).unwrap(),
        seed: 37,
        fractional: false,
    };
    let (_, tensor) = sample_synthetic(&spec).unwrap();
    let (_, params, _) = run_em(&tensor, &EmConfig::default()).unwrap();
    for (a, b) in params.alpha().iter().zip(spec.true_params.alpha()) {
        assert!((a - b).abs() <= 0.03, "prior entry {a} vs true {b}");
    }
    for jp in 0..4 {
        for (row, true_row) in params.pi(jp).iter().zip(spec.true_params.pi(jp)) {
            for (a, b) in row.iter().zip(true_row) {
                assert!(
                    (a - b).abs() <= 0.05,
                    "judge {jp}: transition entry {a} vs true {b}"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass("500-query synthetic run recovers the prior within 0.03 and transitions within 0.05");
}

/// Selection accuracy against the synthetic ground truth: a query counts as
/// correct when the chosen response has the best true level in its row.
fn selection_accuracy(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> f64 {
    let sets: Vec<ResponseSet> = truths
        .iter()
        .enumerate()
        .map(|(i, row)| ResponseSet {
            query_id: format!("q{i}"),
            responses: (0..row.len())
                .map(|j| Response {
                    model_id: format!("m{j}"),
                    text: "x".into(),
                })
                .collect(),
        })
        .collect();
    let result = select_best(scores, &sets).unwrap();
    let hits = result
        .chosen
        .iter()
        .zip(truths)
        .filter(|(&c, row)| row[c] == *row.iter().max().unwrap())
        .count();
    hits as f64 / truths.len() as f64
}

#[test]
fn acceptance_weighting_beats_averaging_with_unequal_judges() {
    let mut weighted_wins = 0;
    for seed in 0..30u64 {
        let spec = SyntheticSpec {
            num_queries: 1000,
            num_responses: 4,
            levels: ScoreLevels::one_to(5),
            true_params: SyntheticSpec::diagonal_params(5, &[0.95, 0.3, 0.3, 0.3]).unwrap(),
            seed: 17000 + seed,
            fractional: false,
        };
        let (truths, tensor) = sample_synthetic(&spec).unwrap();
        let averaged = average_aggregate(&tensor).unwrap();
        let (posterior, _, _) = run_em(&tensor, &EmConfig::default()).unwrap();
        let weighted = final_scores(&posterior, tensor.levels());
        let acc_avg = selection_accuracy(&averaged, &truths);
        let acc_weighted = selection_accuracy(&weighted, &truths);
        if acc_weighted >= acc_avg {
            weighted_wins += 1;
        }
    }
    assert!(
        weighted_wins >= 27,
        "weighted matched or beat averaging on only {weighted_wins}/30 seeds"
    );
    pass("reliability weighting matches or beats averaging on at least 27 of 30 unequal-judge seeds");
}

#[test]
fn acceptance_schedule_counts_per_strategy() {
    let j = 4;
    // Circular triples over a shuffled order plus reversals: six scores per
    // response per judge, every window's reversal present.
    let windows = build_schedule(j, Strategy::FlippedTriple, 77).unwrap();
    assert_eq!(windows.len(), 2 * j);
    let mut per_response = vec![0usize; j];
    for w in &windows {
        assert_eq!(w.len(), 3);
        for &r in w {
            per_response[r] += 1;
        }
        let reversed: Vec<usize> = w.iter().rev().copied().collect();
        assert!(windows.contains(&reversed), "missing reversal of {w:?}");
    }
    assert!(per_response.iter().all(|&c| c == 6));

    assert_eq!(build_schedule(j, Strategy::Single, 77).unwrap().len(), j);
    let doubles = build_schedule(j, Strategy::Double, 77).unwrap();
    assert_eq!(doubles.len(), j * (j - 1));
    let mut per_response_double = vec![0usize; j];
    for w in &doubles {
        for &r in w {
            per_response_double[r] += 1;
        }
    }
    assert!(per_response_double.iter().all(|&c| c == 2 * (j - 1)));
    assert_eq!(
        build_schedule(j, Strategy::QuadrupleHalf, 77).unwrap().len(),
        12
    );
    pass("schedules count 1 per response, 2(J-1) per response, 6 per response, and 12 windows for the four strategies at J=4");
}

#[test]
fn acceptance_shipped_templates_round_trip_injected_scores() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/templates");
    let files = [
        ("single.txt", 1),
        ("double.txt", 2),
        ("triple.txt", 3),
        ("triple_answer_check.txt", 3),
        ("triple_general.txt", 3),
        ("quadruple.txt", 4),
    ];
    for (file, window) in files {
        let text = std::fs::read_to_string(fixtures.join(file)).unwrap();
        let template = Template::parse(&text).unwrap();
        assert_eq!(template.window_size(), window, "{file}");
        for k in [3usize, 5, 10] {
            let levels = ScoreLevels::one_to(k);
            let scores: Vec<usize> = (0..window).map(|s| 1 + (s * 3 + 1) % k).collect();
            let injected = render_score_mapping(&scores);
            let parsed = parse_judge_output(&injected, window, &levels).unwrap();
            let round_tripped: Vec<usize> = parsed.iter().map(|&c| c + 1).collect();
            assert_eq!(round_tripped, scores, "{file} at K={k}");
        }
    }
    // Malformed and out-of-range outputs raise the matching errors.
    let levels = ScoreLevels::one_to(5);
    assert!(matches!(
        parse_judge_output("no mapping here", 3, &levels),
        Err(Error::Parse { .. })
    ));
    assert!(matches!(
        parse_judge_output(
            "{\"Score for the Response One\": 6, \"Score for the Response Two\": 1, \"Score for the Response Three\": 1}",
            3,
            &levels
        ),
        Err(Error::Range { .. })
    ));
    pass("every shipped template's output format round-trips injected scores for K in {3, 5, 10}, and bad outputs raise parse/range errors");
}

mod pipeline_support;

#[test]
fn acceptance_full_pipeline_is_deterministic_and_fast() {
    let start = Instant::now();
    let run1 = pipeline_support::run_full_pipeline("run1");
    let run2 = pipeline_support::run_full_pipeline("run2");
    for name in [
        "scores.jsonl",
        "final_scores.jsonl",
        "params.jsonl",
        "trace.jsonl",
        "selections.jsonl",
        "report.json",
    ] {
        let a = std::fs::read(run1.out.join(name)).unwrap();
        let b = std::fs::read(run2.out.join(name)).unwrap();
        assert!(!a.is_empty(), "{name} is empty");
        assert_eq!(a, b, "{name} differs between runs");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass("two full pipeline runs against the mock judge produce byte-identical artifacts in under 10 seconds");
}

#[test]
fn acceptance_average_mode_equals_weighted_initialization_readout() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0011);
    for _ in 0..200 {
        let tensor = random_tensor(&mut rng, false);
        let averaged = average_aggregate(&tensor).unwrap();
        let init = init_posterior(&tensor).unwrap();
        let readout = final_scores(&init, tensor.levels());
        for (ra, rb) in averaged.iter().zip(&readout) {
            for (a, b) in ra.iter().zip(rb) {
                assert!((a - b).abs() <= 1e-12, "average {a} vs readout {b}");
            }
        }
    }
    pass("plain averaging equals the weighted model's initialization readout within 1e-12 on 200 random tensors");
}

#[test]
fn acceptance_diagnostics_rank_the_reliable_judge_first() {
    let spec = SyntheticSpec {
        num_queries: 300,
        num_responses: 4,
        levels: ScoreLevels::one_to(5),
        true_params: SyntheticSpec::diagonal_params(5, &[0.95, 0.3, 0.3, 0.3]).unwrap(),
        seed: 4242,
        fractional: false,
    };
    let (_, tensor) = sample_synthetic(&spec).unwrap();
    let (_, params, _) = run_em(&tensor, &EmConfig::default()).unwrap();
    let report = transition_report(&params);
    let ranking = report.ranking_by_diagonal();
    assert_eq!(ranking[0], 0, "reliable judge not ranked first: {ranking:?}");
    let top = report.per_judge[0].diagonal_sum;
    for d in &report.per_judge[1..] {
        assert!(
            top > d.diagonal_sum + 0.5,
            "judge {} diagonal sum {} too close to the reliable judge's {top}",
            d.judge_index,
            d.diagonal_sum
        );
    }
    pass("fitted diagnostics rank the 0.95-diagonal judge clearly above the 0.3-diagonal judges");
}
