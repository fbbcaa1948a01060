//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//!
//! cargo test -p statebench-core --test acceptance

mod common;

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statebench::encoders::{
    decode_hanoi, encode_hanoi, encode_messenger, oracle_vot_map, parse_vot_map, Granularity, Grounding, OracleFlag,
    RepresentationSpec, Structure,
};
use statebench::env::{registry, Difficulty, Env, EpisodeSeed, FamilyState, TerminationCause};
use statebench::environments::hanoi::{optimal_move, Move, Peg};
use statebench::environments::HanoiState;
use statebench::eval::{bootstrap_mean_diff, read_jsonl, replay, run_experiment, summarize, write_jsonl, RunConfig};
use statebench::llm::{CallContext, MockRegistry, ModelConfig};
use statebench::prompting::{PromptBundle, TemplateId};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn read_golden(name: &str) -> String {
    std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn check_golden(name: &str, got: &str) -> Result<(), String> {
    let want = read_golden(name);
    if want == got {
        return Ok(());
    }
    let at = want.bytes().zip(got.bytes()).take_while(|(a, b)| a == b).count();
    Err(format!("{name} differs at byte {at}"))
}

fn encoding_fidelity() -> Outcome {
    let s = HanoiState::initial(3);
    for (structure, file) in [
        (Structure::NaturalLanguage, "hanoi_natural_language.txt"),
        (Structure::DictList, "hanoi_dict_list.txt"),
        (Structure::Matrix, "hanoi_matrix.txt"),
        (Structure::TaggedList, "hanoi_tagged_list.txt"),
    ] {
        check_golden(file, &encode_hanoi(&s, structure))?;
    }
    check_golden(
        "messenger_coordinates.txt",
        &encode_messenger(&coordinates_scenario().observe(None), Structure::Coordinates),
    )?;
    Ok("5 reference encodings byte-equal".into())
}

/// Shortest distance to the solved state for every Hanoi state, by BFS
/// over legal moves.
fn hanoi_distances() -> HashMap<HanoiState, usize> {
    let states = HanoiState::enumerate(3, Peg::C);
    let goal = states.iter().find(|s| s.is_solved()).unwrap().clone();
    let mut dist = HashMap::from([(goal.clone(), 0usize)]);
    let mut queue = VecDeque::from([goal]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        for index in 1..=6 {
            // Moves are reversible, so the reverse graph equals the forward one.
            if let Ok(next) = s.apply(Move::from_action_index(index).unwrap()) {
                if !dist.contains_key(&next) {
                    dist.insert(next.clone(), d + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}

fn environment_correctness() -> Outcome {
    // 10,000 random-walk steps spread over every environment.
    let names: Vec<String> = registry().into_iter().map(|s| s.name).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut steps = 0;
    let mut episode = 0u64;
    while steps < 10_000 {
        let name = &names[episode as usize % names.len()];
        let mut env = Env::reset_named(name, EpisodeSeed::new(4, episode)).map_err(|e| e.to_string())?;
        let n = env.spec().action_count();
        while !env.is_terminal() && steps < 10_000 {
            let t = env.timestep();
            env.step(rng.random_range(1..=n)).map_err(|e| format!("{name}: {e}"))?;
            ensure!(env.timestep() == t + 1, "{name}: timestep did not advance");
            if let FamilyState::Hanoi(s) = env.state() {
                ensure!(HanoiState::from_pegs(s.pegs().clone(), s.goal()).is_ok(), "illegal Hanoi state reached");
            }
            steps += 1;
        }
        if env.is_terminal() {
            ensure!(env.step(1).is_err(), "{name}: stepped past terminal");
            let score = env.normalized_score().unwrap();
            ensure!((0.0..=1.0).contains(&score), "{name}: score {score} out of range");
        }
        episode += 1;
    }

    // The oracle policy from reset.
    let mut env = Env::reset_named("hanoi", EpisodeSeed::new(0, 0)).unwrap();
    let mut moves = 0;
    while !env.is_terminal() {
        let FamilyState::Hanoi(s) = env.state() else { unreachable!() };
        env.step(optimal_move(s).ok_or("no optimal move before terminal")?.action_index()).unwrap();
        moves += 1;
    }
    ensure!(moves == 7, "optimal policy took {moves} moves");
    ensure!(env.termination() == TerminationCause::GoalReached, "ended with {:?}", env.termination());
    ensure!(env.normalized_score() == Ok(1.0), "score {:?}", env.normalized_score());

    // From every state the oracle follows a shortest path.
    let dist = hanoi_distances();
    ensure!(dist.len() == 27, "BFS reached {} states", dist.len());
    for (start, &d) in &dist {
        let mut s = start.clone();
        let mut taken = 0;
        while !s.is_solved() {
            s = s.apply(optimal_move(&s).ok_or("oracle stalled")?).map_err(|e| format!("oracle played {e:?}"))?;
            taken += 1;
            ensure!(taken <= 7, "oracle loops from {start:?}");
        }
        ensure!(taken == d, "oracle took {taken} moves where BFS needs {d}");
    }
    Ok(format!("{steps} random steps over {episode} episodes; 7-move solve; 27/27 states solved on shortest paths"))
}

fn round_trips() -> Outcome {
    let states = HanoiState::enumerate(3, Peg::C);
    for s in &states {
        for structure in [Structure::DictList, Structure::Matrix, Structure::TaggedList] {
            let text = encode_hanoi(s, structure);
            let back = decode_hanoi(&text, structure).map_err(|e| format!("{structure}: {e}"))?;
            ensure!(&back == s, "{structure} round trip changed {s:?}");
        }
    }
    for i in 0..50 {
        let FamilyState::Messenger(s) = Env::reset_named("messenger", seed(i)).unwrap().state().clone() else { unreachable!() };
        let map = parse_vot_map(&oracle_vot_map(&FamilyState::Messenger(s.clone()))).map_err(|e| e.to_string())?;
        ensure!(map.agent == s.agent, "episode {i}: agent moved");
        ensure!(map.entities.len() == s.entities.len(), "episode {i}: entity count");
        for (entry, entity) in map.entities.iter().zip(&s.entities) {
            ensure!(entry.pos == entity.pos, "episode {i}: {} misplaced", entity.name);
        }
    }
    let layout = example_layout();
    let text = oracle_vot_map(&FamilyState::Messenger(layout.clone()));
    check_golden("vot_example_layout.txt", &text)?;
    let map = parse_vot_map(&text).map_err(|e| e.to_string())?;
    ensure!(map.agent == layout.agent, "reference layout: agent misplaced");
    Ok(format!("{} Hanoi round trips; 50 Messenger maps; reference layout verbatim", states.len() * 3))
}

fn prompt_fidelity() -> Outcome {
    let agent = canonical_agent_prompt().user_text;
    check_golden("prompt_agent.txt", &agent)?;
    ensure!(agent.contains("Action: [action number]. Reason: [explanation]"), "agent prompt lacks the answer format");
    check_golden("prompt_summarizer.txt", &canonical_summary_prompt())?;
    let vot = canonical_vot_prompt().user_text;
    check_golden("prompt_vot.txt", &vot)?;
    ensure!(vot.contains("Draw a compact top-down ASCII map"), "VoT prompt lacks the map instruction");
    Ok("3 prompt templates byte-equal".into())
}

fn e2e_determinism() -> Outcome {
    let mocks = MockRegistry::with_builtins();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut records = 0;
    for (label, rep) in [
        ("long", RepresentationSpec::new(Granularity::LongForm, Structure::TaggedList, Grounding::TextOnly)),
        (
            "oracle",
            RepresentationSpec::new(Granularity::Summary, Structure::TaggedList, Grounding::TextOnly).with_flag(OracleFlag::OracleSummary),
        ),
    ] {
        let config = RunConfig {
            episodes: 10,
            run_seed: 7,
            ..RunConfig::new("hanoi", rep, ModelConfig::mock("optimal")).map_err(|e| e.to_string())?
        };
        let mut bytes = Vec::new();
        for pass in 0..2 {
            let path = dir.path().join(format!("{label}-{pass}.jsonl"));
            write_jsonl(&path, &run_experiment(&config, &mocks).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure!(bytes[0] == bytes[1], "{label}: logs differ between runs");
        for r in read_jsonl(&dir.path().join(format!("{label}-0.jsonl"))).map_err(|e| e.to_string())? {
            replay(&r).map_err(|m| format!("{label}: {m}"))?;
            records += 1;
        }
    }
    Ok(format!("2 conditions byte-identical; {records} records replay"))
}

fn false_positive_rate(trials: u64, n: usize, resamples: usize) -> f64 {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4) as u64;
    let hits: usize = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..trials)
                        .step_by(workers as usize)
                        .filter(|&trial| {
                            let mut rng = ChaCha8Rng::seed_from_u64(0xca11b ^ trial);
                            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                            bootstrap_mean_diff(&a, &b, resamples, 0.95, trial).significant
                        })
                        .count()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    hits as f64 / trials as f64
}

/// Three records from a real run with hand-set scores and token counts.
fn token_records() -> Vec<statebench::eval::EpisodeRecord> {
    let rep = RepresentationSpec::new(Granularity::LongForm, Structure::DictList, Grounding::TextOnly);
    let config = RunConfig {
        episodes: 3,
        ..RunConfig::new("hanoi", rep, ModelConfig::mock("optimal")).unwrap()
    };
    let mut records = run_experiment(&config, &MockRegistry::with_builtins()).unwrap();
    for (r, (score, tokens)) in records.iter_mut().zip([(1.0, 100), (0.5, 300), (0.0, 50)]) {
        r.normalized_score = Some(score);
        for s in &mut r.steps {
            s.input_tokens = tokens;
            s.summary_input_tokens = 10_000;
        }
    }
    // A re-queried step: two agent calls, 900 tokens between them.
    records[1].steps[0].replies.push("again".into());
    records[1].steps[0].input_tokens = 900;
    records
}

fn statistics_calibration() -> Outcome {
    let rate = false_positive_rate(1000, 40, 10_000);
    ensure!((0.03..=0.07).contains(&rate), "false positive rate {rate:.3} outside 0.05 ± 0.02");

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..50 {
        let a: Vec<f64> = (0..rng.random_range(1..30)).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..rng.random_range(1..30)).map(|_| rng.random::<f64>()).collect();
        let ab = bootstrap_mean_diff(&a, &b, 2000, 0.95, trial);
        let ba = bootstrap_mean_diff(&b, &a, 2000, 0.95, trial);
        ensure!(
            ab.mean_diff == -ba.mean_diff && ab.ci_low == -ba.ci_high && ab.ci_high == -ba.ci_low,
            "trial {trial}: swapping the groups does not mirror the interval"
        );
    }

    let records = token_records();
    let per_call = [700.0 / 7.0, (6.0 * 300.0 + 900.0) / 8.0, 350.0 / 7.0];
    let expected = 1000.0 * ((1.0 + 0.5 + 0.0) / 3.0) / (per_call.iter().sum::<f64>() / 3.0);
    let report = summarize(&records, None, 100, 0.95, 0);
    let got = report.conditions[0].score_per_kilo_token.ok_or("no score per kilo-token")?;
    ensure!(((got - expected) / expected).abs() <= 1e-12, "score per kilo-token {got}, expected {expected}");
    Ok(format!("false positive rate {rate:.3}; 50 exact mirrors; score/kTok {got:.6}"))
}

fn table_conformance() -> Outcome {
    // name, difficulty, history, rollout, actions, timesteps
    let table = [
        ("hanoi", Difficulty::Medium, 30, 10, 6, 30),
        ("messenger", Difficulty::Hard, 10, 20, 5, 10),
        ("babyai-goto", Difficulty::Easy, 128, 10, 6, 128),
        ("babyai-open", Difficulty::Medium, 128, 10, 6, 128),
        ("babyai-pickup", Difficulty::Medium, 128, 10, 6, 128),
        ("babyai-pickupseqgoto", Difficulty::Hard, 128, 10, 6, 128),
        ("babyai-putnext", Difficulty::Hard, 128, 10, 6, 128),
    ];
    let specs = registry();
    ensure!(specs.len() == table.len(), "{} environments registered", specs.len());
    for (name, difficulty, history, rollout, actions, timesteps) in table {
        let spec = specs.iter().find(|s| s.name == name).ok_or(format!("{name} missing"))?;
        spec.validate().map_err(|e| e.to_string())?;
        let got = (spec.difficulty, spec.history_window, spec.default_episodes, spec.action_count(), spec.max_timesteps);
        ensure!(got == (difficulty, history, rollout, actions, timesteps), "{name}: {got:?}");
    }
    Ok("7/7 environment specs match".into())
}

fn every_third(b: &PromptBundle, ctx: &CallContext) -> String {
    if b.template_id == TemplateId::Summariser {
        return "Summary: nothing new.".into();
    }
    if ctx.timestep % 3 == 0 {
        "no idea".into()
    } else {
        "Action: 2. Reason: scripted".into()
    }
}

fn fallback_accounting() -> Outcome {
    let mocks = MockRegistry::with_builtins();
    mocks.register("every-third", every_third).map_err(|e| e.to_string())?;
    let mut shown = Vec::new();
    for env in ["hanoi", "messenger", "babyai-goto"] {
        let structure = if env == "hanoi" { Structure::Matrix } else { Structure::NaturalLanguage };
        let rep = RepresentationSpec::new(Granularity::LongForm, structure, Grounding::TextOnly);
        let config = RunConfig {
            episodes: 5,
            runs: 2,
            ..RunConfig::new(env, rep, ModelConfig::mock("every-third")).map_err(|e| e.to_string())?
        };
        let records = run_experiment(&config, &mocks).map_err(|e| e.to_string())?;
        let timesteps: Vec<u32> = records.iter().flat_map(|r| r.steps.iter().map(|s| s.timestep)).collect();
        let injected = timesteps.iter().filter(|t| *t % 3 == 0).count() as f64 / timesteps.len() as f64;
        let reported = summarize(&records, None, 100, 0.95, 0).conditions[0].fallback_rate();
        ensure!(reported == injected, "{env}: reported {reported}, injected {injected}");
        shown.push(format!("{env} {reported:.4}"));
    }
    Ok(format!("reported equals injected: {}", shown.join(", ")))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 8] = [
        ("encoding fidelity", 1, encoding_fidelity),
        ("environment correctness", 5, environment_correctness),
        ("round trips", 2, round_trips),
        ("prompt fidelity", 1, prompt_fidelity),
        ("end-to-end determinism", 30, e2e_determinism),
        ("statistics calibration", 60, statistics_calibration),
        ("environment table conformance", 1, table_conformance),
        ("fallback accounting", 5, fallback_accounting),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(budget) => Err(format!("over time budget of {budget}s")),
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{status} [{}/8] {name} ({:.2}s, budget {budget}s): {detail}", i + 1, elapsed.as_secs_f64());
        failed += outcome.is_err() as usize;
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
