//! Acceptance criteria 1-8. Runs as a plain binary (no test harness) and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! `COVERMINE_ACCEPTANCE=1,3` runs a subset.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use covermine::agent::{Agent, AgentConfig, Step};
use covermine::blackboard::{Blackboard, BoardConfig, BoardContext, Bounds, RuleSpaceLimits};
use covermine::eval::{hypervolume, ObjectiveVector};
use covermine::explore::{format_ruleset, round_split_point};
use covermine::feedback::UserAction;
use covermine::fixtures;
use covermine::model::{Dataset, Operator, Proposition, Rule, RuleSet, Value};
use covermine::pathrelink::path_relink;
use covermine::persist::{read_log, replay};
use covermine::session::{Session, SessionConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. brute-force Pareto oracle

/// A proposition over a nominal feature, evaluated by the oracle itself.
#[derive(Clone)]
struct OProp {
    feature: String,
    equals: bool,
    value: String,
}

fn oracle_vectors(data: &Dataset) -> BTreeSet<[u64; 3]> {
    let rows: Vec<BTreeMap<String, String>> = data
        .records()
        .map(|r| {
            r.values
                .iter()
                .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string()))
                .collect()
        })
        .collect();
    let causes: Vec<BTreeSet<String>> = data.records().map(|r| r.causes.clone()).collect();
    let all_causes: BTreeSet<&String> = causes.iter().flatten().collect();

    let mut props = Vec::new();
    for f in data.features() {
        let values: BTreeSet<&String> = rows.iter().map(|r| &r[&f.name]).collect();
        for v in values {
            for equals in [true, false] {
                props.push(OProp {
                    feature: f.name.clone(),
                    equals,
                    value: v.clone(),
                });
            }
        }
    }
    let holds = |p: &OProp, row: usize| (rows[row][&p.feature] == p.value) == p.equals;
    // rules of one or two distinct propositions: (match mask, size)
    let mut rules: Vec<(u64, u64)> = Vec::new();
    for i in 0..props.len() {
        let m = (0..rows.len()).filter(|&r| holds(&props[i], r)).fold(0u64, |m, r| m | 1 << r);
        rules.push((m, 1));
        for j in i + 1..props.len() {
            let m = (0..rows.len())
                .filter(|&r| holds(&props[i], r) && holds(&props[j], r))
                .fold(0u64, |m, r| m | 1 << r);
            rules.push((m, 2));
        }
    }
    let vector = |mask: u64, complexity: u64| {
        let covered: BTreeSet<&String> = (0..rows.len())
            .filter(|r| mask & (1 << r) != 0)
            .flat_map(|r| causes[r].iter())
            .collect();
        [
            mask.count_ones() as u64,
            (all_causes.len() - covered.len()) as u64,
            complexity,
        ]
    };
    let mut vectors = vec![vector(0, 0)];
    for i in 0..rules.len() {
        vectors.push(vector(rules[i].0, 1 + rules[i].1));
        for j in i + 1..rules.len() {
            vectors.push(vector(rules[i].0 | rules[j].0, 2 + rules[i].1 + rules[j].1));
        }
    }
    let dominated = |a: &[u64; 3], b: &[u64; 3]| (0..3).all(|k| b[k] <= a[k]) && b != a;
    let unique: BTreeSet<[u64; 3]> = vectors.into_iter().collect();
    unique
        .iter()
        .filter(|a| !unique.iter().any(|b| dominated(a, b)))
        .copied()
        .collect()
}

fn front_vectors(b: &Blackboard) -> BTreeSet<[u64; 3]> {
    b.entries()
        .iter()
        .map(|e| {
            let v = &e.evaluation.objectives.0;
            [v[0] as u64, v[1] as u64, v[2] as u64]
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let data = fixtures::random(30, 3, 2, 0, 8, 0.15, 7);
    let truth = oracle_vectors(&data);
    let config = BoardConfig {
        limits: RuleSpaceLimits {
            max_propositions: Some(2),
            max_inclusions: Some(2),
            max_exclusions: Some(0),
        },
        ..BoardConfig::default()
    };
    let board = Blackboard::with_config(data, config);
    let mut agent = Agent::new(AgentConfig {
        seed: 1,
        ..AgentConfig::default()
    });
    let t0 = Instant::now();
    loop {
        for _ in 0..10 {
            agent.step(&board, None);
        }
        let found = front_vectors(&board);
        if truth.is_subset(&found) {
            return Ok(format!(
                "all {} Pareto vectors after {} iterations, {:.1}s",
                truth.len(),
                agent.iterations(),
                t0.elapsed().as_secs_f64()
            ));
        }
        if t0.elapsed() > Duration::from_secs(60) {
            let missing: Vec<_> = truth.difference(&found).collect();
            return Err(format!("missing after 60s: {missing:?}"));
        }
    }
}

// ---------------------------------------------------------------------------
// 2. the set-cover optimum on the two-cause example

fn criterion_2() -> Outcome {
    let data = fixtures::fig1();
    // brute force over record subsets: covering both causes needs one record
    let n = data.len();
    let causes: Vec<BTreeSet<String>> = data.records().map(|r| r.causes).collect();
    let min_cover = (0u32..1 << n)
        .filter(|m| {
            let covered: BTreeSet<&String> =
                (0..n).filter(|r| m & (1 << r) != 0).flat_map(|r| &causes[r]).collect();
            covered.len() == 2
        })
        .map(u32::count_ones)
        .min();
    ensure(min_cover == Some(1), || format!("oracle minimum cover {min_cover:?}"))?;

    let board = Blackboard::new(data.clone());
    let mut agent = Agent::new(AgentConfig {
        seed: 2,
        ..AgentConfig::default()
    });
    let t0 = Instant::now();
    while t0.elapsed() < Duration::from_secs(10) {
        agent.step(&board, None);
        if let Some(e) = board.entries().into_iter().find(|e| {
            e.evaluation.result.selected_count == 1 && e.evaluation.result.missed_causes() == 0
        }) {
            let bits = data.match_bits(&e.ruleset).map_err(|e| e.to_string())?;
            ensure(bits.ones().collect::<Vec<_>>() == vec![1], || {
                format!("{} selects {:?}", e.ruleset, bits.ones().collect::<Vec<_>>())
            })?;
            ensure(
                board
                    .entries()
                    .iter()
                    .all(|e| e.evaluation.result.selected_count > 0 || e.evaluation.result.covered_causes == 0),
                || "an entry covers causes without selecting records".into(),
            )?;
            return Ok(format!(
                "`{}` selects only I2, {:.2}s",
                e.ruleset,
                t0.elapsed().as_secs_f64()
            ));
        }
    }
    Err("no (1, 0, _) entry within 10s".into())
}

// ---------------------------------------------------------------------------
// 3. planted rule recovery

fn criterion_3() -> Outcome {
    let (data, clean) = fixtures::planted(2000, 0.05, 3);
    let positives = clean.iter().filter(|&&c| c).count() as f64;
    let board = Blackboard::new(data.clone());
    let mut agent = Agent::new(AgentConfig {
        seed: 3,
        ..AgentConfig::default()
    });
    let t0 = Instant::now();
    let mut best = (0.0, 0.0);
    while t0.elapsed() < Duration::from_secs(300) {
        for _ in 0..20 {
            agent.step(&board, None);
        }
        for e in board.entries() {
            let bits = data.match_bits(&e.ruleset).map_err(|e| e.to_string())?;
            let selected = bits.count_ones(..) as f64;
            let tp = bits.ones().filter(|&r| clean[r]).count() as f64;
            if selected == 0.0 {
                continue;
            }
            let (p, r) = (tp / selected, tp / positives);
            if p.min(r) > f64::min(best.0, best.1) {
                best = (p, r);
            }
            if p >= 0.9 && r >= 0.9 {
                return Ok(format!(
                    "precision {p:.3} recall {r:.3} after {:.1}s: {}",
                    t0.elapsed().as_secs_f64(),
                    e.ruleset
                ));
            }
        }
    }
    Err(format!("best precision/recall {best:?} after 5 min"))
}

// ---------------------------------------------------------------------------
// 4. dominance fuzz

fn random_rule(data: &Dataset, rng: &mut ChaCha8Rng) -> Rule {
    let n = rng.random_range(1..=2);
    let mut props = Vec::new();
    for _ in 0..n {
        let f = &data.features()[rng.random_range(0..data.features().len())];
        let row = rng.random_range(0..data.len());
        let p = match data.record_at(row).values[&f.name].clone() {
            Value::Nominal(v) => Proposition::nominal(
                f.name.clone(),
                *[Operator::Equals, Operator::NotEquals].choose(rng).unwrap(),
                v,
            ),
            Value::Numeric(x) => Proposition::numeric(
                f.name.clone(),
                *[Operator::LessOrEqual, Operator::GreaterOrEqual].choose(rng).unwrap(),
                x,
            ),
        };
        props.push(p);
    }
    Rule::new(props.clone()).unwrap_or_else(|_| Rule::single(props[0].clone()))
}

fn check_front(s: &Session) -> Result<(), String> {
    let b = s.board();
    let entries = b.entries();
    let data = b.data();
    let restrictions = b.restrictions();
    for (i, a) in entries.iter().enumerate() {
        let fresh = covermine::eval::evaluate(&a.ruleset, &data).map_err(|e| e.to_string())?;
        ensure(fresh == a.evaluation.result, || format!("stale evaluation for {}", a.ruleset))?;
        for c in &entries[i + 1..] {
            let (x, y) = (&a.evaluation.objectives.0, &c.evaluation.objectives.0);
            let le = |p: &[f64], q: &[f64]| p.iter().zip(q).all(|(u, v)| u <= v);
            ensure(!(le(x, y) && x != y) && !(le(y, x) && x != y), || {
                format!("{} and {} are in a dominance relation", a.ruleset, c.ruleset)
            })?;
        }
        for (_, r) in a.ruleset.rules() {
            ensure(!restrictions.is_forbidden(r), || format!("forbidden rule {r} in {}", a.ruleset))?;
        }
        for r in restrictions.accepted() {
            ensure(a.ruleset.inclusions.contains(&r), || {
                format!("accepted {r} missing from {}", a.ruleset)
            })?;
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let data = fixtures::random(40, 2, 3, 2, 6, 0.2, 4);
    let s = Session::new(data, SessionConfig::default()).map_err(|e| e.to_string())?;
    let mut agent = Agent::new(AgentConfig {
        seed: 4,
        ..AgentConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for _ in 0..1000 {
        let data = s.board().data();
        let kind = *["generate", "submit", "accept", "reject", "undo", "trim", "relabel"]
            .choose(&mut rng)
            .unwrap();
        *counts.entry(kind).or_default() += 1;
        let from_front = |rng: &mut ChaCha8Rng| {
            let rules: Vec<Rule> = s
                .board()
                .rulesets()
                .iter()
                .flat_map(|rs| rs.rules().map(|(_, r)| r.clone()).collect::<Vec<_>>())
                .collect();
            rules.choose(rng).cloned()
        };
        let action = match kind {
            "generate" => {
                agent.step(s.board(), Some(Step::Generate));
                None
            }
            "submit" => {
                let incl: Vec<Rule> = (0..rng.random_range(0..3)).map(|_| random_rule(&data, &mut rng)).collect();
                let excl: Vec<Rule> = (0..rng.random_range(0..2)).map(|_| random_rule(&data, &mut rng)).collect();
                Some(UserAction::SubmitRuleset {
                    ruleset: RuleSet::new(incl, excl).to_string(),
                })
            }
            "accept" => {
                let r = if rng.random_bool(0.5) {
                    from_front(&mut rng)
                } else {
                    None
                };
                let r = r.unwrap_or_else(|| random_rule(&data, &mut rng));
                Some(UserAction::Accept { rule: r.to_string() })
            }
            "reject" => {
                let r = from_front(&mut rng).unwrap_or_else(|| random_rule(&data, &mut rng));
                if rng.random_bool(0.5) {
                    Some(UserAction::Reject {
                        rule: Some(r.to_string()),
                        pattern: None,
                    })
                } else {
                    let p = &r.propositions()[0];
                    Some(UserAction::Reject {
                        rule: None,
                        pattern: Some(format!("{} {}", p.feature(), p.op())),
                    })
                }
            }
            "undo" => Some(UserAction::Undo { id: None }),
            "trim" => Some(UserAction::Trim {
                keep: rng.random_range(1..6),
                sample: 64,
                seed: rng.random(),
            }),
            _ => {
                let id = data.ids()[rng.random_range(0..data.len())].clone();
                let causes = (0..rng.random_range(0..3))
                    .map(|_| format!("C{}", rng.random_range(0..6)))
                    .collect();
                Some(UserAction::Relabel { record: id, causes })
            }
        };
        if let Some(a) = action {
            // conflicts and empty undo stacks are legitimate refusals
            let _ = s.apply(a);
        }
        check_front(&s)?;
    }
    Ok(format!("1000 operations {counts:?}, final front {}", s.board().len()))
}

// ---------------------------------------------------------------------------
// 5. anytime monotonicity of the hypervolume

fn criterion_5() -> Outcome {
    let (data, _) = fixtures::planted(500, 0.05, 5);
    let reference = ObjectiveVector(vec![
        data.len() as f64 + 1.0,
        data.cause_count() as f64 + 1.0,
        200.0,
    ]);
    let s = Session::new(data, SessionConfig::default()).map_err(|e| e.to_string())?;
    let hv = || {
        let pts: Vec<ObjectiveVector> = s
            .board()
            .entries()
            .into_iter()
            .map(|e| e.evaluation.objectives)
            .filter(|v| v.0.iter().zip(&reference.0).all(|(a, r)| a <= r))
            .collect();
        hypervolume(&pts, &reference).expect("points within the reference")
    };
    s.apply(UserAction::StartAgents {
        n: 1,
        seed: Some(5),
    })
    .map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let mut samples = vec![hv()];
    for k in 1..=120u64 {
        let next = t0 + Duration::from_secs(k);
        std::thread::sleep(next.saturating_duration_since(Instant::now()));
        samples.push(hv());
    }
    s.apply(UserAction::StopAgents).map_err(|e| e.to_string())?;
    for w in samples.windows(2) {
        ensure(w[1] >= w[0], || format!("hypervolume dropped from {} to {}", w[0], w[1]))?;
    }
    Ok(format!(
        "{} samples over 120s, {:.0} -> {:.0}",
        samples.len(),
        samples[0],
        samples[samples.len() - 1]
    ))
}

// ---------------------------------------------------------------------------
// 6. replay determinism

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log_path = dir.path().join("session.log");
    let (data, _) = fixtures::planted(400, 0.05, 6);
    let config = SessionConfig {
        agent: AgentConfig {
            max_iterations: Some(200),
            ..AgentConfig::default()
        },
        base_seed: 6,
        log_path: Some(log_path.clone()),
        ..SessionConfig::default()
    };
    let s = Session::new(data.clone(), config).map_err(|e| e.to_string())?;
    s.apply(UserAction::StartAgents { n: 1, seed: None })
        .map_err(|e| e.to_string())?;
    let actions = [
        UserAction::SetTarget {
            target: "weighted:1,2,0.5".parse().unwrap(),
        },
        UserAction::SubmitRuleset {
            ruleset: "(x2 >= 70) or (x1 <= 30 and colour = red)".into(),
        },
        UserAction::Reject {
            rule: None,
            pattern: Some("x3".into()),
        },
        UserAction::Accept {
            rule: "x2 >= 70".into(),
        },
        UserAction::SetBounds {
            bounds: Bounds(vec![None, None, Some(40.0)]),
        },
        UserAction::Undo { id: Some(2) },
        UserAction::MarkVisited {
            rule: "x2 >= 70".into(),
            visited: true,
        },
        UserAction::AddComputedFeature {
            name: "sum".into(),
            expression: "x1 + x2".into(),
        },
        UserAction::Relabel {
            record: "r7".into(),
            causes: vec!["c:r7".into()],
        },
        UserAction::Trim {
            keep: 20,
            sample: 128,
            seed: 6,
        },
    ];
    for a in actions {
        std::thread::sleep(Duration::from_millis(30));
        let _ = s.apply(a);
    }
    s.wait_agents().map_err(|e| e.to_string())?;
    let recorded = s.board().digest();
    drop(s);

    let (header, entries) = read_log(&log_path).map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for _ in 0..2 {
        let rep = replay(&header, &entries, data.clone()).map_err(|e| e.to_string())?;
        ensure(rep.matches(), || format!("replay diverged: {:?}", rep.divergences))?;
        ensure(rep.replayed_digest == recorded, || {
            format!("replayed {} recorded {}", rep.replayed_digest, recorded)
        })?;
        digests.push(rep.replayed_digest);
    }
    let iterations = entries
        .iter()
        .find_map(|e| match e.body {
            covermine::persist::LogBody::AgentStop { iterations, .. } => Some(iterations),
            _ => None,
        })
        .unwrap_or(0);
    ensure(iterations == 200, || format!("agent ran {iterations} iterations"))?;
    Ok(format!(
        "{} log entries, digest {} reproduced twice",
        entries.len(),
        &digests[0][..12]
    ))
}

// ---------------------------------------------------------------------------
// 7. split rounding and formatting

/// One or two threshold propositions anywhere around the data range.
fn numeric_rule(data: &Dataset, rng: &mut ChaCha8Rng) -> Rule {
    let mut props = Vec::new();
    for f in ["a", "b"] {
        if props.is_empty() || rng.random_bool(0.5) {
            let vals = data.sorted_values(data.feature_index(f).unwrap());
            let t = rng.random_range(vals[0] - 1.0..vals[vals.len() - 1] + 1.0);
            let op = *[Operator::LessOrEqual, Operator::GreaterOrEqual].choose(rng).unwrap();
            props.push(Proposition::numeric(f, op, t));
        }
    }
    Rule::new(props).unwrap()
}

fn criterion_7() -> Outcome {
    let r = round_split_point(0.7312, 0.9413).map_err(|e| e.to_string())?;
    ensure(r == 0.8, || format!("roundSplitPoint gave {r}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut propositions = 0;
    let mut datasets = 0;
    while propositions < 10_000 {
        datasets += 1;
        let records: Vec<covermine::model::Record> = (0..60)
            .map(|i| {
                let scale = 10f64.powi(rng.random_range(-3..4));
                let digits = 10f64.powi(rng.random_range(0..6));
                let mut x = || (rng.random_range(-1.0..1.0f64) * scale * digits).round() / digits;
                covermine::model::Record::new(
                    format!("r{i}"),
                    [("a", Value::numeric(x())), ("b", Value::numeric(x()))],
                    Vec::<String>::new(),
                )
            })
            .collect();
        let data = Dataset::new(
            vec![
                covermine::model::Feature::new("a", covermine::model::FeatureKind::Numeric),
                covermine::model::Feature::new("b", covermine::model::FeatureKind::Numeric),
            ],
            records,
        )
        .map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let (ni, ne) = (rng.random_range(1..4), rng.random_range(0..2));
            let incl: Vec<Rule> = (0..ni).map(|_| numeric_rule(&data, &mut rng)).collect();
            let excl: Vec<Rule> = (0..ne).map(|_| numeric_rule(&data, &mut rng)).collect();
            let rs = RuleSet::new(incl, excl);
            propositions += rs.rules().map(|(_, r)| r.len()).sum::<usize>();
            let text = format_ruleset(&data, &rs);
            let back = RuleSet::parse(&text, data.features())
                .map_err(|e| format!("`{text}` does not parse: {e}"))?;
            let (x, y) = (
                data.match_bits(&rs).map_err(|e| e.to_string())?,
                data.match_bits(&back).map_err(|e| e.to_string())?,
            );
            ensure(x == y, || format!("`{rs}` formatted as `{text}` selects other records"))?;
        }
    }
    Ok(format!(
        "{propositions} propositions over {datasets} datasets keep their matches; [0.7312, 0.9413) -> 0.8"
    ))
}

// ---------------------------------------------------------------------------
// 8. path relinking contract

fn criterion_8() -> Outcome {
    let data = fixtures::random(50, 2, 3, 2, 5, 0.2, 8);
    let board = Blackboard::new(data.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pool: Vec<Rule> = (0..12).map(|_| random_rule(&data, &mut rng)).collect();
    let pick = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Rule> {
        (0..n).map(|_| pool.choose(rng).unwrap().clone()).collect()
    };
    let mut pairs = 0;
    let mut by_diff = [0usize; 7];
    while pairs < 500 {
        let sizes: [usize; 4] = [
            rng.random_range(0..4),
            rng.random_range(0..3),
            rng.random_range(0..4),
            rng.random_range(0..3),
        ];
        let a = RuleSet::new(pick(&mut rng, sizes[0]), pick(&mut rng, sizes[1]));
        let b = RuleSet::new(pick(&mut rng, sizes[2]), pick(&mut rng, sizes[3]));
        let sym = |x: &[Rule], y: &[Rule]| {
            let (x, y): (BTreeSet<&Rule>, BTreeSet<&Rule>) = (x.iter().collect(), y.iter().collect());
            x.symmetric_difference(&y).count()
        };
        let diff = sym(&a.inclusions, &b.inclusions) + sym(&a.exclusions, &b.exclusions);
        if diff > 6 {
            continue;
        }
        let ctx = BoardContext::new(board.agent(), board.view());
        let tf = board.target();
        let out = path_relink(&ctx, &a, &b, &tf, &mut rng);
        ensure(out.steps() == diff, || {
            format!("{a} -> {b}: {} steps for a difference of {diff}", out.steps())
        })?;
        let end = out.visited.last().cloned().unwrap_or_else(|| a.clone());
        ensure(end == b, || format!("{a} -> {b} ended at {end}"))?;
        by_diff[diff] += 1;
        pairs += 1;
    }
    Ok(format!("500 pairs, walks per difference size {by_diff:?}"))
}

fn main() {
    let only: Option<BTreeSet<usize>> = std::env::var("COVERMINE_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 8] = [
        (1, "brute-force Pareto oracle", criterion_1),
        (2, "set-cover optimum", criterion_2),
        (3, "planted rule recovery", criterion_3),
        (4, "dominance fuzz", criterion_4),
        (5, "anytime monotonicity", criterion_5),
        (6, "replay determinism", criterion_6),
        (7, "split rounding and formatting", criterion_7),
        (8, "path relinking contract", criterion_8),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {n} ({name}): PASS [{secs:.1}s] {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{secs:.1}s] {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
