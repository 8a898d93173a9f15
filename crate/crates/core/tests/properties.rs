//! Invariants checked over generated inputs.

use std::collections::BTreeSet;

use covermine::blackboard::{Blackboard, RestrictionKind};
use covermine::eval::{evaluate, hypervolume, ObjectiveVector};
use covermine::explore::{format_ruleset, round_split_point};
use covermine::fixtures;
use covermine::model::{Dataset, Operator, Proposition, Rule, RuleSet, Value};
use covermine::persist::Snapshot;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rule(data: &Dataset, rng: &mut ChaCha8Rng) -> Rule {
    let n = rng.random_range(1..=2);
    let mut props = Vec::new();
    for _ in 0..n {
        let f = &data.features()[rng.random_range(0..data.features().len())];
        let row = rng.random_range(0..data.len());
        props.push(match data.record_at(row).values[&f.name].clone() {
            Value::Nominal(v) => Proposition::nominal(
                f.name.clone(),
                *[Operator::Equals, Operator::NotEquals].choose(rng).unwrap(),
                v,
            ),
            Value::Numeric(x) => {
                let jitter = rng.random_range(-0.5..0.5);
                Proposition::numeric(
                    f.name.clone(),
                    *[Operator::LessOrEqual, Operator::GreaterOrEqual].choose(rng).unwrap(),
                    x + jitter,
                )
            }
        });
    }
    Rule::new(props.clone()).unwrap_or_else(|_| Rule::single(props[0].clone()))
}

fn random_ruleset(data: &Dataset, rng: &mut ChaCha8Rng) -> RuleSet {
    let (ni, ne) = (rng.random_range(0..4), rng.random_range(0..3));
    let incl = (0..ni).map(|_| random_rule(data, rng)).collect();
    let excl = (0..ne).map(|_| random_rule(data, rng)).collect();
    RuleSet::new(incl, excl)
}

fn vector() -> impl Strategy<Value = ObjectiveVector> {
    prop::collection::vec(0u8..5, 3).prop_map(|v| ObjectiveVector(v.into_iter().map(f64::from).collect()))
}

/// Significant digits of the shortest round-tripping decimal form.
fn sig_digits(x: f64) -> usize {
    if x == 0.0 {
        return 1;
    }
    let s = format!("{:e}", x.abs());
    s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dominance_is_a_strict_partial_order(a in vector(), b in vector(), c in vector()) {
        prop_assert!(!a.dominates(&a));
        prop_assert!(!(a.dominates(&b) && b.dominates(&a)));
        if a.dominates(&b) && b.dominates(&c) {
            prop_assert!(a.dominates(&c));
        }
        let weakly = a.0.iter().zip(&b.0).all(|(x, y)| x <= y);
        prop_assert_eq!(a.dominates(&b), weakly && a != b);
    }

    #[test]
    fn hypervolume_grows_with_insertions(points in prop::collection::vec(vector(), 1..12)) {
        let reference = ObjectiveVector(vec![5.0; 3]);
        let mut prev = 0.0;
        for i in 1..=points.len() {
            let hv = hypervolume(&points[..i], &reference).unwrap();
            prop_assert!(hv + 1e-9 >= prev, "{hv} < {prev} after {:?}", points[i - 1]);
            prev = hv;
        }
        // the volume of a single box is its product of side lengths
        let one: f64 = points[0].0.iter().map(|x| 5.0 - x).product();
        prop_assert_eq!(hypervolume(&points[..1], &reference).unwrap(), one);
    }

    #[test]
    fn split_point_lies_inside_with_fewest_digits(
        lo in 1e-3f64..1e4,
        width in 1e-6f64..1.0,
        rel in any::<bool>(),
    ) {
        let hi = if rel { lo * (1.0 + width) } else { lo + width };
        prop_assume!(lo < hi);
        let r = round_split_point(lo, hi).unwrap();
        prop_assert!(lo <= r && r < hi, "{r} outside [{lo}, {hi})");
        let digits = sig_digits(r);
        for d in 1..digits {
            for e in -25i32..25 {
                let scale: f64 = format!("1e{e}").parse().unwrap();
                let k0 = (lo / scale).ceil() as i128;
                for k in [k0 - 1, k0, k0 + 1] {
                    if k <= 0 || k >= 10i128.pow(d as u32) {
                        continue;
                    }
                    let v: f64 = format!("{k}e{e}").parse().unwrap();
                    prop_assert!(
                        !(lo <= v && v < hi),
                        "{v} has {d} digits but {r} was chosen for [{lo}, {hi})"
                    );
                }
            }
        }
    }

    #[test]
    fn split_point_straddling_zero_is_zero(lo in -1e3f64..=0.0, hi in 1e-9f64..1e3) {
        prop_assert_eq!(round_split_point(lo, hi).unwrap(), 0.0);
    }

    #[test]
    fn display_parse_round_trip(seed in any::<u64>()) {
        let data = fixtures::random(20, 2, 3, 2, 4, 0.3, seed % 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = random_ruleset(&data, &mut rng);
        let text = rs.to_string();
        let back = RuleSet::parse(&text, data.features()).unwrap();
        prop_assert_eq!(back.canonicalize(), rs.canonicalize(), "{}", text);
    }

    #[test]
    fn formatting_keeps_matches(seed in any::<u64>()) {
        let data = fixtures::random(30, 2, 3, 3, 4, 0.3, seed % 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = random_ruleset(&data, &mut rng);
        let text = format_ruleset(&data, &rs);
        let back = RuleSet::parse(&text, data.features()).unwrap();
        prop_assert_eq!(data.match_bits(&back).unwrap(), data.match_bits(&rs).unwrap(), "{}", text);
    }

    #[test]
    fn front_stays_mutually_nondominated(seed in any::<u64>()) {
        let data = fixtures::random(25, 2, 3, 2, 5, 0.25, seed % 8);
        let board = Blackboard::new(data.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..30 {
            board.offer(&random_ruleset(&data, &mut rng)).unwrap();
        }
        let entries = board.entries();
        for a in &entries {
            prop_assert_eq!(&evaluate(&a.ruleset, &data).unwrap(), &a.evaluation.result);
            for b in &entries {
                prop_assert!(!a.evaluation.objectives.dominates(&b.evaluation.objectives));
            }
        }
        let distinct: BTreeSet<_> = entries.iter().map(|e| e.ruleset.to_string()).collect();
        prop_assert_eq!(distinct.len(), entries.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn snapshot_round_trip(seed in any::<u64>()) {
        let data = fixtures::random(25, 2, 3, 2, 5, 0.25, seed % 8);
        let board = Blackboard::new(data.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            board.offer(&random_ruleset(&data, &mut rng)).unwrap();
        }
        let reject = random_rule(&data, &mut rng);
        board.transact(|t| t.restrict(RestrictionKind::RejectRule(reject))).unwrap();
        if board.len() > 2 {
            board.transact(|t| t.trim(2, 25, seed)).unwrap();
        }
        let snap = Snapshot::capture(&board, &[], 7);
        let text = serde_json::to_string(&snap).unwrap();
        let loaded: Snapshot = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&loaded, &snap);
        let restored = loaded.restore().unwrap();
        prop_assert_eq!(restored.export_state(), board.export_state());
        prop_assert_eq!(restored.digest(), board.digest());
    }
}
