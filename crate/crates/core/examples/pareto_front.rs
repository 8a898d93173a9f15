//! Offer candidates to a blackboard and watch the Pareto front and its
//! hypervolume.

use covermine::blackboard::Blackboard;
use covermine::eval::{hypervolume, ObjectiveVector};
use covermine::fixtures;
use covermine::model::RuleSet;

pub fn main() {
    let data = fixtures::fig1();
    let board = Blackboard::new(data.clone());
    // (records + 1, causes + 1, generous complexity)
    let reference = ObjectiveVector(vec![6.0, 3.0, 20.0]);
    for text in [
        "(lang = java)",
        "(false)",
        "(size <= 3)",
        "(lang = java) or (lang = c)",
        "(size <= 12)",
    ] {
        let rs = RuleSet::parse(text, data.features()).unwrap();
        let outcome = board.offer(&rs).unwrap();
        let points: Vec<ObjectiveVector> = board
            .entries()
            .into_iter()
            .map(|e| e.evaluation.objectives)
            .collect();
        println!(
            "{text:<30} {outcome:?}, front size {}, hypervolume {}",
            points.len(),
            hypervolume(&points, &reference).unwrap()
        );
    }
    for e in board.entries() {
        println!("  {} {:?} {}", e.id, e.evaluation.objectives.0, e.ruleset);
    }
}
