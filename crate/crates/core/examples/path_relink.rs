//! Walk from one ruleset to another one rule at a time, picking the best
//! next step under the target function.

use covermine::blackboard::{Blackboard, BoardContext};
use covermine::fixtures;
use covermine::model::RuleSet;
use covermine::pathrelink::{diff_actions, path_relink};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn main() {
    let data = fixtures::fig1();
    let board = Blackboard::new(data.clone());
    let start = RuleSet::parse("(lang = java) or (lang = c) except (size >= 10)", data.features()).unwrap();
    let end = RuleSet::parse("(size <= 3) or (lang = python)", data.features()).unwrap();
    println!("{} actions between\n  {start}\n  {end}", diff_actions(&start, &end).len());

    let ctx = BoardContext::new(board.agent(), board.view());
    let out = path_relink(&ctx, &start, &end, &board.target(), &mut ChaCha8Rng::seed_from_u64(1));
    for (i, rs) in out.visited.iter().enumerate() {
        println!("step {}: {rs}", i + 1);
    }
    println!("{} evaluations; front now holds {} entries", out.evaluations, board.len());
}
