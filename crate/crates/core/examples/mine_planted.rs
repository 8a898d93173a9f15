//! One agent recovers a planted rule from noisy synthetic data.

use covermine::agent::{Agent, AgentConfig};
use covermine::blackboard::{Blackboard, Bounds};
use covermine::eval::TargetFunction;
use covermine::explore::format_ruleset;
use covermine::fixtures;

pub fn main() {
    let (data, clean) = fixtures::planted(600, 0.05, 1);
    let board = Blackboard::new(data.clone());
    let mut agent = Agent::new(AgentConfig {
        seed: 7,
        ..AgentConfig::default()
    });
    for _ in 0..150 {
        agent.step(&board, None);
    }
    // each positive record is its own cause, so selected + 2 * missed counts
    // false positives plus false negatives
    let target: TargetFunction = "weighted:1,2,0.01".parse().unwrap();
    let best = board.best(&target, &Bounds::none()).expect("the front is not empty");
    let bits = data.match_bits(&best.ruleset).unwrap();
    let tp = bits.ones().filter(|&r| clean[r]).count() as f64;
    let precision = tp / bits.count_ones(..).max(1) as f64;
    let recall = tp / clean.iter().filter(|&&c| c).count() as f64;
    println!("{} iterations, front of {}", agent.iterations(), board.len());
    println!("best under `{target}`:\n{}", format_ruleset(&data, &best.ruleset));
    println!("precision {precision:.3} recall {recall:.3} against the noise-free labels");
}
