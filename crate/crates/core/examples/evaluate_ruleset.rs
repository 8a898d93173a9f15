//! Parse a ruleset and score it on the two-cause example.
//!
//! `cargo run -p covermine --example evaluate_ruleset`

use covermine::eval::{evaluate, Objectives};
use covermine::fixtures;
use covermine::model::RuleSet;

pub fn main() {
    let data = fixtures::fig1();
    let objectives = Objectives::default();
    for text in [
        "(lang = java)",
        "(lang = java and size <= 5)",
        "(size >= 4) except (lang = c)",
    ] {
        let rs = RuleSet::parse(text, data.features()).expect("valid ruleset");
        let ev = evaluate(&rs, &data).expect("features exist");
        println!(
            "{rs:<40} selected {} covers {}/{} causes, objectives {:?}",
            ev.selected_count,
            ev.covered_causes,
            ev.total_causes,
            objectives.vector(&ev).0
        );
    }
}
