//! Inspect the records behind a ruleset: feature statistics, errors and
//! the default branch, and print it with rounded thresholds.

use covermine::explore::{self, round_split_point};
use covermine::fixtures;
use covermine::model::RuleSet;

pub fn main() {
    let (data, _) = fixtures::planted(300, 0.05, 4);
    let rs = RuleSet::parse(
        "(x1 <= 30.0314 and colour = red) or (x2 >= 69.9512)",
        data.features(),
    )
    .unwrap();
    let selected = explore::subset(&data, Some(&rs)).unwrap();
    for s in explore::stats(&data, &selected) {
        println!("{}", serde_json::to_string(&s).unwrap());
    }
    let m = explore::misclassified(&data, &rs).unwrap();
    println!(
        "{} false positives, {} missed causes",
        m.false_positives.len(),
        m.missed_causes.len()
    );
    let rest = explore::default_branch(&data, &rs, 3, 1).unwrap();
    println!("default branch sample: {:?}", rest.iter().map(|r| &r.id).collect::<Vec<_>>());
    println!("as entered: {rs}");
    println!("rounded:    {}", explore::format_ruleset(&data, &rs));
    println!("split point of [0.7312, 0.9413): {}", round_split_point(0.7312, 0.9413).unwrap());
}
