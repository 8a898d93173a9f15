//! Small datasets used by tests, examples and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Dataset, Feature, FeatureKind, Record, Value};

fn rec(id: &str, lang: &str, size: f64, causes: &[&str]) -> Record {
    Record::new(
        id,
        [("lang", Value::nominal(lang)), ("size", Value::Numeric(size))],
        causes.iter().copied(),
    )
}

/// The two-cause set-cover example: I1→{C1}, I2→{C1,C2}, I3→{C2}, I4→{C2},
/// and a causeless I5. Selecting I2 alone covers both causes.
pub fn fig1() -> Dataset {
    Dataset::new(
        vec![
            Feature::new("lang", FeatureKind::Nominal),
            Feature::new("size", FeatureKind::Numeric),
        ],
        vec![
            rec("I1", "java", 10.0, &["C1"]),
            rec("I2", "java", 3.0, &["C1", "C2"]),
            rec("I3", "python", 4.0, &["C2"]),
            rec("I4", "c", 12.0, &["C2"]),
            rec("I5", "java", 9.0, &[]),
        ],
    )
    .expect("fixture is valid")
}

/// [`fig1`] as CSV with a `causes` column.
pub const FIG1_CSV: &str = "\
id,lang,size,causes
I1,java,10,C1
I2,java,3,C1;C2
I3,python,4,C2
I4,c,12,C2
I5,java,9,
";

/// Synthetic data labelled by a planted two-rule DNF
/// `(x1 <= 30 and colour = red) or (x2 >= 70)`, with `noise` of the labels flipped.
///
/// Features: `x1`, `x2`, `x3` uniform in `[0, 100)` rounded to one decimal,
/// `colour` in {red, green, blue}. Positive records get a singleton cause
/// `c:<id>`. Returns the dataset and the noise-free labels.
pub fn planted(n: usize, noise: f64, seed: u64) -> (Dataset, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colours = ["red", "green", "blue"];
    let mut records = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let x1 = (rng.random_range(0.0..100.0f64) * 10.0).round() / 10.0;
        let x2 = (rng.random_range(0.0..100.0f64) * 10.0).round() / 10.0;
        let x3 = (rng.random_range(0.0..100.0f64) * 10.0).round() / 10.0;
        let colour = colours[rng.random_range(0..3)];
        let label = (x1 <= 30.0 && colour == "red") || x2 >= 70.0;
        let noisy = if rng.random_bool(noise) { !label } else { label };
        let id = format!("r{i}");
        let causes: Vec<String> = if noisy { vec![format!("c:{id}")] } else { vec![] };
        records.push(Record::new(
            id,
            [
                ("x1", Value::Numeric(x1)),
                ("x2", Value::Numeric(x2)),
                ("x3", Value::Numeric(x3)),
                ("colour", Value::nominal(colour)),
            ],
            causes,
        ));
        clean.push(label);
    }
    let features = vec![
        Feature::new("x1", FeatureKind::Numeric),
        Feature::new("x2", FeatureKind::Numeric),
        Feature::new("x3", FeatureKind::Numeric),
        Feature::new("colour", FeatureKind::Nominal),
    ];
    (Dataset::new(features, records).expect("valid"), clean)
}

/// Random dataset with `nominal` nominal features (values `v0..v{arity}`) and
/// `numeric` integer-valued numeric features in `0..10`; each record links to a
/// random subset of `causes` causes with probability `p_cause` per cause.
pub fn random(
    rows: usize,
    nominal: usize,
    arity: usize,
    numeric: usize,
    causes: usize,
    p_cause: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    for i in 0..nominal {
        features.push(Feature::new(format!("n{i}"), FeatureKind::Nominal));
    }
    for i in 0..numeric {
        features.push(Feature::new(format!("x{i}"), FeatureKind::Numeric));
    }
    let records = (0..rows)
        .map(|r| {
            let mut values = Vec::new();
            for i in 0..nominal {
                values.push((format!("n{i}"), Value::nominal(format!("v{}", rng.random_range(0..arity)))));
            }
            for i in 0..numeric {
                values.push((format!("x{i}"), Value::Numeric(rng.random_range(0..10) as f64)));
            }
            let linked: Vec<String> = (0..causes)
                .filter(|_| rng.random_bool(p_cause))
                .map(|c| format!("C{c}"))
                .collect();
            Record::new(format!("r{r}"), values, linked)
        })
        .collect();
    Dataset::new(features, records).expect("valid")
}
