//! # covermine
//!
//! An anytime, multi-objective rule miner for *set-cover classification*:
//! every record may be linked to zero or more underlying causes, and a cause
//! counts as covered as soon as one of its records is selected.
//!
//! Parallel mining agents generate rulesets with a randomized separate-and-conquer
//! learner, refine them by local search, and recombine them by path relinking.
//! All of them work against a shared [`blackboard::Blackboard`] that keeps the
//! current Pareto front, work queues and user restrictions. A human can steer
//! the running search at any time through the operations on [`session::Session`].
//!
//! Rulesets use a DNF-with-exceptions syntax:
//!
//! ```text
//! (lang = java and size <= 5) or (churn >= 12) except (generated = yes)
//! ```
//!
//! ```
//! use covermine::model::{Dataset, Feature, FeatureKind, Record, RuleSet, Value};
//!
//! let features = vec![
//!     Feature::new("lang", FeatureKind::Nominal),
//!     Feature::new("size", FeatureKind::Numeric),
//! ];
//! let records = vec![
//!     Record::new("I1", [("lang", Value::nominal("java")), ("size", Value::Numeric(10.0))], ["C1"]),
//!     Record::new("I2", [("lang", Value::nominal("java")), ("size", Value::Numeric(3.0))], ["C1", "C2"]),
//! ];
//! let data = Dataset::new(features, records).unwrap();
//! let rs = RuleSet::parse("(lang = java and size <= 5)", data.features()).unwrap();
//! let eval = covermine::eval::evaluate(&rs, &data).unwrap();
//! assert_eq!(eval.selected_count, 1);
//! assert_eq!(eval.covered_causes, 2);
//! ```

pub mod agent;
pub mod blackboard;
pub mod eval;
pub mod explore;
pub mod expr;
pub mod feedback;
pub mod fixtures;
pub mod generate;
pub mod localsearch;
pub mod model;
pub mod pathrelink;
pub mod persist;
pub mod session;

/// Magic header carried by logs, snapshots and front exports.
pub const FORMAT_MAGIC: &str = "covermine/1";
