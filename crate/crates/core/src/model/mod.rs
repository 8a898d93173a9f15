//! Core domain types: features, records, propositions, rules and rulesets.
//!
//! A [`RuleSet`] denotes `(∨ inclusions) ∧ ¬(∨ exclusions)` where every rule is a
//! conjunction of [`Proposition`]s. Rules keep their propositions sorted, so two
//! rules with the same propositions are always equal. Rulesets are only put
//! into canonical form by [`RuleSet::canonicalize`] (the parser and all engine
//! components hand out canonical rulesets).

mod dataset;
pub(crate) mod text;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{Column, Dataset};
pub use text::{parse_rule, write_name, write_token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("operator `{op}` cannot be applied to {kind} feature `{feature}`")]
    KindMismatch {
        feature: String,
        op: Operator,
        kind: FeatureKind,
    },
    #[error("invalid value for `{feature}`: {message}")]
    InvalidValue { feature: String, message: String },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FeatureKind {
    Nominal,
    Numeric,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Nominal => f.write_str("nominal"),
            FeatureKind::Numeric => f.write_str("numeric"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Feature {
            name: name.into(),
            kind,
        }
    }
}

/// A feature value, also used as the constant of a proposition.
///
/// Numeric values are ordered by [`f64::total_cmp`]; `-0.0` is normalized to
/// `0.0` on construction through [`Value::numeric`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Numeric(f64),
    Nominal(String),
}

impl Value {
    pub fn nominal(s: impl Into<String>) -> Self {
        Value::Nominal(s.into())
    }

    pub fn numeric(x: f64) -> Self {
        Value::Numeric(if x == 0.0 { 0.0 } else { x })
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Value::Nominal(_) => FeatureKind::Nominal,
            Value::Numeric(_) => FeatureKind::Numeric,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Numeric(x) => Some(*x),
            Value::Nominal(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Nominal(s) => Some(s),
            Value::Numeric(_) => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Nominal(a), Value::Nominal(b)) => a.cmp(b),
            (Value::Numeric(a), Value::Numeric(b)) => a.total_cmp(b),
            (Value::Nominal(_), Value::Numeric(_)) => Ordering::Less,
            (Value::Numeric(_), Value::Nominal(_)) => Ordering::Greater,
        }
    }
}

impl std::hash::Hash for Value {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Value::Nominal(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            Value::Numeric(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nominal(s) => f.write_str(s),
            Value::Numeric(x) => write!(f, "{x}"),
        }
    }
}

/// One row of a dataset, in a self-describing form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub values: BTreeMap<String, Value>,
    #[serde(default)]
    pub causes: BTreeSet<String>,
}

impl Record {
    pub fn new<K, C>(
        id: impl Into<String>,
        values: impl IntoIterator<Item = (K, Value)>,
        causes: impl IntoIterator<Item = C>,
    ) -> Self
    where
        K: Into<String>,
        C: Into<String>,
    {
        Record {
            id: id.into(),
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            causes: causes.into_iter().map(Into::into).collect(),
        }
    }

    /// A record is positive iff it is linked to at least one cause.
    pub fn is_positive(&self) -> bool {
        !self.causes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Operator {
    Equals,
    NotEquals,
    LessOrEqual,
    GreaterOrEqual,
}

impl Operator {
    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Equals => "=",
            Operator::NotEquals => "!=",
            Operator::LessOrEqual => "<=",
            Operator::GreaterOrEqual => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Operator> {
        Some(match s {
            "=" => Operator::Equals,
            "!=" => Operator::NotEquals,
            "<=" => Operator::LessOrEqual,
            ">=" => Operator::GreaterOrEqual,
            _ => return None,
        })
    }

    /// The feature kind this operator applies to.
    pub fn kind(self) -> FeatureKind {
        match self {
            Operator::Equals | Operator::NotEquals => FeatureKind::Nominal,
            Operator::LessOrEqual | Operator::GreaterOrEqual => FeatureKind::Numeric,
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// An atomic condition `feature op value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    feature: String,
    op: Operator,
    value: Value,
}

impl Proposition {
    pub fn new(
        feature: impl Into<String>,
        op: Operator,
        value: Value,
    ) -> Result<Self, ModelError> {
        let feature = feature.into();
        match (&value, op.kind()) {
            (Value::Nominal(_), FeatureKind::Nominal) => {}
            (Value::Numeric(x), FeatureKind::Numeric) => {
                if !x.is_finite() {
                    return Err(ModelError::InvalidValue {
                        feature,
                        message: format!("threshold {x} is not finite"),
                    });
                }
            }
            _ => {
                return Err(ModelError::KindMismatch {
                    feature,
                    op,
                    kind: value.kind(),
                })
            }
        }
        let value = match value {
            Value::Numeric(x) => Value::numeric(x),
            v => v,
        };
        Ok(Proposition { feature, op, value })
    }

    pub fn nominal(feature: impl Into<String>, op: Operator, value: impl Into<String>) -> Self {
        Self::new(feature, op, Value::Nominal(value.into())).expect("nominal proposition")
    }

    pub fn numeric(feature: impl Into<String>, op: Operator, value: f64) -> Self {
        Self::new(feature, op, Value::Numeric(value)).expect("numeric proposition")
    }

    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn op(&self) -> Operator {
        self.op
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    /// Same feature and operator, different constant.
    pub fn with_value(&self, value: Value) -> Result<Self, ModelError> {
        Proposition::new(self.feature.clone(), self.op, value)
    }

    /// Evaluates the proposition on a value. NaN never satisfies a numeric comparison.
    pub fn holds(&self, v: &Value) -> bool {
        match (self.op, &self.value, v) {
            (Operator::Equals, Value::Nominal(a), Value::Nominal(b)) => a == b,
            (Operator::NotEquals, Value::Nominal(a), Value::Nominal(b)) => a != b,
            (Operator::LessOrEqual, Value::Numeric(a), Value::Numeric(b)) => *b <= *a,
            (Operator::GreaterOrEqual, Value::Numeric(a), Value::Numeric(b)) => *b >= *a,
            _ => false,
        }
    }

    /// Checks feature existence and kind compatibility.
    pub fn validate(&self, schema: &[Feature]) -> Result<(), ModelError> {
        let feature = schema
            .iter()
            .find(|f| f.name == self.feature)
            .ok_or_else(|| ModelError::UnknownFeature(self.feature.clone()))?;
        if feature.kind != self.op.kind() {
            return Err(ModelError::KindMismatch {
                feature: self.feature.clone(),
                op: self.op,
                kind: feature.kind,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_name(f, &self.feature)?;
        write!(f, " {} ", self.op)?;
        match &self.value {
            Value::Nominal(s) => write_token(f, s),
            Value::Numeric(x) => write!(f, "{x}"),
        }
    }
}

/// A nonempty conjunction of propositions, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    props: Vec<Proposition>,
}

impl Rule {
    /// Builds a rule. Rejects empty rules, more than one `=`, `<=` or `>=` per
    /// feature (duplicates of the very same proposition collapse silently).
    pub fn new(props: impl IntoIterator<Item = Proposition>) -> Result<Self, ModelError> {
        let mut props: Vec<Proposition> = props.into_iter().collect();
        if props.is_empty() {
            return Err(ModelError::InvalidRule("a rule needs at least one proposition".into()));
        }
        props.sort();
        props.dedup();
        for pair in props.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.feature == b.feature && a.op == b.op && a.op != Operator::NotEquals {
                return Err(ModelError::InvalidRule(format!(
                    "more than one `{}` proposition on `{}`",
                    a.op, a.feature
                )));
            }
        }
        Ok(Rule { props })
    }

    pub fn single(prop: Proposition) -> Self {
        Rule { props: vec![prop] }
    }

    pub fn propositions(&self) -> &[Proposition] {
        &self.props
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    /// Sorted, deduplicated feature names used by the rule.
    pub fn features(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.props.iter().map(|p| p.feature.as_str()).collect();
        names.dedup();
        names
    }

    /// The rule with one proposition removed, or `None` if it would become empty.
    pub fn without(&self, index: usize) -> Option<Rule> {
        if self.props.len() <= 1 {
            return None;
        }
        let mut props = self.props.clone();
        props.remove(index);
        Some(Rule { props })
    }

    /// The rule with the proposition at `index` replaced.
    pub fn replacing(&self, index: usize, prop: Proposition) -> Result<Rule, ModelError> {
        let mut props = self.props.clone();
        props[index] = prop;
        Rule::new(props)
    }

    /// The rule extended by one proposition.
    pub fn with(&self, prop: Proposition) -> Result<Rule, ModelError> {
        if self.props.contains(&prop) {
            return Err(ModelError::InvalidRule(format!("`{prop}` already present")));
        }
        let mut props = self.props.clone();
        props.push(prop);
        Rule::new(props)
    }

    pub fn matches(&self, record: &Record) -> Result<bool, ModelError> {
        for p in &self.props {
            let v = record
                .values
                .get(&p.feature)
                .ok_or_else(|| ModelError::UnknownFeature(p.feature.clone()))?;
            if v.kind() != p.op.kind() {
                return Err(ModelError::KindMismatch {
                    feature: p.feature.clone(),
                    op: p.op,
                    kind: v.kind(),
                });
            }
            if !p.holds(v) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn validate(&self, schema: &[Feature]) -> Result<(), ModelError> {
        self.props.iter().try_for_each(|p| p.validate(schema))
    }

    pub fn parse(text: &str, schema: &[Feature]) -> Result<Rule, ModelError> {
        parse_rule(text, schema)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.props.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which list of a ruleset a rule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RuleList {
    Inclusion,
    Exclusion,
}

/// The model: inclusions, optionally followed by exclusions ("except").
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleSet {
    pub inclusions: Vec<Rule>,
    pub exclusions: Vec<Rule>,
}

impl RuleSet {
    pub fn empty() -> Self {
        RuleSet::default()
    }

    /// Builds a ruleset and puts it into canonical form.
    pub fn new(inclusions: Vec<Rule>, exclusions: Vec<Rule>) -> Self {
        let mut rs = RuleSet {
            inclusions,
            exclusions,
        };
        rs.normalize();
        rs
    }

    pub fn is_empty(&self) -> bool {
        self.inclusions.is_empty() && self.exclusions.is_empty()
    }

    pub fn list(&self, which: RuleList) -> &[Rule] {
        match which {
            RuleList::Inclusion => &self.inclusions,
            RuleList::Exclusion => &self.exclusions,
        }
    }

    pub fn contains(&self, which: RuleList, rule: &Rule) -> bool {
        self.list(which).contains(rule)
    }

    /// All rules with their list, inclusions first.
    pub fn rules(&self) -> impl Iterator<Item = (RuleList, &Rule)> {
        self.inclusions
            .iter()
            .map(|r| (RuleList::Inclusion, r))
            .chain(self.exclusions.iter().map(|r| (RuleList::Exclusion, r)))
    }

    /// Rules sorted and deduplicated within each list.
    pub fn canonicalize(&self) -> RuleSet {
        let mut rs = self.clone();
        rs.normalize();
        rs
    }

    pub fn is_canonical(&self) -> bool {
        let sorted = |v: &[Rule]| v.windows(2).all(|w| w[0] < w[1]);
        sorted(&self.inclusions) && sorted(&self.exclusions)
    }

    fn normalize(&mut self) {
        self.inclusions.sort();
        self.inclusions.dedup();
        self.exclusions.sort();
        self.exclusions.dedup();
    }

    /// Canonical ruleset with one more rule.
    pub fn with_rule(&self, which: RuleList, rule: Rule) -> RuleSet {
        let mut rs = self.clone();
        match which {
            RuleList::Inclusion => rs.inclusions.push(rule),
            RuleList::Exclusion => rs.exclusions.push(rule),
        }
        rs.normalize();
        rs
    }

    /// Canonical ruleset with one rule removed (no-op if absent).
    pub fn without_rule(&self, which: RuleList, rule: &Rule) -> RuleSet {
        let mut rs = self.clone();
        match which {
            RuleList::Inclusion => rs.inclusions.retain(|r| r != rule),
            RuleList::Exclusion => rs.exclusions.retain(|r| r != rule),
        }
        rs.normalize();
        rs
    }

    /// Canonical union of both lists.
    pub fn union(&self, other: &RuleSet) -> RuleSet {
        RuleSet::new(
            self.inclusions.iter().chain(&other.inclusions).cloned().collect(),
            self.exclusions.iter().chain(&other.exclusions).cloned().collect(),
        )
    }

    /// `(ruleCount, propositionCount)` of the canonical form.
    pub fn complexity(&self) -> (usize, usize) {
        let rs = self.canonicalize();
        let rules = rs.inclusions.len() + rs.exclusions.len();
        let props = rs.rules().map(|(_, r)| r.len()).sum();
        (rules, props)
    }

    /// Matches a self-describing record. Structural problems are reported
    /// before any matching happens.
    pub fn matches(&self, record: &Record) -> Result<bool, ModelError> {
        for (_, rule) in self.rules() {
            for p in rule.propositions() {
                let v = record
                    .values
                    .get(p.feature())
                    .ok_or_else(|| ModelError::UnknownFeature(p.feature().to_string()))?;
                if v.kind() != p.op().kind() {
                    return Err(ModelError::KindMismatch {
                        feature: p.feature().to_string(),
                        op: p.op(),
                        kind: v.kind(),
                    });
                }
            }
        }
        let mut included = false;
        for rule in &self.inclusions {
            if rule.matches(record)? {
                included = true;
                break;
            }
        }
        if !included {
            return Ok(false);
        }
        for rule in &self.exclusions {
            if rule.matches(record)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn validate(&self, schema: &[Feature]) -> Result<(), ModelError> {
        self.rules().try_for_each(|(_, r)| r.validate(schema))
    }

    /// Parses ruleset text against a schema and returns its canonical form.
    pub fn parse(text: &str, schema: &[Feature]) -> Result<RuleSet, ModelError> {
        text::parse_ruleset(text, schema)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inclusions.is_empty() {
            f.write_str("(false)")?;
        }
        for (i, r) in self.inclusions.iter().enumerate() {
            if i > 0 {
                f.write_str(" or ")?;
            }
            write!(f, "{r}")?;
        }
        if !self.exclusions.is_empty() {
            f.write_str(" except ")?;
            for (i, r) in self.exclusions.iter().enumerate() {
                if i > 0 {
                    f.write_str(" or ")?;
                }
                write!(f, "{r}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for RuleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
