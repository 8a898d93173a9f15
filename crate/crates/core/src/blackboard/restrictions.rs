use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::text::Parser;
use crate::model::{
    parse_rule, write_name, write_token, Feature, ModelError, Operator, Proposition, Rule,
    RuleList, RuleSet, Value,
};

/// One element of a reject pattern; `None` parts are wildcards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternElement {
    pub feature: String,
    pub op: Option<Operator>,
    pub value: Option<Value>,
}

impl PatternElement {
    pub fn matches(&self, p: &Proposition) -> bool {
        self.feature == p.feature()
            && self.op.is_none_or(|op| op == p.op())
            && self.value.as_ref().is_none_or(|v| v == p.value())
    }
}

impl fmt::Display for PatternElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_name(f, &self.feature)?;
        if let Some(op) = self.op {
            write!(f, " {op}")?;
            match &self.value {
                Some(Value::Nominal(s)) => {
                    f.write_str(" ")?;
                    write_token(f, s)?;
                }
                Some(Value::Numeric(x)) => write!(f, " {x}")?,
                None => {}
            }
        }
        Ok(())
    }
}

/// A conjunction of pattern elements. A rule matches when every element is
/// matched by at least one of its propositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern(pub Vec<PatternElement>);

impl Pattern {
    pub fn matches(&self, rule: &Rule) -> bool {
        self.0
            .iter()
            .all(|e| rule.propositions().iter().any(|p| e.matches(p)))
    }

    /// Parses `elem { and elem }` with `elem := name [op [value]]`,
    /// optionally wrapped in parentheses.
    pub fn parse(text: &str, schema: &[Feature]) -> Result<Pattern, ModelError> {
        let trimmed = text.trim();
        let inner = trimmed
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(trimmed);
        let mut p = Parser::new(inner, schema)?;
        let mut elems = Vec::new();
        loop {
            let (name, _, _) = p.word("a feature name")?;
            let feature = p.feature(&name)?.clone();
            let op = p.operator();
            let value = match op {
                Some(op) if !p.at_end() && !p.next_is_keyword("and") => {
                    Some(p.value_for(&feature, op)?)
                }
                Some(op) if feature.kind != op.kind() => {
                    return Err(ModelError::KindMismatch {
                        feature: name,
                        op,
                        kind: feature.kind,
                    })
                }
                _ => None,
            };
            elems.push(PatternElement {
                feature: name,
                op,
                value,
            });
            if p.at_end() {
                break;
            }
            if !p.eat_keyword_pub("and") {
                return Err(ModelError::Syntax {
                    position: p.position(),
                    message: "expected `and`".into(),
                });
            }
        }
        Ok(Pattern(elems))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RestrictionKind {
    RejectRule(Rule),
    RejectPattern(Pattern),
    AcceptRule(Rule),
}

/// Serializable form of a restriction (rules and patterns as text).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum RestrictionSpec {
    RejectRule { rule: String },
    RejectPattern { pattern: String },
    AcceptRule { rule: String },
}

impl RestrictionSpec {
    pub fn resolve(&self, schema: &[Feature]) -> Result<RestrictionKind, ModelError> {
        Ok(match self {
            RestrictionSpec::RejectRule { rule } => RestrictionKind::RejectRule(parse_rule(rule, schema)?),
            RestrictionSpec::RejectPattern { pattern } => {
                RestrictionKind::RejectPattern(Pattern::parse(pattern, schema)?)
            }
            RestrictionSpec::AcceptRule { rule } => RestrictionKind::AcceptRule(parse_rule(rule, schema)?),
        })
    }
}

impl RestrictionKind {
    pub fn spec(&self) -> RestrictionSpec {
        match self {
            RestrictionKind::RejectRule(r) => RestrictionSpec::RejectRule { rule: r.to_string() },
            RestrictionKind::RejectPattern(p) => RestrictionSpec::RejectPattern {
                pattern: p.to_string(),
            },
            RestrictionKind::AcceptRule(r) => RestrictionSpec::AcceptRule { rule: r.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    pub id: u64,
    pub kind: RestrictionKind,
    pub active: bool,
}

/// Caps on the shape of rulesets the miner may produce. `None` is unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RuleSpaceLimits {
    pub max_propositions: Option<usize>,
    pub max_inclusions: Option<usize>,
    pub max_exclusions: Option<usize>,
}

impl RuleSpaceLimits {
    pub fn allows_rule(&self, rule: &Rule) -> bool {
        self.max_propositions.is_none_or(|m| rule.len() <= m)
    }

    pub fn allows(&self, rs: &RuleSet) -> bool {
        self.max_inclusions.is_none_or(|m| rs.inclusions.len() <= m)
            && self.max_exclusions.is_none_or(|m| rs.exclusions.len() <= m)
            && rs.rules().all(|(_, r)| self.allows_rule(r))
    }
}

/// Rejected and accepted rules plus rule-space limits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RestrictionStore {
    pub items: Vec<Restriction>,
    pub limits: RuleSpaceLimits,
}

impl RestrictionStore {
    pub fn with_limits(limits: RuleSpaceLimits) -> Self {
        RestrictionStore {
            items: Vec::new(),
            limits,
        }
    }

    pub fn active(&self) -> impl Iterator<Item = &Restriction> {
        self.items.iter().filter(|r| r.active)
    }

    pub fn accepted(&self) -> Vec<Rule> {
        let mut rules: Vec<Rule> = self
            .active()
            .filter_map(|r| match &r.kind {
                RestrictionKind::AcceptRule(rule) => Some(rule.clone()),
                _ => None,
            })
            .collect();
        rules.sort();
        rules.dedup();
        rules
    }

    pub fn is_accepted(&self, rule: &Rule) -> bool {
        self.active()
            .any(|r| matches!(&r.kind, RestrictionKind::AcceptRule(a) if a == rule))
    }

    /// The id of the active restriction forbidding `rule`, if any.
    /// Accepted rules are never forbidden.
    pub fn forbidding(&self, rule: &Rule) -> Option<u64> {
        if self.is_accepted(rule) {
            return None;
        }
        self.active()
            .find(|r| match &r.kind {
                RestrictionKind::RejectRule(x) => x == rule,
                RestrictionKind::RejectPattern(p) => p.matches(rule),
                RestrictionKind::AcceptRule(_) => false,
            })
            .map(|r| r.id)
    }

    pub fn is_forbidden(&self, rule: &Rule) -> bool {
        self.forbidding(rule).is_some()
    }

    /// True if a single proposition alone is enough to forbid any rule containing it.
    pub fn proposition_forbidden(&self, p: &Proposition) -> bool {
        self.active().any(|r| match &r.kind {
            RestrictionKind::RejectPattern(pat) => pat.0.len() == 1 && pat.0[0].matches(p),
            RestrictionKind::RejectRule(rule) => rule.len() == 1 && &rule.propositions()[0] == p,
            RestrictionKind::AcceptRule(_) => false,
        })
    }

    pub fn first_forbidden<'a>(&self, rs: &'a RuleSet) -> Option<(&'a Rule, u64)> {
        rs.rules()
            .find_map(|(_, r)| self.forbidding(r).map(|id| (r, id)))
    }

    /// No forbidden rule and within the rule-space limits. Accepted rules do
    /// not count against the limits.
    pub fn allows(&self, rs: &RuleSet) -> bool {
        if self.first_forbidden(rs).is_some() {
            return false;
        }
        let accepted = self.accepted();
        if accepted.is_empty() {
            return self.limits.allows(rs);
        }
        let mut own = rs.clone();
        own.inclusions.retain(|r| !accepted.contains(r));
        self.limits.allows(&own)
    }

    /// Canonical ruleset with all accepted rules present in the inclusions.
    pub fn complete(&self, rs: &RuleSet) -> RuleSet {
        let mut out = rs.canonicalize();
        for rule in self.accepted() {
            if !out.contains(RuleList::Inclusion, &rule) {
                out = out.with_rule(RuleList::Inclusion, rule);
            }
        }
        out
    }

    pub fn contains_accepted(&self, rs: &RuleSet) -> bool {
        self.accepted()
            .iter()
            .all(|r| rs.contains(RuleList::Inclusion, r))
    }

    pub fn get(&self, id: u64) -> Option<&Restriction> {
        self.items.iter().find(|r| r.id == id)
    }
}
