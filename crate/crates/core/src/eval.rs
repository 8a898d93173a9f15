//! Set-cover aware evaluation, Pareto dominance, scalarization and hypervolume.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Dataset, ModelError, RuleSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("objective vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("vector {0:?} exceeds the reference point")]
    ExceedsReference(Vec<f64>),
    #[error("invalid target function: {0}")]
    InvalidTarget(String),
}

/// Confusion counts (record level, positive = linked to a cause), cause
/// coverage and complexity of one ruleset on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationResult {
    pub selected_count: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub covered_causes: usize,
    pub total_causes: usize,
    pub rule_count: usize,
    pub proposition_count: usize,
}

impl EvaluationResult {
    pub fn missed_causes(&self) -> usize {
        self.total_causes - self.covered_causes
    }

    pub fn complexity(&self) -> usize {
        self.rule_count + self.proposition_count
    }

    pub fn precision(&self) -> Option<f64> {
        (self.selected_count > 0).then(|| self.tp as f64 / self.selected_count as f64)
    }

    pub fn record_count(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Evaluates a ruleset. A cause is covered when any selected record links to it.
pub fn evaluate(rs: &RuleSet, ds: &Dataset) -> Result<EvaluationResult, ModelError> {
    let rs = rs.canonicalize();
    let selected = ds.match_bits(&rs)?;
    let mut covered = vec![false; ds.cause_count()];
    let (mut tp, mut fp) = (0, 0);
    for row in selected.ones() {
        let causes = ds.record_causes(row);
        if causes.is_empty() {
            fp += 1;
        } else {
            tp += 1;
            for &c in causes {
                covered[c as usize] = true;
            }
        }
    }
    let positives = (0..ds.len()).filter(|&r| ds.is_positive(r)).count();
    let negatives = ds.len() - positives;
    let (rule_count, proposition_count) = rs.complexity();
    Ok(EvaluationResult {
        selected_count: tp + fp,
        tp,
        fp,
        tn: negatives - fp,
        fn_: positives - tp,
        covered_causes: covered.iter().filter(|c| **c).count(),
        total_causes: ds.cause_count(),
        rule_count,
        proposition_count,
    })
}

/// One minimized cost dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Objective {
    SelectedCount,
    MissedCauses,
    Complexity,
    FalsePositives,
    FalseNegatives,
    RuleCount,
    PropositionCount,
}

impl Objective {
    pub fn value(self, ev: &EvaluationResult) -> f64 {
        (match self {
            Objective::SelectedCount => ev.selected_count,
            Objective::MissedCauses => ev.missed_causes(),
            Objective::Complexity => ev.complexity(),
            Objective::FalsePositives => ev.fp,
            Objective::FalseNegatives => ev.fn_,
            Objective::RuleCount => ev.rule_count,
            Objective::PropositionCount => ev.proposition_count,
        }) as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::SelectedCount => "selectedCount",
            Objective::MissedCauses => "missedCauses",
            Objective::Complexity => "complexity",
            Objective::FalsePositives => "falsePositives",
            Objective::FalseNegatives => "falseNegatives",
            Objective::RuleCount => "ruleCount",
            Objective::PropositionCount => "propositionCount",
        }
    }
}

/// The session's objective dimensions, fixed for the lifetime of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objectives(pub Vec<Objective>);

impl Default for Objectives {
    fn default() -> Self {
        Objectives(vec![
            Objective::SelectedCount,
            Objective::MissedCauses,
            Objective::Complexity,
        ])
    }
}

impl Objectives {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vector(&self, ev: &EvaluationResult) -> ObjectiveVector {
        ObjectiveVector(self.0.iter().map(|o| o.value(ev)).collect())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|o| o.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn dims(&self) -> &[f64] {
        &self.0
    }

    /// Pareto dominance for minimization. Vectors must have equal length.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        debug_assert_eq!(self.0.len(), other.0.len());
        let mut strict = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            if a > b {
                return false;
            }
            if a < b {
                strict = true;
            }
        }
        strict
    }
}

pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, EvalError> {
    if a.0.len() != b.0.len() {
        return Err(EvalError::DimensionMismatch(a.0.len(), b.0.len()));
    }
    Ok(a.dominates(b))
}

/// An evaluation together with its objective vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub result: EvaluationResult,
    pub objectives: ObjectiveVector,
}

impl Evaluation {
    pub fn new(result: EvaluationResult, objectives: &Objectives) -> Self {
        Evaluation {
            objectives: objectives.vector(&result),
            result,
        }
    }
}

/// Collapses an evaluation into one cost (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TargetFunction {
    /// `1 - precision`, or 1 when nothing is selected.
    Precision,
    /// Dot product of weights and the objective vector.
    WeightedSum(Vec<f64>),
    /// One objective dimension, `+inf` outside the optional bounds.
    BoundedBest {
        dim: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    },
}

impl Default for TargetFunction {
    fn default() -> Self {
        TargetFunction::Precision
    }
}

impl TargetFunction {
    pub fn apply(&self, ev: &Evaluation) -> f64 {
        match self {
            TargetFunction::Precision => {
                let sel = ev.result.tp + ev.result.fp;
                if sel == 0 {
                    1.0
                } else {
                    1.0 - ev.result.tp as f64 / sel as f64
                }
            }
            TargetFunction::WeightedSum(w) => {
                w.iter().zip(ev.objectives.dims()).map(|(w, d)| w * d).sum()
            }
            TargetFunction::BoundedBest { dim, lower, upper } => {
                match ev.objectives.dims().get(*dim) {
                    Some(&v)
                        if lower.is_none_or(|lo| v >= lo) && upper.is_none_or(|hi| v <= hi) =>
                    {
                        v
                    }
                    _ => f64::INFINITY,
                }
            }
        }
    }

    /// Checks the function against the session's dimensionality.
    pub fn validate(&self, dims: usize) -> Result<(), EvalError> {
        match self {
            TargetFunction::Precision => Ok(()),
            TargetFunction::WeightedSum(w) => {
                if w.len() != dims {
                    return Err(EvalError::InvalidTarget(format!(
                        "expected {dims} weights, got {}",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(EvalError::InvalidTarget("weights must be finite and >= 0".into()));
                }
                if w.iter().all(|x| *x == 0.0) {
                    return Err(EvalError::InvalidTarget("weights must not all be zero".into()));
                }
                Ok(())
            }
            TargetFunction::BoundedBest { dim, lower, upper } => {
                if *dim >= dims {
                    return Err(EvalError::InvalidTarget(format!(
                        "dimension {dim} out of range (0..{dims})"
                    )));
                }
                if let (Some(lo), Some(hi)) = (lower, upper) {
                    if lo > hi {
                        return Err(EvalError::InvalidTarget("lower bound above upper".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFunction::Precision => f.write_str("precision"),
            TargetFunction::WeightedSum(w) => {
                f.write_str("weighted:")?;
                for (i, x) in w.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            TargetFunction::BoundedBest { dim, lower, upper } => {
                write!(f, "dim:{dim}")?;
                if lower.is_some() || upper.is_some() {
                    let show = |b: &Option<f64>| b.map(|x| x.to_string()).unwrap_or_default();
                    write!(f, ":{}:{}", show(lower), show(upper))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for TargetFunction {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| EvalError::InvalidTarget(format!("`{s}`: {m}"));
        let num = |t: &str| -> Result<f64, EvalError> {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(&format!("`{t}` is not a number")))
        };
        let s = s.trim();
        if s == "precision" {
            return Ok(TargetFunction::Precision);
        }
        if let Some(rest) = s.strip_prefix("weighted:") {
            let w = rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            return Ok(TargetFunction::WeightedSum(w));
        }
        if let Some(rest) = s.strip_prefix("dim:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let dim = parts[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("dimension must be an index"))?;
            let bound = |t: &str| -> Result<Option<f64>, EvalError> {
                if t.trim().is_empty() {
                    Ok(None)
                } else {
                    num(t).map(Some)
                }
            };
            return match parts.len() {
                1 => Ok(TargetFunction::BoundedBest {
                    dim,
                    lower: None,
                    upper: None,
                }),
                3 => Ok(TargetFunction::BoundedBest {
                    dim,
                    lower: bound(parts[1])?,
                    upper: bound(parts[2])?,
                }),
                _ => Err(bad("expected dim:INDEX or dim:INDEX:LOWER:UPPER")),
            };
        }
        Err(bad("expected `precision`, `weighted:...` or `dim:...`"))
    }
}

impl From<TargetFunction> for String {
    fn from(t: TargetFunction) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TargetFunction {
    type Error = EvalError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Lebesgue measure of the union of boxes `[v, reference]`.
pub fn hypervolume(
    front: &[ObjectiveVector],
    reference: &ObjectiveVector,
) -> Result<f64, EvalError> {
    let d = reference.0.len();
    for v in front {
        if v.0.len() != d {
            return Err(EvalError::DimensionMismatch(v.0.len(), d));
        }
        if v.0.iter().zip(&reference.0).any(|(a, r)| a > r) {
            return Err(EvalError::ExceedsReference(v.0.clone()));
        }
    }
    if d == 0 || front.is_empty() {
        return Ok(0.0);
    }
    let points: Vec<Vec<f64>> = front.iter().map(|v| v.0.clone()).collect();
    Ok(slice_volume(points, &reference.0))
}

fn slice_volume(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let d = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    match d {
        1 => reference[0] - points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut area = 0.0;
            let mut ceiling = reference[1];
            for p in &points {
                if p[1] < ceiling {
                    area += (reference[0] - p[0]) * (ceiling - p[1]);
                    ceiling = p[1];
                }
            }
            area
        }
        _ => {
            points.sort_by(|a, b| a[d - 1].total_cmp(&b[d - 1]));
            let sub_ref = &reference[..d - 1];
            let mut volume = 0.0;
            let mut active: Vec<Vec<f64>> = Vec::with_capacity(points.len());
            for i in 0..points.len() {
                active.push(points[i][..d - 1].to_vec());
                let next = points.get(i + 1).map_or(reference[d - 1], |p| p[d - 1]);
                let depth = next - points[i][d - 1];
                if depth > 0.0 {
                    volume += slice_volume(active.clone(), sub_ref) * depth;
                }
            }
            volume
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{Proposition, Operator, Rule};

    fn ov(v: &[f64]) -> ObjectiveVector {
        ObjectiveVector(v.to_vec())
    }

    #[test]
    fn fig1_select_i2() {
        let d = fixtures::fig1();
        let rs = RuleSet::parse("(lang = java and size <= 5)", d.features()).unwrap();
        let ev = evaluate(&rs, &d).unwrap();
        assert_eq!(ev.selected_count, 1);
        assert_eq!(ev.covered_causes, 2);
        assert_eq!(ev.missed_causes(), 0);
    }

    #[test]
    fn fig1_empty() {
        let d = fixtures::fig1();
        let ev = evaluate(&RuleSet::empty(), &d).unwrap();
        assert_eq!((ev.selected_count, ev.covered_causes, ev.tp, ev.fp), (0, 0, 0, 0));
        assert_eq!((ev.tn, ev.fn_), (1, 4));
    }

    #[test]
    fn fig1_select_i1_i3() {
        let d = fixtures::fig1();
        let rs = RuleSet::parse("(size >= 10 and lang = java) or (lang = python)", d.features())
            .unwrap();
        let ev = evaluate(&rs, &d).unwrap();
        assert_eq!(ev.selected_count, 2);
        assert_eq!(ev.covered_causes, 2);
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&ov(&[1., 0., 3.]), &ov(&[2., 0., 3.])).unwrap());
        assert!(!dominates(&ov(&[1., 1., 3.]), &ov(&[2., 0., 3.])).unwrap());
        assert!(!dominates(&ov(&[2., 0., 3.]), &ov(&[2., 0., 3.])).unwrap());
        assert!(dominates(&ov(&[1.]), &ov(&[1., 2.])).is_err());
    }

    #[test]
    fn target_examples() {
        let mk = |tp, fp, v: &[f64]| Evaluation {
            result: EvaluationResult {
                selected_count: tp + fp,
                tp,
                fp,
                tn: 0,
                fn_: 0,
                covered_causes: 0,
                total_causes: 0,
                rule_count: 0,
                proposition_count: 0,
            },
            objectives: ov(v),
        };
        assert_eq!(TargetFunction::Precision.apply(&mk(1, 0, &[1., 0., 3.])), 0.0);
        assert_eq!(TargetFunction::Precision.apply(&mk(0, 0, &[0., 0., 0.])), 1.0);
        let w: TargetFunction = "weighted:1,10,0.1".parse().unwrap();
        assert!((w.apply(&mk(1, 0, &[1., 0., 3.])) - 1.3).abs() < 1e-12);
        let b: TargetFunction = "dim:2::2".parse().unwrap();
        assert_eq!(b.apply(&mk(1, 0, &[1., 0., 3.])), f64::INFINITY);
        assert_eq!(b.apply(&mk(1, 0, &[1., 0., 2.])), 2.0);
    }

    #[test]
    fn target_text_round_trip() {
        for s in ["precision", "weighted:1,10,0.1", "dim:1", "dim:0:1:", "dim:2::5"] {
            let t: TargetFunction = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("weighted:a".parse::<TargetFunction>().is_err());
        assert!("dim:1:2".parse::<TargetFunction>().is_err());
        assert!("nonsense".parse::<TargetFunction>().is_err());
        assert!(TargetFunction::WeightedSum(vec![0., 0., 0.]).validate(3).is_err());
        assert!(TargetFunction::WeightedSum(vec![1., -1., 0.]).validate(3).is_err());
        assert!(TargetFunction::WeightedSum(vec![1., 0.]).validate(3).is_err());
        assert!("dim:3".parse::<TargetFunction>().unwrap().validate(3).is_err());
    }

    /// Grid-sampling oracle: fraction of cell centres dominated by some point.
    fn grid_hv(points: &[Vec<f64>], reference: &[f64], step: f64) -> f64 {
        let n = (reference[0] / step).round() as usize;
        let m = (reference[1] / step).round() as usize;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..m {
                let (x, y) = ((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
                if points.iter().any(|p| p[0] <= x && p[1] <= y) {
                    count += 1;
                }
            }
        }
        count as f64 * step * step
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[], &ov(&[1., 1.])).unwrap(), 0.0);
        assert_eq!(hypervolume(&[ov(&[0., 0.])], &ov(&[1., 1.])).unwrap(), 1.0);
        // grid oracle at resolution 0.01 gives 5.0 for this pair
        let oracle = grid_hv(&[vec![0., 2.], vec![2., 0.]], &[3., 3.], 0.01);
        assert!((oracle - 5.0).abs() < 1e-9);
        let hv = hypervolume(&[ov(&[0., 2.]), ov(&[2., 0.])], &ov(&[3., 3.])).unwrap();
        assert!((hv - 5.0).abs() < 1e-12);
        assert!(hypervolume(&[ov(&[4., 0.])], &ov(&[3., 3.])).is_err());
    }

    #[test]
    fn hypervolume_3d_against_inclusion_exclusion() {
        // two boxes: volume(a) + volume(b) - volume(a ∩ b)
        let r = [4., 4., 4.];
        let a = [1., 2., 0.];
        let b = [2., 1., 3.];
        let vol = |p: &[f64]| p.iter().zip(&r).map(|(x, r)| r - x).product::<f64>();
        let inter: Vec<f64> = a.iter().zip(&b).map(|(x, y)| f64::max(*x, *y)).collect();
        let expect = vol(&a) + vol(&b) - vol(&inter);
        let hv = hypervolume(&[ov(&a), ov(&b)], &ov(&r)).unwrap();
        assert!((hv - expect).abs() < 1e-12);
    }

    #[test]
    fn adding_inclusion_never_shrinks_selection() {
        let d = fixtures::fig1();
        let base = RuleSet::parse("(size <= 4)", d.features()).unwrap();
        let more = base.with_rule(
            crate::model::RuleList::Inclusion,
            Rule::single(Proposition::nominal("lang", Operator::Equals, "c")),
        );
        let less = base.with_rule(
            crate::model::RuleList::Exclusion,
            Rule::single(Proposition::nominal("lang", Operator::Equals, "python")),
        );
        let e0 = evaluate(&base, &d).unwrap().selected_count;
        assert!(evaluate(&more, &d).unwrap().selected_count >= e0);
        assert!(evaluate(&less, &d).unwrap().selected_count <= e0);
    }
}
