//! User steering actions and how they change a board.
//!
//! Every action is a plain serializable value so it can be logged before it
//! takes effect and re-applied during replay.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blackboard::{
    AddOutcome, BoardError, Bounds, Pattern, RestrictOutcome, RestrictionKind, TrimOutcome, Txn,
    UndoOutcome,
};
use crate::eval::{EvalError, Evaluation, TargetFunction};
use crate::expr::{ComputedFeature, ExprError};
use crate::model::{parse_rule, ModelError, RuleSet};

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("agents are already running")]
    AgentsRunning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum UserAction {
    SetTarget {
        target: TargetFunction,
    },
    SubmitRuleset {
        ruleset: String,
    },
    /// Exactly one of `rule` and `pattern`.
    #[serde(rename_all = "camelCase")]
    Reject {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rule: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
    },
    Accept {
        rule: String,
    },
    Undo {
        #[serde(default)]
        id: Option<u64>,
    },
    SetBounds {
        bounds: Bounds,
    },
    Trim {
        keep: usize,
        sample: usize,
        seed: u64,
    },
    RemoveRecords {
        predicate: String,
    },
    Relabel {
        record: String,
        causes: Vec<String>,
    },
    AddComputedFeature {
        name: String,
        expression: String,
    },
    MarkVisited {
        rule: String,
        #[serde(default = "yes")]
        visited: bool,
    },
    StartAgents {
        n: i64,
        #[serde(default)]
        seed: Option<u64>,
    },
    StopAgents,
}

fn yes() -> bool {
    true
}

impl UserAction {
    pub fn name(&self) -> &'static str {
        match self {
            UserAction::SetTarget { .. } => "setTarget",
            UserAction::SubmitRuleset { .. } => "submitRuleset",
            UserAction::Reject { .. } => "reject",
            UserAction::Accept { .. } => "accept",
            UserAction::Undo { .. } => "undo",
            UserAction::SetBounds { .. } => "setBounds",
            UserAction::Trim { .. } => "trim",
            UserAction::RemoveRecords { .. } => "removeRecords",
            UserAction::Relabel { .. } => "relabel",
            UserAction::AddComputedFeature { .. } => "addComputedFeature",
            UserAction::MarkVisited { .. } => "markVisited",
            UserAction::StartAgents { .. } => "startAgents",
            UserAction::StopAgents => "stopAgents",
        }
    }

    /// Whether the action runs inside a board transaction (agent control
    /// actions do not).
    pub fn is_board_action(&self) -> bool {
        !matches!(
            self,
            UserAction::StartAgents { .. } | UserAction::StopAgents
        )
    }
}

/// What an action returned, besides its log sequence number.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged, rename_all = "camelCase")]
pub enum ActionOutput {
    None {},
    #[serde(rename_all = "camelCase")]
    Submitted {
        front_status: AddOutcome,
        evaluation: Evaluation,
    },
    Restricted(RestrictOutcome),
    Undone(UndoOutcome),
    Trimmed(TrimOutcome),
    #[serde(rename_all = "camelCase")]
    Removed {
        removed_count: usize,
    },
    #[serde(rename_all = "camelCase")]
    Agents {
        agents: usize,
    },
}

/// Applies a board action inside `txn`. `computed` is the session's list of
/// computed feature definitions, extended by `AddComputedFeature`.
pub fn apply(
    txn: &mut Txn<'_>,
    action: &UserAction,
    computed: &mut Vec<ComputedFeature>,
) -> Result<ActionOutput, FeedbackError> {
    let data = txn.data();
    let schema = data.features();
    Ok(match action {
        UserAction::SetTarget { target } => {
            txn.set_target(target.clone())?;
            ActionOutput::None {}
        }
        UserAction::SubmitRuleset { ruleset } => {
            let rs = RuleSet::parse(ruleset, schema)?;
            let front_status = txn.submit(&rs)?;
            let evaluation = txn.evaluate(&txn.restrictions().complete(&rs))?;
            ActionOutput::Submitted {
                front_status,
                evaluation,
            }
        }
        UserAction::Reject { rule, pattern } => {
            let kind = match (rule, pattern) {
                (Some(r), None) => RestrictionKind::RejectRule(parse_rule(r, schema)?),
                (None, Some(p)) => RestrictionKind::RejectPattern(Pattern::parse(p, schema)?),
                _ => {
                    return Err(FeedbackError::Invalid(
                        "give exactly one of `rule` and `pattern`".into(),
                    ))
                }
            };
            ActionOutput::Restricted(txn.restrict(kind)?)
        }
        UserAction::Accept { rule } => {
            let r = parse_rule(rule, schema)?;
            ActionOutput::Restricted(txn.restrict(RestrictionKind::AcceptRule(r))?)
        }
        UserAction::Undo { id } => ActionOutput::Undone(txn.undo(*id)?),
        UserAction::SetBounds { bounds } => {
            txn.set_bounds(bounds.clone())?;
            ActionOutput::None {}
        }
        UserAction::Trim { keep, sample, seed } => {
            ActionOutput::Trimmed(txn.trim(*keep, *sample, *seed)?)
        }
        UserAction::RemoveRecords { predicate } => {
            let rs = RuleSet::parse(predicate, schema)?;
            let bits = data.match_bits(&rs)?;
            let removed_count = bits.count_ones(..);
            if removed_count > 0 {
                txn.replace_data(data.without_rows(&bits)?)?;
            }
            ActionOutput::Removed { removed_count }
        }
        UserAction::Relabel { record, causes } => {
            if data.index_of(record).is_none() {
                return Err(FeedbackError::UnknownRecord(record.clone()));
            }
            let causes: BTreeSet<String> = causes.iter().cloned().collect();
            txn.replace_data(data.relabeled(record, causes)?)?;
            ActionOutput::None {}
        }
        UserAction::AddComputedFeature { name, expression } => {
            let cf = ComputedFeature::new(name.trim(), expression)?;
            let (feature, values) = cf.materialize(&data)?;
            txn.replace_data(data.with_computed_column(feature, values)?)?;
            computed.push(cf);
            ActionOutput::None {}
        }
        UserAction::MarkVisited { rule, visited } => {
            let r = parse_rule(rule, schema)?;
            txn.set_visited(&r, *visited)?;
            ActionOutput::None {}
        }
        UserAction::StartAgents { .. } | UserAction::StopAgents => {
            return Err(FeedbackError::Invalid(format!(
                "`{}` is not a board action",
                action.name()
            )))
        }
    })
}
