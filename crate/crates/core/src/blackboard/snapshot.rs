//! Text form of the complete board state, for snapshots.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    insert_front, AddOutcome, Blackboard, BoardConfig, BoardError, Bounds, Restriction,
    RestrictionSpec, RestrictionStore, RuleSpaceLimits, UndoKind, UndoRecord,
};
use crate::eval::{ObjectiveVector, TargetFunction};
use crate::model::{parse_rule, Dataset, RuleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavedEntry {
    pub ruleset: String,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavedRestriction {
    pub id: u64,
    #[serde(flatten)]
    pub spec: RestrictionSpec,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SavedUndoKind {
    Restriction,
    Trim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavedUndo {
    pub id: u64,
    pub kind: SavedUndoKind,
    pub removed: Vec<String>,
}

/// Everything on a board except the dataset itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoardState {
    pub data_version: u64,
    pub clock: u64,
    pub front: Vec<SavedEntry>,
    pub local_search_queue: Vec<String>,
    pub path_relink_queue: Vec<String>,
    pub restrictions: Vec<SavedRestriction>,
    pub limits: RuleSpaceLimits,
    pub restrictions_version: u64,
    pub target: TargetFunction,
    pub bounds: Bounds,
    pub undo: Vec<SavedUndo>,
    pub next_id: u64,
    pub visited: Vec<String>,
}

fn texts<'a>(it: impl IntoIterator<Item = &'a RuleSet>) -> Vec<String> {
    it.into_iter().map(|r| r.to_string()).collect()
}

impl Blackboard {
    /// A consistent copy of the whole state.
    pub fn export_state(&self) -> BoardState {
        self.export_with_data().0
    }

    /// The state together with the dataset it refers to, read under one lock.
    pub fn export_with_data(&self) -> (BoardState, Arc<Dataset>) {
        let st = self.state.read();
        let state = BoardState {
            data_version: st.data_version,
            clock: self.clock(),
            front: st
                .front
                .iter()
                .map(|(rs, ev)| SavedEntry {
                    ruleset: rs.to_string(),
                    objectives: ev.objectives.clone(),
                })
                .collect(),
            local_search_queue: texts(&st.ls_queue),
            path_relink_queue: texts(&st.pr_queue),
            restrictions: st
                .restrictions
                .items
                .iter()
                .map(|r| SavedRestriction {
                    id: r.id,
                    spec: r.kind.spec(),
                    active: r.active,
                })
                .collect(),
            limits: st.restrictions.limits,
            restrictions_version: st.restrictions_version,
            target: st.target.clone(),
            bounds: st.bounds.clone(),
            undo: st
                .undo
                .iter()
                .map(|u| SavedUndo {
                    id: u.id,
                    kind: match u.kind {
                        UndoKind::Restriction => SavedUndoKind::Restriction,
                        UndoKind::Trim => SavedUndoKind::Trim,
                    },
                    removed: texts(&u.removed),
                })
                .collect(),
            next_id: st.next_id,
            visited: st.visited.iter().map(|r| r.to_string()).collect(),
        };
        (state, st.data.clone())
    }

    /// Rebuilds a board from saved state. Every entry is re-evaluated and
    /// must reproduce its saved objective vector; the front must be free of
    /// dominated pairs and forbidden rules.
    pub fn from_state(
        data: Dataset,
        config: BoardConfig,
        saved: &BoardState,
    ) -> Result<Blackboard, BoardError> {
        let schema = data.features().to_vec();
        let parse = |t: &str| RuleSet::parse(t, &schema).map_err(BoardError::from);
        let bad = |m: String| BoardError::InvalidArgument(m);
        saved.bounds.validate(config.objectives.len())?;
        saved.target.validate(config.objectives.len())?;

        let mut store = RestrictionStore::with_limits(saved.limits);
        for r in &saved.restrictions {
            store.items.push(Restriction {
                id: r.id,
                kind: r.spec.resolve(&schema)?,
                active: r.active,
            });
        }

        let board = Blackboard::with_config(data, config);
        {
            let mut st = board.state.write();
            st.data_version = saved.data_version;
            st.restrictions = Arc::new(store);
            st.restrictions_version = saved.restrictions_version;
            st.target = saved.target.clone();
            st.bounds = saved.bounds.clone();
            st.next_id = saved.next_id;
            st.visited = saved
                .visited
                .iter()
                .map(|t| parse_rule(t, &schema))
                .collect::<Result<BTreeSet<_>, _>>()?;
            st.ls_queue = saved
                .local_search_queue
                .iter()
                .map(|t| parse(t))
                .collect::<Result<VecDeque<_>, _>>()?;
            st.pr_queue = saved
                .path_relink_queue
                .iter()
                .map(|t| parse(t))
                .collect::<Result<VecDeque<_>, _>>()?;
            st.undo = saved
                .undo
                .iter()
                .map(|u| {
                    Ok(UndoRecord {
                        id: u.id,
                        kind: match u.kind {
                            SavedUndoKind::Restriction => UndoKind::Restriction,
                            SavedUndoKind::Trim => UndoKind::Trim,
                        },
                        removed: u.removed.iter().map(|t| parse(t)).collect::<Result<_, _>>()?,
                    })
                })
                .collect::<Result<Vec<_>, BoardError>>()?;

            let mut front = BTreeMap::new();
            for e in &saved.front {
                let rs = parse(&e.ruleset)?;
                if let Some((rule, id)) = st.restrictions.first_forbidden(&rs) {
                    return Err(bad(format!("entry {rs}: rule {rule} is forbidden by restriction {id}")));
                }
                let ev = board.evaluate_with(&st.data, st.data_version, &rs)?;
                if ev.objectives != e.objectives {
                    return Err(bad(format!("entry {rs}: stored objectives do not match")));
                }
                if insert_front(&mut front, rs.clone(), ev) != AddOutcome::Added {
                    return Err(bad(format!("entry {rs} is dominated or duplicated")));
                }
            }
            if front.len() != saved.front.len() {
                return Err(bad("the saved front contains dominated entries".into()));
            }
            st.front = front;
        }
        board
            .clock
            .store(saved.clock, std::sync::atomic::Ordering::SeqCst);
        Ok(board)
    }
}
