//! Extrinsic metrics: MultiWoZ Inform/Success over episode traces, and the
//! four SGD dialog-state-tracking metrics over per-turn frame predictions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Goal;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExtrinsicError {
    #[error("unknown domain {0:?}")]
    UnknownDomain(String),
    #[error("dialog {0}: no goal annotation")]
    MissingGoal(String),
    #[error("dialog {dialog_id}: trace references domain {domain:?} absent from the goal")]
    TraceDomainNotInGoal { dialog_id: String, domain: String },
    #[error("no episodes to evaluate")]
    NoEpisodes,
    #[error("no turns to evaluate")]
    NoTurns,
    #[error("predictions and golds are misaligned: {0}")]
    Misaligned(String),
    #[error("duplicate venue id {id:?} in domain {domain:?}")]
    DuplicateVenue { domain: String, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueRecord {
    pub id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

/// Venue database keyed by domain; file format `{<domain>: [VenueRecord]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VenueDatabase {
    pub domains: BTreeMap<String, Vec<VenueRecord>>,
}

impl VenueDatabase {
    pub fn validate(&self) -> Result<(), ExtrinsicError> {
        for (domain, records) in &self.domains {
            let mut ids = BTreeSet::new();
            for r in records {
                if !ids.insert(r.id.as_str()) {
                    return Err(ExtrinsicError::DuplicateVenue {
                        domain: domain.clone(),
                        id: r.id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn normalize(value: &str) -> String {
    value.trim().to_lowercase()
}

/// Ids of records matching every constraint (trimmed, case-insensitive).
/// `dontcare` matches anything; a slot missing from a record never matches.
pub fn query_db(
    db: &VenueDatabase,
    domain: &str,
    constraints: &BTreeMap<String, String>,
) -> Result<BTreeSet<String>, ExtrinsicError> {
    let records = db
        .domains
        .get(domain)
        .ok_or_else(|| ExtrinsicError::UnknownDomain(domain.to_string()))?;
    Ok(records
        .iter()
        .filter(|record| {
            constraints.iter().all(|(slot, wanted)| {
                let wanted = normalize(wanted);
                wanted == "dontcare"
                    || record
                        .attributes
                        .get(slot)
                        .is_some_and(|have| normalize(have) == wanted)
            })
        })
        .map(|r| r.id.clone())
        .collect())
}

/// What the system did over one dialog.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub dialog_id: String,
    /// Final belief per domain.
    #[serde(default)]
    pub final_constraints: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub offered_entity_ids: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub mentioned_slots: BTreeSet<String>,
}

fn check_trace_domains(goal: &Goal, trace: &EpisodeTrace) -> Result<(), ExtrinsicError> {
    let referenced = trace.final_constraints.keys().chain(trace.offered_entity_ids.keys());
    for domain in referenced {
        if !goal.domains.contains_key(domain) {
            return Err(ExtrinsicError::TraceDomainNotInGoal {
                dialog_id: trace.dialog_id.clone(),
                domain: domain.clone(),
            });
        }
    }
    Ok(())
}

/// Entities the system returned for `domain`: the offered ids when any were
/// offered, otherwise the DB answer to the final belief. A domain the system
/// never tracked returns nothing.
fn returned_entities(
    trace: &EpisodeTrace,
    domain: &str,
    db: &VenueDatabase,
) -> Result<BTreeSet<String>, ExtrinsicError> {
    match trace.offered_entity_ids.get(domain) {
        Some(offered) if !offered.is_empty() => Ok(offered.clone()),
        _ => match trace.final_constraints.get(domain) {
            Some(constraints) => query_db(db, domain, constraints),
            None => Ok(BTreeSet::new()),
        },
    }
}

/// True iff, for every goal domain with constraints, the returned entities
/// are a non-empty subset of the goal's acceptable entities.
pub fn inform(goal: Option<&Goal>, trace: &EpisodeTrace, db: &VenueDatabase) -> Result<bool, ExtrinsicError> {
    let goal = goal.ok_or_else(|| ExtrinsicError::MissingGoal(trace.dialog_id.clone()))?;
    check_trace_domains(goal, trace)?;
    for (domain, dg) in &goal.domains {
        if dg.constraints.is_empty() {
            continue;
        }
        let acceptable = query_db(db, domain, &dg.constraints)?;
        let returned = returned_entities(trace, domain, db)?;
        if returned.is_empty() || !returned.is_subset(&acceptable) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Inform, plus every requestable slot of every goal domain was mentioned.
pub fn success(goal: Option<&Goal>, trace: &EpisodeTrace, db: &VenueDatabase) -> Result<bool, ExtrinsicError> {
    if !inform(goal, trace, db)? {
        return Ok(false);
    }
    let goal = goal.expect("inform checked the goal");
    Ok(goal
        .domains
        .values()
        .all(|dg| dg.requestables.is_subset(&trace.mentioned_slots)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiwozReport {
    pub inform_rate: f64,
    pub success_rate: f64,
    pub episodes: usize,
    pub inform_count: usize,
    pub success_count: usize,
}

pub fn multiwoz_rates(
    episodes: &[(Option<&Goal>, &EpisodeTrace)],
    db: &VenueDatabase,
) -> Result<MultiwozReport, ExtrinsicError> {
    if episodes.is_empty() {
        return Err(ExtrinsicError::NoEpisodes);
    }
    let mut inform_count = 0;
    let mut success_count = 0;
    for (goal, trace) in episodes {
        if inform(*goal, trace, db)? {
            inform_count += 1;
            if success(*goal, trace, db)? {
                success_count += 1;
            }
        }
    }
    let n = episodes.len() as f64;
    Ok(MultiwozReport {
        inform_rate: inform_count as f64 / n,
        success_rate: success_count as f64 / n,
        episodes: episodes.len(),
        inform_count,
        success_count,
    })
}

/// Dialog state for one turn, predicted or gold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub dialog_id: String,
    pub turn_index: usize,
    #[serde(default)]
    pub active_intent: String,
    #[serde(default)]
    pub requested_slots: BTreeSet<String>,
    #[serde(default)]
    pub slot_values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgdReport {
    pub active_intent_accuracy: f64,
    pub requested_slots_f1: f64,
    /// `None` when no gold turn has any slot.
    pub average_goal_accuracy: Option<f64>,
    pub joint_goal_accuracy: f64,
    pub turns: usize,
    pub turns_with_gold_slots: usize,
}

fn set_f1(predicted: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
    if predicted.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let hits = predicted.intersection(gold).count() as f64;
    if hits == 0.0 {
        return 0.0;
    }
    let precision = hits / predicted.len() as f64;
    let recall = hits / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn aligned<'a>(
    predictions: &'a [FramePrediction],
    golds: &'a [FramePrediction],
) -> Result<Vec<(&'a FramePrediction, &'a FramePrediction)>, ExtrinsicError> {
    let key = |f: &'a FramePrediction| (f.dialog_id.as_str(), f.turn_index);
    let index = |frames: &'a [FramePrediction], what: &str| {
        let mut map = BTreeMap::new();
        for f in frames {
            if map.insert(key(f), f).is_some() {
                return Err(ExtrinsicError::Misaligned(format!(
                    "duplicate {what} turn ({}, {})",
                    f.dialog_id, f.turn_index
                )));
            }
        }
        Ok(map)
    };
    let preds = index(predictions, "predicted")?;
    let golds = index(golds, "gold")?;
    if preds.len() != golds.len() || preds.keys().ne(golds.keys()) {
        let missing = golds.keys().find(|k| !preds.contains_key(*k));
        let extra = preds.keys().find(|k| !golds.contains_key(*k));
        return Err(ExtrinsicError::Misaligned(format!(
            "first gold turn without prediction: {missing:?}; first prediction without gold: {extra:?}"
        )));
    }
    Ok(preds.into_values().zip(golds.into_values()).collect())
}

/// Active-intent accuracy, requested-slot F1, average and joint goal
/// accuracy over turns aligned on `(dialog_id, turn_index)`.
///
/// Average goal accuracy only counts turns whose gold state has at least
/// one slot.
pub fn sgd_metrics(predictions: &[FramePrediction], golds: &[FramePrediction]) -> Result<SgdReport, ExtrinsicError> {
    let pairs = aligned(predictions, golds)?;
    if pairs.is_empty() {
        return Err(ExtrinsicError::NoTurns);
    }
    let mut intent_hits = 0usize;
    let mut f1_sum = 0.0;
    let mut joint_hits = 0usize;
    let mut goal_acc_sum = 0.0;
    let mut goal_turns = 0usize;
    for (pred, gold) in &pairs {
        if pred.active_intent == gold.active_intent {
            intent_hits += 1;
        }
        f1_sum += set_f1(&pred.requested_slots, &gold.requested_slots);
        if pred.slot_values == gold.slot_values {
            joint_hits += 1;
        }
        if !gold.slot_values.is_empty() {
            let correct = gold
                .slot_values
                .iter()
                .filter(|(slot, value)| pred.slot_values.get(*slot) == Some(*value))
                .count();
            goal_acc_sum += correct as f64 / gold.slot_values.len() as f64;
            goal_turns += 1;
        }
    }
    let n = pairs.len() as f64;
    Ok(SgdReport {
        active_intent_accuracy: intent_hits as f64 / n,
        requested_slots_f1: f1_sum / n,
        average_goal_accuracy: (goal_turns > 0).then(|| goal_acc_sum / goal_turns as f64),
        joint_goal_accuracy: joint_hits as f64 / n,
        turns: pairs.len(),
        turns_with_gold_slots: goal_turns,
    })
}
