//! Tabular metrics ingestion.
//!
//! The store is dense: one slice slot per (indexed cell, budget, trial), so
//! loading validates coverage exhaustively and lookups are a single index
//! computation. Schema violations report the offending line; coverage gaps
//! report the digests and combinations they are missing.

use std::io::BufRead;

use crate::cellspec::Digest;
use crate::enumerator::SpaceIndex;
use crate::oracle::{budget_index, EvaluationRecord, OracleError, EPOCH_BUDGETS, NUM_TRIALS};

const RECORDS_PER_CELL: usize = EPOCH_BUDGETS.len() * NUM_TRIALS as usize;
const MAX_REPORTED_GAPS: usize = 8;

/// Per-record payload; the key fields are implied by the slot position.
#[derive(Clone, Copy)]
struct StoredMetrics {
    train_accuracy: f64,
    validation_accuracy: f64,
    test_accuracy: f64,
    training_seconds: f64,
    parameter_count: u64,
}

pub(crate) struct TabularStore {
    metrics: Vec<StoredMetrics>,
}

impl TabularStore {
    pub(crate) fn load(
        index: &SpaceIndex,
        reader: impl BufRead,
    ) -> Result<TabularStore, OracleError> {
        let mut slots: Vec<Option<StoredMetrics>> = vec![None; index.len() * RECORDS_PER_CELL];
        for (line_idx, line) in reader.lines().enumerate() {
            let line_no = line_idx + 1;
            let schema = |reason: String| OracleError::Schema { line: line_no, reason };
            let record: EvaluationRecord = serde_json::from_str(&line?)
                .map_err(|e| schema(e.to_string()))?;
            let slot = record_slot(index, &record).map_err(schema)?;
            if slots[slot].is_some() {
                return Err(schema(format!(
                    "duplicate record for {} epochs={} trial={}",
                    record.digest, record.epoch_budget, record.trial
                )));
            }
            slots[slot] = Some(StoredMetrics {
                train_accuracy: record.train_accuracy,
                validation_accuracy: record.validation_accuracy,
                test_accuracy: record.test_accuracy,
                training_seconds: record.training_seconds,
                parameter_count: record.parameter_count,
            });
        }
        let metrics = check_complete(index, slots)?;
        check_time_ordering(index, &metrics)?;
        Ok(TabularStore { metrics })
    }

    pub(crate) fn record(
        &self,
        digest: Digest,
        position: usize,
        budget_idx: usize,
        trial: u32,
    ) -> EvaluationRecord {
        let m = self.metrics
            [position * RECORDS_PER_CELL + budget_idx * NUM_TRIALS as usize + (trial - 1) as usize];
        EvaluationRecord {
            digest,
            epoch_budget: EPOCH_BUDGETS[budget_idx],
            trial,
            train_accuracy: m.train_accuracy,
            validation_accuracy: m.validation_accuracy,
            test_accuracy: m.test_accuracy,
            training_seconds: m.training_seconds,
            parameter_count: m.parameter_count,
        }
    }
}

/// Validates one record's fields and resolves its dense slot.
fn record_slot(index: &SpaceIndex, record: &EvaluationRecord) -> Result<usize, String> {
    let budget_idx = budget_index(record.epoch_budget)
        .ok_or_else(|| format!("epoch budget {} is not one of 4, 12, 36, 108", record.epoch_budget))?;
    if !(1..=NUM_TRIALS).contains(&record.trial) {
        return Err(format!("trial {} is not in 1..=3", record.trial));
    }
    for (name, value) in [
        ("train_acc", record.train_accuracy),
        ("valid_acc", record.validation_accuracy),
        ("test_acc", record.test_accuracy),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(format!("{name} {value} is outside [0, 1]"));
        }
    }
    if !(record.training_seconds > 0.0 && record.training_seconds.is_finite()) {
        return Err(format!("time_s {} must be a positive number", record.training_seconds));
    }
    let position = index
        .position(&record.digest)
        .ok_or_else(|| format!("digest {} is not in the index", record.digest))?;
    Ok(position * RECORDS_PER_CELL + budget_idx * NUM_TRIALS as usize + (record.trial - 1) as usize)
}

/// Requires every (cell, budget, trial) slot to be filled; the error names
/// the missing combinations, digest first.
fn check_complete(
    index: &SpaceIndex,
    slots: Vec<Option<StoredMetrics>>,
) -> Result<Vec<StoredMetrics>, OracleError> {
    let mut gaps = Vec::new();
    for (slot, entry) in slots.iter().enumerate() {
        if entry.is_none() {
            let cell = slot / RECORDS_PER_CELL;
            let budget = EPOCH_BUDGETS[slot % RECORDS_PER_CELL / NUM_TRIALS as usize];
            let trial = slot % NUM_TRIALS as usize + 1;
            gaps.push(format!(
                "{} epochs={budget} trial={trial}",
                index.cells()[cell].digest()
            ));
        }
    }
    if gaps.is_empty() {
        return Ok(slots.into_iter().map(Option::unwrap).collect());
    }
    let total = gaps.len();
    gaps.truncate(MAX_REPORTED_GAPS);
    let mut message = format!("{total} missing records: {}", gaps.join(", "));
    if total > MAX_REPORTED_GAPS {
        message.push_str(&format!(" and {} more", total - MAX_REPORTED_GAPS));
    }
    Err(OracleError::Incomplete(message))
}

/// Training time must strictly increase across budgets for a fixed trial.
fn check_time_ordering(
    index: &SpaceIndex,
    metrics: &[StoredMetrics],
) -> Result<(), OracleError> {
    for (position, cell) in index.cells().iter().enumerate() {
        for trial in 0..NUM_TRIALS as usize {
            let seconds: Vec<f64> = (0..EPOCH_BUDGETS.len())
                .map(|b| {
                    metrics[position * RECORDS_PER_CELL + b * NUM_TRIALS as usize + trial]
                        .training_seconds
                })
                .collect();
            if !seconds.windows(2).all(|w| w[0] < w[1]) {
                return Err(OracleError::Incomplete(format!(
                    "training_seconds must increase with epoch budget for {} trial {}: {seconds:?}",
                    cell.digest(),
                    trial + 1
                )));
            }
        }
    }
    Ok(())
}
