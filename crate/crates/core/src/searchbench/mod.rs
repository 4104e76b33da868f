//! Search benchmarking under a simulated training-time budget.
//!
//! Every algorithm runs against the same clock: each oracle query charges
//! that record's training seconds, and a run stops after the first
//! evaluation whose completion pushes the clock past the budget (that
//! evaluation still counts). Proposing and rejecting encodings is free;
//! only training costs time.
//!
//! Steering reads validation accuracy and training seconds, nothing else.
//! Test accuracy enters a trace only afterwards, when incumbent events are
//! annotated with mean test accuracy and the regret against the best cell
//! in the space. Replacing the oracle with a poisoned view that returns a
//! sentinel test accuracy therefore changes no incumbent decision, and the
//! test suite holds every algorithm to that.

mod runners;

pub use runners::{
    run_evolution, run_random_search, run_reinforce, run_successive_halving,
};

use std::collections::HashMap;
use std::io::{self, Write};
use std::str::FromStr;

use rand_core::RngCore;
use rayon::prelude::*;
use thiserror::Error;

use crate::cellspec::{Digest, SpecError};
use crate::oracle::{EvaluationRecord, Oracle, OracleError};
use crate::rng;
use crate::stats::{self, EcdfSeries};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("bad search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("search stalled: {0}")]
    Stalled(String),
}

/// The five benchmarked search strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RandomSearch,
    RegularizedEvolution,
    NonRegularizedEvolution,
    Reinforce,
    SuccessiveHalving,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::RandomSearch,
        Algorithm::RegularizedEvolution,
        Algorithm::NonRegularizedEvolution,
        Algorithm::Reinforce,
        Algorithm::SuccessiveHalving,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::RandomSearch => "rs",
            Algorithm::RegularizedEvolution => "re",
            Algorithm::NonRegularizedEvolution => "nre",
            Algorithm::Reinforce => "reinforce",
            Algorithm::SuccessiveHalving => "hb",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Algorithm, SearchError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| {
                SearchError::Config(format!(
                    "unknown algorithm {s:?}; expected one of rs, re, nre, reinforce, hb"
                ))
            })
    }
}

/// Knobs shared by all runners; fields an algorithm does not use are ignored
/// but still validated, so one config can drive a whole comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// Simulated seconds of training the run may charge.
    pub time_budget_seconds: f64,
    pub population_size: usize,
    pub tournament_size: usize,
    pub learning_rate: f64,
    pub baseline_decay: f64,
    pub batch_size: usize,
    /// Successive-halving reduction factor; only 3 matches the four epoch
    /// budgets, so only 3 is accepted.
    pub eta: u32,
    /// Root seed; repetition `i` of a batch draws from the independent
    /// stream `(seed, "search-run", i)`.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            algorithm: Algorithm::RandomSearch,
            time_budget_seconds: 1e7,
            population_size: 100,
            tournament_size: 10,
            learning_rate: 0.5,
            baseline_decay: 0.9,
            batch_size: 1,
            eta: 3,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::Config(msg));
        if !(self.time_budget_seconds > 0.0 && self.time_budget_seconds.is_finite()) {
            return bad(format!(
                "time budget must be a positive finite number of seconds, got {}",
                self.time_budget_seconds
            ));
        }
        if self.population_size == 0 {
            return bad("population size must be at least 1".into());
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad(format!(
                "tournament size must be in 1..={}, got {}",
                self.population_size, self.tournament_size
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be finite and positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad(format!("baseline decay must lie in [0, 1), got {}", self.baseline_decay));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.eta != 3 {
            return bad(format!("eta must be 3 to match the four epoch budgets, got {}", self.eta));
        }
        Ok(())
    }
}

/// One incumbent change: the run's state right after the evaluation that
/// installed a new best cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEvent {
    /// Cumulative simulated training seconds charged so far.
    pub time_seconds: f64,
    /// Oracle evaluations charged so far.
    pub evaluations: usize,
    pub incumbent: Digest,
    /// Best validation accuracy observed for the incumbent.
    pub validation_accuracy: f64,
    /// Trial-mean test accuracy of the incumbent at the full budget.
    pub mean_test_accuracy: f64,
    /// Best mean test accuracy in the space minus the incumbent's.
    pub test_regret: f64,
}

/// A completed run: incumbent-change events in clock order plus the terminal
/// snapshot taken when the budget ran out.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    events: Vec<TraceEvent>,
    terminal: TraceEvent,
}

impl RunTrace {
    /// Incumbent changes in clock order. Times increase strictly and
    /// validation accuracies as well; the list is never empty because the
    /// first evaluation always installs an incumbent.
    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    /// The run's state at exhaustion: final clock and evaluation count with
    /// the last incumbent. Coincides with the last event when that final
    /// evaluation itself improved the incumbent.
    pub fn terminal(&self) -> &TraceEvent {
        &self.terminal
    }

    /// The incumbent in force at `time_seconds` (step interpolation). Times
    /// before the first evaluation report the first event.
    pub fn event_at(&self, time_seconds: f64) -> &TraceEvent {
        match self.events.partition_point(|e| e.time_seconds <= time_seconds) {
            0 => &self.events[0],
            k => &self.events[k - 1],
        }
    }

    /// Regret of the final incumbent.
    pub fn final_regret(&self) -> f64 {
        self.terminal.test_regret
    }

    /// One row per incumbent change plus a terminal row, unless the last
    /// event already is the terminal snapshot.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_s,evals,best_valid_acc,mean_test_acc,test_regret")?;
        let row = |out: &mut W, e: &TraceEvent| {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.time_seconds, e.evaluations, e.validation_accuracy, e.mean_test_accuracy, e.test_regret
            )
        };
        for event in &self.events {
            row(&mut out, event)?;
        }
        let last = self.events.last().expect("traces hold at least one event");
        if self.terminal.time_seconds > last.time_seconds {
            row(&mut out, &self.terminal)?;
        }
        Ok(())
    }
}

/// Clock, evaluation, and incumbent accounting shared by all runners. The
/// steering loop feeds records in here and reads back only whether the
/// budget allows another evaluation; test fields stay untouched until
/// [`RunState::finish`].
pub(crate) struct RunState<'a> {
    oracle: &'a Oracle,
    budget_seconds: f64,
    clock: f64,
    evaluations: usize,
    best_validation: f64,
    events: Vec<(f64, usize, Digest, f64)>,
}

impl<'a> RunState<'a> {
    pub(crate) fn new(oracle: &'a Oracle, budget_seconds: f64) -> RunState<'a> {
        RunState {
            oracle,
            budget_seconds,
            clock: 0.0,
            evaluations: 0,
            best_validation: f64::NEG_INFINITY,
            events: Vec::new(),
        }
    }

    /// Charges one evaluation and updates the incumbent, which changes only
    /// on strict improvement, so ties keep the earlier discovery and a
    /// re-queried cell counts through its best observed trial. Returns
    /// whether the budget still allows another evaluation.
    pub(crate) fn absorb(&mut self, digest: Digest, record: &EvaluationRecord) -> bool {
        self.clock += record.training_seconds;
        self.evaluations += 1;
        if record.validation_accuracy > self.best_validation {
            self.best_validation = record.validation_accuracy;
            self.events.push((self.clock, self.evaluations, digest, self.best_validation));
        }
        self.clock <= self.budget_seconds
    }

    /// Annotates the incumbent history with test metrics. This is the only
    /// place test accuracy is read, after every steering decision is made.
    pub(crate) fn finish(self) -> Result<RunTrace, SearchError> {
        let (_, best_test) = self.oracle.best_cell();
        let mut mean_test_of = HashMap::new();
        let mut events = Vec::with_capacity(self.events.len());
        for (time_seconds, evaluations, incumbent, validation_accuracy) in self.events {
            let mean_test_accuracy = match mean_test_of.get(&incumbent) {
                Some(&m) => m,
                None => {
                    let m = self.oracle.trial_summary(&incumbent, 108)?.test_accuracy;
                    mean_test_of.insert(incumbent, m);
                    m
                }
            };
            events.push(TraceEvent {
                time_seconds,
                evaluations,
                incumbent,
                validation_accuracy,
                mean_test_accuracy,
                test_regret: best_test - mean_test_accuracy,
            });
        }
        let last = *events.last().expect("every run charges at least one evaluation");
        let terminal = TraceEvent {
            time_seconds: self.clock,
            evaluations: self.evaluations,
            ..last
        };
        Ok(RunTrace { events, terminal })
    }
}

/// Runs the algorithm named in the config against the caller's stream.
pub fn run_search(
    oracle: &Oracle,
    cfg: &SearchConfig,
    rng: &mut impl RngCore,
) -> Result<RunTrace, SearchError> {
    match cfg.algorithm {
        Algorithm::RandomSearch => run_random_search(oracle, cfg, rng),
        Algorithm::RegularizedEvolution => run_evolution(oracle, cfg, true, rng),
        Algorithm::NonRegularizedEvolution => run_evolution(oracle, cfg, false, rng),
        Algorithm::Reinforce => run_reinforce(oracle, cfg, rng),
        Algorithm::SuccessiveHalving => run_successive_halving(oracle, cfg, rng),
    }
}

/// Repetition `run_index` of a batch. The stream is derived from the config
/// seed and the index alone, so any repetition can be reproduced in
/// isolation and batches of different sizes share a prefix.
pub fn run_indexed(
    oracle: &Oracle,
    cfg: &SearchConfig,
    run_index: u64,
) -> Result<RunTrace, SearchError> {
    run_search(oracle, cfg, &mut rng::stream(cfg.seed, "search-run", run_index))
}

/// Independent repetitions in run order, regardless of how work is
/// scheduled across threads.
pub fn repeat_runs(
    oracle: &Oracle,
    cfg: &SearchConfig,
    runs: usize,
) -> Result<Vec<RunTrace>, SearchError> {
    cfg.validate()?;
    (0..runs as u64)
        .into_par_iter()
        .map(|i| run_indexed(oracle, cfg, i))
        .collect()
}

/// Mean and quartiles of test regret across runs at each grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
}

impl RegretCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_s,mean_regret,q25,q50,q75")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.times[i], self.mean[i], self.q25[i], self.q50[i], self.q75[i]
            )?;
        }
        Ok(())
    }
}

/// Aggregates traces onto a shared time grid by step interpolation: each
/// trace contributes the regret of its incumbent in force at that time.
pub fn regret_curve(traces: &[RunTrace], times: &[f64]) -> RegretCurve {
    assert!(!traces.is_empty(), "need at least one trace to aggregate");
    let mut curve = RegretCurve {
        times: times.to_vec(),
        mean: Vec::with_capacity(times.len()),
        q25: Vec::with_capacity(times.len()),
        q50: Vec::with_capacity(times.len()),
        q75: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let mut regrets: Vec<f64> =
            traces.iter().map(|trace| trace.event_at(t).test_regret).collect();
        curve.mean.push(stats::mean(&regrets));
        regrets.sort_by(f64::total_cmp);
        curve.q25.push(stats::quantile_sorted(&regrets, 0.25));
        curve.q50.push(stats::quantile_sorted(&regrets, 0.50));
        curve.q75.push(stats::quantile_sorted(&regrets, 0.75));
    }
    curve
}

/// Distribution of per-run regret at one horizon: the fraction of runs at or
/// below each regret level.
pub fn robustness_ecdf(traces: &[RunTrace], horizon_seconds: f64) -> EcdfSeries {
    assert!(!traces.is_empty(), "need at least one trace to aggregate");
    stats::ecdf(
        traces
            .iter()
            .map(|trace| trace.event_at(horizon_seconds).test_regret)
            .collect(),
    )
}

/// CSV form of a regret distribution.
pub fn write_regret_ecdf_csv<W: Write>(series: &EcdfSeries, mut out: W) -> io::Result<()> {
    writeln!(out, "regret,cum_fraction")?;
    for (value, fraction) in series.values.iter().zip(&series.fractions) {
        writeln!(out, "{value},{fraction}")?;
    }
    Ok(())
}
