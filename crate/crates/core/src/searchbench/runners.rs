//! The benchmarked search loops.
//!
//! All runners share the accounting in [`RunState`]: every oracle query is
//! charged, the first evaluation to push the clock past the budget still
//! counts, and then the run stops. Proposals that never reach the oracle
//! (invalid encodings, cells outside the index) cost nothing.

use std::collections::VecDeque;

use rand_core::RngCore;

use super::{RunState, RunTrace, SearchConfig, SearchError};
use crate::cellspec::{
    self, Digest, ModelSpec, Op, EDGE_SLOTS, MAX_VERTICES, NUM_EDGE_SLOTS, NUM_OP_SLOTS,
};
use crate::oracle::{Oracle, EPOCH_BUDGETS};
use crate::rng;

/// Searches other than successive halving always train at the full budget.
const FULL_TRAINING: u32 = EPOCH_BUDGETS[EPOCH_BUDGETS.len() - 1];

/// Proposal streaks this long without a single charged evaluation abort the
/// run; only a policy collapsed onto untrainable encodings gets near it.
const MAX_IDLE_PROPOSALS: usize = 100_000;

/// Uniform valid encoding whose canonical form the oracle knows. Rejections
/// are free: discarding a malformed architecture costs no training.
fn sample_indexed(oracle: &Oracle, rng: &mut impl RngCore) -> (ModelSpec, Digest) {
    loop {
        let spec = cellspec::random_spec(rng);
        let digest = spec.canonical_hash().expect("random specs are valid");
        if oracle.index().position(&digest).is_some() {
            return (spec, digest);
        }
    }
}

/// Draws uniform cells and always trains them at the full budget.
pub fn run_random_search(
    oracle: &Oracle,
    cfg: &SearchConfig,
    rng: &mut impl RngCore,
) -> Result<RunTrace, SearchError> {
    cfg.validate()?;
    let mut state = RunState::new(oracle, cfg.time_budget_seconds);
    loop {
        let (_, digest) = sample_indexed(oracle, rng);
        let record = oracle.query_digest(&digest, FULL_TRAINING, rng)?;
        if !state.absorb(digest, &record) {
            return state.finish();
        }
    }
}

struct Member {
    spec: ModelSpec,
    fitness: f64,
}

/// Index of the fittest pick; ties go to the oldest member (the smaller
/// population index).
fn tournament_winner(picks: &[usize], fitness: impl Fn(usize) -> f64) -> usize {
    let mut winner = picks[0];
    for &pick in &picks[1..] {
        let (f, w) = (fitness(pick), fitness(winner));
        if f > w || (f == w && pick < winner) {
            winner = pick;
        }
    }
    winner
}

/// Index of the least fit member; ties go to the oldest.
fn least_fit(fitnesses: impl Iterator<Item = f64>) -> usize {
    let mut worst = 0;
    let mut worst_fitness = f64::INFINITY;
    for (i, f) in fitnesses.enumerate() {
        if f < worst_fitness {
            worst = i;
            worst_fitness = f;
        }
    }
    worst
}

/// Mutates until the child canonicalizes into the index. On the full space
/// the first valid child always lands; restricted spaces may need retries,
/// which are free.
fn mutate_into_index(
    oracle: &Oracle,
    parent: &ModelSpec,
    rng: &mut impl RngCore,
) -> Result<(ModelSpec, Digest), SearchError> {
    const MAX_ATTEMPTS: usize = 10_000;
    for _ in 0..MAX_ATTEMPTS {
        let child = cellspec::mutate(parent, rng)?;
        let digest = child.canonical_hash().expect("mutation preserves validity");
        if oracle.index().position(&digest).is_some() {
            return Ok((child, digest));
        }
    }
    Err(SearchError::Stalled(format!(
        "no mutation reached the index in {MAX_ATTEMPTS} attempts"
    )))
}

/// Tournament evolution: seeds `population_size` random members, then
/// repeatedly mutates the fittest of `tournament_size` sampled members and
/// appends the child. `regularized` picks who dies each step: the oldest
/// member (aging evolution) or the least fit.
pub fn run_evolution(
    oracle: &Oracle,
    cfg: &SearchConfig,
    regularized: bool,
    rng: &mut impl RngCore,
) -> Result<RunTrace, SearchError> {
    cfg.validate()?;
    let mut state = RunState::new(oracle, cfg.time_budget_seconds);
    let mut population: VecDeque<Member> = VecDeque::with_capacity(cfg.population_size + 1);
    for _ in 0..cfg.population_size {
        let (spec, digest) = sample_indexed(oracle, rng);
        let record = oracle.query_digest(&digest, FULL_TRAINING, rng)?;
        let alive = state.absorb(digest, &record);
        population.push_back(Member { spec, fitness: record.validation_accuracy });
        if !alive {
            return state.finish();
        }
    }
    loop {
        let picks = rng::sample_distinct(rng, cfg.tournament_size, population.len());
        let parent = tournament_winner(&picks, |i| population[i].fitness);
        let (child, digest) = mutate_into_index(oracle, &population[parent].spec, rng)?;
        let record = oracle.query_digest(&digest, FULL_TRAINING, rng)?;
        let alive = state.absorb(digest, &record);
        population.push_back(Member { spec: child, fitness: record.validation_accuracy });
        let doomed = if regularized {
            0
        } else {
            least_fit(population.iter().map(|m| m.fitness))
        };
        population.remove(doomed);
        if !alive {
            return state.finish();
        }
    }
}

/// Factorized sampling distribution over the padded encoding: a two-way
/// choice per edge slot and a three-way choice per op slot, each a softmax
/// over its own logits.
pub(crate) struct Policy {
    edge_logits: [[f64; 2]; NUM_EDGE_SLOTS],
    op_logits: [[f64; 3]; NUM_OP_SLOTS],
}

/// One sampled encoding together with the probabilities it was drawn under,
/// which the update needs even after the logits move.
pub(crate) struct PolicyDraw {
    edges: [usize; NUM_EDGE_SLOTS],
    ops: [usize; NUM_OP_SLOTS],
    edge_probs: [[f64; 2]; NUM_EDGE_SLOTS],
    op_probs: [[f64; 3]; NUM_OP_SLOTS],
}

fn softmax<const N: usize>(logits: &[f64; N]) -> [f64; N] {
    let peak = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut weights = logits.map(|l| (l - peak).exp());
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

fn categorical<const N: usize>(probs: &[f64; N], rng: &mut impl RngCore) -> usize {
    let u = rng::uniform_f64(rng);
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    N - 1
}

impl Policy {
    /// The uniform starting point: all logits zero.
    fn new() -> Policy {
        Policy {
            edge_logits: [[0.0; 2]; NUM_EDGE_SLOTS],
            op_logits: [[0.0; 3]; NUM_OP_SLOTS],
        }
    }

    /// Samples every factor independently, edges in slot order then ops.
    pub(crate) fn sample(&self, rng: &mut impl RngCore) -> PolicyDraw {
        let mut draw = PolicyDraw {
            edges: [0; NUM_EDGE_SLOTS],
            ops: [0; NUM_OP_SLOTS],
            edge_probs: [[0.0; 2]; NUM_EDGE_SLOTS],
            op_probs: [[0.0; 3]; NUM_OP_SLOTS],
        };
        for slot in 0..NUM_EDGE_SLOTS {
            draw.edge_probs[slot] = softmax(&self.edge_logits[slot]);
            draw.edges[slot] = categorical(&draw.edge_probs[slot], rng);
        }
        for slot in 0..NUM_OP_SLOTS {
            draw.op_probs[slot] = softmax(&self.op_logits[slot]);
            draw.ops[slot] = categorical(&draw.op_probs[slot], rng);
        }
        draw
    }

    /// Score-function step: moves each factor's logits by
    /// `step * (onehot(choice) - probs)`, the gradient of the sample's log
    /// probability scaled by `step`.
    fn reinforce(&mut self, draw: &PolicyDraw, step: f64) {
        for slot in 0..NUM_EDGE_SLOTS {
            for choice in 0..2 {
                let indicator = (choice == draw.edges[slot]) as u8 as f64;
                self.edge_logits[slot][choice] += step * (indicator - draw.edge_probs[slot][choice]);
            }
        }
        for slot in 0..NUM_OP_SLOTS {
            for choice in 0..3 {
                let indicator = (choice == draw.ops[slot]) as u8 as f64;
                self.op_logits[slot][choice] += step * (indicator - draw.op_probs[slot][choice]);
            }
        }
    }

    /// Probability that an edge slot is switched on.
    #[cfg(test)]
    pub(crate) fn edge_marginal(&self, slot: usize) -> f64 {
        softmax(&self.edge_logits[slot])[1]
    }

    /// Probability of one op label at one slot.
    #[cfg(test)]
    pub(crate) fn op_marginal(&self, slot: usize, op: Op) -> f64 {
        softmax(&self.op_logits[slot])[op.code() as usize]
    }
}

/// The padded encoding a draw denotes.
fn draw_spec(draw: &PolicyDraw) -> ModelSpec {
    let mut rows = [0u8; MAX_VERTICES];
    for (slot, &(i, j)) in EDGE_SLOTS.iter().enumerate() {
        if draw.edges[slot] == 1 {
            rows[i] |= 1 << j;
        }
    }
    let ops = draw.ops.iter().map(|&code| Op::from_code(code as u8)).collect();
    ModelSpec::from_bits(MAX_VERTICES as u8, rows, ops)
}

/// Policy-gradient search: samples encodings from the factorized policy and
/// reinforces them by validation accuracy against an exponential
/// moving-average baseline. Samples that are invalid or outside the index
/// earn zero reward and charge no time.
pub fn run_reinforce(
    oracle: &Oracle,
    cfg: &SearchConfig,
    rng: &mut impl RngCore,
) -> Result<RunTrace, SearchError> {
    run_reinforce_traced(oracle, cfg, rng).map(|(trace, _)| trace)
}

/// As [`run_reinforce`], also returning the final policy so tests can check
/// what the controller learned.
pub(crate) fn run_reinforce_traced(
    oracle: &Oracle,
    cfg: &SearchConfig,
    rng: &mut impl RngCore,
) -> Result<(RunTrace, Policy), SearchError> {
    cfg.validate()?;
    let mut state = RunState::new(oracle, cfg.time_budget_seconds);
    let mut policy = Policy::new();
    let mut baseline = 0.0;
    let mut idle_proposals = 0usize;
    let mut exhausted = false;
    while !exhausted {
        let mut batch: Vec<(PolicyDraw, f64)> = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let draw = policy.sample(rng);
            let spec = draw_spec(&draw);
            let mut reward = 0.0;
            let mut charged = false;
            if spec.is_valid() {
                let digest = spec.canonical_hash().expect("checked validity above");
                if oracle.index().position(&digest).is_some() {
                    let record = oracle.query_digest(&digest, FULL_TRAINING, rng)?;
                    reward = record.validation_accuracy;
                    charged = true;
                    if !state.absorb(digest, &record) {
                        exhausted = true;
                    }
                }
            }
            idle_proposals = if charged { 0 } else { idle_proposals + 1 };
            if idle_proposals >= MAX_IDLE_PROPOSALS {
                return Err(SearchError::Stalled(format!(
                    "{MAX_IDLE_PROPOSALS} proposals in a row were untrainable"
                )));
            }
            // Advantage against the baseline as it stood before this sample;
            // the reward folds in afterwards.
            let advantage = reward - baseline;
            baseline = cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * reward;
            batch.push((draw, advantage));
            if exhausted {
                break;
            }
        }
        let scale = cfg.learning_rate / batch.len() as f64;
        for (draw, advantage) in &batch {
            policy.reinforce(draw, scale * advantage);
        }
    }
    Ok((state.finish()?, policy))
}

struct Rung {
    epochs: u32,
    cohort: usize,
}

/// Bracket schedule for a reduction factor of 3 over the four epoch
/// budgets. Bracket `s` (most to least aggressive) starts
/// `ceil(4 / (s + 1)) * 3^s` fresh cells at the `(3 - s)`-th budget and
/// keeps a third at each promotion, so bracket 3 runs 27, 9, 3, 1 cells at
/// 4, 12, 36, 108 epochs.
fn bracket_schedule(eta: u32) -> Vec<Vec<Rung>> {
    let s_max = EPOCH_BUDGETS.len() - 1;
    (0..=s_max)
        .rev()
        .map(|s| {
            let head = (s_max + 1).div_ceil(s + 1) * eta.pow(s as u32) as usize;
            (0..=s)
                .map(|r| Rung {
                    epochs: EPOCH_BUDGETS[s_max - s + r],
                    cohort: head / eta.pow(r as u32) as usize,
                })
                .collect()
        })
        .collect()
}

/// Successive halving over the four epoch budgets, cycling through the four
/// brackets until the budget runs out. Every query charges its training
/// time, and the incumbent is tracked across all rungs by validation
/// accuracy at the queried budget.
pub fn run_successive_halving(
    oracle: &Oracle,
    cfg: &SearchConfig,
    rng: &mut impl RngCore,
) -> Result<RunTrace, SearchError> {
    cfg.validate()?;
    let mut state = RunState::new(oracle, cfg.time_budget_seconds);
    let schedule = bracket_schedule(cfg.eta);
    'run: loop {
        for bracket in &schedule {
            let mut cohort: Vec<(Digest, f64)> = (0..bracket[0].cohort)
                .map(|_| (sample_indexed(oracle, rng).1, 0.0))
                .collect();
            for (r, rung) in bracket.iter().enumerate() {
                if r > 0 {
                    // Keep the top third by the previous rung's accuracy;
                    // the sort is stable, so ties keep the earlier sample.
                    cohort.sort_by(|a, b| b.1.total_cmp(&a.1));
                    cohort.truncate(rung.cohort);
                }
                for slot in cohort.iter_mut() {
                    let record = oracle.query_digest(&slot.0, rung.epochs, rng)?;
                    slot.1 = record.validation_accuracy;
                    if !state.absorb(slot.0, &record) {
                        break 'run;
                    }
                }
            }
        }
    }
    state.finish()
}
