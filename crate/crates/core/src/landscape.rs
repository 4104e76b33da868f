//! Fitness-landscape and whole-space statistics over an enumerated index.
//!
//! Fitness throughout is the trial-mean validation accuracy at the full
//! 108-epoch budget, the same signal the search benchmark steers by. Index
//! scans run over fixed-size chunks whose partial sums are folded back in
//! index order with compensated addition, so every aggregate is the same at
//! any thread count. Each result type writes CSV with a stable, documented
//! header for external plotting.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use arrayvec::ArrayVec;
use rand_core::RngCore;
use rayon::prelude::*;
use thiserror::Error;

use crate::cellspec::{
    encoding_distance, neighbors, peak_families, random_spec, Digest, EncodingFamily, ModelSpec,
    Op, SpecError, EDGE_SLOTS, MAX_VERTICES, NUM_EDGE_SLOTS, NUM_OP_SLOTS, RAW_ENCODING_COUNT,
};
use crate::enumerator::{SpaceIndex, SpaceParams};
use crate::netmodel::structural_metrics;
use crate::oracle::{budget_index, Oracle, OracleError, EPOCH_BUDGETS};
use crate::rng::{uniform_u32, uniform_usize};
use crate::stats::{self, EcdfSeries};

/// Budget whose trial means define cell fitness for every analysis here.
const FULL_TRAINING: u32 = EPOCH_BUDGETS[EPOCH_BUDGETS.len() - 1];

/// Cells per parallel work unit. Fixed, so partial sums cover the same
/// slices and fold in the same order at any thread count.
const SCAN_CHUNK: usize = 4096;

/// Normal-approximation quantile for 95% binomial half-widths.
const CI_Z: f64 = 1.96;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    /// A correlation is undefined because one of the series is constant.
    #[error("undefined statistic: {0}")]
    Degenerate(String),
    #[error("bad analysis parameter: {0}")]
    Config(String),
}

/// Compensated accumulator for folding chunk partials in a fixed order.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn fitness(oracle: &Oracle, digest: &Digest) -> Result<f64, OracleError> {
    Ok(oracle.trial_summary(digest, FULL_TRAINING)?.validation_accuracy)
}

/// Cells visited by a random walk, with their fitness, in visit order.
///
/// Consecutive entries differ in exactly one encoding slot; the digests are
/// the canonical cells those encodings collapse onto.
#[derive(Clone)]
pub struct WalkSeries {
    specs: Vec<ModelSpec>,
    digests: Vec<Digest>,
    accuracies: Vec<f64>,
}

impl WalkSeries {
    /// Visited points: one more than the step count.
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Edits taken.
    pub fn steps(&self) -> usize {
        self.specs.len() - 1
    }

    pub fn specs(&self) -> &[ModelSpec] {
        &self.specs
    }

    pub fn digests(&self) -> &[Digest] {
        &self.digests
    }

    pub fn accuracies(&self) -> &[f64] {
        &self.accuracies
    }
}

/// Uniform random starting cell: valid encodings are redrawn until one
/// canonicalizes into the index (no redraw happens on the full space, where
/// every valid encoding belongs).
fn random_member(
    index: &SpaceIndex,
    full_space: bool,
    rng: &mut impl RngCore,
) -> Result<ModelSpec, LandscapeError> {
    const MAX_ATTEMPTS: usize = 1_000_000;
    for _ in 0..MAX_ATTEMPTS {
        let spec = random_spec(rng);
        if full_space || index.contains(&spec.canonical_hash()?) {
            return Ok(spec);
        }
    }
    Err(LandscapeError::Config(format!(
        "no random encoding canonicalized into the index after {MAX_ATTEMPTS} draws"
    )))
}

/// Walks `steps` single-slot edits from a random starting cell, recording
/// every visited cell's fitness.
///
/// Each step picks uniformly among the distinct neighboring cells not seen
/// within the recency horizon, then uniformly among the edits landing on
/// the chosen cell, so consecutive specs always differ in exactly one
/// encoding slot. Plain edit-uniform stepping would not do here: most
/// edits of a heavily pruned encoding leave the cell unchanged, and the
/// funnel of small cells pulls an unconstrained walk back across the same
/// few cells thousands of times, stamping structure onto the fitness
/// series that is not the landscape's. When every neighboring cell is
/// recent, the walk instead picks uniformly among them and the same-cell
/// edits (a re-embedding exposes different exits than any revisit would),
/// which keeps a starved corner from pinning it or cycling it
/// deterministically. Neighbors outside the index are never taken.
pub fn random_fitness_walk(
    oracle: &Oracle,
    steps: usize,
    rng: &mut impl RngCore,
) -> Result<WalkSeries, LandscapeError> {
    let index = oracle.index();
    let full_space = index.params() == SpaceParams::full();
    // A quarter of the space: practical walks rarely see a cell twice, yet
    // a walk long enough to saturate a small index keeps circulating.
    let horizon = (index.len() / 4).max(1);
    let mut current = random_member(index, full_space, rng)?;
    let mut digest = current.canonical_hash()?;
    let mut last_seen: HashMap<Digest, usize> = HashMap::new();
    last_seen.insert(digest, 0);

    let mut specs = Vec::with_capacity(steps + 1);
    let mut digests = Vec::with_capacity(steps + 1);
    let mut accuracies = Vec::with_capacity(steps + 1);
    specs.push(current.clone());
    digests.push(digest);
    accuracies.push(fitness(oracle, &digest)?);

    // Candidate edits grouped by the cell they land on, in first-seen
    // order. Reused across steps to avoid churn.
    let mut fresh: Vec<(Digest, Vec<usize>)> = Vec::new();
    let mut seen_cells: Vec<Vec<usize>> = Vec::new();
    let mut seen_digests: Vec<Digest> = Vec::new();
    for step in 1..=steps {
        let candidates = neighbors(&current);
        fresh.clear();
        seen_cells.clear();
        seen_digests.clear();
        for (i, candidate) in candidates.iter().enumerate() {
            let cell = candidate.canonical_hash()?;
            if cell != digest && !full_space && !index.contains(&cell) {
                continue;
            }
            let is_fresh = cell != digest
                && last_seen.get(&cell).is_none_or(|&seen| step - seen > horizon);
            if is_fresh {
                match fresh.iter_mut().find(|(existing, _)| *existing == cell) {
                    Some((_, edits)) => edits.push(i),
                    None => fresh.push((cell, vec![i])),
                }
            } else {
                match seen_digests.iter().position(|existing| *existing == cell) {
                    Some(at) => seen_cells[at].push(i),
                    None => {
                        seen_digests.push(cell);
                        seen_cells.push(vec![i]);
                    }
                }
            }
        }
        let chosen = if !fresh.is_empty() {
            &fresh[uniform_usize(rng, fresh.len())].1
        } else if !seen_cells.is_empty() {
            &seen_cells[uniform_usize(rng, seen_cells.len())]
        } else {
            return Err(LandscapeError::Config(
                "the walk reached a cell with no in-index neighbor".into(),
            ));
        };
        let next = candidates[chosen[uniform_usize(rng, chosen.len())]].clone();
        current = next;
        digest = current.canonical_hash()?;
        last_seen.insert(digest, step);
        specs.push(current.clone());
        digests.push(digest);
        accuracies.push(fitness(oracle, &digest)?);
    }
    Ok(WalkSeries { specs, digests, accuracies })
}

/// Fitness autocorrelation along a walk, by lag. Lag 0 is exactly 1 by
/// normalization; later lags share the global mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationSeries {
    values: Vec<f64>,
}

impl AutocorrelationSeries {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag]
    }

    /// Values at lags `0..=max_lag`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV columns: `lag,sqrt_lag,autocorr`. The √lag column is the
    /// distance axis: after `lag` steps a walk strays to an encoding
    /// distance of about √lag.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "lag,sqrt_lag,autocorr")?;
        for (lag, value) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", lag, (lag as f64).sqrt(), value)?;
        }
        Ok(())
    }
}

/// Sample autocorrelation of a fitness series at lags `0..=max_lag`.
pub fn walk_autocorrelation(
    accuracies: &[f64],
    max_lag: usize,
) -> Result<AutocorrelationSeries, LandscapeError> {
    if max_lag == 0 || max_lag >= accuracies.len() {
        return Err(LandscapeError::Config(format!(
            "lag {max_lag} needs a series of more than {max_lag} points, got {}",
            accuracies.len()
        )));
    }
    let tail = stats::autocorrelation(accuracies, max_lag).ok_or_else(|| {
        LandscapeError::Degenerate(
            "every visited cell has the same fitness, so autocorrelation is undefined".into(),
        )
    })?;
    let mut values = vec![1.0];
    values.extend(tail);
    Ok(AutocorrelationSeries { values })
}

/// Random-walk autocorrelation: walks `walk_length` steps and returns the
/// fitness autocorrelation at lags `0..=max_lag`. The walk must be much
/// longer than the deepest lag for the estimate to mean anything; anything
/// shorter than four times the lag is rejected outright.
pub fn rwa(
    oracle: &Oracle,
    walk_length: usize,
    max_lag: usize,
    rng: &mut impl RngCore,
) -> Result<AutocorrelationSeries, LandscapeError> {
    if max_lag == 0 || walk_length < 4 * max_lag {
        return Err(LandscapeError::Config(format!(
            "a walk of {walk_length} steps is too short to estimate lag {max_lag}"
        )));
    }
    let walk = random_fitness_walk(oracle, walk_length, rng)?;
    walk_autocorrelation(walk.accuracies(), max_lag)
}

/// Pearson correlation between a fitness assignment and distances to a
/// peak. [`fdc`] wires this to an oracle; this entry point scores
/// externally constructed assignments.
pub fn fitness_distance_correlation(
    fitness: &[f64],
    distances: &[f64],
) -> Result<f64, LandscapeError> {
    if fitness.is_empty() || fitness.len() != distances.len() {
        return Err(LandscapeError::Config(format!(
            "fitness and distance series must be non-empty and equally long, got {} and {}",
            fitness.len(),
            distances.len()
        )));
    }
    stats::pearson(fitness, distances).ok_or_else(|| {
        LandscapeError::Degenerate(
            "fitness-distance correlation needs variance on both sides".into(),
        )
    })
}

/// Fitness-distance correlation of a cell sample against a peak: Pearson
/// between trial-mean validation accuracy and the encoding distance from
/// each cell's canonical encoding to the peak's.
pub fn fdc(oracle: &Oracle, sample: &[Digest], peak: &Digest) -> Result<f64, LandscapeError> {
    if sample.is_empty() {
        return Err(LandscapeError::Config("the cell sample is empty".into()));
    }
    let index = oracle.index();
    let peak_spec = index
        .lookup(peak)
        .ok_or(OracleError::UnknownArchitecture(*peak))?
        .spec()
        .clone();
    let mut fit = Vec::with_capacity(sample.len());
    let mut dist = Vec::with_capacity(sample.len());
    for digest in sample {
        let cell = index
            .lookup(digest)
            .ok_or(OracleError::UnknownArchitecture(*digest))?;
        fit.push(fitness(oracle, digest)?);
        dist.push(f64::from(encoding_distance(cell.spec(), &peak_spec)));
    }
    fitness_distance_correlation(&fit, &dist)
}

/// A cell with one interior op replaced. The graph is untouched, so the
/// result is valid and stays within the same vertex and edge bounds.
fn replace_op(spec: &ModelSpec, slot: usize, op: Op) -> ModelSpec {
    let mut rows = [0u8; MAX_VERTICES];
    for r in 0..spec.num_vertices() {
        rows[r] = spec.row_bits(r);
    }
    let mut ops: ArrayVec<Op, NUM_OP_SLOTS> = spec.ops().iter().copied().collect();
    ops[slot] = op;
    ModelSpec::from_bits(spec.num_vertices() as u8, rows, ops)
}

/// Mean effect of swapping one interior operation label, aggregated over
/// every (cell, vertex, replacement) whose replaced cell canonicalizes back
/// into the index. Accuracy deltas are absolute final validation accuracy;
/// time deltas are relative to the unreplaced cell's training time.
pub struct OpReplacementMatrix {
    accuracy_delta: [[f64; 3]; 3],
    relative_time_delta: [[f64; 3]; 3],
    samples: [[u64; 3]; 3],
}

impl OpReplacementMatrix {
    pub fn samples(&self, from: Op, to: Op) -> u64 {
        self.samples[from.code() as usize][to.code() as usize]
    }

    /// Mean accuracy delta for `from → to`; `None` on the diagonal (a label
    /// is never "replaced" by itself) and for pairs with no samples.
    pub fn accuracy_delta(&self, from: Op, to: Op) -> Option<f64> {
        (self.samples(from, to) > 0)
            .then(|| self.accuracy_delta[from.code() as usize][to.code() as usize])
    }

    pub fn relative_time_delta(&self, from: Op, to: Op) -> Option<f64> {
        (self.samples(from, to) > 0)
            .then(|| self.relative_time_delta[from.code() as usize][to.code() as usize])
    }

    /// CSV columns: `from_op,to_op,samples,mean_accuracy_delta,mean_relative_time_delta`,
    /// one row per ordered off-diagonal pair.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "from_op,to_op,samples,mean_accuracy_delta,mean_relative_time_delta")?;
        for from in Op::ALL {
            for to in Op::ALL {
                if from == to {
                    continue;
                }
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    from.label(),
                    to.label(),
                    self.samples(from, to),
                    self.accuracy_delta(from, to).unwrap_or(f64::NAN),
                    self.relative_time_delta(from, to).unwrap_or(f64::NAN),
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Default)]
struct ReplacementPartial {
    accuracy: [[f64; 3]; 3],
    time: [[f64; 3]; 3],
    samples: [[u64; 3]; 3],
}

pub fn op_replacement_matrix(
    oracle: &Oracle,
    index: &SpaceIndex,
) -> Result<OpReplacementMatrix, LandscapeError> {
    let partials: Vec<ReplacementPartial> = index
        .cells()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| -> Result<ReplacementPartial, LandscapeError> {
            let mut partial = ReplacementPartial::default();
            for cell in chunk {
                let base = oracle.trial_summary(cell.digest(), FULL_TRAINING)?;
                let spec = cell.spec();
                for slot in 0..spec.ops().len() {
                    let from = spec.ops()[slot];
                    for to in Op::ALL {
                        if to == from {
                            continue;
                        }
                        let digest = replace_op(spec, slot, to).canonical_hash()?;
                        if !index.contains(&digest) {
                            continue; // replacement left the space
                        }
                        let replaced = oracle.trial_summary(&digest, FULL_TRAINING)?;
                        let (f, t) = (from.code() as usize, to.code() as usize);
                        partial.accuracy[f][t] +=
                            replaced.validation_accuracy - base.validation_accuracy;
                        partial.time[f][t] += (replaced.training_seconds - base.training_seconds)
                            / base.training_seconds;
                        partial.samples[f][t] += 1;
                    }
                }
            }
            Ok(partial)
        })
        .collect::<Result<_, _>>()?;

    let mut accuracy = [[Kahan::default(); 3]; 3];
    let mut time = [[Kahan::default(); 3]; 3];
    let mut samples = [[0u64; 3]; 3];
    for partial in &partials {
        for f in 0..3 {
            for t in 0..3 {
                accuracy[f][t].add(partial.accuracy[f][t]);
                time[f][t].add(partial.time[f][t]);
                samples[f][t] += partial.samples[f][t];
            }
        }
    }
    let mut accuracy_delta = [[0.0; 3]; 3];
    let mut relative_time_delta = [[0.0; 3]; 3];
    for f in 0..3 {
        for t in 0..3 {
            if samples[f][t] > 0 {
                accuracy_delta[f][t] = accuracy[f][t].sum / samples[f][t] as f64;
                relative_time_delta[f][t] = time[f][t].sum / samples[f][t] as f64;
            }
        }
    }
    Ok(OpReplacementMatrix { accuracy_delta, relative_time_delta, samples })
}

/// Whole-index accuracy distributions at one budget: ECDFs of the
/// trial-mean train, validation, and test accuracy, plus the ECDF of each
/// cell's inter-trial test-accuracy standard deviation (the evaluation
/// noise).
pub struct AccuracyDistributions {
    pub train: EcdfSeries,
    pub validation: EcdfSeries,
    pub test: EcdfSeries,
    pub noise: EcdfSeries,
}

impl AccuracyDistributions {
    /// CSV columns: `series,value,cum_fraction`, with series one of
    /// `train`, `valid`, `test`, `noise`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "series,value,cum_fraction")?;
        for (name, series) in [
            ("train", &self.train),
            ("valid", &self.validation),
            ("test", &self.test),
            ("noise", &self.noise),
        ] {
            for (value, fraction) in series.values.iter().zip(&series.fractions) {
                writeln!(w, "{name},{value},{fraction}")?;
            }
        }
        Ok(())
    }
}

pub fn accuracy_ecdf(
    oracle: &Oracle,
    index: &SpaceIndex,
    epoch_budget: u32,
) -> Result<AccuracyDistributions, LandscapeError> {
    budget_index(epoch_budget).ok_or(OracleError::BadBudget(epoch_budget))?;
    let chunks: Vec<Vec<[f64; 4]>> = index
        .cells()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| -> Result<Vec<[f64; 4]>, LandscapeError> {
            chunk
                .iter()
                .map(|cell| {
                    let s = oracle.trial_summary(cell.digest(), epoch_budget)?;
                    Ok([
                        s.train_accuracy,
                        s.validation_accuracy,
                        s.test_accuracy,
                        s.test_accuracy_std,
                    ])
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let mut columns: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(index.len()));
    for row in chunks.iter().flatten() {
        for (column, &value) in columns.iter_mut().zip(row) {
            column.push(value);
        }
    }
    let [train, validation, test, noise] = columns;
    Ok(AccuracyDistributions {
        train: stats::ecdf(train),
        validation: stats::ecdf(validation),
        test: stats::ecdf(test),
        noise: stats::ecdf(noise),
    })
}

/// Share of all 2²¹·3⁵ raw encodings, valid and invalid alike, lying within
/// each encoding distance of a peak set. A bucket counts every encoding at
/// distance at most its value, so fractions are non-decreasing. Half-widths
/// are 95% binomial confidence radii (zero for the exhaustive scan).
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeProfile {
    fractions: Vec<f64>,
    half_widths: Vec<f64>,
    observations: u64,
}

impl VolumeProfile {
    pub fn max_distance(&self) -> u32 {
        self.fractions.len() as u32
    }

    /// Fraction of raw encodings within `distance` of the peak set.
    pub fn fraction(&self, distance: u32) -> f64 {
        self.fractions[distance as usize - 1]
    }

    pub fn half_width(&self, distance: u32) -> f64 {
        self.half_widths[distance as usize - 1]
    }

    /// Fractions at distances `1..=max_distance`.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Encodings sampled or scanned.
    pub fn observations(&self) -> u64 {
        self.observations
    }

    /// CSV columns: `distance,fraction,ci_half_width`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "distance,fraction,ci_half_width")?;
        for (i, (fraction, half_width)) in
            self.fractions.iter().zip(&self.half_widths).enumerate()
        {
            writeln!(w, "{},{},{}", i + 1, fraction, half_width)?;
        }
        Ok(())
    }
}

/// Every exact re-embedding of every peak cell.
fn peak_family_set(
    index: &SpaceIndex,
    peaks: &[Digest],
) -> Result<Vec<EncodingFamily>, LandscapeError> {
    if peaks.is_empty() {
        return Err(LandscapeError::Config("the peak set is empty".into()));
    }
    let mut families = Vec::new();
    for digest in peaks {
        let cell = index
            .lookup(digest)
            .ok_or(OracleError::UnknownArchitecture(*digest))?;
        families.extend(peak_families(cell.spec())?);
    }
    Ok(families)
}

/// One uniform draw over all raw encodings, valid or not: 21 fair edge bits
/// plus five uniform labels, the same layout `random_spec` draws from
/// before its validity redraw.
fn random_raw_encoding(rng: &mut impl RngCore) -> ([u8; MAX_VERTICES], [Op; NUM_OP_SLOTS]) {
    let bits = rng.next_u32() & ((1 << NUM_EDGE_SLOTS) - 1);
    let mut rows = [0u8; MAX_VERTICES];
    for (k, &(i, j)) in EDGE_SLOTS.iter().enumerate() {
        if bits & (1 << k) != 0 {
            rows[i] |= 1 << j;
        }
    }
    let ops = std::array::from_fn(|_| Op::from_code(uniform_u32(rng, 3) as u8));
    (rows, ops)
}

fn histogram_to_profile(hist: &[u64], observations: u64, sampled: bool) -> VolumeProfile {
    let n = observations as f64;
    let mut fractions = Vec::with_capacity(hist.len() - 1);
    let mut half_widths = Vec::with_capacity(hist.len() - 1);
    let mut within = hist[0];
    for &bucket in &hist[1..] {
        within += bucket;
        let p = within as f64 / n;
        fractions.push(p);
        half_widths.push(if sampled { CI_Z * (p * (1.0 - p) / n).sqrt() } else { 0.0 });
    }
    VolumeProfile { fractions, half_widths, observations }
}

/// Monte Carlo estimate of the raw-encoding volume within distances
/// `1..=max_distance` of the peak set. Each of `sample_size` uniform raw
/// encodings is scored by its minimum distance over every exact
/// re-embedding of every peak cell; invalid encodings count against the
/// denominator like anything else.
pub fn volume_within_distance(
    index: &SpaceIndex,
    peaks: &[Digest],
    max_distance: u32,
    sample_size: u64,
    rng: &mut impl RngCore,
) -> Result<VolumeProfile, LandscapeError> {
    if max_distance == 0 || sample_size == 0 {
        return Err(LandscapeError::Config(
            "volume needs a max distance and a sample size of at least 1".into(),
        ));
    }
    let families = peak_family_set(index, peaks)?;
    let mut hist = vec![0u64; max_distance as usize + 1];
    for _ in 0..sample_size {
        let (rows, ops) = random_raw_encoding(rng);
        let distance = families
            .iter()
            .map(|family| family.distance_to(&rows, &ops))
            .min()
            .expect("peak cells embed at least once");
        if let Some(bucket) = hist.get_mut(distance as usize) {
            *bucket += 1;
        }
    }
    Ok(histogram_to_profile(&hist, sample_size, true))
}

/// Exhaustive twin of [`volume_within_distance`]: scores every raw encoding
/// instead of sampling, so half-widths are zero. Cost grows with the number
/// of peak embeddings; meant for small peak sets and for cross-checking the
/// Monte Carlo estimate.
pub fn volume_within_distance_exhaustive(
    index: &SpaceIndex,
    peaks: &[Digest],
    max_distance: u32,
) -> Result<VolumeProfile, LandscapeError> {
    if max_distance == 0 {
        return Err(LandscapeError::Config("volume needs a max distance of at least 1".into()));
    }
    let families = peak_family_set(index, peaks)?;
    // Edge pattern as a 21-bit mask plus, per family, the label-mismatch
    // count for each of the 3^5 op assignments (base-3, slot 0 least
    // significant).
    struct Compact {
        mask: u32,
        op_mismatches: [u8; 243],
    }
    let compact: Vec<Compact> = families
        .iter()
        .map(|family| {
            let mut mask = 0u32;
            for (k, &(i, j)) in EDGE_SLOTS.iter().enumerate() {
                if family.rows()[i] >> j & 1 == 1 {
                    mask |= 1 << k;
                }
            }
            let mut op_mismatches = [0u8; 243];
            for (code, entry) in op_mismatches.iter_mut().enumerate() {
                let mut rest = code;
                for slot in 0..NUM_OP_SLOTS {
                    let op = Op::from_code((rest % 3) as u8);
                    rest /= 3;
                    if matches!(family.labels()[slot], Some(want) if want != op) {
                        *entry += 1;
                    }
                }
            }
            Compact { mask, op_mismatches }
        })
        .collect();

    let mut hist = vec![0u64; max_distance as usize + 1];
    let mut close: Vec<&Compact> = Vec::with_capacity(compact.len());
    for bits in 0..1u32 << NUM_EDGE_SLOTS {
        close.clear();
        // A family whose edge pattern already differs in more than
        // max_distance slots cannot own any counted bucket.
        close.extend(
            compact.iter().filter(|fam| (bits ^ fam.mask).count_ones() <= max_distance),
        );
        if close.is_empty() {
            continue;
        }
        for code in 0..243 {
            let best = close
                .iter()
                .map(|fam| (bits ^ fam.mask).count_ones() + fam.op_mismatches[code] as u32)
                .min()
                .expect("filtered non-empty");
            if let Some(bucket) = hist.get_mut(best as usize) {
                *bucket += 1;
            }
        }
    }
    Ok(histogram_to_profile(&hist, RAW_ENCODING_COUNT, false))
}

/// Spearman rank correlation between trial-mean validation accuracies at
/// two budgets, over the cells in the top `top_percentile` percent by
/// accuracy at `budget_b` (ties broken toward earlier index positions).
pub fn budget_rank_correlation(
    oracle: &Oracle,
    index: &SpaceIndex,
    budget_a: u32,
    budget_b: u32,
    top_percentile: f64,
) -> Result<f64, LandscapeError> {
    budget_index(budget_a).ok_or(OracleError::BadBudget(budget_a))?;
    budget_index(budget_b).ok_or(OracleError::BadBudget(budget_b))?;
    if !(top_percentile > 0.0 && top_percentile <= 100.0) {
        return Err(LandscapeError::Config(format!(
            "top percentile must lie in (0, 100], got {top_percentile}"
        )));
    }
    if index.is_empty() {
        return Err(LandscapeError::Config("the index is empty".into()));
    }
    let chunks: Vec<Vec<(f64, f64)>> = index
        .cells()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| -> Result<Vec<(f64, f64)>, LandscapeError> {
            chunk
                .iter()
                .map(|cell| {
                    let at_a = oracle.trial_summary(cell.digest(), budget_a)?.validation_accuracy;
                    let at_b = oracle.trial_summary(cell.digest(), budget_b)?.validation_accuracy;
                    Ok((at_a, at_b))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let pairs: Vec<(f64, f64)> = chunks.into_iter().flatten().collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| pairs[j].1.total_cmp(&pairs[i].1).then(i.cmp(&j)));
    let keep =
        ((pairs.len() as f64 * top_percentile / 100.0).ceil() as usize).clamp(1, pairs.len());
    let at_a: Vec<f64> = order[..keep].iter().map(|&i| pairs[i].0).collect();
    let at_b: Vec<f64> = order[..keep].iter().map(|&i| pairs[i].1).collect();
    stats::spearman(&at_a, &at_b).ok_or_else(|| {
        LandscapeError::Degenerate(
            "rank correlation is undefined when either budget's accuracies are all tied".into(),
        )
    })
}

/// Aggregates for one depth or width group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeGroup {
    pub cells: u64,
    pub mean_validation_accuracy: f64,
    pub mean_training_seconds: f64,
}

/// Mean fitness and training time grouped by structural depth and width,
/// both trial means at the full 108-epoch budget.
pub struct ShapeProfile {
    by_depth: BTreeMap<usize, ShapeGroup>,
    by_width: BTreeMap<usize, ShapeGroup>,
}

impl ShapeProfile {
    pub fn by_depth(&self) -> &BTreeMap<usize, ShapeGroup> {
        &self.by_depth
    }

    pub fn by_width(&self) -> &BTreeMap<usize, ShapeGroup> {
        &self.by_width
    }

    /// CSV columns: `grouping,value,cells,mean_validation_accuracy,mean_training_seconds`,
    /// with grouping `depth` or `width` and value the group key.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "grouping,value,cells,mean_validation_accuracy,mean_training_seconds")?;
        for (name, groups) in [("depth", &self.by_depth), ("width", &self.by_width)] {
            for (value, group) in groups {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    name,
                    value,
                    group.cells,
                    group.mean_validation_accuracy,
                    group.mean_training_seconds,
                )?;
            }
        }
        Ok(())
    }
}

type GroupSums = BTreeMap<usize, (u64, f64, f64)>;

pub fn depth_width_profile(
    oracle: &Oracle,
    index: &SpaceIndex,
) -> Result<ShapeProfile, LandscapeError> {
    let partials: Vec<(GroupSums, GroupSums)> = index
        .cells()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| -> Result<(GroupSums, GroupSums), LandscapeError> {
            let mut by_depth = GroupSums::new();
            let mut by_width = GroupSums::new();
            for cell in chunk {
                let metrics = structural_metrics(cell.spec())?;
                let summary = oracle.trial_summary(cell.digest(), FULL_TRAINING)?;
                for (key, sums) in
                    [(metrics.depth, &mut by_depth), (metrics.width, &mut by_width)]
                {
                    let entry = sums.entry(key).or_insert((0, 0.0, 0.0));
                    entry.0 += 1;
                    entry.1 += summary.validation_accuracy;
                    entry.2 += summary.training_seconds;
                }
            }
            Ok((by_depth, by_width))
        })
        .collect::<Result<_, _>>()?;

    let fold = |pick: fn(&(GroupSums, GroupSums)) -> &GroupSums| -> BTreeMap<usize, ShapeGroup> {
        let mut folded: BTreeMap<usize, (u64, Kahan, Kahan)> = BTreeMap::new();
        for partial in &partials {
            for (&key, &(cells, accuracy, seconds)) in pick(partial) {
                let entry = folded.entry(key).or_default();
                entry.0 += cells;
                entry.1.add(accuracy);
                entry.2.add(seconds);
            }
        }
        folded
            .into_iter()
            .map(|(key, (cells, accuracy, seconds))| {
                let group = ShapeGroup {
                    cells,
                    mean_validation_accuracy: accuracy.sum / cells as f64,
                    mean_training_seconds: seconds.sum / cells as f64,
                };
                (key, group)
            })
            .collect()
    };
    Ok(ShapeProfile { by_depth: fold(|p| &p.0), by_width: fold(|p| &p.1) })
}
