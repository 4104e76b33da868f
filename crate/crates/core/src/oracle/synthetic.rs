//! Deterministic synthetic metrics.
//!
//! The surrogate stands in for a dataset that would take decades of
//! accelerator time to retrain. It maps each canonical cell to a base score
//! through a smooth function of structural features (operation mix, depth,
//! width, edge count, parameter count) plus a per-cell hash perturbation,
//! then shapes that score into per-budget, per-trial records:
//!
//! * validation accuracy = sigmoid(score * ramp(budget)) plus trial noise
//!   whose amplitude shrinks as the budget grows;
//! * test accuracy = validation plus a small hash-seeded offset, keeping the
//!   validation/test ranking nearly identical;
//! * training seconds scale with budget and parameter count under a
//!   per-(cell, trial) jitter that is independent of budget, so time is
//!   strictly increasing in the budget.
//!
//! Every number derives from SHA-256 of (seed, digest, budget, trial) and
//! nothing else, so a record is the same on every platform, forever.

use std::sync::OnceLock;

use sha2::{Digest as _, Sha256};

use crate::cellspec::{Digest, ModelSpec};
use crate::netmodel::{parameter_count, structural_metrics, SkeletonConfig};
use crate::oracle::{budget_index, EvaluationRecord};

/// Response-surface coefficients for the synthetic oracle.
///
/// `op_weights` follows the op order CONV3X3, CONV1X1, MAXPOOL3X3 and is
/// averaged over a cell's interior vertices. Depth enters as a downward
/// parabola centered on `depth_peak`; width saturates at 6. Setting
/// `locality_amplitude` to zero leaves only the per-cell perturbation, which
/// turns the landscape into pure white noise over digests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Multiplier on the base score per budget, aligned with the budgets
    /// 4, 12, 36, 108; must increase.
    pub ramp: [f64; 4],
    pub base: f64,
    pub locality_amplitude: f64,
    pub op_weights: [f64; 3],
    pub depth_curvature: f64,
    pub depth_peak: f64,
    pub width_weight: f64,
    pub edge_weight: f64,
    pub param_weight: f64,
    pub perturbation_amplitude: f64,
    /// Half-width of the per-trial accuracy noise at budget 4; scaled by
    /// sqrt(4 / budget) at larger budgets.
    pub noise_amplitude: f64,
    /// Added to the base score before squashing to keep training accuracy
    /// above validation accuracy.
    pub train_margin: f64,
    /// Half-width of the test-minus-validation offset.
    pub test_offset: f64,
    pub time_base_seconds: f64,
    pub time_seconds_per_mparam: f64,
    /// Relative half-width of the per-(cell, trial) time jitter; must stay
    /// below 1 so durations remain positive.
    pub time_jitter: f64,
}

impl Default for SyntheticParams {
    fn default() -> SyntheticParams {
        SyntheticParams {
            ramp: [0.45, 0.65, 0.85, 1.0],
            base: 2.0,
            locality_amplitude: 1.0,
            op_weights: [0.60, 0.15, -0.50],
            depth_curvature: 0.08,
            depth_peak: 3.0,
            width_weight: 0.04,
            edge_weight: 0.30,
            param_weight: 0.05,
            perturbation_amplitude: 0.15,
            noise_amplitude: 0.04,
            train_margin: 1.0,
            test_offset: 0.004,
            time_base_seconds: 2.0,
            time_seconds_per_mparam: 3.0,
            time_jitter: 0.15,
        }
    }
}

pub(crate) struct SyntheticModel {
    seed: u64,
    params: SyntheticParams,
    /// Per index slot: (base score, parameter count), filled on first use.
    cache: Vec<OnceLock<(f64, u64)>>,
}

impl SyntheticModel {
    pub(crate) fn new(seed: u64, params: SyntheticParams, index_len: usize) -> SyntheticModel {
        assert!(
            params.ramp.windows(2).all(|w| w[0] < w[1]) && params.ramp[0] > 0.0,
            "ramp must be positive and increasing"
        );
        assert!(params.time_jitter.abs() < 1.0, "time jitter must stay below 1");
        assert!(
            params.time_base_seconds > 0.0 && params.time_seconds_per_mparam >= 0.0,
            "time model must yield positive durations"
        );
        assert!(params.noise_amplitude >= 0.0 && params.test_offset >= 0.0);
        let mut cache = Vec::new();
        cache.resize_with(index_len, OnceLock::new);
        SyntheticModel { seed, params, cache }
    }

    /// The record for one (cell, budget, trial). `spec` must be the
    /// canonical member matching `digest`; `position` is its index slot when
    /// it has one, enabling the feature cache.
    pub(crate) fn record(
        &self,
        digest: Digest,
        position: Option<usize>,
        spec: &ModelSpec,
        epoch_budget: u32,
        trial: u32,
    ) -> EvaluationRecord {
        let (score, params_count) = match position {
            Some(slot) => *self.cache[slot].get_or_init(|| self.features(&digest, spec)),
            None => self.features(&digest, spec),
        };
        let p = &self.params;
        let ramp = p.ramp[budget_index(epoch_budget).expect("caller validates the budget")];
        let amplitude = p.noise_amplitude * (4.0 / epoch_budget as f64).sqrt();
        let [noise_valid, offset_test, noise_train] =
            self.signed_units(b'n', &digest, epoch_budget, trial);
        let [time_jitter] = self.signed_units(b't', &digest, 0, trial);
        let validation_accuracy = clamp01(sigmoid(score * ramp) + amplitude * noise_valid);
        let train_accuracy =
            clamp01(sigmoid((score + p.train_margin) * ramp) + amplitude * noise_train);
        let test_accuracy = clamp01(validation_accuracy + p.test_offset * offset_test);
        let rate = p.time_base_seconds + p.time_seconds_per_mparam * params_count as f64 / 1e6;
        let training_seconds =
            epoch_budget as f64 * rate * (1.0 + p.time_jitter * time_jitter);
        EvaluationRecord {
            digest,
            epoch_budget,
            trial,
            train_accuracy,
            validation_accuracy,
            test_accuracy,
            training_seconds,
            parameter_count: params_count,
        }
    }

    /// Base score and parameter count of a canonical cell.
    fn features(&self, digest: &Digest, spec: &ModelSpec) -> (f64, u64) {
        let p = &self.params;
        let metrics = structural_metrics(spec).expect("canonical cells are valid");
        let count = parameter_count(spec, &SkeletonConfig::default())
            .expect("canonical cells always lower");
        let interior = spec.num_vertices() - 2;
        let mut op_term = 0.0;
        if interior > 0 {
            for &op in spec.ops() {
                op_term += p.op_weights[op.code() as usize];
            }
            op_term /= interior as f64;
        }
        let structure = op_term
            - p.depth_curvature * (metrics.depth as f64 - p.depth_peak).powi(2)
            + p.width_weight * metrics.width.min(6) as f64
            + p.edge_weight * spec.num_edges() as f64 / 9.0
            + p.param_weight * (1.0 + count as f64 / 1e6).ln();
        let [perturbation] = self.signed_units(b'p', digest, 0, 0);
        let score = p.base
            + p.locality_amplitude * structure
            + p.perturbation_amplitude * perturbation;
        (score, count)
    }

    /// `N` values in [-1, 1), each read off 8 bytes of
    /// SHA-256(tag, seed, digest, budget, trial).
    fn signed_units<const N: usize>(
        &self,
        tag: u8,
        digest: &Digest,
        epoch_budget: u32,
        trial: u32,
    ) -> [f64; N] {
        const { assert!(N <= 4) };
        let mut hasher = Sha256::new();
        hasher.update([tag]);
        hasher.update(self.seed.to_le_bytes());
        hasher.update(digest.as_bytes());
        hasher.update(epoch_budget.to_le_bytes());
        hasher.update(trial.to_le_bytes());
        let block = hasher.finalize();
        std::array::from_fn(|i| {
            let word = u64::from_le_bytes(block[8 * i..8 * (i + 1)].try_into().unwrap());
            (word >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
