//! Lowering cells into concrete network plans.
//!
//! A network is a fixed skeleton with the cell repeated inside it: a 3x3
//! stem convolution, `num_stacks` stacks of `cells_per_stack` cells with a
//! parameter-free 2x2 downsample between stacks (halving resolution and
//! doubling cell output channels), then global average pooling and a dense
//! classifier. Within a cell, channel widths are derived from the matrix
//! alone: vertices feeding the output split `c_out` nearly evenly (earliest
//! vertices take the remainder), and every other interior vertex takes the
//! maximum over its successors. Edges leaving the cell input pass a 1x1
//! projection to the destination width; interior joins sum elementwise,
//! truncating wider sources; the cell output concatenates its non-input
//! sources and, when a direct input-to-output edge exists, adds the
//! projected input elementwise.
//!
//! Plans and parameter counts are keyed by the cell's identity, not its
//! encoding: the remainder rule above depends on vertex order, so
//! [`build_plan`] and [`parameter_count`] first canonicalize the spec and
//! lower its lex-min member. Hash-equal specs therefore always produce
//! identical plans and counts.
//!
//! Convolutions carry no bias; each convolution (including projections) is
//! followed by batch normalization contributing 2 trainable parameters per
//! output channel. Pooling, truncation, sums, and concatenations are
//! parameter-free.

use std::ops::Range;

use serde_json::json;

use crate::cellspec::{ModelSpec, Op, SpecError};

/// Number of image input channels feeding the stem.
pub const IMAGE_CHANNELS: usize = 3;

/// Skeleton shape around the repeated cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkeletonConfig {
    pub stem_channels: usize,
    pub cells_per_stack: usize,
    pub num_stacks: usize,
    pub num_classes: usize,
}

impl Default for SkeletonConfig {
    fn default() -> SkeletonConfig {
        SkeletonConfig {
            stem_channels: 128,
            cells_per_stack: 3,
            num_stacks: 3,
            num_classes: 10,
        }
    }
}

impl SkeletonConfig {
    fn validate(&self) -> Result<(), SpecError> {
        if self.stem_channels == 0
            || self.cells_per_stack == 0
            || self.num_stacks == 0
            || self.num_classes == 0
        {
            return Err(SpecError::BadConfig("skeleton dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// One layer of a lowered network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// 3x3 stem convolution plus batch norm.
    Stem,
    /// 1x1 convolution plus batch norm on an edge leaving the cell input.
    Projection,
    /// Interior vertex convolution plus batch norm.
    Conv { kernel: usize },
    /// Interior vertex max-pooling; parameter-free.
    MaxPool { kernel: usize },
    /// Elementwise sum of `arity` sources, wider sources truncated.
    Sum { arity: usize },
    /// Channel concatenation of `arity` sources.
    Concat { arity: usize },
    /// 2x2 stride-2 max-pool between stacks; parameter-free.
    Downsample,
    GlobalAvgPool,
    /// Final classifier with bias.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    pub c_in: usize,
    pub c_out: usize,
}

impl Layer {
    /// Trainable parameters of this layer alone.
    pub fn parameters(&self) -> u64 {
        let (c_in, c_out) = (self.c_in as u64, self.c_out as u64);
        match self.kind {
            LayerKind::Stem => 9 * c_in * c_out + 2 * c_out,
            LayerKind::Projection => c_in * c_out + 2 * c_out,
            LayerKind::Conv { kernel } => {
                (kernel * kernel) as u64 * c_in * c_out + 2 * c_out
            }
            LayerKind::Dense => c_in * c_out + c_out,
            LayerKind::MaxPool { .. }
            | LayerKind::Sum { .. }
            | LayerKind::Concat { .. }
            | LayerKind::Downsample
            | LayerKind::GlobalAvgPool => 0,
        }
    }

    fn json(&self) -> serde_json::Value {
        let mut value = json!({
            "kind": match self.kind {
                LayerKind::Stem => "stem",
                LayerKind::Projection => "projection",
                LayerKind::Conv { .. } => "conv",
                LayerKind::MaxPool { .. } => "maxpool",
                LayerKind::Sum { .. } => "sum",
                LayerKind::Concat { .. } => "concat",
                LayerKind::Downsample => "downsample",
                LayerKind::GlobalAvgPool => "global_avg_pool",
                LayerKind::Dense => "dense",
            },
            "c_in": self.c_in,
            "c_out": self.c_out,
        });
        let extra = match self.kind {
            LayerKind::Stem => Some(("kernel", 3usize)),
            LayerKind::Projection => Some(("kernel", 1)),
            LayerKind::Conv { kernel } | LayerKind::MaxPool { kernel } => {
                Some(("kernel", kernel))
            }
            LayerKind::Sum { arity } | LayerKind::Concat { arity } => Some(("arity", arity)),
            LayerKind::Downsample => Some(("kernel", 2)),
            _ => None,
        };
        if let Some((key, v)) = extra {
            value[key] = json!(v);
        }
        value
    }
}

/// Where one cell instance sits in the layer list, plus its channel widths
/// per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPlan {
    pub layers: Range<usize>,
    pub vertex_channels: Vec<usize>,
}

/// A fully lowered network: flat layer list plus per-cell slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkPlan {
    layers: Vec<Layer>,
    cells: Vec<CellPlan>,
}

impl NetworkPlan {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn cells(&self) -> &[CellPlan] {
        &self.cells
    }

    pub fn parameter_count(&self) -> u64 {
        self.layers.iter().map(Layer::parameters).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "layers": self.layers.iter().map(Layer::json).collect::<Vec<_>>(),
            "cells": self
                .cells
                .iter()
                .map(|c| json!({
                    "layers": [c.layers.start, c.layers.end],
                    "vertex_channels": c.vertex_channels,
                }))
                .collect::<Vec<_>>(),
            "parameter_count": self.parameter_count(),
        })
    }
}

/// Channel width per vertex for one cell instance.
///
/// The input gets `c_in` and the output `c_out`. The `k` non-input vertices
/// with an edge to the output split `c_out` as evenly as possible, earliest
/// vertices taking the `c_out mod k` spare channels; every other interior
/// vertex takes the maximum over its successors' widths, walking backwards.
pub fn vertex_channels(
    spec: &ModelSpec,
    c_in: usize,
    c_out: usize,
) -> Result<Vec<usize>, SpecError> {
    if !spec.is_valid() || !spec.is_fully_pruned() || c_in == 0 || c_out == 0 {
        return Err(SpecError::Invalid);
    }
    let v = spec.num_vertices();
    let mut channels = vec![0usize; v];
    channels[0] = c_in;
    channels[v - 1] = c_out;
    if v == 2 {
        return Ok(channels);
    }
    let feeders: Vec<usize> = (1..v - 1).filter(|&i| spec.has_edge(i, v - 1)).collect();
    let k = feeders.len();
    if k > 0 {
        let base = c_out / k;
        let extra = c_out % k;
        for (rank, &vertex) in feeders.iter().enumerate() {
            channels[vertex] = base + usize::from(rank < extra);
        }
    }
    for i in (1..v - 1).rev() {
        for j in i + 1..v - 1 {
            if spec.has_edge(i, j) {
                channels[i] = channels[i].max(channels[j]);
            }
        }
    }
    Ok(channels)
}

/// Lowers a cell into the full network plan under the given skeleton.
/// The spec is canonicalized first, so hash-equal specs yield equal plans.
pub fn build_plan(spec: &ModelSpec, cfg: &SkeletonConfig) -> Result<NetworkPlan, SpecError> {
    cfg.validate()?;
    let cell = spec.canonicalize()?;
    let cell = cell.spec();
    let mut layers = vec![Layer {
        kind: LayerKind::Stem,
        c_in: IMAGE_CHANNELS,
        c_out: cfg.stem_channels,
    }];
    let mut cells = Vec::with_capacity(cfg.num_stacks * cfg.cells_per_stack);
    let mut carried = cfg.stem_channels;
    for stack in 0..cfg.num_stacks {
        if stack > 0 {
            layers.push(Layer { kind: LayerKind::Downsample, c_in: carried, c_out: carried });
        }
        let c_out = cfg.stem_channels << stack;
        for _ in 0..cfg.cells_per_stack {
            let start = layers.len();
            let channels = lower_cell(cell, carried, c_out, &mut layers)?;
            cells.push(CellPlan { layers: start..layers.len(), vertex_channels: channels });
            carried = c_out;
        }
    }
    layers.push(Layer { kind: LayerKind::GlobalAvgPool, c_in: carried, c_out: carried });
    layers.push(Layer { kind: LayerKind::Dense, c_in: carried, c_out: cfg.num_classes });
    Ok(NetworkPlan { layers, cells })
}

/// Emits one cell instance into `layers` and returns its vertex widths.
fn lower_cell(
    cell: &ModelSpec,
    c_in: usize,
    c_out: usize,
    layers: &mut Vec<Layer>,
) -> Result<Vec<usize>, SpecError> {
    let v = cell.num_vertices();
    let channels = vertex_channels(cell, c_in, c_out)?;
    // Interior vertices in order: joint sum of in-edges, then the vertex op.
    for i in 1..v - 1 {
        let width = channels[i];
        let fan_in = (0..i).filter(|&p| cell.has_edge(p, i)).count();
        if cell.has_edge(0, i) {
            layers.push(Layer { kind: LayerKind::Projection, c_in, c_out: width });
        }
        if fan_in > 1 {
            layers.push(Layer { kind: LayerKind::Sum { arity: fan_in }, c_in: width, c_out: width });
        }
        let kind = match cell.ops()[i - 1] {
            Op::Conv3x3 => LayerKind::Conv { kernel: 3 },
            Op::Conv1x1 => LayerKind::Conv { kernel: 1 },
            Op::MaxPool3x3 => LayerKind::MaxPool { kernel: 3 },
        };
        layers.push(Layer { kind, c_in: width, c_out: width });
    }
    // Output vertex: concatenate interior sources; a direct input edge is
    // projected to the full output width and added elementwise.
    let interior_sources = (1..v - 1).filter(|&i| cell.has_edge(i, v - 1)).count();
    let direct = cell.has_edge(0, v - 1);
    if interior_sources > 1 {
        layers.push(Layer {
            kind: LayerKind::Concat { arity: interior_sources },
            c_in: c_out,
            c_out,
        });
    }
    if direct {
        layers.push(Layer { kind: LayerKind::Projection, c_in, c_out });
        if interior_sources > 0 {
            layers.push(Layer { kind: LayerKind::Sum { arity: 2 }, c_in: c_out, c_out });
        }
    }
    Ok(channels)
}

/// Trainable-parameter total for the network built from this cell.
pub fn parameter_count(spec: &ModelSpec, cfg: &SkeletonConfig) -> Result<u64, SpecError> {
    Ok(build_plan(spec, cfg)?.parameter_count())
}

/// Graph shape measurements on the pruned cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralMetrics {
    /// Edges on the longest input-to-output path.
    pub depth: usize,
    /// Largest directed cut: max edges crossing a bipartition with the input
    /// on one side, the output on the other, and no backward edges.
    pub width: usize,
}

pub fn structural_metrics(spec: &ModelSpec) -> Result<StructuralMetrics, SpecError> {
    if !spec.is_valid() {
        return Err(SpecError::Invalid);
    }
    let pruned = spec.prune();
    let v = pruned.num_vertices();

    let mut longest = vec![0usize; v];
    for j in 1..v {
        for i in 0..j {
            if pruned.has_edge(i, j) {
                longest[j] = longest[j].max(longest[i] + 1);
            }
        }
    }
    let depth = longest[v - 1];

    // Exhaustive scan over interior assignments; S holds the input, T the
    // output, and a cut only counts when no edge points from T back into S.
    let interior = v - 2;
    let mut width = 0;
    'cut: for assign in 0..1u32 << interior {
        let in_s = |vertex: usize| -> bool {
            vertex == 0 || (vertex < v - 1 && assign & (1 << (vertex - 1)) != 0)
        };
        let mut crossing = 0;
        for (i, j) in pruned.edges() {
            match (in_s(i), in_s(j)) {
                (true, false) => crossing += 1,
                (false, true) => continue 'cut,
                _ => {}
            }
        }
        width = width.max(crossing);
    }
    Ok(StructuralMetrics { depth, width })
}
