//! Edits and distances on the padded 7-vertex encoding.
//!
//! Specs with fewer vertices are first padded (isolated vertices before the
//! output slot, labeled CONV3X3), which aligns every spec on 21 edge slots
//! plus 5 op slots. Single edits flip one edge bit or swap one op label.

use rand_core::RngCore;

use crate::rng::{uniform_u32, uniform_usize};

use super::{
    apply_interior_perm, next_permutation, ModelSpec, Op, SpecError, MAX_VERTICES, NUM_EDGE_SLOTS,
    NUM_OP_SLOTS,
};

/// The 21 edge slots of the padded encoding, in row-major order. Bit `k` of
/// a raw encoding word refers to `EDGE_SLOTS[k]`.
pub const EDGE_SLOTS: [(usize, usize); NUM_EDGE_SLOTS] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (0, 6),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (2, 3),
    (2, 4),
    (2, 5),
    (2, 6),
    (3, 4),
    (3, 5),
    (3, 6),
    (4, 5),
    (4, 6),
    (5, 6),
];

/// Editable positions per encoding: 21 edges plus 5 ops.
pub const MUTATION_POSITIONS: usize = NUM_EDGE_SLOTS + NUM_OP_SLOTS;

/// Hamming distance over the padded encodings: differing edge bits plus
/// differing op labels.
pub fn encoding_distance(a: &ModelSpec, b: &ModelSpec) -> u32 {
    let a = a.pad_to_full();
    let b = b.pad_to_full();
    let mut d = 0;
    for i in 0..MAX_VERTICES - 1 {
        d += (a.row_bits(i) ^ b.row_bits(i)).count_ones();
    }
    for s in 0..NUM_OP_SLOTS {
        d += (a.ops()[s] != b.ops()[s]) as u32;
    }
    d
}

/// Minimum encoding distance over all feasible relabelings of `b`'s five
/// interior slots. Relabelings that would break upper-triangular form are
/// skipped; the identity is always feasible, so the result is at most
/// [`encoding_distance`].
pub fn canonical_distance(a: &ModelSpec, b: &ModelSpec) -> u32 {
    let a = a.pad_to_full();
    let b = b.pad_to_full();
    let mut best = u32::MAX;
    let mut perm: Vec<usize> = (0..NUM_OP_SLOTS).collect();
    loop {
        if let Some(candidate) = apply_interior_perm(&b, &perm) {
            best = best.min(encoding_distance(&a, &candidate));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

fn flip_edge(spec: &ModelSpec, slot: usize) -> ModelSpec {
    let (i, j) = EDGE_SLOTS[slot];
    let mut rows = [0u8; MAX_VERTICES];
    for r in 0..MAX_VERTICES {
        rows[r] = spec.row_bits(r);
    }
    rows[i] ^= 1 << j;
    ModelSpec::from_bits(MAX_VERTICES as u8, rows, spec.ops().iter().copied().collect())
}

fn swap_op(spec: &ModelSpec, slot: usize, op: Op) -> ModelSpec {
    let mut rows = [0u8; MAX_VERTICES];
    for r in 0..MAX_VERTICES {
        rows[r] = spec.row_bits(r);
    }
    let mut ops: arrayvec::ArrayVec<Op, NUM_OP_SLOTS> = spec.ops().iter().copied().collect();
    ops[slot] = op;
    ModelSpec::from_bits(MAX_VERTICES as u8, rows, ops)
}

/// All valid specs at encoding distance exactly 1, in a fixed order: edge
/// slots ascending, then op slots ascending with replacement labels in
/// [`Op::ALL`] order.
pub fn neighbors(spec: &ModelSpec) -> Vec<ModelSpec> {
    let padded = spec.pad_to_full();
    let mut out = Vec::with_capacity(MUTATION_POSITIONS);
    for slot in 0..NUM_EDGE_SLOTS {
        let candidate = flip_edge(&padded, slot);
        if candidate.is_valid() {
            out.push(candidate);
        }
    }
    for slot in 0..NUM_OP_SLOTS {
        for op in Op::ALL {
            if op == padded.ops()[slot] {
                continue;
            }
            let candidate = swap_op(&padded, slot, op);
            if candidate.is_valid() {
                out.push(candidate);
            }
        }
    }
    out
}

/// One uniformly drawn single-position edit of the padded encoding: with
/// probability 21/26 an edge flip, otherwise an op slot resampled from the
/// two other labels. Validity is not checked.
pub fn random_edit(spec: &ModelSpec, rng: &mut impl RngCore) -> ModelSpec {
    let padded = spec.pad_to_full();
    let pos = uniform_usize(rng, MUTATION_POSITIONS);
    if pos < NUM_EDGE_SLOTS {
        flip_edge(&padded, pos)
    } else {
        let slot = pos - NUM_EDGE_SLOTS;
        let current = padded.ops()[slot];
        let alternatives: Vec<Op> = Op::ALL.iter().copied().filter(|&op| op != current).collect();
        swap_op(&padded, slot, alternatives[uniform_usize(rng, 2)])
    }
}

/// Repeats [`random_edit`] until the child is valid, with a retry bound of
/// 10 000 attempts.
pub fn mutate(spec: &ModelSpec, rng: &mut impl RngCore) -> Result<ModelSpec, SpecError> {
    const MAX_ATTEMPTS: usize = 10_000;
    let padded = spec.pad_to_full();
    for _ in 0..MAX_ATTEMPTS {
        let child = random_edit(&padded, rng);
        if child.is_valid() {
            return Ok(child);
        }
    }
    Err(SpecError::MutationExhausted(MAX_ATTEMPTS))
}

/// Uniform draw over valid padded encodings: 21 fair edge bits (bit `k` is
/// `EDGE_SLOTS[k]`) from one `next_u32`, five uniform op labels, redrawn
/// until valid.
pub fn random_spec(rng: &mut impl RngCore) -> ModelSpec {
    loop {
        let bits = rng.next_u32() & ((1 << NUM_EDGE_SLOTS) - 1);
        let mut rows = [0u8; MAX_VERTICES];
        for (k, &(i, j)) in EDGE_SLOTS.iter().enumerate() {
            if bits & (1 << k) != 0 {
                rows[i] |= 1 << j;
            }
        }
        let mut ops = arrayvec::ArrayVec::new();
        for _ in 0..NUM_OP_SLOTS {
            ops.push(Op::from_code(uniform_u32(rng, 3) as u8));
        }
        let spec = ModelSpec::from_bits(MAX_VERTICES as u8, rows, ops);
        if spec.is_valid() {
            return spec;
        }
    }
}
