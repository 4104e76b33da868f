//! How many padded encodings collapse onto one cell.
//!
//! A pruned cell with `k` interior vertices re-embeds into the padded
//! 7-vertex encoding by choosing which of the five interior slots host its
//! interior vertices (edges must stay upper-triangular). Filler slots are
//! isolated, so their labels are free. Each distinct embedding is an
//! [`EncodingFamily`]: a fixed adjacency pattern plus label constraints on
//! the hosting slots. Families never overlap because the hosting slots are
//! readable off the adjacency pattern alone.
//!
//! Encodings whose filler vertices carry edges also prune to the same cell;
//! those are deliberately not counted here. Families describe the exact
//! re-embeddings, which is the notion the basin-volume analysis measures
//! distances against.

use itertools::Itertools;

use super::{ModelSpec, Op, SpecError, MAX_VERTICES, NUM_OP_SLOTS};

/// One embedding of a pruned cell into the padded encoding: an adjacency
/// pattern over 7 vertices and, per interior slot, either a required label or
/// `None` for an isolated filler slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncodingFamily {
    rows: [u8; MAX_VERTICES],
    labels: [Option<Op>; NUM_OP_SLOTS],
}

impl EncodingFamily {
    pub fn rows(&self) -> &[u8; MAX_VERTICES] {
        &self.rows
    }

    pub fn labels(&self) -> &[Option<Op>; NUM_OP_SLOTS] {
        &self.labels
    }

    /// Number of interior slots whose label is unconstrained.
    pub fn free_slots(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Positionwise distance from a padded encoding to the nearest family
    /// member: differing edge slots plus label mismatches on constrained
    /// slots.
    pub fn distance_to(&self, rows: &[u8; MAX_VERTICES], ops: &[Op; NUM_OP_SLOTS]) -> u32 {
        let edge_diff: u32 = self
            .rows
            .iter()
            .zip(rows)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum();
        let label_diff = self
            .labels
            .iter()
            .zip(ops)
            .filter(|(want, have)| matches!(want, Some(w) if w != *have))
            .count() as u32;
        edge_diff + label_diff
    }

    /// Distance from an arbitrary spec, padded to 7 vertices first.
    pub fn distance_to_spec(&self, spec: &ModelSpec) -> u32 {
        let padded = spec.pad_to_full();
        let mut rows = [0u8; MAX_VERTICES];
        for i in 0..MAX_VERTICES {
            rows[i] = padded.row_bits(i);
        }
        let mut ops = [Op::Conv3x3; NUM_OP_SLOTS];
        ops.copy_from_slice(padded.ops());
        self.distance_to(&rows, &ops)
    }
}

/// All embeddings of the pruned cell into the padded encoding, sorted and
/// deduplicated. The result depends only on the isomorphism class, not on
/// which member `spec` is.
pub fn peak_families(spec: &ModelSpec) -> Result<Vec<EncodingFamily>, SpecError> {
    if !spec.is_valid() {
        return Err(SpecError::Invalid);
    }
    let pruned = spec.prune();
    let v = pruned.num_vertices();
    let k = v - 2;
    let mut families = Vec::new();
    // Ordered choices of hosting slots; infeasible ones (an interior edge
    // forced downward) are skipped.
    'placement: for sigma in (0..NUM_OP_SLOTS).permutations(k) {
        let map = |i: usize| -> usize {
            if i == 0 {
                0
            } else if i == v - 1 {
                MAX_VERTICES - 1
            } else {
                sigma[i - 1] + 1
            }
        };
        let mut rows = [0u8; MAX_VERTICES];
        for (i, j) in pruned.edges() {
            let (mi, mj) = (map(i), map(j));
            if mi >= mj {
                continue 'placement;
            }
            rows[mi] |= 1 << mj;
        }
        let mut labels = [None; NUM_OP_SLOTS];
        for (p, &slot) in sigma.iter().enumerate() {
            labels[slot] = Some(pruned.ops()[p]);
        }
        families.push(EncodingFamily { rows, labels });
    }
    families.sort();
    families.dedup();
    Ok(families)
}

/// Number of padded encodings that are exact re-embeddings of the pruned
/// cell: one per family and free-label assignment.
pub fn encoding_multiplicity(spec: &ModelSpec) -> Result<u64, SpecError> {
    let families = peak_families(spec)?;
    let free = families.first().map_or(NUM_OP_SLOTS, EncodingFamily::free_slots);
    Ok(families.len() as u64 * 3u64.pow(free as u32))
}

#[cfg(test)]
mod tests {
    use super::super::samples;
    use super::*;

    #[test]
    fn trivial_cell_has_one_family_with_all_labels_free() {
        let families = peak_families(&samples::trivial()).unwrap();
        assert_eq!(families.len(), 1);
        assert_eq!(families[0].free_slots(), 5);
        assert_eq!(encoding_multiplicity(&samples::trivial()).unwrap(), 243);
    }

    #[test]
    fn single_interior_vertex_embeds_in_each_slot() {
        let chain = samples::chain(&[Op::Conv1x1]);
        let families = peak_families(&chain).unwrap();
        assert_eq!(families.len(), 5);
        assert_eq!(encoding_multiplicity(&chain).unwrap(), 5 * 81);
    }

    #[test]
    fn interior_edges_keep_only_ascending_placements() {
        let chain = samples::chain(&[Op::Conv3x3, Op::Conv3x3]);
        // v1 -> v2 forces slot(v1) < slot(v2): 10 of the 20 ordered choices.
        let families = peak_families(&chain).unwrap();
        assert_eq!(families.len(), 10);
        assert_eq!(encoding_multiplicity(&chain).unwrap(), 10 * 27);
    }

    #[test]
    fn symmetric_branches_collapse_duplicate_placements() {
        // Two interchangeable branches with equal labels: swapping them maps
        // placements onto each other, so 20 ordered choices give 10 patterns.
        let same = ModelSpec::new(
            &[
                &[0, 1, 1, 1],
                &[0, 0, 0, 1],
                &[0, 0, 0, 1],
                &[0, 0, 0, 0],
            ],
            &[Op::MaxPool3x3, Op::MaxPool3x3],
        )
        .unwrap();
        assert_eq!(peak_families(&same).unwrap().len(), 10);

        let differ = ModelSpec::new(
            &[
                &[0, 1, 1, 1],
                &[0, 0, 0, 1],
                &[0, 0, 0, 1],
                &[0, 0, 0, 0],
            ],
            &[Op::MaxPool3x3, Op::Conv3x3],
        )
        .unwrap();
        assert_eq!(peak_families(&differ).unwrap().len(), 20);
    }

    #[test]
    fn multiplicity_is_isomorphism_invariant() {
        let spec = samples::inception_like();
        let relabeled = spec.relabel_interior(&[3, 0, 2, 1]);
        assert_eq!(
            spec.canonical_hash().unwrap(),
            relabeled.canonical_hash().unwrap()
        );
        assert_eq!(
            encoding_multiplicity(&spec).unwrap(),
            encoding_multiplicity(&relabeled).unwrap()
        );
    }

    #[test]
    fn exact_members_sit_at_distance_zero() {
        let spec = samples::resnet_like();
        let families = peak_families(&spec).unwrap();
        let padded = spec.pad_to_full();
        let zero = families
            .iter()
            .filter(|f| f.distance_to_spec(&padded) == 0)
            .count();
        assert_eq!(zero, 1);
        // A single op flip on a hosted slot moves distance to exactly 1.
        let flipped = ModelSpec::new(
            &[
                &[0, 1, 0, 1],
                &[0, 0, 1, 0],
                &[0, 0, 0, 1],
                &[0, 0, 0, 0],
            ],
            &[Op::Conv3x3, Op::Conv1x1],
        )
        .unwrap();
        let min_after_flip = families
            .iter()
            .map(|f| f.distance_to_spec(&flipped))
            .min()
            .unwrap();
        assert_eq!(min_after_flip, 1);
    }
}
