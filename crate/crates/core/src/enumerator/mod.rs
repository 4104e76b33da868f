//! Exhaustive enumeration of the cell search space.
//!
//! The space is walked once per vertex count `V`. Only *fully pruned*
//! adjacency masks are generated: in an upper-triangular DAG every vertex
//! lies on an input-to-output path exactly when every non-output vertex has
//! an out-edge and every non-input vertex has an in-edge, so those two
//! degree conditions (plus the edge budget) select precisely the pruned
//! forms. Specs that are not fully pruned reduce to a smaller `V` and are
//! picked up by that pass instead, so nothing is missed and nothing needs
//! pruning here.
//!
//! Deduplication is exact rather than digest-based: a mask that is not the
//! lexicographically smallest among its feasible interior relabelings is
//! skipped outright (its classes are generated from the smaller mask), and
//! for mask-canonical masks each labeling is reduced modulo the mask's
//! automorphisms. Every isomorphism class therefore surfaces exactly once,
//! as its lex-min member, and is hashed exactly once. A digest collision
//! between two distinct classes would show up as a duplicate in the final
//! sorted listing and aborts enumeration instead of silently merging cells.
//!
//! All reductions are associative merges over fixed chunks, so results are
//! identical regardless of thread count.

use std::collections::{BTreeMap, HashMap, HashSet};

use arrayvec::ArrayVec;
use rayon::prelude::*;

use crate::cellspec::{CanonicalCell, Digest, ModelSpec, Op, MAX_EDGES, MAX_VERTICES};

mod io;

pub use io::{read_index, read_index_file, write_index, write_index_file, IndexError};

/// Bounds of a search space: every valid cell with at most this many
/// vertices and edges, up to isomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceParams {
    max_vertices: usize,
    max_edges: usize,
}

impl SpaceParams {
    pub fn new(max_vertices: usize, max_edges: usize) -> Result<SpaceParams, IndexError> {
        if !(2..=MAX_VERTICES).contains(&max_vertices) {
            return Err(IndexError::BadParams(format!(
                "max_vertices {max_vertices} outside 2..={MAX_VERTICES}"
            )));
        }
        if !(1..=MAX_EDGES).contains(&max_edges) {
            return Err(IndexError::BadParams(format!(
                "max_edges {max_edges} outside 1..={MAX_EDGES}"
            )));
        }
        Ok(SpaceParams { max_vertices, max_edges })
    }

    /// The canonical full-size space: 7 vertices, 9 edges.
    pub fn full() -> SpaceParams {
        SpaceParams { max_vertices: MAX_VERTICES, max_edges: MAX_EDGES }
    }

    pub fn max_vertices(&self) -> usize {
        self.max_vertices
    }

    pub fn max_edges(&self) -> usize {
        self.max_edges
    }
}

/// The enumerated space: canonical cells sorted by digest, with O(1) digest
/// lookup. Positions are stable identifiers for a given parameter choice.
#[derive(Debug, Clone)]
pub struct SpaceIndex {
    params: SpaceParams,
    cells: Vec<CanonicalCell>,
    by_digest: HashMap<Digest, u32>,
}

impl SpaceIndex {
    fn from_sorted_cells(params: SpaceParams, cells: Vec<CanonicalCell>) -> SpaceIndex {
        for pair in cells.windows(2) {
            assert!(
                pair[0].digest() < pair[1].digest(),
                "digest collision or misordered cells: {} then {}",
                pair[0].digest(),
                pair[1].digest()
            );
        }
        let by_digest = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (*c.digest(), i as u32))
            .collect();
        SpaceIndex { params, cells, by_digest }
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in digest order.
    pub fn cells(&self) -> &[CanonicalCell] {
        &self.cells
    }

    pub fn get(&self, position: usize) -> &CanonicalCell {
        &self.cells[position]
    }

    pub fn position(&self, digest: &Digest) -> Option<usize> {
        self.by_digest.get(digest).map(|&i| i as usize)
    }

    pub fn lookup(&self, digest: &Digest) -> Option<&CanonicalCell> {
        self.position(digest).map(|i| &self.cells[i])
    }

    pub fn contains(&self, digest: &Digest) -> bool {
        self.by_digest.contains_key(digest)
    }
}

/// A canonical (lex-min, fully pruned) spec packed into one word for cheap
/// set membership: vertex count, row bitmasks, then op codes.
fn pack(v: usize, rows: &[u8; MAX_VERTICES], ops: &[u8]) -> u128 {
    let mut word = v as u128;
    for &row in rows {
        word = word << 8 | row as u128;
    }
    for slot in 0..MAX_VERTICES - 2 {
        word = word << 8 | *ops.get(slot).unwrap_or(&0xff) as u128;
    }
    word
}

fn unpack(word: u128) -> ModelSpec {
    let mut ops = ArrayVec::new();
    // Op slot 0 was pushed first, so it sits at the highest op byte.
    for slot in (0..MAX_VERTICES - 2).rev() {
        let code = (word >> (8 * slot)) as u8;
        if code != 0xff {
            ops.push(Op::from_code(code));
        }
    }
    let mut rows = [0u8; MAX_VERTICES];
    for (i, row) in rows.iter_mut().enumerate() {
        *row = (word >> (8 * (MAX_VERTICES - 2 + MAX_VERTICES - 1 - i))) as u8;
    }
    let v = (word >> (8 * (2 * MAX_VERTICES - 2))) as u8;
    ModelSpec::from_bits(v, rows, ops)
}

/// Row-major lexicographic comparison of two row-bitmask matrices. The
/// lowest differing bit within a row is the earliest differing column.
fn rows_lt(a: &[u8; MAX_VERTICES], b: &[u8; MAX_VERTICES], v: usize) -> bool {
    for i in 0..v {
        let diff = a[i] ^ b[i];
        if diff != 0 {
            return a[i] & (diff & diff.wrapping_neg()) == 0;
        }
    }
    false
}

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut perm: Vec<u8> = (0..k as u8).collect();
    loop {
        out.push(perm.clone());
        // Next lexicographic permutation, inline over u8 labels.
        let n = perm.len();
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

/// Applies an interior relabeling to a mask. `None` when some edge would
/// point downward, i.e. the relabeled matrix is not upper-triangular.
fn permute_mask(rows: &[u8; MAX_VERTICES], v: usize, perm: &[u8]) -> Option<[u8; MAX_VERTICES]> {
    let map = |i: usize| -> usize {
        if i == 0 {
            0
        } else if i == v - 1 {
            v - 1
        } else {
            perm[i - 1] as usize + 1
        }
    };
    let mut out = [0u8; MAX_VERTICES];
    for i in 0..v - 1 {
        let mut bits = rows[i];
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (mi, mj) = (map(i), map(j));
            if mi >= mj {
                return None;
            }
            out[mi] |= 1 << mj;
        }
    }
    Some(out)
}

/// What one adjacency mask contributes: nothing if another relabeling of it
/// is lexicographically smaller, otherwise its automorphisms.
enum MaskClass {
    NotCanonical,
    Canonical { automorphisms: Vec<Vec<u8>> },
}

fn classify_mask(rows: &[u8; MAX_VERTICES], v: usize, perms: &[Vec<u8>]) -> MaskClass {
    let mut automorphisms = Vec::new();
    for perm in perms {
        let Some(image) = permute_mask(rows, v, perm) else {
            continue;
        };
        if rows_lt(&image, rows, v) {
            return MaskClass::NotCanonical;
        }
        if image == *rows {
            automorphisms.push(perm.clone());
        }
    }
    MaskClass::Canonical { automorphisms }
}

/// Enumerates every valid cell in the space once, as its lex-min member,
/// sorted by digest.
pub fn enumerate_space(params: SpaceParams) -> SpaceIndex {
    let mut all: HashSet<u128> = HashSet::new();
    for v in 2..=params.max_vertices {
        all.extend(enumerate_vertex_count(v, params.max_edges));
    }
    let mut cells: Vec<CanonicalCell> = all
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|word| {
            let spec = unpack(word);
            let digest = crate::cellspec::wl_digest(&spec);
            CanonicalCell::from_parts(spec, digest)
        })
        .collect();
    cells.par_sort_unstable_by_key(|cell| *cell.digest().as_bytes());
    SpaceIndex::from_sorted_cells(params, cells)
}

/// Canonical members with exactly `v` vertices, packed.
fn enumerate_vertex_count(v: usize, max_edges: usize) -> HashSet<u128> {
    let k = v - 2;
    let slots: Vec<(usize, usize)> = (0..v)
        .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
        .collect();
    let num_masks: u32 = 1 << slots.len();
    let perms = permutations(k);
    let labelings = 3usize.pow(k as u32);

    // Fixed-size chunks keep the fold deterministic under any thread count;
    // set union as the reduce step is associative and commutative.
    const CHUNK: u32 = 1 << 12;
    (0..num_masks.div_ceil(CHUNK))
        .into_par_iter()
        .fold(HashSet::new, |mut acc: HashSet<u128>, chunk| {
            let lo = chunk * CHUNK;
            let hi = num_masks.min(lo + CHUNK);
            for mask in lo..hi {
                if (mask.count_ones() as usize) > max_edges {
                    continue;
                }
                let mut rows = [0u8; MAX_VERTICES];
                for (bit, &(i, j)) in slots.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        rows[i] |= 1 << j;
                    }
                }
                if !degrees_fully_pruned(&rows, v) {
                    continue;
                }
                let MaskClass::Canonical { automorphisms } = classify_mask(&rows, v, &perms)
                else {
                    continue;
                };
                let mut ops = [0u8; MAX_VERTICES - 2];
                for code in 0..labelings {
                    let mut rem = code;
                    for slot in ops.iter_mut().take(k) {
                        *slot = (rem % 3) as u8;
                        rem /= 3;
                    }
                    let canonical = canonical_labeling(&ops[..k], &automorphisms);
                    acc.insert(pack(v, &rows, &canonical[..k]));
                }
            }
            acc
        })
        .reduce(HashSet::new, |a, b| {
            if a.len() < b.len() {
                return reduce_into(b, a);
            }
            reduce_into(a, b)
        })
}

fn reduce_into(mut big: HashSet<u128>, small: HashSet<u128>) -> HashSet<u128> {
    big.extend(small);
    big
}

/// Every non-output vertex needs an out-edge and every non-input vertex an
/// in-edge; for upper-triangular matrices this is exactly full prunedness.
fn degrees_fully_pruned(rows: &[u8; MAX_VERTICES], v: usize) -> bool {
    let mut in_bits = 0u8;
    for i in 0..v - 1 {
        if rows[i] == 0 {
            return false;
        }
        in_bits |= rows[i];
    }
    in_bits == (((1u16 << v) - 2) as u8)
}

/// The smallest relabeling of an op assignment under the mask automorphisms.
fn canonical_labeling(ops: &[u8], automorphisms: &[Vec<u8>]) -> [u8; MAX_VERTICES - 2] {
    let k = ops.len();
    let mut best = [0u8; MAX_VERTICES - 2];
    best[..k].copy_from_slice(ops);
    if automorphisms.len() > 1 {
        let mut image = [0u8; MAX_VERTICES - 2];
        for perm in automorphisms {
            for p in 0..k {
                image[perm[p] as usize] = ops[p];
            }
            if image[..k] < best[..k] {
                best[..k].copy_from_slice(&image[..k]);
            }
        }
    }
    best
}

/// Composition of the space: totals per vertex count, per edge count, and
/// per op label (counting op slots across all cells).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceStats {
    pub total: usize,
    pub by_vertices: BTreeMap<usize, usize>,
    pub by_edges: BTreeMap<usize, usize>,
    pub op_slots: BTreeMap<Op, usize>,
    pub by_depth: BTreeMap<usize, usize>,
    pub by_width: BTreeMap<usize, usize>,
}

pub fn space_stats(index: &SpaceIndex) -> SpaceStats {
    let mut stats = SpaceStats {
        total: index.len(),
        by_vertices: BTreeMap::new(),
        by_edges: BTreeMap::new(),
        op_slots: BTreeMap::new(),
        by_depth: BTreeMap::new(),
        by_width: BTreeMap::new(),
    };
    for cell in index.cells() {
        *stats.by_vertices.entry(cell.num_vertices()).or_default() += 1;
        *stats.by_edges.entry(cell.num_edges()).or_default() += 1;
        for &op in cell.spec().ops() {
            *stats.op_slots.entry(op).or_default() += 1;
        }
        let metrics = crate::netmodel::structural_metrics(cell.spec())
            .expect("index holds only valid cells");
        *stats.by_depth.entry(metrics.depth).or_default() += 1;
        *stats.by_width.entry(metrics.width).or_default() += 1;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellspec::samples;

    fn space(max_vertices: usize, max_edges: usize) -> SpaceIndex {
        enumerate_space(SpaceParams::new(max_vertices, max_edges).unwrap())
    }

    /// Independent route to the same cell set: canonicalize every raw
    /// encoding at every vertex count and dedup by digest.
    fn brute_force_digests(max_vertices: usize, max_edges: usize) -> HashSet<Digest> {
        let mut digests = HashSet::new();
        for v in 2..=max_vertices {
            let slots: Vec<(usize, usize)> = (0..v)
                .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
                .collect();
            let k = v - 2;
            for mask in 0u32..1 << slots.len() {
                let mut matrix = [[0u8; MAX_VERTICES]; MAX_VERTICES];
                for (bit, &(i, j)) in slots.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        matrix[i][j] = 1;
                    }
                }
                let rows: Vec<&[u8]> = matrix.iter().take(v).map(|r| &r[..v]).collect();
                for code in 0..3usize.pow(k as u32) {
                    let mut rem = code;
                    let ops: Vec<Op> = (0..k)
                        .map(|_| {
                            let op = Op::ALL[rem % 3];
                            rem /= 3;
                            op
                        })
                        .collect();
                    let spec = ModelSpec::new(&rows, &ops).unwrap();
                    if spec.num_edges() <= max_edges {
                        if let Ok(digest) = spec.canonical_hash() {
                            digests.insert(digest);
                        }
                    }
                }
            }
        }
        digests
    }

    #[test]
    fn three_vertex_space_has_exactly_seven_cells() {
        let index = space(3, 9);
        assert_eq!(index.len(), 7);
        let stats = space_stats(&index);
        assert_eq!(stats.by_vertices, BTreeMap::from([(2, 1), (3, 6)]));
        // One trivial cell, three single-op chains, three chains with skip.
        assert_eq!(stats.by_depth, BTreeMap::from([(1, 1), (2, 6)]));
        assert_eq!(stats.by_width, BTreeMap::from([(1, 4), (2, 3)]));
    }

    #[test]
    fn six_vertex_space_count_is_frozen() {
        // Regression constants from the first verified enumeration; the
        // seven-vertex total 423 624 is checked in the acceptance suite.
        let stats = space_stats(&space(6, 9));
        assert_eq!(stats.total, 64_542);
        assert_eq!(
            stats.by_vertices,
            BTreeMap::from([(2, 1), (3, 6), (4, 84), (5, 2441), (6, 62_010)])
        );
    }

    #[test]
    fn small_spaces_match_brute_force_canonicalization() {
        for (mv, me) in [(3, 9), (4, 9), (5, 9), (5, 4)] {
            let index = space(mv, me);
            let expected = brute_force_digests(mv, me);
            let got: HashSet<Digest> = index.cells().iter().map(|c| *c.digest()).collect();
            assert_eq!(got, expected, "space ({mv}, {me})");
            assert_eq!(index.len(), expected.len());
        }
    }

    #[test]
    fn cells_are_their_own_canonical_form() {
        let index = space(5, 9);
        for cell in index.cells() {
            assert!(cell.spec().is_valid());
            assert!(cell.spec().is_fully_pruned());
            let again = cell.spec().canonicalize().unwrap();
            assert_eq!(again.spec(), cell.spec());
            assert_eq!(again.digest(), cell.digest());
        }
    }

    #[test]
    fn cells_are_sorted_by_digest_and_lookup_agrees() {
        let index = space(5, 9);
        for (i, cell) in index.cells().iter().enumerate() {
            assert_eq!(index.position(cell.digest()), Some(i));
            assert_eq!(index.lookup(cell.digest()).unwrap(), cell);
        }
        // A 6-vertex cell cannot appear in a 5-vertex space.
        let absent = samples::inception_like().canonical_hash().unwrap();
        assert!(!index.contains(&absent));
    }

    #[test]
    fn named_samples_are_found_in_their_spaces() {
        let index = space(6, 9);
        for spec in [
            samples::trivial(),
            samples::chain(&[Op::Conv3x3, Op::MaxPool3x3]),
            samples::resnet_like(),
            samples::inception_like(),
        ] {
            let cell = spec.canonicalize().unwrap();
            let found = index.lookup(cell.digest()).unwrap();
            assert_eq!(found.spec(), cell.spec());
        }
    }

    #[test]
    fn enumeration_is_deterministic_across_thread_counts() {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| space(5, 9));
        let several = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| space(5, 9));
        assert_eq!(single.cells(), several.cells());
    }

    #[test]
    fn edge_budget_restricts_the_space() {
        let tight = space(4, 3);
        for cell in tight.cells() {
            assert!(cell.num_edges() <= 3);
        }
        assert!(tight.len() < space(4, 9).len());
    }

    #[test]
    fn params_are_validated() {
        assert!(SpaceParams::new(1, 9).is_err());
        assert!(SpaceParams::new(8, 9).is_err());
        assert!(SpaceParams::new(7, 0).is_err());
        assert!(SpaceParams::new(7, 10).is_err());
        assert!(SpaceParams::new(2, 1).is_ok());
    }
}
