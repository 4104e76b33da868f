//! Cell specifications: operation-labeled DAGs on at most seven vertices.
//!
//! A cell is a directed acyclic graph stored as an upper-triangular adjacency
//! matrix over `V <= 7` vertices. Vertex 0 is the cell input, vertex `V - 1`
//! the cell output, and every intermediate vertex carries one of three
//! operation labels. A spec is *valid* when a directed input-to-output path
//! exists and it has at most [`MAX_EDGES`] edges in total.
//!
//! Two specs that differ only by a relabeling of intermediate vertices (after
//! pruning vertices that sit on no input-to-output path) describe the same
//! computation. [`ModelSpec::canonical_hash`] assigns every such equivalence
//! class a stable 128-bit digest, and [`ModelSpec::canonicalize`] picks the
//! lexicographically smallest member as the class representative.

use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

mod edit;
mod encode;
mod hash;
mod multiplicity;
pub mod samples;

pub use edit::{
    canonical_distance, encoding_distance, mutate, neighbors, random_edit, random_spec,
    EDGE_SLOTS, MUTATION_POSITIONS,
};
pub(crate) use hash::wl_digest;
pub use encode::{decode_continuous, ContinuousEncoding};
pub use multiplicity::{encoding_multiplicity, peak_families, EncodingFamily};

/// Hard cap on vertices per cell; also the padded encoding width.
pub const MAX_VERTICES: usize = 7;
/// Hard cap on edges per valid cell.
pub const MAX_EDGES: usize = 9;
/// Number of edge slots in the padded 7-vertex encoding.
pub const NUM_EDGE_SLOTS: usize = 21;
/// Number of intermediate-vertex slots in the padded encoding.
pub const NUM_OP_SLOTS: usize = 5;
/// Size of the raw padded encoding space: 2^21 adjacency patterns times 3^5
/// op labelings, counting invalid encodings.
pub const RAW_ENCODING_COUNT: u64 = (1u64 << NUM_EDGE_SLOTS) * 243;

/// Operation label for an intermediate vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "CONV3X3")]
    Conv3x3,
    #[serde(rename = "CONV1X1")]
    Conv1x1,
    #[serde(rename = "MAXPOOL3X3")]
    MaxPool3x3,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Conv3x3, Op::Conv1x1, Op::MaxPool3x3];

    pub fn label(self) -> &'static str {
        match self {
            Op::Conv3x3 => "CONV3X3",
            Op::Conv1x1 => "CONV1X1",
            Op::MaxPool3x3 => "MAXPOOL3X3",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Op::Conv3x3 => 0,
            Op::Conv1x1 => 1,
            Op::MaxPool3x3 => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Op {
        Op::ALL[code as usize]
    }
}

impl FromStr for Op {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Op, SpecError> {
        Op::ALL
            .iter()
            .copied()
            .find(|op| op.label() == s)
            .ok_or_else(|| SpecError::UnknownOp(s.to_string()))
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("adjacency matrix must be square")]
    NotSquare,
    #[error("vertex count {0} outside supported range 2..=7")]
    VertexCount(usize),
    #[error("matrix entries must be 0 or 1")]
    BadEntry,
    #[error("edge {i}->{j} violates upper-triangular form")]
    NotUpperTriangular { i: usize, j: usize },
    #[error("expected {expected} interior ops, got {got}")]
    OpsLength { expected: usize, got: usize },
    #[error("spec is invalid: needs an input->output path and at most {MAX_EDGES} edges")]
    Invalid,
    #[error("mutation produced no valid child in {0} attempts")]
    MutationExhausted(usize),
    #[error("unknown op label \"{0}\"")]
    UnknownOp(String),
    #[error("malformed spec text: {0}")]
    BadText(String),
    #[error("digest must be 32 lowercase hex characters")]
    BadDigest,
    #[error("continuous encoding: {0}")]
    BadContinuous(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// 128-bit canonical cell identity, rendered as 32 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub(crate) [u8; 16]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for byte in self.0 {
            write!(f, "{byte:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl FromStr for Digest {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Digest, SpecError> {
        if s.len() != 32 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(SpecError::BadDigest);
        }
        let mut bytes = [0u8; 16];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hi = (chunk[0] as char).to_digit(16).unwrap() as u8;
            let lo = (chunk[1] as char).to_digit(16).unwrap() as u8;
            bytes[i] = hi << 4 | lo;
        }
        Ok(Digest(bytes))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Digest, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// An encoded cell: upper-triangular adjacency plus interior op labels.
///
/// Row `i` is stored as a bitmask whose bit `j` is the edge `i -> j`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    num_vertices: u8,
    rows: [u8; MAX_VERTICES],
    ops: ArrayVec<Op, NUM_OP_SLOTS>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelSpec({})", self.to_text())
    }
}

impl ModelSpec {
    /// Builds a spec from a 0/1 adjacency matrix and one op per intermediate
    /// vertex. Rejects malformed shapes; validity is a separate question
    /// answered by [`ModelSpec::is_valid`].
    pub fn new(matrix: &[&[u8]], ops: &[Op]) -> Result<ModelSpec, SpecError> {
        let v = matrix.len();
        if !(2..=MAX_VERTICES).contains(&v) {
            return Err(SpecError::VertexCount(v));
        }
        let mut rows = [0u8; MAX_VERTICES];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != v {
                return Err(SpecError::NotSquare);
            }
            for (j, &entry) in row.iter().enumerate() {
                match entry {
                    0 => {}
                    1 if j > i => rows[i] |= 1 << j,
                    1 => return Err(SpecError::NotUpperTriangular { i, j }),
                    _ => return Err(SpecError::BadEntry),
                }
            }
        }
        if ops.len() != v - 2 {
            return Err(SpecError::OpsLength { expected: v - 2, got: ops.len() });
        }
        Ok(ModelSpec {
            num_vertices: v as u8,
            rows,
            ops: ops.iter().copied().collect(),
        })
    }

    pub(crate) fn from_bits(
        num_vertices: u8,
        rows: [u8; MAX_VERTICES],
        ops: ArrayVec<Op, NUM_OP_SLOTS>,
    ) -> ModelSpec {
        debug_assert!((2..=MAX_VERTICES).contains(&(num_vertices as usize)));
        debug_assert_eq!(ops.len(), num_vertices as usize - 2);
        debug_assert!(rows
            .iter()
            .enumerate()
            .all(|(i, &r)| r & !(((1u16 << num_vertices) - 1) as u8) == 0
                && r & (((1u16 << (i + 1)) - 1) as u8) == 0));
        ModelSpec { num_vertices, rows, ops }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices as usize
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.num_vertices() && self.rows[i] & (1 << j) != 0
    }

    /// Interior vertex labels, in vertex order (vertex `k + 1` has `ops()[k]`).
    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// Edges as `(from, to)` pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let v = self.num_vertices();
        (0..v).flat_map(move |i| (i + 1..v).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    pub(crate) fn row_bits(&self, i: usize) -> u8 {
        self.rows[i]
    }

    /// Vertices reachable from the input, as a bitmask including vertex 0.
    fn forward_set(&self) -> u8 {
        let v = self.num_vertices();
        let mut reach = 1u8;
        for _ in 0..v {
            let mut next = reach;
            for i in 0..v {
                if reach & (1 << i) != 0 {
                    next |= self.rows[i];
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        reach
    }

    /// Vertices that can reach the output, as a bitmask including `V - 1`.
    fn backward_set(&self) -> u8 {
        let v = self.num_vertices();
        let mut reach = 1u8 << (v - 1);
        for _ in 0..v {
            let mut next = reach;
            for i in 0..v {
                if self.rows[i] & reach != 0 {
                    next |= 1 << i;
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        reach
    }

    /// True when an input-to-output path exists and the edge budget holds.
    pub fn is_valid(&self) -> bool {
        self.num_edges() <= MAX_EDGES
            && self.forward_set() & (1 << (self.num_vertices() - 1)) != 0
    }

    /// Bitmask of vertices lying on at least one input-to-output path.
    pub(crate) fn on_path_set(&self) -> u8 {
        self.forward_set() & self.backward_set()
    }

    /// Drops every vertex that lies on no input-to-output path, preserving
    /// the relative order of the survivors. A spec with no such path prunes
    /// to the edgeless two-vertex spec; a spec whose vertices all survive is
    /// returned unchanged.
    pub fn prune(&self) -> ModelSpec {
        let v = self.num_vertices();
        let keep = self.on_path_set();
        if keep & 1 == 0 {
            return ModelSpec::from_bits(2, [0; MAX_VERTICES], ArrayVec::new());
        }
        if keep == (((1u16 << v) - 1) as u8) {
            return self.clone();
        }
        let mut map = [usize::MAX; MAX_VERTICES];
        let mut new_v = 0;
        for i in 0..v {
            if keep & (1 << i) != 0 {
                map[i] = new_v;
                new_v += 1;
            }
        }
        let mut rows = [0u8; MAX_VERTICES];
        let mut ops = ArrayVec::new();
        for i in 0..v {
            if map[i] == usize::MAX {
                continue;
            }
            for j in i + 1..v {
                if self.has_edge(i, j) && map[j] != usize::MAX {
                    rows[map[i]] |= 1 << map[j];
                }
            }
            if i > 0 && i < v - 1 {
                ops.push(self.ops[i - 1]);
            }
        }
        ModelSpec::from_bits(new_v as u8, rows, ops)
    }

    /// True when every vertex survives pruning.
    pub fn is_fully_pruned(&self) -> bool {
        let v = self.num_vertices();
        self.on_path_set() == (((1u16 << v) - 1) as u8)
    }

    /// Re-encodes with `MAX_VERTICES` vertices: filler vertices are isolated,
    /// labeled [`Op::Conv3x3`], and placed immediately before the output slot.
    pub fn pad_to_full(&self) -> ModelSpec {
        let v = self.num_vertices();
        if v == MAX_VERTICES {
            return self.clone();
        }
        let out = MAX_VERTICES - 1;
        let mut rows = [0u8; MAX_VERTICES];
        for i in 0..v - 1 {
            let mut bits = self.rows[i] & !(1 << (v - 1));
            if self.has_edge(i, v - 1) {
                bits |= 1 << out;
            }
            rows[i] = bits;
        }
        let mut ops = self.ops.clone();
        for _ in v..MAX_VERTICES {
            ops.push(Op::Conv3x3);
        }
        ModelSpec::from_bits(MAX_VERTICES as u8, rows, ops)
    }

    /// Isomorphism-invariant digest of the pruned cell. Errors on invalid
    /// specs.
    pub fn canonical_hash(&self) -> Result<Digest, SpecError> {
        if !self.is_valid() {
            return Err(SpecError::Invalid);
        }
        Ok(hash::wl_digest(&self.prune()))
    }

    /// Prunes, hashes, and picks the lexicographically smallest member of the
    /// isomorphism class as the representative.
    pub fn canonicalize(&self) -> Result<CanonicalCell, SpecError> {
        if !self.is_valid() {
            return Err(SpecError::Invalid);
        }
        let pruned = self.prune();
        let digest = hash::wl_digest(&pruned);
        let k = pruned.num_vertices() - 2;
        let mut best = pruned.clone();
        if k > 1 {
            let mut perm: Vec<usize> = (0..k).collect();
            loop {
                if let Some(candidate) = apply_interior_perm(&pruned, &perm) {
                    if lex_cmp(&candidate, &best) == std::cmp::Ordering::Less {
                        best = candidate;
                    }
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        Ok(CanonicalCell { spec: best, digest })
    }

    /// Applies an arbitrary relabeling of the interior vertices and re-sorts
    /// the result into upper-triangular form. `perm[p]` is the label the
    /// current interior vertex `p` should receive; among topologically free
    /// vertices the smallest label is placed first, so any permutation yields
    /// a well-formed spec describing the same cell.
    pub fn relabel_interior(&self, perm: &[usize]) -> ModelSpec {
        let v = self.num_vertices();
        let k = v - 2;
        assert_eq!(perm.len(), k);
        if k <= 1 {
            return self.clone();
        }
        // Kahn's ordering over interior vertices only; input and output never
        // constrain interior order.
        let mut placed = vec![false; k];
        let mut order = Vec::with_capacity(k);
        while order.len() < k {
            let mut pick = usize::MAX;
            for p in 0..k {
                if placed[p] {
                    continue;
                }
                let ready = (0..k).all(|q| {
                    placed[q] || !self.has_edge(q + 1, p + 1)
                });
                if ready && (pick == usize::MAX || perm[p] < perm[pick]) {
                    pick = p;
                }
            }
            placed[pick] = true;
            order.push(pick);
        }
        // order[s] = old interior vertex sitting at new slot s.
        let mut slot_of = vec![0usize; k];
        for (s, &p) in order.iter().enumerate() {
            slot_of[p] = s;
        }
        let map = |i: usize| -> usize {
            if i == 0 {
                0
            } else if i == v - 1 {
                v - 1
            } else {
                slot_of[i - 1] + 1
            }
        };
        let mut rows = [0u8; MAX_VERTICES];
        for (i, j) in self.edges() {
            let (mi, mj) = (map(i), map(j));
            debug_assert!(mi < mj);
            rows[mi] |= 1 << mj;
        }
        let mut ops = ArrayVec::new();
        for s in 0..k {
            ops.push(self.ops[order[s]]);
        }
        ModelSpec::from_bits(v as u8, rows, ops)
    }
}

/// Strictly applies an interior relabeling without re-sorting; `None` when
/// the result would not be upper-triangular. `perm[p]` is the new interior
/// position of interior vertex `p`.
pub(crate) fn apply_interior_perm(spec: &ModelSpec, perm: &[usize]) -> Option<ModelSpec> {
    let v = spec.num_vertices();
    debug_assert_eq!(perm.len(), v - 2);
    let map = |i: usize| -> usize {
        if i == 0 {
            0
        } else if i == v - 1 {
            v - 1
        } else {
            perm[i - 1] + 1
        }
    };
    let mut rows = [0u8; MAX_VERTICES];
    for (i, j) in spec.edges() {
        let (mi, mj) = (map(i), map(j));
        if mi >= mj {
            return None;
        }
        rows[mi] |= 1 << mj;
    }
    let mut ops = ArrayVec::from_iter(std::iter::repeat(Op::Conv3x3).take(v - 2));
    for p in 0..v - 2 {
        ops[perm[p]] = spec.ops[p];
    }
    Some(ModelSpec::from_bits(v as u8, rows, ops))
}

/// Row-major (matrix bytes, ops) comparison used to pick class
/// representatives. Both specs must have the same vertex count.
pub(crate) fn lex_cmp(a: &ModelSpec, b: &ModelSpec) -> std::cmp::Ordering {
    debug_assert_eq!(a.num_vertices, b.num_vertices);
    let v = a.num_vertices();
    for i in 0..v {
        for j in 0..v {
            let (x, y) = (a.has_edge(i, j) as u8, b.has_edge(i, j) as u8);
            if x != y {
                return x.cmp(&y);
            }
        }
    }
    let ka: Vec<u8> = a.ops.iter().map(|o| o.code()).collect();
    let kb: Vec<u8> = b.ops.iter().map(|o| o.code()).collect();
    ka.cmp(&kb)
}

/// Lexicographic next-permutation step; false once the last permutation is
/// reached.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// A pruned cell together with its digest. The spec held here is the
/// lexicographically smallest member of the isomorphism class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCell {
    spec: ModelSpec,
    digest: Digest,
}

impl CanonicalCell {
    pub(crate) fn from_parts(spec: ModelSpec, digest: Digest) -> CanonicalCell {
        CanonicalCell { spec, digest }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn num_vertices(&self) -> usize {
        self.spec.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.spec.num_edges()
    }
}
