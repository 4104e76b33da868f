//! Text round-tripping and the continuous relaxation of the encoding.

use super::{ModelSpec, Op, SpecError, MAX_EDGES, NUM_EDGE_SLOTS, NUM_OP_SLOTS};

impl ModelSpec {
    /// Canonical text form: `matrix=<V*V row-major 0/1>;ops=<comma-separated>`.
    pub fn to_text(&self) -> String {
        let v = self.num_vertices();
        let mut out = String::with_capacity(v * v + 64);
        out.push_str("matrix=");
        for i in 0..v {
            for j in 0..v {
                out.push(if self.has_edge(i, j) { '1' } else { '0' });
            }
        }
        out.push_str(";ops=");
        for (k, op) in self.ops().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(op.label());
        }
        out
    }

    /// Parses the canonical text form produced by [`ModelSpec::to_text`].
    pub fn from_text(text: &str) -> Result<ModelSpec, SpecError> {
        let rest = text
            .strip_prefix("matrix=")
            .ok_or_else(|| SpecError::BadText("expected leading matrix= field".into()))?;
        let (bits, ops_part) = rest
            .split_once(";ops=")
            .ok_or_else(|| SpecError::BadText("expected ;ops= separator".into()))?;
        let n = bits.len();
        let v = (n as f64).sqrt().round() as usize;
        if v * v != n {
            return Err(SpecError::BadText(format!("matrix field has {n} digits, not a square")));
        }
        let mut matrix = vec![vec![0u8; v]; v];
        for (idx, ch) in bits.chars().enumerate() {
            matrix[idx / v][idx % v] = match ch {
                '0' => 0,
                '1' => 1,
                other => return Err(SpecError::BadText(format!("matrix digit {other:?}"))),
            };
        }
        let ops: Vec<Op> = if ops_part.is_empty() {
            Vec::new()
        } else {
            ops_part.split(',').map(str::parse).collect::<Result<_, _>>()?
        };
        let rows: Vec<&[u8]> = matrix.iter().map(|r| r.as_slice()).collect();
        ModelSpec::new(&rows, &ops)
    }
}

/// Relaxed encoding: a score per edge slot, a target edge count, and one op
/// label per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousEncoding {
    edge_scores: [f64; NUM_EDGE_SLOTS],
    num_edges: usize,
    ops: [Op; NUM_OP_SLOTS],
}

impl ContinuousEncoding {
    /// Scores must lie in `[0, 1]` and `num_edges` within the edge budget.
    pub fn new(
        edge_scores: [f64; NUM_EDGE_SLOTS],
        num_edges: usize,
        ops: [Op; NUM_OP_SLOTS],
    ) -> Result<ContinuousEncoding, SpecError> {
        if num_edges > MAX_EDGES {
            return Err(SpecError::BadContinuous(format!(
                "num_edges {num_edges} exceeds the edge budget {MAX_EDGES}"
            )));
        }
        if let Some(bad) = edge_scores.iter().find(|s| !(0.0..=1.0).contains(*s) || s.is_nan()) {
            return Err(SpecError::BadContinuous(format!("edge score {bad} outside [0, 1]")));
        }
        Ok(ContinuousEncoding { edge_scores, num_edges, ops })
    }

    pub fn edge_scores(&self) -> &[f64; NUM_EDGE_SLOTS] {
        &self.edge_scores
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn ops(&self) -> &[Op; NUM_OP_SLOTS] {
        &self.ops
    }
}

/// Materializes the `num_edges` highest-scoring edge slots (ties toward the
/// lower slot index) into a padded spec. The result never exceeds the edge
/// budget but may still be invalid for want of an input-to-output path.
pub fn decode_continuous(enc: &ContinuousEncoding) -> ModelSpec {
    let mut order: Vec<usize> = (0..NUM_EDGE_SLOTS).collect();
    order.sort_by(|&a, &b| {
        enc.edge_scores[b].total_cmp(&enc.edge_scores[a]).then(a.cmp(&b))
    });
    let mut rows = [0u8; super::MAX_VERTICES];
    for &slot in order.iter().take(enc.num_edges) {
        let (i, j) = super::EDGE_SLOTS[slot];
        rows[i] |= 1 << j;
    }
    ModelSpec::from_bits(
        super::MAX_VERTICES as u8,
        rows,
        enc.ops.iter().copied().collect(),
    )
}
