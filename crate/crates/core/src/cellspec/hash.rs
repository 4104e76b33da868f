//! Isomorphism-invariant cell digests.
//!
//! Vertex fingerprints start from `(in-degree, out-degree, label)` and are
//! refined for `V` rounds by hashing the sorted fingerprint multisets of the
//! in- and out-neighborhoods. The cell digest hashes the sorted final
//! fingerprints, so it cannot depend on vertex numbering. Every hash is
//! SHA-256 over a tagged, length-delimited byte layout, truncated to its
//! first 16 bytes:
//!
//! * vertex init: `0x01 || in_degree || out_degree || label`
//! * refinement:  `0x02 || n_in || in fingerprints (sorted) || n_out ||
//!   out fingerprints (sorted) || own fingerprint`
//! * cell digest: `0x03 || V || vertex fingerprints (sorted)`
//!
//! Counts and degrees are single bytes; fingerprints are 16 bytes each. The
//! input and output vertices hash with reserved labels 254 and 255, distinct
//! from the three op codes.

use sha2::{Digest as _, Sha256};

use super::{Digest, ModelSpec, MAX_VERTICES};

const TAG_INIT: u8 = 0x01;
const TAG_ROUND: u8 = 0x02;
const TAG_FINAL: u8 = 0x03;
const INPUT_LABEL: u8 = 254;
const OUTPUT_LABEL: u8 = 255;

type Fp = [u8; 16];

fn truncate(full: [u8; 32]) -> Fp {
    let mut out = [0u8; 16];
    out.copy_from_slice(&full[..16]);
    out
}

/// Digest of a pruned spec. Callers prune first; the fingerprint rounds
/// assume every vertex participates in the cell.
pub(crate) fn wl_digest(spec: &ModelSpec) -> Digest {
    let v = spec.num_vertices();
    let mut cols = [0u8; MAX_VERTICES];
    for i in 0..v {
        let bits = spec.row_bits(i);
        for j in i + 1..v {
            if bits & (1 << j) != 0 {
                cols[j] |= 1 << i;
            }
        }
    }

    let mut fps: [Fp; MAX_VERTICES] = [[0; 16]; MAX_VERTICES];
    for i in 0..v {
        let label = if i == 0 {
            INPUT_LABEL
        } else if i == v - 1 {
            OUTPUT_LABEL
        } else {
            spec.ops()[i - 1].code()
        };
        let mut h = Sha256::new();
        h.update([TAG_INIT, cols[i].count_ones() as u8, spec.row_bits(i).count_ones() as u8, label]);
        fps[i] = truncate(h.finalize().into());
    }

    let mut next: [Fp; MAX_VERTICES] = [[0; 16]; MAX_VERTICES];
    for _ in 0..v {
        for i in 0..v {
            let mut incoming: Vec<&Fp> = (0..i).filter(|&j| cols[i] & (1 << j) != 0).map(|j| &fps[j]).collect();
            let mut outgoing: Vec<&Fp> =
                (i + 1..v).filter(|&j| spec.row_bits(i) & (1 << j) != 0).map(|j| &fps[j]).collect();
            incoming.sort_unstable();
            outgoing.sort_unstable();
            let mut h = Sha256::new();
            h.update([TAG_ROUND, incoming.len() as u8]);
            for fp in incoming {
                h.update(fp);
            }
            h.update([outgoing.len() as u8]);
            for fp in outgoing {
                h.update(fp);
            }
            h.update(fps[i]);
            next[i] = truncate(h.finalize().into());
        }
        fps[..v].copy_from_slice(&next[..v]);
    }

    let mut all: Vec<Fp> = fps[..v].to_vec();
    all.sort_unstable();
    let mut h = Sha256::new();
    h.update([TAG_FINAL, v as u8]);
    for fp in &all {
        h.update(fp);
    }
    Digest(truncate(h.finalize().into()))
}

#[cfg(test)]
mod tests {
    use super::super::{samples, Op};

    #[test]
    fn digest_is_stable_across_calls() {
        let spec = samples::chain(&[Op::Conv3x3, Op::Conv1x1]);
        assert_eq!(spec.canonical_hash().unwrap(), spec.canonical_hash().unwrap());
    }

    #[test]
    fn digest_depends_on_labels() {
        let a = samples::chain(&[Op::Conv3x3]);
        let b = samples::chain(&[Op::MaxPool3x3]);
        assert_ne!(a.canonical_hash().unwrap(), b.canonical_hash().unwrap());
    }

    #[test]
    fn digest_ignores_pruned_decoration() {
        let trivial = samples::trivial();
        let padded = trivial.pad_to_full();
        assert_eq!(trivial.canonical_hash().unwrap(), padded.canonical_hash().unwrap());
    }
}
