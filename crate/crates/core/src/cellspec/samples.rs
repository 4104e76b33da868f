//! Hand-picked cells used across tests, docs, and benchmark baselines.

use super::{ModelSpec, Op};

/// The smallest valid cell: input wired straight to output.
pub fn trivial() -> ModelSpec {
    ModelSpec::new(&[&[0, 1], &[0, 0]], &[]).unwrap()
}

/// A straight-line cell threading one vertex per op.
pub fn chain(ops: &[Op]) -> ModelSpec {
    let v = ops.len() + 2;
    let mut matrix = vec![vec![0u8; v]; v];
    for i in 0..v - 1 {
        matrix[i][i + 1] = 1;
    }
    let rows: Vec<&[u8]> = matrix.iter().map(|r| r.as_slice()).collect();
    ModelSpec::new(&rows, ops).unwrap()
}

/// Two stacked 3x3 convolutions plus an identity skip from input to output,
/// so the output sums the branch with the skip.
pub fn resnet_like() -> ModelSpec {
    ModelSpec::new(
        &[
            &[0, 1, 0, 1],
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
            &[0, 0, 0, 0],
        ],
        &[Op::Conv3x3, Op::Conv3x3],
    )
    .unwrap()
}

/// Three parallel branches from the input (a 1x1, a 3x3, and a stacked pair
/// of 3x3s) concatenated at the output.
pub fn inception_like() -> ModelSpec {
    ModelSpec::new(
        &[
            &[0, 1, 1, 1, 0, 0],
            &[0, 0, 0, 0, 0, 1],
            &[0, 0, 0, 0, 0, 1],
            &[0, 0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 0, 1],
            &[0, 0, 0, 0, 0, 0],
        ],
        &[Op::Conv1x1, Op::Conv3x3, Op::Conv3x3, Op::Conv3x3],
    )
    .unwrap()
}
