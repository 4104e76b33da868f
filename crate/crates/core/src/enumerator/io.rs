//! Plain-text index files.
//!
//! Layout: one header line, then one line per cell in digest order.
//!
//! ```text
//! NASBENCH-SPACE v1 max_vertices=7 max_edges=9 ops=CONV3X3,CONV1X1,MAXPOOL3X3 count=423624
//! <digest> <vertices> <edges> <row-major 0/1 matrix> <ops, comma-separated, "-" if none>
//! ```
//!
//! Reading validates structure throughout: header fields, record shape,
//! strictly increasing digests, the advertised count, and full prunedness of
//! every cell. Digests are recomputed on a deterministic sample of records
//! (first, last, every 1024th) rather than all of them, which catches
//! wholesale corruption without making every load pay the full hashing cost.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::cellspec::{wl_digest, CanonicalCell, Digest, ModelSpec, Op};

use super::{SpaceIndex, SpaceParams};

const MAGIC: &str = "NASBENCH-SPACE v1";
const OPS_FIELD: &str = "CONV3X3,CONV1X1,MAXPOOL3X3";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad space parameters: {0}")]
    BadParams(String),
    #[error("bad index header: {0}")]
    BadHeader(String),
    #[error("bad index record at line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("digests not strictly increasing at line {line}")]
    OrderViolation { line: usize },
    #[error("header advertises {expected} cells, file has {found}")]
    CountMismatch { expected: usize, found: usize },
}

pub fn write_index<W: Write>(index: &SpaceIndex, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(
        w,
        "{MAGIC} max_vertices={} max_edges={} ops={OPS_FIELD} count={}",
        index.params().max_vertices(),
        index.params().max_edges(),
        index.len()
    )?;
    for cell in index.cells() {
        let spec = cell.spec();
        write!(w, "{} {} {} ", cell.digest(), spec.num_vertices(), spec.num_edges())?;
        for i in 0..spec.num_vertices() {
            for j in 0..spec.num_vertices() {
                w.write_all(if spec.has_edge(i, j) { b"1" } else { b"0" })?;
            }
        }
        if spec.ops().is_empty() {
            w.write_all(b" -\n")?;
        } else {
            let labels: Vec<&str> = spec.ops().iter().map(|op| op.label()).collect();
            writeln!(w, " {}", labels.join(","))?;
        }
    }
    w.flush()
}

pub fn write_index_file<P: AsRef<Path>>(index: &SpaceIndex, path: P) -> io::Result<()> {
    write_index(index, File::create(path)?)
}

pub fn read_index<R: BufRead>(reader: R) -> Result<SpaceIndex, IndexError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| IndexError::BadHeader("empty file".into()))??;
    let (params, expected) = parse_header(&header)?;

    let mut cells: Vec<CanonicalCell> = Vec::with_capacity(expected);
    for (number, line) in lines.enumerate() {
        let line = line?;
        let lineno = number + 2;
        if line.is_empty() {
            return Err(IndexError::BadRecord { line: lineno, reason: "empty line".into() });
        }
        let cell = parse_record(&line, lineno, params)?;
        if let Some(prev) = cells.last() {
            if prev.digest() >= cell.digest() {
                return Err(IndexError::OrderViolation { line: lineno });
            }
        }
        let sampled = cells.len() % 1024 == 0 || cells.len() + 1 == expected;
        if sampled && wl_digest(cell.spec()) != *cell.digest() {
            return Err(IndexError::BadRecord {
                line: lineno,
                reason: "stored digest does not match the cell".into(),
            });
        }
        cells.push(cell);
    }
    if cells.len() != expected {
        return Err(IndexError::CountMismatch { expected, found: cells.len() });
    }
    Ok(SpaceIndex::from_sorted_cells(params, cells))
}

pub fn read_index_file<P: AsRef<Path>>(path: P) -> Result<SpaceIndex, IndexError> {
    read_index(BufReader::new(File::open(path)?))
}

fn parse_header(header: &str) -> Result<(SpaceParams, usize), IndexError> {
    let bad = |reason: &str| IndexError::BadHeader(format!("{reason}: {header:?}"));
    let rest = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| bad("expected NASBENCH-SPACE v1 magic"))?;
    let mut fields = rest.split(' ');
    let mut field = |key: &str| -> Result<String, IndexError> {
        fields
            .next()
            .and_then(|f| f.strip_prefix(key))
            .and_then(|f| f.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| bad(&format!("expected {key}= field")))
    };
    let max_vertices: usize =
        field("max_vertices")?.parse().map_err(|_| bad("max_vertices not a number"))?;
    let max_edges: usize =
        field("max_edges")?.parse().map_err(|_| bad("max_edges not a number"))?;
    let ops = field("ops")?;
    if ops != OPS_FIELD {
        return Err(bad("unsupported op set"));
    }
    let count: usize = field("count")?.parse().map_err(|_| bad("count not a number"))?;
    let params = SpaceParams::new(max_vertices, max_edges)?;
    Ok((params, count))
}

fn parse_record(line: &str, lineno: usize, params: SpaceParams) -> Result<CanonicalCell, IndexError> {
    let bad = |reason: String| IndexError::BadRecord { line: lineno, reason };
    let fields: Vec<&str> = line.split(' ').collect();
    let [digest, vertices, edges, matrix, ops] = fields[..] else {
        return Err(bad(format!("expected 5 fields, got {}", fields.len())));
    };
    let digest: Digest = digest.parse().map_err(|_| bad("malformed digest".into()))?;
    let v: usize = vertices.parse().map_err(|_| bad("vertex count not a number".into()))?;
    let e: usize = edges.parse().map_err(|_| bad("edge count not a number".into()))?;
    if matrix.len() != v * v {
        return Err(bad(format!("matrix has {} digits, expected {}", matrix.len(), v * v)));
    }
    let mut grid = vec![vec![0u8; v]; v];
    for (idx, ch) in matrix.chars().enumerate() {
        grid[idx / v][idx % v] = match ch {
            '0' => 0,
            '1' => 1,
            other => return Err(bad(format!("matrix digit {other:?}"))),
        };
    }
    let ops: Vec<Op> = if ops == "-" {
        Vec::new()
    } else {
        ops.split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|err| bad(format!("{err}")))?
    };
    let rows: Vec<&[u8]> = grid.iter().map(|r| r.as_slice()).collect();
    let spec = ModelSpec::new(&rows, &ops).map_err(|err| bad(format!("{err}")))?;
    if spec.num_vertices() > params.max_vertices() || spec.num_edges() > params.max_edges() {
        return Err(bad("cell exceeds the space parameters".into()));
    }
    if spec.num_edges() != e {
        return Err(bad(format!("edge field {e} but matrix has {} edges", spec.num_edges())));
    }
    if !spec.is_valid() {
        return Err(bad("cell is not a valid spec".into()));
    }
    if !spec.is_fully_pruned() {
        return Err(bad("cell is not fully pruned".into()));
    }
    Ok(CanonicalCell::from_parts(spec, digest))
}
