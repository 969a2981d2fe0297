//! Plain-text matrix blocks.
//!
//! ```text
//! # comment
//! matrix <label> <rows> <cols>
//! <re> <im>        (rows * cols lines, row-major)
//! ```

use std::fmt::Write as _;

use crate::encoder::EncoderPipeline;
use crate::error::{Error, Result};
use crate::numkit::{c64, ComplexMatrix};
use crate::qstate::{DensityMatrix, HilbertSpace, Projector, PureState};

pub fn format_matrices(blocks: &[(&str, &ComplexMatrix)]) -> String {
    let mut s = String::new();
    for (label, m) in blocks {
        let _ = writeln!(s, "matrix {label} {} {}", m.rows(), m.cols());
        for z in m.as_slice() {
            let _ = writeln!(s, "{:.17e} {:.17e}", z.re, z.im);
        }
    }
    s
}

pub fn parse_matrices(text: &str) -> Result<Vec<(String, ComplexMatrix)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut out = Vec::new();
    while let Some((no, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (label, rows, cols) = match parts.as_slice() {
            ["matrix", label, r, c] => (
                label.to_string(),
                r.parse::<usize>().map_err(|e| Error::Parse(format!("line {no}: {e}")))?,
                c.parse::<usize>().map_err(|e| Error::Parse(format!("line {no}: {e}")))?,
            ),
            _ => return Err(Error::Parse(format!("line {no}: expected `matrix <label> <rows> <cols>`"))),
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix {label}: expected {} entries", rows * cols)))?;
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {no}: {e}")))?;
            match nums.as_slice() {
                [re] => data.push(c64(*re, 0.0)),
                [re, im] => data.push(c64(*re, *im)),
                _ => return Err(Error::Parse(format!("line {no}: expected `<re> [<im>]`"))),
            }
        }
        out.push((label, ComplexMatrix::new(rows, cols, data)?));
    }
    Ok(out)
}

/// Qubit register when `dim` is a power of two, a single qudit otherwise.
pub fn space_for_dim(dim: usize) -> HilbertSpace {
    if dim >= 2 && dim.is_power_of_two() {
        HilbertSpace::qubits(dim.trailing_zeros() as usize)
    } else {
        HilbertSpace::qudit(dim)
    }
}

fn find<'a>(blocks: &'a [(String, ComplexMatrix)], label: &str) -> Result<&'a ComplexMatrix> {
    blocks
        .iter()
        .find(|(l, _)| l == label)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::Parse(format!("no `{label}` matrix")))
}

pub fn write_pipeline(p: &EncoderPipeline) -> String {
    let mut s = format!("# encoder pipeline, latent dimension {}\n", p.latent_dim());
    s.push_str(&format_matrices(&[
        ("unitary", p.encode_unitary()),
        ("latent", p.latent_projector().matrix()),
    ]));
    s
}

/// Pipeline from `unitary` and `latent` blocks.
pub fn read_pipeline(text: &str) -> Result<EncoderPipeline> {
    let blocks = parse_matrices(text)?;
    let u = find(&blocks, "unitary")?;
    let latent = find(&blocks, "latent")?;
    let space = space_for_dim(u.rows());
    EncoderPipeline::new(u.clone(), Projector::new(space, latent.clone())?)
}

/// State from a `state` block: an `N x N` density matrix or an `N x 1` vector.
pub fn read_state(text: &str) -> Result<DensityMatrix> {
    let blocks = parse_matrices(text)?;
    let m = find(&blocks, "state")?;
    let space = space_for_dim(m.rows());
    match m.cols() {
        1 => Ok(PureState::normalized(space, m.column(0))?.density()),
        c if c == m.rows() => DensityMatrix::new(space, m.clone()),
        c => Err(Error::DimensionMismatch(format!("state block is {} x {c}", m.rows()))),
    }
}
