//! Gradient-kernel matrices.
//!
//! The kernel of two inputs at a fixed parameter vector is the dot product
//! of their per-example logit gradients. This module assembles rectangular
//! query-by-basis matrices of that kernel (raw, and cosine-normalized so
//! entries land in `[-1, 1]`), and evaluates the discrete path kernel: the
//! same dot product summed over a trail of per-epoch parameter snapshots.
//!
//! Assembly computes each example's gradient exactly once. Basis gradients
//! are cached for the whole matrix; query gradients are computed per row and
//! dropped, so memory stays `O(n_basis * P)` instead of `O(n_query * P)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, ModelSpec, ParamMask, ParamVector, PerExampleGradient};

/// Self-kernels below this are treated as degenerate (gradient norm under
/// 1e-12): the affected entries normalize to 0 and are counted, not thrown.
pub const DEGENERATE_SELF_KERNEL: f64 = 1e-24;

/// Query rows processed per work unit; keeps a tile of query gradients hot
/// while each basis gradient streams through once per tile.
const ROW_TILE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Raw,
    Normalized,
}

/// Dense query-by-basis kernel matrix with the self-kernel diagonals needed
/// for cosine normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: Vec<f64>,
    rows: usize,
    cols: usize,
    kind: KernelKind,
    query_self: Vec<f64>,
    basis_self: Vec<f64>,
    degenerate_queries: usize,
    degenerate_basis: usize,
}

impl KernelMatrix {
    /// Assemble a matrix from externally produced parts. Intended for
    /// synthetic kernels in tests and tools; lengths must be consistent.
    pub fn from_parts(
        entries: Vec<f64>,
        rows: usize,
        cols: usize,
        kind: KernelKind,
        query_self: Vec<f64>,
        basis_self: Vec<f64>,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "kernel entries",
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if query_self.len() != rows {
            return Err(Error::DimensionMismatch {
                context: "query self-kernels",
                expected: rows,
                got: query_self.len(),
            });
        }
        if basis_self.len() != cols {
            return Err(Error::DimensionMismatch {
                context: "basis self-kernels",
                expected: cols,
                got: basis_self.len(),
            });
        }
        Ok(KernelMatrix {
            entries,
            rows,
            cols,
            kind,
            query_self,
            basis_self,
            degenerate_queries: 0,
            degenerate_basis: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn query_self(&self) -> &[f64] {
        &self.query_self
    }

    pub fn basis_self(&self) -> &[f64] {
        &self.basis_self
    }

    /// Number of degenerate query self-kernels found during normalization.
    pub fn degenerate_queries(&self) -> usize {
        self.degenerate_queries
    }

    /// Number of degenerate basis self-kernels found during normalization.
    pub fn degenerate_basis(&self) -> usize {
        self.degenerate_basis
    }

    /// Row-major CSV, 17 significant digits per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in 0..self.rows {
            let mut first = true;
            for value in self.row(row) {
                if !first {
                    write!(w, ",")?;
                }
                write!(w, "{value:.16e}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Dot product with four independent accumulators. The summation order is
/// fixed, so results are reproducible run to run.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    let (a_head, a_tail) = a.split_at(chunks * 4);
    let (b_head, b_tail) = b.split_at(chunks * 4);
    for (av, bv) in a_head.chunks_exact(4).zip(b_head.chunks_exact(4)) {
        acc[0] += av[0] * bv[0];
        acc[1] += av[1] * bv[1];
        acc[2] += av[2] * bv[2];
        acc[3] += av[3] * bv[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (av, bv) in a_tail.iter().zip(b_tail) {
        sum += av * bv;
    }
    sum
}

/// Kernel of two per-example gradients: their dot product.
pub fn gradient_kernel(a: &PerExampleGradient, b: &PerExampleGradient) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "gradient kernel",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Per-example gradients for a set of examples, masked if requested.
/// Parallel over examples.
pub fn gradients<E>(
    spec: &ModelSpec,
    params: &ParamVector,
    examples: &[E],
    mask: Option<&ParamMask>,
) -> Result<Vec<PerExampleGradient>>
where
    E: AsRef<[f64]> + Sync,
{
    examples
        .par_iter()
        .map(|x| {
            let g = model::per_example_gradient(spec, params, x.as_ref())?;
            match mask {
                Some(m) => {
                    let mut values = g.into_vec();
                    m.zero_excluded(&mut values)?;
                    Ok(PerExampleGradient::from_raw(values))
                }
                None => Ok(g),
            }
        })
        .collect()
}

/// One tile of rows: dot each query gradient against every basis gradient,
/// iterating basis-outer so each basis gradient streams once per tile.
fn tile_rows(
    query_grads: &[PerExampleGradient],
    basis_grads: &[PerExampleGradient],
) -> (Vec<f64>, Vec<f64>) {
    let cols = basis_grads.len();
    let mut entries = vec![0.0; query_grads.len() * cols];
    let self_kernels: Vec<f64> = query_grads
        .iter()
        .map(|g| dot(g.as_slice(), g.as_slice()))
        .collect();
    for (b, bg) in basis_grads.iter().enumerate() {
        for (r, qg) in query_grads.iter().enumerate() {
            entries[r * cols + b] = dot(qg.as_slice(), bg.as_slice());
        }
    }
    (entries, self_kernels)
}

fn check_grad_lengths(
    grads: &[PerExampleGradient],
    expected: usize,
    context: &'static str,
) -> Result<()> {
    for g in grads {
        if g.len() != expected {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got: g.len(),
            });
        }
    }
    Ok(())
}

/// Raw kernel matrix of `queries` against cached basis gradients. Each
/// query's gradient is computed exactly once (for its row) and dropped.
pub fn kernel_matrix_streamed<Q>(
    spec: &ModelSpec,
    params: &ParamVector,
    queries: &[Q],
    basis_grads: &[PerExampleGradient],
    mask: Option<&ParamMask>,
) -> Result<KernelMatrix>
where
    Q: AsRef<[f64]> + Sync,
{
    check_grad_lengths(basis_grads, spec.param_count(), "basis gradients")?;
    let cols = basis_grads.len();
    let basis_self: Vec<f64> = basis_grads
        .iter()
        .map(|g| dot(g.as_slice(), g.as_slice()))
        .collect();

    let tiles: Vec<(Vec<f64>, Vec<f64>)> = queries
        .par_chunks(ROW_TILE)
        .map(|chunk| -> Result<(Vec<f64>, Vec<f64>)> {
            let grads = chunk
                .iter()
                .map(|x| {
                    let g = model::per_example_gradient(spec, params, x.as_ref())?;
                    match mask {
                        Some(m) => {
                            let mut values = g.into_vec();
                            m.zero_excluded(&mut values)?;
                            Ok(PerExampleGradient::from_raw(values))
                        }
                        None => Ok(g),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(tile_rows(&grads, basis_grads))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(queries.len() * cols);
    let mut query_self = Vec::with_capacity(queries.len());
    for (tile_entries, tile_self) in tiles {
        entries.extend_from_slice(&tile_entries);
        query_self.extend_from_slice(&tile_self);
    }

    Ok(KernelMatrix {
        entries,
        rows: queries.len(),
        cols,
        kind: KernelKind::Raw,
        query_self,
        basis_self,
        degenerate_queries: 0,
        degenerate_basis: 0,
    })
}

/// Raw kernel matrix between two example sets.
pub fn kernel_matrix<Q, B>(
    spec: &ModelSpec,
    params: &ParamVector,
    queries: &[Q],
    basis: &[B],
    mask: Option<&ParamMask>,
) -> Result<KernelMatrix>
where
    Q: AsRef<[f64]> + Sync,
    B: AsRef<[f64]> + Sync,
{
    let basis_grads = gradients(spec, params, basis, mask)?;
    kernel_matrix_streamed(spec, params, queries, &basis_grads, mask)
}

/// Raw kernel matrix from precomputed gradients on both sides.
pub fn kernel_matrix_from_gradients(
    query_grads: &[PerExampleGradient],
    basis_grads: &[PerExampleGradient],
) -> Result<KernelMatrix> {
    let width = query_grads
        .first()
        .or_else(|| basis_grads.first())
        .map_or(0, PerExampleGradient::len);
    check_grad_lengths(query_grads, width, "query gradients")?;
    check_grad_lengths(basis_grads, width, "basis gradients")?;

    let cols = basis_grads.len();
    let basis_self: Vec<f64> = basis_grads
        .iter()
        .map(|g| dot(g.as_slice(), g.as_slice()))
        .collect();

    let tiles: Vec<(Vec<f64>, Vec<f64>)> = query_grads
        .par_chunks(ROW_TILE)
        .map(|chunk| tile_rows(chunk, basis_grads))
        .collect();

    let mut entries = Vec::with_capacity(query_grads.len() * cols);
    let mut query_self = Vec::with_capacity(query_grads.len());
    for (tile_entries, tile_self) in tiles {
        entries.extend_from_slice(&tile_entries);
        query_self.extend_from_slice(&tile_self);
    }

    Ok(KernelMatrix {
        entries,
        rows: query_grads.len(),
        cols,
        kind: KernelKind::Raw,
        query_self,
        basis_self,
        degenerate_queries: 0,
        degenerate_basis: 0,
    })
}

/// Cosine-normalize a raw kernel: divide each entry by the geometric mean of
/// the two self-kernels. Degenerate self-kernels (below
/// [`DEGENERATE_SELF_KERNEL`]) zero their row or column and are counted in
/// the result's diagnostics instead of failing the call.
pub fn cosine_normalize(raw: &KernelMatrix) -> Result<KernelMatrix> {
    if raw.kind != KernelKind::Raw {
        return Err(Error::KernelKind {
            expected: KernelKind::Raw,
            got: raw.kind,
        });
    }

    let query_dead: Vec<bool> = raw
        .query_self
        .iter()
        .map(|&s| s < DEGENERATE_SELF_KERNEL)
        .collect();
    let basis_dead: Vec<bool> = raw
        .basis_self
        .iter()
        .map(|&s| s < DEGENERATE_SELF_KERNEL)
        .collect();

    let mut entries = vec![0.0; raw.entries.len()];
    for r in 0..raw.rows {
        if query_dead[r] {
            continue;
        }
        let qs = raw.query_self[r];
        for b in 0..raw.cols {
            if basis_dead[b] {
                continue;
            }
            entries[r * raw.cols + b] =
                raw.entries[r * raw.cols + b] / (qs * raw.basis_self[b]).sqrt();
        }
    }

    Ok(KernelMatrix {
        entries,
        rows: raw.rows,
        cols: raw.cols,
        kind: KernelKind::Normalized,
        query_self: raw.query_self.clone(),
        basis_self: raw.basis_self.clone(),
        degenerate_queries: query_dead.iter().filter(|&&d| d).count(),
        degenerate_basis: basis_dead.iter().filter(|&&d| d).count(),
    })
}

/// Ordered per-epoch parameter snapshots; snapshot 0 is the initialization.
#[derive(Debug, Clone, Default)]
pub struct CheckpointTrail {
    snapshots: Vec<ParamVector>,
}

impl CheckpointTrail {
    pub fn new() -> Self {
        CheckpointTrail::default()
    }

    /// Snapshots must all have the same parameter count.
    pub fn push(&mut self, params: ParamVector) -> Result<()> {
        if let Some(first) = self.snapshots.first() {
            if params.len() != first.len() {
                return Err(Error::DimensionMismatch {
                    context: "checkpoint trail snapshot",
                    expected: first.len(),
                    got: params.len(),
                });
            }
        }
        self.snapshots.push(params);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn get(&self, epoch: usize) -> Option<&ParamVector> {
        self.snapshots.get(epoch)
    }

    pub fn snapshots(&self) -> &[ParamVector] {
        &self.snapshots
    }
}

/// Per-snapshot terms of the discrete path kernel for one example pair.
pub fn path_kernel_contributions(
    spec: &ModelSpec,
    trail: &CheckpointTrail,
    x_i: &[f64],
    x_j: &[f64],
    mask: Option<&ParamMask>,
) -> Result<Vec<f64>> {
    if trail.is_empty() {
        return Err(Error::EmptyInput {
            context: "checkpoint trail",
        });
    }
    trail
        .snapshots
        .iter()
        .map(|params| {
            let pair = [x_i, x_j];
            let grads = gradients(spec, params, &pair, mask)?;
            gradient_kernel(&grads[0], &grads[1])
        })
        .collect()
}

/// Discrete path kernel: the gradient kernel summed over every snapshot of
/// the trail (unit weight per epoch).
pub fn path_kernel(
    spec: &ModelSpec,
    trail: &CheckpointTrail,
    x_i: &[f64],
    x_j: &[f64],
    mask: Option<&ParamMask>,
) -> Result<f64> {
    Ok(path_kernel_contributions(spec, trail, x_i, x_j, mask)?
        .iter()
        .sum())
}
