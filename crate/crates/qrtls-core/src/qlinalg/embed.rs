//! Index machinery for multi-qubit operators: embedding a small unitary onto
//! selected qubits of a larger register and partial traces over discarded
//! qubits. Qubit 0 is the most significant bit of the basis index.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::LinalgError;

fn check_qubits(qubits: &[usize], qubit_count: usize) -> Result<(), LinalgError> {
    if qubits.is_empty() {
        return Err(LinalgError::EmptyQubitSet);
    }
    let mut seen = vec![false; qubit_count];
    for &q in qubits {
        if q >= qubit_count {
            return Err(LinalgError::QubitOutOfRange { index: q, qubit_count });
        }
        if seen[q] {
            return Err(LinalgError::DuplicateQubit { index: q });
        }
        seen[q] = true;
    }
    Ok(())
}

/// Bit weight of qubit `q` in an `n`-qubit basis index (big-endian).
#[inline]
fn weight(q: usize, n: usize) -> usize {
    1usize << (n - 1 - q)
}

/// For each local index over `qubits` (in the given qubit order), the
/// contribution to the global basis index.
fn scatter_table(qubits: &[usize], n: usize) -> Vec<usize> {
    let k = qubits.len();
    let mut table = vec![0usize; 1 << k];
    for (local, entry) in table.iter_mut().enumerate() {
        let mut global = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            if (local >> (k - 1 - pos)) & 1 == 1 {
                global |= weight(q, n);
            }
        }
        *entry = global;
    }
    table
}

/// Expand a 2^k x 2^k operator acting on `targets` (ordered: the operator's
/// own qubit 0 maps to `targets[0]`, and so on) into the full 2^n x 2^n
/// operator that is identity on every other qubit.
pub fn embed_unitary(
    u: &ComplexMatrix,
    n_qubits: usize,
    targets: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    check_qubits(targets, n_qubits)?;
    let k = targets.len();
    if !u.is_square() {
        return Err(LinalgError::NotSquare { rows: u.rows(), cols: u.cols() });
    }
    if u.rows() != (1 << k) {
        return Err(LinalgError::DimMismatch { left: u.rows(), right: 1 << k });
    }
    let dim = 1usize << n_qubits;
    let target_scatter = scatter_table(targets, n_qubits);
    let rest: Vec<usize> = (0..n_qubits).filter(|q| !targets.contains(q)).collect();
    let rest_scatter = scatter_table_allow_empty(&rest, n_qubits);

    let mut out = ComplexMatrix::zeros(dim, dim);
    for &rest_bits in &rest_scatter {
        for (row_local, &row_t) in target_scatter.iter().enumerate() {
            let row = rest_bits | row_t;
            for (col_local, &col_t) in target_scatter.iter().enumerate() {
                let v = u.get(row_local, col_local);
                if v != Complex64::ZERO {
                    out.set(row, rest_bits | col_t, v);
                }
            }
        }
    }
    Ok(out)
}

fn scatter_table_allow_empty(qubits: &[usize], n: usize) -> Vec<usize> {
    if qubits.is_empty() {
        vec![0]
    } else {
        scatter_table(qubits, n)
    }
}

/// Partial trace of an arbitrary 2^n x 2^n operator, keeping `keep` (indices
/// are deduplicated and the output qubit order is ascending original index).
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    qubit_count: usize,
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() != (1 << qubit_count) {
        return Err(LinalgError::DimMismatch { left: m.rows(), right: 1 << qubit_count });
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        // Report the first duplicate for the error message.
        let mut seen = vec![false; qubit_count];
        for &q in keep {
            if q < qubit_count && seen[q] {
                return Err(LinalgError::DuplicateQubit { index: q });
            }
            if q < qubit_count {
                seen[q] = true;
            }
        }
    }
    check_qubits(&keep_sorted, qubit_count)?;

    let traced: Vec<usize> = (0..qubit_count).filter(|q| !keep_sorted.contains(q)).collect();
    let keep_scatter = scatter_table(&keep_sorted, qubit_count);
    let trace_scatter = scatter_table_allow_empty(&traced, qubit_count);

    let out_dim = 1usize << keep_sorted.len();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (i, &ik) in keep_scatter.iter().enumerate() {
        for (j, &jk) in keep_scatter.iter().enumerate() {
            let mut sum = Complex64::ZERO;
            for &t in &trace_scatter {
                sum += m.get(ik | t, jk | t);
            }
            out.set(i, j, sum);
        }
    }
    Ok(out)
}
