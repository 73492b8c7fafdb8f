//! Householder QR with greedy column pivoting (Businger and Golub).

use nalgebra::ComplexField;
use num_complex::Complex;

use crate::scalar::{CMat, Real};

#[derive(Clone, Debug)]
pub struct PivotedQr<T: Real> {
    /// `|R(k, k)|` for the steps performed; non-increasing.
    pub r_diag: Vec<T>,
    /// Column order: `pivot[k]` is the input column moved to position `k`.
    pub pivot: Vec<usize>,
}

/// Column-pivoted QR of `a`, stopping after `steps` columns.
///
/// Each step moves the remaining column of largest residual norm to the
/// front; ties go to the lowest original column index. Residual norms are
/// recomputed rather than downdated.
pub fn pivoted_qr<T: Real>(a: &CMat<T>, steps: usize) -> PivotedQr<T> {
    let (rows, cols) = a.shape();
    let steps = steps.min(rows).min(cols);
    let mut w = a.clone();
    let mut pivot: Vec<usize> = (0..cols).collect();
    let mut r_diag = Vec::with_capacity(steps);

    for k in 0..steps {
        let mut best = k;
        let mut best_norm = T::zero();
        for c in k..cols {
            let nrm = w.view((k, c), (rows - k, 1)).norm();
            if nrm > best_norm || (nrm == best_norm && pivot[c] < pivot[best]) {
                best = c;
                best_norm = nrm;
            }
        }
        w.swap_columns(k, best);
        pivot.swap(k, best);
        r_diag.push(best_norm);
        if best_norm == T::zero() {
            continue;
        }

        let x0 = w[(k, k)];
        let x0m = x0.modulus();
        let phase = if x0m > T::zero() {
            x0 / Complex::from(x0m)
        } else {
            Complex::from(T::one())
        };
        let mut v = w.view((k, k), (rows - k, 1)).clone_owned();
        v[0] += phase * Complex::from(best_norm);
        let vv = v.norm_squared();
        if vv == T::zero() {
            continue;
        }
        let two = T::one() + T::one();
        for c in (k + 1)..cols {
            let mut col = w.view_mut((k, c), (rows - k, 1));
            let proj = v.dotc(&col) * Complex::from(two / vv);
            col -= &v * proj;
        }
        w[(k, k)] = -phase * Complex::from(best_norm);
        for r in (k + 1)..rows {
            w[(r, k)] = Complex::from(T::zero());
        }
    }
    PivotedQr { r_diag, pivot }
}
