//! Principal angles, the performance index and related quality measures.

use serde::{Deserialize, Serialize};

use crate::error::{GjbdError, Result};
use crate::linalg::{condition_number, singular_values, spectral_norm, svd};
use crate::matpoly::MatrixSet;
use crate::partition::Partition;
use crate::refine::offblock_cost;
use crate::scalar::{eps, lit, CMat, Real};

/// Orthonormal basis of the column space of `m`, which must have full
/// column rank.
pub fn orthonormal_basis<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let d = m.ncols();
    let s = svd(m);
    let top = s.singular_values.first().copied().unwrap_or_else(T::zero);
    let rank_tol = lit::<T>(m.nrows().max(d) as f64) * eps::<T>() * top;
    if d > m.nrows() || top <= T::zero() || s.singular_values[d - 1] <= rank_tol {
        return Err(GjbdError::RankDeficient { expected: d });
    }
    Ok(s.u.columns(0, d).clone_owned())
}

/// Largest principal angle between the column spaces of `e` and `f`.
///
/// Computed as `atan2(||(I - Q_E Q_E^H) Q_F||_2, sigma_min(Q_E^H Q_F))`, which
/// keeps full relative accuracy for tiny angles.
pub fn subspace_angle<T: Real>(e: &CMat<T>, f: &CMat<T>) -> Result<T> {
    assert_eq!(e.shape(), f.shape(), "subspaces of different shape");
    let qe = orthonormal_basis(e)?;
    if e == f {
        return Ok(T::zero());
    }
    let qf = orthonormal_basis(f)?;
    let cross = qe.adjoint() * &qf;
    let cos = singular_values(&cross).last().copied().unwrap_or_else(T::zero);
    let sin = spectral_norm(&(&qf - &qe * cross));
    Ok(sin.atan2(cos))
}

/// 2-norm condition number; infinite if `w` is singular.
pub fn condition_2<T: Real>(w: &CMat<T>) -> T {
    condition_number(w)
}

fn block<T: Real>(w: &CMat<T>, partition: &Partition, j: usize) -> CMat<T> {
    let r = partition.range(j);
    w.columns(r.start, r.len()).clone_owned()
}

/// Largest angle between corresponding column blocks of `truth` and `w`,
/// both split by `partition` and paired in order.
pub fn theta<T: Real>(truth: &CMat<T>, w: &CMat<T>, partition: &Partition) -> Result<T> {
    (0..partition.len()).try_fold(T::zero(), |acc, j| {
        Ok(acc.max(subspace_angle(&block(truth, partition, j), &block(w, partition, j))?))
    })
}

/// Angles between every true block `i` and detected block `j` of equal size;
/// `None` where the sizes differ.
pub fn angle_table<T: Real>(
    truth: &CMat<T>,
    true_partition: &Partition,
    w: &CMat<T>,
    partition: &Partition,
) -> Result<Vec<Vec<Option<T>>>> {
    (0..true_partition.len())
        .map(|i| {
            let vi = block(truth, true_partition, i);
            (0..partition.len())
                .map(|j| {
                    if partition.parts()[j] == true_partition.parts()[i] {
                        subspace_angle(&vi, &block(w, partition, j)).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect()
        })
        .collect()
}

/// `min over assignments pi of max_i angle(V_i, W_pi(i))`, exhaustive over the
/// size-compatible assignments. `truth` is the true unmixing matrix split by
/// `true_partition`; `w` is split by `partition`.
pub fn performance_index<T: Real>(
    truth: &CMat<T>,
    true_partition: &Partition,
    w: &CMat<T>,
    partition: &Partition,
) -> Result<T> {
    if !partition.same_sizes(true_partition) {
        return Err(GjbdError::PartitionMismatch {
            detected: partition.parts().to_vec(),
            truth: true_partition.parts().to_vec(),
        });
    }
    let table = angle_table(truth, true_partition, w, partition)?;
    let t = table.len();
    let mut best = lit::<T>(f64::INFINITY);
    let mut used = vec![false; t];
    search(&table, 0, T::zero(), &mut used, &mut best);
    Ok(best)
}

fn search<T: Real>(table: &[Vec<Option<T>>], row: usize, so_far: T, used: &mut [bool], best: &mut T) {
    if so_far >= *best {
        return;
    }
    if row == table.len() {
        *best = so_far;
        return;
    }
    for j in 0..used.len() {
        if let (false, Some(a)) = (used[j], table[row][j]) {
            used[j] = true;
            search(table, row + 1, so_far.max(a), used, best);
            used[j] = false;
        }
    }
}

/// Quality of a recovered diagonalizer against the ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// `None` when the partition sizes do not match.
    pub pi: Option<f64>,
    /// Block angles paired in order; `None` unless the partitions are equal.
    pub theta: Option<f64>,
    pub cond_w: f64,
    pub cost: f64,
    /// Equal multisets of block sizes.
    pub success: bool,
    /// The detected partition merges into the true one.
    pub merge_consistent: bool,
}

pub fn quality_report<T: Real>(
    ms: &MatrixSet<T>,
    truth: &CMat<T>,
    true_partition: &Partition,
    w: &CMat<T>,
    partition: &Partition,
) -> Result<QualityReport> {
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let pi = match performance_index(truth, true_partition, w, partition) {
        Ok(v) => Some(f(v)),
        Err(GjbdError::PartitionMismatch { .. }) => None,
        Err(e) => return Err(e),
    };
    let theta = if partition == true_partition {
        Some(f(theta(truth, w, partition)?))
    } else {
        None
    };
    Ok(QualityReport {
        pi,
        theta,
        cond_w: f(condition_2(w)),
        cost: f(offblock_cost(ms, partition, w)),
        success: pi.is_some(),
        merge_consistent: partition.merges_into(true_partition),
    })
}
