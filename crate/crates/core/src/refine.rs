//! Alternating SVD refinement of the diagonalizer, the off-block cost, and
//! extraction of a real diagonalizer.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex;

use crate::error::{GjbdError, Result};
use crate::linalg::{singular_values, smallest_right_singular_vectors, smallest_right_singular_vectors_real};
use crate::matpoly::MatrixSet;
use crate::partition::{off_bdiag, Partition};
use crate::scalar::{eps, lit, to_complex, CMat, Real};

/// `f(W) = sum_i ||OffBdiag(W^H A_i W)||_F^2`.
pub fn offblock_cost<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>) -> T {
    per_matrix_residuals(ms, partition, w)
        .iter()
        .fold(T::zero(), |acc, &(off, _)| acc + off * off)
}

/// `(||OffBdiag(W^H A_i W)||_F, ||W^H A_i W||_F)` for every `i`.
pub fn per_matrix_residuals<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>) -> Vec<(T, T)> {
    ms.congruence(w)
        .iter()
        .map(|c| (off_bdiag(c, partition).norm(), c.norm()))
        .collect()
}

/// Cost relative to `sum_i ||W^H A_i W||_F^2`.
pub fn relative_cost<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>) -> T {
    let (off, total) = per_matrix_residuals(ms, partition, w)
        .iter()
        .fold((T::zero(), T::zero()), |(o, t), &(a, b)| (o + a * a, t + b * b));
    if total > T::zero() {
        off / total
    } else {
        off
    }
}

/// `sigma_min(W) / sigma_max(W)`.
pub fn inverse_condition<T: Real>(w: &CMat<T>) -> T {
    let s = singular_values(w);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > T::zero() => lo / hi,
        _ => T::zero(),
    }
}

/// Nonsingularity certificate: `sigma_min > n eps sigma_max`.
pub fn is_certified_nonsingular<T: Real>(w: &CMat<T>) -> bool {
    inverse_condition(w) > lit::<T>(w.ncols() as f64) * eps::<T>()
}

pub fn is_real_matrix<T: Real>(w: &CMat<T>) -> bool {
    w.iter().all(|z| z.im.is_zero())
}

/// Columns of `w` outside block `j`.
fn complement<T: Real>(partition: &Partition, w: &CMat<T>, j: usize) -> CMat<T> {
    let block = partition.range(j);
    let keep: Vec<usize> = (0..w.ncols()).filter(|c| !block.contains(c)).collect();
    CMat::from_fn(w.nrows(), keep.len(), |r, c| w[(r, keep[c])])
}

/// The stacked matrix whose smallest right singular vectors give the new
/// block `j`: `(A_i W_-j)^H`, interleaved with `(A_i^H W_-j)^H` unless the set
/// is Hermitian.
pub fn stacked_matrix<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>, j: usize) -> CMat<T> {
    let rest = complement(partition, w, j);
    let n = w.nrows();
    let m = rest.ncols();
    let per = if ms.hermitian() { 1 } else { 2 };
    let mut out = CMat::<T>::zeros(per * m * ms.matrices().len(), n);
    let mut row = 0;
    for a in ms.matrices() {
        out.view_mut((row, 0), (m, n)).copy_from(&(a * &rest).adjoint());
        row += m;
        if per == 2 {
            out.view_mut((row, 0), (m, n)).copy_from(&(a.adjoint() * &rest).adjoint());
            row += m;
        }
    }
    out
}

/// Replaces block `j` of `w` by the right singular vectors of the stacked
/// matrix for its smallest singular values. Real data with a real `w`
/// stays real. Fails, leaving `w` untouched, if
/// the result is not certified nonsingular.
pub fn refine_block<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>, j: usize) -> Result<CMat<T>> {
    let block = partition.range(j);
    let stacked = stacked_matrix(ms, partition, w, j);
    let vecs = if ms.is_real() && is_real_matrix(w) {
        let real = stacked.map(|z| z.re);
        to_complex(&smallest_right_singular_vectors_real(&real, block.len()).0)
    } else {
        smallest_right_singular_vectors(&stacked, block.len()).0
    };
    let mut next = w.clone();
    next.columns_mut(block.start, block.len()).copy_from(&vecs);
    if !is_certified_nonsingular(&next) {
        return Err(GjbdError::RankCollapse {
            block: j,
            ratio: inverse_condition(&next).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(next)
}

/// A partition and diagonalizer with its residuals.
#[derive(Clone, Debug)]
pub struct Solution<T: Real> {
    pub partition: Partition,
    pub w_mat: CMat<T>,
    pub cost: T,
    pub per_matrix_residuals: Vec<(T, T)>,
    pub refine_loops: usize,
    pub is_real: bool,
}

impl<T: Real> Solution<T> {
    pub fn new(ms: &MatrixSet<T>, partition: Partition, w_mat: CMat<T>, refine_loops: usize) -> Self {
        let per_matrix_residuals = per_matrix_residuals(ms, &partition, &w_mat);
        let cost = per_matrix_residuals.iter().fold(T::zero(), |acc, &(off, _)| acc + off * off);
        let is_real = is_real_matrix(&w_mat);
        Solution { partition, w_mat, cost, per_matrix_residuals, refine_loops, is_real }
    }

    /// Largest `||OffBdiag(W^H A_i W)||_F / ||W^H A_i W||_F`.
    pub fn max_relative_residual(&self) -> T {
        self.per_matrix_residuals.iter().fold(T::zero(), |acc, &(off, total)| {
            let r = if total > T::zero() { off / total } else { off };
            acc.max(r)
        })
    }
}

/// Refinement loop options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineOptions {
    pub loops: usize,
    /// Stop once a loop improves the cost by less than this relative amount.
    pub early_stop: Option<f64>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { loops: 3, early_stop: None }
    }
}

/// Runs `loops` sweeps of [`refine_block`] over all blocks.
pub fn refine<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>, loops: usize) -> Result<Solution<T>> {
    refine_with(ms, partition, w, &RefineOptions { loops, early_stop: None })
}

pub fn refine_with<T: Real>(
    ms: &MatrixSet<T>,
    partition: &Partition,
    w: &CMat<T>,
    opts: &RefineOptions,
) -> Result<Solution<T>> {
    let mut current = w.clone();
    let mut cost = offblock_cost(ms, partition, &current);
    let mut done = 0;
    for _ in 0..opts.loops {
        for j in 0..partition.len() {
            current = refine_block(ms, partition, &current, j)?;
        }
        done += 1;
        let next_cost = offblock_cost(ms, partition, &current);
        let stop = opts
            .early_stop
            .is_some_and(|tol| cost - next_cost < lit::<T>(tol) * cost);
        cost = next_cost;
        if stop {
            break;
        }
    }
    Ok(Solution::new(ms, partition.clone(), current, done))
}

/// Per block, the leading left singular vectors of `[Re W_j, Im W_j]`.
/// Blocks of the result have orthonormal columns.
pub fn realify_unchecked<T: Real>(partition: &Partition, w: &CMat<T>) -> DMatrix<T> {
    let n = w.nrows();
    let mut out = DMatrix::<T>::zeros(n, w.ncols());
    for range in partition.ranges() {
        let nj = range.len();
        let stack = DMatrix::<T>::from_fn(n, 2 * nj, |r, c| {
            let z = w[(r, range.start + c % nj)];
            if c < nj {
                z.re
            } else {
                z.im
            }
        });
        let svd = SVD::new(stack, true, false);
        let u = svd.u.expect("left vectors requested");
        out.columns_mut(range.start, nj).copy_from(&u.columns(0, nj));
    }
    out
}

/// Relative costs below this are treated as zero when comparing the real and
/// complex diagonalizers.
fn realify_floor<T: Real>() -> T {
    let e = eps::<T>();
    lit::<T>(1e8) * e * e
}

/// [`realify_unchecked`] plus the check that the real diagonalizer is not
/// more than 10 times worse (in relative cost) than `w`.
pub fn realify<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>) -> Result<DMatrix<T>> {
    if !ms.is_real() {
        return Err(GjbdError::NotReal);
    }
    let real = realify_unchecked(partition, w);
    check_realified(ms, partition, w, &real)?;
    Ok(real)
}

/// Err with [`GjbdError::AssumptionAViolation`] if the real diagonalizer's
/// relative cost exceeds 10 times that of the complex one.
pub fn check_realified<T: Real>(ms: &MatrixSet<T>, partition: &Partition, w: &CMat<T>, real: &DMatrix<T>) -> Result<()> {
    let complex_cost = relative_cost(ms, partition, w);
    let real_cost = relative_cost(ms, partition, &real.map(|x| Complex::new(x, T::zero())));
    if real_cost > lit::<T>(10.0) * complex_cost.max(realify_floor()) {
        return Err(GjbdError::AssumptionAViolation {
            real_cost: real_cost.to_f64().unwrap_or(f64::NAN),
            complex_cost: complex_cost.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_instance;
    use crate::scalar::cplx;

    #[test]
    fn zero_loops_leave_w_alone() {
        let part = Partition::new(vec![1, 2]).unwrap();
        let inst = random_instance::<f64>(3, &part, 2, 40.0, 1, false).unwrap();
        let w = inst.unmixing();
        let sol = refine(&inst.ms, &part, &w, 0).unwrap();
        assert_eq!(sol.w_mat, w);
        assert_eq!(sol.cost, offblock_cost(&inst.ms, &part, &w));
        assert_eq!(sol.refine_loops, 0);
    }

    #[test]
    fn stacked_matrix_measures_block_coupling() {
        let part = Partition::new(vec![2, 1, 2]).unwrap();
        let inst = random_instance::<f64>(5, &part, 2, 20.0, 2, false).unwrap();
        let w = inst.unmixing();
        let congr = inst.ms.congruence(&w);
        for j in 0..part.len() {
            let b = stacked_matrix(&inst.ms, &part, &w, j);
            let wj = w.columns(part.range(j).start, part.range(j).len()).clone_owned();
            let lhs = (&b * wj).norm_squared();
            let block = part.range(j);
            let mut rhs = 0.0;
            for c in &congr {
                for r in 0..5 {
                    for k in block.clone() {
                        if !block.contains(&r) {
                            rhs += c[(k, r)].norm_sqr() + c[(r, k)].norm_sqr();
                        }
                    }
                }
            }
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn real_blocks_are_orthonormal() {
        let w = CMat::<f64>::from_fn(4, 4, |r, c| cplx((r + c) as f64 + 0.5 * (r * c) as f64, (r as f64) - (c as f64)));
        let part = Partition::new(vec![3, 1]).unwrap();
        let real = realify_unchecked(&part, &w);
        for range in part.ranges() {
            let b = real.columns(range.start, range.len());
            let g = b.transpose() * b;
            assert!((g - DMatrix::identity(range.len(), range.len())).norm() < 1e-12);
        }
    }
}
