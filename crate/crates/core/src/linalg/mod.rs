//! Dense kernels not provided by nalgebra in the form the solver needs.

pub mod pivoted_qr;
pub mod qz;

use nalgebra::{ComplexField, DMatrix, SVD};

use crate::scalar::{czero, lit, CMat, Real};

/// Singular value decomposition with singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    /// Left singular vectors, one per column.
    pub u: CMat<T>,
    pub singular_values: Vec<T>,
    /// Right singular vectors, one per column.
    pub v: CMat<T>,
}

/// Thin SVD of `m`. Equal singular values keep the order of the underlying
/// routine, so the result is deterministic for a fixed input.
pub fn svd<T: Real>(m: &CMat<T>) -> Svd<T> {
    let raw = SVD::new_unordered(m.clone(), true, true);
    let u = raw.u.expect("left vectors requested");
    let v_t = raw.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..raw.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .partial_cmp(&raw.singular_values[a])
            .expect("singular value is NaN")
            .then(a.cmp(&b))
    });
    Svd {
        u: CMat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&k| raw.singular_values[k]).collect(),
        v: CMat::from_fn(v_t.ncols(), order.len(), |r, c| v_t[(order[c], r)].conjugate()),
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<T> = m.clone().singular_values_unordered().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("singular value is NaN"));
    s
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// The `k` right singular vectors of `m` belonging to its `k` smallest
/// singular values, smallest first. A wide `m` is
/// padded with zero rows so that its null space is represented.
pub fn smallest_right_singular_vectors<T: Real>(m: &CMat<T>, k: usize) -> (CMat<T>, Vec<T>) {
    let cols = m.ncols();
    assert!(k <= cols, "asked for {k} of {cols} singular vectors");
    let square;
    let m = if m.nrows() < cols {
        square = CMat::from_fn(cols, cols, |r, c| if r < m.nrows() { m[(r, c)] } else { czero() });
        &square
    } else {
        m
    };
    let d = svd(m);
    let mut vecs = CMat::zeros(cols, k);
    let mut vals = Vec::with_capacity(k);
    for j in 0..k {
        let src = cols - 1 - j;
        vecs.set_column(j, &d.v.column(src));
        vals.push(d.singular_values[src]);
    }
    (vecs, vals)
}

/// Real counterpart of [`smallest_right_singular_vectors`].
pub fn smallest_right_singular_vectors_real<T: Real>(m: &DMatrix<T>, k: usize) -> (DMatrix<T>, Vec<T>) {
    let cols = m.ncols();
    assert!(k <= cols, "asked for {k} of {cols} singular vectors");
    let padded = DMatrix::from_fn(m.nrows().max(cols), cols, |r, c| if r < m.nrows() { m[(r, c)] } else { T::zero() });
    let raw = SVD::new_unordered(padded, false, true);
    let v_t = raw.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..raw.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[a]
            .partial_cmp(&raw.singular_values[b])
            .expect("singular value is NaN")
            .then(b.cmp(&a))
    });
    order.truncate(k);
    let vecs = DMatrix::from_fn(cols, k, |r, c| v_t[(order[c], r)]);
    (vecs, order.iter().map(|&i| raw.singular_values[i]).collect())
}

/// Orthonormal basis for the column space of a full-rank `m`.
pub fn orthonormalize<T: Real>(m: &CMat<T>) -> CMat<T> {
    m.clone().qr().q()
}

/// `sigma_max / sigma_min`, infinite when `m` is singular.
pub fn condition_number<T: Real>(m: &CMat<T>) -> T {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        (Some(_), Some(_)) => lit(f64::INFINITY),
        _ => T::one(),
    }
}
