//! Eigenpairs of the companion pencil and the choice of a well-conditioned
//! eigenvector basis among them.

use nalgebra::ComplexField;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{GjbdError, Result};
use crate::linalg::pivoted_qr::pivoted_qr;
use crate::linalg::qz::{qz, qz_eigenvalues, right_eigenvectors, QzNoConvergence};
use crate::linalg::smallest_right_singular_vectors;
use crate::matpoly::{CompanionPencil, MatrixSet};
use crate::scalar::{eps, lit, tol, CMat, CVec, Real};

/// A generalized eigenvalue of `lambda M + N`, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eigenvalue<T: Real> {
    Finite(Complex<T>),
    Infinite,
}

impl<T: Real> Eigenvalue<T> {
    pub fn finite(&self) -> Option<Complex<T>> {
        match *self {
            Eigenvalue::Finite(z) => Some(z),
            Eigenvalue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Eigenvalue::Infinite)
    }

    /// Eigenvalue from the diagonal pair of the Schur form of `(N, M)`.
    fn from_schur_pair(alpha_n: Complex<T>, beta_m: Complex<T>) -> Self {
        let (a, b) = (alpha_n.modulus(), beta_m.modulus());
        if b <= tol::<T>(1e-14, 4.0) * (a + b) {
            Eigenvalue::Infinite
        } else {
            Eigenvalue::Finite(-alpha_n / beta_m)
        }
    }
}

/// How pencil eigenvectors are obtained once the eigenvalues are known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenvectorRoute {
    /// Back-substitution in the full generalized Schur form.
    Schur,
    /// Null vectors of the `n x n` matrix `P(lambda)`, lifted to
    /// `[x; lambda x; ...]`. Needs only the eigenvalues from QZ.
    #[default]
    Polynomial,
}

impl std::str::FromStr for EigenvectorRoute {
    type Err = GjbdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schur" => Ok(EigenvectorRoute::Schur),
            "polynomial" => Ok(EigenvectorRoute::Polynomial),
            _ => Err(GjbdError::format("route", format!("unknown eigenvector route `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PencilEigenpair<T: Real> {
    pub eigenvalue: Eigenvalue<T>,
    /// Unit-norm eigenvector of length `n p`.
    pub vector: CVec<T>,
}

impl From<QzNoConvergence> for GjbdError {
    fn from(e: QzNoConvergence) -> Self {
        GjbdError::SchurFailure { iterations: e.iterations, unconverged_at: e.unconverged_at }
    }
}

/// All `n p` eigenpairs of the pencil via the full generalized Schur form.
pub fn solve_pencil<T: Real>(pencil: &CompanionPencil<T>) -> Result<Vec<PencilEigenpair<T>>> {
    solve_pencil_with(pencil, EigenvectorRoute::Schur)
}

pub fn solve_pencil_with<T: Real>(
    pencil: &CompanionPencil<T>,
    route: EigenvectorRoute,
) -> Result<Vec<PencilEigenpair<T>>> {
    match route {
        EigenvectorRoute::Schur => {
            let schur = qz(&pencil.n_mat, &pencil.m_mat)?;
            let vectors = right_eigenvectors(&schur);
            Ok(schur
                .alpha()
                .into_iter()
                .zip(schur.beta())
                .enumerate()
                .map(|(k, (a, b))| PencilEigenpair {
                    eigenvalue: Eigenvalue::from_schur_pair(a, b),
                    vector: vectors.column(k).clone_owned(),
                })
                .collect())
        }
        EigenvectorRoute::Polynomial => {
            let ev = qz_eigenvalues(&pencil.n_mat, &pencil.m_mat)?;
            let eigenvalues: Vec<_> = ev
                .alpha
                .iter()
                .zip(&ev.beta)
                .map(|(&a, &b)| Eigenvalue::from_schur_pair(a, b))
                .collect();
            Ok(polynomial_eigenvectors(pencil, &eigenvalues))
        }
    }
}

/// Eigenvalues within this relative distance share one singular value
/// decomposition and receive successive null vectors.
fn same_cluster<T: Real>(a: &Eigenvalue<T>, b: &Eigenvalue<T>) -> bool {
    match (a, b) {
        (Eigenvalue::Infinite, Eigenvalue::Infinite) => true,
        (Eigenvalue::Finite(x), Eigenvalue::Finite(y)) => {
            let scale = T::one().max(x.modulus()).max(y.modulus());
            (*x - *y).modulus() <= eps::<T>().sqrt() * scale
        }
        _ => false,
    }
}

fn polynomial_eigenvectors<T: Real>(
    pencil: &CompanionPencil<T>,
    eigenvalues: &[Eigenvalue<T>],
) -> Vec<PencilEigenpair<T>> {
    let (n, p) = (pencil.order(), pencil.degree());
    let k = eigenvalues.len();
    // Cluster leader and rank within the cluster for every eigenvalue.
    let mut leader = vec![usize::MAX; k];
    let mut rank = vec![0usize; k];
    for i in 0..k {
        if leader[i] != usize::MAX {
            continue;
        }
        leader[i] = i;
        let mut r = 1;
        for j in (i + 1)..k {
            if leader[j] == usize::MAX && same_cluster(&eigenvalues[i], &eigenvalues[j]) {
                leader[j] = i;
                rank[j] = r;
                r += 1;
            }
        }
    }
    let mut cluster_size = vec![0usize; k];
    for &l in &leader {
        cluster_size[l] += 1;
    }

    let mut null_vectors: Vec<Option<CMat<T>>> = vec![None; k];
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let l = leader[i];
        if null_vectors[l].is_none() {
            let mat = match eigenvalues[l] {
                Eigenvalue::Finite(z) => pencil.evaluate_polynomial(z),
                Eigenvalue::Infinite => pencil.coefficient(p),
            };
            let want = cluster_size[l].min(n);
            null_vectors[l] = Some(smallest_right_singular_vectors(&mat, want).0);
        }
        let basis = null_vectors[l].as_ref().expect("computed above");
        let x = basis.column(rank[i] % basis.ncols()).clone_owned();
        out.push(PencilEigenpair { eigenvalue: eigenvalues[i], vector: stack(&x, &eigenvalues[i], p) });
    }
    out
}

/// `[x; lambda x; ...; lambda^(p-1) x]` normalized, formed from the largest
/// power downwards when `|lambda| > 1` so that nothing overflows. For an
/// infinite eigenvalue only the last block is nonzero.
fn stack<T: Real>(x: &CVec<T>, eigenvalue: &Eigenvalue<T>, p: usize) -> CVec<T> {
    let n = x.len();
    let mut u = CVec::<T>::zeros(n * p);
    match *eigenvalue {
        Eigenvalue::Infinite => u.rows_mut((p - 1) * n, n).copy_from(x),
        Eigenvalue::Finite(z) => {
            let big = z.modulus() > T::one();
            let step = if big { Complex::from(T::one()) / z } else { z };
            let mut coef = Complex::from(T::one());
            for q in 0..p {
                let block = if big { p - 1 - q } else { q };
                u.rows_mut(block * n, n).copy_from(&(x * coef));
                coef *= step;
            }
        }
    }
    let nrm = u.norm();
    if nrm > T::zero() {
        u /= Complex::from(nrm);
    }
    u
}

/// A unit `n`-vector read from a pencil eigenvector.
#[derive(Clone, Debug)]
pub struct Candidate<T: Real> {
    pub eigenvalue: Eigenvalue<T>,
    pub vector: CVec<T>,
    /// Position of the originating pair in the `solve_pencil` output.
    pub pair_index: usize,
}

/// Candidates extracted from pencil eigenpairs, and the pairs dropped for
/// having no usable block.
#[derive(Clone, Debug)]
pub struct Extraction<T: Real> {
    pub candidates: Vec<Candidate<T>>,
    pub dropped: Vec<usize>,
}

/// Reads `x` from `u = [x; lambda x; ...]` out of the block of largest norm,
/// undoing the phase of `lambda^q` and normalizing.
pub fn extract_pep_vectors<T: Real>(pairs: &[PencilEigenpair<T>], n: usize, p: usize) -> Extraction<T> {
    let mut candidates = Vec::with_capacity(pairs.len());
    let mut dropped = Vec::new();
    let floor = tol::<T>(1e-14, 4.0);
    for (index, pair) in pairs.iter().enumerate() {
        assert_eq!(pair.vector.len(), n * p, "eigenvector length is not n p");
        let scale = pair.vector.norm();
        let mut best = 0;
        let mut best_norm = T::zero();
        for q in 0..p {
            let nrm = pair.vector.rows(q * n, n).norm();
            if nrm > best_norm {
                best = q;
                best_norm = nrm;
            }
        }
        if best_norm <= floor * scale || best_norm == T::zero() {
            log::warn!("{}", GjbdError::ZeroBlock { index });
            dropped.push(index);
            continue;
        }
        let mut x = pair.vector.rows(best * n, n).clone_owned();
        if let Eigenvalue::Finite(z) = pair.eigenvalue {
            let m = z.modulus();
            if best > 0 && m > T::zero() {
                let unphase = (z / Complex::from(m)).conj().powi(best as i32);
                x *= unphase;
            }
        }
        let nrm = x.norm();
        x /= Complex::from(nrm);
        candidates.push(Candidate { eigenvalue: pair.eigenvalue, vector: x, pair_index: index });
    }
    Extraction { candidates, dropped }
}

/// `||P(lambda) x|| / sum_i |lambda|^i ||A_i||_2` for finite eigenvalues and
/// `||A_p x|| / ||A_p||_2` for infinite ones.
pub fn scaled_residual<T: Real>(ms: &MatrixSet<T>, norms: &[T], candidate: &Candidate<T>) -> T {
    let p = ms.degree();
    let (resid, scale) = match candidate.eigenvalue {
        Eigenvalue::Finite(z) => {
            let m = z.modulus();
            // Horner on the scale as well, in the order P(lambda) is formed.
            let mut s = norms[p];
            for i in (0..p).rev() {
                s = s * m + norms[i];
            }
            ((ms.evaluate(z) * &candidate.vector).norm(), s)
        }
        Eigenvalue::Infinite => ((&ms.matrices()[p] * &candidate.vector).norm(), norms[p]),
    };
    if scale > T::zero() {
        resid / scale
    } else {
        resid
    }
}

/// Stable sort by ascending scaled residual; returns the residuals alongside.
pub fn order_by_residual<T: Real>(ms: &MatrixSet<T>, candidates: Vec<Candidate<T>>) -> (Vec<Candidate<T>>, Vec<T>) {
    let norms = ms.spectral_norms();
    let mut scored: Vec<(T, Candidate<T>)> =
        candidates.into_iter().map(|c| (scaled_residual(ms, &norms, &c), c)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    scored.into_iter().map(|(r, c)| (c, r)).unzip()
}

/// The selected eigenvector basis and its pivoted-QR certificate.
#[derive(Clone, Debug)]
pub struct EigenBasis<T: Real> {
    /// Unit-norm eigenvectors, in pivot order.
    pub x_mat: CMat<T>,
    pub lambdas: Vec<Eigenvalue<T>>,
    /// `|R(n, n)|`.
    pub r_nn: T,
    pub tol_rank: T,
    /// `|R(k, k)|` for `k < n`.
    pub r_diag: Vec<T>,
    /// Full pivot order over the pool.
    pub pivot: Vec<usize>,
    pub pool_size: usize,
}

/// Default multiplier in `tol_rank = n eps |R(1,1)| factor`.
pub const RANK_FACTOR: f64 = 64.0;

/// Greedy pivoted QR on the `n x k` candidate matrix; keeps the first `n`
/// pivots if `|R(n, n)| > n eps |R(1, 1)| rank_factor`.
pub fn select_basis<T: Real>(candidates: &[Candidate<T>], n: usize, rank_factor: T) -> Result<EigenBasis<T>> {
    let k = candidates.len();
    if k < n || n == 0 {
        return Err(GjbdError::PoolTooSmall { available: k, needed: n });
    }
    let pool = CMat::<T>::from_fn(n, k, |r, c| candidates[c].vector[r]);
    let qr = pivoted_qr(&pool, n);
    let r_nn = qr.r_diag[n - 1];
    let tol_rank = lit::<T>(n as f64) * eps::<T>() * qr.r_diag[0] * rank_factor;
    if r_nn <= tol_rank {
        return Err(GjbdError::NearlyDependent {
            r_nn: r_nn.to_f64().unwrap_or(f64::NAN),
            tol_rank: tol_rank.to_f64().unwrap_or(f64::NAN),
        });
    }
    let x_mat = CMat::from_fn(n, n, |r, c| pool[(r, qr.pivot[c])]);
    Ok(EigenBasis {
        x_mat,
        lambdas: qr.pivot[..n].iter().map(|&c| candidates[c].eigenvalue).collect(),
        r_nn,
        tol_rank,
        r_diag: qr.r_diag,
        pivot: qr.pivot,
        pool_size: k,
    })
}

/// Summary of a completed Stage 1.
#[derive(Clone, Debug)]
pub struct StageOne<T: Real> {
    pub basis: EigenBasis<T>,
    /// Every pencil eigenvalue, in solver order.
    pub eigenvalues: Vec<Eigenvalue<T>>,
    pub dropped: Vec<usize>,
}

/// Linearize, solve, extract, order by residual and select.
pub fn eigen_basis<T: Real>(ms: &MatrixSet<T>, route: EigenvectorRoute, rank_factor: T) -> Result<StageOne<T>> {
    let pencil = ms.linearize()?;
    let pairs = solve_pencil_with(&pencil, route)?;
    let eigenvalues = pairs.iter().map(|p| p.eigenvalue).collect();
    let extraction = extract_pep_vectors(&pairs, ms.order(), ms.degree());
    let (ordered, _) = order_by_residual(ms, extraction.candidates);
    let basis = select_basis(&ordered, ms.order(), rank_factor)?;
    Ok(StageOne { basis, eigenvalues, dropped: extraction.dropped })
}
