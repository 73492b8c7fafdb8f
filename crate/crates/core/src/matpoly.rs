//! Matrix sets viewed as matrix polynomials, and their companion pencils.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{GjbdError, Result};
use crate::linalg::spectral_norm;
use crate::scalar::{lit, to_complex, CMat, Real};

/// The input `{A_0, ..., A_p}`: `p + 1` square complex matrices of order `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSet<T: Real> {
    matrices: Vec<CMat<T>>,
    hermitian: bool,
}

impl<T: Real> MatrixSet<T> {
    /// Validates shapes, rejects an all-zero set and detects Hermitian input.
    pub fn new(matrices: Vec<CMat<T>>) -> Result<Self> {
        let first = matrices.first().ok_or(GjbdError::EmptySet)?;
        let n = first.nrows();
        if n == 0 {
            return Err(GjbdError::ShapeMismatch { index: 0, rows: 0, cols: first.ncols(), n: 1 });
        }
        for (index, a) in matrices.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(GjbdError::ShapeMismatch { index, rows: a.nrows(), cols: a.ncols(), n });
            }
        }
        if matrices.iter().all(|a| a.iter().all(|z| z.re.is_zero() && z.im.is_zero())) {
            return Err(GjbdError::AllZero);
        }
        let hermitian = matrices.iter().all(is_hermitian);
        Ok(MatrixSet { matrices, hermitian })
    }

    pub fn from_real(matrices: Vec<DMatrix<T>>) -> Result<Self> {
        Self::new(matrices.iter().map(to_complex).collect())
    }

    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// Polynomial degree `p`.
    pub fn degree(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn matrices(&self) -> &[CMat<T>] {
        &self.matrices
    }

    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    /// Every entry of every matrix has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.matrices.iter().all(|a| a.iter().all(|z| z.im.is_zero()))
    }

    /// `P(lambda) = sum_i lambda^i A_i` by Horner's rule.
    pub fn evaluate(&self, lambda: Complex<T>) -> CMat<T> {
        let mut acc = self.matrices[self.degree()].clone();
        for a in self.matrices[..self.degree()].iter().rev() {
            acc *= lambda;
            acc += a;
        }
        acc
    }

    /// `W^H A_i W` for every matrix in the set.
    pub fn congruence(&self, w: &CMat<T>) -> Vec<CMat<T>> {
        let wh = w.adjoint();
        self.matrices.iter().map(|a| &wh * a * w).collect()
    }

    /// Spectral norms `||A_i||_2`.
    pub fn spectral_norms(&self) -> Vec<T> {
        self.matrices.iter().map(spectral_norm).collect()
    }

    /// The companion pencil `(M, N)` with `(lambda M + N) u = 0` for
    /// `u = [x; lambda x; ...; lambda^(p-1) x]` whenever `P(lambda) x = 0`.
    pub fn linearize(&self) -> Result<CompanionPencil<T>> {
        let p = self.degree();
        if p == 0 {
            return Err(GjbdError::DegreeTooLow(0));
        }
        let n = self.order();
        let size = n * p;
        let mut m_mat = CMat::<T>::identity(size, size);
        m_mat.view_mut(((p - 1) * n, (p - 1) * n), (n, n)).copy_from(&self.matrices[p]);
        let mut n_mat = CMat::<T>::zeros(size, size);
        let minus_one = Complex::from(-T::one());
        for q in 0..p - 1 {
            for k in 0..n {
                n_mat[(q * n + k, (q + 1) * n + k)] = minus_one;
            }
        }
        for q in 0..p {
            n_mat.view_mut(((p - 1) * n, q * n), (n, n)).copy_from(&self.matrices[q]);
        }
        Ok(CompanionPencil { m_mat, n_mat, order: n, degree: p })
    }
}

fn is_hermitian<T: Real>(a: &CMat<T>) -> bool {
    let gap = (a - a.adjoint()).norm();
    gap <= lit::<T>(1e-12).max(T::default_epsilon() * lit(10.0)) * a.norm()
}

/// Companion linearization of a matrix polynomial of degree `p >= 1`.
///
/// `M = diag(I, ..., I, A_p)`; `N` has `-I` on the block superdiagonal and
/// `[A_0 ... A_(p-1)]` as its last block row.
#[derive(Clone, Debug, PartialEq)]
pub struct CompanionPencil<T: Real> {
    pub m_mat: CMat<T>,
    pub n_mat: CMat<T>,
    order: usize,
    degree: usize,
}

impl<T: Real> CompanionPencil<T> {
    /// Order `n` of the underlying matrix polynomial.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Pencil dimension `n p`.
    pub fn size(&self) -> usize {
        self.order * self.degree
    }

    /// Coefficient `A_i`, read back from the pencil blocks.
    pub fn coefficient(&self, i: usize) -> CMat<T> {
        let (n, p) = (self.order, self.degree);
        assert!(i <= p, "coefficient {i} of a degree-{p} pencil");
        if i == p {
            self.m_mat.view(((p - 1) * n, (p - 1) * n), (n, n)).clone_owned()
        } else {
            self.n_mat.view(((p - 1) * n, i * n), (n, n)).clone_owned()
        }
    }

    /// `P(lambda)` from the coefficients held in the pencil.
    pub fn evaluate_polynomial(&self, lambda: Complex<T>) -> CMat<T> {
        let mut acc = self.coefficient(self.degree);
        for i in (0..self.degree).rev() {
            acc *= lambda;
            acc += self.coefficient(i);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, p: usize, seed: u64) -> MatrixSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats = (0..=p)
            .map(|_| CMat::from_fn(n, n, |_, _| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
            .collect();
        MatrixSet::new(mats).unwrap()
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(matches!(MatrixSet::<f64>::new(vec![]), Err(GjbdError::EmptySet)));
        let z = CMat::<f64>::zeros(2, 2);
        assert!(matches!(MatrixSet::new(vec![z.clone(), z.clone()]), Err(GjbdError::AllZero)));
        let r = CMat::<f64>::zeros(2, 3);
        assert!(matches!(
            MatrixSet::new(vec![CMat::identity(2, 2), r]),
            Err(GjbdError::ShapeMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn evaluate_at_zero_is_constant_term() {
        let ms = random_set(3, 4, 1);
        assert_eq!(ms.evaluate(cplx(0.0, 0.0)), ms.matrices()[0]);
    }

    #[test]
    fn evaluate_matches_term_sum() {
        let ms = random_set(4, 2, 2);
        let a = ms.matrices();
        let direct = &a[0] + &a[1] * cplx(2.0, 0.0) + &a[2] * cplx(4.0, 0.0);
        assert!((ms.evaluate(cplx(2.0, 0.0)) - direct).norm() < 1e-14);
    }

    #[test]
    fn degree_one_pencil_is_the_pair() {
        let ms = random_set(3, 1, 3);
        let pencil = ms.linearize().unwrap();
        assert_eq!(pencil.m_mat, ms.matrices()[1]);
        assert_eq!(pencil.n_mat, ms.matrices()[0]);
    }

    #[test]
    fn degree_zero_is_rejected() {
        let ms = random_set(3, 0, 4);
        assert!(matches!(ms.linearize(), Err(GjbdError::DegreeTooLow(0))));
    }

    #[test]
    fn pencil_returns_its_coefficients() {
        let ms = random_set(3, 3, 5);
        let pencil = ms.linearize().unwrap();
        assert_eq!(pencil.size(), 9);
        for i in 0..=3 {
            assert_eq!(pencil.coefficient(i), ms.matrices()[i]);
        }
        let l = cplx(0.3, -0.8);
        assert!((pencil.evaluate_polynomial(l) - ms.evaluate(l)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_flag_is_detected() {
        let ms = random_set(3, 2, 6);
        assert!(!ms.hermitian());
        let herm: Vec<_> = ms.matrices().iter().map(|a| a + a.adjoint()).collect();
        assert!(MatrixSet::new(herm).unwrap().hermitian());
    }
}
