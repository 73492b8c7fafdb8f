//! Complex QZ algorithm for the generalized eigenproblem `A x = mu B x`.
//!
//! The pair is reduced to generalized Schur form `(S, P) = (Q^H A Z, Q^H B Z)`
//! with both factors upper triangular. Only `Z` is accumulated. An
//! eigenvalues-only variant skips `Z` and confines updates to the active
//! window. The iteration follows the single-shift complex QZ
//! of Moler and Stewart in the formulation used by LAPACK's `zhgeqz`,
//! including the zero-chasing deflation of infinite eigenvalues.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use crate::scalar::{abs1, czero, eps, lit, CMat, Real};

/// Generalized Schur decomposition of a square pair `(A, B)`.
#[derive(Clone, Debug)]
pub struct GeneralizedSchur<T: Real> {
    /// Upper triangular `Q^H A Z`.
    pub s: CMat<T>,
    /// Upper triangular `Q^H B Z`, with a real non-negative diagonal.
    pub p: CMat<T>,
    /// Right Schur vectors.
    pub z: CMat<T>,
    /// Total QZ sweeps performed.
    pub sweeps: usize,
}

impl<T: Real> GeneralizedSchur<T> {
    /// Diagonal of `S`; the eigenvalues are `alpha[k] / beta[k]`.
    pub fn alpha(&self) -> Vec<Complex<T>> {
        (0..self.s.nrows()).map(|k| self.s[(k, k)]).collect()
    }

    /// Diagonal of `P`.
    pub fn beta(&self) -> Vec<Complex<T>> {
        (0..self.p.nrows()).map(|k| self.p[(k, k)]).collect()
    }
}

/// QZ failed to converge within the iteration budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QzNoConvergence {
    pub iterations: usize,
    /// Index of the eigenvalue that was being isolated.
    pub unconverged_at: usize,
}

/// Plane rotation `(c, s)` with real `c` such that
/// `[c s; -conj(s) c] [f; g] = [r; 0]`. Returns `(c, s, r)`.
#[inline]
pub(crate) fn givens<T: Real>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>, Complex<T>) {
    let zero = T::zero();
    if g.re == zero && g.im == zero {
        return (T::one(), czero(), f);
    }
    let gn = g.modulus();
    if f.re == zero && f.im == zero {
        return (zero, g.conj() / Complex::from(gn), Complex::from(gn));
    }
    let fn_ = f.modulus();
    let d = fn_.hypot(gn);
    let phase = f / Complex::from(fn_);
    let c = fn_ / d;
    let s = phase * g.conj() / Complex::from(d);
    (c, s, phase * Complex::from(d))
}

/// Column-major view with explicit leading dimension; keeps the inner loops
/// free of nalgebra's per-element bounds checks.
struct Dense<'a, T: Real> {
    n: usize,
    data: &'a mut [Complex<T>],
}

impl<'a, T: Real> Dense<'a, T> {
    #[inline(always)]
    fn at(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r + c * self.n]
    }

    #[inline(always)]
    fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r + c * self.n] = v;
    }

    /// Rotates rows `i` and `i + 1` over columns `cols`.
    #[inline]
    fn rot_rows(&mut self, i: usize, cols: std::ops::RangeInclusive<usize>, c: T, s: Complex<T>) {
        let n = self.n;
        let sc = s.conj();
        for col in cols {
            let base = col * n;
            let x = self.data[base + i];
            let y = self.data[base + i + 1];
            self.data[base + i] = x.scale(c) + s * y;
            self.data[base + i + 1] = y.scale(c) - sc * x;
        }
    }

    /// Applies `x <- c x + s y`, `y <- c y - conj(s) x` to columns `cx`, `cy`
    /// over rows `rows`.
    #[inline]
    fn rot_cols(
        &mut self,
        cx: usize,
        cy: usize,
        rows: std::ops::RangeInclusive<usize>,
        c: T,
        s: Complex<T>,
    ) {
        if rows.is_empty() {
            return;
        }
        let n = self.n;
        let sc = s.conj();
        let (bx, by) = (cx * n, cy * n);
        for r in rows {
            let x = self.data[bx + r];
            let y = self.data[by + r];
            self.data[bx + r] = x.scale(c) + s * y;
            self.data[by + r] = y.scale(c) - sc * x;
        }
    }

    fn frobenius(&self) -> T {
        let mut acc = T::zero();
        for z in self.data.iter() {
            acc += z.norm_sqr();
        }
        acc.sqrt()
    }
}

/// Generalized eigenvalues `alpha[k] / beta[k]` without Schur vectors.
#[derive(Clone, Debug)]
pub struct GeneralizedEigenvalues<T: Real> {
    pub alpha: Vec<Complex<T>>,
    /// Real and non-negative.
    pub beta: Vec<Complex<T>>,
    pub sweeps: usize,
}

fn triangularize_b<T: Real>(a: &CMat<T>, b: &CMat<T>) -> (CMat<T>, CMat<T>) {
    // B = Q R, A <- Q^H A.
    let n = a.nrows();
    let qr = b.clone().qr();
    let mut s = a.clone();
    qr.q_tr_mul(&mut s);
    let mut p = qr.r();
    for c in 0..n {
        for r in (c + 1)..n {
            p[(r, c)] = czero();
        }
    }
    (s, p)
}

/// Computes the generalized Schur form of `(a, b)`.
pub fn qz<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<GeneralizedSchur<T>, QzNoConvergence> {
    let n = a.nrows();
    assert!(a.is_square() && b.shape() == a.shape(), "qz: shape mismatch");
    if n == 0 {
        return Ok(GeneralizedSchur {
            s: a.clone(),
            p: b.clone(),
            z: CMat::<T>::zeros(0, 0),
            sweeps: 0,
        });
    }
    let (mut s, mut p) = triangularize_b(a, b);
    let mut z = DMatrix::<Complex<T>>::identity(n, n);
    let sweeps = {
        let mut hs = Dense { n, data: s.as_mut_slice() };
        let mut ts = Dense { n, data: p.as_mut_slice() };
        let mut zs = Dense { n, data: z.as_mut_slice() };
        hessenberg_triangular(&mut hs, &mut ts, Some(&mut zs));
        qz_iterate(&mut hs, &mut ts, Some(&mut zs))?
    };
    // Clean the strictly lower parts left at roundoff level.
    for c in 0..n {
        for r in (c + 1)..n {
            s[(r, c)] = czero();
            p[(r, c)] = czero();
        }
    }
    Ok(GeneralizedSchur { s, p, z, sweeps })
}

/// Generalized eigenvalues of `(a, b)`; about a third of the work of [`qz`].
pub fn qz_eigenvalues<T: Real>(
    a: &CMat<T>,
    b: &CMat<T>,
) -> Result<GeneralizedEigenvalues<T>, QzNoConvergence> {
    let n = a.nrows();
    assert!(a.is_square() && b.shape() == a.shape(), "qz: shape mismatch");
    if n == 0 {
        return Ok(GeneralizedEigenvalues { alpha: vec![], beta: vec![], sweeps: 0 });
    }
    let (mut s, mut p) = triangularize_b(a, b);
    let mut hs = Dense { n, data: s.as_mut_slice() };
    let mut ts = Dense { n, data: p.as_mut_slice() };
    hessenberg_triangular(&mut hs, &mut ts, None);
    let sweeps = qz_iterate(&mut hs, &mut ts, None)?;
    Ok(GeneralizedEigenvalues {
        alpha: (0..n).map(|k| hs.at(k, k)).collect(),
        beta: (0..n).map(|k| ts.at(k, k)).collect(),
        sweeps,
    })
}

fn hessenberg_triangular<T: Real>(
    h: &mut Dense<T>,
    t: &mut Dense<T>,
    mut z: Option<&mut Dense<T>>,
) {
    let n = h.n;
    if n < 3 {
        return;
    }
    for jcol in 0..(n - 2) {
        for jrow in ((jcol + 2)..n).rev() {
            let (c, s, r) = givens(h.at(jrow - 1, jcol), h.at(jrow, jcol));
            h.set(jrow - 1, jcol, r);
            h.set(jrow, jcol, czero());
            h.rot_rows(jrow - 1, (jcol + 1)..=(n - 1), c, s);
            t.rot_rows(jrow - 1, (jrow - 1)..=(n - 1), c, s);

            let (c, s, r) = givens(t.at(jrow, jrow), t.at(jrow, jrow - 1));
            t.set(jrow, jrow, r);
            t.set(jrow, jrow - 1, czero());
            h.rot_cols(jrow, jrow - 1, 0..=(n - 1), c, s);
            if jrow >= 1 {
                t.rot_cols(jrow, jrow - 1, 0..=(jrow - 1), c, s);
            }
            if let Some(z) = z.as_deref_mut() {
                z.rot_cols(jrow, jrow - 1, 0..=(n - 1), c, s);
            }
        }
    }
}

enum Next {
    /// `T(ilast, ilast)` is zero: rotate `H(ilast, ilast-1)` away.
    ZeroDiagonal,
    /// `H(ilast, ilast-1)` is zero: accept the trailing eigenvalue.
    Deflate,
    /// Run a QZ sweep on the active block starting at the given row.
    Sweep(usize),
}

fn qz_iterate<T: Real>(
    h: &mut Dense<T>,
    t: &mut Dense<T>,
    mut z: Option<&mut Dense<T>>,
) -> Result<usize, QzNoConvergence> {
    let n = h.n;
    let safmin = T::safe_min();
    let ulp = eps::<T>();
    let half = lit::<T>(0.5);
    let anorm = h.frobenius();
    let bnorm = t.frobenius();
    let atol = safmin.max(ulp * anorm);
    let btol = safmin.max(ulp * bnorm);
    let ascale = T::one() / safmin.max(anorm);
    let bscale = T::one() / safmin.max(bnorm);
    let cas = Complex::from(ascale);
    let cbs = Complex::from(bscale);

    let ilo = 0usize;
    let schur = z.is_some();
    let mut ilastm = n - 1;
    let mut ifrstm = 0usize;
    let mut ilast = n - 1;
    let mut iiter = 0usize;
    let mut eshift = czero::<T>();
    let maxit = 30 * n;
    let mut sweeps = 0usize;

    let small = |hh: &Dense<T>, j: usize| -> bool {
        abs1(hh.at(j, j - 1)) <= safmin.max(ulp * (abs1(hh.at(j, j)) + abs1(hh.at(j - 1, j - 1))))
    };

    for _ in 0..maxit {
        let next = 'test: {
            if ilast == ilo {
                break 'test Next::Deflate;
            }
            if small(h, ilast) {
                h.set(ilast, ilast - 1, czero());
                break 'test Next::Deflate;
            }
            if t.at(ilast, ilast).modulus() <= btol {
                t.set(ilast, ilast, czero());
                break 'test Next::ZeroDiagonal;
            }
            for j in (ilo..ilast).rev() {
                let ilazro = if j == ilo {
                    true
                } else if small(h, j) {
                    h.set(j, j - 1, czero());
                    true
                } else {
                    false
                };

                if t.at(j, j).modulus() < btol {
                    t.set(j, j, czero());
                    let mut ilazr2 = false;
                    if !ilazro
                        && abs1(h.at(j, j - 1)) * (ascale * abs1(h.at(j + 1, j)))
                            <= abs1(h.at(j, j)) * (ascale * atol)
                    {
                        ilazr2 = true;
                    }
                    if ilazro || ilazr2 {
                        // The zero on T's diagonal splits off at the top: push it down.
                        for jch in j..ilast {
                            let (c, s, r) = givens(h.at(jch, jch), h.at(jch + 1, jch));
                            h.set(jch, jch, r);
                            h.set(jch + 1, jch, czero());
                            h.rot_rows(jch, (jch + 1)..=ilastm, c, s);
                            t.rot_rows(jch, (jch + 1)..=ilastm, c, s);
                            if ilazr2 {
                                let v = h.at(jch, jch - 1) * Complex::from(c);
                                h.set(jch, jch - 1, v);
                            }
                            ilazr2 = false;
                            if abs1(t.at(jch + 1, jch + 1)) >= btol {
                                if jch + 1 >= ilast {
                                    break 'test Next::Deflate;
                                }
                                break 'test Next::Sweep(jch + 1);
                            }
                            t.set(jch + 1, jch + 1, czero());
                        }
                        break 'test Next::ZeroDiagonal;
                    }
                    // Chase the zero to the bottom of the active block.
                    for jch in j..ilast {
                        let (c, s, r) = givens(t.at(jch, jch + 1), t.at(jch + 1, jch + 1));
                        t.set(jch, jch + 1, r);
                        t.set(jch + 1, jch + 1, czero());
                        if jch + 2 <= ilastm {
                            t.rot_rows(jch, (jch + 2)..=ilastm, c, s);
                        }
                        h.rot_rows(jch, (jch - 1)..=ilastm, c, s);

                        let (c, s, r) = givens(h.at(jch + 1, jch), h.at(jch + 1, jch - 1));
                        h.set(jch + 1, jch, r);
                        h.set(jch + 1, jch - 1, czero());
                        h.rot_cols(jch, jch - 1, ifrstm..=jch, c, s);
                        if jch > ifrstm {
                            t.rot_cols(jch, jch - 1, ifrstm..=(jch - 1), c, s);
                        }
                        if let Some(z) = z.as_deref_mut() {
                            z.rot_cols(jch, jch - 1, 0..=(n - 1), c, s);
                        }
                    }
                    break 'test Next::ZeroDiagonal;
                } else if ilazro {
                    break 'test Next::Sweep(j);
                }
            }
            unreachable!("qz: deflation scan fell through");
        };

        match next {
            Next::ZeroDiagonal => {
                let (c, s, r) = givens(h.at(ilast, ilast), h.at(ilast, ilast - 1));
                h.set(ilast, ilast, r);
                h.set(ilast, ilast - 1, czero());
                h.rot_cols(ilast, ilast - 1, ifrstm..=(ilast - 1), c, s);
                t.rot_cols(ilast, ilast - 1, ifrstm..=(ilast - 1), c, s);
                if let Some(z) = z.as_deref_mut() {
                    z.rot_cols(ilast, ilast - 1, 0..=(n - 1), c, s);
                }
                normalize_beta(h, t, z.as_deref_mut(), ilast, ifrstm, safmin);
                if ilast == ilo {
                    return Ok(sweeps);
                }
                ilast -= 1;
                if !schur {
                    ilastm = ilast;
                    if ifrstm > ilast {
                        ifrstm = ilo;
                    }
                }
                iiter = 0;
                eshift = czero();
            }
            Next::Deflate => {
                normalize_beta(h, t, z.as_deref_mut(), ilast, ifrstm, safmin);
                if ilast == ilo {
                    return Ok(sweeps);
                }
                ilast -= 1;
                if !schur {
                    ilastm = ilast;
                    if ifrstm > ilast {
                        ifrstm = ilo;
                    }
                }
                iiter = 0;
                eshift = czero();
            }
            Next::Sweep(ifirst) => {
                if !schur {
                    ifrstm = ifirst;
                }
                iiter += 1;
                sweeps += 1;
                let shift = if !iiter.is_multiple_of(10) {
                    wilkinson_shift(h, t, ilast, cas, cbs, half)
                } else {
                    // Exceptional shift.
                    if iiter.is_multiple_of(20) && bscale * abs1(t.at(ilast, ilast)) > safmin {
                        eshift += (cas * h.at(ilast, ilast)) / (cbs * t.at(ilast, ilast));
                    } else {
                        eshift += (cas * h.at(ilast, ilast - 1)) / (cbs * t.at(ilast - 1, ilast - 1));
                    }
                    eshift
                };

                // Look for two consecutive small subdiagonals.
                let mut istart = ifirst;
                let mut ctemp = cas * h.at(ifirst, ifirst) - shift * (cbs * t.at(ifirst, ifirst));
                let mut j = ilast - 1;
                while j > ifirst {
                    let ct = cas * h.at(j, j) - shift * (cbs * t.at(j, j));
                    let mut temp = abs1(ct);
                    let mut temp2 = ascale * abs1(h.at(j + 1, j));
                    let tempr = temp.max(temp2);
                    if tempr < T::one() && tempr != T::zero() {
                        temp /= tempr;
                        temp2 /= tempr;
                    }
                    if abs1(h.at(j, j - 1)) * temp2 <= temp * atol {
                        istart = j;
                        ctemp = ct;
                        break;
                    }
                    j -= 1;
                }

                let (mut c, mut s, _) = givens(ctemp, cas * h.at(istart + 1, istart));
                for j in istart..ilast {
                    if j > istart {
                        let (c2, s2, r) = givens(h.at(j, j - 1), h.at(j + 1, j - 1));
                        c = c2;
                        s = s2;
                        h.set(j, j - 1, r);
                        h.set(j + 1, j - 1, czero());
                    }
                    h.rot_rows(j, j..=ilastm, c, s);
                    t.rot_rows(j, j..=ilastm, c, s);

                    let (c2, s2, r) = givens(t.at(j + 1, j + 1), t.at(j + 1, j));
                    t.set(j + 1, j + 1, r);
                    t.set(j + 1, j, czero());
                    h.rot_cols(j + 1, j, ifrstm..=(j + 2).min(ilast), c2, s2);
                    t.rot_cols(j + 1, j, ifrstm..=j, c2, s2);
                    if let Some(z) = z.as_deref_mut() {
                        z.rot_cols(j + 1, j, 0..=(n - 1), c2, s2);
                    }
                }
            }
        }
    }
    Err(QzNoConvergence { iterations: maxit, unconverged_at: ilast })
}

#[inline]
fn wilkinson_shift<T: Real>(
    h: &Dense<T>,
    t: &Dense<T>,
    ilast: usize,
    cas: Complex<T>,
    cbs: Complex<T>,
    half: T,
) -> Complex<T> {
    let u12 = (cbs * t.at(ilast - 1, ilast)) / (cbs * t.at(ilast, ilast));
    let ad11 = (cas * h.at(ilast - 1, ilast - 1)) / (cbs * t.at(ilast - 1, ilast - 1));
    let ad21 = (cas * h.at(ilast, ilast - 1)) / (cbs * t.at(ilast - 1, ilast - 1));
    let ad12 = (cas * h.at(ilast - 1, ilast)) / (cbs * t.at(ilast, ilast));
    let ad22 = (cas * h.at(ilast, ilast)) / (cbs * t.at(ilast, ilast));
    let abi22 = ad22 - u12 * ad21;
    let abi12 = ad12 - u12 * ad11;
    let mut shift = abi22;
    let ctemp = abi12.sqrt() * ad21.sqrt();
    let temp = abs1(ctemp);
    if temp != T::zero() {
        let x = (ad11 - shift) * Complex::from(half);
        let temp2 = abs1(x);
        let temp = temp.max(temp2);
        let ct = Complex::from(temp);
        let mut y = ct * ((x / ct) * (x / ct) + (ctemp / ct) * (ctemp / ct)).sqrt();
        if temp2 > T::zero() {
            let xs = x / Complex::from(temp2);
            if xs.re * y.re + xs.im * y.im < T::zero() {
                y = -y;
            }
        }
        shift -= ctemp * (ctemp / (x + y));
    }
    shift
}

/// Makes `T(k, k)` real and non-negative by scaling column `k` of `H`, `T`, `Z`.
fn normalize_beta<T: Real>(
    h: &mut Dense<T>,
    t: &mut Dense<T>,
    z: Option<&mut Dense<T>>,
    k: usize,
    ifrstm: usize,
    safmin: T,
) {
    let d = t.at(k, k);
    let absb = d.modulus();
    if absb > safmin {
        let sign = (d / Complex::from(absb)).conj();
        t.set(k, k, Complex::from(absb));
        for r in ifrstm..k {
            let v = t.at(r, k) * sign;
            t.set(r, k, v);
        }
        for r in ifrstm..=k {
            let v = h.at(r, k) * sign;
            h.set(r, k, v);
        }
        if let Some(z) = z {
            for r in 0..z.n {
                let v = z.at(r, k) * sign;
                z.set(r, k, v);
            }
        }
    } else {
        t.set(k, k, czero());
    }
}

/// Right eigenvectors of the original pair from its generalized Schur form.
///
/// Column `k` pairs with `(alpha[k], beta[k])` and has unit 2-norm.
pub fn right_eigenvectors<T: Real>(schur: &GeneralizedSchur<T>) -> CMat<T> {
    let n = schur.s.nrows();
    let s = &schur.s;
    let p = &schur.p;
    let ulp = eps::<T>();
    let safmin = T::safe_min();
    let anorm = s.norm().max(safmin);
    let bnorm = p.norm().max(safmin);
    let big = lit::<T>(1e100);
    let mut y = CMat::<T>::zeros(n, n);

    for k in 0..n {
        let a = s[(k, k)];
        let b = p[(k, k)];
        let scale = (a.modulus() * bnorm).max(b.modulus() * anorm).max(safmin);
        let ca = a / Complex::from(scale);
        let cb = b / Complex::from(scale);
        let dmin = safmin.max(ulp * (ca.modulus() * bnorm + cb.modulus() * anorm));

        let mut col = vec![czero::<T>(); k + 1];
        col[k] = Complex::from(T::one());
        for j in (0..k).rev() {
            let mut acc = czero::<T>();
            for l in (j + 1)..=k {
                if col[l] != czero() {
                    acc += (cb * s[(j, l)] - ca * p[(j, l)]) * col[l];
                }
            }
            let mut d = cb * s[(j, j)] - ca * p[(j, j)];
            if d.modulus() < dmin {
                d = Complex::from(dmin);
            }
            col[j] = -acc / d;
            if col[j].modulus() > big {
                let inv = Complex::from(T::one() / big);
                for v in col[j..=k].iter_mut() {
                    *v *= inv;
                }
            }
        }
        for (j, v) in col.into_iter().enumerate() {
            y[(j, k)] = v;
        }
    }

    let mut x = &schur.z * y;
    for mut c in x.column_iter_mut() {
        let nrm = c.norm();
        if nrm > T::zero() {
            c /= Complex::from(nrm);
        }
    }
    x
}
