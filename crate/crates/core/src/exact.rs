//! Exact complex rational arithmetic for fixture data.
//!
//! Printed decimals such as `0.5377` parse to `5377/10000`, so congruences of
//! integer or 4-decimal matrices can be checked without rounding.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{GjbdError, Result};
use crate::partition::{off_bdiag, Partition};
use crate::scalar::{lit, CMat, Real};

pub type Rational = Ratio<i128>;
pub type ExactComplex = Complex<Rational>;
pub type ExactMatrix = DMatrix<ExactComplex>;

/// Parses a decimal literal (`-12`, `0.5377`, `-.5`) exactly.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || GjbdError::format("decimal", format!("`{s}` is not a decimal literal"));
    let t = s.trim();
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: i128 = all.parse().map_err(|_| bad())?;
    let denom = 10i128.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Builds an exact complex matrix from row-major `(re, im)` decimal pairs.
pub fn matrix(rows: usize, cols: usize, entries: &[(&str, &str)]) -> ExactMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count");
    DMatrix::from_row_iterator(
        rows,
        cols,
        entries.iter().map(|(re, im)| {
            Complex::new(
                parse_decimal(re).expect("fixture literal"),
                parse_decimal(im).expect("fixture literal"),
            )
        }),
    )
}

/// Builds an exact real matrix from row-major integers.
pub fn integer_matrix(rows: usize, cols: usize, entries: &[i64]) -> ExactMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count");
    DMatrix::from_row_iterator(
        rows,
        cols,
        entries.iter().map(|&v| Complex::new(Rational::from_integer(v as i128), Rational::zero())),
    )
}

pub fn adjoint(m: &ExactMatrix) -> ExactMatrix {
    m.transpose().map(|z| z.conj())
}

/// `W^H A W` in exact arithmetic.
pub fn congruence(w: &ExactMatrix, a: &ExactMatrix) -> ExactMatrix {
    adjoint(w) * a * w
}

/// True if `W^H A W` is exactly block diagonal for every `A`.
pub fn block_diagonalizes(w: &ExactMatrix, mats: &[ExactMatrix], partition: &Partition) -> bool {
    mats.iter().all(|a| off_bdiag(&congruence(w, a), partition).iter().all(|z| z.is_zero()))
}

/// Rounds to the working precision.
pub fn to_float<T: Real>(m: &ExactMatrix) -> CMat<T> {
    let f = |r: &Rational| lit::<T>(r.to_f64().unwrap_or(f64::NAN));
    m.map(|z| Complex::new(f(&z.re), f(&z.im)))
}
