//! Benchmark data: the random block model and the hard-coded fixtures.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GjbdError, Result};
use crate::exact::{self, ExactMatrix};
use crate::matpoly::MatrixSet;
use crate::partition::Partition;
use crate::scalar::{cplx, lit, CMat, Real};

/// Noise standard deviation per real or imaginary part for an SNR in
/// decibels: `sigma^2 = 10^(-snr / 10)`. Infinite SNR gives zero.
pub fn sigma_of_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 20.0)
    }
}

/// Inverse of [`sigma_of_snr`].
pub fn snr_of_sigma(sigma: f64) -> f64 {
    if sigma == 0.0 {
        f64::INFINITY
    } else {
        -20.0 * sigma.log10()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed from a master seed and a trial index. Depends only on the
/// pair, so trials can run in any order or in parallel.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// One draw of the random block model `A_i = V^H D_i V`.
#[derive(Clone, Debug)]
pub struct ProblemInstance<T: Real> {
    pub ms: MatrixSet<T>,
    /// Mixing matrix `V`.
    pub v_mix: CMat<T>,
    /// The approximately block-diagonal `D_i`.
    pub d_mats: Vec<CMat<T>>,
    pub true_partition: Partition,
    pub snr_db: f64,
    pub seed: u64,
    pub real_valued: bool,
}

impl<T: Real> ProblemInstance<T> {
    /// Ground-truth diagonalizer `V^-1`, whose blocks of columns are the
    /// reference subspaces for the performance index.
    pub fn unmixing(&self) -> CMat<T> {
        self.v_mix.clone().try_inverse().expect("mixing matrix is singular")
    }
}

/// Draws an instance of the random model.
///
/// Entries of `V` and of the diagonal blocks of `D_i` are standard normal per
/// real and imaginary part; off-block entries are normal with standard
/// deviation `sigma_of_snr(snr_db)`. Real instances draw no imaginary parts.
/// Noise is drawn even when `sigma = 0`, so instances with the same seed share
/// `V` and the diagonal blocks across SNR levels.
pub fn random_instance<T: Real>(
    n: usize,
    partition: &Partition,
    p: usize,
    snr_db: f64,
    seed: u64,
    real_valued: bool,
) -> Result<ProblemInstance<T>> {
    if partition.order() != n {
        return Err(GjbdError::InvalidPartition(format!("{partition} does not sum to {n}")));
    }
    if snr_db.is_nan() {
        return Err(GjbdError::format("snr_db", "SNR is NaN"));
    }
    let sigma = sigma_of_snr(snr_db);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| -> Complex<T> {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = if real_valued { 0.0 } else { StandardNormal.sample(&mut rng) };
        cplx(lit(re * scale), lit(im * scale))
    };

    let v_mix = CMat::<T>::from_fn(n, n, |_, _| draw(1.0));
    let labels = partition.labels();
    let d_mats: Vec<CMat<T>> = (0..=p)
        .map(|_| CMat::from_fn(n, n, |r, c| draw(if labels[r] == labels[c] { 1.0 } else { sigma })))
        .collect();
    let vh = v_mix.adjoint();
    let mats = d_mats.iter().map(|d| &vh * d * &v_mix).collect();
    Ok(ProblemInstance {
        ms: MatrixSet::new(mats)?,
        v_mix,
        d_mats,
        true_partition: partition.clone(),
        snr_db,
        seed,
        real_valued,
    })
}

/// A diagonalizer known to solve a fixture.
#[derive(Clone, Debug)]
pub struct KnownSolution<T: Real> {
    pub partition: Partition,
    pub w: CMat<T>,
    /// The same diagonalizer in exact arithmetic, when it is printed exactly.
    pub exact_w: Option<ExactMatrix>,
    /// Bound on `max_i ||OffBdiag(W^H A_i W)||_F / ||W^H A_i W||_F`.
    pub residual_bound: f64,
}

/// A hard-coded example matrix set with its known solutions.
#[derive(Clone, Debug)]
pub struct Fixture<T: Real> {
    pub name: &'static str,
    pub ms: MatrixSet<T>,
    /// The matrices in exact arithmetic.
    pub exact_mats: Vec<ExactMatrix>,
    pub known_solutions: Vec<KnownSolution<T>>,
    /// Printed eigenvalues of the matrix polynomial, if any.
    pub printed_eigenvalues: Vec<Complex<T>>,
    /// Printed unit eigenvectors, one per column, if any.
    pub printed_vectors: Option<CMat<T>>,
    /// Mixing matrix `V`, if the set was built from one.
    pub mixing: Option<CMat<T>>,
    /// The block factors `D_i`, if any.
    pub d_mats: Vec<CMat<T>>,
    pub notes: &'static str,
}

pub const FIXTURE_NAMES: [&str; 3] = ["sec2-3x3", "ex41-complex", "sec44-counterexample"];

pub fn fixture<T: Real>(name: &str) -> Result<Fixture<T>> {
    match name {
        "sec2-3x3" => Ok(sec2_3x3()),
        "ex41-complex" => Ok(ex41_complex()),
        "sec44-counterexample" => Ok(sec44_counterexample()),
        other => Err(GjbdError::UnknownFixture(other.to_string())),
    }
}

fn float_set<T: Real>(exact_mats: &[ExactMatrix]) -> MatrixSet<T> {
    MatrixSet::new(exact_mats.iter().map(exact::to_float).collect()).expect("fixture matrices are valid")
}

fn columns<T: Real>(m: &CMat<T>, cols: &[usize]) -> CMat<T> {
    CMat::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

fn sec2_3x3<T: Real>() -> Fixture<T> {
    let exact_mats = vec![
        exact::integer_matrix(3, 3, &[7, 8, 9, 4, -12, -8, 5, -4, 7]),
        exact::integer_matrix(3, 3, &[-8, 8, 8, -4, 4, 0, -4, 12, 0]),
        exact::integer_matrix(3, 3, &[5, 0, 3, -8, 4, -4, -5, 4, 1]),
    ];
    #[rustfmt::skip]
    let x = exact::matrix(3, 6, &[
        ("-0.1690", "0"), ("-0.5774", "0"), ("0.3981", "0.4094"), ("0.3981", "-0.4094"), ("-0.5774", "0"), ("0.4904", "0"),
        ("-0.9710", "0"), ("-0.5774", "0"), ("0.1108", "0.5792"), ("0.1108", "-0.5792"), ("-0.5774", "0"), ("-0.7205", "0"),
        ("-0.1690", "0"), ("0.5774", "0"), ("0.3981", "0.4094"), ("0.3981", "-0.4094"), ("0.5774", "0"), ("0.4904", "0"),
    ]);
    let x: CMat<T> = exact::to_float(&x);
    let eig = |re: f64, im: f64| cplx(lit::<T>(re), lit(im));
    Fixture {
        name: "sec2-3x3",
        ms: float_set(&exact_mats),
        known_solutions: vec![KnownSolution {
            partition: Partition::new(vec![1, 2]).expect("valid"),
            w: columns(&x, &[1, 0, 5]),
            exact_w: None,
            residual_bound: 1e-3,
        }],
        exact_mats,
        printed_eigenvalues: vec![
            eig(-3.5830, 0.0),
            eig(3.0, 0.0),
            eig(-0.5283, 1.3793),
            eig(-0.5283, -1.3793),
            eig(1.0, 0.0),
            eig(0.6396, 0.0),
        ],
        printed_vectors: Some(x),
        mixing: None,
        d_mats: Vec::new(),
        notes: "Integer degree-2 set of order 3; printed eigenvectors to 4 decimals.",
    }
}

fn ex41_complex<T: Real>() -> Fixture<T> {
    #[rustfmt::skip]
    let v = exact::matrix(3, 3, &[
        ("0.5377", "2.7694"), ("0.8622", "0.7254"), ("-0.4336", "-0.2050"),
        ("1.8339", "-1.3499"), ("0.3188", "-0.0631"), ("0.3426", "-0.1241"),
        ("-2.2588", "3.0349"), ("-1.3077", "0.7147"), ("3.5784", "1.4897"),
    ]);
    #[rustfmt::skip]
    let d = [
        exact::matrix(3, 3, &[
            ("0.2939", "-0.7873"), ("0.0137", "0.0044"), ("-0.0171", "0.0038"),
            ("0.0032", "-0.0086"), ("0.8884", "-2.9443"), ("-1.0689", "0.3252"),
            ("0.0031", "-0.0003"), ("-1.1471", "1.4384"), ("-0.8095", "-0.7549"),
        ]),
        exact::matrix(3, 3, &[
            ("-0.1649", "0.6277"), ("-0.0077", "0.0022"), ("0.0037", "0.0075"),
            ("-0.0109", "0.0055"), ("1.0933", "-1.2141"), ("-0.8637", "-0.0068"),
            ("0.0003", "0.0110"), ("1.1093", "-1.1135"), ("0.0774", "1.5326"),
        ]),
        exact::matrix(3, 3, &[
            ("1.5442", "0.0859"), ("-0.0076", "0.0025"), ("-0.0140", "0.0062"),
            ("-0.0018", "0.0142"), ("-1.4916", "-0.6156"), ("-1.0616", "-0.1924"),
            ("-0.0020", "0.0029"), ("-0.7423", "0.7481"), ("2.3505", "0.8886"),
        ]),
    ];
    #[rustfmt::skip]
    let x = exact::matrix(3, 6, &[
        ("-0.5269", "-0.3384"), ("-0.3566", "0.4066"), ("0.0646", "-0.5182"), ("0.1636", "-0.3165"), ("-0.2841", "0.2244"), ("0.4363", "-0.4082"),
        ("-0.1210", "-0.7587"), ("-0.8248", "0.0209"), ("0.0578", "-0.7205"), ("0.7059", "0.6000"), ("-0.4017", "-0.8314"), ("0.7443", "-0.1520"),
        ("-0.1247", "0.0436"), ("-0.0681", "0.1491"), ("-0.4029", "-0.2062"), ("0.0065", "-0.1214"), ("-0.0599", "0.1128"), ("-0.0381", "-0.2541"),
    ]);
    // This example mixes as V D_i V^H, so the reference diagonalizer is V^-H.
    let vh = exact::adjoint(&v);
    let exact_mats: Vec<ExactMatrix> = d.iter().map(|di| &v * di * &vh).collect();
    let v_f: CMat<T> = exact::to_float(&v);
    let w_true = v_f.adjoint().try_inverse().expect("V is nonsingular");
    Fixture {
        name: "ex41-complex",
        ms: float_set(&exact_mats),
        known_solutions: vec![KnownSolution {
            partition: Partition::new(vec![1, 2]).expect("valid"),
            w: w_true,
            exact_w: None,
            residual_bound: 2e-2,
        }],
        exact_mats,
        printed_eigenvalues: Vec::new(),
        printed_vectors: Some(exact::to_float(&x)),
        mixing: Some(v_f),
        d_mats: d.iter().map(exact::to_float).collect(),
        notes: "Approximately (1,2)-block-diagonal complex set of order 3 built as V D_i V^H.",
    }
}

fn sec44_counterexample<T: Real>() -> Fixture<T> {
    let exact_mats = vec![
        exact::integer_matrix(3, 3, &[1, 1, 1, 1, 1, -3, -3, 1, 1]),
        exact::integer_matrix(3, 3, &[3, -1, 1, -1, 3, -3, -3, 1, 3]),
    ];
    let w_real = exact::integer_matrix(3, 3, &[1, 1, 0, 1, 0, 1, 0, 1, 1]);
    #[rustfmt::skip]
    let w_complex = exact::matrix(3, 3, &[
        ("1", "0"), ("1", "-1"), ("1", "1"),
        ("1", "0"), ("1", "1"), ("1", "-1"),
        ("0", "0"), ("2", "0"), ("2", "0"),
    ]);
    Fixture {
        name: "sec44-counterexample",
        ms: float_set(&exact_mats),
        known_solutions: vec![
            KnownSolution {
                partition: Partition::new(vec![1, 2]).expect("valid"),
                w: exact::to_float(&w_real),
                exact_w: Some(w_real),
                residual_bound: 0.0,
            },
            KnownSolution {
                partition: Partition::singletons(3),
                w: exact::to_float(&w_complex),
                exact_w: Some(w_complex),
                residual_bound: 0.0,
            },
        ],
        exact_mats,
        printed_eigenvalues: Vec::new(),
        printed_vectors: None,
        mixing: None,
        d_mats: Vec::new(),
        notes: "Real integer pair with a real (1,2) and a complex (1,1,1) solution that are not equivalent.",
    }
}

/// Real matrices of a real instance, for callers that want `DMatrix<T>`.
pub fn real_parts<T: Real>(ms: &MatrixSet<T>) -> Vec<DMatrix<T>> {
    ms.matrices().iter().map(|a| a.map(|z| z.re)).collect()
}
