//! End-to-end solve: eigenvector basis, block structure, optional real
//! diagonalizer, refinement.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blockreveal::{detect_blocks, interaction_matrix, laplacian_with, BlockStructure, Clusterer, DetectOptions, Symmetrization};
use crate::eigsel::{eigen_basis, Eigenvalue, EigenvectorRoute, RANK_FACTOR};
use crate::error::{GjbdError, Result};
use crate::linalg::orthonormalize;
use crate::matpoly::MatrixSet;
use crate::metrics::condition_2;
use crate::partition::Partition;
use crate::refine::{check_realified, is_certified_nonsingular, offblock_cost, realify_unchecked, refine_block, Solution};
use crate::scalar::{lit, to_complex, CMat, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub refine_loops: usize,
    pub want_real: bool,
    /// Multiplier in the rank tolerance of the basis selection.
    pub rank_factor: f64,
    /// Relative threshold for zero Laplacian eigenvalues.
    pub tol_zero: f64,
    pub clusterer: Clusterer,
    pub symmetrization: Symmetrization,
    pub route: EigenvectorRoute,
    pub kmeans_seed: u64,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            refine_loops: 3,
            want_real: false,
            rank_factor: RANK_FACTOR,
            tol_zero: DetectOptions::default().tol_zero,
            clusterer: Clusterer::default(),
            symmetrization: Symmetrization::default(),
            route: EigenvectorRoute::default(),
            kmeans_seed: 0,
            record_trace: true,
        }
    }
}

/// What the eigenvector stage produced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    /// Condition number of the selected unit-norm eigenvectors.
    pub cond: f64,
    pub r_nn: f64,
    pub tol_rank: f64,
    /// Every pencil eigenvalue as `[re, im]`; `None` for infinite ones.
    pub eigenvalues: Vec<Option<[f64; 2]>>,
    /// Indices into the residual-ordered pool of the chosen vectors.
    pub selected: Vec<usize>,
    pub pool_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub eigen_basis: BasisSummary,
    pub structure: BlockStructure,
    /// k-means labels when they disagreed with the connected components.
    pub kmeans_labels: Option<Vec<usize>>,
    /// Cost of the permuted eigenvector basis.
    pub basis_cost: f64,
    /// Cost after orthonormalizing every block, the starting point of
    /// refinement.
    pub pre_refine_cost: f64,
    pub post_refine_cost: f64,
    pub realified: bool,
    pub warnings: Vec<String>,
}

/// Wall time per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub eigen_basis: Duration,
    pub structure: Duration,
    pub realify: Duration,
    pub refine: Duration,
}

/// Everything a solve returns, plus the pre-refinement diagonalizer.
#[derive(Clone, Debug)]
pub struct SolveOutput<T: Real> {
    pub solution: Solution<T>,
    pub trace: SolveTrace,
    /// Block-orthonormalized diagonalizer before refinement.
    pub initial_w: CMat<T>,
    pub times: StageTimes,
}

fn as_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Orthonormalizes every column block of `w`.
pub fn orthonormalize_blocks<T: Real>(partition: &Partition, w: &CMat<T>) -> CMat<T> {
    let mut out = w.clone();
    for r in partition.ranges() {
        let q = orthonormalize(&w.columns(r.start, r.len()).clone_owned());
        out.columns_mut(r.start, r.len()).copy_from(&q);
    }
    out
}

/// Runs the full method and returns the solution with its trace.
pub fn solve<T: Real>(ms: &MatrixSet<T>, opts: &SolveOptions) -> Result<(Solution<T>, SolveTrace)> {
    solve_detailed(ms, opts).map(|out| (out.solution, out.trace))
}

pub fn solve_detailed<T: Real>(ms: &MatrixSet<T>, opts: &SolveOptions) -> Result<SolveOutput<T>> {
    let n = ms.order();
    let mut warnings = Vec::new();

    let clock = Instant::now();
    let stage_one = if ms.degree() == 0 {
        let promoted = MatrixSet::new(vec![ms.matrices()[0].clone(), CMat::identity(n, n)])?;
        eigen_basis(&promoted, opts.route, lit(opts.rank_factor))?
    } else {
        eigen_basis(ms, opts.route, lit(opts.rank_factor))?
    };
    for index in &stage_one.dropped {
        warnings.push(GjbdError::ZeroBlock { index: *index }.to_string());
    }
    let basis = &stage_one.basis;
    let summary = BasisSummary {
        cond: as_f64(condition_2(&basis.x_mat)),
        r_nn: as_f64(basis.r_nn),
        tol_rank: as_f64(basis.tol_rank),
        eigenvalues: if opts.record_trace {
            stage_one
                .eigenvalues
                .iter()
                .map(|e| match e {
                    Eigenvalue::Finite(z) => Some([as_f64(z.re), as_f64(z.im)]),
                    Eigenvalue::Infinite => None,
                })
                .collect()
        } else {
            Vec::new()
        },
        selected: basis.pivot[..n].to_vec(),
        pool_size: basis.pool_size,
    };
    let t_basis = clock.elapsed();

    let rest = solve_from_basis(ms, &basis.x_mat, opts)?;
    warnings.extend(rest.warnings);
    for w in &warnings {
        log::warn!("{w}");
    }
    let trace = SolveTrace {
        eigen_basis: summary,
        structure: rest.structure,
        kmeans_labels: rest.kmeans_labels,
        basis_cost: rest.basis_cost,
        pre_refine_cost: rest.pre_refine_cost,
        post_refine_cost: as_f64(rest.solution.cost),
        realified: rest.realified,
        warnings,
    };
    Ok(SolveOutput {
        solution: rest.solution,
        trace,
        initial_w: rest.initial_w,
        times: StageTimes { eigen_basis: t_basis, ..rest.times },
    })
}

/// Result of the stages that follow the eigenvector basis.
#[derive(Clone, Debug)]
pub struct FromBasis<T: Real> {
    pub solution: Solution<T>,
    pub structure: BlockStructure,
    pub kmeans_labels: Option<Vec<usize>>,
    pub basis_cost: f64,
    pub pre_refine_cost: f64,
    pub initial_w: CMat<T>,
    pub realified: bool,
    pub warnings: Vec<String>,
    /// `eigen_basis` is left at zero.
    pub times: StageTimes,
}

/// Block structure, optional real diagonalizer and refinement, starting
/// from the nonsingular basis `x_mat`.
pub fn solve_from_basis<T: Real>(ms: &MatrixSet<T>, x_mat: &CMat<T>, opts: &SolveOptions) -> Result<FromBasis<T>> {
    let mut warnings = Vec::new();
    let clock = Instant::now();
    let h = interaction_matrix(ms, x_mat);
    let l = laplacian_with(&h, opts.symmetrization);
    let detect = DetectOptions { tol_zero: opts.tol_zero, clusterer: opts.clusterer, seed: opts.kmeans_seed };
    let (structure, kmeans_labels) = match detect_blocks(&l, &detect) {
        Ok(s) => (s, None),
        Err(GjbdError::InconsistentClustering { components, kmeans, structure }) => {
            warnings.push(format!("k-means labeling {kmeans:?} disagrees with connected components {components:?}"));
            (*structure, Some(kmeans))
        }
        Err(e) => return Err(e),
    };
    let partition = structure.partition.clone();
    let x_perm = structure.permute(x_mat);
    let basis_cost = as_f64(offblock_cost(ms, &partition, &x_perm));
    let mut w = orthonormalize_blocks(&partition, &x_perm);
    let t_structure = clock.elapsed();

    let clock = Instant::now();
    let mut realified = false;
    if opts.want_real {
        if !ms.is_real() {
            warnings.push(GjbdError::NotReal.to_string());
        } else {
            let real = realify_unchecked(&partition, &w);
            let real_c = to_complex(&real);
            if !is_certified_nonsingular(&real_c) {
                warnings.push("the real diagonalizer is singular; keeping the complex one".to_string());
            } else {
                if let Err(e) = check_realified(ms, &partition, &w, &real) {
                    warnings.push(e.to_string());
                }
                w = real_c;
                realified = true;
            }
        }
    }
    let t_realify = clock.elapsed();

    let clock = Instant::now();
    let initial_w = w.clone();
    let pre_refine_cost = as_f64(offblock_cost(ms, &partition, &w));
    let mut loops = 0;
    'sweeps: for _ in 0..opts.refine_loops {
        for j in 0..partition.len() {
            match refine_block(ms, &partition, &w, j) {
                Ok(next) => w = next,
                Err(e @ GjbdError::RankCollapse { .. }) => {
                    warnings.push(format!("{e}; refinement stopped"));
                    break 'sweeps;
                }
                Err(e) => return Err(e),
            }
        }
        loops += 1;
    }
    let solution = Solution::new(ms, partition, w, loops);
    let t_refine = clock.elapsed();

    Ok(FromBasis {
        solution,
        structure,
        kmeans_labels,
        basis_cost,
        pre_refine_cost,
        initial_w,
        realified,
        warnings,
        times: StageTimes { eigen_basis: Duration::ZERO, structure: t_structure, realify: t_realify, refine: t_refine },
    })
}
