//! Block structure from the interaction matrix `H` and its thresholded graph.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GjbdError, Result};
use crate::matpoly::MatrixSet;
use crate::partition::Partition;
use crate::scalar::{lit, CMat, Real};

/// `H = sum_i (|X^H A_i X| + |X^H A_i^H X|)`, entrywise moduli.
pub fn interaction_matrix<T: Real>(ms: &MatrixSet<T>, x_mat: &CMat<T>) -> DMatrix<T> {
    let n = x_mat.ncols();
    let mut h = DMatrix::<T>::zeros(n, n);
    for c in ms.congruence(x_mat) {
        for col in 0..n {
            for row in 0..n {
                // |(X^H A^H X)(r, c)| = |(X^H A X)(c, r)|.
                h[(row, col)] += c[(row, col)].modulus() + c[(col, row)].modulus();
            }
        }
    }
    h
}

/// How the two directed threshold tests on a pair combine into one edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrization {
    /// Edge if either column mean is exceeded.
    #[default]
    Or,
    /// Edge only if both column means are exceeded.
    And,
}

/// Thresholded graph of `H`: the directed test `h_ij > mean(H(:, j))` (the
/// column mean includes the diagonal, inequality strict), made undirected by
/// `rule`.
pub fn adjacency<T: Real>(h: &DMatrix<T>, rule: Symmetrization) -> DMatrix<bool> {
    let n = h.nrows();
    let denom = lit::<T>(n as f64);
    let means: Vec<T> = (0..n).map(|j| h.column(j).sum() / denom).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return false;
        }
        let down = h[(i, j)] > means[j];
        let across = h[(j, i)] > means[i];
        match rule {
            Symmetrization::Or => down || across,
            Symmetrization::And => down && across,
        }
    })
}

/// Combinatorial Laplacian (degree minus adjacency) of the thresholded graph.
pub fn laplacian<T: Real>(h: &DMatrix<T>) -> DMatrix<T> {
    laplacian_with(h, Symmetrization::Or)
}

pub fn laplacian_with<T: Real>(h: &DMatrix<T>, rule: Symmetrization) -> DMatrix<T> {
    let adj = adjacency(h, rule);
    let n = h.nrows();
    let mut l = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if adj[(i, j)] {
                l[(i, j)] = -T::one();
                l[(i, i)] += T::one();
            }
        }
    }
    l
}

/// Which labeling the block structure is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clusterer {
    /// Connected components of the graph behind the Laplacian.
    #[default]
    Components,
    /// k-means on the rows of the zero-eigenvalue eigenvectors.
    Kmeans,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub partition: Partition,
    /// `perm[k]` is the column of `X` placed at position `k`.
    pub perm: Vec<usize>,
    /// Ascending eigenvalues of the Laplacian.
    pub laplacian_spectrum: Vec<f64>,
    pub n_zero: usize,
    /// Cluster label of every column of `X`, clusters numbered by their
    /// smallest member.
    pub labels: Vec<usize>,
}

impl BlockStructure {
    /// Columns of `x_mat` reordered by `perm`.
    pub fn permute<T: Real>(&self, x_mat: &CMat<T>) -> CMat<T> {
        CMat::from_fn(x_mat.nrows(), self.perm.len(), |r, c| x_mat[(r, self.perm[c])])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Eigenvalues at most `tol_zero * lambda_max` count as zero.
    pub tol_zero: f64,
    pub clusterer: Clusterer,
    /// Seeds the k-means++ initialization.
    pub seed: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { tol_zero: 1e-8, clusterer: Clusterer::Components, seed: 0 }
    }
}

/// Counts the zero eigenvalues of `L`, labels the vertices by connected
/// components and by k-means, and builds the structure from the chosen
/// labeling. A disagreement between the two labelings is returned as
/// [`GjbdError::InconsistentClustering`] carrying the chosen structure.
pub fn detect_blocks<T: Real>(l: &DMatrix<T>, opts: &DetectOptions) -> Result<BlockStructure> {
    let n = l.nrows();
    let eig = SymmetricEigen::new(l.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("eigenvalue is NaN").then(a.cmp(&b)));
    let spectrum: Vec<T> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let largest = spectrum.last().copied().unwrap_or_else(T::zero);
    let scale = if largest > T::zero() { largest } else { T::one() };
    let threshold = lit::<T>(opts.tol_zero) * scale;
    let n_zero = spectrum.iter().filter(|&&v| v <= threshold).count();

    let components = canonical(&components_of(l));
    let null_basis = DMatrix::<T>::from_fn(n, n_zero, |r, c| eig.eigenvectors[(r, order[c])]);
    let kmeans = canonical(&kmeans_pp(&null_basis, n_zero.max(1), opts.seed));

    let chosen = match opts.clusterer {
        Clusterer::Components => &components,
        Clusterer::Kmeans => &kmeans,
    };
    let structure = structure_from_labels(chosen, &spectrum, n_zero);
    if components != kmeans {
        return Err(GjbdError::InconsistentClustering { components, kmeans, structure: Box::new(structure) });
    }
    Ok(structure)
}

fn structure_from_labels<T: Real>(labels: &[usize], spectrum: &[T], n_zero: usize) -> BlockStructure {
    let t = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; t];
    for &c in labels {
        sizes[c] += 1;
    }
    let mut perm: Vec<usize> = (0..labels.len()).collect();
    perm.sort_by_key(|&i| (labels[i], i));
    BlockStructure {
        partition: Partition::new(sizes).expect("every label is used"),
        perm,
        laplacian_spectrum: spectrum.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
        n_zero,
        labels: labels.to_vec(),
    }
}

/// Renumbers labels so that clusters are numbered in order of their
/// smallest member.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Connected components of the graph whose edges are the negative
/// off-diagonal entries of `l`.
pub fn components_of<T: Real>(l: &DMatrix<T>) -> Vec<usize> {
    let n = l.nrows();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if u != v && (l[(v, u)] < T::zero() || l[(u, v)] < T::zero()) && label[u] == usize::MAX {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

/// Lloyd's k-means on the rows of `points`, initialized by k-means++ with a
/// seeded generator. Returns a label per row.
pub fn kmeans_pp<T: Real>(points: &DMatrix<T>, k: usize, seed: u64) -> Vec<usize> {
    let (n, d) = points.shape();
    if n == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let dist2 = |i: usize, center: &[T]| -> T {
        (0..d).fold(T::zero(), |acc, c| {
            let diff = points[(i, c)] - center[c];
            acc + diff * diff
        })
    };
    let row = |i: usize| -> Vec<T> { (0..d).map(|c| points[(i, c)]).collect() };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut nearest: Vec<T> = (0..n).map(|i| dist2(i, &centers[0])).collect();
    while centers.len() < k {
        let total = nearest.iter().fold(T::zero(), |a, &b| a + b).to_f64().unwrap_or(0.0);
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                let w = w.to_f64().unwrap_or(0.0);
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(row(pick));
        for (i, best) in nearest.iter_mut().enumerate() {
            let dd = dist2(i, centers.last().expect("just pushed"));
            if dd < *best {
                *best = dd;
            }
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = dist2(i, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let dd = dist2(i, center);
                if dd < best_d {
                    best = c;
                    best_d = dd;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let m = lit::<T>(members.len() as f64);
            for (dim, value) in center.iter_mut().enumerate() {
                *value = members.iter().fold(T::zero(), |a, &i| a + points[(i, dim)]) / m;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks_h(sizes: &[usize]) -> DMatrix<f64> {
        let p = Partition::new(sizes.to_vec()).unwrap();
        let labels = p.labels();
        let n = labels.len();
        DMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 })
    }

    #[test]
    fn two_all_ones_blocks() {
        let l = laplacian(&blocks_h(&[1, 2]));
        let s = detect_blocks(&l, &DetectOptions::default()).unwrap();
        assert_eq!(s.n_zero, 2);
        assert_eq!(s.partition.parts(), &[1, 2]);
        assert_eq!(s.perm, vec![0, 1, 2]);
    }

    #[test]
    fn uniform_h_gives_singletons() {
        let h = DMatrix::<f64>::from_element(4, 4, 1.0);
        let l = laplacian(&h);
        assert_eq!(l, DMatrix::zeros(4, 4));
        let s = detect_blocks(&l, &DetectOptions::default()).unwrap();
        assert_eq!(s.n_zero, 4);
        assert_eq!(s.partition, Partition::singletons(4));
    }

    #[test]
    fn interleaved_clusters_are_grouped() {
        // Vertices 0 and 2 form one cluster, 1 and 3 another.
        let h = DMatrix::from_row_slice(4, 4, &[2.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 2.0]);
        for clusterer in [Clusterer::Components, Clusterer::Kmeans] {
            let opts = DetectOptions { clusterer, ..Default::default() };
            let s = detect_blocks(&laplacian(&h), &opts).unwrap();
            assert_eq!(s.partition.parts(), &[2, 2]);
            assert_eq!(s.perm, vec![0, 2, 1, 3]);
            assert_eq!(s.labels, vec![0, 1, 0, 1]);
        }
    }

    #[test]
    fn and_rule_drops_one_sided_edges() {
        // h_01 exceeds the mean of column 1 but not of column 0.
        let h = DMatrix::from_row_slice(2, 2, &[10.0, 1.0, 1.0, 0.5]);
        assert!(adjacency(&h, Symmetrization::Or)[(0, 1)]);
        assert!(!adjacency(&h, Symmetrization::And)[(0, 1)]);
    }

    #[test]
    fn canonical_numbering() {
        assert_eq!(canonical(&[5, 5, 2, 7, 2]), vec![0, 0, 1, 2, 1]);
    }
}
