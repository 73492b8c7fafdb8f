//! Ordered partitions of `n` and the block-diagonal split they induce.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, Scalar};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{GjbdError, Result};

/// Ordered block sizes `(n_1, ..., n_t)`, each at least one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(GjbdError::InvalidPartition("no blocks".into()));
        }
        if let Some(k) = parts.iter().position(|&m| m == 0) {
            return Err(GjbdError::InvalidPartition(format!("block {k} is empty")));
        }
        Ok(Partition { parts })
    }

    /// The single block `(n)`.
    pub fn whole(n: usize) -> Self {
        Partition { parts: vec![n] }
    }

    /// `n` blocks of size one.
    pub fn singletons(n: usize) -> Self {
        Partition { parts: vec![1; n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of blocks `t`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Sum of the block sizes.
    pub fn order(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Index range of block `j`.
    pub fn range(&self, j: usize) -> Range<usize> {
        let start: usize = self.parts[..j].iter().sum();
        start..start + self.parts[j]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.parts.iter().scan(0, |start, &m| {
            let r = *start..*start + m;
            *start += m;
            Some(r)
        })
    }

    /// Block label of every index `0..n`.
    pub fn labels(&self) -> Vec<usize> {
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(j, &m)| std::iter::repeat_n(j, m))
            .collect()
    }

    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.parts.clone();
        s.sort_unstable();
        s
    }

    /// Equal multisets of block sizes.
    pub fn same_sizes(&self, other: &Partition) -> bool {
        self.sorted_sizes() == other.sorted_sizes()
    }

    /// True if the blocks of `self` can be grouped so that every group sums
    /// to one block of `coarse`, each block of `coarse` used exactly once.
    pub fn merges_into(&self, coarse: &Partition) -> bool {
        if self.order() != coarse.order() || self.len() < coarse.len() {
            return false;
        }
        let mut fine = self.parts.clone();
        fine.sort_unstable_by(|a, b| b.cmp(a));
        let mut room = coarse.parts.clone();
        fill(&fine, &mut room)
    }
}

fn fill(items: &[usize], room: &mut [usize]) -> bool {
    let Some((&first, rest)) = items.split_first() else {
        return room.iter().all(|&r| r == 0);
    };
    for k in 0..room.len() {
        // Bins with equal remaining room are interchangeable.
        if room[k] < first || room[..k].contains(&room[k]) {
            continue;
        }
        room[k] -= first;
        let ok = fill(rest, room);
        room[k] += first;
        if ok {
            return true;
        }
    }
    false
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = GjbdError;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl FromStr for Partition {
    type Err = GjbdError;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| GjbdError::InvalidPartition(format!("`{tok}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, m) in self.parts.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Keeps the diagonal blocks of `m` and zeroes everything else.
pub fn bdiag<N: Scalar + Zero>(m: &DMatrix<N>, partition: &Partition) -> DMatrix<N> {
    let labels = partition.labels();
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if labels[r] == labels[c] {
            m[(r, c)].clone()
        } else {
            N::zero()
        }
    })
}

/// Zeroes the diagonal blocks of `m`.
pub fn off_bdiag<N: Scalar + Zero>(m: &DMatrix<N>, partition: &Partition) -> DMatrix<N> {
    let labels = partition.labels();
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if labels[r] != labels[c] {
            m[(r, c)].clone()
        } else {
            N::zero()
        }
    })
}
