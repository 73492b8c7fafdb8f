//! JSON containers for matrix sets and solutions.
//!
//! Complex entries are `[re, im]` pairs and matrices are lists of rows.
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so a write/read cycle is lossless.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::datagen::ProblemInstance;
use crate::error::{GjbdError, Result};
use crate::matpoly::MatrixSet;
use crate::partition::Partition;
use crate::pipeline::SolveTrace;
use crate::refine::Solution;
use crate::scalar::CMat;

pub const FORMAT_VERSION: u32 = 1;

/// Row-major `[re, im]` pairs.
pub type PairRows = Vec<Vec<[f64; 2]>>;

pub fn to_pairs(m: &CMat<f64>) -> PairRows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Parses `rows` as a `shape.0 x shape.1` matrix, naming `field` on failure.
pub fn from_pairs(rows: &PairRows, shape: (usize, usize), field: &str) -> Result<CMat<f64>> {
    if rows.len() != shape.0 {
        return Err(GjbdError::format(field, format!("has {} rows, expected {}", rows.len(), shape.0)));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(GjbdError::format(
                format!("{field}[{r}]"),
                format!("has {} entries, expected {}", row.len(), shape.1),
            ));
        }
        if let Some(c) = row.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(GjbdError::format(format!("{field}[{r}][{c}]"), "is not finite"));
        }
    }
    Ok(CMat::from_fn(shape.0, shape.1, |r, c| Complex::new(rows[r][c][0], rows[r][c][1])))
}

/// SNR in decibels, written as the string `"inf"` when infinite.
pub mod snr_serde {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("`{t}` is not an SNR"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub v_mix: PairRows,
    pub partition: Vec<usize>,
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSetFile {
    pub format_version: u32,
    pub n: usize,
    pub p: usize,
    pub hermitian: bool,
    pub matrices: Vec<PairRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl MatrixSetFile {
    pub fn from_set(ms: &MatrixSet<f64>) -> Self {
        MatrixSetFile {
            format_version: FORMAT_VERSION,
            n: ms.order(),
            p: ms.degree(),
            hermitian: ms.hermitian(),
            matrices: ms.matrices().iter().map(to_pairs).collect(),
            ground_truth: None,
        }
    }

    pub fn from_instance(inst: &ProblemInstance<f64>) -> Self {
        MatrixSetFile {
            ground_truth: Some(GroundTruth {
                v_mix: to_pairs(&inst.v_mix),
                partition: inst.true_partition.parts().to_vec(),
                snr_db: inst.snr_db,
                seed: inst.seed,
            }),
            ..Self::from_set(&inst.ms)
        }
    }

    /// Checks the header fields against the data and builds the set.
    pub fn matrix_set(&self) -> Result<MatrixSet<f64>> {
        if self.format_version != FORMAT_VERSION {
            return Err(GjbdError::format(
                "format_version",
                format!("{} is not supported (expected {FORMAT_VERSION})", self.format_version),
            ));
        }
        if self.n == 0 {
            return Err(GjbdError::format("n", "must be positive"));
        }
        if self.matrices.len() != self.p + 1 {
            return Err(GjbdError::format(
                "matrices",
                format!("has {} matrices, expected p + 1 = {}", self.matrices.len(), self.p + 1),
            ));
        }
        let mats = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| from_pairs(m, (self.n, self.n), &format!("matrices[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let ms = MatrixSet::new(mats)?;
        if ms.hermitian() != self.hermitian {
            log::warn!("file says hermitian = {}, data says {}", self.hermitian, ms.hermitian());
        }
        Ok(ms)
    }

    /// Ground-truth mixing matrix and partition, if present.
    pub fn truth(&self) -> Result<Option<(CMat<f64>, Partition)>> {
        let Some(gt) = &self.ground_truth else {
            return Ok(None);
        };
        let v = from_pairs(&gt.v_mix, (self.n, self.n), "ground_truth.v_mix")?;
        let part = Partition::new(gt.partition.clone())
            .map_err(|e| GjbdError::format("ground_truth.partition", e.to_string()))?;
        if part.order() != self.n {
            return Err(GjbdError::format("ground_truth.partition", format!("does not sum to n = {}", self.n)));
        }
        Ok(Some((v, part)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub n: usize,
    pub partition: Vec<usize>,
    pub w: PairRows,
    pub cost: f64,
    /// `[||OffBdiag(W^H A_i W)||_F, ||W^H A_i W||_F]` per matrix.
    pub per_matrix_residuals: Vec<[f64; 2]>,
    pub refine_loops: usize,
    pub is_real: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<SolveTrace>,
}

impl SolutionFile {
    pub fn new(sol: &Solution<f64>, trace: Option<SolveTrace>) -> Self {
        SolutionFile {
            format_version: FORMAT_VERSION,
            n: sol.w_mat.nrows(),
            partition: sol.partition.parts().to_vec(),
            w: to_pairs(&sol.w_mat),
            cost: sol.cost,
            per_matrix_residuals: sol.per_matrix_residuals.iter().map(|&(a, b)| [a, b]).collect(),
            refine_loops: sol.refine_loops,
            is_real: sol.is_real,
            trace,
        }
    }

    pub fn diagonalizer(&self) -> Result<(CMat<f64>, Partition)> {
        let part =
            Partition::new(self.partition.clone()).map_err(|e| GjbdError::format("partition", e.to_string()))?;
        if part.order() != self.n {
            return Err(GjbdError::format("partition", format!("does not sum to n = {}", self.n)));
        }
        Ok((from_pairs(&self.w, (self.n, self.n), "w")?, part))
    }
}

/// Parses JSON, reporting syntax and schema errors as [`GjbdError::Format`].
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| GjbdError::format("json", e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable value")
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_instance;

    #[test]
    fn instance_round_trip() {
        let part = Partition::new(vec![1, 2]).unwrap();
        for snr in [f64::INFINITY, 40.0] {
            let inst = random_instance::<f64>(3, &part, 2, snr, 11, false).unwrap();
            let file = MatrixSetFile::from_instance(&inst);
            let text = to_json(&file);
            let back: MatrixSetFile = from_json(&text).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.matrix_set().unwrap().matrices(), inst.ms.matrices());
            assert_eq!(back.truth().unwrap().unwrap().0, inst.v_mix);
        }
    }

    #[test]
    fn infinite_snr_is_a_string() {
        let part = Partition::new(vec![1, 1]).unwrap();
        let inst = random_instance::<f64>(2, &part, 1, f64::INFINITY, 0, true).unwrap();
        assert!(to_json(&MatrixSetFile::from_instance(&inst)).contains("\"snr_db\":\"inf\""));
    }

    #[test]
    fn bad_field_is_named() {
        let part = Partition::new(vec![1, 1]).unwrap();
        let inst = random_instance::<f64>(2, &part, 1, 30.0, 0, true).unwrap();
        let mut file = MatrixSetFile::from_instance(&inst);
        file.matrices[1][0].pop();
        match file.matrix_set() {
            Err(GjbdError::Format { field, .. }) => assert_eq!(field, "matrices[1][0]"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(from_json::<MatrixSetFile>("{\"n\": 2}"), Err(GjbdError::Format { .. })));
    }
}
