//! Seeded benchmark sweeps over the random model, one CSV row per trial.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{derive_seed, random_instance};
use crate::error::{GjbdError, Result};
use crate::metrics::{condition_2, performance_index};
use crate::partition::Partition;
use crate::pipeline::{solve_detailed, SolveOptions};

/// Bumped whenever the columns of [`BenchRow`] change.
pub const BENCH_SCHEMA_VERSION: u32 = 1;

pub const BENCH_HEADER: &str = "schema_version,experiment,trial,seed,n,partition,p,snr_db,success_strict,\
success_merge,pi,pi_pre,cond_w,cost_pre,cost_post,ms_eigen_basis,ms_structure,ms_realify,ms_refine,ms_total,error";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// `n = 9`, blocks `(3,3,3)`, 25 matrices, SNR 30 to 100.
    Table2P1,
    /// `n = 9`, blocks `(2,3,4)`, 25 matrices, SNR 30 to 100.
    Table2P2,
    /// Both of the above over SNR 40, 60, 80, 100.
    Fig12Sweep,
    /// `n = 9`, blocks `(2,3,4)`, 20 to 200 matrices, SNR 80.
    ScalingP3,
    /// `n = 9m`, blocks `(2m,3m,4m)`, 10 matrices, SNR 80.
    ScalingP4,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Table2P1,
        Experiment::Table2P2,
        Experiment::Fig12Sweep,
        Experiment::ScalingP3,
        Experiment::ScalingP4,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Table2P1 => "table2-p1",
            Experiment::Table2P2 => "table2-p2",
            Experiment::Fig12Sweep => "fig12-sweep",
            Experiment::ScalingP3 => "scaling-p3",
            Experiment::ScalingP4 => "scaling-p4",
        }
    }

    /// Default parameter grid.
    pub fn settings(self) -> Vec<Setting> {
        let snr_grid: Vec<f64> = (3..=10).map(|k| 10.0 * k as f64).collect();
        match self {
            Experiment::Table2P1 => snr_grid.iter().map(|&s| Setting::p1(s)).collect(),
            Experiment::Table2P2 => snr_grid.iter().map(|&s| Setting::p2(s)).collect(),
            Experiment::Fig12Sweep => [40.0, 60.0, 80.0, 100.0]
                .iter()
                .flat_map(|&s| [Setting::p1(s), Setting::p2(s)])
                .collect(),
            Experiment::ScalingP3 => (1..=10).map(|k| Setting::new(vec![2, 3, 4], 20 * k - 1, 80.0)).collect(),
            Experiment::ScalingP4 => (1..=6).map(Setting::p4).collect(),
        }
    }
}

impl FromStr for Experiment {
    type Err = GjbdError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| GjbdError::format("experiment", format!("unknown experiment `{s}`")))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// One point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub partition: Partition,
    /// Polynomial degree; the set has `p + 1` matrices.
    pub p: usize,
    pub snr_db: f64,
}

impl Setting {
    pub fn new(parts: Vec<usize>, p: usize, snr_db: f64) -> Self {
        Setting { partition: Partition::new(parts).expect("positive block sizes"), p, snr_db }
    }

    pub fn p1(snr_db: f64) -> Self {
        Setting::new(vec![3, 3, 3], 24, snr_db)
    }

    pub fn p2(snr_db: f64) -> Self {
        Setting::new(vec![2, 3, 4], 24, snr_db)
    }

    pub fn p4(m: usize) -> Self {
        Setting::new(vec![2 * m, 3 * m, 4 * m], 9, 80.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub schema_version: u32,
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub partition: String,
    pub p: usize,
    pub snr_db: f64,
    pub success_strict: bool,
    pub success_merge: bool,
    pub pi: Option<f64>,
    /// Performance index of the diagonalizer before refinement.
    pub pi_pre: Option<f64>,
    pub cond_w: Option<f64>,
    pub cost_pre: Option<f64>,
    pub cost_post: Option<f64>,
    pub ms_eigen_basis: f64,
    pub ms_structure: f64,
    pub ms_realify: f64,
    pub ms_refine: f64,
    pub ms_total: f64,
    pub error: String,
}

/// Solves one seeded instance and scores it against the ground truth.
pub fn run_trial(experiment: &str, setting: &Setting, trial: usize, seed: u64, opts: &SolveOptions) -> BenchRow {
    let n = setting.partition.order();
    let mut row = BenchRow {
        schema_version: BENCH_SCHEMA_VERSION,
        experiment: experiment.to_string(),
        trial,
        seed,
        n,
        partition: setting.partition.to_string(),
        p: setting.p,
        snr_db: setting.snr_db,
        success_strict: false,
        success_merge: false,
        pi: None,
        pi_pre: None,
        cond_w: None,
        cost_pre: None,
        cost_post: None,
        ms_eigen_basis: 0.0,
        ms_structure: 0.0,
        ms_realify: 0.0,
        ms_refine: 0.0,
        ms_total: 0.0,
        error: String::new(),
    };
    let inst = match random_instance::<f64>(n, &setting.partition, setting.p, setting.snr_db, seed, false) {
        Ok(inst) => inst,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    let clock = Instant::now();
    let out = solve_detailed(&inst.ms, opts);
    row.ms_total = clock.elapsed().as_secs_f64() * 1e3;
    let out = match out {
        Ok(out) => out,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    row.ms_eigen_basis = ms(out.times.eigen_basis);
    row.ms_structure = ms(out.times.structure);
    row.ms_realify = ms(out.times.realify);
    row.ms_refine = ms(out.times.refine);
    let truth = inst.unmixing();
    let part = &out.solution.partition;
    row.success_strict = part.same_sizes(&inst.true_partition);
    row.success_merge = part.merges_into(&inst.true_partition);
    let score = |w| performance_index(&truth, &inst.true_partition, w, part).ok();
    row.pi = score(&out.solution.w_mat);
    row.pi_pre = score(&out.initial_w);
    row.cond_w = Some(condition_2(&out.solution.w_mat));
    row.cost_pre = Some(out.trace.pre_refine_cost);
    row.cost_post = Some(out.trace.post_refine_cost);
    row
}

/// Worker count from `GJBD_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("GJBD_THREADS").ok()?.trim().parse().ok().filter(|&k| k > 0)
}

/// Runs `trials` trials per setting. Trial `k` of every setting uses
/// `derive_seed(master_seed, k)`, so settings that differ only in SNR share
/// their mixing matrix and diagonal blocks. Rows come back in setting, then
/// trial order regardless of scheduling.
pub fn run_experiment(
    experiment: &str,
    settings: &[Setting],
    trials: usize,
    master_seed: u64,
    opts: &SolveOptions,
) -> Vec<BenchRow> {
    let jobs: Vec<(usize, usize)> = (0..settings.len()).flat_map(|s| (0..trials).map(move |t| (s, t))).collect();
    let run = || {
        jobs.par_iter()
            .map(|&(s, t)| run_trial(experiment, &settings[s], t, derive_seed(master_seed, t as u64), opts))
            .collect()
    };
    match thread_cap() {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(BENCH_HEADER.split(',')).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV written by [`write_csv`], rejecting any other header.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.iter().collect::<Vec<_>>().join(",");
    if header != BENCH_HEADER {
        return Err(GjbdError::format("header", format!("unexpected CSV header `{header}`")));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> GjbdError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GjbdError::Io(io),
        other => GjbdError::format("csv", format!("{other:?}")),
    }
}

/// Aggregate of the rows sharing one setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub n: usize,
    pub partition: String,
    pub p: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub success_strict_pct: f64,
    pub success_merge_pct: f64,
    pub median_pi: Option<f64>,
    pub median_pi_pre: Option<f64>,
    pub mean_ms_eigen_basis: f64,
    pub mean_ms_structure: f64,
    pub mean_ms_refine: f64,
    pub mean_ms_total: f64,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) })
}

/// One summary per distinct setting, in order of first appearance.
pub fn summarize(rows: &[BenchRow]) -> Vec<Summary> {
    let key = |r: &BenchRow| (r.experiment.clone(), r.partition.clone(), r.p, r.snr_db.to_bits());
    let mut keys = Vec::new();
    for r in rows {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&BenchRow> = rows.iter().filter(|r| key(r) == k).collect();
            let count = group.len() as f64;
            let pct = |f: fn(&BenchRow) -> bool| 100.0 * group.iter().filter(|r| f(r)).count() as f64 / count;
            let mean = |f: fn(&BenchRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / count;
            let mut pis: Vec<f64> = group.iter().filter_map(|r| r.pi).collect();
            let mut pres: Vec<f64> = group.iter().filter_map(|r| r.pi_pre).collect();
            let first = group[0];
            Summary {
                experiment: first.experiment.clone(),
                n: first.n,
                partition: first.partition.clone(),
                p: first.p,
                snr_db: first.snr_db,
                trials: group.len(),
                success_strict_pct: pct(|r| r.success_strict),
                success_merge_pct: pct(|r| r.success_merge),
                median_pi: median(&mut pis),
                median_pi_pre: median(&mut pres),
                mean_ms_eigen_basis: mean(|r| r.ms_eigen_basis),
                mean_ms_structure: mean(|r| r.ms_structure),
                mean_ms_refine: mean(|r| r.ms_refine),
                mean_ms_total: mean(|r| r.ms_total),
            }
        })
        .collect()
}

/// Least-squares slope of `log(time)` against `log(n)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
