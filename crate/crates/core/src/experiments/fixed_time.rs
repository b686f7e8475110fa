use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{predictions_csv, ExperimentConfig, MetricsReport, RunOutput};
use crate::error::{Error, Result};
use crate::mac::{InputVector, Mac, MacConfig, Mode};
use crate::ops::OpCounts;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedTimeParams {
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "nU")]
    pub n_u: usize,
    /// Active inputs per random item.
    pub active: usize,
    /// Stored-item counts at which costs are sampled; the last is the total stored.
    pub checkpoints: Vec<usize>,
    /// Operations per timing batch.
    pub timing_reps: usize,
    /// Timing batches per checkpoint; the fastest batch is reported.
    pub timing_batches: usize,
}

impl Default for FixedTimeParams {
    fn default() -> Self {
        Self {
            q: 8,
            k: 8,
            n_u: 1024,
            active: 32,
            checkpoints: vec![10, 100, 1_000, 10_000],
            timing_reps: 512,
            timing_batches: 15,
        }
    }
}

/// Costs of one store and one retrieval after `stored` items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpCheckpoint {
    pub stored: usize,
    pub store_ops: OpCounts,
    pub retrieve_ops: OpCounts,
    pub store_seconds: f64,
    pub retrieve_seconds: f64,
    /// Familiarity of a fresh random probe.
    pub probe_familiarity: f64,
}

fn random_input<R: Rng>(rng: &mut R, n: usize, active: usize) -> InputVector {
    let mut idx: Vec<u32> = sample(rng, n, active)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    idx.sort_unstable();
    InputVector::bottom_up(idx)
}

fn store<R: Rng>(
    mac: &mut Mac,
    input: &InputVector,
    rng: &mut R,
    ops: &mut OpCounts,
) -> Result<()> {
    let (code, _) = mac.encode(input, Mode::Learning, rng, ops)?;
    mac.learn_counted(input, &code, ops)?;
    Ok(())
}

fn fastest(batches: usize, mut batch: impl FnMut() -> Result<f64>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..batches {
        best = best.min(batch()?);
    }
    Ok(best)
}

fn measure(
    mac: &Mac,
    p: &FixedTimeParams,
    probes: &[InputVector],
    run_seed: u64,
) -> Result<OpCheckpoint> {
    let stored = mac.stored_count() as usize;
    let mut rng = seed::stream(run_seed, &[0xf17, stored as u64]);
    let mut store_ops = OpCounts::default();
    store(&mut mac.clone(), &probes[0], &mut rng, &mut store_ops)?;
    let mut retrieve_ops = OpCounts::default();
    let (_, g) = mac.encode(&probes[0], Mode::Retrieval, &mut rng, &mut retrieve_ops)?;

    let reps = p.timing_reps as f64;
    let store_seconds = fastest(p.timing_batches, || {
        let mut copy = mac.clone();
        let mut ops = OpCounts::default();
        let start = Instant::now();
        for input in probes {
            store(&mut copy, input, &mut rng, &mut ops)?;
        }
        Ok(start.elapsed().as_secs_f64() / reps)
    })?;
    let retrieve_seconds = fastest(p.timing_batches, || {
        let mut ops = OpCounts::default();
        let start = Instant::now();
        for input in probes {
            std::hint::black_box(mac.encode(input, Mode::Retrieval, &mut rng, &mut ops)?);
        }
        Ok(start.elapsed().as_secs_f64() / reps)
    })?;
    Ok(OpCheckpoint {
        stored,
        store_ops,
        retrieve_ops,
        store_seconds,
        retrieve_seconds,
        probe_familiarity: g,
    })
}

/// Stores random items into one mac, sampling per-operation primitive counts and wall
/// time at each checkpoint.
pub fn run_fixed_time(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = &cfg.fixed_time;
    if p.checkpoints.is_empty() || p.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "checkpoints must be non-empty and increasing".into(),
        ));
    }
    if p.active == 0 || p.active > p.n_u || p.timing_reps == 0 || p.timing_batches == 0 {
        return Err(Error::Config(
            "need 1 <= active <= nU and at least one timing rep and batch".into(),
        ));
    }
    let mut mac = Mac::new(MacConfig::new(p.q, p.k, p.n_u))?;
    let mut input_rng = seed::stream(cfg.seed, &[0xf16]);
    let mut code_rng = seed::stream(cfg.seed, &[0xf18]);
    let probes: Vec<InputVector> = (0..p.timing_reps)
        .map(|_| random_input(&mut input_rng, p.n_u, p.active))
        .collect();

    let start = Instant::now();
    let mut series = Vec::with_capacity(p.checkpoints.len());
    for &target in &p.checkpoints {
        while (mac.stored_count() as usize) < target {
            let input = random_input(&mut input_rng, p.n_u, p.active);
            store(&mut mac, &input, &mut code_rng, &mut OpCounts::default())?;
        }
        series.push(measure(&mac, p, &probes, cfg.seed)?);
    }

    let mut report = MetricsReport::new(cfg);
    report.train_seconds = start.elapsed().as_secs_f64();
    report.train_presentations = mac.stored_count() as usize;
    let first = &series[0];
    report.ops_constant = Some(
        series
            .iter()
            .all(|c| c.store_ops == first.store_ops && c.retrieve_ops == first.retrieve_ops),
    );
    let last = series.last().expect("non-empty");
    report.wall_time_ratio = Some(
        (last.store_seconds + last.retrieve_seconds)
            / (first.store_seconds + first.retrieve_seconds),
    );

    let mut csv = String::from(
        "stored,store_ops,retrieve_ops,store_row_reads,store_bit_reads,store_unit_updates,\
         store_weight_writes,store_random_draws,retrieve_row_reads,retrieve_bit_reads,\
         retrieve_unit_updates,store_seconds,retrieve_seconds,probe_familiarity\n",
    );
    for c in &series {
        let (s, r) = (&c.store_ops, &c.retrieve_ops);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.9},{:.9},{:.6}\n",
            c.stored,
            s.total(),
            r.total(),
            s.weight_row_reads,
            s.weight_bit_reads,
            s.unit_updates,
            s.weight_writes,
            s.random_draws,
            r.weight_row_reads,
            r.weight_bit_reads,
            r.unit_updates,
            c.store_seconds,
            c.retrieve_seconds,
            c.probe_familiarity
        ));
    }
    report.op_series = series;
    let mut out = RunOutput::new(report, predictions_csv(&[]));
    out.optime = Some(csv);
    Ok(out)
}
