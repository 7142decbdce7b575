use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::{PartialTable, Pipeline};
use crate::readers::Reader;

/// Cumulative pipeline prefixes, cheapest first.
pub const BENCH_STAGES: [&str; 4] = ["ir", "ir_reader", "fabricqa", "fabricqa_extractor"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStage {
    /// Median questions per second over the repeats.
    pub qps: f64,
    pub median_latency_ms: f64,
    /// Population variance of `qps` across repeats.
    pub qps_variance: f64,
    pub qps_runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: usize,
    pub repeats: usize,
    pub stages: BTreeMap<String, BenchStage>,
}

impl BenchReport {
    /// Stages in pipeline order.
    pub fn ordered(&self) -> Vec<(&'static str, &BenchStage)> {
        BENCH_STAGES.iter().filter_map(|s| self.stages.get(*s).map(|v| (*s, v))).collect()
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs the full pipeline `repeats` times on one worker and reports the
/// throughput of each cumulative prefix (IR, +reader, +Answer Ranker,
/// +coherence and selection).
pub fn bench_throughput<R: Reader + ?Sized>(
    pipeline: &Pipeline<'_, R>,
    table: &PartialTable,
    repeats: usize,
) -> Result<BenchReport> {
    if pipeline.coherence.is_none() {
        return Err(Error::Config("benchmark needs coherence parameters".into()));
    }
    if repeats == 0 {
        return Err(Error::Config("benchmark needs at least one repeat".into()));
    }
    let single = Pipeline {
        jobs: 1,
        ..pipeline.clone()
    };
    let n = table.rows.len();
    let mut qps_runs: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(repeats)).collect();
    let mut latencies: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(repeats * n)).collect();
    for _ in 0..repeats {
        let (cells, report) = single.fill_table(table)?;
        let select_per_row = if n == 0 { 0.0 } else { report.select_ms / n as f64 };
        let mut totals = [0.0; 4];
        for c in &cells {
            let mut cum = c.timings.cumulative();
            cum[3] += select_per_row;
            for s in 0..4 {
                totals[s] += cum[s];
                latencies[s].push(cum[s]);
            }
        }
        for s in 0..4 {
            qps_runs[s].push(if totals[s] > 0.0 { n as f64 / (totals[s] / 1000.0) } else { 0.0 });
        }
    }
    let mut stages = BTreeMap::new();
    for (s, name) in BENCH_STAGES.iter().enumerate() {
        let runs = qps_runs[s].clone();
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        let variance = runs.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / runs.len() as f64;
        stages.insert(
            name.to_string(),
            BenchStage {
                qps: median(&mut qps_runs[s]),
                median_latency_ms: median(&mut latencies[s]),
                qps_variance: variance,
                qps_runs: runs,
            },
        );
    }
    Ok(BenchReport {
        rows: n,
        repeats,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&mut []), 0.0);
    }
}
