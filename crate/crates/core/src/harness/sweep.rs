//! Sweep execution: one ensemble per grid point, reduced in sample order.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analyze::{fss_files, phase_files};
use super::config::{Artifact, SweepConfig};
use super::output::{csv_text, fmt_real, OutputFile};
use super::HarnessError;
use crate::analysis::{ObservableRow, ObservableTable, ParamGroup, PointKey, TcMethod, TcOptions};
use crate::engine::{map_ensemble, SamplingProtocol};
use crate::model::ModelParams;
use crate::observables::{
    binder, chi_tilde, connected_correlation, correlation, correlation_se, histogram_bin,
    mutual_information, probe_sites, susceptibility, zipf_from_counts, MomentAccumulator,
    SampleObservation, HISTOGRAM_BINS,
};
use crate::rng::{derive_seed, GENERATOR_NAME};

/// A sentence kept because its magnetization fell in the requested bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dump {
    pub sample: u64,
    pub magnetization: f64,
    /// Symbols, 0-based.
    pub symbols: Vec<u16>,
}

/// Metadata sufficient to regenerate one observable row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: ModelParams,
    #[serde(rename = "N")]
    pub n: usize,
    pub protocol: SamplingProtocol,
    pub generator: String,
    pub version: String,
    pub wall_time_s: f64,
    pub row: ObservableRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub record: RunRecord,
    pub accumulator: Option<MomentAccumulator>,
    pub dumps: Vec<Dump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub table: ObservableTable,
    /// Sorted by key, like the table rows.
    pub points: Vec<PointResult>,
}

pub fn point_key(params: &ModelParams, n: usize) -> PointKey {
    PointKey {
        group: ParamGroup {
            k: params.k,
            coupling: params.coupling,
            q: params.q,
            t: params.t,
            epsilon: params.epsilon,
        },
        kt: params.kt,
        n,
    }
}

/// Seed of one grid point, derived from the base seed and the full key.
pub fn point_seed(base: u64, params: &ModelParams, n: usize) -> u64 {
    derive_seed(
        base,
        [
            params.k as u64,
            params.coupling.to_bits(),
            params.q.to_bits(),
            params.t.to_bits(),
            params.epsilon.to_bits(),
            params.kt.to_bits(),
            n as u64,
        ],
    )
}

/// Observable row from a filled accumulator. Non-fatal problems such as a
/// degenerate Binder ratio go to the error column.
pub fn observable_row(key: PointKey, seed: u64, acc: &MomentAccumulator) -> ObservableRow {
    let n = key.n;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: crate::Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let chi = keep("chi", susceptibility(acc, n));
    let binder = keep("binder", binder(acc, acc.k()));
    let two_point = acc.k() >= 2;
    ObservableRow {
        key,
        samples: acc.n(),
        seed,
        mean_m: Some(acc.mean_m()),
        se_m: Some(acc.se_m()).filter(|v| v.is_finite()),
        chi,
        chi_tilde: Some(chi_tilde(acc, n)),
        binder,
        corr: two_point.then(|| correlation(acc)),
        mutual_info: Some(mutual_information(acc)),
        error: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

fn run_point(config: &SweepConfig, params: ModelParams, n: usize) -> PointResult {
    let started = Instant::now();
    let key = point_key(&params, n);
    let seed = point_seed(config.protocol.seed, &params, n);
    let samples = config.protocol.samples_for(n);
    let mut protocol = SamplingProtocol {
        target_len: n,
        samples,
        post_growth_sweeps: config.protocol.post_growth_sweeps,
        seed,
        runaway_cap: config.protocol.runaway_cap,
    };
    if protocol.runaway_cap.is_none() {
        protocol.runaway_cap = Some(protocol.runaway_cap());
    }
    let dump_bin = config
        .outputs
        .dump_bin
        .filter(|_| config.wants(Artifact::Dumps))
        .map(|lo| (lo * HISTOGRAM_BINS as f64).round() as usize);
    let k = params.k;
    let outcome = map_ensemble(&params, &protocol, |index, state| {
        let obs = SampleObservation::from_state(&state, k);
        let dump = dump_bin
            .filter(|&bin| histogram_bin(obs.magnetization) == bin)
            .map(|_| Dump {
                sample: index,
                magnetization: obs.magnetization,
                symbols: state.symbols().collect(),
            });
        (obs, dump)
    });
    let (row, accumulator, dumps) = match outcome {
        Ok(results) => {
            let mut acc = MomentAccumulator::new(k);
            let mut dumps = Vec::new();
            for (obs, dump) in results {
                acc.push(&obs);
                if let Some(d) = dump.filter(|_| dumps.len() < config.outputs.max_dumps) {
                    dumps.push(d);
                }
            }
            (observable_row(key, seed, &acc), Some(acc), dumps)
        }
        Err(e) => (
            ObservableRow::failed(key, samples, seed, e.to_string()),
            None,
            Vec::new(),
        ),
    };
    PointResult {
        record: RunRecord {
            params,
            n,
            protocol,
            generator: GENERATOR_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
            row,
        },
        accumulator,
        dumps,
    }
}

/// Runs every grid point on a pool of `config.parallelism` threads. The
/// result does not depend on the thread count.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput, HarnessError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let points = config.points();
    let mut results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|&(params, n)| run_point(config, params, n))
            .collect()
    });
    results.sort_by_key(|r| r.record.row.key);
    let table = ObservableTable::new(results.iter().map(|p| p.record.row.clone()).collect())?;
    Ok(SweepOutput {
        table,
        points: results,
    })
}

fn key_fields(key: &PointKey) -> Vec<String> {
    let g = &key.group;
    vec![
        g.k.to_string(),
        g.coupling.to_string(),
        g.q.to_string(),
        g.t.to_string(),
        g.epsilon.to_string(),
        key.kt.to_string(),
        key.n.to_string(),
    ]
}

fn histogram_csv(output: &SweepOutput) -> String {
    let mut rows = Vec::new();
    for p in &output.points {
        let Some(acc) = &p.accumulator else { continue };
        for (bin, count) in acc.histogram().iter().enumerate() {
            rows.push(vec![
                p.record.row.key.kt.to_string(),
                p.record.n.to_string(),
                (bin as f64 / HISTOGRAM_BINS as f64).to_string(),
                ((bin + 1) as f64 / HISTOGRAM_BINS as f64).to_string(),
                count.to_string(),
            ]);
        }
    }
    csv_text(&["kT", "N", "bin_lo", "bin_hi", "count"], rows)
}

/// Symbol totals of all sizes at one temperature form one corpus.
fn zipf_csv(output: &SweepOutput) -> String {
    let mut corpora: Vec<(f64, Vec<u64>)> = Vec::new();
    for p in &output.points {
        let Some(acc) = &p.accumulator else { continue };
        let kt = p.record.row.key.kt;
        match corpora.iter_mut().find(|(t, _)| *t == kt) {
            Some((_, counts)) => {
                for (c, x) in counts.iter_mut().zip(acc.symbol_counts()) {
                    *c += x;
                }
            }
            None => corpora.push((kt, acc.symbol_counts().to_vec())),
        }
    }
    corpora.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows = corpora.iter().flat_map(|(kt, counts)| {
        zipf_from_counts(counts)
            .into_iter()
            .map(move |(rank, freq)| vec![kt.to_string(), rank.to_string(), freq.to_string()])
    });
    csv_text(&["kT", "rank", "rel_freq"], rows)
}

fn correlation_csv(output: &SweepOutput) -> String {
    let header = [
        "K",
        "J",
        "q",
        "t",
        "epsilon",
        "kT",
        "N",
        "i",
        "j",
        "corr_Gtilde",
        "se_Gtilde",
        "corr_connected",
    ];
    let rows = output.points.iter().filter_map(|p| {
        let acc = p.accumulator.as_ref().filter(|a| a.k() >= 2)?;
        let (i, j) = probe_sites(p.record.n);
        let mut row = key_fields(&p.record.row.key);
        row.extend([
            i.to_string(),
            j.to_string(),
            fmt_real(Some(correlation(acc))),
            fmt_real(Some(correlation_se(acc))),
            fmt_real(Some(connected_correlation(acc))),
        ]);
        Some(row)
    });
    csv_text(&header, rows)
}

fn mutual_info_csv(output: &SweepOutput) -> String {
    let header = [
        "K",
        "J",
        "q",
        "t",
        "epsilon",
        "kT",
        "N",
        "i",
        "j",
        "mutual_info",
    ];
    let rows = output.points.iter().filter_map(|p| {
        let acc = p.accumulator.as_ref()?;
        let (i, j) = probe_sites(p.record.n);
        let mut row = key_fields(&p.record.row.key);
        row.extend([
            i.to_string(),
            j.to_string(),
            fmt_real(Some(mutual_information(acc))),
        ]);
        Some(row)
    });
    csv_text(&header, rows)
}

fn dumps_text(output: &SweepOutput) -> String {
    let mut text = String::new();
    for p in &output.points {
        for d in &p.dumps {
            let _ = writeln!(
                text,
                "# {} sample={} M={}",
                p.record.row.key, d.sample, d.magnetization
            );
            let symbols: Vec<String> = d.symbols.iter().map(|s| (s + 1).to_string()).collect();
            let _ = writeln!(text, "{}", symbols.join(" "));
        }
    }
    text
}

fn runs_jsonl(output: &SweepOutput) -> String {
    output
        .points
        .iter()
        .map(|p| serde_json::to_string(&p.record).expect("run record serializes") + "\n")
        .collect()
}

/// Files for every requested artifact; `config.json` records the exact input.
pub fn sweep_artifacts(config: &SweepConfig, output: &SweepOutput) -> Vec<OutputFile> {
    let mut files = vec![OutputFile::new("config.json", config.to_json() + "\n")];
    let mut artifacts = config.outputs.artifacts.clone();
    artifacts.sort();
    artifacts.dedup();
    for artifact in artifacts {
        match artifact {
            Artifact::Observables => files.push(OutputFile::new(
                "observables.csv",
                output.table.to_csv_string(),
            )),
            Artifact::Histogram => {
                files.push(OutputFile::new("histogram.csv", histogram_csv(output)))
            }
            Artifact::Correlation => {
                files.push(OutputFile::new("correlation.csv", correlation_csv(output)))
            }
            Artifact::MutualInfo => {
                files.push(OutputFile::new("mutual_info.csv", mutual_info_csv(output)))
            }
            Artifact::Zipf => files.push(OutputFile::new("zipf.csv", zipf_csv(output))),
            Artifact::Fss => {
                files.extend(fss_files(&output.table, config.outputs.fss_grid.as_ref()))
            }
            Artifact::PhaseDiagram => files.extend(phase_files(
                &output.table,
                config.outputs.phase_axis,
                &TcMethod::ALL,
                &TcOptions {
                    fss_grid: config.outputs.fss_grid,
                    ..TcOptions::default()
                },
            )),
            Artifact::Dumps => files.push(OutputFile::new("dumps.txt", dumps_text(output))),
            Artifact::Runs => files.push(OutputFile::new("runs.jsonl", runs_jsonl(output))),
        }
    }
    files
}
