//! Independent chains, thinning, and sample persistence.
//!
//! Records are stored one JSON object per line:
//!
//! ```text
//! {"run":0,"step":10000,"k":2,"log_joint":-812.4,"nodes":34,"layers":4,"patterns":[...]}
//! ```
//!
//! `patterns` is layer-major (`patterns[layer * nodes + node]`), each entry
//! the membership bits of one node-layer (bit `r - 1` for group `r`), i.e.
//! the same data as the `layer node pattern` lines of an assignment file.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{step, MoveCounts, SamplerConfig};
use crate::assignment::{pattern_mask, GroupAssignment, MembershipPattern};
use crate::error::{Error, Result};
use crate::network::TemporalNetwork;
use crate::prob::JTable;
use crate::state::ChainState;

/// One thinned posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub run: usize,
    pub step: u64,
    pub assignment: GroupAssignment,
    /// Unnormalized log posterior of the draw, for trace diagnostics.
    pub log_joint: f64,
}

impl SampleRecord {
    pub fn k(&self) -> usize {
        self.assignment.k()
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    run: usize,
    step: u64,
    k: usize,
    log_joint: f64,
    nodes: usize,
    layers: usize,
    patterns: Vec<u64>,
}

impl From<&SampleRecord> for RecordLine {
    fn from(r: &SampleRecord) -> Self {
        RecordLine {
            run: r.run,
            step: r.step,
            k: r.k(),
            log_joint: r.log_joint,
            nodes: r.assignment.node_count(),
            layers: r.assignment.layer_count(),
            patterns: r.assignment.patterns().iter().map(|p| p.0).collect(),
        }
    }
}

impl TryFrom<RecordLine> for SampleRecord {
    type Error = Error;

    fn try_from(line: RecordLine) -> Result<Self> {
        let patterns = line.patterns.into_iter().map(MembershipPattern).collect();
        Ok(SampleRecord {
            run: line.run,
            step: line.step,
            assignment: GroupAssignment::from_patterns(line.nodes, line.layers, line.k, patterns)?,
            log_joint: line.log_joint,
        })
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub steps: u64,
    pub final_k: usize,
    pub counts: MoveCounts,
    /// `(step, log_joint)` at each saved record.
    pub trace: Vec<(u64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SampleRecord>,
    pub summary: RunSummary,
}

/// Random generator of run `run`: the seed picks the key and the run id the
/// stream, so chains never share random numbers.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Initial state: `k = init_k` and each indicator an independent fair coin.
pub fn random_assignment<R: Rng + ?Sized>(
    n: usize,
    num_layers: usize,
    k: usize,
    rng: &mut R,
) -> Result<GroupAssignment> {
    let mask = pattern_mask(k);
    let patterns = (0..n * num_layers)
        .map(|_| MembershipPattern(rng.gen::<u64>() & mask))
        .collect();
    GroupAssignment::from_patterns(n, num_layers, k, patterns)
}

/// Runs one chain from a random initial state.
pub fn run_chain(
    config: &SamplerConfig,
    net: &TemporalNetwork,
    jt: &JTable,
    run: usize,
) -> Result<RunOutput> {
    let mut rng = run_rng(config.seed, run);
    let init = random_assignment(net.node_count(), net.layer_count(), config.init_k, &mut rng)?;
    let mut state = ChainState::new(net, init)?;
    log::info!(
        "run {run}: {} steps from k = {}",
        config.steps,
        config.init_k
    );
    let mut counts = MoveCounts::default();
    let mut records = Vec::new();
    let mut trace = Vec::new();
    for s in 1..=config.steps {
        let outcome = step(&mut state, config, net, jt, &mut rng)?;
        counts.record(&outcome);
        if s > config.burn_in && s % config.thin == 0 {
            let log_joint = state.log_joint(net, jt)?.value();
            trace.push((s, log_joint));
            records.push(SampleRecord {
                run,
                step: s,
                assignment: state.assignment().clone(),
                log_joint,
            });
        }
    }
    log::info!(
        "run {run}: done, k = {}, acceptance {:.4}",
        state.k(),
        counts.acceptance_rate()
    );
    Ok(RunOutput {
        records,
        summary: RunSummary {
            run,
            steps: config.steps,
            final_k: state.k(),
            counts,
            trace,
        },
    })
}

/// Runs `config.runs` independent chains in parallel. Output is ordered by
/// run id and is identical for identical configurations.
pub fn run(config: &SamplerConfig, net: &TemporalNetwork, jt: &JTable) -> Result<Vec<RunOutput>> {
    config.validate()?;
    if jt.n_max() < net.node_count() {
        return Err(Error::Config(format!(
            "J table covers {} nodes, network has {}",
            jt.n_max(),
            net.node_count()
        )));
    }
    (0..config.runs)
        .into_par_iter()
        .map(|run| run_chain(config, net, jt, run))
        .collect()
}

pub fn write_records<'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a SampleRecord>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, &RecordLine::from(record))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(SampleRecord::try_from(parsed)?);
    }
    Ok(records)
}

/// Provenance written next to the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub network: String,
    pub nodes: usize,
    pub layers: usize,
    pub config: SamplerConfig,
    pub runs: Vec<RunSummary>,
}

impl Manifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Mode;

    fn small_net() -> TemporalNetwork {
        TemporalNetwork::from_edges(
            6,
            2,
            [(0, 0, 1), (0, 1, 2), (0, 0, 2), (1, 0, 1), (1, 3, 4)],
        )
        .unwrap()
    }

    #[test]
    fn one_record_when_steps_equal_thin() {
        let net = small_net();
        let jt = JTable::build(6).unwrap();
        let config = SamplerConfig {
            steps: 500,
            thin: 500,
            runs: 3,
            ..Default::default()
        };
        let out = run(&config, &net, &jt).unwrap();
        assert_eq!(out.len(), 3);
        for (idx, o) in out.iter().enumerate() {
            assert_eq!(o.records.len(), 1);
            assert_eq!(o.records[0].run, idx);
            assert_eq!(o.records[0].step, 500);
            assert_eq!(o.summary.counts.total_proposed(), 500);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let net = small_net();
        let jt = JTable::build(6).unwrap();
        let config = SamplerConfig {
            steps: 3000,
            thin: 100,
            runs: 2,
            seed: 42,
            ..Default::default()
        };
        let a = run(&config, &net, &jt).unwrap();
        let b = run(&config, &net, &jt).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.records, y.records);
            assert_eq!(x.summary, y.summary);
        }
        assert_ne!(a[0].records, a[1].records, "runs must use distinct streams");
    }

    #[test]
    fn burn_in_and_thinning() {
        let net = small_net();
        let jt = JTable::build(6).unwrap();
        let config = SamplerConfig {
            steps: 1000,
            thin: 100,
            burn_in: 450,
            runs: 1,
            mode: Mode::NoMultiNode,
            ..Default::default()
        };
        let out = run(&config, &net, &jt).unwrap();
        let steps: Vec<u64> = out[0].records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![500, 600, 700, 800, 900, 1000]);
    }

    #[test]
    fn records_round_trip_through_files() {
        let net = small_net();
        let jt = JTable::build(6).unwrap();
        let config = SamplerConfig {
            steps: 400,
            thin: 100,
            runs: 2,
            ..Default::default()
        };
        let out = run(&config, &net, &jt).unwrap();
        let records: Vec<_> = out.iter().flat_map(|o| o.records.iter()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.ndjson");
        write_records(&path, records.iter().copied()).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back.len(), 8);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn rejects_undersized_table() {
        let net = small_net();
        let jt = JTable::build(4).unwrap();
        assert!(run(
            &SamplerConfig {
                steps: 10,
                thin: 10,
                ..Default::default()
            },
            &net,
            &jt
        )
        .is_err());
    }
}
