//! Multi-pass streaming execution harness.
//!
//! An algorithm sees the constraint sequence in instance order, identically in
//! every pass, and decides after each pass whether it needs another one. The
//! harness records the number of passes and the peak of the algorithm's
//! self-reported state size; the memory meter is advisory and never enforced.

use crate::csp::{Constraint, Instance};
use crate::ratio::Rational;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamError {
    PassCapExceeded { cap: u64 },
    EmptyInstance,
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::PassCapExceeded { cap } => {
                write!(f, "algorithm requested more than {cap} passes")
            }
            StreamError::EmptyInstance => write!(f, "cannot stream an empty instance"),
        }
    }
}

impl std::error::Error for StreamError {}

/// What a streaming run produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamOutput {
    Decision(bool),
    Estimate(#[serde(with = "crate::ratio")] Rational),
}

impl fmt::Display for StreamOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamOutput::Decision(b) => write!(f, "{}", *b as u8),
            StreamOutput::Estimate(v) => write!(f, "{}", crate::ratio::display(v)),
        }
    }
}

/// Declared space usage of an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceBound {
    Bits(u64),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassOutcome {
    Continue,
    Done,
}

/// Behavioral contract of a multi-pass streaming algorithm. `process` sees the
/// constraints in stream order; state mutations are the algorithm's own
/// business. `tracked_bits` is the self-reported current state size used by
/// the harness's advisory memory meter.
pub trait StreamingAlgorithm {
    fn init(&mut self, seed: u64, num_vars: usize);
    fn begin_pass(&mut self, pass: u64);
    fn process(&mut self, constraint: &Constraint);
    fn end_pass(&mut self) -> PassOutcome;
    fn output(&self) -> StreamOutput;
    fn declared_space_bits(&self) -> SpaceBound {
        SpaceBound::Unbounded
    }
    fn tracked_bits(&self) -> u64 {
        0
    }
}

/// Record of one seeded run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRun {
    pub passes_used: u64,
    pub peak_tracked_bits: u64,
    pub output: StreamOutput,
    pub seed: u64,
}

impl StreamRun {
    pub fn summary(&self) -> String {
        format!("passes={} bits={} output={}", self.passes_used, self.peak_tracked_bits, self.output)
    }
}

pub const DEFAULT_PASS_CAP: u64 = 10_000;

/// Drives the algorithm pass by pass until it declares completion.
pub fn run_multipass(
    alg: &mut dyn StreamingAlgorithm,
    instance: &Instance,
    seed: u64,
) -> Result<StreamRun, StreamError> {
    run_multipass_capped(alg, instance, seed, DEFAULT_PASS_CAP)
}

pub fn run_multipass_capped(
    alg: &mut dyn StreamingAlgorithm,
    instance: &Instance,
    seed: u64,
    pass_cap: u64,
) -> Result<StreamRun, StreamError> {
    if instance.is_empty() {
        return Err(StreamError::EmptyInstance);
    }
    alg.init(seed, instance.num_vars());
    let mut passes: u64 = 0;
    let mut peak: u64 = alg.tracked_bits();
    loop {
        if passes >= pass_cap {
            return Err(StreamError::PassCapExceeded { cap: pass_cap });
        }
        alg.begin_pass(passes);
        for c in instance.constraints() {
            alg.process(c);
        }
        passes += 1;
        peak = peak.max(alg.tracked_bits());
        match alg.end_pass() {
            PassOutcome::Done => break,
            PassOutcome::Continue => {}
        }
        peak = peak.max(alg.tracked_bits());
    }
    Ok(StreamRun {
        passes_used: passes,
        peak_tracked_bits: peak,
        output: alg.output(),
        seed,
    })
}

/// One-pass constraint counter; outputs the stream length.
#[derive(Default)]
pub struct CountingAlgorithm {
    count: u64,
}

impl StreamingAlgorithm for CountingAlgorithm {
    fn init(&mut self, _seed: u64, _num_vars: usize) {
        self.count = 0;
    }
    fn begin_pass(&mut self, _pass: u64) {}
    fn process(&mut self, _constraint: &Constraint) {
        self.count += 1;
    }
    fn end_pass(&mut self) -> PassOutcome {
        PassOutcome::Done
    }
    fn output(&self) -> StreamOutput {
        StreamOutput::Estimate(crate::ratio::rat_int(self.count as i64))
    }
    fn declared_space_bits(&self) -> SpaceBound {
        SpaceBound::Bits(64)
    }
    fn tracked_bits(&self) -> u64 {
        64 - self.count.leading_zeros() as u64
    }
}

/// One-pass baseline for directed cuts: counts the stream and reports a
/// quarter of it as the satisfied-count estimate, i.e. value m/4 out of m.
#[derive(Default)]
pub struct QuarterBaseline {
    count: u64,
}

impl StreamingAlgorithm for QuarterBaseline {
    fn init(&mut self, _seed: u64, _num_vars: usize) {
        self.count = 0;
    }
    fn begin_pass(&mut self, _pass: u64) {}
    fn process(&mut self, _constraint: &Constraint) {
        self.count += 1;
    }
    fn end_pass(&mut self) -> PassOutcome {
        PassOutcome::Done
    }
    fn output(&self) -> StreamOutput {
        StreamOutput::Estimate(crate::ratio::rat(self.count as i64, 4))
    }
    fn declared_space_bits(&self) -> SpaceBound {
        SpaceBound::Bits(64)
    }
    fn tracked_bits(&self) -> u64 {
        64 - self.count.leading_zeros() as u64
    }
}

/// Test helper: records the exact order in which constraints are observed.
#[derive(Default)]
pub struct RecordingAlgorithm {
    pub seen: Vec<Constraint>,
    passes_wanted: u64,
    passes_done: u64,
}

impl RecordingAlgorithm {
    pub fn with_passes(passes: u64) -> Self {
        RecordingAlgorithm { seen: Vec::new(), passes_wanted: passes, passes_done: 0 }
    }
}

impl StreamingAlgorithm for RecordingAlgorithm {
    fn init(&mut self, _seed: u64, _num_vars: usize) {
        self.seen.clear();
        self.passes_done = 0;
    }
    fn begin_pass(&mut self, _pass: u64) {}
    fn process(&mut self, constraint: &Constraint) {
        self.seen.push(constraint.clone());
    }
    fn end_pass(&mut self) -> PassOutcome {
        self.passes_done += 1;
        if self.passes_done >= self.passes_wanted.max(1) {
            PassOutcome::Done
        } else {
            PassOutcome::Continue
        }
    }
    fn output(&self) -> StreamOutput {
        StreamOutput::Estimate(crate::ratio::rat_int(self.seen.len() as i64))
    }
    fn tracked_bits(&self) -> u64 {
        (self.seen.len() as u64) * 128
    }
}
