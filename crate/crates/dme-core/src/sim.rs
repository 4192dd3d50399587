//! Star-topology round simulation: every node encodes and serializes its
//! vector, the server deserializes, averages and (optionally) unrotates.
//!
//! The transport is an in-process queue of [`Envelope`]s. The server's
//! estimate is computed from the serialized messages and the static
//! configuration alone — the dataset never reaches the decode path — so the
//! tallied bits are an honest account of what crossed the wire. Each
//! envelope carries a 16-bit node id header; that header is bookkept as
//! `overhead_bits`, separate from the payload bit counts that the cost
//! formulas describe.

use std::io::Write;

use crate::codec::{self, EncoderSpec};
use crate::data::Dataset;
use crate::rng::RngState;
use crate::wire::{self, WireFormat, WireMessage};
use crate::{Error, Result};

/// Bits of per-message framing for the sender id.
pub const NODE_ID_BITS: usize = 16;

/// Everything about a round except the data: who encodes how, the wire
/// layout, an optional shared rotation, and the trial schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfig {
    pub encoder: EncoderSpec,
    pub format: WireFormat,
    /// Seed of a randomized Hadamard rotation applied by every node before
    /// encoding and undone by the server after averaging. Padding to a power
    /// of two means the wire dimension can exceed the data dimension.
    pub rotation: Option<u64>,
    pub trials: usize,
    pub master_seed: u64,
}

impl RoundConfig {
    /// Dimension of the vectors actually on the wire.
    pub fn wire_dim(&self, d: usize) -> usize {
        match self.rotation {
            Some(_) => d.next_power_of_two().max(1),
            None => d,
        }
    }
}

/// One message in flight: a node id header plus the serialized payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub node_id: u16,
    pub message: WireMessage,
}

/// Encode and serialize every node's row. Node `i` draws from the stream
/// derived from `(trial_seed, i)`, so the encodings are independent across
/// nodes and reproducible.
pub fn encode_phase(x: &Dataset, cfg: &RoundConfig, trial_seed: u64) -> Result<Vec<Envelope>> {
    if x.n() > usize::from(u16::MAX) {
        return Err(Error::InvalidArgument(format!(
            "{} nodes do not fit the {NODE_ID_BITS}-bit id header",
            x.n()
        )));
    }
    let mut envelopes = Vec::with_capacity(x.n());
    for i in 0..x.n() {
        let row = match cfg.rotation {
            Some(seed) => codec::rotate(x.row(i), seed),
            None => x.row(i).to_vec(),
        };
        let mut rng = RngState::derive(trial_seed, i as u64);
        let encoded = cfg.encoder.encode_node(i, &row, &mut rng)?;
        let message = wire::serialize(&encoded, &cfg.format)?;
        envelopes.push(Envelope { node_id: i as u16, message });
    }
    Ok(envelopes)
}

/// The server side: check that exactly nodes `0..n` reported, deserialize,
/// average in node-id order, undo the rotation. Returns the estimate and the
/// total payload bits. Envelope order on the queue does not matter.
pub fn server_phase(
    envelopes: &[Envelope],
    cfg: &RoundConfig,
    n: usize,
    d: usize,
) -> Result<(Vec<f64>, usize)> {
    if envelopes.len() != n {
        return Err(Error::Malformed(format!(
            "server received {} messages from {n} nodes",
            envelopes.len()
        )));
    }
    let mut order: Vec<usize> = (0..envelopes.len()).collect();
    order.sort_by_key(|&e| envelopes[e].node_id);
    let wire_d = cfg.wire_dim(d);
    let mut decoded = Vec::with_capacity(n);
    for (expect, &e) in order.iter().enumerate() {
        let env = &envelopes[e];
        if usize::from(env.node_id) != expect {
            return Err(Error::Malformed(format!(
                "expected a message from node {expect}, found node {}",
                env.node_id
            )));
        }
        decoded.push(wire::deserialize(&env.message, &cfg.format, wire_d, expect)?);
    }
    let averaged = codec::decode_average(&decoded)?;
    let estimate = match cfg.rotation {
        Some(seed) => codec::unrotate(&averaged, seed, d)?,
        None => averaged,
    };
    let bits = envelopes.iter().map(|e| e.message.bit_len()).sum();
    Ok((estimate, bits))
}

/// One full round: encode, ship, decode. Returns the server's estimate, the
/// payload bits on the wire, and the squared error against the true mean.
pub fn run_round(x: &Dataset, cfg: &RoundConfig, trial_seed: u64) -> Result<(Vec<f64>, usize, f64)> {
    let envelopes = encode_phase(x, cfg, trial_seed)?;
    let (estimate, bits) = server_phase(&envelopes, cfg, x.n(), x.d())?;
    let truth = x.mean();
    let sq_error = estimate
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((estimate, bits, sq_error))
}

/// One trial's bookkeeping, ready for CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub bits_total: usize,
    pub overhead_bits: usize,
    pub sq_error: f64,
}

/// Aggregate of a trial schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mean_sq_error: f64,
    pub mean_bits_total: f64,
    pub min_bits: usize,
    pub max_bits: usize,
    pub trials: usize,
    pub rows: Vec<TrialRow>,
}

impl RunReport {
    /// `trial,bits_total,overhead_bits,sq_error` with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "trial,bits_total,overhead_bits,sq_error")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.trial, row.bits_total, row.overhead_bits, row.sq_error
            )?;
        }
        Ok(())
    }
}

/// Run the configured number of trials; trial `t` uses the stream derived
/// from `(master_seed, t)`, so the whole report is a pure function of the
/// dataset and the config.
pub fn run_trials(x: &Dataset, cfg: &RoundConfig) -> Result<RunReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let overhead = NODE_ID_BITS * x.n();
    let mut rows = Vec::with_capacity(cfg.trials);
    let (mut err_sum, mut bits_sum) = (0.0, 0usize);
    let (mut min_bits, mut max_bits) = (usize::MAX, 0usize);
    for t in 0..cfg.trials {
        let trial_seed = RngState::derive(cfg.master_seed, t as u64).next_u64();
        let (_, bits, sq_error) = run_round(x, cfg, trial_seed)?;
        err_sum += sq_error;
        bits_sum += bits;
        min_bits = min_bits.min(bits);
        max_bits = max_bits.max(bits);
        rows.push(TrialRow { trial: t, bits_total: bits, overhead_bits: overhead, sq_error });
    }
    Ok(RunReport {
        mean_sq_error: err_sum / cfg.trials as f64,
        mean_bits_total: bits_sum as f64 / cfg.trials as f64,
        min_bits,
        max_bits,
        trials: cfg.trials,
        rows,
    })
}
