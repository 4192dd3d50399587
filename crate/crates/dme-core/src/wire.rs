//! Bit-exact wire representations of encoded vectors.
//!
//! Five formats, each with a closed-form bit cost for a `d`-dimensional
//! vector whose surprise set has `|S|` entries (`rb` = center width, `r` =
//! value width, `rs` = seed width, `L = ceil(log2 d)`):
//!
//! | format          | layout                                       | bits               |
//! |-----------------|----------------------------------------------|--------------------|
//! | `Naive`         | all `d` values                               | `d*r`              |
//! | `VaryingLength` | center, then per coordinate a flag (+ value) | `rb + d + r*|S|`   |
//! | `SparseIndexed` | center, then `(index, value)` pairs          | `rb + |S|*(L + r)` |
//! | `SparseSeeded`  | center, subset seed, the `k` subset values   | `rb + rs + k*r`    |
//! | `Binary`        | both outcome values, then `d` selector bits  | `2*r + d`          |
//!
//! No format stores an entry count; the decoder recovers it from the total
//! bit length, which therefore travels with the message (and, in the framed
//! byte form, in an explicit length prefix). Values are narrowed to the
//! configured IEEE-754 width on the way in, so a round trip is exact only for
//! values already representable at that width.
//!
//! `VaryingLength` flag convention: a set bit means "this coordinate is the
//! center"; a clear bit is followed by the `r`-bit value.

use crate::bits::{ceil_log2, float_from_wire_bits, float_to_wire_bits, BitSizes, BitStream};
use crate::codec::{EncodedVector, EncoderSpec, FixedSupport};
use crate::rng::sample_subset;
use crate::{Error, Result};

/// The five wire layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatKind {
    Naive,
    VaryingLength,
    SparseIndexed,
    SparseSeeded,
    Binary,
}

impl FormatKind {
    pub const ALL: [FormatKind; 5] = [
        FormatKind::Naive,
        FormatKind::VaryingLength,
        FormatKind::SparseIndexed,
        FormatKind::SparseSeeded,
        FormatKind::Binary,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FormatKind::Naive => "naive",
            FormatKind::VaryingLength => "varying_length",
            FormatKind::SparseIndexed => "sparse_indexed",
            FormatKind::SparseSeeded => "sparse_seeded",
            FormatKind::Binary => "binary",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            FormatKind::Naive => 0,
            FormatKind::VaryingLength => 1,
            FormatKind::SparseIndexed => 2,
            FormatKind::SparseSeeded => 3,
            FormatKind::Binary => 4,
        }
    }

    fn from_tag(tag: u64) -> Result<Self> {
        FormatKind::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::Malformed(format!("unknown format tag {tag}")))
    }
}

impl std::str::FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(FormatKind::Naive),
            "varying_length" | "varying" => Ok(FormatKind::VaryingLength),
            "sparse_indexed" | "indexed" => Ok(FormatKind::SparseIndexed),
            "sparse_seeded" | "seeded" => Ok(FormatKind::SparseSeeded),
            "binary" => Ok(FormatKind::Binary),
            other => Err(Error::InvalidArgument(format!("unknown wire format {other:?}"))),
        }
    }
}

impl std::fmt::Display for FormatKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A layout plus its field widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireFormat {
    pub kind: FormatKind,
    pub sizes: BitSizes,
}

impl WireFormat {
    pub fn new(kind: FormatKind, sizes: BitSizes) -> Self {
        WireFormat { kind, sizes }
    }
}

/// A serialized vector: just bits plus their exact count.
#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    bits: BitStream,
}

impl WireMessage {
    pub fn bit_len(&self) -> usize {
        self.bits.bit_len()
    }
}

fn write_center(out: &mut BitStream, center: f64, sizes: BitSizes) -> Result<()> {
    if sizes.r_bar() == 0 {
        if center != 0.0 {
            return Err(Error::IncompatibleFormat(format!(
                "center {center} cannot be carried in 0 center bits"
            )));
        }
        return Ok(());
    }
    out.write(float_to_wire_bits(center, sizes.r_bar()), sizes.r_bar());
    Ok(())
}

fn read_center(bits: &mut BitStream, sizes: BitSizes) -> Result<f64> {
    if sizes.r_bar() == 0 {
        return Ok(0.0);
    }
    let v = float_from_wire_bits(bits.read(sizes.r_bar())?, sizes.r_bar());
    if !v.is_finite() {
        return Err(Error::Malformed("non-finite center on the wire".into()));
    }
    Ok(v)
}

fn read_value(bits: &mut BitStream, r: u32) -> Result<f64> {
    let v = float_from_wire_bits(bits.read(r)?, r);
    if !v.is_finite() {
        return Err(Error::Malformed("non-finite value on the wire".into()));
    }
    Ok(v)
}

/// Encode one vector into the chosen format.
pub fn serialize(v: &EncodedVector, fmt: &WireFormat) -> Result<WireMessage> {
    let s = fmt.sizes;
    let mut out = BitStream::new();
    match fmt.kind {
        FormatKind::Naive => {
            for x in v.to_dense() {
                out.write(float_to_wire_bits(x, s.r()), s.r());
            }
        }
        FormatKind::VaryingLength => {
            write_center(&mut out, v.center, s)?;
            let mut next = v.entries.iter().peekable();
            for j in 0..v.d {
                match next.peek() {
                    Some(&&(ej, val)) if ej == j => {
                        out.write(0, 1);
                        out.write(float_to_wire_bits(val, s.r()), s.r());
                        next.next();
                    }
                    _ => out.write(1, 1),
                }
            }
        }
        FormatKind::SparseIndexed => {
            write_center(&mut out, v.center, s)?;
            let idx_bits = ceil_log2(v.d);
            for &(j, val) in &v.entries {
                out.write(j as u64, idx_bits);
                out.write(float_to_wire_bits(val, s.r()), s.r());
            }
        }
        FormatKind::SparseSeeded => {
            let FixedSupport { seed, k } = v.support.ok_or_else(|| {
                Error::IncompatibleFormat(
                    "seeded format needs a fixed-support encoded vector".into(),
                )
            })?;
            let subset = sample_subset(seed, v.d, k)?;
            if !v.entries.iter().all(|(j, _)| subset.binary_search(j).is_ok()) {
                return Err(Error::IncompatibleFormat(
                    "entry outside the seeded support set".into(),
                ));
            }
            write_center(&mut out, v.center, s)?;
            out.write(seed, s.r_seed());
            let mut next = v.entries.iter().peekable();
            for j in subset {
                let val = match next.peek() {
                    Some(&&(ej, val)) if ej == j => {
                        next.next();
                        val
                    }
                    _ => v.center,
                };
                out.write(float_to_wire_bits(val, s.r()), s.r());
            }
        }
        FormatKind::Binary => {
            let dense = v.to_dense();
            let mut lo = dense[0];
            let mut hi = dense[0];
            for &x in &dense {
                if x != lo && x != hi {
                    if lo != hi {
                        return Err(Error::IncompatibleFormat(
                            "binary format needs at most two distinct values".into(),
                        ));
                    }
                    if x < lo {
                        lo = x;
                    } else {
                        hi = x;
                    }
                }
            }
            out.write(float_to_wire_bits(lo, s.r()), s.r());
            out.write(float_to_wire_bits(hi, s.r()), s.r());
            for &x in &dense {
                out.write(u64::from(x == hi && hi != lo), 1);
            }
        }
    }
    Ok(WireMessage { bits: out })
}

/// Decode a message back into an encoded vector. The dimension and the
/// sender's id are link-level knowledge, not in the bits.
pub fn deserialize(
    msg: &WireMessage,
    fmt: &WireFormat,
    d: usize,
    node_id: usize,
) -> Result<EncodedVector> {
    let s = fmt.sizes;
    let r = s.r() as usize;
    let mut bits = msg.bits.clone();
    bits.rewind();
    let total = bits.bit_len();

    let finish = |center: f64, entries: Vec<(usize, f64)>, support: Option<FixedSupport>| {
        EncodedVector::new(node_id, d, center, entries, support)
            .map_err(|e| Error::Malformed(e.to_string()))
    };

    match fmt.kind {
        FormatKind::Naive => {
            if total != d * r {
                return Err(Error::Malformed(format!(
                    "naive message is {total} bits, expected {}",
                    d * r
                )));
            }
            let mut entries = Vec::new();
            for j in 0..d {
                let val = read_value(&mut bits, s.r())?;
                if val != 0.0 {
                    entries.push((j, val));
                }
            }
            finish(0.0, entries, None)
        }
        FormatKind::VaryingLength => {
            let center = read_center(&mut bits, s)?;
            let mut entries = Vec::new();
            for j in 0..d {
                if bits.read(1)? == 0 {
                    let val = read_value(&mut bits, s.r())?;
                    if val != center {
                        entries.push((j, val));
                    }
                }
            }
            if bits.remaining() != 0 {
                return Err(Error::Malformed(format!(
                    "{} trailing bits after {d} coordinates",
                    bits.remaining()
                )));
            }
            finish(center, entries, None)
        }
        FormatKind::SparseIndexed => {
            let center = read_center(&mut bits, s)?;
            let idx_bits = ceil_log2(d) as usize;
            let pair = idx_bits + r;
            let body = bits.remaining();
            if body % pair != 0 {
                return Err(Error::Malformed(format!(
                    "{body} body bits are not a whole number of {pair}-bit pairs"
                )));
            }
            let mut entries = Vec::new();
            let mut prev = None;
            for _ in 0..body / pair {
                let j = bits.read(ceil_log2(d))? as usize;
                let val = read_value(&mut bits, s.r())?;
                if j >= d || prev.is_some_and(|p| p >= j) {
                    return Err(Error::Malformed(format!("bad index sequence at {j}")));
                }
                prev = Some(j);
                if val != center {
                    entries.push((j, val));
                }
            }
            finish(center, entries, None)
        }
        FormatKind::SparseSeeded => {
            let center = read_center(&mut bits, s)?;
            let seed = bits.read(s.r_seed())?;
            let body = bits.remaining();
            if body % r != 0 {
                return Err(Error::Malformed(format!(
                    "{body} body bits are not a whole number of {r}-bit values"
                )));
            }
            let k = body / r;
            let subset = sample_subset(seed, d, k).map_err(|e| Error::Malformed(e.to_string()))?;
            let mut entries = Vec::new();
            for j in subset {
                let val = read_value(&mut bits, s.r())?;
                if val != center {
                    entries.push((j, val));
                }
            }
            finish(center, entries, Some(FixedSupport { seed, k }))
        }
        FormatKind::Binary => {
            if total != 2 * r + d {
                return Err(Error::Malformed(format!(
                    "binary message is {total} bits, expected {}",
                    2 * r + d
                )));
            }
            let lo = read_value(&mut bits, s.r())?;
            let hi = read_value(&mut bits, s.r())?;
            let mut entries = Vec::new();
            for j in 0..d {
                if bits.read(1)? == 1 && hi != lo {
                    entries.push((j, hi));
                }
            }
            finish(lo, entries, None)
        }
    }
}

/// Expected bit cost of encoding node `node_id`'s vector `x` with `enc` and
/// shipping it in `fmt`, averaged over the encoder's randomness.
pub fn expected_cost(
    fmt: &WireFormat,
    enc: &EncoderSpec,
    node_id: usize,
    x: &[f64],
) -> Result<f64> {
    let s = fmt.sizes;
    let d = x.len() as f64;
    match fmt.kind {
        FormatKind::Naive => Ok(d * f64::from(s.r())),
        FormatKind::Binary => Ok(2.0 * f64::from(s.r()) + d),
        FormatKind::VaryingLength => {
            Ok(f64::from(s.r_bar()) + d + f64::from(s.r()) * expected_entries(enc, node_id, x)?)
        }
        FormatKind::SparseIndexed => {
            let pair = f64::from(ceil_log2(x.len())) + f64::from(s.r());
            Ok(f64::from(s.r_bar()) + pair * expected_entries(enc, node_id, x)?)
        }
        FormatKind::SparseSeeded => match enc {
            EncoderSpec::Fixed { k, .. } => {
                Ok(f64::from(s.r_bar()) + f64::from(s.r_seed()) + *k as f64 * f64::from(s.r()))
            }
            other => Err(Error::IncompatibleFormat(format!(
                "seeded format carries fixed-support vectors, not {}",
                other.name()
            ))),
        },
    }
}

/// Expected number of surprise entries for `x` under `enc`.
fn expected_entries(enc: &EncoderSpec, node_id: usize, x: &[f64]) -> Result<f64> {
    match enc {
        EncoderSpec::Identity => Ok(x.iter().filter(|v| **v != 0.0).count() as f64),
        EncoderSpec::Variable(params) => {
            if params.d() != x.len() || node_id >= params.n() {
                return Err(Error::DimensionMismatch { expected: params.d(), got: x.len() });
            }
            let center = params.center(node_id);
            Ok(x.iter()
                .zip(params.probs_row(node_id))
                .filter(|(v, _)| **v != center)
                .map(|(_, p)| *p)
                .sum())
        }
        EncoderSpec::Fixed { k, centers } => {
            let center = *centers.get(node_id).ok_or(Error::DimensionMismatch {
                expected: node_id + 1,
                got: centers.len(),
            })?;
            let m = x.iter().filter(|v| **v != center).count() as f64;
            Ok(*k as f64 / x.len() as f64 * m)
        }
        EncoderSpec::BinaryQuant => {
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            if span == 0.0 {
                return Ok(0.0);
            }
            Ok(x.iter().map(|v| (v - lo) / span).sum())
        }
    }
}

/// Frame a message as bytes: a big-endian `u32` payload bit count, then a
/// 3-bit format tag followed by the payload bits, zero-padded to a whole
/// byte. Frames concatenate cleanly; the returned count from [`read_frame`]
/// says where the next one starts.
pub fn write_frame(msg: &WireMessage, kind: FormatKind) -> Vec<u8> {
    let mut body = BitStream::new();
    body.write(kind.tag(), 3);
    body.append(&msg.bits);
    let mut out = (msg.bit_len() as u32).to_be_bytes().to_vec();
    out.extend(body.to_padded_bytes());
    out
}

/// Parse one frame from the head of `bytes`; returns the format, the message
/// and the number of bytes consumed.
pub fn read_frame(bytes: &[u8]) -> Result<(FormatKind, WireMessage, usize)> {
    if bytes.len() < 4 {
        return Err(Error::Truncated { needed: 4, available: bytes.len() });
    }
    let payload_bits = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
    let body_bits = payload_bits + 3;
    let body_bytes = body_bits.div_ceil(8);
    if bytes.len() < 4 + body_bytes {
        return Err(Error::Truncated { needed: 4 + body_bytes, available: bytes.len() });
    }
    let mut body = BitStream::from_padded_bytes(&bytes[4..4 + body_bytes], body_bits)?;
    let kind = FormatKind::from_tag(body.read(3)?)?;
    let mut bits = BitStream::new();
    for _ in 0..payload_bits {
        bits.write(body.read(1)?, 1);
    }
    Ok((kind, WireMessage { bits }, 4 + body_bytes))
}
