//! Binary container formats. The byte layouts are documented in
//! `docs/file-formats.md`; all integers and doubles are little-endian.

use std::io::{Read, Write};

use super::codec::{pack_bits, unpack_bits, ByteReader, ByteWriter};
use super::{Cir, EstimateRecord, TraceMetadata, TraceRecord, TraceSet, Waveform};
use crate::error::{Error, Result};

pub const TRACE_MAGIC: &[u8; 8] = b"VVDTRACE";
pub const ESTIMATE_MAGIC: &[u8; 8] = b"VVDEST\0\0";
pub const FORMAT_VERSION: u16 = 1;

fn to_u32(n: usize, field: &'static str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::invalid(field, format!("{n} does not fit in u32")))
}

fn finish<W: Write>(bytes: Vec<u8>, mut sink: W, what: &str) -> Result<usize> {
    sink.write_all(&bytes)
        .and_then(|_| sink.flush())
        .map_err(|e| Error::io(format!("writing {what}"), e))?;
    Ok(bytes.len())
}

fn slurp<R: Read>(mut source: R, what: &str) -> Result<Vec<u8>> {
    let mut data = Vec::new();
    source
        .read_to_end(&mut data)
        .map_err(|e| Error::io(format!("reading {what}"), e))?;
    Ok(data)
}

/// Serializes a trace set, returning the number of bytes written.
pub fn write_trace<W: Write>(set: &TraceSet, sink: W) -> Result<usize> {
    set.validate()?;
    let mut w = TraceWriter::new(sink, set.set_id, &set.metadata, set.records.len())?;
    for rec in &set.records {
        w.push(rec)?;
    }
    w.finish()
}

/// Record-at-a-time trace writer for sets too large to hold in memory.
/// The record count is fixed up front and checked by [`TraceWriter::finish`].
pub struct TraceWriter<W: Write> {
    sink: W,
    metadata: TraceMetadata,
    expected: usize,
    written: usize,
    bytes: usize,
    last_ts: Option<i64>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W, set_id: i64, metadata: &TraceMetadata, count: usize) -> Result<Self> {
        TraceSet::new(set_id, metadata.clone()).validate()?;
        let mut w = ByteWriter::new();
        w.bytes(TRACE_MAGIC);
        w.u16(FORMAT_VERSION);
        w.u16(0);
        w.i64(set_id);
        w.u32(to_u32(metadata.n_taps, "n_taps")?);
        w.u32(to_u32(metadata.samples_per_chip, "samples_per_chip")?);
        w.f64(metadata.sample_rate_hz);
        w.u64(metadata.seed);
        w.u64(count as u64);
        let mut tw = TraceWriter {
            sink,
            metadata: metadata.clone(),
            expected: count,
            written: 0,
            bytes: 0,
            last_ts: None,
        };
        tw.emit(w.into_inner())?;
        Ok(tw)
    }

    fn emit(&mut self, bytes: Vec<u8>) -> Result<()> {
        self.sink
            .write_all(&bytes)
            .map_err(|e| Error::io("writing trace", e))?;
        self.bytes += bytes.len();
        Ok(())
    }

    pub fn push(&mut self, rec: &TraceRecord) -> Result<()> {
        if self.written == self.expected {
            return Err(Error::arg(format!("header declares {} records", self.expected)));
        }
        rec.validate()?;
        if rec.true_cir.len() != self.metadata.n_taps
            || rec.tx_waveform.samples_per_chip() != self.metadata.samples_per_chip
        {
            return Err(Error::invalid(
                "true_cir",
                format!("record {} disagrees with the set header", rec.seq_no),
            ));
        }
        if self.last_ts.is_some_and(|t| rec.timestamp_ms <= t) {
            return Err(Error::invalid(
                "timestamp_ms",
                format!("record {} is not strictly after its predecessor", rec.seq_no),
            ));
        }
        self.last_ts = Some(rec.timestamp_ms);
        let mut w = ByteWriter::new();
        w.i64(rec.seq_no);
        w.i64(rec.timestamp_ms);
        w.f64(rec.phase_offset_rad);
        w.f64(rec.snr_db);
        match rec.scene_id {
            Some(id) => {
                w.u8(1);
                w.i64(id);
            }
            None => {
                w.u8(0);
                w.i64(0);
            }
        }
        w.u32(to_u32(rec.true_cir.pre_cursor(), "pre_cursor_count")?);
        w.u32(to_u32(rec.tx_chips.len(), "tx_chips")?);
        w.bytes(&pack_bits(&rec.tx_chips));
        w.u32(to_u32(rec.tx_waveform.len(), "tx_waveform")?);
        w.complexes(rec.tx_waveform.samples());
        w.u32(to_u32(rec.rx_waveform.len(), "rx_waveform")?);
        w.complexes(rec.rx_waveform.samples());
        w.complexes(rec.true_cir.taps());
        self.emit(w.into_inner())?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and returns the byte count.
    pub fn finish(mut self) -> Result<usize> {
        if self.written != self.expected {
            return Err(Error::arg(format!(
                "wrote {} of {} declared records",
                self.written, self.expected
            )));
        }
        self.sink.flush().map_err(|e| Error::io("writing trace", e))?;
        Ok(self.bytes)
    }
}

/// Parses and validates a trace set. Truncation, trailing bytes and any
/// invariant violation are errors; nothing is repaired.
pub fn read_trace<R: Read>(source: R) -> Result<TraceSet> {
    let data = slurp(source, "trace")?;
    let mut r = ByteReader::new(&data);
    if r.take(8, "magic")? != TRACE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, not a .vvdtrace file".into(),
        });
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(r.error(format!("unsupported version {version}")));
    }
    if r.u16("flags")? != 0 {
        return Err(r.error("reserved header flags must be zero"));
    }
    let set_id = r.i64("set_id")?;
    let n_taps = r.u32("n_taps")? as usize;
    let samples_per_chip = r.u32("samples_per_chip")? as usize;
    let sample_rate_hz = r.f64("sample_rate_hz")?;
    let seed = r.u64("seed")?;
    let count = r.u64("record_count")?;
    let metadata = TraceMetadata {
        sample_rate_hz,
        n_taps,
        samples_per_chip,
        seed,
    };

    let mut records = Vec::new();
    for _ in 0..count {
        let seq_no = r.i64("seq_no")?;
        let timestamp_ms = r.i64("timestamp_ms")?;
        let phase_offset_rad = r.f64("phase_offset_rad")?;
        let snr_db = r.f64("snr_db")?;
        let scene_flag = r.u8("scene flag")?;
        let scene_raw = r.i64("scene_id")?;
        let scene_id = match (scene_flag, scene_raw) {
            (1, id) => Some(id),
            (0, 0) => None,
            (0, _) => return Err(r.error("absent scene_id must be stored as 0")),
            (f, _) => return Err(r.error(format!("scene flag {f} is not 0 or 1"))),
        };
        let pre_cursor = r.u32("pre_cursor_count")? as usize;
        let n_chips = r.u32("tx_chip_count")? as usize;
        let packed = r.take(n_chips.div_ceil(8), "tx_chips")?;
        if n_chips % 8 != 0 && packed[packed.len() - 1] >> (n_chips % 8) != 0 {
            return Err(r.error("nonzero padding bits after tx_chips"));
        }
        let tx_chips = unpack_bits(packed, n_chips);
        let n_tx = r.u32("tx sample count")? as usize;
        let tx = r.complexes(n_tx, "tx_waveform")?;
        let n_rx = r.u32("rx sample count")? as usize;
        let rx = r.complexes(n_rx, "rx_waveform")?;
        let taps = r.complexes(n_taps, "true_cir")?;

        let tx_waveform = Waveform::new(tx, samples_per_chip).map_err(|e| rename(e, "tx_waveform"))?;
        let rx_waveform = Waveform::new(rx, samples_per_chip).map_err(|e| rename(e, "rx_waveform"))?;
        let true_cir = Cir::new(taps, pre_cursor).map_err(|e| rename(e, "true_cir"))?;
        records.push(TraceRecord {
            seq_no,
            timestamp_ms,
            tx_chips,
            tx_waveform,
            rx_waveform,
            true_cir,
            phase_offset_rad,
            snr_db,
            scene_id,
        });
    }
    if r.remaining() != 0 {
        return Err(r.error(format!("{} trailing bytes after last record", r.remaining())));
    }
    let set = TraceSet {
        set_id,
        metadata,
        records,
    };
    set.validate()?;
    Ok(set)
}

// Constructor errors name the inner field; report the record field instead.
fn rename(err: Error, field: &'static str) -> Error {
    match err {
        Error::Validation { message, .. } => Error::Validation { field, message },
        other => other,
    }
}

/// Serializes estimate records. All available estimates must share a tap
/// count, which is stored once in the header (0 when none is available).
pub fn write_estimates<W: Write>(records: &[EstimateRecord], sink: W) -> Result<usize> {
    let mut n_taps: Option<usize> = None;
    for rec in records {
        if let Some(cir) = &rec.cir {
            match n_taps {
                None => n_taps = Some(cir.len()),
                Some(n) if n != cir.len() => {
                    return Err(Error::invalid(
                        "cir",
                        format!("mixed tap counts {n} and {} in one file", cir.len()),
                    ))
                }
                _ => {}
            }
        }
    }
    let n_taps = n_taps.unwrap_or(0);
    let mut w = ByteWriter::new();
    w.bytes(ESTIMATE_MAGIC);
    w.u16(FORMAT_VERSION);
    w.u16(0);
    w.u32(to_u32(n_taps, "n_taps")?);
    w.u64(records.len() as u64);
    for rec in records {
        w.i64(rec.seq_no);
        let tag = rec.technique_tag.as_bytes();
        let tag_len = u16::try_from(tag.len())
            .map_err(|_| Error::invalid("technique_tag", "longer than 65535 bytes"))?;
        w.u16(tag_len);
        w.bytes(tag);
        match &rec.cir {
            Some(cir) => {
                w.u8(1);
                w.u32(to_u32(cir.pre_cursor(), "pre_cursor_count")?);
                w.complexes(cir.taps());
            }
            None => w.u8(0),
        }
    }
    debug_assert!(w.len() >= 24);
    finish(w.into_inner(), sink, "estimates")
}

pub fn read_estimates<R: Read>(source: R) -> Result<Vec<EstimateRecord>> {
    let data = slurp(source, "estimates")?;
    let mut r = ByteReader::new(&data);
    if r.take(8, "magic")? != ESTIMATE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, not a .vvdest file".into(),
        });
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(r.error(format!("unsupported version {version}")));
    }
    if r.u16("flags")? != 0 {
        return Err(r.error("reserved header flags must be zero"));
    }
    let n_taps = r.u32("n_taps")? as usize;
    let count = r.u64("record_count")?;
    let mut out = Vec::new();
    for _ in 0..count {
        let seq_no = r.i64("seq_no")?;
        let tag_len = r.u16("tag length")? as usize;
        let tag_bytes = r.take(tag_len, "technique_tag")?;
        let technique_tag = std::str::from_utf8(tag_bytes)
            .map_err(|_| Error::invalid("technique_tag", "not valid UTF-8"))?
            .to_string();
        let cir = match r.u8("available")? {
            0 => None,
            1 => {
                if n_taps == 0 {
                    return Err(r.error("available estimate in a file declaring 0 taps"));
                }
                let pre = r.u32("pre_cursor_count")? as usize;
                let taps = r.complexes(n_taps, "cir")?;
                Some(Cir::new(taps, pre).map_err(|e| rename(e, "cir"))?)
            }
            f => return Err(r.error(format!("availability flag {f} is not 0 or 1"))),
        };
        out.push(EstimateRecord {
            seq_no,
            technique_tag,
            cir,
        });
    }
    if r.remaining() != 0 {
        return Err(r.error(format!("{} trailing bytes after last record", r.remaining())));
    }
    Ok(out)
}
