use std::io::{Read, Write};

use super::render::{DepthTensor, DEPTH_COLS, DEPTH_ROWS};
use crate::error::{Error, Result};
use crate::trace::codec::{ByteReader, ByteWriter};

pub const DEPTH_MAGIC: &[u8; 8] = b"VVDDEPTH";
const DEPTH_VERSION: u16 = 1;

/// One camera frame of a scene trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    /// Unique within a file; packet records carry the id of their aligned
    /// frame.
    pub scene_id: i64,
    pub timestamp_ms: i64,
    /// Sequence number of the packet block the frame belongs to.
    pub seq_no: i64,
    /// Frame captured at the packet's own timestamp.
    pub aligned: bool,
    pub tensor: DepthTensor,
}

/// Writes depth frames, returning the byte count. Scene ids must be unique.
pub fn write_depth<W: Write>(frames: &[DepthFrame], mut sink: W) -> Result<usize> {
    let mut ids: Vec<i64> = frames.iter().map(|f| f.scene_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("scene_id", "duplicate scene id"));
    }
    let mut w = ByteWriter::new();
    w.bytes(DEPTH_MAGIC);
    w.u16(DEPTH_VERSION);
    w.u16(0);
    w.u32(DEPTH_ROWS as u32);
    w.u32(DEPTH_COLS as u32);
    w.u64(frames.len() as u64);
    for f in frames {
        w.i64(f.scene_id);
        w.i64(f.timestamp_ms);
        w.i64(f.seq_no);
        w.u8(u8::from(f.aligned));
        for &v in f.tensor.values() {
            w.f64(v);
        }
    }
    let bytes = w.into_inner();
    sink.write_all(&bytes)
        .and_then(|_| sink.flush())
        .map_err(|e| Error::io("writing depth frames", e))?;
    Ok(bytes.len())
}

pub fn read_depth<R: Read>(mut source: R) -> Result<Vec<DepthFrame>> {
    let mut data = Vec::new();
    source
        .read_to_end(&mut data)
        .map_err(|e| Error::io("reading depth frames", e))?;
    let mut r = ByteReader::new(&data);
    if r.take(8, "magic")? != DEPTH_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, not a depth sidecar".into(),
        });
    }
    let version = r.u16("version")?;
    if version != DEPTH_VERSION {
        return Err(r.error(format!("unsupported version {version}")));
    }
    if r.u16("flags")? != 0 {
        return Err(r.error("reserved header flags must be zero"));
    }
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    if (rows, cols) != (DEPTH_ROWS, DEPTH_COLS) {
        return Err(r.error(format!("tensor shape {rows}x{cols} is not {DEPTH_ROWS}x{DEPTH_COLS}")));
    }
    let count = r.u64("frame_count")?;
    let mut frames = Vec::new();
    for _ in 0..count {
        let scene_id = r.i64("scene_id")?;
        let timestamp_ms = r.i64("timestamp_ms")?;
        let seq_no = r.i64("seq_no")?;
        let aligned = match r.u8("aligned")? {
            0 => false,
            1 => true,
            v => return Err(r.error(format!("aligned flag {v} is not 0 or 1"))),
        };
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(r.f64("depth value")?);
        }
        let tensor = DepthTensor::from_values(values).map_err(|e| match e {
            Error::Validation { message, .. } => r.error(message),
            other => other,
        })?;
        frames.push(DepthFrame {
            scene_id,
            timestamp_ms,
            seq_no,
            aligned,
            tensor,
        });
    }
    if r.remaining() != 0 {
        return Err(r.error(format!("{} trailing bytes after last frame", r.remaining())));
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{render_depth, SceneState};

    fn frame(id: i64) -> DepthFrame {
        DepthFrame {
            scene_id: id,
            timestamp_ms: id * 33,
            seq_no: id / 3,
            aligned: id % 3 == 0,
            tensor: render_depth(&SceneState::default()),
        }
    }

    #[test]
    fn round_trip() {
        let frames = vec![frame(0), frame(1), frame(2)];
        let mut buf = Vec::new();
        let n = write_depth(&frames, &mut buf).unwrap();
        assert_eq!(n, buf.len());
        assert_eq!(n, 28 + 3 * (25 + 8 * 50 * 90));
        assert_eq!(read_depth(&buf[..]).unwrap(), frames);
    }

    #[test]
    fn truncation_and_duplicates_rejected() {
        let mut buf = Vec::new();
        write_depth(&[frame(0)], &mut buf).unwrap();
        assert!(matches!(read_depth(&buf[..buf.len() - 1]), Err(Error::Parse { .. })));
        assert!(write_depth(&[frame(1), frame(1)], Vec::new()).is_err());
    }
}
