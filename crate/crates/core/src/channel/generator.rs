use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{add_awgn, apply_channel, apply_phase_offset, evolve_cir, ArModel, ChannelConfig};
use crate::error::{Error, Result};
use crate::modem::{modulate, Frame, PnTable, PSDU_LEN};
use crate::trace::{Cir, TraceMetadata, TraceRecord, TraceSet};

// Independent ChaCha streams so that, for example, changing the SNR leaves
// the channel realization untouched.
const STREAM_CHANNEL: u64 = 1;
const STREAM_PHASE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_PAYLOAD: u64 = 4;

const BURN_IN_BLOCKS: usize = 1000;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Where PSDU payloads come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PsduSource {
    /// Fresh uniform bytes per packet.
    Random,
    /// The same payload every packet.
    Fixed(Vec<u8>),
    /// A fixed payload whose first two bytes carry the sequence number.
    Counter(Vec<u8>),
}

impl PsduSource {
    fn next<R: Rng + ?Sized>(&self, seq_no: i64, rng: &mut R) -> Result<Vec<u8>> {
        let check = |p: &Vec<u8>| {
            if p.len() != PSDU_LEN {
                Err(Error::arg(format!("payload must be {PSDU_LEN} bytes")))
            } else {
                Ok(())
            }
        };
        match self {
            PsduSource::Random => {
                let mut p = vec![0u8; PSDU_LEN];
                rng.fill(&mut p[..]);
                Ok(p)
            }
            PsduSource::Fixed(p) => {
                check(p)?;
                Ok(p.clone())
            }
            PsduSource::Counter(p) => {
                check(p)?;
                let mut out = p.clone();
                out[..2].copy_from_slice(&(seq_no as u16).to_le_bytes());
                Ok(out)
            }
        }
    }
}

/// Default static channel: a strong main tap with a short pre-cursor
/// leak and an exponentially decaying post-cursor tail.
pub fn default_mean_cir(n_taps: usize, pre_cursor: usize) -> Result<Cir> {
    let taps = (0..n_taps)
        .map(|l| {
            let d = l as f64 - pre_cursor as f64;
            let mag = if d == 0.0 {
                1.0
            } else if d < 0.0 {
                0.08 * 0.5f64.powf(-d - 1.0)
            } else {
                0.4 * 0.55f64.powf(d - 1.0)
            };
            Complex64::from_polar(mag, 0.9 * d)
        })
        .collect();
    Cir::new(taps, pre_cursor)
}

/// Turns a CIR into a packet: frame, modulation, channel, carrier phase
/// and noise. Shared by the AR and scene generators.
pub struct PacketSynth {
    cfg: ChannelConfig,
    psdu: PsduSource,
    phase: f64,
    started: bool,
    phase_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    payload_rng: ChaCha8Rng,
}

impl PacketSynth {
    pub fn new(cfg: ChannelConfig, psdu: PsduSource) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.rng_seed;
        Ok(PacketSynth {
            cfg,
            psdu,
            phase: 0.0,
            started: false,
            phase_rng: stream_rng(seed, STREAM_PHASE),
            noise_rng: stream_rng(seed, STREAM_NOISE),
            payload_rng: stream_rng(seed, STREAM_PAYLOAD),
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn synthesize(
        &mut self,
        seq_no: i64,
        timestamp_ms: i64,
        h: Cir,
        scene_id: Option<i64>,
    ) -> Result<TraceRecord> {
        let table = PnTable::ieee_802_15_4();
        let psdu = self.psdu.next(seq_no, &mut self.payload_rng)?;
        let frame = Frame::new(&psdu, table)?;
        let tx_waveform = modulate(&frame.all_chips(), self.cfg.samples_per_chip)?;

        if self.started && self.cfg.phase_drift_std_rad > 0.0 {
            let step: f64 = self.phase_rng.sample(StandardNormal);
            self.phase += step * self.cfg.phase_drift_std_rad;
        }
        self.started = true;

        let faded = apply_channel(&tx_waveform, &h);
        let rotated = apply_phase_offset(&faded, self.phase)?;
        let rx_waveform = add_awgn(&rotated, self.cfg.snr_db, &mut self.noise_rng)?;
        Ok(TraceRecord {
            seq_no,
            timestamp_ms,
            tx_chips: frame.psdu_chips,
            tx_waveform,
            rx_waveform,
            true_cir: h,
            phase_offset_rad: self.phase,
            snr_db: self.cfg.snr_db,
            scene_id,
        })
    }
}

/// Streaming generator of AR-faded packets. Yields records one at a time so
/// long traces never have to sit in memory.
pub struct TraceGenerator {
    synth: PacketSynth,
    model: ArModel,
    mean: Cir,
    history: Vec<Cir>,
    channel_rng: ChaCha8Rng,
    next_seq: i64,
    remaining: usize,
}

impl TraceGenerator {
    pub fn new(cfg: ChannelConfig, model: ArModel, n_packets: usize, psdu: PsduSource) -> Result<Self> {
        cfg.validate()?;
        let mean = match &cfg.mean_cir {
            Some(m) => m.clone(),
            None => Cir::zeros(cfg.n_taps, cfg.pre_cursor)?,
        };
        let mut channel_rng = stream_rng(cfg.rng_seed, STREAM_CHANNEL);
        let zero = Cir::zeros(cfg.n_taps, cfg.pre_cursor)?;
        let mut history = vec![zero; model.order()];
        if model.process_noise_var() > 0.0 {
            for _ in 0..BURN_IN_BLOCKS {
                let next = evolve_cir(&history, &model, &mut channel_rng)?;
                history.pop();
                history.insert(0, next);
            }
        }
        Ok(TraceGenerator {
            synth: PacketSynth::new(cfg, psdu)?,
            model,
            mean,
            history,
            channel_rng,
            next_seq: 0,
            remaining: n_packets,
        })
    }

    pub fn metadata(&self) -> TraceMetadata {
        let cfg = self.synth.config();
        TraceMetadata {
            sample_rate_hz: cfg.sample_rate_hz(),
            n_taps: cfg.n_taps,
            samples_per_chip: cfg.samples_per_chip,
            seed: cfg.rng_seed,
        }
    }

    fn step(&mut self) -> Result<TraceRecord> {
        let deviation = evolve_cir(&self.history, &self.model, &mut self.channel_rng)?;
        let h = Cir::new(
            deviation
                .taps()
                .iter()
                .zip(self.mean.taps())
                .map(|(d, m)| d + m)
                .collect(),
            self.mean.pre_cursor(),
        )?;
        self.history.pop();
        self.history.insert(0, deviation);
        let seq = self.next_seq;
        self.next_seq += 1;
        let ts = seq * self.synth.config().block_interval_ms;
        self.synth.synthesize(seq, ts, h, None)
    }
}

impl Iterator for TraceGenerator {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.step())
    }
}

/// Collects a whole synthetic trace into memory.
pub fn generate_trace(
    cfg: &ChannelConfig,
    model: &ArModel,
    n_packets: usize,
    psdu: PsduSource,
    set_id: i64,
) -> Result<TraceSet> {
    let gen = TraceGenerator::new(cfg.clone(), model.clone(), n_packets, psdu)?;
    let mut set = TraceSet::new(set_id, gen.metadata());
    for rec in gen {
        set.records.push(rec?);
    }
    Ok(set)
}
