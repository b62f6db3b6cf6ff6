use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::depth_file::DepthFrame;
use super::render::{render_depth_in, Viewport};
use super::{scene_to_cir, Point, SceneState};
use crate::channel::{complex_gaussian, generator_rng, ChannelConfig, PacketSynth, PsduSource};
use crate::error::{Error, Result};
use crate::trace::{Cir, TraceMetadata, TraceRecord, TraceSet};

const STREAM_WALK: u64 = 5;
const STREAM_PERTURB: u64 = 6;

/// Camera frames per packet block and their offsets within the block.
pub const FRAMES_PER_BLOCK: usize = 3;
const FRAME_OFFSETS_MS: [i64; FRAMES_PER_BLOCK] = [0, 33, 67];

/// Bounded Gaussian random walk of the blocker. Steps that leave the
/// rectangle are mirrored back inside.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkModel {
    pub area_min: Point,
    pub area_max: Point,
    pub start: Point,
    /// Per-axis step standard deviation per block, metres.
    pub step_std_m: f64,
}

impl Default for WalkModel {
    fn default() -> Self {
        WalkModel {
            area_min: Point::new(1.0, -2.0),
            area_max: Point::new(7.0, 2.0),
            start: Point::new(4.0, 1.5),
            step_std_m: 0.15,
        }
    }
}

impl WalkModel {
    pub fn validate(&self) -> Result<()> {
        let pts = [self.area_min, self.area_max, self.start];
        if pts.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::invalid("walk", "coordinates must be finite"));
        }
        if !(self.area_min.x < self.area_max.x && self.area_min.y < self.area_max.y) {
            return Err(Error::invalid("walk", "movement area is empty"));
        }
        let inside = |v: f64, lo: f64, hi: f64| (lo..=hi).contains(&v);
        if !inside(self.start.x, self.area_min.x, self.area_max.x)
            || !inside(self.start.y, self.area_min.y, self.area_max.y)
        {
            return Err(Error::invalid("walk", "start lies outside the movement area"));
        }
        if !(self.step_std_m.is_finite() && self.step_std_m >= 0.0) {
            return Err(Error::invalid("step_std_m", "must be finite and nonnegative"));
        }
        Ok(())
    }

    fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
        let span = hi - lo;
        let mut t = (v - lo).rem_euclid(2.0 * span);
        if t > span {
            t = 2.0 * span - t;
        }
        lo + t
    }

    fn step<R: Rng + ?Sized>(&self, p: Point, rng: &mut R) -> Point {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        Point::new(
            Self::reflect(p.x + dx * self.step_std_m, self.area_min.x, self.area_max.x),
            Self::reflect(p.y + dy * self.step_std_m, self.area_min.y, self.area_max.y),
        )
    }
}

/// Everything a scene trace needs besides the channel configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTraceConfig {
    pub scene: SceneState,
    pub walk: WalkModel,
    pub viewport: Viewport,
    /// Standard deviation of the complex Gaussian added to every tap.
    pub perturbation_std: f64,
}

impl Default for SceneTraceConfig {
    fn default() -> Self {
        SceneTraceConfig {
            scene: SceneState::default(),
            walk: WalkModel::default(),
            viewport: Viewport::default(),
            perturbation_std: 1e-3,
        }
    }
}

/// Streaming scene-driven packet generator. Each item is one packet and the
/// camera frames of its block.
pub struct SceneTraceGenerator {
    synth: PacketSynth,
    cfg: ChannelConfig,
    scene_cfg: SceneTraceConfig,
    walk_rng: ChaCha8Rng,
    perturb_rng: ChaCha8Rng,
    position: Point,
    next_position: Point,
    next_seq: i64,
    remaining: usize,
}

impl SceneTraceGenerator {
    pub fn new(
        cfg: ChannelConfig,
        scene_cfg: SceneTraceConfig,
        n_packets: usize,
        psdu: PsduSource,
    ) -> Result<Self> {
        cfg.validate()?;
        scene_cfg.scene.validate()?;
        scene_cfg.walk.validate()?;
        if !(scene_cfg.perturbation_std.is_finite() && scene_cfg.perturbation_std >= 0.0) {
            return Err(Error::invalid("perturbation_std", "must be finite and nonnegative"));
        }
        let mut walk_rng = generator_rng(cfg.rng_seed, STREAM_WALK);
        let position = scene_cfg.walk.start;
        let next_position = scene_cfg.walk.step(position, &mut walk_rng);
        Ok(SceneTraceGenerator {
            synth: PacketSynth::new(cfg.clone(), psdu)?,
            perturb_rng: generator_rng(cfg.rng_seed, STREAM_PERTURB),
            cfg,
            scene_cfg,
            walk_rng,
            position,
            next_position,
            next_seq: 0,
            remaining: n_packets,
        })
    }

    pub fn metadata(&self) -> TraceMetadata {
        TraceMetadata {
            sample_rate_hz: self.cfg.sample_rate_hz(),
            n_taps: self.cfg.n_taps,
            samples_per_chip: self.cfg.samples_per_chip,
            seed: self.cfg.rng_seed,
        }
    }

    /// Blocker position used for the packet about to be generated.
    pub fn blocker_position(&self) -> Point {
        self.position
    }

    fn step(&mut self) -> Result<(TraceRecord, Vec<DepthFrame>)> {
        let seq = self.next_seq;
        let ts = seq * self.cfg.block_interval_ms;
        let scene = self.scene_cfg.scene.with_blocker(self.position);
        let clean = scene_to_cir(&scene, &self.cfg)?;
        let h = perturb(&clean, self.scene_cfg.perturbation_std, &mut self.perturb_rng)?;
        let base_id = seq * FRAMES_PER_BLOCK as i64;
        let rec = self.synth.synthesize(seq, ts, h, Some(base_id))?;

        // intermediate frames sit on the straight line to the next position
        let frames = FRAME_OFFSETS_MS
            .iter()
            .enumerate()
            .map(|(j, &off)| {
                let f = off as f64 / self.cfg.block_interval_ms as f64;
                let p = Point::new(
                    self.position.x + f * (self.next_position.x - self.position.x),
                    self.position.y + f * (self.next_position.y - self.position.y),
                );
                DepthFrame {
                    scene_id: base_id + j as i64,
                    timestamp_ms: ts + off,
                    seq_no: seq,
                    aligned: j == 0,
                    tensor: render_depth_in(&scene.with_blocker(p), &self.scene_cfg.viewport),
                }
            })
            .collect();

        self.position = self.next_position;
        self.next_position = self.scene_cfg.walk.step(self.position, &mut self.walk_rng);
        self.next_seq += 1;
        Ok((rec, frames))
    }
}

fn perturb<R: Rng + ?Sized>(h: &Cir, std: f64, rng: &mut R) -> Result<Cir> {
    if std == 0.0 {
        return Ok(h.clone());
    }
    let var = std * std;
    Cir::new(
        h.taps().iter().map(|t| t + complex_gaussian(rng, var)).collect(),
        h.pre_cursor(),
    )
}

impl Iterator for SceneTraceGenerator {
    type Item = Result<(TraceRecord, Vec<DepthFrame>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.step())
    }
}

/// A scene trace held in memory.
#[derive(Debug, Clone)]
pub struct SceneTrace {
    pub set: TraceSet,
    pub frames: Vec<DepthFrame>,
    /// Blocker position of every packet.
    pub blocker_path: Vec<Point>,
}

pub fn generate_scene_trace(
    cfg: &ChannelConfig,
    scene_cfg: &SceneTraceConfig,
    n_packets: usize,
    psdu: PsduSource,
    set_id: i64,
) -> Result<SceneTrace> {
    let mut gen = SceneTraceGenerator::new(cfg.clone(), scene_cfg.clone(), n_packets, psdu)?;
    let mut set = TraceSet::new(set_id, gen.metadata());
    let mut frames = Vec::with_capacity(n_packets * FRAMES_PER_BLOCK);
    let mut blocker_path = Vec::with_capacity(n_packets);
    for _ in 0..n_packets {
        blocker_path.push(gen.blocker_position());
        let (rec, f) = gen.next().expect("generator yields n_packets items")?;
        set.records.push(rec);
        frames.extend(f);
    }
    Ok(SceneTrace {
        set,
        frames,
        blocker_path,
    })
}
