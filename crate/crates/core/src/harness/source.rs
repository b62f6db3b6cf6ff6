use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::channel::{default_mean_cir, ArModel, ChannelConfig, PsduSource, TraceGenerator};
use crate::error::{Error, Result};
use crate::scene::{SceneTraceConfig, SceneTraceGenerator};
use crate::trace::{read_trace, TraceRecord};

/// Boxed stream of records of one trace set.
pub type RecordStream = Box<dyn Iterator<Item = Result<TraceRecord>>>;

/// Per-set seed derived from the run seed, so sets are independent but the
/// whole run is fixed by one number.
pub fn set_seed(seed: u64, set_id: i64) -> u64 {
    seed ^ (set_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Synthetic AR-faded traces.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSource {
    pub channel: ChannelConfig,
    pub model: ArModel,
    pub packets_per_set: usize,
    pub seed: u64,
}

impl Default for GeneratedSource {
    /// 25 dB link over the default mean channel with AR(1) fading, phi 0.85.
    fn default() -> Self {
        let base = ChannelConfig::default();
        GeneratedSource {
            channel: ChannelConfig {
                snr_db: 25.0,
                mean_cir: Some(
                    default_mean_cir(base.n_taps, base.pre_cursor).expect("default geometry is valid"),
                ),
                ..base
            },
            model: ArModel::real(&[0.85], 5e-3).expect("stationary"),
            packets_per_set: 600,
            seed: 0,
        }
    }
}

/// Where the harness gets its trace sets from.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    Generated(GeneratedSource),
    /// Scene-driven synthetic traces.
    Scene {
        channel: ChannelConfig,
        scene: SceneTraceConfig,
        packets_per_set: usize,
        seed: u64,
    },
    /// `set{id:02}.vvdtrace` files in a directory.
    Files { dir: PathBuf },
}

pub fn trace_file_name(set_id: i64) -> String {
    format!("set{set_id:02}.vvdtrace")
}

pub fn estimate_file_name(set_id: i64) -> String {
    format!("set{set_id:02}.vvdest")
}

/// Fails with a configuration error naming every missing path.
pub fn require_files(paths: &[PathBuf], what: &str) -> Result<()> {
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
    if missing.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
    Err(Error::Config {
        message: format!("missing {what}: {}", list.join(", ")),
        paths: missing,
    })
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

impl TraceSource {
    /// Checks that every requested set can be produced.
    pub fn check(&self, set_ids: &[i64]) -> Result<()> {
        match self {
            TraceSource::Files { dir } => {
                let paths: Vec<PathBuf> = set_ids.iter().map(|&id| dir.join(trace_file_name(id))).collect();
                require_files(&paths, "trace files")
            }
            TraceSource::Generated(g) => g.channel.validate(),
            TraceSource::Scene { channel, .. } => channel.validate(),
        }
    }

    pub fn records(&self, set_id: i64) -> Result<RecordStream> {
        match self {
            TraceSource::Generated(g) => {
                let cfg = ChannelConfig {
                    rng_seed: set_seed(g.seed, set_id),
                    ..g.channel.clone()
                };
                let gen = TraceGenerator::new(cfg, g.model.clone(), g.packets_per_set, PsduSource::Random)?;
                Ok(Box::new(gen))
            }
            TraceSource::Scene {
                channel,
                scene,
                packets_per_set,
                seed,
            } => {
                let cfg = ChannelConfig {
                    rng_seed: set_seed(*seed, set_id),
                    ..channel.clone()
                };
                let gen = SceneTraceGenerator::new(cfg, scene.clone(), *packets_per_set, PsduSource::Random)?;
                Ok(Box::new(gen.map(|r| r.map(|(rec, _)| rec))))
            }
            TraceSource::Files { dir } => {
                let path = dir.join(trace_file_name(set_id));
                let set = read_trace(open(&path)?)?;
                if set.set_id != set_id {
                    return Err(Error::Config {
                        message: format!("{} holds set {}, expected {set_id}", path.display(), set.set_id),
                        paths: vec![path],
                    });
                }
                Ok(Box::new(set.records.into_iter().map(Ok)))
            }
        }
    }
}
