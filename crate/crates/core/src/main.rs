use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chanlab::channel::{default_mean_cir, ArModel, ChannelConfig};
use chanlab::equalization::{EqualizerConfig, DEFAULT_EQUALIZER_TAPS};
use chanlab::error::{Error, Result};
use chanlab::estimation::{
    ground_truth_estimate, preamble_estimate, previous_estimate, sync_ls_estimate, EstimateHistory,
};
use chanlab::harness::{
    format_summary, run_aging, run_comparison, summarize, trace_file_name,
    AgingConfig, AgingTechnique, DetectorKind, GeneratedSource, RunConfig, Technique, TraceSource,
};
use chanlab::metrics::DEFAULT_AGES_MS;
use chanlab::scene::{write_depth, SceneTraceConfig, SceneTraceGenerator};
use chanlab::trace::{read_trace, write_estimates, EstimateRecord, TraceWriter};
use chanlab::channel::{PsduSource, TraceGenerator};

#[derive(Parser)]
#[command(name = "chanlab", version, about = "Channel estimation and equalization lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic trace sets as setNN.vvdtrace files.
    Generate(GenerateArgs),
    /// Run one estimator over a trace file and write a .vvdest file.
    Estimate(EstimateArgs),
    /// Score techniques over cross-validated set combinations.
    Compare(CompareArgs),
    /// Score aged estimates over a range of ages.
    Aging(AgingArgs),
    /// Summarize a comparison table.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    /// Run seed; every random stream derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Packets per trace set.
    #[arg(long, default_value_t = 600)]
    packets: usize,
    /// SNR in dB; `inf` disables noise.
    #[arg(long, default_value_t = 25.0)]
    snr_db: f64,
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.85")]
    phi: Vec<f64>,
    /// AR innovation variance per tap.
    #[arg(long, default_value_t = 5e-3)]
    process_var: f64,
    /// Carrier phase random-walk step, radians per packet.
    #[arg(long, default_value_t = 0.05)]
    phase_drift: f64,
    #[arg(long, default_value_t = 11)]
    taps: usize,
    #[arg(long, default_value_t = 5)]
    pre_cursor: usize,
    #[arg(long, default_value_t = 4)]
    samples_per_chip: usize,
    /// Drive the channel from the geometric scene model instead of AR fading.
    #[arg(long)]
    scene: bool,
    /// Amplitude factor of blocked scene paths.
    #[arg(long, default_value_t = chanlab::scene::DEFAULT_BLOCKAGE)]
    blockage: f64,
}

impl ChannelArgs {
    fn channel(&self) -> Result<ChannelConfig> {
        let mean = if self.scene {
            None
        } else {
            Some(default_mean_cir(self.taps, self.pre_cursor)?)
        };
        let cfg = ChannelConfig {
            n_taps: self.taps,
            pre_cursor: self.pre_cursor,
            samples_per_chip: self.samples_per_chip,
            snr_db: self.snr_db,
            phase_drift_std_rad: self.phase_drift,
            mean_cir: mean,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn scene_config(&self) -> SceneTraceConfig {
        let mut sc = SceneTraceConfig::default();
        sc.scene.blockage_factor = self.blockage;
        sc
    }

    fn source(&self) -> Result<TraceSource> {
        let channel = self.channel()?;
        if self.scene {
            return Ok(TraceSource::Scene {
                channel,
                scene: self.scene_config(),
                packets_per_set: self.packets,
                seed: self.seed,
            });
        }
        Ok(TraceSource::Generated(GeneratedSource {
            channel,
            model: ArModel::real(&self.phi, self.process_var)?,
            packets_per_set: self.packets,
            seed: self.seed,
        }))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = 15)]
    sets: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// ground-truth, preamble, genie or prev-<N>ms.
    #[arg(long)]
    technique: String,
    #[arg(long, default_value = "margin:8")]
    detector: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Read setNN.vvdtrace files from this directory instead of generating.
    #[arg(long)]
    traces: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> Result<TraceSource> {
        match &self.traces {
            Some(dir) => Ok(TraceSource::Files { dir: dir.clone() }),
            None => self.channel.source(),
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 15)]
    sets: usize,
    /// Comma-separated technique tags; defaults to every built-in technique.
    #[arg(long, value_delimiter = ',')]
    techniques: Vec<String>,
    /// margin:<threshold>, bernoulli:<p>[:<seed>] or always.
    #[arg(long, default_value = "margin:8")]
    detector: String,
    #[arg(long)]
    vvd_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EQUALIZER_TAPS)]
    eq_taps: usize,
    /// Target delay of the equalizer; centred when absent.
    #[arg(long)]
    eq_u_index: Option<usize>,
    #[arg(long, default_value_t = chanlab::harness::KALMAN_WARMUP_PACKETS)]
    kalman_warmup: usize,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AgingArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    set_ids: Vec<i64>,
    /// genie and/or file.
    #[arg(long, value_delimiter = ',', default_value = "genie")]
    techniques: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    ages_ms: Vec<i64>,
    /// Also decode with aged estimates to report PER.
    #[arg(long)]
    decode: bool,
    #[arg(long)]
    estimates_dir: Option<PathBuf>,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    json: bool,
}

fn parse_detector(s: &str, seed: u64) -> Result<DetectorKind> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Argument(format!("bad detector `{s}`"));
    match parts.as_slice() {
        ["always"] => Ok(DetectorKind::Always),
        ["margin", t] => Ok(DetectorKind::Margin {
            threshold: t.parse().map_err(|_| bad())?,
        }),
        ["bernoulli", p] => Ok(DetectorKind::Bernoulli {
            failure_prob: p.parse().map_err(|_| bad())?,
            seed,
        }),
        ["bernoulli", p, sd] => Ok(DetectorKind::Bernoulli {
            failure_prob: p.parse().map_err(|_| bad())?,
            seed: sd.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            context: format!("creating {}", parent.display()),
            source: e,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        context: format!("creating {}", path.display()),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            context: format!("writing {}", path.display()),
            source: e,
        })
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let source = args.channel.source()?;
    for id in 1..=args.sets as i64 {
        let path = args.out_dir.join(trace_file_name(id));
        match &source {
            TraceSource::Scene { channel, scene, packets_per_set, seed } => {
                let cfg = ChannelConfig {
                    rng_seed: chanlab::harness::set_seed(*seed, id),
                    ..channel.clone()
                };
                let gen = SceneTraceGenerator::new(cfg, scene.clone(), *packets_per_set, PsduSource::Random)?;
                let md = gen.metadata();
                let mut w = TraceWriter::new(create(&path)?, id, &md, *packets_per_set)?;
                let mut frames = Vec::new();
                for item in gen {
                    let (rec, f) = item?;
                    w.push(&rec)?;
                    frames.extend(f);
                }
                w.finish()?;
                let depth = args.out_dir.join(format!("set{id:02}.vvddepth"));
                write_depth(&frames, create(&depth)?)?;
            }
            TraceSource::Generated(g) => {
                let cfg = ChannelConfig {
                    rng_seed: chanlab::harness::set_seed(g.seed, id),
                    ..g.channel.clone()
                };
                let gen = TraceGenerator::new(cfg, g.model.clone(), g.packets_per_set, PsduSource::Random)?;
                let md = gen.metadata();
                let mut w = TraceWriter::new(create(&path)?, id, &md, g.packets_per_set)?;
                for rec in gen {
                    w.push(&rec?)?;
                }
                w.finish()?;
            }
            TraceSource::Files { .. } => unreachable!("generation never reads files"),
        }
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let file = File::open(&args.trace).map_err(|e| Error::Io {
        context: format!("opening {}", args.trace.display()),
        source: e,
    })?;
    let set = read_trace(std::io::BufReader::new(file))?;
    let technique: Technique = args.technique.parse()?;
    let detector = parse_detector(&args.detector, set.metadata.seed)?.build()?;
    let tag = technique.tag();
    let mut history = EstimateHistory::new();
    let mut out = Vec::with_capacity(set.records.len());
    for rec in &set.records {
        let est = match technique {
            Technique::GroundTruth => EstimateRecord::available(rec.seq_no, &tag, ground_truth_estimate(rec)?),
            Technique::Genie => EstimateRecord::available(rec.seq_no, &tag, sync_ls_estimate(rec)?),
            Technique::Preamble => preamble_estimate(rec, detector.as_ref())?,
            Technique::Previous { age_ms } => {
                history.insert(rec.timestamp_ms, ground_truth_estimate(rec)?);
                match previous_estimate(&history, rec.timestamp_ms, age_ms) {
                    Some(c) => EstimateRecord::available(rec.seq_no, &tag, c),
                    None => EstimateRecord::unavailable(rec.seq_no, &tag),
                }
            }
            other => {
                return Err(Error::Argument(format!(
                    "`{other}` cannot be run on a single trace file"
                )))
            }
        };
        out.push(est);
    }
    write_estimates(&out, create(&args.out)?)?;
    eprintln!("wrote {} estimates to {}", out.len(), args.out.display());
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let techniques = if args.techniques.is_empty() {
        Technique::defaults()
    } else {
        args.techniques.iter().map(|t| t.parse()).collect::<Result<_>>()?
    };
    let cfg = RunConfig {
        techniques,
        source: args.source.source()?,
        n_sets: args.sets,
        detector: parse_detector(&args.detector, args.source.channel.seed)?,
        equalizer: EqualizerConfig {
            taps: args.eq_taps,
            u_index: args.eq_u_index,
        },
        kalman_warmup: args.kalman_warmup,
        vvd_dir: args.vvd_dir.clone(),
    };
    let out = run_comparison(&cfg)?;
    write_text(&args.csv, &out.to_csv()?)?;
    if let Some(json) = &args.json {
        write_text(json, &out.to_json()?)?;
    }
    eprintln!("wrote {}", args.csv.display());
    Ok(())
}

fn aging(args: &AgingArgs) -> Result<()> {
    let techniques = args
        .techniques
        .iter()
        .map(|t| match t.as_str() {
            "genie" => Ok(AgingTechnique::Genie),
            "file" | "vvd" => Ok(AgingTechnique::FromFile),
            other => Err(Error::Argument(format!("unknown aging technique `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = AgingConfig {
        source: args.source.source()?,
        set_ids: args.set_ids.clone(),
        techniques,
        ages_ms: if args.ages_ms.is_empty() {
            DEFAULT_AGES_MS.to_vec()
        } else {
            args.ages_ms.clone()
        },
        decode: args.decode.then(EqualizerConfig::default),
        estimate_dir: args.estimates_dir.clone(),
    };
    let out = run_aging(&cfg)?;
    write_text(&args.csv, &out.to_csv()?)?;
    eprintln!("wrote {}", args.csv.display());
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let file = File::open(&args.csv).map_err(|e| Error::Io {
        context: format!("opening {}", args.csv.display()),
        source: e,
    })?;
    let rows = summarize(file)?;
    if args.json {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Argument(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", format_summary(&rows));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
        Command::Aging(a) => aging(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

