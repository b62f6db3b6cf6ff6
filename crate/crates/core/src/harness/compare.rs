use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::combinations::{make_combinations, SetCombination};
use super::source::{estimate_file_name, open, require_files, TraceSource};
use super::technique::{DetectorKind, Technique};
use crate::equalization::EqualizerConfig;
use crate::error::{Error, Result};
use crate::estimation::{
    fit_ar, ground_truth_estimate, phase_correct, previous_estimate, sync_ls_estimate, ArFit,
    EstimateHistory, KalmanTracker,
};
use crate::metrics::{MetricsAccumulator, MetricsReport};
use crate::receiver::{decode_standard, decode_with_estimate, PacketOutcome};
use crate::trace::{read_estimates, Cir, TraceRecord};

/// Packets at the start of each test set left out of Kalman scores while
/// the filter settles.
pub const KALMAN_WARMUP_PACKETS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub techniques: Vec<Technique>,
    pub source: TraceSource,
    pub n_sets: usize,
    pub detector: DetectorKind,
    pub equalizer: EqualizerConfig,
    pub kalman_warmup: usize,
    /// Directory with `setNN.vvdest` files, needed by the file-fed
    /// techniques.
    pub vvd_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            techniques: Technique::defaults(),
            source: TraceSource::Generated(Default::default()),
            n_sets: 15,
            detector: DetectorKind::default(),
            equalizer: EqualizerConfig::default(),
            kalman_warmup: KALMAN_WARMUP_PACKETS,
            vvd_dir: None,
        }
    }
}

/// Scores of every technique on one combination's test set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationResult {
    pub combination: SetCombination,
    pub reports: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonOutput {
    pub results: Vec<CombinationResult>,
}

impl ComparisonOutput {
    /// Report of one technique in one combination (1-based index).
    pub fn report(&self, combination: usize, tag: &str) -> Option<&MetricsReport> {
        self.results
            .iter()
            .find(|r| r.combination.index == combination)?
            .reports
            .iter()
            .find(|r| r.technique_tag == tag)
    }

    /// Mean over combinations of one metric of one technique; combinations
    /// where the metric is undefined are skipped.
    pub fn mean(&self, tag: &str, metric: Metric) -> Option<f64> {
        let vals: Vec<f64> = self
            .results
            .iter()
            .filter_map(|r| r.reports.iter().find(|m| m.technique_tag == tag))
            .filter_map(|m| metric.of(m))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Long-format rows: combination, technique, metric, value.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::arg(format!("csv: {e}"));
        w.write_record(["combination", "technique", "metric", "value"])
            .map_err(csv_err)?;
        for r in &self.results {
            for m in &r.reports {
                for metric in Metric::ALL {
                    if let Some(v) = metric.of(m) {
                        w.write_record([
                            r.combination.index.to_string(),
                            m.technique_tag.clone(),
                            metric.name().to_string(),
                            v.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::arg(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::arg(format!("json: {e}")))
    }
}

/// Metrics written to the long-format table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Per,
    Cer,
    Ber,
    Mse,
    Packets,
    Unavailable,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Per,
        Metric::Cer,
        Metric::Ber,
        Metric::Mse,
        Metric::Packets,
        Metric::Unavailable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Per => "per",
            Metric::Cer => "cer",
            Metric::Ber => "ber",
            Metric::Mse => "mse",
            Metric::Packets => "n_packets",
            Metric::Unavailable => "unavailable",
        }
    }

    pub fn of(&self, m: &MetricsReport) -> Option<f64> {
        match self {
            Metric::Per => Some(m.per),
            Metric::Cer => Some(m.cer),
            Metric::Ber => Some(m.ber),
            Metric::Mse => m.mse,
            Metric::Packets => Some(m.n_packets as f64),
            Metric::Unavailable => Some(m.unavailable as f64),
        }
    }
}

fn ground_truth_sequence(source: &TraceSource, set_id: i64) -> Result<Vec<Cir>> {
    source
        .records(set_id)?
        .map(|r| r.and_then(|rec| ground_truth_estimate(&rec)))
        .collect()
}

fn load_vvd(dir: &Path, set_id: i64) -> Result<BTreeMap<i64, Option<Cir>>> {
    let recs = read_estimates(open(&dir.join(estimate_file_name(set_id)))?)?;
    Ok(recs.into_iter().map(|r| (r.seq_no, r.cir)).collect())
}

/// Decodes each distinct estimate once per packet.
struct DecodeCache<'a> {
    rec: &'a TraceRecord,
    eq: &'a EqualizerConfig,
    seen: Vec<(Cir, PacketOutcome)>,
}

impl DecodeCache<'_> {
    fn decode(&mut self, cir: Option<&Cir>) -> Result<PacketOutcome> {
        let Some(h) = cir else {
            return Ok(PacketOutcome::lost());
        };
        if let Some((_, o)) = self.seen.iter().find(|(c, _)| c == h) {
            return Ok(*o);
        }
        let o = decode_with_estimate(self.rec, Some(h), self.eq)?;
        self.seen.push((h.clone(), o));
        Ok(o)
    }
}

fn evaluate_test_set(
    cfg: &RunConfig,
    combo: &SetCombination,
    fits: &BTreeMap<usize, ArFit>,
) -> Result<Vec<MetricsReport>> {
    let detector = cfg.detector.build()?;
    let vvd = match (&cfg.vvd_dir, cfg.techniques.iter().any(Technique::needs_vvd)) {
        (Some(dir), true) => Some(load_vvd(dir, combo.test_id)?),
        _ => None,
    };
    let max_age = cfg
        .techniques
        .iter()
        .filter_map(|t| match t {
            Technique::Previous { age_ms } => Some(*age_ms),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut history = EstimateHistory::with_horizon(max_age);
    let mut trackers: BTreeMap<usize, KalmanTracker> = BTreeMap::new();
    let mut accs: Vec<MetricsAccumulator> = vec![MetricsAccumulator::new(); cfg.techniques.len()];

    for (k, rec) in cfg.source.records(combo.test_id)?.enumerate() {
        let rec = rec?;
        let gt = ground_truth_estimate(&rec)?;
        for (&order, fit) in fits {
            if let std::collections::btree_map::Entry::Vacant(e) = trackers.entry(order) {
                e.insert(KalmanTracker::new(fit, rec.true_cir.pre_cursor())?);
            }
        }
        let header = sync_ls_estimate(&rec)?;
        let detected = detector.detect(&rec)?;
        let vvd_now = vvd.as_ref().and_then(|m| m.get(&rec.seq_no).cloned().flatten());
        let mut cache = DecodeCache {
            rec: &rec,
            eq: &cfg.equalizer,
            seen: Vec::new(),
        };
        let combine = |blind: Option<Cir>| -> Result<Option<Cir>> {
            if detected {
                return Ok(Some(header.clone()));
            }
            blind
                .map(|b| phase_correct(&b, &header).map(|pc| pc.rotated))
                .transpose()
        };

        for (t, acc) in cfg.techniques.iter().zip(accs.iter_mut()) {
            if t.kalman_order().is_some() && k < cfg.kalman_warmup {
                continue;
            }
            let estimate = match t {
                Technique::Standard => {
                    acc.push_decode_only(decode_standard(&rec)?);
                    continue;
                }
                Technique::GroundTruth => Some(gt.clone()),
                Technique::Preamble => detected.then(|| header.clone()),
                Technique::Genie => Some(header.clone()),
                Technique::Previous { age_ms } => previous_estimate(&history, rec.timestamp_ms, *age_ms),
                Technique::Kalman { order } => Some(trackers[order].predict().clone()),
                Technique::Vvd => vvd_now.clone(),
                Technique::PreambleVvd => combine(vvd_now.clone())?,
                Technique::PreambleKalman { order } => combine(Some(trackers[order].predict().clone()))?,
            };
            let outcome = cache.decode(estimate.as_ref())?;
            acc.push(outcome, estimate.as_ref(), Some(&gt))?;
        }

        for tracker in trackers.values_mut() {
            tracker.observe(&gt)?;
        }
        history.insert(rec.timestamp_ms, gt);
    }

    cfg.techniques
        .iter()
        .zip(&accs)
        .map(|(t, acc)| acc.finish(t.tag(), combo.test_id))
        .collect()
}

/// Scores every technique on the test set of every combination. AR models
/// for the Kalman techniques are fitted on each combination's training
/// sets.
pub fn run_comparison(cfg: &RunConfig) -> Result<ComparisonOutput> {
    if cfg.techniques.is_empty() {
        return Err(Error::arg("no techniques requested"));
    }
    let combos = make_combinations(cfg.n_sets)?;
    let set_ids: Vec<i64> = (1..=cfg.n_sets as i64).collect();
    cfg.source.check(&set_ids)?;
    if cfg.techniques.iter().any(Technique::needs_vvd) {
        let dir = cfg.vvd_dir.as_ref().ok_or_else(|| Error::Config {
            message: "file-fed techniques need an estimate directory".into(),
            paths: vec![],
        })?;
        let paths: Vec<PathBuf> = combos.iter().map(|c| dir.join(estimate_file_name(c.test_id))).collect();
        require_files(&paths, "estimate files")?;
    }

    let orders: BTreeSet<usize> = cfg.techniques.iter().filter_map(Technique::kalman_order).collect();
    let mut truths: BTreeMap<i64, Vec<Cir>> = BTreeMap::new();
    if !orders.is_empty() {
        for &id in &set_ids {
            truths.insert(id, ground_truth_sequence(&cfg.source, id)?);
        }
    }

    let mut results = Vec::with_capacity(combos.len());
    for combo in combos {
        let mut fits = BTreeMap::new();
        if !orders.is_empty() {
            let training: Vec<Vec<Cir>> = combo.train_ids.iter().map(|id| truths[id].clone()).collect();
            for &p in &orders {
                fits.insert(p, fit_ar(&training, p)?);
            }
        }
        let reports = evaluate_test_set(cfg, &combo, &fits)?;
        results.push(CombinationResult {
            combination: combo,
            reports,
        });
    }
    Ok(ComparisonOutput { results })
}
