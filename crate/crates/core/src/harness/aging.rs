use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::source::{estimate_file_name, open, require_files, TraceSource};
use crate::equalization::EqualizerConfig;
use crate::error::{Error, Result};
use crate::estimation::{ground_truth_estimate, sync_ls_estimate, TAG_GENIE};
use crate::metrics::{AgingPoint, AgingSweep, DEFAULT_AGES_MS};
use crate::trace::{read_estimates, Cir};

/// Estimators whose output is aged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgingTechnique {
    Genie,
    /// Estimates read from `setNN.vvdest`.
    FromFile,
}

impl AgingTechnique {
    pub fn tag(&self) -> &'static str {
        match self {
            AgingTechnique::Genie => TAG_GENIE,
            AgingTechnique::FromFile => "vvd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgingConfig {
    pub source: TraceSource,
    pub set_ids: Vec<i64>,
    pub techniques: Vec<AgingTechnique>,
    pub ages_ms: Vec<i64>,
    /// Also decode with every aged estimate to get PER; slow.
    pub decode: Option<EqualizerConfig>,
    pub estimate_dir: Option<PathBuf>,
}

impl Default for AgingConfig {
    fn default() -> Self {
        AgingConfig {
            source: TraceSource::Generated(Default::default()),
            set_ids: vec![1],
            techniques: vec![AgingTechnique::Genie],
            ages_ms: DEFAULT_AGES_MS.to_vec(),
            decode: None,
            estimate_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgingCurve {
    pub set_id: i64,
    pub technique_tag: String,
    pub points: Vec<AgingPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgingOutput {
    pub curves: Vec<AgingCurve>,
}

impl AgingOutput {
    /// Mean MSE per age over sets, for one technique.
    pub fn mean_mse(&self, tag: &str) -> Vec<(i64, f64)> {
        let mut sums: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for c in self.curves.iter().filter(|c| c.technique_tag == tag) {
            for p in &c.points {
                if let Some(m) = p.mse {
                    let e = sums.entry(p.age_ms).or_insert((0.0, 0));
                    e.0 += m;
                    e.1 += 1;
                }
            }
        }
        sums.into_iter().map(|(a, (s, n))| (a, s / n as f64)).collect()
    }

    /// Long-format rows: set, technique, age_ms, metric, value.
    pub fn to_csv(&self) -> Result<String> {
        let csv_err = |e: csv::Error| Error::arg(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["set", "technique", "age_ms", "metric", "value"])
            .map_err(csv_err)?;
        for c in &self.curves {
            for p in &c.points {
                let metrics = [("mse", p.mse), ("per", p.per), ("n_packets", Some(p.n_packets as f64))];
                for (name, v) in metrics {
                    if let Some(v) = v {
                        w.write_record([
                            c.set_id.to_string(),
                            c.technique_tag.clone(),
                            p.age_ms.to_string(),
                            name.to_string(),
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
}

/// Ages each technique's estimates over every requested set.
pub fn run_aging(cfg: &AgingConfig) -> Result<AgingOutput> {
    if cfg.techniques.is_empty() || cfg.set_ids.is_empty() {
        return Err(Error::arg("aging needs at least one technique and one set"));
    }
    cfg.source.check(&cfg.set_ids)?;
    let from_file = cfg.techniques.contains(&AgingTechnique::FromFile);
    if from_file {
        let dir = cfg.estimate_dir.as_ref().ok_or_else(|| Error::Config {
            message: "file-fed aging needs an estimate directory".into(),
            paths: vec![],
        })?;
        let paths: Vec<PathBuf> = cfg.set_ids.iter().map(|&id| dir.join(estimate_file_name(id))).collect();
        require_files(&paths, "estimate files")?;
    }

    let mut curves = Vec::new();
    for &set_id in &cfg.set_ids {
        let file: BTreeMap<i64, Option<Cir>> = match (&cfg.estimate_dir, from_file) {
            (Some(dir), true) => read_estimates(open(&dir.join(estimate_file_name(set_id)))?)?
                .into_iter()
                .map(|r| (r.seq_no, r.cir))
                .collect(),
            _ => BTreeMap::new(),
        };
        let mut sweeps = cfg
            .techniques
            .iter()
            .map(|_| AgingSweep::new(&cfg.ages_ms, cfg.decode))
            .collect::<Result<Vec<_>>>()?;
        for rec in cfg.source.records(set_id)? {
            let rec = rec?;
            let gt = ground_truth_estimate(&rec)?;
            for (t, sweep) in cfg.techniques.iter().zip(sweeps.iter_mut()) {
                let est = match t {
                    AgingTechnique::Genie => Some(sync_ls_estimate(&rec)?),
                    AgingTechnique::FromFile => file.get(&rec.seq_no).cloned().flatten(),
                };
                sweep.push(&rec, est, &gt)?;
            }
        }
        for (t, sweep) in cfg.techniques.iter().zip(&sweeps) {
            curves.push(AgingCurve {
                set_id,
                technique_tag: t.tag().to_string(),
                points: sweep.finish()?,
            });
        }
    }
    Ok(AgingOutput { curves })
}
