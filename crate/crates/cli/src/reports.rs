//! Report records and their byte-stable JSON encoding.

use std::io;
use std::path::Path;

use bicog::metrics::{self, EvalReport, RatioPair};
use bicog::orchestrator::{ModelRound, RoundRecord};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Compact JSON with every float written to 17 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedFloatFormatter;

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
}

/// One line of a round history: one model in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryLine {
    pub schema_version: u32,
    pub seed: u64,
    pub round: u32,
    #[serde(flatten)]
    pub model: ModelRound,
    pub round_updates: usize,
    pub ensemble_overall_accuracy: f64,
    pub ensemble_harmonic_mean: Option<f64>,
}

pub fn history_lines(seed: u64, history: &[RoundRecord]) -> Vec<HistoryLine> {
    history
        .iter()
        .flat_map(|rec| {
            rec.models.iter().map(move |m| HistoryLine {
                schema_version: SCHEMA_VERSION,
                seed,
                round: rec.round,
                model: m.clone(),
                round_updates: rec.updates,
                ensemble_overall_accuracy: rec.ensemble.overall_accuracy,
                ensemble_harmonic_mean: rec.ensemble.harmonic_mean,
            })
        })
        .collect()
}

pub fn history_jsonl(seed: u64, history: &[RoundRecord]) -> Result<String, CliError> {
    let mut out = String::new();
    for line in history_lines(seed, history) {
        out.push_str(&to_json(&line)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoAccuracyPoint {
    pub round: u32,
    pub model: usize,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharesPoint {
    pub round: u32,
    pub model: usize,
    pub inter_shares: Option<Vec<f64>>,
    pub selected_shares: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRatioSeries {
    pub model: usize,
    pub pairs: Vec<RatioPair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub schema_version: u32,
    pub seed: u64,
    pub pseudo_label_accuracy: Vec<PseudoAccuracyPoint>,
    pub class_shares: Vec<SharesPoint>,
    pub error_ratio: Vec<ErrorRatioSeries>,
}

pub fn plot_data(seed: u64, history: &[RoundRecord], k: usize, alpha: f64) -> PlotData {
    let shares = |c: &Option<Vec<usize>>| {
        c.clone()
            .map(|c| metrics::distribution_from_counts(c).shares)
    };
    let mut pseudo = Vec::new();
    let mut class_shares = Vec::new();
    for rec in history {
        for m in &rec.models {
            if m.selected_size.is_some() {
                pseudo.push(PseudoAccuracyPoint {
                    round: rec.round,
                    model: m.model,
                    accuracy: m.pseudo_label_accuracy,
                });
            }
            if m.inter_class_counts.is_some() {
                class_shares.push(SharesPoint {
                    round: rec.round,
                    model: m.model,
                    inter_shares: shares(&m.inter_class_counts),
                    selected_shares: shares(&m.selected_class_counts),
                });
            }
        }
    }
    PlotData {
        schema_version: SCHEMA_VERSION,
        seed,
        pseudo_label_accuracy: pseudo,
        class_shares,
        error_ratio: (0..k)
            .map(|j| ErrorRatioSeries {
                model: j,
                pairs: metrics::error_ratio_track(history, j, alpha),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub rounds: usize,
    pub baseline: EvalReport,
    #[serde(rename = "final")]
    pub final_report: EvalReport,
    pub baseline_model_accuracy: Vec<f64>,
    pub final_model_accuracy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// Sample standard deviation; zero for a single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema_version: u32,
    pub label_names: Option<Vec<String>>,
    pub baseline_overall_accuracy: Option<MeanStd>,
    pub final_overall_accuracy: Option<MeanStd>,
    pub final_harmonic_mean: Option<MeanStd>,
    pub seeds: Vec<SeedSummary>,
}

impl Aggregate {
    pub fn new(seeds: Vec<SeedSummary>, label_names: Option<Vec<String>>) -> Self {
        let collect = |f: &dyn Fn(&SeedSummary) -> Option<f64>| -> Option<MeanStd> {
            let v: Option<Vec<f64>> = seeds.iter().map(f).collect();
            v.and_then(|v| MeanStd::of(&v))
        };
        Self {
            schema_version: SCHEMA_VERSION,
            label_names,
            baseline_overall_accuracy: collect(&|s| Some(s.baseline.overall_accuracy)),
            final_overall_accuracy: collect(&|s| Some(s.final_report.overall_accuracy)),
            final_harmonic_mean: collect(&|s| s.final_report.harmonic_mean),
            seeds,
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(to_json(&0.1f64).unwrap(), "1.0000000000000001e-1");
        assert_eq!(
            to_json(&vec![1.0f64, f64::NAN]).unwrap(),
            "[1.0000000000000000e0,null]"
        );
        let back: f64 = serde_json::from_str(&to_json(&(2.0f64 / 3.0)).unwrap()).unwrap();
        assert_eq!(back, 2.0 / 3.0);
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.n), (2.0, 2));
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[5.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }
}
