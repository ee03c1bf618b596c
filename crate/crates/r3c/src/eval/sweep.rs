//! Blend-weight grid search over a generated suite.
//!
//! For every case and every alpha in the grid the sweep runs the full
//! refinement loop, scores the result against the case's ground truth, and
//! adds a standalone (single classifier call) baseline row per case. The
//! winning alpha maximizes mean IoU; ties fall back to mean skeleton
//! recall, then to the smaller (more conservative) alpha.

use std::io::Write;

use serde::Serialize;

use crate::classifiers::{enhance_with_policy, Classifier};
use crate::engine::{run_r3c, R3CConfig};
use crate::error::{Error, Result};
use crate::eval::{count_components, overlap_metrics, skeleton_recall, Connectivity};
use crate::synth::{materialize_case, SuiteManifest};

/// Scores of one (case, alpha) combination. `alpha` is `None` for the
/// standalone baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub classifier: String,
    pub alpha: Option<f64>,
    pub iou: f64,
    pub dice: f64,
    /// 8-connected components of the predicted ridge mask.
    pub component_count: usize,
    pub skeleton_recall: f64,
    pub classifier_calls: usize,
}

/// A case that could not be scored; recorded, never fatal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub case_id: String,
    pub alpha: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub classifier: String,
    pub grid: Vec<f64>,
    pub chosen_alpha: f64,
    pub selection_rule: String,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<SweepFailure>,
}

/// Knobs of the scoring half of the sweep.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Chebyshev radius of the skeleton-recall match window.
    pub recall_radius: usize,
    /// Worker threads; 1 runs serially. Results are identical for any
    /// value because rows are collected in canonical order.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> SweepOptions {
        SweepOptions {
            recall_radius: 2,
            jobs: 1,
        }
    }
}

/// The standard five-point grid: 5%, 25%, 50%, 75%, 100%.
pub fn default_grid() -> Vec<f64> {
    vec![0.05, 0.25, 0.50, 0.75, 1.00]
}

const SELECTION_RULE: &str =
    "highest mean IoU; ties by mean skeleton recall, then by smaller alpha";

/// Runs the grid search. Rows come back in canonical order (case order in
/// the manifest, then baseline, then ascending alpha) regardless of the
/// worker count.
pub fn alpha_sweep(
    suite: &SuiteManifest,
    classifier: &dyn Classifier,
    grid: &[f64],
    config_template: &R3CConfig,
    options: &SweepOptions,
) -> Result<SweepReport> {
    if suite.cases.is_empty() {
        return Err(Error::InvalidConfig("sweep suite is empty".to_string()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".to_string()));
    }
    let mut sorted_grid = grid.to_vec();
    sorted_grid.sort_by(|a, b| a.total_cmp(b));

    // Canonical task list: per case, baseline first, then each alpha.
    let mut tasks: Vec<(usize, Option<f64>)> = Vec::new();
    for case_index in 0..suite.cases.len() {
        tasks.push((case_index, None));
        for &alpha in &sorted_grid {
            tasks.push((case_index, Some(alpha)));
        }
    }

    let name = classifier.spec().name.clone();
    let run_task = |&(case_index, alpha): &(usize, Option<f64>)| -> std::result::Result<MetricsRow, SweepFailure> {
        let case = &suite.cases[case_index];
        score_case(case, classifier, &name, alpha, config_template, options).map_err(|e| {
            SweepFailure {
                case_id: case.id.clone(),
                alpha,
                message: e.to_string(),
            }
        })
    };

    let outcomes: Vec<std::result::Result<MetricsRow, SweepFailure>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {}", e)))?;
        pool.install(|| {
            use rayon::prelude::*;
            tasks.par_iter().map(run_task).collect()
        })
    } else {
        tasks.iter().map(run_task).collect()
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(failure) => failures.push(failure),
        }
    }

    let chosen_alpha = select_alpha(&rows, &sorted_grid)?;
    Ok(SweepReport {
        classifier: name,
        grid: sorted_grid,
        chosen_alpha,
        selection_rule: SELECTION_RULE.to_string(),
        rows,
        failures,
    })
}

fn score_case(
    case: &crate::synth::SynthCase,
    classifier: &dyn Classifier,
    name: &str,
    alpha: Option<f64>,
    config_template: &R3CConfig,
    options: &SweepOptions,
) -> Result<MetricsRow> {
    let materialized = materialize_case(case)?;
    let (prediction, calls) = match alpha {
        None => (enhance_with_policy(classifier, &materialized.image)?, 1),
        Some(alpha) => {
            let config = R3CConfig {
                alpha,
                ..config_template.clone()
            };
            let (mask, trace) = run_r3c(&materialized.image, classifier, &config)?;
            (mask, trace.classifier_calls)
        }
    };
    let gt = &materialized.ridge_mask;
    if !prediction.same_dimensions(gt) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} (ground truth)", gt.width(), gt.height()),
            actual: format!(
                "{}x{} (prediction)",
                prediction.width(),
                prediction.height()
            ),
        });
    }
    let (iou, dice) = overlap_metrics(&prediction, gt)?;
    let recall = skeleton_recall(&prediction, gt, options.recall_radius)?;
    let components = count_components(&prediction.to_ridge_polarity(), Connectivity::Eight);
    Ok(MetricsRow {
        case_id: case.id.clone(),
        classifier: name.to_string(),
        alpha,
        iou,
        dice,
        component_count: components,
        skeleton_recall: recall,
        classifier_calls: calls,
    })
}

/// Argmax of mean IoU over the grid with the documented tiebreaks. Baseline
/// rows never participate.
fn select_alpha(rows: &[MetricsRow], grid: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64, f64)> = None; // (alpha, mean_iou, mean_recall)
    for &alpha in grid {
        let scores: Vec<&MetricsRow> = rows.iter().filter(|r| r.alpha == Some(alpha)).collect();
        if scores.is_empty() {
            continue;
        }
        let mean_iou = scores.iter().map(|r| r.iou).sum::<f64>() / scores.len() as f64;
        let mean_recall =
            scores.iter().map(|r| r.skeleton_recall).sum::<f64>() / scores.len() as f64;
        let candidate = (alpha, mean_iou, mean_recall);
        best = Some(match best {
            None => candidate,
            Some(current) => {
                let (cur_alpha, cur_iou, cur_recall) = current;
                if mean_iou > cur_iou
                    || (mean_iou == cur_iou && mean_recall > cur_recall)
                    || (mean_iou == cur_iou && mean_recall == cur_recall && alpha < cur_alpha)
                {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    best.map(|(alpha, _, _)| alpha).ok_or_else(|| {
        Error::InvalidConfig("sweep produced no scorable rows for any grid alpha".to_string())
    })
}

impl SweepReport {
    /// Writes the row table as CSV: floats with six decimals, the alpha
    /// column printing `none` for baseline rows.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(
            writer,
            "case_id,classifier,alpha,iou,dice,component_count,skeleton_recall,classifier_calls"
        )?;
        for row in &self.rows {
            let alpha = match row.alpha {
                None => "none".to_string(),
                Some(a) => format!("{:.6}", a),
            };
            writeln!(
                writer,
                "{},{},{},{:.6},{:.6},{},{:.6},{}",
                row.case_id,
                row.classifier,
                alpha,
                row.iou,
                row.dice,
                row.component_count,
                row.skeleton_recall,
                row.classifier_calls
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Per-alpha means plus the selection outcome, as pretty JSON.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct AlphaSummary {
            alpha: Option<f64>,
            cases: usize,
            mean_iou: f64,
            mean_dice: f64,
            mean_component_count: f64,
            mean_skeleton_recall: f64,
            mean_classifier_calls: f64,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            classifier: &'a str,
            grid: &'a [f64],
            chosen_alpha: f64,
            selection_rule: &'a str,
            per_alpha: Vec<AlphaSummary>,
            failures: &'a [SweepFailure],
        }

        let mut buckets: Vec<Option<f64>> = vec![None];
        buckets.extend(self.grid.iter().map(|&a| Some(a)));
        let per_alpha = buckets
            .into_iter()
            .filter_map(|alpha| {
                let scores: Vec<&MetricsRow> =
                    self.rows.iter().filter(|r| r.alpha == alpha).collect();
                if scores.is_empty() {
                    return None;
                }
                let n = scores.len() as f64;
                Some(AlphaSummary {
                    alpha,
                    cases: scores.len(),
                    mean_iou: scores.iter().map(|r| r.iou).sum::<f64>() / n,
                    mean_dice: scores.iter().map(|r| r.dice).sum::<f64>() / n,
                    mean_component_count: scores
                        .iter()
                        .map(|r| r.component_count as f64)
                        .sum::<f64>()
                        / n,
                    mean_skeleton_recall: scores.iter().map(|r| r.skeleton_recall).sum::<f64>() / n,
                    mean_classifier_calls: scores
                        .iter()
                        .map(|r| r.classifier_calls as f64)
                        .sum::<f64>()
                        / n,
                })
            })
            .collect();

        serde_json::to_string_pretty(&Summary {
            classifier: &self.classifier,
            grid: &self.grid,
            chosen_alpha: self.chosen_alpha,
            selection_rule: &self.selection_rule,
            per_alpha,
            failures: &self.failures,
        })
        .expect("summary serializes")
    }
}
