//! The evaluation report and its three on-disk renderings: a versioned
//! JSON document, a two-column TSV of the ROC points, and a standalone SVG
//! plot of the curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, MetricSuite};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub seed: u64,
    /// Real training rows, before any synthetic augmentation.
    pub train_samples: usize,
    /// Generated rows appended to the training set.
    pub synthetic_samples: usize,
    pub test_samples: usize,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub zero_denominator: Vec<String>,
    pub roc_points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl EvalReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        seed: u64,
        train_samples: usize,
        synthetic_samples: usize,
        test_samples: usize,
        counts: ConfusionCounts,
        suite: MetricSuite,
        roc_points: Vec<(f64, f64)>,
        auc: f64,
    ) -> EvalReport {
        EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            seed,
            train_samples,
            synthetic_samples,
            test_samples,
            counts,
            accuracy: suite.accuracy,
            precision: suite.precision,
            recall: suite.recall,
            f1: suite.f1,
            zero_denominator: suite.zero_denominator,
            roc_points,
            auc,
        }
    }

    /// Structural sanity: the curve runs monotonically from (0,0) to (1,1)
    /// and every rate is a probability.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "report schema version {} unsupported (expected {})",
                self.schema_version, REPORT_SCHEMA_VERSION
            )));
        }
        if self.counts.total() != self.test_samples {
            return Err(Error::Config(format!(
                "confusion counts cover {} rows but the test partition has {}",
                self.counts.total(),
                self.test_samples
            )));
        }
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("auc", self.auc),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.roc_points.first() != Some(&(0.0, 0.0))
            || self.roc_points.last() != Some(&(1.0, 1.0))
        {
            return Err(Error::Config(
                "roc_points must start at (0,0) and end at (1,1)".into(),
            ));
        }
        for w in self.roc_points.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return Err(Error::Config(
                    "roc_points must be non-decreasing in both coordinates".into(),
                ));
            }
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline; the canonical report encoding.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| {
            Error::Config(format!("report serialization failed: {e}"))
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<EvalReport> {
        let report: EvalReport = serde_json::from_str(s)
            .map_err(|e| Error::Config(format!("report parse failed: {e}")))?;
        report.validate()?;
        Ok(report)
    }

    /// ROC points as `fpr\ttpr` rows.
    pub fn roc_tsv(&self) -> String {
        let mut out = String::from("fpr\ttpr\n");
        for (fpr, tpr) in &self.roc_points {
            out.push_str(&format!("{fpr}\t{tpr}\n"));
        }
        out
    }

    /// Self-contained SVG of the ROC curve with the chance diagonal.
    pub fn roc_svg(&self) -> String {
        const SIZE: f64 = 420.0;
        const MARGIN: f64 = 50.0;
        let span = SIZE - 2.0 * MARGIN;
        let x = |fpr: f64| MARGIN + fpr * span;
        let y = |tpr: f64| SIZE - MARGIN - tpr * span;
        let path: Vec<String> = self
            .roc_points
            .iter()
            .map(|&(fpr, tpr)| format!("{:.2},{:.2}", x(fpr), y(tpr)))
            .collect();
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" ",
                "viewBox=\"0 0 {s} {s}\">\n",
                "<rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
                "<line x1=\"{m}\" y1=\"{e}\" x2=\"{e}\" y2=\"{e}\" stroke=\"black\"/>\n",
                "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{e}\" stroke=\"black\"/>\n",
                "<line x1=\"{m}\" y1=\"{e}\" x2=\"{e}\" y2=\"{m}\" stroke=\"#999\" ",
                "stroke-dasharray=\"6,4\"/>\n",
                "<polyline points=\"{points}\" fill=\"none\" stroke=\"#c0392b\" ",
                "stroke-width=\"2\"/>\n",
                "<text x=\"{cx}\" y=\"{bx}\" text-anchor=\"middle\" ",
                "font-family=\"sans-serif\" font-size=\"14\">false positive rate</text>\n",
                "<text x=\"14\" y=\"{cy}\" text-anchor=\"middle\" ",
                "font-family=\"sans-serif\" font-size=\"14\" ",
                "transform=\"rotate(-90 14 {cy})\">true positive rate</text>\n",
                "<text x=\"{ax}\" y=\"{ay}\" font-family=\"sans-serif\" ",
                "font-size=\"14\">AUC = {auc:.5}</text>\n",
                "</svg>\n"
            ),
            s = SIZE,
            m = MARGIN,
            e = SIZE - MARGIN,
            points = path.join(" "),
            cx = SIZE / 2.0,
            bx = SIZE - 12.0,
            cy = SIZE / 2.0,
            ax = SIZE / 2.0,
            ay = SIZE - MARGIN - 16.0,
            auc = self.auc,
        )
    }
}
