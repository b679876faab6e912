//! Statistical feature selection.
//!
//! Stages run in a fixed order, each prunable independently via the
//! threshold flags: sample-variance floor, z-score normalization (always
//! applied), per-feature Welch t-test, log2 fold-change screen on the raw
//! values, and Benjamini-Hochberg false discovery rate control over the
//! p-values of the features still standing. Per-feature statistics are
//! independent, so the scan is data-parallel; results land in
//! index-addressed slots and are identical however the work is scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FeatureMatrix;
use crate::matrix::Matrix;
use crate::stats::two_sided_t_p;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Features with sample variance strictly below this are dropped.
    pub min_variance: f64,
    /// Welch test survival requires p < p_cut.
    pub p_cut: f64,
    /// Benjamini-Hochberg survival requires adjusted p <= fdr_q.
    pub fdr_q: f64,
    /// Fold-change survival requires |log2 FC| >= this, when defined.
    pub abs_log2fc_min: f64,
    pub variance_filter: bool,
    pub t_test: bool,
    pub fold_change: bool,
    pub fdr: bool,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds {
            min_variance: 0.002,
            p_cut: 0.05,
            fdr_q: 0.01,
            abs_log2fc_min: 1.0,
            variance_filter: true,
            t_test: true,
            fold_change: true,
            fdr: true,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_variance >= 0.0 && self.min_variance.is_finite()) {
            return Err(Error::Config(format!(
                "min_variance must be a finite non-negative number, got {}",
                self.min_variance
            )));
        }
        for (name, v) in [("p_cut", self.p_cut), ("fdr_q", self.fdr_q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.abs_log2fc_min >= 0.0 && self.abs_log2fc_min.is_finite()) {
            return Err(Error::Config(format!(
                "abs_log2fc_min must be a finite non-negative number, got {}",
                self.abs_log2fc_min
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Kept,
    LowVariance,
    ZeroVariance,
    HighPValue,
    LowFoldChange,
    AboveFdr,
}

impl Reason {
    fn as_str(self) -> &'static str {
        match self {
            Reason::Kept => "kept",
            Reason::LowVariance => "low_variance",
            Reason::ZeroVariance => "zero_variance",
            Reason::HighPValue => "high_p_value",
            Reason::LowFoldChange => "low_fold_change",
            Reason::AboveFdr => "above_fdr",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub name: String,
    pub variance: f64,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub log2_fc: Option<f64>,
    pub kept: bool,
    pub reason: Reason,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionReport {
    pub features: Vec<FeatureRecord>,
}

impl SelectionReport {
    pub fn kept_count(&self) -> usize {
        self.features.iter().filter(|f| f.kept).count()
    }

    /// One row per feature, `NA` for statistics a feature never reached.
    pub fn to_tsv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x}")).unwrap_or_else(|| "NA".into())
        }
        let mut out =
            String::from("feature\tvariance\tt_stat\tp_value\tp_adjusted\tlog2_fc\tkept\treason\n");
        for f in &self.features {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                f.name,
                f.variance,
                opt(f.t_stat),
                opt(f.p_value),
                opt(f.p_adjusted),
                opt(f.log2_fc),
                f.kept,
                f.reason.as_str()
            ));
        }
        out
    }
}

/// Everything needed to map new samples of the same original feature space
/// into the selected, z-scored space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionModel {
    pub kept_indices: Vec<usize>,
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl SelectionModel {
    /// Applies the trained selection and normalization to a matrix with the
    /// same original feature layout (typically the held-out samples).
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        for (&idx, name) in self.kept_indices.iter().zip(&self.feature_names) {
            if matrix.feature_names.get(idx) != Some(name) {
                return Err(Error::Config(format!(
                    "selection model expects feature `{name}` at column {idx}; the matrix does not match"
                )));
            }
        }
        let raw = matrix.values.select_cols(&self.kept_indices)?;
        let values = Matrix::from_fn(raw.rows(), raw.cols(), |r, c| {
            (raw.get(r, c) - self.means[c]) / self.stds[c]
        });
        values.ensure_finite("selection apply")?;
        Ok(FeatureMatrix {
            kind: matrix.kind.clone(),
            sample_ids: matrix.sample_ids.clone(),
            feature_names: self.feature_names.clone(),
            values,
        })
    }
}

#[derive(Debug)]
pub struct Selection {
    /// Kept features only, z-scored with the fitted parameters.
    pub matrix: FeatureMatrix,
    pub report: SelectionReport,
    pub model: SelectionModel,
}

/// Unbiased sample variance (ddof = 1).
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            context: "sample variance".into(),
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
}

/// Indices of columns whose sample variance is at least `min_variance`,
/// along with every column's variance.
pub fn variance_filter(matrix: &Matrix, min_variance: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput {
            what: "variance filter input".into(),
        });
    }
    let mut kept = Vec::new();
    let mut variances = Vec::with_capacity(matrix.cols());
    for c in 0..matrix.cols() {
        let v = sample_variance(&matrix.column(c))?;
        if v >= min_variance {
            kept.push(c);
        }
        variances.push(v);
    }
    Ok((kept, variances))
}

/// Column-wise z-score normalization (ddof = 1). Fails on any constant
/// column; callers divert those first.
pub fn zscore_normalize(matrix: &Matrix) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let mut means = Vec::with_capacity(matrix.cols());
    let mut stds = Vec::with_capacity(matrix.cols());
    for c in 0..matrix.cols() {
        let col = matrix.column(c);
        let var = sample_variance(&col)?;
        if var == 0.0 {
            return Err(Error::Config(format!(
                "zscore_normalize: column {c} is constant"
            )));
        }
        means.push(col.iter().sum::<f64>() / col.len() as f64);
        stds.push(var.sqrt());
    }
    let out = Matrix::from_fn(matrix.rows(), matrix.cols(), |r, c| {
        (matrix.get(r, c) - means[c]) / stds[c]
    });
    Ok((out, means, stds))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchTest {
    pub t_stat: f64,
    pub p_value: f64,
    pub df: f64,
}

fn split_classes(values: &[f64], labels: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != labels.len() {
        return Err(Error::DimMismatch {
            op: "class split",
            left_rows: 1,
            left_cols: values.len(),
            right_rows: 1,
            right_cols: labels.len(),
        });
    }
    let mut g1 = Vec::new();
    let mut g0 = Vec::new();
    for (&v, &l) in values.iter().zip(labels) {
        match l {
            1 => g1.push(v),
            0 => g0.push(v),
            other => {
                return Err(Error::InvalidLabel {
                    value: other.to_string(),
                    message: "labels must be 0 or 1".into(),
                })
            }
        }
    }
    Ok((g1, g0))
}

/// Welch's unequal-variance t-test of class 1 against class 0, two-sided.
///
/// `t = (m1 - m0) / sqrt(s1^2/n1 + s0^2/n0)` with Welch-Satterthwaite
/// degrees of freedom. Two constant, equal groups return `(t=0, p=1)` by
/// convention; constant groups with different means return an infinite `t`
/// with `p = 0`.
pub fn welch_t_test(values: &[f64], labels: &[u8]) -> Result<WelchTest> {
    let (g1, g0) = split_classes(values, labels)?;
    for (grp, vals) in [("1", &g1), ("0", &g0)] {
        if vals.len() < 2 {
            return Err(Error::TooFewSamples {
                context: format!("welch t-test, class {grp}"),
                needed: 2,
                got: vals.len(),
            });
        }
    }
    let (n1, n0) = (g1.len() as f64, g0.len() as f64);
    let m1 = g1.iter().sum::<f64>() / n1;
    let m0 = g0.iter().sum::<f64>() / n0;
    let v1 = sample_variance(&g1)?;
    let v0 = sample_variance(&g0)?;
    let se2 = v1 / n1 + v0 / n0;
    if se2 == 0.0 {
        return Ok(if m1 == m0 {
            WelchTest {
                t_stat: 0.0,
                p_value: 1.0,
                df: n1 + n0 - 2.0,
            }
        } else {
            WelchTest {
                t_stat: f64::INFINITY.copysign(m1 - m0),
                p_value: 0.0,
                df: n1 + n0 - 2.0,
            }
        });
    }
    let t = (m1 - m0) / se2.sqrt();
    let df = se2 * se2
        / ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v0 / n0) * (v0 / n0) / (n0 - 1.0));
    let p = two_sided_t_p(t, df)?;
    Ok(WelchTest {
        t_stat: t,
        p_value: p,
        df,
    })
}

/// `log2(mean_1 / mean_0)` on raw values, or `None` when either class mean
/// is nonpositive and a ratio is meaningless.
pub fn log2_fold_change(values: &[f64], labels: &[u8]) -> Result<Option<f64>> {
    let (g1, g0) = split_classes(values, labels)?;
    if g1.is_empty() || g0.is_empty() {
        return Err(Error::SingleClass {
            context: "log2 fold change".into(),
        });
    }
    let m1 = g1.iter().sum::<f64>() / g1.len() as f64;
    let m0 = g0.iter().sum::<f64>() / g0.len() as f64;
    if m1 <= 0.0 || m0 <= 0.0 {
        return Ok(None);
    }
    Ok(Some((m1 / m0).log2()))
}

/// Benjamini-Hochberg step-up adjustment.
///
/// With p-values sorted ascending, `adjusted[i] = min over j >= i of
/// m * p[j] / (j+1)`, capped at 1; values are returned in input order and
/// tied p-values share the same adjusted value.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "p-values must lie in [0, 1], got {p}"
            )));
        }
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = (m as f64) * p_values[idx] / (rank as f64 + 1.0);
        running_min = running_min.min(candidate);
        adjusted[idx] = running_min;
    }
    Ok(adjusted)
}

/// Fits selection on `matrix` (training samples only) and returns the
/// reduced, z-scored matrix together with the full per-feature report and
/// the model to apply to held-out samples.
// Threshold comparisons are written negated so a NaN statistic fails the
// gate instead of slipping through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn select_features(
    matrix: &FeatureMatrix,
    labels: &[u8],
    thresholds: &Thresholds,
) -> Result<Selection> {
    thresholds.validate()?;
    let n = matrix.n_samples();
    if labels.len() != n {
        return Err(Error::DimMismatch {
            op: "select_features labels",
            left_rows: n,
            left_cols: matrix.n_features(),
            right_rows: 1,
            right_cols: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass {
            context: "select_features".into(),
        });
    }

    let n_feat = matrix.n_features();
    let mut reason: Vec<Option<Reason>> = vec![None; n_feat];

    // stage 1: variance floor; constant features can never be z-scored and
    // are diverted regardless of the flag
    let mut variances = Vec::with_capacity(n_feat);
    for (f, slot) in reason.iter_mut().enumerate() {
        let var = sample_variance(&matrix.values.column(f))?;
        variances.push(var);
        if thresholds.variance_filter && var < thresholds.min_variance {
            *slot = Some(Reason::LowVariance);
        } else if var == 0.0 {
            *slot = Some(Reason::ZeroVariance);
        }
    }

    // z-score parameters for every surviving feature
    let survivors: Vec<usize> = (0..n_feat).filter(|&f| reason[f].is_none()).collect();
    let mut means = vec![0.0; n_feat];
    let mut stds = vec![0.0; n_feat];
    for &f in &survivors {
        let col = matrix.values.column(f);
        means[f] = col.iter().sum::<f64>() / n as f64;
        stds[f] = variances[f].sqrt();
    }

    // per-feature statistics, computed in parallel into indexed slots
    let need_t = thresholds.t_test || thresholds.fdr;
    let stats: Vec<(Option<WelchTest>, Option<f64>)> = compute_slots(survivors.len(), |i| {
        let f = survivors[i];
        let raw = matrix.values.column(f);
        let welch = if need_t {
            let normalized: Vec<f64> = raw.iter().map(|v| (v - means[f]) / stds[f]).collect();
            Some(welch_t_test(&normalized, labels)?)
        } else {
            None
        };
        let fc = log2_fold_change(&raw, labels)?;
        Ok((welch, fc))
    })?;

    let mut t_stat = vec![None; n_feat];
    let mut p_value = vec![None; n_feat];
    let mut log2fc = vec![None; n_feat];
    for (i, &f) in survivors.iter().enumerate() {
        if let Some(w) = stats[i].0 {
            t_stat[f] = Some(w.t_stat);
            p_value[f] = Some(w.p_value);
        }
        log2fc[f] = stats[i].1;
    }

    // stage 2: Welch p-value cut
    if thresholds.t_test {
        for &f in &survivors {
            if reason[f].is_none() && !(p_value[f].unwrap() < thresholds.p_cut) {
                reason[f] = Some(Reason::HighPValue);
            }
        }
    }

    // stage 3: fold change on raw values; undefined ratios pass through
    if thresholds.fold_change {
        for &f in &survivors {
            if reason[f].is_none() {
                if let Some(fc) = log2fc[f] {
                    if fc.abs() < thresholds.abs_log2fc_min {
                        reason[f] = Some(Reason::LowFoldChange);
                    }
                }
            }
        }
    }

    // stage 4: FDR over the p-values of the features still standing; the
    // Benjamini-Hochberg m is the number of features entering this stage
    let mut p_adjusted = vec![None; n_feat];
    if thresholds.fdr {
        let entering: Vec<usize> = (0..n_feat).filter(|&f| reason[f].is_none()).collect();
        let ps: Vec<f64> = entering.iter().map(|&f| p_value[f].unwrap()).collect();
        let adj = bh_adjust(&ps)?;
        for (&f, &a) in entering.iter().zip(&adj) {
            p_adjusted[f] = Some(a);
            if a > thresholds.fdr_q {
                reason[f] = Some(Reason::AboveFdr);
            }
        }
    }

    let kept: Vec<usize> = (0..n_feat).filter(|&f| reason[f].is_none()).collect();
    if kept.is_empty() {
        return Err(Error::NoSurvivors {
            hint: format!(
                "thresholds were min_variance={}, p_cut={}, abs_log2fc_min={}, fdr_q={}; relax them or disable stages",
                thresholds.min_variance, thresholds.p_cut, thresholds.abs_log2fc_min, thresholds.fdr_q
            ),
        });
    }

    let features = (0..n_feat)
        .map(|f| FeatureRecord {
            name: matrix.feature_names[f].clone(),
            variance: variances[f],
            t_stat: t_stat[f],
            p_value: p_value[f],
            p_adjusted: p_adjusted[f],
            log2_fc: log2fc[f],
            kept: reason[f].is_none(),
            reason: reason[f].unwrap_or(Reason::Kept),
        })
        .collect();

    let model = SelectionModel {
        kept_indices: kept.clone(),
        feature_names: kept.iter().map(|&f| matrix.feature_names[f].clone()).collect(),
        means: kept.iter().map(|&f| means[f]).collect(),
        stds: kept.iter().map(|&f| stds[f]).collect(),
    };
    let reduced = model.apply(matrix)?;
    Ok(Selection {
        matrix: reduced,
        report: SelectionReport { features },
        model,
    })
}

/// Welch statistics for every column; the dispatch used by the benchmarks.
#[doc(hidden)]
pub fn welch_scan(matrix: &Matrix, labels: &[u8]) -> Result<Vec<WelchTest>> {
    compute_slots(matrix.cols(), |c| welch_t_test(&matrix.column(c), labels))
}

/// Sequential twin of [`welch_scan`], kept for benchmark comparison.
#[doc(hidden)]
pub fn welch_scan_seq(matrix: &Matrix, labels: &[u8]) -> Result<Vec<WelchTest>> {
    (0..matrix.cols())
        .map(|c| welch_t_test(&matrix.column(c), labels))
        .collect()
}

#[cfg(feature = "parallel")]
fn compute_slots<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn compute_slots<T>(n: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}
