//! Loading and aligning the input data: omics matrices from TSV, the label
//! file, and optional gene symbol lists.
//!
//! All matrices are normalized to samples-as-rows, features-as-columns at
//! load time regardless of the on-disk orientation. Missing cells (empty,
//! `NA`, `NaN`, case-insensitive) are imputed with the feature mean computed
//! over the available samples; features missing in more than 20% of samples
//! are dropped before imputation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fraction of missing values above which a feature is dropped.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    Expression,
    Methylation,
    CopyNumber,
    Other(String),
}

impl MatrixKind {
    /// Stable lowercase tag, also used in artifact file names.
    pub fn tag(&self) -> &str {
        match self {
            MatrixKind::Expression => "expression",
            MatrixKind::Methylation => "methylation",
            MatrixKind::CopyNumber => "copy-number",
            MatrixKind::Other(s) => s,
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<MatrixKind> {
        let kind = match s {
            "expression" => MatrixKind::Expression,
            "methylation" => MatrixKind::Methylation,
            "copy-number" | "cna" => MatrixKind::CopyNumber,
            other => {
                let ok = !other.is_empty()
                    && other
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
                if !ok {
                    return Err(Error::Config(format!(
                        "matrix kind `{other}` must be lowercase alphanumeric with `-` or `_`"
                    )));
                }
                MatrixKind::Other(other.to_string())
            }
        };
        Ok(kind)
    }
}

impl Serialize for MatrixKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for MatrixKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<MatrixKind, D::Error> {
        let s = String::deserialize(d)?;
        MatrixKind::from_str(&s).map_err(D::Error::custom)
    }
}

/// How a TSV file is laid out on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Header row holds feature names, first column holds sample ids.
    SamplesByFeatures,
    /// Header row holds sample ids, first column holds feature names.
    /// This is the usual layout for downloaded omics tables.
    FeaturesBySamples,
}

/// One omics matrix, samples as rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub kind: MatrixKind,
    pub sample_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub values: Matrix,
}

impl FeatureMatrix {
    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    /// Rows restricted to `indices`, in the given order.
    pub fn select_samples(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        Ok(FeatureMatrix {
            kind: self.kind.clone(),
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values: self.values.select_rows(indices)?,
        })
    }
}

/// Binary labels aligned with a sample id list. Label 1 is the positive
/// class named in `positive_class_name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub sample_ids: Vec<String>,
    pub labels: Vec<u8>,
    pub positive_class_name: String,
}

impl LabelVector {
    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negative_count(&self) -> usize {
        self.labels.len() - self.positive_count()
    }

    pub fn select(&self, indices: &[usize]) -> LabelVector {
        LabelVector {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            positive_class_name: self.positive_class_name.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneList {
    pub symbols: Vec<String>,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn split_tsv_line(line: &str) -> Vec<&str> {
    line.trim_end_matches(['\r', '\n']).split('\t').collect()
}

fn is_missing_token(tok: &str) -> bool {
    tok.is_empty() || tok.eq_ignore_ascii_case("na") || tok.eq_ignore_ascii_case("nan")
}

struct RawGrid {
    column_ids: Vec<String>,
    row_ids: Vec<String>,
    /// `None` marks a missing cell; row-major over (row_ids, column_ids).
    cells: Vec<Option<f64>>,
}

fn parse_grid(path: &Path, text: &str) -> Result<RawGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::EmptyInput {
        what: format!("{}", path.display()),
    })?;
    let header_fields = split_tsv_line(header);
    if header_fields.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "header must contain at least one id column and one data column".into(),
        });
    }
    let column_ids: Vec<String> = header_fields[1..].iter().map(|s| s.to_string()).collect();

    let mut row_ids = Vec::new();
    let mut cells = Vec::new();
    for (lineno, line) in lines {
        let fields = split_tsv_line(line);
        if fields.len() != column_ids.len() + 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!(
                    "expected {} columns, found {}",
                    column_ids.len() + 1,
                    fields.len()
                ),
            });
        }
        let row_id = fields[0].to_string();
        for (ci, tok) in fields[1..].iter().enumerate() {
            if is_missing_token(tok) {
                cells.push(None);
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!(
                    "non-numeric cell `{tok}` at row `{row_id}`, column `{}`",
                    column_ids[ci]
                ),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!(
                        "non-finite cell `{tok}` at row `{row_id}`, column `{}`",
                        column_ids[ci]
                    ),
                });
            }
            cells.push(Some(v));
        }
        row_ids.push(row_id);
    }
    if row_ids.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("{} (no data rows)", path.display()),
        });
    }
    Ok(RawGrid {
        column_ids,
        row_ids,
        cells,
    })
}

fn check_unique(what: &'static str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Duplicate {
                what,
                name: id.clone(),
            });
        }
    }
    Ok(())
}

/// Cell accessor by (sample index, feature index), after orientation fix-up.
type CellAt = Box<dyn Fn(usize, usize) -> Option<f64>>;

/// Loads one omics TSV and normalizes it to samples-as-rows.
pub fn load_matrix(path: &Path, kind: MatrixKind, orientation: Orientation) -> Result<FeatureMatrix> {
    let text = read_file(path)?;
    let grid = parse_grid(path, &text)?;

    let (sample_ids, feature_names, cell_at): (Vec<String>, Vec<String>, CellAt) = match orientation
    {
        Orientation::SamplesByFeatures => {
            let n_cols = grid.column_ids.len();
            let cells = grid.cells.clone();
            (
                grid.row_ids,
                grid.column_ids,
                Box::new(move |s, f| cells[s * n_cols + f]),
            )
        }
        Orientation::FeaturesBySamples => {
            let n_cols = grid.column_ids.len();
            let cells = grid.cells.clone();
            (
                grid.column_ids,
                grid.row_ids,
                Box::new(move |s, f| cells[f * n_cols + s]),
            )
        }
    };
    check_unique("sample id", &sample_ids)?;
    check_unique("feature name", &feature_names)?;

    let n = sample_ids.len();
    // drop features with too many holes, impute the rest with feature means
    let mut kept_names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (f, name) in feature_names.iter().enumerate() {
        let raw: Vec<Option<f64>> = (0..n).map(|s| cell_at(s, f)).collect();
        let missing = raw.iter().filter(|c| c.is_none()).count();
        if missing as f64 > MAX_MISSING_FRACTION * n as f64 {
            log::debug!(
                "dropping feature `{name}`: {missing}/{n} values missing"
            );
            continue;
        }
        let present: Vec<f64> = raw.iter().flatten().copied().collect();
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        kept_names.push(name.clone());
        columns.push(raw.into_iter().map(|c| c.unwrap_or(mean)).collect());
    }
    if kept_names.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("{} (every feature exceeded the missing-value limit)", path.display()),
        });
    }
    let values = Matrix::from_fn(n, kept_names.len(), |s, f| columns[f][s]);
    values.ensure_finite("load_matrix")?;
    Ok(FeatureMatrix {
        kind,
        sample_ids,
        feature_names: kept_names,
        values,
    })
}

/// Writes a matrix as samples-by-features TSV. `load_matrix` with
/// [`Orientation::SamplesByFeatures`] reads it back bit-identically, since
/// values are printed with shortest round-trip formatting.
pub fn write_matrix(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("sample_id");
    for name in &matrix.feature_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (s, id) in matrix.sample_ids.iter().enumerate() {
        out.push_str(id);
        for v in matrix.values.row(s) {
            out.push('\t');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads the two-column label file (`sample_id<TAB>label`, one header line).
///
/// The file must contain exactly two distinct label values. When
/// `positive_class` is given it names the value mapped to label 1; otherwise
/// the values must literally be `0` and `1`.
pub fn load_labels(path: &Path, positive_class: Option<&str>) -> Result<LabelVector> {
    let text = read_file(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    lines.next().ok_or_else(|| Error::EmptyInput {
        what: format!("{}", path.display()),
    })?;

    let mut sample_ids = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (lineno, line) in lines {
        let fields = split_tsv_line(line);
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 2 tab-separated columns, found {}", fields.len()),
            });
        }
        sample_ids.push(fields[0].to_string());
        raw_labels.push(fields[1].to_string());
    }
    if sample_ids.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("{} (no label rows)", path.display()),
        });
    }
    check_unique("sample id", &sample_ids)?;

    let mut distinct: Vec<&str> = Vec::new();
    for l in &raw_labels {
        if !distinct.contains(&l.as_str()) {
            distinct.push(l);
        }
    }
    if distinct.len() != 2 {
        return Err(Error::InvalidLabel {
            value: distinct.join(", "),
            message: format!("expected exactly 2 distinct label values, found {}", distinct.len()),
        });
    }
    let positive = match positive_class {
        Some(p) => {
            if !distinct.contains(&p) {
                return Err(Error::Config(format!(
                    "positive class `{p}` does not occur in {}; labels are {}",
                    path.display(),
                    distinct.join(", ")
                )));
            }
            p.to_string()
        }
        None => {
            let mut sorted = distinct.clone();
            sorted.sort_unstable();
            if sorted != ["0", "1"] {
                return Err(Error::Config(format!(
                    "labels in {} are `{}`; set positive_class to choose which maps to 1",
                    path.display(),
                    distinct.join("`, `")
                )));
            }
            "1".to_string()
        }
    };
    let labels = raw_labels
        .iter()
        .map(|l| u8::from(*l == positive))
        .collect();
    Ok(LabelVector {
        sample_ids,
        labels,
        positive_class_name: positive,
    })
}

/// Loads a gene list: one symbol per line, `#` lines are comments.
pub fn load_gene_list(path: &Path) -> Result<GeneList> {
    let text = read_file(path)?;
    let mut symbols = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !symbols.contains(&line.to_string()) {
            symbols.push(line.to_string());
        }
    }
    if symbols.is_empty() {
        return Err(Error::EmptyInput {
            what: format!("{} (gene list has no symbols)", path.display()),
        });
    }
    Ok(GeneList { symbols })
}

/// Restricts all matrices and the labels to the samples present everywhere.
///
/// The shared order is the label-file order filtered to the intersection, so
/// the result is independent of each matrix's own row order.
pub fn align_samples(
    matrices: &[FeatureMatrix],
    labels: &LabelVector,
) -> Result<(Vec<FeatureMatrix>, LabelVector)> {
    let mut common: Vec<&str> = Vec::new();
    'outer: for id in &labels.sample_ids {
        for m in matrices {
            if !m.sample_ids.iter().any(|s| s == id) {
                continue 'outer;
            }
        }
        common.push(id);
    }
    if common.is_empty() {
        return Err(Error::EmptyInput {
            what: "sample id intersection across matrices and labels".into(),
        });
    }

    let label_pos: HashMap<&str, usize> = labels
        .sample_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let label_idx: Vec<usize> = common.iter().map(|id| label_pos[id]).collect();
    let aligned_labels = labels.select(&label_idx);
    if aligned_labels.positive_count() == 0 || aligned_labels.negative_count() == 0 {
        return Err(Error::SingleClass {
            context: "aligned sample intersection".into(),
        });
    }

    let mut aligned = Vec::with_capacity(matrices.len());
    for m in matrices {
        let pos: HashMap<&str, usize> = m
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let idx: Vec<usize> = common.iter().map(|id| pos[id]).collect();
        aligned.push(m.select_samples(&idx)?);
    }
    Ok((aligned, aligned_labels))
}

/// Syntactic check for a plausible gene symbol: an uppercase letter followed
/// by uppercase letters, digits, or hyphens, with an optional trailing `@`.
pub fn is_hugo_symbol(name: &str) -> bool {
    let body = name.strip_suffix('@').unwrap_or(name);
    let mut chars = body.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '-')
}

/// Splits a matrix into features with well-formed symbols and the rejected
/// names. Order is preserved on both sides.
pub fn validate_gene_symbols(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<String>)> {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (i, name) in matrix.feature_names.iter().enumerate() {
        if is_hugo_symbol(name) {
            kept.push(i);
        } else {
            rejected.push(name.clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput {
            what: format!(
                "{} matrix after symbol validation (all {} names rejected)",
                matrix.kind,
                rejected.len()
            ),
        });
    }
    let out = FeatureMatrix {
        kind: matrix.kind.clone(),
        sample_ids: matrix.sample_ids.clone(),
        feature_names: kept.iter().map(|&i| matrix.feature_names[i].clone()).collect(),
        values: matrix.values.select_cols(&kept)?,
    };
    Ok((out, rejected))
}

/// Keeps only features named in the list, in list order. Symbols absent from
/// the matrix are skipped.
pub fn restrict_to_gene_list(matrix: &FeatureMatrix, genes: &GeneList) -> Result<FeatureMatrix> {
    let pos: HashMap<&str, usize> = matrix
        .feature_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let idx: Vec<usize> = genes
        .symbols
        .iter()
        .filter_map(|s| pos.get(s.as_str()).copied())
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyInput {
            what: format!(
                "intersection of the gene list with the {} matrix features",
                matrix.kind
            ),
        });
    }
    Ok(FeatureMatrix {
        kind: matrix.kind.clone(),
        sample_ids: matrix.sample_ids.clone(),
        feature_names: idx.iter().map(|&i| matrix.feature_names[i].clone()).collect(),
        values: matrix.values.select_cols(&idx)?,
    })
}
