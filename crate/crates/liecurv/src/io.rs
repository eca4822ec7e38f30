//! Document formats: the JSON algebra description consumed by the CLI and
//! the report structures it emits.
//!
//! Documents use 1-based basis indices and sparse brackets (only `i < j`
//! records), so files stay hand-writable. Floats are emitted in shortest
//! round-trip decimal form; loading what was saved reproduces every value
//! bit for bit.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::quad_form::{InvariantForm, Metric};

/// One bracket record: `[e_i, e_j] += c·e_k`, indices 1-based, `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRecord {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: f64,
}

/// The on-disk algebra description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    pub dim: usize,
    #[serde(default)]
    pub brackets: Vec<BracketRecord>,
    /// Invariant form, row-major. Optional; required by frame and
    /// curvature commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Vec<Vec<f64>>>,
    /// Metric, row-major. Optional; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl AlgebraDocument {
    /// Parses and structurally validates a document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AlgebraDocument =
            serde_json::from_str(text).map_err(|e| Error::document("E_PARSE", e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    /// Serializes the document. Never fails: validation guarantees every
    /// float is finite.
    pub fn to_json(&self, pretty: bool) -> String {
        if pretty {
            serde_json::to_string_pretty(self).expect("document is serializable")
        } else {
            serde_json::to_string(self).expect("document is serializable")
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::document("E_BAD_DIM", "dim must be at least 1"));
        }
        for (r, rec) in self.brackets.iter().enumerate() {
            for (name, idx) in [("i", rec.i), ("j", rec.j), ("k", rec.k)] {
                if idx == 0 || idx > self.dim {
                    return Err(Error::document(
                        "E_INDEX_RANGE",
                        format!("brackets[{r}].{name} = {idx} outside 1..={}", self.dim),
                    ));
                }
            }
            if rec.i == rec.j {
                return Err(Error::document(
                    "E_DIAG_BRACKET",
                    format!("brackets[{r}] has i = j = {}; [x, x] = 0", rec.i),
                ));
            }
            if rec.i > rec.j {
                return Err(Error::document(
                    "E_BRACKET_ORDER",
                    format!(
                        "brackets[{r}] has i = {} > j = {}; store the i < j record",
                        rec.i, rec.j
                    ),
                ));
            }
            if !rec.c.is_finite() {
                return Err(Error::document(
                    "E_PARSE",
                    format!("brackets[{r}].c is not finite"),
                ));
            }
        }
        if let Some(rows) = &self.form {
            check_matrix("form", rows, self.dim)?;
        }
        if let Some(rows) = &self.metric {
            check_matrix("metric", rows, self.dim)?;
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.dim {
                return Err(Error::document(
                    "E_BAD_DIM",
                    format!("labels has {} entries, expected {}", labels.len(), self.dim),
                ));
            }
        }
        Ok(())
    }

    /// Builds the Lie algebra (0-based internally).
    pub fn algebra(&self) -> Result<LieAlgebra> {
        let records: Vec<(usize, usize, usize, f64)> = self
            .brackets
            .iter()
            .map(|r| (r.i - 1, r.j - 1, r.k - 1, r.c))
            .collect();
        let alg = LieAlgebra::from_brackets(self.dim, &records)?;
        match &self.labels {
            Some(labels) => alg.with_labels(labels.clone()),
            None => Ok(alg),
        }
    }

    pub fn form(&self) -> Result<Option<InvariantForm>> {
        self.form
            .as_ref()
            .map(|rows| InvariantForm::new(rows_to_matrix(rows)))
            .transpose()
    }

    pub fn metric(&self) -> Result<Option<Metric>> {
        self.metric
            .as_ref()
            .map(|rows| {
                Metric::new(rows_to_matrix(rows)).map_err(|e| match e {
                    Error::NotPositiveDefinite => {
                        Error::document("E_NOT_SPD", "metric is not positive definite")
                    }
                    other => other,
                })
            })
            .transpose()
    }
}

fn check_matrix(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    if rows.len() != dim {
        return Err(Error::document(
            "E_BAD_DIM",
            format!("{name} has {} rows, expected {dim}", rows.len()),
        ));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::document(
                "E_BAD_DIM",
                format!("{name}[{r}] has {} entries, expected {dim}", row.len()),
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::document(
                    "E_PARSE",
                    format!("{name}[{r}][{c}] is not finite"),
                ));
            }
        }
    }
    for (r, row) in rows.iter().enumerate() {
        for (c, other) in rows.iter().enumerate().skip(r + 1) {
            if row[c] != other[r] {
                return Err(Error::document(
                    "E_ASYMMETRIC",
                    format!(
                        "{name}[{r}][{c}] = {} but {name}[{c}][{r}] = {}",
                        row[c], other[r]
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |r, c| rows[r][c])
}

/// Row-major nested-list view of a matrix, for serialization.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// Reads a document from a file, `-` meaning standard input.
pub fn load_document(path: &Path) -> Result<AlgebraDocument> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
            .map_err(|e| Error::document("E_IO", format!("reading standard input: {e}")))?
    } else {
        fs::read_to_string(path)
            .map_err(|e| Error::document("E_IO", format!("reading {}: {e}", path.display())))?
    };
    AlgebraDocument::from_json(&text)
}

pub fn save_document(path: &Path, doc: &AlgebraDocument, pretty: bool) -> Result<()> {
    let mut text = doc.to_json(pretty);
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Error::document("E_IO", format!("writing {}: {e}", path.display())))
}

/// Loads the validated triple a command works from.
pub fn load_algebra(
    doc: &AlgebraDocument,
) -> Result<(LieAlgebra, Option<InvariantForm>, Option<Metric>)> {
    Ok((doc.algebra()?, doc.form()?, doc.metric()?))
}

/// Serialization for effective dimensions: finite values as numbers, the
/// infinite case as the string `"inf"`.
pub mod m_value {
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if m.is_infinite() && *m > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*m)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Text(s) => Err(D::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Axiom-check results for one algebra (and its form, when present).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationSection {
    pub jacobi_max_violation: f64,
    pub jacobi_pass: bool,
    pub max_ad_trace: f64,
    pub unimodular: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_ad_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_ad_invariant: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_nondegenerate: Option<bool>,
    pub pass: bool,
}

/// The adapted frame: `basis` is row-major, columns are the frame vectors
/// in document coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameSection {
    pub lambda: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub max_defect: f64,
}

/// Ricci tensors in frame coordinates, by computation route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RicciSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<Vec<f64>>>,
    /// Largest relative pairwise deviation between the routes computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pairwise_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement_pass: Option<bool>,
    pub scalar_curvature: f64,
}

/// One verified witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSection {
    /// Drift coefficients in frame coordinates.
    pub x_frame: Vec<f64>,
    /// The same drift in document coordinates.
    pub x_original: Vec<f64>,
    pub lambda_const: f64,
    #[serde(with = "m_value")]
    pub m: f64,
    pub residual: f64,
    pub killing_defect: f64,
    pub killing_pass: bool,
    /// Squared metric scales in the search basis, for solver-produced
    /// witnesses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub solve_tol: f64,
    pub dedup_tol: f64,
    pub killing_tol: f64,
    pub ricci_agreement_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub tolerances: Tolerances,
}

/// Everything the `report` command knows about one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub input: AlgebraDocument,
    pub validation: ValidationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ricci: Option<RicciSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessSection>,
    pub provenance: Provenance,
}
