//! JSON documents for matrices, maps, states, weights and gauge elements.
//!
//! Complex scalars are `[re, im]` pairs and matrices are nested rows.
//! [`to_canonical_json`] fixes field order and rounds floats to 12
//! significant digits, so saving a loaded canonical document is byte-stable.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bweight::PowersWeight;
use crate::cpmaps::MatrixMap;
use crate::gauge::{GaugeElement, State};
use crate::numcore::{CMatrix, Tolerance, C64};
use crate::qpos::build_lambda_schur;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("schema error at {pointer}: {message}")]
pub struct SchemaError {
    /// JSON-pointer-style location, `""` for the document root.
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    fn at(pointer: &str, message: impl Into<String>) -> Self {
        SchemaError { pointer: pointer.to_string(), message: message.into() }
    }
}

pub type Rows = Vec<Vec<C64>>;

/// Top-level document, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Document {
    Matrix(MatrixDoc),
    Map(MapDoc),
    State(OmegaDoc),
    Weight(WeightDoc),
    GaugeElement(GaugeElementDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub entries: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaDoc {
    pub omega: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeElementDoc {
    pub x: f64,
    #[serde(rename = "X")]
    pub big_x: Rows,
    pub omega: Rows,
}

/// Map payload, tagged by `"form"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum MapDoc {
    Schur(SchurForm),
    Choi(ChoiForm),
    RankOneState(OmegaDoc),
    LambdaSchur(LambdaForm),
    Identity(DimForm),
    Transpose(DimForm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchurForm {
    pub q: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiForm {
    pub n_in: usize,
    pub n_out: usize,
    pub choi: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaForm {
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimForm {
    pub n: usize,
}

/// Weight payload, tagged by `"family"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightDoc {
    Indicator(IndicatorForm),
    InvSqrt(Empty),
    Exponential(Empty),
    Grid(GridForm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorForm {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridForm {
    pub xs: Vec<f64>,
    pub fs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => s.push_str(&format!("/{index}")),
            Segment::Map { key } => s.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => s.push_str(&format!("/{variant}")),
            Segment::Unknown => s.push_str("/?"),
        }
    }
    s
}

fn payload<T: serde::de::DeserializeOwned>(v: Value, base: &str) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(v).map_err(|e| SchemaError {
        pointer: format!("{base}{}", pointer_of(e.path())),
        message: e.inner().to_string(),
    })
}

/// Removes and returns the string tag `key` from an object.
fn take_tag(v: &mut Value, key: &str) -> Result<String, SchemaError> {
    let Value::Object(map) = v else {
        return Err(SchemaError::at("", "expected a JSON object"));
    };
    match map.remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(SchemaError::at(&format!("/{key}"), "expected a string")),
        None => Err(SchemaError::at("", format!("missing field `{key}`"))),
    }
}

fn unknown(key: &str, found: &str, expected: &[&str]) -> SchemaError {
    SchemaError::at(&format!("/{key}"), format!("unknown {key} `{found}`, expected one of {}", expected.join(", ")))
}

pub fn parse_document(text: &str) -> Result<Document, SchemaError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| SchemaError::at("", e.to_string()))?;
    let kind = take_tag(&mut v, "kind")?;
    Ok(match kind.as_str() {
        "matrix" => Document::Matrix(payload(v, "")?),
        "state" => Document::State(payload(v, "")?),
        "gauge_element" => Document::GaugeElement(payload(v, "")?),
        "map" => {
            let form = take_tag(&mut v, "form")?;
            Document::Map(match form.as_str() {
                "schur" => MapDoc::Schur(payload(v, "")?),
                "choi" => MapDoc::Choi(payload(v, "")?),
                "rank_one_state" => MapDoc::RankOneState(payload(v, "")?),
                "lambda_schur" => MapDoc::LambdaSchur(payload(v, "")?),
                "identity" => MapDoc::Identity(payload(v, "")?),
                "transpose" => MapDoc::Transpose(payload(v, "")?),
                other => {
                    return Err(unknown(
                        "form",
                        other,
                        &["schur", "choi", "rank_one_state", "lambda_schur", "identity", "transpose"],
                    ))
                }
            })
        }
        "weight" => {
            let family = take_tag(&mut v, "family")?;
            Document::Weight(match family.as_str() {
                "indicator" => WeightDoc::Indicator(payload(v, "")?),
                "inv_sqrt" => WeightDoc::InvSqrt(payload(v, "")?),
                "exponential" => WeightDoc::Exponential(payload(v, "")?),
                "grid" => WeightDoc::Grid(payload(v, "")?),
                other => return Err(unknown("family", other, &["indicator", "inv_sqrt", "exponential", "grid"])),
            })
        }
        other => return Err(unknown("kind", other, &["matrix", "map", "state", "weight", "gauge_element"])),
    })
}

pub fn load_document(path: &std::path::Path) -> Result<Document, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|e| SchemaError::at("", format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text)
}

pub fn rows_to_matrix(rows: &Rows, pointer: &str) -> Result<CMatrix, SchemaError> {
    CMatrix::from_rows(rows.clone()).map_err(|e| SchemaError::at(pointer, e.to_string()))
}

pub fn matrix_to_rows(m: &CMatrix) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Matrix(_) => "matrix",
            Document::Map(_) => "map",
            Document::State(_) => "state",
            Document::Weight(_) => "weight",
            Document::GaugeElement(_) => "gauge_element",
        }
    }

    fn expect(&self, kind: &str) -> Result<(), SchemaError> {
        if self.kind() != kind {
            return Err(SchemaError::at("/kind", format!("expected \"{kind}\", found \"{}\"", self.kind())));
        }
        Ok(())
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        Document::Matrix(MatrixDoc { rows: m.rows(), cols: m.cols(), entries: matrix_to_rows(m) })
    }

    /// Maps are saved in Choi form.
    pub fn from_map(phi: &MatrixMap) -> Self {
        Document::Map(MapDoc::Choi(ChoiForm { n_in: phi.n_in(), n_out: phi.n_out(), choi: matrix_to_rows(phi.choi()) }))
    }

    pub fn from_state(s: &State) -> Self {
        Document::State(OmegaDoc { omega: matrix_to_rows(s.omega()) })
    }

    pub fn from_gauge_element(g: &GaugeElement) -> Self {
        Document::GaugeElement(GaugeElementDoc { x: g.x(), big_x: matrix_to_rows(g.unitary()), omega: matrix_to_rows(g.omega()) })
    }

    pub fn from_weight(w: &PowersWeight) -> Self {
        Document::Weight(match w {
            &PowersWeight::Indicator { a, b } => WeightDoc::Indicator(IndicatorForm { a, b }),
            PowersWeight::InvSqrt => WeightDoc::InvSqrt(Empty {}),
            PowersWeight::Exponential => WeightDoc::Exponential(Empty {}),
            PowersWeight::Grid(p) => WeightDoc::Grid(GridForm { xs: p.xs().to_vec(), fs: p.ys().iter().map(|z| z.re).collect() }),
        })
    }

    pub fn to_matrix(&self) -> Result<CMatrix, SchemaError> {
        self.expect("matrix")?;
        let Document::Matrix(MatrixDoc { rows, cols, entries }) = self else { unreachable!() };
        if entries.len() != *rows {
            return Err(SchemaError::at("/entries", format!("expected {rows} rows, found {}", entries.len())));
        }
        if let Some(i) = entries.iter().position(|r| r.len() != *cols) {
            return Err(SchemaError::at(&format!("/entries/{i}"), format!("expected {cols} columns, found {}", entries[i].len())));
        }
        rows_to_matrix(entries, "/entries")
    }

    pub fn to_map(&self, tol: &Tolerance) -> Result<MatrixMap, SchemaError> {
        self.expect("map")?;
        let Document::Map(m) = self else { unreachable!() };
        let bad = |p: &str, e: &dyn std::fmt::Display| SchemaError::at(p, e.to_string());
        match m {
            MapDoc::Schur(SchurForm { q }) => {
                let q = rows_to_matrix(q, "/q")?;
                if !q.is_square() {
                    return Err(SchemaError::at("/q", "Schur coefficients must be square"));
                }
                Ok(MatrixMap::schur(&q))
            }
            MapDoc::Choi(ChoiForm { n_in, n_out, choi }) => {
                MatrixMap::from_choi(*n_in, *n_out, rows_to_matrix(choi, "/choi")?).map_err(|e| bad("/choi", &e))
            }
            MapDoc::RankOneState(OmegaDoc { omega }) => {
                let s = State::new(rows_to_matrix(omega, "/omega")?, tol).map_err(|e| bad("/omega", &e))?;
                Ok(s.rank_one_map())
            }
            MapDoc::LambdaSchur(LambdaForm { lambda }) => build_lambda_schur(lambda, tol).map_err(|e| bad("/lambda", &e)),
            MapDoc::Identity(DimForm { n }) => Ok(MatrixMap::identity(*n)),
            MapDoc::Transpose(DimForm { n }) => Ok(MatrixMap::transpose_map(*n)),
        }
    }

    pub fn to_state(&self, tol: &Tolerance) -> Result<State, SchemaError> {
        self.expect("state")?;
        let Document::State(OmegaDoc { omega }) = self else { unreachable!() };
        State::new(rows_to_matrix(omega, "/omega")?, tol).map_err(|e| SchemaError::at("/omega", e.to_string()))
    }

    pub fn to_weight(&self) -> Result<PowersWeight, SchemaError> {
        self.expect("weight")?;
        let Document::Weight(w) = self else { unreachable!() };
        let bad = |e: crate::bweight::WeightError| SchemaError::at("", e.to_string());
        match w {
            WeightDoc::Indicator(IndicatorForm { a, b }) => PowersWeight::indicator(*a, *b).map_err(bad),
            WeightDoc::InvSqrt(_) => Ok(PowersWeight::InvSqrt),
            WeightDoc::Exponential(_) => Ok(PowersWeight::Exponential),
            WeightDoc::Grid(GridForm { xs, fs }) => PowersWeight::grid(xs.clone(), fs.clone()).map_err(bad),
        }
    }

    /// Gauge element with the state it lives over.
    pub fn to_gauge_element(&self, tol: &Tolerance) -> Result<(State, GaugeElement), SchemaError> {
        self.expect("gauge_element")?;
        let Document::GaugeElement(GaugeElementDoc { x, big_x, omega }) = self else { unreachable!() };
        let s = State::new(rows_to_matrix(omega, "/omega")?, tol).map_err(|e| SchemaError::at("/omega", e.to_string()))?;
        let g = GaugeElement::new(&s, *x, rows_to_matrix(big_x, "/X")?, tol).map_err(|e| SchemaError::at("/X", e.to_string()))?;
        Ok((s, g))
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(_), _, _) | (_, Some(_), _) => Value::Number(n),
            (_, _, Some(f)) => serde_json::Number::from_f64(round12(f)).map_or(Value::Null, Value::Number),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Serializes with declaration-order fields, floats rounded to 12 significant
/// digits and non-finite floats as `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    serde_json::to_string_pretty(&canonicalize(v)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::c64;

    #[test]
    fn matrix_example() {
        let text = r#"{"kind":"matrix","rows":2,"cols":2,"entries":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#;
        let d = parse_document(text).unwrap();
        assert_eq!(d.to_matrix().unwrap(), CMatrix::identity(2));
    }

    #[test]
    fn map_and_weight_forms() {
        let t = Tolerance::default();
        let q = r#"{"kind":"map","form":"schur","q":[[[1,0],[0.5,0]],[[0.5,0],[1,0]]]}"#;
        assert!(parse_document(q).unwrap().to_map(&t).unwrap().schur_coefficients(&t).is_ok());
        let c = r#"{"kind":"map","form":"choi","n_in":1,"n_out":1,"choi":[[[2,0]]]}"#;
        assert_eq!(parse_document(c).unwrap().to_map(&t).unwrap().choi()[(0, 0)], c64(2.0, 0.0));
        let r = r#"{"kind":"map","form":"rank_one_state","omega":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#;
        assert!(parse_document(r).unwrap().to_map(&t).unwrap().is_unital(&t));
        let w = r#"{"kind":"weight","family":"indicator","a":0,"b":1}"#;
        assert_eq!(parse_document(w).unwrap().to_weight().unwrap(), PowersWeight::Indicator { a: 0.0, b: 1.0 });
        let g = r#"{"kind":"weight","family":"grid","xs":[0,1,2],"fs":[1,1,0]}"#;
        assert!(matches!(parse_document(g).unwrap().to_weight().unwrap(), PowersWeight::Grid(_)));
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let e = parse_document(r#"{"kind":"matrix","rows":1,"cols":1,"entries":[[[1,"x"]]]}"#).unwrap_err();
        assert_eq!(e.pointer, "/entries/0/0/1");
        let e = parse_document(r#"{"kind":"bogus"}"#).unwrap_err();
        assert_eq!(e.pointer, "/kind");
        let e = parse_document(r#"{"kind":"weight","family":"indicator","a":0,"c":1}"#).unwrap_err();
        assert!(e.message.contains("`c`"), "{}", e.message);
        let d = parse_document(r#"{"kind":"matrix","rows":1,"cols":2,"entries":[[[1,0]]]}"#).unwrap();
        assert_eq!(d.to_matrix().unwrap_err().pointer, "/entries/0");
        let d = parse_document(r#"{"kind":"state","omega":[[[0.6,0],[0,0]],[[0,0],[0.6,0]]]}"#).unwrap();
        assert_eq!(d.to_state(&Tolerance::default()).unwrap_err().pointer, "/omega");
    }

    #[test]
    fn canonical_round_trip_is_byte_stable() {
        let m = CMatrix::from_fn(2, 2, |i, j| c64(1.0 / (1 + i + j) as f64, (i as f64 - j as f64) / 3.0));
        let first = to_canonical_json(&Document::from_matrix(&m));
        let again = to_canonical_json(&parse_document(&first).unwrap());
        assert_eq!(first, again);
        assert!(first.find("\"kind\"").unwrap() < first.find("\"rows\"").unwrap());
    }
}
