//! Lab description files.
//!
//! A lab file is a JSON document:
//!
//! ```json
//! {
//!   "dim": 4,
//!   "state": { "ket": [[0.7071067811865476, 0], [0, 0], [0, 0], [0.7071067811865476, 0]] },
//!   "factorizations": { "pair": [2, 2] },
//!   "bases": {
//!     "computational": { "factorization": "pair" },
//!     "hadamard": { "factorization": "pair", "unitaries": [H, H] }
//!   },
//!   "context_families": { "name": { "vectors": [...], "contexts": [[1, 2, 3, 4], ...] } },
//!   "embeddings": { "name": { "isometry": [...], "small_dim": 2 } }
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.
//! Context members are 1-based vector positions. A basis without
//! `unitaries` is the computational basis of its factorization. Family
//! vectors are normalized on load.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::arrangement::{DetectorBasis, Embedding, Factorization, QuantumLab, DEFAULT_MAX_DIM};
use crate::contextuality::{validate_context_family, ContextFamily};
use crate::error::Error;
use crate::isa::IntensiveState;
use crate::tensor::{ComplexMatrix, UnitVector, PREDICATE_TOL};

/// One problem found while reading or validating a lab file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Location in the document, e.g. `$.bases.hadamard.unitaries[1]`.
    pub path: String,
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            kind: kind.into(),
            message: message.into(),
        }
    }

    fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(path, "Parse", message)
    }

    fn from_error(path: &str, e: &Error) -> Self {
        Self::new(path, e.kind(), e.to_string())
    }

    /// Single-line JSON rendering.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain strings serialize")
    }
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}: {}", .0.path, .0.message)]
    Parse(Diagnostic),
    #[error("lab file has {} invalid object(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("UnknownBasis: no basis named {0:?}")]
    UnknownBasis(String),
    #[error("UnknownFamily: no context family named {0:?}")]
    UnknownFamily(String),
    #[error("UnknownEmbedding: no embedding named {0:?}")]
    UnknownEmbedding(String),
    #[error("UnresolvablePowerSpec: {0}")]
    UnresolvablePowerSpec(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
}

impl LabError {
    /// 1 for domain failures, 2 for usage, parse and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Invalid(_) | LabError::Domain(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Ket(Vec<Complex64>),
    Density(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    pub factorization: String,
    pub unitaries: Option<Vec<Vec<Vec<Complex64>>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub vectors: Vec<Vec<Complex64>>,
    /// 1-based.
    pub contexts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    pub isometry: Vec<Vec<Complex64>>,
    pub small_dim: usize,
}

/// The document as written, before any validation beyond its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LabFile {
    pub dim: usize,
    pub state: StateSpec,
    pub factorizations: Vec<(String, Vec<usize>)>,
    pub bases: Vec<(String, BasisSpec)>,
    pub context_families: Vec<(String, FamilySpec)>,
    pub embeddings: Vec<(String, EmbeddingSpec)>,
}

type Parsed<T> = std::result::Result<T, Diagnostic>;

fn object<'a>(v: &'a Value, path: &str) -> Parsed<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Diagnostic::parse(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str) -> Parsed<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Diagnostic::parse(path, "expected an array"))
}

fn uint(v: &Value, path: &str) -> Parsed<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Diagnostic::parse(path, "expected a non-negative integer"))
}

fn real(v: &Value, path: &str) -> Parsed<f64> {
    v.as_f64()
        .ok_or_else(|| Diagnostic::parse(path, "expected a number"))
}

fn complex(v: &Value, path: &str) -> Parsed<Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(
            real(re, &format!("{path}[0]"))?,
            real(im, &format!("{path}[1]"))?,
        )),
        _ => Err(Diagnostic::parse(
            path,
            "expected a complex number [re, im]",
        )),
    }
}

fn list<T>(v: &Value, path: &str, item: impl Fn(&Value, &str) -> Parsed<T>) -> Parsed<Vec<T>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| item(x, &format!("{path}[{i}]")))
        .collect()
}

fn complex_vector(v: &Value, path: &str) -> Parsed<Vec<Complex64>> {
    list(v, path, complex)
}

fn complex_matrix(v: &Value, path: &str) -> Parsed<Vec<Vec<Complex64>>> {
    let rows = list(v, path, complex_vector)?;
    if let Some(first) = rows.first() {
        if let Some(i) = rows.iter().position(|r| r.len() != first.len()) {
            return Err(Diagnostic::parse(
                format!("{path}[{i}]"),
                format!(
                    "row has {} entries, row 0 has {}",
                    rows[i].len(),
                    first.len()
                ),
            ));
        }
    }
    Ok(rows)
}

fn check_keys(
    map: &Map<String, Value>,
    path: &str,
    allowed: &[&str],
    required: &[&str],
) -> Parsed<()> {
    if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Diagnostic::parse(
            format!("{path}.{key}"),
            format!("unknown field, expected one of {}", allowed.join(", ")),
        ));
    }
    if let Some(key) = required.iter().find(|k| !map.contains_key(**k)) {
        return Err(Diagnostic::parse(path, format!("missing field {key:?}")));
    }
    Ok(())
}

fn named<T>(
    root: &Map<String, Value>,
    key: &str,
    item: impl Fn(&Value, &str) -> Parsed<T>,
) -> Parsed<Vec<(String, T)>> {
    let Some(section) = root.get(key) else {
        return Ok(Vec::new());
    };
    let path = format!("$.{key}");
    object(section, &path)?
        .iter()
        .map(|(name, v)| Ok((name.clone(), item(v, &format!("{path}.{name}"))?)))
        .collect()
}

impl LabFile {
    pub fn parse(text: &str) -> Parsed<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| Diagnostic::parse("$", e.to_string()))?;
        let root = object(&root, "$")?;
        check_keys(
            root,
            "$",
            &[
                "dim",
                "state",
                "factorizations",
                "bases",
                "context_families",
                "embeddings",
            ],
            &["dim", "state"],
        )?;
        let dim = uint(&root["dim"], "$.dim")?;

        let state = object(&root["state"], "$.state")?;
        let state = match (state.get("ket"), state.get("density")) {
            (Some(ket), None) if state.len() == 1 => {
                StateSpec::Ket(complex_vector(ket, "$.state.ket")?)
            }
            (None, Some(rho)) if state.len() == 1 => {
                StateSpec::Density(complex_matrix(rho, "$.state.density")?)
            }
            _ => {
                return Err(Diagnostic::parse(
                    "$.state",
                    "expected exactly one of \"ket\" or \"density\"",
                ))
            }
        };

        let factorizations = named(root, "factorizations", |v, p| list(v, p, uint))?;
        let bases = named(root, "bases", |v, p| {
            let m = object(v, p)?;
            check_keys(m, p, &["factorization", "unitaries"], &["factorization"])?;
            let factorization = m["factorization"]
                .as_str()
                .ok_or_else(|| Diagnostic::parse(format!("{p}.factorization"), "expected a name"))?
                .to_owned();
            let unitaries = m
                .get("unitaries")
                .map(|u| list(u, &format!("{p}.unitaries"), complex_matrix))
                .transpose()?;
            Ok(BasisSpec {
                factorization,
                unitaries,
            })
        })?;
        let context_families = named(root, "context_families", |v, p| {
            let m = object(v, p)?;
            check_keys(m, p, &["vectors", "contexts"], &["vectors", "contexts"])?;
            Ok(FamilySpec {
                vectors: list(&m["vectors"], &format!("{p}.vectors"), complex_vector)?,
                contexts: list(&m["contexts"], &format!("{p}.contexts"), |c, cp| {
                    list(c, cp, uint)
                })?,
            })
        })?;
        let embeddings = named(root, "embeddings", |v, p| {
            let m = object(v, p)?;
            check_keys(m, p, &["isometry", "small_dim"], &["isometry", "small_dim"])?;
            Ok(EmbeddingSpec {
                isometry: complex_matrix(&m["isometry"], &format!("{p}.isometry"))?,
                small_dim: uint(&m["small_dim"], &format!("{p}.small_dim"))?,
            })
        })?;

        Ok(Self {
            dim,
            state,
            factorizations,
            bases,
            context_families,
            embeddings,
        })
    }

    pub fn read(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(LabError::Parse)
    }

    pub fn to_value(&self) -> Value {
        fn c(z: &Complex64) -> Value {
            Value::from(vec![z.re, z.im])
        }
        fn vector(v: &[Complex64]) -> Value {
            Value::Array(v.iter().map(c).collect())
        }
        fn matrix(m: &[Vec<Complex64>]) -> Value {
            Value::Array(m.iter().map(|r| vector(r)).collect())
        }
        fn section<T>(items: &[(String, T)], f: impl Fn(&T) -> Value) -> Value {
            Value::Object(items.iter().map(|(k, v)| (k.clone(), f(v))).collect())
        }

        let mut root = Map::new();
        root.insert("dim".into(), Value::from(self.dim));
        let mut state = Map::new();
        match &self.state {
            StateSpec::Ket(v) => state.insert("ket".into(), vector(v)),
            StateSpec::Density(m) => state.insert("density".into(), matrix(m)),
        };
        root.insert("state".into(), Value::Object(state));
        if !self.factorizations.is_empty() {
            root.insert(
                "factorizations".into(),
                section(&self.factorizations, |dims| Value::from(dims.clone())),
            );
        }
        if !self.bases.is_empty() {
            root.insert(
                "bases".into(),
                section(&self.bases, |b| {
                    let mut m = Map::new();
                    m.insert("factorization".into(), Value::from(b.factorization.clone()));
                    if let Some(us) = &b.unitaries {
                        m.insert(
                            "unitaries".into(),
                            Value::Array(us.iter().map(|u| matrix(u)).collect()),
                        );
                    }
                    Value::Object(m)
                }),
            );
        }
        if !self.context_families.is_empty() {
            root.insert(
                "context_families".into(),
                section(&self.context_families, |f| {
                    let mut m = Map::new();
                    m.insert("vectors".into(), matrix(&f.vectors));
                    m.insert("contexts".into(), Value::from(f.contexts.clone()));
                    Value::Object(m)
                }),
            );
        }
        if !self.embeddings.is_empty() {
            root.insert(
                "embeddings".into(),
                section(&self.embeddings, |e| {
                    let mut m = Map::new();
                    m.insert("isometry".into(), matrix(&e.isometry));
                    m.insert("small_dim".into(), Value::from(e.small_dim));
                    Value::Object(m)
                }),
            );
        }
        Value::Object(root)
    }

    /// Canonical text: two-space indentation, arrays of scalars (or of
    /// arrays of scalars) on one line, every float with 17 significant
    /// digits so that parsing it back is bit-exact.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        write_canonical(&mut out, &self.to_value(), 0);
        out.push('\n');
        out
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| match x {
            Value::Array(inner) => inner.iter().all(|y| !y.is_array() && !y.is_object()),
            Value::Object(_) => false,
            _ => true,
        }),
        Value::Object(_) => false,
        _ => true,
    }
}

fn write_canonical(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) => match n.as_u64() {
            Some(u) if !n.is_f64() => write!(out, "{u}").unwrap(),
            _ => {
                let x = n.as_f64().expect("finite number");
                write!(out, "{x:.16e}").unwrap()
            }
        },
        Value::Array(items) if is_flat(v) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_canonical(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(out, x, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::from(k.as_str()).to_string());
                out.push_str(": ");
                write_canonical(out, x, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Tolerance and dimension cap applied while validating a lab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabConfig {
    pub tol: f64,
    pub max_dim: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            tol: PREDICATE_TOL,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// A validated lab: the state and every named object, ready for use.
#[derive(Debug, Clone)]
pub struct Lab {
    isa: IntensiveState,
    factorizations: Vec<(String, Factorization)>,
    bases: Vec<(String, DetectorBasis)>,
    families: Vec<(String, ContextFamily)>,
    embeddings: Vec<(String, Embedding)>,
}

fn to_matrix(rows: &[Vec<Complex64>]) -> Result<ComplexMatrix, Error> {
    ComplexMatrix::from_rows(rows)
}

fn find<'a, T>(items: &'a [(String, T)], name: &str) -> Option<&'a T> {
    items.iter().find(|(n, _)| n == name).map(|(_, v)| v)
}

impl Lab {
    /// Validates every object, collecting all problems.
    pub fn from_file(file: &LabFile, cfg: &LabConfig) -> Result<Self, Vec<Diagnostic>> {
        let mut diags = Vec::new();

        if file.dim > cfg.max_dim {
            let e = Error::DimensionTooLarge {
                dim: file.dim,
                max: cfg.max_dim,
            };
            return Err(vec![Diagnostic::from_error("$.dim", &e)]);
        }
        let isa = match &file.state {
            StateSpec::Ket(v) => UnitVector::new(v.clone()).map(|x| IntensiveState::pure(&x)),
            StateSpec::Density(m) => {
                to_matrix(m).and_then(|m| IntensiveState::with_tolerance(m, cfg.tol))
            }
        };
        let path = match file.state {
            StateSpec::Ket(_) => "$.state.ket",
            StateSpec::Density(_) => "$.state.density",
        };
        let isa = match isa {
            Ok(isa) if isa.dim() == file.dim => Some(isa),
            Ok(isa) => {
                let e = Error::DimensionMismatch {
                    expected: file.dim,
                    found: isa.dim(),
                };
                diags.push(Diagnostic::from_error(path, &e));
                None
            }
            Err(e) => {
                diags.push(Diagnostic::from_error(path, &e));
                None
            }
        };

        let mut factorizations = Vec::new();
        for (name, dims) in &file.factorizations {
            match Factorization::with_max_dim(dims.clone(), cfg.max_dim) {
                Ok(f) => factorizations.push((name.clone(), f)),
                Err(e) => diags.push(Diagnostic::from_error(
                    &format!("$.factorizations.{name}"),
                    &e,
                )),
            }
        }

        let mut bases = Vec::new();
        for (name, spec) in &file.bases {
            let path = format!("$.bases.{name}");
            let Some(f) = find(&factorizations, &spec.factorization) else {
                diags.push(Diagnostic::new(
                    format!("{path}.factorization"),
                    "UnknownFactorization",
                    format!("no valid factorization named {:?}", spec.factorization),
                ));
                continue;
            };
            let basis = match &spec.unitaries {
                None => Ok(DetectorBasis::computational(f.clone())),
                Some(us) => us
                    .iter()
                    .map(|u| to_matrix(u))
                    .collect::<Result<Vec<_>, _>>()
                    .and_then(|us| DetectorBasis::new(f.clone(), us)),
            };
            match basis {
                Ok(b) if b.total_dim() > file.dim => {
                    let e = Error::ArrangementTooLarge {
                        arrangement: b.total_dim(),
                        lab: file.dim,
                    };
                    diags.push(Diagnostic::from_error(&path, &e));
                }
                Ok(b) => bases.push((name.clone(), b)),
                Err(e) => diags.push(Diagnostic::from_error(&path, &e)),
            }
        }

        let mut families = Vec::new();
        for (name, spec) in &file.context_families {
            let path = format!("$.context_families.{name}");
            let vectors = spec
                .vectors
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    UnitVector::normalized(v.clone())
                        .map_err(|e| Diagnostic::from_error(&format!("{path}.vectors[{i}]"), &e))
                })
                .collect::<Result<Vec<_>, _>>();
            let vectors = match vectors {
                Ok(v) => v,
                Err(d) => {
                    diags.push(d);
                    continue;
                }
            };
            if let Some((c, _)) = spec
                .contexts
                .iter()
                .enumerate()
                .find(|(_, ctx)| ctx.iter().any(|&i| i == 0 || i > vectors.len()))
            {
                diags.push(Diagnostic::new(
                    format!("{path}.contexts[{c}]"),
                    "IndexOutOfRange",
                    format!("context members must lie in 1..={}", vectors.len()),
                ));
                continue;
            }
            let contexts = spec
                .contexts
                .iter()
                .map(|ctx| ctx.iter().map(|i| i - 1).collect())
                .collect();
            match ContextFamily::new(file.dim, vectors, contexts) {
                Ok(f) => {
                    let report = validate_context_family(&f);
                    if report.is_valid() {
                        families.push((name.clone(), f));
                    }
                    for v in report.violations {
                        diags.push(Diagnostic::new(
                            &path,
                            "InvalidContextFamily",
                            v.to_string(),
                        ));
                    }
                }
                Err(e) => diags.push(Diagnostic::from_error(&path, &e)),
            }
        }

        let mut embeddings = Vec::new();
        for (name, spec) in &file.embeddings {
            let path = format!("$.embeddings.{name}");
            match to_matrix(&spec.isometry).and_then(|w| Embedding::new(w, spec.small_dim)) {
                Ok(e) if e.big_dim() != file.dim => {
                    let e = Error::DimensionMismatch {
                        expected: file.dim,
                        found: e.big_dim(),
                    };
                    diags.push(Diagnostic::from_error(&path, &e));
                }
                Ok(e) => embeddings.push((name.clone(), e)),
                Err(e) => diags.push(Diagnostic::from_error(&path, &e)),
            }
        }

        match isa {
            Some(isa) if diags.is_empty() => Ok(Self {
                isa,
                factorizations,
                bases,
                families,
                embeddings,
            }),
            _ => Err(diags),
        }
    }

    pub fn load(path: &Path, cfg: &LabConfig) -> Result<Self, LabError> {
        Self::from_file(&LabFile::read(path)?, cfg).map_err(LabError::Invalid)
    }

    pub fn isa(&self) -> &IntensiveState {
        &self.isa
    }

    pub fn dim(&self) -> usize {
        self.isa.dim()
    }

    pub fn quantum_lab(&self) -> QuantumLab {
        QuantumLab::new(self.isa.clone())
    }

    pub fn factorizations(&self) -> &[(String, Factorization)] {
        &self.factorizations
    }

    pub fn bases(&self) -> &[(String, DetectorBasis)] {
        &self.bases
    }

    pub fn families(&self) -> &[(String, ContextFamily)] {
        &self.families
    }

    pub fn embeddings(&self) -> &[(String, Embedding)] {
        &self.embeddings
    }

    pub fn basis(&self, name: &str) -> Result<&DetectorBasis, LabError> {
        find(&self.bases, name).ok_or_else(|| LabError::UnknownBasis(name.into()))
    }

    pub fn family(&self, name: &str) -> Result<&ContextFamily, LabError> {
        find(&self.families, name).ok_or_else(|| LabError::UnknownFamily(name.into()))
    }

    pub fn embedding(&self, name: &str) -> Result<&Embedding, LabError> {
        find(&self.embeddings, name).ok_or_else(|| LabError::UnknownEmbedding(name.into()))
    }
}
