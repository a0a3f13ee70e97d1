//! JSON documents: spaces, arrows and rollback pipelines.
//!
//! Rationals travel as `"p/q"` strings. Validation never stops at the first
//! problem; every violation is reported with a JSON path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::category::ProbArrow;
use crate::measure::{ae_close, ae_max_abs_diff};
use crate::measure::{FinProbSpace, Outcome, RandomVariable, SigmaAlgebra};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar, Tolerance};
use crate::value::{compose_chain, rollback_chain, Entropic, ValueMeasure};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub type Violations = Vec<Violation>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub outcomes: Vec<String>,
    pub weights: BTreeMap<String, Value>,
    pub atoms: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrowDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    pub map: BTreeMap<String, String>,
}

/// Arrows may be given as a list carrying `id` fields or as an id-keyed object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArrowList {
    List(Vec<ArrowDoc>),
    Keyed(BTreeMap<String, ArrowDoc>),
}

impl Default for ArrowList {
    fn default() -> Self {
        ArrowList::List(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalDoc {
    pub space: String,
    pub values: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineDoc {
    pub spaces: BTreeMap<String, SpaceDoc>,
    #[serde(default)]
    pub arrows: ArrowList,
    pub chain: Vec<String>,
    pub terminal: TerminalDoc,
    pub lambda: f64,
}

/// Spaces and arrows without a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionDoc {
    pub spaces: BTreeMap<String, SpaceDoc>,
    #[serde(default)]
    pub arrows: ArrowList,
}

fn number_to_rational(v: &Value) -> Result<Rational, String> {
    match v {
        Value::String(s) => {
            parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational (expected \"p/q\")"))
        }
        Value::Number(n) => parse_rational(&n.to_string())
            .ok_or_else(|| format!("{n} is not representable exactly; use a \"p/q\" string")),
        other => Err(format!("expected a \"p/q\" string, got {other}")),
    }
}

fn number_to_real(v: &Value) -> Result<f64, String> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("{n} is not a finite real")),
        Value::String(_) => number_to_rational(v).map(|r| r.to_f64()),
        other => Err(format!("expected a number, got {other}")),
    }
}

impl SpaceDoc {
    pub fn from_space(space: &FinProbSpace) -> Self {
        let labels = |ix: &[usize]| {
            ix.iter()
                .map(|&i| space.outcomes()[i].to_string())
                .collect()
        };
        Self {
            outcomes: space.outcomes().iter().map(|o| o.to_string()).collect(),
            weights: space
                .outcomes()
                .iter()
                .zip(space.weights())
                .map(|(o, w)| (o.to_string(), Value::String(format_rational(w))))
                .collect(),
            atoms: space.sigma().atoms().iter().map(|a| labels(a)).collect(),
        }
    }

    pub fn build(&self, path: &str) -> Result<FinProbSpace, Violations> {
        let mut errs = Vec::new();
        let mut index = BTreeMap::new();
        for (i, label) in self.outcomes.iter().enumerate() {
            if label.is_empty() {
                errs.push(Violation::new(
                    format!("{path}.outcomes[{i}]"),
                    "empty outcome label",
                ));
            } else if index.insert(label.as_str(), i).is_some() {
                errs.push(Violation::new(
                    format!("{path}.outcomes[{i}]"),
                    format!("duplicate outcome `{label}`"),
                ));
            }
        }
        if self.outcomes.is_empty() {
            errs.push(Violation::new(format!("{path}.outcomes"), "no outcomes"));
        }

        let mut weights = vec![Rational::zero(); self.outcomes.len()];
        for (label, raw) in &self.weights {
            let wpath = format!("{path}.weights.{label}");
            let Some(&i) = index.get(label.as_str()) else {
                errs.push(Violation::new(wpath, format!("unknown outcome `{label}`")));
                continue;
            };
            match number_to_rational(raw) {
                Ok(w) if w < Rational::zero() => errs.push(Violation::new(
                    wpath,
                    format!("negative weight {}", format_rational(&w)),
                )),
                Ok(w) => weights[i] = w,
                Err(e) => errs.push(Violation::new(wpath, e)),
            }
        }
        for label in &self.outcomes {
            if !self.weights.contains_key(label) {
                errs.push(Violation::new(
                    format!("{path}.weights"),
                    format!("missing weight for `{label}`"),
                ));
            }
        }
        if errs.is_empty() {
            let total: Rational = weights.iter().sum();
            if total != Rational::one() {
                errs.push(Violation::new(
                    format!("{path}.weights"),
                    format!("weights sum to {}, expected 1", format_rational(&total)),
                ));
            }
        }

        let mut atoms = Vec::with_capacity(self.atoms.len());
        let mut covered = BTreeSet::new();
        for (a, atom) in self.atoms.iter().enumerate() {
            if atom.is_empty() {
                errs.push(Violation::new(format!("{path}.atoms[{a}]"), "empty atom"));
            }
            let mut ix = Vec::with_capacity(atom.len());
            for (j, label) in atom.iter().enumerate() {
                let apath = format!("{path}.atoms[{a}][{j}]");
                match index.get(label.as_str()) {
                    None => errs.push(Violation::new(apath, format!("unknown outcome `{label}`"))),
                    Some(&i) if !covered.insert(i) => errs.push(Violation::new(
                        apath,
                        format!("`{label}` already belongs to another atom"),
                    )),
                    Some(&i) => ix.push(i),
                }
            }
            atoms.push(ix);
        }
        for (label, i) in &index {
            if !covered.contains(i) {
                errs.push(Violation::new(
                    format!("{path}.atoms"),
                    format!("`{label}` is in no atom"),
                ));
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let outcomes = self
            .outcomes
            .iter()
            .map(|l| Outcome::new(l.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| vec![Violation::new(format!("{path}.outcomes"), e)])?;
        let sigma = SigmaAlgebra::from_atoms(self.outcomes.len(), atoms)
            .map_err(|e| vec![Violation::new(format!("{path}.atoms"), e)])?;
        FinProbSpace::new(outcomes, weights, sigma).map_err(|e| vec![Violation::new(path, e)])
    }
}

impl ArrowDoc {
    pub fn from_arrow(arrow: &ProbArrow, src: &str, dst: &str) -> Self {
        Self {
            id: None,
            src: src.to_string(),
            dst: dst.to_string(),
            map: arrow.underlying_labels(),
        }
    }
}

impl ArrowList {
    fn entries(&self) -> Vec<(String, String, &ArrowDoc)> {
        match self {
            ArrowList::List(list) => list
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    (
                        a.id.clone().unwrap_or_else(|| i.to_string()),
                        format!("$.arrows[{i}]"),
                        a,
                    )
                })
                .collect(),
            ArrowList::Keyed(map) => map
                .iter()
                .map(|(id, a)| (id.clone(), format!("$.arrows.{id}"), a))
                .collect(),
        }
    }
}

/// Validated spaces and arrows, referenced by id.
#[derive(Debug, Clone, Default)]
pub struct Collection {
    pub spaces: BTreeMap<String, Arc<FinProbSpace>>,
    pub arrows: BTreeMap<String, ProbArrow>,
    /// `(src id, dst id)` per arrow id.
    pub endpoints: BTreeMap<String, (String, String)>,
}

fn build_collection(
    spaces: &BTreeMap<String, SpaceDoc>,
    arrows: &ArrowList,
    errs: &mut Violations,
) -> Collection {
    let mut out = Collection::default();
    for (id, doc) in spaces {
        match doc.build(&format!("$.spaces.{id}")) {
            Ok(space) => {
                out.spaces.insert(id.clone(), Arc::new(space));
            }
            Err(e) => errs.extend(e),
        }
    }
    for (id, path, doc) in arrows.entries() {
        if out.endpoints.contains_key(&id) {
            errs.push(Violation::new(&path, format!("duplicate arrow id `{id}`")));
            continue;
        }
        let mut resolve = |key: &str, name: &str| match out.spaces.get(name) {
            Some(s) => Some(s.clone()),
            None => {
                if !spaces.contains_key(name) {
                    errs.push(Violation::new(
                        format!("{path}.{key}"),
                        format!("unknown space `{name}`"),
                    ));
                }
                None
            }
        };
        let (Some(src), Some(dst)) = (resolve("src", &doc.src), resolve("dst", &doc.dst)) else {
            continue;
        };
        match ProbArrow::new(src, dst, &doc.map) {
            Ok(arrow) => {
                out.arrows.insert(id.clone(), arrow);
                out.endpoints.insert(id, (doc.src.clone(), doc.dst.clone()));
            }
            Err(e) => errs.push(Violation::new(format!("{path}.map"), e)),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub collection: Collection,
    pub chain_ids: Vec<String>,
    pub chain: Vec<ProbArrow>,
    /// Space id of each stage, `X₀ … Xₙ`.
    pub stage_spaces: Vec<String>,
    pub terminal: RandomVariable<f64>,
    pub lambda: f64,
}

impl PipelineDoc {
    pub fn build(&self) -> Result<Pipeline, Violations> {
        let mut errs = Vec::new();
        let collection = build_collection(&self.spaces, &self.arrows, &mut errs);
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            errs.push(Violation::new(
                "$.lambda",
                format!("lambda must be positive, got {}", self.lambda),
            ));
        }
        if self.chain.is_empty() {
            errs.push(Violation::new("$.chain", "chain is empty"));
        }
        let mut chain = Vec::new();
        let mut stage_spaces = Vec::new();
        for (i, id) in self.chain.iter().enumerate() {
            let path = format!("$.chain[{i}]");
            match (collection.arrows.get(id), collection.endpoints.get(id)) {
                (Some(arrow), Some((src, dst))) => {
                    if let Some(prev) = stage_spaces.last() {
                        if prev != src {
                            errs.push(Violation::new(
                                &path,
                                format!(
                                    "arrow `{id}` starts at `{src}` but the chain is at `{prev}`"
                                ),
                            ));
                        }
                    } else {
                        stage_spaces.push(src.clone());
                    }
                    stage_spaces.push(dst.clone());
                    chain.push(arrow.clone());
                }
                _ => {
                    if !self.arrows.entries().iter().any(|(aid, _, _)| aid == id) {
                        errs.push(Violation::new(&path, format!("unknown arrow `{id}`")));
                    }
                }
            }
        }

        let mut terminal = None;
        if let Some(last) = stage_spaces.last() {
            if *last != self.terminal.space {
                errs.push(Violation::new(
                    "$.terminal.space",
                    format!(
                        "terminal lives on `{}`, but the chain ends at `{last}`",
                        self.terminal.space
                    ),
                ));
            }
        }
        match collection.spaces.get(&self.terminal.space) {
            None if !self.spaces.contains_key(&self.terminal.space) => errs.push(Violation::new(
                "$.terminal.space",
                format!("unknown space `{}`", self.terminal.space),
            )),
            None => {}
            Some(space) => match build_values(space, &self.terminal.values, "$.terminal.values") {
                Ok(rv) => terminal = Some(rv),
                Err(e) => errs.extend(e),
            },
        }
        match terminal {
            Some(terminal) if errs.is_empty() => Ok(Pipeline {
                collection,
                chain_ids: self.chain.clone(),
                chain,
                stage_spaces,
                terminal,
                lambda: self.lambda,
            }),
            _ => Err(errs),
        }
    }
}

fn build_values(
    space: &Arc<FinProbSpace>,
    raw: &BTreeMap<String, Value>,
    path: &str,
) -> Result<RandomVariable<f64>, Violations> {
    let mut errs = Vec::new();
    let mut values = vec![f64::NAN; space.len()];
    for (label, v) in raw {
        match space.index_of(label) {
            Err(_) => errs.push(Violation::new(
                format!("{path}.{label}"),
                format!("unknown outcome `{label}`"),
            )),
            Ok(i) => match number_to_real(v) {
                Ok(x) => values[i] = x,
                Err(e) => errs.push(Violation::new(format!("{path}.{label}"), e)),
            },
        }
    }
    for (i, o) in space.outcomes().iter().enumerate() {
        if !raw.contains_key(o.as_str()) && values[i].is_nan() {
            errs.push(Violation::new(path, format!("missing value for `{o}`")));
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    RandomVariable::new(space.clone(), values).map_err(|e| vec![Violation::new(path, e)])
}

/// Any document `probcat check` accepts.
#[derive(Debug, Clone)]
pub enum Document {
    Space(Arc<FinProbSpace>),
    Collection(Collection),
    Pipeline(Box<Pipeline>),
}

/// Parses and validates a document, picking its kind from its keys.
pub fn load_document(value: &Value) -> Result<Document, Violations> {
    let Some(obj) = value.as_object() else {
        return Err(vec![Violation::new("$", "expected a JSON object")]);
    };
    let shape_err = |e: serde_json::Error| vec![Violation::new("$", e)];
    if obj.contains_key("chain") {
        let doc: PipelineDoc = serde_json::from_value(value.clone()).map_err(shape_err)?;
        doc.build().map(|p| Document::Pipeline(Box::new(p)))
    } else if obj.contains_key("spaces") {
        let doc: CollectionDoc = serde_json::from_value(value.clone()).map_err(shape_err)?;
        let mut errs = Vec::new();
        let c = build_collection(&doc.spaces, &doc.arrows, &mut errs);
        if errs.is_empty() {
            Ok(Document::Collection(c))
        } else {
            Err(errs)
        }
    } else if obj.contains_key("outcomes") {
        let doc: SpaceDoc = serde_json::from_value(value.clone()).map_err(shape_err)?;
        doc.build("$").map(|s| Document::Space(Arc::new(s)))
    } else {
        Err(vec![Violation::new(
            "$",
            "unrecognised document: expected `outcomes`, `spaces` or `chain`",
        )])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageValues {
    pub index: usize,
    pub space: String,
    /// Value per atom, keyed by `{a,b}` atom label, in atom order.
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCheck {
    pub max_residual: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub lambda: f64,
    /// Stages from the terminal `Xₙ` back to `X₀`.
    pub stages: Vec<StageValues>,
    pub residual: Option<ResidualCheck>,
}

fn stage_values(rv: &RandomVariable<f64>) -> Vec<(String, f64)> {
    let space = rv.space();
    (0..space.sigma().num_atoms())
        .map(|a| (space.atom_label(a), *rv.atom_value(a)))
        .collect()
}

impl Pipeline {
    /// Entropic rollback along the chain, optionally cross-checked against a
    /// direct evaluation along the composite arrow.
    pub fn evaluate(
        &self,
        lambda: Option<f64>,
        residual_check: bool,
        tolerance: Tolerance,
    ) -> Result<EvalReport, crate::value::ValueError> {
        let lambda = lambda.unwrap_or(self.lambda);
        let vm = Entropic::new(lambda)?.with_tolerance(tolerance);
        let stages = rollback_chain(&vm, &self.chain, &self.terminal)?;
        let n = self.chain.len();
        let report_stages = stages
            .iter()
            .enumerate()
            .map(|(k, rv)| StageValues {
                index: n - k,
                space: self.stage_spaces[n - k].clone(),
                values: stage_values(rv),
            })
            .collect();
        let residual = if residual_check {
            let composite = compose_chain(&self.chain)?;
            let direct = vm.phi(&composite, &self.terminal)?;
            let stage0 = stages.last().expect("rollback yields n + 1 stages");
            let max_residual = ae_max_abs_diff(&direct, stage0)?;
            let passed = ae_close(&direct, stage0, &tolerance)?;
            Some(ResidualCheck {
                max_residual,
                tolerance,
                passed,
            })
        } else {
            None
        };
        Ok(EvalReport {
            lambda,
            stages: report_stages,
            residual,
        })
    }
}

impl EvalReport {
    pub fn to_json(&self) -> Value {
        let stages: Vec<Value> = self
            .stages
            .iter()
            .map(|s| {
                let values: Map<String, Value> = s
                    .values
                    .iter()
                    .map(|(k, v)| (k.clone(), real(*v)))
                    .collect();
                serde_json::json!({ "stage": s.index, "space": s.space, "values": values })
            })
            .collect();
        let mut out = serde_json::json!({ "lambda": real(self.lambda), "stages": stages });
        if let Some(r) = &self.residual {
            out["residual_check"] = serde_json::json!({
                "max_residual": real(r.max_residual),
                "relative_tolerance": real(r.tolerance.relative),
                "absolute_tolerance": real(r.tolerance.absolute),
                "passed": r.passed,
            });
        }
        out
    }
}

pub fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Serializes a variable as `{outcome: value}`; exact values become `"p/q"`.
pub fn rv_to_json<S: Scalar + ToJsonScalar>(rv: &RandomVariable<S>) -> Value {
    Value::Object(
        rv.space()
            .outcomes()
            .iter()
            .zip(rv.values())
            .map(|(o, v)| (o.to_string(), v.to_json()))
            .collect(),
    )
}

pub trait ToJsonScalar {
    fn to_json(&self) -> Value;
}

impl ToJsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

impl ToJsonScalar for f64 {
    fn to_json(&self) -> Value {
        real(*self)
    }
}

pub fn space_to_json(space: &FinProbSpace) -> Value {
    serde_json::to_value(SpaceDoc::from_space(space)).expect("space docs serialize")
}

pub fn arrow_to_json(arrow: &ProbArrow, src: &str, dst: &str) -> Value {
    serde_json::to_value(ArrowDoc::from_arrow(arrow, src, dst)).expect("arrow docs serialize")
}

/// Stable rendering: keys sorted, two-space indent, finite reals printed
/// with 17 significant digits, integers verbatim.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out
}

fn write_value(value: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&value.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                out.push_str(&format!("{x:.16e}"));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(depth + 1, out);
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn worked_pipeline() -> Value {
        json!({
            "spaces": {
                "X": {"outcomes": ["p", "q"], "weights": {"p": "1/2", "q": "1/2"}, "atoms": [["p"], ["q"]]},
                "Y": {"outcomes": ["a", "b", "c", "d"],
                      "weights": {"a": "1/4", "b": "1/4", "c": "1/4", "d": "1/4"},
                      "atoms": [["a"], ["b"], ["c"], ["d"]]}
            },
            "arrows": [{"id": "f", "src": "X", "dst": "Y", "map": {"a": "p", "b": "p", "c": "q", "d": "q"}}],
            "chain": ["f"],
            "terminal": {"space": "Y", "values": {"a": 1, "b": 3, "c": 2, "d": 4}},
            "lambda": 1.0
        })
    }

    #[test]
    fn loads_worked_pipeline_and_evaluates() {
        let Document::Pipeline(p) = load_document(&worked_pipeline()).unwrap() else {
            panic!("expected pipeline");
        };
        let report = p.evaluate(None, true, Tolerance::default()).unwrap();
        assert_eq!(report.stages.len(), 2);
        assert_eq!(report.stages[1].space, "X");
        let p_val = ((1f64.exp() + 3f64.exp()) / 2.0).ln();
        assert!((report.stages[1].values[0].1 - p_val).abs() < 1e-14);
        assert!(report.residual.unwrap().passed);
    }

    #[test]
    fn keyed_arrows_are_accepted() {
        let mut doc = worked_pipeline();
        doc["arrows"] =
            json!({"f": {"src": "X", "dst": "Y", "map": {"a": "p", "b": "p", "c": "q", "d": "q"}}});
        assert!(matches!(load_document(&doc), Ok(Document::Pipeline(_))));
    }

    #[test]
    fn reports_every_violation_with_paths() {
        let mut doc = worked_pipeline();
        doc["spaces"]["X"]["weights"]["q"] = json!("49/100");
        doc["chain"] = json!(["f", "nope"]);
        let errs = load_document(&doc).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.path == "$.spaces.X.weights"
                && e.message == "weights sum to 99/100, expected 1"));
        assert!(errs.iter().any(|e| e.path == "$.chain[1]"));
    }

    #[test]
    fn absolute_continuity_violation_names_the_atom() {
        let mut doc = worked_pipeline();
        doc["spaces"]["X"]["weights"] = json!({"p": "1", "q": "0"});
        let errs = load_document(&doc).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "$.arrows[0].map");
        assert!(errs[0].message.contains("atom {q}"), "{}", errs[0].message);
    }

    #[test]
    fn bare_space_round_trips() {
        let doc = worked_pipeline()["spaces"]["Y"].clone();
        let Document::Space(space) = load_document(&doc).unwrap() else {
            panic!("expected space");
        };
        assert_eq!(space_to_json(&space), doc);
    }

    #[test]
    fn bad_atoms_are_located() {
        let doc = json!({"outcomes": ["a", "b"], "weights": {"a": "1/2", "b": "1/2"}, "atoms": [["a", "z"], ["a"]]});
        let errs = load_document(&doc).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["$.atoms[0][1]", "$.atoms[1][0]", "$.atoms"]);
    }

    #[test]
    fn canonical_output_sorts_keys_and_fixes_precision() {
        let v = json!({"b": 0.5, "a": [1, "1/3", {"z": null, "y": true}]});
        let s = to_canonical_string(&v);
        assert_eq!(
            s,
            "{\n  \"a\": [\n    1,\n    \"1/3\",\n    {\n      \"y\": true,\n      \"z\": null\n    }\n  ],\n  \"b\": 5.0000000000000000e-1\n}"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], json!(0.5));
    }
}
