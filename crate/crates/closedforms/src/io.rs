//! JSON forms of specs, matrices, forms, traces and reports.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constructor::{ClosedCheck, LiftedForm};
use crate::jordan::{ComplexBlock, JordanSpec, RealBlock};
use crate::linalg::{parse_rational, FloatMatrix, Rational, RationalMatrix};
use crate::oracle::OracleReport;
use crate::reducer::{CanonicalResult, ModuliClass, ReductionTrace};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
}

impl From<&RationalMatrix> for MatrixJson {
    fn from(m: &RationalMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let x = &m[(i, j)];
                if !num_traits::Zero::is_zero(x) {
                    entries.push((i, j, x.to_string()));
                }
            }
        }
        MatrixJson { rows: m.rows(), cols: m.cols(), entries }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<RationalMatrix, Error> {
        let mut m = RationalMatrix::zeros(self.rows, self.cols);
        for (k, (i, j, v)) in self.entries.iter().enumerate() {
            if *i >= self.rows || *j >= self.cols {
                return Err(Error::Parse(format!(
                    "entries[{k}]: index ({i}, {j}) outside {}x{}",
                    self.rows, self.cols
                )));
            }
            m[(*i, *j)] = parse_rational(v).map_err(|e| Error::Parse(format!("entries[{k}]: {e}")))?;
        }
        Ok(m)
    }
}

pub fn matrix_to_json(m: &RationalMatrix) -> Value {
    serde_json::to_value(MatrixJson::from(m)).expect("serializable")
}

pub fn matrix_from_value(v: &Value) -> Result<RationalMatrix, Error> {
    let mj: MatrixJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("matrix: {e}")))?;
    mj.to_matrix()
}

pub fn matrix_from_json(text: &str) -> Result<RationalMatrix, Error> {
    matrix_from_value(&parse_value(text)?)
}

fn parse_value(text: &str) -> Result<Value, Error> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Rationals may be written as strings (`"p/q"`) or plain JSON integers.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Num {
    Text(String),
    Int(i64),
}

impl Num {
    fn rational(&self, field: &str) -> Result<Rational, Error> {
        match self {
            Num::Text(s) => parse_rational(s).map_err(|e| Error::Parse(format!("{field}: {e}"))),
            Num::Int(i) => Ok(crate::linalg::rat(*i)),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RealIn {
    size: i64,
    eig: Num,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexIn {
    half_size: i64,
    re: Num,
    im: Num,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecIn {
    #[serde(default)]
    real_blocks: Vec<RealIn>,
    #[serde(default)]
    complex_blocks: Vec<ComplexIn>,
}

fn positive(v: i64, field: &str) -> Result<usize, Error> {
    if v <= 0 {
        return Err(Error::Invalid(format!("{field}: size must be positive, got {v}")));
    }
    Ok(v as usize)
}

pub fn spec_from_value(v: &Value) -> Result<JordanSpec, Error> {
    let raw: SpecIn = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("spec: {e}")))?;
    let mut real = Vec::new();
    for (k, b) in raw.real_blocks.iter().enumerate() {
        let size = positive(b.size, &format!("real_blocks[{k}].size"))?;
        real.push(RealBlock::new(size, b.eig.rational(&format!("real_blocks[{k}].eig"))?));
    }
    let mut cx = Vec::new();
    for (k, b) in raw.complex_blocks.iter().enumerate() {
        let m = positive(b.half_size, &format!("complex_blocks[{k}].half_size"))?;
        let re = b.re.rational(&format!("complex_blocks[{k}].re"))?;
        let im = b.im.rational(&format!("complex_blocks[{k}].im"))?;
        if num_traits::Zero::is_zero(&im) {
            return Err(Error::Invalid(format!("complex_blocks[{k}].im: must be nonzero")));
        }
        cx.push(ComplexBlock::new(m, re, im));
    }
    JordanSpec::new(real, cx)
}

pub fn spec_from_json(text: &str) -> Result<JordanSpec, Error> {
    spec_from_value(&parse_value(text)?)
}

/// Canonical-order JSON of a spec; the hash of its compact text identifies the spec in form files.
pub fn spec_to_json(spec: &JordanSpec) -> Value {
    json!({
        "real_blocks": spec.real_blocks.iter()
            .map(|b| json!({"size": b.size, "eig": b.eig.to_string()}))
            .collect::<Vec<_>>(),
        "complex_blocks": spec.complex_blocks.iter()
            .map(|b| json!({"half_size": b.half_size, "re": b.re.to_string(), "im": b.im.to_string()}))
            .collect::<Vec<_>>(),
    })
}

pub fn spec_hash(spec: &JordanSpec) -> String {
    let text = serde_json::to_string(&spec_to_json(spec)).expect("serializable");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormFile {
    pub matrix: RationalMatrix,
    pub dim: usize,
    pub rank: usize,
    pub spec_hash: String,
}

pub fn form_to_json(form: &RationalMatrix, spec: &JordanSpec) -> Value {
    let mut v = matrix_to_json(form);
    let obj = v.as_object_mut().expect("object");
    obj.insert("dim".into(), json!(form.rows()));
    obj.insert("rank".into(), json!(form.rank()));
    obj.insert("spec_hash".into(), json!(spec_hash(spec)));
    v
}

pub fn form_from_json(text: &str) -> Result<FormFile, Error> {
    let v = parse_value(text)?;
    let matrix = matrix_from_value(&v)?;
    let field = |k: &str| v.get(k).and_then(Value::as_u64).map(|x| x as usize);
    let dim = field("dim").unwrap_or(matrix.rows());
    let rank = field("rank").unwrap_or_else(|| matrix.rank());
    let spec_hash = v.get("spec_hash").and_then(Value::as_str).unwrap_or_default().to_string();
    if dim != matrix.rows() {
        return Err(Error::Invalid(format!("dim {dim} does not match {} rows", matrix.rows())));
    }
    Ok(FormFile { matrix, dim, rank, spec_hash })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float_text(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn float_matrix_to_json(m: &FloatMatrix) -> Value {
    let rows: Vec<Vec<String>> =
        (0..m.rows).map(|i| (0..m.cols).map(|j| float_text(m[(i, j)])).collect()).collect();
    json!({"rows": m.rows, "cols": m.cols, "data": rows})
}

pub fn trace_to_json(trace: &ReductionTrace) -> Value {
    json!({
        "steps": trace.steps.iter().map(|s| json!({
            "tag": s.tag.name(),
            "l": s.l,
            "m": s.m,
            "k": s.k,
            "t": s.t,
            "transform": float_matrix_to_json(&s.transform),
        })).collect::<Vec<_>>(),
        "accumulated_s": float_matrix_to_json(&trace.accumulated_s),
        "residual": float_text(trace.residual),
    })
}

pub fn canonical_to_json(res: &CanonicalResult) -> Value {
    json!({
        "permutation": res.permutation.images(),
        "extended": res.extended.images(),
        "sign_pattern": res.sign_pattern,
        "rank": res.rank,
        "b_canonical": matrix_to_json(&res.b_canonical),
        "canonical_matrix": matrix_to_json(&res.canonical_matrix),
        "residual": float_text(res.residual),
    })
}

pub fn moduli_to_json(class: &ModuliClass) -> Value {
    json!({
        "permutation": class.permutation.images(),
        "pairs": class.pairs,
        "canonical_form": matrix_to_json(&class.canonical_form),
        "residual": float_text(class.residual),
    })
}

pub fn lifted_to_json(form: &LiftedForm, spec: &JordanSpec) -> Value {
    let mut v = form_to_json(&form.matrix, spec);
    let obj = v.as_object_mut().expect("object");
    obj.insert("v_in_image".into(), json!(form.v_in_image));
    obj.insert("retries".into(), json!(form.retries));
    v
}

pub fn check_to_json(check: &ClosedCheck) -> Value {
    json!({
        "closed": check.closed,
        "residual": matrix_to_json(&check.residual),
        "triple_violations": check
            .triple_violations
            .iter()
            .map(|((x, y, z), v)| json!([x, y, z, v.to_string()]))
            .collect::<Vec<_>>(),
        "agrees": check.agrees,
    })
}

pub fn report_to_json(r: &OracleReport) -> Value {
    json!({
        "spec": spec_to_json(&r.spec),
        "basis_dim": r.basis_dim,
        "generic_rank": r.generic_rank,
        "achievable_ranks": r.achievable_ranks,
        "formula_rank": r.formula_rank,
        "agreement": r.agreement,
        "downward_closed": r.downward_closed,
        "witness": matrix_to_json(&r.witness),
        "witness_rank": r.witness_rank,
        "witness_valid": r.witness_valid,
        "trials": r.trials,
        "seed": r.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};

    #[test]
    fn matrix_roundtrip() {
        let mut m = RationalMatrix::zeros(2, 3);
        m[(0, 2)] = ratio(-3, 4);
        m[(1, 0)] = rat(5);
        let v = matrix_to_json(&m);
        assert_eq!(v, json!({"rows": 2, "cols": 3, "entries": [[0, 2, "-3/4"], [1, 0, "5"]]}));
        assert_eq!(matrix_from_value(&v).unwrap(), m);
        assert!(matrix_from_json(r#"{"rows":1,"cols":1,"entries":[[1,0,"1"]]}"#).is_err());
        assert!(matrix_from_json(r#"{"rows":1,"cols":1,"entries":[[0,0,"1/0"]]}"#).is_err());
    }

    #[test]
    fn spec_examples() {
        let s = spec_from_json(r#"{"real_blocks":[{"size":3,"eig":"1"},{"size":2,"eig":"-1"}]}"#).unwrap();
        assert_eq!((s.n_real(), s.d()), (5, 6));
        let s = spec_from_json(r#"{"complex_blocks":[{"half_size":4,"re":"0","im":"1"}]}"#).unwrap();
        assert_eq!((s.n_complex(), s.d()), (8, 9));
        assert_eq!(spec_from_json(r#"{"real_blocks":[{"size":1,"eig":"0"}]}"#), Err(Error::Abelian));
        let e = spec_from_json(r#"{"real_blocks":[{"size":0,"eig":"0"}]}"#).unwrap_err();
        assert!(e.to_string().contains("real_blocks[0].size"));
        let e = spec_from_json(r#"{"complex_blocks":[{"half_size":1,"re":"0","im":"0"}]}"#).unwrap_err();
        assert!(e.to_string().contains("complex_blocks[0].im"));
        let e = spec_from_json("{\n  \"real_blocks\": [\n    {\"size\": 2, \"eig\": \"x\"}]}").unwrap_err();
        assert!(e.to_string().contains("real_blocks[0].eig"));
        let e = spec_from_json("{\n\"real_blocks\": [}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn hash_is_order_independent() {
        let a = spec_from_json(r#"{"real_blocks":[{"size":2,"eig":"-1"},{"size":3,"eig":"1"}]}"#).unwrap();
        let b = spec_from_json(r#"{"real_blocks":[{"size":3,"eig":1},{"size":2,"eig":-1}]}"#).unwrap();
        assert_eq!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(float_text(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float_text(0.1), "1.0000000000000001e-1");
    }
}
