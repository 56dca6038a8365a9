//! JSON encodings for tensors, spectra, highest weight vector specs and
//! run reports. Floating output is rounded to 12 significant digits.

use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{bail, Error, Result};
use crate::group::GroupTuple;
use crate::hwv::HwvSpec;
use crate::linalg::CMatrix;
use crate::oracle::MembershipVerdict;
use crate::partition::Partition;
use crate::scaling::ScalingReport;
use crate::spectrum::{parse_fraction, rationalize, Rational, TargetSpectrum, DEFAULT_DENOMINATOR_CAP};
use crate::tensor::{Tensor, TensorFormat};

/// Rounds to 12 significant digits; values that are then integral print
/// without a fractional part.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded == rounded.trunc() && rounded.abs() < 9.0e15 {
        return json!(rounded as i64);
    }
    json!(rounded)
}

fn complex(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

/// Pretty JSON with a trailing newline; object keys are sorted.
pub fn to_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, to_string(v))?;
    Ok(())
}

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("{at}: missing field {key:?}")))
}

fn as_array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Parse(format!("{at}: expected an array")))
}

fn as_usize(v: &Value, at: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Parse(format!("{at}: expected a nonnegative integer")))
}

fn as_f64(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Parse(format!("{at}: expected a number")))
}

fn usize_list(v: &Value, at: &str) -> Result<Vec<usize>> {
    as_array(v, at)?
        .iter()
        .enumerate()
        .map(|(k, x)| as_usize(x, &format!("{at}[{k}]")))
        .collect()
}

fn parse_complex(v: &Value, at: &str) -> Result<Complex64> {
    match v {
        Value::Number(_) => Ok(Complex64::new(as_f64(v, at)?, 0.0)),
        Value::Object(_) => {
            let re = v.get("re").map(|x| as_f64(x, &format!("{at}.re"))).transpose()?.unwrap_or(0.0);
            let im = v.get("im").map(|x| as_f64(x, &format!("{at}.im"))).transpose()?.unwrap_or(0.0);
            Ok(Complex64::new(re, im))
        }
        _ => bail!(Parse, "{at}: expected a number or {{\"re\", \"im\"}}"),
    }
}

/// Accepts the sparse form `{"dims", "entries": [{"idx", "re", "im"}]}` or a
/// dense nested array of depth `d + 1`.
pub fn tensor_from_json(v: &Value) -> Result<Tensor> {
    match v {
        Value::Array(_) => dense_tensor(v),
        Value::Object(_) => {
            let dims = usize_list(field(v, "dims", "tensor")?, "tensor.dims")?;
            if dims.len() < 2 {
                bail!(Parse, "tensor.dims: need n0 and at least one party dimension");
            }
            let format = TensorFormat::new(dims[0], dims[1..].to_vec())?;
            let mut t = Tensor::zeros(format);
            for (k, e) in as_array(field(v, "entries", "tensor")?, "tensor.entries")?.iter().enumerate() {
                let at = format!("tensor.entries[{k}]");
                let idx = usize_list(field(e, "idx", &at)?, &format!("{at}.idx"))?;
                if idx.len() != dims.len() {
                    bail!(Parse, "{at}.idx: expected {} indices, got {}", dims.len(), idx.len());
                }
                if let Some(a) = idx.iter().zip(&dims).position(|(i, n)| i >= n) {
                    bail!(Parse, "{at}.idx[{a}]: index {} out of range for dimension {}", idx[a], dims[a]);
                }
                let z = parse_complex(e, &at)?;
                if !z.re.is_finite() || !z.im.is_finite() {
                    bail!(Parse, "{at}: entry is not finite");
                }
                let prev = t.get(&idx)?;
                if prev != crate::linalg::ZERO {
                    bail!(Parse, "{at}: duplicate index {idx:?}");
                }
                t.set(&idx, z)?;
            }
            Ok(t)
        }
        _ => bail!(Parse, "tensor: expected an object or a nested array"),
    }
}

fn dense_tensor(v: &Value) -> Result<Tensor> {
    let mut dims = Vec::new();
    let mut cur = v;
    while let Value::Array(a) = cur {
        if a.is_empty() {
            bail!(Parse, "tensor: empty array at depth {}", dims.len());
        }
        dims.push(a.len());
        cur = &a[0];
    }
    if dims.len() < 2 {
        bail!(Parse, "tensor: dense form needs depth at least 2");
    }
    let mut entries = Vec::new();
    fn walk(v: &Value, dims: &[usize], path: &mut Vec<usize>, out: &mut Vec<Complex64>) -> Result<()> {
        let at = || format!("tensor{}", path.iter().map(|i| format!("[{i}]")).collect::<String>());
        if dims.is_empty() {
            out.push(parse_complex(v, &at())?);
            return Ok(());
        }
        let a = v.as_array().ok_or_else(|| Error::Parse(format!("{}: expected an array", at())))?;
        if a.len() != dims[0] {
            bail!(Parse, "{}: expected length {}, got {}", at(), dims[0], a.len());
        }
        for (k, x) in a.iter().enumerate() {
            path.push(k);
            walk(x, &dims[1..], path, out)?;
            path.pop();
        }
        Ok(())
    }
    walk(v, &dims, &mut Vec::new(), &mut entries)?;
    Tensor::new(TensorFormat::new(dims[0], dims[1..].to_vec())?, entries)
}

/// Canonical sparse encoding: nonzero entries in row-major order.
pub fn tensor_to_json(t: &Tensor) -> Value {
    let f = t.format();
    let mut dims = vec![f.n0()];
    dims.extend_from_slice(f.dims());
    let entries: Vec<Value> = t
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|(off, z)| json!({ "idx": f.unravel(off), "re": num(z.re), "im": num(z.im) }))
        .collect();
    json!({ "dims": dims, "entries": entries })
}

pub fn load_tensor(path: &Path) -> Result<Tensor> {
    tensor_from_json(&read_json(path)?)
}

pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_json(path, &tensor_to_json(t))
}

/// `{"parts": [["2/3", "1/3"], …]}`. Fraction strings are exact; decimal
/// strings or numbers are rationalized with denominators up to `10^6`.
pub fn spectrum_from_json(v: &Value) -> Result<TargetSpectrum> {
    let parts = as_array(field(v, "parts", "spectrum")?, "spectrum.parts")?;
    let mut out = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let at = format!("spectrum.parts[{i}]");
        let items = as_array(part, &at)?;
        let exact: Option<Vec<Rational>> = items
            .iter()
            .map(|x| x.as_str().filter(|s| !s.contains('.') && !s.contains('e')).and_then(|s| parse_fraction(s).ok()))
            .collect();
        let values = match exact {
            Some(v) => v,
            None => {
                let floats = items
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let at = format!("{at}[{j}]");
                        match x {
                            Value::String(s) => parse_fraction(s)
                                .map(|q| crate::spectrum::to_f64(&q))
                                .or_else(|_| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{at}: bad number {s:?}")))),
                            _ => as_f64(x, &at),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rationalize(&floats, DEFAULT_DENOMINATOR_CAP)?
            }
        };
        out.push(values);
    }
    TargetSpectrum::new(out)
}

pub fn spectrum_to_json(p: &TargetSpectrum) -> Value {
    let parts: Vec<Vec<String>> = p
        .parts()
        .iter()
        .map(|part| part.iter().map(|q| format!("{}/{}", q.numer(), q.denom())).collect())
        .collect();
    json!({ "parts": parts })
}

pub fn load_spectrum(path: &Path) -> Result<TargetSpectrum> {
    spectrum_from_json(&read_json(path)?)
}

pub fn save_spectrum(path: &Path, p: &TargetSpectrum) -> Result<()> {
    write_json(path, &spectrum_to_json(p))
}

/// `{"weight": [[…]], "indexSeq": […], "perms": [[…]]}`, all 0-based.
pub fn hwv_spec_from_json(v: &Value) -> Result<HwvSpec> {
    let weight = as_array(field(v, "weight", "hwv")?, "hwv.weight")?
        .iter()
        .enumerate()
        .map(|(k, w)| Partition::new(usize_list(w, &format!("hwv.weight[{k}]"))?))
        .collect::<Result<Vec<_>>>()?;
    let index_seq = usize_list(field(v, "indexSeq", "hwv")?, "hwv.indexSeq")?;
    let perms = as_array(field(v, "perms", "hwv")?, "hwv.perms")?
        .iter()
        .enumerate()
        .map(|(k, p)| usize_list(p, &format!("hwv.perms[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    HwvSpec::new(weight, index_seq, perms)
}

pub fn hwv_spec_to_json(s: &HwvSpec) -> Value {
    let weight: Vec<&[usize]> = s.weight.iter().map(Partition::parts).collect();
    json!({ "weight": weight, "indexSeq": s.index_seq, "perms": s.perms })
}

pub fn load_hwv_spec(path: &Path) -> Result<HwvSpec> {
    hwv_spec_from_json(&read_json(path)?)
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value, at: &str) -> Result<CMatrix> {
    let rows = as_array(v, at)?;
    let n = rows.len();
    let m = rows.first().map(|r| r.as_array().map_or(0, Vec::len)).unwrap_or(0);
    let mut out = CMatrix::zeros(n, m);
    for (i, r) in rows.iter().enumerate() {
        let r = as_array(r, &format!("{at}[{i}]"))?;
        if r.len() != m {
            bail!(Parse, "{at}[{i}]: expected {m} columns, got {}", r.len());
        }
        for (j, x) in r.iter().enumerate() {
            out[(i, j)] = parse_complex(x, &format!("{at}[{i}][{j}]"))?;
        }
    }
    Ok(out)
}

pub fn group_to_json(g: &GroupTuple) -> Value {
    Value::Array(g.factors().iter().map(matrix_to_json).collect())
}

pub fn report_to_json(r: &ScalingReport) -> Value {
    let trace: Vec<Value> = r
        .trace
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let mut m = Map::new();
            m.insert("i".into(), json!(k));
            m.insert("index".into(), json!(rec.index));
            m.insert("eps".into(), Value::Array(rec.distances.iter().map(|&e| num(e)).collect()));
            m.insert("norm".into(), num(rec.norm));
            if let Some(c) = rec.capacity {
                m.insert("capacity".into(), num(c));
            }
            Value::Object(m)
        })
        .collect();
    json!({
        "verdict": r.verdict.as_str(),
        "reason": r.reason,
        "iterations": r.iterations,
        "budgetT": r.budget_t,
        "finalDistances": r.final_distances.iter().map(|&e| num(e)).collect::<Vec<_>>(),
        "trace": trace,
        "group": group_to_json(&r.group),
        "warnings": r.warnings,
    })
}

pub fn verdict_to_json(v: &MembershipVerdict) -> Value {
    let runs: Vec<Value> = v.runs.iter().map(|(s, r)| json!({ "seed": s, "verdict": r.as_str() })).collect();
    json!({
        "answer": v.answer.as_str(),
        "epsilon": num(v.epsilon),
        "witness": v.witness.as_ref().map(group_to_json),
        "sample": v.sample.as_ref().map(tensor_to_json),
        "runs": runs,
        "evidence": report_to_json(&v.evidence),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(3.0), json!(3));
        assert_eq!(num(1.0 / 3.0), json!(0.333333333333));
        assert_eq!(num(2.0f64.sqrt() * 1e-7), json!(1.41421356237e-7));
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let sparse = json!({"dims": [1, 2, 2], "entries": [
            {"idx": [0, 0, 0], "re": 1, "im": 0},
            {"idx": [0, 1, 1], "re": 2, "im": -1}
        ]});
        let dense = json!([[[1, 0], [0, {"re": 2, "im": -1}]]]);
        assert_eq!(tensor_from_json(&sparse).unwrap(), tensor_from_json(&dense).unwrap());
    }

    #[test]
    fn tensor_errors_are_positional() {
        let bad = json!({"dims": [1, 2], "entries": [{"idx": [0, 5], "re": 1}]});
        let msg = tensor_from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("entries[0].idx[1]"), "{msg}");
        let ragged = json!([[1, 2], [3]]);
        let msg = tensor_from_json(&ragged).unwrap_err().to_string();
        assert!(msg.contains("tensor[1]"), "{msg}");
        let dup = json!({"dims": [1, 1], "entries": [{"idx": [0, 0], "re": 1}, {"idx": [0, 0], "re": 1}]});
        assert!(tensor_from_json(&dup).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let v = json!({"dims": [2, 2], "entries": [
            {"idx": [0, 1], "re": 3, "im": 0},
            {"idx": [1, 0], "re": -1, "im": 2}
        ]});
        let text = to_string(&v);
        let t = tensor_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(to_string(&tensor_to_json(&t)), text);
    }

    #[test]
    fn fractions_normalize() {
        let p = spectrum_from_json(&json!({"parts": [["2/6", "4/6"]]}));
        // nonincreasing is required
        assert!(p.is_err());
        let p = spectrum_from_json(&json!({"parts": [["4/6", "2/6"]]})).unwrap();
        assert_eq!(p.part(1)[1], Rational::new(1, 3));
        assert_eq!(p.lcm(), 3);
        assert_eq!(spectrum_to_json(&p), json!({"parts": [["2/3", "1/3"]]}));
        let d = spectrum_from_json(&json!({"parts": [[0.75, 0.25]]})).unwrap();
        assert_eq!(d.part(1)[0], Rational::new(3, 4));
    }

    #[test]
    fn hwv_spec_round_trip() {
        let v = json!({"weight": [[1, 1], [2]], "indexSeq": [0, 1], "perms": [[1, 0], [0, 1]]});
        let s = hwv_spec_from_json(&v).unwrap();
        assert_eq!(hwv_spec_to_json(&s), v);
        assert!(hwv_spec_from_json(&json!({"weight": [[1]], "indexSeq": [0, 0], "perms": [[0, 1]]})).is_err());
    }
}
