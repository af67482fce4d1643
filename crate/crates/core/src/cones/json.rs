//! Certificate files: `{"schema", "cone", "order", "matrix_sha", "scalars", "data"}`.
//! Rationals are strings `p/q`, floats are JSON numbers.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::{AnyCertificate, Certificate, GramBlock};
use crate::error::{Error, Result};
use crate::polyarena::Exponent;
use crate::rational::{format_rational, parse_rational, Rational, Scalar};
use crate::symlin::{RatMat, SymMat};

pub const SCHEMA: &str = "copkit/1";

/// Hex SHA-256 of the matrix's canonical text form.
pub fn matrix_sha(m: &RatMat) -> String {
    hex::encode(Sha256::digest(m.canonical_text().as_bytes()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateFile {
    pub matrix_sha: String,
    pub certificate: AnyCertificate,
}

trait JsonScalar: Scalar {
    const KIND: &'static str;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl JsonScalar for Rational {
    const KIND: &'static str = "rational";

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap_or(0).into())),
            _ => Err(Error::Parse(format!("expected a rational string, got {v}"))),
        }
    }
}

impl JsonScalar for f64 {
    const KIND: &'static str = "float";

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64().ok_or_else(|| Error::Parse(format!("expected a number, got {v}")))
    }
}

fn exp_json(e: &Exponent) -> Value {
    json!(e.entries())
}

fn mat_json<T: JsonScalar>(m: &SymMat<T>) -> Value {
    Value::Array(m.rows().iter().map(|r| Value::Array(r.iter().map(T::to_json).collect())).collect())
}

fn block_json<T: JsonScalar>(b: &GramBlock<T>) -> Value {
    json!({"basis": b.basis.iter().map(exp_json).collect::<Vec<_>>(), "gram": mat_json(&b.gram)})
}

fn pairs_json<T: JsonScalar>(l: &[(Exponent, T)]) -> Value {
    Value::Array(l.iter().map(|(e, v)| json!([exp_json(e), v.to_json()])).collect())
}

fn data_json<T: JsonScalar>(c: &Certificate<T>) -> Value {
    match c {
        Certificate::Polya { coefficients, .. } => json!({"coefficients": pairs_json(coefficients)}),
        Certificate::Spn { p, n } => json!({"P": mat_json(p), "N": mat_json(n)}),
        Certificate::K1 { blocks } => json!({"blocks": blocks.iter().map(mat_json).collect::<Vec<_>>()}),
        Certificate::Sos { blocks } => json!({"blocks": blocks.iter().map(block_json).collect::<Vec<_>>()}),
        Certificate::Qr { sigma, c, .. } => json!({
            "sigma": sigma.iter().map(|(e, s)| json!({"beta": exp_json(e), "gram": mat_json(s)})).collect::<Vec<_>>(),
            "c": pairs_json(c),
        }),
        Certificate::Lasserre { sigma0, sigma, q, .. } => json!({
            "sigma0": block_json(sigma0),
            "sigma": sigma.iter().map(block_json).collect::<Vec<_>>(),
            "q": pairs_json(q),
        }),
    }
}

pub fn certificate_to_json(m: &RatMat, c: &AnyCertificate) -> Value {
    let (data, kind) = match c {
        AnyCertificate::Exact(c) => (data_json(c), Rational::KIND),
        AnyCertificate::Float(c) => (data_json(c), f64::KIND),
    };
    json!({
        "schema": SCHEMA,
        "cone": c.cone(),
        "order": c.order(),
        "matrix_sha": matrix_sha(m),
        "scalars": kind,
        "data": data,
    })
}

fn field<'a>(o: &'a Map<String, Value>, k: &str) -> Result<&'a Value> {
    o.get(k).ok_or_else(|| Error::Parse(format!("missing field \"{k}\"")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Parse(format!("{what} must be an array")))
}

fn exp_from(v: &Value) -> Result<Exponent> {
    let ent = array(v, "exponent")?
        .iter()
        .map(|x| x.as_u64().and_then(|u| u32::try_from(u).ok()).ok_or_else(|| Error::Parse("bad exponent entry".into())))
        .collect::<Result<Vec<u32>>>()?;
    Ok(Exponent::new(ent))
}

fn mat_from<T: JsonScalar>(v: &Value) -> Result<SymMat<T>> {
    let rows = array(v, "matrix")?
        .iter()
        .map(|r| array(r, "matrix row")?.iter().map(T::from_json).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?;
    SymMat::from_rows(&rows)
}

fn block_from<T: JsonScalar>(v: &Value) -> Result<GramBlock<T>> {
    let o = v.as_object().ok_or_else(|| Error::Parse("Gram block must be an object".into()))?;
    let basis = array(field(o, "basis")?, "basis")?.iter().map(exp_from).collect::<Result<Vec<_>>>()?;
    let gram = mat_from(field(o, "gram")?)?;
    if gram.n() != basis.len() {
        return Err(Error::Parse("Gram block size differs from its basis".into()));
    }
    Ok(GramBlock { basis, gram })
}

fn pairs_from<T: JsonScalar>(v: &Value) -> Result<Vec<(Exponent, T)>> {
    array(v, "coefficient list")?
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([e, c]) => Ok((exp_from(e)?, T::from_json(c)?)),
            _ => Err(Error::Parse("coefficient entries are [exponent, value] pairs".into())),
        })
        .collect()
}

fn data_from<T: JsonScalar>(cone: &str, order: u32, d: &Map<String, Value>) -> Result<Certificate<T>> {
    let list = |k: &str| -> Result<&Vec<Value>> { array(field(d, k)?, k) };
    Ok(match cone {
        "polya" => Certificate::Polya { order, coefficients: pairs_from(field(d, "coefficients")?)? },
        "spn" => Certificate::Spn { p: mat_from(field(d, "P")?)?, n: mat_from(field(d, "N")?)? },
        "k1" => Certificate::K1 { blocks: list("blocks")?.iter().map(mat_from).collect::<Result<_>>()? },
        "sos" => Certificate::Sos { blocks: list("blocks")?.iter().map(block_from).collect::<Result<_>>()? },
        "qr" => Certificate::Qr {
            order,
            sigma: list("sigma")?
                .iter()
                .map(|s| {
                    let o = s.as_object().ok_or_else(|| Error::Parse("sigma entries are objects".into()))?;
                    Ok((exp_from(field(o, "beta")?)?, mat_from(field(o, "gram")?)?))
                })
                .collect::<Result<_>>()?,
            c: pairs_from(field(d, "c")?)?,
        },
        "lasserre" => Certificate::Lasserre {
            order,
            sigma0: block_from(field(d, "sigma0")?)?,
            sigma: list("sigma")?.iter().map(block_from).collect::<Result<_>>()?,
            q: pairs_from(field(d, "q")?)?,
        },
        other => return Err(Error::Parse(format!("unknown cone \"{other}\""))),
    })
}

/// Parses a certificate file; any schema violation is a `Parse` error.
pub fn certificate_from_json(v: &Value) -> Result<CertificateFile> {
    let o = v.as_object().ok_or_else(|| Error::Parse("certificate must be a JSON object".into()))?;
    let schema = field(o, "schema")?.as_str().unwrap_or_default();
    if schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema \"{schema}\"")));
    }
    let cone = field(o, "cone")?.as_str().ok_or_else(|| Error::Parse("cone must be a string".into()))?;
    let order = field(o, "order")?
        .as_u64()
        .and_then(|u| u32::try_from(u).ok())
        .ok_or_else(|| Error::Parse("order must be a natural number".into()))?;
    let matrix_sha = field(o, "matrix_sha")?.as_str().ok_or_else(|| Error::Parse("matrix_sha must be a string".into()))?;
    let data = field(o, "data")?.as_object().ok_or_else(|| Error::Parse("data must be an object".into()))?;
    let certificate = match field(o, "scalars")?.as_str() {
        Some("rational") => AnyCertificate::Exact(data_from(cone, order, data)?),
        Some("float") => AnyCertificate::Float(data_from(cone, order, data)?),
        _ => return Err(Error::Parse("scalars must be \"rational\" or \"float\"".into())),
    };
    if certificate.order() != order {
        return Err(Error::Parse(format!("order {order} disagrees with the certificate data")));
    }
    Ok(CertificateFile { matrix_sha: matrix_sha.to_string(), certificate })
}
