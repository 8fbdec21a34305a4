//! The JSON system document.
//!
//! ```json
//! {
//!   "n": 2, "q": 1, "degree": 1,
//!   "matrix": [[[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [1], "coeff": 1}]],
//!              [[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [0], "coeff": 1}]]],
//!   "name": "demo"
//! }
//! ```
//!
//! Coefficients are JSON integers or decimal integer strings (for values
//! beyond 64 bits). Optional fields: `name`, `seed`, `degreeReading`
//! (`"joint"` bounds `tExp + sum(pExp)`, `"time"` bounds `tExp` only) and
//! `divisionProbes`, a list of extra membership questions for `verify`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::derivation::{DegreeReading, LinSys};
use crate::error::{Error, Result};
use crate::polyring::{MPoly, Ratio, T};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialRecord {
    pub t_exp: u32,
    pub p_exp: Vec<u32>,
    pub coeff: BigInt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeExpectation {
    Member,
    NonMember,
}

impl ProbeExpectation {
    fn as_str(self) -> &'static str {
        match self {
            ProbeExpectation::Member => "member",
            ProbeExpectation::NonMember => "nonMember",
        }
    }
}

/// "Is `target` in the ideal of `basis` with cofactors of degree at most
/// `cap`?" Polynomials are written in the parameter names (`eps` when
/// `q = 1`, `p1, p2, ...` otherwise).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionProbe {
    pub target: String,
    pub basis: Vec<String>,
    pub cap: u32,
    pub expect: ProbeExpectation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDoc {
    pub n: usize,
    pub q: usize,
    pub degree: u32,
    /// `matrix[i][j]` lists the monomials of entry `(i, j)`.
    pub matrix: Vec<Vec<Vec<MonomialRecord>>>,
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub degree_reading: DegreeReading,
    pub division_probes: Vec<DivisionProbe>,
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, loc: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(loc, format!("missing field {key:?}")))
}

fn as_object<'a>(v: &'a Value, loc: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::parse(loc, "expected an object"))
}

fn as_array<'a>(v: &'a Value, loc: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::parse(loc, "expected an array"))
}

fn as_u64(v: &Value, loc: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| Error::parse(loc, format!("expected a nonnegative integer, got {v}")))
}

fn as_u32(v: &Value, loc: &str) -> Result<u32> {
    as_u64(v, loc)?
        .to_u32()
        .ok_or_else(|| Error::parse(loc, "value out of range"))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], loc: &str) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            let at = if loc == "$" { key.clone() } else { format!("{loc}.{key}") };
            return Err(Error::parse(at, "unknown field"));
        }
    }
    Ok(())
}

fn parse_coeff(v: &Value, loc: &str) -> Result<BigInt> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = num.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(Error::parse(
                    loc,
                    format!("non-integer coefficient {num} (large integers go in strings)"),
                ))
            }
        }
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| Error::parse(loc, format!("non-integer coefficient {s:?}"))),
        other => Err(Error::parse(loc, format!("expected an integer, got {other}"))),
    }
}

fn coeff_value(c: &BigInt) -> Value {
    match c.to_i64() {
        Some(i) => json!(i),
        None => json!(c.to_string()),
    }
}

fn parameter_poly(s: &str, nvars: usize, loc: &str) -> Result<MPoly> {
    let p = MPoly::parse(s, nvars).map_err(|e| Error::parse(loc, e.to_string()))?;
    if p.involves(T) {
        return Err(Error::parse(loc, "probe polynomials must not involve t"));
    }
    Ok(p)
}

impl SystemDoc {
    pub fn parse(bytes: &[u8]) -> Result<SystemDoc> {
        let root: Value = serde_json::from_slice(bytes).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        let obj = as_object(&root, "$")?;
        reject_unknown(
            obj,
            &["n", "q", "degree", "matrix", "name", "seed", "degreeReading", "divisionProbes"],
            "$",
        )?;
        let n = as_u64(field(obj, "n", "$")?, "n")? as usize;
        let q = as_u64(field(obj, "q", "$")?, "q")? as usize;
        let degree = as_u32(field(obj, "degree", "$")?, "degree")?;
        if n == 0 {
            return Err(Error::parse("n", "dimension must be at least 1"));
        }
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(Error::parse("name", "expected a string")),
        };
        let seed = match obj.get("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(as_u64(v, "seed")?),
        };
        let degree_reading = match obj.get("degreeReading") {
            None => DegreeReading::Joint,
            Some(Value::String(s)) if s == "joint" => DegreeReading::Joint,
            Some(Value::String(s)) if s == "time" => DegreeReading::Time,
            Some(v) => {
                return Err(Error::parse(
                    "degreeReading",
                    format!("expected \"joint\" or \"time\", got {v}"),
                ))
            }
        };

        let rows = as_array(field(obj, "matrix", "$")?, "matrix")?;
        if rows.len() != n {
            return Err(Error::parse("matrix", format!("expected {n} rows, got {}", rows.len())));
        }
        let mut matrix = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let loc = format!("matrix[{i}]");
            let cells = as_array(row, &loc)?;
            if cells.len() != n {
                return Err(Error::parse(loc, format!("expected {n} entries, got {}", cells.len())));
            }
            let mut out_row = Vec::with_capacity(n);
            for (j, cell) in cells.iter().enumerate() {
                let loc = format!("matrix[{i}][{j}]");
                let mut seen = BTreeSet::new();
                let mut entry = Vec::new();
                for (m, rec) in as_array(cell, &loc)?.iter().enumerate() {
                    let loc = format!("matrix[{i}][{j}][{m}]");
                    let r = as_object(rec, &loc)?;
                    reject_unknown(r, &["tExp", "pExp", "coeff"], &loc)?;
                    let t_exp = as_u32(field(r, "tExp", &loc)?, &format!("{loc}.tExp"))?;
                    let p_loc = format!("{loc}.pExp");
                    let p_exp = as_array(field(r, "pExp", &loc)?, &p_loc)?
                        .iter()
                        .enumerate()
                        .map(|(e, v)| as_u32(v, &format!("{p_loc}[{e}]")))
                        .collect::<Result<Vec<_>>>()?;
                    if p_exp.len() != q {
                        return Err(Error::parse(
                            p_loc,
                            format!("expected {q} parameter exponents, got {}", p_exp.len()),
                        ));
                    }
                    let coeff = parse_coeff(field(r, "coeff", &loc)?, &format!("{loc}.coeff"))?;
                    let deg = match degree_reading {
                        DegreeReading::Joint => t_exp + p_exp.iter().sum::<u32>(),
                        DegreeReading::Time => t_exp,
                    };
                    if deg > degree {
                        return Err(Error::parse(
                            loc,
                            format!("monomial degree {deg} exceeds declared degree {degree}"),
                        ));
                    }
                    if !seen.insert((t_exp, p_exp.clone())) {
                        return Err(Error::parse(loc, "duplicate monomial"));
                    }
                    entry.push(MonomialRecord { t_exp, p_exp, coeff });
                }
                out_row.push(entry);
            }
            matrix.push(out_row);
        }

        let mut division_probes = Vec::new();
        if let Some(v) = obj.get("divisionProbes") {
            for (i, probe) in as_array(v, "divisionProbes")?.iter().enumerate() {
                let loc = format!("divisionProbes[{i}]");
                let p = as_object(probe, &loc)?;
                reject_unknown(p, &["target", "basis", "cap", "expect"], &loc)?;
                let string = |v: &Value, at: String| -> Result<String> {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::parse(at, "expected a string"))
                };
                let target = string(field(p, "target", &loc)?, format!("{loc}.target"))?;
                parameter_poly(&target, q + 1, &format!("{loc}.target"))?;
                let basis = as_array(field(p, "basis", &loc)?, &format!("{loc}.basis"))?
                    .iter()
                    .enumerate()
                    .map(|(b, v)| {
                        let at = format!("{loc}.basis[{b}]");
                        let s = string(v, at.clone())?;
                        parameter_poly(&s, q + 1, &at)?;
                        Ok(s)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if basis.is_empty() {
                    return Err(Error::parse(format!("{loc}.basis"), "empty basis"));
                }
                let cap = as_u32(field(p, "cap", &loc)?, &format!("{loc}.cap"))?;
                let expect = match field(p, "expect", &loc)?.as_str() {
                    Some("member") => ProbeExpectation::Member,
                    Some("nonMember") => ProbeExpectation::NonMember,
                    _ => {
                        return Err(Error::parse(
                            format!("{loc}.expect"),
                            "expected \"member\" or \"nonMember\"",
                        ))
                    }
                };
                division_probes.push(DivisionProbe {
                    target,
                    basis,
                    cap,
                    expect,
                });
            }
        }

        Ok(SystemDoc {
            n,
            q,
            degree,
            matrix,
            name,
            seed,
            degree_reading,
            division_probes,
        })
    }

    pub fn to_value(&self) -> Value {
        let matrix: Vec<Value> = self
            .matrix
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|entry| {
                            Value::Array(
                                entry
                                    .iter()
                                    .map(|m| json!({"tExp": m.t_exp, "pExp": m.p_exp, "coeff": coeff_value(&m.coeff)}))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect();
        let mut obj = Map::new();
        obj.insert("n".into(), json!(self.n));
        obj.insert("q".into(), json!(self.q));
        obj.insert("degree".into(), json!(self.degree));
        obj.insert("matrix".into(), Value::Array(matrix));
        if let Some(name) = &self.name {
            obj.insert("name".into(), json!(name));
        }
        if let Some(seed) = self.seed {
            obj.insert("seed".into(), json!(seed));
        }
        if self.degree_reading == DegreeReading::Time {
            obj.insert("degreeReading".into(), json!("time"));
        }
        if !self.division_probes.is_empty() {
            let probes: Vec<Value> = self
                .division_probes
                .iter()
                .map(|p| {
                    json!({"target": p.target, "basis": p.basis, "cap": p.cap, "expect": p.expect.as_str()})
                })
                .collect();
            obj.insert("divisionProbes".into(), Value::Array(probes));
        }
        Value::Object(obj)
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("document serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact rendering, hex encoded.
    pub fn fingerprint(&self) -> String {
        let compact = serde_json::to_string(&self.to_value()).expect("document serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    pub fn to_linsys(&self) -> Result<LinSys> {
        let nvars = self.q + 1;
        let matrix = self
            .matrix
            .iter()
            .map(|row| {
                row.iter()
                    .map(|entry| {
                        MPoly::from_terms(
                            nvars,
                            entry.iter().map(|m| {
                                let mut exps = Vec::with_capacity(nvars);
                                exps.push(m.t_exp);
                                exps.extend(&m.p_exp);
                                (exps, Ratio::from_integer(m.coeff.clone()))
                            }),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        LinSys::new(self.q, self.degree, self.degree_reading, matrix)
    }

    /// The document of an existing system (terms in ascending order).
    pub fn from_linsys(sys: &LinSys, name: Option<String>) -> SystemDoc {
        let matrix = sys
            .matrix()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| {
                        p.terms()
                            .map(|(m, c)| MonomialRecord {
                                t_exp: m.exps()[T],
                                p_exp: m.exps()[1..].to_vec(),
                                coeff: c.to_integer(),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SystemDoc {
            n: sys.n(),
            q: sys.q(),
            degree: sys.declared_degree(),
            matrix,
            name,
            seed: None,
            degree_reading: sys.reading(),
            division_probes: Vec::new(),
        }
    }

    /// Parsed probe polynomials: `(target, basis)` per probe.
    pub fn probe_polys(&self) -> Result<Vec<(MPoly, Vec<MPoly>)>> {
        let nvars = self.q + 1;
        self.division_probes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let loc = format!("divisionProbes[{i}]");
                let target = parameter_poly(&p.target, nvars, &loc)?;
                let basis = p
                    .basis
                    .iter()
                    .map(|b| parameter_poly(b, nvars, &loc))
                    .collect::<Result<Vec<_>>>()?;
                Ok((target, basis))
            })
            .collect()
    }

    /// Whether every coefficient record is zero.
    pub fn is_zero_system(&self) -> bool {
        self.matrix.iter().flatten().flatten().all(|m| m.coeff.is_zero())
    }
}

/// Parses a document and builds its system.
pub fn parse_system(bytes: &[u8]) -> Result<(SystemDoc, LinSys)> {
    let doc = SystemDoc::parse(bytes)?;
    let sys = doc.to_linsys()?;
    Ok((doc, sys))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"{
        "n": 2, "q": 1, "degree": 1, "name": "demo",
        "matrix": [
            [[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [1], "coeff": 1}]],
            [[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [0], "coeff": "1"}]]
        ]
    }"#;

    #[test]
    fn demo_document() {
        let (doc, sys) = parse_system(DEMO.as_bytes()).unwrap();
        assert_eq!(doc.name.as_deref(), Some("demo"));
        assert_eq!(sys.entry(0, 1), &MPoly::parse("eps", 2).unwrap());
        assert_eq!(sys.entry(1, 1), &MPoly::one(2));
        assert_eq!(sys.max_coeff(), &BigInt::from(1));
    }

    #[test]
    fn empty_entries_make_the_zero_system() {
        let (doc, sys) = parse_system(br#"{"n": 2, "q": 1, "degree": 0, "matrix": [[[], []], [[], []]]}"#).unwrap();
        assert!(doc.is_zero_system());
        assert!(sys.max_coeff().is_zero());
        assert_eq!(sys.max_coeff_for_bounds(), BigInt::from(1));
    }

    #[test]
    fn rejects_fractional_coefficients() {
        for coeff in ["1.5", "\"3/2\""] {
            let text = DEMO.replace("\"coeff\": \"1\"", &format!("\"coeff\": {coeff}"));
            match SystemDoc::parse(text.as_bytes()) {
                Err(Error::Parse { location, .. }) => assert_eq!(location, "matrix[1][1][0].coeff"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_degree_violations_and_shape_errors() {
        let text = DEMO.replace("\"pExp\": [1]", "\"pExp\": [2]");
        assert!(matches!(SystemDoc::parse(text.as_bytes()), Err(Error::Parse { location, .. }) if location == "matrix[0][1][0]"));
        let text = DEMO.replace("\"pExp\": [1]", "\"pExp\": [1, 0]");
        assert!(matches!(SystemDoc::parse(text.as_bytes()), Err(Error::Parse { location, .. }) if location == "matrix[0][1][0].pExp"));
        assert!(matches!(SystemDoc::parse(b"{\"n\": 1"), Err(Error::Parse { .. })));
        let text = DEMO.replace("\"name\"", "\"nmae\"");
        assert!(matches!(SystemDoc::parse(text.as_bytes()), Err(Error::Parse { location, .. }) if location == "nmae"));
    }

    #[test]
    fn time_reading_allows_parameter_degree() {
        let text = DEMO
            .replace("\"pExp\": [1]", "\"pExp\": [3]")
            .replace("\"name\": \"demo\"", "\"degreeReading\": \"time\"");
        let (_, sys) = parse_system(text.as_bytes()).unwrap();
        assert_eq!(sys.joint_degree_bound(), 3);
    }

    #[test]
    fn render_round_trip_and_big_coefficients() {
        let text = DEMO.replace("\"coeff\": \"1\"", "\"coeff\": \"-123456789012345678901234567890\"");
        let doc = SystemDoc::parse(text.as_bytes()).unwrap();
        let again = SystemDoc::parse(doc.render().as_bytes()).unwrap();
        assert_eq!(doc, again);
        assert_eq!(doc.fingerprint(), again.fingerprint());
        let sys = doc.to_linsys().unwrap();
        assert_eq!(SystemDoc::from_linsys(&sys, doc.name.clone()), doc);
    }

    #[test]
    fn probes_parse() {
        let text = r#"{"n": 1, "q": 2, "degree": 0, "matrix": [[[]]],
            "divisionProbes": [{"target": "p1*p2", "basis": ["p1^2", "p2^2"], "cap": 6, "expect": "nonMember"}]}"#;
        let doc = SystemDoc::parse(text.as_bytes()).unwrap();
        assert_eq!(doc.division_probes[0].expect, ProbeExpectation::NonMember);
        let polys = doc.probe_polys().unwrap();
        assert_eq!(polys[0].1.len(), 2);
        let bad = text.replace("p1*p2", "t*p1");
        assert!(matches!(SystemDoc::parse(bad.as_bytes()), Err(Error::Parse { location, .. }) if location == "divisionProbes[0].target"));
    }
}
