//! Instance text and JSON formats.
//!
//! Text layout, one instance per file:
//!
//! ```text
//! maxcsp k=2 sigma=2 vars=4 constraints=12
//! pred dicut 0010
//! c dicut 0 1
//! c dicut 1 0
//! ```
//!
//! Truth-table bitstrings list tuples in lexicographic order with the first
//! scope coordinate most significant. The JSON mirror carries the same fields;
//! both parsers round-trip bit-exactly.

use super::{Constraint, CspError, Instance, PredicateFamily};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub fn render_instance(instance: &Instance) -> String {
    let fam = instance.family();
    let mut out = String::new();
    out.push_str(&format!(
        "maxcsp k={} sigma={} vars={} constraints={}\n",
        fam.arity(),
        fam.alphabet_size(),
        instance.num_vars(),
        instance.num_constraints()
    ));
    for p in 0..fam.num_predicates() {
        let bits: String =
            fam.table(p).iter().map(|&b| if b { '1' } else { '0' }).collect();
        out.push_str(&format!("pred {} {}\n", fam.name(p), bits));
    }
    for c in instance.constraints() {
        out.push_str(&format!(
            "c {} {}\n",
            fam.name(c.predicate),
            c.scope.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        ));
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance, CspError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_instance_json(text);
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines.next().ok_or_else(|| CspError::Parse("empty input".into()))?;
    let mut k = None;
    let mut sigma = None;
    let mut vars = None;
    let mut m = None;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("maxcsp") {
        return Err(CspError::Parse("header must start with 'maxcsp'".into()));
    }
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| CspError::Parse(format!("bad header field {field:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| CspError::Parse(format!("bad header value {field:?}")))?;
        match key {
            "k" => k = Some(value),
            "sigma" => sigma = Some(value),
            "vars" => vars = Some(value),
            "constraints" => m = Some(value),
            _ => return Err(CspError::Parse(format!("unknown header key {key:?}"))),
        }
    }
    let (k, sigma, vars, m) = match (k, sigma, vars, m) {
        (Some(k), Some(s), Some(v), Some(m)) => (k, s, v, m),
        _ => return Err(CspError::Parse("header must set k, sigma, vars, constraints".into())),
    };

    let mut names = Vec::new();
    let mut tables = Vec::new();
    let mut constraints = Vec::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("pred") => {
                let name = parts
                    .next()
                    .ok_or_else(|| CspError::Parse("pred line missing name".into()))?;
                let bits = parts
                    .next()
                    .ok_or_else(|| CspError::Parse("pred line missing bitstring".into()))?;
                let table: Result<Vec<bool>, CspError> = bits
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(CspError::Parse(format!("bad bit {c:?} in predicate {name}"))),
                    })
                    .collect();
                names.push(name.to_string());
                tables.push(table?);
            }
            Some("c") => {
                let name = parts
                    .next()
                    .ok_or_else(|| CspError::Parse("constraint line missing predicate".into()))?;
                let predicate = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| CspError::Parse(format!("unknown predicate {name:?}")))?;
                let scope: Result<Vec<usize>, CspError> = parts
                    .map(|p| {
                        p.parse::<usize>()
                            .map_err(|_| CspError::Parse(format!("bad variable id {p:?}")))
                    })
                    .collect();
                constraints.push(Constraint { scope: scope?, predicate });
            }
            Some(other) => {
                return Err(CspError::Parse(format!("unknown line kind {other:?}")));
            }
            None => {}
        }
    }
    if constraints.len() != m {
        return Err(CspError::Parse(format!(
            "header declares {m} constraints, found {}",
            constraints.len()
        )));
    }
    let family = PredicateFamily::new(k, sigma, tables, Some(names))?;
    Instance::new(vars, Arc::new(family), constraints)
}

#[derive(Serialize, Deserialize)]
struct JsonPredicate {
    name: String,
    table: String,
}

#[derive(Serialize, Deserialize)]
struct JsonConstraint {
    pred: String,
    scope: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct JsonInstance {
    k: usize,
    sigma: usize,
    vars: usize,
    predicates: Vec<JsonPredicate>,
    constraints: Vec<JsonConstraint>,
}

pub fn render_instance_json(instance: &Instance) -> String {
    let fam = instance.family();
    let doc = JsonInstance {
        k: fam.arity(),
        sigma: fam.alphabet_size(),
        vars: instance.num_vars(),
        predicates: (0..fam.num_predicates())
            .map(|p| JsonPredicate {
                name: fam.name(p).to_string(),
                table: fam.table(p).iter().map(|&b| if b { '1' } else { '0' }).collect(),
            })
            .collect(),
        constraints: instance
            .constraints()
            .iter()
            .map(|c| JsonConstraint { pred: fam.name(c.predicate).to_string(), scope: c.scope.clone() })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn parse_instance_json(text: &str) -> Result<Instance, CspError> {
    let doc: JsonInstance =
        serde_json::from_str(text).map_err(|e| CspError::Parse(e.to_string()))?;
    let mut names = Vec::new();
    let mut tables = Vec::new();
    for p in &doc.predicates {
        let table: Result<Vec<bool>, CspError> = p
            .table
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CspError::Parse(format!("bad bit {c:?} in predicate {}", p.name))),
            })
            .collect();
        names.push(p.name.clone());
        tables.push(table?);
    }
    let mut constraints = Vec::new();
    for c in &doc.constraints {
        let predicate = names
            .iter()
            .position(|n| *n == c.pred)
            .ok_or_else(|| CspError::Parse(format!("unknown predicate {:?}", c.pred)))?;
        constraints.push(Constraint { scope: c.scope.clone(), predicate });
    }
    let family = PredicateFamily::new(doc.k, doc.sigma, tables, Some(names))?;
    Instance::new(doc.vars, Arc::new(family), constraints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let text = render_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(render_instance(&back), text);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let inst = Instance::e2sat_all_clauses(3);
        let json = render_instance_json(&inst);
        let back = parse_instance(&json).unwrap();
        assert_eq!(back, inst);
        assert_eq!(render_instance_json(&back), json);
    }

    #[test]
    fn dicut_bitstring_is_0010() {
        let inst = Instance::dicut_complete_bidirectional(2);
        let text = render_instance(&inst);
        assert!(text.contains("pred dicut 0010"), "{text}");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_instance("").is_err());
        assert!(parse_instance("maxcsp k=2 sigma=2 vars=2 constraints=1\nc nosuch 0 1\n").is_err());
        assert!(parse_instance(
            "maxcsp k=2 sigma=2 vars=1 constraints=1\npred p 0010\nc p 0 0\n"
        )
        .is_err());
    }
}
