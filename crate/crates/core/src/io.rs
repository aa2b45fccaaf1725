//! JSON formats for polyhedra, distributions, problems and result dumps.
//!
//! Rationals are written as strings `"p/q"` (or `"p"`). Matrices are arrays of rows.

use serde_json::{json, Map, Value};

use crate::complexes::PolyComplex;
use crate::linalg::Matrix;
use crate::polyhedron::{HPolyhedron, PolyCone, Polyhedron, VPolyhedron};
use crate::quantize::{ConeValuation, CostDistribution};
use crate::rational::{fmt_rat, fmt_vec, parse_rat, to_f64, Rat, Vector};
use crate::stochastic::{Evaluation, ExtendedRat, FirstStage, MultistageProblem, Outcome, PolyhedralValueFunction, ScenarioNode, StageData};
use crate::Error;

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, Error> {
    v.get(key).ok_or_else(|| bad(format!("missing field `{key}`")))
}

pub fn rat_from(v: &Value) -> Result<Rat, Error> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(n) if n.is_i64() => Ok(Rat::from_integer(n.as_i64().expect("checked").into())),
        _ => Err(bad(format!("expected a rational string, got {v}"))),
    }
}

pub fn vector_from(v: &Value) -> Result<Vector, Error> {
    v.as_array().ok_or_else(|| bad("expected an array"))?.iter().map(rat_from).collect()
}

/// Rows of a matrix; `cols` is required to read a matrix with no rows.
pub fn matrix_from(v: &Value, cols: Option<usize>) -> Result<Matrix, Error> {
    let rows = v.as_array().ok_or_else(|| bad("expected an array of rows"))?.iter().map(vector_from).collect::<Result<Vec<_>, _>>()?;
    let width = match (rows.first(), cols) {
        (Some(r), _) => r.len(),
        (None, Some(c)) => c,
        (None, None) => return Err(bad("cannot infer the width of an empty matrix")),
    };
    Matrix::from_rows(rows, width).map_err(|e| bad(e.to_string()))
}

fn vectors_from(v: Option<&Value>) -> Result<Vec<Vector>, Error> {
    match v {
        None => Ok(Vec::new()),
        Some(v) => v.as_array().ok_or_else(|| bad("expected an array of vectors"))?.iter().map(vector_from).collect(),
    }
}

pub fn rat_json(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

pub fn vector_json(v: &[Rat]) -> Value {
    json!(fmt_vec(v))
}

pub fn matrix_json(m: &Matrix) -> Value {
    Value::Array(m.row_vecs().iter().map(|r| vector_json(r)).collect())
}

pub fn h_json(p: &HPolyhedron) -> Value {
    json!({ "A": matrix_json(&p.a), "b": vector_json(&p.b) })
}

pub fn h_from(v: &Value, dim: Option<usize>) -> Result<HPolyhedron, Error> {
    let a = matrix_from(field(v, "A")?, dim)?;
    let b = vector_from(field(v, "b")?)?;
    HPolyhedron::new(a, b).map_err(|e| bad(e.to_string()))
}

pub fn v_json(p: &VPolyhedron) -> Value {
    let mut m = Map::new();
    m.insert("vertices".into(), Value::Array(p.vertices.iter().map(|v| vector_json(v)).collect()));
    m.insert("rays".into(), Value::Array(p.rays.iter().map(|v| vector_json(v)).collect()));
    if !p.lines.is_empty() {
        m.insert("lines".into(), Value::Array(p.lines.iter().map(|v| vector_json(v)).collect()));
    }
    Value::Object(m)
}

pub fn v_from(v: &Value) -> Result<VPolyhedron, Error> {
    let vertices = vectors_from(v.get("vertices"))?;
    let rays = vectors_from(v.get("rays"))?;
    let lines = vectors_from(v.get("lines"))?;
    let dim = vertices.first().or(rays.first()).or(lines.first()).map(Vec::len).ok_or_else(|| bad("empty V-form"))?;
    let mut p = VPolyhedron::new(dim, vertices, rays).map_err(|e| bad(e.to_string()))?;
    p.lines = lines;
    Ok(p.canonicalized())
}

/// Tagged numeric: exact rational or decimal approximation with its tolerance.
pub fn evaluation_json(e: &Evaluation) -> Value {
    match (&e.value, &e.eps) {
        (ExtendedRat::Finite(r), None) => json!({ "kind": "exact", "value": fmt_rat(r) }),
        (ExtendedRat::Finite(r), Some(eps)) => json!({ "kind": "approx", "value": format!("{:.12}", to_f64(r)), "eps": fmt_rat(eps) }),
        (inf, _) => json!({ "kind": "exact", "value": inf.to_string() }),
    }
}

pub fn tagged_vector_json(v: &[Rat], eps: Option<&Rat>) -> Value {
    match eps {
        None => json!({ "kind": "exact", "value": fmt_vec(v) }),
        Some(eps) => json!({
            "kind": "approx",
            "value": v.iter().map(|x| format!("{:.12}", to_f64(x))).collect::<Vec<_>>(),
            "eps": fmt_rat(eps),
        }),
    }
}

pub fn distribution_from(v: &Value) -> Result<CostDistribution, Error> {
    let kind = field(v, "kind")?.as_str().ok_or_else(|| bad("`kind` must be a string"))?;
    let dim = || -> Result<usize, Error> { field(v, "dim")?.as_u64().map(|d| d as usize).ok_or_else(|| bad("`dim` must be an integer")) };
    let dist = match kind {
        "dirac" => CostDistribution::Dirac(vector_from(field(v, "point")?)?),
        "uniform" => match v.get("ball").and_then(Value::as_str) {
            Some("l1") => CostDistribution::uniform_l1_ball(dim()?, rat_from(field(v, "radius")?)?)?,
            Some("linf") => CostDistribution::uniform_linf_ball(dim()?, rat_from(field(v, "radius")?)?)?,
            Some(other) => return Err(bad(format!("unknown ball `{other}`"))),
            None => CostDistribution::UniformPolytope(VPolyhedron::polytope(vectors_from(Some(field(v, "vertices")?))?)?.canonicalized()),
        },
        "exponential" => match v.get("laplace").and_then(Value::as_str) {
            Some("l1") => CostDistribution::laplace_l1(dim()?, rat_from(field(v, "theta")?)?),
            Some(other) => return Err(bad(format!("unknown laplace norm `{other}`"))),
            None => {
                let theta = vector_from(field(v, "theta")?)?;
                let d = theta.len();
                let cone = match v.get("cone") {
                    Some(c) => PolyCone::from_h(matrix_from(field(c, "A")?, Some(d))?),
                    None => PolyCone::from_generators(d, vectors_from(Some(field(v, "rays")?))?, Vec::new()),
                };
                CostDistribution::ExponentialCone { cone, theta }
            }
        },
        "gaussian" => match v.get("M") {
            Some(m) => CostDistribution::Gaussian(matrix_from(m, None)?),
            None => CostDistribution::isotropic_gaussian(dim()?, rat_from(field(v, "gamma")?)?),
        },
        "mixture" => {
            let parts = field(v, "components")?
                .as_array()
                .ok_or_else(|| bad("`components` must be an array"))?
                .iter()
                .map(|c| Ok((rat_from(field(c, "weight")?)?, distribution_from(field(c, "dist")?)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            CostDistribution::mixture(parts)?
        }
        other => return Err(bad(format!("unknown distribution kind `{other}`"))),
    };
    Ok(dist)
}

pub fn distribution_json(d: &CostDistribution) -> Value {
    match d {
        CostDistribution::Dirac(p) => json!({ "kind": "dirac", "point": vector_json(p) }),
        CostDistribution::UniformPolytope(q) => json!({ "kind": "uniform", "vertices": v_json(q)["vertices"] }),
        CostDistribution::ExponentialCone { cone, theta } => {
            json!({ "kind": "exponential", "rays": cone.rays().iter().map(|r| vector_json(r)).collect::<Vec<_>>(), "theta": vector_json(theta) })
        }
        CostDistribution::Gaussian(m) => json!({ "kind": "gaussian", "M": matrix_json(m) }),
        CostDistribution::Mixture(parts) => json!({
            "kind": "mixture",
            "components": parts.iter().map(|(w, d)| json!({ "weight": rat_json(w), "dist": distribution_json(d) })).collect::<Vec<_>>(),
        }),
        CostDistribution::Density(o) => json!({ "kind": "density", "dim": o.dim }),
    }
}

/// Reads `{horizon, firstStage: {c, A, b}, stages: [{outcomes: [{A, B, b, prob, cost}]}]}`.
pub fn problem_from(v: &Value) -> Result<MultistageProblem, Error> {
    let fs = field(v, "firstStage")?;
    let c = vector_from(field(fs, "c")?)?;
    let first_stage = FirstStage { a: matrix_from(field(fs, "A")?, Some(c.len()))?, b: vector_from(field(fs, "b")?)?, c };
    let stages = field(v, "stages")?
        .as_array()
        .ok_or_else(|| bad("`stages` must be an array"))?
        .iter()
        .map(|s| {
            let outcomes = field(s, "outcomes")?
                .as_array()
                .ok_or_else(|| bad("`outcomes` must be an array"))?
                .iter()
                .map(|o| {
                    Ok(Outcome {
                        a: matrix_from(field(o, "A")?, None)?,
                        b: matrix_from(field(o, "B")?, None)?,
                        rhs: vector_from(field(o, "b")?)?,
                        prob: o.get("prob").map(rat_from).transpose()?.unwrap_or_else(|| Rat::from_integer(1.into())),
                        cost: distribution_from(field(o, "cost")?)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(StageData { outcomes })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let problem = MultistageProblem { first_stage, stages };
    if let Some(h) = v.get("horizon") {
        if h.as_u64() != Some(problem.horizon() as u64) {
            return Err(bad(format!("horizon {h} does not match {} stages", problem.stages.len() + 1)));
        }
    }
    Ok(problem)
}

pub fn problem_json(p: &MultistageProblem) -> Value {
    json!({
        "horizon": p.horizon(),
        "firstStage": { "c": vector_json(&p.first_stage.c), "A": matrix_json(&p.first_stage.a), "b": vector_json(&p.first_stage.b) },
        "stages": p.stages.iter().map(|s| json!({
            "outcomes": s.outcomes.iter().map(|o| json!({
                "A": matrix_json(&o.a),
                "B": matrix_json(&o.b),
                "b": vector_json(&o.rhs),
                "prob": rat_json(&o.prob),
                "cost": distribution_json(&o.cost),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Cells in H-form with dimensions and the indices of their facets.
pub fn complex_json(c: &PolyComplex) -> Value {
    let cells = c.cells();
    let index = |p: &Polyhedron| cells.iter().position(|q| q == p);
    let list: Vec<Value> = cells
        .iter()
        .map(|cell| {
            let facets: Vec<usize> = cell.facets().iter().filter_map(index).collect();
            json!({
                "dim": cell.cell_dim(),
                "H": h_json(&cell.h().minimized()),
                "V": v_json(cell.v()),
                "facets": facets,
            })
        })
        .collect();
    json!({ "ambientDim": c.ambient_dim(), "cells": list })
}

pub fn valuation_json(v: &ConeValuation, eps: Option<&Rat>) -> Value {
    json!({
        "p": match eps { None => json!({ "kind": "exact", "value": fmt_rat(&v.p) }), Some(e) => json!({ "kind": "approx", "value": format!("{:.12}", to_f64(&v.p)), "eps": fmt_rat(e) }) },
        "c": tagged_vector_json(&v.c, eps),
    })
}

pub fn value_function_json(v: &PolyhedralValueFunction) -> Value {
    json!({
        "cuts": v.cuts.iter().map(|(a, b)| json!({ "alpha": vector_json(a), "beta": rat_json(b) })).collect::<Vec<_>>(),
        "domain": h_json(&v.domain),
        "accuracy": match &v.eps { None => json!("exact"), Some(e) => json!({ "eps": fmt_rat(e) }) },
    })
}

pub fn tree_json(node: &ScenarioNode, eps: Option<&Rat>) -> Value {
    json!({
        "stage": node.stage,
        "label": { "outcome": node.xi, "cone": h_json(&node.region.h().minimized()) },
        "quantized": valuation_json(&node.quantized, eps),
        "pathProb": rat_json(&node.path_prob),
        "children": node.children.iter().map(|c| tree_json(c, eps)).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ints, rat};

    #[test]
    fn rationals_round_trip() {
        let v = vec![rat(-7, 24), int(3), int(0)];
        assert_eq!(vector_json(&v), json!(["-7/24", "3", "0"]));
        assert_eq!(vector_from(&vector_json(&v)).unwrap(), v);
        assert!(rat_from(&json!(0.5)).is_err());
    }

    #[test]
    fn polyhedra_round_trip() {
        let h = HPolyhedron::new(Matrix::from_i64(&[&[1, 0], &[0, 1], &[-1, -1]]), ints(&[1, 1, 0])).unwrap();
        assert!(h_from(&h_json(&h), None).unwrap().set_eq(&h));
        let v = h.to_v();
        assert!(v_from(&v_json(&v)).unwrap().to_h().set_eq(&h));
    }

    #[test]
    fn distributions_round_trip() {
        for d in [
            CostDistribution::uniform_l1_ball(2, int(1)).unwrap(),
            CostDistribution::laplace_l1(2, int(1)),
            CostDistribution::isotropic_gaussian(2, rat(1, 2)),
            CostDistribution::Dirac(ints(&[1, -2])),
        ] {
            let back = distribution_from(&distribution_json(&d)).unwrap();
            assert_eq!(back.mean().ok(), d.mean().ok());
            assert_eq!(back.dim(), d.dim());
        }
        assert!(distribution_from(&json!({ "kind": "cauchy" })).is_err());
    }

    #[test]
    fn tagged_numerics() {
        let e = Evaluation { value: ExtendedRat::Finite(rat(-7, 24)), eps: None };
        assert_eq!(evaluation_json(&e), json!({ "kind": "exact", "value": "-7/24" }));
        let e = Evaluation { value: ExtendedRat::Finite(rat(1, 3)), eps: Some(rat(1, 1000)) };
        assert_eq!(evaluation_json(&e)["kind"], "approx");
        let e = Evaluation { value: ExtendedRat::PlusInfinity, eps: None };
        assert_eq!(evaluation_json(&e)["value"], "+inf");
    }
}
