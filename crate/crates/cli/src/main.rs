use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use exquant::io::{
    complex_json, evaluation_json, h_json, problem_from, rat_json, tagged_vector_json, tree_json, valuation_json,
    vector_json,
};
use exquant::lp::feasible_point;
use exquant::prelude::*;
use exquant::rational::{add, dot, fmt_rat, fmt_vec, one, scale, to_f64, zero, zeros};
use exquant::stochastic::{value_functions, ExtendedRat, FirstOrderAnswer, PolyhedralValueFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Exact quantization of stochastic linear programs.
#[derive(Parser, Debug)]
#[command(name = "exquant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Problem file (JSON).
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    /// First-stage point, comma separated rationals such as `1/2,0`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    x: Option<String>,
    /// Tolerance handed to weak valuation oracles.
    #[arg(long, global = true, default_value = "1e-6")]
    eps: String,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Grid size of the value curve emitted by `eval` without `--x`.
    #[arg(long, global = true, default_value_t = 31)]
    points: usize,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Expected cost-to-go and a subgradient at `--x`, or the value curve.
    Eval,
    /// Chamber complexes of every stage.
    Complex,
    /// Quantization fans with their (probability, conditional mean) tables.
    Quantize,
    /// The equivalent finite scenario tree.
    Tree,
    /// Optimum of the extensive form and the first-stage decision.
    Solve,
    /// Quantized value against a Monte Carlo estimate.
    McCheck,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Parse(anyhow::Error),
    Invalid(anyhow::Error),
    /// Carries the report, certificate included.
    Infeasible(Value),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

type Run<T> = Result<T, Failure>;

fn parse_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Parse(e.into())
}

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure::Invalid(anyhow!("{msg}"))
}

fn engine<T>(r: Result<T, Error>) -> Run<T> {
    r.map_err(|e| match e {
        Error::Parse(_) => Failure::Parse(e.into()),
        Error::Infeasible(reason) => Failure::Infeasible(json!({ "status": "infeasible", "reason": reason })),
        other => Failure::Invalid(other.into()),
    })
}

struct Session {
    cli: Cli,
    problem: MultistageProblem,
    eps: Rat,
}

impl Session {
    fn eps_for(&self, cost: &CostDistribution) -> Option<&Rat> {
        (!cost.is_exact()).then_some(&self.eps)
    }

    fn any_approx(&self) -> Option<&Rat> {
        self.problem.stages.iter().flat_map(|s| &s.outcomes).any(|o| !o.cost.is_exact()).then_some(&self.eps)
    }

    fn x(&self) -> Run<Option<Vector>> {
        let Some(raw) = &self.cli.x else { return Ok(None) };
        let x = raw.split(',').map(parse_rat).collect::<Result<Vector, _>>().map_err(parse_err)?;
        let n = self.problem.stage_dim(1);
        if x.len() != n {
            return Err(invalid(format!("--x has {} coordinates, the first stage has {n}", x.len())));
        }
        Ok(Some(x))
    }

    fn require_x(&self) -> Run<Vector> {
        self.x()?.ok_or_else(|| parse_err(anyhow!("this command needs --x")))
    }

    /// Second-stage outcomes as weighted two-stage problems.
    fn two_stage(&self) -> Run<Vec<(Rat, TwoStageProblem)>> {
        if self.problem.horizon() != 2 {
            return Err(invalid("this command needs a two-stage problem"));
        }
        self.problem.stages[0]
            .outcomes
            .iter()
            .map(|o| Ok((o.prob.clone(), engine(TwoStageProblem::new(o.a.clone(), o.b.clone(), o.rhs.clone(), o.cost.clone()))?)))
            .collect()
    }
}

/// `V₂` either as a weighted sum of two-stage oracles or through the backward recursion.
enum Evaluator {
    Weighted(Vec<(Rat, TwoStageProblem)>),
    Nested(PolyhedralValueFunction),
}

struct Point {
    value: Rat,
    subgradient: Vector,
    eps: Option<Rat>,
}

impl Evaluator {
    fn new(ctx: &Session) -> Run<Self> {
        if ctx.problem.horizon() == 2 {
            Ok(Evaluator::Weighted(ctx.two_stage()?))
        } else {
            Ok(Evaluator::Nested(engine(value_functions(&ctx.problem, ctx.any_approx()))?.remove(0)))
        }
    }

    fn at(&self, ctx: &Session, x: &[Rat]) -> Run<Point> {
        match self {
            Evaluator::Weighted(parts) => {
                let mut point = Point { value: zero(), subgradient: zeros(x.len()), eps: None };
                for (k, (p, tp)) in parts.iter().enumerate() {
                    match engine(eval_or_separate(tp, x, ctx.eps_for(&tp.cost)))? {
                        FirstOrderAnswer::Value(fo) => {
                            point.value += p * &fo.value;
                            point.subgradient = add(&point.subgradient, &scale(&fo.subgradient, p));
                            if let Some(e) = fo.eps {
                                point.eps = Some(point.eps.unwrap_or_else(zero) + p * e);
                            }
                        }
                        FirstOrderAnswer::Separation { normal, offset, bound } => {
                            return Err(Failure::Infeasible(json!({
                                "status": "infeasible",
                                "x": vector_json(x),
                                "outcome": k,
                                "certificate": { "normal": vector_json(&normal), "offset": rat_json(&offset), "bound": rat_json(&bound) },
                            })));
                        }
                    }
                }
                Ok(point)
            }
            Evaluator::Nested(v) => match v.value(x) {
                ExtendedRat::Finite(value) => {
                    let (alpha, _) = v.cuts.iter().find(|(a, b)| dot(a, x) + b == value).expect("an active cut");
                    Ok(Point { value, subgradient: alpha.clone(), eps: v.eps.clone() })
                }
                _ => {
                    let row = (0..v.domain.num_constraints())
                        .find(|&i| dot(v.domain.a.row(i), x) > v.domain.b[i])
                        .expect("a violated domain row");
                    Err(Failure::Infeasible(json!({
                        "status": "infeasible",
                        "x": vector_json(x),
                        "certificate": { "normal": vector_json(v.domain.a.row(row)), "bound": rat_json(&v.domain.b[row]) },
                    })))
                }
            },
        }
    }

    /// Domain and breakpoints of a scalar `V₂`, used to frame the value curve.
    fn frame(&self) -> Run<(Rat, Rat)> {
        let (domain, breakpoints) = match self {
            Evaluator::Weighted(parts) => {
                let mut domain = HPolyhedron::universe(1);
                let mut bps = Vec::new();
                for (_, tp) in parts {
                    let coupling = tp.coupling();
                    domain = engine(domain.intersect(&coupling.project(&[0])))?;
                    bps.extend(chamber_complex(&coupling, &[0]).breakpoints());
                }
                (domain, bps)
            }
            Evaluator::Nested(v) => (v.domain.clone(), v.cells.as_ref().map(PolyComplex::breakpoints).unwrap_or_default()),
        };
        let v = domain.to_v();
        if v.is_empty() {
            return Err(Failure::Infeasible(json!({ "status": "infeasible", "reason": "empty domain" })));
        }
                let pts: Vec<Rat> = v.vertices.iter().map(|p| p[0].clone()).chain(breakpoints).collect();
        let (mut lo, mut hi) = match (pts.iter().min(), pts.iter().max()) {
            (Some(lo), Some(hi)) => (lo.clone(), hi.clone()),
            _ => (zero(), zero()),
        };
        let free = |sign: bool| v.lines.len() == 1 || v.rays.iter().any(|r| (r[0] > zero()) == sign);
        if free(false) {
            lo -= one();
        }
        if free(true) {
            hi += one();
        }
        if lo == hi {
            hi += one();
        }
        Ok((lo, hi))
    }
}

fn approx(x: f64) -> String {
    format!("{x:.12}")
}

fn tagged(value: &Rat, eps: Option<&Rat>) -> Value {
    evaluation_json(&Evaluation { value: ExtendedRat::Finite(value.clone()), eps: eps.cloned() })
}

/// Value and kind columns of a CSV row.
fn csv_value(value: &Rat, eps: Option<&Rat>) -> String {
    match eps {
        None => format!("{},{},exact,", fmt_rat(value), approx(to_f64(value))),
        Some(e) => format!("{},{},approx,{}", approx(to_f64(value)), approx(to_f64(value)), fmt_rat(e)),
    }
}

fn eval(ctx: &Session) -> Run<String> {
    let evaluator = Evaluator::new(ctx)?;
    match ctx.x()? {
        Some(x) => {
            let point = evaluator.at(ctx, &x)?;
            Ok(match ctx.cli.format {
                Format::Json => render(&json!({
                    "x": vector_json(&x),
                    "value": tagged(&point.value, point.eps.as_ref()),
                    "subgradient": tagged_vector_json(&point.subgradient, point.eps.as_ref()),
                })),
                Format::Csv => {
                    let header: Vec<String> = (1..=x.len()).map(|i| format!("x{i}")).collect();
                    format!("{},value,value_float,kind,eps\n{},{}\n", header.join(","), fmt_vec(&x).join(","), csv_value(&point.value, point.eps.as_ref()))
                }
            })
        }
        None => {
            if ctx.problem.stage_dim(1) != 1 {
                return Err(parse_err(anyhow!("value curves need a scalar first stage; pass --x instead")));
            }
            if ctx.cli.points < 2 {
                return Err(invalid("--points must be at least 2"));
            }
            let (lo, hi) = evaluator.frame()?;
            let step = (&hi - &lo) / int(ctx.cli.points as i64 - 1);
            let mut rows = Vec::new();
            for k in 0..ctx.cli.points {
                let x = &lo + &step * int(k as i64);
                let point = evaluator.at(ctx, std::slice::from_ref(&x))?;
                rows.push((x, point));
            }
            Ok(match ctx.cli.format {
                Format::Json => render(&json!({
                    "curve": rows.iter().map(|(x, p)| json!({ "x": rat_json(x), "value": tagged(&p.value, p.eps.as_ref()) })).collect::<Vec<_>>(),
                })),
                Format::Csv => {
                    let mut out = String::from("x,x_float,value,value_float,kind,eps\n");
                    for (x, p) in &rows {
                        let _ = writeln!(out, "{},{},{}", fmt_rat(x), approx(to_f64(x)), csv_value(&p.value, p.eps.as_ref()));
                    }
                    out
                }
            })
        }
    }
}

fn complex(ctx: &Session) -> Run<String> {
    json_only(ctx)?;
    let complexes = engine(propagate_complexes(&ctx.problem))?;
    let list: Vec<Value> = complexes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut entry = json!({ "stage": i + 2, "complex": complex_json(c) });
            if c.ambient_dim() == 1 {
                entry["breakpoints"] = vector_json(&c.breakpoints());
            }
            entry
        })
        .collect();
    Ok(render(&json!({ "complexes": list })))
}

struct Table {
    stage: usize,
    outcome: usize,
    eps: Option<Rat>,
    cells: Vec<(Polyhedron, ConeValuation)>,
}

fn quantize(ctx: &Session) -> Run<String> {
    let mut tables = Vec::new();
    if let Some(x) = ctx.x()? {
        for (k, (_, tp)) in ctx.two_stage()?.iter().enumerate() {
            let eps = ctx.eps_for(&tp.cost);
            let regions = engine(tp.quantization_regions(&x))?.ok_or_else(|| {
                Failure::Infeasible(json!({ "status": "infeasible", "x": vector_json(&x), "outcome": k, "reason": "empty fiber" }))
            })?;
            let mut cells = Vec::new();
            for r in regions.cells() {
                let v = engine(exquant::quantize::valuation(&tp.cost, r, eps))?;
                if v.p != zero() {
                    cells.push((r.clone(), v));
                }
            }
            tables.push(Table { stage: 2, outcome: k, eps: eps.cloned(), cells });
        }
    } else {
        let horizon = ctx.problem.horizon();
        let mut next = engine(value_functions(&ctx.problem, ctx.any_approx()))?;
        next.remove(0);
        next.push(PolyhedralValueFunction::zero(ctx.problem.stage_dim(horizon)));
        for t in 2..=horizon {
            for (k, o) in ctx.problem.stages[t - 2].outcomes.iter().enumerate() {
                let eps = ctx.eps_for(&o.cost);
                let q = engine(quantize_stage(&ctx.problem, t, k, &next[t - 2], eps))?;
                tables.push(Table { stage: t, outcome: k, eps: eps.cloned(), cells: q.valuations });
            }
        }
    }
    Ok(match ctx.cli.format {
        Format::Json => render(&json!({
            "fans": tables.iter().map(|t| json!({
                "stage": t.stage,
                "outcome": t.outcome,
                "cells": t.cells.iter().map(|(r, v)| json!({
                    "dim": r.cell_dim(),
                    "H": h_json(&r.h().minimized()),
                    "valuation": valuation_json(v, t.eps.as_ref()),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut out = String::from("stage,outcome,cell,dim,p,c,kind,eps\n");
            for t in &tables {
                for (i, (r, v)) in t.cells.iter().enumerate() {
                    let (p, c, kind, eps) = match &t.eps {
                        None => (fmt_rat(&v.p), fmt_vec(&v.c).join(";"), "exact", String::new()),
                        Some(e) => (approx(to_f64(&v.p)), v.c.iter().map(|c| approx(to_f64(c))).collect::<Vec<_>>().join(";"), "approx", fmt_rat(e)),
                    };
                    let _ = writeln!(out, "{},{},{},{},{},{},{},{}", t.stage, t.outcome, i, r.cell_dim(), p, c, kind, eps);
                }
            }
            out
        }
    })
}

fn tree(ctx: &Session) -> Run<String> {
    json_only(ctx)?;
    let eps = ctx.any_approx();
    let root = engine(build_scenario_tree(&ctx.problem, eps))?;
    Ok(render(&json!({ "nodes": root.count(), "tree": tree_json(&root, eps) })))
}

fn solve(ctx: &Session) -> Run<String> {
    json_only(ctx)?;
    let fs = &ctx.problem.first_stage;
    if let Err(farkas) = feasible_point(&fs.a, &fs.b) {
        return Err(Failure::Infeasible(json!({
            "status": "infeasible",
            "reason": "first stage",
            "certificate": { "farkas": vector_json(&farkas) },
        })));
    }
    let eps = ctx.any_approx();
    let root = engine(build_scenario_tree(&ctx.problem, eps))?;
    let sol = engine(solve_extensive(&root, &ctx.problem))?;
    Ok(render(&json!({
        "status": "optimal",
        "nodes": root.count(),
        "value": tagged(&sol.value, eps),
        "firstStage": tagged_vector_json(&sol.first_stage, eps),
    })))
}

fn mc_check(ctx: &Session) -> Run<String> {
    let x = ctx.require_x()?;
    if ctx.cli.samples < 2 {
        return Err(invalid("--samples must be at least 2"));
    }
    let parts = ctx.two_stage()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cli.seed);
    let verdict = |delta: f64, stderr: f64, eps: f64| if delta <= 4.0 * stderr + eps { "PASS" } else { "FAIL" };
    let mut rows = Vec::new();
    let (mut q_total, mut mc_total, mut var_total, mut eps_total) = (0.0, 0.0, 0.0, 0.0);
    for (k, (p, tp)) in parts.iter().enumerate() {
        let q = engine(expected_value_at(tp, &x, ctx.eps_for(&tp.cost)))?;
        if q.exact().is_none() && q.value.finite().is_none() {
            return Err(Failure::Infeasible(json!({ "status": "infeasible", "x": vector_json(&x), "outcome": k })));
        }
        let mc = engine(mc_estimate(tp, &x, ctx.cli.samples, &mut rng))?;
        let eps = q.eps.as_ref().map(to_f64).unwrap_or(0.0);
        let delta = (q.as_f64() - mc.mean).abs();
        let w = to_f64(p);
        q_total += w * q.as_f64();
        mc_total += w * mc.mean;
        var_total += w * w * mc.stderr * mc.stderr;
        eps_total += w * eps;
        let v = verdict(delta, mc.stderr, eps);
        rows.push((k, p.clone(), q, mc, delta, v));
    }
    let stderr = var_total.sqrt();
    let delta = (q_total - mc_total).abs();
    let overall = verdict(delta, stderr, eps_total);
    Ok(match ctx.cli.format {
        Format::Json => render(&json!({
            "x": vector_json(&x),
            "samples": ctx.cli.samples,
            "seed": ctx.cli.seed,
            "outcomes": rows.iter().map(|(k, p, q, mc, delta, v)| json!({
                "outcome": k,
                "prob": rat_json(p),
                "quantized": evaluation_json(q),
                "mcMean": { "kind": "approx", "value": approx(mc.mean), "stderr": approx(mc.stderr) },
                "delta": approx(*delta),
                "verdict": v,
            })).collect::<Vec<_>>(),
            "overall": { "quantized": approx(q_total), "mcMean": approx(mc_total), "stderr": approx(stderr), "delta": approx(delta) },
            "verdict": overall,
        })),
        Format::Csv => {
            let mut out = String::from("outcome,prob,quantized,mc_mean,stderr,delta,verdict\n");
            for (k, p, q, mc, delta, v) in &rows {
                let _ = writeln!(out, "{k},{},{},{},{},{},{v}", fmt_rat(p), approx(q.as_f64()), approx(mc.mean), approx(mc.stderr), approx(*delta));
            }
            let _ = writeln!(out, "all,1,{},{},{},{},{overall}", approx(q_total), approx(mc_total), approx(stderr), approx(delta));
            out
        }
    })
}

fn json_only(ctx: &Session) -> Run<()> {
    if ctx.cli.format == Format::Csv {
        return Err(parse_err(anyhow!("{:?} only writes JSON", ctx.cli.command)));
    }
    Ok(())
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load(cli: Cli) -> Run<Session> {
    let path = cli.problem.clone().ok_or_else(|| parse_err(anyhow!("--problem is required")))?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Parse)?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(Failure::Parse)?;
    let problem = problem_from(&value).map_err(parse_err)?;
    problem.validate().map_err(|e| Failure::Invalid(e.into()))?;
    let eps = parse_rat(&cli.eps).map_err(parse_err)?;
    if eps <= zero() {
        return Err(invalid("--eps must be positive"));
    }
    Ok(Session { cli, problem, eps })
}

fn run(cli: Cli) -> Run<String> {
    let ctx = load(cli)?;
    match ctx.cli.command {
        Command::Eval => eval(&ctx),
        Command::Complex => complex(&ctx),
        Command::Quantize => quantize(&ctx),
        Command::Tree => tree(&ctx),
        Command::Solve => solve(&ctx),
        Command::McCheck => mc_check(&ctx),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(text) => match emit(&out, &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(failure) => {
            let code = failure.code();
            match failure {
                Failure::Parse(e) | Failure::Invalid(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible(report) => {
                    eprintln!("error: infeasible");
                    if let Err(e) = emit(&out, &render(&report)) {
                        eprintln!("error: {e:#}");
                    }
                }
            }
            ExitCode::from(code)
        }
    }
}
