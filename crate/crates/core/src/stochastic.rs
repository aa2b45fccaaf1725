//! Two-stage and multistage stochastic linear programs with random costs.
//!
//! A two-stage problem has recourse `Q̂(x, c) = min { cᵀy : Ay + Bx ≤ b }` and
//! value `V(x) = E[Q̂(x, c)]`. For a fixed `x` the negated normal fan of the
//! fiber `P_x = {y : Ay ≤ b - Bx}` splits cost space into finitely many
//! regions, and `V(x) = Σ_R p̌_R Q̂(x, č_R)`. The multistage recursion reuses
//! the same machinery with recourse variables `(x_t, z)`, where `z` bounds the
//! next value function from above and carries a deterministic unit cost.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::complexes::{chamber_complex, chamber_complex_of, meet_unchecked, slice_at_last_one, PolyComplex};
use crate::linalg::{rank_of, Matrix};
use crate::lp::{feasible_point, minimize, LpOutcome};
use crate::polyhedron::{HPolyhedron, Polyhedron};
use crate::quantize::{valuation, ConeValuation, CostDistribution, Sampler};
use crate::rational::{add, dot, fmt_rat, int, scale, sub, to_f64, vec_to_f64, zeros, Rat, Vector};
use crate::Error;

/// A rational number or an infinite value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendedRat {
    Finite(Rat),
    PlusInfinity,
    MinusInfinity,
}

impl ExtendedRat {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtendedRat::Finite(r) => Some(r),
            _ => None,
        }
    }
}

impl std::fmt::Display for ExtendedRat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedRat::Finite(r) => write!(f, "{}", fmt_rat(r)),
            ExtendedRat::PlusInfinity => write!(f, "+inf"),
            ExtendedRat::MinusInfinity => write!(f, "-inf"),
        }
    }
}

/// A value together with its accuracy: `eps = None` means exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: ExtendedRat,
    pub eps: Option<Rat>,
}

impl Evaluation {
    /// The value when it is finite and exact.
    pub fn exact(&self) -> Option<&Rat> {
        if self.eps.is_none() {
            self.value.finite()
        } else {
            None
        }
    }

    pub fn as_f64(&self) -> f64 {
        match &self.value {
            ExtendedRat::Finite(r) => to_f64(r),
            ExtendedRat::PlusInfinity => f64::INFINITY,
            ExtendedRat::MinusInfinity => f64::NEG_INFINITY,
        }
    }
}

/// `V(x) = E[min cᵀy s.t. Ay + Bx ≤ b]`.
#[derive(Clone, Debug)]
pub struct TwoStageProblem {
    pub a: Matrix,
    pub b: Matrix,
    pub rhs: Vector,
    pub cost: CostDistribution,
    /// When set, the last recourse variable has deterministic cost 1 and
    /// `cost` describes the remaining coordinates.
    epigraph: bool,
}

/// Value, one subgradient and the accuracy tag at a point of the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstOrder {
    pub value: Rat,
    pub subgradient: Vector,
    pub eps: Option<Rat>,
}

/// Either first-order information or a hyperplane separating the point from the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FirstOrderAnswer {
    Value(FirstOrder),
    /// `dom V ⊆ {x' : normal·x' ≤ bound}` while `normal·x > offset > bound`.
    Separation { normal: Vector, offset: Rat, bound: Rat },
}

impl TwoStageProblem {
    pub fn new(a: Matrix, b: Matrix, rhs: Vector, cost: CostDistribution) -> Result<Self, Error> {
        let p = TwoStageProblem { a, b, rhs, cost, epigraph: false };
        p.validate()?;
        Ok(p)
    }

    /// The coupling `{(x, y) : ‖y‖₁ ≤ 1, y₁ ≤ x, y₂ ≤ x}` with the given costs.
    pub fn worked_example(cost: CostDistribution) -> Self {
        TwoStageProblem {
            a: Matrix::from_i64(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1], &[1, 0], &[0, 1]]),
            b: Matrix::from_i64(&[&[0], &[0], &[0], &[0], &[-1], &[-1]]),
            rhs: crate::rational::ints(&[1, 1, 1, 1, 0, 0]),
            cost,
            epigraph: false,
        }
    }

    /// First-stage dimension.
    pub fn n(&self) -> usize {
        self.b.cols()
    }

    /// Recourse dimension.
    pub fn m(&self) -> usize {
        self.a.cols()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.a.rows() != self.b.rows() || self.a.rows() != self.rhs.len() {
            return Err(Error::Dimension(format!("A has {} rows, B {}, b {}", self.a.rows(), self.b.rows(), self.rhs.len())));
        }
        let cost_dim = self.m() - usize::from(self.epigraph);
        if self.cost.dim() != cost_dim {
            return Err(Error::Dimension(format!("costs in ℝ^{} for recourse in ℝ^{}", self.cost.dim(), cost_dim)));
        }
        self.cost.validate()
    }

    /// Assumption that costs lie in `-Cone(Aᵀ)` almost surely.
    pub fn check_support(&self) -> Result<(), Error> {
        let rec = crate::polyhedron::PolyCone::from_h(self.a.clone());
        let support = if self.epigraph { self.cost.support().lifted() } else { self.cost.support() };
        if support.within_dual_of(rec.rays(), rec.lines()) {
            Ok(())
        } else {
            Err(Error::SupportViolation("the recourse problem is unbounded below on part of the cost support".into()))
        }
    }

    /// `{(x, y) : Bx + Ay ≤ b}`.
    pub fn coupling(&self) -> HPolyhedron {
        HPolyhedron { a: self.b.hstack(&self.a).expect("row counts checked"), b: self.rhs.clone() }
    }

    pub fn fiber(&self, x: &[Rat]) -> Result<HPolyhedron, Error> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), self.n())));
        }
        Ok(HPolyhedron { a: self.a.clone(), b: sub(&self.rhs, &self.b.mul_vec(x)) })
    }

    /// Full recourse cost for a cost-space point.
    fn recourse_cost(&self, c: &[Rat]) -> Vector {
        let mut full = c.to_vec();
        if self.epigraph {
            full.push(Rat::one());
        }
        full
    }

    /// Cost-space regions `-N(P_x)` (sliced at unit last cost in the epigraph case);
    /// `None` when the fiber is empty.
    pub fn quantization_regions(&self, x: &[Rat]) -> Result<Option<PolyComplex>, Error> {
        let fiber = self.fiber(x)?;
        if fiber.is_empty() {
            return Ok(None);
        }
        let fan = fiber.normal_fan()?.negated();
        let regions = fan.complex().clone();
        Ok(Some(if self.epigraph { slice_at_last_one(&regions) } else { regions }))
    }
}

/// `Q̂(x, c)` with a minimizer when finite.
pub fn recourse_value(problem: &TwoStageProblem, x: &[Rat], c: &[Rat]) -> Result<(ExtendedRat, Option<Vector>), Error> {
    let fiber = problem.fiber(x)?;
    if c.len() != problem.m() {
        return Err(Error::Dimension(format!("cost of length {}, expected {}", c.len(), problem.m())));
    }
    Ok(match minimize(c, &fiber.a, &fiber.b) {
        LpOutcome::Optimal { x: y, value, .. } => (ExtendedRat::Finite(value), Some(y)),
        LpOutcome::Infeasible { .. } => (ExtendedRat::PlusInfinity, None),
        LpOutcome::Unbounded { .. } => (ExtendedRat::MinusInfinity, None),
    })
}

/// Quantized value and subgradient at `x` over the given cost regions.
fn first_order_on(problem: &TwoStageProblem, x: &[Rat], regions: &PolyComplex, eps: Option<&Rat>) -> Result<FirstOrder, Error> {
    let fiber = problem.fiber(x)?;
    let (mut value, mut g) = (Rat::zero(), zeros(problem.n()));
    let mut total = Rat::zero();
    for r in regions.cells() {
        let ConeValuation { p, c } = valuation(&problem.cost, r, eps)?;
        if p.is_zero() {
            continue;
        }
        total += &p;
        match minimize(&problem.recourse_cost(&c), &fiber.a, &fiber.b) {
            LpOutcome::Optimal { value: q, dual, .. } => {
                value += &p * q;
                g = add(&g, &scale(&problem.b.tmul_vec(&dual), &p));
            }
            LpOutcome::Unbounded { .. } => return Err(Error::SupportViolation("recourse unbounded at a quantized cost".into())),
            LpOutcome::Infeasible { .. } => return Err(Error::Infeasible("empty fiber".into())),
        }
    }
    let exact = problem.cost.is_exact();
    if exact && total != Rat::one() {
        return Err(Error::InvalidInput(format!("cost regions carry total probability {}", fmt_rat(&total))));
    }
    Ok(FirstOrder { value, subgradient: g, eps: if exact { None } else { eps.cloned() } })
}

/// Value and subgradient by LP duals at the quantized costs. The subgradient is
/// valid when `x` lies in the relative interior of a top-dimensional chamber,
/// or when every face of the fiber has linearly independent active rows.
fn first_order_at_ri(problem: &TwoStageProblem, x: &[Rat], eps: Option<&Rat>) -> Result<Option<FirstOrder>, Error> {
    problem.check_support()?;
    match problem.quantization_regions(x)? {
        None => Ok(None),
        Some(regions) => first_order_on(problem, x, &regions, eps).map(Some),
    }
}

/// Every face of the fiber has linearly independent active rows, so duals are
/// unique and linear on each normal cone.
fn nondegenerate(fiber: &HPolyhedron) -> bool {
    fiber.faces().iter().all(|f| rank_of(&fiber.a.select_rows(&f.active_set).row_vecs(), fiber.dim()) == f.active_set.len())
}

fn first_order(problem: &TwoStageProblem, x: &[Rat], eps: Option<&Rat>) -> Result<Option<FirstOrder>, Error> {
    let Some(mut f) = first_order_at_ri(problem, x, eps)? else {
        return Ok(None);
    };
    if nondegenerate(&problem.fiber(x)?) {
        return Ok(Some(f));
    }
    // V is affine on each chamber, so a subgradient at the witness of a
    // top-dimensional chamber through x also supports V at x.
    let keep: Vec<usize> = (0..problem.n()).collect();
    let complex = chamber_complex(&problem.coupling(), &keep);
    let cell = complex
        .cells()
        .iter()
        .filter(|c| c.contains(x))
        .max_by_key(|c| c.cell_dim())
        .ok_or_else(|| Error::Infeasible("x is outside the chamber complex".into()))?;
    if !cell.contains_ri(x) {
        let w = cell.ri_point()?;
        let at_w = first_order_at_ri(problem, &w, eps)?.ok_or_else(|| Error::Infeasible("chamber witness outside the domain".into()))?;
        f.subgradient = at_w.subgradient;
    }
    Ok(Some(f))
}

/// `V(x)` by exact quantization; `eps` is needed only for Gaussian or density costs.
pub fn expected_value_at(problem: &TwoStageProblem, x: &[Rat], eps: Option<&Rat>) -> Result<Evaluation, Error> {
    Ok(match first_order_at_ri(problem, x, eps)? {
        None => Evaluation { value: ExtendedRat::PlusInfinity, eps: None },
        Some(f) => Evaluation { value: ExtendedRat::Finite(f.value), eps: f.eps },
    })
}

/// `V(x)` over an arbitrary complex of cost regions refining `-N(P_x)`.
pub fn expected_value_on(problem: &TwoStageProblem, x: &[Rat], regions: &PolyComplex, eps: Option<&Rat>) -> Result<Evaluation, Error> {
    problem.check_support()?;
    if problem.fiber(x)?.is_empty() {
        return Ok(Evaluation { value: ExtendedRat::PlusInfinity, eps: None });
    }
    let f = first_order_on(problem, x, regions, eps)?;
    Ok(Evaluation { value: ExtendedRat::Finite(f.value), eps: f.eps })
}

/// One subgradient `Σ_R p̌_R Bᵀμ_R` of `V` at `x ∈ dom V`.
pub fn subgradient_at(problem: &TwoStageProblem, x: &[Rat], eps: Option<&Rat>) -> Result<Vector, Error> {
    first_order(problem, x, eps)?.map(|f| f.subgradient).ok_or_else(|| Error::Infeasible("x is outside the domain of V".into()))
}

/// First-order oracle: value and subgradient, or a separating hyperplane from a Farkas certificate.
pub fn eval_or_separate(problem: &TwoStageProblem, x: &[Rat], eps: Option<&Rat>) -> Result<FirstOrderAnswer, Error> {
    let fiber = problem.fiber(x)?;
    match feasible_point(&fiber.a, &fiber.b) {
        Ok(_) => Ok(FirstOrderAnswer::Value(first_order(problem, x, eps)?.expect("fiber is nonempty"))),
        Err(lambda) => {
            // λ ≥ 0, λᵀA = 0, λᵀ(b - Bx) < 0, so λᵀB x' ≤ λᵀb on the domain
            let normal = problem.b.tmul_vec(&lambda);
            let bound = dot(&lambda, &problem.rhs);
            let at_x = dot(&normal, x);
            let offset = (&bound + &at_x) / int(2);
            Ok(FirstOrderAnswer::Separation { normal, offset, bound })
        }
    }
}

/// `V(x) = max_k α_kᵀx + β_k` on `domain`, `+∞` outside.
#[derive(Clone, Debug)]
pub struct PolyhedralValueFunction {
    pub cuts: Vec<(Vector, Rat)>,
    pub domain: HPolyhedron,
    pub cells: Option<PolyComplex>,
    pub eps: Option<Rat>,
}

impl PolyhedralValueFunction {
    /// The zero function on `ℝ^dim`.
    pub fn zero(dim: usize) -> Self {
        PolyhedralValueFunction { cuts: vec![(zeros(dim), Rat::zero())], domain: HPolyhedron::universe(dim), cells: None, eps: None }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn value(&self, x: &[Rat]) -> ExtendedRat {
        if !self.domain.contains(x) {
            return ExtendedRat::PlusInfinity;
        }
        self.cuts
            .iter()
            .map(|(a, b)| dot(a, x) + b)
            .max()
            .map_or(ExtendedRat::MinusInfinity, ExtendedRat::Finite)
    }

    /// The two-stage problem `min cᵀy + z` with `(y, z)` in the epigraph of `self` and
    /// `Ay + Bx ≤ b`: the recourse of one stage of the multistage recursion.
    fn epigraph_problem(&self, a: &Matrix, b: &Matrix, rhs: &[Rat], cost: &CostDistribution) -> Result<TwoStageProblem, Error> {
        let n = b.cols();
        let m = a.cols();
        let mut rows_a: Vec<Vector> = Vec::new();
        let mut rows_b: Vec<Vector> = Vec::new();
        let mut r: Vector = Vec::new();
        for i in 0..a.rows() {
            let mut row = a.row(i).to_vec();
            row.push(Rat::zero());
            rows_a.push(row);
            rows_b.push(b.row(i).to_vec());
            r.push(rhs[i].clone());
        }
        for (alpha, beta) in &self.cuts {
            let mut row = alpha.clone();
            row.push(-Rat::one());
            rows_a.push(row);
            rows_b.push(zeros(n));
            r.push(-beta.clone());
        }
        for i in 0..self.domain.num_constraints() {
            let mut row = self.domain.a.row(i).to_vec();
            row.push(Rat::zero());
            rows_a.push(row);
            rows_b.push(zeros(n));
            r.push(self.domain.b[i].clone());
        }
        let p = TwoStageProblem {
            a: Matrix::from_rows(rows_a, m + 1)?,
            b: Matrix::from_rows(rows_b, n)?,
            rhs: r,
            cost: cost.clone(),
            epigraph: true,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Cuts from value and subgradient at the witness of each maximal chamber.
pub fn build_affine_representation(problem: &TwoStageProblem, eps: Option<&Rat>) -> Result<PolyhedralValueFunction, Error> {
    problem.check_support()?;
    let coupling = problem.coupling();
    let keep: Vec<usize> = (0..problem.n()).collect();
    let cells = chamber_complex(&coupling, &keep);
    let domain = coupling.project(&keep);
    affine_pieces(&[(Rat::one(), problem.clone())], cells, domain, eps)
}

/// Cuts of `Σ p_i V_i` from first-order information at the chambers' witnesses.
fn affine_pieces(
    parts: &[(Rat, TwoStageProblem)],
    cells: PolyComplex,
    domain: HPolyhedron,
    eps: Option<&Rat>,
) -> Result<PolyhedralValueFunction, Error> {
    let n = domain.dim();
    let mut cuts: BTreeSet<(Vector, Rat)> = BTreeSet::new();
    let mut acc_eps: Option<Rat> = None;
    for chamber in cells.chambers() {
        let w = &chamber.witness;
        let (mut v, mut g) = (Rat::zero(), zeros(n));
        for (p, problem) in parts {
            let f = first_order_at_ri(problem, w, eps)?.ok_or_else(|| Error::Infeasible("chamber witness outside the domain".into()))?;
            v += p * &f.value;
            g = add(&g, &scale(&f.subgradient, p));
            if f.eps.is_some() {
                acc_eps = f.eps.clone();
            }
        }
        let beta = &v - dot(&g, w);
        cuts.insert((g, beta));
    }
    Ok(PolyhedralValueFunction { cuts: cuts.into_iter().collect(), domain: domain.minimized(), cells: Some(cells), eps: acc_eps })
}

/// Random constraint data and cost law of one outcome of a stage:
/// `A x_t + B x_{t-1} ≤ b` with probability `prob`.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub a: Matrix,
    pub b: Matrix,
    pub rhs: Vector,
    pub prob: Rat,
    pub cost: CostDistribution,
}

#[derive(Clone, Debug)]
pub struct StageData {
    pub outcomes: Vec<Outcome>,
}

/// `min c₁ᵀx₁` over `A₁x₁ ≤ b₁`.
#[derive(Clone, Debug)]
pub struct FirstStage {
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
}

#[derive(Clone, Debug)]
pub struct MultistageProblem {
    pub first_stage: FirstStage,
    /// Stages `2..=T`.
    pub stages: Vec<StageData>,
}

impl MultistageProblem {
    pub fn horizon(&self) -> usize {
        self.stages.len() + 1
    }

    /// Decision dimension of stage `t` (1-based).
    pub fn stage_dim(&self, t: usize) -> usize {
        if t == 1 {
            self.first_stage.c.len()
        } else {
            self.stages[t - 2].outcomes[0].a.cols()
        }
    }

    fn stage(&self, t: usize) -> &StageData {
        &self.stages[t - 2]
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fs = &self.first_stage;
        if fs.a.cols() != fs.c.len() || fs.a.rows() != fs.b.len() {
            return Err(Error::Dimension("first stage".into()));
        }
        for t in 2..=self.horizon() {
            let stage = self.stage(t);
            if stage.outcomes.is_empty() {
                return Err(Error::InvalidInput(format!("stage {t} has no outcomes")));
            }
            let (prev, cur) = (self.stage_dim(t - 1), self.stage_dim(t));
            for o in &stage.outcomes {
                if o.a.cols() != cur || o.b.cols() != prev || o.a.rows() != o.b.rows() || o.a.rows() != o.rhs.len() {
                    return Err(Error::Dimension(format!("stage {t} outcome dimensions")));
                }
                if !o.prob.is_positive() {
                    return Err(Error::InvalidInput(format!("stage {t} has a nonpositive probability")));
                }
                if o.cost.dim() != cur {
                    return Err(Error::Dimension(format!("stage {t} costs")));
                }
                o.cost.validate()?;
                if !crate::quantize::check_support(&o.cost, &o.a) {
                    return Err(Error::SupportViolation(format!("stage {t}")));
                }
            }
            if stage.outcomes.iter().map(|o| o.prob.clone()).sum::<Rat>() != Rat::one() {
                return Err(Error::InvalidInput(format!("stage {t} probabilities do not sum to 1")));
            }
        }
        Ok(())
    }

    /// A two-stage problem viewed as a horizon-2 problem with the given first stage.
    pub fn from_two_stage(first_stage: FirstStage, problem: &TwoStageProblem) -> Self {
        MultistageProblem {
            first_stage,
            stages: vec![StageData {
                outcomes: vec![Outcome {
                    a: problem.a.clone(),
                    b: problem.b.clone(),
                    rhs: problem.rhs.clone(),
                    prob: Rat::one(),
                    cost: problem.cost.clone(),
                }],
            }],
        }
    }
}

/// Value functions `V_2, …, V_T` by backward recursion (index 0 holds `V_2`).
pub fn value_functions(problem: &MultistageProblem, eps: Option<&Rat>) -> Result<Vec<PolyhedralValueFunction>, Error> {
    problem.validate()?;
    let horizon = problem.horizon();
    let mut next = PolyhedralValueFunction::zero(problem.stage_dim(horizon));
    let mut out = Vec::new();
    for t in (2..=horizon).rev() {
        let n_prev = problem.stage_dim(t - 1);
        let keep: Vec<usize> = (0..n_prev).collect();
        let mut parts = Vec::new();
        let mut cells: Option<PolyComplex> = None;
        let mut domain = HPolyhedron::universe(n_prev);
        for o in &problem.stage(t).outcomes {
            let ep = next.epigraph_problem(&o.a, &o.b, &o.rhs, &o.cost)?;
            let coupling = ep.coupling();
            let c = chamber_complex(&coupling, &keep);
            cells = Some(match cells {
                None => c,
                Some(prev) => meet_unchecked(&prev, &c)?,
            });
            domain = domain.intersect(&coupling.project(&keep))?;
            parts.push((o.prob.clone(), ep));
        }
        let v = affine_pieces(&parts, cells.expect("at least one outcome"), domain, eps)?;
        out.push(v.clone());
        next = v;
    }
    out.reverse();
    Ok(out)
}

/// `min c₁ᵀx₁ + V₂(x₁)` over the first-stage feasible set, from the backward recursion.
pub fn nested_value(problem: &MultistageProblem, eps: Option<&Rat>) -> Result<(Evaluation, Vector), Error> {
    let fs = &problem.first_stage;
    let n = fs.c.len();
    if problem.stages.is_empty() {
        return solve_first_stage(&fs.c, &fs.a, &fs.b, None);
    }
    let v2 = value_functions(problem, eps)?.remove(0);
    let mut rows: Vec<Vector> = (0..fs.a.rows()).map(|i| {
        let mut r = fs.a.row(i).to_vec();
        r.push(Rat::zero());
        r
    }).collect();
    let mut rhs = fs.b.clone();
    for (alpha, beta) in &v2.cuts {
        let mut r = alpha.clone();
        r.push(-Rat::one());
        rows.push(r);
        rhs.push(-beta.clone());
    }
    for i in 0..v2.domain.num_constraints() {
        let mut r = v2.domain.a.row(i).to_vec();
        r.push(Rat::zero());
        rows.push(r);
        rhs.push(v2.domain.b[i].clone());
    }
    let mut c = fs.c.clone();
    c.push(Rat::one());
    let (eval, mut x) = solve_first_stage(&c, &Matrix::from_rows(rows, n + 1)?, &rhs, v2.eps.clone())?;
    x.truncate(n);
    Ok((eval, x))
}

fn solve_first_stage(c: &[Rat], a: &Matrix, b: &[Rat], eps: Option<Rat>) -> Result<(Evaluation, Vector), Error> {
    match minimize(c, a, b) {
        LpOutcome::Optimal { x, value, .. } => Ok((Evaluation { value: ExtendedRat::Finite(value), eps }, x)),
        LpOutcome::Infeasible { farkas } => Err(Error::Infeasible(format!("first stage, certificate {:?}", crate::rational::fmt_vec(&farkas)))),
        LpOutcome::Unbounded { .. } => Ok((Evaluation { value: ExtendedRat::MinusInfinity, eps }, zeros(c.len()))),
    }
}

/// Cost-independent affine regions `P_2, …, P_T` (index 0 holds `P_2`):
/// `P_t = ⋀_ξ chamber complex of (ℝ^{n_{t-1}} × P_{t+1}) ∧ F(P_t(ξ)) along x_{t-1}`.
pub fn propagate_complexes(problem: &MultistageProblem) -> Result<Vec<PolyComplex>, Error> {
    let horizon = problem.horizon();
    let mut next = PolyComplex::from_cells(problem.stage_dim(horizon), [Polyhedron::universe(problem.stage_dim(horizon))]);
    let mut out = Vec::new();
    for t in (2..=horizon).rev() {
        let n_prev = problem.stage_dim(t - 1);
        let keep: Vec<usize> = (0..n_prev).collect();
        let lifted = next.lift_front(n_prev);
        let mut acc: Option<PolyComplex> = None;
        for o in &problem.stage(t).outcomes {
            let coupling = HPolyhedron { a: o.b.hstack(&o.a)?, b: o.rhs.clone() };
            let faces = PolyComplex::of_polyhedron(&coupling);
            let source = meet_unchecked(&lifted, &faces)?;
            let c = chamber_complex_of(&source, &keep);
            acc = Some(match acc {
                None => c,
                Some(prev) => meet_unchecked(&prev, &c)?,
            });
        }
        let p = acc.expect("at least one outcome");
        out.push(p.clone());
        next = p;
    }
    out.reverse();
    Ok(out)
}

/// Cost regions of one stage outcome with their quantized probabilities and costs.
#[derive(Clone, Debug)]
pub struct StageQuantization {
    pub regions: PolyComplex,
    pub valuations: Vec<(Polyhedron, ConeValuation)>,
}

/// Quantizes stage `t`, outcome `xi`, against the next value function: the
/// negated lifted normal fans above every maximal chamber of the epigraph
/// coupling are sliced at unit `z`-cost and met.
pub fn quantize_stage(
    problem: &MultistageProblem,
    t: usize,
    xi: usize,
    v_next: &PolyhedralValueFunction,
    eps: Option<&Rat>,
) -> Result<StageQuantization, Error> {
    let o = &problem.stage(t).outcomes[xi];
    let ep = v_next.epigraph_problem(&o.a, &o.b, &o.rhs, &o.cost)?;
    ep.check_support()?;
    let keep: Vec<usize> = (0..ep.n()).collect();
    let mut regions: Option<PolyComplex> = None;
    for chamber in chamber_complex(&ep.coupling(), &keep).chambers() {
        let r = ep.quantization_regions(&chamber.witness)?.ok_or(Error::EmptyPolyhedron)?;
        regions = Some(match regions {
            None => r,
            Some(prev) => meet_unchecked(&prev, &r)?,
        });
    }
    let regions = regions.ok_or_else(|| Error::Infeasible(format!("stage {t} outcome {xi} has an empty domain")))?;
    let mut valuations = Vec::new();
    for r in regions.cells() {
        let v = valuation(&o.cost, r, eps)?;
        if !v.p.is_zero() {
            valuations.push((r.clone(), v));
        }
    }
    Ok(StageQuantization { regions, valuations })
}

/// A node of the equivalent finite scenario tree.
#[derive(Clone, Debug)]
pub struct ScenarioNode {
    pub stage: usize,
    /// Constraint outcome index at this stage.
    pub xi: usize,
    /// Cost region of this node (the whole space at the root).
    pub region: Polyhedron,
    pub quantized: ConeValuation,
    pub path_prob: Rat,
    pub children: Vec<ScenarioNode>,
}

impl ScenarioNode {
    pub fn count(&self) -> usize {
        1 + self.children.iter().map(ScenarioNode::count).sum::<usize>()
    }

    /// Children's path probabilities sum to the parent's, at every inner node.
    pub fn probabilities_consistent(&self) -> bool {
        self.children.is_empty()
            || (self.children.iter().map(|c| c.path_prob.clone()).sum::<Rat>() == self.path_prob
                && self.children.iter().all(ScenarioNode::probabilities_consistent))
    }
}

/// The scenario tree rooted at the first stage.
pub fn build_scenario_tree(problem: &MultistageProblem, eps: Option<&Rat>) -> Result<ScenarioNode, Error> {
    let horizon = problem.horizon();
    let mut vfs = if horizon > 2 { value_functions(problem, eps)?.split_off(1) } else { Vec::new() };
    vfs.push(PolyhedralValueFunction::zero(problem.stage_dim(horizon)));
    // vfs holds V_3, …, V_{T+1}
    let next_of = |t: usize| &vfs[t - 2];
    let mut quantized: Vec<Vec<StageQuantization>> = Vec::new();
    for t in 2..=horizon {
        let q = (0..problem.stage(t).outcomes.len())
            .map(|xi| quantize_stage(problem, t, xi, next_of(t), eps))
            .collect::<Result<Vec<_>, _>>()?;
        quantized.push(q);
    }
    let n1 = problem.stage_dim(1);
    let mut root = ScenarioNode {
        stage: 1,
        xi: 0,
        region: Polyhedron::universe(n1),
        quantized: ConeValuation { p: Rat::one(), c: problem.first_stage.c.clone() },
        path_prob: Rat::one(),
        children: Vec::new(),
    };
    grow(&mut root, problem, &quantized);
    Ok(root)
}

fn grow(node: &mut ScenarioNode, problem: &MultistageProblem, quantized: &[Vec<StageQuantization>]) {
    let t = node.stage + 1;
    if t > problem.horizon() {
        return;
    }
    for (xi, o) in problem.stage(t).outcomes.iter().enumerate() {
        for (region, v) in &quantized[t - 2][xi].valuations {
            let mut child = ScenarioNode {
                stage: t,
                xi,
                region: region.clone(),
                quantized: v.clone(),
                path_prob: &node.path_prob * &o.prob * &v.p,
                children: Vec::new(),
            };
            grow(&mut child, problem, quantized);
            node.children.push(child);
        }
    }
}

/// Optimal value and first-stage decision of the extensive form.
#[derive(Clone, Debug)]
pub struct ExtensiveSolution {
    pub value: Rat,
    pub first_stage: Vector,
}

/// Solves `min c₁ᵀx₁ + Σ_ν p_ν č_νᵀ x_ν` subject to `A₁x₁ ≤ b₁` and
/// `A x_μ + B x_ν ≤ b` for every child `μ` of `ν`.
pub fn solve_extensive(tree: &ScenarioNode, problem: &MultistageProblem) -> Result<ExtensiveSolution, Error> {
    let mut offsets = Vec::new();
    let mut total = 0usize;
    index_nodes(tree, problem, &mut offsets, &mut total);
    let mut objective = zeros(total);
    let mut rows: Vec<Vector> = Vec::new();
    let mut rhs: Vector = Vec::new();
    let fs = &problem.first_stage;
    let mut counter = 0usize;
    assemble(tree, None, problem, &offsets, &mut counter, &mut objective, &mut rows, &mut rhs, total);
    debug_assert_eq!(counter, offsets.len());
    let a = Matrix::from_rows(rows, total)?;
    match minimize(&objective, &a, &rhs) {
        LpOutcome::Optimal { x, value, .. } => Ok(ExtensiveSolution { value, first_stage: x[..fs.c.len()].to_vec() }),
        LpOutcome::Infeasible { farkas } => Err(Error::Infeasible(format!("extensive form, certificate {:?}", crate::rational::fmt_vec(&farkas)))),
        LpOutcome::Unbounded { .. } => Err(Error::NotOptimal),
    }
}

fn index_nodes(node: &ScenarioNode, problem: &MultistageProblem, offsets: &mut Vec<usize>, total: &mut usize) {
    offsets.push(*total);
    *total += problem.stage_dim(node.stage);
    for c in &node.children {
        index_nodes(c, problem, offsets, total);
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    node: &ScenarioNode,
    parent: Option<usize>,
    problem: &MultistageProblem,
    offsets: &[usize],
    counter: &mut usize,
    objective: &mut Vector,
    rows: &mut Vec<Vector>,
    rhs: &mut Vector,
    total: usize,
) {
    let me = offsets[*counter];
    *counter += 1;
    let n = problem.stage_dim(node.stage);
    let weight = &node.path_prob;
    for j in 0..n {
        objective[me + j] = weight * &node.quantized.c[j];
    }
    let (a, b, r) = match parent {
        None => (&problem.first_stage.a, None, &problem.first_stage.b),
        Some(_) => {
            let o = &problem.stage(node.stage).outcomes[node.xi];
            (&o.a, Some(&o.b), &o.rhs)
        }
    };
    for i in 0..a.rows() {
        let mut row = zeros(total);
        for j in 0..n {
            row[me + j] = a[(i, j)].clone();
        }
        if let (Some(b), Some(p)) = (b, parent) {
            for j in 0..b.cols() {
                row[p + j] = b[(i, j)].clone();
            }
        }
        rows.push(row);
        rhs.push(r[i].clone());
    }
    for c in &node.children {
        assemble(c, Some(me), problem, offsets, counter, objective, rows, rhs, total);
    }
}

/// Monte Carlo estimate of `V(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Sample mean of `Q̂(x, c_i)` over i.i.d. costs, each recourse value taken as
/// the minimum of `c_iᵀv` over the vertices of the fiber.
pub fn mc_estimate<R: Rng + ?Sized>(problem: &TwoStageProblem, x: &[Rat], samples: usize, rng: &mut R) -> Result<McEstimate, Error> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let fiber = problem.fiber(x)?.to_v();
    if fiber.is_empty() {
        return Err(Error::Infeasible("x is outside the domain of V".into()));
    }
    let vertices: Vec<Vec<f64>> = fiber.vertices.iter().map(|v| vec_to_f64(v)).collect();
    let directions: Vec<(Vec<f64>, bool)> =
        fiber.rays.iter().map(|r| (vec_to_f64(r), false)).chain(fiber.lines.iter().map(|l| (vec_to_f64(l), true))).collect();
    let sampler = Sampler::new(&problem.cost)?;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let c = problem.recourse_cost_f64(&sampler.draw(rng));
        let scale = c.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (d, line) in &directions {
            let s: f64 = c.iter().zip(d).map(|(a, b)| a * b).sum();
            if s < -1e-12 * scale || (*line && s.abs() > 1e-12 * scale) {
                return Err(Error::SupportViolation("sampled cost makes the recourse unbounded".into()));
            }
        }
        let q = vertices.iter().map(|v| c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()).fold(f64::INFINITY, f64::min);
        sum += q;
        sum_sq += q * q;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate { mean, stderr: (var / n).sqrt(), samples })
}

impl TwoStageProblem {
    fn recourse_cost_f64(&self, c: &[f64]) -> Vec<f64> {
        let mut full = c.to_vec();
        if self.epigraph {
            full.push(1.0);
        }
        full
    }
}

/// `(x, V(x))` on an evenly spaced grid of a one-dimensional domain.
pub fn sample_value_curve(problem: &TwoStageProblem, lo: &Rat, hi: &Rat, points: usize, eps: Option<&Rat>) -> Result<Vec<(Rat, Evaluation)>, Error> {
    if problem.n() != 1 || points < 2 {
        return Err(Error::InvalidInput("value curves need a scalar first stage and two or more points".into()));
    }
    let step = (hi - lo) / int(points as i64 - 1);
    (0..points)
        .map(|k| {
            let x = lo + &step * int(k as i64);
            Ok((x.clone(), expected_value_at(problem, &[x], eps)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ints, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l1() -> TwoStageProblem {
        TwoStageProblem::worked_example(CostDistribution::uniform_l1_ball(2, int(1)).unwrap())
    }

    #[test]
    fn recourse_values() {
        let p = l1();
        assert_eq!(recourse_value(&p, &ints(&[-1]), &ints(&[1, 1])).unwrap().0, ExtendedRat::PlusInfinity);
        let (v, y) = recourse_value(&p, &ints(&[2]), &ints(&[1, 1])).unwrap();
        assert_eq!(v, ExtendedRat::Finite(int(-1)));
        let y = y.unwrap();
        assert!(y == ints(&[0, -1]) || y == ints(&[-1, 0]));
        let half_line = TwoStageProblem::new(
            Matrix::from_i64(&[&[-1]]),
            Matrix::from_i64(&[&[1]]),
            ints(&[0]),
            CostDistribution::Dirac(ints(&[1])),
        )
        .unwrap();
        assert_eq!(recourse_value(&half_line, &ints(&[0]), &ints(&[-1])).unwrap().0, ExtendedRat::MinusInfinity);
    }

    #[test]
    fn worked_example_values() {
        let p = l1();
        assert_eq!(expected_value_at(&p, &ints(&[0]), None).unwrap().exact(), Some(&rat(-7, 24)));
        assert_eq!(expected_value_at(&p, &[rat(-1, 2)], None).unwrap().exact(), Some(&int(0)));
        assert_eq!(expected_value_at(&p, &ints(&[-1]), None).unwrap().value, ExtendedRat::PlusInfinity);
        let linf = TwoStageProblem::worked_example(CostDistribution::uniform_linf_ball(2, int(1)).unwrap());
        assert_eq!(expected_value_at(&linf, &ints(&[2]), None).unwrap().exact(), Some(&rat(-2, 3)));
        let lap = TwoStageProblem::worked_example(CostDistribution::laplace_l1(2, int(1)));
        assert_eq!(expected_value_at(&lap, &ints(&[1]), None).unwrap().exact(), Some(&rat(-3, 2)));
    }

    #[test]
    fn gaussian_at_two() {
        let g = TwoStageProblem::worked_example(CostDistribution::isotropic_gaussian(2, int(1)));
        let eps = rat(1, 1_000_000);
        let v = expected_value_at(&g, &ints(&[2]), Some(&eps)).unwrap();
        assert!((v.as_f64() + 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-5);
        assert!(v.eps.is_some());
    }

    #[test]
    fn subgradients() {
        assert_eq!(subgradient_at(&l1(), &[rat(-1, 4)], None).unwrap(), vec![rat(-7, 12)]);
        let linf = TwoStageProblem::worked_example(CostDistribution::uniform_linf_ball(2, int(1)).unwrap());
        assert_eq!(subgradient_at(&linf, &[rat(3, 4)], None).unwrap(), vec![rat(-1, 6)]);
    }

    #[test]
    fn first_order_oracle() {
        let p = l1();
        match eval_or_separate(&p, &ints(&[-1]), None).unwrap() {
            FirstOrderAnswer::Separation { normal, offset, bound } => {
                assert!(dot(&normal, &ints(&[-1])) > offset && offset > bound);
                for x in [rat(-1, 2), int(0), int(5)] {
                    assert!(dot(&normal, &[x]) <= bound);
                }
            }
            other => panic!("expected a separation, got {other:?}"),
        }
        match eval_or_separate(&p, &ints(&[0]), None).unwrap() {
            FirstOrderAnswer::Value(f) => {
                assert_eq!(f.value, rat(-7, 24));
                // 0 is a breakpoint: any slope between the neighbouring pieces is a subgradient
                assert!(f.subgradient[0] >= rat(-7, 12) && f.subgradient[0] <= rat(-1, 4));
            }
            other => panic!("expected a value, got {other:?}"),
        }
        let dirac = TwoStageProblem::worked_example(CostDistribution::Dirac(ints(&[1, 2])));
        let FirstOrderAnswer::Value(f) = eval_or_separate(&dirac, &ints(&[3]), None).unwrap() else { panic!() };
        assert_eq!(ExtendedRat::Finite(f.value), recourse_value(&dirac, &ints(&[3]), &ints(&[1, 2])).unwrap().0);
    }

    #[test]
    fn affine_representation() {
        let v = build_affine_representation(&l1(), None).unwrap();
        assert_eq!(v.cuts.len(), 4);
        assert!(v.cuts.contains(&(ints(&[0]), rat(-1, 2))));
        for x in [rat(-1, 2), rat(-1, 4), int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1), int(2)] {
            assert_eq!(ExtendedRat::Finite(expected_value_at(&l1(), &[x.clone()], None).unwrap().exact().unwrap().clone()), v.value(&[x]));
        }
        assert_eq!(v.value(&ints(&[-1])), ExtendedRat::PlusInfinity);

        let zero = TwoStageProblem::worked_example(CostDistribution::Dirac(ints(&[0, 0])));
        let v = build_affine_representation(&zero, None).unwrap();
        assert_eq!(v.cuts, vec![(ints(&[0]), int(0))]);
    }

    #[test]
    fn dirac_cuts_match_parametric_lp() {
        let p = TwoStageProblem::worked_example(CostDistribution::Dirac(vec![rat(1, 3), int(-1)]));
        let v = build_affine_representation(&p, None).unwrap();
        for k in 0..20 {
            let x = rat(-1, 2) + rat(k, 6);
            let (direct, _) = recourse_value(&p, &[x.clone()], &[rat(1, 3), int(-1)]).unwrap();
            assert_eq!(v.value(&[x]), direct);
        }
    }

    #[test]
    fn monte_carlo_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let est = mc_estimate(&l1(), &ints(&[0]), 100_000, &mut rng).unwrap();
        assert!((est.mean + 7.0 / 24.0).abs() < 4.0 * est.stderr);
        let dirac = TwoStageProblem::worked_example(CostDistribution::Dirac(ints(&[1, 1])));
        let est = mc_estimate(&dirac, &ints(&[2]), 10, &mut rng).unwrap();
        assert_eq!((est.mean, est.stderr), (-1.0, 0.0));
    }

    fn scalar_box_stage() -> MultistageProblem {
        // stage 2: x2 ∈ [x1 - 1, x1 + 1] ∩ [-1, 1]; stage 3: the worked example in x2
        let worked = TwoStageProblem::worked_example(CostDistribution::uniform_l1_ball(2, int(1)).unwrap());
        MultistageProblem {
            first_stage: FirstStage { c: ints(&[0]), a: Matrix::from_i64(&[&[1], &[-1]]), b: ints(&[1, 0]) },
            stages: vec![
                StageData {
                    outcomes: vec![Outcome {
                        a: Matrix::from_i64(&[&[1], &[-1], &[1], &[-1]]),
                        b: Matrix::from_i64(&[&[-1], &[1], &[0], &[0]]),
                        rhs: ints(&[1, 1, 1, 1]),
                        prob: int(1),
                        cost: CostDistribution::UniformPolytope(
                            crate::polyhedron::VPolyhedron::polytope(vec![ints(&[-1]), ints(&[1])]).unwrap(),
                        ),
                    }],
                },
                StageData {
                    outcomes: vec![Outcome { a: worked.a.clone(), b: worked.b.clone(), rhs: worked.rhs.clone(), prob: int(1), cost: worked.cost.clone() }],
                },
            ],
        }
    }

    #[test]
    fn two_stage_reduction_of_propagation() {
        let fs = FirstStage { c: ints(&[0]), a: Matrix::from_i64(&[&[1], &[-1]]), b: ints(&[0, 0]) };
        let mp = MultistageProblem::from_two_stage(fs, &l1());
        let complexes = propagate_complexes(&mp).unwrap();
        assert_eq!(complexes[0].breakpoints(), vec![rat(-1, 2), int(0), rat(1, 2), int(1)]);
        let tree = build_scenario_tree(&mp, None).unwrap();
        assert!(tree.probabilities_consistent());
        let sol = solve_extensive(&tree, &mp).unwrap();
        assert_eq!(sol.value, rat(-7, 24));
        assert_eq!(nested_value(&mp, None).unwrap().0.exact(), Some(&rat(-7, 24)));
    }

    #[test]
    fn quantize_stage_reduces_to_two_stage() {
        let fs = FirstStage { c: ints(&[0]), a: Matrix::from_i64(&[&[1], &[-1]]), b: ints(&[3, -1]) };
        let mp = MultistageProblem::from_two_stage(fs, &TwoStageProblem::worked_example(CostDistribution::uniform_linf_ball(2, int(1)).unwrap()));
        let q = quantize_stage(&mp, 2, 0, &PolyhedralValueFunction::zero(2), None).unwrap();
        let total: Rat = q.valuations.iter().map(|(_, v)| v.p.clone()).sum();
        assert_eq!(total, int(1));
    }

    #[test]
    fn three_stage_consistency() {
        let mp = scalar_box_stage();
        let tree = build_scenario_tree(&mp, None).unwrap();
        assert!(tree.probabilities_consistent());
        let ext = solve_extensive(&tree, &mp).unwrap();
        let (nested, _) = nested_value(&mp, None).unwrap();
        assert_eq!(nested.exact(), Some(&ext.value));

        let complexes = propagate_complexes(&mp).unwrap();
        let vfs = value_functions(&mp, None).unwrap();
        // V₂ is affine on every maximal cell of P₂
        for cell in complexes[0].maximal_cells() {
            if cell.cell_dim() == 0 || !cell.is_bounded() {
                continue;
            }
            let v = cell.v();
            let (a, b) = (&v.vertices[0], &v.vertices[v.vertices.len() - 1]);
            let pts: Vec<Vector> = [rat(1, 4), rat(1, 2), rat(3, 4)].iter().map(|t| add(&scale(a, &(int(1) - t)), &scale(b, t))).collect();
            let vals: Vec<Rat> = pts.iter().map(|x| vfs[0].value(x).finite().unwrap().clone()).collect();
            assert_eq!(&vals[1] * int(2), &vals[0] + &vals[2]);
        }
    }
}
