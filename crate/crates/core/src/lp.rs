//! Exact rational linear programming.
//!
//! Every LP `min cᵀx s.t. Ax ≤ b` (free `x`) is solved through its dual,
//! which is already in standard form: `min bᵀμ s.t. Aᵀμ = -c, μ ≥ 0`.
//! The standard-form problem has one row per primal variable, which keeps the
//! tableau small for the tall systems that appear in extensive forms. The
//! primal solution is read off the final simplex multipliers. Pivoting uses
//! Bland's rule, so the result is deterministic and cycling cannot occur.

use num_traits::{One, Signed, Zero};

use crate::linalg::Matrix;
use crate::polyhedron::{FaceDesc, HPolyhedron};
use crate::rational::{dot, neg, zeros, Rat, Vector};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vector,
    pub constraints: HPolyhedron,
    pub sense: Sense,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    /// `dual` holds one multiplier per constraint with `Aᵀ dual = -c` (for
    /// minimization) and `-bᵀ dual = value`.
    Optimal { x: Vector, value: Rat, dual: Vector },
    /// `farkas ≥ 0`, `farkasᵀA = 0`, `farkasᵀb < 0`.
    Infeasible { farkas: Vector },
    /// `point` is feasible, `A ray ≤ 0` and the objective strictly improves along `ray`.
    Unbounded { point: Vector, ray: Vector },
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn value(&self) -> Option<&Rat> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vector, constraints: HPolyhedron, sense: Sense) -> Result<Self, Error> {
        if objective.len() != constraints.dim() {
            return Err(Error::Dimension(format!(
                "objective of length {} over a {}-dimensional polyhedron",
                objective.len(),
                constraints.dim()
            )));
        }
        Ok(LinearProgram { objective, constraints, sense })
    }

    pub fn minimize(objective: Vector, constraints: HPolyhedron) -> Result<Self, Error> {
        Self::new(objective, constraints, Sense::Min)
    }

    pub fn solve(&self) -> LpOutcome {
        match self.sense {
            Sense::Min => minimize(&self.objective, &self.constraints.a, &self.constraints.b),
            Sense::Max => match minimize(&neg(&self.objective), &self.constraints.a, &self.constraints.b) {
                LpOutcome::Optimal { x, value, dual } => LpOutcome::Optimal { x, value: -value, dual },
                other => other,
            },
        }
    }

    /// Checks the returned certificate by substitution.
    pub fn verify(&self, outcome: &LpOutcome) -> bool {
        let (a, b) = (&self.constraints.a, &self.constraints.b);
        let c = match self.sense {
            Sense::Min => self.objective.clone(),
            Sense::Max => neg(&self.objective),
        };
        match outcome {
            LpOutcome::Optimal { x, value, dual } => {
                let feasible = a.mul_vec(x).iter().zip(b).all(|(l, r)| l <= r);
                let dual_ok = dual.iter().all(|m| !m.is_negative()) && a.tmul_vec(dual) == neg(&c);
                let primal_value = dot(&c, x);
                let dual_value = -dot(b, dual);
                let slack_ok = a
                    .mul_vec(x)
                    .iter()
                    .zip(b)
                    .zip(dual)
                    .all(|((l, r), m)| m.is_zero() || l == r);
                let reported = match self.sense {
                    Sense::Min => value == &primal_value,
                    Sense::Max => value == &-primal_value.clone(),
                };
                feasible && dual_ok && primal_value == dual_value && slack_ok && reported
            }
            LpOutcome::Infeasible { farkas } => {
                farkas.iter().all(|m| !m.is_negative())
                    && a.tmul_vec(farkas).iter().all(Zero::is_zero)
                    && dot(b, farkas).is_negative()
            }
            LpOutcome::Unbounded { point, ray } => {
                a.mul_vec(point).iter().zip(b).all(|(l, r)| l <= r)
                    && a.mul_vec(ray).iter().all(|v| !v.is_positive())
                    && dot(&c, ray).is_negative()
            }
        }
    }

    /// Active set of the optimal face: the constraints tight at every optimum.
    pub fn argmin_face(&self) -> Result<FaceDesc, Error> {
        let LpOutcome::Optimal { value, .. } = self.solve() else {
            return Err(Error::NotOptimal);
        };
        let d = self.constraints.dim();
        let c = match self.sense {
            Sense::Min => self.objective.clone(),
            Sense::Max => neg(&self.objective),
        };
        let v = match self.sense {
            Sense::Min => value,
            Sense::Max => -value,
        };
        let mut a = self.constraints.a.clone();
        let mut b = self.constraints.b.clone();
        a.push_row(c);
        b.push(v);
        let q = self.constraints.a.rows();
        let implicit = implicit_equalities(&a, &b).ok_or(Error::NotOptimal)?;
        let dim = d - a.select_rows(&implicit).rank();
        let active: Vec<usize> = implicit.into_iter().filter(|&i| i < q).collect();
        Ok(FaceDesc { active_set: active, dim })
    }
}

/// `min cᵀx s.t. Ax ≤ b`.
pub fn minimize(c: &[Rat], a: &Matrix, b: &[Rat]) -> LpOutcome {
    let std = StandardForm { m: a.transpose(), h: neg(c), g: b.to_vec() };
    match std.solve() {
        StdOutcome::Optimal { mu, y } => {
            let value = dot(c, &y);
            LpOutcome::Optimal { x: y, value, dual: mu }
        }
        StdOutcome::Unbounded { ray } => LpOutcome::Infeasible { farkas: ray },
        StdOutcome::Infeasible { y } => match feasible_point(a, b) {
            Ok(point) => LpOutcome::Unbounded { point, ray: y },
            Err(farkas) => LpOutcome::Infeasible { farkas },
        },
    }
}

/// A point of `{x : Ax ≤ b}` or a Farkas certificate of emptiness.
pub fn feasible_point(a: &Matrix, b: &[Rat]) -> Result<Vector, Vector> {
    let std = StandardForm { m: a.transpose(), h: zeros(a.cols()), g: b.to_vec() };
    match std.solve() {
        StdOutcome::Optimal { y, .. } => Ok(y),
        StdOutcome::Unbounded { ray } => Err(ray),
        StdOutcome::Infeasible { .. } => unreachable!("μ = 0 is feasible for a homogeneous system"),
    }
}

pub fn is_feasible(a: &Matrix, b: &[Rat]) -> bool {
    feasible_point(a, b).is_ok()
}

/// Indices of the inequalities of `{x : Ax ≤ b}` that hold with equality on
/// the whole set; `None` when the set is empty.
///
/// Repeatedly maximizes a common slack `t ≤ 1` over the undecided rows; if the
/// optimum is zero, every row carrying a positive dual multiplier is implicit.
pub fn implicit_equalities(a: &Matrix, b: &[Rat]) -> Option<Vec<usize>> {
    let q = a.rows();
    let d = a.cols();
    let mut implicit: Vec<usize> = Vec::new();
    let mut open: Vec<usize> = (0..q).collect();
    let mut first = true;
    loop {
        if open.is_empty() {
            if first && !is_feasible(a, b) {
                return None;
            }
            implicit.sort_unstable();
            return Some(implicit);
        }
        let mut rows: Vec<Vector> = Vec::new();
        let mut rhs: Vector = Vec::new();
        for &i in &open {
            let mut r = a.row(i).to_vec();
            r.push(Rat::one());
            rows.push(r);
            rhs.push(b[i].clone());
        }
        for &i in &implicit {
            let mut r = a.row(i).to_vec();
            r.push(Rat::zero());
            rows.push(neg(&r));
            rows.push(r);
            rhs.push(-b[i].clone());
            rhs.push(b[i].clone());
        }
        let mut cap = zeros(d + 1);
        cap[d] = Rat::one();
        rows.push(cap);
        rhs.push(Rat::one());
        let m = Matrix::from_rows(rows, d + 1).expect("uniform rows");
        let mut obj = zeros(d + 1);
        obj[d] = -Rat::one();
        match minimize(&obj, &m, &rhs) {
            LpOutcome::Optimal { x, dual, .. } => {
                let t = &x[d];
                if t.is_negative() {
                    return None;
                }
                if t.is_positive() {
                    implicit.sort_unstable();
                    return Some(implicit);
                }
                let newly: Vec<usize> = open
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| dual[*k].is_positive())
                    .map(|(_, &i)| i)
                    .collect();
                debug_assert!(!newly.is_empty());
                open.retain(|i| !newly.contains(i));
                implicit.extend(newly);
            }
            _ => return None,
        }
        first = false;
    }
}

struct StandardForm {
    m: Matrix,
    h: Vector,
    g: Vector,
}

enum StdOutcome {
    /// `mu` optimal; `y` multipliers with `Mᵀy ≤ g` and `hᵀy = gᵀmu`.
    Optimal { mu: Vector, y: Vector },
    /// `Mᵀy ≤ 0` and `hᵀy > 0`.
    Infeasible { y: Vector },
    /// `ray ≥ 0`, `M ray = 0`, `gᵀray < 0`.
    Unbounded { ray: Vector },
}

/// Dense tableau over `[M | I | h]` with artificial columns kept throughout so
/// that multipliers can be read from their reduced costs.
struct Tableau {
    rows: usize,
    ncols: usize,
    cells: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.cells[r][c].recip();
        for v in self.cells[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.cells[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows {
            if i == r || self.cells[i][c].is_zero() {
                continue;
            }
            let f = self.cells[i][c].clone();
            for (j, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    let t = pv * &f;
                    self.cells[i][j] -= t;
                }
            }
            let t = &pivot_rhs * &f;
            self.rhs[i] -= t;
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.cells[i][j].is_zero() {
                    let t = cb * &self.cells[i][j];
                    d[j] -= t;
                }
            }
        }
        d
    }

    /// Bland's rule over columns `< allowed`; returns the unbounded column if any.
    fn run(&mut self, cost: &[Rat], allowed: usize) -> Option<usize> {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j].is_negative()) else {
                return None;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.rows {
                let a = &self.cells[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Some(enter),
            }
        }
    }
}

impl StandardForm {
    fn solve(&self) -> StdOutcome {
        let r = self.m.rows();
        let k = self.m.cols();
        let signs: Vec<Rat> = self.h.iter().map(|h| if h.is_negative() { -Rat::one() } else { Rat::one() }).collect();
        let mut cells = Vec::with_capacity(r);
        let mut rhs = Vec::with_capacity(r);
        for i in 0..r {
            let mut row: Vec<Rat> = self.m.row(i).iter().map(|x| x * &signs[i]).collect();
            row.extend((0..r).map(|j| if j == i { Rat::one() } else { Rat::zero() }));
            cells.push(row);
            rhs.push(&self.h[i] * &signs[i]);
        }
        let mut t = Tableau { rows: r, ncols: k + r, cells, rhs, basis: (k..k + r).collect() };

        let mut phase1 = zeros(k + r);
        for c in phase1.iter_mut().skip(k) {
            *c = Rat::one();
        }
        t.run(&phase1, k + r);
        let infeasibility: Rat = t.rhs.iter().zip(&t.basis).filter(|(_, &b)| b >= k).map(|(v, _)| v.clone()).sum();
        if infeasibility.is_positive() {
            let d = t.reduced_costs(&phase1);
            let y = (0..r).map(|i| (Rat::one() - &d[k + i]) * &signs[i]).collect();
            return StdOutcome::Infeasible { y };
        }
        // drive zero-level artificials out where possible; rows that resist are redundant
        for i in 0..r {
            if t.basis[i] >= k {
                if let Some(j) = (0..k).find(|&j| !t.cells[i][j].is_zero()) {
                    t.pivot(i, j);
                }
            }
        }

        let mut phase2 = self.g.clone();
        phase2.extend(zeros(r));
        if let Some(enter) = t.run(&phase2, k) {
            let mut ray = zeros(k);
            ray[enter] = Rat::one();
            for i in 0..r {
                if t.basis[i] < k {
                    ray[t.basis[i]] = -t.cells[i][enter].clone();
                }
            }
            return StdOutcome::Unbounded { ray };
        }
        let mut mu = zeros(k);
        for i in 0..r {
            if t.basis[i] < k {
                mu[t.basis[i]] = t.rhs[i].clone();
            }
        }
        let d = t.reduced_costs(&phase2);
        let y = (0..r).map(|i| -&d[k + i] * &signs[i]).collect();
        StdOutcome::Optimal { mu, y }
    }
}
