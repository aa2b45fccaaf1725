#![allow(dead_code)]

use exquant::prelude::*;
use exquant::rational::{add, dot, int, ints};
use exquant::stochastic::{FirstStage, Outcome, StageData};
use num_traits::Signed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rand_ints<R: Rng>(rng: &mut R, len: usize, lo: i64, hi: i64) -> Vector {
    (0..len).map(|_| int(rng.random_range(lo..=hi))).collect()
}

/// Rows with bounded `{y : Ay ≤ 0}`, i.e. every fiber is a polytope.
fn bounded_rows<R: Rng>(rng: &mut R, m: usize, q: usize) -> Matrix {
    loop {
        let rows: Vec<Vector> = (0..q).map(|_| rand_ints(rng, m, -3, 3)).collect();
        if rows.iter().any(|r| r.iter().all(|v| v == &int(0))) {
            continue;
        }
        let a = Matrix::from_rows(rows, m).unwrap();
        let rec = PolyCone::from_h(a.clone());
        if rec.rays().is_empty() && rec.lines().is_empty() {
            return a;
        }
    }
}

pub fn random_uniform<R: Rng>(rng: &mut R, m: usize) -> CostDistribution {
    if rng.random_bool(0.5) {
        let lo = rand_ints(rng, m, -3, 0);
        let hi: Vector = lo.iter().map(|l| l + int(rng.random_range(1..=3))).collect();
        let vs = (0..1usize << m)
            .map(|mask| (0..m).map(|i| if mask & (1 << i) != 0 { hi[i].clone() } else { lo[i].clone() }).collect())
            .collect();
        CostDistribution::UniformPolytope(VPolyhedron::polytope(vs).unwrap().canonicalized())
    } else {
        loop {
            let vs: Vec<Vector> = (0..=m).map(|_| rand_ints(rng, m, -3, 3)).collect();
            let p = VPolyhedron::polytope(vs).unwrap();
            if p.affine_dim() == m {
                return CostDistribution::UniformPolytope(p.canonicalized());
            }
        }
    }
}

pub fn random_exponential<R: Rng>(rng: &mut R, m: usize) -> CostDistribution {
    loop {
        let rays: Vec<Vector> = (0..m).map(|_| rand_ints(rng, m, -2, 2)).collect();
        if exquant::linalg::rank_of(&rays, m) < m {
            continue;
        }
        let w = rand_ints(rng, m, -3, 3);
        if rays.iter().all(|r| dot(&w, r).is_positive()) {
            let theta = w.iter().map(|v| -v.clone()).collect();
            return CostDistribution::ExponentialCone { cone: PolyCone::from_generators(m, rays, Vec::new()), theta };
        }
    }
}

/// A random two-stage instance with bounded fibers, `m ≤ 3`, `q ≤ 6`, and a
/// full-dimensional domain containing the returned integer point.
pub fn random_two_stage(rng: &mut ChaCha8Rng, exponential: bool) -> (TwoStageProblem, Vector) {
    let m = rng.random_range(1..=3);
    let n = rng.random_range(1..=2);
    let q = rng.random_range(m + 1..=6);
    let a = bounded_rows(rng, m, q);
    let b = Matrix::from_rows((0..q).map(|_| rand_ints(rng, n, -2, 2)).collect(), n).unwrap();
    let x0 = rand_ints(rng, n, -2, 2);
    let y0 = rand_ints(rng, m, -2, 2);
    let slack = rand_ints(rng, q, 1, 3);
    let rhs = add(&add(&a.mul_vec(&y0), &b.mul_vec(&x0)), &slack);
    let cost = if exponential { random_exponential(rng, m) } else { random_uniform(rng, m) };
    (TwoStageProblem::new(a, b, rhs, cost).unwrap(), x0)
}

/// Bounding rows for `x ∈ ℝ^n` around `center`: an interval or a triangle.
fn bounding_rows<R: Rng>(rng: &mut R, n: usize, center: &[Rat]) -> Vec<(Vector, Rat)> {
    let mut rows: Vec<Vector> = Vec::new();
    for i in 0..n {
        let mut r = ints(&vec![0; n]);
        r[i] = int(-1);
        rows.push(r);
    }
    rows.push(ints(&vec![1; n]));
    rows.into_iter().map(|r| {
        let rhs = dot(&r, center) + int(rng.random_range(1..=2));
        (r, rhs)
    }).collect()
}

/// A three-stage instance with `n_t ≤ 2`, `q_t ≤ 5` and at most two outcomes
/// per stage, feasible along a common integer path.
pub fn random_three_stage(rng: &mut ChaCha8Rng) -> MultistageProblem {
    let dims = [rng.random_range(1..=2), 1, rng.random_range(1..=2)];
    let path: Vec<Vector> = dims.iter().map(|&n| rand_ints(rng, n, -1, 1)).collect();
    let first_rows = bounding_rows(rng, dims[0], &path[0]);
    let first_stage = FirstStage {
        c: rand_ints(rng, dims[0], -2, 2),
        a: Matrix::from_rows(first_rows.iter().map(|r| r.0.clone()).collect(), dims[0]).unwrap(),
        b: first_rows.iter().map(|r| r.1.clone()).collect(),
    };
    let mut stages = Vec::new();
    for t in 1..3 {
        let (n_prev, n) = (dims[t - 1], dims[t]);
        let outcomes = rng.random_range(1..=2);
        let mut list = Vec::new();
        for k in 0..outcomes {
            let mut a_rows: Vec<Vector> = bounding_rows(rng, n, &vec![int(0); n]).into_iter().map(|r| r.0).collect();
            let extra = rng.random_range(0..=(5 - a_rows.len()).min(2));
            for _ in 0..extra {
                a_rows.push(rand_ints(rng, n, -2, 2));
            }
            let q = a_rows.len();
            let a = Matrix::from_rows(a_rows, n).unwrap();
            let b = Matrix::from_rows((0..q).map(|_| rand_ints(rng, n_prev, -1, 1)).collect(), n_prev).unwrap();
            let slack = rand_ints(rng, q, 1, 2);
            let rhs = add(&add(&a.mul_vec(&path[t]), &b.mul_vec(&path[t - 1])), &slack);
            let prob = if outcomes == 1 { int(1) } else if k == 0 { rat(1, 3) } else { rat(2, 3) };
            let cost = if rng.random_bool(0.2) { CostDistribution::Dirac(rand_ints(rng, n, -2, 2)) } else { random_uniform(rng, n) };
            list.push(Outcome { a, b, rhs, prob, cost });
        }
        stages.push(StageData { outcomes: list });
    }
    MultistageProblem { first_stage, stages }
}
