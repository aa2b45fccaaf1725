//! Double description method for polyhedral cones.
//!
//! Converts `{x : Ax ≤ 0, Ex = 0}` into extreme rays plus a lineality basis.
//! Constraints are inserted in index order starting from the whole space
//! (every coordinate axis a line). Two rays on opposite sides of a new
//! hyperplane are combined only when they are adjacent, decided by the rank of
//! the processed constraints tight on both.

use num_traits::{Signed, Zero};

use crate::linalg::{rank_of, Matrix};
use crate::rational::{dot, lex_cmp, normalize_direction, scale, sub, unit, Rat, Vector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeGenerators {
    pub rays: Vec<Vector>,
    pub lines: Vec<Vector>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Inequality,
    Equality,
}

pub fn cone_generators(ineqs: &[Vector], eqs: &[Vector], dim: usize) -> ConeGenerators {
    let mut lines: Vec<Vector> = (0..dim).map(|i| unit(dim, i)).collect();
    let mut rays: Vec<Vector> = Vec::new();
    let mut processed: Vec<Vector> = Vec::new();

    let order = eqs.iter().map(|e| (e, Kind::Equality)).chain(ineqs.iter().map(|a| (a, Kind::Inequality)));
    for (a, kind) in order {
        if a.iter().all(Zero::is_zero) {
            continue;
        }
        if let Some(k) = lines.iter().position(|l| !dot(a, l).is_zero()) {
            let pivot = lines.remove(k);
            let ap = dot(a, &pivot);
            let project = |v: &Vector| {
                let f = dot(a, v) / &ap;
                if f.is_zero() {
                    v.clone()
                } else {
                    sub(v, &scale(&pivot, &f))
                }
            };
            lines = lines.iter().map(project).collect();
            rays = rays.iter().map(project).collect();
            if kind == Kind::Inequality {
                let dir = if ap.is_positive() { -Rat::from_integer(1.into()) } else { Rat::from_integer(1.into()) };
                rays.push(scale(&pivot, &dir));
            }
            processed.push(a.clone());
            continue;
        }

        let values: Vec<Rat> = rays.iter().map(|r| dot(a, r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_positive()).collect();
        let negs: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_negative()).collect();
        let target_rank = dim - lines.len();
        let mut next: Vec<Vector> = Vec::new();
        for (i, r) in rays.iter().enumerate() {
            if values[i].is_zero() || (kind == Kind::Inequality && values[i].is_negative()) {
                next.push(r.clone());
            }
        }
        if target_rank >= 2 {
            for &p in &pos {
                for &n in &negs {
                    let common: Vec<Vector> = processed
                        .iter()
                        .filter(|row| dot(row, &rays[p]).is_zero() && dot(row, &rays[n]).is_zero())
                        .cloned()
                        .collect();
                    if rank_of(&common, dim) + 2 != target_rank {
                        continue;
                    }
                    let combo = sub(&scale(&rays[n], &values[p]), &scale(&rays[p], &values[n]));
                    next.push(normalize_direction(&combo));
                }
            }
        }
        rays = next;
        processed.push(a.clone());
    }

    let mut rays: Vec<Vector> = rays.iter().filter(|r| !r.iter().all(Zero::is_zero)).map(|r| normalize_direction(r)).collect();
    rays.sort_by(|a, b| lex_cmp(a, b));
    rays.dedup();
    ConeGenerators { rays, lines: line_basis(&lines, dim) }
}

/// Canonical basis of a linear span: the nonzero rows of its reduced echelon form.
pub fn line_basis(lines: &[Vector], dim: usize) -> Vec<Vector> {
    if lines.is_empty() {
        return Vec::new();
    }
    let (r, pivots) = Matrix::from_rows(lines.to_vec(), dim).expect("uniform").rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

/// Orthogonal projection onto the complement of `span(lines)`.
pub fn project_out(v: &[Rat], lines: &[Vector]) -> Vector {
    if lines.is_empty() {
        return v.to_vec();
    }
    let dim = v.len();
    let l = Matrix::from_rows(lines.to_vec(), dim).expect("uniform");
    let gram = l.mul(&l.transpose()).expect("square");
    let coeffs = gram.inverse().expect("independent lines").mul_vec(&l.mul_vec(v));
    sub(v, &l.tmul_vec(&coeffs))
}
