//! Rational polyhedra in both representations.
//!
//! [`HPolyhedron`] is the inequality form `{x : a·x ≤ b}`, [`VPolyhedron`] the
//! generator form `conv(vertices) + cone(rays) + span(lines)`. Conversion runs
//! through the double description method on the homogenized cone. Generator
//! output is canonical: lines in reduced echelon form, vertices and rays
//! projected onto the orthogonal complement of the lineality space, rays scaled
//! so their first nonzero entry is ±1, everything sorted lexicographically. Two
//! polyhedra are equal as sets exactly when their canonical V-forms agree.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::complexes::Fan;
use crate::dd::{cone_generators, line_basis, project_out};
use crate::linalg::{rank_of, Matrix};
use crate::lp::{implicit_equalities, is_feasible};
use crate::rational::{add, dot, lex_cmp, neg, normalize_direction, primitive_integer, scale, sub, zeros, Rat, Vector};
use crate::Error;

/// `{x : a·x ≤ b}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HPolyhedron {
    pub a: Matrix,
    pub b: Vector,
}

/// `conv(vertices) + cone(rays) + span(lines)`; empty when there are no vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VPolyhedron {
    pub dim: usize,
    pub vertices: Vec<Vector>,
    pub rays: Vec<Vector>,
    pub lines: Vec<Vector>,
}

/// A face of an [`HPolyhedron`], identified by its maximal set of tight inequalities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceDesc {
    pub active_set: Vec<usize>,
    pub dim: usize,
}

/// Polyhedral cone kept in both forms: `{x : a·x ≤ 0}` and `cone(rays) + span(lines)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyCone {
    h: HPolyhedron,
    gens: VPolyhedron,
}

impl HPolyhedron {
    pub fn new(a: Matrix, b: Vector) -> Result<Self, Error> {
        if a.rows() != b.len() {
            return Err(Error::Dimension(format!("{} inequalities but {} right-hand sides", a.rows(), b.len())));
        }
        Ok(HPolyhedron { a, b })
    }

    /// The whole space `ℝ^dim`.
    pub fn universe(dim: usize) -> Self {
        HPolyhedron { a: Matrix::zeros(0, dim), b: Vec::new() }
    }

    /// An empty polyhedron in `ℝ^dim` (`0 ≤ -1`).
    pub fn empty(dim: usize) -> Self {
        HPolyhedron { a: Matrix::zeros(1, dim), b: vec![-Rat::one()] }
    }

    pub fn from_rows(rows: Vec<(Vector, Rat)>, dim: usize) -> Result<Self, Error> {
        let (a, b): (Vec<Vector>, Vec<Rat>) = rows.into_iter().unzip();
        Ok(HPolyhedron { a: Matrix::from_rows(a, dim)?, b })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    pub fn is_empty(&self) -> bool {
        !is_feasible(&self.a, &self.b)
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.a.mul_vec(x).iter().zip(&self.b).all(|(l, r)| l <= r)
    }

    /// Intersection, by stacking inequalities.
    pub fn intersect(&self, other: &HPolyhedron) -> Result<HPolyhedron, Error> {
        let mut b = self.b.clone();
        b.extend(other.b.iter().cloned());
        Ok(HPolyhedron { a: self.a.vstack(&other.a)?, b })
    }

    pub fn with_row(&self, row: Vector, rhs: Rat) -> HPolyhedron {
        let mut p = self.clone();
        p.a.push_row(row);
        p.b.push(rhs);
        p
    }

    pub fn with_equality(&self, row: Vector, rhs: Rat) -> HPolyhedron {
        self.with_row(neg(&row), -rhs.clone()).with_row(row, rhs)
    }

    /// Vertices, rays and lines, by double description on the homogenized cone.
    pub fn to_v(&self) -> VPolyhedron {
        let d = self.dim();
        let mut rows: Vec<Vector> = (0..self.a.rows())
            .map(|i| {
                let mut r = self.a.row(i).to_vec();
                r.push(-self.b[i].clone());
                r
            })
            .collect();
        let mut t_nonneg = zeros(d + 1);
        t_nonneg[d] = -Rat::one();
        rows.push(t_nonneg);
        let gens = cone_generators(&rows, &[], d + 1);
        let mut vertices = Vec::new();
        let mut rays = Vec::new();
        for r in gens.rays {
            let t = r[d].clone();
            let head: Vector = r[..d].to_vec();
            if t.is_positive() {
                vertices.push(scale(&head, &t.recip()));
            } else {
                rays.push(head);
            }
        }
        let lines: Vec<Vector> = gens.lines.iter().map(|l| l[..d].to_vec()).collect();
        if vertices.is_empty() {
            return VPolyhedron::empty(d);
        }
        VPolyhedron::canonical(d, vertices, rays, lines)
    }

    /// Irredundant inequality form of the same set: facets plus implicit
    /// equalities, each equality stated as a pair of opposite inequalities.
    pub fn minimized(&self) -> HPolyhedron {
        self.to_v().to_h()
    }

    pub fn set_eq(&self, other: &HPolyhedron) -> bool {
        self.dim() == other.dim() && self.to_v() == other.to_v()
    }

    /// Every nonempty face exactly once, the polyhedron itself first.
    pub fn faces(&self) -> Vec<FaceDesc> {
        let v = self.to_v();
        if v.is_empty() {
            return Vec::new();
        }
        let q = self.a.rows();
        let tight_vertex: Vec<Vec<bool>> =
            (0..q).map(|i| v.vertices.iter().map(|x| dot(self.a.row(i), x) == self.b[i]).collect()).collect();
        let tight_ray: Vec<Vec<bool>> = (0..q).map(|i| v.rays.iter().map(|r| dot(self.a.row(i), r).is_zero()).collect()).collect();

        let generators = |active: &[usize]| -> (Vec<usize>, Vec<usize>) {
            let vs = (0..v.vertices.len()).filter(|&k| active.iter().all(|&i| tight_vertex[i][k])).collect();
            let rs = (0..v.rays.len()).filter(|&k| active.iter().all(|&i| tight_ray[i][k])).collect();
            (vs, rs)
        };
        let closure = |vs: &[usize], rs: &[usize]| -> Vec<usize> {
            (0..q).filter(|&i| vs.iter().all(|&k| tight_vertex[i][k]) && rs.iter().all(|&k| tight_ray[i][k])).collect()
        };
        let face_dim = |vs: &[usize], rs: &[usize]| -> usize {
            let base = &v.vertices[vs[0]];
            let mut dirs: Vec<Vector> = vs[1..].iter().map(|&k| sub(&v.vertices[k], base)).collect();
            dirs.extend(rs.iter().map(|&k| v.rays[k].clone()));
            dirs.extend(v.lines.iter().cloned());
            rank_of(&dirs, v.dim)
        };

        let (vs0, rs0) = generators(&[]);
        let root = closure(&vs0, &rs0);
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(root.clone());
        out.push(FaceDesc { dim: face_dim(&vs0, &rs0), active_set: root.clone() });
        queue.push_back(root);
        while let Some(active) = queue.pop_front() {
            for i in 0..q {
                if active.contains(&i) {
                    continue;
                }
                let mut next = active.clone();
                next.push(i);
                let (vs, rs) = generators(&next);
                if vs.is_empty() {
                    continue;
                }
                let closed = closure(&vs, &rs);
                if seen.insert(closed.clone()) {
                    out.push(FaceDesc { dim: face_dim(&vs, &rs), active_set: closed.clone() });
                    queue.push_back(closed);
                }
            }
        }
        out
    }

    /// The face with the given active set, as a polyhedron.
    pub fn face(&self, f: &FaceDesc) -> HPolyhedron {
        let mut p = self.clone();
        for &i in &f.active_set {
            p = p.with_row(neg(self.a.row(i)), -self.b[i].clone());
        }
        p
    }

    pub fn recession_cone(&self) -> PolyCone {
        PolyCone::from_h(self.a.clone())
    }

    /// Normal cone of a face: the cone spanned by the rows active on it.
    pub fn normal_cone(&self, f: &FaceDesc) -> Result<PolyCone, Error> {
        if f.active_set.iter().any(|&i| i >= self.a.rows()) {
            return Err(Error::InvalidFace(format!("{:?}", f.active_set)));
        }
        let rays: Vec<Vector> = f.active_set.iter().map(|&i| self.a.row(i).to_vec()).collect();
        Ok(PolyCone::from_generators(self.dim(), rays, Vec::new()))
    }

    /// Normal cones of all faces.
    pub fn normal_fan(&self) -> Result<Fan, Error> {
        let faces = self.faces();
        if faces.is_empty() {
            return Err(Error::EmptyPolyhedron);
        }
        let cones = faces.iter().map(|f| self.normal_cone(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(Fan::from_cones(self.dim(), cones))
    }

    /// Slice over a fixed value of the leading `x0.len()` coordinates:
    /// `{y : A y ≤ b - B x0}` where `B` are the leading columns.
    pub fn fiber(&self, x0: &[Rat]) -> Result<HPolyhedron, Error> {
        let n = x0.len();
        if n > self.dim() {
            return Err(Error::Dimension(format!("fixing {} of {} coordinates", n, self.dim())));
        }
        let lead: Vec<usize> = (0..n).collect();
        let rest: Vec<usize> = (n..self.dim()).collect();
        let bx = self.a.select_cols(&lead).mul_vec(x0);
        Ok(HPolyhedron { a: self.a.select_cols(&rest), b: sub(&self.b, &bx) })
    }

    /// A canonical relative-interior point: the vertex barycenter plus the sum of the rays.
    pub fn ri_point(&self) -> Result<Vector, Error> {
        self.to_v().ri_point()
    }

    pub fn contains_ri(&self, x: &[Rat]) -> bool {
        let v = self.to_v();
        if v.is_empty() {
            return false;
        }
        let implicit = self.implicit_from(&v);
        (0..self.a.rows()).all(|i| {
            let lhs = dot(self.a.row(i), x);
            if implicit.contains(&i) {
                lhs == self.b[i]
            } else {
                lhs < self.b[i]
            }
        })
    }

    fn implicit_from(&self, v: &VPolyhedron) -> BTreeSet<usize> {
        (0..self.a.rows())
            .filter(|&i| {
                let row = self.a.row(i);
                v.vertices.iter().all(|x| dot(row, x) == self.b[i]) && v.rays.iter().all(|r| dot(row, r).is_zero())
            })
            .collect()
    }

    /// Implicit equalities (found by LP) and the resulting dimension.
    pub fn affine_hull(&self) -> Result<(HPolyhedron, usize), Error> {
        let implicit = implicit_equalities(&self.a, &self.b).ok_or(Error::EmptyPolyhedron)?;
        let eq = HPolyhedron { a: self.a.select_rows(&implicit), b: implicit.iter().map(|&i| self.b[i].clone()).collect() };
        let dim = self.dim() - eq.a.rank();
        Ok((eq, dim))
    }

    /// Dimension of the set, `None` when empty.
    pub fn set_dim(&self) -> Option<usize> {
        let v = self.to_v();
        (!v.is_empty()).then(|| v.affine_dim())
    }

    /// Image under the coordinate projection keeping `keep` (in order).
    pub fn project(&self, keep: &[usize]) -> HPolyhedron {
        self.to_v().project(keep).to_h()
    }

    /// Reorders/duplicates coordinates: the result lives in `ℝ^new_dim`
    /// and old coordinate `j` becomes new coordinate `map[j]`.
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> HPolyhedron {
        let mut a = Matrix::zeros(self.a.rows(), new_dim);
        for i in 0..self.a.rows() {
            for (j, &t) in map.iter().enumerate() {
                a[(i, t)] = self.a[(i, j)].clone();
            }
        }
        HPolyhedron { a, b: self.b.clone() }
    }

    /// `{(x, y) : x ∈ self, y ∈ other}`.
    pub fn product(&self, other: &HPolyhedron) -> HPolyhedron {
        let d = self.dim() + other.dim();
        let left = self.embed(d, &(0..self.dim()).collect::<Vec<_>>());
        let right = other.embed(d, &(self.dim()..d).collect::<Vec<_>>());
        left.intersect(&right).expect("same width")
    }

    /// `{-x : x ∈ self}`.
    pub fn negated(&self) -> HPolyhedron {
        HPolyhedron { a: self.a.neg(), b: self.b.clone() }
    }

    /// `{x : M x ∈ self}`.
    pub fn preimage(&self, m: &Matrix) -> Result<HPolyhedron, Error> {
        Ok(HPolyhedron { a: self.a.mul(m)?, b: self.b.clone() })
    }

    pub fn is_bounded(&self) -> bool {
        let v = self.to_v();
        v.rays.is_empty() && v.lines.is_empty()
    }

    pub fn is_cone(&self) -> bool {
        self.to_v().is_cone()
    }
}

impl VPolyhedron {
    pub fn empty(dim: usize) -> Self {
        VPolyhedron { dim, vertices: Vec::new(), rays: Vec::new(), lines: Vec::new() }
    }

    pub fn new(dim: usize, vertices: Vec<Vector>, rays: Vec<Vector>) -> Result<Self, Error> {
        if vertices.iter().chain(&rays).any(|v| v.len() != dim) {
            return Err(Error::Dimension(format!("generator outside ℝ^{dim}")));
        }
        Ok(VPolyhedron { dim, vertices, rays, lines: Vec::new() })
    }

    pub fn polytope(vertices: Vec<Vector>) -> Result<Self, Error> {
        let dim = vertices.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("polytope without vertices".into()))?;
        VPolyhedron::new(dim, vertices, Vec::new())
    }

    fn canonical(dim: usize, vertices: Vec<Vector>, rays: Vec<Vector>, lines: Vec<Vector>) -> Self {
        let lines = line_basis(&lines, dim);
        let mut vertices: Vec<Vector> = vertices.iter().map(|v| project_out(v, &lines)).collect();
        vertices.sort_by(|a, b| lex_cmp(a, b));
        vertices.dedup();
        let mut rays: Vec<Vector> = rays
            .iter()
            .map(|r| project_out(r, &lines))
            .filter(|r| !r.iter().all(Zero::is_zero))
            .map(|r| normalize_direction(&r))
            .collect();
        rays.sort_by(|a, b| lex_cmp(a, b));
        rays.dedup();
        VPolyhedron { dim, vertices, rays, lines }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty() && self.lines.is_empty()
    }

    /// True when the set is a cone with apex at the origin.
    pub fn is_cone(&self) -> bool {
        self.vertices.len() == 1 && self.vertices[0].iter().all(Zero::is_zero)
    }

    pub fn affine_dim(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let base = &self.vertices[0];
        let mut dirs: Vec<Vector> = self.vertices[1..].iter().map(|v| sub(v, base)).collect();
        dirs.extend(self.rays.iter().cloned());
        dirs.extend(self.lines.iter().cloned());
        rank_of(&dirs, self.dim)
    }

    /// Inequality form, via double description on the polar of the homogenized generators.
    pub fn to_h(&self) -> HPolyhedron {
        let d = self.dim;
        if self.is_empty() {
            return HPolyhedron::empty(d);
        }
        let lift = |v: &Vector, t: i64| {
            let mut w = v.clone();
            w.push(Rat::from_integer(t.into()));
            w
        };
        let mut ineqs: Vec<Vector> = self.vertices.iter().map(|v| lift(v, 1)).collect();
        ineqs.extend(self.rays.iter().map(|r| lift(r, 0)));
        let eqs: Vec<Vector> = self.lines.iter().map(|l| lift(l, 0)).collect();
        let polar = cone_generators(&ineqs, &eqs, d + 1);
        let mut rows: Vec<(Vector, Rat)> = Vec::new();
        let mut push = |w: &Vector| {
            let w = primitive_integer(w);
            let a = w[..d].to_vec();
            if a.iter().all(Zero::is_zero) {
                return;
            }
            rows.push((a, -w[d].clone()));
        };
        for w in &polar.rays {
            push(w);
        }
        for l in &polar.lines {
            push(l);
            push(&neg(l));
        }
        rows.sort_by(|x, y| lex_cmp(&x.0, &y.0).then_with(|| x.1.cmp(&y.1)));
        rows.dedup();
        HPolyhedron::from_rows(rows, d).expect("uniform rows")
    }

    /// Canonical form of the same set (minimal generators).
    pub fn canonicalized(&self) -> VPolyhedron {
        self.to_h().to_v()
    }

    pub fn ri_point(&self) -> Result<Vector, Error> {
        if self.is_empty() {
            return Err(Error::EmptyPolyhedron);
        }
        let n = Rat::from_integer((self.vertices.len() as i64).into());
        let mut p = scale(&self.vertices.iter().fold(zeros(self.dim), |acc, v| add(&acc, v)), &n.recip());
        for r in &self.rays {
            p = add(&p, r);
        }
        Ok(p)
    }

    /// Image under the coordinate projection keeping `keep` (in order).
    pub fn project(&self, keep: &[usize]) -> VPolyhedron {
        let pick = |v: &Vector| keep.iter().map(|&i| v[i].clone()).collect::<Vector>();
        let rays: Vec<Vector> = self.rays.iter().map(pick).collect();
        let lines: Vec<Vector> = self.lines.iter().map(pick).filter(|l| !l.iter().all(Zero::is_zero)).collect();
        if self.is_empty() {
            return VPolyhedron::empty(keep.len());
        }
        VPolyhedron::canonical(keep.len(), self.vertices.iter().map(pick).collect(), rays, lines)
    }
}

impl PolyCone {
    /// `{x : a·x ≤ 0}`.
    pub fn from_h(a: Matrix) -> Self {
        let d = a.cols();
        let h = HPolyhedron { b: zeros(a.rows()), a };
        let ineqs: Vec<Vector> = h.a.row_vecs();
        let g = cone_generators(&ineqs, &[], d);
        let gens = VPolyhedron::canonical(d, vec![zeros(d)], g.rays, g.lines);
        PolyCone { h: gens.to_h(), gens }
    }

    /// `cone(rays) + span(lines)`.
    pub fn from_generators(dim: usize, rays: Vec<Vector>, lines: Vec<Vector>) -> Self {
        let raw = VPolyhedron { dim, vertices: vec![zeros(dim)], rays, lines };
        let h = raw.to_h();
        let gens = h.to_v();
        PolyCone { h, gens }
    }

    pub fn dim(&self) -> usize {
        self.gens.dim
    }

    pub fn rays(&self) -> &[Vector] {
        &self.gens.rays
    }

    pub fn lines(&self) -> &[Vector] {
        &self.gens.lines
    }

    pub fn as_h(&self) -> &HPolyhedron {
        &self.h
    }

    pub fn as_v(&self) -> &VPolyhedron {
        &self.gens
    }

    pub fn is_pointed(&self) -> bool {
        self.gens.lines.is_empty()
    }

    pub fn cone_dim(&self) -> usize {
        rank_of(&self.gens.rays.iter().chain(&self.gens.lines).cloned().collect::<Vec<_>>(), self.dim())
    }

    /// `{y : yᵀx ≤ 0 for all x in the cone}`.
    pub fn polar(&self) -> PolyCone {
        PolyCone::from_generators(self.dim(), self.h.a.row_vecs(), Vec::new())
    }

    pub fn negated(&self) -> PolyCone {
        PolyCone::from_h(self.h.a.neg())
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.h.contains(x)
    }

    pub fn set_eq(&self, other: &PolyCone) -> bool {
        self.gens == other.gens
    }
}


/// A polyhedron stored in both forms: irredundant inequalities and canonical
/// generators. Equality, hashing and ordering go through the generators, so
/// two values compare equal exactly when they describe the same set.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    h: HPolyhedron,
    v: VPolyhedron,
}

impl PartialEq for Polyhedron {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl Eq for Polyhedron {}

impl std::hash::Hash for Polyhedron {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.v.hash(state)
    }
}

impl PartialOrd for Polyhedron {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Polyhedron {
    /// By dimension first, then lexicographically by generators.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let list = |a: &[Vector], b: &[Vector]| {
            for (x, y) in a.iter().zip(b) {
                let o = lex_cmp(x, y);
                if o.is_ne() {
                    return o;
                }
            }
            a.len().cmp(&b.len())
        };
        self.cell_dim()
            .cmp(&other.cell_dim())
            .then_with(|| list(&self.v.vertices, &other.v.vertices))
            .then_with(|| list(&self.v.rays, &other.v.rays))
            .then_with(|| list(&self.v.lines, &other.v.lines))
    }
}

impl Polyhedron {
    pub fn from_h(h: &HPolyhedron) -> Self {
        Self::from_v(h.to_v())
    }

    pub fn from_v(v: VPolyhedron) -> Self {
        let h = v.to_h();
        let v = if v.is_empty() { v } else { h.to_v() };
        Polyhedron { h, v }
    }

    pub fn universe(dim: usize) -> Self {
        Self::from_h(&HPolyhedron::universe(dim))
    }

    pub fn h(&self) -> &HPolyhedron {
        &self.h
    }

    pub fn v(&self) -> &VPolyhedron {
        &self.v
    }

    pub fn ambient_dim(&self) -> usize {
        self.v.dim
    }

    pub fn cell_dim(&self) -> usize {
        self.v.affine_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn is_cone(&self) -> bool {
        self.v.is_cone()
    }

    pub fn is_bounded(&self) -> bool {
        self.v.is_bounded()
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        !self.is_empty() && self.h.contains(x)
    }

    /// Exact relative-interior membership.
    pub fn contains_ri(&self, x: &[Rat]) -> bool {
        if self.is_empty() {
            return false;
        }
        let implicit = self.h.implicit_from(&self.v);
        (0..self.h.a.rows()).all(|i| {
            let lhs = dot(self.h.a.row(i), x);
            if implicit.contains(&i) {
                lhs == self.h.b[i]
            } else {
                lhs < self.h.b[i]
            }
        })
    }

    pub fn ri_point(&self) -> Result<Vector, Error> {
        self.v.ri_point()
    }

    /// True when every point of `self` lies in `other`.
    pub fn is_subset(&self, other: &Polyhedron) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let h = &other.h;
        self.v.vertices.iter().all(|x| h.contains(x))
            && self.v.rays.iter().all(|r| h.a.mul_vec(r).iter().all(|t| !t.is_positive()))
            && self.v.lines.iter().all(|l| h.a.mul_vec(l).iter().all(Zero::is_zero))
    }

    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron, Error> {
        Ok(Polyhedron::from_h(&self.h.intersect(&other.h)?))
    }

    /// All nonempty faces, as polyhedra.
    pub fn faces(&self) -> Vec<Polyhedron> {
        self.h.faces().iter().map(|f| Polyhedron::from_h(&self.h.face(f))).collect()
    }

    /// Faces of dimension one less.
    pub fn facets(&self) -> Vec<Polyhedron> {
        let d = self.cell_dim();
        self.h
            .faces()
            .into_iter()
            .filter(|f| f.dim + 1 == d)
            .map(|f| Polyhedron::from_h(&self.h.face(&f)))
            .collect()
    }

    /// Indices of inequality rows that are not implicit equalities.
    pub fn proper_rows(&self) -> Vec<usize> {
        let implicit = self.h.implicit_from(&self.v);
        (0..self.h.a.rows()).filter(|i| !implicit.contains(i)).collect()
    }

    pub fn project(&self, keep: &[usize]) -> Polyhedron {
        Polyhedron::from_v(self.v.project(keep))
    }

    pub fn negated(&self) -> Polyhedron {
        Polyhedron::from_h(&self.h.negated())
    }
}
