//! Placing triangulations of polytopes and pointed cones, with exact volumes
//! and centroids.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::linalg::{rank_of, Matrix, Solution};
use crate::polyhedron::{PolyCone, VPolyhedron};
use crate::rational::{dot, factorial, lex_cmp, scale, sub, sum, zeros, Rat, Vector};
use crate::Error;

/// A simplex given by affinely independent vertices, or a simplicial cone given
/// by linearly independent rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimplexCell {
    Simplex(Vec<Vector>),
    Cone(Vec<Vector>),
}

impl SimplexCell {
    pub fn dim(&self) -> usize {
        match self {
            SimplexCell::Simplex(v) => v.len().saturating_sub(1),
            SimplexCell::Cone(r) => r.len(),
        }
    }

    pub fn generators(&self) -> &[Vector] {
        match self {
            SimplexCell::Simplex(v) | SimplexCell::Cone(v) => v,
        }
    }
}

/// Placing triangulation of a bounded polyhedron using only its vertices,
/// inserted in lexicographic order. Works in the affine hull, so the polytope
/// need not be full-dimensional.
pub fn triangulate_polytope(p: &VPolyhedron) -> Result<Vec<SimplexCell>, Error> {
    if !p.is_bounded() {
        return Err(Error::Unsupported("triangulating an unbounded polyhedron".into()));
    }
    let mut pts = p.vertices.clone();
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup();
    Ok(triangulate_points(&pts))
}

/// Placing triangulation of distinct points, inserted in the given order.
pub fn triangulate_points(pts: &[Vector]) -> Vec<SimplexCell> {
    placing(pts).into_iter().map(|s| SimplexCell::Simplex(s.into_iter().map(|i| pts[i].clone()).collect())).collect()
}

/// Triangulation of a pointed cone into simplicial cones on its own rays.
pub fn triangulate_cone(k: &PolyCone) -> Result<Vec<SimplexCell>, Error> {
    if !k.is_pointed() {
        return Err(Error::Unsupported("triangulating a cone with nontrivial lineality".into()));
    }
    let rays = k.rays().to_vec();
    if rays.is_empty() {
        return Ok(vec![SimplexCell::Cone(Vec::new())]);
    }
    // a linear form positive on every ray: minus the sum of the inequality rows
    let h = k.as_h();
    let w: Vector = (0..k.dim()).map(|j| -(0..h.num_constraints()).fold(Rat::zero(), |acc, i| acc + &h.a[(i, j)])).collect();
    let section: Vec<Vector> = rays.iter().map(|r| scale(r, &dot(&w, r).recip())).collect();
    let mut order: Vec<usize> = (0..rays.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&section[a], &section[b]));
    let sorted: Vec<Vector> = order.iter().map(|&i| section[i].clone()).collect();
    Ok(placing(&sorted)
        .into_iter()
        .map(|s| SimplexCell::Cone(s.into_iter().map(|i| rays[order[i]].clone()).collect()))
        .collect())
}

/// Placing triangulation of a finite point set (indices into `pts`).
fn placing(pts: &[Vector]) -> Vec<Vec<usize>> {
    if pts.is_empty() {
        return Vec::new();
    }
    let dim = pts[0].len();
    // pick an affine basis greedily, then express every point in its coordinates
    let mut basis = vec![0usize];
    let mut dirs: Vec<Vector> = Vec::new();
    for (i, p) in pts.iter().enumerate().skip(1) {
        let mut trial = dirs.clone();
        trial.push(sub(p, &pts[0]));
        if rank_of(&trial, dim) > dirs.len() {
            dirs = trial;
            basis.push(i);
        }
    }
    let k = dirs.len();
    if k == 0 {
        return vec![vec![0]];
    }
    let d = Matrix::from_rows(dirs, dim).expect("uniform").transpose();
    let local: Vec<Vector> = pts
        .iter()
        .map(|p| match d.solve(&sub(p, &pts[0])).expect("shape") {
            Solution::Unique(x) => x,
            _ => unreachable!("points lie in the affine hull of the basis"),
        })
        .collect();

    let mut simplices: Vec<Vec<usize>> = vec![{
        let mut s = basis.clone();
        s.sort_unstable();
        s
    }];
    for i in 0..pts.len() {
        if basis.contains(&i) {
            continue;
        }
        // boundary facets appear in exactly one simplex; remember the opposite vertex
        let mut facets: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        for s in &simplices {
            for j in 0..s.len() {
                let mut f = s.clone();
                let opp = f.remove(j);
                facets.entry(f).and_modify(|e| e.0 += 1).or_insert((1, opp));
            }
        }
        let mut added = Vec::new();
        for (f, &(count, opp)) in &facets {
            if count == 1 && beyond(&local, f, opp, i) {
                let mut n = f.clone();
                n.push(i);
                n.sort_unstable();
                added.push(n);
            }
        }
        simplices.extend(added);
    }
    simplices
}

/// Whether `p` lies strictly on the other side of the facet `f` from `opp`.
fn beyond(local: &[Vector], f: &[usize], opp: usize, p: usize) -> bool {
    let base = &local[f[0]];
    let k = base.len();
    let mut cols: Vec<Vector> = f[1..].iter().map(|&v| sub(&local[v], base)).collect();
    cols.push(sub(&local[opp], base));
    let m = Matrix::from_rows(cols, k).expect("uniform").transpose();
    match m.solve(&sub(&local[p], base)).expect("shape") {
        Solution::Unique(x) => x[k - 1].is_negative(),
        _ => unreachable!("simplex vertices are affinely independent"),
    }
}

/// `d`-dimensional volume of a simplex whose affine hull is `{y_j = q_j, j ∈ J}`.
pub fn simplex_volume(s: &SimplexCell) -> Result<Rat, Error> {
    let SimplexCell::Simplex(vs) = s else {
        return Err(Error::Unsupported("volume of a cone".into()));
    };
    let k = vs.len() - 1;
    let free = free_coordinates(vs)?;
    if free.len() != k {
        return Err(Error::IrrationalVolume("affine hull is not axis-aligned".into()));
    }
    if k == 0 {
        return Ok(Rat::one());
    }
    let rows: Vec<Vector> = vs[1..].iter().map(|v| free.iter().map(|&j| &v[j] - &vs[0][j]).collect()).collect();
    Ok(Matrix::from_rows(rows, k)?.det()?.abs() / factorial(k))
}

/// Coordinates that are not constant over the points.
pub fn free_coordinates(vs: &[Vector]) -> Result<Vec<usize>, Error> {
    let first = vs.first().ok_or_else(|| Error::InvalidInput("no points".into()))?;
    Ok((0..first.len()).filter(|&j| vs.iter().any(|v| v[j] != first[j])).collect())
}

/// Sum of simplex volumes over a triangulation.
pub fn polytope_volume(p: &VPolyhedron) -> Result<Rat, Error> {
    let dim = p.affine_dim();
    triangulate_polytope(p)?.iter().filter(|s| s.dim() == dim).try_fold(Rat::zero(), |acc, s| Ok(acc + simplex_volume(s)?))
}

/// Equibarycenter of a simplex.
pub fn centroid(s: &SimplexCell) -> Result<Vector, Error> {
    let SimplexCell::Simplex(vs) = s else {
        return Err(Error::Unsupported("centroid of a cone".into()));
    };
    let n = Rat::from_integer((vs.len() as i64).into());
    Ok(scale(&sum(vs, vs[0].len()), &n.recip()))
}

/// Volume-weighted centroid of a polytope.
pub fn polytope_centroid(p: &VPolyhedron) -> Result<Vector, Error> {
    let dim = p.affine_dim();
    let mut total = Rat::zero();
    let mut moment = zeros(p.dim);
    for s in triangulate_polytope(p)?.iter().filter(|s| s.dim() == dim) {
        let v = simplex_volume(s)?;
        moment = moment.iter().zip(centroid(s)?).map(|(m, c)| m + &v * c).collect();
        total += v;
    }
    Ok(scale(&moment, &total.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::polyhedron::HPolyhedron;
    use crate::rational::{int, ints, rat};
    use proptest::prelude::*;

    fn poly(vs: &[&[i64]]) -> VPolyhedron {
        VPolyhedron::polytope(vs.iter().map(|v| ints(v)).collect()).unwrap().canonicalized()
    }

    #[test]
    fn simplex_is_itself() {
        let t = triangulate_polytope(&poly(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(simplex_volume(&t[0]).unwrap(), rat(1, 2));
        assert_eq!(centroid(&t[0]).unwrap(), vec![rat(1, 3), rat(1, 3)]);
    }

    #[test]
    fn squares_split_in_two() {
        let t = triangulate_polytope(&poly(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])).unwrap();
        assert_eq!(t.len(), 2);
        let t = triangulate_polytope(&poly(&[&[-1, -1], &[1, -1], &[-1, 1], &[1, 1]])).unwrap();
        assert_eq!(t.len(), 2);
        for s in &t {
            assert_eq!(simplex_volume(s).unwrap(), int(2));
        }
    }

    #[test]
    fn l1_ball_area() {
        assert_eq!(polytope_volume(&poly(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]])).unwrap(), int(2));
    }

    #[test]
    fn axis_aligned_segment() {
        let s = SimplexCell::Simplex(vec![ints(&[0, 3]), ints(&[2, 3])]);
        assert_eq!(simplex_volume(&s).unwrap(), int(2));
        assert_eq!(centroid(&s).unwrap(), ints(&[1, 3]));
        let diag = SimplexCell::Simplex(vec![ints(&[0, 0]), ints(&[1, 1])]);
        assert!(matches!(simplex_volume(&diag), Err(Error::IrrationalVolume(_))));
    }

    #[test]
    fn centroids() {
        let seg = SimplexCell::Simplex(vec![ints(&[0]), ints(&[1])]);
        assert_eq!(centroid(&seg).unwrap(), vec![rat(1, 2)]);
        let shifted = SimplexCell::Simplex(vec![ints(&[1, 1]), ints(&[2, 1]), ints(&[1, 2])]);
        assert_eq!(centroid(&shifted).unwrap(), vec![rat(4, 3), rat(4, 3)]);
    }

    #[test]
    fn cones() {
        let quadrant = PolyCone::from_generators(2, vec![ints(&[1, 0]), ints(&[1, 1]), ints(&[0, 1])], Vec::new());
        assert_eq!(triangulate_cone(&quadrant).unwrap().len(), 1);
        let wide = PolyCone::from_generators(2, vec![ints(&[1, 0]), ints(&[-1, 1])], Vec::new());
        let with_middle = PolyCone::from_generators(2, vec![ints(&[1, 0]), ints(&[1, 1]), ints(&[0, 1])], Vec::new());
        assert_eq!(triangulate_cone(&wide).unwrap().len(), 1);
        assert_eq!(triangulate_cone(&with_middle).unwrap().len(), 1);
        let pentagon_cone = PolyCone::from_generators(
            3,
            vec![ints(&[1, 0, 1]), ints(&[0, 1, 1]), ints(&[-1, 0, 1]), ints(&[0, -1, 1]), ints(&[2, 2, 3])],
            Vec::new(),
        );
        assert_eq!(triangulate_cone(&pentagon_cone).unwrap().len(), 3);
        let orthant = PolyCone::from_h(Matrix::from_i64(&[&[-1, 0, 0], &[0, -1, 0], &[0, 0, -1]]));
        assert_eq!(triangulate_cone(&orthant).unwrap(), vec![SimplexCell::Cone(vec![ints(&[0, 0, 1]), ints(&[0, 1, 0]), ints(&[1, 0, 0])])]);
        let half = PolyCone::from_h(Matrix::from_i64(&[&[0, -1]]));
        assert!(triangulate_cone(&half).is_err());
    }

    #[test]
    fn lower_dimensional_polytope() {
        // a triangle in the plane z = 1 of ℝ³
        let t = triangulate_polytope(&poly(&[&[0, 0, 1], &[2, 0, 1], &[0, 2, 1], &[2, 2, 1]])).unwrap();
        assert_eq!(t.len(), 2);
        let total: Rat = t.iter().map(|s| simplex_volume(s).unwrap()).sum();
        assert_eq!(total, int(4));
    }

    fn random_polytope() -> impl Strategy<Value = VPolyhedron> {
        prop::collection::vec(prop::collection::vec(-6i64..7, 2), 4..9).prop_filter_map("full dimensional", |pts| {
            let v = VPolyhedron::polytope(pts.iter().map(|p| ints(p)).collect()).ok()?.canonicalized();
            (v.affine_dim() == 2).then_some(v)
        })
    }

    /// Shoelace area of a convex polygon from its facet-ordered vertices.
    fn shoelace(p: &VPolyhedron) -> Rat {
        let c = polytope_centroid(p).unwrap();
        let mut vs = p.vertices.clone();
        let ang = |v: &Vector| (crate::rational::to_f64(&(&v[1] - &c[1]))).atan2(crate::rational::to_f64(&(&v[0] - &c[0])));
        vs.sort_by(|a, b| ang(a).partial_cmp(&ang(b)).unwrap());
        let n = vs.len();
        let twice: Rat = (0..n).map(|i| &vs[i][0] * &vs[(i + 1) % n][1] - &vs[(i + 1) % n][0] * &vs[i][1]).sum();
        twice.abs() / int(2)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn volume_matches_shoelace(p in random_polytope()) {
            prop_assert_eq!(polytope_volume(&p).unwrap(), shoelace(&p));
        }

        #[test]
        fn triangulation_cells_are_interior_disjoint(p in random_polytope()) {
            let t = triangulate_polytope(&p).unwrap();
            let cells: Vec<HPolyhedron> = t.iter().map(|s| VPolyhedron::polytope(s.generators().to_vec()).unwrap().to_h()).collect();
            for i in 0..cells.len() {
                for j in i + 1..cells.len() {
                    let both = cells[i].intersect(&cells[j]).unwrap();
                    prop_assert!(both.set_dim().map_or(true, |d| d < 2));
                }
            }
        }

        #[test]
        fn centroid_is_translation_equivariant(p in random_polytope(), dx in -5i64..5, dy in -5i64..5) {
            let shift = ints(&[dx, dy]);
            let moved = VPolyhedron::polytope(p.vertices.iter().map(|v| crate::rational::add(v, &shift)).collect()).unwrap();
            let expected = crate::rational::add(&polytope_centroid(&p).unwrap(), &shift);
            prop_assert_eq!(polytope_centroid(&moved).unwrap(), expected);
        }
    }
}
