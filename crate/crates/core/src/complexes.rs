//! Polyhedral complexes, fans, common refinements and chamber complexes.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::linalg::Matrix;
use crate::lp::{minimize, LpOutcome};
use crate::polyhedron::{HPolyhedron, PolyCone, Polyhedron};
use crate::rational::{neg, Rat, Vector};
use crate::Error;

/// A finite collection of polyhedra closed under taking faces, stored sorted
/// by dimension and then by generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyComplex {
    ambient_dim: usize,
    cells: Vec<Polyhedron>,
}

/// A complex whose cells are cones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fan {
    complex: PolyComplex,
}

/// A maximal region on which all fibers share one normal fan.
#[derive(Clone, Debug)]
pub struct Chamber {
    pub cell: Polyhedron,
    pub witness: Vector,
    pub fan_above: Option<Fan>,
}

impl PolyComplex {
    pub fn empty(ambient_dim: usize) -> Self {
        PolyComplex { ambient_dim, cells: Vec::new() }
    }

    /// The complex generated by the given polyhedra: all their nonempty faces.
    pub fn from_cells(ambient_dim: usize, cells: impl IntoIterator<Item = Polyhedron>) -> Self {
        let mut all = BTreeSet::new();
        for c in cells {
            if c.is_empty() || all.contains(&c) {
                continue;
            }
            all.extend(c.faces());
        }
        PolyComplex { ambient_dim, cells: all.into_iter().collect() }
    }

    /// The face complex of a single polyhedron.
    pub fn of_polyhedron(p: &HPolyhedron) -> Self {
        Self::from_cells(p.dim(), [Polyhedron::from_h(p)])
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn cells(&self) -> &[Polyhedron] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells that are not a proper face of another cell.
    pub fn maximal_cells(&self) -> Vec<&Polyhedron> {
        self.cells
            .iter()
            .filter(|c| !self.cells.iter().any(|d| d.cell_dim() > c.cell_dim() && c.is_subset(d)))
            .collect()
    }

    /// The cell whose relative interior contains `x`.
    pub fn locate(&self, x: &[Rat]) -> Option<&Polyhedron> {
        self.cells.iter().find(|c| c.contains_ri(x))
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.cells.iter().any(|c| c.contains(x))
    }

    /// Maximal cells with their canonical interior points.
    pub fn chambers(&self) -> Vec<Chamber> {
        self.maximal_cells()
            .into_iter()
            .map(|c| Chamber { cell: c.clone(), witness: c.ri_point().expect("cells are nonempty"), fan_above: None })
            .collect()
    }

    /// Every cell of dimension zero in a one-dimensional complex, sorted.
    pub fn breakpoints(&self) -> Vec<Rat> {
        self.cells.iter().filter(|c| c.cell_dim() == 0 && c.ambient_dim() == 1).map(|c| c.v().vertices[0][0].clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// True when `x` lies in the support and in exactly one relative interior.
    pub fn partitions_at(&self, x: &[Rat]) -> bool {
        let hits = self.cells.iter().filter(|c| c.contains_ri(x)).count();
        if self.contains(x) {
            hits == 1
        } else {
            hits == 0
        }
    }

    /// `supp(self) ⊆ supp(other)`.
    pub fn support_within(&self, other: &PolyComplex) -> bool {
        self.maximal_cells().into_iter().all(|c| covered(c, other))
    }

    pub fn same_support(&self, other: &PolyComplex) -> bool {
        self.ambient_dim == other.ambient_dim && self.support_within(other) && other.support_within(self)
    }

    /// Every cell mapped through `x ↦ -x`.
    pub fn negated(&self) -> PolyComplex {
        let mut cells: Vec<Polyhedron> = self.cells.iter().map(Polyhedron::negated).collect();
        cells.sort();
        PolyComplex { ambient_dim: self.ambient_dim, cells }
    }

    /// `ℝ^lead × self`, with the new coordinates in front.
    pub fn lift_front(&self, lead: usize) -> PolyComplex {
        let d = self.ambient_dim + lead;
        let map: Vec<usize> = (lead..d).collect();
        let mut cells: Vec<Polyhedron> = self.cells.iter().map(|c| Polyhedron::from_h(&c.h().embed(d, &map))).collect();
        cells.sort();
        PolyComplex { ambient_dim: d, cells }
    }
}

/// Whether the cells of `by` cover the polyhedron `c`.
///
/// The pieces `c ∩ D` of full dimension in `c` form a subdivision of part of
/// `c`; they cover `c` exactly when each of their facets that is not on the
/// relative boundary of `c` is shared by two pieces.
fn covered(c: &Polyhedron, by: &PolyComplex) -> bool {
    let k = c.cell_dim();
    let pieces: BTreeSet<Polyhedron> = by
        .cells
        .iter()
        .filter_map(|d| c.intersect(d).ok())
        .filter(|p| !p.is_empty() && p.cell_dim() == k)
        .collect();
    if pieces.is_empty() {
        return false;
    }
    if k == 0 {
        return true;
    }
    let boundary: Vec<Polyhedron> = c.facets();
    let mut count: BTreeMap<Polyhedron, usize> = BTreeMap::new();
    for p in &pieces {
        for f in p.facets() {
            *count.entry(f).or_insert(0) += 1;
        }
    }
    count.into_iter().all(|(f, n)| n == 2 || boundary.iter().any(|b| f.is_subset(b)))
}

/// Common refinement of two complexes with the same support.
pub fn meet(c1: &PolyComplex, c2: &PolyComplex) -> Result<PolyComplex, Error> {
    if c1.ambient_dim != c2.ambient_dim {
        return Err(Error::Dimension(format!("complexes in ℝ^{} and ℝ^{}", c1.ambient_dim, c2.ambient_dim)));
    }
    if !c1.same_support(c2) {
        return Err(Error::SupportMismatch("meet needs complexes with equal supports".into()));
    }
    meet_unchecked(c1, c2)
}

/// All nonempty intersections of cells, closed under faces. Its support is the
/// intersection of the two supports.
pub fn meet_unchecked(c1: &PolyComplex, c2: &PolyComplex) -> Result<PolyComplex, Error> {
    if c1.ambient_dim != c2.ambient_dim {
        return Err(Error::Dimension(format!("complexes in ℝ^{} and ℝ^{}", c1.ambient_dim, c2.ambient_dim)));
    }
    let mut pieces = BTreeSet::new();
    for a in c1.maximal_cells() {
        for b in c2.maximal_cells() {
            let p = a.intersect(b)?;
            if !p.is_empty() {
                pieces.insert(p);
            }
        }
    }
    Ok(PolyComplex::from_cells(c1.ambient_dim, pieces))
}

/// True when the supports agree and every cell of `fine` lies in a cell of `coarse`.
pub fn refines(fine: &PolyComplex, coarse: &PolyComplex) -> bool {
    fine.same_support(coarse) && fine.cells.iter().all(|c| coarse.cells.iter().any(|d| c.is_subset(d)))
}

/// Chamber complex of a polyhedron along the coordinate projection onto `keep`.
pub fn chamber_complex(source: &HPolyhedron, keep: &[usize]) -> PolyComplex {
    chamber_complex_of(&PolyComplex::of_polyhedron(source), keep)
}

/// Chamber complex of a polyhedral complex with convex support along the
/// projection onto `keep`: for every `x` in the projected support the chamber
/// is the intersection of the projections of all cells whose projection
/// contains `x`.
pub fn chamber_complex_of(source: &PolyComplex, keep: &[usize]) -> PolyComplex {
    let n = keep.len();
    let projected: Vec<Polyhedron> =
        source.cells.iter().map(|c| c.project(keep)).collect::<BTreeSet<_>>().into_iter().collect();
    let Some(top) = projected.iter().map(Polyhedron::cell_dim).max() else {
        return PolyComplex::empty(n);
    };
    let full: Vec<&Polyhedron> = projected.iter().filter(|p| p.cell_dim() == top).collect();
    let (hull, _) = full[0].h().affine_hull().expect("nonempty cell");
    let eqs = rows_of(&hull, &(0..hull.num_constraints()).collect::<Vec<_>>());

    // open regions with the indices of the full-dimensional projections containing them
    let mut regions: Vec<(Vec<(Vector, Rat)>, Vec<usize>)> = vec![(Vec::new(), Vec::new())];
    for (k, cell) in full.iter().enumerate() {
        let facets = rows_of(cell.h(), &cell.proper_rows());
        let mut next = Vec::new();
        for (strict, label) in regions {
            let mut inside = strict.clone();
            inside.extend(facets.iter().cloned());
            if !realized(n, &eqs, &inside) {
                next.push((strict, label));
                continue;
            }
            let mut with = label.clone();
            with.push(k);
            next.push((inside, with));
            // the rest of the region, cut along the facets of the cell
            let mut prefix = strict.clone();
            for (a, b) in &facets {
                let mut piece = prefix.clone();
                piece.push((neg(a), -b.clone()));
                if realized(n, &eqs, &piece) {
                    next.push((piece, label.clone()));
                }
                prefix.push((a.clone(), b.clone()));
            }
        }
        regions = next;
    }
    let mut chambers = BTreeSet::new();
    for (_, label) in regions {
        let Some((first, rest)) = label.split_first() else {
            continue;
        };
        let mut chamber = full[*first].clone();
        for &k in rest {
            chamber = chamber.intersect(full[k]).expect("same dimension");
        }
        chambers.insert(chamber);
    }
    PolyComplex::from_cells(n, chambers)
}

fn rows_of(h: &HPolyhedron, idx: &[usize]) -> Vec<(Vector, Rat)> {
    idx.iter().map(|&i| (h.a.row(i).to_vec(), h.b[i].clone())).collect()
}

/// Whether the relatively open set `{eqs hold, strict rows hold strictly}` is
/// nonempty: `max s` over `a·x + s ≤ b` (strict rows), the equalities and `s ≤ 1`
/// is positive.
fn realized(n: usize, eqs: &[(Vector, Rat)], strict: &[(Vector, Rat)]) -> bool {
    let mut rows: Vec<Vector> = Vec::new();
    let mut rhs: Vector = Vec::new();
    let ext = |a: &[Rat], s: Rat| {
        let mut r = a.to_vec();
        r.push(s);
        r
    };
    for (a, b) in strict {
        rows.push(ext(a, Rat::one()));
        rhs.push(b.clone());
    }
    for (a, b) in eqs {
        rows.push(ext(a, Rat::zero()));
        rhs.push(b.clone());
        rows.push(ext(&neg(a), Rat::zero()));
        rhs.push(-b.clone());
    }
    rows.push(ext(&vec![Rat::zero(); n], Rat::one()));
    rhs.push(Rat::one());
    let mut objective = vec![Rat::zero(); n + 1];
    objective[n] = -Rat::one();
    let m = Matrix::from_rows(rows, n + 1).expect("uniform rows");
    matches!(minimize(&objective, &m, &rhs), LpOutcome::Optimal { value, .. } if value.is_negative())
}

/// Normal fan of the fiber above the chamber's witness.
pub fn fan_above(source: &HPolyhedron, chamber: &Chamber) -> Result<Fan, Error> {
    let fiber = source.fiber(&chamber.witness)?;
    if fiber.is_empty() {
        return Err(Error::EmptyPolyhedron);
    }
    fiber.normal_fan()
}

impl Fan {
    pub fn from_cones(dim: usize, cones: Vec<PolyCone>) -> Self {
        let cells = cones.iter().map(|c| Polyhedron::from_h(c.as_h()));
        Fan { complex: PolyComplex::from_cells(dim, cells) }
    }

    /// A complex whose cells all contain the origin as a vertex or in their lineality.
    pub fn from_complex(complex: PolyComplex) -> Result<Self, Error> {
        let origin = vec![Rat::zero(); complex.ambient_dim];
        if complex.cells.iter().any(|c| !c.contains(&origin) || !c.is_cone()) {
            return Err(Error::InvalidInput("fan cells must be cones".into()));
        }
        Ok(Fan { complex })
    }

    /// The fan with the single cone `ℝ^dim`.
    pub fn trivial(dim: usize) -> Self {
        Fan { complex: PolyComplex::from_cells(dim, [Polyhedron::universe(dim)]) }
    }

    pub fn dim(&self) -> usize {
        self.complex.ambient_dim
    }

    pub fn complex(&self) -> &PolyComplex {
        &self.complex
    }

    pub fn cones(&self) -> &[Polyhedron] {
        &self.complex.cells
    }

    pub fn maximal_cones(&self) -> Vec<&Polyhedron> {
        self.complex.maximal_cells()
    }

    pub fn negated(&self) -> Fan {
        Fan { complex: self.complex.negated() }
    }

    pub fn meet(&self, other: &Fan) -> Result<Fan, Error> {
        Ok(Fan { complex: meet(&self.complex, &other.complex)? })
    }

    /// Splits every cone by the hyperplane `normal·x = 0`.
    pub fn split_by(&self, normal: &[Rat]) -> Fan {
        let d = self.dim();
        let zero = Rat::zero();
        let halves = [
            HPolyhedron::universe(d).with_row(normal.to_vec(), zero.clone()),
            HPolyhedron::universe(d).with_row(neg(normal), zero),
        ];
        let split = PolyComplex::from_cells(d, halves.iter().map(Polyhedron::from_h));
        Fan { complex: meet_unchecked(&self.complex, &split).expect("same ambient dimension") }
    }

    /// Support, as a cone: union of the maximal cones when it is convex.
    pub fn support_contains(&self, x: &[Rat]) -> bool {
        self.complex.contains(x)
    }
}

/// Witness-independent check used by tests: the fan is the same at every
/// rational point of the chamber's relative interior.
pub fn fan_at(source: &HPolyhedron, x: &[Rat]) -> Result<Fan, Error> {
    source.fiber(x)?.normal_fan()
}

/// `{c : (c, 1) ∈ cell}` for every cell, dropping empty slices.
pub fn slice_at_last_one(complex: &PolyComplex) -> PolyComplex {
    let n = complex.ambient_dim - 1;
    let keep: Vec<usize> = (0..n).collect();
    let cells: BTreeSet<Polyhedron> = complex
        .cells
        .iter()
        .map(|c| {
            let h = c.h();
            let b = (0..h.num_constraints()).map(|i| &h.b[i] - &h.a[(i, n)]).collect();
            Polyhedron::from_h(&HPolyhedron { a: h.a.select_cols(&keep), b })
        })
        .filter(|p| !p.is_empty())
        .collect();
    PolyComplex { ambient_dim: n, cells: cells.into_iter().collect() }
}
