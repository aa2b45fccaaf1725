//! Cost distributions and cone-valuation oracles.
//!
//! For a region `R` of cost space the oracles return `p̌ = P(c ∈ ri R)` and
//! `č = E[c | c ∈ ri R]` (with `č = 0` when `p̌ = 0`). Uniform distributions on
//! polytopes, exponential distributions on pointed cones, point masses and
//! finite mixtures of these are handled exactly. Gaussians and user densities
//! go through the weak oracle, whose outputs are within a requested tolerance.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::linalg::Matrix;
use crate::polyhedron::{HPolyhedron, PolyCone, Polyhedron, VPolyhedron};
use crate::rational::{add, dot, from_f64, int, scale, to_f64, unit, vec_to_f64, zeros, Rat, Vector};
use crate::triangulate::{centroid, free_coordinates, simplex_volume, triangulate_cone, triangulate_polytope, SimplexCell};
use crate::Error;

/// A density known only through evaluations.
#[derive(Clone)]
pub struct DensityOracle {
    pub dim: usize,
    pub density: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// `r` with `∫_{‖c‖∞ > r} (1 + ‖c‖) f(c) dc ≤ ε`.
    pub tail_radius: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Bound on the Hardy–Krause variation used to size the Riemann grid.
    pub variation: f64,
}

impl fmt::Debug for DensityOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityOracle").field("dim", &self.dim).field("variation", &self.variation).finish()
    }
}

#[derive(Clone, Debug)]
pub enum CostDistribution {
    Dirac(Vector),
    /// Uniform on a polytope whose affine hull is `{c_j = q_j, j ∈ J}`.
    UniformPolytope(VPolyhedron),
    /// Density proportional to `exp(θᵀc)` on a pointed cone; `-θᵀr > 0` on every ray.
    ExponentialCone { cone: PolyCone, theta: Vector },
    /// `M u` with `u` standard normal: covariance `M²` for symmetric `M`.
    Gaussian(Matrix),
    Mixture(Vec<(Rat, CostDistribution)>),
    Density(DensityOracle),
}

/// `(p̌_R, č_R)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeValuation {
    pub p: Rat,
    pub c: Vector,
}

impl ConeValuation {
    pub fn zero(dim: usize) -> Self {
        ConeValuation { p: Rat::zero(), c: zeros(dim) }
    }
}

/// Generators of a distribution's support: `conv(points) + cone(rays) + span(lines)`.
#[derive(Clone, Debug, Default)]
pub struct Support {
    pub points: Vec<Vector>,
    pub rays: Vec<Vector>,
    pub lines: Vec<Vector>,
}

impl Support {
    /// The image under `c ↦ (c, 1)`.
    pub fn lifted(&self) -> Support {
        let ext = |v: &Vector, t: i64| {
            let mut w = v.clone();
            w.push(int(t));
            w
        };
        Support {
            points: self.points.iter().map(|p| ext(p, 1)).collect(),
            rays: self.rays.iter().map(|r| ext(r, 0)).collect(),
            lines: self.lines.iter().map(|l| ext(l, 0)).collect(),
        }
    }

    /// Whether every point of the support has `cᵀd ≥ 0` for all `d` in
    /// `cone(rec_rays) + span(rec_lines)`.
    pub fn within_dual_of(&self, rec_rays: &[Vector], rec_lines: &[Vector]) -> bool {
        let nonneg = |g: &Vector| rec_rays.iter().all(|r| !dot(g, r).is_negative()) && rec_lines.iter().all(|l| dot(g, l).is_zero());
        let orthogonal = |g: &Vector| rec_rays.iter().chain(rec_lines).all(|r| dot(g, r).is_zero());
        self.points.iter().all(nonneg) && self.rays.iter().all(nonneg) && self.lines.iter().all(orthogonal)
    }
}

impl CostDistribution {
    /// Uniform on the ℓ¹ ball of radius `r` in `ℝ^dim`.
    pub fn uniform_l1_ball(dim: usize, r: Rat) -> Result<Self, Error> {
        let mut vs = Vec::new();
        for i in 0..dim {
            vs.push(scale(&unit(dim, i), &r));
            vs.push(scale(&unit(dim, i), &-r.clone()));
        }
        Ok(CostDistribution::UniformPolytope(VPolyhedron::polytope(vs)?.canonicalized()))
    }

    /// Uniform on the ℓ∞ ball of radius `r` in `ℝ^dim`.
    pub fn uniform_linf_ball(dim: usize, r: Rat) -> Result<Self, Error> {
        let vs = (0..1usize << dim)
            .map(|mask| (0..dim).map(|i| if mask & (1 << i) != 0 { r.clone() } else { -r.clone() }).collect())
            .collect();
        Ok(CostDistribution::UniformPolytope(VPolyhedron::polytope(vs)?.canonicalized()))
    }

    /// Density `(θ/2)^dim exp(-θ‖c‖₁)`: an equal mixture of exponentials on the orthants.
    pub fn laplace_l1(dim: usize, theta: Rat) -> Self {
        let weight = Rat::one() / int(1 << dim);
        let parts = (0..1usize << dim)
            .map(|mask| {
                let signs: Vec<Rat> = (0..dim).map(|i| if mask & (1 << i) != 0 { int(1) } else { int(-1) }).collect();
                let rays = (0..dim).map(|i| scale(&unit(dim, i), &signs[i])).collect();
                let th = signs.iter().map(|s| -(s * &theta)).collect();
                (weight.clone(), CostDistribution::ExponentialCone { cone: PolyCone::from_generators(dim, rays, Vec::new()), theta: th })
            })
            .collect();
        CostDistribution::Mixture(parts)
    }

    /// Centered Gaussian with covariance `γ² I`.
    pub fn isotropic_gaussian(dim: usize, gamma: Rat) -> Self {
        let mut m = Matrix::identity(dim);
        for i in 0..dim {
            m[(i, i)] = gamma.clone();
        }
        CostDistribution::Gaussian(m)
    }

    pub fn dim(&self) -> usize {
        match self {
            CostDistribution::Dirac(c) => c.len(),
            CostDistribution::UniformPolytope(q) => q.dim,
            CostDistribution::ExponentialCone { cone, .. } => cone.dim(),
            CostDistribution::Gaussian(m) => m.rows(),
            CostDistribution::Mixture(parts) => parts.first().map_or(0, |(_, d)| d.dim()),
            CostDistribution::Density(o) => o.dim,
        }
    }

    /// True when [`cone_valuation`] answers exactly.
    pub fn is_exact(&self) -> bool {
        match self {
            CostDistribution::Dirac(_) | CostDistribution::UniformPolytope(_) | CostDistribution::ExponentialCone { .. } => true,
            CostDistribution::Mixture(parts) => parts.iter().all(|(_, d)| d.is_exact()),
            CostDistribution::Gaussian(_) | CostDistribution::Density(_) => false,
        }
    }

    /// Checks the structural requirements of each distribution kind.
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            CostDistribution::Dirac(_) => Ok(()),
            CostDistribution::UniformPolytope(q) => {
                if q.is_empty() || !q.is_bounded() {
                    return Err(Error::InvalidInput("uniform support must be a nonempty polytope".into()));
                }
                if free_coordinates(&q.vertices)?.len() != q.affine_dim() {
                    return Err(Error::IrrationalVolume("uniform support must have an axis-aligned affine hull".into()));
                }
                Ok(())
            }
            CostDistribution::ExponentialCone { cone, theta } => {
                if theta.len() != cone.dim() {
                    return Err(Error::Dimension("θ and the cone live in different spaces".into()));
                }
                if !cone.is_pointed() {
                    return Err(Error::Integrability("exponential cone must be pointed".into()));
                }
                if cone.rays().iter().any(|r| !dot(theta, r).is_negative()) {
                    return Err(Error::Integrability("θ must be strictly negative on every ray of the cone".into()));
                }
                let span: Vec<usize> = free_coordinates(&std::iter::once(zeros(cone.dim())).chain(cone.rays().iter().cloned()).collect::<Vec<_>>())?;
                if span.len() != cone.cone_dim() {
                    return Err(Error::Unsupported("exponential cone must span a coordinate subspace".into()));
                }
                Ok(())
            }
            CostDistribution::Gaussian(m) => {
                if m.rows() != m.cols() || m.transpose() != *m {
                    return Err(Error::InvalidInput("Gaussian M must be a symmetric square matrix".into()));
                }
                // positive definite: leading principal minors
                for k in 1..=m.rows() {
                    let idx: Vec<usize> = (0..k).collect();
                    if !m.select_rows(&idx).select_cols(&idx).det()?.is_positive() {
                        return Err(Error::InvalidInput("Gaussian M must be positive definite".into()));
                    }
                }
                Ok(())
            }
            CostDistribution::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidInput("empty mixture".into()));
                }
                if parts.iter().any(|(w, _)| !w.is_positive()) {
                    return Err(Error::InvalidInput("mixture weights must be positive".into()));
                }
                if parts.iter().map(|(w, _)| w.clone()).sum::<Rat>() != Rat::one() {
                    return Err(Error::InvalidInput("mixture weights must sum to 1".into()));
                }
                let d = parts[0].1.dim();
                if parts.iter().any(|(_, p)| p.dim() != d) {
                    return Err(Error::Dimension("mixture components of different dimensions".into()));
                }
                parts.iter().try_for_each(|(_, p)| p.validate())
            }
            CostDistribution::Density(o) => {
                if o.dim == 0 || o.variation <= 0.0 {
                    return Err(Error::InvalidInput("density oracle needs a positive dimension and variation bound".into()));
                }
                Ok(())
            }
        }
    }

    pub fn support(&self) -> Support {
        let d = self.dim();
        match self {
            CostDistribution::Dirac(c) => Support { points: vec![c.clone()], ..Default::default() },
            CostDistribution::UniformPolytope(q) => Support { points: q.vertices.clone(), ..Default::default() },
            CostDistribution::ExponentialCone { cone, .. } => Support { points: vec![zeros(d)], rays: cone.rays().to_vec(), lines: Vec::new() },
            CostDistribution::Gaussian(_) | CostDistribution::Density(_) => {
                Support { points: vec![zeros(d)], rays: Vec::new(), lines: (0..d).map(|i| unit(d, i)).collect() }
            }
            CostDistribution::Mixture(parts) => {
                let mut s = Support::default();
                for (_, p) in parts {
                    let t = p.support();
                    s.points.extend(t.points);
                    s.rays.extend(t.rays);
                    s.lines.extend(t.lines);
                }
                s
            }
        }
    }

    /// Exact mean for the exact kinds and for centered Gaussians.
    pub fn mean(&self) -> Result<Vector, Error> {
        match self {
            CostDistribution::Gaussian(m) => Ok(zeros(m.rows())),
            CostDistribution::Density(_) => Err(Error::Unsupported("mean of a density oracle".into())),
            CostDistribution::Mixture(parts) => {
                let mut acc = zeros(self.dim());
                for (w, p) in parts {
                    acc = add(&acc, &scale(&p.mean()?, w));
                }
                Ok(acc)
            }
            _ => Ok(cone_valuation(self, &HPolyhedron::universe(self.dim()))?.c),
        }
    }

    /// Convex combination of several distributions.
    pub fn mixture(parts: Vec<(Rat, CostDistribution)>) -> Result<Self, Error> {
        let d = CostDistribution::Mixture(parts);
        d.validate()?;
        Ok(d)
    }
}

/// Whether `supp(dist) ⊆ -Cone(Aᵀ)`, i.e. the recourse problem stays bounded
/// for almost every cost.
pub fn check_support(dist: &CostDistribution, a: &Matrix) -> bool {
    let rec = PolyCone::from_h(a.clone());
    dist.support().within_dual_of(rec.rays(), rec.lines())
}

/// Exact `(p̌, č)` of a region.
pub fn cone_valuation(dist: &CostDistribution, region: &HPolyhedron) -> Result<ConeValuation, Error> {
    exact_valuation(dist, &Polyhedron::from_h(region))
}

/// `(p̌, č)` within `eps`; exact whenever the distribution allows it.
pub fn weak_cone_valuation(dist: &CostDistribution, region: &HPolyhedron, eps: &Rat) -> Result<ConeValuation, Error> {
    valuation(dist, &Polyhedron::from_h(region), Some(eps))
}

/// Dispatches to the exact oracle when possible, otherwise to the weak one.
pub fn valuation(dist: &CostDistribution, region: &Polyhedron, eps: Option<&Rat>) -> Result<ConeValuation, Error> {
    if let Some(e) = eps {
        if !e.is_positive() {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
    }
    if dist.is_exact() {
        return exact_valuation(dist, region);
    }
    let eps = eps.ok_or_else(|| Error::Unsupported("this distribution needs the weak oracle (give eps)".into()))?;
    match dist {
        CostDistribution::Gaussian(m) => gaussian_valuation(m, region, to_f64(eps)),
        CostDistribution::Density(o) => density_valuation(o, region, to_f64(eps)),
        CostDistribution::Mixture(parts) => {
            let vals = parts.iter().map(|(w, p)| Ok((w.clone(), valuation(p, region, Some(eps))?))).collect::<Result<Vec<_>, Error>>()?;
            Ok(combine(dist.dim(), &vals))
        }
        _ => unreachable!("exact kinds handled above"),
    }
}

fn combine(dim: usize, parts: &[(Rat, ConeValuation)]) -> ConeValuation {
    let p: Rat = parts.iter().map(|(w, v)| w * &v.p).sum();
    if p.is_zero() {
        return ConeValuation::zero(dim);
    }
    let mut c = zeros(dim);
    for (w, v) in parts {
        c = add(&c, &scale(&v.c, &(w * &v.p)));
    }
    ConeValuation { c: scale(&c, &p.recip()), p }
}

fn exact_valuation(dist: &CostDistribution, region: &Polyhedron) -> Result<ConeValuation, Error> {
    let dim = dist.dim();
    if region.ambient_dim() != dim {
        return Err(Error::Dimension(format!("region in ℝ^{} for costs in ℝ^{}", region.ambient_dim(), dim)));
    }
    match dist {
        CostDistribution::Dirac(c) => Ok(if region.contains_ri(c) { ConeValuation { p: Rat::one(), c: c.clone() } } else { ConeValuation::zero(dim) }),
        CostDistribution::UniformPolytope(q) => uniform_valuation(q, region),
        CostDistribution::ExponentialCone { cone, theta } => exponential_valuation(cone, theta, region),
        CostDistribution::Mixture(parts) => {
            let vals = parts.iter().map(|(w, p)| Ok((w.clone(), exact_valuation(p, region)?))).collect::<Result<Vec<_>, Error>>()?;
            Ok(combine(dim, &vals))
        }
        _ => Err(Error::Unsupported("no exact valuation for this distribution; use weak_cone_valuation".into())),
    }
}

fn uniform_valuation(q: &VPolyhedron, region: &Polyhedron) -> Result<ConeValuation, Error> {
    let dim = q.dim;
    let support = Polyhedron::from_v(q.clone());
    let piece = region.intersect(&support)?;
    if piece.is_empty() || piece.cell_dim() < support.cell_dim() {
        return Ok(ConeValuation::zero(dim));
    }
    let k = support.cell_dim();
    let (mut vol, mut moment) = (Rat::zero(), zeros(dim));
    for s in triangulate_polytope(piece.v())?.iter().filter(|s| s.dim() == k) {
        let v = simplex_volume(s)?;
        moment = add(&moment, &scale(&centroid(s)?, &v));
        vol += v;
    }
    let total: Rat = triangulate_polytope(q)?.iter().filter(|s| s.dim() == k).map(simplex_volume).sum::<Result<Rat, Error>>()?;
    Ok(ConeValuation { c: scale(&moment, &vol.recip()), p: vol / total })
}

/// Brion's formula for a simplicial cone: `|det(rays)| ∏ 1/(-θᵀr)`, with the
/// determinant taken over the coordinates the rays span.
pub fn simplicial_valuation(rays: &[Vector], theta: &[Rat]) -> Result<Rat, Error> {
    if rays.is_empty() {
        return Ok(Rat::one());
    }
    let dim = rays[0].len();
    let mut pts = vec![zeros(dim)];
    pts.extend(rays.iter().cloned());
    let free = free_coordinates(&pts)?;
    if free.len() != rays.len() {
        return Err(Error::Unsupported("cone does not span a coordinate subspace".into()));
    }
    let rows: Vec<Vector> = rays.iter().map(|r| free.iter().map(|&j| r[j].clone()).collect()).collect();
    let mut phi = Matrix::from_rows(rows, free.len())?.det()?.abs();
    for r in rays {
        let t = -dot(theta, r);
        if !t.is_positive() {
            return Err(Error::Integrability("θᵀr must be negative on every ray".into()));
        }
        phi /= t;
    }
    Ok(phi)
}

/// Mean of the exponential distribution restricted to a simplicial cone: `Σ_r r / (-θᵀr)`.
pub fn simplicial_mean(rays: &[Vector], theta: &[Rat]) -> Vector {
    rays.iter().fold(zeros(theta.len()), |acc, r| add(&acc, &scale(r, &(-dot(theta, r)).recip())))
}

fn cone_triangulation(k: &Polyhedron) -> Result<Vec<Vec<Vector>>, Error> {
    let cone = PolyCone::from_h(k.h().a.clone());
    Ok(triangulate_cone(&cone)?
        .into_iter()
        .map(|s| match s {
            SimplexCell::Cone(r) => r,
            SimplexCell::Simplex(_) => unreachable!("cone triangulation yields cones"),
        })
        .collect())
}

fn exponential_valuation(cone: &PolyCone, theta: &[Rat], region: &Polyhedron) -> Result<ConeValuation, Error> {
    let dim = cone.dim();
    let support = Polyhedron::from_h(cone.as_h());
    let piece = region.intersect(&support)?;
    if piece.is_empty() || piece.cell_dim() < support.cell_dim() {
        return Ok(ConeValuation::zero(dim));
    }
    if !piece.is_cone() {
        return Err(Error::Unsupported("exponential valuation of a region that is not a cone".into()));
    }
    let k = support.cell_dim();
    let total: Rat = cone_triangulation(&support)?.iter().filter(|r| r.len() == k).map(|r| simplicial_valuation(r, theta)).sum::<Result<Rat, Error>>()?;
    let (mut phi, mut moment) = (Rat::zero(), zeros(dim));
    for rays in cone_triangulation(&piece)?.iter().filter(|r| r.len() == k) {
        let v = simplicial_valuation(rays, theta)?;
        moment = add(&moment, &scale(&simplicial_mean(rays, theta), &v));
        phi += v;
    }
    Ok(ConeValuation { c: scale(&moment, &phi.recip()), p: phi / total })
}

/// Below this tolerance the double-precision closed forms cannot certify their answer.
const GAUSSIAN_EPS_FLOOR: f64 = 1e-12;
/// Largest number of grid points the Riemann route will evaluate.
pub const GRID_BUDGET: u128 = 20_000_000;

fn gaussian_valuation(m: &Matrix, region: &Polyhedron, eps: f64) -> Result<ConeValuation, Error> {
    let dim = m.rows();
    if region.ambient_dim() != dim {
        return Err(Error::Dimension("region and Gaussian dimensions differ".into()));
    }
    if eps < GAUSSIAN_EPS_FLOOR {
        return Err(Error::InvalidInput(format!("eps below {GAUSSIAN_EPS_FLOOR:e} is beyond double-precision closed forms")));
    }
    if region.is_empty() || region.cell_dim() < dim {
        return Ok(ConeValuation::zero(dim));
    }
    let pre = Polyhedron::from_h(&region.h().preimage(m)?);
    let standard = if pre.is_cone() && dim <= 2 {
        if dim == 1 {
            gaussian_cone_1d(&pre)
        } else {
            gaussian_cone_2d(&pre)
        }
    } else {
        let oracle = standard_normal_oracle(dim);
        riemann(&oracle, &pre, eps / (1.0 + matrix_norm(m)))?
    };
    let (p, u) = standard;
    if p == 0.0 {
        return Ok(ConeValuation::zero(dim));
    }
    let mf: Vec<Vec<f64>> = (0..dim).map(|i| vec_to_f64(m.row(i))).collect();
    let c: Vec<f64> = mf.iter().map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
    Ok(ConeValuation { p: from_f64(p), c: c.into_iter().map(from_f64).collect() })
}

fn matrix_norm(m: &Matrix) -> f64 {
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| to_f64(x).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(P(u ∈ K), E[u | u ∈ K])` for a standard normal `u` and a cone `K ⊆ ℝ`.
fn gaussian_cone_1d(k: &Polyhedron) -> (f64, Vec<f64>) {
    let half_mean = (2.0 / std::f64::consts::PI).sqrt();
    let v = k.v();
    if !v.lines.is_empty() {
        return (1.0, vec![0.0]);
    }
    match v.rays.first() {
        None => (0.0, vec![0.0]),
        Some(r) => (0.5, vec![half_mean * to_f64(&r[0]).signum()]),
    }
}

/// Closed forms in the plane: the cone is the arc `[a, b]` of directions,
/// `p = (b - a)/2π` and `E[u | K] = √(π/2) (sin b - sin a, cos a - cos b)/(b - a)`.
fn gaussian_cone_2d(k: &Polyhedron) -> (f64, Vec<f64>) {
    use std::f64::consts::PI;
    let v = k.v();
    let angle = |r: &Vector| to_f64(&r[1]).atan2(to_f64(&r[0]));
    let cross = |a: &Vector, b: &Vector| &a[0] * &b[1] - &a[1] * &b[0];
    let (a, width) = match (v.lines.len(), v.rays.len()) {
        (2, _) => return (1.0, vec![0.0, 0.0]),
        (1, 1) => {
            let l = &v.lines[0];
            let start = if cross(l, &v.rays[0]).is_positive() { l.clone() } else { l.iter().map(|x| -x).collect() };
            (angle(&start), PI)
        }
        (0, 2) => {
            let (r1, r2) = if cross(&v.rays[0], &v.rays[1]).is_positive() { (&v.rays[0], &v.rays[1]) } else { (&v.rays[1], &v.rays[0]) };
            let mut w = angle(r2) - angle(r1);
            if w <= 0.0 {
                w += 2.0 * PI;
            }
            (angle(r1), w)
        }
        _ => return (0.0, vec![0.0, 0.0]),
    };
    let b = a + width;
    let scale = (PI / 2.0).sqrt() / width;
    (width / (2.0 * PI), vec![scale * (b.sin() - a.sin()), scale * (a.cos() - b.cos())])
}

fn standard_normal_oracle(dim: usize) -> DensityOracle {
    let norm = (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0);
    DensityOracle {
        dim,
        density: Arc::new(move |u: &[f64]| norm * (-0.5 * u.iter().map(|x| x * x).sum::<f64>()).exp()),
        tail_radius: Arc::new(move |eps: f64| gaussian_tail_radius(dim, eps)),
        variation: 1.0,
    }
}

/// Smallest `r` (found by bisection) with `Σ_i E[(1 + ‖u‖) 1{|u_i| > r}] ≤ eps`,
/// using `P(|u_i| > r) ≤ 2φ(r)/r` and `E[|u_i| 1{|u_i| > r}] = 2φ(r)`.
pub fn gaussian_tail_radius(dim: usize, eps: f64) -> f64 {
    let phi = |r: f64| (-0.5 * r * r).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let d = dim as f64;
    let bound = |r: f64| d * (2.0 * phi(r) / r * (1.0 + (d - 1.0) * (2.0 / std::f64::consts::PI).sqrt()) + 2.0 * phi(r));
    let (mut lo, mut hi) = (1.0, 40.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn density_valuation(o: &DensityOracle, region: &Polyhedron, eps: f64) -> Result<ConeValuation, Error> {
    if region.ambient_dim() != o.dim {
        return Err(Error::Dimension("region and density dimensions differ".into()));
    }
    if region.is_empty() || region.cell_dim() < o.dim {
        return Ok(ConeValuation::zero(o.dim));
    }
    let (p, c) = riemann(o, region, eps)?;
    if p == 0.0 {
        return Ok(ConeValuation::zero(o.dim));
    }
    Ok(ConeValuation { p: from_f64(p), c: c.into_iter().map(from_f64).collect() })
}

/// Midpoint Riemann sums of `f` and `c f` over `region ∩ [-r, r]^n`, with `r`
/// from the tail bound and the grid sized from the variation bound.
fn riemann(o: &DensityOracle, region: &Polyhedron, eps: f64) -> Result<(f64, Vec<f64>), Error> {
    let n = o.dim;
    let r = (o.tail_radius)(eps / 2.0);
    let per_axis = ((n as f64) * o.variation * (2.0 * r) / eps).ceil().max(1.0) as u128;
    let total = per_axis.checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > GRID_BUDGET {
        return Err(Error::GridBudget(total, GRID_BUDGET));
    }
    let h = 2.0 * r / per_axis as f64;
    let a: Vec<Vec<f64>> = (0..region.h().num_constraints()).map(|i| vec_to_f64(region.h().a.row(i))).collect();
    let b = vec_to_f64(&region.h().b);
    let cell = h.powi(n as i32);
    let (mut mass, mut moment) = (0.0, vec![0.0; n]);
    let mut idx = vec![0u128; n];
    let mut x = vec![0.0; n];
    for _ in 0..total {
        for k in 0..n {
            x[k] = -r + (idx[k] as f64 + 0.5) * h;
        }
        if a.iter().zip(&b).all(|(row, bi)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= *bi) {
            let w = (o.density)(&x) * cell;
            mass += w;
            for k in 0..n {
                moment[k] += w * x[k];
            }
        }
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    if mass == 0.0 {
        return Ok((0.0, vec![0.0; n]));
    }
    Ok((mass, moment.iter().map(|m| m / mass).collect()))
}

/// Precomputed exact sampler.
#[derive(Clone, Debug)]
pub enum Sampler {
    Dirac(Vec<f64>),
    /// Simplices with cumulative volume weights.
    Uniform { cumulative: Vec<f64>, simplices: Vec<Vec<Vec<f64>>> },
    /// Simplicial cones with cumulative Brion weights and per-ray rates.
    Exponential { cumulative: Vec<f64>, cones: Vec<(Vec<Vec<f64>>, Vec<f64>)> },
    Gaussian(Vec<Vec<f64>>),
    Mixture { cumulative: Vec<f64>, parts: Vec<Sampler> },
}

fn cumulative(weights: &[Rat]) -> Vec<f64> {
    let total: Rat = weights.iter().cloned().sum();
    let mut acc = Rat::zero();
    weights
        .iter()
        .map(|w| {
            acc += w;
            to_f64(&(&acc / &total))
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

impl Sampler {
    pub fn new(dist: &CostDistribution) -> Result<Self, Error> {
        dist.validate()?;
        match dist {
            CostDistribution::Dirac(c) => Ok(Sampler::Dirac(vec_to_f64(c))),
            CostDistribution::UniformPolytope(q) => {
                let k = q.affine_dim();
                let cells: Vec<SimplexCell> = triangulate_polytope(q)?.into_iter().filter(|s| s.dim() == k).collect();
                let vols = cells.iter().map(simplex_volume).collect::<Result<Vec<_>, _>>()?;
                Ok(Sampler::Uniform {
                    cumulative: cumulative(&vols),
                    simplices: cells.iter().map(|s| s.generators().iter().map(|v| vec_to_f64(v)).collect()).collect(),
                })
            }
            CostDistribution::ExponentialCone { cone, theta } => {
                let k = cone.cone_dim();
                let cells: Vec<Vec<Vector>> = cone_triangulation(&Polyhedron::from_h(cone.as_h()))?.into_iter().filter(|r| r.len() == k).collect();
                let weights = cells.iter().map(|r| simplicial_valuation(r, theta)).collect::<Result<Vec<_>, _>>()?;
                Ok(Sampler::Exponential {
                    cumulative: cumulative(&weights),
                    cones: cells.iter().map(|rays| (rays.iter().map(|r| vec_to_f64(r)).collect(), rays.iter().map(|r| to_f64(&-dot(theta, r))).collect())).collect(),
                })
            }
            CostDistribution::Gaussian(m) => Ok(Sampler::Gaussian((0..m.rows()).map(|i| vec_to_f64(m.row(i))).collect())),
            CostDistribution::Mixture(parts) => Ok(Sampler::Mixture {
                cumulative: cumulative(&parts.iter().map(|(w, _)| w.clone()).collect::<Vec<_>>()),
                parts: parts.iter().map(|(_, p)| Sampler::new(p)).collect::<Result<_, _>>()?,
            }),
            CostDistribution::Density(_) => Err(Error::Unsupported("sampling from a density oracle".into())),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Sampler::Dirac(c) => c.clone(),
            Sampler::Uniform { cumulative, simplices } => {
                let s = &simplices[pick(cumulative, rng)];
                let e: Vec<f64> = s.iter().map(|_| Exp::new(1.0).expect("rate").sample(rng)).collect();
                let total: f64 = e.iter().sum();
                let dim = s[0].len();
                (0..dim).map(|j| s.iter().zip(&e).map(|(v, w)| v[j] * w / total).sum()).collect()
            }
            Sampler::Exponential { cumulative, cones } => {
                let (rays, rates) = &cones[pick(cumulative, rng)];
                let dim = rays.first().map_or(0, Vec::len);
                let mut c = vec![0.0; dim];
                for (r, rate) in rays.iter().zip(rates) {
                    let t = Exp::new(*rate).expect("positive rate").sample(rng);
                    for j in 0..dim {
                        c[j] += t * r[j];
                    }
                }
                c
            }
            Sampler::Gaussian(m) => {
                let u: Vec<f64> = (0..m.len()).map(|_| StandardNormal.sample(rng)).collect();
                m.iter().map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum()).collect()
            }
            Sampler::Mixture { cumulative, parts } => parts[pick(cumulative, rng)].draw(rng),
        }
    }
}

/// One exact draw. Build a [`Sampler`] once when drawing many times.
pub fn sample<R: Rng + ?Sized>(dist: &CostDistribution, rng: &mut R) -> Result<Vec<f64>, Error> {
    Ok(Sampler::new(dist)?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ints, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quadrant() -> PolyCone {
        PolyCone::from_h(Matrix::from_i64(&[&[-1, 0], &[0, -1]]))
    }

    fn region(rows: &[&[i64]], b: &[i64]) -> HPolyhedron {
        HPolyhedron::new(Matrix::from_i64(rows), ints(b)).unwrap()
    }

    #[test]
    fn uniform_square_triangle() {
        let sq = CostDistribution::UniformPolytope(VPolyhedron::polytope(vec![ints(&[0, 0]), ints(&[1, 0]), ints(&[0, 1]), ints(&[1, 1])]).unwrap().canonicalized());
        let v = cone_valuation(&sq, &region(&[&[1, 1]], &[1])).unwrap();
        assert_eq!(v, ConeValuation { p: rat(1, 2), c: vec![rat(1, 3), rat(1, 3)] });
        let line = region(&[&[1, -1], &[-1, 1]], &[0, 0]);
        assert_eq!(cone_valuation(&sq, &line).unwrap(), ConeValuation::zero(2));
    }

    #[test]
    fn exponential_quadrant() {
        let d = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[-1, -2]) };
        d.validate().unwrap();
        let whole = cone_valuation(&d, &HPolyhedron::universe(2)).unwrap();
        assert_eq!(whole, ConeValuation { p: int(1), c: vec![int(1), rat(1, 2)] });

        let d = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[-1, -1]) };
        let lower = region(&[&[-1, 1]], &[0]);
        assert_eq!(cone_valuation(&d, &lower).unwrap().p, rat(1, 2));
        let bad = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[1, -1]) };
        assert!(matches!(bad.validate(), Err(Error::Integrability(_))));
    }

    #[test]
    fn dirac_uses_relative_interiors() {
        let d = CostDistribution::Dirac(ints(&[1, 1]));
        let first = region(&[&[-1, 0], &[0, -1]], &[0, 0]);
        assert_eq!(cone_valuation(&d, &first).unwrap(), ConeValuation { p: int(1), c: ints(&[1, 1]) });
        let ray = region(&[&[0, 1], &[0, -1], &[-1, 0]], &[0, 0, 0]);
        assert_eq!(cone_valuation(&d, &ray).unwrap().p, int(0));
        let boundary = CostDistribution::Dirac(ints(&[1, 0]));
        assert_eq!(cone_valuation(&boundary, &first).unwrap().p, int(0));
        assert_eq!(cone_valuation(&boundary, &ray).unwrap().p, int(1));
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = CostDistribution::isotropic_gaussian(2, int(1));
        let eps = rat(1, 1_000_000);
        let q = weak_cone_valuation(&g, &region(&[&[-1, 0], &[0, -1]], &[0, 0]), &eps).unwrap();
        let s = (2.0 / std::f64::consts::PI).sqrt();
        assert!((to_f64(&q.p) - 0.25).abs() < 1e-12);
        assert!(q.c.iter().all(|c| (to_f64(c) - s).abs() < 1e-9));
        let all = weak_cone_valuation(&g, &HPolyhedron::universe(2), &eps).unwrap();
        assert_eq!(all.p, int(1));
        assert!(all.c.iter().all(|c| to_f64(c).abs() < 1e-12));
        let half = weak_cone_valuation(&g, &region(&[&[1, 0]], &[0]), &eps).unwrap();
        assert!((to_f64(&half.p) - 0.5).abs() < 1e-12);
        assert!((to_f64(&half.c[0]) + s).abs() < 1e-9 && to_f64(&half.c[1]).abs() < 1e-9);
        assert!(cone_valuation(&g, &HPolyhedron::universe(2)).is_err());
        assert!(weak_cone_valuation(&g, &HPolyhedron::universe(2), &int(0)).is_err());
    }

    #[test]
    fn correlated_gaussian_quadrant() {
        // M = [[2,1],[1,2]]: the quadrant's preimage is a cone of angle 2·atan(...)
        let m = Matrix::from_i64(&[&[2, 1], &[1, 2]]);
        let g = CostDistribution::Gaussian(m);
        g.validate().unwrap();
        let eps = rat(1, 1_000_000);
        let q = weak_cone_valuation(&g, &region(&[&[-1, 0], &[0, -1]], &[0, 0]), &eps).unwrap();
        // c = M u ≥ 0 ⇔ u in the cone between (2,-1) and (-1,2)
        let angle = 2.0f64.atan2(-1.0) - (-1.0f64).atan2(2.0);
        assert!((to_f64(&q.p) - angle / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn riemann_route_on_a_box() {
        // standard normal in 1-D over a bounded interval, checked against erf-free symmetry
        let g = CostDistribution::isotropic_gaussian(1, int(1));
        let eps = rat(1, 1000);
        let v = weak_cone_valuation(&g, &region(&[&[1], &[-1]], &[1, 1]), &eps).unwrap();
        assert!((to_f64(&v.p) - 0.682_689_492).abs() < 1e-3);
        assert!(to_f64(&v.c[0]).abs() < 1e-3);
    }

    #[test]
    fn support_checks() {
        let a = Matrix::from_i64(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]]);
        assert!(check_support(&CostDistribution::isotropic_gaussian(2, int(1)), &a));
        assert!(check_support(&CostDistribution::uniform_l1_ball(2, int(1)).unwrap(), &a));
        assert!(!check_support(&CostDistribution::isotropic_gaussian(1, int(1)), &Matrix::from_i64(&[&[1]])));
        // fiber y ≥ x: bounded only for costs c ≥ 0
        let a1 = Matrix::from_i64(&[&[-1]]);
        assert!(check_support(&CostDistribution::Dirac(ints(&[2])), &a1));
        assert!(!check_support(&CostDistribution::Dirac(ints(&[-1])), &a1));
    }

    #[test]
    fn means() {
        assert_eq!(CostDistribution::uniform_l1_ball(2, int(1)).unwrap().mean().unwrap(), ints(&[0, 0]));
        assert_eq!(CostDistribution::laplace_l1(2, int(1)).mean().unwrap(), ints(&[0, 0]));
        let d = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[-1, -2]) };
        assert_eq!(d.mean().unwrap(), vec![int(1), rat(1, 2)]);
    }

    fn sample_mean(d: &CostDistribution, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let s = Sampler::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| s.draw(&mut rng)).collect();
        let dim = draws[0].len();
        let mean: Vec<f64> = (0..dim).map(|j| draws.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let sd: Vec<f64> = (0..dim)
            .map(|j| (draws.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt())
            .collect();
        (mean, sd)
    }

    #[test]
    fn samplers_match_means() {
        let sq = CostDistribution::UniformPolytope(VPolyhedron::polytope(vec![ints(&[0, 0]), ints(&[1, 0]), ints(&[0, 1]), ints(&[1, 1])]).unwrap().canonicalized());
        let (m, se) = sample_mean(&sq, 100_000, 1);
        assert!((m[0] - 0.5).abs() < 4.0 * se[0] && (m[1] - 0.5).abs() < 4.0 * se[1]);
        let ex = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[-1, -2]) };
        let (m, se) = sample_mean(&ex, 100_000, 2);
        assert!((m[0] - 1.0).abs() < 4.0 * se[0] && (m[1] - 0.5).abs() < 4.0 * se[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample(&CostDistribution::Dirac(ints(&[2, -1])), &mut rng).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn sampler_matches_region_probability() {
        let d = CostDistribution::ExponentialCone { cone: quadrant(), theta: ints(&[-1, -1]) };
        let s = Sampler::new(&d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let hits = (0..n).filter(|_| {
            let c = s.draw(&mut rng);
            c[1] <= c[0]
        }).count() as f64 / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((hits - 0.5).abs() < 4.0 * se);
    }
}
