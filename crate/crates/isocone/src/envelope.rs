//! Restricted conjugates and K-envelopes on slope grids.
//!
//! Everything reduces to maximising a family of affine functions
//! `c_i + p_i . q` over a finite index set; [`AffineMax`] does this exactly
//! with block bounds so that queries touch only a few blocks.

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::vec2::{self, M2, V2};
use rayon::prelude::*;

/// Default polar slope grid for sector-disks.
pub const DEFAULT_N_RADIAL: usize = 256;
pub const DEFAULT_N_ANGULAR: usize = 512;
/// Relative contact tolerance.
pub const CONTACT_REL_TOL: f64 = 1e-8;
/// Relative residual allowed in the witness equation.
pub const WITNESS_REL_TOL: f64 = 1e-9;

const BLOCK: usize = 256;

/// Exact argmax of `c_i + p_i . q` with lowest-index tie-breaking.
#[derive(Debug, Clone)]
pub struct AffineMax {
    c: Vec<f64>,
    p: Vec<V2>,
    /// item indices grouped by block, spatially coherent
    order: Vec<usize>,
    blocks: Vec<Block>,
    block_of_item: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    cmax: f64,
    lo: V2,
    hi: V2,
    /// Linear model `c ≈ alpha + beta . (p - mean)` with residual at most
    /// `resid` and `|p - mean|` at most `radius` per coordinate.
    mean: V2,
    alpha: f64,
    beta: V2,
    resid: f64,
    radius: V2,
}

impl AffineMax {
    pub fn new(c: Vec<f64>, p: Vec<V2>) -> Self {
        assert_eq!(c.len(), p.len());
        let n = c.len();
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for q in &p {
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        }
        // bin on a coarse grid with about BLOCK items per cell, serpentine order
        let cells = ((n as f64 / BLOCK as f64).sqrt().ceil() as usize).max(1);
        let cell_of = |q: V2| -> (usize, usize) {
            let f = |k: usize| {
                let span = (hi[k] - lo[k]).max(1e-300);
                (((q[k] - lo[k]) / span * cells as f64) as usize).min(cells - 1)
            };
            (f(0), f(1))
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| {
            let (cx, cy) = cell_of(p[i]);
            let cx = if cy % 2 == 0 { cx } else { cells - 1 - cx };
            (cy, cx, i)
        });
        let mut blocks = Vec::new();
        let mut block_of_item = vec![0; n];
        let mut start = 0;
        while start < n {
            let end = (start + BLOCK).min(n);
            blocks.push(Self::make_block(&c, &p, &order[start..end], start));
            for &i in &order[start..end] {
                block_of_item[i] = blocks.len() - 1;
            }
            start = end;
        }
        AffineMax { c, p, order, blocks, block_of_item }
    }

    fn make_block(c: &[f64], p: &[V2], items: &[usize], start: usize) -> Block {
        let m = items.len() as f64;
        let mut b = Block {
            start,
            end: start + items.len(),
            cmax: f64::MIN,
            lo: [f64::MAX; 2],
            hi: [f64::MIN; 2],
            mean: [0.0; 2],
            alpha: 0.0,
            beta: [0.0; 2],
            resid: 0.0,
            radius: [0.0; 2],
        };
        for &i in items {
            b.cmax = b.cmax.max(c[i]);
            b.alpha += c[i] / m;
            for k in 0..2 {
                b.lo[k] = b.lo[k].min(p[i][k]);
                b.hi[k] = b.hi[k].max(p[i][k]);
                b.mean[k] += p[i][k] / m;
            }
        }
        // least-squares slope of c against p; any slope keeps the bound valid
        let (mut sxx, mut sxy, mut syy, mut sxc, mut syc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in items {
            let (dx, dy, dc) = (p[i][0] - b.mean[0], p[i][1] - b.mean[1], c[i] - b.alpha);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
            sxc += dx * dc;
            syc += dy * dc;
        }
        let det = sxx * syy - sxy * sxy;
        if det > 1e-12 * (sxx * syy).max(f64::MIN_POSITIVE) {
            b.beta = [(syy * sxc - sxy * syc) / det, (sxx * syc - sxy * sxc) / det];
        } else if sxx + syy > 0.0 {
            let t = (sxc + syc) / (sxx + syy);
            b.beta = [t, t];
        }
        for &i in items {
            let d = vec2::sub(p[i], b.mean);
            b.resid = b.resid.max(c[i] - b.alpha - vec2::dot(b.beta, d));
            b.radius[0] = b.radius[0].max(d[0].abs());
            b.radius[1] = b.radius[1].max(d[1].abs());
        }
        b
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    #[inline]
    fn value(&self, i: usize, q: V2) -> f64 {
        self.c[i] + self.p[i][0] * q[0] + self.p[i][1] * q[1]
    }

    #[inline]
    fn bound(b: &Block, q: V2) -> f64 {
        let boxed = b.cmax + (b.lo[0] * q[0]).max(b.hi[0] * q[0]) + (b.lo[1] * q[1]).max(b.hi[1] * q[1]);
        let linear = b.alpha
            + vec2::dot(b.mean, q)
            + b.resid
            + (b.beta[0] + q[0]).abs() * b.radius[0]
            + (b.beta[1] + q[1]).abs() * b.radius[1];
        boxed.min(linear)
    }

    fn scan(&self, b: usize, q: V2, best: &mut (f64, usize)) {
        let blk = self.blocks[b];
        for &i in &self.order[blk.start..blk.end] {
            let v = self.value(i, q);
            if v > best.0 || (v == best.0 && i < best.1) {
                *best = (v, i);
            }
        }
    }

    /// Maximum value, maximising index, and the block holding it (usable as
    /// a warm-start hint for nearby queries).
    pub fn query(&self, q: V2, hint: Option<usize>) -> (f64, usize, usize) {
        let bounds: Vec<f64> = self.blocks.iter().map(|b| Self::bound(b, q)).collect();
        let first = hint.unwrap_or_else(|| {
            (0..bounds.len()).fold(0, |a, i| if bounds[i] > bounds[a] { i } else { a })
        });
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        self.scan(first, q, &mut best);
        for (b, &bd) in bounds.iter().enumerate() {
            if b == first {
                continue;
            }
            let slack = 1e-12 * (1.0 + best.0.abs() + bd.abs());
            if bd + slack >= best.0 {
                self.scan(b, q, &mut best);
            }
        }
        (best.0, best.1, self.block_of_item[best.1])
    }

    /// Brute-force reference used by tests.
    pub fn query_brute(&self, q: V2) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for i in 0..self.c.len() {
            let v = self.value(i, q);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }
}

/// Shape of a compact convex slope body.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyShape {
    /// Counterclockwise vertices; two vertices give a segment.
    Polygon(Vec<V2>),
    /// `closure(B_rho ∩ Σ)`; the plane cone gives the full disk.
    SectorDisk { cone: Cone, rho: f64 },
}

/// A slope body with its sample grid.
#[derive(Debug, Clone)]
pub struct SlopeBody {
    pub shape: BodyShape,
    pub samples: Vec<V2>,
    /// Largest gap between neighbouring samples.
    pub spacing: f64,
    /// Quadrature weights for `∫_K f` (sector-disks only).
    pub quad: Option<Vec<f64>>,
}

impl SlopeBody {
    /// Polar grid: the apex plus `n_radial` rings of `n_angular` angles
    /// spanning the closed arc (both rays included).
    pub fn sector_disk(cone: Cone, rho: f64, n_radial: usize, n_angular: usize) -> Result<Self> {
        if rho <= 0.0 || n_radial == 0 || n_angular < 2 {
            return Err(Error::InvalidArgument("bad sector-disk grid".into()));
        }
        let ang = cone.angle_grid(n_angular);
        let qa = cone.angle_weights(n_angular);
        let dr = rho / n_radial as f64;
        let mut samples = vec![[0.0, 0.0]];
        let mut quad = vec![0.0];
        for i in 1..=n_radial {
            let r = dr * i as f64;
            let tr = if i == n_radial { 0.5 } else { 1.0 };
            for (t, q) in ang.iter().zip(&qa) {
                samples.push(vec2::scale(vec2::unit(*t), r));
                quad.push(r * dr * tr * q);
            }
        }
        let dphi = if cone.is_plane() {
            cone.opening() / n_angular as f64
        } else {
            cone.opening() / (n_angular - 1) as f64
        };
        let spacing = dr.max(rho * dphi);
        Ok(SlopeBody { shape: BodyShape::SectorDisk { cone, rho }, samples, spacing, quad: Some(quad) })
    }

    pub fn default_sector_disk(cone: Cone) -> Result<Self> {
        Self::sector_disk(cone, 1.0, DEFAULT_N_RADIAL, DEFAULT_N_ANGULAR)
    }

    /// Square lattice of the given spacing clipped to the polygon, plus
    /// points along every edge and the vertices themselves.
    pub fn polygon(vertices: Vec<V2>, spacing: f64) -> Result<Self> {
        if vertices.len() < 2 || spacing <= 0.0 {
            return Err(Error::InvalidArgument("polygon needs >= 2 vertices".into()));
        }
        let n = vertices.len();
        let mut samples = vertices.clone();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if n == 2 && i == 1 {
                break;
            }
            let k = (vec2::dist(a, b) / spacing).ceil() as usize;
            for s in 1..k {
                samples.push(vec2::add(a, vec2::scale(vec2::sub(b, a), s as f64 / k as f64)));
            }
        }
        if n >= 3 {
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for v in &vertices {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let nx = ((hi[0] - lo[0]) / spacing).round() as usize;
            let ny = ((hi[1] - lo[1]) / spacing).round() as usize;
            for i in 0..=nx {
                for j in 0..=ny {
                    let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
                    if polygon_strictly_inside(&vertices, p, 1e-9 * spacing) {
                        samples.push(p);
                    }
                }
            }
        }
        Ok(SlopeBody { shape: BodyShape::Polygon(vertices), samples, spacing, quad: None })
    }

    pub fn contains(&self, xi: V2, tol: f64) -> bool {
        match &self.shape {
            BodyShape::Polygon(v) => {
                if v.len() == 2 {
                    let d = vec2::sub(v[1], v[0]);
                    let t = vec2::dot(vec2::sub(xi, v[0]), d) / vec2::dot(d, d);
                    let foot = vec2::add(v[0], vec2::scale(d, t.clamp(0.0, 1.0)));
                    return vec2::dist(foot, xi) <= tol;
                }
                (0..v.len()).all(|i| {
                    let e = vec2::sub(v[(i + 1) % v.len()], v[i]);
                    vec2::cross(e, vec2::sub(xi, v[i])) >= -tol * vec2::norm(e)
                })
            }
            BodyShape::SectorDisk { cone, rho } => vec2::norm(xi) <= rho + tol && cone.contains(xi, tol),
        }
    }
}

fn polygon_strictly_inside(v: &[V2], p: V2, tol: f64) -> bool {
    (0..v.len()).all(|i| {
        let e = vec2::sub(v[(i + 1) % v.len()], v[i]);
        vec2::cross(e, vec2::sub(p, v[i])) > tol * vec2::norm(e)
    })
}

/// `sup_{x ∈ K} v . x`.
pub fn support_function(k: &SlopeBody, v: V2) -> f64 {
    match &k.shape {
        BodyShape::Polygon(vs) => vs.iter().map(|x| vec2::dot(v, *x)).fold(f64::NEG_INFINITY, f64::max),
        BodyShape::SectorDisk { cone, rho } => {
            let nv = vec2::norm(v);
            if nv == 0.0 {
                return 0.0;
            }
            let best = if cone.contains(v, 0.0) {
                nv
            } else {
                vec2::dot(v, cone.dir_lo()).max(vec2::dot(v, cone.dir_hi()))
            };
            rho * best.max(0.0)
        }
    }
}

/// Intercepts `a(xi_m) = min_y (u(y) - xi_m . y)` over the samples, with
/// the attaining sample index (lowest index on ties).
#[derive(Debug, Clone)]
pub struct RestrictedConjugate {
    pub a: Vec<f64>,
    pub argmin: Vec<usize>,
}

pub fn restricted_conjugate(points: &[V2], u: &[f64], k: &SlopeBody) -> Result<RestrictedConjugate> {
    if points.is_empty() {
        return Err(Error::EmptySamples);
    }
    if points.len() != u.len() || u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("sample values must be finite, one per point".into()));
    }
    let index = AffineMax::new(u.iter().map(|x| -x).collect(), points.to_vec());
    let res: Vec<(f64, usize)> = k
        .samples
        .par_chunks(512)
        .flat_map_iter(|chunk| {
            let mut hint = None;
            chunk
                .iter()
                .map(|xi| {
                    let (v, i, b) = index.query(*xi, hint);
                    hint = Some(b);
                    (-v, i)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(RestrictedConjugate { a: res.iter().map(|r| r.0).collect(), argmin: res.iter().map(|r| r.1).collect() })
}

/// The envelope `phi(x) = max_m (a_m + xi_m . x)`, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub index: AffineMax,
    pub slopes: Vec<V2>,
}

impl Envelope {
    pub fn new(conj: &RestrictedConjugate, k: &SlopeBody) -> Self {
        Envelope { index: AffineMax::new(conj.a.clone(), k.samples.clone()), slopes: k.samples.clone() }
    }

    /// `(phi(x), argmax slope index)`.
    pub fn eval(&self, x: V2) -> (f64, usize) {
        let (v, i, _) = self.index.query(x, None);
        (v, i)
    }

    /// Evaluates a batch of points in order, reusing warm starts.
    pub fn eval_many(&self, xs: &[V2]) -> Vec<(f64, usize)> {
        xs.par_chunks(256)
            .flat_map_iter(|chunk| {
                let mut hint = None;
                chunk
                    .iter()
                    .map(|x| {
                        let (v, i, b) = self.index.query(*x, hint);
                        hint = Some(b);
                        (v, i)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// The envelope sampled on a regular grid over a box.
#[derive(Debug, Clone)]
pub struct EnvelopeField {
    pub origin: V2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub phi: Vec<f64>,
    pub arg: Vec<usize>,
    pub xi: Vec<V2>,
    /// Central differences of `xi*` over two grid steps, symmetrised.
    pub hess: Vec<M2>,
}

impl EnvelopeField {
    pub fn node(&self, i: usize, j: usize) -> V2 {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn nodes(&self) -> Vec<V2> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.node(i, j));
            }
        }
        out
    }
}

/// Samples the envelope on the box `[lo, hi]` with node spacing `h`.
pub fn k_envelope(conj: &RestrictedConjugate, k: &SlopeBody, lo: V2, hi: V2, h: f64) -> EnvelopeField {
    let env = Envelope::new(conj, k);
    envelope_field(&env, lo, hi, h)
}

pub fn envelope_field(env: &Envelope, lo: V2, hi: V2, h: f64) -> EnvelopeField {
    let nx = ((hi[0] - lo[0]) / h).round() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h).round() as usize + 1;
    let mut f = EnvelopeField { origin: lo, h, nx, ny, phi: vec![], arg: vec![], xi: vec![], hess: vec![] };
    let vals = env.eval_many(&f.nodes());
    f.phi = vals.iter().map(|v| v.0).collect();
    f.arg = vals.iter().map(|v| v.1).collect();
    f.xi = f.arg.iter().map(|&m| env.slopes[m]).collect();
    f.hess = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let d = |a: usize, b: usize, c: usize, e: usize, comp: usize| {
                let (p, q) = (f.xi[f.idx(a, b)][comp], f.xi[f.idx(c, e)][comp]);
                let dist = ((a as f64 - c as f64).abs() + (b as f64 - e as f64).abs()) * h;
                (p - q) / dist
            };
            let (il, ir) = (i.saturating_sub(1), (i + 1).min(nx - 1));
            let (jl, jr) = (j.saturating_sub(1), (j + 1).min(ny - 1));
            let hxx = if ir > il { d(ir, j, il, j, 0) } else { 0.0 };
            let hyy = if jr > jl { d(i, jr, i, jl, 1) } else { 0.0 };
            let hxy = if jr > jl { d(i, jr, i, jl, 0) } else { 0.0 };
            let hyx = if ir > il { d(ir, j, il, j, 1) } else { 0.0 };
            let off = 0.5 * (hxy + hyx);
            [[hxx, off], [off, hyy]]
        })
        .collect();
    f
}

/// Generators of the normal cone `N(xi, K)`; empty at interior points.
pub fn normal_cone(k: &SlopeBody, xi: V2, tol: f64) -> Vec<V2> {
    let mut gens: Vec<V2> = Vec::new();
    let mut push = |g: V2| {
        let n = vec2::norm(g);
        let g = vec2::scale(g, 1.0 / n);
        if !gens.iter().any(|h| vec2::dist(*h, g) < 1e-12) {
            gens.push(g);
        }
    };
    match &k.shape {
        BodyShape::Polygon(v) => {
            let n = v.len();
            let edges = if n == 2 { 2 } else { n };
            for i in 0..edges {
                let (a, b) = if n == 2 && i == 1 { (v[1], v[0]) } else { (v[i], v[(i + 1) % n]) };
                let e = vec2::sub(b, a);
                let out = [e[1], -e[0]];
                if (vec2::dot(out, vec2::sub(xi, a)) / vec2::norm(out)).abs() <= tol {
                    push(out);
                }
            }
        }
        BodyShape::SectorDisk { cone, rho } => {
            let r = vec2::norm(xi);
            if r >= rho - tol && r > 0.0 {
                push(xi);
            }
            if !cone.is_plane() {
                let (n_lo, n_hi) = cone.outward_normals();
                if vec2::cross(cone.dir_lo(), xi).abs() <= tol && vec2::dot(xi, cone.dir_lo()) >= -tol {
                    push(n_lo);
                }
                if vec2::cross(cone.dir_hi(), xi).abs() <= tol && vec2::dot(xi, cone.dir_hi()) >= -tol {
                    push(n_hi);
                }
            }
        }
    }
    gens
}

/// A certificate `x - sum lambda_i s_i ∈ N(xi, K)` with the matching convex
/// combination of Hessians.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// (sample index, weight) pairs, weights summing to one.
    pub lambdas: Vec<(usize, f64)>,
    /// The normal-cone element `x - sum lambda_i s_i`.
    pub v: V2,
    pub matrix: M2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactData {
    pub contact: Vec<usize>,
    pub normal_generators: Vec<V2>,
    /// `None` means the hypothesis `S_xi ⊆ Ω` failed for this slope and point.
    pub witness: Option<Witness>,
}

/// Contact set, normal cone and Hessian witness for the slope `xi` and
/// point `x`. `hess(i)` is the Hessian of `u` at sample `i`.
pub fn contact_data(
    points: &[V2],
    u: &[f64],
    hess: &dyn Fn(usize) -> M2,
    k: &SlopeBody,
    xi: V2,
    x: V2,
    tol_contact: Option<f64>,
) -> Result<ContactData> {
    contact_data_with_tolerance(points, u, hess, k, xi, x, tol_contact, WITNESS_REL_TOL)
}

/// As [`contact_data`] with an explicit relative residual allowed in the
/// witness equation; discrete slope grids need about the slope spacing.
#[allow(clippy::too_many_arguments)]
pub fn contact_data_with_tolerance(
    points: &[V2],
    u: &[f64],
    hess: &dyn Fn(usize) -> M2,
    k: &SlopeBody,
    xi: V2,
    x: V2,
    tol_contact: Option<f64>,
    witness_tol: f64,
) -> Result<ContactData> {
    if points.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !k.contains(xi, 1e-9) {
        return Err(Error::InvalidArgument(format!("slope {xi:?} is not in K")));
    }
    let (umin, umax) = u.iter().fold((f64::MAX, f64::MIN), |a, v| (a.0.min(*v), a.1.max(*v)));
    let tol = tol_contact.unwrap_or(CONTACT_REL_TOL * (umax - umin).max(f64::MIN_POSITIVE));
    let g: Vec<f64> = points.iter().zip(u).map(|(p, v)| v - vec2::dot(xi, *p)).collect();
    let gmin = g.iter().cloned().fold(f64::MAX, f64::min);
    let contact: Vec<usize> = (0..g.len()).filter(|&i| g[i] <= gmin + tol).collect();
    let gens = normal_cone(k, xi, 1e-9);
    let hull = hull_indices(points, &contact);
    let witness = find_witness(points, &hull, &gens, x, witness_tol).map(|(lambdas, v)| {
        let mut m = [[0.0; 2]; 2];
        for &(i, l) in &lambdas {
            let h = hess(i);
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += l * h[a][b];
                }
            }
        }
        Witness { lambdas, v, matrix: m }
    });
    Ok(ContactData { contact, normal_generators: gens, witness })
}

/// Vertices of the convex hull of the selected points (all of them when
/// there are at most three).
fn hull_indices(points: &[V2], sel: &[usize]) -> Vec<usize> {
    if sel.len() <= 3 {
        return sel.to_vec();
    }
    let mut idx = sel.to_vec();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap().then(a.cmp(&b)));
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let turn = |o: V2, a: V2, b: V2| vec2::cross(vec2::sub(a, o), vec2::sub(b, o));
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && turn(points[lower[lower.len() - 2]], points[lower[lower.len() - 1]], points[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && turn(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.truncate(64);
    lower
}

/// Searches supports of at most three columns (points and cone generators)
/// solving `sum lambda s + sum mu g = x`, `sum lambda = 1`, all coefficients
/// nonnegative.
fn find_witness(points: &[V2], hull: &[usize], gens: &[V2], x: V2, rel_tol: f64) -> Option<(Vec<(usize, f64)>, V2)> {
    let scale = 1.0 + vec2::norm(x) + hull.iter().map(|&i| vec2::norm(points[i])).fold(0.0, f64::max);
    let tol = rel_tol * scale;
    // columns: (is_point, index)
    let cols: Vec<(bool, usize)> =
        hull.iter().map(|&i| (true, i)).chain((0..gens.len()).map(|g| (false, g))).collect();
    let col = |c: (bool, usize)| -> [f64; 3] {
        if c.0 {
            [points[c.1][0], points[c.1][1], 1.0]
        } else {
            [gens[c.1][0], gens[c.1][1], 0.0]
        }
    };
    let rhs = [x[0], x[1], 1.0];
    for size in 1..=3usize {
        let mut combo = vec![0usize; size];
        let n = cols.len();
        if n < size {
            break;
        }
        // iterate all increasing index tuples
        for (k, c) in combo.iter_mut().enumerate() {
            *c = k;
        }
        loop {
            let chosen: Vec<(bool, usize)> = combo.iter().map(|&i| cols[i]).collect();
            if chosen.iter().any(|c| c.0) {
                let a: Vec<[f64; 3]> = chosen.iter().map(|&c| col(c)).collect();
                if let Some(coef) = least_squares(&a, rhs) {
                    let mut res = rhs;
                    for (j, aj) in a.iter().enumerate() {
                        for r in 0..3 {
                            res[r] -= coef[j] * aj[r];
                        }
                    }
                    let resn = res.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    if resn <= tol && coef.iter().all(|&c| c >= -1e-12) {
                        let mut lambdas = Vec::new();
                        let mut v = [0.0, 0.0];
                        for (j, c) in chosen.iter().enumerate() {
                            if c.0 {
                                lambdas.push((c.1, coef[j].max(0.0)));
                            } else {
                                v = vec2::add(v, vec2::scale(gens[c.1], coef[j].max(0.0)));
                            }
                        }
                        return Some((lambdas, v));
                    }
                }
            }
            // next combination
            let mut k = size;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if combo[k] < n - size + k {
                    combo[k] += 1;
                    for m in k + 1..size {
                        combo[m] = combo[m - 1] + 1;
                    }
                    break;
                }
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    None
}

/// Least-squares solution of a 3 x n system (n <= 3) by normal equations.
fn least_squares(cols: &[[f64; 3]], rhs: [f64; 3]) -> Option<Vec<f64>> {
    let n = cols.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (0..3).map(|r| cols[i][r] * cols[j][r]).sum();
        }
        m[i][n] = (0..3).map(|r| cols[i][r] * rhs[r]).sum();
    }
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())?;
        if m[p][c].abs() < 1e-14 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C11Report {
    pub lip_grad: f64,
    pub range_hausdorff: f64,
    pub convexity_violation: f64,
}

/// Lipschitz constant of `xi*` over axis and diagonal neighbours, Hausdorff
/// distance between the gradient cloud and the slope samples, and the worst
/// negative second difference of `phi`.
pub fn check_c11(field: &EnvelopeField, k: &SlopeBody) -> C11Report {
    let (nx, ny) = (field.nx, field.ny);
    let mut lip: f64 = 0.0;
    let mut conv: f64 = 0.0;
    let steps: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    for j in 0..ny as isize {
        for i in 0..nx as isize {
            let c = field.idx(i as usize, j as usize);
            for &(di, dj) in &steps {
                let (a, b) = (i + di, j + dj);
                if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                    let o = field.idx(a as usize, b as usize);
                    let d = field.h * ((di * di + dj * dj) as f64).sqrt();
                    lip = lip.max(vec2::dist(field.xi[c], field.xi[o]) / d);
                }
                let (l0, l1, r0, r1) = (i - di, j - dj, i + di, j + dj);
                if l0 >= 0 && l1 >= 0 && r0 >= 0 && r1 >= 0 && (l0 as usize) < nx && (r0 as usize) < nx && (l1 as usize) < ny && (r1 as usize) < ny {
                    let s = field.phi[field.idx(r0 as usize, r1 as usize)] - 2.0 * field.phi[c]
                        + field.phi[field.idx(l0 as usize, l1 as usize)];
                    conv = conv.max(-s);
                }
            }
        }
    }
    let mut used = vec![false; k.samples.len()];
    for &m in &field.arg {
        used[m] = true;
    }
    C11Report { lip_grad: lip, range_hausdorff: hausdorff_to_used(&k.samples, &used), convexity_violation: conv }
}

/// Hausdorff distance between the whole sample set and its `used` subset,
/// i.e. the largest distance from a sample to the nearest used one.
pub fn hausdorff_to_used(samples: &[V2], used: &[bool]) -> f64 {
    let pts: Vec<V2> = samples.iter().zip(used).filter(|(_, u)| **u).map(|(p, _)| *p).collect();
    if pts.is_empty() {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in samples {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let cells = ((pts.len() as f64).sqrt().ceil() as usize).clamp(1, 2048);
    let cw = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / cells as f64).max(1e-12);
    let ncx = ((hi[0] - lo[0]) / cw) as usize + 1;
    let ncy = ((hi[1] - lo[1]) / cw) as usize + 1;
    let cell = |p: V2| (((p[0] - lo[0]) / cw) as usize, ((p[1] - lo[1]) / cw) as usize);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); ncx * ncy];
    for (i, p) in pts.iter().enumerate() {
        let (cx, cy) = cell(*p);
        buckets[cy.min(ncy - 1) * ncx + cx.min(ncx - 1)].push(i);
    }
    samples
        .par_iter()
        .map(|q| {
            let (cx, cy) = cell(*q);
            let mut best = f64::INFINITY;
            let mut ring = 0usize;
            loop {
                let x0 = cx.saturating_sub(ring);
                let y0 = cy.saturating_sub(ring);
                let x1 = (cx + ring).min(ncx - 1);
                let y1 = (cy + ring).min(ncy - 1);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        if yy != y0 && yy != y1 && xx != x0 && xx != x1 && ring > 0 {
                            continue;
                        }
                        for &i in &buckets[yy * ncx + xx] {
                            best = best.min(vec2::dist(pts[i], *q));
                        }
                    }
                }
                if best <= ring as f64 * cw || (x0 == 0 && y0 == 0 && x1 == ncx - 1 && y1 == ncy - 1) {
                    return best;
                }
                ring += 1;
            }
        })
        .reduce(|| 0.0, f64::max)
}
