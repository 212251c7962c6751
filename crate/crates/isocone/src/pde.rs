//! Polar triangulations of star sets and P1 Galerkin solves of the
//! weighted and anisotropic Neumann problems.

use crate::cone::Cone;
use crate::envelope::{support_function, SlopeBody};
use crate::error::{Error, Result};
use crate::geometry::StarSet;
use crate::vec2::{self, V2};
use crate::weight::HomWeight;
use rayon::prelude::*;
use std::collections::HashMap;

/// Smallest admissible triangle angle, in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;
/// Relative residual targeted by the conjugate-gradient solve.
pub const CG_TOL: f64 = 1e-12;
/// Compatibility: audited at this relative level, fatal beyond the next.
pub const COMPAT_TOL: f64 = 1e-10;
pub const COMPAT_FATAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    /// On the free boundary `∂E ∩ Σ`.
    Free,
    /// On a boundary ray of the cone.
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Oriented with the domain on the left.
    pub a: usize,
    pub b: usize,
    pub tag: EdgeTag,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub cone: Cone,
    pub vertices: Vec<V2>,
    /// Counterclockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Largest triangle diameter.
    pub h: f64,
}

impl TriMesh {
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * vec2::cross(vec2::sub(q, p), vec2::sub(r, p))
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| tri_min_angle(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .fold(180.0, f64::min)
    }

    pub fn max_diameter(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let p = |i: usize| self.vertices[t[i]];
                vec2::dist(p(0), p(1)).max(vec2::dist(p(1), p(2))).max(vec2::dist(p(2), p(0)))
            })
            .fold(0.0, f64::max)
    }

    /// Every edge is shared by one (boundary) or two (interior) triangles
    /// with opposite orientations, and all triangles are positive.
    pub fn is_conforming(&self) -> bool {
        let mut count: HashMap<(usize, usize), i32> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.area(t) <= 0.0 {
                return false;
            }
            for k in 0..3 {
                *count.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut boundary = 0;
        for (&(a, b), &c) in &count {
            if c != 1 {
                return false;
            }
            if !count.contains_key(&(b, a)) {
                boundary += 1;
            }
        }
        boundary == self.boundary.len()
    }
}

fn tri_min_angle(a: V2, b: V2, c: V2) -> f64 {
    let ang = |p: V2, q: V2, r: V2| {
        let (u, v) = (vec2::sub(q, p), vec2::sub(r, p));
        vec2::cross(u, v).abs().atan2(vec2::dot(u, v)).to_degrees()
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

/// Arc-length parametrisation of the boundary polyline of a star set.
struct Boundary {
    pts: Vec<V2>,
    cum: Vec<f64>,
    closed: bool,
}

impl Boundary {
    fn new(set: &StarSet) -> Self {
        let mut pts: Vec<V2> = (0..set.n()).map(|j| set.boundary_point(j)).collect();
        let closed = set.cone.is_plane();
        if closed {
            pts.push(pts[0]);
        }
        let mut cum = vec![0.0];
        for k in 1..pts.len() {
            cum.push(cum[k - 1] + vec2::dist(pts[k - 1], pts[k]));
        }
        Boundary { pts, cum, closed }
    }

    fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn at(&self, sigma: f64) -> V2 {
        let n = self.pts.len();
        if sigma <= 0.0 {
            return self.pts[0];
        }
        if sigma >= 1.0 {
            return if self.closed { self.pts[0] } else { self.pts[n - 1] };
        }
        let s = sigma * self.length();
        let k = self.cum.partition_point(|&c| c <= s).clamp(1, n - 1);
        let seg = self.cum[k] - self.cum[k - 1];
        let f = if seg > 0.0 { (s - self.cum[k - 1]) / seg } else { 0.0 };
        vec2::add(vec2::scale(self.pts[k - 1], 1.0 - f), vec2::scale(self.pts[k], f))
    }
}

/// Annular triangulation: the origin, then rings that are scaled copies of
/// the boundary polyline, nodes equally spaced in arc length and doubled
/// whenever the arc spacing would exceed the radial spacing.
pub fn fan_triangulate(set: &StarSet, target_h: f64) -> Result<TriMesh> {
    if !(target_h > 0.0) {
        return Err(Error::InvalidArgument("target_h must be positive".into()));
    }
    let bnd = Boundary::new(set);
    let rmax = set.r.iter().cloned().fold(0.0, f64::max);
    let mut d = target_h / std::f64::consts::SQRT_2;
    for _ in 0..12 {
        let mesh = build_rings(set, &bnd, rmax, d);
        if mesh.h <= target_h {
            let ang = mesh.min_angle_deg();
            if ang < MIN_ANGLE_DEG {
                return Err(Error::MeshInfeasible(format!(
                    "minimum angle {ang:.2} deg below {MIN_ANGLE_DEG} deg"
                )));
            }
            return Ok(mesh);
        }
        d *= 0.9;
    }
    Err(Error::MeshInfeasible("could not meet the diameter bound".into()))
}

fn build_rings(set: &StarSet, bnd: &Boundary, rmax: f64, d: f64) -> TriMesh {
    let cone = set.cone;
    let closed = bnd.closed;
    let n_rings = ((rmax / d).ceil() as usize).max(1);
    let lambda = bnd.length();
    // even counts put a node at the mirror line of symmetric data
    let even = |m: usize| if closed { m.max(8) } else { m + (m & 1) };
    let m1 = if closed { 8 } else { even(((cone.opening() / (std::f64::consts::PI / 4.0)).ceil() as usize).max(2)) };
    let mut counts = vec![0usize; n_rings + 1];
    for i in 1..=n_rings {
        let s = i as f64 / n_rings as f64;
        let want = even((s * lambda / d).ceil() as usize);
        counts[i] = want.max(if i == 1 { m1 } else { counts[i - 1] });
    }
    let mut vertices: Vec<V2> = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..=n_rings {
        let s = i as f64 / n_rings as f64;
        let m = counts[i];
        let nodes = if closed { m } else { m + 1 };
        let mut ids = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let p = bnd.at(j as f64 / m as f64);
            ids.push(vertices.len());
            let on_ray = !closed && (j == 0 || j == m);
            vertices.push(if on_ray {
                vec2::scale(p, s)
            } else if i == n_rings {
                // snap free nodes onto the boundary curve itself
                let t = cone.angle_of(p);
                vec2::scale(vec2::unit(t), set.radius_at(t))
            } else {
                vec2::scale(p, s)
            });
        }
        rings.push(ids);
    }
    let node = |ring: &Vec<usize>, j: usize| if closed { ring[j % ring.len()] } else { ring[j] };
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for j in 0..counts[1] {
        push_ccw(&mut triangles, &vertices, [0, node(&rings[1], j), node(&rings[1], j + 1)]);
    }
    for i in 1..n_rings {
        let (mi, mo) = (counts[i], counts[i + 1]);
        let inner: Vec<usize> = (0..=mi).map(|j| node(&rings[i], j)).collect();
        let outer: Vec<usize> = (0..=mo).map(|j| node(&rings[i + 1], j)).collect();
        if closed {
            zipper(&mut triangles, &vertices, &inner, &outer);
        } else {
            // each half is zipped from its ray towards the mirror line
            zipper(&mut triangles, &vertices, &inner[..=mi / 2], &outer[..=mo / 2]);
            let ri: Vec<usize> = inner[mi / 2..].iter().rev().cloned().collect();
            let ro: Vec<usize> = outer[mo / 2..].iter().rev().cloned().collect();
            zipper(&mut triangles, &vertices, &ri, &ro);
        }
    }
    let mut boundary = Vec::new();
    let outer = &rings[n_rings];
    for j in 0..counts[n_rings] {
        boundary.push(BoundaryEdge { a: node(outer, j), b: node(outer, j + 1), tag: EdgeTag::Free });
    }
    if !closed {
        // hi ray runs outward-in, lo ray inward-out, keeping the domain on the left
        for i in 0..n_rings {
            let a = if i == 0 { 0 } else { rings[i][counts[i]] };
            let b = rings[i + 1][counts[i + 1]];
            boundary.push(BoundaryEdge { a: b, b: a, tag: EdgeTag::Cone });
            let a = if i == 0 { 0 } else { rings[i][0] };
            let b = rings[i + 1][0];
            boundary.push(BoundaryEdge { a, b, tag: EdgeTag::Cone });
        }
    }
    let mut mesh = TriMesh { cone, vertices, triangles, boundary, h: 0.0 };
    mesh.h = mesh.max_diameter();
    mesh
}

fn push_ccw(triangles: &mut Vec<[usize; 3]>, verts: &[V2], tri: [usize; 3]) {
    let (p, q, r) = (verts[tri[0]], verts[tri[1]], verts[tri[2]]);
    if vec2::cross(vec2::sub(q, p), vec2::sub(r, p)) >= 0.0 {
        triangles.push(tri);
    } else {
        triangles.push([tri[0], tri[2], tri[1]]);
    }
}

/// Stitches two chains with aligned end points, always adding the shorter
/// of the two candidate edges. Near-ties advance the inner chain.
fn zipper(triangles: &mut Vec<[usize; 3]>, verts: &[V2], inner: &[usize], outer: &[usize]) {
    let (np, nq) = (inner.len() - 1, outer.len() - 1);
    let (mut p, mut q) = (0, 0);
    while p < np || q < nq {
        let advance_inner = if p == np {
            false
        } else if q == nq {
            true
        } else {
            let li = vec2::dist(verts[inner[p + 1]], verts[outer[q]]);
            let lo = vec2::dist(verts[inner[p]], verts[outer[q + 1]]);
            li <= lo * (1.0 + 1e-12)
        };
        if advance_inner {
            push_ccw(triangles, verts, [inner[p], outer[q], inner[p + 1]]);
            p += 1;
        } else {
            push_ccw(triangles, verts, [inner[p], outer[q], outer[q + 1]]);
            q += 1;
        }
    }
}

/// The two Neumann problems.
#[derive(Debug, Clone, Copy)]
pub enum Problem<'a> {
    /// `div(w grad u) = w b_E` in E, `d_nu u = 1` on the free boundary and
    /// `0` on the cone.
    Weighted(&'a HomWeight),
    /// `Δu = b_E` in E, `d_nu u = |nu|_{K*}` on the boundary.
    Anisotropic(&'a SlopeBody),
}

/// A P1 solution with the datum it was solved against.
#[derive(Debug, Clone)]
pub struct NodalField {
    pub values: Vec<f64>,
    pub b_e: f64,
    /// Relative CG residual reached.
    pub residual: f64,
    pub iterations: usize,
    /// `|sum rhs| / ||rhs||_1` after assembly.
    pub compatibility: f64,
    /// Lumped weights `∫ w phi_i` used for the gauge.
    pub lumped: Vec<f64>,
}

/// Symmetric sparse matrix in CSR form.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1]).find(|&k| self.cols[k] == i).map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }
}

/// Barycentric gradients of a triangle.
fn bary_grads(p: [V2; 3]) -> ([V2; 3], f64) {
    let area2 = vec2::cross(vec2::sub(p[1], p[0]), vec2::sub(p[2], p[0]));
    let g = |i: usize| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        let e = vec2::sub(b, a);
        [-e[1] / area2, e[0] / area2]
    };
    ([g(0), g(1), g(2)], 0.5 * area2)
}

/// Three-point Gauss rule on [0, 1].
const EDGE_GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Assembled system of one problem.
pub struct Assembly {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub b_e: f64,
    pub lumped: Vec<f64>,
}

/// Assembles stiffness and load; `b_E` comes from the same quadratures, so
/// the load sums to zero up to rounding.
pub fn assemble(mesh: &TriMesh, problem: Problem) -> Assembly {
    let nv = mesh.vertices.len();
    // per triangle: local stiffness and lumped weights, computed in parallel
    let locals: Vec<([[f64; 3]; 3], [f64; 3])> = mesh
        .triangles
        .par_iter()
        .map(|tri| {
            let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            let (g, area) = bary_grads(p);
            let (coef, lump) = match problem {
                Problem::Weighted(w) => {
                    // edge-midpoint rule: midpoint k is opposite vertex k
                    let wm: [f64; 3] =
                        std::array::from_fn(|k| w.eval_unchecked(vec2::scale(vec2::add(p[(k + 1) % 3], p[(k + 2) % 3]), 0.5)));
                    let total = area / 3.0 * (wm[0] + wm[1] + wm[2]);
                    // phi_i is 1/2 at the two midpoints adjacent to vertex i
                    let lump: [f64; 3] = std::array::from_fn(|i| area / 3.0 * 0.5 * (wm[(i + 1) % 3] + wm[(i + 2) % 3]));
                    (total, lump)
                }
                Problem::Anisotropic(_) => (area, [area / 3.0; 3]),
            };
            let k: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| coef * vec2::dot(g[i], g[j])));
            (k, lump)
        })
        .collect();
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    let mut lumped = vec![0.0; nv];
    for (tri, (k, lump)) in mesh.triangles.iter().zip(&locals) {
        for i in 0..3 {
            lumped[tri[i]] += lump[i];
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    let mut flux = vec![0.0; nv];
    for e in &mesh.boundary {
        let (a, b) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let len = vec2::dist(a, b);
        match problem {
            Problem::Weighted(w) => {
                if e.tag != EdgeTag::Free {
                    continue;
                }
                for &(t, wt) in &EDGE_GAUSS {
                    let x = vec2::add(vec2::scale(a, 1.0 - t), vec2::scale(b, t));
                    let val = wt * len * w.eval_unchecked(x);
                    flux[e.a] += val * (1.0 - t);
                    flux[e.b] += val * t;
                }
            }
            Problem::Anisotropic(k) => {
                let ed = vec2::sub(b, a);
                let g = support_function(k, [ed[1], -ed[0]]);
                flux[e.a] += 0.5 * g;
                flux[e.b] += 0.5 * g;
            }
        }
    }
    let b_e = flux.iter().sum::<f64>() / lumped.iter().sum::<f64>();
    let rhs: Vec<f64> = (0..nv).map(|i| flux[i] - b_e * lumped[i]).collect();
    Assembly { matrix: Csr::from_triplets(nv, trip), rhs, b_e, lumped }
}

/// Galerkin solution, gauge-fixed to weighted mean zero.
pub fn solve_neumann(mesh: &TriMesh, problem: Problem) -> Result<NodalField> {
    let asm = assemble(mesh, problem);
    let l1: f64 = asm.rhs.iter().map(|v| v.abs()).sum();
    let compat = asm.rhs.iter().sum::<f64>().abs() / l1.max(f64::MIN_POSITIVE);
    if compat > COMPAT_FATAL {
        return Err(Error::Compatibility(compat));
    }
    if !is_connected(mesh) {
        return Err(Error::SingularSystem("mesh is disconnected".into()));
    }
    let diag = asm.matrix.diag();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::SingularSystem("zero diagonal entry".into()));
    }
    let (mut x, residual, iterations) = pcg(&asm.matrix, &asm.rhs, &diag, CG_TOL, 20 * mesh.vertices.len() + 100);
    if residual > 1e-10 {
        return Err(Error::NoConvergence(residual));
    }
    let total: f64 = asm.lumped.iter().sum();
    let mean = x.iter().zip(&asm.lumped).map(|(a, b)| a * b).sum::<f64>() / total;
    for v in &mut x {
        *v -= mean;
    }
    Ok(NodalField { values: x, b_e: asm.b_e, residual, iterations, compatibility: compat, lumped: asm.lumped })
}

fn is_connected(mesh: &TriMesh) -> bool {
    let n = mesh.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for t in &mesh.triangles {
        for k in 0..3 {
            adj[t[k]].push(t[(k + 1) % 3]);
            adj[t[(k + 1) % 3]].push(t[k]);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|s| *s)
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Jacobi-preconditioned CG on the complement of the constants.
fn pcg(a: &Csr, b: &[f64], diag: &[f64], tol: f64, max_it: usize) -> (Vec<f64>, f64, usize) {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut r = b.to_vec();
    project_mean(&mut r);
    let bn = dot(&r, &r).sqrt().max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    project_mean(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    let mut res = dot(&r, &r).sqrt() / bn;
    while res > tol && it < max_it {
        a.mul(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project_mean(&mut r);
        res = dot(&r, &r).sqrt() / bn;
        it += 1;
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        project_mean(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // true residual
    a.mul(&x, &mut ap);
    let mut tr: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    project_mean(&mut tr);
    (x, dot(&tr, &tr).sqrt() / bn, it)
}

/// Seven-point degree-5 rule on the reference triangle: (barycentrics, weight).
pub const TRI_RULE7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_34;
    const W1: f64 = 0.132_394_152_788_506_18;
    const W2: f64 = 0.125_939_180_544_827_15;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Weighted energy error `(∫_E w |grad u_h - grad u|^2)^{1/2}` (unweighted in
/// anisotropic mode), by the seven-point rule.
pub fn energy_error(mesh: &TriMesh, u: &[f64], w: Option<&HomWeight>, grad: impl Fn(V2) -> V2) -> f64 {
    let mut sum = 0.0;
    for tri in &mesh.triangles {
        let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        let (g, area) = bary_grads(p);
        let gh = (0..3).fold([0.0, 0.0], |acc, i| vec2::add(acc, vec2::scale(g[i], u[tri[i]])));
        for (l, wt) in TRI_RULE7 {
            let x = (0..3).fold([0.0, 0.0], |acc, i| vec2::add(acc, vec2::scale(p[i], l[i])));
            let e = vec2::sub(gh, grad(x));
            let ww = w.map_or(1.0, |w| w.eval_unchecked(x));
            sum += area * wt * ww * vec2::dot(e, e);
        }
    }
    sum.sqrt()
}

/// Gradient of the P1 field on each triangle.
pub fn triangle_gradients(mesh: &TriMesh, u: &[f64]) -> Vec<V2> {
    mesh.triangles
        .iter()
        .map(|tri| {
            let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            let (g, _) = bary_grads(p);
            (0..3).fold([0.0, 0.0], |acc, i| vec2::add(acc, vec2::scale(g[i], u[tri[i]])))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;

    fn xy() -> HomWeight {
        HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap()
    }

    #[test]
    fn quadrant_ball_mesh_tags() {
        let b = StarSet::ball(Cone::quadrant(), 1024, 1.0).unwrap();
        let m = fan_triangulate(&b, 0.05).unwrap();
        assert!(m.is_conforming());
        assert!(m.h <= 0.05);
        assert!(m.min_angle_deg() >= MIN_ANGLE_DEG);
        for e in &m.boundary {
            let (p, q) = (m.vertices[e.a], m.vertices[e.b]);
            match e.tag {
                EdgeTag::Cone => assert!((p[0] == 0.0 && q[0] == 0.0) || (p[1] == 0.0 && q[1] == 0.0)),
                EdgeTag::Free => assert!((vec2::norm(p) - 1.0).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn half_plane_cap_tags_lie_on_axis() {
        let b = StarSet::ball(Cone::half_plane(), 1024, 1.0).unwrap();
        let m = fan_triangulate(&b, 0.05).unwrap();
        assert!(m.is_conforming());
        let cone_edges: Vec<_> = m.boundary.iter().filter(|e| e.tag == EdgeTag::Cone).collect();
        assert!(!cone_edges.is_empty());
        for e in cone_edges {
            assert!(m.vertices[e.a][1].abs() <= 1e-12 && m.vertices[e.b][1].abs() <= 1e-12);
        }
    }

    #[test]
    fn compatibility_of_assembly() {
        let w = xy();
        let b = StarSet::ball(w.cone, 1024, 1.0).unwrap();
        let m = fan_triangulate(&b, 0.05).unwrap();
        let asm = assemble(&m, Problem::Weighted(&w));
        let l1: f64 = asm.rhs.iter().map(|v| v.abs()).sum();
        assert!(asm.rhs.iter().sum::<f64>().abs() <= COMPAT_TOL * l1);
    }

    #[test]
    fn ball_solution_is_half_square_norm() {
        let w = xy();
        let b = StarSet::ball(w.cone, 2048, 1.0).unwrap();
        let m = fan_triangulate(&b, 0.05).unwrap();
        let u = solve_neumann(&m, Problem::Weighted(&w)).unwrap();
        assert!(u.residual <= 1e-10);
        assert!((u.b_e - 4.0).abs() < 1e-2);
        let err = energy_error(&m, &u.values, Some(&w), |x| x);
        assert!(err < 0.05, "energy error {err}");
    }

    #[test]
    fn perturbed_ball_mesh_quality() {
        let w = xy();
        for eps in [0.1, 0.2] {
            let e = StarSet::perturbed_ball(&w, 2048, eps, 4).unwrap();
            let m = fan_triangulate(&e, 0.02).unwrap();
            assert!(m.is_conforming());
            assert!(m.h <= 0.02);
            assert!(m.min_angle_deg() >= MIN_ANGLE_DEG);
        }
    }

    #[test]
    fn energy_error_halves_with_h() {
        let w = xy();
        let b = StarSet::ball(w.cone, 4096, 1.0).unwrap();
        let err = |h: f64| {
            let m = fan_triangulate(&b, h).unwrap();
            let u = solve_neumann(&m, Problem::Weighted(&w)).unwrap();
            energy_error(&m, &u.values, Some(&w), |x| x)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 / e2 >= 1.8, "{e1} {e2}");
    }

    #[test]
    fn symmetric_data_give_symmetric_solution() {
        let w = xy();
        let e = StarSet::perturbed_ball(&w, 1025, 0.1, 4).unwrap();
        let m = fan_triangulate(&e, 0.05).unwrap();
        let u = solve_neumann(&m, Problem::Weighted(&w)).unwrap();
        let key = |p: V2| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let index: HashMap<_, _> = m.vertices.iter().enumerate().map(|(i, p)| (key(*p), i)).collect();
        let mut worst: f64 = 0.0;
        for (i, p) in m.vertices.iter().enumerate() {
            let j = index[&key([p[1], p[0]])];
            worst = worst.max((u.values[i] - u.values[j]).abs());
        }
        assert!(worst <= 1e-8, "asymmetry {worst}");
    }

    #[test]
    fn disk_anisotropic_with_round_body() {
        let k = SlopeBody::sector_disk(Cone::plane(), 1.0, 32, 256).unwrap();
        let b = StarSet::ball(Cone::plane(), 2048, 1.0).unwrap();
        let m = fan_triangulate(&b, 0.05).unwrap();
        let u = solve_neumann(&m, Problem::Anisotropic(&k)).unwrap();
        assert!((u.b_e - 2.0).abs() < 1e-2, "{}", u.b_e);
        let err = energy_error(&m, &u.values, None, |x| x);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn disconnected_input_is_rejected_by_size() {
        let b = StarSet::ball(Cone::quadrant(), 64, 1.0).unwrap();
        assert!(fan_triangulate(&b, 0.0).is_err());
    }
}
