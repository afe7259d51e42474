//! Circle packings of plane complexes: hub augmentation, the tangency radius
//! solver, plane layout, and Möbius normalization into a canonical frame.
//!
//! Every face with four or more sides receives a hub vertex adjacent to its
//! whole boundary, which pins the face's modulus and turns the complex into a
//! sphere triangulation with a unique packing up to Möbius maps. The external
//! face always receives a hub during packing; its circle is realized as the
//! exterior of the unit disk. The solver pins one hub triangle at unit radii,
//! adjusts all other radii until every interior angle sum is 2π, lays the
//! circles out by walking face adjacencies, and finally applies the Möbius
//! map that sends the hub circle to the unit circle, the first anchor
//! tangency to the origin, and the second onto the positive real axis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{self, Circle, GeometryError, MobiusMap, SpherePoint};
use crate::plane_complex::{ComplexError, Face, LevelFaces, PlaneComplex, VertexId};

#[derive(Debug, Error)]
pub enum PackError {
    #[error("complex is not simple: offending pair ({0}, {1})")]
    NotSimple(VertexId, VertexId),
    #[error("face {0} is not a Jordan domain")]
    NonJordanFace(usize),
    #[error("radius iteration did not reach tolerance {tolerance} in {sweeps} sweeps (residual {residual})")]
    NonConvergent { sweeps: usize, residual: f64, tolerance: f64 },
    #[error("anchor ({0}, {1}) is not an edge of the complex")]
    BadAnchor(VertexId, VertexId),
    #[error("requested level {0} exceeds packed level {1}")]
    LevelOutOfRange(u32, u32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

#[derive(Debug, Clone)]
pub struct PackOptions {
    /// Maximum angle-sum residual accepted by the radius iteration.
    pub tolerance: f64,
    /// Sweep budget for the radius iteration.
    pub max_sweeps: usize,
    /// Anchor edges for the canonical frame; defaults to the first edges of
    /// the level-0 external walk.
    pub anchors: Option<[(u64, u64); 3]>,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions { tolerance: 1e-10, max_sweeps: 100_000, anchors: None }
    }
}

/// A marked circle packing: one circle per complex vertex, hub circles kept
/// aside, plus the anchors and solver residual.
#[derive(Debug, Clone)]
pub struct CirclePacking {
    pub complex: PlaneComplex,
    pub circles: BTreeMap<VertexId, Circle>,
    /// Hub circles by hub id, with the index of the face each hub fills (in
    /// the complex's current face list).
    pub hubs: BTreeMap<VertexId, (Circle, usize)>,
    pub anchors: [(VertexId, VertexId); 3],
    /// Final angle-sum residual of the radius solve.
    pub residual: f64,
    /// Largest relative tangency error measured after layout.
    pub tangency_error: f64,
}

impl CirclePacking {
    pub fn circle(&self, v: VertexId) -> Option<&Circle> {
        self.circles.get(&v)
    }

    /// Tangency point of the two circles across an edge.
    pub fn tangency(&self, u: VertexId, v: VertexId) -> Result<SpherePoint, PackError> {
        let cu = self.circles.get(&u).or_else(|| self.hubs.get(&u).map(|(c, _)| c));
        let cv = self.circles.get(&v).or_else(|| self.hubs.get(&v).map(|(c, _)| c));
        match (cu, cv) {
            (Some(cu), Some(cv)) => Ok(geometry::tangency_point(cu, cv)?),
            _ => Err(PackError::BadAnchor(u, v)),
        }
    }

    pub fn anchor_points(&self) -> Result<(SpherePoint, SpherePoint, SpherePoint), PackError> {
        Ok((
            self.tangency(self.anchors[0].0, self.anchors[0].1)?,
            self.tangency(self.anchors[1].0, self.anchors[1].1)?,
            self.tangency(self.anchors[2].0, self.anchors[2].1)?,
        ))
    }

    /// Applies a Möbius map to every circle.
    pub fn transformed(&self, m: &MobiusMap) -> CirclePacking {
        CirclePacking {
            complex: self.complex.clone(),
            circles: self.circles.iter().map(|(&v, c)| (v, m.apply_to_circle(c))).collect(),
            hubs: self.hubs.iter().map(|(&v, (c, f))| (v, (m.apply_to_circle(c), *f))).collect(),
            anchors: self.anchors,
            residual: self.residual,
            tangency_error: self.tangency_error,
        }
    }
}

/// The anchor edges of a complex: the first three edges of the level-0
/// external walk, starting from its smallest vertex id.
pub fn default_anchor_edges(c: &PlaneComplex) -> [(VertexId, VertexId); 3] {
    let level0 = &c.levels()[0];
    let walk = &level0.faces[level0.external].walk;
    let n = walk.len();
    let start = (0..n).min_by_key(|&i| walk[i]).unwrap();
    let at = |k: usize| walk[(start + k) % n];
    [(at(0), at(1)), (at(1), at(2)), (at(2), at(3 % n))]
}

/// Adds one hub vertex to every face with at least four sides (the external
/// face included), producing a sphere triangulation. Hub ids continue the
/// complex's id sequence in face order.
pub fn augment(c: &PlaneComplex) -> Result<PlaneComplex, PackError> {
    let (complex, _) = augment_with_hubs(c, false)?;
    Ok(complex)
}

/// As [`augment`]; when `force_external` is set, the external face receives a
/// hub regardless of its side count. Returns the hub map (hub id → face index
/// in the input complex).
pub fn augment_with_hubs(
    c: &PlaneComplex,
    force_external: bool,
) -> Result<(PlaneComplex, BTreeMap<VertexId, usize>), PackError> {
    if let Some((u, v)) = c.simple_violation() {
        return Err(PackError::NotSimple(u, v));
    }
    let mut vertices = c.vertex_map().clone();
    let mut next_id = c.max_vertex_id() + 1;
    let mut faces = Vec::new();
    let mut hubs = BTreeMap::new();
    let mut external = 0usize;
    let level = c.level();
    for (fi, face) in c.faces().iter().enumerate() {
        if !face.is_jordan() {
            return Err(PackError::NonJordanFace(fi));
        }
        let needs_hub = face.walk.len() >= 4 || (force_external && fi == c.external_index());
        if fi == c.external_index() {
            external = faces.len();
        }
        if !needs_hub {
            faces.push(face.clone());
            continue;
        }
        let hub = VertexId(next_id);
        next_id += 1;
        vertices.insert(hub, crate::plane_complex::Vertex { label: None, level });
        hubs.insert(hub, fi);
        let n = face.walk.len();
        for i in 0..n {
            faces.push(Face {
                walk: vec![face.walk[i], face.walk[(i + 1) % n], hub],
                mirrored: face.mirrored,
                type_tag: None,
                level: face.level,
                parent: Some(fi),
                template_face: None,
            });
        }
    }
    let complex = PlaneComplex::from_level(vertices, LevelFaces { faces, external })?;
    Ok((complex, hubs))
}

/// Computes the canonical circle packing of a simple complex with Jordan
/// faces.
pub fn pack(c: &PlaneComplex, opts: &PackOptions) -> Result<CirclePacking, PackError> {
    if let Some((u, v)) = c.simple_violation() {
        return Err(PackError::NotSimple(u, v));
    }
    let (k, hubs) = augment_with_hubs(c, true)?;
    let external_hub = *hubs
        .iter()
        .find(|(_, &fi)| fi == c.external_index())
        .expect("external face always hubbed")
        .0;

    let anchors: [(VertexId, VertexId); 3] = match opts.anchors {
        Some(pairs) => {
            let mut out = [(VertexId(0), VertexId(0)); 3];
            for (i, (a, b)) in pairs.into_iter().enumerate() {
                let (a, b) = (VertexId(a), VertexId(b));
                if !c.has_edge(a, b) {
                    return Err(PackError::BadAnchor(a, b));
                }
                out[i] = (a, b);
            }
            out
        }
        None => default_anchor_edges(c),
    };

    // pinned hub triangle: the external hub with the first external-walk edge
    let ext_walk = c.external_face().walk.clone();
    let pin = [external_hub, ext_walk[0], ext_walk[1]];
    let radii = solve_radii(&k, &pin, opts)?;
    let residual = max_angle_residual(&k, &pin, &radii);

    let (positions, frozen) = layout(&k, &pin, &radii)?;
    let positions = polish_positions(&k, &radii, frozen, positions);
    let tangency_error = max_tangency_error(&k, &radii, &positions);

    let mut layout_circles: BTreeMap<VertexId, Circle> = BTreeMap::new();
    for (&v, &z) in &positions {
        layout_circles.insert(v, Circle::from_center_radius(z, radii[&v]));
    }

    // canonical frame: hub circle to the unit circle's exterior, first anchor
    // tangency to 0, second onto the positive real axis
    let hub_center = positions[&external_hub];
    let hub_radius = radii[&external_hub];
    let one = Complex64::new(1.0, 0.0);
    let m1 = MobiusMap::new(Complex64::new(0.0, 0.0), Complex64::new(hub_radius, 0.0), one, -hub_center)?;
    let t1 = {
        let cu = m1.apply_to_circle(&layout_circles[&anchors[0].0]);
        let cv = m1.apply_to_circle(&layout_circles[&anchors[0].1]);
        geometry::tangency_point(&cu, &cv)?
    };
    let a1 = MobiusMap::new(one, -t1, -t1.conj(), one)?;
    let m2 = a1.compose(&m1);
    let t2 = {
        let cu = m2.apply_to_circle(&layout_circles[&anchors[1].0]);
        let cv = m2.apply_to_circle(&layout_circles[&anchors[1].1]);
        geometry::tangency_point(&cu, &cv)?
    };
    let rot = if t2.norm() > 0.0 {
        let phase = t2 / t2.norm();
        MobiusMap::new(phase.conj(), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one)?
    } else {
        MobiusMap::IDENTITY
    };
    let m = rot.compose(&m2);

    let mut circles = BTreeMap::new();
    let mut hub_circles = BTreeMap::new();
    for (&v, circle) in &layout_circles {
        let image = m.apply_to_circle(circle);
        match hubs.get(&v) {
            Some(&fi) => {
                hub_circles.insert(v, (image, fi));
            }
            None => {
                circles.insert(v, image);
            }
        }
    }
    Ok(CirclePacking { complex: c.clone(), circles, hubs: hub_circles, anchors, residual, tangency_error })
}

/// Transforms a packing so the three anchor tangency points go to 0, 1, ∞.
pub fn mobius_normalize(p: &CirclePacking, anchors: &[(VertexId, VertexId); 3]) -> Result<CirclePacking, PackError> {
    let t = (
        p.tangency(anchors[0].0, anchors[0].1)?,
        p.tangency(anchors[1].0, anchors[1].1)?,
        p.tangency(anchors[2].0, anchors[2].1)?,
    );
    let m = MobiusMap::to_zero_one_inf(t.0, t.1, t.2)?;
    let mut out = p.transformed(&m);
    out.anchors = *anchors;
    Ok(out)
}

/// Restriction of a packing to the vertices of creation level ≤ `level`,
/// hubs dropped; realizes the sub-packing of the level-k subdivision graph.
pub fn extract_subpacking(p: &CirclePacking, level: u32) -> Result<CirclePacking, PackError> {
    let packed_level = p.complex.level();
    if level > packed_level {
        return Err(PackError::LevelOutOfRange(level, packed_level));
    }
    let levels: Vec<LevelFaces> = p.complex.levels()[..=(level as usize)].to_vec();
    let vertices: BTreeMap<VertexId, crate::plane_complex::Vertex> = p
        .complex
        .vertex_map()
        .iter()
        .filter(|(_, info)| info.level <= level)
        .map(|(v, info)| (*v, info.clone()))
        .collect();
    let complex = PlaneComplex::from_levels(vertices, levels)?;
    let circles = p
        .circles
        .iter()
        .filter(|(v, _)| complex.vertex(**v).is_some())
        .map(|(&v, c)| (v, *c))
        .collect();
    Ok(CirclePacking {
        complex,
        circles,
        hubs: BTreeMap::new(),
        anchors: p.anchors,
        residual: p.residual,
        tangency_error: p.tangency_error,
    })
}

// ---------------------------------------------------------------------------
// Radius iteration
// ---------------------------------------------------------------------------

/// Opposite radii pairs per vertex, over all faces except the pinned one.
fn corner_pairs(k: &PlaneComplex, pin: &[VertexId; 3]) -> BTreeMap<VertexId, Vec<(VertexId, VertexId)>> {
    let pinned_face = find_pinned_face(k, pin);
    let mut map: BTreeMap<VertexId, Vec<(VertexId, VertexId)>> = BTreeMap::new();
    for (fi, f) in k.faces().iter().enumerate() {
        if fi == pinned_face {
            continue;
        }
        let w = &f.walk;
        debug_assert_eq!(w.len(), 3, "augmented complex is a triangulation");
        for i in 0..3 {
            map.entry(w[i]).or_default().push((w[(i + 1) % 3], w[(i + 2) % 3]));
        }
    }
    map
}

fn find_pinned_face(k: &PlaneComplex, pin: &[VertexId; 3]) -> usize {
    let set: BTreeSet<VertexId> = pin.iter().copied().collect();
    k.faces()
        .iter()
        .position(|f| f.walk.iter().copied().collect::<BTreeSet<_>>() == set)
        .expect("pinned hub triangle exists")
}

/// Interior angle at a circle of radius `r` between tangent neighbors of radii
/// `ru`, `rw` in a tangent triple.
fn corner_angle(r: f64, ru: f64, rw: f64) -> f64 {
    let a = (ru / (r + ru)) * (rw / (r + rw));
    2.0 * a.sqrt().min(1.0).asin()
}

fn angle_sum(r: f64, pairs: &[(VertexId, VertexId)], radii: &BTreeMap<VertexId, f64>) -> f64 {
    pairs.iter().map(|&(u, w)| corner_angle(r, radii[&u], radii[&w])).sum()
}

/// Solves the boundary-value problem: the three pinned vertices keep radius 1,
/// every other vertex gets angle sum 2π.
///
/// Newton iteration in log-radius coordinates. The angle sums are the
/// gradient of a convex functional there, so the Jacobian is a symmetric
/// weighted graph Laplacian: for a tangent triple (v, u, w),
/// ∂α_v/∂(ln r_u) = √(r_u r_v r_w / S) / (r_v + r_u) with S the radius sum,
/// which is symmetric in v, u. Each Newton step solves the SPD system with
/// Jacobi-preconditioned conjugate gradients and is damped by halving until
/// the residual norm drops. Deterministic.
fn solve_radii(
    k: &PlaneComplex,
    pin: &[VertexId; 3],
    opts: &PackOptions,
) -> Result<BTreeMap<VertexId, f64>, PackError> {
    let pinned_face = find_pinned_face(k, pin);
    let pinned: BTreeSet<VertexId> = pin.iter().copied().collect();
    let interior: Vec<VertexId> = k.vertex_ids().filter(|v| !pinned.contains(v)).collect();
    let index: BTreeMap<VertexId, usize> = interior.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = interior.len();
    if n == 0 {
        return Ok(k.vertex_ids().map(|v| (v, 1.0)).collect());
    }
    // solver faces as index triples (interior index or usize::MAX for pinned)
    let faces: Vec<[(VertexId, Option<usize>); 3]> = k
        .faces()
        .iter()
        .enumerate()
        .filter(|&(fi, _)| fi != pinned_face)
        .map(|(_, f)| {
            [0, 1, 2].map(|i| {
                let v = f.walk[i];
                (v, index.get(&v).copied())
            })
        })
        .collect();
    let target = 2.0 * std::f64::consts::PI;
    let mut u = vec![0.0f64; n];
    let radius = |u: &[f64], slot: Option<usize>| -> f64 {
        match slot {
            Some(i) => u[i].exp(),
            None => 1.0,
        }
    };
    // angle-sum residual vector g = θ − 2π
    let residual_vec = |u: &[f64]| -> Vec<f64> {
        let mut g = vec![-target; n];
        for face in &faces {
            let r = [0, 1, 2].map(|i| radius(u, face[i].1));
            for i in 0..3 {
                if let Some(slot) = face[i].1 {
                    g[slot] += corner_angle(r[i], r[(i + 1) % 3], r[(i + 2) % 3]);
                }
            }
        }
        g
    };
    let norm_inf = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut g = residual_vec(&u);
    let mut newton_steps = 0usize;
    loop {
        if norm_inf(&g) < opts.tolerance {
            break;
        }
        if newton_steps > 200 {
            return Err(PackError::NonConvergent {
                sweeps: newton_steps,
                residual: norm_inf(&g),
                tolerance: opts.tolerance,
            });
        }
        newton_steps += 1;
        // assemble the Laplacian L with L δ = g solving the Newton step
        let mut diag = vec![0.0f64; n];
        let mut off: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for face in &faces {
            let r = [0, 1, 2].map(|i| radius(&u, face[i].1));
            let s = r[0] + r[1] + r[2];
            let t = (r[0] * r[1] * r[2] / s).sqrt();
            for i in 0..3 {
                let j = (i + 1) % 3;
                let w = t / (r[i] + r[j]);
                match (face[i].1, face[j].1) {
                    (Some(a), Some(b)) => {
                        diag[a] += w;
                        diag[b] += w;
                        let key = if a < b { (a, b) } else { (b, a) };
                        *off.entry(key).or_insert(0.0) -= w;
                    }
                    (Some(a), None) => diag[a] += w,
                    (None, Some(b)) => diag[b] += w,
                    (None, None) => {}
                }
            }
        }
        // CSR assembly
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(a, b), &w) in &off {
            rows[a].push((b, w));
            rows[b].push((a, w));
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut acc = diag[i] * x[i];
                for &(j, w) in &rows[i] {
                    acc += w * x[j];
                }
                out[i] = acc;
            }
        };
        // conjugate gradients with Jacobi preconditioner
        let mut delta = vec![0.0f64; n];
        {
            let mut r_vec = g.clone();
            let mut z: Vec<f64> = r_vec.iter().zip(&diag).map(|(r, d)| r / d.max(1e-300)).collect();
            let mut p = z.clone();
            let mut rz: f64 = r_vec.iter().zip(&z).map(|(a, b)| a * b).sum();
            let g_norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut ap = vec![0.0f64; n];
            for _ in 0..(20 * n + 100) {
                let r_norm: f64 = r_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r_norm <= 1e-12 * g_norm.max(1e-300) {
                    break;
                }
                apply(&p, &mut ap);
                let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
                if pap <= 0.0 {
                    break;
                }
                let alpha = rz / pap;
                for i in 0..n {
                    delta[i] += alpha * p[i];
                    r_vec[i] -= alpha * ap[i];
                }
                for i in 0..n {
                    z[i] = r_vec[i] / diag[i].max(1e-300);
                }
                let rz_new: f64 = r_vec.iter().zip(&z).map(|(a, b)| a * b).sum();
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
        }
        // damped update: halve the step until the residual norm drops
        let g_norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut step = 1.0f64;
        let cap = norm_inf(&delta);
        if cap > 4.0 {
            step = 4.0 / cap;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(ui, di)| ui + step * di).collect();
            let trial_g = residual_vec(&trial);
            let trial_norm: f64 = trial_g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if trial_norm < g_norm || trial_norm < opts.tolerance {
                u = trial;
                g = trial_g;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(PackError::NonConvergent {
                sweeps: newton_steps,
                residual: norm_inf(&g),
                tolerance: opts.tolerance,
            });
        }
    }
    let mut radii: BTreeMap<VertexId, f64> = pin.iter().map(|&v| (v, 1.0)).collect();
    for (i, &v) in interior.iter().enumerate() {
        radii.insert(v, u[i].exp());
    }
    Ok(radii)
}

fn max_angle_residual(k: &PlaneComplex, pin: &[VertexId; 3], radii: &BTreeMap<VertexId, f64>) -> f64 {
    let pairs = corner_pairs(k, pin);
    let pinned: BTreeSet<VertexId> = pin.iter().copied().collect();
    let target = 2.0 * std::f64::consts::PI;
    k.vertex_ids()
        .filter(|v| !pinned.contains(v))
        .map(|v| (angle_sum(radii[&v], &pairs[&v], radii) - target).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

/// Places circle centers by walking face adjacencies from the face across the
/// pinned hub triangle's first edge. Every face except the pinned one appears
/// in the plane in its stored orientation. Also returns the two seed vertices
/// whose positions fix the layout gauge.
fn layout(
    k: &PlaneComplex,
    pin: &[VertexId; 3],
    radii: &BTreeMap<VertexId, f64>,
) -> Result<(BTreeMap<VertexId, Complex64>, [VertexId; 2]), PackError> {
    let pinned_face = find_pinned_face(k, pin);
    let owners = k.dart_owners();
    let pinned_darts = k.faces()[pinned_face].darts();
    let (du, dv) = pinned_darts[0];
    let &(seed, _) = owners.get(&(dv, du)).expect("twin dart owner");
    let mut positions: BTreeMap<VertexId, Complex64> = BTreeMap::new();
    let geom = |f: &Face| -> Vec<VertexId> {
        if f.mirrored {
            f.walk.iter().rev().copied().collect()
        } else {
            f.walk.clone()
        }
    };
    let frozen = {
        let w = geom(&k.faces()[seed]);
        let (a, b, c) = (w[0], w[1], w[2]);
        positions.insert(a, Complex64::new(0.0, 0.0));
        positions.insert(b, Complex64::new(radii[&a] + radii[&b], 0.0));
        let z = third_position(positions[&a], positions[&b], radii[&a], radii[&b], radii[&c]);
        positions.insert(c, z);
        [a, b]
    };
    let mut placed = vec![false; k.faces().len()];
    placed[pinned_face] = true;
    placed[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(fi) = queue.pop_front() {
        let w = geom(&k.faces()[fi]);
        for i in 0..3 {
            let (x, y) = (w[i], w[(i + 1) % 3]);
            if let Some(&(g, _)) = owners.get(&(y, x)) {
                if placed[g] {
                    continue;
                }
                placed[g] = true;
                let gw = geom(&k.faces()[g]);
                let missing: Vec<usize> = (0..3).filter(|&i| !positions.contains_key(&gw[i])).collect();
                if missing.len() == 1 {
                    let mi = missing[0];
                    let (a, b, c) = (gw[(mi + 1) % 3], gw[(mi + 2) % 3], gw[mi]);
                    let z = third_position(positions[&a], positions[&b], radii[&a], radii[&b], radii[&c]);
                    positions.insert(c, z);
                }
                queue.push_back(g);
            }
        }
    }
    if positions.len() != k.vertex_count() {
        return Err(PackError::NonConvergent { sweeps: 0, residual: f64::NAN, tolerance: 0.0 });
    }
    Ok((positions, frozen))
}

/// Third corner of a tangent triple laid out counterclockwise.
fn third_position(za: Complex64, zb: Complex64, ra: f64, rb: f64, rc: f64) -> Complex64 {
    let d = (ra + rb).max((zb - za).norm());
    let l1 = ra + rc;
    let l2 = rb + rc;
    let x = (d * d + l1 * l1 - l2 * l2) / (2.0 * d);
    let y = (l1 * l1 - x * x).max(0.0).sqrt();
    let dir = (zb - za) / (zb - za).norm();
    za + dir * Complex64::new(x, y)
}

/// Tangency relaxation of the centers with the radii fixed; removes the drift
/// accumulated along the face walk.
/// Local weighted relaxation of the centers with the radii held fixed.
///
/// Block coordinate descent on the weighted tangency objective
/// Σ ((|z_u − z_v| − (r_u + r_v)) / (r_u + r_v))²: each vertex moves to the
/// weighted least-squares position implied by its neighbors, small circles
/// weighted up so every scale reaches the same relative accuracy. The two
/// seed vertices stay frozen to pin the gauge.
fn polish_positions(
    k: &PlaneComplex,
    radii: &BTreeMap<VertexId, f64>,
    frozen: [VertexId; 2],
    mut positions: BTreeMap<VertexId, Complex64>,
) -> BTreeMap<VertexId, Complex64> {
    let free: Vec<VertexId> = k.vertex_ids().filter(|v| !frozen.contains(v)).collect();
    let mut prev: Option<(BTreeMap<VertexId, Complex64>, f64)> = None;
    let mut cooldown = 0u32;
    for _ in 0..2000 {
        let mut movement = 0.0f64;
        for &v in &free {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut weight = 0.0f64;
            for &n in k.neighbors(v) {
                let zn = positions[&n];
                let delta = positions[&v] - zn;
                let dist = delta.norm();
                if dist == 0.0 {
                    continue;
                }
                let target = radii[&v] + radii[&n];
                let w = 1.0 / (target * target);
                acc += (zn + delta * (target / dist)) * w;
                weight += w;
            }
            if weight > 0.0 {
                let target = acc / weight;
                movement = movement.max((target - positions[&v]).norm() / radii[&v]);
                positions.insert(v, target);
            }
        }
        if movement < 1e-14 {
            break;
        }
        // extrapolate through the slowest-decaying error mode
        if let Some((prev_pos, prev_move)) = &prev {
            let lambda = movement / prev_move;
            if cooldown == 0 && lambda > 0.5 && lambda < 0.9999 {
                let factor = (lambda / (1.0 - lambda)).min(64.0);
                for &v in &free {
                    let stepped = positions[&v] + (positions[&v] - prev_pos[&v]) * factor;
                    positions.insert(v, stepped);
                }
                cooldown = 3;
            }
        }
        cooldown = cooldown.saturating_sub(1);
        prev = Some((positions.clone(), movement));
    }
    positions
}

fn max_tangency_error(
    k: &PlaneComplex,
    radii: &BTreeMap<VertexId, f64>,
    positions: &BTreeMap<VertexId, Complex64>,
) -> f64 {
    let mut worst = 0.0f64;
    for (u, v) in k.edges() {
        let target = radii[&u] + radii[&v];
        let actual = (positions[&u] - positions[&v]).norm();
        worst = worst.max((actual - target).abs() / target);
    }
    worst
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Maximal absolute Descartes residual over every mutually tangent quadruple
/// in the packing: each triangle of circles together with a common tangent
/// neighbor. Returns the worst residual and the number of quadruples checked.
pub fn descartes_sweep(p: &CirclePacking) -> (f64, usize) {
    // augmented adjacency: complex edges plus hub spokes
    let mut adjacency: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    let mut curvature: BTreeMap<VertexId, f64> = BTreeMap::new();
    for (&v, c) in &p.circles {
        curvature.insert(v, c.curvature);
        adjacency.entry(v).or_default();
    }
    for (&h, (c, fi)) in &p.hubs {
        curvature.insert(h, c.curvature);
        adjacency.entry(h).or_default();
        for &v in &p.complex.faces()[*fi].walk {
            adjacency.get_mut(&h).unwrap().insert(v);
            adjacency.entry(v).or_default().insert(h);
        }
    }
    for (u, v) in p.complex.edges() {
        adjacency.get_mut(&u).unwrap().insert(v);
        adjacency.get_mut(&v).unwrap().insert(u);
    }
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut seen: BTreeSet<[VertexId; 4]> = BTreeSet::new();
    let ids: Vec<VertexId> = adjacency.keys().copied().collect();
    for &a in &ids {
        let na = &adjacency[&a];
        for &b in na.iter().filter(|&&b| b > a) {
            for &c in na.iter().filter(|&&c| c > b) {
                if !adjacency[&b].contains(&c) {
                    continue;
                }
                for &d in na.iter().filter(|&&d| d > c) {
                    if adjacency[&b].contains(&d) && adjacency[&c].contains(&d) {
                        let mut key = [a, b, c, d];
                        key.sort();
                        if seen.insert(key) {
                            let r = geometry::descartes_residual(
                                curvature[&a],
                                curvature[&b],
                                curvature[&c],
                                curvature[&d],
                            );
                            worst = worst.max(r.abs());
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    (worst, count)
}

/// Largest deviation of the inversive product from −1 over the edges of the
/// packed complex (a frame-independent tangency audit).
pub fn inversive_tangency_error(p: &CirclePacking) -> f64 {
    let mut worst = 0.0f64;
    for (u, v) in p.complex.edges() {
        let prod = geometry::inversive_product(&p.circles[&u], &p.circles[&v]);
        worst = worst.max((prod + 1.0).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::subdivision::{iterate, iterate_sphere, Chooser};

    fn pack_fixture(c: &PlaneComplex) -> CirclePacking {
        pack(c, &PackOptions::default()).expect("packs")
    }

    #[test]
    fn augment_two_face_square_is_octahedral() {
        let c = PlaneComplex::build_from_faces(&[vec![0, 1, 2, 3], vec![3, 2, 1, 0]], 1).unwrap();
        let k = augment(&c).unwrap();
        assert_eq!(k.vertex_count(), 6);
        assert_eq!(k.face_count(), 8);
        assert_eq!(k.euler(), 2);
    }

    #[test]
    fn augment_triangulation_is_identity() {
        let rule = fixtures::apollonian();
        let c = iterate(&rule, "T", 1, &Chooser::default()).unwrap();
        let k = augment(&c).unwrap();
        assert_eq!(k.vertex_count(), c.vertex_count());
        assert_eq!(k.face_count(), c.face_count());
    }

    #[test]
    fn augment_rejects_non_jordan_faces() {
        let rule = fixtures::pinched();
        let c = rule.template_complex(0);
        assert!(matches!(augment(&c), Err(PackError::NonJordanFace(_))));
    }

    #[test]
    fn double_triangle_gives_descartes_quadruple() {
        let rule = fixtures::apollonian();
        let shell = crate::subdivision::sphere_complex(&rule, rule.sphere.as_ref().unwrap()).unwrap();
        let p = pack_fixture(&shell);
        // four circles: three marked plus the external hub
        assert_eq!(p.circles.len(), 3);
        assert_eq!(p.hubs.len(), 1);
        let mut ks: Vec<f64> = p.circles.values().map(|c| c.curvature).collect();
        ks.extend(p.hubs.values().map(|(c, _)| c.curvature));
        ks.sort_by(f64::total_cmp);
        let expect = [-1.0, 2.0, 2.0, 3.0];
        for (k, e) in ks.iter().zip(expect) {
            assert!((k - e).abs() < 1e-8, "curvatures {ks:?}");
        }
        let (worst, count) = descartes_sweep(&p);
        assert!(count >= 1);
        assert!(worst < 1e-9, "descartes residual {worst}");
    }

    #[test]
    fn inner_square_level1_packs_cleanly() {
        let rule = fixtures::inner_square();
        let c = iterate(&rule, "Q", 1, &Chooser::default()).unwrap();
        let p = pack_fixture(&c);
        assert_eq!(p.circles.len(), 8);
        assert!(p.residual < 1e-10);
        assert!(p.tangency_error < 1e-8, "tangency error {}", p.tangency_error);
        assert!(inversive_tangency_error(&p) < 1e-8);
    }

    #[test]
    fn pack_rejects_multi_edge() {
        let rule = fixtures::multi_edge();
        let c = iterate(&rule, "T", 1, &Chooser::default()).unwrap();
        assert!(matches!(pack(&c, &PackOptions::default()), Err(PackError::NotSimple(_, _))));
    }

    #[test]
    fn normalization_is_idempotent() {
        let rule = fixtures::inner_square();
        let c = iterate(&rule, "Q", 1, &Chooser::default()).unwrap();
        let p = pack_fixture(&c);
        let anchors = p.anchors;
        let q = mobius_normalize(&p, &anchors).unwrap();
        let r = mobius_normalize(&q, &anchors).unwrap();
        for (v, c1) in &q.circles {
            let c2 = &r.circles[v];
            assert!(crate::geometry::spherical_hausdorff(c1, c2) < 1e-10);
        }
    }

    #[test]
    fn normalization_cancels_mobius_translation() {
        let rule = fixtures::inner_square();
        let c = iterate(&rule, "Q", 1, &Chooser::default()).unwrap();
        let p = pack_fixture(&c);
        let m = MobiusMap::new(
            Complex64::new(1.1, 0.3),
            Complex64::new(0.2, -0.1),
            Complex64::new(0.05, 0.02),
            Complex64::new(0.9, 0.0),
        )
        .unwrap();
        let moved = p.transformed(&m);
        let anchors = p.anchors;
        let a = mobius_normalize(&p, &anchors).unwrap();
        let b = mobius_normalize(&moved, &anchors).unwrap();
        for (v, c1) in &a.circles {
            let c2 = &b.circles[v];
            assert!(
                crate::geometry::spherical_hausdorff(c1, c2) < 1e-10,
                "vertex {v} moved after normalization"
            );
        }
    }

    #[test]
    fn extraction_drops_hubs_and_deep_levels() {
        let rule = fixtures::inner_square();
        let c = iterate(&rule, "Q", 3, &Chooser::default()).unwrap();
        let p = pack_fixture(&c);
        let sub = extract_subpacking(&p, 0).unwrap();
        assert_eq!(sub.circles.len(), 4);
        assert!(sub.hubs.is_empty());
        assert!(matches!(extract_subpacking(&p, 9), Err(PackError::LevelOutOfRange(9, 3))));
        let full = extract_subpacking(&p, 3).unwrap();
        assert_eq!(full.circles.len(), p.circles.len());
    }

    #[test]
    fn nested_extraction_matches_direct_packing_for_triangulations() {
        // all-triangle rule: the sub-packing of a deeper packing equals the
        // direct packing of the sub-complex after normalization
        let rule = fixtures::apollonian();
        for (n, j) in [(2u32, 1u32), (3, 1), (3, 2)] {
            let deep = pack_fixture(&iterate_sphere(&rule, n, &Chooser::default()).unwrap());
            let shallow = pack_fixture(&iterate_sphere(&rule, j, &Chooser::default()).unwrap());
            let sub = extract_subpacking(&deep, j).unwrap();
            let anchors = shallow.anchors;
            let a = mobius_normalize(&sub, &anchors).unwrap();
            let b = mobius_normalize(&shallow, &anchors).unwrap();
            for (v, c1) in &b.circles {
                let c2 = &a.circles[v];
                let d = crate::geometry::spherical_hausdorff(c1, c2);
                assert!(d < 1e-8, "level {j} of {n}: vertex {v} differs by {d}");
            }
        }
    }

    #[test]
    fn apollonian_disk_level1_is_k4() {
        let rule = fixtures::apollonian();
        let c = iterate(&rule, "T", 1, &Chooser::default()).unwrap();
        let p = pack_fixture(&c);
        assert_eq!(p.circles.len(), 4);
        // quadruples: the K4 itself and the boundary triangle with the hub
        let (worst, count) = descartes_sweep(&p);
        assert_eq!(count, 2);
        assert!(worst < 1e-9);
    }
}

