//! Finite plane graphs with an explicit face structure.
//!
//! A complex is stored as a list of faces per subdivision level, where each
//! face carries its marked boundary walk, the polygon type that produced it,
//! and a pointer to the face it subdivided. The current level is the last
//! entry; earlier levels are kept so that sub-complexes at any depth can be
//! recovered without replaying history.
//!
//! Validity means the face cycles glue into a sphere: every undirected edge is
//! traversed exactly twice, in opposite directions, the Euler count is 2, the
//! graph is connected, and the induced rotation system has one orbit per
//! vertex. Disk-shaped complexes carry their external face explicitly.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("face cycles do not close up to a sphere (V - E + F = {0})")]
    NonSphere(i64),
    #[error("edge ({0}, {1}) is not traversed exactly once in each direction")]
    NonManifold(VertexId, VertexId),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("external face index {0} out of range")]
    BadExternal(usize),
    #[error("face {0} has fewer than 2 boundary vertices")]
    DegenerateFace(usize),
}

/// Stable vertex identifier. Identifiers persist across subdivision: vertices
/// of level k keep their ids in every deeper level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u64);

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct Vertex {
    pub label: Option<String>,
    /// Subdivision level at which the vertex first appeared.
    pub level: u32,
}

/// One face of the complex.
///
/// `walk` lists the boundary vertices in marked order: when the face carries a
/// polygon type, position `p` of the walk is boundary position `p` of that
/// type. `mirrored` records whether the geometric orientation of the face is
/// the reverse of the walk; the external face of a disk complex stores the
/// polygon boundary walk with `mirrored = true`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Face {
    pub walk: Vec<VertexId>,
    pub mirrored: bool,
    pub type_tag: Option<String>,
    pub level: u32,
    /// Index of the face of the previous level this face subdivides.
    pub parent: Option<usize>,
    /// Index of the template face that produced this face.
    pub template_face: Option<usize>,
}

impl Face {
    pub fn new(walk: Vec<VertexId>) -> Face {
        Face { walk, mirrored: false, type_tag: None, level: 0, parent: None, template_face: None }
    }

    /// Directed boundary edges in geometric orientation.
    pub fn darts(&self) -> Vec<(VertexId, VertexId)> {
        let n = self.walk.len();
        (0..n)
            .map(|i| {
                if self.mirrored {
                    (self.walk[(i + 1) % n], self.walk[i])
                } else {
                    (self.walk[i], self.walk[(i + 1) % n])
                }
            })
            .collect()
    }

    /// Undirected boundary edges in walk order.
    pub fn walk_edges(&self) -> Vec<(VertexId, VertexId)> {
        let n = self.walk.len();
        (0..n).map(|i| (self.walk[i], self.walk[(i + 1) % n])).collect()
    }

    pub fn is_jordan(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.walk.iter().all(|v| seen.insert(*v))
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LevelFaces {
    pub faces: Vec<Face>,
    pub external: usize,
}

/// A finite plane graph together with its faces, one designated external
/// face, and the faces of every earlier subdivision level.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct PlaneComplex {
    vertices: BTreeMap<VertexId, Vertex>,
    levels: Vec<LevelFaces>,
    edge_multiplicity: BTreeMap<(VertexId, VertexId), usize>,
    adjacency: BTreeMap<VertexId, Vec<VertexId>>,
    /// Cyclic neighbor order around each vertex, from the rotation system of
    /// the validated embedding. Only meaningful for simple complexes.
    rotations: BTreeMap<VertexId, Vec<VertexId>>,
}

fn canon(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u <= v { (u, v) } else { (v, u) }
}

impl PlaneComplex {
    /// Builds a sphere complex from explicit face cycles.
    ///
    /// Each cycle is the boundary walk of one face; jointly they must traverse
    /// every undirected edge exactly once in each direction. `external` marks
    /// the designated external face.
    pub fn build_from_faces(cycles: &[Vec<u64>], external: usize) -> Result<PlaneComplex, ComplexError> {
        let faces: Vec<Face> = cycles.iter().map(|c| Face::new(c.iter().map(|&v| VertexId(v)).collect())).collect();
        let mut vertices = BTreeMap::new();
        for f in &faces {
            for &v in &f.walk {
                vertices.entry(v).or_insert_with(Vertex::default);
            }
        }
        PlaneComplex::from_level(vertices, LevelFaces { faces, external })
    }

    /// Builds a complex from a single validated level.
    pub(crate) fn from_level(vertices: BTreeMap<VertexId, Vertex>, level: LevelFaces) -> Result<PlaneComplex, ComplexError> {
        PlaneComplex::from_levels(vertices, vec![level])
    }

    /// Builds a complex from a full level history; only the last level is
    /// validated (earlier ones were the current level of a previous build).
    pub(crate) fn from_levels(vertices: BTreeMap<VertexId, Vertex>, levels: Vec<LevelFaces>) -> Result<PlaneComplex, ComplexError> {
        let last = levels.last().expect("at least one level");
        if last.external >= last.faces.len() {
            return Err(ComplexError::BadExternal(last.external));
        }
        for (i, f) in last.faces.iter().enumerate() {
            if f.walk.len() < 2 {
                return Err(ComplexError::DegenerateFace(i));
            }
        }
        let (edge_multiplicity, adjacency, rotations) = validate_sphere(&last.faces, &vertices)?;
        Ok(PlaneComplex { vertices, levels, edge_multiplicity, adjacency, rotations })
    }

    pub fn level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn levels(&self) -> &[LevelFaces] {
        &self.levels
    }

    pub fn faces(&self) -> &[Face] {
        &self.levels.last().unwrap().faces
    }

    pub fn faces_at(&self, level: u32) -> Option<&[Face]> {
        self.levels.get(level as usize).map(|l| l.faces.as_slice())
    }

    pub fn external_index(&self) -> usize {
        self.levels.last().unwrap().external
    }

    pub fn external_at(&self, level: u32) -> Option<usize> {
        self.levels.get(level as usize).map(|l| l.external)
    }

    pub fn external_face(&self) -> &Face {
        &self.faces()[self.external_index()]
    }

    pub fn vertex(&self, v: VertexId) -> Option<&Vertex> {
        self.vertices.get(&v)
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn vertex_map(&self) -> &BTreeMap<VertexId, Vertex> {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_multiplicity.values().sum()
    }

    pub fn face_count(&self) -> usize {
        self.faces().len()
    }

    pub fn euler(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn max_vertex_id(&self) -> u64 {
        self.vertices.keys().last().map(|v| v.0).unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_multiplicity.contains_key(&canon(u, v))
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        self.adjacency.get(&v).map(|n| n.as_slice()).unwrap_or(&[])
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edge_multiplicity.keys().copied()
    }

    /// True iff the graph has no self-loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        self.simple_violation().is_none()
    }

    /// The first offending loop or doubled edge, if any.
    pub fn simple_violation(&self) -> Option<(VertexId, VertexId)> {
        self.edge_multiplicity
            .iter()
            .find(|((u, v), &m)| u == v || m > 1)
            .map(|((u, v), _)| (*u, *v))
    }

    /// True iff the boundary walk of face `f` repeats no vertex.
    pub fn face_is_jordan(&self, f: usize) -> bool {
        self.faces()[f].is_jordan()
    }

    /// True iff every edge of the graph joining two cycle vertices lies on the
    /// cycle.
    pub fn induced_check(&self, cycle: &[VertexId]) -> bool {
        let on_cycle: BTreeSet<VertexId> = cycle.iter().copied().collect();
        let mut cycle_edges = BTreeSet::new();
        for i in 0..cycle.len() {
            cycle_edges.insert(canon(cycle[i], cycle[(i + 1) % cycle.len()]));
        }
        for &u in cycle {
            for &n in self.neighbors(u) {
                if on_cycle.contains(&n) && !cycle_edges.contains(&canon(u, n)) {
                    return false;
                }
            }
        }
        true
    }

    /// Breadth-first reachability in the graph minus a set of removed vertices.
    pub fn component_of(&self, start: VertexId, removed: &BTreeSet<VertexId>) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::new();
        if removed.contains(&start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(u) = queue.pop_front() {
            for &n in self.neighbors(u) {
                if !removed.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Decides whether the two arcs of `boundary − {v, w}` lie in one component
    /// of the graph minus `{v, w}`.
    pub fn arcs_connected_without(&self, boundary: &[VertexId], v: VertexId, w: VertexId) -> bool {
        let (arc1, arc2) = split_arcs(boundary, v, w);
        if arc1.is_empty() || arc2.is_empty() {
            // adjacent pair along the boundary: nothing to separate
            return true;
        }
        let removed = BTreeSet::from([v, w]);
        let comp = self.component_of(arc1[0], &removed);
        comp.contains(&arc2[0])
    }

    /// Shortest path from `v` to `w` through a restricted vertex set, with the
    /// breadth-first tie broken toward smaller vertex ids. Endpoints are always
    /// allowed.
    pub fn restricted_path(&self, v: VertexId, w: VertexId, allowed: &BTreeSet<VertexId>) -> Option<Vec<VertexId>> {
        let mut pred: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        let mut dist: BTreeMap<VertexId, usize> = BTreeMap::new();
        dist.insert(v, 0);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &n in self.neighbors(u) {
                if n != w && !allowed.contains(&n) {
                    continue;
                }
                match dist.get(&n) {
                    None => {
                        dist.insert(n, du + 1);
                        pred.insert(n, u);
                        queue.push_back(n);
                    }
                    Some(&dn) if dn == du + 1 && pred[&n] > u => {
                        pred.insert(n, u);
                    }
                    _ => {}
                }
            }
        }
        if !dist.contains_key(&w) {
            return None;
        }
        let mut path = vec![w];
        let mut cur = w;
        while cur != v {
            cur = pred[&cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Map from each geometric dart to the face and walk position carrying it.
    pub fn dart_owners(&self) -> BTreeMap<(VertexId, VertexId), (usize, usize)> {
        let mut map = BTreeMap::new();
        for (fi, f) in self.faces().iter().enumerate() {
            for (pos, d) in f.darts().into_iter().enumerate() {
                map.insert(d, (fi, pos));
            }
        }
        map
    }

    /// Cyclic neighbor order around `v` in the embedding.
    pub fn rotation(&self, v: VertexId) -> &[VertexId] {
        self.rotations.get(&v).map(|r| r.as_slice()).unwrap_or(&[])
    }

    /// Faces of the sub-embedding spanned by a set of undirected edges.
    ///
    /// Every edge must belong to the complex, and the complex must be simple.
    /// Each returned walk is one face of the subgraph, traced so that the
    /// walks of the full graph's internal faces come out in their geometric
    /// dart direction.
    pub fn subgraph_faces(&self, edges: &BTreeSet<(VertexId, VertexId)>) -> Vec<Vec<VertexId>> {
        assert!(self.is_simple(), "subgraph face tracing requires a simple complex");
        let mut restricted: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for &(u, v) in edges {
            debug_assert!(self.has_edge(u, v), "edge ({u}, {v}) not in complex");
            restricted.entry(u).or_default();
            restricted.entry(v).or_default();
        }
        for (v, out) in restricted.iter_mut() {
            for &n in self.rotation(*v) {
                if edges.contains(&canon(*v, n)) {
                    out.push(n);
                }
            }
        }
        // trace orbits of darts: the dart after (u → v) leaves v toward the
        // neighbor preceding u in v's restricted rotation
        let mut seen: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        let mut walks = Vec::new();
        let mut starts: Vec<(VertexId, VertexId)> = Vec::new();
        for (&v, outs) in &restricted {
            for &w in outs {
                starts.push((v, w));
            }
        }
        for start in starts {
            if seen.contains(&start) {
                continue;
            }
            let mut walk = Vec::new();
            let mut dart = start;
            loop {
                seen.insert(dart);
                walk.push(dart.0);
                let (u, v) = dart;
                let rot = &restricted[&v];
                let pos = rot.iter().position(|&n| n == u).expect("twin in rotation");
                let w = rot[(pos + rot.len() - 1) % rot.len()];
                dart = (v, w);
                if dart == start {
                    break;
                }
            }
            walks.push(walk);
        }
        walks
    }

    /// Faces incident to each vertex of the current level.
    pub fn faces_at_vertices(&self) -> BTreeMap<VertexId, Vec<usize>> {
        let mut map: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces().iter().enumerate() {
            for &v in &f.walk {
                map.entry(v).or_default().push(fi);
            }
        }
        map
    }
}

/// Splits a boundary cycle at `v` and `w` into its two open arcs.
pub fn split_arcs(boundary: &[VertexId], v: VertexId, w: VertexId) -> (Vec<VertexId>, Vec<VertexId>) {
    let iv = boundary.iter().position(|&x| x == v).expect("v on boundary");
    let iw = boundary.iter().position(|&x| x == w).expect("w on boundary");
    let n = boundary.len();
    let walk_from = |from: usize, to: usize| {
        let mut arc = Vec::new();
        let mut i = (from + 1) % n;
        while i != to {
            arc.push(boundary[i]);
            i = (i + 1) % n;
        }
        arc
    };
    (walk_from(iv, iw), walk_from(iw, iv))
}

type SphereData = (
    BTreeMap<(VertexId, VertexId), usize>,
    BTreeMap<VertexId, Vec<VertexId>>,
    BTreeMap<VertexId, Vec<VertexId>>,
);

/// Checks the sphere conditions for a face list and returns the derived edge
/// multiplicities, sorted adjacency lists, and per-vertex rotations.
fn validate_sphere(faces: &[Face], vertices: &BTreeMap<VertexId, Vertex>) -> Result<SphereData, ComplexError> {
    // collect darts: (origin, target, face, position)
    let mut darts: Vec<(VertexId, VertexId)> = Vec::new();
    let mut face_of_dart: Vec<(usize, usize)> = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        for (pos, d) in f.darts().into_iter().enumerate() {
            darts.push(d);
            face_of_dart.push((fi, pos));
        }
    }
    // group by unordered pair
    let mut groups: BTreeMap<(VertexId, VertexId), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, &(u, v)) in darts.iter().enumerate() {
        let key = canon(u, v);
        let entry = groups.entry(key).or_default();
        if (u, v) == key {
            entry.0.push(i);
        } else {
            entry.1.push(i);
        }
    }
    let mut edge_multiplicity = BTreeMap::new();
    for (&(u, v), (fwd, bwd)) in &groups {
        if u == v {
            // self-loop darts pair among themselves
            if fwd.len() % 2 != 0 {
                return Err(ComplexError::NonManifold(u, v));
            }
            edge_multiplicity.insert((u, v), fwd.len() / 2);
        } else {
            if fwd.len() != bwd.len() || fwd.is_empty() {
                return Err(ComplexError::NonManifold(u, v));
            }
            edge_multiplicity.insert((u, v), fwd.len());
        }
    }
    let edge_count: usize = edge_multiplicity.values().sum();
    let euler = vertices.len() as i64 - edge_count as i64 + faces.len() as i64;
    if euler != 2 {
        return Err(ComplexError::NonSphere(euler));
    }
    // adjacency and connectivity
    let mut adjacency: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    for v in vertices.keys() {
        adjacency.entry(*v).or_default();
    }
    for &(u, v) in edge_multiplicity.keys() {
        adjacency.get_mut(&u).ok_or(ComplexError::Disconnected)?.insert(v);
        adjacency.get_mut(&v).ok_or(ComplexError::Disconnected)?.insert(u);
    }
    let adjacency: BTreeMap<VertexId, Vec<VertexId>> =
        adjacency.into_iter().map(|(k, s)| (k, s.into_iter().collect())).collect();
    if let Some(&start) = vertices.keys().next() {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &n in &adjacency[&u] {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        if seen.len() != vertices.len() {
            return Err(ComplexError::Disconnected);
        }
    }
    // rotation-system check: find a twin pairing whose vertex orbits are the
    // vertices themselves. For simple inputs the pairing is forced; parallel
    // edges admit finitely many pairings and we search them in lexicographic
    // order.
    let ambiguous: Vec<(VertexId, VertexId)> = groups
        .iter()
        .filter(|(&(u, v), (fwd, _))| if u == v { fwd.len() > 2 } else { fwd.len() > 1 })
        .map(|(k, _)| *k)
        .collect();
    let mut combos = 1usize;
    for key in &ambiguous {
        let m = if key.0 == key.1 { groups[key].0.len() / 2 } else { groups[key].0.len() };
        combos = combos.saturating_mul(factorial(m));
        if combos > 5040 {
            return Err(ComplexError::NonManifold(key.0, key.1));
        }
    }
    let mut assignment: Vec<usize> = vec![0; ambiguous.len()];
    loop {
        let mut twin = vec![usize::MAX; darts.len()];
        for (&key, (fwd, bwd)) in &groups {
            if key.0 == key.1 {
                // pair loop darts consecutively
                for pair in fwd.chunks(2) {
                    twin[pair[0]] = pair[1];
                    twin[pair[1]] = pair[0];
                }
                continue;
            }
            let perm_idx = ambiguous.iter().position(|k| *k == key);
            let perm = match perm_idx {
                Some(ai) => nth_permutation(bwd.len(), assignment[ai]),
                None => (0..bwd.len()).collect(),
            };
            for (i, &f) in fwd.iter().enumerate() {
                let b = bwd[perm[i]];
                twin[f] = b;
                twin[b] = f;
            }
        }
        if let Some(rotations) = extract_rotations(&darts, &face_of_dart, faces, &twin, vertices.len()) {
            return Ok((edge_multiplicity, adjacency, rotations));
        }
        // advance the mixed-radix assignment
        let mut i = 0;
        loop {
            if i == ambiguous.len() {
                return Err(ComplexError::NonSphere(euler));
            }
            let key = ambiguous[i];
            let m = if key.0 == key.1 { groups[&key].0.len() / 2 } else { groups[&key].0.len() };
            assignment[i] += 1;
            if assignment[i] < factorial(m) {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn nth_permutation(n: usize, mut idx: usize) -> Vec<usize> {
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i);
        let pos = idx / f;
        idx %= f;
        out.push(items.remove(pos));
    }
    out
}

/// Walks the vertex rotations induced by a twin pairing. Returns the cyclic
/// neighbor order per vertex if every vertex's darts form a single orbit,
/// which is exactly the condition for the pairing to embed in the sphere
/// given Euler count 2.
fn extract_rotations(
    darts: &[(VertexId, VertexId)],
    face_of_dart: &[(usize, usize)],
    faces: &[Face],
    twin: &[usize],
    vertex_count: usize,
) -> Option<BTreeMap<VertexId, Vec<VertexId>>> {
    // index darts by (face, position) to walk prev-in-face
    let mut by_face_pos: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, &(f, p)) in face_of_dart.iter().enumerate() {
        by_face_pos.insert((f, p), i);
    }
    // geometric predecessor: mirrored faces traverse their walk backwards
    let prev_in_face = |d: usize| -> usize {
        let (f, p) = face_of_dart[d];
        let n = faces[f].walk.len();
        if faces[f].mirrored {
            by_face_pos[&(f, (p + 1) % n)]
        } else {
            by_face_pos[&(f, (p + n - 1) % n)]
        }
    };
    let mut seen = vec![false; darts.len()];
    let mut rotations = BTreeMap::new();
    for start in 0..darts.len() {
        if seen[start] {
            continue;
        }
        let origin = darts[start].0;
        let mut order = Vec::new();
        let mut d = start;
        loop {
            seen[d] = true;
            if darts[d].0 != origin {
                return None;
            }
            order.push(darts[d].1);
            d = twin[prev_in_face(d)];
            if d == start {
                break;
            }
            if seen[d] {
                return None;
            }
        }
        if rotations.insert(origin, order).is_some() {
            // vertex split across several orbits
            return None;
        }
    }
    (rotations.len() == vertex_count).then_some(rotations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_face_square() -> PlaneComplex {
        PlaneComplex::build_from_faces(&[vec![1, 2, 3, 4], vec![4, 3, 2, 1]], 1).unwrap()
    }

    /// Outer square 1..4, inner square 5..8, spokes a_i–v_i and a_i–v_{i+1}.
    fn inner_square_level1() -> PlaneComplex {
        let (v1, v2, v3, v4) = (1, 2, 3, 4);
        let (a1, a2, a3, a4) = (5, 6, 7, 8);
        let faces = vec![
            vec![v1, v2, a1],
            vec![a1, v2, a2],
            vec![v2, v3, a2],
            vec![a2, v3, a3],
            vec![v3, v4, a3],
            vec![a3, v4, a4],
            vec![v4, v1, a4],
            vec![a4, v1, a1],
            vec![a1, a2, a3, a4],
            vec![v4, v3, v2, v1],
        ];
        PlaneComplex::build_from_faces(&faces, 9).unwrap()
    }

    #[test]
    fn two_face_square_counts() {
        let c = two_face_square();
        assert_eq!(c.vertex_count(), 4);
        assert_eq!(c.edge_count(), 4);
        assert_eq!(c.face_count(), 2);
        assert_eq!(c.euler(), 2);
        assert!(c.is_simple());
    }

    #[test]
    fn inner_square_counts() {
        let c = inner_square_level1();
        assert_eq!(c.vertex_count(), 8);
        assert_eq!(c.edge_count(), 16);
        assert_eq!(c.face_count(), 10);
        assert_eq!(c.euler(), 2);
        assert!(c.is_simple());
        for f in 0..c.face_count() {
            assert!(c.face_is_jordan(f));
        }
    }

    #[test]
    fn edge_used_once_is_nonmanifold() {
        let err = PlaneComplex::build_from_faces(&[vec![1, 2, 3], vec![3, 2, 4]], 0).unwrap_err();
        assert!(matches!(err, ComplexError::NonManifold(_, _)));
    }

    #[test]
    fn doubled_edge_is_not_simple() {
        // square plus a parallel copy of edge 1–2, bounding a bigon face
        let c = PlaneComplex::build_from_faces(&[vec![1, 2], vec![1, 2, 3, 4], vec![4, 3, 2, 1]], 2)
            .expect("doubled edge still builds");
        assert!(!c.is_simple());
        let (u, v) = c.simple_violation().unwrap();
        assert_eq!((u.0, v.0), (1, 2));
    }

    #[test]
    fn disconnected_is_rejected() {
        let err = PlaneComplex::build_from_faces(
            &[vec![1, 2, 3], vec![3, 2, 1], vec![4, 5, 6], vec![6, 5, 4]],
            0,
        )
        .unwrap_err();
        // two spheres: euler is 4, reported as NonSphere
        assert!(matches!(err, ComplexError::NonSphere(_) | ComplexError::Disconnected));
    }

    #[test]
    fn jordan_detects_pinched_walk() {
        let f = Face::new(vec![VertexId(1), VertexId(5), VertexId(1), VertexId(2), VertexId(3), VertexId(4)]);
        assert!(!f.is_jordan());
        let g = Face::new(vec![VertexId(1), VertexId(2), VertexId(3)]);
        assert!(g.is_jordan());
    }

    #[test]
    fn induced_check_outer_square() {
        let c = inner_square_level1();
        let square: Vec<VertexId> = [1, 2, 3, 4].iter().map(|&v| VertexId(v)).collect();
        assert!(c.induced_check(&square));
    }

    #[test]
    fn induced_check_fails_with_chord() {
        // square cut by the diagonal 1–3
        let c = PlaneComplex::build_from_faces(&[vec![1, 2, 3], vec![1, 3, 4], vec![4, 3, 2, 1]], 2).unwrap();
        let square: Vec<VertexId> = [1, 2, 3, 4].iter().map(|&v| VertexId(v)).collect();
        assert!(!c.induced_check(&square));
    }

    #[test]
    fn arcs_connected_inner_square() {
        let c = inner_square_level1();
        let b: Vec<VertexId> = [1, 2, 3, 4].iter().map(|&v| VertexId(v)).collect();
        assert!(c.arcs_connected_without(&b, VertexId(1), VertexId(3)));
        assert!(c.arcs_connected_without(&b, VertexId(2), VertexId(4)));
    }

    #[test]
    fn arcs_disconnected_in_pillow_level1() {
        // square split by the interior path 2–5–4
        let c = PlaneComplex::build_from_faces(&[vec![1, 2, 5, 4], vec![2, 3, 4, 5], vec![4, 3, 2, 1]], 2).unwrap();
        let b: Vec<VertexId> = [1, 2, 3, 4].iter().map(|&v| VertexId(v)).collect();
        assert!(!c.arcs_connected_without(&b, VertexId(2), VertexId(4)));
        assert!(c.arcs_connected_without(&b, VertexId(1), VertexId(3)));
    }

    #[test]
    fn arcs_connected_cone_square() {
        // square with a hub joined to all corners
        let c = PlaneComplex::build_from_faces(
            &[vec![1, 2, 5], vec![2, 3, 5], vec![3, 4, 5], vec![4, 1, 5], vec![4, 3, 2, 1]],
            4,
        )
        .unwrap();
        let b: Vec<VertexId> = [1, 2, 3, 4].iter().map(|&v| VertexId(v)).collect();
        assert!(c.arcs_connected_without(&b, VertexId(1), VertexId(3)));
    }

    fn cyclic_eq(a: &[VertexId], b: &[VertexId]) -> bool {
        if a.len() != b.len() || a.is_empty() {
            return false;
        }
        (0..a.len()).any(|s| (0..a.len()).all(|i| a[(s + i) % a.len()] == b[i]))
    }

    #[test]
    fn subgraph_faces_reproduce_full_faces() {
        let c = inner_square_level1();
        let all: BTreeSet<(VertexId, VertexId)> = c.edges().collect();
        let traced = c.subgraph_faces(&all);
        assert_eq!(traced.len(), c.face_count());
        for f in c.faces() {
            let target: Vec<VertexId> =
                if f.mirrored { f.walk.iter().rev().copied().collect() } else { f.walk.clone() };
            assert!(traced.iter().any(|w| cyclic_eq(w, &target)), "face {target:?} not traced");
        }
    }

    #[test]
    fn subgraph_faces_of_boundary_plus_path() {
        let c = inner_square_level1();
        // outer square plus the path 1–5–6–3 splits the disk in two
        let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for (u, v) in [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (5, 6), (6, 3)] {
            edges.insert(super::canon(VertexId(u), VertexId(v)));
        }
        let walks = c.subgraph_faces(&edges);
        assert_eq!(walks.len(), 3); // two interior regions plus the outer face
        let mut lens: Vec<usize> = walks.iter().map(|w| w.len()).collect();
        lens.sort();
        assert_eq!(lens, vec![4, 5, 5]);
    }

    #[test]
    fn restricted_path_prefers_small_ids() {
        let c = inner_square_level1();
        let interior: BTreeSet<VertexId> = [5, 6, 7, 8].iter().map(|&v| VertexId(v)).collect();
        let p = c.restricted_path(VertexId(1), VertexId(3), &interior).unwrap();
        assert_eq!(p.first(), Some(&VertexId(1)));
        assert_eq!(p.last(), Some(&VertexId(3)));
        for v in &p[1..p.len() - 1] {
            assert!(interior.contains(v));
        }
        // shortest is length 3: 1–a1–a2–3 = (1,5,6,3)
        assert_eq!(p, vec![VertexId(1), VertexId(5), VertexId(6), VertexId(3)]);
    }
}
