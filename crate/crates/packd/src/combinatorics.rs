//! The simple / irreducible / acylindrical predicates for subdivision rules,
//! connecting-path construction, and the Jordan-face refinement of a rule.
//!
//! Simplicity is scanned level by level up to a budget. Irreducibility is
//! decided exactly by tracking (type, boundary-pair) states: a chord between
//! boundary vertices can only appear inside a face whose boundary carries both
//! endpoints, so the reachable states form a finite automaton. Acylindricity
//! combines a monotone connectivity certificate (once the two boundary arcs of
//! a pair connect at some level they stay connected) with a periodic
//! separation certificate for the cylindrical direction: if every reachable
//! carrier state separates its arcs at template level, a crossing at any depth
//! would retract to a crossing one level higher, so no depth admits one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::plane_complex::{Face, PlaneComplex, VertexId};
use crate::subdivision::{
    iterate, rule_to_doc, subdivide_once, validate_rule, Chooser, Correspondence, CorrespondenceDoc, End,
    EndDoc, FaceDoc, PolygonDoc, PolygonType, RuleDoc, RuleError, SubdivisionRule, TemplateDoc,
};

/// Default maximum subdivision depth explored by the predicates.
pub const DEFAULT_LEVEL_BUDGET: u32 = 6;

#[derive(Debug, Error)]
pub enum CombinatoricsError {
    #[error("prerequisite failed: {0}")]
    PrerequisiteFailed(String),
    #[error("pair ({0}, {1}) is not certified connected")]
    NotCertified(usize, usize),
    #[error("could not make every face a Jordan domain within the level budget {0}")]
    Unresolvable(u32),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictStatus {
    Holds,
    Fails,
    VerifiedUpToLevel { level: u32 },
}

/// Outcome of one predicate check, with a finite certificate when available.
#[derive(Debug, Clone, Serialize)]
pub struct PredicateVerdict {
    pub predicate: String,
    #[serde(flatten)]
    pub status: VerdictStatus,
    pub levels_checked: u32,
    pub certificate: Certificate,
}

impl PredicateVerdict {
    pub fn holds_or_verified(&self) -> bool {
        !matches!(self.status, VerdictStatus::Fails)
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Certificate {
    /// Loop or doubled edge found while scanning for simplicity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simple_violation: Option<SimpleViolation>,
    /// Chord produced by a reachable (type, pair) state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chord: Option<ChordWitness>,
    /// Connectivity certificates per non-adjacent boundary pair.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub connected_pairs: Vec<PairConnection>,
    /// Periodic separation certificates (cylindrical witnesses).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cylinders: Vec<CylinderWitness>,
    /// Pairs that stayed separated without a periodic certificate.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unresolved_pairs: Vec<PairRef>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SimpleViolation {
    pub polygon: String,
    pub level: u32,
    pub edge: (u64, u64),
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ChordWitness {
    pub polygon: String,
    pub pair: (usize, usize),
    /// (type, pair-position) states from the polygon boundary down to the
    /// template that adds the chord.
    pub chain: Vec<StateRef>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct StateRef {
    pub polygon: String,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct PairRef {
    pub polygon: String,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct PairConnection {
    pub polygon: String,
    pub pair: (usize, usize),
    pub level: u32,
    /// Simple path between the pair whose interior avoids the boundary.
    pub path: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CylinderWitness {
    pub polygon: String,
    pub pair: (usize, usize),
    pub period: usize,
    /// The repeating (type, pair) states, starting at the cycle entry.
    pub cycle: Vec<StateRef>,
}

pub fn non_adjacent_pairs(sides: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..sides {
        for j in (i + 1)..sides {
            let adjacent = j == i + 1 || (i == 0 && j == sides - 1);
            if !adjacent {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// Simplicity
// ---------------------------------------------------------------------------

/// Scans every polygon's subdivision graphs up to `max_level` for loops and
/// doubled edges.
pub fn check_simple(rule: &SubdivisionRule, max_level: u32) -> PredicateVerdict {
    for (ti, polygon) in rule.polygons.iter().enumerate() {
        let mut c = rule.level0(ti);
        for n in 1..=max_level {
            c = match subdivide_once(&c, rule, &Chooser::default()) {
                Ok(c) => c,
                Err(_) => break,
            };
            if let Some((u, v)) = c.simple_violation() {
                return PredicateVerdict {
                    predicate: "simple".into(),
                    status: VerdictStatus::Fails,
                    levels_checked: n,
                    certificate: Certificate {
                        simple_violation: Some(SimpleViolation {
                            polygon: polygon.name.clone(),
                            level: n,
                            edge: (u.0, v.0),
                        }),
                        ..Default::default()
                    },
                };
            }
        }
    }
    PredicateVerdict {
        predicate: "simple".into(),
        status: VerdictStatus::VerifiedUpToLevel { level: max_level },
        levels_checked: max_level,
        certificate: Certificate::default(),
    }
}

// ---------------------------------------------------------------------------
// Irreducibility
// ---------------------------------------------------------------------------

type State = (usize, (usize, usize));

/// Interior template edges joining two boundary positions of type `ti`.
fn template_position_edges(rule: &SubdivisionRule, ti: usize) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for tf in &rule.templates[ti].faces {
        let n = tf.cycle.len();
        for i in 0..n {
            if let (End::Boundary(a), End::Boundary(b)) = (tf.cycle[i], tf.cycle[(i + 1) % n]) {
                edges.insert(if a < b { (a, b) } else { (b, a) });
            }
        }
    }
    edges
}

/// Successor states of `(ti, pair)`: one per admissible assignment of each
/// template face of `ti` that carries both boundary positions.
fn pair_transitions(rule: &SubdivisionRule, state: State) -> Vec<State> {
    let (ti, (i, j)) = state;
    let mut out = Vec::new();
    for tf in &rule.templates[ti].faces {
        let pi = tf.cycle.iter().position(|&e| e == End::Boundary(i));
        let pj = tf.cycle.iter().position(|&e| e == End::Boundary(j));
        let (Some(pi), Some(pj)) = (pi, pj) else { continue };
        let n = tf.cycle.len();
        for asg in &tf.assignments {
            // invert the correspondence: cycle position p sits at type
            // position q with ψ(q) = p
            let corr = asg.correspondence;
            let inv = |p: usize| -> usize {
                if corr.reflect {
                    (corr.rotation + n - p) % n
                } else {
                    (p + n - corr.rotation % n) % n
                }
            };
            let (qi, qj) = (inv(pi), inv(pj));
            let pair = if qi < qj { (qi, qj) } else { (qj, qi) };
            out.push((asg.type_index, pair));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Exact decision of irreducibility via the reachable (type, pair) states.
///
/// A chord between boundary vertices of a polygon appears at level n exactly
/// when a nested face chain carries the pair to a template that joins the two
/// positions by an edge, so exhausting the finite state space decides the
/// predicate for every level at once.
pub fn check_irreducible(rule: &SubdivisionRule) -> PredicateVerdict {
    let position_edges: Vec<BTreeSet<(usize, usize)>> =
        (0..rule.polygons.len()).map(|ti| template_position_edges(rule, ti)).collect();
    let mut seen: BTreeSet<State> = BTreeSet::new();
    let mut pred: BTreeMap<State, State> = BTreeMap::new();
    let mut origin: BTreeMap<State, State> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for (ti, polygon) in rule.polygons.iter().enumerate() {
        for pair in non_adjacent_pairs(polygon.sides) {
            let s = (ti, pair);
            if seen.insert(s) {
                origin.insert(s, s);
                queue.push_back(s);
            }
        }
    }
    while let Some(s) = queue.pop_front() {
        let (ti, pair) = s;
        if position_edges[ti].contains(&pair) {
            let mut chain = vec![s];
            let mut cur = s;
            while let Some(&p) = pred.get(&cur) {
                chain.push(p);
                cur = p;
            }
            chain.reverse();
            let (oi, opair) = origin[&cur];
            return PredicateVerdict {
                predicate: "irreducible".into(),
                status: VerdictStatus::Fails,
                levels_checked: chain.len() as u32,
                certificate: Certificate {
                    chord: Some(ChordWitness {
                        polygon: rule.polygons[oi].name.clone(),
                        pair: opair,
                        chain: chain
                            .iter()
                            .map(|&(t, p)| StateRef { polygon: rule.polygons[t].name.clone(), pair: p })
                            .collect(),
                    }),
                    ..Default::default()
                },
            };
        }
        for next in pair_transitions(rule, s) {
            if seen.insert(next) {
                pred.insert(next, s);
                origin.insert(next, origin[&s]);
                queue.push_back(next);
            }
        }
    }
    PredicateVerdict {
        predicate: "irreducible".into(),
        status: VerdictStatus::Holds,
        levels_checked: seen.len() as u32,
        certificate: Certificate::default(),
    }
}

// ---------------------------------------------------------------------------
// Acylindricity
// ---------------------------------------------------------------------------

fn boundary_ids(sides: usize) -> Vec<VertexId> {
    (0..sides as u64).map(VertexId).collect()
}

/// Template faces of a state's type that carry both pair positions, with the
/// child states of every admissible assignment.
fn carrier_faces(rule: &SubdivisionRule, state: State) -> Vec<(usize, Vec<State>)> {
    let (ti, (i, j)) = state;
    let mut out = Vec::new();
    for (k, tf) in rule.templates[ti].faces.iter().enumerate() {
        let pi = tf.cycle.iter().position(|&e| e == End::Boundary(i));
        let pj = tf.cycle.iter().position(|&e| e == End::Boundary(j));
        let (Some(pi), Some(pj)) = (pi, pj) else { continue };
        let n = tf.cycle.len();
        let mut states = Vec::new();
        for asg in &tf.assignments {
            let corr = asg.correspondence;
            let inv = |p: usize| -> usize {
                if corr.reflect {
                    (corr.rotation + n - p) % n
                } else {
                    (p + n - corr.rotation % n) % n
                }
            };
            let (qi, qj) = (inv(pi), inv(pj));
            states.push((asg.type_index, if qi < qj { (qi, qj) } else { (qj, qi) }));
        }
        out.push((k, states));
    }
    out
}

/// Separation check for one state, granting a virtual crossing through every
/// carrier child face whose state is not in the assumed-separating set.
fn separates_assuming(rule: &SubdivisionRule, state: State, assumed: &BTreeSet<State>) -> bool {
    let (ti, (i, j)) = state;
    let c = rule.template_complex(ti);
    let boundary = boundary_ids(rule.sides(ti));
    let (v, w) = (VertexId(i as u64), VertexId(j as u64));
    let (arc1, arc2) = crate::plane_complex::split_arcs(&boundary, v, w);
    if arc1.is_empty() || arc2.is_empty() {
        return false;
    }
    // adjacency with virtual edges joining the two walk arcs of crossable
    // children
    let mut extra: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for (k, states) in carrier_faces(rule, state) {
        if states.iter().all(|s| assumed.contains(s)) {
            continue;
        }
        // template face k is child face k of the template complex
        let walk = &c.faces()[k].walk;
        let (ca, cb) = crate::plane_complex::split_arcs(walk, v, w);
        if let (Some(&a), Some(&b)) = (ca.first(), cb.first()) {
            extra.entry(a).or_default().push(b);
            extra.entry(b).or_default().push(a);
        }
    }
    let removed = BTreeSet::from([v, w]);
    let mut seen = BTreeSet::from([arc1[0]]);
    let mut queue = VecDeque::from([arc1[0]]);
    while let Some(u) = queue.pop_front() {
        let neighbors = c.neighbors(u).iter().chain(extra.get(&u).into_iter().flatten());
        for &nb in neighbors {
            if !removed.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    !seen.contains(&arc2[0])
}

/// Searches for a separation certificate for a pair that stayed disconnected
/// up to the level budget.
///
/// The certificate is a set of carrier states, containing the start state,
/// each of which keeps its boundary arcs separated at template level even when
/// every carrier child outside the set is granted a virtual crossing. By
/// induction on depth no level ever connects the arcs, so the rule is
/// cylindrical. The reported cycle exhibits the infinite carrier chain.
fn cylinder_certificate(rule: &SubdivisionRule, start: State) -> Option<CylinderWitness> {
    let mut closure = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut edges: BTreeMap<State, Vec<State>> = BTreeMap::new();
    while let Some(s) = queue.pop_front() {
        let succ = pair_transitions(rule, s);
        edges.insert(s, succ.clone());
        for n in succ {
            if closure.insert(n) {
                queue.push_back(n);
            }
        }
    }
    // greatest fixed point: drop states until the rest are self-supporting
    let mut assumed = closure.clone();
    loop {
        let dropped: Vec<State> =
            assumed.iter().copied().filter(|&s| !separates_assuming(rule, s, &assumed)).collect();
        if dropped.is_empty() {
            break;
        }
        for s in dropped {
            assumed.remove(&s);
        }
    }
    if !assumed.contains(&start) {
        return None;
    }
    // a cycle within the certified set, reachable from the start
    let mut stack = vec![(start, vec![start])];
    let mut expanded = BTreeSet::new();
    while let Some((s, path)) = stack.pop() {
        for &n in edges.get(&s).map(|v| v.as_slice()).unwrap_or(&[]) {
            if !assumed.contains(&n) {
                continue;
            }
            if let Some(pos) = path.iter().position(|&p| p == n) {
                let cycle = &path[pos..];
                return Some(CylinderWitness {
                    polygon: rule.polygons[start.0].name.clone(),
                    pair: start.1,
                    period: cycle.len(),
                    cycle: cycle
                        .iter()
                        .map(|&(t, p)| StateRef { polygon: rule.polygons[t].name.clone(), pair: p })
                        .collect(),
                });
            }
            if expanded.insert(n) {
                let mut next_path = path.clone();
                next_path.push(n);
                stack.push((n, next_path));
            }
        }
    }
    None
}

/// Decides acylindricity per non-adjacent boundary pair, up to `max_level`.
pub fn decide_acylindrical(rule: &SubdivisionRule, max_level: u32) -> Result<PredicateVerdict, CombinatoricsError> {
    let simple = check_simple(rule, max_level.min(3));
    if !simple.holds_or_verified() {
        return Err(CombinatoricsError::PrerequisiteFailed("rule is not simple".into()));
    }
    let irreducible = check_irreducible(rule);
    if !irreducible.holds_or_verified() {
        return Err(CombinatoricsError::PrerequisiteFailed("rule is not irreducible".into()));
    }
    let mut connected = Vec::new();
    let mut cylinders = Vec::new();
    let mut unresolved = Vec::new();
    for (ti, polygon) in rule.polygons.iter().enumerate() {
        let mut remaining = non_adjacent_pairs(polygon.sides);
        if remaining.is_empty() {
            continue;
        }
        let boundary = boundary_ids(polygon.sides);
        let mut c = rule.level0(ti);
        for n in 1..=max_level {
            if remaining.is_empty() {
                break;
            }
            c = subdivide_once(&c, rule, &Chooser::default())?;
            remaining.retain(|&(i, j)| {
                let (v, w) = (VertexId(i as u64), VertexId(j as u64));
                if c.arcs_connected_without(&boundary, v, w) {
                    // the interior witness path may live deeper than the
                    // certification level
                    let path = connecting_path(rule, &polygon.name, i, j, max_level)
                        .map(|p| p.iter().map(|v| v.0).collect())
                        .unwrap_or_default();
                    connected.push(PairConnection { polygon: polygon.name.clone(), pair: (i, j), level: n, path });
                    false
                } else {
                    true
                }
            });
        }
        for (i, j) in remaining {
            match cylinder_certificate(rule, (ti, (i, j))) {
                Some(w) => cylinders.push(w),
                None => unresolved.push(PairRef { polygon: polygon.name.clone(), pair: (i, j) }),
            }
        }
    }
    let status = if !cylinders.is_empty() {
        VerdictStatus::Fails
    } else if unresolved.is_empty() {
        VerdictStatus::Holds
    } else {
        VerdictStatus::VerifiedUpToLevel { level: max_level }
    };
    Ok(PredicateVerdict {
        predicate: "acylindrical".into(),
        status,
        levels_checked: max_level,
        certificate: Certificate {
            connected_pairs: connected,
            cylinders,
            unresolved_pairs: unresolved,
            ..Default::default()
        },
    })
}

/// Runs all three predicates with a shared level budget.
pub fn check_rule(rule: &SubdivisionRule, max_level: u32) -> Result<Vec<PredicateVerdict>, CombinatoricsError> {
    let simple = check_simple(rule, max_level);
    let irreducible = check_irreducible(rule);
    let acylindrical = if simple.holds_or_verified() && irreducible.holds_or_verified() {
        decide_acylindrical(rule, max_level)?
    } else {
        PredicateVerdict {
            predicate: "acylindrical".into(),
            status: VerdictStatus::Fails,
            levels_checked: 0,
            certificate: Certificate::default(),
        }
    };
    Ok(vec![simple, irreducible, acylindrical])
}

/// A simple path between two non-adjacent boundary vertices whose interior
/// vertices are interior to the polygon, found at the shallowest level that
/// admits one, with the breadth-first tie broken toward small vertex ids.
pub fn connecting_path(
    rule: &SubdivisionRule,
    polygon: &str,
    i: usize,
    j: usize,
    max_level: u32,
) -> Result<Vec<VertexId>, CombinatoricsError> {
    connecting_path_leveled(rule, polygon, i, j, max_level).map(|(p, _)| p)
}

/// As [`connecting_path`], also reporting the subdivision level the path
/// lives in. The pair must be acylindrically certified (its boundary arcs
/// connected at some level) before a path is accepted.
pub fn connecting_path_leveled(
    rule: &SubdivisionRule,
    polygon: &str,
    i: usize,
    j: usize,
    max_level: u32,
) -> Result<(Vec<VertexId>, u32), CombinatoricsError> {
    let ti = rule.type_index(polygon)?;
    let sides = rule.sides(ti);
    let boundary = boundary_ids(sides);
    let (v, w) = (VertexId(i as u64), VertexId(j as u64));
    let mut certified = false;
    let mut c = rule.level0(ti);
    for n in 1..=max_level {
        c = subdivide_once(&c, rule, &Chooser::default())?;
        if !certified {
            certified = c.arcs_connected_without(&boundary, v, w);
        }
        if certified {
            let interior: BTreeSet<VertexId> = c.vertex_ids().filter(|id| id.0 >= sides as u64).collect();
            if let Some(path) = c.restricted_path(v, w, &interior) {
                return Ok((path, n));
            }
        }
    }
    Err(CombinatoricsError::NotCertified(i, j))
}

// ---------------------------------------------------------------------------
// Jordan-face refinement
// ---------------------------------------------------------------------------

/// How one pinched template face of the input rule was replaced.
#[derive(Debug, Clone)]
pub struct FaceRefinement {
    pub type_index: usize,
    pub face_index: usize,
    /// Separating pairs whose connecting paths were added, with the level of
    /// the subdivision graph each path lives in.
    pub pairs: Vec<((usize, usize), u32)>,
    /// Number of replacement faces.
    pub replacement_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct JordanizeTrace {
    pub refinements: Vec<FaceRefinement>,
    pub new_types: Vec<String>,
}

pub struct Jordanized {
    pub rule: SubdivisionRule,
    pub trace: JordanizeTrace,
}

/// Refines a rule so that every template face is a Jordan domain.
///
/// Each pinched face is split by connecting paths of its target type, chosen
/// greedily from the lexicographically smallest boundary pair that separates
/// the pinch. The resulting multi-cell regions are registered as new polygon
/// types whose templates are the region's cells; single-cell regions keep
/// their original type. The input must be certified simple, irreducible, and
/// acylindrical within the level budget.
pub fn jordanize(rule: &SubdivisionRule, max_level: u32) -> Result<SubdivisionRule, CombinatoricsError> {
    jordanize_traced(rule, max_level).map(|j| j.rule)
}

pub fn jordanize_traced(rule: &SubdivisionRule, max_level: u32) -> Result<Jordanized, CombinatoricsError> {
    let verdicts = check_rule(rule, max_level)?;
    if !verdicts.iter().all(|v| v.holds_or_verified()) {
        return Err(CombinatoricsError::PrerequisiteFailed(
            "jordanize requires a simple, irreducible, acylindrical rule".into(),
        ));
    }
    if !verdicts[2].certificate.unresolved_pairs.is_empty() {
        return Err(CombinatoricsError::PrerequisiteFailed(
            "acylindricity has unresolved pairs; raise the level budget".into(),
        ));
    }

    let mut builder = RefinedRuleBuilder::new(rule);
    let mut trace = JordanizeTrace::default();
    for ti in 0..rule.polygons.len() {
        for fi in 0..rule.templates[ti].faces.len() {
            let pinches = pinch_pairs(&rule.templates[ti].faces[fi].cycle);
            if pinches.is_empty() {
                builder.keep_face(ti, fi);
            } else {
                let refinement = builder.refine_face(ti, fi, &pinches, max_level)?;
                trace.refinements.push(refinement);
            }
        }
    }
    let rule = builder.finish(&mut trace)?;
    Ok(Jordanized { rule, trace })
}

/// Pairs of cycle positions carrying the same endpoint (the pinches of a
/// non-Jordan face).
fn pinch_pairs(cycle: &[End]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..cycle.len() {
        for b in (a + 1)..cycle.len() {
            if cycle[a] == cycle[b] {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Marked listing of a subdivision cell: the cycle in geometric order and the
/// correspondence realigning it with the cell type's boundary positions.
fn marked_cell(cell: &Face) -> (Vec<VertexId>, Correspondence) {
    if cell.mirrored {
        let n = cell.walk.len();
        let cycle: Vec<VertexId> = (0..n).map(|i| cell.walk[(n - i) % n]).collect();
        (cycle, Correspondence { rotation: 0, reflect: true })
    } else {
        (cell.walk.clone(), Correspondence::default())
    }
}

struct TemplateBuilder {
    interior: usize,
    faces: Vec<(Vec<End>, String, Correspondence)>,
}

struct RefinedRuleBuilder<'a> {
    rule: &'a SubdivisionRule,
    templates: Vec<TemplateBuilder>,
    new_types: BTreeMap<String, String>,
    new_polygons: Vec<PolygonType>,
    new_templates: Vec<TemplateBuilder>,
}

impl<'a> RefinedRuleBuilder<'a> {
    fn new(rule: &'a SubdivisionRule) -> Self {
        let templates = rule
            .templates
            .iter()
            .map(|t| TemplateBuilder { interior: t.interior_vertices, faces: Vec::new() })
            .collect();
        RefinedRuleBuilder {
            rule,
            templates,
            new_types: BTreeMap::new(),
            new_polygons: Vec::new(),
            new_templates: Vec::new(),
        }
    }

    fn keep_face(&mut self, ti: usize, fi: usize) {
        let tf = &self.rule.templates[ti].faces[fi];
        let asg = tf.assignments[0];
        self.templates[ti].faces.push((
            tf.cycle.clone(),
            self.rule.polygons[asg.type_index].name.clone(),
            asg.correspondence,
        ));
    }

    fn refine_face(
        &mut self,
        ti: usize,
        fi: usize,
        pinches: &[(usize, usize)],
        max_level: u32,
    ) -> Result<FaceRefinement, CombinatoricsError> {
        let tf = &self.rule.templates[ti].faces[fi];
        let asg = tf.assignments[0];
        let si = asg.type_index;
        let sides = self.rule.sides(si);
        // the pinch positions live on the face's cycle; pull them back to
        // boundary positions of the target type
        let corr = asg.correspondence;
        let n = tf.cycle.len();
        let pull = |p: usize| -> usize {
            if corr.reflect {
                (corr.rotation + n - p) % n
            } else {
                (p + n - corr.rotation % n) % n
            }
        };
        let pinches: Vec<(usize, usize)> = pinches
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (pull(a), pull(b));
                if x < y { (x, y) } else { (y, x) }
            })
            .collect();
        // a separating pair {i, j} has the pinch positions on different arcs
        let separates = |(i, j): (usize, usize), (p, q): (usize, usize)| -> bool {
            if p == i || p == j || q == i || q == j {
                return false;
            }
            let side = |x: usize| {
                let fwd = (x + sides - i) % sides;
                let len = (j + sides - i) % sides;
                fwd > 0 && fwd < len
            };
            side(p) != side(q)
        };
        let mut chosen: Vec<((usize, usize), u32, Vec<VertexId>)> = Vec::new();
        let mut resolved: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(p, q) in &pinches {
            if resolved.contains(&(p, q)) {
                continue;
            }
            let mut found = false;
            for (i, j) in non_adjacent_pairs(sides) {
                if !separates((i, j), (p, q)) || chosen.iter().any(|&(pair, _, _)| pair == (i, j)) {
                    continue;
                }
                let Ok((path, level)) =
                    connecting_path_leveled(self.rule, &self.rule.polygons[si].name, i, j, max_level)
                else {
                    continue;
                };
                for &(pp, qq) in &pinches {
                    if separates((i, j), (pp, qq)) {
                        resolved.insert((pp, qq));
                    }
                }
                chosen.push(((i, j), level, path));
                found = true;
                break;
            }
            if !found {
                return Err(CombinatoricsError::Unresolvable(max_level));
            }
        }
        let depth = chosen.iter().map(|&(_, l, _)| l).max().unwrap_or(1);
        let big = iterate(self.rule, &self.rule.polygons[si].name, depth, &Chooser::default())?;
        let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for p in 0..sides {
            let (a, b) = (VertexId(p as u64), VertexId(((p + 1) % sides) as u64));
            edges.insert(if a <= b { (a, b) } else { (b, a) });
        }
        for (_, _, path) in &chosen {
            for w in path.windows(2) {
                let (a, b) = (w[0], w[1]);
                edges.insert(if a <= b { (a, b) } else { (b, a) });
            }
        }
        let regions = region_partition(&big, &edges);
        // map region vertices into the parent template's coordinates
        let mut vertex_to_end: BTreeMap<VertexId, End> = BTreeMap::new();
        for q in 0..sides {
            vertex_to_end.insert(VertexId(q as u64), tf.cycle[corr.apply(q, n)]);
        }
        let replacement_count = regions.len();
        for region in &regions {
            // only walk vertices enter the parent template; cell interiors
            // belong to the region's own type
            for &v in &region.walk {
                if !vertex_to_end.contains_key(&v) {
                    let idx = self.templates[ti].interior;
                    self.templates[ti].interior += 1;
                    vertex_to_end.insert(v, End::Interior(idx));
                }
            }
            if region.cells.len() == 1 {
                let cell = &region.cells[0];
                let (cycle_vertices, cell_corr) = marked_cell(cell);
                let cycle: Vec<End> = cycle_vertices.iter().map(|v| vertex_to_end[v]).collect();
                self.templates[ti].faces.push((cycle, cell.type_tag.clone().unwrap(), cell_corr));
            } else {
                let name = self.register_region_type(si, region);
                let cycle: Vec<End> = region.walk.iter().map(|v| vertex_to_end[v]).collect();
                self.templates[ti].faces.push((cycle, name, Correspondence::default()));
            }
        }
        Ok(FaceRefinement {
            type_index: ti,
            face_index: fi,
            pairs: chosen.iter().map(|&(pair, level, _)| (pair, level)).collect(),
            replacement_count,
        })
    }

    fn register_region_type(&mut self, si: usize, region: &Region) -> String {
        let key = format!(
            "{si}:{:?}:{:?}",
            region.walk,
            region.cells.iter().map(|c| (&c.walk, &c.type_tag)).collect::<Vec<_>>()
        );
        if let Some(name) = self.new_types.get(&key) {
            return name.clone();
        }
        let name = format!("J{}", self.new_polygons.len() + 1);
        self.new_types.insert(key, name.clone());
        self.new_polygons.push(PolygonType { name: name.clone(), sides: region.walk.len() });
        let mut local: BTreeMap<VertexId, End> = BTreeMap::new();
        for (p, &v) in region.walk.iter().enumerate() {
            local.insert(v, End::Boundary(p));
        }
        let mut interior = 0usize;
        let mut faces = Vec::new();
        for cell in &region.cells {
            for &v in &cell.walk {
                local.entry(v).or_insert_with(|| {
                    let e = End::Interior(interior);
                    interior += 1;
                    e
                });
            }
            let (cycle_vertices, cell_corr) = marked_cell(cell);
            let cycle: Vec<End> = cycle_vertices.iter().map(|v| local[v]).collect();
            faces.push((cycle, cell.type_tag.clone().unwrap(), cell_corr));
        }
        self.new_templates.push(TemplateBuilder { interior, faces });
        name
    }

    fn finish(self, trace: &mut JordanizeTrace) -> Result<SubdivisionRule, CombinatoricsError> {
        let mut polygons: Vec<PolygonDoc> =
            self.rule.polygons.iter().map(|p| PolygonDoc { name: p.name.clone(), sides: p.sides }).collect();
        polygons.extend(self.new_polygons.iter().map(|p| PolygonDoc { name: p.name.clone(), sides: p.sides }));
        let conv = |e: End| match e {
            End::Boundary(p) => EndDoc::B(p),
            End::Interior(j) => EndDoc::I(j as u64),
        };
        let names: Vec<String> = polygons.iter().map(|p| p.name.clone()).collect();
        let original_count = self.rule.polygons.len();
        let mut subdivisions = BTreeMap::new();
        let builders = self
            .templates
            .into_iter()
            .enumerate()
            .map(|(ti, b)| (names[ti].clone(), b))
            .chain(self.new_templates.into_iter().enumerate().map(|(k, b)| (names[original_count + k].clone(), b)));
        for (name, b) in builders {
            let sides = polygons.iter().find(|p| p.name == name).unwrap().sides;
            // derive the interior edge list from the face cycles
            let mut derived: BTreeMap<(End, End), usize> = BTreeMap::new();
            for (cycle, _, _) in &b.faces {
                for i in 0..cycle.len() {
                    let (x, y) = (cycle[i], cycle[(i + 1) % cycle.len()]);
                    let key = if x <= y { (x, y) } else { (y, x) };
                    *derived.entry(key).or_insert(0) += 1;
                }
            }
            let mut edge_docs = Vec::new();
            for (&(x, y), &count) in &derived {
                let boundary_edge = matches!((x, y), (End::Boundary(a), End::Boundary(bb))
                    if (a + 1) % sides == bb || (bb + 1) % sides == a);
                let copies = if boundary_edge { (count - 1) / 2 } else { count / 2 };
                for _ in 0..copies {
                    edge_docs.push((conv(x), conv(y)));
                }
            }
            subdivisions.insert(
                name,
                TemplateDoc {
                    interior_vertices: (0..b.interior as u64).collect(),
                    edges: edge_docs,
                    faces: b
                        .faces
                        .iter()
                        .map(|(cycle, tname, corr)| FaceDoc {
                            cycle: cycle.iter().map(|&e| conv(e)).collect(),
                            type_name: tname.clone(),
                            correspondence: CorrespondenceDoc { rotation: corr.rotation, reflect: corr.reflect },
                            alternatives: Vec::new(),
                        })
                        .collect(),
                },
            );
        }
        let doc = RuleDoc { polygons, subdivisions, sphere: rule_to_doc(self.rule).sphere };
        trace.new_types = self.new_polygons.iter().map(|p| p.name.clone()).collect();
        Ok(validate_rule(&doc)?)
    }
}

/// One region of the polygon cut out by the added paths: its boundary walk and
/// the subdivision cells inside it.
struct Region {
    walk: Vec<VertexId>,
    cells: Vec<Face>,
}

/// Partitions the internal faces of `big` among the regions of the subgraph
/// spanned by `edges` (the polygon boundary plus added paths).
fn region_partition(big: &PlaneComplex, edges: &BTreeSet<(VertexId, VertexId)>) -> Vec<Region> {
    let walks = big.subgraph_faces(edges);
    let dart_owner = big.dart_owners();
    let external = big.external_index();
    let mut region_walks: Vec<Vec<VertexId>> = Vec::new();
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for walk in walks {
        let n = walk.len();
        let mut internal = true;
        let mut local_seeds = Vec::new();
        for i in 0..n {
            let dart = (walk[i], walk[(i + 1) % n]);
            if let Some(&(f, _)) = dart_owner.get(&dart) {
                if f == external {
                    internal = false;
                    break;
                }
                local_seeds.push((f, region_walks.len()));
            }
        }
        if internal {
            seeds.extend(local_seeds);
            region_walks.push(walk);
        }
    }
    let mut face_region: Vec<Option<usize>> = vec![None; big.faces().len()];
    let mut queue: VecDeque<(usize, usize)> = seeds.into_iter().collect();
    while let Some((f, r)) = queue.pop_front() {
        if face_region[f].is_some() {
            continue;
        }
        face_region[f] = Some(r);
        for (u, v) in big.faces()[f].walk_edges() {
            let key = if u <= v { (u, v) } else { (v, u) };
            if edges.contains(&key) {
                continue;
            }
            for dart in [(u, v), (v, u)] {
                if let Some(&(g, _)) = dart_owner.get(&dart) {
                    if g != f && g != external && face_region[g].is_none() {
                        queue.push_back((g, r));
                    }
                }
            }
        }
    }
    let mut regions: Vec<Region> = region_walks.into_iter().map(|walk| Region { walk, cells: Vec::new() }).collect();
    for (f, r) in face_region.iter().enumerate() {
        if let Some(r) = r {
            regions[*r].cells.push(big.faces()[f].clone());
        }
    }
    regions.retain(|r| !r.cells.is_empty());
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn simple_verdicts() {
        assert!(matches!(
            check_simple(&fixtures::apollonian(), 3).status,
            VerdictStatus::VerifiedUpToLevel { level: 3 }
        ));
        assert!(matches!(
            check_simple(&fixtures::inner_square(), 3).status,
            VerdictStatus::VerifiedUpToLevel { level: 3 }
        ));
        let v = check_simple(&fixtures::multi_edge(), 3);
        assert_eq!(v.status, VerdictStatus::Fails);
        assert_eq!(v.certificate.simple_violation.as_ref().unwrap().level, 1);
    }

    #[test]
    fn irreducible_verdicts() {
        assert_eq!(check_irreducible(&fixtures::apollonian()).status, VerdictStatus::Holds);
        assert_eq!(check_irreducible(&fixtures::inner_square()).status, VerdictStatus::Holds);
        assert_eq!(check_irreducible(&fixtures::pillow()).status, VerdictStatus::Holds);
        let v = check_irreducible(&fixtures::square_diagonal());
        assert_eq!(v.status, VerdictStatus::Fails);
        let chord = v.certificate.chord.unwrap();
        assert_eq!(chord.pair, (0, 2));
        assert_eq!(chord.chain.len(), 1);
    }

    #[test]
    fn acylindrical_verdicts() {
        let apo = decide_acylindrical(&fixtures::apollonian(), 3).unwrap();
        assert_eq!(apo.status, VerdictStatus::Holds); // vacuous for triangles
        assert!(apo.certificate.connected_pairs.is_empty());

        let inner = decide_acylindrical(&fixtures::inner_square(), 2).unwrap();
        assert_eq!(inner.status, VerdictStatus::Holds);
        for pc in &inner.certificate.connected_pairs {
            assert_eq!(pc.level, 1, "inner-square pairs certify at level 1");
        }

        let cone = decide_acylindrical(&fixtures::cone_square(), 2).unwrap();
        assert_eq!(cone.status, VerdictStatus::Holds);

        let pillow = decide_acylindrical(&fixtures::pillow(), 4).unwrap();
        assert_eq!(pillow.status, VerdictStatus::Fails);
        let cyl = &pillow.certificate.cylinders[0];
        assert_eq!(cyl.pair, (1, 3));
        assert_eq!(cyl.period, 1);
    }

    #[test]
    fn certification_is_monotone() {
        for (rule, polygon) in [
            (fixtures::inner_square(), "Q"),
            (fixtures::cone_square(), "Q"),
            (fixtures::pinched(), "Q"),
        ] {
            let ti = rule.type_index(polygon).unwrap();
            let sides = rule.sides(ti);
            let boundary = boundary_ids(sides);
            for (i, j) in non_adjacent_pairs(sides) {
                let mut first = None;
                for n in 1..=4u32 {
                    let c = iterate(&rule, polygon, n, &Chooser::default()).unwrap();
                    let connected =
                        c.arcs_connected_without(&boundary, VertexId(i as u64), VertexId(j as u64));
                    if let Some(level) = first {
                        assert!(connected, "pair ({i},{j}) regressed at level {n}, certified {level}");
                    } else if connected {
                        first = Some(n);
                    }
                }
            }
        }
    }

    #[test]
    fn connecting_path_examples() {
        let inner = fixtures::inner_square();
        let p = connecting_path(&inner, "Q", 0, 2, 4).unwrap();
        assert_eq!(p, vec![VertexId(0), VertexId(4), VertexId(5), VertexId(2)]);

        let cone = fixtures::cone_square();
        let p = connecting_path(&cone, "Q", 0, 2, 4).unwrap();
        assert_eq!(p, vec![VertexId(0), VertexId(4), VertexId(2)]);

        let pillow = fixtures::pillow();
        assert!(matches!(
            connecting_path(&pillow, "Q", 1, 3, 4),
            Err(CombinatoricsError::NotCertified(1, 3))
        ));
    }

    #[test]
    fn jordanize_is_identity_on_jordan_rules() {
        let rule = fixtures::inner_square();
        let out = jordanize_traced(&rule, 4).unwrap();
        assert!(out.trace.refinements.is_empty());
        assert!(out.trace.new_types.is_empty());
        assert_eq!(out.rule.polygons, rule.polygons);
        for (a, b) in out.rule.templates.iter().zip(&rule.templates) {
            assert_eq!(a.faces.len(), b.faces.len());
        }
    }

    #[test]
    fn jordanize_rejects_cylindrical_rules() {
        assert!(matches!(
            jordanize(&fixtures::pillow(), 4),
            Err(CombinatoricsError::PrerequisiteFailed(_))
        ));
    }

    #[test]
    fn jordanize_splits_pinched_face() {
        let rule = fixtures::pinched();
        let out = jordanize_traced(&rule, 5).unwrap();
        assert_eq!(out.trace.refinements.len(), 1);
        let refinement = &out.trace.refinements[0];
        assert_eq!(refinement.pairs.len(), 1, "one added path suffices");
        for ti in 0..out.rule.polygons.len() {
            let c = out.rule.template_complex(ti);
            for f in 0..c.face_count() {
                assert!(c.face_is_jordan(f), "type {} face {f} not Jordan", out.rule.polygons[ti].name);
            }
        }
        let verdicts = check_rule(&out.rule, 3).unwrap();
        assert!(verdicts.iter().all(|v| v.holds_or_verified()));
    }

    #[test]
    fn jordanize_interleaves_between_levels() {
        let rule = fixtures::pinched();
        let refined = jordanize(&rule, 5).unwrap();
        for n in 1..=3u32 {
            let g_n = iterate(&rule, "Q", n, &Chooser::default()).unwrap();
            let g_n1 = iterate(&rule, "Q", n + 1, &Chooser::default()).unwrap();
            let h_n = iterate(&refined, "Q", n, &Chooser::default()).unwrap();
            assert!(g_n.vertex_count() <= h_n.vertex_count());
            assert!(h_n.vertex_count() <= g_n1.vertex_count());
            assert!(g_n.edge_count() <= h_n.edge_count());
            assert!(h_n.edge_count() <= g_n1.edge_count());
        }
    }
}
