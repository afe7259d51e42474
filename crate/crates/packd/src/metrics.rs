//! Distances between marked packings and the quantitative experiments:
//! stabilization of finite approximations, renormalization contraction, and
//! scaling factors at periodic face words.
//!
//! The distance between two marked packings sharing a vertex set is the
//! maximum spherical Hausdorff distance between corresponding circles after
//! both packings are normalized on common anchor tangencies; it is invariant
//! under Möbius motions of either input.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::combinatorics::{self, CombinatoricsError, VerdictStatus};
use crate::geometry::{self, MobiusDynamics, MobiusMap};
use crate::packer::{self, CirclePacking, PackError, PackOptions};
use crate::plane_complex::{PlaneComplex, VertexId};
use crate::subdivision::{iterate, iterate_sphere, Chooser, RuleError, SubdivisionRule};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("packings do not share a marked vertex set")]
    MarkingMismatch,
    #[error("prerequisite failed: {0}")]
    PrerequisiteFailed(String),
    #[error("face word of length {word} needs a packing of level > {level}")]
    WordTooLong { word: usize, level: u32 },
    #[error("word step {step}: face {face} does not exist in the subdivision")]
    InvalidChoice { step: usize, face: usize },
    #[error("word is not periodic: ends at type {got}, expected {expected}")]
    NotPeriodic { expected: String, got: String },
    #[error("multiplier unstable across levels: {mu_lo} vs {mu_hi} (relative {rel})")]
    Unstable { mu_lo: Complex64, mu_hi: Complex64, rel: f64 },
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
}

/// A finite sequence of face choices: entry k selects a template face of the
/// current polygon's subdivision, encoding a nested face chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceWord(pub Vec<usize>);

impl FaceWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word cycled out to length `k`.
    pub fn cycled(&self, k: usize) -> FaceWord {
        assert!(!self.0.is_empty() || k == 0);
        FaceWord((0..k).map(|i| self.0[i % self.0.len()]).collect())
    }
}

/// Distance series of one experiment with the fitted per-level ratio.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub levels: Vec<u32>,
    pub distances: Vec<f64>,
    pub runtimes_ms: Vec<f64>,
    /// Fitted per-level contraction ratio (only with ≥ 4 usable points).
    pub delta: Option<f64>,
    pub fit_residual: Option<f64>,
    /// exp of the fitted intercept, a crude diameter estimate.
    pub c_estimate: Option<f64>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,d_n,runtime_ms\n");
        for ((n, d), ms) in self.levels.iter().zip(&self.distances).zip(&self.runtimes_ms) {
            out.push_str(&format!("{n},{d:.17e},{ms:.3}\n"));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub pack: PackOptions,
    /// Level budget for the combinatorial prerequisites.
    pub level_budget: u32,
    /// When false, skip the predicate checks (diagnostics on cylindrical rules).
    pub enforce_prereqs: bool,
    /// Number of packings solved concurrently.
    pub jobs: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        // tighter than the packer default: experiment distances bottom out at
        // the tangency accuracy, which trails the angle residual by about two
        // decades
        let pack = PackOptions { tolerance: 1e-12, ..PackOptions::default() };
        ExperimentOptions {
            pack,
            level_budget: combinatorics::DEFAULT_LEVEL_BUDGET,
            enforce_prereqs: true,
            jobs: 1,
        }
    }
}

/// Normalized sup distance between two packings marked by the same vertex
/// set: both are normalized on the anchor tangencies, then the largest
/// spherical Hausdorff distance over corresponding circles is returned.
pub fn sup_distance(
    p: &CirclePacking,
    q: &CirclePacking,
    anchors: &[(VertexId, VertexId); 3],
) -> Result<f64, MetricsError> {
    if p.circles.len() != q.circles.len() || !p.circles.keys().eq(q.circles.keys()) {
        return Err(MetricsError::MarkingMismatch);
    }
    let pn = packer::mobius_normalize(p, anchors)?;
    let qn = packer::mobius_normalize(q, anchors)?;
    let mut worst = 0.0f64;
    for (v, c1) in &pn.circles {
        worst = worst.max(geometry::spherical_hausdorff(c1, &qn.circles[v]));
    }
    Ok(worst)
}

/// Ordinary least squares on (n, log dₙ), dropping distances below the
/// numerical floor 1e−11. Returns (delta, rms residual, exp(intercept)).
pub fn fit_decay(levels: &[u32], distances: &[f64]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(distances)
        .filter(|(_, &d)| d >= 1e-11)
        .map(|(&n, &d)| (n as f64, d.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (pts.iter().map(|&(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Some((slope.exp(), rms, intercept.exp()))
}

fn check_prereqs(rule: &SubdivisionRule, opts: &ExperimentOptions) -> Result<(), MetricsError> {
    if !opts.enforce_prereqs {
        return Ok(());
    }
    let verdicts = combinatorics::check_rule(rule, opts.level_budget)?;
    for v in &verdicts {
        if !v.holds_or_verified() {
            return Err(MetricsError::PrerequisiteFailed(format!("rule is not {}", v.predicate)));
        }
    }
    if let VerdictStatus::VerifiedUpToLevel { .. } = verdicts[2].status {
        if !verdicts[2].certificate.unresolved_pairs.is_empty() {
            return Err(MetricsError::PrerequisiteFailed("acylindricity unresolved".into()));
        }
    }
    for ti in 0..rule.polygons.len() {
        if rule.templates[ti].faces.iter().any(|tf| {
            let mut seen = std::collections::BTreeSet::new();
            tf.cycle.iter().any(|e| !seen.insert(*e))
        }) {
            return Err(MetricsError::PrerequisiteFailed(format!(
                "template of {} has a non-Jordan face; refine the rule first",
                rule.polygons[ti].name
            )));
        }
    }
    Ok(())
}

/// Target of an experiment: a polygon's subdivision graphs or the rule's
/// sphere shell.
#[derive(Debug, Clone)]
pub enum Target {
    Polygon(String),
    Sphere,
}

fn build_complex(rule: &SubdivisionRule, target: &Target, level: u32) -> Result<PlaneComplex, RuleError> {
    match target {
        Target::Polygon(name) => iterate(rule, name, level, &Chooser::default()),
        Target::Sphere => iterate_sphere(rule, level, &Chooser::default()),
    }
}

/// Packs a batch of complexes, `jobs` at a time; output order follows input.
fn pack_batch(
    complexes: Vec<PlaneComplex>,
    pack_opts: &PackOptions,
    jobs: usize,
) -> Result<Vec<(CirclePacking, f64)>, PackError> {
    let jobs = jobs.max(1);
    let mut out: Vec<Option<Result<(CirclePacking, f64), PackError>>> =
        complexes.iter().map(|_| None).collect();
    for wave in complexes.chunks(jobs).enumerate().collect::<Vec<_>>() {
        let (wi, chunk) = wave;
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|c| {
                    scope.spawn(move || {
                        let start = Instant::now();
                        packer::pack(c, pack_opts).map(|p| (p, start.elapsed().as_secs_f64() * 1e3))
                    })
                })
                .collect();
            for (k, h) in handles.into_iter().enumerate() {
                out[wi * jobs + k] = Some(h.join().expect("packing thread"));
            }
        });
    }
    out.into_iter().map(|r| r.unwrap()).collect()
}

/// Stabilization experiment: packs the graphs of levels `n+j` for n in the
/// range (plus one more), extracts the level-j sub-packings, and reports the
/// distance between consecutive extractions.
pub fn converge_experiment(
    rule: &SubdivisionRule,
    target: &Target,
    j: u32,
    n_range: std::ops::RangeInclusive<u32>,
    opts: &ExperimentOptions,
) -> Result<ConvergenceReport, MetricsError> {
    check_prereqs(rule, opts)?;
    let (lo, hi) = (*n_range.start(), *n_range.end());
    let complexes: Result<Vec<PlaneComplex>, RuleError> =
        (lo..=hi + 1).map(|n| build_complex(rule, target, n + j)).collect();
    let packed = pack_batch(complexes?, &opts.pack, opts.jobs)?;
    let mut extracts = Vec::new();
    let mut runtimes = Vec::new();
    for (p, ms) in &packed {
        extracts.push(packer::extract_subpacking(p, j)?);
        runtimes.push(*ms);
    }
    let anchors = extracts[0].anchors;
    let mut levels = Vec::new();
    let mut distances = Vec::new();
    for (k, n) in (lo..=hi).enumerate() {
        levels.push(n);
        distances.push(sup_distance(&extracts[k], &extracts[k + 1], &anchors)?);
    }
    let fit = fit_decay(&levels, &distances);
    Ok(ConvergenceReport {
        label: format!("converge j={j}"),
        levels,
        distances,
        runtimes_ms: runtimes[..(hi - lo + 1) as usize].to_vec(),
        delta: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.1),
        c_estimate: fit.map(|f| f.2),
    })
}

/// The nested face chain selected by a word: (level, face index) per step.
fn face_chain(p: &CirclePacking, w: &FaceWord) -> Result<Vec<(u32, usize)>, MetricsError> {
    let n = p.complex.level();
    if w.len() as u32 >= n + 1 && !w.is_empty() {
        // need at least one level below the deepest face of the chain
        if w.len() as u32 > n {
            return Err(MetricsError::WordTooLong { word: w.len(), level: n });
        }
    }
    let levels = p.complex.levels();
    let root = levels[0]
        .faces
        .iter()
        .position(|f| f.type_tag.is_some())
        .ok_or(MetricsError::InvalidChoice { step: 0, face: 0 })?;
    let mut chain = vec![(0u32, root)];
    let mut current = root;
    for (step, &choice) in w.0.iter().enumerate() {
        let level = step as u32 + 1;
        let faces = &levels[level as usize].faces;
        let child = faces
            .iter()
            .position(|f| f.parent == Some(current) && f.template_face == Some(choice))
            .ok_or(MetricsError::InvalidChoice { step, face: choice })?;
        chain.push((level, child));
        current = child;
    }
    Ok(chain)
}

/// Passes to the sub-packing of the face selected by `w`, re-marked as a
/// packing of the face's own type and normalized on its own anchors.
pub fn renormalize(rule: &SubdivisionRule, p: &CirclePacking, w: &FaceWord) -> Result<CirclePacking, MetricsError> {
    let n = p.complex.level();
    if (w.len() as u32) >= n + 1 || (w.len() as u32) > n {
        return Err(MetricsError::WordTooLong { word: w.len(), level: n });
    }
    let chain = face_chain(p, w)?;
    let &(m, face_index) = chain.last().unwrap();
    let levels = p.complex.levels();
    let face = &levels[m as usize].faces[face_index];
    let type_name = face.type_tag.clone().ok_or(MetricsError::InvalidChoice { step: w.len(), face: face_index })?;
    let depth = n - m;
    let target = iterate(rule, &type_name, depth, &Chooser::default())?;

    // lockstep vertex identification: walk both face trees in template order
    let mut phi: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let target_levels = target.levels();
    let target_root = target_levels[0].faces.iter().position(|f| f.type_tag.is_some()).unwrap();
    for (q, &tv) in target_levels[0].faces[target_root].walk.iter().enumerate() {
        phi.insert(tv, face.walk[q]);
    }
    let mut pairs: Vec<(usize, usize)> = vec![(target_root, face_index)];
    for l in 0..depth {
        let mut next_pairs = Vec::new();
        let t_faces = &target_levels[(l + 1) as usize].faces;
        let s_faces = &levels[(m + l + 1) as usize].faces;
        for &(tg, sg) in &pairs {
            for (ti_child, tf) in t_faces.iter().enumerate() {
                if tf.parent != Some(tg) {
                    continue;
                }
                let sf_child = s_faces
                    .iter()
                    .position(|f| f.parent == Some(sg) && f.template_face == tf.template_face)
                    .expect("parallel subdivision has matching children");
                let sf = &s_faces[sf_child];
                for (q, &tv) in tf.walk.iter().enumerate() {
                    let sv = sf.walk[q];
                    let prev = phi.insert(tv, sv);
                    debug_assert!(prev.is_none() || prev == Some(sv), "inconsistent re-marking");
                }
                next_pairs.push((ti_child, sf_child));
            }
        }
        pairs = next_pairs;
    }

    let circles: BTreeMap<VertexId, crate::geometry::Circle> = target
        .vertex_ids()
        .map(|tv| (tv, p.circles[&phi[&tv]]))
        .collect();
    let anchors = packer::default_anchor_edges(&target);
    let out = CirclePacking {
        complex: target,
        circles,
        hubs: BTreeMap::new(),
        anchors,
        residual: p.residual,
        tangency_error: p.tangency_error,
    };
    Ok(packer::mobius_normalize(&out, &anchors)?)
}

/// Renormalization contraction experiment: two packings of the level-n graph
/// with the same external class but different interior depth (the direct
/// packing, and the level-n restriction of the level-(n+1) packing) are
/// renormalized along the word; the distance series contracts.
pub fn renorm_contraction(
    rule: &SubdivisionRule,
    polygon: &str,
    w: &FaceWord,
    depth: usize,
    level: u32,
    opts: &ExperimentOptions,
) -> Result<ConvergenceReport, MetricsError> {
    check_prereqs(rule, opts)?;
    if depth as u32 >= level {
        return Err(MetricsError::WordTooLong { word: depth, level });
    }
    let target = Target::Polygon(polygon.to_string());
    let complexes = vec![build_complex(rule, &target, level)?, build_complex(rule, &target, level + 1)?];
    let packed = pack_batch(complexes, &opts.pack, opts.jobs)?;
    let p = packed[0].0.clone();
    let p_deep = packer::extract_subpacking(&packed[1].0, level)?;
    let mut levels_out = Vec::new();
    let mut distances = Vec::new();
    let mut runtimes = Vec::new();
    for k in 1..=depth {
        let start = Instant::now();
        let wk = w.cycled(k);
        let a = renormalize(rule, &p, &wk)?;
        let b = renormalize(rule, &p_deep, &wk)?;
        let anchors = a.anchors;
        levels_out.push(k as u32);
        distances.push(sup_distance(&a, &b, &anchors)?);
        runtimes.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let fit = fit_decay(&levels_out, &distances);
    Ok(ConvergenceReport {
        label: format!("renorm depth={depth} level={level}"),
        levels: levels_out,
        distances,
        runtimes_ms: runtimes,
        delta: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.1),
        c_estimate: fit.map(|f| f.2),
    })
}

/// Scaling-factor measurement at a periodic face word.
#[derive(Debug, Clone)]
pub struct MultiplierReport {
    pub map: MobiusMap,
    pub dynamics: MobiusDynamics,
    /// Multiplier recomputed one level deeper.
    pub mu_next: Complex64,
    pub relative_drift: f64,
}

/// The Möbius map carrying the period-end sub-face's anchor tangencies onto
/// the polygon's anchor tangencies, with its classification and multiplier.
/// Recomputes at `level + 1` and reports the relative drift; errors as
/// unstable when the drift exceeds `stability_tol`.
pub fn periodic_multiplier(
    rule: &SubdivisionRule,
    polygon: &str,
    w: &FaceWord,
    level: u32,
    stability_tol: f64,
    opts: &ExperimentOptions,
) -> Result<MultiplierReport, MetricsError> {
    check_prereqs(rule, opts)?;
    // the word must return to the start polygon
    let mut ty = rule.type_index(polygon)?;
    for (step, &choice) in w.0.iter().enumerate() {
        let faces = &rule.templates[ty].faces;
        if choice >= faces.len() {
            return Err(MetricsError::InvalidChoice { step, face: choice });
        }
        ty = faces[choice].assignments[0].type_index;
    }
    if rule.polygons[ty].name != polygon {
        return Err(MetricsError::NotPeriodic {
            expected: polygon.to_string(),
            got: rule.polygons[ty].name.clone(),
        });
    }
    let phi_at = |n: u32| -> Result<MobiusMap, MetricsError> {
        let c = iterate(rule, polygon, n, &Chooser::default())?;
        let p = packer::pack(&c, &opts.pack)?;
        let (a1, a2, a3) = p.anchor_points()?;
        let chain = face_chain(&p, w)?;
        let &(m, fi) = chain.last().unwrap();
        let face = &p.complex.levels()[m as usize].faces[fi];
        let sub = |i: usize, j: usize| p.tangency(face.walk[i], face.walk[j]);
        // anchors sit on the first boundary positions by construction
        let b1 = sub(0, 1)?;
        let b2 = sub(1, 2)?;
        let b3 = sub(2, 3 % face.walk.len())?;
        Ok(MobiusMap::from_three_points((b1, b2, b3), (a1, a2, a3))?)
    };
    if (w.len() as u32) >= level {
        return Err(MetricsError::WordTooLong { word: w.len(), level });
    }
    let map = phi_at(level)?;
    let map_next = phi_at(level + 1)?;
    let dynamics = geometry::classify_and_multiplier(&map);
    let dynamics_next = geometry::classify_and_multiplier(&map_next);
    let mu = dynamics.multiplier;
    let mu_next = dynamics_next.multiplier;
    let rel = (mu_next - mu).norm() / mu.norm().max(1e-30);
    if rel > stability_tol {
        return Err(MetricsError::Unstable { mu_lo: mu, mu_hi: mu_next, rel });
    }
    Ok(MultiplierReport { map, dynamics, mu_next, relative_drift: rel })
}

/// Minimum, over the boundary circles of a face, of the fraction of the
/// circle fronting the face's interstice: the arc between the tangencies with
/// the cyclically adjacent boundary circles, divided by the circumference.
/// A normalization-free witness of how pinched the face is becoming.
pub fn arc_lower_bound(p: &CirclePacking, face_level: u32, face_index: usize) -> Result<f64, MetricsError> {
    let faces = p
        .complex
        .faces_at(face_level)
        .ok_or(MetricsError::WordTooLong { word: face_level as usize, level: p.complex.level() })?;
    let face = &faces[face_index];
    let walk: Vec<VertexId> = if face.mirrored {
        face.walk.iter().rev().copied().collect()
    } else {
        face.walk.clone()
    };
    let n = walk.len();
    let mut min_fraction = f64::INFINITY;
    for i in 0..n {
        let prev = walk[(i + n - 1) % n];
        let v = walk[i];
        let next = walk[(i + 1) % n];
        let circle = p.circles.get(&v).ok_or(MetricsError::MarkingMismatch)?;
        let center = circle.center().ok_or(MetricsError::MarkingMismatch)?;
        if circle.curvature <= 0.0 {
            return Err(MetricsError::MarkingMismatch);
        }
        let t_in = p.tangency(prev, v)?;
        let t_out = p.tangency(v, next)?;
        let a_in = (t_in - center).arg();
        let a_out = (t_out - center).arg();
        // the interstice of a counterclockwise face lies to the left of the
        // walk, so the fronting arc runs clockwise from the incoming tangency
        // to the outgoing one
        let sweep = (a_in - a_out).rem_euclid(2.0 * std::f64::consts::PI);
        min_fraction = min_fraction.min(sweep / (2.0 * std::f64::consts::PI));
    }
    Ok(min_fraction)
}

/// True when the two reports witness opposite behaviors; used by degeneration
/// diagnostics.
pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn pack_level(rule: &SubdivisionRule, polygon: &str, n: u32) -> CirclePacking {
        let c = iterate(rule, polygon, n, &Chooser::default()).unwrap();
        packer::pack(&c, &PackOptions::default()).unwrap()
    }

    #[test]
    fn sup_distance_of_packing_with_itself_is_zero() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 1);
        let d = sup_distance(&p, &p, &p.anchors.clone()).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn sup_distance_ignores_mobius_motion() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 1);
        let m = MobiusMap::new(
            Complex64::new(0.9, 0.2),
            Complex64::new(0.1, -0.3),
            Complex64::new(0.02, 0.01),
            Complex64::new(1.1, 0.0),
        )
        .unwrap();
        let q = p.transformed(&m);
        let d = sup_distance(&p, &q, &p.anchors.clone()).unwrap();
        assert!(d < 1e-10, "distance {d}");
    }

    #[test]
    fn sup_distance_sees_perturbations() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 1);
        let mut q = p.clone();
        // perturb one non-anchor circle
        let v = VertexId(6);
        let c = q.circles[&v];
        let center = c.center().unwrap();
        let r = c.radius().unwrap();
        q.circles.insert(v, crate::geometry::Circle::from_center_radius(center, r * 1.01));
        let d = sup_distance(&p, &q, &p.anchors.clone()).unwrap();
        assert!(d > 1e-5 && d < 0.2, "distance {d}");
    }

    #[test]
    fn sup_distance_is_a_pseudometric_on_fixtures() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 1);
        let perturbed = |eps: f64| {
            let mut q = p.clone();
            let v = VertexId(7);
            let c = q.circles[&v];
            q.circles.insert(
                v,
                crate::geometry::Circle::from_center_radius(c.center().unwrap(), c.radius().unwrap() * (1.0 + eps)),
            );
            q
        };
        let a = perturbed(0.01);
        let b = perturbed(-0.015);
        let anchors = p.anchors;
        let dab = sup_distance(&a, &b, &anchors).unwrap();
        let dba = sup_distance(&b, &a, &anchors).unwrap();
        assert!((dab - dba).abs() < 1e-10);
        let dap = sup_distance(&a, &p, &anchors).unwrap();
        let dpb = sup_distance(&p, &b, &anchors).unwrap();
        assert!(dab <= dap + dpb + 1e-10);
    }

    #[test]
    fn marking_mismatch_is_reported() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 1);
        let deeper = pack_level(&rule, "Q", 2);
        assert!(matches!(
            sup_distance(&p, &deeper, &p.anchors.clone()),
            Err(MetricsError::MarkingMismatch)
        ));
    }

    #[test]
    fn converge_on_sphere_double_is_numerically_exact() {
        let rule = fixtures::apollonian();
        let report =
            converge_experiment(&rule, &Target::Sphere, 1, 1..=3, &ExperimentOptions::default()).unwrap();
        for d in &report.distances {
            assert!(*d < 1e-8, "distances {:?}", report.distances);
        }
    }

    #[test]
    fn converge_is_exact_for_the_symmetric_inner_square() {
        // every quad face of the symmetric rule is filled symmetrically at
        // every depth, which pins its modulus: the tower is a fixed point and
        // the finite approximations agree to solver precision
        let rule = fixtures::inner_square();
        let report = converge_experiment(
            &rule,
            &Target::Polygon("Q".into()),
            1,
            1..=3,
            &ExperimentOptions::default(),
        )
        .unwrap();
        for d in &report.distances {
            assert!(*d < 1e-8, "{:?}", report.distances);
        }
    }

    #[test]
    fn converge_decreases_for_skew_square() {
        let rule = fixtures::skew_square();
        let report = converge_experiment(
            &rule,
            &Target::Polygon("Q".into()),
            1,
            1..=3,
            &ExperimentOptions::default(),
        )
        .unwrap();
        assert!(strictly_decreasing(&report.distances), "{:?}", report.distances);
        assert!(report.distances[0] > 1e-7, "skew rule must move measurably");
    }

    #[test]
    fn converge_rejects_cylindrical_rules() {
        let rule = fixtures::pillow();
        assert!(matches!(
            converge_experiment(&rule, &Target::Polygon("Q".into()), 1, 1..=2, &ExperimentOptions::default()),
            Err(MetricsError::PrerequisiteFailed(_))
        ));
    }

    #[test]
    fn renormalize_empty_word_reproduces_extraction() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 2);
        let r = renormalize(&rule, &p, &FaceWord(vec![])).unwrap();
        let direct = packer::extract_subpacking(&p, 2).unwrap();
        let direct = packer::mobius_normalize(&direct, &direct.anchors.clone()).unwrap();
        assert_eq!(r.circles.len(), direct.circles.len());
        for (v, c) in &r.circles {
            let d = geometry::spherical_hausdorff(c, &direct.circles[v]);
            assert!(d < 1e-10, "vertex {v}: {d}");
        }
    }

    #[test]
    fn renormalize_central_word_re_marks_as_square() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 3);
        let r = renormalize(&rule, &p, &FaceWord(vec![8])).unwrap();
        // the central face is a square; its sub-packing is a level-2 square packing
        assert_eq!(r.complex.level(), 2);
        let root = &r.complex.levels()[0].faces[0];
        assert_eq!(root.type_tag.as_deref(), Some("Q"));
        assert_eq!(r.circles.len(), 20);
    }

    #[test]
    fn renormalize_rejects_bad_words() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 2);
        assert!(matches!(
            renormalize(&rule, &p, &FaceWord(vec![8, 8, 8])),
            Err(MetricsError::WordTooLong { .. })
        ));
        assert!(matches!(
            renormalize(&rule, &p, &FaceWord(vec![77])),
            Err(MetricsError::InvalidChoice { .. })
        ));
    }

    #[test]
    fn renorm_contraction_identical_inputs_are_zero() {
        let rule = fixtures::inner_square();
        let p = pack_level(&rule, "Q", 3);
        let a = renormalize(&rule, &p, &FaceWord(vec![8])).unwrap();
        let d = sup_distance(&a, &a, &a.anchors.clone()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn multiplier_rejects_non_periodic_words() {
        let rule = fixtures::inner_square();
        // face 0 of the square template is a triangle: word [0] is not periodic
        let err = periodic_multiplier(&rule, "Q", &FaceWord(vec![0]), 4, 1.0, &ExperimentOptions::default());
        assert!(matches!(err, Err(MetricsError::NotPeriodic { .. })));
    }

    #[test]
    fn apollonian_corner_word_is_parabolic_at_moderate_level() {
        let rule = fixtures::apollonian();
        let report =
            periodic_multiplier(&rule, "T", &FaceWord(vec![0]), 5, 1.0, &ExperimentOptions::default()).unwrap();
        assert!(
            (report.dynamics.trace_sq - 4.0).norm() < 1e-4,
            "trace² = {}",
            report.dynamics.trace_sq
        );
    }

    #[test]
    fn arc_lower_bound_is_positive_for_triangle_faces() {
        let rule = fixtures::apollonian();
        let p = pack_level(&rule, "T", 2);
        let v = arc_lower_bound(&p, 1, 0).unwrap();
        assert!(v > 0.0 && v < 1.0, "fraction {v}");
    }

    #[test]
    fn fit_decay_recovers_synthetic_ratio() {
        let levels: Vec<u32> = (1..=6).collect();
        let distances: Vec<f64> = levels.iter().map(|&n| 3.0 * 0.42f64.powi(n as i32)).collect();
        let (delta, rms, c) = fit_decay(&levels, &distances).unwrap();
        assert!((delta - 0.42).abs() < 1e-12);
        assert!(rms < 1e-12);
        assert!((c - 3.0).abs() < 1e-9);
    }
}
