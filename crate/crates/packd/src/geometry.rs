//! Circles and lines in inversive coordinates, Möbius maps, cross-ratios,
//! tangency, and the Descartes quadruple residual.
//!
//! An oriented circle is stored as the triple `(k, k̂, k·c)` where `k` is the
//! curvature (negative when the designated disk is the exterior, zero for
//! lines), `k̂` the co-curvature, and `k·c` the curvature-scaled center. The
//! Lorentz normalization `|k·c|² − k·k̂ = 1` holds for every valid value, and
//! Möbius maps act linearly on the associated Hermitian matrix
//! `[[k, −kc], [−conj(kc), k̂]]`.

use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance for two circles to count as tangent.
pub const TANGENCY_TOL: f64 = 1e-8;
/// Tolerance on `|trace² − 4|` below which a Möbius map is classified parabolic.
pub const PARABOLIC_TOL: f64 = 1e-6;

const LORENTZ_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("triple of sphere points is degenerate")]
    DegenerateTriple,
    #[error("circles are not tangent (inversive product {0})")]
    NotTangent(f64),
    #[error("matrix is singular")]
    Singular,
}

/// Point of the Riemann sphere; infinity is `Complex64` with an infinite part.
pub type SpherePoint = Complex64;

pub fn is_infinite(z: SpherePoint) -> bool {
    z.re.is_infinite() || z.im.is_infinite()
}

pub const INFINITY: SpherePoint = Complex64::new(f64::INFINITY, 0.0);

/// Oriented circle (or line) in inversive coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    /// Curvature 1/r; negative when the disk is the exterior, zero for lines.
    pub curvature: f64,
    /// Co-curvature: curvature of the image under z ↦ 1/z.
    pub cocurvature: f64,
    /// Curvature times center; for lines, the unit normal pointing into the disk.
    pub curv_center: Complex64,
}

impl Circle {
    /// Circle of radius `r > 0` around `center`, oriented with the bounded disk
    /// as interior.
    pub fn from_center_radius(center: Complex64, r: f64) -> Circle {
        assert!(r > 0.0, "radius must be positive");
        let k = 1.0 / r;
        Circle {
            curvature: k,
            cocurvature: k * center.norm_sqr() - r,
            curv_center: center * k,
        }
        .renormalized()
    }

    /// Circle of radius `r > 0` around `center`, oriented with the unbounded
    /// complement as interior (curvature −1/r).
    pub fn exterior(center: Complex64, r: f64) -> Circle {
        let c = Circle::from_center_radius(center, r);
        Circle {
            curvature: -c.curvature,
            cocurvature: -c.cocurvature,
            curv_center: -c.curv_center,
        }
    }

    /// Line `{z : Re(conj(n)·z) = d}` with interior `{Re(conj(n)·z) > d}`;
    /// `n` must be a unit vector.
    pub fn line(n: Complex64, d: f64) -> Circle {
        Circle {
            curvature: 0.0,
            cocurvature: 2.0 * d,
            curv_center: n,
        }
        .renormalized()
    }

    pub fn is_line(&self) -> bool {
        self.curvature == 0.0
    }

    pub fn center(&self) -> Option<Complex64> {
        (self.curvature != 0.0).then(|| self.curv_center / self.curvature)
    }

    pub fn radius(&self) -> Option<f64> {
        (self.curvature != 0.0).then(|| 1.0 / self.curvature.abs())
    }

    /// Scales the coordinates back onto the Lorentz quadric. Panics if the
    /// vector is too degenerate to rescale.
    fn renormalized(self) -> Circle {
        let q = self.curv_center.norm_sqr() - self.curvature * self.cocurvature;
        assert!(q > 0.0, "inversive vector off the quadric: {q}");
        let s = 1.0 / q.sqrt();
        Circle {
            curvature: self.curvature * s,
            cocurvature: self.cocurvature * s,
            curv_center: self.curv_center * s,
        }
    }

    /// Lorentz norm defect; 0 for a valid oriented circle.
    pub fn lorentz_defect(&self) -> f64 {
        (self.curv_center.norm_sqr() - self.curvature * self.cocurvature - 1.0).abs()
    }

    pub fn assert_valid(&self) {
        debug_assert!(self.lorentz_defect() < 1e-9, "defect {}", self.lorentz_defect());
    }

    /// Hermitian matrix [[k, −kc], [−conj(kc), k̂]] whose zero set is the circle
    /// and whose negative set is the interior.
    fn hermitian(&self) -> [[Complex64; 2]; 2] {
        let b = -self.curv_center;
        [
            [Complex64::new(self.curvature, 0.0), b],
            [b.conj(), Complex64::new(self.cocurvature, 0.0)],
        ]
    }

    /// A projective sample point `[z, w]` strictly inside the disk.
    fn interior_sample(&self) -> [Complex64; 2] {
        if self.curvature > 0.0 {
            [self.curv_center / self.curvature, Complex64::new(1.0, 0.0)]
        } else if self.curvature < 0.0 {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            // one unit inward from the closest point of the line to the origin
            let n = self.curv_center;
            let d = self.cocurvature / 2.0;
            [n * (d + 1.0), Complex64::new(1.0, 0.0)]
        }
    }

    /// Value of the defining quadratic form at a projective point.
    fn form(&self, p: [Complex64; 2]) -> f64 {
        let h = self.hermitian();
        let hp = [h[0][0] * p[0] + h[0][1] * p[1], h[1][0] * p[0] + h[1][1] * p[1]];
        (p[0].conj() * hp[0] + p[1].conj() * hp[1]).re
    }

    /// Signed distance from a point to the circle along the plane metric; used
    /// only by tests and the renderer for containment heuristics.
    pub fn contains(&self, z: Complex64) -> bool {
        self.form([z, Complex64::new(1.0, 0.0)]) < 0.0
    }
}

/// Lorentz inner product of two oriented circles. Externally tangent circles
/// (disjoint interiors) have product −1; internally tangent ones +1.
pub fn inversive_product(c1: &Circle, c2: &Circle) -> f64 {
    (c1.curv_center * c2.curv_center.conj()).re
        - 0.5 * (c1.curvature * c2.cocurvature + c2.curvature * c1.cocurvature)
}

/// The common point of two tangent circles with disjoint interiors.
pub fn tangency_point(c1: &Circle, c2: &Circle) -> Result<SpherePoint, GeometryError> {
    let p = inversive_product(c1, c2);
    if (p + 1.0).abs() > TANGENCY_TOL * p.abs().max(1.0) {
        return Err(GeometryError::NotTangent(p));
    }
    let ks = c1.curvature + c2.curvature;
    let num = c1.curv_center + c2.curv_center;
    // the tangency sits at num/ks; when the curvatures cancel (two parallel
    // lines, or numerically indistinguishable from that) the point is ∞
    if ks.abs() <= 1e-9 * (1.0 + num.norm()) {
        return Ok(INFINITY);
    }
    Ok(num / ks)
}

/// Descartes circle theorem residual `(Σk)² − 2Σk²`; zero for four mutually
/// tangent circles.
pub fn descartes_residual(k1: f64, k2: f64, k3: f64, k4: f64) -> f64 {
    let s = k1 + k2 + k3 + k4;
    s * s - 2.0 * (k1 * k1 + k2 * k2 + k3 * k3 + k4 * k4)
}

/// Möbius transformation as a 2×2 complex matrix with determinant 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<MobiusMap, GeometryError> {
        let det = a * d - b * c;
        if det.norm() < 1e-30 {
            return Err(GeometryError::Singular);
        }
        let s = det.sqrt().inv();
        Ok(MobiusMap { a: a * s, b: b * s, c: c * s, d: d * s })
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn compose(&self, rhs: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn apply(&self, z: SpherePoint) -> SpherePoint {
        if is_infinite(z) {
            return if self.c.norm() == 0.0 { INFINITY } else { self.a / self.c };
        }
        let den = self.c * z + self.d;
        if den.norm() == 0.0 {
            return INFINITY;
        }
        (self.a * z + self.b) / den
    }

    /// Derivative at a finite point.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        (den * den).inv()
    }

    /// The unique map sending `z1, z2, z3` to `0, 1, ∞`.
    pub fn to_zero_one_inf(z1: SpherePoint, z2: SpherePoint, z3: SpherePoint) -> Result<MobiusMap, GeometryError> {
        if pair_close(z1, z2) || pair_close(z2, z3) || pair_close(z1, z3) {
            return Err(GeometryError::DegenerateTriple);
        }
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let (a, b, c, d) = if is_infinite(z1) {
            (zero, z2 - z3, one, -z3)
        } else if is_infinite(z2) {
            (one, -z1, one, -z3)
        } else if is_infinite(z3) {
            (one, -z1, zero, z2 - z1)
        } else {
            (z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))
        };
        MobiusMap::new(a, b, c, d)
    }

    /// The unique map sending one triple of distinct points to another.
    pub fn from_three_points(
        src: (SpherePoint, SpherePoint, SpherePoint),
        dst: (SpherePoint, SpherePoint, SpherePoint),
    ) -> Result<MobiusMap, GeometryError> {
        let ms = MobiusMap::to_zero_one_inf(src.0, src.1, src.2)?;
        let md = MobiusMap::to_zero_one_inf(dst.0, dst.1, dst.2)?;
        Ok(md.inverse().compose(&ms))
    }

    /// Image of an oriented circle; the interior maps to the interior.
    pub fn apply_to_circle(&self, circle: &Circle) -> Circle {
        let inv = self.inverse();
        let m = [[inv.a, inv.b], [inv.c, inv.d]];
        let h = circle.hermitian();
        // H' = Mᴴ H M with M the inverse map
        let mut hm = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hm[i][j] = h[i][0] * m[0][j] + h[i][1] * m[1][j];
            }
        }
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = m[0][i].conj() * hm[0][j] + m[1][i].conj() * hm[1][j];
            }
        }
        let k = out[0][0].re;
        let khat = out[1][1].re;
        let kc = -out[0][1];
        let det = k * khat - kc.norm_sqr();
        debug_assert!(det < 0.0, "image form became degenerate");
        let s = 1.0 / (-det).sqrt();
        let mut img = Circle { curvature: k * s, cocurvature: khat * s, curv_center: kc * s };
        // fix orientation: the image of an interior point stays interior
        let sample = circle.interior_sample();
        let mapped = [self.a * sample[0] + self.b * sample[1], self.c * sample[0] + self.d * sample[1]];
        if img.form(mapped) > 0.0 {
            img = Circle { curvature: -img.curvature, cocurvature: -img.cocurvature, curv_center: -img.curv_center };
        }
        img
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let n = MobiusMap::IDENTITY;
        let direct = (self.a - n.a).norm() + (self.b - n.b).norm() + (self.c - n.c).norm() + (self.d - n.d).norm();
        let negated = (self.a + n.a).norm() + (self.b + n.b).norm() + (self.c + n.c).norm() + (self.d + n.d).norm();
        direct.min(negated) < tol
    }
}

/// Cross-ratio: the value at `z` of the map sending `(z1, z2, z3)` to `(0, 1, ∞)`.
pub fn cross_ratio(z: SpherePoint, z1: SpherePoint, z2: SpherePoint, z3: SpherePoint) -> SpherePoint {
    match MobiusMap::to_zero_one_inf(z1, z2, z3) {
        Ok(m) => m.apply(z),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MobiusClass {
    Identity,
    Parabolic,
    Elliptic,
    Loxodromic,
}

/// Fixed-point and multiplier data of a Möbius map. For non-parabolic maps the
/// repelling fixed point comes first and the multiplier is the derivative
/// there, so `|multiplier| > 1` in the loxodromic case.
#[derive(Debug, Clone)]
pub struct MobiusDynamics {
    pub class: MobiusClass,
    pub fixed_points: Vec<SpherePoint>,
    pub multiplier: Complex64,
    pub trace_sq: Complex64,
}

pub fn classify_and_multiplier(m: &MobiusMap) -> MobiusDynamics {
    let one = Complex64::new(1.0, 0.0);
    let t = m.trace();
    let t2 = t * t;
    if m.is_identity(1e-12) {
        return MobiusDynamics { class: MobiusClass::Identity, fixed_points: vec![], multiplier: one, trace_sq: t2 };
    }
    if (t2 - 4.0).norm() < PARABOLIC_TOL {
        let fp = if m.c.norm() > 1e-14 {
            (m.a - m.d) / (2.0 * m.c)
        } else {
            INFINITY
        };
        return MobiusDynamics { class: MobiusClass::Parabolic, fixed_points: vec![fp], multiplier: one, trace_sq: t2 };
    }
    let class = if t2.im.abs() < PARABOLIC_TOL && t2.re >= 0.0 && t2.re < 4.0 {
        MobiusClass::Elliptic
    } else {
        MobiusClass::Loxodromic
    };
    // eigenvalues λ, 1/λ with |λ| ≥ 1
    let disc = (t2 - 4.0).sqrt();
    let l1 = (t + disc) / 2.0;
    let l2 = (t - disc) / 2.0;
    let lambda = if l1.norm() >= l2.norm() { l1 } else { l2 };
    let mu = lambda * lambda;
    let (rep, att) = if m.c.norm() > 1e-14 {
        // fixed point for eigenvalue λ is (λ − d)/c; the small eigenvalue gives
        // the repelling point
        let att = (lambda - m.d) / m.c;
        let rep = (lambda.inv() - m.d) / m.c;
        (rep, att)
    } else {
        let finite = m.b / (m.d - m.a);
        let d_at_finite = m.a / m.d;
        if d_at_finite.norm() >= 1.0 {
            (finite, INFINITY)
        } else {
            (INFINITY, finite)
        }
    };
    MobiusDynamics { class, fixed_points: vec![rep, att], multiplier: mu, trace_sq: t2 }
}

fn pair_close(a: SpherePoint, b: SpherePoint) -> bool {
    match (is_infinite(a), is_infinite(b)) {
        (true, true) => true,
        (true, false) | (false, true) => false,
        (false, false) => (a - b).norm() < 1e-12 * (1.0 + a.norm() + b.norm()),
    }
}

/// Representation of a circle as a spherical circle `{x ∈ S² : x·u = cos ρ}`.
#[derive(Debug, Clone, Copy)]
pub struct SphericalCircle {
    pub axis: [f64; 3],
    pub angular_radius: f64,
}

impl SphericalCircle {
    pub fn from_circle(c: &Circle) -> SphericalCircle {
        let m = [2.0 * c.curv_center.re, 2.0 * c.curv_center.im, c.cocurvature - c.curvature];
        let h = c.curvature + c.cocurvature;
        let norm = (4.0 + h * h).sqrt();
        SphericalCircle {
            axis: [m[0] / norm, m[1] / norm, m[2] / norm],
            angular_radius: (h / norm).clamp(-1.0, 1.0).acos(),
        }
    }
}

/// Hausdorff distance between two circles as subsets of the unit sphere, in
/// the spherical (geodesic) metric.
pub fn spherical_hausdorff(c1: &Circle, c2: &Circle) -> f64 {
    let s1 = SphericalCircle::from_circle(c1);
    let s2 = SphericalCircle::from_circle(c2);
    let dot = s1.axis[0] * s2.axis[0] + s1.axis[1] * s2.axis[1] + s1.axis[2] * s2.axis[2];
    let cross = [
        s1.axis[1] * s2.axis[2] - s1.axis[2] * s2.axis[1],
        s1.axis[2] * s2.axis[0] - s1.axis[0] * s2.axis[2],
        s1.axis[0] * s2.axis[1] - s1.axis[1] * s2.axis[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let d12 = cross_norm.atan2(dot);
    let sup = |rho_from: f64, rho_to: f64| -> f64 {
        let gamma_min = (d12 - rho_from).abs();
        let reach = d12 + rho_from;
        let gamma_max = if reach <= std::f64::consts::PI { reach } else { 2.0 * std::f64::consts::PI - reach };
        (gamma_min - rho_to).abs().max((gamma_max - rho_to).abs())
    };
    sup(s1.angular_radius, s2.angular_radius).max(sup(s2.angular_radius, s1.angular_radius))
}

/// Euclidean tolerance helpers shared by the packer and metrics tests.
pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn approx_lorentz_ok(c: &Circle) -> bool {
    c.lorentz_defect() < LORENTZ_TOL * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_circle_coordinates() {
        let c = Circle::from_center_radius(z(0.0, 0.0), 1.0);
        assert!((c.curvature - 1.0).abs() < 1e-15);
        assert!((c.cocurvature + 1.0).abs() < 1e-15);
        assert!(c.curv_center.norm() < 1e-15);
        assert!(c.lorentz_defect() < 1e-12);
    }

    #[test]
    fn line_coordinates() {
        // Im z = 1 with interior above
        let l = Circle::line(z(0.0, 1.0), 1.0);
        assert_eq!(l.curvature, 0.0);
        assert!((l.cocurvature - 2.0).abs() < 1e-15);
        assert!(l.contains(z(0.0, 2.0)));
        assert!(!l.contains(z(0.0, 0.0)));
    }

    #[test]
    fn tangency_two_unit_circles() {
        let c1 = Circle::from_center_radius(z(0.0, 0.0), 1.0);
        let c2 = Circle::from_center_radius(z(2.0, 0.0), 1.0);
        let t = tangency_point(&c1, &c2).unwrap();
        assert!((t - z(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tangency_unit_circle_and_horizontal_line() {
        let c = Circle::from_center_radius(z(0.0, 0.0), 1.0);
        let l = Circle::line(z(0.0, 1.0), 1.0);
        let t = tangency_point(&c, &l).unwrap();
        assert!((t - z(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn tangency_rejects_separated_circles() {
        let c1 = Circle::from_center_radius(z(0.0, 0.0), 1.0);
        let c2 = Circle::from_center_radius(z(3.0, 0.0), 1.0);
        assert!(matches!(tangency_point(&c1, &c2), Err(GeometryError::NotTangent(_))));
    }

    #[test]
    fn tangency_exterior_circle() {
        let outer = Circle::exterior(z(0.0, 0.0), 1.0);
        let inner = Circle::from_center_radius(z(0.5, 0.0), 0.5);
        assert!((inversive_product(&outer, &inner) + 1.0).abs() < 1e-12);
        let t = tangency_point(&outer, &inner).unwrap();
        assert!((t - z(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn descartes_examples() {
        assert_eq!(descartes_residual(-1.0, 2.0, 2.0, 3.0), 0.0);
        assert_eq!(descartes_residual(1.0, 1.0, 1.0, 1.0), 8.0);
        assert_eq!(descartes_residual(0.0, 0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn triple_map_identity() {
        let m = MobiusMap::from_three_points(
            (z(0.0, 0.0), z(1.0, 0.0), INFINITY),
            (z(0.0, 0.0), z(1.0, 0.0), INFINITY),
        )
        .unwrap();
        assert!(m.is_identity(1e-12));
    }

    #[test]
    fn triple_map_rotating_anchor_points() {
        // (0,1,∞) → (1,∞,0) is z ↦ 1/(1−z)
        let m = MobiusMap::from_three_points(
            (z(0.0, 0.0), z(1.0, 0.0), INFINITY),
            (z(1.0, 0.0), INFINITY, z(0.0, 0.0)),
        )
        .unwrap();
        for zz in [z(0.3, 0.4), z(-2.0, 1.0), z(5.0, -3.0)] {
            let expected = (z(1.0, 0.0) - zz).inv();
            assert!((m.apply(zz) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn triple_map_degenerate() {
        assert!(matches!(
            MobiusMap::from_three_points((z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)), (z(0.0, 0.0), z(1.0, 0.0), INFINITY)),
            Err(GeometryError::DegenerateTriple)
        ));
    }

    #[test]
    fn scaling_map_on_unit_circle() {
        let m = MobiusMap::new(z(2.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)).unwrap();
        let img = m.apply_to_circle(&Circle::from_center_radius(z(0.0, 0.0), 1.0));
        assert!((img.curvature - 0.5).abs() < 1e-12);
        assert!(img.center().unwrap().norm() < 1e-12);
    }

    #[test]
    fn inversion_maps_line_to_circle() {
        // z ↦ 1/z on the line Re z = 1 gives the circle through 0 and 1 of radius 1/2
        let m = MobiusMap::new(z(0.0, 0.0), z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0)).unwrap();
        let l = Circle::line(z(1.0, 0.0), 1.0);
        let img = m.apply_to_circle(&l);
        assert!((img.radius().unwrap() - 0.5).abs() < 1e-12);
        assert!((img.center().unwrap() - z(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn classify_translation_parabolic() {
        let m = MobiusMap::new(z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)).unwrap();
        let dyn_ = classify_and_multiplier(&m);
        assert_eq!(dyn_.class, MobiusClass::Parabolic);
        assert!(is_infinite(dyn_.fixed_points[0]));
        assert!((dyn_.multiplier - 1.0).norm() < 1e-12);
    }

    #[test]
    fn classify_doubling_loxodromic() {
        let m = MobiusMap::new(z(2.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)).unwrap();
        let dyn_ = classify_and_multiplier(&m);
        assert_eq!(dyn_.class, MobiusClass::Loxodromic);
        assert!((dyn_.multiplier - 2.0).norm() < 1e-12);
        // repelling fixed point is 0
        assert!(dyn_.fixed_points[0].norm() < 1e-12);
        assert!(is_infinite(dyn_.fixed_points[1]));
    }

    #[test]
    fn classify_order_three_elliptic() {
        // z ↦ 1/(1−z) has trace² = 1
        let m = MobiusMap::new(z(0.0, 0.0), z(1.0, 0.0), z(-1.0, 0.0), z(1.0, 0.0)).unwrap();
        let dyn_ = classify_and_multiplier(&m);
        assert_eq!(dyn_.class, MobiusClass::Elliptic);
        assert!((dyn_.trace_sq - 1.0).norm() < 1e-12);
        assert!((dyn_.multiplier.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplier_composition_law() {
        let m = MobiusMap::new(z(1.7, 0.3), z(0.2, -0.4), z(0.1, 0.05), z(0.9, -0.2)).unwrap();
        let d1 = classify_and_multiplier(&m);
        let d2 = classify_and_multiplier(&m.compose(&m));
        assert_eq!(d1.class, MobiusClass::Loxodromic);
        assert!((d2.multiplier - d1.multiplier * d1.multiplier).norm() < 1e-10 * d2.multiplier.norm());
    }

    #[test]
    fn hausdorff_of_equal_circles_is_zero() {
        let c = Circle::from_center_radius(z(0.3, -0.2), 0.7);
        assert!(spherical_hausdorff(&c, &c) < 1e-14);
    }

    #[test]
    fn hausdorff_detects_radius_change() {
        let c1 = Circle::from_center_radius(z(0.0, 0.0), 1.0);
        let c2 = Circle::from_center_radius(z(0.0, 0.0), 1.1);
        let d = spherical_hausdorff(&c1, &c2);
        assert!(d > 1e-3 && d < 0.2);
    }

    proptest! {
        #[test]
        fn cross_ratio_is_mobius_invariant(
            aa in -3.0f64..3.0, bb in -3.0f64..3.0, cc in -3.0f64..3.0, dd in -3.0f64..3.0,
            x in -2.0f64..2.0, y in -2.0f64..2.0,
        ) {
            let m = MobiusMap::new(z(1.0 + aa * 0.1, bb * 0.1), z(cc * 0.3, dd * 0.2), z(aa * 0.05, cc * 0.05), z(1.0, bb * 0.1));
            prop_assume!(m.is_ok());
            let m = m.unwrap();
            let p = z(x, y);
            let (z1, z2, z3) = (z(-1.0, 0.2), z(1.3, -0.4), z(0.1, 2.0));
            prop_assume!((p - z1).norm() > 1e-3 && (p - z3).norm() > 1e-3);
            let r1 = cross_ratio(p, z1, z2, z3);
            let r2 = cross_ratio(m.apply(p), m.apply(z1), m.apply(z2), m.apply(z3));
            if is_infinite(r1) || is_infinite(r2) {
                prop_assert!(is_infinite(r1) && is_infinite(r2));
            } else {
                prop_assert!((r1 - r2).norm() < 1e-8 * (1.0 + r1.norm()));
            }
        }

        #[test]
        fn circle_images_commute_with_point_action(
            cx in -2.0f64..2.0, cy in -2.0f64..2.0, r in 0.1f64..2.0,
            t in 0.0f64..6.28,
        ) {
            let m = MobiusMap::new(z(1.2, 0.1), z(0.3, -0.2), z(0.05, 0.1), z(1.0, 0.0)).unwrap();
            let c = Circle::from_center_radius(z(cx, cy), r);
            let img = m.apply_to_circle(&c);
            let p = c.center().unwrap() + Complex64::from_polar(r, t);
            let q = m.apply(p);
            // q must lie on the image circle
            let defect = img.form([q, z(1.0, 0.0)]).abs();
            prop_assert!(defect < 1e-9, "defect {}", defect);
        }
    }
}
