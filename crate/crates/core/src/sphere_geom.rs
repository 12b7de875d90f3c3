//! Geometry on the unit sphere: points, caps, mesh norms, point-set
//! generators and stereographic projection.
//!
//! All distances are Euclidean chord lengths `|x - y|`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A vector in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere. The constructor normalizes its input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct UnitVector(Vec3);

impl UnitVector {
    pub const E1: UnitVector = UnitVector(Vec3::new(1.0, 0.0, 0.0));
    pub const E2: UnitVector = UnitVector(Vec3::new(0.0, 1.0, 0.0));
    pub const E3: UnitVector = UnitVector(Vec3::new(0.0, 0.0, 1.0));

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(x, y, z))
    }

    pub fn from_vec(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(UnitVector(v * (1.0 / n)))
    }

    /// Colatitude `theta` in [0, pi], longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        UnitVector(Vec3::new(s * phi.cos(), s * phi.sin(), theta.cos()))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, o: UnitVector) -> f64 {
        self.0.dot(o.0)
    }

    /// Inner product clamped to [-1, 1].
    pub fn cos_angle(self, o: UnitVector) -> f64 {
        self.dot(o).clamp(-1.0, 1.0)
    }

    pub fn distance(self, o: UnitVector) -> f64 {
        (self.0 - o.0).norm()
    }

    pub fn angle(self, o: UnitVector) -> f64 {
        // atan2 form stays accurate for nearly (anti)parallel vectors
        self.0.cross(o.0).norm().atan2(self.0.dot(o.0))
    }

    pub fn theta(self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).acos()
    }

    /// Longitude in [0, 2pi).
    pub fn phi(self) -> f64 {
        let p = self.0.y.atan2(self.0.x);
        if p < 0.0 {
            p + 2.0 * PI
        } else {
            p
        }
    }

    pub fn antipode(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> [f64; 3] {
        u.0.to_array()
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        UnitVector::new(a[0], a[1], a[2])
    }
}

/// Right-handed orthonormal frame `(e1, e2, pole)`. For the north pole this
/// is the standard basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub pole: UnitVector,
}

impl Frame {
    pub fn new(pole: UnitVector) -> Self {
        let c = pole.vec();
        let a = if c.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let e1 = a - c * a.dot(c);
        let e1 = e1 * (1.0 / e1.norm());
        let e2 = c.cross(e1);
        Frame { e1, e2, pole }
    }

    /// Point with polar angle `theta` from the pole and azimuth `phi`.
    pub fn point(&self, theta: f64, phi: f64) -> UnitVector {
        let (s, c) = theta.sin_cos();
        self.point_tc(c, s, phi)
    }

    /// Same as [`Frame::point`] with `t = cos(theta)` and `s = sin(theta)` given.
    pub fn point_tc(&self, t: f64, s: f64, phi: f64) -> UnitVector {
        let (sp, cp) = phi.sin_cos();
        let v = self.e1 * (s * cp) + self.e2 * (s * sp) + self.pole.vec() * t;
        UnitVector(v * (1.0 / v.norm()))
    }

    /// Local coordinates `(a, b, c)` with respect to `(e1, e2, pole)`.
    pub fn local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.e1), v.dot(self.e2), v.dot(self.pole.vec()))
    }

    pub fn global(&self, l: Vec3) -> Vec3 {
        self.e1 * l.x + self.e2 * l.y + self.pole.vec() * l.z
    }
}

/// Open spherical cap `{y : c . y > 1 - rho}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    pub center: UnitVector,
    pub polar_radius: f64,
}

impl SphericalCap {
    pub fn new(center: UnitVector, polar_radius: f64) -> Result<Self> {
        if !(polar_radius > 0.0 && polar_radius <= 2.0) {
            return Err(invalid(format!(
                "cap polar radius must lie in (0, 2], got {polar_radius}"
            )));
        }
        Ok(SphericalCap { center, polar_radius })
    }

    pub fn contains(&self, y: UnitVector) -> bool {
        self.center.dot(y) > 1.0 - self.polar_radius
    }

    /// Angular radius `arccos(1 - rho)`.
    pub fn angular_radius(&self) -> f64 {
        (1.0 - self.polar_radius).clamp(-1.0, 1.0).acos()
    }

    pub fn area(&self) -> f64 {
        2.0 * PI * self.polar_radius
    }
}

/// Open Euclidean ball `{y : |c - y| < r}` intersected with the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanSphereBall {
    pub center: UnitVector,
    pub radius: f64,
}

impl EuclideanSphereBall {
    pub fn contains(&self, y: UnitVector) -> bool {
        self.center.distance(y) < self.radius
    }

    /// The ball as a cap: `|c - y|^2 = 2 - 2 c.y`, so `rho = r^2 / 2`.
    pub fn equivalent_cap(&self) -> Result<SphericalCap> {
        SphericalCap::new(self.center, (0.5 * self.radius * self.radius).min(2.0))
    }
}

/// A region of the sphere used for restriction and filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Sphere,
    Cap(SphericalCap),
    /// Complement of the closed cap.
    Complement(SphericalCap),
}

impl Domain {
    pub fn contains(&self, y: UnitVector) -> bool {
        match self {
            Domain::Sphere => true,
            Domain::Cap(c) => c.contains(y),
            Domain::Complement(c) => c.center.dot(y) < 1.0 - c.polar_radius,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Sphere => 4.0 * PI,
            Domain::Cap(c) => c.area(),
            Domain::Complement(c) => 4.0 * PI - c.area(),
        }
    }

    /// Whether the open cap of angular radius `alpha` around `x` lies inside
    /// the domain.
    fn contains_cap_of_angle(&self, x: UnitVector, alpha: f64) -> bool {
        match self {
            Domain::Sphere => true,
            Domain::Cap(c) => x.angle(c.center) + alpha <= c.angular_radius(),
            Domain::Complement(c) => x.angle(c.center) - alpha >= c.angular_radius(),
        }
    }

    /// Deterministic, roughly area-uniform probe points inside the domain.
    pub fn probe_points(&self, count: usize) -> Vec<UnitVector> {
        let (frame, t_hi, t_lo) = match self {
            Domain::Sphere => (Frame::new(UnitVector::E3), 1.0, -1.0),
            Domain::Cap(c) => (Frame::new(c.center), 1.0, 1.0 - c.polar_radius),
            Domain::Complement(c) => (Frame::new(c.center), 1.0 - c.polar_radius, -1.0),
        };
        spiral(count, t_lo, t_hi)
            .map(|(t, phi)| frame.point_tc(t, (1.0 - t * t).max(0.0).sqrt(), phi))
            .collect()
    }
}

fn spiral(count: usize, t_lo: f64, t_hi: f64) -> impl Iterator<Item = (f64, f64)> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    let n = count as f64;
    (0..count).map(move |i| {
        let t = t_hi - (t_hi - t_lo) * (i as f64 + 0.5) / n;
        (t, (golden_angle * i as f64).rem_euclid(2.0 * PI))
    })
}

/// Spherical Fibonacci lattice with `count` points.
pub fn fibonacci_points(count: usize) -> Vec<UnitVector> {
    Domain::Sphere.probe_points(count)
}

/// Uniform-grid bucket index for nearest-neighbour and radius queries.
pub struct SpatialIndex {
    points: Vec<UnitVector>,
    cell: f64,
    dim: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialIndex {
    pub fn new(points: &[UnitVector]) -> Self {
        let n = points.len().max(1) as f64;
        let cell = (2.0 * (4.0 * PI / n).sqrt()).clamp(0.02, 2.0);
        Self::with_cell(points, cell)
    }

    pub fn with_cell(points: &[UnitVector], cell: f64) -> Self {
        let dim = ((2.0 / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); dim * dim * dim];
        let mut idx = SpatialIndex {
            points: points.to_vec(),
            cell,
            dim,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let c = idx.cell_of(p.vec());
            buckets[idx.flat(c)].push(i as u32);
        }
        idx.buckets = buckets;
        idx
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    fn cell_of(&self, v: Vec3) -> [usize; 3] {
        let f = |a: f64| (((a + 1.0) / self.cell).floor().max(0.0) as usize).min(self.dim - 1);
        [f(v.x), f(v.y), f(v.z)]
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dim + c[1]) * self.dim + c[2]
    }

    fn visit_shell(&self, c: [usize; 3], r: usize, mut f: impl FnMut(usize)) {
        let lo = |a: usize| a.saturating_sub(r);
        let hi = |a: usize| (a + r).min(self.dim - 1);
        for i in lo(c[0])..=hi(c[0]) {
            for j in lo(c[1])..=hi(c[1]) {
                for k in lo(c[2])..=hi(c[2]) {
                    let d = i.abs_diff(c[0]).max(j.abs_diff(c[1])).max(k.abs_diff(c[2]));
                    if d != r {
                        continue;
                    }
                    for &p in &self.buckets[self.flat([i, j, k])] {
                        f(p as usize);
                    }
                }
            }
        }
    }

    /// Nearest indexed point to `q`, skipping index `skip`.
    pub fn nearest(&self, q: UnitVector, skip: Option<usize>) -> Option<(usize, f64)> {
        let c = self.cell_of(q.vec());
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.dim {
            self.visit_shell(c, r, |p| {
                if Some(p) == skip {
                    return;
                }
                let d = self.points[p].distance(q);
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((p, d));
                }
            });
            if let Some((_, b)) = best {
                if b <= r as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }

    /// Indices of all points with `|p - q| < radius`.
    pub fn within(&self, q: UnitVector, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let c = self.cell_of(q.vec());
        let rings = (radius / self.cell).ceil() as usize;
        for r in 0..=rings.min(self.dim) {
            self.visit_shell(c, r, |p| {
                if self.points[p].distance(q) < radius {
                    out.push(p);
                }
            });
        }
    }
}

/// Default probe count used for mesh-width estimates of `n` nodes.
pub fn default_probes(n: usize) -> usize {
    (40 * n).max(1000)
}

/// Mesh width `sup_{x in domain} min_{y in X, y in domain} |x - y|`,
/// estimated over `probes` deterministic probe points in the domain.
pub fn mesh_width(points: &[UnitVector], domain: &Domain, probes: usize) -> Result<f64> {
    if probes < 1000 {
        return Err(invalid("mesh width needs at least 1000 probes"));
    }
    let inside: Vec<UnitVector> = points.iter().copied().filter(|p| domain.contains(*p)).collect();
    if inside.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let index = SpatialIndex::new(&inside);
    let mut h: f64 = 0.0;
    for p in domain.probe_points(probes) {
        if let Some((_, d)) = index.nearest(p, None) {
            h = h.max(d);
        }
    }
    Ok(h)
}

/// Separation radius: half the minimal pairwise distance.
pub fn separation_radius(points: &[UnitVector]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let index = SpatialIndex::new(points);
    let mut q = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        if let Some((_, d)) = index.nearest(*p, Some(i)) {
            q = q.min(d);
        }
    }
    Ok(0.5 * q)
}

/// Keep points `x` whose cap `C_rho(x)` lies inside the domain.
pub fn filter_cap_interior(points: &[UnitVector], domain: &Domain, rho: f64) -> Vec<UnitVector> {
    let alpha = (1.0 - rho).clamp(-1.0, 1.0).acos();
    points
        .iter()
        .copied()
        .filter(|x| domain.contains_cap_of_angle(*x, alpha))
        .collect()
}

/// Keep points `x` whose Euclidean ball of radius `delta` (on the sphere)
/// lies inside the domain.
pub fn filter_ball_interior(points: &[UnitVector], domain: &Domain, delta: f64) -> Vec<UnitVector> {
    filter_cap_interior(points, domain, (0.5 * delta * delta).min(2.0))
}

/// Stereographic projection from `pole` onto the plane through the origin
/// orthogonal to it, in the coordinates of [`Frame::new`]. The antipode maps
/// to the origin and the great circle orthogonal to the pole to the unit
/// circle.
pub fn stereographic(p: UnitVector, pole: UnitVector) -> Result<(f64, f64)> {
    let denom = 1.0 - p.dot(pole);
    if denom <= 1e-14 {
        return Err(Error::ProjectionAtPole);
    }
    let f = Frame::new(pole);
    Ok((p.vec().dot(f.e1) / denom, p.vec().dot(f.e2) / denom))
}

pub fn inverse_stereographic(u: f64, v: f64, pole: UnitVector) -> UnitVector {
    let f = Frame::new(pole);
    let r2 = u * u + v * v;
    let w = f.e1 * u + f.e2 * v;
    let x = (w * 2.0 + pole.vec() * (r2 - 1.0)) * (1.0 / (r2 + 1.0));
    UnitVector(x * (1.0 / x.norm()))
}

/// A finite node set with its full-sphere mesh width and separation radius.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<UnitVector>,
    mesh_width: f64,
    separation: f64,
}

impl PointSet {
    pub fn new(points: Vec<UnitVector>) -> Result<Self> {
        let separation = separation_radius(&points)?;
        if separation <= 0.0 {
            return Err(invalid("point set contains duplicate points"));
        }
        let mesh_width = mesh_width(&points, &Domain::Sphere, default_probes(points.len()))?;
        Ok(PointSet {
            points,
            mesh_width,
            separation,
        })
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh_width(&self) -> f64 {
        self.mesh_width
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }
}

/// Nested-scale point sets `X_1, X_2, ...` with
/// `q_n <= h_n <= c2 q_n` and `c1 gamma h_n <= h_{n+1} <= gamma h_n`.
#[derive(Debug, Clone)]
pub struct HierarchicalPointSets {
    levels: Vec<PointSet>,
    gamma: f64,
    c1: f64,
    c2: f64,
}

/// Constants of the quasi-uniformity and level-ratio constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyParams {
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            gamma: 0.5,
            c1: 0.5,
            c2: 4.0,
        }
    }
}

impl HierarchicalPointSets {
    /// Fibonacci levels with `count_n = ceil(count1 / gamma^(2(n-1)))`. A
    /// level whose mesh width misses `h_{n+1} <= gamma h_n` is enlarged by 2%
    /// steps until it fits.
    pub fn fibonacci(count1: usize, levels: usize, params: HierarchyParams) -> Result<Self> {
        if count1 < 2 || levels == 0 {
            return Err(invalid("need count1 >= 2 and at least one level"));
        }
        if !(params.gamma > 0.0 && params.gamma < 1.0) {
            return Err(invalid("gamma must lie in (0, 1)"));
        }
        let mut sets: Vec<PointSet> = Vec::with_capacity(levels);
        for n in 0..levels {
            let mut count = (count1 as f64 / params.gamma.powi(2 * n as i32)).ceil() as usize;
            let mut set = PointSet::new(fibonacci_points(count))?;
            if let Some(prev) = sets.last() {
                let target = params.gamma * prev.mesh_width();
                let mut tries = 0;
                while set.mesh_width() > target {
                    tries += 1;
                    if tries > 50 {
                        return Err(Error::Hierarchy(format!(
                            "level {} cannot reach mesh width {target}",
                            n + 1
                        )));
                    }
                    count = (count as f64 * 1.02).ceil() as usize;
                    set = PointSet::new(fibonacci_points(count))?;
                }
            }
            sets.push(set);
        }
        Self::from_levels(sets, params)
    }

    /// Validates the constraints for caller-supplied levels.
    pub fn from_levels(levels: Vec<PointSet>, params: HierarchyParams) -> Result<Self> {
        for (i, l) in levels.iter().enumerate() {
            let (h, q) = (l.mesh_width(), l.separation());
            if !(q <= h && h <= params.c2 * q) {
                return Err(Error::Hierarchy(format!(
                    "level {}: quasi-uniformity fails (h = {h}, q = {q})",
                    i + 1
                )));
            }
        }
        for (i, w) in levels.windows(2).enumerate() {
            let (h0, h1) = (w[0].mesh_width(), w[1].mesh_width());
            if !(params.c1 * params.gamma * h0 <= h1 && h1 <= params.gamma * h0) {
                return Err(Error::Hierarchy(format!(
                    "levels {}-{}: ratio h_(n+1)/h_n = {} outside [{}, {}]",
                    i + 1,
                    i + 2,
                    h1 / h0,
                    params.c1 * params.gamma,
                    params.gamma
                )));
            }
        }
        Ok(HierarchicalPointSets {
            levels,
            gamma: params.gamma,
            c1: params.c1,
            c2: params.c2,
        })
    }

    pub fn levels(&self) -> &[PointSet] {
        &self.levels
    }

    /// Level `n`, one-based.
    pub fn level(&self, n: usize) -> Option<&PointSet> {
        n.checked_sub(1).and_then(|i| self.levels.get(i))
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn params(&self) -> HierarchyParams {
        HierarchyParams {
            gamma: self.gamma,
            c1: self.c1,
            c2: self.c2,
        }
    }
}

/// Writes `x,y,z` rows with 17 significant digits.
pub fn write_points_csv<W: Write>(mut w: W, points: &[UnitVector]) -> std::io::Result<()> {
    writeln!(w, "x,y,z")?;
    for p in points {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", p.x(), p.y(), p.z())?;
    }
    Ok(())
}

/// Reads the format of [`write_points_csv`]. Lines starting with `#` are
/// skipped.
pub fn read_points_csv<R: BufRead>(r: R) -> Result<Vec<UnitVector>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| invalid(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
        if vals.len() != 3 {
            return Err(invalid(format!("line {}: expected 3 columns", i + 1)));
        }
        let v = Vec3::new(vals[0], vals[1], vals[2]);
        // keep already-normalized input bit for bit
        if (v.norm() - 1.0).abs() < 1e-15 {
            out.push(UnitVector(v));
        } else {
            out.push(UnitVector::from_vec(v)?);
        }
    }
    Ok(out)
}
