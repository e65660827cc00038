//! The boundary-polygon pipeline: direction validation, Weierstrass data
//! from a solved system, edge lengths by singularity-aware quadrature,
//! the length-ratio map, boundary measurement, and the end-to-end solve
//! that drives the ratios to a requested target.
//!
//! Indexing: a direction set D₁..D_{n+3} (stored 0-based) corresponds to
//! finite singularities t₁ < … < t_n < t_{n+1} = 0 < t_{n+2} = 1 and
//! t_{n+3} = ∞. Side i is the image of (tᵢ, tᵢ₊₁); sides n+2 and n+3 are
//! the images of (1, +∞) and (−∞, t₁).

use crate::error::Error;
use crate::fuchs::FuchsianSystem;
use crate::monodromy::{
    solve_riemann_hilbert, target_monodromy, RhOptions, SystemFrames,
};
use crate::quad::gauss_jacobi_cached;
use crate::rk::OdeOptions;
use crate::schlesinger::{flow, ParamPath};
use crate::spin3::{
    cr, half_turn_lift, lift_rotation, Mat2, RotationLift, Vec3, C,
};
use crate::tol;
use crate::weierstrass::{immerse, DataKind, ParamGrid, SurfaceMesh, SystemData, WeierstrassData};
use crate::Result;
use std::rc::Rc;

/// Oriented unit edge directions with their half-turn lifts, exterior
/// angles θᵢ ∈ (0, 1) (in units of π) and vertex normals.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub u: Vec<Vec3>,
    pub lifts: Vec<RotationLift>,
    pub theta: Vec<f64>,
    pub normals: Vec<Vec3>,
}

impl DirectionSet {
    pub fn n(&self) -> usize {
        self.u.len() - 3
    }

    /// θ values attached to the finite singularities t₁..t_{n+2} and ∞.
    pub fn theta_for_positions(&self) -> Vec<f64> {
        self.theta.clone()
    }

    /// The sub-direction-set obtained by removing the directions of the
    /// merged sides (used by the boundary-face continuity of the ratio
    /// map: sides p..n collapse, keeping D₁..D_{p−1}, D_{n+1..n+3}).
    pub fn collapse_tail(&self, p: usize) -> Result<DirectionSet> {
        let n = self.n();
        if p < 1 || p > n {
            return Err(Error::input("collapse index out of range"));
        }
        let mut dirs = Vec::new();
        for i in 0..p - 1 {
            dirs.push(self.u[i]);
        }
        dirs.push(self.u[n]);
        dirs.push(self.u[n + 1]);
        dirs.push(self.u[n + 2]);
        validate_directions(&dirs)
    }
}

/// Check both genericity conditions, compute angles, normals and lifts.
pub fn validate_directions(vectors: &[Vec3]) -> Result<DirectionSet> {
    let m = vectors.len();
    if m < 4 {
        return Err(Error::input(format!(
            "need at least 4 oriented directions (got {m})"
        )));
    }
    let n = m - 3;
    for (i, v) in vectors.iter().enumerate() {
        if (v.norm() - 1.0).abs() > tol::UNIT_VECTOR {
            return Err(Error::input(format!(
                "direction {} is not a unit vector",
                i + 1
            )));
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            if vectors[i].cross(&vectors[j]).norm() < 1e-8 {
                return Err(Error::input(format!(
                    "directions {} and {} are collinear",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    // Non-coplanar triples (Dᵢ, D_{n+1}, D_{n+2}) for i ≠ n+1, n+2.
    let a = &vectors[n];
    let b = &vectors[n + 1];
    for (i, v) in vectors.iter().enumerate() {
        if i == n || i == n + 1 {
            continue;
        }
        let det = v.dot(&a.cross(b));
        if det.abs() < 1e-8 {
            return Err(Error::input(format!(
                "directions ({}, {}, {}) are coplanar",
                i + 1,
                n + 1,
                n + 2
            )));
        }
    }
    let mut theta = Vec::with_capacity(m);
    let mut normals = Vec::with_capacity(m);
    let mut lifts = Vec::with_capacity(m);
    for i in 0..m {
        let prev = if i == 0 { m - 1 } else { i - 1 };
        let dot = vectors[prev].dot(&vectors[i]).clamp(-1.0, 1.0);
        theta.push(dot.acos() / std::f64::consts::PI);
        let cross = vectors[prev].cross(&vectors[i]);
        normals.push(cross.scale(-1.0).normalize()?);
        lifts.push(half_turn_lift(&vectors[i])?);
    }
    Ok(DirectionSet {
        u: vectors.to_vec(),
        lifts,
        theta,
        normals,
    })
}

/// A lift of some rotation sending `u` to +e₂.
pub fn lift_to_e2(u: &Vec3) -> Result<RotationLift> {
    let e2 = Vec3::new(0.0, 1.0, 0.0);
    let dot = u.dot(&e2).clamp(-1.0, 1.0);
    if 1.0 - dot < 1e-14 {
        return lift_rotation(&Vec3::new(1.0, 0.0, 0.0), 0.0);
    }
    if 1.0 + dot < 1e-14 {
        return half_turn_lift(&Vec3::new(1.0, 0.0, 0.0));
    }
    let axis = u.cross(&e2).normalize()?;
    lift_rotation(&axis, dot.acos())
}

// ---------------------------------------------------------------------
// Weierstrass data from a solved system.
// ---------------------------------------------------------------------

/// Build the aligned Weierstrass data of a boundary-value system:
/// the first row of Y∞(x)·C₀, multiplied by the phase λ₀ that makes it
/// real on (−∞, t₁) once rotated so that D_{n+3} points along e₂.
///
/// Returns the data together with the phase-alignment residual.
pub fn weierstrass_from_system(
    sys: &FuchsianSystem,
    dirs: &DirectionSet,
    c0: &Mat2,
) -> Result<(WeierstrassData, f64)> {
    let imag = c0
        .to_array()
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0f64, f64::max);
    if imag > 1e-8 * (1.0 + c0.norm()) {
        return Err(Error::input(format!(
            "conjugator C0 is not real (max imaginary part {imag:.3e})"
        )));
    }
    let frames = SystemFrames::prepare(sys, &OdeOptions::default())?;
    let n3 = dirs.u.len();
    let s_inf = lift_to_e2(&dirs.u[n3 - 1])?;
    // Probe points on (−∞, t₁).
    let t1 = sys.positions[0].re;
    let span = 1.0 + (sys.positions.last().unwrap().re - t1).abs();
    let probes = [t1 - 0.4 * span, t1 - 0.9 * span];
    let mut phases = Vec::new();
    for xp in probes {
        let row = frames.eval(cr(xp))?.mul(c0);
        let (g0, h0) = (row.e[0][0], row.e[0][1]);
        let p = &s_inf.matrix().e;
        let g = g0 * p[0][0] + h0 * p[1][0];
        let h = g0 * p[0][1] + h0 * p[1][1];
        let z = g * g + h * h;
        phases.push(-0.5 * z.arg());
    }
    // Consistency of the two probes modulo π.
    let d = C::from_polar(1.0, 2.0 * phases[0]) - C::from_polar(1.0, 2.0 * phases[1]);
    let residual = d.norm();
    let lambda0 = C::from_polar(1.0, phases[0]);
    let data = WeierstrassData {
        kind: DataKind::System(Rc::new(SystemData {
            frames,
            c0: *c0,
        })),
        base_point: cr(0.5), // midpoint of (t_{n+1}, t_{n+2}) = (0, 1)
        phase: lambda0,
        post: Mat2::identity(),
    };
    Ok((data, residual))
}

// ---------------------------------------------------------------------
// Edge lengths and the ratio map.
// ---------------------------------------------------------------------

/// Edge lengths ℓ₁..ℓ_{n+1} of the boundary polygon:
/// ℓᵢ = ∫_{tᵢ}^{tᵢ₊₁} (|G|² + |H|²) dx, with Gauss–Jacobi quadrature for
/// the |x−tᵢ|^{−θᵢ} endpoint behavior, node-doubling until relative
/// agreement. Returns the lengths and their error estimates.
pub fn edge_lengths(data: &WeierstrassData, theta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let DataKind::System(sd) = &data.kind else {
        return Err(Error::input(
            "edge lengths require system-backed Weierstrass data",
        ));
    };
    let sys = &sd.frames.sys;
    let n_int = sys.n_finite() - 1;
    if theta.len() < sys.n_finite() {
        return Err(Error::input("need one theta per finite singularity"));
    }
    let scale2 = data.phase.norm_sqr();
    let mut lengths = Vec::with_capacity(n_int);
    let mut errors = Vec::with_capacity(n_int);
    for s in 0..n_int {
        let a = sys.positions[s].re;
        let b = sys.positions[s + 1].re;
        let pa = theta[s];
        let pb = theta[s + 1];
        let mut prev: Option<f64> = None;
        let mut got = None;
        let mut nodes = 64usize;
        while nodes <= 4096 {
            let rule = gauss_jacobi_cached(nodes, -pb, -pa)?;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let xs: Vec<f64> = rule.nodes.iter().map(|u| mid + half * u).collect();
            let ys = sd
                .frames
                .eval_on_interval((s as isize, s as isize + 1), &xs)?;
            let mut sum = 0.0;
            for ((x, w), y) in xs.iter().zip(rule.weights.iter()).zip(ys.iter()) {
                let row = y.mul(&sd.c0);
                let f = row.e[0][0].norm_sqr() + row.e[0][1].norm_sqr();
                let smooth = f * (x - a).powf(pa) * (b - x).powf(pb);
                sum += w * smooth;
            }
            let val = scale2 * sum * half.powf(1.0 - pa - pb);
            if let Some(p) = prev {
                let err = (val - p).abs();
                if err <= tol::EDGE_QUAD_REL * val.abs().max(1e-300) {
                    got = Some((val, err));
                    break;
                }
            }
            prev = Some(val);
            nodes *= 2;
        }
        let (val, err) = got.ok_or_else(|| {
            Error::numeric(format!(
                "edge-length quadrature did not stabilize on interval {}",
                s + 1
            ))
        })?;
        if !(val > 0.0) {
            return Err(Error::numeric(format!(
                "edge length {} is not positive ({val})",
                s + 1
            )));
        }
        lengths.push(val);
        errors.push(err);
    }
    Ok((lengths, errors))
}

/// Length-ratio evaluation at one member of the isomonodromic family.
#[derive(Debug, Clone)]
pub struct LengthRatioReport {
    /// Free positions t₁..t_n.
    pub t: Vec<f64>,
    pub lengths: Vec<f64>,
    pub ratios: Vec<f64>,
    pub quad_errors: Vec<f64>,
}

/// Ratios rᵢ = ℓᵢ/ℓ_{n+1} for the system behind `data`.
pub fn length_ratio_f(dirs: &DirectionSet, data: &WeierstrassData) -> Result<LengthRatioReport> {
    let DataKind::System(sd) = &data.kind else {
        return Err(Error::input("ratio map requires system-backed data"));
    };
    let n = dirs.n();
    let (lengths, quad_errors) = edge_lengths(data, &dirs.theta)?;
    let denom = lengths[n];
    let ratios = lengths[..n].iter().map(|l| l / denom).collect();
    let t = sd.frames.sys.positions[..n].iter().map(|z| z.re).collect();
    Ok(LengthRatioReport {
        t,
        lengths,
        ratios,
        quad_errors,
    })
}

// ---------------------------------------------------------------------
// Boundary polygon measurement.
// ---------------------------------------------------------------------

/// Measured boundary polygon of a mesh.
#[derive(Debug, Clone)]
pub struct Polygon3 {
    /// Finite vertices a₁..a_{n+2}.
    pub vertices: Vec<Vec3>,
    pub vertex_at_infinity: bool,
    /// Extra vertex a_{n+3} when the terminal rays meet.
    pub closing_vertex: Option<Vec3>,
    /// Distance between the terminal rays (gap of the closing vertex).
    pub closure_defect: f64,
    /// Measured oriented side directions (n+3 of them).
    pub directions: Vec<Vec3>,
    /// Max angle (radians) between measured and prescribed directions.
    pub direction_angular_error: f64,
    /// Finite side lengths ℓ₁..ℓ_{n+1}.
    pub lengths: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest distance of a boundary sample from its fitted line,
    /// relative to the reference length ℓ_{n+1}.
    pub fit_residual: f64,
    /// Measured exterior angles in units of π.
    pub theta_measured: Vec<f64>,
}

fn fit_line(points: &[Vec3]) -> Result<(Vec3, Vec3, f64)> {
    if points.len() < 2 {
        return Err(Error::geometry("need at least two points to fit a line"));
    }
    let m = points.len() as f64;
    let mut mean = Vec3::new(0.0, 0.0, 0.0);
    for p in points {
        mean = mean.add(p);
    }
    mean = mean.scale(1.0 / m);
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = p.sub(&mean);
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += d.0[i] * d.0[j];
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut best = 0;
    for k in 1..3 {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    let dir = Vec3::new(
        eig.eigenvectors[(0, best)],
        eig.eigenvectors[(1, best)],
        eig.eigenvectors[(2, best)],
    )
    .normalize()?;
    let mut worst: f64 = 0.0;
    for p in points {
        let d = p.sub(&mean);
        let along = dir.scale(d.dot(&dir));
        worst = worst.max(d.sub(&along).norm());
    }
    Ok((mean, dir, worst))
}

fn line_intersection(p1: &Vec3, d1: &Vec3, p2: &Vec3, d2: &Vec3) -> (Vec3, f64, f64, f64) {
    // Closest points of two lines: returns midpoint, gap, and the two
    // line parameters.
    let r = p2.sub(p1);
    let a = d1.dot(d1);
    let b = d1.dot(d2);
    let c2 = d2.dot(d2);
    let d = d1.dot(&r);
    let e = d2.dot(&r);
    let den = a * c2 - b * b;
    let (s, t) = if den.abs() < 1e-14 {
        (0.0, 0.0)
    } else {
        ((d * c2 - e * b) / den, (d * b - e * a) / den)
    };
    let q1 = p1.add(&d1.scale(s));
    let q2 = p2.add(&d2.scale(t));
    let gap = q1.sub(&q2).norm();
    (q1.add(&q2).scale(0.5), gap, s, t)
}

/// Fit side lines to the tagged boundary vertices of a mesh, intersect
/// consecutive sides into polygon vertices, measure lengths, ratios,
/// direction errors, and detect a vertex at infinity.
pub fn boundary_polygon(mesh: &SurfaceMesh, dirs: &DirectionSet) -> Result<Polygon3> {
    let n = dirs.n();
    let n_sides = n + 3;
    let mut side_pts: Vec<Vec<(f64, Vec3)>> = vec![Vec::new(); n_sides];
    for (k, tag) in mesh.boundary_tags.iter().enumerate() {
        if let Some(side) = tag {
            let s = (*side as usize) - 1;
            if s >= n_sides {
                return Err(Error::input(format!("boundary tag {side} out of range")));
            }
            let v = mesh.vertices[k];
            side_pts[s].push((mesh.params[k].re, Vec3::new(v[0], v[1], v[2])));
        }
    }
    let mut lines = Vec::with_capacity(n_sides);
    let mut directions = Vec::with_capacity(n_sides);
    let mut fit_residual: f64 = 0.0;
    for (s, pts) in side_pts.iter_mut().enumerate() {
        if pts.len() < 2 {
            return Err(Error::geometry(format!(
                "side {} has fewer than two boundary samples",
                s + 1
            )));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let cloud: Vec<Vec3> = pts.iter().map(|p| p.1).collect();
        let (mean, mut dir, worst) = fit_line(&cloud)?;
        // Orient along increasing parameter.
        let sweep = cloud.last().unwrap().sub(&cloud[0]);
        if sweep.dot(&dir) < 0.0 {
            dir = dir.scale(-1.0);
        }
        fit_residual = fit_residual.max(worst);
        lines.push((mean, dir));
        directions.push(dir);
    }

    // Vertices a_{s+1} between side s and side s+1 (finite ones).
    let mut vertices = Vec::with_capacity(n + 2);
    let mut max_gap: f64 = 0.0;
    for s in 0..n + 2 {
        let prev = if s == 0 { n_sides - 1 } else { s - 1 };
        let (v, gap, _, _) = line_intersection(
            &lines[prev].0,
            &lines[prev].1,
            &lines[s].0,
            &lines[s].1,
        );
        vertices.push(v);
        max_gap = max_gap.max(gap);
    }
    let mut lengths = Vec::with_capacity(n + 1);
    for s in 0..n + 1 {
        lengths.push(vertices[s + 1].sub(&vertices[s]).norm());
    }
    let ref_len = lengths[n];
    let ratios: Vec<f64> = lengths[..n].iter().map(|l| l / ref_len).collect();

    // Terminal rays: from a_{n+2} along side n+2's direction, and from
    // a₁ backwards along side n+3's direction.
    let (meet, gap, s_par, t_par) = line_intersection(
        &vertices[n + 1],
        &directions[n + 1],
        &vertices[0],
        &directions[n + 2].scale(-1.0),
    );
    let ray_scale = ref_len * 1e3;
    let finite_meet = s_par > 0.0 && t_par > 0.0 && s_par < ray_scale && t_par < ray_scale;
    let closure_defect = gap;
    let vertex_at_infinity = !finite_meet;

    let mut angular_error: f64 = 0.0;
    for (d, u) in directions.iter().zip(dirs.u.iter()) {
        let cosang = d.dot(u).clamp(-1.0, 1.0);
        angular_error = angular_error.max(cosang.acos());
    }
    let mut theta_measured = Vec::with_capacity(n_sides);
    for s in 0..n_sides {
        let prev = if s == 0 { n_sides - 1 } else { s - 1 };
        theta_measured
            .push(directions[prev].dot(&directions[s]).clamp(-1.0, 1.0).acos() / std::f64::consts::PI);
    }
    let _ = max_gap;
    Ok(Polygon3 {
        vertices,
        vertex_at_infinity,
        closing_vertex: if finite_meet { Some(meet) } else { None },
        closure_defect,
        directions,
        direction_angular_error: angular_error,
        lengths,
        ratios,
        fit_residual: fit_residual / ref_len,
        theta_measured,
    })
}

// ---------------------------------------------------------------------
// The end-to-end solve.
// ---------------------------------------------------------------------

/// Options for [`solve_plateau`].
#[derive(Debug, Clone)]
pub struct PlateauOptions {
    pub rh: RhOptions,
    /// Ratio residual accepted as success.
    pub ratio_tol: f64,
    /// Anchor override (free positions t₁..t_n).
    pub anchor: Option<Vec<f64>>,
    /// Mesh resolution (columns, rows).
    pub mesh_nx: usize,
    pub mesh_ny: usize,
    /// Parameter-domain truncation for the mesh.
    pub r_cut: Option<f64>,
    pub max_bisection: usize,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        PlateauOptions {
            rh: RhOptions::default(),
            ratio_tol: 1e-3,
            anchor: None,
            mesh_nx: 64,
            mesh_ny: 24,
            r_cut: None,
            max_bisection: 60,
        }
    }
}

/// A member of the isomonodromic family over the simplex, with the
/// (t-independent) conjugator fixed once by the RH solve.
pub struct FamilyMember {
    pub sys: FuchsianSystem,
    pub c0: Mat2,
}

impl FamilyMember {
    /// Isomonodromic continuation of the member to new free positions.
    pub fn flow_to(&mut self, t_new: &[f64]) -> Result<()> {
        let n = t_new.len();
        let cur: Vec<C> = self.sys.positions[..n].to_vec();
        let target: Vec<C> = t_new.iter().map(|t| cr(*t)).collect();
        if cur
            .iter()
            .zip(target.iter())
            .all(|(a, b)| (a - b).norm() < 1e-14)
        {
            return Ok(());
        }
        let path = ParamPath {
            waypoints: vec![cur, target],
            moving: (0..n).collect(),
        };
        let traj = flow(&self.sys, &path, tol::FLOW_RTOL)?;
        let last = traj.samples.last().expect("flow returns samples");
        self.sys = FuchsianSystem {
            positions: last.positions.clone(),
            residues: last.residues.clone(),
        };
        Ok(())
    }

    /// Ratio map at the current member.
    pub fn ratios(&self, dirs: &DirectionSet) -> Result<LengthRatioReport> {
        let (data, _) = weierstrass_from_system(&self.sys, dirs, &self.c0)?;
        length_ratio_f(dirs, &data)
    }
}

/// Everything produced by a Plateau solve.
pub struct PlateauSolution {
    pub t_star: Vec<f64>,
    pub system: FuchsianSystem,
    pub c0: Mat2,
    pub data: WeierstrassData,
    pub mesh: SurfaceMesh,
    pub polygon: Polygon3,
    pub report: LengthRatioReport,
    pub rh_mismatch: f64,
    pub ratio_residual: f64,
}

/// Default anchor t⁰: −1 for a quadrilateral; −(n+1−i) in general.
pub fn default_anchor(n: usize) -> Vec<f64> {
    if n == 1 {
        vec![-1.0]
    } else {
        (1..=n).map(|i| -((n + 1 - i) as f64)).collect()
    }
}

/// Parameter grid adapted to the boundary family: columns avoid the
/// singular points, rows refine geometrically toward the real axis, and
/// the bottom row lies on the axis with side tags.
pub fn plateau_grid(sys: &FuchsianSystem, n: usize, nx: usize, ny: usize, r_cut: f64) -> ParamGrid {
    let positions: Vec<f64> = sys.positions.iter().map(|z| z.re).collect();
    let gap = sys.min_gap();
    let x0 = -r_cut;
    let x1 = r_cut;
    let mut xs = Vec::with_capacity(nx);
    for i in 0..nx {
        let mut x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
        for t in &positions {
            if (x - t).abs() < 0.04 * gap {
                x = t + 0.05 * gap * (x - t).signum().max(0.5);
            }
        }
        xs.push(x);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let height = 0.75 * (positions[positions.len() - 1] - positions[0]).max(1.0);
    let mut ys = Vec::with_capacity(ny);
    let mut y = height;
    for _ in 0..ny - 1 {
        ys.push(y);
        y *= 0.55;
    }
    ys.push(0.0);
    let nyr = ys.len();
    let mut points = Vec::with_capacity(nx * nyr);
    for yv in &ys {
        for xv in &xs {
            points.push(crate::spin3::c(*xv, *yv));
        }
    }
    let idx = |j: usize, i: usize| (j * nx + i) as u32;
    let mut tree = Vec::new();
    for i in 1..nx {
        tree.push((idx(0, i - 1), idx(0, i)));
    }
    for j in 1..nyr {
        for i in 0..nx {
            tree.push((idx(j - 1, i), idx(j, i)));
        }
    }
    let mut faces = Vec::new();
    for j in 1..nyr {
        for i in 1..nx {
            faces.push([idx(j - 1, i - 1), idx(j - 1, i), idx(j, i), idx(j, i - 1)]);
        }
    }
    let mut boundary_tags = vec![None; nx * nyr];
    for i in 0..nx {
        let x = xs[i];
        let too_close = positions.iter().any(|t| (x - t).abs() < 0.15 * gap);
        if too_close {
            continue;
        }
        let side = if x < positions[0] {
            (n + 3) as u32
        } else if x > positions[positions.len() - 1] {
            (n + 2) as u32
        } else {
            let mut s = 0;
            while x > positions[s + 1] {
                s += 1;
            }
            (s + 1) as u32
        };
        boundary_tags[(nyr - 1) * nx + i] = Some(side);
    }
    ParamGrid {
        points,
        tree,
        faces,
        boundary_tags,
    }
}

/// Full pipeline: target monodromy from the directions, RH solve at the
/// anchor, Schlesinger continuation in t, root-finding on the ratio map
/// (bisection in log coordinates for quadrilaterals, damped Newton with
/// finite-difference Jacobian above), then mesh and polygon emission.
pub fn solve_plateau(
    dirs: &DirectionSet,
    target_ratios: &[f64],
    opts: &PlateauOptions,
) -> Result<PlateauSolution> {
    let n = dirs.n();
    if target_ratios.len() != n {
        return Err(Error::input(format!("expected {n} target ratios")));
    }
    if target_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::input("target ratios must be positive"));
    }
    let target = target_monodromy(dirs)?;
    let anchor = opts.anchor.clone().unwrap_or_else(|| default_anchor(n));
    let mut positions: Vec<f64> = anchor.clone();
    positions.push(0.0);
    positions.push(1.0);
    let theta = dirs.theta_for_positions();
    let rh = solve_riemann_hilbert(&target, &positions, &theta, &opts.rh, None)?;
    let mut member = FamilyMember {
        sys: rh.system.clone(),
        c0: rh.c0,
    };

    let t_star: Vec<f64> = if n == 1 {
        let target_r = target_ratios[0];
        // Bracket in ζ = ln(−t).
        let eval = |member: &mut FamilyMember, zeta: f64| -> Result<f64> {
            member.flow_to(&[-zeta.exp()])?;
            Ok(member.ratios(dirs)?.ratios[0])
        };
        let mut lo = (1e-3f64).ln();
        let mut hi = (1e3f64).ln();
        let mut r_lo = eval(&mut member, lo)?;
        let mut r_hi = eval(&mut member, hi)?;
        let mut attempts = 0;
        while r_lo > target_r && attempts < 4 {
            lo -= 2.0;
            r_lo = eval(&mut member, lo)?;
            attempts += 1;
        }
        while r_hi < target_r && attempts < 8 {
            hi += 2.0;
            r_hi = eval(&mut member, hi)?;
            attempts += 1;
        }
        if !(r_lo <= target_r && target_r <= r_hi) {
            return Err(Error::Solver {
                msg: format!(
                    "ratio target {target_r} not bracketed: F({:.3e}) = {r_lo:.4}, F({:.3e}) = {r_hi:.4}",
                    -lo.exp(),
                    -hi.exp()
                ),
                residual: (r_lo - target_r).abs().min((r_hi - target_r).abs()),
            });
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..opts.max_bisection {
            mid = 0.5 * (lo + hi);
            let r = eval(&mut member, mid)?;
            if (r - target_r).abs() <= opts.ratio_tol * target_r {
                break;
            }
            if r < target_r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        vec![-mid.exp()]
    } else {
        // Damped Newton with a finite-difference Jacobian along the
        // Schlesinger-continued family (best effort).
        let mut t: Vec<f64> = anchor.clone();
        let mut best_t = t.clone();
        let mut best_res = f64::INFINITY;
        for _ in 0..24 {
            member.flow_to(&t)?;
            let r = member.ratios(dirs)?.ratios;
            let res: f64 = r
                .iter()
                .zip(target_ratios.iter())
                .map(|(a, b)| (a - b).abs() / b)
                .fold(0.0, f64::max);
            if res < best_res {
                best_res = res;
                best_t = t.clone();
            }
            if res < opts.ratio_tol {
                break;
            }
            let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                let h = 1e-4 * t[j].abs().max(1e-2);
                let mut tp = t.clone();
                tp[j] += h;
                sort_guard(&mut tp)?;
                member.flow_to(&tp)?;
                let rp = member.ratios(dirs)?.ratios;
                let mut tm = t.clone();
                tm[j] -= h;
                sort_guard(&mut tm)?;
                member.flow_to(&tm)?;
                let rm = member.ratios(dirs)?.ratios;
                for i in 0..n {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            member.flow_to(&t)?;
            let rhs = nalgebra::DVector::<f64>::from_iterator(
                n,
                r.iter().zip(target_ratios.iter()).map(|(a, b)| b - a),
            );
            let Some(step) = jac.lu().solve(&rhs) else {
                break;
            };
            let mut damping = 1.0;
            loop {
                let mut tn = t.clone();
                for i in 0..n {
                    tn[i] += damping * step[i];
                }
                if sort_guard(&mut tn).is_ok() {
                    t = tn;
                    break;
                }
                damping *= 0.5;
                if damping < 1e-4 {
                    break;
                }
            }
        }
        member.flow_to(&best_t)?;
        best_t
    };

    member.flow_to(&t_star)?;
    let (data, _) = weierstrass_from_system(&member.sys, dirs, &member.c0)?;
    let report = length_ratio_f(dirs, &data)?;
    let ratio_residual = report
        .ratios
        .iter()
        .zip(target_ratios.iter())
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    let maxmod = member
        .sys
        .positions
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    let r_cut = opts.r_cut.unwrap_or(10.0 * maxmod + 10.0);
    let grid = plateau_grid(&member.sys, n, opts.mesh_nx, opts.mesh_ny, r_cut);
    let mesh = immerse(&data, &grid, tol::IMMERSION_QUAD)?;
    let polygon = boundary_polygon(&mesh, dirs)?;
    Ok(PlateauSolution {
        t_star,
        system: member.sys.clone(),
        c0: member.c0,
        data,
        mesh,
        polygon,
        report,
        rh_mismatch: rh.mismatch,
        ratio_residual,
    })
}

fn sort_guard(t: &mut [f64]) -> Result<()> {
    for w in t.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::input("positions left the ordered simplex"));
        }
    }
    if let Some(last) = t.last() {
        if *last >= 0.0 {
            return Err(Error::input("positions must stay negative"));
        }
    }
    Ok(())
}

/// Measured boundary directions from first principles: integrate the
/// boundary increments of the immersion over sample sub-intervals of
/// each side and compare with the prescribed directions. Returns the
/// worst angular error (radians).
pub fn boundary_direction_error(
    data: &WeierstrassData,
    dirs: &DirectionSet,
    r_cut: f64,
) -> Result<f64> {
    let DataKind::System(sd) = &data.kind else {
        return Err(Error::input("boundary check requires system-backed data"));
    };
    let sys = &sd.frames.sys;
    let n = dirs.n();
    let mut worst: f64 = 0.0;
    let m = sys.n_finite();
    for s in 0..n + 3 {
        let (a, b) = if s < n + 1 {
            (sys.positions[s].re, sys.positions[s + 1].re)
        } else if s == n + 1 {
            (sys.positions[m - 1].re, r_cut)
        } else {
            (-r_cut, sys.positions[0].re)
        };
        let lo = a + 0.30 * (b - a);
        let hi = a + 0.70 * (b - a);
        let inc = crate::weierstrass::immersion_point(
            data,
            cr(lo),
            Vec3::new(0.0, 0.0, 0.0),
            cr(hi),
            1e-10,
        )?;
        let d = inc.normalize()?;
        let ang = d.dot(&dirs.u[s]).clamp(-1.0, 1.0).acos();
        worst = worst.max(ang);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin3::{apply3, rotation_from_lift};

    #[test]
    fn rejects_collinear_directions() {
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        assert!(validate_directions(&dirs).is_err());
    }

    #[test]
    fn rejects_coplanar_triple() {
        // D₁ coplanar with D₂ (= D_{n+1}) and D₃ (= D_{n+2}) for n = 1.
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0).normalize().unwrap(),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        assert!(validate_directions(&dirs).is_err());
    }

    #[test]
    fn perpendicular_edges_have_theta_half() {
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.17, 0.12, 1.0).normalize().unwrap(),
            Vec3::new(-0.8, -0.7, 0.32).normalize().unwrap(),
        ];
        let ds = validate_directions(&dirs).unwrap();
        // θ₂ is the angle between D₁ and D₂ (perpendicular).
        assert!((ds.theta[1] - 0.5).abs() < 1e-12);
        for th in &ds.theta {
            assert!(*th > 0.0 && *th < 1.0);
        }
    }

    #[test]
    fn generic_quadruple_accepted() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut accepted = 0;
        for _ in 0..20 {
            let mut dirs = Vec::new();
            for _ in 0..4 {
                dirs.push(
                    Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                    .normalize()
                    .unwrap(),
                );
            }
            if let Ok(ds) = validate_directions(&dirs) {
                accepted += 1;
                for th in &ds.theta {
                    assert!(*th > 0.0 && *th < 1.0);
                }
                for (i, v) in ds.normals.iter().enumerate() {
                    assert!((v.norm() - 1.0).abs() < 1e-12, "normal {i} not unit");
                }
            }
        }
        assert!(accepted >= 15, "only {accepted}/20 random quadruples valid");
    }

    #[test]
    fn lift_to_e2_sends_u_to_e2() {
        let u = Vec3::new(0.48, -0.6, 0.64).normalize().unwrap();
        let lift = lift_to_e2(&u).unwrap();
        let r = rotation_from_lift(&lift);
        let img = apply3(&r, &u);
        assert!(img.sub(&Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn default_anchor_is_separated() {
        assert_eq!(default_anchor(1), vec![-1.0]);
        assert_eq!(default_anchor(2), vec![-2.0, -1.0]);
        assert_eq!(default_anchor(3), vec![-3.0, -2.0, -1.0]);
    }
}
