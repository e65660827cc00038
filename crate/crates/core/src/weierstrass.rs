//! Evaluable Weierstrass pairs (G, H) on the upper half-plane and the
//! conformal minimal immersion they generate:
//!
//!   X(x) = Re ∫ (i(G²−H²), G²+H², 2iGH) dξ.
//!
//! Includes the closed-form catalog (plane, helicoid, catenoid), data
//! backed by a Fuchsian system's distinguished fundamental solution, the
//! Hopf differential, induced metric, Gauss map, conjugate surface and
//! associated family, the rotation action on data, a mean-curvature
//! probe, and the Schwarz-reflection check across a straight boundary
//! side.

use crate::error::Error;
use crate::monodromy::SystemFrames;
use crate::rk::{integrate, OdeOptions};
use crate::spin3::{c, cr, Mat2, Vec3, C};
use crate::Result;
use std::rc::Rc;

/// Weierstrass data backed by a Fuchsian system: the first row of
/// Y∞(x)·C₀ (the distinguished M-invariant fundamental solution).
pub struct SystemData {
    pub frames: SystemFrames,
    pub c0: Mat2,
}

/// What evaluates the pair (G, H).
#[derive(Clone)]
pub enum DataKind {
    /// (G, H) = (1, 0): a plane.
    Plane,
    /// (G, H) = (1, 1/x): a helicoid.
    Helicoid,
    /// (G, H) = e^{iπ/4}·(1, 1/x): a catenoid.
    Catenoid,
    /// Arbitrary closed-form evaluator (derivatives by differences).
    Custom(Rc<dyn Fn(C) -> (C, C)>),
    /// First row of a transported fundamental solution.
    System(Rc<SystemData>),
}

/// Evaluable Weierstrass data: the raw pair from `kind`, multiplied by
/// the associated-family phase and post-multiplied by a constant matrix
/// (the rotation action of Prop-1.7 type).
#[derive(Clone)]
pub struct WeierstrassData {
    pub kind: DataKind,
    pub base_point: C,
    pub phase: C,
    pub post: Mat2,
}

impl WeierstrassData {
    pub fn plane() -> Self {
        Self::from_kind(DataKind::Plane)
    }
    pub fn helicoid() -> Self {
        Self::from_kind(DataKind::Helicoid)
    }
    pub fn catenoid() -> Self {
        Self::from_kind(DataKind::Catenoid)
    }

    pub fn from_kind(kind: DataKind) -> Self {
        WeierstrassData {
            kind,
            base_point: c(0.0, 1.0),
            phase: cr(1.0),
            post: Mat2::identity(),
        }
    }

    /// Distance from x to the singular set of the evaluator.
    pub fn singular_distance(&self, x: C) -> f64 {
        match &self.kind {
            DataKind::Plane | DataKind::Custom(_) => f64::INFINITY,
            DataKind::Helicoid | DataKind::Catenoid => x.norm(),
            DataKind::System(sd) => sd
                .frames
                .sys
                .positions
                .iter()
                .map(|t| (x - t).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn raw(&self, x: C) -> Result<(C, C)> {
        match &self.kind {
            DataKind::Plane => Ok((cr(1.0), cr(0.0))),
            DataKind::Helicoid => Ok((cr(1.0), cr(1.0) / x)),
            DataKind::Catenoid => {
                let ph = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                Ok((ph, ph / x))
            }
            DataKind::Custom(f) => Ok(f(x)),
            DataKind::System(sd) => {
                let y = sd.frames.eval(x)?.mul(&sd.c0);
                Ok((y.e[0][0], y.e[0][1]))
            }
        }
    }

    fn raw_with_derivative(&self, x: C) -> Result<((C, C), (C, C))> {
        match &self.kind {
            DataKind::Plane => Ok(((cr(1.0), cr(0.0)), (cr(0.0), cr(0.0)))),
            DataKind::Helicoid => Ok(((cr(1.0), cr(1.0) / x), (cr(0.0), -cr(1.0) / (x * x)))),
            DataKind::Catenoid => {
                let ph = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                Ok(((ph, ph / x), (cr(0.0), -ph / (x * x))))
            }
            DataKind::Custom(f) => {
                let h = 1e-6 * (1.0 + x.norm());
                let (gp, hp) = f(x + cr(h));
                let (gm, hm) = f(x - cr(h));
                let d = cr(2.0 * h);
                Ok((f(x), ((gp - gm) / d, (hp - hm) / d)))
            }
            DataKind::System(sd) => {
                // (G', H') row comes from the governing system:
                // Y' = A(x)·Y, so the derivative of the first row of
                // Y·C₀ is the first row of A·Y·C₀.
                let y = sd.frames.eval(x)?.mul(&sd.c0);
                let dy = sd.frames.sys.eval(x).mul(&y);
                Ok(((y.e[0][0], y.e[0][1]), (dy.e[0][0], dy.e[0][1])))
            }
        }
    }

    /// The pair (G, H) at x, with phase and post-factor applied.
    pub fn eval(&self, x: C) -> Result<(C, C)> {
        let (g, h) = self.raw(x)?;
        Ok(self.dress((g, h)))
    }

    /// (G, H) and (G', H') at x.
    pub fn eval_with_derivative(&self, x: C) -> Result<((C, C), (C, C))> {
        let (v, d) = self.raw_with_derivative(x)?;
        Ok((self.dress(v), self.dress(d)))
    }

    fn dress(&self, (g, h): (C, C)) -> (C, C) {
        let p = &self.post.e;
        let gg = self.phase * (g * p[0][0] + h * p[1][0]);
        let hh = self.phase * (g * p[0][1] + h * p[1][1]);
        (gg, hh)
    }

    /// Integrand of the immersion: (i(G²−H²), G²+H², 2iGH).
    pub fn integrand(&self, x: C) -> Result<[C; 3]> {
        let (g, h) = self.eval(x)?;
        Ok(weierstrass_vector(g, h))
    }

    /// Conjugate data: (G, H) ↦ e^{iπ/4}(G, H).
    pub fn conjugate(&self) -> WeierstrassData {
        let mut d = self.clone();
        d.phase *= C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        d
    }

    /// Associated family member: multiply the data by unit λ.
    pub fn associated(&self, lambda: C) -> Result<WeierstrassData> {
        if (lambda.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::input(format!(
                "associated-family parameter must be unimodular (|λ| = {})",
                lambda.norm()
            )));
        }
        let mut d = self.clone();
        d.phase *= lambda;
        Ok(d)
    }

    /// Rotation action: the data of R_A(X) is (G, H)·A.
    pub fn rotate(&self, lift: &crate::spin3::RotationLift) -> WeierstrassData {
        let mut d = self.clone();
        d.post = d.post.mul(lift.matrix());
        d
    }
}

/// (i(G²−H²), G²+H², 2iGH).
pub fn weierstrass_vector(g: C, h: C) -> [C; 3] {
    let g2 = g * g;
    let h2 = h * h;
    let i = c(0.0, 1.0);
    [i * (g2 - h2), g2 + h2, cr(2.0) * i * g * h]
}

/// Hopf-differential coefficient Q = i(GH' − HG').
pub fn hopf(data: &WeierstrassData, x: C) -> Result<C> {
    if data.singular_distance(x) < 1e-12 {
        return Err(Error::domain("Hopf differential at a singular point"));
    }
    let ((g, h), (gp, hp)) = data.eval_with_derivative(x)?;
    Ok(c(0.0, 1.0) * (g * hp - h * gp))
}

/// Induced metric density (|G|² + |H|²)².
pub fn metric_density(data: &WeierstrassData, x: C) -> Result<f64> {
    if data.singular_distance(x) < 1e-12 {
        return Err(Error::domain("metric evaluated at a singular point"));
    }
    let (g, h) = data.eval(x)?;
    let s = g.norm_sqr() + h.norm_sqr();
    Ok(s * s)
}

/// Gauss map: inverse north-pole stereographic image of g = −G/H;
/// H = 0 maps to the north pole.
pub fn gauss_map(data: &WeierstrassData, x: C) -> Result<Vec3> {
    let (g, h) = data.eval(x)?;
    if h.norm() < 1e-14 * (1.0 + g.norm()) {
        return Ok(Vec3::new(0.0, 0.0, 1.0));
    }
    let zeta = -g / h;
    let n2 = zeta.norm_sqr();
    Ok(Vec3::new(
        2.0 * zeta.re / (n2 + 1.0),
        2.0 * zeta.im / (n2 + 1.0),
        (n2 - 1.0) / (n2 + 1.0),
    ))
}

// ---------------------------------------------------------------------
// Parameter grids and meshes.
// ---------------------------------------------------------------------

/// Sampled parameter domain with a spanning tree for integration.
#[derive(Debug, Clone)]
pub struct ParamGrid {
    pub points: Vec<C>,
    /// Tree edges (parent, child) reaching every point from points[0].
    pub tree: Vec<(u32, u32)>,
    pub faces: Vec<[u32; 4]>,
    /// 1-based polygon side index for boundary points.
    pub boundary_tags: Vec<Option<u32>>,
}

impl ParamGrid {
    /// Rectangular grid over [x0, x1] × [y0, y1] (y0 > 0), row-major,
    /// with rows geometrically refined toward the real axis when
    /// `geometric` is set.
    pub fn rect(
        x0: f64,
        x1: f64,
        y_top: f64,
        y_bottom: f64,
        nx: usize,
        ny: usize,
        geometric: bool,
    ) -> ParamGrid {
        assert!(y_bottom > 0.0 && y_top > y_bottom && nx >= 2 && ny >= 2);
        let mut ys = Vec::with_capacity(ny);
        if geometric {
            // Ratio-2 refinement toward the axis.
            let mut y = y_top;
            for _ in 0..ny {
                ys.push(y.max(y_bottom));
                y *= 0.5;
                if y < y_bottom {
                    y = y_bottom;
                }
            }
            ys.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        } else {
            for j in 0..ny {
                ys.push(y_top + (y_bottom - y_top) * j as f64 / (ny - 1) as f64);
            }
        }
        let ny = ys.len();
        let mut points = Vec::with_capacity(nx * ny);
        for y in &ys {
            for i in 0..nx {
                let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
                points.push(c(x, *y));
            }
        }
        let idx = |j: usize, i: usize| (j * nx + i) as u32;
        let mut tree = Vec::new();
        for i in 1..nx {
            tree.push((idx(0, i - 1), idx(0, i)));
        }
        for j in 1..ny {
            for i in 0..nx {
                tree.push((idx(j - 1, i), idx(j, i)));
            }
        }
        let mut faces = Vec::new();
        for j in 1..ny {
            for i in 1..nx {
                faces.push([idx(j - 1, i - 1), idx(j - 1, i), idx(j, i), idx(j, i - 1)]);
            }
        }
        ParamGrid {
            points,
            tree,
            faces,
            boundary_tags: vec![None; nx * ny],
        }
    }

    /// Semi-annulus r ∈ [r0, r1], arg ∈ (φ_min, π − φ_min): the natural
    /// chart for the helicoid/catenoid catalog data.
    pub fn half_annulus(r0: f64, r1: f64, nr: usize, nphi: usize, phi_min: f64) -> ParamGrid {
        assert!(r0 > 0.0 && r1 > r0 && nr >= 2 && nphi >= 2);
        let mut points = Vec::with_capacity(nr * nphi);
        for k in 0..nphi {
            let phi = phi_min + (std::f64::consts::PI - 2.0 * phi_min) * k as f64 / (nphi - 1) as f64;
            for i in 0..nr {
                let r = r0 * (r1 / r0).powf(i as f64 / (nr - 1) as f64);
                points.push(C::from_polar(r, phi));
            }
        }
        let idx = |k: usize, i: usize| (k * nr + i) as u32;
        let mut tree = Vec::new();
        for i in 1..nr {
            tree.push((idx(0, i - 1), idx(0, i)));
        }
        for k in 1..nphi {
            for i in 0..nr {
                tree.push((idx(k - 1, i), idx(k, i)));
            }
        }
        let mut faces = Vec::new();
        for k in 1..nphi {
            for i in 1..nr {
                faces.push([idx(k - 1, i - 1), idx(k - 1, i), idx(k, i), idx(k, i - 1)]);
            }
        }
        ParamGrid {
            points,
            tree,
            faces,
            boundary_tags: vec![None; nr * nphi],
        }
    }
}

/// Discretized image of the immersion.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 4]>,
    pub params: Vec<C>,
    pub boundary_tags: Vec<Option<u32>>,
}

impl SurfaceMesh {
    pub fn max_vertex_distance(&self, other: &SurfaceMesh) -> f64 {
        self.vertices
            .iter()
            .zip(other.vertices.iter())
            .map(|(a, b)| {
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Complex integral accumulator for the three immersion components.
fn integrate_edge(data: &WeierstrassData, from: C, to: C, tol: f64) -> Result<[C; 3]> {
    match &data.kind {
        DataKind::System(sd) => {
            // Joint transport of (Y, ∫W): exact coupling through the ODE.
            let y0 = sd.frames.eval(from)?;
            let state0 = (y0, [cr(0.0); 3]);
            let f = |s: f64, st: &(Mat2, [C; 3])| -> (Mat2, [C; 3]) {
                let z = from + (to - from) * cr(s);
                let dz = to - from;
                let dy = sd.frames.sys.eval(z).mul(&st.0).scale(dz);
                let row = st.0.mul(&sd.c0);
                let (g, h) = data.dress((row.e[0][0], row.e[0][1]));
                let w = weierstrass_vector(g, h);
                (dy, [w[0] * dz, w[1] * dz, w[2] * dz])
            };
            let opts = OdeOptions {
                rtol: tol.max(1e-13),
                atol: tol,
                ..OdeOptions::default()
            };
            let (_, int) = integrate(&f, 0.0, 1.0, state0, &opts, None)?;
            Ok(int)
        }
        _ => {
            let f = |s: f64, _st: &[C; 3]| -> [C; 3] {
                let z = from + (to - from) * cr(s);
                let dz = to - from;
                let w = data.integrand(z).unwrap_or([cr(f64::NAN); 3]);
                [w[0] * dz, w[1] * dz, w[2] * dz]
            };
            let opts = OdeOptions {
                rtol: tol.max(1e-13),
                atol: tol,
                ..OdeOptions::default()
            };
            integrate(&f, 0.0, 1.0, [cr(0.0); 3], &opts, None)
        }
    }
}

/// Integrate the Weierstrass representation over the grid: vertices are
/// X(x) = Re ∫_{x₀}^{x} (i(G²−H²), G²+H², 2iGH) dξ, accumulated along
/// the grid's spanning tree (path independence holds on the simply
/// connected half-plane up to quadrature error).
pub fn immerse(data: &WeierstrassData, grid: &ParamGrid, tol: f64) -> Result<SurfaceMesh> {
    let npts = grid.points.len();
    let mut integrals: Vec<Option<[C; 3]>> = vec![None; npts];
    // Base offset: integral from the data base point to the grid root.
    let root = grid.points[0];
    let base = if (data.base_point - root).norm() < 1e-14 {
        [cr(0.0); 3]
    } else {
        integrate_edge(data, data.base_point, root, tol)?
    };
    integrals[0] = Some(base);
    for &(parent, child) in &grid.tree {
        let (p, ch) = (parent as usize, child as usize);
        let from_val = integrals[p].ok_or_else(|| {
            Error::input("grid tree does not reach points in order (parent unvisited)")
        })?;
        let inc = integrate_edge(data, grid.points[p], grid.points[ch], tol)?;
        integrals[ch] = Some([from_val[0] + inc[0], from_val[1] + inc[1], from_val[2] + inc[2]]);
    }
    let mut vertices = Vec::with_capacity(npts);
    for v in &integrals {
        let v = v.ok_or_else(|| Error::input("grid tree does not span all points"))?;
        let vert = [v[0].re, v[1].re, v[2].re];
        if !vert.iter().all(|x| x.is_finite()) {
            return Err(Error::numeric("non-finite vertex in immersion"));
        }
        vertices.push(vert);
    }
    Ok(SurfaceMesh {
        vertices,
        faces: grid.faces.clone(),
        params: grid.points.clone(),
        boundary_tags: grid.boundary_tags.clone(),
    })
}

/// X at a single parameter point, integrating from `from` (with value
/// `from_value`) along a straight segment.
pub fn immersion_point(
    data: &WeierstrassData,
    from: C,
    from_value: Vec3,
    to: C,
    tol: f64,
) -> Result<Vec3> {
    let inc = integrate_edge(data, from, to, tol)?;
    Ok(Vec3::new(
        from_value.0[0] + inc[0].re,
        from_value.0[1] + inc[1].re,
        from_value.0[2] + inc[2].re,
    ))
}

// ---------------------------------------------------------------------
// Mean curvature probe.
// ---------------------------------------------------------------------

/// Finite-difference mean curvature from the fundamental forms; exact
/// minimality makes the returned value a pure discretization residual.
/// Default step: h = 1e-3 · dist(x, singular set).
pub fn mean_curvature_probe(data: &WeierstrassData, x: C, h: Option<f64>) -> Result<f64> {
    let dist = data.singular_distance(x).min(1.0 + x.norm());
    let h = h.unwrap_or(1e-3 * dist);
    if h <= 0.0 || 2.0 * h >= dist {
        return Err(Error::domain(
            "probe stencil leaves the domain (step too large)",
        ));
    }
    let w = |z: C| -> Result<[C; 3]> { data.integrand(z) };
    let w0 = w(x)?;
    // 5-point first derivative of the integrand.
    let wp2 = w(x + cr(2.0 * h))?;
    let wp1 = w(x + cr(h))?;
    let wm1 = w(x - cr(h))?;
    let wm2 = w(x - cr(2.0 * h))?;
    let mut wd = [cr(0.0); 3];
    for k in 0..3 {
        wd[k] = (-wp2[k] + wp1[k] * cr(8.0) - wm1[k] * cr(8.0) + wm2[k]) / cr(12.0 * h);
    }
    let re = |v: &[C; 3]| Vec3::new(v[0].re, v[1].re, v[2].re);
    let im = |v: &[C; 3]| Vec3::new(v[0].im, v[1].im, v[2].im);
    let xu = re(&w0);
    let xv = im(&w0).scale(-1.0);
    let xuu = re(&wd);
    let xuv = im(&wd).scale(-1.0);
    let xvv = re(&wd).scale(-1.0);
    let e = xu.dot(&xu);
    let f = xu.dot(&xv);
    let g = xv.dot(&xv);
    let normal = xu.cross(&xv);
    let nn = normal.norm();
    if nn < 1e-14 {
        return Err(Error::domain("degenerate tangent plane (branch point?)"));
    }
    let n = normal.scale(1.0 / nn);
    let l = xuu.dot(&n);
    let m = xuv.dot(&n);
    let n2 = xvv.dot(&n);
    let denom = 2.0 * (e * g - f * f);
    if denom.abs() < 1e-300 {
        return Err(Error::domain("degenerate first fundamental form"));
    }
    Ok((e * n2 - 2.0 * f * m + g * l) / denom)
}

// ---------------------------------------------------------------------
// Schwarz reflection check.
// ---------------------------------------------------------------------

/// Axial reflection of y across the line through p with direction d.
pub fn reflect_across_line(y: &Vec3, p: &Vec3, d: &Vec3) -> Vec3 {
    let dd = d.scale(1.0 / d.norm());
    let rel = y.sub(p);
    let along = dd.scale(rel.dot(&dd));
    // 2·along − rel reflects the orthogonal part.
    p.add(&along.scale(2.0)).sub(&rel)
}

/// Numerical Schwarz reflection: extend the surface through the real
/// interval around `x_base` by the conjugated data
/// (G, H)(x̄) := conj((G, H)(x)), and compare with the axial reflection
/// of the original surface across `line` = (point, direction).
///
/// `samples` are interior parameters x (Im x > 0) paired with their
/// surface points X(x) measured in the same translation frame as
/// `base_value` = X(x_base). Returns the max distance.
pub fn reflect_check(
    data: &WeierstrassData,
    samples: &[(C, Vec3)],
    x_base: f64,
    base_value: Vec3,
    line_point: Vec3,
    line_dir: Vec3,
    tol: f64,
) -> Result<f64> {
    // Precondition: the base point lies on the line.
    let on_line = reflect_across_line(&base_value, &line_point, &line_dir)
        .sub(&base_value)
        .norm();
    if on_line > 1e-6 * (1.0 + base_value.norm()) {
        return Err(Error::Geometry(format!(
            "boundary point is off the reflection line by {on_line:.3e}"
        )));
    }
    // Extended evaluator on the lower half-plane.
    let ext = {
        let inner = data.clone();
        move |z: C| -> (C, C) {
            let (g, h) = inner.eval(z.conj()).unwrap_or((cr(f64::NAN), cr(f64::NAN)));
            (g.conj(), h.conj())
        }
    };
    let ext_data = WeierstrassData {
        kind: DataKind::Custom(Rc::new(ext)),
        base_point: cr(x_base),
        phase: cr(1.0),
        post: Mat2::identity(),
    };
    let mut worst: f64 = 0.0;
    for (x, surf) in samples {
        let reflected = reflect_across_line(surf, &line_point, &line_dir);
        let extended = immersion_point(&ext_data, cr(x_base), base_value, x.conj(), tol)?;
        worst = worst.max(extended.sub(&reflected).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin3::{half_turn_lift, lift_rotation};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hopf_examples() {
        let x = c(0.7, 0.9);
        // Plane: proportional pair, zero Wronskian.
        assert!(hopf(&WeierstrassData::plane(), x).unwrap().norm() < 1e-14);
        // Helicoid: −i/x².
        let q = hopf(&WeierstrassData::helicoid(), x).unwrap();
        let expect = -c(0.0, 1.0) / (x * x);
        assert!((q - expect).norm() < 1e-12);
        // Catenoid: 1/x², real on the real axis.
        let q = hopf(&WeierstrassData::catenoid(), x).unwrap();
        assert!((q - cr(1.0) / (x * x)).norm() < 1e-12);
    }

    #[test]
    fn metric_examples() {
        // Catenoid at x = 1 (boundary value): |G| = |H| = 1 → density 4.
        let d = WeierstrassData::catenoid();
        assert!((metric_density(&d, cr(1.0)).unwrap() - 4.0).abs() < 1e-12);
        // Helicoid at x = i.
        let h = WeierstrassData::helicoid();
        assert!((metric_density(&h, c(0.0, 1.0)).unwrap() - 4.0).abs() < 1e-12);
        // Homogeneity: scaling the data by real c scales density by c⁴.
        let mut scaled = h.clone();
        scaled.phase = cr(1.7);
        let x = c(0.3, 1.2);
        let ratio = metric_density(&scaled, x).unwrap() / metric_density(&h, x).unwrap();
        assert!((ratio - 1.7f64.powi(4)).abs() < 1e-10);
    }

    #[test]
    fn gauss_map_examples() {
        // H = 0 → north pole.
        let plane = WeierstrassData::plane();
        let n = gauss_map(&plane, c(0.0, 1.0)).unwrap();
        assert!(n.sub(&Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        // G = 0 → south pole.
        let south = WeierstrassData::from_kind(DataKind::Custom(Rc::new(|_x| {
            (cr(0.0), cr(1.0))
        })));
        let n = gauss_map(&south, c(0.0, 1.0)).unwrap();
        assert!(n.sub(&Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-14);
        // Helicoid at x = −1: g = −G/H = 1 → (1, 0, 0).
        let heli = WeierstrassData::helicoid();
        let n = gauss_map(&heli, cr(-1.0)).unwrap();
        assert!(n.sub(&Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn conformality_of_the_integrand() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let heli = WeierstrassData::helicoid();
        for _ in 0..20 {
            let x = c(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..2.0));
            let w = heli.integrand(x).unwrap();
            let xu = Vec3::new(w[0].re, w[1].re, w[2].re);
            let xv = Vec3::new(-w[0].im, -w[1].im, -w[2].im);
            let rel = xu.norm().max(xv.norm());
            assert!((xu.norm() - xv.norm()).abs() < 1e-8 * rel);
            assert!(xu.dot(&xv).abs() < 1e-8 * rel * rel);
        }
    }

    #[test]
    fn conjugation_rotates_hopf_by_i() {
        let d = WeierstrassData::helicoid();
        let x = c(0.4, 1.3);
        let q = hopf(&d, x).unwrap();
        let qc = hopf(&d.conjugate(), x).unwrap();
        assert!((qc - q * c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn associated_identity_and_double_conjugate() {
        let d = WeierstrassData::catenoid();
        let same = d.associated(cr(1.0)).unwrap();
        assert!((same.phase - d.phase).norm() < 1e-15);
        let twice = d.conjugate().conjugate();
        assert!((twice.phase / d.phase - c(0.0, 1.0)).norm() < 1e-14);
        assert!(d.associated(cr(2.0)).is_err());
    }

    #[test]
    fn plane_mesh_is_planar() {
        let grid = ParamGrid::rect(-1.0, 1.0, 2.0, 0.1, 8, 6, false);
        let mesh = immerse(&WeierstrassData::plane(), &grid, 1e-10).unwrap();
        // (G,H) = (1,0): X = Re ∫ (i, 1, 0) = (−Im ξ, Re ξ, 0) + const.
        for v in &mesh.vertices {
            assert!(v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn helicoid_mesh_matches_closed_form() {
        let grid = ParamGrid::half_annulus(0.5, 2.0, 6, 9, 0.15);
        let data = WeierstrassData::helicoid();
        let mesh = immerse(&data, &grid, 1e-11).unwrap();
        // X(x) = Re(i(x + 1/x), x − 1/x, 2i·log x) up to the base shift.
        let closed = |x: C| {
            Vec3::new(
                (c(0.0, 1.0) * (x + cr(1.0) / x)).re,
                (x - cr(1.0) / x).re,
                (c(0.0, 2.0) * x.ln()).re,
            )
        };
        let shift = closed(grid.points[0]);
        // The mesh integrates from data.base_point; rebase.
        let base = closed(data.base_point);
        for (v, x) in mesh.vertices.iter().zip(grid.points.iter()) {
            let want = closed(*x).sub(&base);
            let got = Vec3::new(v[0], v[1], v[2]);
            assert!(
                got.sub(&want).norm() < 1e-9,
                "{:?} vs {:?} at {x}",
                got,
                want
            );
        }
        let _ = shift;
    }

    #[test]
    fn base_point_shift_is_a_translation() {
        let grid = ParamGrid::half_annulus(0.5, 2.0, 5, 7, 0.2);
        let mut d1 = WeierstrassData::helicoid();
        d1.base_point = c(0.0, 1.0);
        let mut d2 = WeierstrassData::helicoid();
        d2.base_point = c(0.3, 1.4);
        let m1 = immerse(&d1, &grid, 1e-11).unwrap();
        let m2 = immerse(&d2, &grid, 1e-11).unwrap();
        let delta0 = Vec3::new(
            m1.vertices[0][0] - m2.vertices[0][0],
            m1.vertices[0][1] - m2.vertices[0][1],
            m1.vertices[0][2] - m2.vertices[0][2],
        );
        for (a, b) in m1.vertices.iter().zip(m2.vertices.iter()) {
            let d = Vec3::new(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
            assert!(d.sub(&delta0).norm() < 1e-9);
        }
    }

    #[test]
    fn mean_curvature_probe_vanishes_on_catalog() {
        let probe = |d: &WeierstrassData, x: C| mean_curvature_probe(d, x, None).unwrap().abs();
        assert!(probe(&WeierstrassData::plane(), c(0.2, 0.9)) < 1e-12);
        assert!(probe(&WeierstrassData::catenoid(), c(1.0, 1.0)) < 1e-6);
        assert!(probe(&WeierstrassData::helicoid(), c(0.0, 1.0)) < 1e-6);
    }

    #[test]
    fn rotation_acts_on_the_immersion() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let grid = ParamGrid::half_annulus(0.6, 1.8, 5, 6, 0.25);
        let data = WeierstrassData::helicoid();
        let mesh = immerse(&data, &grid, 1e-11).unwrap();
        for _ in 0..5 {
            let axis = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize()
            .unwrap();
            let lift = lift_rotation(&axis, rng.gen_range(0.0..6.0)).unwrap();
            let rot = crate::spin3::rotation_from_lift(&lift);
            let rotated = immerse(&data.rotate(&lift), &grid, 1e-11).unwrap();
            // Compare after rebasing both at vertex 0.
            let r0 = &rotated.vertices[0];
            let m0 = &mesh.vertices[0];
            for (rv, mv) in rotated.vertices.iter().zip(mesh.vertices.iter()) {
                let want = crate::spin3::apply3(
                    &rot,
                    &Vec3::new(mv[0] - m0[0], mv[1] - m0[1], mv[2] - m0[2]),
                );
                let got = Vec3::new(rv[0] - r0[0], rv[1] - r0[1], rv[2] - r0[2]);
                assert!(got.sub(&want).norm() < 1e-9, "{:?} vs {:?}", got, want);
            }
        }
    }

    #[test]
    fn helicoid_reflects_across_its_ruling() {
        // The positive real axis maps to a straight line (the e₂ ruling
        // through the origin of the rebased chart); Schwarz reflection
        // across it must reproduce the lower extension.
        let data = WeierstrassData::helicoid();
        let x_base = 1.0f64;
        let base_val = immersion_point(
            &data,
            data.base_point,
            Vec3::new(0.0, 0.0, 0.0),
            cr(x_base),
            1e-11,
        )
        .unwrap();
        let mut samples = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = c(rng.gen_range(0.6..1.6), rng.gen_range(0.1..0.8));
            let v = immersion_point(&data, data.base_point, Vec3::new(0.0, 0.0, 0.0), x, 1e-11)
                .unwrap();
            samples.push((x, v));
        }
        let res = reflect_check(
            &data,
            &samples,
            x_base,
            base_val,
            base_val,
            Vec3::new(0.0, 1.0, 0.0),
            1e-11,
        )
        .unwrap();
        assert!(res < 1e-8, "reflection residual {res:.3e}");
    }

    #[test]
    fn half_turn_lift_rotation_consistency() {
        // rotate by a half-turn twice = rotate by (−I) = same immersion data
        // up to sign, hence identical integrand.
        let d = WeierstrassData::catenoid();
        let u = Vec3::new(0.0, 1.0, 0.0);
        let lift = half_turn_lift(&u).unwrap();
        let twice = d.rotate(&lift).rotate(&lift);
        let x = c(0.5, 0.8);
        let w1 = d.integrand(x).unwrap();
        let w2 = twice.integrand(x).unwrap();
        for k in 0..3 {
            assert!((w1[k] - w2[k]).norm() < 1e-12);
        }
    }
}
