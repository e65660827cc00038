//! Fuchsian equations and 2×2 Fuchsian systems.
//!
//! Second-order equations y'' + p·y' + q·y = 0 with p, q rational are kept
//! in partial-fraction form: simple poles for p, poles of order ≤ 2 for q.
//! Systems are residue lists A(x) = Σ Aᵢ/(x - tᵢ). The dictionary between
//! the two (first row of a fundamental solution solves the equation) is
//! implemented in both directions, together with the Frobenius method,
//! apparent-singularity tests and the accessory-parameter formulas that
//! make prescribed singularities non-logarithmic.

use crate::error::Error;
use crate::spin3::{cr, Mat2, C};
use crate::Result;

/// Location of a singular point on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingLoc {
    Finite(C),
    Infinity,
}

/// Exponent table of an equation: one row per singularity.
#[derive(Debug, Clone)]
pub struct RiemannScheme {
    pub entries: Vec<(SingLoc, C, C)>,
    /// Extra bookkeeping carried by boundary-polygon schemes.
    pub plateau: Option<PlateauScheme>,
}

/// Integer data of a boundary-polygon scheme: angle signs, the integer
/// shifts rᵢ at the vertices (r for ∞ last), and the apparent exponents
/// m_k. The ledger identity Σrᵢ + Σm_k = n + 1 + N must hold.
#[derive(Debug, Clone)]
pub struct PlateauScheme {
    pub eps: Vec<i8>,
    pub r: Vec<u32>,
    pub m: Vec<u32>,
    pub n: usize,
}

impl PlateauScheme {
    /// Left side minus right side of the integer ledger
    /// Σ rᵢ + Σ m_k − (n + 1 + N); zero exactly for a valid scheme.
    pub fn ledger_defect(&self) -> i64 {
        let r_sum: i64 = self.r.iter().map(|&x| x as i64).sum();
        let m_sum: i64 = self.m.iter().map(|&x| x as i64).sum();
        r_sum + m_sum - (self.n as i64 + 1 + self.m.len() as i64)
    }
}

/// Fuchs-relation defect |Σ exponents − (#singularities − 2)|.
pub fn fuchs_defect(scheme: &RiemannScheme) -> f64 {
    let sum: C = scheme
        .entries
        .iter()
        .map(|(_, a, b)| *a + *b)
        .fold(cr(0.0), |acc, z| acc + z);
    let n = scheme.entries.len() as f64;
    (sum - cr(n - 2.0)).norm()
}

/// One finite singular point of an equation, carrying the partial
/// fraction data: p += a/(x-z), q += b/(x-z)² + c/(x-z).
#[derive(Debug, Clone, Copy)]
pub struct EqPoint {
    pub z: C,
    pub a: C,
    pub b: C,
    pub c: C,
}

/// Second-order Fuchsian equation on the sphere in partial-fraction form.
/// ∞ is always a (possibly trivial) singular point; Σc = 0 is required
/// for q to decay like x⁻² there.
#[derive(Debug, Clone)]
pub struct FuchsianEquation {
    pub points: Vec<EqPoint>,
}

impl FuchsianEquation {
    pub fn new(points: Vec<EqPoint>) -> Result<Self> {
        let eq = FuchsianEquation { points };
        eq.validate()?;
        Ok(eq)
    }

    pub fn validate(&self) -> Result<()> {
        let scale = self
            .points
            .iter()
            .map(|p| p.c.norm())
            .fold(1.0f64, f64::max);
        let sum: C = self.points.iter().map(|p| p.c).fold(cr(0.0), |a, z| a + z);
        if sum.norm() > 1e-8 * scale {
            return Err(Error::structure(format!(
                "residues of q must sum to zero (got {:.3e})",
                sum.norm()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            for q in self.points.iter().skip(i + 1) {
                if (p.z - q.z).norm() < 1e-12 {
                    return Err(Error::input("coincident singular points in equation"));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self, x: C) -> C {
        self.points
            .iter()
            .map(|pt| pt.a / (x - pt.z))
            .fold(cr(0.0), |a, z| a + z)
    }

    pub fn p_prime(&self, x: C) -> C {
        self.points
            .iter()
            .map(|pt| -pt.a / ((x - pt.z) * (x - pt.z)))
            .fold(cr(0.0), |a, z| a + z)
    }

    pub fn q(&self, x: C) -> C {
        self.points
            .iter()
            .map(|pt| {
                let u = x - pt.z;
                pt.b / (u * u) + pt.c / u
            })
            .fold(cr(0.0), |a, z| a + z)
    }

    /// Index of the point at `z`, if `z` is a declared singularity.
    pub fn point_index(&self, z: C) -> Option<usize> {
        self.points.iter().position(|p| (p.z - z).norm() < 1e-9)
    }

    /// Characteristic exponents at ∞: roots of s² + (1-a∞)s + b∞ with
    /// a∞ = Σaᵢ, b∞ = Σ(bᵢ + cᵢzᵢ).
    pub fn infinity_exponents(&self) -> (C, C) {
        let a_inf: C = self.points.iter().map(|p| p.a).fold(cr(0.0), |a, z| a + z);
        let b_inf: C = self
            .points
            .iter()
            .map(|p| p.b + p.c * p.z)
            .fold(cr(0.0), |a, z| a + z);
        quadratic_roots(cr(1.0) - a_inf, b_inf)
    }

    /// Full Riemann scheme (finite points then ∞).
    pub fn scheme(&self) -> RiemannScheme {
        let mut entries: Vec<(SingLoc, C, C)> = self
            .points
            .iter()
            .map(|p| {
                let (s1, s2) = quadratic_roots(p.a - cr(1.0), p.b);
                (SingLoc::Finite(p.z), s1, s2)
            })
            .collect();
        let (i1, i2) = self.infinity_exponents();
        entries.push((SingLoc::Infinity, i1, i2));
        RiemannScheme {
            entries,
            plateau: None,
        }
    }
}

/// Roots of s² + βs + γ.
fn quadratic_roots(beta: C, gamma: C) -> (C, C) {
    let disc = (beta * beta - cr(4.0) * gamma).sqrt();
    ((-beta + disc) * cr(0.5), (-beta - disc) * cr(0.5))
}

/// Characteristic exponents of `eq` at a declared singularity.
pub fn characteristic_exponents(eq: &FuchsianEquation, s: SingLoc) -> Result<(C, C)> {
    match s {
        SingLoc::Infinity => Ok(eq.infinity_exponents()),
        SingLoc::Finite(z) => {
            let i = eq
                .point_index(z)
                .ok_or_else(|| Error::input(format!("{z} is not a singularity of the equation")))?;
            let p = &eq.points[i];
            Ok(quadratic_roots(p.a - cr(1.0), p.b))
        }
    }
}

/// Frobenius series y = (x-z0)^s Σ b_k (x-z0)^k at a Fuchsian point.
#[derive(Debug, Clone)]
pub struct FrobeniusSeries {
    pub exponent: C,
    pub coeffs: Vec<C>,
    /// Set when the recursion hit an integer resonance at index k:
    /// the right-hand side whose vanishing makes the point
    /// non-logarithmic. The series continues with b_k = 0.
    pub log_obstruction: Option<C>,
    pub resonant_at: Option<usize>,
}

/// Run the Frobenius recursion at `z0` for the given exponent.
///
/// `z0` may be an ordinary point (all local data zero). When the second
/// exponent lies an integer above `exponent`, the obstruction to a pure
/// power series is returned in `log_obstruction`.
pub fn frobenius_series(
    eq: &FuchsianEquation,
    z0: C,
    exponent: C,
    order: usize,
) -> Result<FrobeniusSeries> {
    if order < 1 {
        return Err(Error::input("series order must be at least 1"));
    }
    let idx = eq.point_index(z0);
    // Taylor data of (x-z0)·p and (x-z0)²·q.
    let mut pm = vec![cr(0.0); order + 1];
    let mut qm = vec![cr(0.0); order + 1];
    if let Some(i) = idx {
        pm[0] = eq.points[i].a;
        qm[0] = eq.points[i].b;
        if order >= 1 {
            qm[1] = eq.points[i].c;
        }
    }
    for (j, pt) in eq.points.iter().enumerate() {
        if Some(j) == idx {
            continue;
        }
        let d = pt.z - z0;
        if d.norm() < 1e-12 {
            return Err(Error::input("expansion point coincides with another pole"));
        }
        // (x-z0)·p picks up -a/d^m at order m; (x-z0)²·q picks up
        // (m-1)·b/d^m - c/d^{m-1} at order m ≥ 2.
        let mut dpow = d; // d^m
        for m in 1..=order {
            pm[m] -= pt.a / dpow;
            if m >= 2 {
                qm[m] += pt.b * cr(m as f64 - 1.0) / dpow - pt.c * d / dpow;
            }
            dpow *= d;
        }
    }

    let f = |s: C| s * (s - cr(1.0)) + pm[0] * s + qm[0];
    let mut coeffs = vec![cr(1.0)];
    let mut log_obstruction = None;
    let mut resonant_at = None;
    for k in 1..=order {
        let mut rhs = cr(0.0);
        for m in 1..=k {
            rhs -= (pm[m] * (exponent + cr((k - m) as f64)) + qm[m]) * coeffs[k - m];
        }
        let denom = f(exponent + cr(k as f64));
        let scale = coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if denom.norm() < 1e-8 * (1.0 + k as f64 * k as f64) {
            // Integer resonance: the other exponent is s + k.
            if resonant_at.is_none() {
                resonant_at = Some(k);
                log_obstruction = Some(rhs / cr(scale.max(1.0)));
            }
            coeffs.push(cr(0.0));
        } else {
            coeffs.push(rhs / denom);
        }
    }
    Ok(FrobeniusSeries {
        exponent,
        coeffs,
        log_obstruction,
        resonant_at,
    })
}

/// Is the declared singularity at λ apparent (integer exponents and no
/// logarithm)?
pub fn is_apparent(eq: &FuchsianEquation, lambda: C, tolerance: f64) -> Result<bool> {
    let (s1, s2) = characteristic_exponents(eq, SingLoc::Finite(lambda))?;
    let near_int = |z: C| (z.re - z.re.round()).abs() < 1e-8 && z.im.abs() < 1e-8;
    if !near_int(s1) || !near_int(s2) {
        return Err(Error::input(format!(
            "exponents at {lambda} are not integers: {s1}, {s2}"
        )));
    }
    let (lo, hi) = if s1.re <= s2.re { (s1, s2) } else { (s2, s1) };
    let gap = (hi.re - lo.re).round() as usize;
    if gap == 0 {
        // Equal integer exponents always carry a logarithm.
        return Ok(false);
    }
    let series = frobenius_series(eq, lambda, cr(lo.re.round()), gap + 2)?;
    match series.log_obstruction {
        Some(obs) => Ok(obs.norm() < tolerance),
        // No resonance encountered would mean the gap was not hit;
        // defensive, should not happen for gap >= 1.
        None => Ok(true),
    }
}

/// Schwarzian derivative of the projective solution: 2q − p²/2 − p'.
pub fn schwarzian(eq: &FuchsianEquation, x: C) -> Result<C> {
    for p in &eq.points {
        if (x - p.z).norm() < 1e-12 {
            return Err(Error::domain("schwarzian evaluated at a singular point"));
        }
    }
    let p = eq.p(x);
    Ok(cr(2.0) * eq.q(x) - p * p * cr(0.5) - eq.p_prime(x))
}

// ---------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------

/// First-order 2×2 Fuchsian system dY/dx = (Σ Aᵢ/(x−tᵢ))·Y.
#[derive(Debug, Clone)]
pub struct FuchsianSystem {
    pub positions: Vec<C>,
    pub residues: Vec<Mat2>,
}

impl FuchsianSystem {
    pub fn new(positions: Vec<C>, residues: Vec<Mat2>) -> Result<Self> {
        if positions.len() != residues.len() || positions.is_empty() {
            return Err(Error::input(
                "positions and residues must be nonempty lists of equal length",
            ));
        }
        for (i, a) in positions.iter().enumerate() {
            for b in positions.iter().skip(i + 1) {
                if (a - b).norm() < 1e-12 {
                    return Err(Error::input("coincident singular positions"));
                }
            }
        }
        Ok(FuchsianSystem {
            positions,
            residues,
        })
    }

    pub fn n_finite(&self) -> usize {
        self.positions.len()
    }

    pub fn a_infinity(&self) -> Mat2 {
        let mut s = Mat2::zero();
        for r in &self.residues {
            s = s.add(r);
        }
        s.scale(cr(-1.0))
    }

    /// A(x) = Σ Aᵢ/(x−tᵢ).
    pub fn eval(&self, x: C) -> Mat2 {
        let mut s = Mat2::zero();
        for (t, a) in self.positions.iter().zip(self.residues.iter()) {
            s = s.add(&a.scale(cr(1.0) / (x - t)));
        }
        s
    }

    /// Eigenvalues of the residue at index i, ordered by descending real
    /// part (ties by imaginary part).
    pub fn local_eigenvalues(&self, i: usize) -> (C, C) {
        let (l1, l2) = self.residues[i].eigenvalues();
        order_pair(l1, l2)
    }

    pub fn infinity_eigenvalues(&self) -> (C, C) {
        let (l1, l2) = self.a_infinity().eigenvalues();
        order_pair(l1, l2)
    }

    /// Exponent differences θᵢ = λᵢ⁺ − λᵢ⁻ at every finite singularity.
    pub fn theta(&self) -> Vec<C> {
        (0..self.n_finite())
            .map(|i| {
                let (a, b) = self.local_eigenvalues(i);
                a - b
            })
            .collect()
    }

    /// Smallest distance between two finite singularities.
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for (i, a) in self.positions.iter().enumerate() {
            for b in self.positions.iter().skip(i + 1) {
                g = g.min((a - b).norm());
            }
        }
        g
    }

    /// Check θᵢ ∉ ℤ at all finite points and at ∞.
    pub fn check_nonresonant(&self) -> Result<()> {
        let check = |th: C, what: String| -> Result<()> {
            let d = (th.re - th.re.round()).abs() + th.im.abs();
            if d < 1e-8 {
                return Err(Error::structure(format!(
                    "resonant exponents ({what}: difference {th} is an integer)"
                )));
            }
            Ok(())
        };
        for (i, th) in self.theta().iter().enumerate() {
            check(*th, format!("t_{i}"))?;
        }
        let (a, b) = self.infinity_eigenvalues();
        check(a - b, "infinity".into())?;
        Ok(())
    }

    /// Is A∞ diagonal with distinct entries?
    pub fn is_normalized_at_infinity(&self, tolerance: f64) -> bool {
        let ai = self.a_infinity();
        let off = ai.e[0][1].norm().max(ai.e[1][0].norm());
        let scale = 1.0 + ai.norm();
        off < tolerance * scale && (ai.e[0][0] - ai.e[1][1]).norm() > 1e-8
    }

    /// Best common phase η for the reality form
    /// Aᵢ = [[aᵢ, bᵢ e^{iη}], [cᵢ e^{-iη}, dᵢ]] with aᵢ, dᵢ, bᵢ, cᵢ real,
    /// and the worst deviation from that form.
    pub fn reality_form_residual(&self) -> (f64, f64) {
        let mut z = cr(0.0);
        for a in &self.residues {
            z += a.e[0][1] * a.e[0][1];
            z += (a.e[1][0] * a.e[1][0]).conj();
        }
        let eta = 0.5 * z.arg();
        let rot = C::from_polar(1.0, -eta);
        let mut res: f64 = 0.0;
        for a in &self.residues {
            res = res.max((a.e[0][1] * rot).im.abs());
            res = res.max((a.e[1][0] * rot.conj()).im.abs());
            res = res.max(a.e[0][0].im.abs());
            res = res.max(a.e[1][1].im.abs());
        }
        for t in &self.positions {
            res = res.max(t.im.abs());
        }
        (eta, res)
    }

    /// Diagonal gauge: scale A₁₂ by ξ and A₂₁ by 1/ξ (conjugation by
    /// diag(1, 1/ξ)). This is the transformation that moves the
    /// dictionary parameter ξ = Σ tᵢ·A₁₂ⁱ multiplicatively.
    pub fn gauge_diag(&self, xi: C) -> FuchsianSystem {
        let residues = self
            .residues
            .iter()
            .map(|a| {
                Mat2::new(
                    a.e[0][0],
                    a.e[0][1] * xi,
                    a.e[1][0] / xi,
                    a.e[1][1],
                )
            })
            .collect();
        FuchsianSystem {
            positions: self.positions.clone(),
            residues,
        }
    }
}

pub(crate) fn order_pair(a: C, b: C) -> (C, C) {
    if (a.re, a.im) >= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

// ---------------------------------------------------------------------
// Polynomials (internal): used for locating zeros of A₁₂.
// ---------------------------------------------------------------------

fn poly_eval(coeffs: &[C], x: C) -> C {
    let mut v = cr(0.0);
    for c in coeffs.iter().rev() {
        v = v * x + c;
    }
    v
}

fn poly_derivative(coeffs: &[C]) -> Vec<C> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| *c * cr(k as f64))
        .collect()
}

/// All complex roots by Durand–Kerner with Newton polish.
fn poly_roots(coeffs: &[C]) -> Vec<C> {
    let mut cs: Vec<C> = coeffs.to_vec();
    while let Some(last) = cs.last() {
        if last.norm() < 1e-14 * cs.iter().map(|c| c.norm()).fold(0.0, f64::max) && cs.len() > 1 {
            cs.pop();
        } else {
            break;
        }
    }
    let deg = cs.len().saturating_sub(1);
    if deg == 0 {
        return vec![];
    }
    let lead = cs[deg];
    let monic: Vec<C> = cs.iter().map(|c| c / lead).collect();
    let bound = 1.0
        + monic
            .iter()
            .take(deg)
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    let seed = C::from_polar(1.0, 0.7);
    let mut roots: Vec<C> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) * cr(bound * 0.7))
        .collect();
    for _ in 0..300 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let mut denom = cr(1.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = poly_eval(&monic, roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 * bound {
            break;
        }
    }
    // Newton polish.
    let dpoly = poly_derivative(&monic);
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let d = poly_eval(&dpoly, *r);
            if d.norm() < 1e-14 {
                break;
            }
            *r -= poly_eval(&monic, *r) / d;
        }
    }
    roots
}

// ---------------------------------------------------------------------
// Dictionary: system → equation.
// ---------------------------------------------------------------------

/// A zero of A₁₂ reported as an apparent singularity of the equation.
#[derive(Debug, Clone, Copy)]
pub struct ApparentPoint {
    pub lambda: C,
    /// Order of the zero of A₁₂; the equation's exponents there are
    /// (0, order + 1).
    pub order: usize,
}

/// Second-order equation satisfied by the first component of every
/// solution of the system: p = −A₁₂'/A₁₂ − Tr A,
/// q = −A₁₁' + A₁₁·A₁₂'/A₁₂ + det A.
pub fn system_to_equation(
    sys: &FuchsianSystem,
) -> Result<(FuchsianEquation, Vec<ApparentPoint>)> {
    let n = sys.n_finite();
    let r12: Vec<C> = sys.residues.iter().map(|a| a.e[0][1]).collect();
    let scale12 = r12.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale12 < 1e-14 {
        return Err(Error::structure(
            "A12 vanishes identically: the system is reducible and defines no second-order equation",
        ));
    }
    for (i, z) in r12.iter().enumerate() {
        if z.norm() < 1e-12 * scale12 {
            return Err(Error::unsupported(format!(
                "A12 has no pole at t_{i}; a zero of A12 collides with a singularity"
            )));
        }
    }

    // Numerator polynomial of A12: Σᵢ r12ᵢ·Π_{j≠i}(x−tⱼ).
    let mut num = vec![cr(0.0); n];
    for i in 0..n {
        let mut partial = vec![cr(1.0)];
        for (j, t) in sys.positions.iter().enumerate() {
            if j == i {
                continue;
            }
            // multiply by (x - t)
            let mut next = vec![cr(0.0); partial.len() + 1];
            for (k, c) in partial.iter().enumerate() {
                next[k + 1] += *c;
                next[k] -= *c * t;
            }
            partial = next;
        }
        for (k, c) in partial.iter().enumerate() {
            num[k] += *c * r12[i];
        }
    }
    let zeros = poly_roots(&num);
    // Cluster zeros into apparent points with multiplicity.
    let cluster_tol = 1e-6 * (1.0 + zeros.iter().map(|z| z.norm()).fold(0.0, f64::max));
    let mut apparent: Vec<ApparentPoint> = Vec::new();
    for z in &zeros {
        if let Some(ap) = apparent
            .iter_mut()
            .find(|ap| (ap.lambda - z).norm() < cluster_tol)
        {
            ap.order += 1;
        } else {
            apparent.push(ApparentPoint {
                lambda: *z,
                order: 1,
            });
        }
    }
    for ap in &apparent {
        for (i, t) in sys.positions.iter().enumerate() {
            if (ap.lambda - t).norm() < cluster_tol {
                return Err(Error::unsupported(format!(
                    "zero of A12 coincides with singularity t_{i}"
                )));
            }
        }
    }

    let a11: Vec<C> = sys.residues.iter().map(|a| a.e[0][0]).collect();
    let a22: Vec<C> = sys.residues.iter().map(|a| a.e[1][1]).collect();
    let a21: Vec<C> = sys.residues.iter().map(|a| a.e[1][0]).collect();

    let mut points = Vec::with_capacity(n + apparent.len());
    for i in 0..n {
        let t_i = sys.positions[i];
        let tr = a11[i] + a22[i];
        let det = sys.residues[i].det();
        // φᵢ(tᵢ): regular part of A12'/A12 at tᵢ equals sᵢ/r12ᵢ with
        // sᵢ the regular value of A12 there.
        let mut s_i = cr(0.0);
        let mut rho_i = cr(0.0);
        let mut det_cross = cr(0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = t_i - sys.positions[j];
            s_i += r12[j] / d;
            rho_i += a11[j] / d;
            det_cross += (a11[i] * a22[j] + a11[j] * a22[i]
                - r12[i] * a21[j]
                - r12[j] * a21[i])
                / d;
        }
        let phi_i = s_i / r12[i];
        let c = a11[i] * phi_i - rho_i + det_cross;
        points.push(EqPoint {
            z: t_i,
            a: cr(1.0) - tr,
            b: det,
            c,
        });
    }
    for ap in &apparent {
        // A11 evaluated at λ.
        let a11_l: C = sys
            .positions
            .iter()
            .zip(a11.iter())
            .map(|(t, a)| a / (ap.lambda - t))
            .fold(cr(0.0), |acc, z| acc + z);
        points.push(EqPoint {
            z: ap.lambda,
            a: cr(-(ap.order as f64)),
            b: cr(0.0),
            c: a11_l * cr(ap.order as f64),
        });
    }

    let eq = FuchsianEquation::new(points)?;
    Ok((eq, apparent))
}

// ---------------------------------------------------------------------
// Dictionary: equation → systems.
// ---------------------------------------------------------------------

/// Which of the two one-parameter families of normalized systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Classification of an equation's finite points into carriers of
/// monodromy and apparent singularities.
fn classify_points(eq: &FuchsianEquation) -> (Vec<usize>, Vec<usize>) {
    let mut carriers = Vec::new();
    let mut apparent = Vec::new();
    for (i, p) in eq.points.iter().enumerate() {
        let (s1, s2) = quadratic_roots(p.a - cr(1.0), p.b);
        let near_int = |z: C| (z.re - z.re.round()).abs() < 1e-8 && z.im.abs() < 1e-8;
        let is_zero = |z: C| z.norm() < 1e-8;
        if near_int(s1) && near_int(s2) && (is_zero(s1) || is_zero(s2)) && p.b.norm() < 1e-8 {
            apparent.push(i);
        } else {
            carriers.push(i);
        }
    }
    (carriers, apparent)
}

/// The unique system with A₁₂ = ξ·Λ(x)/T(x) and the requested
/// ∞-normalization whose first-row equation is `eq`.
///
/// Requires the generic configuration: non-resonant exponents, all
/// apparent points simple (exponents (0, 2)), and exactly n = #carriers−2
/// of them.
pub fn equation_to_systems(
    eq: &FuchsianEquation,
    xi: C,
    branch: Branch,
) -> Result<FuchsianSystem> {
    if xi.norm() < 1e-14 {
        return Err(Error::input("gauge parameter xi must be nonzero"));
    }
    let (carriers, apparent_idx) = classify_points(eq);
    let np2 = carriers.len();
    if np2 < 3 {
        return Err(Error::unsupported(
            "need at least three non-apparent singularities (with infinity)",
        ));
    }
    let n = np2 - 2;
    if apparent_idx.len() != n {
        return Err(Error::unsupported(format!(
            "generic dictionary requires exactly {n} simple apparent singularities, found {}",
            apparent_idx.len()
        )));
    }
    for &k in &apparent_idx {
        let (s1, s2) = quadratic_roots(eq.points[k].a - cr(1.0), eq.points[k].b);
        let hi = s1.re.max(s2.re).round() as i64;
        if hi != 2 {
            return Err(Error::unsupported(
                "only simple apparent singularities (exponents (0,2)) are supported",
            ));
        }
    }

    let t: Vec<C> = carriers.iter().map(|&i| eq.points[i].z).collect();
    let lambda: Vec<C> = apparent_idx.iter().map(|&i| eq.points[i].z).collect();
    let mu: Vec<C> = apparent_idx.iter().map(|&i| eq.points[i].c).collect();

    // Infinity exponents, ordered deterministically.
    let (e1, e2) = {
        let (a, b) = eq.infinity_exponents();
        order_pair(a, b)
    };
    let gap = e1 - e2;
    if (gap.re - gap.re.round()).abs() + gap.im.abs() < 1e-8 {
        return Err(Error::structure("resonant exponents at infinity"));
    }
    let (d1, d2) = match branch {
        Branch::Plus => (e1, e2 - cr(1.0)),
        Branch::Minus => (e2, e1 - cr(1.0)),
    };

    // A12 residues from Λ/T.
    let big_lambda = |x: C| -> C {
        lambda.iter().map(|l| x - l).fold(cr(1.0), |a, z| a * z)
    };
    let mut a12 = vec![cr(0.0); np2];
    for i in 0..np2 {
        let mut tp = cr(1.0);
        for j in 0..np2 {
            if j != i {
                tp *= t[i] - t[j];
            }
        }
        a12[i] = xi * big_lambda(t[i]) / tp;
    }

    // Linear solve for the A11 residues.
    let trace: Vec<C> = carriers.iter().map(|&i| cr(1.0) - eq.points[i].a).collect();
    let dets: Vec<C> = carriers.iter().map(|&i| eq.points[i].b).collect();
    let u = -d1;
    let v = -d2;
    let s1_sum: C = t
        .iter()
        .zip(trace.iter())
        .map(|(ti, tr)| ti * tr)
        .fold(cr(0.0), |a, z| a + z);
    let q3: C = eq
        .points
        .iter()
        .map(|p| cr(2.0) * p.b * p.z + p.c * p.z * p.z)
        .fold(cr(0.0), |a, z| a + z);
    let s_t: C = t.iter().fold(cr(0.0), |a, z| a + z);
    let s_l: C = lambda.iter().fold(cr(0.0), |a, z| a + z);
    let u2 = (q3 + u * (s_t - s_l) - u * s1_sum) / (v - u);

    let dim = np2;
    let mut mat = nalgebra::DMatrix::<C>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<C>::zeros(dim);
    for (k, lk) in lambda.iter().enumerate() {
        for i in 0..np2 {
            mat[(k, i)] = cr(1.0) / (lk - t[i]);
        }
        rhs[k] = mu[k];
    }
    for i in 0..np2 {
        mat[(n, i)] = cr(1.0);
        mat[(n + 1, i)] = t[i];
    }
    rhs[n] = u;
    rhs[n + 1] = u2;
    let lu = mat.lu();
    let a11 = lu
        .solve(&rhs)
        .ok_or_else(|| Error::numeric("singular linear system for A11 residues"))?;

    let mut residues = Vec::with_capacity(np2);
    for i in 0..np2 {
        let a11_i = a11[i];
        let a22_i = trace[i] - a11_i;
        let a21_i = (a11_i * a22_i - dets[i]) / a12[i];
        residues.push(Mat2::new(a11_i, a12[i], a21_i, a22_i));
    }
    let sys = FuchsianSystem::new(t, residues)?;

    // Verify the construction: normalization and round trip.
    let ai = sys.a_infinity();
    let off = ai.e[0][1].norm() + ai.e[1][0].norm();
    let diag_err = (ai.e[0][0] - d1).norm() + (ai.e[1][1] - d2).norm();
    let scale = 1.0 + ai.norm();
    if off > 1e-8 * scale || diag_err > 1e-7 * scale {
        return Err(Error::numeric(format!(
            "constructed system is not normalized (off {off:.2e}, diag {diag_err:.2e})"
        )));
    }
    let (back, _) = system_to_equation(&sys)?;
    let mismatch = equation_distance(eq, &back);
    let eq_scale = eq
        .points
        .iter()
        .map(|p| p.a.norm().max(p.b.norm()).max(p.c.norm()))
        .fold(1.0, f64::max);
    if mismatch > 1e-7 * eq_scale {
        return Err(Error::unsupported(format!(
            "equation is not reproduced (distance {mismatch:.3e}); are all declared apparent points non-logarithmic?"
        )));
    }
    Ok(sys)
}

/// Max distance between matched partial-fraction data of two equations.
pub fn equation_distance(e1: &FuchsianEquation, e2: &FuchsianEquation) -> f64 {
    let mut worst: f64 = 0.0;
    if e1.points.len() != e2.points.len() {
        return f64::INFINITY;
    }
    for p in &e1.points {
        let q = e2
            .points
            .iter()
            .min_by(|a, b| {
                (a.z - p.z)
                    .norm()
                    .partial_cmp(&(b.z - p.z).norm())
                    .unwrap()
            })
            .unwrap();
        worst = worst
            .max((p.z - q.z).norm())
            .max((p.a - q.a).norm())
            .max((p.b - q.b).norm())
            .max((p.c - q.c).norm());
    }
    worst
}

// ---------------------------------------------------------------------
// Accessory parameters (Garnier normalization).
// ---------------------------------------------------------------------

/// Accessory parameters K₁..K_n making every λ_k non-logarithmic for the
/// equation with scheme {(0, θᵢ) at tᵢ, (α, α + θ∞) at ∞, (0, 2) at λ_k},
/// together with that equation.
///
/// `theta` lists θ₁..θ_{n+2}, θ∞ (length n+3); `t_free` lists t₁..t_n
/// (the positions 0 and 1 are implied).
pub fn garnier_accessory(
    theta: &[f64],
    lambda: &[C],
    mu: &[C],
    t_free: &[C],
) -> Result<(Vec<C>, FuchsianEquation)> {
    let n = t_free.len();
    if theta.len() != n + 3 || lambda.len() != n || mu.len() != n {
        return Err(Error::input(format!(
            "expected {} thetas and {n} lambdas/mus",
            n + 3
        )));
    }
    for th in theta {
        if (th - th.round()).abs() < 1e-9 {
            return Err(Error::input("theta values must not be integers"));
        }
    }
    let mut t = t_free.to_vec();
    t.push(cr(0.0));
    t.push(cr(1.0));
    for (i, a) in t.iter().enumerate() {
        for b in t.iter().skip(i + 1) {
            if (a - b).norm() < 1e-10 {
                return Err(Error::input("coincident singular positions"));
            }
        }
    }
    for l in lambda {
        for ti in &t {
            if (l - ti).norm() < 1e-10 {
                return Err(Error::input("apparent point coincides with a singularity"));
            }
        }
    }

    let theta_inf = theta[n + 2];
    let alpha = cr((1.0 - theta.iter().sum::<f64>()) / 2.0);
    let kappa = alpha * (alpha + cr(theta_inf));

    let big_t = |x: C| t.iter().map(|ti| x - ti).fold(cr(1.0), |a, z| a * z);
    let big_t_prime = |i: usize| {
        let mut p = cr(1.0);
        for (j, tj) in t.iter().enumerate() {
            if j != i {
                p *= t[i] - tj;
            }
        }
        p
    };
    let big_l = |x: C| lambda.iter().map(|l| x - l).fold(cr(1.0), |a, z| a * z);
    let big_l_prime = |k: usize| {
        let mut p = cr(1.0);
        for (j, lj) in lambda.iter().enumerate() {
            if j != k {
                p *= lambda[k] - lj;
            }
        }
        p
    };

    let mut cap_k = Vec::with_capacity(n);
    for i in 0..n {
        let m_i = -big_l(t[i]) / big_t_prime(i);
        let mut sum = cr(0.0);
        for k in 0..n {
            let mki = big_t(lambda[k]) / ((lambda[k] - t[i]) * big_l_prime(k));
            let mut inner = mu[k] * mu[k];
            for (j, tj) in t.iter().enumerate() {
                let delta = if j == i { 1.0 } else { 0.0 };
                inner -= (cr(theta[j] - delta) / (lambda[k] - tj)) * mu[k];
            }
            inner += kappa / (lambda[k] * (lambda[k] - cr(1.0)));
            sum += mki * inner;
        }
        cap_k.push(m_i * sum);
    }

    // Assemble the equation (A.3 form).
    let mut points = Vec::with_capacity(n + 2 + n);
    let mut c0 = -kappa;
    let mut c1 = kappa;
    for i in 0..n {
        c0 -= (t[i] - cr(1.0)) * cap_k[i];
        c1 += t[i] * cap_k[i];
    }
    for k in 0..n {
        c0 += (lambda[k] - cr(1.0)) * mu[k];
        c1 -= lambda[k] * mu[k];
    }
    for i in 0..n {
        points.push(EqPoint {
            z: t[i],
            a: cr(1.0 - theta[i]),
            b: cr(0.0),
            c: -cap_k[i],
        });
    }
    points.push(EqPoint {
        z: cr(0.0),
        a: cr(1.0 - theta[n]),
        b: cr(0.0),
        c: c0,
    });
    points.push(EqPoint {
        z: cr(1.0),
        a: cr(1.0 - theta[n + 1]),
        b: cr(0.0),
        c: c1,
    });
    for k in 0..n {
        points.push(EqPoint {
            z: lambda[k],
            a: cr(-1.0),
            b: cr(0.0),
            c: mu[k],
        });
    }
    let eq = FuchsianEquation::new(points)?;
    Ok((cap_k, eq))
}
