//! Complex 2×2 matrix algebra, the SU(2) → SO(3) double cover, half-turn
//! lifts, and the identification of ℝ³ with trace-free Hermitian matrices.
//!
//! A vector X = (X₁, X₂, X₃) is identified with
//!
//! ```text
//!         ( -X₃        X₁ - iX₂ )
//!   X~ =  ( X₁ + iX₂   X₃       )
//! ```
//!
//! so that ‖X‖² = -det X~, and a unitary A acts by X~ ↦ conj(A)ᵀ · X~ · A,
//! which is the rotation covered by ±A.

use crate::error::Error;
use crate::tol;
use crate::Result;
use num_complex::Complex;

/// Complex scalar used throughout the crate.
pub type C = Complex<f64>;

/// Imaginary unit.
pub const I: C = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C {
    Complex { re, im }
}

pub fn cr(re: f64) -> C {
    Complex { re, im: 0.0 }
}

/// Complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[C; 2]; 2],
}

impl Mat2 {
    pub fn new(a: C, b: C, c: C, d: C) -> Self {
        Mat2 { e: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        Mat2::new(cr(0.0), cr(0.0), cr(0.0), cr(0.0))
    }

    pub fn identity() -> Self {
        Mat2::new(cr(1.0), cr(0.0), cr(0.0), cr(1.0))
    }

    pub fn diag(a: C, d: C) -> Self {
        Mat2::new(a, cr(0.0), cr(0.0), d)
    }

    pub fn from_real(a: f64, b: f64, c2: f64, d: f64) -> Self {
        Mat2::new(cr(a), cr(b), cr(c2), cr(d))
    }

    pub fn trace(&self) -> C {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> C {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.e[0][0], self.e[1][0], self.e[0][1], self.e[1][1])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Mat2 {
        Mat2::new(
            self.e[0][0].conj(),
            self.e[0][1].conj(),
            self.e[1][0].conj(),
            self.e[1][1].conj(),
        )
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat2 {
        self.conj().transpose()
    }

    pub fn scale(&self, s: C) -> Mat2 {
        Mat2::new(
            self.e[0][0] * s,
            self.e[0][1] * s,
            self.e[1][0] * s,
            self.e[1][1] * s,
        )
    }

    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] + rhs.e[0][0],
            self.e[0][1] + rhs.e[0][1],
            self.e[1][0] + rhs.e[1][0],
            self.e[1][1] + rhs.e[1][1],
        )
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] - rhs.e[0][0],
            self.e[0][1] - rhs.e[0][1],
            self.e[1][0] - rhs.e[1][0],
            self.e[1][1] - rhs.e[1][1],
        )
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn inv(&self) -> Result<Mat2> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return Err(Error::structure("singular 2x2 matrix has no inverse"));
        }
        let s = cr(1.0) / d;
        Ok(Mat2::new(
            self.e[1][1] * s,
            -self.e[0][1] * s,
            -self.e[1][0] * s,
            self.e[0][0] * s,
        ))
    }

    /// Commutator [self, rhs] = self·rhs − rhs·self.
    pub fn commutator(&self, rhs: &Mat2) -> Mat2 {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues, by the quadratic formula. The branch of the square
    /// root is the principal one; callers that need a specific pairing
    /// sort afterwards.
    pub fn eigenvalues(&self) -> (C, C) {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - cr(4.0) * d).sqrt();
        ((t + disc) * cr(0.5), (t - disc) * cr(0.5))
    }

    /// Eigen-decomposition self = V · diag(l1, l2) · V⁻¹ for matrices
    /// with distinct eigenvalues.
    pub fn eigen_decomposition(&self) -> Result<(Mat2, (C, C))> {
        let (l1, l2) = self.eigenvalues();
        if (l1 - l2).norm() < 1e-13 * (1.0 + self.norm()) {
            return Err(Error::structure(
                "eigen-decomposition requested for a (near-)defective matrix",
            ));
        }
        let col = |l: C| -> (C, C) {
            // A nonzero column of (self − l2'·I) adjugate: (A−l)v = 0.
            let u1 = (self.e[0][1], l - self.e[0][0]);
            let u2 = (l - self.e[1][1], self.e[1][0]);
            let n1 = u1.0.norm_sqr() + u1.1.norm_sqr();
            let n2 = u2.0.norm_sqr() + u2.1.norm_sqr();
            let v = if n1 >= n2 { u1 } else { u2 };
            let n = (v.0.norm_sqr() + v.1.norm_sqr()).sqrt();
            let v = (v.0 / n, v.1 / n);
            // Deterministic phase: the larger component real positive.
            let lead = if v.0.norm() >= v.1.norm() { v.0 } else { v.1 };
            let ph = (lead / lead.norm()).conj();
            (v.0 * ph, v.1 * ph)
        };
        let v1 = col(l1);
        let v2 = col(l2);
        let v = Mat2::new(v1.0, v2.0, v1.1, v2.1);
        if v.det().norm() < 1e-12 {
            return Err(Error::structure("eigenvector matrix is singular"));
        }
        Ok((v, (l1, l2)))
    }

    /// Matrix exponential via eigen-decomposition; falls back to a scaled
    /// series for (near-)defective matrices.
    pub fn exp(&self) -> Mat2 {
        if let Ok((v, (l1, l2))) = self.eigen_decomposition() {
            let d = Mat2::diag(l1.exp(), l2.exp());
            return v.mul(&d).mul(&v.inv().expect("eigenvector matrix invertible"));
        }
        // Scaling and squaring with a short Taylor series.
        let norm = self.norm();
        let k = (norm.log2().ceil().max(0.0) as u32) + 4;
        let m = self.scale(cr((0.5f64).powi(k as i32)));
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for j in 1..20 {
            term = term.mul(&m).scale(cr(1.0 / j as f64));
            sum = sum.add(&term);
        }
        let mut out = sum;
        for _ in 0..k {
            out = out.mul(&out);
        }
        out
    }

    /// Flatten row-major to a length-4 array.
    pub fn to_array(&self) -> [C; 4] {
        [self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1]]
    }
}

/// Real 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn add(&self, o: &Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn normalize(&self) -> Result<Vec3> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::input("cannot normalize the zero vector"));
        }
        Ok(self.scale(1.0 / n))
    }

    fn check_unit(&self, what: &str) -> Result<()> {
        if (self.norm() - 1.0).abs() > tol::UNIT_VECTOR {
            return Err(Error::input(format!(
                "{what} must be a unit vector (norm = {})",
                self.norm()
            )));
        }
        Ok(())
    }
}

/// An element of SU(2) viewed as a lift of a rotation.
#[derive(Debug, Clone, Copy)]
pub struct RotationLift(Mat2);

impl RotationLift {
    /// Wrap a matrix, checking unitarity and det = 1.
    pub fn try_new(m: Mat2) -> Result<Self> {
        let u = m.adjoint().mul(&m).sub(&Mat2::identity()).norm();
        if u > tol::LIFT * 10.0 {
            return Err(Error::input(format!(
                "lift is not unitary (residual {u:.3e})"
            )));
        }
        let d = (m.det() - cr(1.0)).norm();
        if d > tol::LIFT * 10.0 {
            return Err(Error::input(format!(
                "lift does not have determinant 1 (residual {d:.3e})"
            )));
        }
        Ok(RotationLift(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn negate(&self) -> RotationLift {
        RotationLift(self.0.scale(cr(-1.0)))
    }

    pub fn mul(&self, rhs: &RotationLift) -> RotationLift {
        RotationLift(self.0.mul(&rhs.0))
    }

    pub fn inv(&self) -> RotationLift {
        // For unit-determinant 2x2 matrices the inverse is the adjugate.
        let m = &self.0;
        RotationLift(Mat2::new(
            m.e[1][1],
            -m.e[0][1],
            -m.e[1][0],
            m.e[0][0],
        ))
    }
}

/// The matrix J = [[0, -1], [1, 0]], a lift of the half-turn about e₂.
pub fn j_matrix() -> Mat2 {
    Mat2::from_real(0.0, -1.0, 1.0, 0.0)
}

/// σ~(v) = [[-v₃, v₁ - iv₂], [v₁ + iv₂, v₃]], the Hermitian image of v.
pub fn vec_to_hermitian(v: &Vec3) -> Mat2 {
    let [x1, x2, x3] = v.0;
    Mat2::new(cr(-x3), c(x1, -x2), c(x1, x2), cr(x3))
}

/// Inverse of [`vec_to_hermitian`]. The input must be Hermitian and
/// trace-free within `1e-10`.
pub fn hermitian_to_vec(m: &Mat2) -> Result<Vec3> {
    let herm = m.sub(&m.adjoint()).norm();
    let tr = m.trace().norm();
    let scale = 1.0 + m.norm();
    if herm > tol::UNIT_VECTOR * scale || tr > tol::UNIT_VECTOR * scale {
        return Err(Error::input(format!(
            "matrix is not trace-free Hermitian (hermitian defect {herm:.3e}, trace {tr:.3e})"
        )));
    }
    let x3 = m.e[1][1].re;
    let x1 = m.e[1][0].re;
    let x2 = m.e[1][0].im;
    Ok(Vec3([x1, x2, x3]))
}

/// The lift A of the rotation with unit `axis` and `angle` φ:
///
///   A = cos(φ/2)·I₂ − i·sin(φ/2)·σ~(axis).
///
/// The other lift of the same rotation is −A; this constructor always
/// returns the branch above with the angle reduced to [0, 2π).
pub fn lift_rotation(axis: &Vec3, angle: f64) -> Result<RotationLift> {
    axis.check_unit("rotation axis")?;
    let phi = angle.rem_euclid(2.0 * std::f64::consts::PI);
    let (s, co) = (phi / 2.0).sin_cos();
    let m = Mat2::diag(cr(co), cr(co)).sub(&vec_to_hermitian(axis).scale(c(0.0, s)));
    RotationLift::try_new(m)
}

/// Lift of the half-turn about `direction`; squares to −I₂ exactly.
pub fn half_turn_lift(direction: &Vec3) -> Result<RotationLift> {
    direction.check_unit("half-turn direction")?;
    lift_rotation(direction, std::f64::consts::PI)
}

/// The SO(3) matrix R covered by ±A, defined through
/// σ~(R·X) = conj(A)ᵀ · σ~(X) · A.
///
/// Composition order: this map reverses products,
/// R(A·B) = R(B)·R(A); see the module tests.
pub fn rotation_from_lift(lift: &RotationLift) -> [[f64; 3]; 3] {
    let a = lift.matrix();
    let at = a.adjoint();
    let mut r = [[0.0; 3]; 3];
    let basis = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    for (j, ej) in basis.iter().enumerate() {
        let m = at.mul(&vec_to_hermitian(ej)).mul(a);
        let v = hermitian_to_vec(&m).expect("conjugation preserves trace-free Hermitian");
        for i in 0..3 {
            r[i][j] = v.0[i];
        }
    }
    r
}

/// Rodrigues rotation matrix about a unit `axis` by `angle`.
pub fn rodrigues(axis: &Vec3, angle: f64) -> [[f64; 3]; 3] {
    let (s, co) = angle.sin_cos();
    let [x, y, z] = axis.0;
    let k = [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut k2 = 0.0;
            for l in 0..3 {
                k2 += k[i][l] * k[l][j];
            }
            r[i][j] = if i == j { 1.0 } else { 0.0 } + s * k[i][j] + (1.0 - co) * k2;
        }
    }
    r
}

/// Apply a 3×3 matrix to a vector.
pub fn apply3(r: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i][0] * v.0[0] + r[i][1] * v.0[1] + r[i][2] * v.0[2];
    }
    Vec3(out)
}

pub fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

pub fn mat3_dist(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                return v.normalize().unwrap();
            }
        }
    }

    fn random_lift(rng: &mut impl Rng) -> RotationLift {
        let axis = random_unit(rng);
        let angle = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        lift_rotation(&axis, angle).unwrap()
    }

    #[test]
    fn lift_about_e3_is_diagonal() {
        let phi = 0.7;
        let a = lift_rotation(&Vec3::new(0.0, 0.0, 1.0), phi).unwrap();
        let expect = Mat2::diag(c(0.0, phi / 2.0).exp(), c(0.0, -phi / 2.0).exp());
        assert!(a.matrix().sub(&expect).norm() < 1e-14);
    }

    #[test]
    fn half_turn_about_e2_is_j() {
        let d = half_turn_lift(&Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert!(d.matrix().sub(&j_matrix()).norm() < 1e-14);
    }

    #[test]
    fn half_turn_about_e1_matches_closed_form() {
        let d = half_turn_lift(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let expect = Mat2::new(cr(0.0), c(0.0, -1.0), c(0.0, -1.0), cr(0.0));
        assert!(d.matrix().sub(&expect).norm() < 1e-14);
    }

    #[test]
    fn half_turn_about_e3_is_diag_i() {
        let d = half_turn_lift(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let expect = Mat2::diag(c(0.0, 1.0), c(0.0, -1.0));
        assert!(d.matrix().sub(&expect).norm() < 1e-14);
    }

    #[test]
    fn half_turn_squares_to_minus_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = random_unit(&mut rng);
            let d = half_turn_lift(&u).unwrap();
            let sq = d.matrix().mul(d.matrix());
            assert!(sq.add(&Mat2::identity()).norm() < tol::LIFT);
        }
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(lift_rotation(&Vec3::new(0.0, 0.0, 2.0), 1.0).is_err());
        assert!(half_turn_lift(&Vec3::new(0.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn double_cover_matches_rodrigues() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let axis = random_unit(&mut rng);
            let angle = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let lift = lift_rotation(&axis, angle).unwrap();
            let r = rotation_from_lift(&lift);
            let rod = rodrigues(&axis, angle);
            assert!(
                mat3_dist(&r, &rod) < tol::GEOMETRIC,
                "axis {:?} angle {}",
                axis,
                angle
            );
        }
    }

    #[test]
    fn both_lifts_cover_the_same_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_lift(&mut rng);
            let r1 = rotation_from_lift(&a);
            let r2 = rotation_from_lift(&a.negate());
            assert!(mat3_dist(&r1, &r2) < 1e-13);
        }
    }

    #[test]
    fn identity_lifts_to_identity_rotation() {
        let lift = RotationLift::try_new(Mat2::identity()).unwrap();
        let r = rotation_from_lift(&lift);
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(mat3_dist(&r, &id) < 1e-15);
    }

    #[test]
    fn quarter_turn_about_e3() {
        let lift = lift_rotation(&Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2).unwrap();
        let r = rotation_from_lift(&lift);
        let expect = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(mat3_dist(&r, &expect) < 1e-14);
    }

    /// The conjugation action X~ ↦ conj(A)ᵀ X~ A reverses products:
    /// R(AB) = R(B)R(A).
    #[test]
    fn cover_reverses_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_lift(&mut rng);
            let b = random_lift(&mut rng);
            let rab = rotation_from_lift(&a.mul(&b));
            let rb_ra = mat3_mul(&rotation_from_lift(&b), &rotation_from_lift(&a));
            assert!(mat3_dist(&rab, &rb_ra) < tol::GEOMETRIC);
        }
    }

    /// MJ = J·conj(M) for M in SU(2).
    #[test]
    fn j_conjugation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = j_matrix();
        for _ in 0..100 {
            let m = random_lift(&mut rng);
            let lhs = m.matrix().mul(&j);
            let rhs = j.mul(&m.matrix().conj());
            assert!(lhs.sub(&rhs).norm() < tol::LIFT);
        }
    }

    #[test]
    fn hermitian_roundtrip_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let v = Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let m = vec_to_hermitian(&v);
            let back = hermitian_to_vec(&m).unwrap();
            assert!(v.sub(&back).norm() < 1e-14);
            assert!((v.dot(&v) + m.det().re).abs() < 1e-12);
            assert!(m.det().im.abs() < 1e-14);
        }
    }

    #[test]
    fn hermitian_to_vec_rejects_bad_input() {
        assert!(hermitian_to_vec(&Mat2::diag(cr(1.0), cr(1.0))).is_err());
        assert!(hermitian_to_vec(&Mat2::new(cr(0.0), cr(1.0), cr(2.0), cr(0.0))).is_err());
    }

    #[test]
    fn e1_hermitian_example() {
        let m = vec_to_hermitian(&Vec3::new(1.0, 0.0, 0.0));
        assert!(m.sub(&Mat2::from_real(0.0, 1.0, 1.0, 0.0)).norm() < 1e-15);
        assert!((m.det().re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let m = Mat2::new(
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            if let Ok((v, (l1, l2))) = m.eigen_decomposition() {
                let rec = v.mul(&Mat2::diag(l1, l2)).mul(&v.inv().unwrap());
                assert!(rec.sub(&m).norm() < 1e-11 * (1.0 + m.norm()));
            }
        }
    }

    #[test]
    fn exp_matches_diagonal_case() {
        let m = Mat2::diag(c(0.0, 1.0), cr(-0.5));
        let e = m.exp();
        let expect = Mat2::diag(c(0.0, 1.0).exp(), cr(-0.5).exp());
        assert!(e.sub(&expect).norm() < 1e-13);
    }
}
