//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4)) over
//! generic states: 2×2 complex matrices, augmented immersion states, and
//! whole residue tuples for the Schlesinger flow.

use crate::error::Error;
use crate::spin3::Mat2;
use crate::Result;

/// State vectors the integrator can drive.
pub trait OdeState: Clone {
    /// self += c · other
    fn axpy(&mut self, c: f64, other: &Self);
    /// Max-norm used for error control.
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl OdeState for Mat2 {
    fn axpy(&mut self, c: f64, other: &Self) {
        for i in 0..2 {
            for j in 0..2 {
                self.e[i][j] += other.e[i][j] * c;
            }
        }
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
    fn is_finite(&self) -> bool {
        Mat2::is_finite(self)
    }
}

impl OdeState for Vec<Mat2> {
    fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            a.axpy(c, b);
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|m| m.is_finite())
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn axpy(&mut self, c: f64, other: &Self) {
        self.0.axpy(c, &other.0);
        self.1.axpy(c, &other.1);
    }
    fn norm(&self) -> f64 {
        self.0.norm().max(self.1.norm())
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

impl OdeState for [num_complex::Complex<f64>; 3] {
    fn axpy(&mut self, c: f64, other: &Self) {
        for i in 0..3 {
            self[i] += other[i] * c;
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C_NODES: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Controls for adaptive stepping.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_min: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: crate::tol::TRANSPORT_RTOL,
            atol: crate::tol::TRANSPORT_ATOL,
            max_steps: 2_000_000,
            h_min: 1e-14,
        }
    }
}

/// Integrate dy/ds = f(s, y) from s = s0 to s = s1, calling `observer`
/// after each accepted step when provided.
pub fn integrate<S, F>(
    f: &F,
    s0: f64,
    s1: f64,
    y0: S,
    opts: &OdeOptions,
    mut observer: Option<&mut dyn FnMut(f64, &S)>,
) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let span = s1 - s0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut s = s0;
    let mut y = y0;
    let mut h = (span.abs() / 50.0).min(0.1 * span.abs().max(1e-3)) * dir;
    let mut k1 = f(s, &y);
    let mut steps = 0usize;

    while (s1 - s) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::numeric(format!(
                "ODE step budget exhausted at s = {s} (of {s1})"
            )));
        }
        if h.abs() < opts.h_min * span.abs().max(1.0) {
            return Err(Error::numeric(format!(
                "ODE step underflow at s = {s}; the path likely grazes a singularity"
            )));
        }
        if (s + h - s1) * dir > 0.0 {
            h = s1 - s;
        }

        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    ys.axpy(h * a, kj);
                }
            }
            k.push(f(s + C_NODES[stage] * h, &ys));
        }

        let mut y5 = y.clone();
        let mut err_state = y.clone();
        // err_state accumulates h·Σ(b5−b4)k; start from zero by subtracting y.
        err_state.axpy(-1.0, &y);
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5.axpy(h * B5[j], kj);
            }
            let d = B5[j] - B4[j];
            if d != 0.0 {
                err_state.axpy(h * d, kj);
            }
        }

        let scale = opts.atol + opts.rtol * y.norm().max(y5.norm());
        let err = err_state.norm() / scale;

        if !y5.is_finite() {
            h *= 0.25;
            continue;
        }

        if err <= 1.0 {
            s += h;
            y = y5;
            k1 = k.pop().expect("seven stages computed"); // FSAL
            if let Some(obs) = observer.as_mut() {
                obs(s, &y);
            }
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin3::{cr, Mat2};

    #[test]
    fn scalar_exponential() {
        // y' = y as a diagonal matrix system.
        let f = |_s: f64, y: &Mat2| y.clone();
        let y = integrate(&f, 0.0, 1.0, Mat2::identity(), &OdeOptions::default(), None).unwrap();
        assert!((y.e[0][0].re - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn reversibility() {
        let a = Mat2::new(cr(0.3), cr(-1.2), cr(0.7), cr(-0.3));
        let f = |_s: f64, y: &Mat2| a.mul(y);
        let opts = OdeOptions::default();
        let fwd = integrate(&f, 0.0, 2.0, Mat2::identity(), &opts, None).unwrap();
        let back = integrate(&f, 2.0, 0.0, fwd, &opts, None).unwrap();
        assert!(back.sub(&Mat2::identity()).norm() < 1e-9);
    }
}
