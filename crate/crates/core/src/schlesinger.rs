//! Isomonodromic deformation: the Schlesinger right-hand side, adaptive
//! flow with conservation diagnostics, the restricted system near a
//! cluster collision (pseudo-shock), limit extraction with two-exponent
//! Richardson extrapolation, the limit and cluster systems, and the
//! Picard iteration used as an independent oracle for the shock limits.

use crate::error::Error;
use crate::fuchs::{order_pair, FuchsianSystem};
use crate::rk::{integrate, OdeOptions};
use crate::spin3::{c, cr, Mat2, C};
use crate::tol;
use crate::Result;
use std::collections::HashMap;

/// ∂Aᵢ/∂tⱼ for all pairs: off-diagonal [Aᵢ, Aⱼ]/(tᵢ−tⱼ), diagonal
/// −Σ_{i≠j} ∂Aᵢ/∂tⱼ, so that columns sum to zero.
pub fn schlesinger_rhs(positions: &[C], residues: &[Mat2]) -> Result<Vec<Vec<Mat2>>> {
    let m = positions.len();
    if residues.len() != m {
        return Err(Error::input("positions/residues length mismatch"));
    }
    for i in 0..m {
        for j in i + 1..m {
            if (positions[i] - positions[j]).norm() < 1e-13 {
                return Err(Error::input(format!(
                    "singular configuration: t_{} = t_{}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut partial = vec![vec![Mat2::zero(); m]; m];
    for j in 0..m {
        let mut diag = Mat2::zero();
        for i in 0..m {
            if i == j {
                continue;
            }
            let d = residues[i]
                .commutator(&residues[j])
                .scale(cr(1.0) / (positions[i] - positions[j]));
            partial[i][j] = d;
            diag = diag.sub(&d);
        }
        partial[j][j] = diag;
    }
    Ok(partial)
}

/// Piecewise-linear path in the space of the moving positions.
#[derive(Debug, Clone)]
pub struct ParamPath {
    pub waypoints: Vec<Vec<C>>,
    /// Indices of the positions that move (the rest stay fixed).
    pub moving: Vec<usize>,
}

/// One accepted sample of the flow.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    /// Leg-local parameter in [0, 1] plus the leg index.
    pub leg: usize,
    pub s: f64,
    pub positions: Vec<C>,
    pub residues: Vec<Mat2>,
    pub eig_drift: f64,
    pub ainf_drift: f64,
}

/// Sampled Schlesinger flow with conservation diagnostics.
#[derive(Debug, Clone)]
pub struct SchlesingerTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub max_eig_drift: f64,
    pub max_ainf_drift: f64,
}

fn sorted_eigs(residues: &[Mat2]) -> Vec<(C, C)> {
    residues
        .iter()
        .map(|a| {
            let (x, y) = a.eigenvalues();
            order_pair(x, y)
        })
        .collect()
}

/// Integrate the Schlesinger system along the path. Aborts when two
/// positions approach each other off the real locus (moving poles);
/// on the real simplex the flow is regular and proceeds.
pub fn flow(sys: &FuchsianSystem, path: &ParamPath, rtol: f64) -> Result<SchlesingerTrajectory> {
    if path.waypoints.len() < 2 {
        return Err(Error::input("path needs at least two waypoints"));
    }
    let _m = sys.n_finite();
    for w in &path.waypoints {
        if w.len() != path.moving.len() {
            return Err(Error::input("waypoint dimension mismatch"));
        }
    }
    let start = &path.waypoints[0];
    for (k, &idx) in path.moving.iter().enumerate() {
        if (sys.positions[idx] - start[k]).norm() > 1e-9 {
            return Err(Error::input(
                "path must start at the system's current positions",
            ));
        }
    }
    let eig0 = sorted_eigs(&sys.residues);
    let ainf0 = sys.a_infinity();
    let scale = sys
        .positions
        .iter()
        .map(|t| t.norm())
        .fold(1.0f64, f64::max);

    let mut residues = sys.residues.clone();
    let mut samples = Vec::new();
    let mut max_eig: f64 = 0.0;
    let mut max_ainf: f64 = 0.0;

    for leg in 0..path.waypoints.len() - 1 {
        let from = path.waypoints[leg].clone();
        let to = path.waypoints[leg + 1].clone();
        let base_positions = sys.positions.clone();
        let positions_at = |s: f64| -> Vec<C> {
            let mut p = base_positions.clone();
            for (k, &idx) in path.moving.iter().enumerate() {
                p[idx] = from[k] + (to[k] - from[k]) * cr(s);
            }
            p
        };
        let velocity: Vec<C> = from.iter().zip(to.iter()).map(|(a, b)| b - a).collect();

        let f = |s: f64, state: &Vec<Mat2>| -> Vec<Mat2> {
            let pos = positions_at(s);
            let Ok(partial) = schlesinger_rhs(&pos, state) else {
                return vec![Mat2::new(cr(f64::NAN), cr(0.0), cr(0.0), cr(0.0)); state.len()];
            };
            let mut out = vec![Mat2::zero(); state.len()];
            for (i, o) in out.iter_mut().enumerate() {
                for (k, &idx) in path.moving.iter().enumerate() {
                    *o = o.add(&partial[i][idx].scale(velocity[k]));
                }
            }
            out
        };

        let opts = OdeOptions {
            rtol,
            atol: 1e-13,
            ..OdeOptions::default()
        };
        let mut abort: Option<String> = None;
        let mut observer = |s: f64, state: &Vec<Mat2>| {
            let pos = positions_at(s);
            let mut gap = f64::INFINITY;
            let mut off_real = false;
            for (i, a) in pos.iter().enumerate() {
                if a.im.abs() > 1e-9 {
                    off_real = true;
                }
                for b in pos.iter().skip(i + 1) {
                    gap = gap.min((a - b).norm());
                }
            }
            if off_real && gap < tol::DIAGONAL_CLEARANCE * scale && abort.is_none() {
                abort = Some(format!(
                    "positions within {gap:.3e} of the diagonal off the real locus at leg {leg}, s = {s:.4}"
                ));
            }
            let eigs = sorted_eigs(state);
            let mut ed: f64 = 0.0;
            for (e, e0) in eigs.iter().zip(eig0.iter()) {
                ed = ed.max((e.0 - e0.0).norm()).max((e.1 - e0.1).norm());
            }
            let mut sum = Mat2::zero();
            for a in state {
                sum = sum.add(a);
            }
            let ad = sum.scale(cr(-1.0)).sub(&ainf0).norm();
            samples.push(TrajectorySample {
                leg,
                s,
                positions: pos,
                residues: state.clone(),
                eig_drift: ed,
                ainf_drift: ad,
            });
        };
        residues = integrate(&f, 0.0, 1.0, residues, &opts, Some(&mut observer))?;
        if let Some(msg) = abort {
            return Err(Error::numeric(msg));
        }
        for s in &samples {
            max_eig = max_eig.max(s.eig_drift);
            max_ainf = max_ainf.max(s.ainf_drift);
        }
        // Ensure the endpoint is recorded even if the last step landed
        // exactly on s = 1 without an observer call.
        if samples
            .last()
            .map(|sm| sm.leg != leg || (sm.s - 1.0).abs() > 1e-12)
            .unwrap_or(true)
        {
            let pos = positions_at(1.0);
            samples.push(TrajectorySample {
                leg,
                s: 1.0,
                positions: pos,
                residues: residues.clone(),
                eig_drift: 0.0,
                ainf_drift: 0.0,
            });
        }
    }
    Ok(SchlesingerTrajectory {
        samples,
        max_eig_drift: max_eig,
        max_ainf_drift: max_ainf,
    })
}

// ---------------------------------------------------------------------
// Restricted (pseudo-shock) system.
// ---------------------------------------------------------------------

/// The collision chart t = (t', τ·ν): surviving positions t_α (the last
/// one is the fixed singularity at 1) and scaled cluster positions ν_β
/// (ν_p = 1 first, ν_{n+1} = 0 last).
#[derive(Debug, Clone)]
pub struct ShockChart {
    pub t_alpha: Vec<C>,
    pub nu: Vec<C>,
}

/// Right-hand side of the restricted Schlesinger system in τ:
/// dA_α/dτ = Σ_β ν_β/(τν_β − t_α)·[A_β, A_α],
/// dA_β/dτ = Σ_α ν_β/(τν_β − t_α)·[A_α, A_β] + (1/τ)·Σ_{β'≠β}[A_β', A_β].
pub fn restricted_rhs(
    chart: &ShockChart,
    tau: C,
    a_alpha: &[Mat2],
    a_beta: &[Mat2],
) -> Result<(Vec<Mat2>, Vec<Mat2>)> {
    if tau.norm() < 1e-300 {
        return Err(Error::input("restricted system is singular at τ = 0"));
    }
    for ta in &chart.t_alpha {
        for nb in &chart.nu {
            if (tau * nb - ta).norm() < 1e-12 {
                return Err(Error::input(
                    "singular configuration: τ·ν_β collides with a surviving position",
                ));
            }
        }
    }
    let mut da = vec![Mat2::zero(); a_alpha.len()];
    for (ai, (ta, da_i)) in a_alpha
        .iter()
        .zip(chart.t_alpha.iter().zip(da.iter_mut()))
    {
        for (bj, nb) in a_beta.iter().zip(chart.nu.iter()) {
            let k = nb / (tau * nb - ta);
            *da_i = da_i.add(&bj.commutator(ai).scale(k));
        }
    }
    let mut db = vec![Mat2::zero(); a_beta.len()];
    for (b_idx, (bj, nb)) in a_beta.iter().zip(chart.nu.iter()).enumerate() {
        let mut acc = Mat2::zero();
        for (ai, ta) in a_alpha.iter().zip(chart.t_alpha.iter()) {
            let k = nb / (tau * nb - ta);
            acc = acc.add(&ai.commutator(bj).scale(k));
        }
        for (b2, bp) in a_beta.iter().enumerate() {
            if b2 != b_idx {
                acc = acc.add(&bp.commutator(bj).scale(cr(1.0) / tau));
            }
        }
        db[b_idx] = acc;
    }
    Ok((da, db))
}

// ---------------------------------------------------------------------
// Shock limits.
// ---------------------------------------------------------------------

/// Limits of a pseudo-shock: surviving residues A_α⁰, cluster residues
/// A_β⁰, Λ = ΣA_β⁰ with eigenvalues ±μ, σ = 2·Re μ ∈ (0, 1).
#[derive(Debug, Clone)]
pub struct PseudoShockLimit {
    pub a_alpha0: Vec<Mat2>,
    pub a_beta0: Vec<Mat2>,
    pub lambda: Mat2,
    pub mu: C,
    pub sigma: f64,
    pub chart: ShockChart,
    pub a_inf: Mat2,
}

impl PseudoShockLimit {
    /// ‖Σ A_α⁰ + Λ + A∞‖.
    pub fn sum_identity_residual(&self) -> f64 {
        let mut s = self.lambda;
        for a in &self.a_alpha0 {
            s = s.add(a);
        }
        s.add(&self.a_inf).norm()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::unsupported(format!(
                "shock exponent σ = {} outside (0, 1)",
                self.sigma
            )));
        }
        let r = self.sum_identity_residual();
        if r > 1e-6 * (1.0 + self.a_inf.norm()) {
            return Err(Error::numeric(format!(
                "limit-sum identity violated: ‖ΣA_α⁰ + Λ + A∞‖ = {r:.3e}"
            )));
        }
        Ok(())
    }
}

/// τ^Λ for real τ (negative allowed: principal log, arg = π).
pub fn matrix_power(lambda: &Mat2, tau: f64) -> Result<Mat2> {
    let log_tau = cr(tau.abs()).ln() + if tau < 0.0 { c(0.0, std::f64::consts::PI) } else { cr(0.0) };
    let (v, (l1, l2)) = lambda.eigen_decomposition()?;
    let d = Mat2::diag((l1 * log_tau).exp(), (l2 * log_tau).exp());
    Ok(v.mul(&d).mul(&v.inv()?))
}

/// Two-exponent Richardson fit of m(τ) = c₀ + c₁|τ|^σ + c₂|τ|^{1−σ} on
/// the trailing samples; returns c₀.
fn richardson_limit(taus: &[f64], values: &[Mat2], sigma: f64) -> Result<Mat2> {
    let k = taus.len();
    if k < 3 {
        return Err(Error::input("need at least three samples for the fit"));
    }
    let use_n = k.min(8);
    let mut a = nalgebra::DMatrix::<f64>::zeros(use_n, 3);
    for (r, &tau) in taus[k - use_n..].iter().enumerate() {
        let at = tau.abs();
        a[(r, 0)] = 1.0;
        a[(r, 1)] = at.powf(sigma);
        a[(r, 2)] = at.powf(1.0 - sigma);
    }
    let ata = a.transpose() * &a;
    let lu = ata.lu();
    let mut out = Mat2::zero();
    for i in 0..2 {
        for j in 0..2 {
            for part in 0..2 {
                let mut atb = nalgebra::DVector::<f64>::zeros(3);
                for (r, v) in values[k - use_n..].iter().enumerate() {
                    let val = if part == 0 { v.e[i][j].re } else { v.e[i][j].im };
                    for col in 0..3 {
                        atb[col] += a[(r, col)] * val;
                    }
                }
                let sol = lu
                    .solve(&atb)
                    .ok_or_else(|| Error::numeric("Richardson fit matrix is singular"))?;
                if part == 0 {
                    out.e[i][j].re = sol[0];
                } else {
                    out.e[i][j].im = sol[0];
                }
            }
        }
    }
    Ok(out)
}

/// Extract the pseudo-shock limit from a trajectory sampled at
/// geometrically decreasing |τ| (τ < 0): `samples` pairs (τ, residues in
/// system order), `p` is the 1-based collision index (positions
/// t_p..t_{n+1} merge at 0). Returns the limit and the fitted log-log
/// deviation slopes for the surviving residues.
pub fn pseudo_shock_fit(
    samples: &[(f64, Vec<Mat2>)],
    positions: &[C],
    p: usize,
    a_inf: &Mat2,
) -> Result<(PseudoShockLimit, Vec<f64>)> {
    let m = positions.len(); // n + 2 finite singularities
    let n = m - 2;
    if p < 1 || p > n {
        return Err(Error::input("collision index out of range"));
    }
    if samples.len() < 6 {
        return Err(Error::input("need at least six τ samples"));
    }
    let alpha_idx: Vec<usize> = (0..p - 1).chain([m - 1]).collect();
    let beta_idx: Vec<usize> = (p - 1..=n).collect();
    let taus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let tau_min = taus.last().copied().unwrap();

    // Λ(τ) = Σ_β A_β(τ); iterate the σ estimate through the fit.
    let lam_samples: Vec<Mat2> = samples
        .iter()
        .map(|(_, res)| {
            let mut s = Mat2::zero();
            for &b in &beta_idx {
                s = s.add(&res[b]);
            }
            s
        })
        .collect();
    let mut sigma = {
        let (l1, _) = lam_samples.last().unwrap().eigenvalues();
        2.0 * l1.re.abs()
    };
    let mut lambda = *lam_samples.last().unwrap();
    for _ in 0..4 {
        lambda = richardson_limit(&taus, &lam_samples, sigma)?;
        let (l1, l2) = lambda.eigenvalues();
        let mu = if l1.re >= l2.re { l1 } else { l2 };
        sigma = 2.0 * mu.re;
        if !(sigma > 1e-6 && sigma < 1.0 - 1e-6) {
            return Err(Error::unsupported(format!(
                "fitted shock exponent σ = {sigma} outside (0, 1)"
            )));
        }
    }
    let (l1, l2) = lambda.eigenvalues();
    let mu = if l1.re >= l2.re { l1 } else { l2 };

    // Surviving residues.
    let mut a_alpha0 = Vec::with_capacity(alpha_idx.len());
    let mut slopes = Vec::with_capacity(alpha_idx.len());
    for &ai in &alpha_idx {
        let vals: Vec<Mat2> = samples.iter().map(|(_, r)| r[ai]).collect();
        let limit = richardson_limit(&taus, &vals, sigma)?;
        // Log-log slope of the deviation over the earlier samples.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (k, (&tau, v)) in taus.iter().zip(vals.iter()).enumerate() {
            if k + 4 >= taus.len() {
                break; // closest samples are dominated by fit error
            }
            let dev = v.sub(&limit).norm();
            if dev > 1e-13 {
                xs.push(tau.abs().ln());
                ys.push(dev.ln());
            }
        }
        let slope = if xs.len() >= 2 {
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let sxy: f64 = xs
                .iter()
                .zip(ys.iter())
                .map(|(x, y)| (x - mx) * (y - my))
                .sum();
            sxy / sxx.max(1e-30)
        } else {
            f64::NAN
        };
        a_alpha0.push(limit);
        slopes.push(slope);
    }

    // Cluster residues: τ^{-Λ}·A_β(τ)·τ^{Λ} → A_β⁰.
    let mut a_beta0 = Vec::with_capacity(beta_idx.len());
    for &bi in &beta_idx {
        let vals: Result<Vec<Mat2>> = samples
            .iter()
            .map(|(tau, r)| {
                let pw = matrix_power(&lambda, *tau)?;
                Ok(pw.inv()?.mul(&r[bi]).mul(&pw))
            })
            .collect();
        a_beta0.push(richardson_limit(&taus, &vals?, sigma)?);
    }

    let t_alpha: Vec<C> = alpha_idx.iter().map(|&i| positions[i]).collect();
    // ν_β = t_β/τ is τ-invariant along the ray. `positions` holds the
    // configuration at the FIRST sample (τ = samples[0].0).
    let tau0 = samples[0].0;
    let nu: Vec<C> = beta_idx.iter().map(|&i| positions[i] / cr(tau0)).collect();
    let _ = tau_min;
    let chart = ShockChart { t_alpha, nu };
    let limit = PseudoShockLimit {
        a_alpha0,
        a_beta0,
        lambda,
        mu,
        sigma,
        chart,
        a_inf: *a_inf,
    };
    Ok((limit, slopes))
}

/// The limit system (outer scale): residues A_α⁰ at t_α plus Λ at 0,
/// sorted by position.
pub fn limit_system(limit: &PseudoShockLimit) -> Result<FuchsianSystem> {
    limit.validate()?;
    let mut entries: Vec<(C, Mat2)> = limit
        .chart
        .t_alpha
        .iter()
        .zip(limit.a_alpha0.iter())
        .map(|(t, a)| (*t, *a))
        .collect();
    entries.push((cr(0.0), limit.lambda));
    entries.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    FuchsianSystem::new(
        entries.iter().map(|e| e.0).collect(),
        entries.iter().map(|e| e.1).collect(),
    )
}

/// The cluster system (inner scale, y-plane): residues A_β⁰ at ν_β.
pub fn cluster_system(limit: &PseudoShockLimit) -> Result<FuchsianSystem> {
    limit.validate()?;
    let mut entries: Vec<(C, Mat2)> = limit
        .chart
        .nu
        .iter()
        .zip(limit.a_beta0.iter())
        .map(|(t, a)| (*t, *a))
        .collect();
    entries.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    FuchsianSystem::new(
        entries.iter().map(|e| e.0).collect(),
        entries.iter().map(|e| e.1).collect(),
    )
}

// ---------------------------------------------------------------------
// Picard iteration (independent shock oracle).
// ---------------------------------------------------------------------

/// Generalized power series Σ C_{a,b}·s^{a + bσ} on the exponent
/// lattice; the branch of s^σ follows the ray of integration.
#[derive(Clone)]
struct LatticeSeries {
    terms: HashMap<(i32, i32), Mat2>,
    sigma: f64,
    cutoff: f64,
}

impl LatticeSeries {
    fn constant(m: Mat2, sigma: f64, cutoff: f64) -> Self {
        let mut terms = HashMap::new();
        terms.insert((0, 0), m);
        LatticeSeries {
            terms,
            sigma,
            cutoff,
        }
    }

    fn exponent(&self, key: (i32, i32)) -> f64 {
        key.0 as f64 + key.1 as f64 * self.sigma
    }

    fn insert(&mut self, key: (i32, i32), m: Mat2) {
        if key.0 as f64 + key.1 as f64 * self.sigma > self.cutoff {
            return;
        }
        if m.norm() < 1e-300 {
            return;
        }
        self.terms
            .entry(key)
            .and_modify(|e| *e = e.add(&m))
            .or_insert(m);
    }

    fn add(&self, other: &LatticeSeries) -> LatticeSeries {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(*k, *v);
        }
        out
    }

    fn sub(&self, other: &LatticeSeries) -> LatticeSeries {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(*k, v.scale(cr(-1.0)));
        }
        out
    }

    /// Multiply by a scalar polynomial in s (integer powers).
    fn mul_scalar_poly(&self, poly: &[C]) -> LatticeSeries {
        let mut out = LatticeSeries {
            terms: HashMap::new(),
            sigma: self.sigma,
            cutoff: self.cutoff,
        };
        for (k, v) in &self.terms {
            for (d, coef) in poly.iter().enumerate() {
                if coef.norm() < 1e-300 {
                    continue;
                }
                out.insert((k.0 + d as i32, k.1), v.scale(*coef));
            }
        }
        out
    }

    /// Commutator-style product [other matrices]: matrix product of two
    /// lattice series.
    fn mul(&self, other: &LatticeSeries) -> LatticeSeries {
        let mut out = LatticeSeries {
            terms: HashMap::new(),
            sigma: self.sigma,
            cutoff: self.cutoff,
        };
        for (k1, v1) in &self.terms {
            for (k2, v2) in &other.terms {
                out.insert((k1.0 + k2.0, k1.1 + k2.1), v1.mul(v2));
            }
        }
        out
    }

    fn commutator(&self, other: &LatticeSeries) -> LatticeSeries {
        self.mul(other).sub(&other.mul(self))
    }

    /// s^{±Λ}·C·s^{∓Λ} in the eigenbasis of Λ: splits each coefficient
    /// into b-shifts {−1, 0, +1}.
    fn conjugate_by_power(&self, v: &Mat2, v_inv: &Mat2, dir: i32) -> LatticeSeries {
        let mut out = LatticeSeries {
            terms: HashMap::new(),
            sigma: self.sigma,
            cutoff: self.cutoff,
        };
        for (k, m) in &self.terms {
            let w = v_inv.mul(m).mul(v);
            let diag = Mat2::diag(w.e[0][0], w.e[1][1]);
            let upper = Mat2::new(cr(0.0), w.e[0][1], cr(0.0), cr(0.0));
            let lower = Mat2::new(cr(0.0), cr(0.0), w.e[1][0], cr(0.0));
            out.insert(*k, v.mul(&diag).mul(v_inv));
            out.insert((k.0, k.1 + dir), v.mul(&upper).mul(v_inv));
            out.insert((k.0, k.1 - dir), v.mul(&lower).mul(v_inv));
        }
        out
    }

    /// Multiply by s^{-1} then integrate from 0: requires all exponents
    /// > 0 before the shift.
    fn div_s_and_integrate(&self) -> Result<LatticeSeries> {
        let mut out = LatticeSeries {
            terms: HashMap::new(),
            sigma: self.sigma,
            cutoff: self.cutoff,
        };
        for (k, m) in &self.terms {
            let e = self.exponent(*k) - 1.0;
            if e <= -1.0 + 1e-12 {
                if m.norm() > 1e-10 {
                    return Err(Error::numeric(format!(
                        "non-integrable exponent {e} in Picard step"
                    )));
                }
                continue;
            }
            out.insert((k.0, k.1), m.scale(cr(1.0 / (e + 1.0))));
        }
        Ok(out)
    }

    /// Plain integration ∫₀^τ: exponent shifts by +1.
    fn integrate(&self) -> Result<LatticeSeries> {
        let mut out = LatticeSeries {
            terms: HashMap::new(),
            sigma: self.sigma,
            cutoff: self.cutoff,
        };
        for (k, m) in &self.terms {
            let e = self.exponent(*k);
            if e <= -1.0 + 1e-12 {
                return Err(Error::numeric("non-integrable exponent in Picard step"));
            }
            out.insert((k.0 + 1, k.1), m.scale(cr(1.0 / (e + 1.0))));
        }
        Ok(out)
    }

    /// Evaluate at real τ (negative allowed; branch arg = π).
    fn eval(&self, tau: f64) -> Mat2 {
        let log_tau = cr(tau.abs()).ln()
            + if tau < 0.0 {
                c(0.0, std::f64::consts::PI)
            } else {
                cr(0.0)
            };
        let mut s = Mat2::zero();
        for (k, m) in &self.terms {
            let e = self.exponent(*k);
            s = s.add(&m.scale((log_tau * cr(e)).exp()));
        }
        s
    }
}

/// Per-iteration contraction data of the Picard oracle.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// ‖A^{(k)} − A^{(k−1)}‖ at the evaluation point per iteration.
    pub step_norms: Vec<f64>,
    /// The bound family K·δ^{k−1}·|τ|^{1−σ₁} with the fitted δ.
    pub fitted_delta: f64,
    pub k_used: usize,
    /// ε from the contraction estimates; |τ| must stay below it.
    pub epsilon: f64,
}

/// The ε radius from the contraction estimates of the iteration
/// (with the kernel bound |ν/(sν−t)| ≤ 2R/r for |τ| ≤ r/(2R)).
pub fn proven_epsilon(limit: &PseudoShockLimit, sigma1: f64) -> f64 {
    let r = limit
        .chart
        .t_alpha
        .iter()
        .map(|t| t.norm())
        .fold(f64::INFINITY, f64::min);
    let big_r = limit
        .chart
        .nu
        .iter()
        .map(|v| v.norm())
        .fold(1.0f64, f64::max);
    let k_bound = limit
        .a_alpha0
        .iter()
        .chain(limit.a_beta0.iter())
        .map(|m| m.norm())
        .fold(1e-6f64, f64::max);
    let sigma = limit.sigma;
    let p = limit.chart.t_alpha.len();
    let nb = limit.chart.nu.len();
    let kern = 2.0 * big_r / r;
    let e1 = ((1.0 - sigma) / (8.0 * k_bound * nb as f64 * kern)).powf(1.0 / (sigma1 - sigma));
    let e2 = ((1.0 - sigma) / (4.0 * k_bound * (2.0 * p as f64 * kern + nb as f64)))
        .powf(1.0 / (sigma1 - sigma));
    (r / (2.0 * big_r)).min(1.0).min(e1).min(e2)
}

/// Functional iteration for the restricted system from the limit data:
/// returns (A_α(τ), A_β(τ)) at τ together with the contraction report.
/// Requires real μ (the real-locus case) and |τ| below the proven ε.
pub fn picard_iteration(
    limit: &PseudoShockLimit,
    tau: f64,
    k_max: usize,
    step_tol: f64,
) -> Result<(Vec<Mat2>, Vec<Mat2>, PicardReport)> {
    limit.validate()?;
    if limit.mu.im.abs() > 1e-8 {
        return Err(Error::unsupported(
            "Picard oracle implemented for real shock eigenvalues (real locus)",
        ));
    }
    let sigma = limit.sigma;
    let sigma1 = 0.5 * (1.0 + sigma);
    let epsilon = proven_epsilon(limit, sigma1);
    if tau.abs() >= epsilon {
        return Err(Error::input(format!(
            "|τ| = {:.3e} is outside the proven ball ε = {epsilon:.3e}",
            tau.abs()
        )));
    }
    let (v, _) = limit.lambda.eigen_decomposition()?;
    let v_inv = v.inv()?;
    let cutoff = 60.0f64.min((1e-18f64.ln() / tau.abs().ln()).max(6.0));

    // Scalar kernels ν_β/(sν_β − t_α) as integer-power polynomials.
    let poly_order = ((1e-18f64.ln() / (tau.abs() * limit.chart.nu[0].norm()
        / limit
            .chart
            .t_alpha
            .iter()
            .map(|t| t.norm())
            .fold(f64::INFINITY, f64::min))
        .ln())
    .abs()
    .ceil() as usize)
        .clamp(8, 200);
    let kernel = |nu: C, t: C| -> Vec<C> {
        // ν/(sν − t) = −(ν/t)·Σ (νs/t)^m
        let mut out = Vec::with_capacity(poly_order);
        let base = -nu / t;
        let ratio = nu / t;
        let mut cur = base;
        for _ in 0..poly_order {
            out.push(cur);
            cur *= ratio;
        }
        out
    };

    let na = limit.a_alpha0.len();
    let nb = limit.a_beta0.len();
    let mk = |m: Mat2| LatticeSeries::constant(m, sigma, cutoff);
    let mut a_alpha: Vec<LatticeSeries> = limit.a_alpha0.iter().map(|m| mk(*m)).collect();
    let mut a_beta_t: Vec<LatticeSeries> = limit.a_beta0.iter().map(|m| mk(*m)).collect();

    let mut step_norms = Vec::new();
    let mut k_used = k_max;
    for k in 0..k_max {
        let mut new_alpha = Vec::with_capacity(na);
        for (idx_a, (ai, a0)) in a_alpha.iter().zip(limit.a_alpha0.iter()).enumerate() {
            let t_a = limit.chart.t_alpha[idx_a];
            let mut acc = mk(*a0);
            for (bj, nb_pos) in a_beta_t.iter().zip(limit.chart.nu.iter()) {
                if nb_pos.norm() < 1e-14 {
                    continue;
                }
                let conj = bj.conjugate_by_power(&v, &v_inv, 1);
                let term = conj
                    .commutator(ai)
                    .mul_scalar_poly(&kernel(*nb_pos, t_a))
                    .integrate()?;
                acc = acc.add(&term);
            }
            new_alpha.push(acc);
        }
        let mut new_beta = Vec::with_capacity(nb);
        for (idx_b, (bj, b0)) in a_beta_t.iter().zip(limit.a_beta0.iter()).enumerate() {
            let nb_pos = limit.chart.nu[idx_b];
            let mut acc = mk(*b0);
            if nb_pos.norm() > 1e-14 {
                for (idx_a, ai) in a_alpha.iter().enumerate() {
                    let t_a = limit.chart.t_alpha[idx_a];
                    let conj = ai.conjugate_by_power(&v, &v_inv, -1);
                    let term = conj
                        .commutator(bj)
                        .mul_scalar_poly(&kernel(nb_pos, t_a))
                        .integrate()?;
                    acc = acc.add(&term);
                }
            } else {
                // ν_β = 0: the α-sum kernel is ν/(sν−t) = 0.
            }
            for (idx_b2, (bp, b0p)) in a_beta_t.iter().zip(limit.a_beta0.iter()).enumerate() {
                if idx_b2 == idx_b {
                    continue;
                }
                let dev = bp.sub(&mk(*b0p));
                let term = dev.commutator(bj).div_s_and_integrate()?;
                acc = acc.add(&term);
            }
            new_beta.push(acc);
        }
        // Convergence measured at the evaluation point.
        let mut step: f64 = 0.0;
        for (new, old) in new_alpha.iter().zip(a_alpha.iter()) {
            step = step.max(new.eval(tau).sub(&old.eval(tau)).norm());
        }
        for (new, old) in new_beta.iter().zip(a_beta_t.iter()) {
            step = step.max(new.eval(tau).sub(&old.eval(tau)).norm());
        }
        step_norms.push(step);
        a_alpha = new_alpha;
        a_beta_t = new_beta;
        if step < step_tol {
            k_used = k + 1;
            break;
        }
    }
    // Fitted contraction ratio δ from consecutive step norms.
    let mut delta: f64 = 0.0;
    for w in step_norms.windows(2) {
        if w[0] > 1e-300 {
            delta = delta.max(w[1] / w[0]);
        }
    }
    let pw = matrix_power(&limit.lambda, tau)?;
    let a_alpha_val: Vec<Mat2> = a_alpha.iter().map(|s| s.eval(tau)).collect();
    let a_beta_val: Vec<Mat2> = a_beta_t
        .iter()
        .map(|s| pw.mul(&s.eval(tau)).mul(&pw.inv().unwrap()))
        .collect();
    Ok((
        a_alpha_val,
        a_beta_val,
        PicardReport {
            step_norms,
            fitted_delta: delta,
            k_used,
            epsilon,
        },
    ))
}

// ---------------------------------------------------------------------
// Shock consistency (the limit data's own Schlesinger systems).
// ---------------------------------------------------------------------

/// Residuals of the limit-data differential identities under finite
/// differences in (t', ν).
#[derive(Debug, Clone)]
pub struct ShockConsistencyReport {
    /// ‖∂A_α⁰/∂ν‖ (must vanish).
    pub dnu_alpha_residual: f64,
    /// ‖∂Λ/∂t_α + [Λ, A_α⁰]/t_α‖.
    pub dprime_lambda_residual: f64,
    /// ‖∂A_β⁰/∂t_α + [A_β⁰, A_α⁰]/t_α‖.
    pub dprime_beta_residual: f64,
    /// ‖∂A_β⁰/∂ν_{β'} − [A_{β'}⁰, A_β⁰]/(ν_{β'} − ν_β)‖.
    pub dnu_beta_residual: f64,
}

/// Check the mixed limit systems by central differences: `fit` must
/// produce the shock limit for given free surviving positions t' and
/// free cluster ratios ν (excluding the pinned ν_p = 1, ν_{n+1} = 0).
pub fn shock_consistency(
    fit: &dyn Fn(&[f64], &[f64]) -> Result<PseudoShockLimit>,
    t_prime: &[f64],
    nu_free: &[f64],
    h: f64,
) -> Result<ShockConsistencyReport> {
    let base = fit(t_prime, nu_free)?;
    let scale = 1.0 + base.lambda.norm();
    let mut dnu_alpha: f64 = 0.0;
    let mut dnu_beta: f64 = 0.0;
    for k in 0..nu_free.len() {
        let mut up = nu_free.to_vec();
        up[k] += h;
        let mut dn = nu_free.to_vec();
        dn[k] -= h;
        let lp = fit(t_prime, &up)?;
        let lm = fit(t_prime, &dn)?;
        for (a, b) in lp.a_alpha0.iter().zip(lm.a_alpha0.iter()) {
            dnu_alpha = dnu_alpha.max(a.sub(b).norm() / (2.0 * h));
        }
        dnu_alpha = dnu_alpha.max(lp.lambda.sub(&lm.lambda).norm() / (2.0 * h));
        // ∂A_β⁰/∂ν_k vs the commutator formula. The free ν index k
        // corresponds to cluster slot k+1 (after ν_p = 1).
        let target_idx = k + 1;
        for (b_idx, (bp, bm)) in lp.a_beta0.iter().zip(lm.a_beta0.iter()).enumerate() {
            let fd = bp.sub(bm).scale(cr(1.0 / (2.0 * h)));
            let expect = if b_idx == target_idx {
                let mut acc = Mat2::zero();
                for (b2, other) in base.a_beta0.iter().enumerate() {
                    if b2 == b_idx {
                        continue;
                    }
                    let dv = base.chart.nu[b_idx] - base.chart.nu[b2];
                    acc = acc.add(&other.commutator(&base.a_beta0[b_idx]).scale(cr(1.0) / dv));
                }
                acc
            } else {
                let dv = base.chart.nu[b_idx] - base.chart.nu[target_idx];
                base.a_beta0[target_idx]
                    .commutator(&base.a_beta0[b_idx])
                    .scale(-cr(1.0) / dv)
            };
            dnu_beta = dnu_beta.max(fd.sub(&expect).norm() / scale);
        }
    }
    let mut dprime_lambda: f64 = 0.0;
    let mut dprime_beta: f64 = 0.0;
    for j in 0..t_prime.len() {
        let mut up = t_prime.to_vec();
        up[j] += h;
        let mut dn = t_prime.to_vec();
        dn[j] -= h;
        let lp = fit(&up, nu_free)?;
        let lm = fit(&dn, nu_free)?;
        let t_a = cr(t_prime[j]);
        let fd_lambda = lp.lambda.sub(&lm.lambda).scale(cr(1.0 / (2.0 * h)));
        let expect = base.lambda.commutator(&base.a_alpha0[j]).scale(-cr(1.0) / t_a);
        dprime_lambda = dprime_lambda.max(fd_lambda.sub(&expect).norm() / scale);
        for (b_idx, (bp, bm)) in lp.a_beta0.iter().zip(lm.a_beta0.iter()).enumerate() {
            let fd = bp.sub(bm).scale(cr(1.0 / (2.0 * h)));
            let expect = base.a_beta0[b_idx]
                .commutator(&base.a_alpha0[j])
                .scale(-cr(1.0) / t_a);
            dprime_beta = dprime_beta.max(fd.sub(&expect).norm() / scale);
        }
    }
    Ok(ShockConsistencyReport {
        dnu_alpha_residual: dnu_alpha,
        dprime_lambda_residual: dprime_lambda,
        dprime_beta_residual: dprime_beta,
        dnu_beta_residual: dnu_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commuting_system() -> FuchsianSystem {
        let a = Mat2::diag(cr(0.2), cr(-0.2));
        let b = Mat2::diag(cr(0.3), cr(-0.3));
        let c2 = Mat2::diag(cr(-0.1), cr(0.1));
        FuchsianSystem::new(vec![cr(-1.5), cr(0.0), cr(1.0)], vec![a, b, c2]).unwrap()
    }

    #[test]
    fn rhs_vanishes_for_commuting_residues() {
        let sys = commuting_system();
        let partial = schlesinger_rhs(&sys.positions, &sys.residues).unwrap();
        for row in &partial {
            for m in row {
                assert!(m.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rhs_columns_sum_to_zero() {
        let sys = crate::fuchs::FuchsianSystem::new(
            vec![cr(-2.0), cr(-0.7), cr(0.0), cr(1.0)],
            vec![
                Mat2::from_real(0.1, 0.2, -0.1, -0.1),
                Mat2::from_real(-0.2, 0.4, 0.3, 0.2),
                Mat2::from_real(0.3, -0.5, 0.2, -0.3),
                Mat2::from_real(-0.2, -0.1, -0.4, 0.2),
            ],
        )
        .unwrap();
        let partial = schlesinger_rhs(&sys.positions, &sys.residues).unwrap();
        for j in 0..4 {
            let mut sum = Mat2::zero();
            for i in 0..4 {
                sum = sum.add(&partial[i][j]);
            }
            assert!(sum.norm() < 1e-13, "column {j} sums to {}", sum.norm());
        }
        // Antisymmetry of the building blocks.
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let back = sys.residues[j]
                        .commutator(&sys.residues[i])
                        .scale(cr(1.0) / (sys.positions[j] - sys.positions[i]));
                    assert!(partial[i][j].add(&back.scale(cr(-1.0))).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn rhs_rejects_coincident_positions() {
        let a = Mat2::identity();
        assert!(schlesinger_rhs(&[cr(0.0), cr(0.0)], &[a, a]).is_err());
    }

    #[test]
    fn commuting_flow_is_constant() {
        let sys = commuting_system();
        let path = ParamPath {
            waypoints: vec![vec![cr(-1.5)], vec![cr(-0.3)]],
            moving: vec![0],
        };
        let traj = flow(&sys, &path, 1e-10).unwrap();
        let last = traj.samples.last().unwrap();
        for (a, b) in last.residues.iter().zip(sys.residues.iter()) {
            assert!(a.sub(b).norm() < 1e-12);
        }
        assert!(traj.max_eig_drift < 1e-12);
        assert!(traj.max_ainf_drift < 1e-12);
    }

    #[test]
    fn restricted_rhs_matches_chain_rule() {
        // Full Schlesinger in t = (t', τν) vs the restricted system.
        let n = 3usize; // positions t1, t2, t3, 0, 1 (n + 2 = 5)
        let p = 2usize; // t2, t3 (and 0) collide
        let residues = vec![
            Mat2::from_real(0.12, 0.31, -0.22, -0.12),
            Mat2::from_real(-0.08, 0.17, 0.29, 0.08),
            Mat2::from_real(0.21, -0.19, 0.11, -0.21),
            Mat2::from_real(-0.14, 0.23, -0.31, 0.14),
            Mat2::from_real(0.09, -0.52, 0.13, -0.09),
        ];
        let tau = -0.37;
        let nu = [cr(1.0), cr(0.55), cr(0.0)]; // ν₂ = 1, ν₃, ν₄ = 0
        let t_alpha = [cr(-2.1), cr(1.0)]; // t₁ and t₅ = 1
        let positions = vec![
            t_alpha[0],
            cr(tau) * nu[0],
            cr(tau) * nu[1],
            cr(0.0),
            cr(1.0),
        ];
        let partial = schlesinger_rhs(&positions, &residues).unwrap();
        // dA_i/dτ = Σ_j ν_j ∂A_i/∂t_j over the moving cluster slots
        // (indices 1, 2 move with velocities ν₂, ν₃; index 3 is 0·τ).
        let mut chain = vec![Mat2::zero(); 5];
        for (i, ch) in chain.iter_mut().enumerate() {
            *ch = ch
                .add(&partial[i][1].scale(nu[0]))
                .add(&partial[i][2].scale(nu[1]));
        }
        let chart = ShockChart {
            t_alpha: t_alpha.to_vec(),
            nu: nu.to_vec(),
        };
        let a_alpha = [residues[0], residues[4]];
        let a_beta = [residues[1], residues[2], residues[3]];
        let (da, db) = restricted_rhs(&chart, cr(tau), &a_alpha, &a_beta).unwrap();
        assert!(da[0].sub(&chain[0]).norm() < 1e-12, "α₁");
        assert!(da[1].sub(&chain[4]).norm() < 1e-12, "α₂ (t = 1)");
        assert!(db[0].sub(&chain[1]).norm() < 1e-12, "β₁");
        assert!(db[1].sub(&chain[2]).norm() < 1e-12, "β₂");
        assert!(db[2].sub(&chain[3]).norm() < 1e-12, "β₃ (t = 0)");
    }

    #[test]
    fn restricted_rhs_commuting_is_zero() {
        let chart = ShockChart {
            t_alpha: vec![cr(-2.0), cr(1.0)],
            nu: vec![cr(1.0), cr(0.0)],
        };
        let d = Mat2::diag(cr(0.3), cr(-0.3));
        let (da, db) = restricted_rhs(&chart, cr(-0.2), &[d, d], &[d, d]).unwrap();
        for m in da.iter().chain(db.iter()) {
            assert!(m.norm() < 1e-15);
        }
    }

    #[test]
    fn matrix_power_negative_tau() {
        let lam = Mat2::from_real(0.21, 0.05, 0.04, -0.21);
        let tau = -0.3;
        let pw = matrix_power(&lam, tau).unwrap();
        // (τ^Λ)·(τ^{-Λ}) = I.
        let inv = pw.inv().unwrap();
        let back = matrix_power(&lam.scale(cr(-1.0)), tau).unwrap();
        assert!(inv.sub(&back).norm() < 1e-11);
    }
}
