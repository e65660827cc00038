//! Temporary integration scratchpad (removed before release).

use plateau_core::fuchs::FuchsianSystem;
use plateau_core::monodromy::{
    check_c1, generators, solve_riemann_hilbert, target_monodromy, RhOptions,
};
use plateau_core::plateau::{
    boundary_direction_error, default_anchor, validate_directions, weierstrass_from_system,
};
use plateau_core::spin3::{cr, Mat2, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_plateau_system(rng: &mut ChaCha8Rng, positions: &[f64]) -> (FuchsianSystem, Vec<f64>) {
    let n2 = positions.len();
    loop {
        let mut residues = Vec::new();
        let mut ok = true;
        let theta_inf: f64 = rng.gen_range(0.25..0.75);
        let kappa = 1.0 - theta_inf / 2.0;
        let mut asum = 0.0;
        let mut bsum = 0.0;
        let mut csum = 0.0;
        let mut thetas = Vec::new();
        for i in 0..n2 {
            if i + 1 < n2 {
                let th: f64 = rng.gen_range(0.3..0.8);
                let a = rng.gen_range(-0.4..0.4) * th / 2.0;
                let k = ((th / 2.0) * (th / 2.0) - a * a).sqrt();
                let s: f64 = rng.gen_range(-0.5..0.5);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let b = sign * k * s.exp();
                let c = sign * k * (-s).exp();
                residues.push(Mat2::from_real(a, b, c, -a));
                thetas.push(th);
                asum += a;
                bsum += b;
                csum += c;
            } else {
                let a = -kappa - asum;
                let b = -bsum;
                let c = -csum;
                let det = -a * a - b * c;
                let th2 = -4.0 * det;
                if th2 <= 0.04 || th2 >= 0.96 {
                    ok = false;
                    break;
                }
                residues.push(Mat2::from_real(a, b, c, -a));
                thetas.push(th2.sqrt());
            }
        }
        if !ok {
            continue;
        }
        thetas.push(theta_inf);
        let sys =
            FuchsianSystem::new(positions.iter().map(|t| cr(*t)).collect(), residues).unwrap();
        if sys.check_nonresonant().is_err() {
            continue;
        }
        return (sys, thetas);
    }
}

#[test]
fn rh_roundtrip_quadrilateral_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let positions = [-1.0, 0.0, 1.0];
    let (sys, thetas) = random_plateau_system(&mut rng, &positions);
    println!("theta = {:?}", thetas);
    let rep = generators(&sys, plateau_core::spin3::c(0.0, 1.0)).unwrap();
    println!("product defect = {:.3e}", rep.product_defect);
    let (c1ok, _, c1res) = check_c1(&rep, 1e-6).unwrap();
    println!("C1: {} residual {:.3e}", c1ok, c1res);

    // Trivial start: solver must accept the known residues immediately.
    let t0 = std::time::Instant::now();
    let opts = RhOptions {
        max_restarts: 1,
        ..RhOptions::default()
    };
    let sol = solve_riemann_hilbert(&rep, &positions, &thetas, &opts, Some((&sys, &Mat2::identity())))
        .unwrap();
    println!(
        "warm-start mismatch {:.3e}, eta residual {:.3e}, elapsed {:?}",
        sol.mismatch,
        sol.eta_residual,
        t0.elapsed()
    );
    assert!(sol.mismatch < 1e-7);

    // Cold start.
    let t0 = std::time::Instant::now();
    let sol2 = solve_riemann_hilbert(&rep, &positions, &thetas, &RhOptions::default(), None);
    match &sol2 {
        Ok(s) => println!(
            "cold-start mismatch {:.3e} after {} restarts, elapsed {:?}",
            s.mismatch,
            s.restarts_used,
            t0.elapsed()
        ),
        Err(e) => println!("cold start FAILED: {e} (elapsed {:?})", t0.elapsed()),
    }
    let sol2 = sol2.unwrap();
    assert!(sol2.mismatch < 1e-6);
    assert!(sol2.eta_residual < 1e-6);
}

#[test]
fn quadrilateral_boundary_directions() {
    // Fixed generic direction set (n = 1).
    let dirs = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.1, 1.0, 0.15),
        Vec3::new(-0.2, 0.25, 1.0),
        Vec3::new(-1.0, -0.9, 0.3),
    ];
    let dirs: Vec<Vec3> = dirs.iter().map(|v| v.normalize().unwrap()).collect();
    let ds = validate_directions(&dirs).unwrap();
    let target = target_monodromy(&ds).unwrap();
    let mut positions = default_anchor(1);
    positions.push(0.0);
    positions.push(1.0);
    let theta = ds.theta_for_positions();
    println!("theta = {:?}", theta);
    let t0 = std::time::Instant::now();
    let sol = solve_riemann_hilbert(&target, &positions, &theta, &RhOptions::default(), None);
    match &sol {
        Ok(s) => println!(
            "RH mismatch {:.3e} after {} restarts ({:?})",
            s.mismatch,
            s.restarts_used,
            t0.elapsed()
        ),
        Err(e) => println!("RH FAILED: {e} ({:?})", t0.elapsed()),
    }
    let sol = sol.unwrap();
    let (data, phase_res) = weierstrass_from_system(&sol.system, &ds, &sol.c0).unwrap();
    println!("phase alignment residual {:.3e}", phase_res);
    let ang = boundary_direction_error(&data, &ds, 20.0).unwrap();
    println!("boundary direction angular error {:.6e} rad", ang);
    assert!(ang < 1e-3, "angular error {ang}");
}
