//! Temporary debug probe.

use plateau_core::fuchs::FuchsianSystem;
use plateau_core::monodromy::{generators_with_frames, SystemFrames};
use plateau_core::rk::OdeOptions;
use plateau_core::spin3::{cr, Mat2};

#[test]
fn probe_frames_failure() {
    // A system in the reality form with A∞ = κ·diag(1,−1).
    let kappa = 1.0 - 0.5 / 2.0;
    let a1 = Mat2::from_real(0.1, 0.2, 0.15, -0.1);
    let a2 = Mat2::from_real(-0.05, -0.1, -0.3, 0.05);
    let a3 = Mat2::from_real(-kappa - 0.05, -0.1, 0.15, kappa + 0.05);
    let sys = FuchsianSystem::new(vec![cr(-1.0), cr(0.0), cr(1.0)], vec![a1, a2, a3]).unwrap();
    let ainf = sys.a_infinity();
    println!("A_inf = {:?}", ainf);
    match SystemFrames::prepare(&sys, &OdeOptions::default()) {
        Ok(frames) => {
            println!("frames ok, base {:?}", frames.base);
            match generators_with_frames(&frames) {
                Ok(rep) => println!("generators ok, defect {:.3e}", rep.product_defect),
                Err(e) => println!("generators FAILED: {e}"),
            }
        }
        Err(e) => println!("prepare FAILED: {e}"),
    }
}
