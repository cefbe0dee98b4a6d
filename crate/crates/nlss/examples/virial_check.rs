//! Trajectory diagnostics: the virial identity d^2V/dt^2 = 16E by finite
//! differences, the frequency-truncated Morawetz action, and the truncated
//! energy ladder.
//!
//! Run: cargo run --release --example virial_check

use nlss::diagnostics::{morawetz_action, morawetz_action_bound, truncated_energy, virial_variance};
use nlss::dynamics::{evolve, FlowOptions, StepPolicy};
use nlss::functionals::energy;
use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use nlss::symmetry::{apply_group, exact_soliton, GroupElement};

fn main() {
    let grid = Grid2D::new(12.0, 128).unwrap();
    eprintln!("== solving the profile ==");
    let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
    let n_comp = 2;

    eprintln!("== virial identity along a boosted soliton ==");
    let u0 = exact_soliton(&gs, n_comp, 0.8, &[0.0, 0.0], [0.0; 2], [0.9, 0.0], 0.0);
    let e = energy(&u0);
    let dt = 5e-3;
    let policy = StepPolicy { dt: 5e-4, ..Default::default() };
    let out = evolve(&u0, 2.0 * dt, &policy, &FlowOptions::default(), 10, &[]).unwrap();
    let v_of = |t: f64| {
        out.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().partial_cmp(&(b.0 - t).abs()).unwrap())
            .map(|(_, u)| virial_variance(u).v)
            .unwrap()
    };
    let second = (v_of(2.0 * dt) - 2.0 * v_of(dt) + v_of(0.0)) / (dt * dt);
    println!("V(0) = {:.8}", v_of(0.0));
    println!("second difference of V = {second:.8}");
    println!("16 E                   = {:.8}", 16.0 * e);
    println!("relative deviation     = {:.3e}", (second - 16.0 * e).abs() / (16.0 * e).abs());

    eprintln!("\n== Morawetz action of the frequency-truncated field ==");
    let q = gs.q_vector(n_comp);
    let (radius, eta1, k0) = (3.0, 0.5, 5);
    println!("centered profile:  M = {:.3e}", morawetz_action(&q, radius, eta1, k0));
    let mut boost = GroupElement::identity(n_comp);
    boost.xi0 = [grid.k[1], 0.0];
    boost.x0 = [1.5, 0.0];
    let (b, _) = apply_group(&boost, &q, 0.0);
    let m = morawetz_action(&b, radius, eta1, k0);
    println!(
        "boosted, off-center: M = {m:.6} (analytic cap {:.4})",
        morawetz_action_bound(&b, radius, eta1, k0)
    );

    eprintln!("\n== truncated-energy ladder ==");
    let e_full = energy(&q);
    println!("k0\tE(P_<=k0+9 u)\t\tgap to E(u) = {e_full:.8}");
    for k0 in [-10, -4, -2, 0, 2, 4, 6, 8] {
        let te = truncated_energy(&q, k0);
        println!("{k0}\t{te:.10}\t{:.3e}", (te - e_full).abs());
    }
}
