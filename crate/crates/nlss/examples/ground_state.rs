//! Ground-state computation with its certificates.
//!
//! Solves the scalar profile by spectral renormalization, checks the
//! Pohozaev identities, compares the mass against the independent radial
//! shooting oracle, and writes a snapshot plus sidecar.
//!
//! Run: cargo run --release --example ground_state

use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use nlss::oracle::shoot_ground_state;
use nlss::snapshot::write_ground_state;

fn main() {
    let out = std::path::PathBuf::from("out-ground-state");
    std::fs::create_dir_all(&out).unwrap();

    eprintln!("== solving the scalar profile on [-16, 16)^2, n = 512 ==");
    let grid = Grid2D::new(16.0, 512).unwrap();
    let gs = solve_ground_state(grid, 1e-10).unwrap();
    println!("residual_inf        = {:.3e}", gs.residual_inf);
    println!("mass_sq             = {:.12}", gs.mass_sq);
    println!("pohozaev defects    = {:.3e}, {:.3e}",
        gs.pohozaev_defects.0, gs.pohozaev_defects.1);
    println!("amplitude at origin = {:.12}", {
        let n = gs.profile.grid.n;
        gs.profile.samples[(n / 2) * n + n / 2].re
    });

    eprintln!("\n== independent radial shooting oracle ==");
    let profile = shoot_ground_state(5e-4, 15.0);
    println!("oracle amplitude    = {:.12}", profile.amplitude);
    println!("oracle mass_sq      = {:.12}", profile.mass_sq);
    println!(
        "relative mass error = {:.3e}",
        (gs.mass_sq - profile.mass_sq).abs() / profile.mass_sq
    );

    eprintln!("\n== vector ground states ==");
    println!("n_comp\tcomponent amplitude\tmass(Q)\t\tN/(2N-1) * mass_sq");
    for n_comp in [1usize, 2, 3, 5, 8] {
        let q = gs.q_vector(n_comp);
        let nn = n_comp as f64;
        println!(
            "{n_comp}\t{:.12}\t{:.8}\t{:.8}",
            nlss::ground::GroundState::component_amplitude(n_comp),
            q.l2l2_norm_sq(),
            nn / (2.0 * nn - 1.0) * gs.mass_sq
        );
    }

    write_ground_state(&out, "ground_state", &gs).unwrap();
    eprintln!("\nsnapshot + sidecar written to {}", out.display());
}
