//! The symmetry group in action: scaling/translation/phase/Galilean
//! transforms, the pseudo-conformal involution, and the two explicit
//! solution families with their equation residuals.
//!
//! Run: cargo run --release --example symmetry_transforms

use nlss::functionals::{energy, mass, momentum};
use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use nlss::symmetry::{
    apply_group, exact_pseudosoliton_with_time_derivative, exact_soliton_with_time_derivative,
    pde_residual_norm, pseudo_conformal, GroupElement,
};

fn main() {
    let grid = Grid2D::new(12.0, 256).unwrap();
    eprintln!("== solving the profile ==");
    let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
    let n_comp = 2;
    let q = gs.q_vector(n_comp);

    eprintln!("== group actions on the ground state ==");
    println!("transform\tmass\t\tenergy\t\tmomentum_x");
    println!(
        "identity\t{:.8}\t{:.3e}\t{:.3e}",
        mass(&q),
        energy(&q),
        momentum(&q)[0]
    );
    let mut g = GroupElement::identity(n_comp);
    g.lambda = 1.2;
    let (scaled, meta) = apply_group(&g, &q, 0.0);
    println!(
        "scale 1.2\t{:.8}\t{:.3e}\t{:.3e}\t(band warning: {})",
        mass(&scaled),
        energy(&scaled),
        momentum(&scaled)[0],
        meta.band_warning
    );
    let mut g = GroupElement::identity(n_comp);
    g.xi0 = [2.0 * grid.k[1], 0.0];
    let (boosted, _) = apply_group(&g, &q, 0.0);
    println!(
        "boost\t\t{:.8}\t{:.6}\t{:.6}",
        mass(&boosted),
        energy(&boosted),
        momentum(&boosted)[0]
    );

    eprintln!("\n== pseudo-conformal involution ==");
    let (pc, t_new) = pseudo_conformal(&boosted, 1.25).unwrap();
    let (back, t_back) = pseudo_conformal(&pc, t_new).unwrap();
    println!("times: 1.25 -> {t_new} -> {t_back}");
    println!(
        "mass under the transform: {:.12} -> {:.12}",
        mass(&boosted),
        mass(&pc)
    );
    println!(
        "double-transform defect = {:.3e}",
        back.sub(&boosted).l2l2_norm_sq().sqrt()
    );

    eprintln!("\n== explicit solution families ==");
    let xi = [2.0 * grid.k[1], -grid.k[1]];
    let (sol, dsol) =
        exact_soliton_with_time_derivative(&gs, n_comp, 0.9, &[0.3, 1.1], [0.4, -0.2], xi, 0.35);
    println!(
        "soliton:       mass {:.8}, residual |i u_t + Lap u + F(u)| = {:.3e}",
        mass(&sol),
        pde_residual_norm(&sol, &dsol)
    );
    let (ps, dps) = exact_pseudosoliton_with_time_derivative(
        &gs,
        n_comp,
        1.0,
        &[0.7, -0.3],
        [0.0; 2],
        [0.0; 2],
        0.0,
        -1.0,
    )
    .unwrap();
    println!(
        "pseudosoliton: mass {:.8}, residual                     = {:.3e}",
        mass(&ps),
        pde_residual_norm(&ps, &dps)
    );
    println!(
        "widths along the blowup family (t = T-1, T-1/2, T-1/4): {:.4}, {:.4}, {:.4}",
        ps.rms_width(),
        nlss::symmetry::exact_pseudosoliton(&gs, n_comp, 1.0, &[0.7, -0.3], [0.0; 2], [0.0; 2], 0.0, -0.5)
            .unwrap()
            .rms_width(),
        nlss::symmetry::exact_pseudosoliton(&gs, n_comp, 1.0, &[0.7, -0.3], [0.0; 2], [0.0; 2], 0.0, -0.25)
            .unwrap()
            .rms_width()
    );
}
