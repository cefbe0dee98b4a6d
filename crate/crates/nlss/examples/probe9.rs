use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use nlss::symmetry::*;

fn main() {
    for (hw, n) in [(12.0, 256usize), (16.0, 512)] {
        let g = Grid2D::new(hw, n).unwrap();
        let gs = solve_ground_state(g.clone(), 1e-11).unwrap();
        let k1 = g.k[1];
        // identity-parameter soliton vs grid profile
        let u = exact_soliton(&gs, 2, 1.0, &[0.0, 0.0], [0.0; 2], [0.0; 2], 0.0);
        let q = gs.q_vector(2);
        println!("L={hw} n={n}: identity diff       = {:.3e}", u.sub(&q).l2l2_norm_sq().sqrt());
        // residual at lambda = 1 and lambda = 0.95
        let (u1, du1) = exact_soliton_with_time_derivative(&gs, 2, 1.0, &[0.3, 1.1], [0.4, -0.2], [2.0*k1, -k1], 0.35);
        println!("L={hw} n={n}: residual lam=1.00   = {:.3e}", pde_residual_norm(&u1, &du1));
        let (u2, du2) = exact_soliton_with_time_derivative(&gs, 2, 0.95, &[0.3, 1.1], [0.4, -0.2], [2.0*k1, -k1], 0.35);
        println!("L={hw} n={n}: residual lam=0.95   = {:.3e}", pde_residual_norm(&u2, &du2));
        // pseudosoliton residual at t = T-1
        let (u3, du3) = exact_pseudosoliton_with_time_derivative(&gs, 2, 1.0, &[0.7, -0.3], [0.0;2], [0.0;2], 0.0, -1.0).unwrap();
        println!("L={hw} n={n}: pc residual t=T-1   = {:.3e}", pde_residual_norm(&u3, &du3));
        // family map defect
        let lam = 0.9;
        let gamma = [0.3, -0.4];
        let s = exact_soliton(&gs, 2, lam, &gamma, [0.0; 2], [0.0; 2], -1.0);
        let (pc, t_new) = pseudo_conformal(&s, -1.0).unwrap();
        let gamma_p: Vec<f64> = gamma.iter().map(|g| -g + 2.0 * lam * lam + std::f64::consts::PI).collect();
        let expect = exact_pseudosoliton(&gs, 2, lam, &gamma_p, [0.0; 2], [0.0; 2], 0.0, t_new).unwrap();
        println!("L={hw} n={n}: family map defect   = {:.3e}", pc.sub(&expect).l2l2_norm_sq().sqrt());
        // masses within the family
        let m1 = exact_soliton(&gs, 2, 1.0, &[0.2, -0.7], [0.0;2], [0.0;2], 0.0).l2l2_norm_sq();
        let m2 = exact_soliton(&gs, 2, 0.9, &[0.2, -0.7], [0.5, -0.25], [2.0*k1, -k1], 0.4).l2l2_norm_sq();
        println!("L={hw} n={n}: family mass rel dev = {:.3e}", (m2 - m1).abs() / m1);
        println!("L={hw} n={n}: vs grid mass rel    = {:.3e}", (m1 - q.l2l2_norm_sq()).abs() / m1);
    }
}
