//! Modulation decomposition round trips: group elements recovered from their
//! action on the ground state, orthogonality residuals, the linear-bound
//! constant at several perturbation amplitudes, and the orbit distance.
//!
//! Run: cargo run --release --example modulation_roundtrip

use nlss::field::random_localized;
use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use nlss::modulation::{decompose, distance_to_orbit};
use nlss::scenario::modulation_context;
use nlss::symmetry::{apply_group, GroupElement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let grid = Grid2D::new(12.0, 128).unwrap();
    eprintln!("== solving the profile and the modulation frame ==");
    let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
    let n_comp = 2;
    let ctx = modulation_context(&gs, n_comp).unwrap();
    let q = gs.q_vector(n_comp);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    eprintln!("== recovering random group elements ==");
    println!("sample\tparam error\tmax ortho residual");
    let mut worst = 0.0f64;
    for k in 0..10 {
        let g = GroupElement {
            lambda: rng.gen_range(-0.2..0.2f64).exp(),
            x0: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
            xi0: [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)],
            gamma: (0..n_comp).map(|_| rng.gen_range(-0.5..0.5f64)).collect(),
            t0: 0.0,
        };
        let (u, _) = apply_group(&g, &q, 0.0);
        let st = decompose(&u, &GroupElement::identity(n_comp), 1e-11, &ctx).unwrap();
        let mut err = (st.lambda - g.lambda).abs();
        for i in 0..2 {
            err += (st.xi[i] - g.xi0[i]).abs() + (st.x_tilde[i] - g.x0[i]).abs();
        }
        for (a, b) in st.gamma.iter().zip(g.gamma.iter()) {
            let tau = std::f64::consts::TAU;
            let mut d = (a - b).rem_euclid(tau);
            if d > tau / 2.0 {
                d -= tau;
            }
            err += d.abs();
        }
        let res = st
            .ortho_residuals
            .iter()
            .map(|r| r.abs())
            .fold(0.0, f64::max);
        println!("{k}\t{err:.3e}\t{res:.3e}");
        worst = worst.max(err);
    }
    println!("worst recovery error = {worst:.3e}");

    eprintln!("\n== linear-bound constant across perturbation amplitudes ==");
    println!("amplitude\tfitted K = (|eps| + sum |params|)/amplitude");
    for amplitude in [1e-2, 1e-3, 1e-4] {
        let mut k_max = 0.0f64;
        for _ in 0..30 {
            let mut u = q.clone();
            for c in u.components.iter_mut() {
                let noise = random_localized(grid.clone(), &mut rng, 2.0, 1.5, 1.0);
                for (a, b) in c.samples.iter_mut().zip(noise.samples.iter()) {
                    *a += b * amplitude;
                }
            }
            let st = decompose(&u, &GroupElement::identity(n_comp), 1e-11, &ctx).unwrap();
            let mut total = st.eps_l2() + (st.lambda - 1.0).abs();
            for i in 0..2 {
                total += st.xi[i].abs() + st.x_tilde[i].abs();
            }
            for g in &st.gamma {
                total += g.min(std::f64::consts::TAU - g).abs();
            }
            k_max = k_max.max(total / amplitude);
        }
        println!("{amplitude:.0e}\t\t{k_max:.4}");
    }

    eprintln!("\n== orbit distance ==");
    println!("at Q:            {:.3e}", distance_to_orbit(&q, 2, &ctx));
    let doubled = q.scaled(num_complex::Complex64::new(2.0, 0.0));
    println!("at 2Q:           {:.6} (||Q||^2 = {:.6})", distance_to_orbit(&doubled, 2, &ctx), ctx.q_mass_sq);
    let far = {
        let comps = (0..n_comp)
            .map(|_| random_localized(grid.clone(), &mut rng, 2.0, 1.0, ctx.q_mass_sq.sqrt()))
            .collect();
        nlss::field::FieldVec::from_components(
            nlss::field::FieldIndexing::Finite { n_comp },
            comps,
        )
        .unwrap()
    };
    println!(
        "random far field: decompose -> {:?}",
        decompose(&far, &GroupElement::identity(n_comp), 1e-10, &ctx)
            .err()
            .map(|e| e.to_string())
    );
}
