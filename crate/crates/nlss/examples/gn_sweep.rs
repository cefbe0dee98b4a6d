//! Sharp Gagliardo-Nirenberg constants across component counts.
//!
//! The Weinstein quotient at the vector ground state attains
//! 2(2N-1)/N / ||q||^2; random localized trial fields stay strictly below
//! it. The infinite-system constant 4/||q||^2 bounds resonant samples, and
//! C(M) matches brute-force index-set minimization.
//!
//! Run: cargo run --release --example gn_sweep

use nlss::field::{random_localized, FieldIndexing, FieldVec};
use nlss::functionals::{cm_constant, gn_constant, weinstein_j, SystemSize};
use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let grid = Grid2D::new(16.0, 256).unwrap();
    eprintln!("== solving the profile ==");
    let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
    let trials = 2000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    eprintln!("== Weinstein quotient at Q vs the sharp constant ({trials} trials/N) ==");
    println!("N\tJ(Q_N)\t\t2(2N-1)/N/||q||^2\trel err\t\tmax trial J/C");
    for n_comp in [1usize, 2, 3, 5, 8] {
        let q = gs.q_vector(n_comp);
        let jq = weinstein_j(&q).unwrap();
        let c = gn_constant(SystemSize::Finite(n_comp), gs.mass_sq);
        let mut max_ratio = 0.0f64;
        for _ in 0..trials {
            let mut comps = Vec::with_capacity(n_comp);
            for _ in 0..n_comp {
                let norm = rng.gen_range(0.2..2.0);
                comps.push(random_localized(grid.clone(), &mut rng, 2.0, 2.0, norm));
            }
            let u = FieldVec::from_components(FieldIndexing::Finite { n_comp }, comps).unwrap();
            max_ratio = max_ratio.max(weinstein_j(&u).unwrap() / c);
        }
        println!(
            "{n_comp}\t{jq:.10}\t{c:.10}\t\t{:.3e}\t{max_ratio:.6}",
            (jq - c).abs() / c
        );
    }

    eprintln!("\n== infinite-system constant on resonant samples ==");
    let c_inf = gn_constant(SystemSize::Infinite, gs.mass_sq);
    println!("4/||q||^2 = {c_inf:.10}");
    let jmax = 3;
    let mut max_ratio = 0.0f64;
    for _ in 0..300 {
        let mut comps = Vec::with_capacity((2 * jmax + 1) as usize);
        for _ in 0..(2 * jmax + 1) {
            let norm = rng.gen_range(0.2..1.0);
            comps.push(random_localized(grid.clone(), &mut rng, 2.0, 2.0, norm));
        }
        let u = FieldVec::from_components(FieldIndexing::Resonant { jmax }, comps).unwrap();
        max_ratio = max_ratio.max(weinstein_j(&u).unwrap() / c_inf);
    }
    println!("max J/C_inf over 300 resonant samples = {max_ratio:.6}");

    eprintln!("\n== C(M): minimal sum of squares over M distinct integer indices ==");
    println!("M\tC(M)\tbrute force");
    for m in 2..=8usize {
        let candidates: Vec<i64> = (-6..=6).collect();
        let mut best = u64::MAX;
        for mask in 0u32..(1 << candidates.len()) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let s: u64 = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &j)| (j * j) as u64)
                .sum();
            best = best.min(s);
        }
        println!("{m}\t{}\t{}", cm_constant(m).unwrap(), best);
    }
}
