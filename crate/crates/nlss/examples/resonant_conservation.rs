//! Conservation laws of the resonant (infinitely coupled, truncated) system:
//! the weighted masses with weights 1, j, j^2 stay constant because the
//! resonance conditions are exactly the corresponding sum rules.
//!
//! Run: cargo run --release --example resonant_conservation

use nlss::dynamics::{evolve, FlowOptions, Monitor, StepPolicy};
use nlss::field::{random_localized, FieldIndexing, FieldVec};
use nlss::grid::Grid2D;
use nlss::nonlin::{apply_nonlinearity, apply_nonlinearity_resonance_sum, resonance_set};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let jmax = 3;
    eprintln!("== resonance sets at jmax = {jmax} ==");
    for j in -1..=1 {
        let set = resonance_set(j, jmax).unwrap();
        println!("R({j}) has {} triples: {:?}", set.triples.len(), set.triples);
    }

    let grid = Grid2D::new(12.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let comps = (0..(2 * jmax + 1) as usize)
        .map(|_| random_localized(grid.clone(), &mut rng, 1.5, 1.5, 0.25))
        .collect();
    let u0 = FieldVec::from_components(FieldIndexing::Resonant { jmax }, comps).unwrap();

    eprintln!("\n== resonance sum vs closed form ==");
    let f_sum = apply_nonlinearity_resonance_sum(&u0).unwrap();
    let f_closed = apply_nonlinearity(&u0, false);
    let mut worst = 0.0f64;
    for (a, b) in f_sum.components.iter().zip(f_closed.components.iter()) {
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            worst = worst.max((x - y).norm());
        }
    }
    println!("pointwise max |triple sum - closed form| = {worst:.3e}");

    eprintln!("\n== evolving to t = 1, weighted-mass drifts ==");
    let policy = StepPolicy { dt: 1e-3, ..Default::default() };
    let out = evolve(
        &u0,
        1.0,
        &policy,
        &FlowOptions::default(),
        100,
        &[Monitor::WeightedMasses],
    )
    .unwrap();
    let first = &out.series[0];
    println!("t\tM(1,0,0) drift\tM(0,1,0) drift\tM(0,0,1) drift");
    for r in &out.series {
        println!(
            "{:.2}\t{:.3e}\t{:.3e}\t{:.3e}",
            r.t,
            (r.mass - first.mass).abs() / first.mass,
            (r.m010 - first.m010).abs() / first.mass,
            (r.m001 - first.m001).abs() / first.mass,
        );
    }
}
