use nlss::grid::Grid2D;
use nlss::ground::solve_ground_state;

fn main() {
    let g = Grid2D::new(12.0, 256).unwrap();
    let gs = solve_ground_state(g.clone(), 1e-11).unwrap();
    let s = gs.radial_sampler();
    // compare sampler against the grid profile at grid points
    let n = g.n;
    let mut worst = 0.0f64;
    let mut worst_r = 0.0;
    for i in 0..n {
        for j in (0..n).step_by(3) {
            let r = (g.x[i] * g.x[i] + g.x[j] * g.x[j]).sqrt();
            let got = s.eval(r);
            let expect = gs.profile.samples[i * n + j].re;
            let d = (got - expect).abs();
            if d > worst {
                worst = d;
                worst_r = r;
            }
        }
    }
    println!("sampler worst abs err {worst:.3e} at r = {worst_r:.3}");
    // derivative check vs finite difference of eval
    let mut worst_d = 0.0f64;
    for m in 0..200 {
        let r: f64 = 0.05 + m as f64 * 0.05;
        let h = 1e-5;
        let fd = (s.eval(r + h) - s.eval(r - h)) / (2.0 * h);
        let d = (s.eval_deriv(r) - fd).abs();
        worst_d = worst_d.max(d);
    }
    println!("deriv worst abs err {worst_d:.3e}");
}
