use nlss::field::*;
use nlss::grid::Grid2D;
use num_complex::Complex64;

fn main() {
    let g = Grid2D::new(12.0, 256).unwrap();
    let f = ComplexField2D::from_fn(g.clone(), |x, y| {
        Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
    });
    println!("mass f         = {:.9}", f.l2_norm_sq());
    for scale in [0.5, 1.0, 1.3, 2.0, 4.0] {
        let s = sample_affine(&f, scale, [0.0, 0.0]);
        println!("mass f({scale} x)   = {:.9}  (expect {:.9})", s.l2_norm_sq(), f.l2_norm_sq() / (scale * scale));
        // pointwise check at a few places
        let mut worst = 0.0f64;
        for i in (0..g.n).step_by(37) {
            for j in (0..g.n).step_by(41) {
                let (x, y) = (g.x[i], g.x[j]);
                let expect = (-( (scale*x).powi(2) + (scale*y).powi(2)) / 2.0).exp();
                worst = worst.max((s.samples[i * g.n + j].re - expect).abs());
            }
        }
        println!("   pointwise worst vs continuum: {worst:.3e}");
    }
}
