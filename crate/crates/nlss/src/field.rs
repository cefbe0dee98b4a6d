//! Complex scalar fields and component vectors on the periodic grid, with the
//! spectral calculus every other module builds on: derivatives, smooth
//! frequency projectors, shifts, and band-limited affine resampling.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::cutoff::bump;
use crate::error::{NlssError, Result};
use crate::grid::{plans_for, Grid2D};

/// One complex field sampled in physical space, row-major: samples[i*n + j]
/// holds the value at (x_i, y_j).
#[derive(Debug, Clone)]
pub struct ComplexField2D {
    pub grid: Arc<Grid2D>,
    pub samples: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn zero(grid: Arc<Grid2D>) -> Self {
        let n = grid.n;
        ComplexField2D {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(grid: Arc<Grid2D>, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let n = grid.n;
        let mut samples = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                samples.push(f(grid.x[i], grid.x[j]));
            }
        }
        ComplexField2D { grid, samples }
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Unnormalized forward spectrum (DFT coefficients).
    pub fn to_spectrum(&self) -> Vec<Complex64> {
        let mut spec = self.samples.clone();
        plans_for(self.grid.n).forward(&mut spec);
        spec
    }

    pub fn from_spectrum(grid: Arc<Grid2D>, mut spec: Vec<Complex64>) -> Self {
        plans_for(grid.n).inverse(&mut spec);
        ComplexField2D {
            grid,
            samples: spec,
        }
    }

    /// L^2 norm squared by the rectangle rule (exact for band-limited data).
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_area() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Same quantity evaluated on the spectral side (Parseval).
    pub fn l2_norm_sq_spectral(&self) -> f64 {
        let n2 = (self.grid.n * self.grid.n) as f64;
        let spec = self.to_spectrum();
        self.grid.cell_area() / n2 * spec.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn l4_norm_pow4(&self) -> f64 {
        self.grid.cell_area()
            * self
                .samples
                .iter()
                .map(|z| {
                    let m = z.norm_sqr();
                    m * m
                })
                .sum::<f64>()
    }

    pub fn linf_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Complex L^2 inner product dx^2 * sum f conj(g).
    pub fn inner(&self, other: &ComplexField2D) -> Complex64 {
        debug_assert!(self.grid.same_grid(&other.grid));
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.samples.iter().zip(other.samples.iter()) {
            acc += a * b.conj();
        }
        acc * self.grid.cell_area()
    }

    /// Kinetic quadratic form sum |k|^2 |f_hat|^2 (with Parseval weights),
    /// i.e. the squared L^2 norm of the gradient of the interpolant.
    pub fn grad_norm_sq(&self) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let spec = self.to_spectrum();
        let w = g.cell_area() / (n * n) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let ki2 = g.k[i] * g.k[i];
            for j in 0..n {
                let k2 = ki2 + g.k[j] * g.k[j];
                acc += k2 * spec[i * n + j].norm_sqr();
            }
        }
        acc * w
    }

    /// Exact spectral gradient of the trigonometric interpolant.
    pub fn gradient(&self) -> (ComplexField2D, ComplexField2D) {
        let g = self.grid.clone();
        let n = g.n;
        let spec = self.to_spectrum();
        let mut sx = spec.clone();
        let mut sy = spec;
        for i in 0..n {
            let ki = Complex64::new(0.0, g.k[i]);
            for j in 0..n {
                let kj = Complex64::new(0.0, g.k[j]);
                sx[i * n + j] *= ki;
                sy[i * n + j] *= kj;
            }
        }
        (
            ComplexField2D::from_spectrum(g.clone(), sx),
            ComplexField2D::from_spectrum(g, sy),
        )
    }

    pub fn laplacian(&self) -> ComplexField2D {
        let g = self.grid.clone();
        let n = g.n;
        let mut spec = self.to_spectrum();
        for i in 0..n {
            let ki2 = g.k[i] * g.k[i];
            for j in 0..n {
                spec[i * n + j] *= -(ki2 + g.k[j] * g.k[j]);
            }
        }
        ComplexField2D::from_spectrum(g, spec)
    }

    /// Apply a real multiplier m(|k|) in Fourier space.
    pub fn apply_radial_multiplier(&self, m: impl Fn(f64) -> f64) -> ComplexField2D {
        let g = self.grid.clone();
        let n = g.n;
        let mut spec = self.to_spectrum();
        for i in 0..n {
            let ki2 = g.k[i] * g.k[i];
            for j in 0..n {
                let kn = (ki2 + g.k[j] * g.k[j]).sqrt();
                spec[i * n + j] *= m(kn);
            }
        }
        ComplexField2D::from_spectrum(g, spec)
    }

    /// Translate: out(x) = f(x + a), exact for the interpolant.
    pub fn shift(&self, a: [f64; 2]) -> ComplexField2D {
        let g = self.grid.clone();
        let n = g.n;
        let mut spec = self.to_spectrum();
        for i in 0..n {
            let px = Complex64::from_polar(1.0, g.k[i] * a[0]);
            for j in 0..n {
                let py = Complex64::from_polar(1.0, g.k[j] * a[1]);
                spec[i * n + j] *= px * py;
            }
        }
        ComplexField2D::from_spectrum(g, spec)
    }

    /// Fraction of L^2 mass carried by modes with |k| > frac * k_max.
    pub fn spectral_tail_fraction(&self, frac: f64) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let cut = frac * g.k_max();
        let cut2 = cut * cut;
        let spec = self.to_spectrum();
        let mut tail = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let ki2 = g.k[i] * g.k[i];
            for j in 0..n {
                let p = spec[i * n + j].norm_sqr();
                total += p;
                if ki2 + g.k[j] * g.k[j] > cut2 {
                    tail += p;
                }
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

/// Littlewood-Paley projector kinds. `Leq` keeps |k| <~ 2^N through the smooth
/// bump, `Geq` is its exact complement 1 - bump, `Band` is the dyadic shell
/// difference. For N <= -1 both Leq and Band vanish and Geq is the identity;
/// the N = 0 band coincides with Leq at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpKind {
    Leq,
    Geq,
    Band,
}

pub fn lp_multiplier(kind: LpKind, cutoff_exponent: i32, k_abs: f64) -> f64 {
    let leq_at = |nn: i32| -> f64 {
        if nn <= -1 {
            0.0
        } else {
            bump(k_abs / (nn as f64).exp2())
        }
    };
    match kind {
        LpKind::Leq => leq_at(cutoff_exponent),
        LpKind::Geq => 1.0 - leq_at(cutoff_exponent),
        LpKind::Band => leq_at(cutoff_exponent) - leq_at(cutoff_exponent - 1),
    }
}

pub fn lp_project(f: &ComplexField2D, cutoff_exponent: i32, kind: LpKind) -> ComplexField2D {
    f.apply_radial_multiplier(|k| lp_multiplier(kind, cutoff_exponent, k))
}

/// Component indexing: N fields labelled 1..N, or fields labelled by the
/// integers j with |j| <= Jmax for the resonant system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldIndexing {
    Finite { n_comp: usize },
    Resonant { jmax: i32 },
}

impl FieldIndexing {
    pub fn len(&self) -> usize {
        match self {
            FieldIndexing::Finite { n_comp } => *n_comp,
            FieldIndexing::Resonant { jmax } => (2 * jmax + 1) as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integer label of component slot `idx`.
    pub fn label(&self, idx: usize) -> i32 {
        match self {
            FieldIndexing::Finite { .. } => idx as i32 + 1,
            FieldIndexing::Resonant { jmax } => idx as i32 - jmax,
        }
    }

    pub fn slot(&self, label: i32) -> Option<usize> {
        match self {
            FieldIndexing::Finite { n_comp } => {
                if label >= 1 && label <= *n_comp as i32 {
                    Some((label - 1) as usize)
                } else {
                    None
                }
            }
            FieldIndexing::Resonant { jmax } => {
                if label.abs() <= *jmax {
                    Some((label + jmax) as usize)
                } else {
                    None
                }
            }
        }
    }
}

/// Ordered list of component fields sharing one grid.
#[derive(Debug, Clone)]
pub struct FieldVec {
    pub indexing: FieldIndexing,
    pub components: Vec<ComplexField2D>,
}

impl FieldVec {
    pub fn zero(grid: Arc<Grid2D>, indexing: FieldIndexing) -> Self {
        let components = (0..indexing.len())
            .map(|_| ComplexField2D::zero(grid.clone()))
            .collect();
        FieldVec {
            indexing,
            components,
        }
    }

    pub fn from_components(indexing: FieldIndexing, components: Vec<ComplexField2D>) -> Result<Self> {
        if components.len() != indexing.len() {
            return Err(NlssError::Config(format!(
                "component count {} does not match indexing ({} expected)",
                components.len(),
                indexing.len()
            )));
        }
        if let Some(first) = components.first() {
            if !components.iter().all(|c| c.grid.same_grid(&first.grid)) {
                return Err(NlssError::Config(
                    "all components must share one grid".into(),
                ));
            }
        }
        Ok(FieldVec {
            indexing,
            components,
        })
    }

    pub fn grid(&self) -> Arc<Grid2D> {
        self.components[0].grid.clone()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    /// Squared L^2 l^2 norm: Euclidean combination of per-component L^2 norms.
    pub fn l2l2_norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm_sq()).sum()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.grad_norm_sq()).sum()
    }

    /// Real L^2 l^2 pairing Re int sum_j f_j conj(g_j).
    pub fn real_pairing(&self, other: &FieldVec) -> f64 {
        debug_assert_eq!(self.n_components(), other.n_components());
        self.components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a.inner(b).re)
            .sum()
    }

    /// Pointwise sup of the l^2 norm across components.
    pub fn linf_l2(&self) -> f64 {
        let len = self.components[0].samples.len();
        let mut best = 0.0f64;
        for p in 0..len {
            let s: f64 = self.components.iter().map(|c| c.samples[p].norm_sqr()).sum();
            best = best.max(s);
        }
        best.sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> FieldVec {
        let components = self
            .components
            .iter()
            .map(|c| ComplexField2D {
                grid: c.grid.clone(),
                samples: c.samples.iter().map(|z| z * factor).collect(),
            })
            .collect();
        FieldVec {
            indexing: self.indexing,
            components,
        }
    }

    pub fn add_scaled(&self, other: &FieldVec, factor: f64) -> FieldVec {
        debug_assert_eq!(self.n_components(), other.n_components());
        let components = self
            .components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| ComplexField2D {
                grid: a.grid.clone(),
                samples: a
                    .samples
                    .iter()
                    .zip(b.samples.iter())
                    .map(|(x, y)| x + y * factor)
                    .collect(),
            })
            .collect();
        FieldVec {
            indexing: self.indexing,
            components,
        }
    }

    pub fn sub(&self, other: &FieldVec) -> FieldVec {
        self.add_scaled(other, -1.0)
    }

    /// Intensity centroid int x sum_j |u_j|^2 / mass.
    pub fn centroid(&self) -> [f64; 2] {
        let g = self.grid();
        let n = g.n;
        let mut m0 = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for c in &self.components {
            for i in 0..n {
                for j in 0..n {
                    let p = c.samples[i * n + j].norm_sqr();
                    m0 += p;
                    mx += g.x[i] * p;
                    my += g.x[j] * p;
                }
            }
        }
        if m0 > 0.0 {
            [mx / m0, my / m0]
        } else {
            [0.0, 0.0]
        }
    }

    /// Root-mean-square radius about the intensity centroid.
    pub fn rms_width(&self) -> f64 {
        let g = self.grid();
        let n = g.n;
        let c0 = self.centroid();
        let mut m0 = 0.0;
        let mut m2 = 0.0;
        for c in &self.components {
            for i in 0..n {
                for j in 0..n {
                    let p = c.samples[i * n + j].norm_sqr();
                    let dx = g.x[i] - c0[0];
                    let dy = g.x[j] - c0[1];
                    m0 += p;
                    m2 += (dx * dx + dy * dy) * p;
                }
            }
        }
        if m0 > 0.0 {
            (m2 / m0).sqrt()
        } else {
            0.0
        }
    }

    /// Spectral centroid int k |u_hat|^2 / int |u_hat|^2, summed over components.
    pub fn spectral_centroid(&self) -> [f64; 2] {
        let g = self.grid();
        let n = g.n;
        let mut m0 = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for c in &self.components {
            let spec = c.to_spectrum();
            for i in 0..n {
                for j in 0..n {
                    let p = spec[i * n + j].norm_sqr();
                    m0 += p;
                    mx += g.k[i] * p;
                    my += g.k[j] * p;
                }
            }
        }
        if m0 > 0.0 {
            [mx / m0, my / m0]
        } else {
            [0.0, 0.0]
        }
    }

    pub fn spectral_tail_fraction(&self, frac: f64) -> f64 {
        let mut tail = 0.0;
        let mut total = 0.0;
        for c in &self.components {
            let t = c.spectral_tail_fraction(frac);
            let m = c.l2_norm_sq();
            tail += t * m;
            total += m;
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn lp_project(&self, cutoff_exponent: i32, kind: LpKind) -> FieldVec {
        let components = self
            .components
            .iter()
            .map(|c| lp_project(c, cutoff_exponent, kind))
            .collect();
        FieldVec {
            indexing: self.indexing,
            components,
        }
    }
}

// ---------------------------------------------------------------------------
// Band-limited evaluation at arbitrary points: zero-padded spectral
// oversampling followed by local Lagrange interpolation on the fine grid.
// ---------------------------------------------------------------------------

const LAGRANGE_POINTS: usize = 10;

/// Fine-grid representation of one field for off-grid evaluation.
pub struct FineInterp {
    nf: usize,
    dxf: f64,
    half_width: f64,
    values: Vec<Complex64>,
}

impl ComplexField2D {
    /// Zero-pad the spectrum by `factor` and return the oversampled field.
    /// The Nyquist coefficients are split evenly between +-n/2 so the
    /// refined interpolant agrees with the symmetric trigonometric one.
    pub fn oversample(&self, factor: usize) -> FineInterp {
        assert!(factor >= 2 && factor.is_power_of_two());
        let n = self.grid.n;
        let nf = n * factor;
        let spec = self.to_spectrum();
        let mut fine = vec![Complex64::new(0.0, 0.0); nf * nf];
        // Per-dimension scatter targets: (fine index, weight).
        let targets = |i: usize| -> [(usize, f64); 2] {
            let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
            if m == -(n as i64) / 2 {
                [(n / 2, 0.5), (nf - n / 2, 0.5)]
            } else {
                let fi = if m >= 0 { m as usize } else { (nf as i64 + m) as usize };
                [(fi, 1.0), (fi, 0.0)]
            }
        };
        let scale = (factor * factor) as f64;
        for i in 0..n {
            for (fi, wi) in targets(i) {
                if wi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for (fj, wj) in targets(j) {
                        if wj == 0.0 {
                            continue;
                        }
                        fine[fi * nf + fj] += spec[i * n + j] * (wi * wj * scale);
                    }
                }
            }
        }
        plans_for(nf).inverse(&mut fine);
        FineInterp {
            nf,
            dxf: 2.0 * self.grid.half_width / nf as f64,
            half_width: self.grid.half_width,
            values: fine,
        }
    }
}

impl FineInterp {
    /// Evaluate the periodic interpolant at an arbitrary point.
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (bx, wx) = self.stencil(x);
        let (by, wy) = self.stencil(y);
        let nf = self.nf;
        let mut acc = Complex64::new(0.0, 0.0);
        for (di, &wi) in wx.iter().enumerate() {
            let row = ((bx + di) % nf) * nf;
            let mut racc = Complex64::new(0.0, 0.0);
            for (dj, &wj) in wy.iter().enumerate() {
                racc += self.values[row + (by + dj) % nf] * wj;
            }
            acc += racc * wi;
        }
        acc
    }

    fn stencil(&self, coord: f64) -> (usize, [f64; LAGRANGE_POINTS]) {
        let nf = self.nf as f64;
        let mut t = (coord + self.half_width) / self.dxf;
        t = t.rem_euclid(nf);
        let i0 = t.floor();
        let frac = t - i0;
        // Stencil nodes i0-4 .. i0+5; interpolation position 4 + frac.
        let base = ((i0 as i64 - 4).rem_euclid(self.nf as i64)) as usize;
        let p = 4.0 + frac;
        let mut w = [0.0f64; LAGRANGE_POINTS];
        if frac.abs() < 1e-14 {
            w[4] = 1.0;
            return (base, w);
        }
        // Uniform-grid Lagrange weights via the product trick.
        let mut full = 1.0;
        for j in 0..LAGRANGE_POINTS {
            full *= p - j as f64;
        }
        for (i, wi) in w.iter_mut().enumerate() {
            let mut den = 1.0;
            for j in 0..LAGRANGE_POINTS {
                if j != i {
                    den *= (i as f64) - (j as f64);
                }
            }
            *wi = full / ((p - i as f64) * den);
        }
        (base, w)
    }
}

/// Evaluate out(x) = f(scale*x + offset) on the grid of f. The pure-shift
/// case goes through the exact spectral phase; genuine rescalings use the
/// oversampled interpolant.
pub fn sample_affine(f: &ComplexField2D, scale: f64, offset: [f64; 2]) -> ComplexField2D {
    if scale == 1.0 {
        return f.shift(offset);
    }
    let fine = f.oversample(4);
    let g = f.grid.clone();
    ComplexField2D::from_fn(g, |x, y| fine.eval(scale * x + offset[0], scale * y + offset[1]))
}

/// Smooth random field built from a handful of modulated Gaussian bumps:
/// centers within `envelope_width` of the origin, widths near
/// `envelope_width`, carrier wavevectors in the disk |k| <= k_cut, normalized
/// to the requested L^2 norm. Gaussians are the one shape that is
/// exponentially small at the box boundary and at the spectral band edge at
/// the same time, which the identity checks downstream rely on; keep
/// `envelope_width` below about L/6 and k_cut well under k_max.
pub fn random_localized(
    grid: Arc<Grid2D>,
    rng: &mut impl Rng,
    k_cut: f64,
    envelope_width: f64,
    l2_norm: f64,
) -> ComplexField2D {
    let n_bumps = 6;
    let mut bumps = Vec::with_capacity(n_bumps);
    for _ in 0..n_bumps {
        let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let cr = 0.6 * envelope_width * rng.gen_range(0.0..1.0f64).sqrt();
        let ca = rng.gen_range(0.0..std::f64::consts::TAU);
        let center = [cr * ca.cos(), cr * ca.sin()];
        let sigma = envelope_width * rng.gen_range(0.8..1.1);
        let kr = k_cut * rng.gen_range(0.0..1.0f64).sqrt();
        let ka = rng.gen_range(0.0..std::f64::consts::TAU);
        let carrier = [kr * ka.cos(), kr * ka.sin()];
        bumps.push((amp, center, sigma, carrier));
    }
    let mut out = ComplexField2D::from_fn(grid, |x, y| {
        let mut z = Complex64::new(0.0, 0.0);
        for &(amp, c, s, k) in &bumps {
            let dx = x - c[0];
            let dy = y - c[1];
            let env = (-(dx * dx + dy * dy) / (2.0 * s * s)).exp();
            z += amp * env * Complex64::from_polar(1.0, k[0] * x + k[1] * y);
        }
        z
    });
    let cur = out.l2_norm_sq().sqrt();
    if cur > 0.0 {
        let s = l2_norm / cur;
        for v in out.samples.iter_mut() {
            *v *= s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> Arc<Grid2D> {
        Grid2D::new(8.0, 64).unwrap()
    }

    fn random_field(seed: u64) -> ComplexField2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = test_grid();
        ComplexField2D::from_fn(g, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn roundtrip_is_identity() {
        let f = random_field(7);
        let back = ComplexField2D::from_spectrum(f.grid.clone(), f.to_spectrum());
        let diff: f64 = f
            .samples
            .iter()
            .zip(back.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12 * f.linf_norm().max(1.0));
    }

    #[test]
    fn parseval_holds() {
        let f = random_field(11);
        assert_relative_eq!(f.l2_norm_sq(), f.l2_norm_sq_spectral(), max_relative = 1e-12);
    }

    #[test]
    fn single_mode_gradient_is_ik() {
        let g = test_grid();
        let (kx, ky) = (g.k[3], g.k[61]); // one positive, one negative mode
        let f = ComplexField2D::from_fn(g, |x, y| Complex64::from_polar(1.0, kx * x + ky * y));
        let (fx, fy) = f.gradient();
        for p in 0..f.samples.len() {
            assert!((fx.samples[p] - Complex64::new(0.0, kx) * f.samples[p]).norm() < 1e-12);
            assert!((fy.samples[p] - Complex64::new(0.0, ky) * f.samples[p]).norm() < 1e-12);
        }
    }

    #[test]
    fn real_gaussian_has_zero_momentum() {
        let g = test_grid();
        let f = ComplexField2D::from_fn(g, |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        });
        let (fx, _) = f.gradient();
        let mom = fx.inner(&f).im; // Im int conj(f) d1 f, sign aside
        assert!(mom.abs() < 1e-12);
    }

    #[test]
    fn gradient_norm_matches_laplacian_form() {
        let f = random_field(3);
        let (fx, fy) = f.gradient();
        let via_grad = fx.l2_norm_sq() + fy.l2_norm_sq();
        let via_quadratic_form = f.grad_norm_sq();
        assert_relative_eq!(via_grad, via_quadratic_form, max_relative = 1e-12);
    }

    #[test]
    fn lp_identity_on_low_band() {
        let g = test_grid();
        // Mode with |k| well below 2^1: bump argument <= 1.
        let k = g.k[2];
        let f = ComplexField2D::from_fn(g, |x, y| Complex64::from_polar(0.7, k * (x + y)));
        let p = lp_project(&f, 1, LpKind::Leq);
        let diff: f64 = f
            .samples
            .iter()
            .zip(p.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn lp_kills_high_band_and_negative_exponent() {
        let g = test_grid();
        let k = g.k[20]; // |k| = 20*pi/8 ~ 7.85 >= 2^{1+1} = 4
        let f = ComplexField2D::from_fn(g, |x, y| Complex64::from_polar(1.0, k * x - k * y));
        let p = lp_project(&f, 1, LpKind::Leq);
        assert!(p.linf_norm() < 1e-12);
        let z = lp_project(&f, -3, LpKind::Leq);
        assert!(z.linf_norm() < 1e-13);
        let id = lp_project(&f, -3, LpKind::Geq);
        let diff: f64 = f
            .samples
            .iter()
            .zip(id.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn lp_partition_of_unity() {
        let f = random_field(5);
        let lo = lp_project(&f, 2, LpKind::Leq);
        let hi = lp_project(&f, 2, LpKind::Geq);
        // leq + geq is exactly the identity multiplier.
        let recon: f64 = f
            .samples
            .iter()
            .zip(lo.samples.iter().zip(hi.samples.iter()))
            .map(|(orig, (a, b))| (orig - (a + b)).norm())
            .fold(0.0, f64::max);
        assert!(recon < 1e-12);
    }

    #[test]
    fn lp_bands_telescope_to_leq() {
        let f = random_field(9);
        let mut acc = lp_project(&f, 0, LpKind::Band);
        for nn in 1..=3 {
            let b = lp_project(&f, nn, LpKind::Band);
            for (a, v) in acc.samples.iter_mut().zip(b.samples.iter()) {
                *a += v;
            }
        }
        let leq = lp_project(&f, 3, LpKind::Leq);
        let diff: f64 = acc
            .samples
            .iter()
            .zip(leq.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn lp_double_projection_squares_multiplier() {
        // On the taper annulus P<=N is not idempotent; the multiplier squares.
        let f = random_field(13);
        let once = lp_project(&f, 2, LpKind::Leq);
        let twice = lp_project(&once, 2, LpKind::Leq);
        let squared = f.apply_radial_multiplier(|k| {
            let m = lp_multiplier(LpKind::Leq, 2, k);
            m * m
        });
        let diff: f64 = twice
            .samples
            .iter()
            .zip(squared.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn shift_matches_pointwise_on_smooth_field() {
        let g = test_grid();
        let f = ComplexField2D::from_fn(g.clone(), |x, y| {
            Complex64::new((-(x * x + y * y) / 3.0).exp(), 0.1 * x)
        });
        // Shift by an exact number of grid cells: circular shift of samples.
        let a = [2.0 * g.dx, -3.0 * g.dx];
        let s = f.shift(a);
        let n = g.n;
        for i in 0..n {
            for j in 0..n {
                let si = (i + 2) % n;
                let sj = (j + n - 3) % n;
                let expect = f.samples[si * n + sj];
                assert!((s.samples[i * n + j] - expect).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn affine_sampling_reproduces_scaled_gaussian() {
        let g = test_grid();
        let f = ComplexField2D::from_fn(g.clone(), |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        });
        let lam = 1.17;
        let out = sample_affine(&f, lam, [0.3, -0.2]);
        let expect = ComplexField2D::from_fn(g, |x, y| {
            let (sx, sy) = (lam * x + 0.3, lam * y - 0.2);
            Complex64::new((-(sx * sx + sy * sy) / 2.0).exp(), 0.0)
        });
        let diff: f64 = out
            .samples
            .iter()
            .zip(expect.samples.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "affine sampling error {diff:.3e}");
    }

    #[test]
    fn fieldvec_norm_is_euclidean_combination() {
        let g = test_grid();
        let a = random_field(1);
        let b = random_field(2);
        let expected = a.l2_norm_sq() + b.l2_norm_sq();
        let v = FieldVec::from_components(
            FieldIndexing::Finite { n_comp: 2 },
            vec![a, b],
        )
        .unwrap();
        assert_relative_eq!(v.l2l2_norm_sq(), expected, max_relative = 1e-14);
        let _ = g;
    }

    #[test]
    fn resonant_indexing_roundtrip() {
        let idx = FieldIndexing::Resonant { jmax: 3 };
        assert_eq!(idx.len(), 7);
        for slot in 0..idx.len() {
            let j = idx.label(slot);
            assert_eq!(idx.slot(j), Some(slot));
        }
        assert_eq!(idx.slot(4), None);
        let fin = FieldIndexing::Finite { n_comp: 3 };
        assert_eq!(fin.label(0), 1);
        assert_eq!(fin.slot(3), Some(2));
        assert_eq!(fin.slot(0), None);
    }
}
