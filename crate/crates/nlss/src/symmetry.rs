//! Symmetry transforms of the system and the two explicit solution families
//! they generate: the soliton orbit and its pseudo-conformal image.
//!
//! Group convention, acting on a snapshot at time t:
//!
//!   (g u)_j(x) = e^{i gamma_j} e^{i xi0.(x - xi0 t)} lambda
//!                u_j(lambda (x - 2 xi0 t - x0))
//!
//! i.e. scaling, then spatial translation by x0, then per-component phases,
//! then the Galilean boost. At t = 0 this is the frame used by the modulation
//! decomposition. Spatial rescalings go through the band-limited interpolant;
//! pure shifts are exact spectral phases.

use num_complex::Complex64;

use crate::error::{NlssError, Result};
use crate::field::{sample_affine, ComplexField2D, FieldIndexing, FieldVec};
use crate::ground::GroundState;
use crate::nonlin::apply_nonlinearity;

/// Element of the (N+5)-parameter symmetry group (plus time translation).
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub lambda: f64,
    pub x0: [f64; 2],
    pub xi0: [f64; 2],
    pub gamma: Vec<f64>,
    pub t0: f64,
}

impl GroupElement {
    pub fn identity(n_comp: usize) -> Self {
        GroupElement {
            lambda: 1.0,
            x0: [0.0; 2],
            xi0: [0.0; 2],
            gamma: vec![0.0; n_comp],
            t0: 0.0,
        }
    }

    /// Common-phase constructor: one phase shared by every component.
    pub fn with_common_phase(n_comp: usize, gamma: f64) -> Self {
        let mut g = Self::identity(n_comp);
        g.gamma = vec![gamma; n_comp];
        g
    }

    pub fn reduce_phases(&mut self) {
        for g in self.gamma.iter_mut() {
            *g = g.rem_euclid(std::f64::consts::TAU);
        }
    }
}

/// Side information from a transform: whether the rescaling pushed spectral
/// content past the band limit, and how much.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransformMeta {
    pub band_warning: bool,
    pub out_of_band_fraction: f64,
}

/// Apply the group element to a snapshot taken at time `t`.
pub fn apply_group(g: &GroupElement, u: &FieldVec, t: f64) -> (FieldVec, TransformMeta) {
    let grid = u.grid();
    let lambda = g.lambda;
    assert!(lambda > 0.0, "group scale must be positive");
    let mut meta = TransformMeta::default();
    if lambda > 1.0 {
        // Content above k_max / lambda aliases after the rescale.
        let frac = u.spectral_tail_fraction(1.0 / lambda);
        if frac > 1e-10 {
            meta.band_warning = true;
            meta.out_of_band_fraction = frac;
        }
    }
    let shift = [
        -lambda * (2.0 * g.xi0[0] * t + g.x0[0]),
        -lambda * (2.0 * g.xi0[1] * t + g.x0[1]),
    ];
    let n = grid.n;
    let components = u
        .components
        .iter()
        .enumerate()
        .map(|(slot, c)| {
            let mut out = sample_affine(c, lambda, shift);
            let phase = g.gamma.get(slot).copied().unwrap_or(0.0)
                - (g.xi0[0] * g.xi0[0] + g.xi0[1] * g.xi0[1]) * t;
            for i in 0..n {
                for j in 0..n {
                    let ph = phase + g.xi0[0] * grid.x[i] + g.xi0[1] * grid.x[j];
                    out.samples[i * n + j] *= lambda * Complex64::from_polar(1.0, ph);
                }
            }
            out
        })
        .collect();
    (
        FieldVec {
            indexing: u.indexing,
            components,
        },
        meta,
    )
}

/// Pseudo-conformal image of a snapshot. Input: u at time t (t != 0).
/// Output: the transformed field at its own time 1/t,
///   v(1/t, x) = t conj(u(t, t x)) e^{i t |x|^2 / 4}.
/// Applying it again at the returned time recovers the input.
pub fn pseudo_conformal(u: &FieldVec, t: f64) -> Result<(FieldVec, f64)> {
    if t == 0.0 {
        return Err(NlssError::Domain(
            "pseudo-conformal transform is singular at t = 0".into(),
        ));
    }
    let grid = u.grid();
    let n = grid.n;
    let components = u
        .components
        .iter()
        .map(|c| {
            let mut out = sample_affine(c, t, [0.0, 0.0]);
            for i in 0..n {
                for j in 0..n {
                    let r2 = grid.x[i] * grid.x[i] + grid.x[j] * grid.x[j];
                    let chirp = Complex64::from_polar(1.0, t * r2 / 4.0);
                    let z = out.samples[i * n + j];
                    out.samples[i * n + j] = t * z.conj() * chirp;
                }
            }
            out
        })
        .collect();
    Ok((
        FieldVec {
            indexing: u.indexing,
            components,
        },
        1.0 / t,
    ))
}

/// Soliton family of the coupled system:
///   u_j(t,x) = e^{i gamma_j - i t |xi|^2} e^{i lambda^2 t} e^{i x.xi}
///              lambda Q(lambda (x - 2 t xi) - x_tilde)
/// with Q = Q0 / sqrt(2N-1) in every component.
pub fn exact_soliton(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    t: f64,
) -> FieldVec {
    let (u, _) = soliton_with_derivative(gs, n_comp, lambda, gamma, x_tilde, xi, t, false);
    u
}

/// Soliton snapshot together with its analytic time derivative.
pub fn exact_soliton_with_time_derivative(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    t: f64,
) -> (FieldVec, FieldVec) {
    let (u, du) = soliton_with_derivative(gs, n_comp, lambda, gamma, x_tilde, xi, t, true);
    (u, du.unwrap())
}

fn soliton_with_derivative(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    t: f64,
    with_dt: bool,
) -> (FieldVec, Option<FieldVec>) {
    assert!(lambda > 0.0);
    assert_eq!(gamma.len(), n_comp);
    let grid = gs.profile.grid.clone();
    let amp = GroundState::component_amplitude(n_comp);
    let sampler = gs.radial_sampler();
    let xi_sq = xi[0] * xi[0] + xi[1] * xi[1];
    let omega = lambda * lambda - xi_sq;
    // Continuum formula at one point; the grid field is the sum of this over
    // the 3x3 lattice of box translates, which is smooth-periodic by
    // construction and keeps the decaying R^2 profile (a rescaled periodic
    // interpolant would fold interior copies in instead).
    let eval_one = |g: f64, x: f64, y: f64| -> (Complex64, Complex64) {
        let zx = lambda * (x - 2.0 * t * xi[0]) - x_tilde[0];
        let zy = lambda * (y - 2.0 * t * xi[1]) - x_tilde[1];
        let r = (zx * zx + zy * zy).sqrt();
        let q = sampler.eval(r);
        let phase = g + omega * t + xi[0] * x + xi[1] * y;
        let ph = Complex64::from_polar(lambda * amp, phase);
        let val = ph * q;
        if !with_dt {
            return (val, Complex64::new(0.0, 0.0));
        }
        // The profile argument moves at -2 lambda xi.
        let transport = if r > 1e-12 {
            let d = sampler.eval_deriv(r);
            -2.0 * lambda * (xi[0] * d * zx / r + xi[1] * d * zy / r)
        } else {
            0.0
        };
        (val, Complex64::new(0.0, omega) * val + ph * transport)
    };
    build_periodized(&grid, gamma, eval_one, with_dt)
}

/// Sum a pointwise continuum formula over the 3x3 lattice of box translates.
fn build_periodized(
    grid: &std::sync::Arc<crate::grid::Grid2D>,
    gamma: &[f64],
    eval_one: impl Fn(f64, f64, f64) -> (Complex64, Complex64),
    with_dt: bool,
) -> (FieldVec, Option<FieldVec>) {
    let n = grid.n;
    let n_comp = gamma.len();
    let period = 2.0 * grid.half_width;
    let mut components = Vec::with_capacity(n_comp);
    let mut d_components = Vec::with_capacity(n_comp);
    for &g in gamma.iter() {
        let mut samples = Vec::with_capacity(n * n);
        let mut d_samples = if with_dt {
            Vec::with_capacity(n * n)
        } else {
            Vec::new()
        };
        for i in 0..n {
            for j in 0..n {
                let mut val = Complex64::new(0.0, 0.0);
                let mut dval = Complex64::new(0.0, 0.0);
                for mx in -1i32..=1 {
                    for my in -1i32..=1 {
                        let (v, d) = eval_one(
                            g,
                            grid.x[i] + period * mx as f64,
                            grid.x[j] + period * my as f64,
                        );
                        val += v;
                        dval += d;
                    }
                }
                samples.push(val);
                if with_dt {
                    d_samples.push(dval);
                }
            }
        }
        components.push(ComplexField2D {
            grid: grid.clone(),
            samples,
        });
        if with_dt {
            d_components.push(ComplexField2D {
                grid: grid.clone(),
                samples: d_samples,
            });
        }
    }
    let indexing = FieldIndexing::Finite { n_comp };
    let u = FieldVec {
        indexing,
        components,
    };
    let du = if with_dt {
        Some(FieldVec {
            indexing,
            components: d_components,
        })
    } else {
        None
    };
    (u, du)
}

/// Pseudo-conformal soliton family, blowing up at t = T:
///   u_j(t,x) = (lambda/|T-t|) e^{i gamma_j} e^{i |x-xi|^2 / (4(t-T))}
///              e^{i lambda^2/(t-T)} Q(lambda (x-xi)/(T-t) - x_tilde).
pub fn exact_pseudosoliton(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    blowup_time: f64,
    t: f64,
) -> Result<FieldVec> {
    let (u, _) = pseudosoliton_with_derivative(
        gs,
        n_comp,
        lambda,
        gamma,
        x_tilde,
        xi,
        blowup_time,
        t,
        false,
    )?;
    Ok(u)
}

#[allow(clippy::too_many_arguments)]
pub fn exact_pseudosoliton_with_time_derivative(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    blowup_time: f64,
    t: f64,
) -> Result<(FieldVec, FieldVec)> {
    let (u, du) = pseudosoliton_with_derivative(
        gs,
        n_comp,
        lambda,
        gamma,
        x_tilde,
        xi,
        blowup_time,
        t,
        true,
    )?;
    Ok((u, du.unwrap()))
}

#[allow(clippy::too_many_arguments)]
fn pseudosoliton_with_derivative(
    gs: &GroundState,
    n_comp: usize,
    lambda: f64,
    gamma: &[f64],
    x_tilde: [f64; 2],
    xi: [f64; 2],
    blowup_time: f64,
    t: f64,
    with_dt: bool,
) -> Result<(FieldVec, Option<FieldVec>)> {
    if t == blowup_time {
        return Err(NlssError::Domain(
            "pseudo-conformal soliton is singular at t = T".into(),
        ));
    }
    assert!(lambda > 0.0);
    assert_eq!(gamma.len(), n_comp);
    let grid = gs.profile.grid.clone();
    let amp = GroundState::component_amplitude(n_comp);
    let sampler = gs.radial_sampler();
    let tt = blowup_time;
    let inv = 1.0 / (tt - t); // 1/(T - t), sign carries through
    let prefactor = lambda * inv.abs();
    let eval_one = |g: f64, x: f64, y: f64| -> (Complex64, Complex64) {
        let dx = x - xi[0];
        let dy = y - xi[1];
        // z = lambda (x - xi)/(T - t) - x_tilde.
        let zx = lambda * dx * inv - x_tilde[0];
        let zy = lambda * dy * inv - x_tilde[1];
        let r = (zx * zx + zy * zy).sqrt();
        let q = sampler.eval(r);
        let r2 = dx * dx + dy * dy;
        // The lambda^2 phase rotates like lambda^2/(T - t): that sign is the
        // one the equation accepts (and the one the pseudo-conformal image of
        // the soliton produces); with the opposite sign the field is not a
        // solution, which the residual checks would flag immediately.
        let phase = g + r2 / (4.0 * (t - tt)) + lambda * lambda / (tt - t);
        let ph = Complex64::from_polar(prefactor * amp, phase);
        let val = ph * q;
        if !with_dt {
            return (val, Complex64::new(0.0, 0.0));
        }
        let dphase = -r2 / (4.0 * (t - tt) * (t - tt))
            + lambda * lambda / ((tt - t) * (tt - t));
        let transport = if r > 1e-12 {
            let d = sampler.eval_deriv(r);
            lambda * inv * inv * (dx * d * zx / r + dy * d * zy / r)
        } else {
            0.0
        };
        (val, val * Complex64::new(inv, dphase) + ph * transport)
    };
    let (u, du) = build_periodized(&grid, gamma, eval_one, with_dt);
    Ok((u, du))
}

/// L^2 l^2 norm of i du/dt + Lap u + F(u); zero for exact solutions up to
/// discretization.
pub fn pde_residual_norm(u: &FieldVec, du_dt: &FieldVec) -> f64 {
    let f = apply_nonlinearity(u, false);
    let mut acc = 0.0;
    for ((uc, dc), fc) in u
        .components
        .iter()
        .zip(du_dt.components.iter())
        .zip(f.components.iter())
    {
        let lap = uc.laplacian();
        let mut comp = 0.0;
        for p in 0..uc.samples.len() {
            let r = Complex64::new(0.0, 1.0) * dc.samples[p] + lap.samples[p] + fc.samples[p];
            comp += r.norm_sqr();
        }
        acc += comp * uc.grid.cell_area();
    }
    acc.sqrt()
}
