//! Linearized operators about the vector ground state and their spectra.
//!
//! The plus-operator couples components: diagonal 1 - Lap - (2N+1) Q^2 with
//! off-diagonal -4 Q^2, where Q = Q0/sqrt(2N-1). The minus-operator is
//! diagonal 1 - Lap - (2N-1) Q^2 = 1 - Lap - Q0^2 in every slot. Acting on
//! all-equal vectors the plus-operator reduces to the scalar
//! 1 - Lap - 3 Q0^2, which carries the unique negative eigenvalue and the
//! translation kernel.
//!
//! Eigenpairs come from Lanczos with full reorthogonalization, explicit
//! deflation of converged pairs, and restarts; the targeted eigenvalues sit
//! at the bottom of the spectrum so no shift is required.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NlssError, Result};
use crate::field::{ComplexField2D, FieldIndexing, FieldVec};
use crate::grid::{plans_for, Grid2D};
use crate::ground::GroundState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    LPlus,
    LMinus,
    L0Plus,
    L0Minus,
}

pub struct LinearOperator {
    pub kind: OperatorKind,
    pub n_comp: usize,
    pub grid: Arc<Grid2D>,
    /// Q0^2 at every sample.
    q0_sq: Vec<f64>,
}

pub fn assemble(
    kind: OperatorKind,
    n_comp: usize,
    gs: &GroundState,
    grid: Arc<Grid2D>,
) -> Result<LinearOperator> {
    if !gs.profile.grid.same_grid(&grid) {
        return Err(NlssError::Config(
            "ground state and operator grids differ".into(),
        ));
    }
    let n_comp = match kind {
        OperatorKind::L0Plus | OperatorKind::L0Minus => 1,
        _ => {
            if n_comp == 0 {
                return Err(NlssError::Config("component count must be positive".into()));
            }
            n_comp
        }
    };
    let q0_sq = gs.profile.samples.iter().map(|z| z.re * z.re).collect();
    Ok(LinearOperator {
        kind,
        n_comp,
        grid,
        q0_sq,
    })
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.n_comp * self.grid.n * self.grid.n
    }

    /// Multiplier structure of the potential part: out_j gets
    /// -(coeff_diag * v_j + coeff_sum * S) * Q0^2 where S = sum_k v_k.
    fn potential_coeffs(&self) -> (f64, f64) {
        let nn = self.n_comp as f64;
        match self.kind {
            OperatorKind::L0Plus => (3.0, 0.0),
            OperatorKind::L0Minus => (1.0, 0.0),
            // (2N+1) Q^2 v_j + 4 Q^2 (S - v_j), with Q^2 = Q0^2/(2N-1).
            OperatorKind::LPlus => (((2.0 * nn - 3.0) / (2.0 * nn - 1.0)), 4.0 / (2.0 * nn - 1.0)),
            OperatorKind::LMinus => (1.0, 0.0),
        }
    }

    /// Apply to a packed real vector field (component-major, n*n each).
    pub fn apply_packed(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.n;
        let len = n * n;
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let (c_diag, c_sum) = self.potential_coeffs();
        // Pointwise sum across components (zero when uncoupled).
        let mut s = vec![0.0f64; if c_sum != 0.0 { len } else { 0 }];
        if c_sum != 0.0 {
            for c in 0..self.n_comp {
                for (sv, x) in s.iter_mut().zip(v[c * len..(c + 1) * len].iter()) {
                    *sv += x;
                }
            }
        }
        let plans = plans_for(n);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for c in 0..self.n_comp {
            let vc = &v[c * len..(c + 1) * len];
            for (b, x) in buf.iter_mut().zip(vc.iter()) {
                *b = Complex64::new(*x, 0.0);
            }
            plans.forward(&mut buf);
            for i in 0..n {
                let ki2 = self.grid.k[i] * self.grid.k[i];
                for j in 0..n {
                    buf[i * n + j] *= 1.0 + ki2 + self.grid.k[j] * self.grid.k[j];
                }
            }
            plans.inverse(&mut buf);
            let oc = &mut out[c * len..(c + 1) * len];
            if c_sum != 0.0 {
                for p in 0..len {
                    oc[p] = buf[p].re - self.q0_sq[p] * (c_diag * vc[p] + c_sum * s[p]);
                }
            } else {
                for p in 0..len {
                    oc[p] = buf[p].re - self.q0_sq[p] * c_diag * vc[p];
                }
            }
        }
    }

    /// Apply to a FieldVec (componentwise on real and imaginary parts,
    /// since the operator has a real kernel).
    pub fn apply_vec(&self, u: &FieldVec) -> Result<FieldVec> {
        if u.n_components() != self.n_comp {
            return Err(NlssError::Config(format!(
                "operator expects {} components, field has {}",
                self.n_comp,
                u.n_components()
            )));
        }
        if !u.grid().same_grid(&self.grid) {
            return Err(NlssError::Config("grid mismatch".into()));
        }
        let n = self.grid.n;
        let len = n * n;
        let (c_diag, c_sum) = self.potential_coeffs();
        let mut s = vec![Complex64::new(0.0, 0.0); len];
        if c_sum != 0.0 {
            for c in &u.components {
                for (sv, x) in s.iter_mut().zip(c.samples.iter()) {
                    *sv += x;
                }
            }
        }
        let mut components = Vec::with_capacity(self.n_comp);
        for c in &u.components {
            let mut buf = c.to_spectrum();
            for i in 0..n {
                let ki2 = self.grid.k[i] * self.grid.k[i];
                for j in 0..n {
                    buf[i * n + j] *= 1.0 + ki2 + self.grid.k[j] * self.grid.k[j];
                }
            }
            let kin = ComplexField2D::from_spectrum(self.grid.clone(), buf);
            let samples = (0..len)
                .map(|p| {
                    kin.samples[p]
                        - self.q0_sq[p] * (c.samples[p] * c_diag + s[p] * c_sum)
                })
                .collect();
            components.push(ComplexField2D {
                grid: self.grid.clone(),
                samples,
            });
        }
        FieldVec::from_components(u.indexing, components)
    }

    /// Rayleigh quotient <A v, v> / <v, v> for a packed vector.
    pub fn rayleigh(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; v.len()];
        self.apply_packed(v, &mut out);
        dot(v, &out) / dot(v, v)
    }
}

/// (theta, residual bound) for the lowest `count` Ritz values of the current
/// tridiagonal section.
fn ritz_residual_bounds(alphas: &[f64], betas: &[f64], beta_next: f64, count: usize) -> Vec<(f64, f64)> {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    order
        .into_iter()
        .take(count)
        .map(|idx| {
            let theta = eig.eigenvalues[idx];
            let b = beta_next * eig.eigenvectors[(m - 1, idx)].abs();
            (theta, b)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yv, xv) in y.iter_mut().zip(x.iter()) {
        *yv += a * xv;
    }
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt keep the basis orthonormal to
    // working precision.
    for _ in 0..2 {
        for b in basis {
            let c = dot(w, b);
            axpy(w, -c, b);
        }
    }
}

/// Lowest eigenpairs of a symmetric operator by deflated, restarted Lanczos.
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Index from which the reported pairs are approximate cluster modes
    /// (residuals recorded, vectors not converged to the strict tolerance).
    pub approximate_from: usize,
}

/// Residual tolerance policy: Ritz values below `strict_below` (the isolated
/// discrete states the reports rest on) must converge to `strict`; values
/// above it belong to the discretized continuum and may be reported as an
/// approximate tail, where eigenvalue accuracy is quadratic in the residual
/// anyway.
#[derive(Debug, Clone, Copy)]
pub struct LanczosTol {
    pub strict: f64,
    pub strict_below: f64,
}

impl LanczosTol {
    pub fn uniform(tol: f64) -> Self {
        LanczosTol {
            strict: tol,
            strict_below: f64::INFINITY,
        }
    }
}

pub fn lanczos_lowest(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    dim: usize,
    n_eigs: usize,
    tol: LanczosTol,
    constraints: &[Vec<f64>],
    seed: u64,
) -> Result<EigenPairs> {
    let max_basis = 180.min(dim);
    let max_restarts = 14;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut converged: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    // Approximate tail pairs from the last section: discretized-continuum
    // modes above `strict_below` that are reported without vector-level
    // convergence.
    let mut tail: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut start: Option<Vec<f64>> = None;

    'restarts: for _restart in 0..max_restarts {
        if converged.len() >= n_eigs {
            break;
        }
        let deflate_owned: Vec<Vec<f64>> = constraints
            .iter()
            .chain(converged.iter().map(|(_, v, _)| v))
            .cloned()
            .collect();

        let mut v0 = start.take().unwrap_or_else(|| {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>()
        });
        orthogonalize(&mut v0, &deflate_owned);
        let nv = norm(&v0);
        if nv < 1e-12 {
            v0 = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            orthogonalize(&mut v0, &deflate_owned);
        }
        let nv = norm(&v0);
        for x in v0.iter_mut() {
            *x /= nv;
        }

        let mut basis: Vec<Vec<f64>> = vec![v0];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        let needed = n_eigs - converged.len();

        for m in 0..max_basis {
            apply(&basis[m], &mut w);
            let alpha = dot(&w, &basis[m]);
            alphas.push(alpha);
            axpy(&mut w, -alpha, &basis[m]);
            if m > 0 {
                let prev = betas[m - 1];
                let pb = basis[m - 1].clone();
                axpy(&mut w, -prev, &pb);
            }
            orthogonalize(&mut w, &deflate_owned);
            orthogonalize(&mut w, &basis);
            let beta = norm(&w);
            if beta < 1e-13 || m == max_basis - 1 {
                break;
            }
            // Cheap convergence probe: the residual of a Ritz pair is bounded
            // by beta times the last component of its section eigenvector.
            if m >= 90 && m % 30 == 0 {
                let bounds = ritz_residual_bounds(&alphas, &betas, beta, needed);
                let done = bounds.iter().all(|&(theta, b)| {
                    theta >= tol.strict_below
                        || b <= 0.5 * tol.strict * theta.abs().max(1.0)
                });
                if done {
                    break;
                }
            }
            betas.push(beta);
            let mut next = w.clone();
            for x in next.iter_mut() {
                *x /= beta;
            }
            basis.push(next);
        }

        // Ritz pairs of the section.
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let mut next_start: Option<Vec<f64>> = None;
        let mut new_converged = false;
        tail.clear();
        for &idx in order.iter().take(needed + 2) {
            let theta = eig.eigenvalues[idx];
            let y = eig.eigenvectors.column(idx);
            let mut x = vec![0.0; dim];
            for (i, b) in basis.iter().enumerate() {
                axpy(&mut x, y[i], b);
            }
            orthogonalize(&mut x, &deflate_owned);
            let nx = norm(&x);
            if nx < 1e-10 {
                continue;
            }
            for v in x.iter_mut() {
                *v /= nx;
            }
            apply(&x, &mut w);
            axpy(&mut w, -theta, &x);
            let res = norm(&w);
            let scale = theta.abs().max(1.0);
            if res <= tol.strict * scale {
                converged.push((theta, x, res));
                new_converged = true;
                if converged.len() >= n_eigs {
                    break 'restarts;
                }
            } else if theta >= tol.strict_below && tail.len() < needed {
                tail.push((theta, x, res));
            } else if next_start.is_none() {
                next_start = Some(x);
            }
        }
        // Terminate only from a restart that (a) converged nothing new, so a
        // degenerate copy hidden behind the deflated set cannot still be
        // pending, and (b) has no unconverged Ritz value below the strict
        // edge. Its section is then fully deflated and the cluster tail is a
        // faithful approximation of the remaining spectrum.
        if !new_converged && next_start.is_none() && converged.len() + tail.len() >= n_eigs {
            break;
        }
        start = next_start;
    }

    let approximate_from = converged.len().min(n_eigs);
    converged.extend(tail);
    if converged.len() < n_eigs {
        return Err(NlssError::Convergence {
            context: "Lanczos eigensolver".into(),
            residual: converged.last().map(|c| c.2).unwrap_or(f64::NAN),
            iterations: max_restarts,
        });
    }
    converged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    converged.truncate(n_eigs);
    Ok(EigenPairs {
        values: converged.iter().map(|c| c.0).collect(),
        vectors: converged.iter().map(|c| c.1.clone()).collect(),
        residuals: converged.iter().map(|c| c.2).collect(),
        approximate_from,
    })
}

/// Spectral summary of one operator.
pub struct SpectralReport {
    /// Most negative eigenvalue found.
    pub lambda0: f64,
    /// Its eigenfunction, L^2-normalized, sign-fixed positive at the origin.
    pub chi0: FieldVec,
    /// All computed lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenpairs within the near-zero threshold.
    pub near_kernel: Vec<(f64, FieldVec)>,
    /// Positivity gap of the constrained quadratic form (plus-kinds), or the
    /// lowest eigenvalue above the near-zero band (minus-kinds).
    pub gap_c0: f64,
    /// (count of eigenvalues < -1e-6, count within the near-zero threshold).
    pub counts: (usize, usize),
}

/// Near-zero classification threshold: 1e-4 relative to |lambda0|.
pub fn near_zero_threshold(lambda0: f64) -> f64 {
    1e-4 * lambda0.abs().max(1e-6)
}

pub fn packed_to_fieldvec(op: &LinearOperator, v: &[f64]) -> FieldVec {
    let n = op.grid.n;
    let len = n * n;
    let components = (0..op.n_comp)
        .map(|c| ComplexField2D {
            grid: op.grid.clone(),
            samples: v[c * len..(c + 1) * len]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
        })
        .collect();
    FieldVec {
        indexing: FieldIndexing::Finite { n_comp: op.n_comp },
        components,
    }
}

pub fn fieldvec_to_packed(u: &FieldVec) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.n_components() * u.components[0].samples.len());
    for c in &u.components {
        out.extend(c.samples.iter().map(|z| z.re));
    }
    out
}

/// Lowest `n_eigs` eigenpairs with kernel classification.
pub fn spectrum_report(
    op: &LinearOperator,
    gs: &GroundState,
    n_eigs: usize,
    tol: f64,
) -> Result<SpectralReport> {
    if n_eigs < 4 {
        return Err(NlssError::Config("spectrum report needs n_eigs >= 4".into()));
    }
    let dim = op.dim();
    let mut apply = |v: &[f64], out: &mut [f64]| op.apply_packed(v, out);
    let tols = LanczosTol {
        strict: tol,
        strict_below: 0.5,
    };
    let pairs = lanczos_lowest(&mut apply, dim, n_eigs, tols, &[], 0x5eed)?;

    let lambda0 = pairs.values[0];
    let thr = near_zero_threshold(lambda0);
    let mut chi0_packed = pairs.vectors[0].clone();
    // Normalize in L^2 l^2 and fix the sign at the origin.
    let cell = op.grid.cell_area().sqrt();
    let n = op.grid.n;
    let mid = (n / 2) * n + n / 2;
    let origin = chi0_packed[mid];
    let scale = 1.0 / (norm(&chi0_packed) * cell) * origin.signum();
    for x in chi0_packed.iter_mut() {
        *x *= scale;
    }
    let chi0 = packed_to_fieldvec(op, &chi0_packed);

    let mut near_kernel = Vec::new();
    for (val, vec) in pairs.values.iter().zip(pairs.vectors.iter()) {
        if val.abs() <= thr {
            let mut v = vec.clone();
            let s = 1.0 / (norm(&v) * cell);
            for x in v.iter_mut() {
                *x *= s;
            }
            near_kernel.push((*val, packed_to_fieldvec(op, &v)));
        }
    }
    let negatives = pairs.values.iter().filter(|&&v| v < -1e-6).count();
    let near_zeros = near_kernel.len();

    let gap_c0 = match op.kind {
        OperatorKind::LPlus | OperatorKind::L0Plus => positivity_gap(op, gs)?,
        _ => pairs
            .values
            .iter()
            .cloned()
            .find(|v| *v > thr)
            .unwrap_or(f64::NAN),
    };

    Ok(SpectralReport {
        lambda0,
        chi0,
        eigenvalues: pairs.values,
        near_kernel,
        gap_c0,
        counts: (negatives, near_zeros),
    })
}

/// Directions removed before measuring the constrained positivity gap:
/// the chi0 vector and the two translation modes, orthonormalized.
pub fn gap_constraints(op: &LinearOperator, gs: &GroundState) -> Result<Vec<Vec<f64>>> {
    // chi0 of the scalar operator, replicated across components, spans the
    // negative direction of the coupled operator.
    let scalar = assemble(OperatorKind::L0Plus, 1, gs, op.grid.clone())?;
    let mut apply = |v: &[f64], out: &mut [f64]| scalar.apply_packed(v, out);
    let chi = lanczos_lowest(
        &mut apply,
        scalar.dim(),
        1,
        LanczosTol::uniform(1e-8),
        &[],
        0xc4150,
    )?;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut chi_vec = Vec::with_capacity(op.dim());
    for _ in 0..op.n_comp {
        chi_vec.extend_from_slice(&chi.vectors[0]);
    }
    dirs.push(chi_vec);
    let (qx, qy) = gs.profile_gradient();
    for d in [qx, qy] {
        let mut v = Vec::with_capacity(op.dim());
        for _ in 0..op.n_comp {
            v.extend(d.samples.iter().map(|z| z.re));
        }
        dirs.push(v);
    }
    // Orthonormalize.
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for mut d in dirs {
        orthogonalize(&mut d, &ortho);
        let nd = norm(&d);
        if nd > 1e-12 {
            for x in d.iter_mut() {
                *x /= nd;
            }
            ortho.push(d);
        }
    }
    debug_assert_eq!(ortho.len(), 3);
    Ok(ortho)
}

/// Minimal Rayleigh quotient of the plus-operator over vectors orthogonal to
/// {chi0 vector, translation modes}, by Lanczos on the projected operator.
pub fn positivity_gap(op: &LinearOperator, gs: &GroundState) -> Result<f64> {
    match op.kind {
        OperatorKind::LPlus | OperatorKind::L0Plus => {}
        _ => {
            return Err(NlssError::Config(
                "positivity gap is defined for the plus-operators".into(),
            ))
        }
    }
    let constraints = gap_constraints(op, gs)?;
    let dim = op.dim();
    let mut scratch = vec![0.0; dim];
    let mut apply = |v: &[f64], out: &mut [f64]| {
        // P A P with P the orthoprojector off the constraint span; inputs
        // arrive P-invariant because Lanczos deflates, so one outer
        // projection suffices.
        op.apply_packed(v, &mut scratch);
        out.copy_from_slice(&scratch);
        for c in &constraints {
            let d = dot(out, c);
            axpy(out, -d, c);
        }
    };
    let pairs = lanczos_lowest(
        &mut apply,
        dim,
        1,
        LanczosTol::uniform(1e-5),
        &constraints,
        0x9a9,
    )?;
    Ok(pairs.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::solve_ground_state;
    use approx::assert_relative_eq;

    struct Fixture {
        gs: GroundState,
        grid: Arc<Grid2D>,
    }

    fn fixture() -> &'static Fixture {
        use std::sync::OnceLock;
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| {
            let grid = Grid2D::new(12.0, 256).unwrap();
            let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
            Fixture { gs, grid }
        })
    }

    fn random_packed(dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn operators_are_self_adjoint() {
        let f = fixture();
        for (kind, n_comp) in [
            (OperatorKind::L0Plus, 1),
            (OperatorKind::L0Minus, 1),
            (OperatorKind::LPlus, 3),
            (OperatorKind::LMinus, 2),
        ] {
            let op = assemble(kind, n_comp, &f.gs, f.grid.clone()).unwrap();
            let dim = op.dim();
            let mut av = vec![0.0; dim];
            let mut aw = vec![0.0; dim];
            for s in 0..100 {
                let v = random_packed(dim, 100 + s);
                let w = random_packed(dim, 200 + s);
                op.apply_packed(&v, &mut av);
                op.apply_packed(&w, &mut aw);
                let lhs = dot(&av, &w);
                let rhs = dot(&v, &aw);
                let scale = norm(&av) * norm(&w) + 1.0;
                assert!((lhs - rhs).abs() < 1e-10 * scale, "{kind:?}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn scalar_minus_operator_annihilates_the_profile() {
        let f = fixture();
        let op = assemble(OperatorKind::L0Minus, 1, &f.gs, f.grid.clone()).unwrap();
        let q = f.gs.q_vector(1);
        let out = op.apply_vec(&q).unwrap();
        let rel = out.l2l2_norm_sq().sqrt() / q.l2l2_norm_sq().sqrt();
        assert!(rel < 1e-8, "relative residual {rel:.3e}");
    }

    #[test]
    fn translation_vector_is_near_kernel_of_plus() {
        let f = fixture();
        let op = assemble(OperatorKind::LPlus, 2, &f.gs, f.grid.clone()).unwrap();
        let (qx, _) = f.gs.profile_gradient();
        let v = FieldVec {
            indexing: FieldIndexing::Finite { n_comp: 2 },
            components: vec![qx.clone(), qx],
        };
        let out = op.apply_vec(&v).unwrap();
        let rel = out.l2l2_norm_sq().sqrt() / v.l2l2_norm_sq().sqrt();
        assert!(rel < 1e-6, "kernel residual {rel:.3e}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let f = fixture();
        let other = Grid2D::new(12.0, 64).unwrap();
        assert!(assemble(OperatorKind::LPlus, 2, &f.gs, other).is_err());
    }

    #[test]
    fn scalar_spectrum_structure() {
        let grid = Grid2D::new(12.0, 128).unwrap();
        let gs = solve_ground_state(grid.clone(), 1e-10).unwrap();
        let op = assemble(OperatorKind::L0Plus, 1, &gs, grid.clone()).unwrap();
        let rep = spectrum_report(&op, &gs, 5, 1e-5).unwrap();
        assert_eq!(rep.counts, (1, 2), "evs {:?}", rep.eigenvalues);
        assert!(rep.gap_c0 > 0.0);
        assert!((rep.lambda0 + 5.4122).abs() < 5e-3, "{}", rep.lambda0);
        // chi0 is L^2-normalized and positive at the origin.
        let n = grid.n;
        assert!((rep.chi0.l2l2_norm_sq() - 1.0).abs() < 1e-8);
        assert!(rep.chi0.components[0].samples[(n / 2) * n + n / 2].re > 0.0);
        // Rayleigh quotient at the translation direction sits at zero; the
        // unprojected minimum is lambda0 itself.
        let (qx, _) = gs.profile_gradient();
        let v = fieldvec_to_packed(&FieldVec {
            indexing: FieldIndexing::Finite { n_comp: 1 },
            components: vec![qx],
        });
        assert!(op.rayleigh(&v).abs() < 1e-6);
        let chi_packed = fieldvec_to_packed(&rep.chi0);
        assert!((op.rayleigh(&chi_packed) - rep.lambda0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_form_nonnegative_orthogonal_to_q() {
        // <L+ v, v> >= 0 for real v orthogonal to the Q vector.
        let f = fixture();
        let n_comp = 2;
        let op = assemble(OperatorKind::LPlus, n_comp, &f.gs, f.grid.clone()).unwrap();
        let dim = op.dim();
        let q = fieldvec_to_packed(&f.gs.q_vector(n_comp));
        let qn = norm(&q);
        let mut out = vec![0.0; dim];
        for s in 0..100 {
            let mut v = random_packed(dim, 300 + s);
            let c = dot(&v, &q) / (qn * qn);
            axpy(&mut v, -c, &q);
            op.apply_packed(&v, &mut out);
            let quad = dot(&out, &v);
            assert!(quad > -1e-9 * dot(&v, &v), "violation {quad:.3e} at seed {s}");
        }
    }
}
