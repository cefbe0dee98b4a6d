//! The coupled cubic nonlinearity, in closed form and as an explicit sum over
//! resonant index triples.
//!
//! For component j the nonlinearity is F_j(u) = sum over (j1,j2,j3) with
//! j1 - j2 + j3 = j and j1^2 - j2^2 + j3^2 = j^2 of u_{j1} conj(u_{j2}) u_{j3},
//! which collapses to 2 sum_k |u_k|^2 u_j - |u_j|^2 u_j. Triples with any
//! index outside the component range are dropped (sharp truncation), which
//! keeps the closed form and the triple sum identical on truncated data.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{NlssError, Result};
use crate::field::{ComplexField2D, FieldIndexing, FieldVec};

/// Explicit resonance set for one center index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResonanceSet {
    pub center: i32,
    pub triples: Vec<(i32, i32, i32)>,
}

/// All triples in [-jmax, jmax]^3 resolving the center j. Both constraints
/// force j1 = j, j2 = j3 or j2 = j3 = ... the two families (j,k,k) and
/// (k,k,j); the overlap (j,j,j) is listed once.
pub fn resonance_set(j: i32, jmax: i32) -> Result<ResonanceSet> {
    if j.abs() > jmax {
        return Err(NlssError::Domain(format!(
            "center index {j} outside [-{jmax}, {jmax}]"
        )));
    }
    let mut triples = Vec::with_capacity(4 * jmax as usize + 1);
    for k in -jmax..=jmax {
        triples.push((j, k, k));
    }
    for k in -jmax..=jmax {
        if k != j {
            triples.push((k, k, j));
        }
    }
    triples.sort_unstable();
    Ok(ResonanceSet { center: j, triples })
}

/// Pointwise closed-form evaluation: F_j = 2 sum_k |u_k|^2 u_j - |u_j|^2 u_j.
/// Applies in both indexing modes; in resonant mode the k-sum runs over the
/// stored band, matching the sharp triple truncation. With `dealias` set, the
/// 2/3-rule spectral truncation is applied to the result.
pub fn apply_nonlinearity(u: &FieldVec, dealias: bool) -> FieldVec {
    let grid = u.grid();
    let len = grid.n * grid.n;
    // Total density 2 sum_k |u_k|^2 at every point.
    let mut density = vec![0.0f64; len];
    for c in &u.components {
        for (d, z) in density.iter_mut().zip(c.samples.iter()) {
            *d += z.norm_sqr();
        }
    }
    let components: Vec<ComplexField2D> = u
        .components
        .par_iter()
        .map(|c| {
            let samples = c
                .samples
                .iter()
                .zip(density.iter())
                .map(|(z, d)| z * (2.0 * d - z.norm_sqr()))
                .collect();
            let out = ComplexField2D {
                grid: c.grid.clone(),
                samples,
            };
            if dealias {
                dealias_two_thirds(&out)
            } else {
                out
            }
        })
        .collect();
    FieldVec {
        indexing: u.indexing,
        components,
    }
}

/// Literal resonance-sum evaluation over the enumerated triples. Quadratic in
/// the component count; used to certify the closed form.
pub fn apply_nonlinearity_resonance_sum(u: &FieldVec) -> Result<FieldVec> {
    let jmax = match u.indexing {
        FieldIndexing::Resonant { jmax } => jmax,
        FieldIndexing::Finite { .. } => {
            return Err(NlssError::Mode(
                "resonance-sum evaluation requires resonant indexing".into(),
            ))
        }
    };
    let grid = u.grid();
    let len = grid.n * grid.n;
    let mut components = Vec::with_capacity(u.n_components());
    for slot in 0..u.n_components() {
        let j = u.indexing.label(slot);
        let set = resonance_set(j, jmax)?;
        let mut samples = vec![Complex64::new(0.0, 0.0); len];
        for &(j1, j2, j3) in &set.triples {
            let a = &u.components[u.indexing.slot(j1).unwrap()].samples;
            let b = &u.components[u.indexing.slot(j2).unwrap()].samples;
            let c = &u.components[u.indexing.slot(j3).unwrap()].samples;
            for p in 0..len {
                samples[p] += a[p] * b[p].conj() * c[p];
            }
        }
        components.push(ComplexField2D {
            grid: grid.clone(),
            samples,
        });
    }
    FieldVec::from_components(u.indexing, components)
}

/// 2/3-rule spectral truncation.
pub fn dealias_two_thirds(f: &ComplexField2D) -> ComplexField2D {
    let cut = 2.0 / 3.0 * f.grid.k_max();
    f.apply_radial_multiplier(|k| if k <= cut { 1.0 } else { 0.0 })
}

/// The interaction density sum_j F_j(u) conj(u_j), integrated: the quartic
/// term of the energy and the numerator of the Weinstein quotient.
pub fn interaction_integral(u: &FieldVec) -> f64 {
    let grid = u.grid();
    let len = grid.n * grid.n;
    let mut acc = 0.0;
    // sum_j F_j conj(u_j) = 2 (sum|u|^2)^2 - sum |u_j|^4 pointwise.
    for p in 0..len {
        let mut total = 0.0;
        let mut fourth = 0.0;
        for c in &u.components {
            let m = c.samples[p].norm_sqr();
            total += m;
            fourth += m * m;
        }
        acc += 2.0 * total * total - fourth;
    }
    acc * grid.cell_area()
}

/// Used by the dealiasing policy of the dynamics module.
pub fn dealias_fieldvec(u: &FieldVec) -> FieldVec {
    let components = u.components.iter().map(dealias_two_thirds).collect();
    FieldVec {
        indexing: u.indexing,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_localized;
    use crate::grid::Grid2D;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force enumeration of the resonance constraints over the full box.
    fn brute_force_set(j: i32, jmax: i32) -> Vec<(i32, i32, i32)> {
        let mut out = Vec::new();
        for j1 in -jmax..=jmax {
            for j2 in -jmax..=jmax {
                for j3 in -jmax..=jmax {
                    if j1 - j2 + j3 == j && j1 * j1 - j2 * j2 + j3 * j3 == j * j {
                        out.push((j1, j2, j3));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn random_vec(jmax: i32, seed: u64) -> FieldVec {
        let g = Grid2D::new(8.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..(2 * jmax + 1))
            .map(|_| random_localized(g.clone(), &mut rng, 1.5, 2.0, 1.0))
            .collect();
        FieldVec::from_components(FieldIndexing::Resonant { jmax }, comps).unwrap()
    }

    #[test]
    fn resonance_sets_match_brute_force_listings() {
        // j = 0, jmax = 1: {(0,0,0), (0,-1,-1), (0,1,1), (-1,-1,0), (1,1,0)}
        let s = resonance_set(0, 1).unwrap();
        let mut expect = vec![(0, 0, 0), (0, -1, -1), (0, 1, 1), (-1, -1, 0), (1, 1, 0)];
        expect.sort_unstable();
        assert_eq!(s.triples, expect);
        assert_eq!(s.triples, brute_force_set(0, 1));

        // j = 1, jmax = 1: {(1,1,1), (1,0,0), (1,-1,-1), (0,0,1), (-1,-1,1)}
        let s = resonance_set(1, 1).unwrap();
        let mut expect = vec![(1, 1, 1), (1, 0, 0), (1, -1, -1), (0, 0, 1), (-1, -1, 1)];
        expect.sort_unstable();
        assert_eq!(s.triples, expect);
        assert_eq!(s.triples, brute_force_set(1, 1));

        // j = 0, jmax = 0: only the trivial triple.
        assert_eq!(resonance_set(0, 0).unwrap().triples, vec![(0, 0, 0)]);
    }

    #[test]
    fn resonance_sets_match_brute_force_up_to_jmax_six() {
        for jmax in 0..=6 {
            for j in -jmax..=jmax {
                let s = resonance_set(j, jmax).unwrap();
                assert_eq!(s.triples, brute_force_set(j, jmax), "j={j} jmax={jmax}");
                // No duplicates.
                let mut dedup = s.triples.clone();
                dedup.dedup();
                assert_eq!(dedup.len(), s.triples.len());
            }
        }
    }

    #[test]
    fn out_of_band_center_is_a_domain_error() {
        assert!(resonance_set(3, 2).is_err());
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let u = FieldVec::zero(g, FieldIndexing::Finite { n_comp: 3 });
        let f = apply_nonlinearity(&u, false);
        assert_eq!(f.l2l2_norm_sq(), 0.0);
    }

    #[test]
    fn single_component_reduces_to_focusing_cubic() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_localized(g.clone(), &mut rng, 1.5, 2.0, 1.0);
        let u = FieldVec::from_components(
            FieldIndexing::Finite { n_comp: 1 },
            vec![f.clone()],
        )
        .unwrap();
        let out = apply_nonlinearity(&u, false);
        for (o, z) in out.components[0].samples.iter().zip(f.samples.iter()) {
            let expect = z * z.norm_sqr();
            assert!((o - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn resonance_sum_equals_closed_form() {
        let u = random_vec(3, 9);
        let sum = apply_nonlinearity_resonance_sum(&u).unwrap();
        let closed = apply_nonlinearity(&u, false);
        for (a, b) in sum.components.iter().zip(closed.components.iter()) {
            for (x, y) in a.samples.iter().zip(b.samples.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn per_component_phase_covariance() {
        let u = random_vec(2, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let phases: Vec<f64> = (0..u.n_components())
            .map(|_| rand::Rng::gen_range(&mut rng, 0.0..std::f64::consts::TAU))
            .collect();
        let mut v = u.clone();
        for (c, &g) in v.components.iter_mut().zip(phases.iter()) {
            let ph = Complex64::from_polar(1.0, g);
            for z in c.samples.iter_mut() {
                *z *= ph;
            }
        }
        let fu = apply_nonlinearity(&u, false);
        let fv = apply_nonlinearity(&v, false);
        for ((a, b), &g) in fv.components.iter().zip(fu.components.iter()).zip(phases.iter()) {
            let ph = Complex64::from_polar(1.0, g);
            for (x, y) in a.samples.iter().zip(b.samples.iter()) {
                assert!((x - y * ph).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_flux_compatibility_is_pointwise() {
        // sum_j Im(conj(u_j) F_j) = 0 at every sample.
        let u = random_vec(3, 23);
        let f = apply_nonlinearity(&u, false);
        let len = u.grid().n * u.grid().n;
        for p in 0..len {
            let s: f64 = u
                .components
                .iter()
                .zip(f.components.iter())
                .map(|(uc, fc)| (uc.samples[p].conj() * fc.samples[p]).im)
                .sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_integral_matches_pairing() {
        let u = random_vec(2, 31);
        let f = apply_nonlinearity(&u, false);
        let direct: f64 = u
            .components
            .iter()
            .zip(f.components.iter())
            .map(|(uc, fc)| fc.inner(uc).re)
            .sum();
        let fast = interaction_integral(&u);
        assert!((direct - fast).abs() < 1e-10 * fast.abs().max(1.0));
    }
}
