//! Fixed smooth radial cutoff shared by the frequency projectors and the
//! Morawetz weight.
//!
//! The profile is 1 on r <= 1, 0 on r >= 2, and drops on 1 < r < 2 through the
//! degree-7 smoothstep polynomial. The taper is C^3 and reproducible
//! bit-for-bit, which is what every consumer here needs; nothing downstream
//! requires more smoothness than that.

/// Degree-7 smoothstep on [0, 1]: 0 -> 0, 1 -> 1 with three vanishing
/// derivatives at both ends.
pub fn smoothstep7(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x2 = x * x;
        let x4 = x2 * x2;
        x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
    }
}

/// Radial plateau cutoff: 1 for r <= 1, 0 for r >= 2, smoothstep taper between.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        1.0 - smoothstep7(r - 1.0)
    }
}

// Polynomial helpers on coefficient vectors (index = power). Only used to
// integrate the taper exactly; sizes are tiny.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_integrate(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (i, &ai) in a.iter().enumerate() {
        out[i + 1] = ai / (i + 1) as f64;
    }
    out
}

fn poly_eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Antiderivative of bump(1 + w)^2 on w in [0, 1], as exact polynomial
/// coefficients. bump(1 + w) = 1 - S7(w), so the integrand is (1 - S7)^2.
fn taper_sq_antiderivative() -> Vec<f64> {
    // S7 coefficients: 35 w^4 - 84 w^5 + 70 w^6 - 20 w^7.
    let s7 = vec![0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];
    let one_minus: Vec<f64> = {
        let mut v = s7.iter().map(|c| -c).collect::<Vec<_>>();
        v[0] += 1.0;
        v
    };
    poly_integrate(&poly_mul(&one_minus, &one_minus))
}

/// Integral of bump(v)^2 over [1, min(u, 2)] for u >= 1, evaluated exactly.
pub fn bump_sq_integral_from_one(u: f64) -> f64 {
    use std::sync::OnceLock;
    static ANTI: OnceLock<Vec<f64>> = OnceLock::new();
    let anti = ANTI.get_or_init(taper_sq_antiderivative);
    let w = (u - 1.0).clamp(0.0, 1.0);
    poly_eval(anti, w)
}

/// Morawetz weight phi(r) = int_0^r bump(eta1 * s / (2R))^2 ds, evaluated by
/// analytic integration of the polynomial taper.
pub fn morawetz_phi(r: f64, radius: f64, eta1: f64) -> f64 {
    let c = eta1 / (2.0 * radius);
    let u = c * r;
    if u <= 1.0 {
        r
    } else {
        (1.0 + bump_sq_integral_from_one(u)) / c
    }
}

/// Maximum of the Morawetz weight, attained once the taper has closed.
pub fn morawetz_phi_max(radius: f64, eta1: f64) -> f64 {
    morawetz_phi(4.0 * radius / eta1, radius, eta1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_plateau_and_support() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        assert_eq!(bump(5.0), 0.0);
        let mid = bump(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // Monotone on the taper.
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = bump(1.0 + i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn taper_integral_matches_quadrature() {
        // Analytic antiderivative against fine Simpson quadrature.
        let m = 4096;
        let h = 1.0 / m as f64;
        let f = |v: f64| bump(v) * bump(v);
        let mut acc = f(1.0) + f(2.0);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(1.0 + i as f64 * h);
        }
        let simpson = acc * h / 3.0;
        assert!((bump_sq_integral_from_one(2.0) - simpson).abs() < 1e-12);
    }

    #[test]
    fn phi_is_identity_inside_plateau() {
        let (radius, eta1) = (3.0, 0.5);
        // Plateau extends to r = 2R/eta1 = 12.
        assert_eq!(morawetz_phi(5.0, radius, eta1), 5.0);
        let cap = morawetz_phi_max(radius, eta1);
        assert!(cap > 12.0 && cap < 24.0);
        assert_eq!(morawetz_phi(100.0, radius, eta1), cap);
    }
}
