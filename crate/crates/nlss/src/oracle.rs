//! Independent radial oracles.
//!
//! Two reference computations that never touch the 2D spectral path:
//!
//! * the positive decaying solution of q'' + q'/r - q + q^3 = 0 by adaptive
//!   shooting (bisection on the on-axis amplitude, RK4 in radius), giving the
//!   reference squared L^2 mass;
//! * the lowest eigenvalue of the radial reduction of -Lap + 1 - c*q^2 by a
//!   dense symmetric finite-difference discretization (Sturm bisection on the
//!   tridiagonal), giving the reference negative eigenvalue for c = 3.
//!
//! The acceptance suite compares the pseudospectral results against these.

use std::f64::consts::PI;

/// Solution profile of the radial shooting integration.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub dr: f64,
    /// q sampled at r = 0, dr, 2dr, ...
    pub q: Vec<f64>,
    /// Shooting amplitude q(0).
    pub amplitude: f64,
    /// 2*pi * int q^2 r dr including the analytic exponential tail.
    pub mass_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShotOutcome {
    /// q crossed zero: amplitude too large.
    Crossed,
    /// q' turned positive while q > 0: amplitude too small.
    TurnedUp,
    /// stayed positive and decreasing out to r_max.
    Undecided,
}

fn integrate(a: f64, dr: f64, r_max: f64) -> (Vec<f64>, ShotOutcome) {
    let steps = (r_max / dr).round() as usize;
    let mut q = Vec::with_capacity(steps + 1);
    q.push(a);
    // Start one step off axis with the Taylor expansion; the q'/r term is
    // regular there because q'(0) = 0.
    let c2 = (a - a * a * a) / 4.0;
    let mut r = dr;
    let mut y = a + c2 * dr * dr;
    let mut p = 2.0 * c2 * dr;
    q.push(y);
    let rhs = |r: f64, y: f64, p: f64| -> (f64, f64) { (p, -p / r + y - y * y * y) };
    let mut outcome = ShotOutcome::Undecided;
    for _ in 1..steps {
        let (k1y, k1p) = rhs(r, y, p);
        let (k2y, k2p) = rhs(r + dr / 2.0, y + dr / 2.0 * k1y, p + dr / 2.0 * k1p);
        let (k3y, k3p) = rhs(r + dr / 2.0, y + dr / 2.0 * k2y, p + dr / 2.0 * k2p);
        let (k4y, k4p) = rhs(r + dr, y + dr * k3y, p + dr * k3p);
        y += dr / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        r += dr;
        q.push(y);
        if y <= 0.0 {
            outcome = ShotOutcome::Crossed;
            break;
        }
        if p > 0.0 {
            outcome = ShotOutcome::TurnedUp;
            break;
        }
    }
    (q, outcome)
}

/// Shoot for the decaying positive profile. `dr` around 1e-3 and `r_max`
/// around 15 give the mass to well below 1e-6 relative.
pub fn shoot_ground_state(dr: f64, r_max: f64) -> RadialProfile {
    let mut lo = 2.0; // turns up
    let mut hi = 2.4; // crosses zero
    debug_assert_eq!(integrate(lo, dr, r_max).1, ShotOutcome::TurnedUp);
    debug_assert_eq!(integrate(hi, dr, r_max).1, ShotOutcome::Crossed);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match integrate(mid, dr, r_max).1 {
            ShotOutcome::Crossed => hi = mid,
            _ => lo = mid,
        }
    }
    let a = 0.5 * (lo + hi);
    let (mut q, _) = integrate(a, dr, r_max);

    // Truncate where the unstable mode takes over, then attach the analytic
    // e^{-r}/sqrt(r) tail for the mass integral.
    let mut cut = q.len() - 1;
    for i in 1..q.len() {
        if q[i] <= 0.0 || q[i] > q[i - 1] {
            cut = i - 1;
            break;
        }
    }
    q.truncate(cut + 1);
    let mass_sq = radial_mass_sq(&q, dr);
    RadialProfile {
        dr,
        q,
        amplitude: a,
        mass_sq,
    }
}

/// 2*pi int q^2 r dr over the stored samples plus the exponential tail.
fn radial_mass_sq(q: &[f64], dr: f64) -> f64 {
    // Composite Simpson over an even number of intervals; drop the last
    // sample if needed (integrand there is ~e^{-2r}, negligible).
    let m = if (q.len() - 1) % 2 == 0 {
        q.len() - 1
    } else {
        q.len() - 2
    };
    let f = |i: usize| {
        let r = i as f64 * dr;
        q[i] * q[i] * r
    };
    let mut acc = f(0) + f(m);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) };
    }
    let body = acc * dr / 3.0;
    // Tail: q(r) ~ q(rc) sqrt(rc/r) e^{-(r-rc)} gives int_rc^inf q^2 r dr
    // = q(rc)^2 rc / 2.
    let rc = m as f64 * dr;
    let tail = q[m] * q[m] * rc / 2.0;
    2.0 * PI * (body + tail)
}

impl RadialProfile {
    /// Cubic interpolation of the profile at arbitrary radius.
    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 {
            return self.eval(-r);
        }
        let t = r / self.dr;
        let n = self.q.len();
        if t >= (n - 1) as f64 {
            // Exponential continuation from the last two samples.
            let q_end = self.q[n - 1];
            if q_end <= 0.0 {
                return 0.0;
            }
            let r_end = (n - 1) as f64 * self.dr;
            return q_end * (r_end / r).sqrt() * (-(r - r_end)).exp();
        }
        let i1 = (t.floor() as usize).clamp(1, n - 3);
        let frac = t - i1 as f64;
        // 4-point Lagrange on nodes i1-1 .. i1+2, position frac in [0, 1).
        let p = frac + 1.0;
        let mut out = 0.0;
        for (s, &qi) in self.q[i1 - 1..=i1 + 2].iter().enumerate() {
            let mut w = 1.0;
            for j in 0..4 {
                if j != s {
                    w *= (p - j as f64) / (s as f64 - j as f64);
                }
            }
            out += w * qi;
        }
        out
    }

    /// Radial kinetic and quartic integrals, for Pohozaev-style self-checks:
    /// (|grad q|^2, |q|^4_{L^4}) as full 2D quantities.
    pub fn pohozaev_integrals(&self) -> (f64, f64) {
        let dr = self.dr;
        let n = self.q.len();
        let dq = |i: usize| -> f64 {
            if i == 0 {
                0.0
            } else if i + 1 < n {
                (self.q[i + 1] - self.q[i - 1]) / (2.0 * dr)
            } else {
                (self.q[i] - self.q[i - 1]) / dr
            }
        };
        let mut kin = 0.0;
        let mut quart = 0.0;
        for i in 0..n {
            let r = i as f64 * dr;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let d = dq(i);
            kin += w * d * d * r * dr;
            quart += w * self.q[i].powi(4) * r * dr;
        }
        (2.0 * PI * kin, 2.0 * PI * quart)
    }
}

// ---------------------------------------------------------------------------
// Radial eigensolver for -Lap + 1 - c q^2 restricted to radial functions.
// ---------------------------------------------------------------------------

/// Symmetric tridiagonal matrix (diag, offdiag).
struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

/// Cell-centered conservative discretization of -(1/r)(r f')' + V(r) f on
/// (0, r_max] with a natural no-flux condition at the axis and Dirichlet at
/// r_max, symmetrized by the sqrt(r) similarity transform.
fn radial_operator(profile: &RadialProfile, coupling: f64, n_r: usize, r_max: f64) -> Tridiag {
    let h = r_max / n_r as f64;
    let r = |i: usize| (i as f64 + 0.5) * h;
    let mut diag = Vec::with_capacity(n_r);
    let mut off = Vec::with_capacity(n_r - 1);
    for i in 0..n_r {
        let r_minus = i as f64 * h;
        let r_plus = (i + 1) as f64 * h;
        let q = profile.eval(r(i));
        let v = 1.0 - coupling * q * q;
        diag.push((r_plus + r_minus) / (r(i) * h * h) + v);
        if i + 1 < n_r {
            off.push(-r_plus / (h * h * (r(i) * r(i + 1)).sqrt()));
        }
    }
    Tridiag { diag, off }
}

/// Number of eigenvalues strictly below lambda (Sturm sequence count).
fn sturm_count(t: &Tridiag, lambda: f64) -> usize {
    let mut count = 0;
    let mut d = t.diag[0] - lambda;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..t.diag.len() {
        let e = t.off[i - 1];
        let mut denom = d;
        if denom.abs() < 1e-300 {
            denom = 1e-300_f64.copysign(if denom == 0.0 { 1.0 } else { denom });
        }
        d = (t.diag[i] - lambda) - e * e / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn kth_smallest_eigenvalue(t: &Tridiag, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(sturm_count(t, lo) < k + 1);
    debug_assert!(sturm_count(t, hi) >= k + 1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(t, mid) >= k + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest eigenvalue of the radial reduction of -Lap + 1 - coupling * q^2.
/// `coupling` = 3 gives the scalar plus-operator, 1 the minus-operator.
pub fn radial_lowest_eigenvalue(
    profile: &RadialProfile,
    coupling: f64,
    n_r: usize,
    r_max: f64,
) -> f64 {
    let t = radial_operator(profile, coupling, n_r, r_max);
    // The potential is bounded below by 1 - coupling*max(q)^2.
    let vmin = 1.0 - coupling * profile.amplitude * profile.amplitude - 1.0;
    kth_smallest_eigenvalue(&t, 0, vmin, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shooting_amplitude_and_mass_are_in_range() {
        let p = shoot_ground_state(2e-3, 15.0);
        assert!(p.amplitude > 2.1 && p.amplitude < 2.3, "{}", p.amplitude);
        assert!(p.mass_sq > 11.5 && p.mass_sq < 11.9, "{}", p.mass_sq);
    }

    #[test]
    fn shooting_satisfies_pohozaev() {
        let p = shoot_ground_state(1e-3, 15.0);
        let (kin, quart) = p.pohozaev_integrals();
        assert_relative_eq!(kin, p.mass_sq, max_relative = 1e-5);
        assert_relative_eq!(quart, 2.0 * kin, max_relative = 1e-5);
    }

    #[test]
    fn mass_converges_under_step_halving() {
        let a = shoot_ground_state(2e-3, 15.0).mass_sq;
        let b = shoot_ground_state(1e-3, 15.0).mass_sq;
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }

    #[test]
    fn minus_operator_has_near_zero_bottom() {
        // -Lap + 1 - q^2 annihilates q itself; the discrete bottom eigenvalue
        // must sit near zero from either side.
        let p = shoot_ground_state(1e-3, 15.0);
        let l = radial_lowest_eigenvalue(&p, 1.0, 2000, 15.0);
        assert!(l.abs() < 5e-4, "bottom of the minus operator: {l}");
    }

    #[test]
    fn plus_operator_eigenvalue_converges() {
        let p = shoot_ground_state(1e-3, 15.0);
        let a = radial_lowest_eigenvalue(&p, 3.0, 1000, 15.0);
        let b = radial_lowest_eigenvalue(&p, 3.0, 2000, 15.0);
        assert!(a < -1.0 && a > -6.0, "{a}");
        assert_relative_eq!(a, b, max_relative = 2e-4);
    }
}
