//! Periodic square grid and cached 2D Fourier transforms.
//!
//! The box is [-L, L)^2 sampled on n points per direction (n a power of two),
//! so dx = 2L/n. Wavenumbers follow the convention k = pi*m/L with integer
//! mode index m in [-n/2, n/2); the k = 0 mode appears exactly once and the
//! Nyquist index -n/2 carries the negative sign.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlssError, Result};

#[derive(Debug, Clone)]
pub struct Grid2D {
    /// Half-width L of the box [-L, L)^2.
    pub half_width: f64,
    /// Points per dimension (power of two, >= 16).
    pub n: usize,
    /// Grid spacing 2L/n.
    pub dx: f64,
    /// Angular wavenumbers in FFT storage order: k[i] = pi*m_i/L.
    pub k: Vec<f64>,
    /// Physical coordinates x[i] = -L + i*dx.
    pub x: Vec<f64>,
}

impl Grid2D {
    pub fn new(half_width: f64, n: usize) -> Result<Arc<Self>> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(NlssError::Config(format!(
                "box half-width must be positive and finite, got {half_width}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(NlssError::Config(format!(
                "points per dimension must be a power of two >= 16, got {n}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        let k = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                std::f64::consts::PI * m as f64 / half_width
            })
            .collect();
        let x = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        Ok(Arc::new(Grid2D {
            half_width,
            n,
            dx,
            k,
            x,
        }))
    }

    /// Largest resolvable |k| (the Nyquist wavenumber pi*(n/2)/L).
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI * (self.n as f64 / 2.0) / self.half_width
    }

    /// Quadrature weight of one sample under the rectangle rule.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    pub fn same_grid(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

/// Cached forward/inverse FFT plans for one grid size.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform, row-major n x n buffer, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.fwd.process(data);
        transpose_square(data, self.n);
        self.fwd.process(data);
        transpose_square(data, self.n);
    }

    /// Inverse transform normalized by 1/n^2, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.inv.process(data);
        transpose_square(data, self.n);
        self.inv.process(data);
        transpose_square(data, self.n);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn transpose_square(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// Shared plan cache keyed by transform size.
pub fn plans_for(n: usize) -> Arc<Fft2> {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(Fft2::new(n))).clone()
}
