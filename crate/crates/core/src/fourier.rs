//! Periodic trigonometric interpolation helpers.
//!
//! Coefficients follow the convention `c_k = (1/N) Σ_j f_j e^{-i k t_j}` with
//! `t_j = 2πj/N`, so the interpolant is `f(t) = Σ_k c_k e^{ikt}`. For even `N`
//! the Nyquist mode is split symmetrically into a cosine so that real data
//! gives a real interpolant.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT of complex samples, normalized by `1/N`.
pub fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Forward DFT of real samples, normalized by `1/N`.
pub fn dft_real(samples: &[f64]) -> Vec<Complex64> {
    let buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft(&buf)
}

/// Signed frequency of DFT bin `j` for a transform of length `n`.
#[inline]
pub fn frequency(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Trigonometric interpolant of a complex-valued periodic function on `[0, 2π)`.
///
/// Stores positive and negative modes separately so evaluation with
/// derivatives costs one pass over the modes.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    c0: Complex64,
    /// `pos[k-1]` is the coefficient of `e^{ikt}`, k = 1..=K
    pos: Vec<Complex64>,
    /// `neg[k-1]` is the coefficient of `e^{-ikt}`, k = 1..=K
    neg: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn from_samples(samples: &[Complex64]) -> Self {
        let n = samples.len();
        assert!(n >= 3, "need at least three samples");
        let coeffs = dft(samples);
        let kmax = n / 2;
        let mut pos = vec![Complex64::new(0.0, 0.0); kmax];
        let mut neg = vec![Complex64::new(0.0, 0.0); kmax];
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            let k = frequency(j, n);
            if n.is_multiple_of(2) && j == n / 2 {
                // Nyquist mode split into cos(Kt)
                pos[kmax - 1] += 0.5 * c;
                neg[kmax - 1] += 0.5 * c;
            } else if k > 0 {
                pos[k as usize - 1] = c;
            } else {
                neg[(-k) as usize - 1] = c;
            }
        }
        Self { c0: coeffs[0], pos, neg }
    }

    pub fn modes(&self) -> usize {
        self.pos.len()
    }

    /// Value and first two derivatives at `t`.
    pub fn eval2(&self, t: f64) -> [Complex64; 3] {
        let e = Complex64::from_polar(1.0, t);
        let mut ek = Complex64::new(1.0, 0.0);
        let mut val = self.c0;
        let mut d1 = Complex64::new(0.0, 0.0);
        let mut d2 = Complex64::new(0.0, 0.0);
        for (k0, (&cp, &cn)) in self.pos.iter().zip(&self.neg).enumerate() {
            ek *= e;
            let k = (k0 + 1) as f64;
            let ekc = ek.conj();
            let a = cp * ek;
            let b = cn * ekc;
            val += a + b;
            d1 += Complex64::new(0.0, k) * (a - b);
            d2 -= k * k * (a + b);
        }
        [val, d1, d2]
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.eval2(t)[0]
    }
}
