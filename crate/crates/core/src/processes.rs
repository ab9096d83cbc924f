//! Seeded samplers: normalized Poisson, interpolated Brownian motion, the
//! Donsker walk, series Brownian motion, and fractional Brownian motion
//! through the Volterra kernel.
//!
//! Every sampler is a pure function of (parameters, seed); the generator is
//! ChaCha12 (`rand_chacha` 0.3), which supports per-sample streams for
//! partition-independent parallel Monte Carlo.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fractional::gauss_2f1;
use crate::grid::Grid;
use crate::hilbert::{EmbeddedVector, Embedding};
use crate::quad::GaussRule;
use crate::special::gamma;

/// Name and version of the pinned generator, echoed into output metadata.
pub const GENERATOR_ID: &str = "chacha12/rand_chacha-0.3";

/// A pure-jump path: jump times and sizes plus a linear drift coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    drift: f64,
}

impl StepPath {
    pub fn new(jump_times: Vec<f64>, jump_sizes: Vec<f64>, drift: f64) -> Result<StepPath> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} jump times vs {} sizes",
                jump_times.len(),
                jump_sizes.len()
            )));
        }
        if jump_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPartition("jump times must be sorted".into()));
        }
        if jump_sizes.iter().any(|s| !s.is_finite()) || !drift.is_finite() {
            return Err(Error::ShapeMismatch("non-finite jump size or drift".into()));
        }
        Ok(StepPath {
            jump_times,
            jump_sizes,
            drift,
        })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Path value at t.
    pub fn value(&self, t: f64) -> f64 {
        let jumps: f64 = self
            .jump_times
            .iter()
            .zip(&self.jump_sizes)
            .take_while(|(&ti, _)| ti <= t)
            .map(|(_, &s)| s)
            .sum();
        jumps + self.drift * t
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "jump_time,jump_size")?;
        for (t, s) in self.jump_times.iter().zip(&self.jump_sizes) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

/// A continuous piecewise-linear path on the uniform m-partition of `[0, 1]`,
/// stored by its node values (`node_values[0]` = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    node_values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(node_values: Vec<f64>) -> Result<PiecewiseLinearPath> {
        if node_values.len() < 2 {
            return Err(Error::InvalidPartition(
                "need at least two node values".into(),
            ));
        }
        if node_values[0] != 0.0 {
            return Err(Error::InvalidPartition(format!(
                "first node value must be 0, got {}",
                node_values[0]
            )));
        }
        if node_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPartition("non-finite node value".into()));
        }
        Ok(PiecewiseLinearPath { node_values })
    }

    pub fn intervals(&self) -> usize {
        self.node_values.len() - 1
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    /// Per-interval slopes `(v[j+1] - v[j]) * m`.
    pub fn slopes(&self) -> Vec<f64> {
        let m = self.intervals() as f64;
        self.node_values
            .windows(2)
            .map(|w| (w[1] - w[0]) * m)
            .collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        let m = self.intervals();
        let x = (t.clamp(0.0, 1.0) * m as f64).min(m as f64 - 1e-12);
        let j = x.floor() as usize;
        let frac = x - j as f64;
        self.node_values[j] + frac * (self.node_values[j + 1] - self.node_values[j])
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node,value")?;
        let m = self.intervals();
        for (j, v) in self.node_values.iter().enumerate() {
            writeln!(w, "{},{}", j as f64 / m as f64, v)?;
        }
        Ok(())
    }
}

/// A fractional Brownian path sampled on a grid.
#[derive(Debug, Clone)]
pub struct FbmPath {
    pub hurst: f64,
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl FbmPath {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Homogeneous Poisson arrivals on `[0, 1]` by inversion of exponential gaps,
/// returned in the normalized form: jump sizes 1/sqrt(lambda), drift
/// -sqrt(lambda), so the path is lambda^{-1/2} (N(t) - lambda t).
pub fn sample_poisson(lambda: f64, seed: u64) -> Result<StepPath> {
    if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::NonPositive {
            name: "lambda",
            value: lambda,
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_poisson_with_rng(lambda, &mut rng)
}

pub fn sample_poisson_with_rng(lambda: f64, rng: &mut ChaCha12Rng) -> Result<StepPath> {
    let mut times = Vec::new();
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.gen::<f64>();
        // guard the log against a zero draw
        t += -(u.max(f64::MIN_POSITIVE)).ln() / lambda;
        if t > 1.0 {
            break;
        }
        times.push(t);
    }
    let n = times.len();
    StepPath::new(times, vec![lambda.powf(-0.5); n], -lambda.sqrt())
}

/// Linear interpolation of a Brownian motion on m intervals: node increments
/// i.i.d. N(0, 1/m).
pub fn sample_interp_bm(m: usize, seed: u64) -> Result<PiecewiseLinearPath> {
    if m < 1 {
        return Err(Error::domain("m", m as f64, "m >= 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_interp_bm_with_rng(m, &mut rng)
}

pub fn sample_interp_bm_with_rng(m: usize, rng: &mut ChaCha12Rng) -> Result<PiecewiseLinearPath> {
    let scale = (m as f64).powf(-0.5);
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = StandardNormal.sample(rng);
        acc += scale * z;
        values.push(acc);
    }
    PiecewiseLinearPath::new(values)
}

/// Donsker walk: node increments i.i.d. +-1/sqrt(m) with probability 1/2.
pub fn sample_donsker(m: usize, seed: u64) -> Result<PiecewiseLinearPath> {
    if m < 1 {
        return Err(Error::domain("m", m as f64, "m >= 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_donsker_with_rng(m, &mut rng)
}

pub fn sample_donsker_with_rng(m: usize, rng: &mut ChaCha12Rng) -> Result<PiecewiseLinearPath> {
    let scale = (m as f64).powf(-0.5);
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for _ in 0..m {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        acc += scale * sign;
        values.push(acc);
    }
    PiecewiseLinearPath::new(values)
}

/// Series construction of Brownian motion: B(t) = sum_n X_n I^1_{0+}(e_n)(t)
/// truncated at the embedding's n_max, returned with its exact embedding
/// (coefficients <h_k, e_n> X_n, the same law as `gaussian_sampler` targets).
pub fn sample_bm_series(
    embedding: &Embedding,
    seed: u64,
) -> Result<(PiecewiseLinearPath, EmbeddedVector)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_bm_series_with_rng(embedding, &mut rng)
}

pub fn sample_bm_series_with_rng(
    embedding: &Embedding,
    rng: &mut ChaCha12Rng,
) -> Result<(PiecewiseLinearPath, EmbeddedVector)> {
    let n_max = embedding.n_max();
    let xs: Vec<f64> = (0..n_max).map(|_| StandardNormal.sample(rng)).collect();
    let grid = embedding.grid();

    // path: X_1 t + sum_{n>=2} X_n sqrt(2) sin((n-1) pi t) / ((n-1) pi)
    let mut values: Vec<f64> = grid.nodes().map(|t| xs[0] * t).collect();
    let spec = embedding.basis().spec();
    for (n, &x) in xs.iter().enumerate().skip(1) {
        let om = spec.omega(n + 1);
        for (i, t) in grid.nodes().enumerate() {
            values[i] += x * std::f64::consts::SQRT_2 * (om * t).sin() / om;
        }
    }
    values[0] = 0.0;
    let path = PiecewiseLinearPath::new(values)?;

    // exact embedding: coeffs[k] = sum_n <h_k, e_n> X_n
    let proj = embedding.series_projection()?;
    let xv = nalgebra::DVector::from_vec(xs);
    let coeffs = proj.as_ref() * xv;
    Ok((
        path,
        EmbeddedVector {
            beta: embedding.beta(),
            coeffs: coeffs.iter().copied().collect(),
        },
    ))
}

/// The Volterra kernel K_H(t, r) expressing fractional Brownian motion as an
/// integral against Brownian motion; requires 0 < r < t <= 1.
pub fn kernel_kh(t: f64, r: f64, hurst: f64) -> Result<f64> {
    if hurst.is_nan() || hurst <= 0.0 || hurst >= 1.0 {
        return Err(Error::domain("hurst", hurst, "0 < H < 1"));
    }
    if r.is_nan() || t.is_nan() || r <= 0.0 || r >= t || t > 1.0 {
        return Err(Error::domain("r", r, "0 < r < t <= 1"));
    }
    let f = gauss_2f1(0.5 - hurst, hurst - 0.5, hurst + 0.5, 1.0 - t / r)?;
    Ok((t - r).powf(hurst - 0.5) / gamma(hurst + 0.5) * f)
}

/// Precomputed per-panel root-mean-square kernel weights: Var(B^H(t_i)) of
/// the sampler equals the quadrature value of int_0^{t_i} K_H^2 exactly by
/// construction. Panels adjacent to the singular ends use Gauss-Jacobi with
/// the kernel's endpoint exponents (2H-1 at s -> t, 1-2H at s -> 0).
#[derive(Debug)]
pub struct FbmSampler {
    hurst: f64,
    grid: Arc<Grid>,
    // weights[i] holds w_{i,j} for j < i: B(t_i) = sum_j w_{i,j} Z_j
    weights: Vec<Vec<f64>>,
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: Arc<Grid>) -> Result<FbmSampler> {
        if hurst.is_nan() || hurst <= 0.0 || hurst >= 1.0 {
            return Err(Error::domain("hurst", hurst, "0 < H < 1"));
        }
        let mlen = grid.len();
        let gl = GaussRule::legendre(12);
        let gj_upper = GaussRule::jacobi(12, 2.0 * hurst - 1.0, 0.0)?;
        let gj_lower = GaussRule::jacobi(12, 0.0, 1.0 - 2.0 * hurst)?;
        let gh = gamma(hurst + 0.5);

        let mut weights = Vec::with_capacity(mlen);
        weights.push(Vec::new());
        for i in 1..mlen {
            let t = grid.node(i);
            let mut row = Vec::with_capacity(i);
            for j in 0..i {
                let (a, b) = (grid.node(j), grid.node(j + 1));
                let w2 = if j + 1 == i {
                    // weight (t-s)^{2H-1}: integrate the smooth factor of K^2
                    gj_upper.integrate(a, b, |s| {
                        let f = gauss_2f1(0.5 - hurst, hurst - 0.5, hurst + 0.5, 1.0 - t / s)
                            .unwrap_or(f64::NAN);
                        (f / gh).powi(2)
                    })
                } else if j == 0 {
                    // weight s^{1-2H}: the factor s^{H-1/2} K stays bounded at 0
                    gj_lower.integrate(a, b, |s| {
                        let k = kernel_kh(t, s, hurst).unwrap_or(f64::NAN);
                        let g = s.powf(hurst - 0.5) * k;
                        g * g
                    })
                } else {
                    gl.integrate(a, b, |s| {
                        let k = kernel_kh(t, s, hurst).unwrap_or(f64::NAN);
                        k * k
                    })
                };
                row.push(w2.max(0.0).sqrt());
            }
            weights.push(row);
        }
        Ok(FbmSampler {
            hurst,
            grid,
            weights,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Quadrature value of int_0^{t_i} K_H(t_i, s)^2 ds (the variance oracle).
    pub fn variance_oracle(&self, i: usize) -> f64 {
        self.weights[i].iter().map(|w| w * w).sum()
    }

    pub fn sample_with_rng(&self, rng: &mut ChaCha12Rng) -> FbmPath {
        let mlen = self.grid.len();
        let z: Vec<f64> = (0..mlen - 1).map(|_| StandardNormal.sample(rng)).collect();
        let mut values = vec![0.0; mlen];
        for (v, row) in values.iter_mut().zip(&self.weights).skip(1) {
            *v = row.iter().zip(&z).map(|(w, zz)| w * zz).sum();
        }
        FbmPath {
            hurst: self.hurst,
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with_rng(&mut rng)
    }
}

/// One-shot fractional Brownian path on the given grid.
pub fn sample_fbm(hurst: f64, grid: Arc<Grid>, seed: u64) -> Result<FbmPath> {
    Ok(FbmSampler::new(hurst, grid)?.sample(seed))
}
