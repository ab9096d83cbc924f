//! Verification harness: deterministic characteristic-functional gaps,
//! cumulant oracles, empirical covariances, and rate regressions.
//!
//! Monte Carlo runs draw one ChaCha12 stream per sample index, accumulate in
//! fixed blocks, and reduce block sums in index order, so results are
//! bit-identical for any worker count and reproducible per seed.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{CovOperator, EmbeddedVector, Embedding};
use crate::quad;

/// Monte Carlo samples per reduction block.
const MC_BLOCK: usize = 1024;

/// Statistical tolerance used by the pass/fail verdicts (standard errors).
pub const SE_TOLERANCE: f64 = 4.0;

/// Mean and standard error of a Monte Carlo estimator.
#[derive(Debug, Clone, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    pub fn check_invariants(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: self.n_samples,
            });
        }
        if self.std_error.is_nan() || self.std_error < 0.0 {
            return Err(Error::domain("std_error", self.std_error, ">= 0"));
        }
        Ok(())
    }

    pub fn csv_header() -> &'static str {
        "mean,std_error,n_samples,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.mean, self.std_error, self.n_samples, self.seed
        )
    }
}

/// One independent generator per sample index: ChaCha streams make the draw
/// for sample i independent of how samples are batched across workers.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic parallel Monte Carlo mean of a scalar statistic.
pub fn mc_scalar<F>(n_samples: usize, seed: u64, stat: F) -> Result<MCEstimate>
where
    F: Fn(&mut ChaCha12Rng) -> f64 + Sync,
{
    if n_samples < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: n_samples,
        });
    }
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let partials: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(n_samples);
            let (mut s, mut s2) = (0.0, 0.0);
            for i in lo..hi {
                let mut rng = stream_rng(seed, i as u64);
                let v = stat(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    let est = MCEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
        seed,
    };
    est.check_invariants()?;
    Ok(est)
}

/// Unbiased sample covariance of embedded vectors.
pub fn empirical_covariance(samples: &[EmbeddedVector]) -> Result<CovOperator> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: samples.len(),
        });
    }
    let dim = samples[0].n_max();
    let beta = samples[0].beta;
    for s in samples {
        if s.n_max() != dim || s.beta != beta {
            return Err(Error::ShapeMismatch(
                "samples disagree on (beta, n_max)".into(),
            ));
        }
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, c) in mean.iter_mut().zip(&s.coeffs) {
            *m += c;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        for i in 0..dim {
            let di = s.coeffs[i] - mean[i];
            for j in i..dim {
                let v = di * (s.coeffs[j] - mean[j]);
                acc[(i, j)] += v;
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = acc[(i, j)] / (n - 1.0);
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    CovOperator::new(beta, acc)
}

/// Empirical covariance of a sampled embedding, with per-entry standard
/// errors of the product moments, computed in one deterministic parallel pass.
#[derive(Debug, Clone)]
pub struct CovMc {
    pub emp: CovOperator,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub entry_se: DMatrix<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl CovMc {
    /// Largest deviation from `analytic` measured in per-entry standard errors.
    pub fn max_se_deviation(&self, analytic: &CovOperator) -> Result<f64> {
        if analytic.n_max() != self.emp.n_max() {
            return Err(Error::ShapeMismatch("covariance sizes differ".into()));
        }
        let mut worst = 0.0f64;
        for i in 0..self.emp.n_max() {
            for j in 0..self.emp.n_max() {
                let se = self.entry_se[(i, j)].max(1e-300);
                let dev = (self.emp.entry(i, j) - analytic.entry(i, j)).abs() / se;
                worst = worst.max(dev);
            }
        }
        Ok(worst)
    }

    pub fn max_mean_se_deviation(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.mean_se)
            .map(|(m, se)| m.abs() / se.max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// Runs `sample` n times (deterministic streams) and accumulates first,
/// second, and fourth product moments for the covariance verdicts.
pub fn covariance_mc<F>(
    beta: f64,
    dim: usize,
    n_samples: usize,
    seed: u64,
    sample: F,
) -> Result<CovMc>
where
    F: Fn(&mut ChaCha12Rng) -> Vec<f64> + Sync,
{
    if n_samples < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: n_samples,
        });
    }
    let pairs = dim * dim;
    let blocks = n_samples.div_ceil(MC_BLOCK);
    // per block: [sum_i | sumsq_i | sum_prod_ij | sumsq_prod_ij]
    let width = 2 * dim + 2 * pairs;
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(n_samples);
            let mut acc = vec![0.0; width];
            for s in lo..hi {
                let mut rng = stream_rng(seed, s as u64);
                let x = sample(&mut rng);
                debug_assert_eq!(x.len(), dim);
                for i in 0..dim {
                    acc[i] += x[i];
                    acc[dim + i] += x[i] * x[i];
                }
                for i in 0..dim {
                    for j in 0..dim {
                        let p = x[i] * x[j];
                        acc[2 * dim + i * dim + j] += p;
                        acc[2 * dim + pairs + i * dim + j] += p * p;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; width];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    let n = n_samples as f64;
    let mean: Vec<f64> = (0..dim).map(|i| total[i] / n).collect();
    let mean_se: Vec<f64> = (0..dim)
        .map(|i| {
            let var = ((total[dim + i] - n * mean[i] * mean[i]) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    let mut emp = DMatrix::<f64>::zeros(dim, dim);
    let mut entry_se = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let sp = total[2 * dim + i * dim + j];
            let spp = total[2 * dim + pairs + i * dim + j];
            let mprod = sp / n;
            // centered covariance with the mean correction
            emp[(i, j)] = (sp - n * mean[i] * mean[j]) / (n - 1.0);
            let var_prod = ((spp - n * mprod * mprod) / (n - 1.0)).max(0.0);
            entry_se[(i, j)] = (var_prod / n).sqrt();
        }
    }
    Ok(CovMc {
        emp: CovOperator::new(beta, emp)?,
        mean,
        mean_se,
        entry_se,
        n_samples,
        seed,
    })
}

/// Deterministic characteristic-functional gap between the embedded
/// compensated Poisson law and the Gaussian limit, at frequency theta:
/// |E_nu exp(i theta . x) - exp(-theta . S theta / 2)| with the Poisson side
/// given exactly by the Levy-Khintchine quadrature
/// exp(lambda int (e^{i g / sqrt(lambda)} - 1 - i g / sqrt(lambda)) dtau),
/// g = sum_n theta_n h_n. No sampling is involved.
pub fn char_gap_poisson(embedding: &Embedding, lambda: f64, theta: &[f64]) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::NonPositive {
            name: "lambda",
            value: lambda,
        });
    }
    if theta.len() > embedding.n_max() {
        return Err(Error::ShapeMismatch(format!(
            "theta has {} components, embedding holds {}",
            theta.len(),
            embedding.n_max()
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("theta", f64::NAN, "finite components"));
    }
    let grid = embedding.grid();
    let alpha = embedding.alpha();
    let mut g = vec![0.0f64; grid.len()];
    for (n, &t) in theta.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let h = embedding.basis().h(n + 1)?;
        for (acc, v) in g.iter_mut().zip(h.values()) {
            *acc += t * v;
        }
    }
    let sq = lambda.sqrt();
    // delta = P - G with G = -int g^2 / 2; stable forms avoid cancellation
    let re_vals: Vec<f64> = g
        .iter()
        .map(|&gv| {
            let x = gv / sq;
            let s = (0.5 * x).sin();
            0.5 * gv * gv - 2.0 * lambda * s * s
        })
        .collect();
    let im_vals: Vec<f64> = g
        .iter()
        .map(|&gv| {
            let x = gv / sq;
            lambda * (x.sin() - x)
        })
        .collect();
    let g2_vals: Vec<f64> = g.iter().map(|&gv| gv * gv).collect();
    let d_re = quad::integrate_values(grid, &re_vals, 0.0, 2.0 * alpha);
    let d_im = quad::integrate_values(grid, &im_vals, 0.0, 2.0 * alpha);
    let g_exp = -0.5 * quad::integrate_values(grid, &g2_vals, 0.0, 2.0 * alpha);
    // gap = e^G |e^(d_re + i d_im) - 1|
    let er = d_re.exp_m1();
    let (si, ci) = d_im.sin_cos();
    let real = er * ci - 2.0 * (0.5 * d_im).sin().powi(2);
    let imag = (1.0 + er) * si;
    Ok(g_exp.exp() * real.hypot(imag))
}

/// Quadrature oracle for the third cumulant of v . (embedded Poisson):
/// lambda^{-1/2} int_0^1 g(tau)^3 dtau with g = sum_n v_n h_n.
pub fn third_cumulant_oracle(embedding: &Embedding, lambda: f64, v: &[f64]) -> Result<f64> {
    let grid = embedding.grid();
    let alpha = embedding.alpha();
    let mut g = vec![0.0f64; grid.len()];
    for (n, &t) in v.iter().enumerate() {
        let h = embedding.basis().h(n + 1)?;
        for (acc, hv) in g.iter_mut().zip(h.values()) {
            *acc += t * hv;
        }
    }
    let cubes: Vec<f64> = g.iter().map(|&x| x * x * x).collect();
    Ok(quad::integrate_values(grid, &cubes, 0.0, 3.0 * alpha) / lambda.sqrt())
}

/// Monte Carlo estimate of E[(v . J N_lambda)^3] against the quadrature
/// oracle; `v` must be a unit vector.
pub fn third_cumulant_poisson(
    embedding: &Embedding,
    lambda: f64,
    v: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<(MCEstimate, f64)> {
    if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::NonPositive {
            name: "lambda",
            value: lambda,
        });
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::domain("v", norm, "unit norm"));
    }
    if v.len() > embedding.n_max() {
        return Err(Error::ShapeMismatch("v longer than the embedding".into()));
    }
    let oracle = third_cumulant_oracle(embedding, lambda, v)?;
    let est = mc_scalar(n_samples, seed, |rng| {
        let path =
            crate::processes::sample_poisson_with_rng(lambda, rng).expect("lambda validated above");
        let emb = embedding
            .embed_step_path(&path)
            .expect("poisson jumps lie in [0,1]");
        let t = emb.dot(v);
        t * t * t
    })?;
    Ok((est, oracle))
}

/// Power-law rate fit: least-squares slope of log(gap) against log(param).
#[derive(Debug, Clone, Serialize)]
pub struct RateSeries {
    pub params: Vec<f64>,
    pub gaps: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
}

impl RateSeries {
    pub fn csv_header() -> &'static str {
        "param,gap,fitted_slope,slope_stderr"
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        for (p, g) in self.params.iter().zip(&self.gaps) {
            writeln!(w, "{},{},{},{}", p, g, self.fitted_slope, self.slope_stderr)?;
        }
        Ok(())
    }
}

/// Fits log(gap) = a + slope * log(param) by least squares.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateSeries> {
    if points.len() < 4 {
        return Err(Error::TooFewSamples {
            required: 4,
            got: points.len(),
        });
    }
    for &(p, g) in points {
        if p.is_nan() || g.is_nan() || p <= 0.0 || g <= 0.0 {
            return Err(Error::NonPositive {
                name: "rate point",
                value: g.min(p),
            });
        }
    }
    let xs: Vec<f64> = points.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, g)| g.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (ss_res / ((n - 2.0) * sxx)).sqrt();
    Ok(RateSeries {
        params: points.iter().map(|(p, _)| *p).collect(),
        gaps: points.iter().map(|(_, g)| *g).collect(),
        fitted_slope: slope,
        slope_stderr: stderr,
    })
}
