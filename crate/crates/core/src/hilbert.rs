//! The isometric embedding of sample paths into l2, the truncated covariance
//! S_beta, partial traces, and trace norms.
//!
//! A path omega is carried to the coefficient sequence
//! (int_0^1 h_n^{1-beta} d omega)_n against the canonical basis of l2. The
//! Gram matrix of the h_n^{1-beta} is the covariance S_beta of the pushed
//! Wiener measure; every process family below reduces its covariance
//! computation to that Gram structure.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fractional::{BasisSpec, FracBasis, FracOrder};
use crate::grid::Grid;
use crate::processes::{PiecewiseLinearPath, StepPath};
use crate::quad;

/// Truncated l2 coefficient vector of an embedded path.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedVector {
    pub beta: f64,
    pub coeffs: Vec<f64>,
}

impl EmbeddedVector {
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,coefficient")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, c)?;
        }
        Ok(())
    }
}

/// Symmetric truncated operator on l2 (covariances, Gram matrices, gaps).
#[derive(Debug, Clone)]
pub struct CovOperator {
    pub beta: f64,
    matrix: DMatrix<f64>,
}

impl CovOperator {
    /// Builds from a square matrix, symmetrizing exactly.
    pub fn new(beta: f64, matrix: DMatrix<f64>) -> Result<CovOperator> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix is not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sym = 0.5 * (&matrix + matrix.transpose());
        Ok(CovOperator { beta, matrix: sym })
    }

    pub fn n_max(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, n: usize, k: usize) -> f64 {
        self.matrix[(n, k)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn sub(&self, other: &CovOperator) -> Result<CovOperator> {
        if self.n_max() != other.n_max() {
            return Err(Error::ShapeMismatch(format!(
                "operator sizes {} vs {}",
                self.n_max(),
                other.n_max()
            )));
        }
        Ok(CovOperator {
            beta: self.beta,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_entry_diff(&self, other: &CovOperator) -> f64 {
        (&self.matrix - &other.matrix).abs().max()
    }

    /// CSV rows `row,col,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        for n in 0..self.n_max() {
            for k in 0..self.n_max() {
                writeln!(w, "{},{},{}", n + 1, k + 1, self.matrix[(n, k)])?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..self.n_max())
            .map(|n| (0..self.n_max()).map(|k| self.matrix[(n, k)]).collect())
            .collect();
        json!({
            "schema_version": 1,
            "beta": self.beta,
            "n_max": self.n_max(),
            "matrix": rows,
        })
    }
}

/// Trace norm (sum of absolute eigenvalues) of a symmetric operator.
pub fn trace_norm(op: &CovOperator) -> f64 {
    op.eigenvalues().iter().map(|l| l.abs()).sum()
}

/// A Hilbert-Schmidt element H = sum_n g_n (x) x_n of X (x) l2, stored by its
/// component functions g_n in the auxiliary space X.
#[derive(Debug)]
pub enum HilbertSchmidtFamily {
    /// X = L2: g_n = h_n^{1-beta} (the Poisson family H_1).
    L2Functions {
        beta: f64,
        funcs: Vec<crate::grid::GridFunction>,
    },
    /// X = L2, g_n = p_{F_m} h_n: step functions over the m-partition,
    /// represented by the interval integrals `a[n][j] = int_{I_j} h_n`.
    Step {
        beta: f64,
        m: usize,
        integrals: DMatrix<f64>,
    },
    /// X = l2(m): g_n = `(sqrt(m) a[n][j])_j`, the Donsker family in the
    /// normalization consistent with the embedded walk.
    Seq {
        beta: f64,
        m: usize,
        integrals: DMatrix<f64>,
    },
}

impl HilbertSchmidtFamily {
    pub fn n_max(&self) -> usize {
        match self {
            HilbertSchmidtFamily::L2Functions { funcs, .. } => funcs.len(),
            HilbertSchmidtFamily::Step { integrals, .. }
            | HilbertSchmidtFamily::Seq { integrals, .. } => integrals.nrows(),
        }
    }
}

/// Partial trace along X of H (x) H: the Gram matrix of the component
/// functions. For the step and sequence families the Gram reduces to the
/// same expression `m * sum_j a[n][j] a[k][j]`, which is the trace identity
/// between the interpolation and Donsker families.
pub fn partial_trace(family: &HilbertSchmidtFamily) -> Result<CovOperator> {
    match family {
        HilbertSchmidtFamily::L2Functions { beta, funcs } => {
            let n = funcs.len();
            let mut g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = quad::inner_product(&funcs[i], &funcs[j])?;
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            CovOperator::new(*beta, g)
        }
        HilbertSchmidtFamily::Step { beta, m, integrals }
        | HilbertSchmidtFamily::Seq { beta, m, integrals } => {
            let g = *m as f64 * integrals * integrals.transpose();
            CovOperator::new(*beta, g)
        }
    }
}

/// Shared context: embedding order beta, the h_n^{1-beta} basis cache, and
/// derived objects (covariance, interval-integral tables per partition).
#[derive(Debug)]
pub struct Embedding {
    beta: f64,
    basis: FracBasis,
    h_full_integrals: Vec<f64>,
    covariance: OnceLock<CovOperator>,
    series_proj: OnceLock<Arc<DMatrix<f64>>>,
    interval_cache: Mutex<HashMap<usize, Arc<DMatrix<f64>>>>,
}

impl Embedding {
    pub fn new(beta: f64, n_max: usize, grid: Arc<Grid>) -> Result<Embedding> {
        let beta_ord = FracOrder::embedding(beta)?;
        let alpha = FracOrder::new(1.0 - beta_ord.get())?;
        let basis = FracBasis::new(alpha, BasisSpec::cosine(n_max), grid)?;
        let h_full_integrals = (1..=n_max)
            .map(|n| basis.interval_integral(n, 0.0, 1.0))
            .collect::<Result<_>>()?;
        Ok(Embedding {
            beta,
            basis,
            h_full_integrals,
            covariance: OnceLock::new(),
            series_proj: OnceLock::new(),
            interval_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_default_grid(beta: f64, n_max: usize) -> Result<Embedding> {
        Embedding::new(beta, n_max, Grid::default_grid())
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        1.0 - self.beta
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.basis.n_max()
    }

    pub fn basis(&self) -> &FracBasis {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.basis.grid()
    }

    /// int_0^1 h_n, cached.
    pub fn h_full_integral(&self, n: usize) -> f64 {
        self.h_full_integrals[n - 1]
    }

    /// Interval integrals `a[n][j] = int_{I_j} h_n` over the uniform
    /// m-partition, cached per m.
    pub fn interval_integrals(&self, m: usize) -> Result<Arc<DMatrix<f64>>> {
        if m < 1 {
            return Err(Error::domain("m", m as f64, "m >= 1"));
        }
        if let Some(t) = self.interval_cache.lock().unwrap().get(&m) {
            return Ok(t.clone());
        }
        let edges: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
        let rows = self.basis.interval_matrix(&edges)?;
        let n = self.n_max();
        let mat = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        let arc = Arc::new(mat);
        self.interval_cache.lock().unwrap().insert(m, arc.clone());
        Ok(arc)
    }

    /// The family H_1 = sum_n h_n^{1-beta} (x) x_n.
    pub fn poisson_family(&self) -> HilbertSchmidtFamily {
        HilbertSchmidtFamily::L2Functions {
            beta: self.beta,
            funcs: self.basis.h_all().to_vec(),
        }
    }

    /// The interpolation family H_m-dagger of projected basis functions.
    pub fn interp_family(&self, m: usize) -> Result<HilbertSchmidtFamily> {
        Ok(HilbertSchmidtFamily::Step {
            beta: self.beta,
            m,
            integrals: (*self.interval_integrals(m)?).clone(),
        })
    }

    /// The Donsker family H_m-sharp, in the embedding-consistent
    /// normalization (components sqrt(m) int_{I_j} h_n).
    pub fn donsker_family(&self, m: usize) -> Result<HilbertSchmidtFamily> {
        Ok(HilbertSchmidtFamily::Seq {
            beta: self.beta,
            m,
            integrals: (*self.interval_integrals(m)?).clone(),
        })
    }

    /// Truncated covariance S_beta with entries <h_n, h_k> from the exact
    /// trig-product route of [`FracBasis::inner_product_exact`]. This is an
    /// independent computation path from the sampled-data Gram of
    /// `partial_trace(poisson_family())`.
    pub fn covariance_matrix(&self) -> Result<&CovOperator> {
        if let Some(c) = self.covariance.get() {
            return Ok(c);
        }
        let n = self.n_max();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.basis.inner_product_exact(i + 1, j + 1)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let op = CovOperator::new(self.beta, g)?;
        let _ = self.covariance.set(op);
        Ok(self.covariance.get().expect("just set"))
    }

    /// Covariance through the integration-by-parts identity
    /// <h_n, h_k> = <e_n, I^{1-beta}_{0+} h_k>: one fractional transform per
    /// column, a trig moment per entry. Kept as a third route for
    /// cross-checks; accuracy is limited by the sampled transform output
    /// (resonant O((omega h)^4) terms on the diagonal).
    pub fn covariance_via_duality(&self) -> Result<CovOperator> {
        let n = self.n_max();
        let alpha = FracOrder::new(self.alpha())?;
        let spec = self.basis.spec();
        let mut g = DMatrix::zeros(n, n);
        for k in 0..n {
            let w = crate::fractional::frac_integral_left(self.basis.h(k + 1)?, alpha)?;
            for nn in 0..n {
                g[(nn, k)] = if nn == 0 {
                    quad::integrate(&w)
                } else {
                    std::f64::consts::SQRT_2 * quad::trig_integral(&w, spec.omega(nn + 1)).0
                };
            }
        }
        CovOperator::new(self.beta, g)
    }

    /// Projection matrix `P[k][n] = <h_k, e_n>` of the basis functions onto the
    /// generating basis: the exact embedding of the truncated series Brownian
    /// motion is P X for the i.i.d. normal coefficient vector X, so its
    /// covariance is P P^T.
    pub fn series_projection(&self) -> Result<Arc<DMatrix<f64>>> {
        if let Some(p) = self.series_proj.get() {
            return Ok(p.clone());
        }
        let n = self.n_max();
        let spec = self.basis.spec();
        let mut p = DMatrix::zeros(n, n);
        for k in 0..n {
            let h = self.basis.h(k + 1)?;
            for nn in 0..n {
                p[(k, nn)] = if nn == 0 {
                    quad::integrate(h)
                } else {
                    std::f64::consts::SQRT_2 * quad::trig_integral(h, spec.omega(nn + 1)).0
                };
            }
        }
        let arc = Arc::new(p);
        let _ = self.series_proj.set(arc.clone());
        Ok(self.series_proj.get().expect("just set").clone())
    }

    /// Covariance P P^T of the exact embedding of the truncated series
    /// Brownian motion (approaches S_beta as n_max grows).
    pub fn series_covariance(&self) -> Result<CovOperator> {
        let p = self.series_projection()?;
        CovOperator::new(self.beta, p.as_ref() * p.transpose())
    }

    /// Embeds a pure-jump path: `coeffs[n] = sum_i size_i h_n(t_i) + drift int h_n`.
    pub fn embed_step_path(&self, path: &StepPath) -> Result<EmbeddedVector> {
        for &t in path.jump_times() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::JumpOutOfRange(t));
            }
        }
        let n = self.n_max();
        let mut coeffs = vec![0.0; n];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let h = self.basis.h(idx + 1)?;
            let mut acc = 0.0;
            for (&t, &s) in path.jump_times().iter().zip(path.jump_sizes()) {
                acc += s * h.eval(t);
            }
            *c = acc + path.drift() * self.h_full_integrals[idx];
        }
        Ok(EmbeddedVector {
            beta: self.beta,
            coeffs,
        })
    }

    /// Embeds a piecewise-linear path: `coeffs[n] = sum_j slope_j int_{I_j} h_n`.
    pub fn embed_piecewise_linear(&self, path: &PiecewiseLinearPath) -> Result<EmbeddedVector> {
        let m = path.intervals();
        let t = self.interval_integrals(m)?;
        let slopes = path.slopes();
        let n = self.n_max();
        let mut coeffs = vec![0.0; n];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c = (0..m).map(|j| slopes[j] * t[(idx, j)]).sum();
        }
        Ok(EmbeddedVector {
            beta: self.beta,
            coeffs,
        })
    }

    /// Sampler for the Gaussian measure with covariance S_beta^(N).
    pub fn gaussian_sampler(&self) -> Result<GaussianSampler> {
        let cov = self.covariance_matrix()?;
        GaussianSampler::new(cov)
    }
}

/// Draws N(0, S) via the symmetric eigendecomposition square root;
/// eigenvalues below the jitter floor are clamped to zero.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    beta: f64,
    sqrt: DMatrix<f64>,
}

const EIGEN_JITTER: f64 = 1e-12;

impl GaussianSampler {
    pub fn new(cov: &CovOperator) -> Result<GaussianSampler> {
        let eig = cov.matrix().clone().symmetric_eigen();
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::Factorization(format!(
                "covariance has eigenvalue {min}"
            )));
        }
        let mut lam = eig.eigenvalues.clone();
        for l in lam.iter_mut() {
            *l = if *l > EIGEN_JITTER { l.sqrt() } else { 0.0 };
        }
        let q = eig.eigenvectors;
        let sqrt = &q * DMatrix::from_diagonal(&lam) * q.transpose();
        Ok(GaussianSampler {
            beta: cov.beta,
            sqrt,
        })
    }

    pub fn n_max(&self) -> usize {
        self.sqrt.nrows()
    }

    pub fn sample_with_rng(&self, rng: &mut ChaCha12Rng) -> EmbeddedVector {
        let n = self.n_max();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let zv = nalgebra::DVector::from_vec(z);
        let x = &self.sqrt * zv;
        EmbeddedVector {
            beta: self.beta,
            coeffs: x.iter().copied().collect(),
        }
    }

    pub fn sample(&self, seed: u64) -> EmbeddedVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with_rng(&mut rng)
    }
}

/// One-shot draw from the Gaussian measure on l2 with covariance S_beta^(N).
pub fn sample_gaussian(beta: f64, n_max: usize, seed: u64) -> Result<EmbeddedVector> {
    let embedding = Embedding::with_default_grid(beta, n_max)?;
    Ok(embedding.gaussian_sampler()?.sample(seed))
}
