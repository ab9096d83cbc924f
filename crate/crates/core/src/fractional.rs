//! Riemann-Liouville fractional integrals, the basis functions h_n^alpha,
//! and the special functions everything downstream consumes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, SingularExponent};
use crate::quad;
use crate::special::gamma;

pub use crate::special::{gamma_fn, gauss_2f1};

/// Fractional order, validated to [0, 1] for operator use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::domain("alpha", alpha, "0 <= alpha <= 1"));
        }
        Ok(FracOrder(alpha))
    }

    /// Embedding order: additionally requires 0 < beta < 1/2.
    pub fn embedding(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 || beta >= 0.5 {
            return Err(Error::domain("beta", beta, "0 < beta < 1/2"));
        }
        Ok(FracOrder(beta))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Left fractional integral I^alpha_{0+} f on the working grid.
///
/// alpha = 0 is the identity; the kernel weight (x-t)^(alpha-1) is integrated
/// exactly against the data's cubic interpolant on every panel.
pub fn frac_integral_left(f: &GridFunction, alpha: FracOrder) -> Result<GridFunction> {
    if alpha.get() == 0.0 {
        return Ok(f.clone());
    }
    quad::frac_left(f, alpha.get())
}

/// Right fractional integral I^alpha_{1-} f, the reflection of the left one.
pub fn frac_integral_right(f: &GridFunction, alpha: FracOrder) -> Result<GridFunction> {
    if alpha.get() == 0.0 {
        return Ok(f.clone());
    }
    quad::frac_right(f, alpha.get())
}

/// Hilbert-Schmidt norm of the canonical embedding of order alpha,
/// c_alpha = (1/(2 Gamma(alpha))) * (1/(alpha (alpha - 1/2)))^(1/2),
/// finite iff alpha > 1/2.
pub fn hs_norm(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.5 || !alpha.is_finite() {
        return Err(Error::NotHilbertSchmidt { alpha });
    }
    Ok(1.0 / (2.0 * gamma(alpha)) * (1.0 / (alpha * (alpha - 0.5))).sqrt())
}

/// Complete orthonormal basis of L2[0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// e_1 = 1, e_n(t) = sqrt(2) cos((n-1) pi t) for n >= 2.
    Cosine,
}

/// Choice of basis plus truncation count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub n_max: usize,
}

impl BasisSpec {
    pub fn cosine(n_max: usize) -> Self {
        BasisSpec {
            kind: BasisKind::Cosine,
            n_max,
        }
    }

    /// Angular frequency of e_n.
    #[inline]
    pub fn omega(&self, n: usize) -> f64 {
        match self.kind {
            BasisKind::Cosine => (n - 1) as f64 * std::f64::consts::PI,
        }
    }

    /// e_n(t), 1-indexed.
    #[inline]
    pub fn eval(&self, n: usize, t: f64) -> f64 {
        match self.kind {
            BasisKind::Cosine => {
                if n == 1 {
                    1.0
                } else {
                    std::f64::consts::SQRT_2 * (self.omega(n) * t).cos()
                }
            }
        }
    }

    pub fn grid_function(&self, n: usize, grid: Arc<Grid>) -> Result<GridFunction> {
        if n < 1 || n > self.n_max {
            return Err(Error::BasisIndex {
                index: n,
                n_max: self.n_max,
            });
        }
        GridFunction::from_fn(grid, |t| self.eval(n, t))
    }
}

/// Cache of h_n^alpha = I^alpha_{1-} e_n for n = 1..n_max on a fixed grid.
///
/// Values come from the trig-power moments C/S(p, w, L) = int_0^L u^(p-1)
/// cos/sin(wu) du rather than the grid transform:
/// h_n(x) = (sqrt(2)/Gamma(alpha)) [cos(wx) C(alpha, w, 1-x) - sin(wx) S(alpha, w, 1-x)],
/// which is O(grid) per basis function at ~1e-12 accuracy. Interval
/// functionals use the dual identity
/// `int_a^b h_n = <I^alpha_{0+} 1_[a,b], e_n>` so arbitrary partitions need no
/// grid alignment.
#[derive(Debug)]
pub struct FracBasis {
    alpha: f64,
    spec: BasisSpec,
    grid: Arc<Grid>,
    h: Vec<GridFunction>,
    // cumulative trig-power integrals at t-indexing for n >= 2:
    // h_n(t) = (sqrt(2)/Gamma(a)) [cos(w t) cs[n-2].0[t] - sin(w t) cs[n-2].1[t]]
    cs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl FracBasis {
    pub fn new(alpha: FracOrder, spec: BasisSpec, grid: Arc<Grid>) -> Result<FracBasis> {
        let a = alpha.get();
        if a <= 0.0 {
            return Err(Error::domain("alpha", a, "0 < alpha <= 1"));
        }
        if spec.n_max == 0 {
            return Err(Error::BasisIndex { index: 0, n_max: 0 });
        }
        let mlen = grid.len();
        let ga = gamma(a);
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut cs = Vec::with_capacity(spec.n_max.saturating_sub(1));
        let h: Vec<GridFunction> = (1..=spec.n_max)
            .map(|n| {
                let vals = if n == 1 {
                    let ga1 = gamma(a + 1.0);
                    grid.nodes().map(|x| (1.0 - x).powf(a) / ga1).collect()
                } else {
                    let om = spec.omega(n);
                    let (c, s) = quad::trig_power_grid(a, om, &grid);
                    let c_rev: Vec<f64> = (0..mlen).map(|i| c[mlen - 1 - i]).collect();
                    let s_rev: Vec<f64> = (0..mlen).map(|i| s[mlen - 1 - i]).collect();
                    let vals = (0..mlen)
                        .map(|i| {
                            let x = grid.node(i);
                            sqrt2 / ga * ((om * x).cos() * c_rev[i] - (om * x).sin() * s_rev[i])
                        })
                        .collect::<Vec<f64>>();
                    cs.push((c_rev, s_rev));
                    vals
                };
                GridFunction::new(grid.clone(), vals)
                    .map(|g| g.with_singularity(SingularExponent::right(a)))
            })
            .collect::<Result<_>>()?;
        Ok(FracBasis {
            alpha: a,
            spec,
            grid,
            h,
            cs,
        })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.spec.n_max
    }

    #[inline]
    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// h_n^alpha on the working grid (1-indexed, cached).
    pub fn h(&self, n: usize) -> Result<&GridFunction> {
        self.h.get(n.wrapping_sub(1)).ok_or(Error::BasisIndex {
            index: n,
            n_max: self.spec.n_max,
        })
    }

    pub fn h_all(&self) -> &[GridFunction] {
        &self.h
    }

    /// Exact h_n^alpha(tau) (no grid interpolation).
    pub fn h_at(&self, n: usize, tau: f64) -> Result<f64> {
        if n < 1 || n > self.spec.n_max {
            return Err(Error::BasisIndex {
                index: n,
                n_max: self.spec.n_max,
            });
        }
        let a = self.alpha;
        if n == 1 {
            return Ok((1.0 - tau).powf(a) / gamma(a + 1.0));
        }
        let om = self.spec.omega(n);
        let (c, s) = quad::trig_power_point(a, om, 1.0 - tau);
        Ok(std::f64::consts::SQRT_2 / gamma(a) * ((om * tau).cos() * c - (om * tau).sin() * s))
    }

    /// Exact int_a^b h_n(t) dt via the dual identity.
    pub fn interval_integral(&self, n: usize, a: f64, b: f64) -> Result<f64> {
        if n < 1 || n > self.spec.n_max {
            return Err(Error::BasisIndex {
                index: n,
                n_max: self.spec.n_max,
            });
        }
        Ok(self.edge_functional(n, a) - self.edge_functional(n, b))
    }

    /// F_n(a) = int_0^1 (t-a)_+^alpha e_n(t) dt / Gamma(alpha+1) = int_a^1 ... ,
    /// so that int_a^b h_n = F_n(a) - F_n(b).
    fn edge_functional(&self, n: usize, a: f64) -> f64 {
        let al = self.alpha;
        if a >= 1.0 {
            return 0.0;
        }
        if n == 1 {
            return (1.0 - a).powf(al + 1.0) / gamma(al + 2.0);
        }
        let om = self.spec.omega(n);
        let (c, s) = quad::trig_power_point(al + 1.0, om, 1.0 - a);
        std::f64::consts::SQRT_2 / gamma(al + 1.0) * ((om * a).cos() * c - (om * a).sin() * s)
    }

    /// `T[n-1][j]` = int over the j-th interval of `edges` of h_n.
    pub fn interval_matrix(&self, edges: &[f64]) -> Result<Vec<Vec<f64>>> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "edges must be strictly increasing".into(),
            ));
        }
        let mut t = Vec::with_capacity(self.spec.n_max);
        for n in 1..=self.spec.n_max {
            let f: Vec<f64> = edges.iter().map(|&a| self.edge_functional(n, a)).collect();
            t.push(f.windows(2).map(|w| w[0] - w[1]).collect());
        }
        Ok(t)
    }

    /// ||h_n||_{L2}^2 through the exact trig-product route.
    pub fn h_norm_sq(&self, n: usize) -> Result<f64> {
        self.inner_product_exact(n, n)
    }

    /// <h_n, h_k> via the trig-product structure: with
    /// h_n = (sqrt(2)/Gamma(a)) [cos(w_n t) A_n - sin(w_n t) B_n] and A, B the
    /// cumulative trig-power integrals (smooth, non-oscillatory), the product
    /// expands into sum/difference frequencies against smooth data, which the
    /// Filon moments integrate with oscillation-independent O(h^4) error.
    /// This is the route the covariance matrix uses; the generic Gram of the
    /// sampled h data (`quad::inner_product`) stays available as an
    /// independent computation path.
    pub fn inner_product_exact(&self, n: usize, k: usize) -> Result<f64> {
        let n_max = self.spec.n_max;
        if n < 1 || n > n_max {
            return Err(Error::BasisIndex { index: n, n_max });
        }
        if k < 1 || k > n_max {
            return Err(Error::BasisIndex { index: k, n_max });
        }
        let (n, k) = (n.min(k), n.max(k));
        let a = self.alpha;
        if k == 1 {
            return Ok(1.0 / ((2.0 * a + 1.0) * gamma(a + 1.0).powi(2)));
        }
        let grid = &self.grid;
        let meta = SingularExponent::right(2.0 * a);
        if n == 1 {
            let om = self.spec.omega(k);
            let (ak, bk) = &self.cs[k - 2];
            let uc: Vec<f64> = grid
                .nodes()
                .zip(ak)
                .map(|(t, v)| (1.0 - t).powf(a) * v)
                .collect();
            let us: Vec<f64> = grid
                .nodes()
                .zip(bk)
                .map(|(t, v)| (1.0 - t).powf(a) * v)
                .collect();
            let gc = GridFunction::new(grid.clone(), uc)?.with_singularity(meta);
            let gs = GridFunction::new(grid.clone(), us)?.with_singularity(meta);
            let fc = quad::trig_integral(&gc, om).0;
            let fs = quad::trig_integral(&gs, om).1;
            return Ok(std::f64::consts::SQRT_2 / (gamma(a + 1.0) * gamma(a)) * (fc - fs));
        }
        let (om_n, om_k) = (self.spec.omega(n), self.spec.omega(k));
        let (an, bn) = &self.cs[n - 2];
        let (ak, bk) = &self.cs[k - 2];
        let mlen = grid.len();
        let mut p_plus_q = Vec::with_capacity(mlen);
        let mut p_minus_q = Vec::with_capacity(mlen);
        let mut r_plus_t = Vec::with_capacity(mlen);
        let mut r_minus_t = Vec::with_capacity(mlen);
        for i in 0..mlen {
            let p = an[i] * ak[i];
            let q = bn[i] * bk[i];
            let r = an[i] * bk[i];
            let t = bn[i] * ak[i];
            p_plus_q.push(p + q);
            p_minus_q.push(p - q);
            r_plus_t.push(r + t);
            r_minus_t.push(r - t);
        }
        let gf = |v: Vec<f64>| GridFunction::new(grid.clone(), v).map(|g| g.with_singularity(meta));
        let om_diff = om_n - om_k;
        let om_sum = om_n + om_k;
        let term1 = quad::trig_integral(&gf(p_plus_q)?, om_diff).0;
        let term2 = quad::trig_integral(&gf(p_minus_q)?, om_sum).0;
        let term3 = quad::trig_integral(&gf(r_plus_t)?, om_sum).1;
        let term4 = quad::trig_integral(&gf(r_minus_t)?, om_diff).1;
        Ok((term1 + term2 - term3 + term4) / gamma(a).powi(2))
    }
}
