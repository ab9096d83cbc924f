//! Quadrature kernels: Gauss rules, singularity-aware product integration of
//! grid data, fractional-integral transforms, and trigonometric power moments.
//!
//! Grid data is integrated by piecewise-cubic product integration: the data's
//! cubic interpolant is integrated *exactly* against the weight on every
//! panel, so algebraic endpoint weights (x-t)^(alpha-1), t^p, (1-t)^p cost no
//! accuracy. Known multiplicative endpoint powers of the data itself (from
//! [`GridFunction::singular_exponent`]) are divided out and reattached through
//! weighted moments on the panels adjacent to that endpoint.

use std::sync::Arc;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Endpoint, Grid, GridFunction, SingularExponent};
use crate::special::{beta, gamma};

// cubic stencil coefficient matrices: a_k = sum_r C[k][r] f_r, polynomial in
// the panel-local coordinate xi = (t - s_j)/h in [0, 1]
const CUBIC_INTERIOR: [[f64; 4]; 4] = [
    // stencil nodes at xi = -1, 0, 1, 2
    [0.0, 1.0, 0.0, 0.0],
    [-1.0 / 3.0, -0.5, 1.0, -1.0 / 6.0],
    [0.5, -1.0, 0.5, 0.0],
    [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0],
];
const CUBIC_FIRST: [[f64; 4]; 4] = [
    // stencil nodes at xi = 0, 1, 2, 3
    [1.0, 0.0, 0.0, 0.0],
    [-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0],
    [1.0, -2.5, 2.0, -0.5],
    [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0],
];
const CUBIC_LAST: [[f64; 4]; 4] = [
    // stencil nodes at xi = -2, -1, 0, 1
    [0.0, 0.0, 1.0, 0.0],
    [1.0 / 6.0, -1.0, 0.5, 1.0 / 3.0],
    [0.0, 0.5, -1.0, 0.5],
    [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0],
];

/// Panels adjacent to a tagged endpoint that get weighted moments.
const WEIGHTED_PANELS: usize = 8;
/// Outputs of the fractional transform below this index use the Maclaurin
/// branch when the input carries a left endpoint power.
const SMALL_X_NODES: usize = 24;

#[inline]
fn stencil(j: usize, panels: usize) -> (usize, &'static [[f64; 4]; 4]) {
    if j == 0 {
        (0, &CUBIC_FIRST)
    } else if j + 1 == panels {
        (j - 2, &CUBIC_LAST)
    } else {
        (j - 1, &CUBIC_INTERIOR)
    }
}

#[inline]
fn cubic_coeffs(values: &[f64], j: usize, panels: usize) -> [f64; 4] {
    let (base, mat) = stencil(j, panels);
    let f = &values[base..base + 4];
    let mut a = [0.0; 4];
    for k in 0..4 {
        a[k] = mat[k][0] * f[0] + mat[k][1] * f[1] + mat[k][2] * f[2] + mat[k][3] * f[3];
    }
    a
}

// ---------------------------------------------------------------------------
// Gauss rules (Golub-Welsch on the symmetrized Jacobi recurrence)
// ---------------------------------------------------------------------------

/// Gauss-Jacobi rule for weight (1-x)^a (1+x)^b on [-1, 1].
/// `a = b = 0` is Gauss-Legendre.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    exp_right: f64,
    exp_left: f64,
}

impl GaussRule {
    pub fn jacobi(deg: usize, a: f64, b: f64) -> Result<GaussRule> {
        if deg < 2 {
            return Err(Error::domain("deg", deg as f64, "deg >= 2"));
        }
        if a.is_nan() || b.is_nan() || a <= -1.0 || b <= -1.0 {
            return Err(Error::domain("exponent", a.min(b), "> -1"));
        }
        let mut m = nalgebra::DMatrix::<f64>::zeros(deg, deg);
        let mut diag = (b - a) / (2.0 + a + b);
        for idx in 0..deg - 1 {
            let i1 = idx as f64 + 1.0;
            let denom = 2.0 * i1 + a + b;
            let off = 2.0 / denom
                * (i1 * (i1 + a) * (i1 + b) * (i1 + a + b) / ((denom + 1.0) * (denom - 1.0)))
                    .sqrt();
            m[(idx, idx)] = diag;
            m[(idx, idx + 1)] = off;
            m[(idx + 1, idx)] = off;
            diag = (b * b - a * a) / (denom * (denom + 2.0));
        }
        m[(deg - 1, deg - 1)] = diag;
        let eig = m.symmetric_eigen();
        let mu0 = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
        let mut pairs: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .copied()
            .zip(eig.eigenvectors.row(0).iter().map(|v| v * v * mu0))
            .collect();
        pairs.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
        Ok(GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            exp_right: a,
            exp_left: b,
        })
    }

    pub fn legendre(deg: usize) -> GaussRule {
        GaussRule::jacobi(deg, 0.0, 0.0).expect("legendre parameters are valid")
    }

    /// Integrate `(hi-x)^a (x-lo)^b f(x)` over `[lo, hi]`, with `a`, `b` the
    /// exponents the rule was built for.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let scale = half.powf(1.0 + self.exp_right + self.exp_left);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        scale * acc
    }
}

fn gl12() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(12))
}

fn gl24() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(24))
}

/// Composite Gauss-Legendre with geometric grading toward endpoints that
/// carry integrable kinks (unbounded derivatives but bounded values, or mild
/// integrable singularities). Each panel is split in four so moderate
/// oscillation stays resolved.
pub fn graded_integral(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grade_left: bool,
    grade_right: bool,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let rule = gl24();
    let plain = |a: f64, b: f64| {
        let third = (b - a) / 4.0;
        (0..4)
            .map(|i| rule.integrate(a + i as f64 * third, a + (i + 1) as f64 * third, f))
            .sum::<f64>()
    };
    match (grade_left, grade_right) {
        (false, false) => {
            let n = 16;
            let w = (hi - lo) / n as f64;
            (0..n)
                .map(|i| plain(lo + i as f64 * w, lo + (i + 1) as f64 * w))
                .sum()
        }
        (true, false) => graded_one_side(&plain, lo, hi, false),
        (false, true) => graded_one_side(&plain, lo, hi, true),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            graded_one_side(&plain, lo, mid, false) + graded_one_side(&plain, mid, hi, true)
        }
    }
}

// Grading truncates a 2^-52-wide sliver at the singular end, so integrands
// with unbounded endpoint power gamma keep a residual ~ (2^-52)^(1+gamma):
// fine for bounded kinks and mild singularities, use Gauss-Jacobi when the
// exponent is strong and known.
fn graded_one_side(plain: &dyn Fn(f64, f64) -> f64, lo: f64, hi: f64, toward_hi: bool) -> f64 {
    const LEVELS: usize = 52;
    let len = hi - lo;
    let mut acc = 0.0;
    let mut frac = 1.0;
    for _ in 0..LEVELS {
        let next = frac * 0.5;
        let (a, b) = if toward_hi {
            (hi - frac * len, hi - next * len)
        } else {
            (lo + next * len, lo + frac * len)
        };
        if b > a {
            acc += plain(a, b);
        }
        frac = next;
    }
    acc
}

// ---------------------------------------------------------------------------
// Weighted product-cubic integration of grid data
// ---------------------------------------------------------------------------

/// Extract q = f / d^p near an endpoint, extrapolating the 0/0 endpoint node.
/// Returns q at node indices 0..n_needed counted from the endpoint inward.
fn q_near_endpoint(
    values: &[f64],
    grid: &Grid,
    endpoint: Endpoint,
    p: f64,
    n_needed: usize,
) -> Vec<f64> {
    q_near_endpoint_mul(values, grid, endpoint, p, n_needed, |_| 1.0)
}

/// Like [`q_near_endpoint`] but extracts q * mul(t) with `mul` a smooth factor
/// absorbed into the data (used to fold trig weights into weighted panels).
fn q_near_endpoint_mul(
    values: &[f64],
    grid: &Grid,
    endpoint: Endpoint,
    p: f64,
    n_needed: usize,
    mul: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let m = grid.len();
    let idx = |k: usize| match endpoint {
        Endpoint::Left => k,
        Endpoint::Right => m - 1 - k,
    };
    let mut q = vec![0.0; n_needed];
    for k in 1..n_needed {
        let d = k as f64 * grid.step();
        q[k] = values[idx(k)] / d.powf(p) * mul(grid.node(idx(k)));
    }
    // cubic extrapolation to the endpoint node
    q[0] = 4.0 * q[1] - 6.0 * q[2] + 4.0 * q[3] - q[4];
    q
}

// 6-point interior panel rule (degree 5): int_{x_j}^{x_{j+1}} f over the
// stencil {j-2, .., j+3}; the composite error is O(h^6), which keeps the
// resonant error of oscillatory data products below 1e-9 at the default grid
const SEXTIC_PANEL: [f64; 6] = [
    11.0 / 1440.0,
    -93.0 / 1440.0,
    802.0 / 1440.0,
    802.0 / 1440.0,
    -93.0 / 1440.0,
    11.0 / 1440.0,
];

/// Integrate the data `values` over [0, 1] with optional multiplicative
/// endpoint powers `t^left_p` near 0 and `(1-t)^right_p` near 1.
pub fn integrate_values(grid: &Grid, values: &[f64], left_p: f64, right_p: f64) -> f64 {
    let panels = grid.panels();
    let h = grid.step();
    let jw = WEIGHTED_PANELS.min(panels / 2 - 1);
    let left_w = if left_p > 0.0 { jw } else { 0 };
    let right_w = if right_p > 0.0 { jw } else { 0 };

    let mut acc = 0.0;
    // plain middle panels: 6-point rule where the stencil fits, cubic else
    for j in left_w..panels - right_w {
        if j >= 2 && j + 3 < values.len() {
            let f = &values[j - 2..j + 4];
            let mut p = 0.0;
            for (w, v) in SEXTIC_PANEL.iter().zip(f) {
                p += w * v;
            }
            acc += h * p;
        } else {
            let a = cubic_coeffs(values, j, panels);
            acc += h * (a[0] + a[1] / 2.0 + a[2] / 3.0 + a[3] / 4.0);
        }
    }
    if left_w > 0 {
        acc += weighted_end(grid, values, Endpoint::Left, left_p, left_w);
    }
    if right_w > 0 {
        acc += weighted_end(grid, values, Endpoint::Right, right_p, right_w);
    }
    acc
}

/// Sum over the `jw` panels adjacent to `endpoint` of the exact integral of
/// d^p times the cubic interpolant of q.
fn weighted_end(grid: &Grid, values: &[f64], endpoint: Endpoint, p: f64, jw: usize) -> f64 {
    weighted_end_mul(grid, values, endpoint, p, jw, |_| 1.0)
}

/// Weighted endpoint panels with a smooth multiplier folded into q.
fn weighted_end_mul(
    grid: &Grid,
    values: &[f64],
    endpoint: Endpoint,
    p: f64,
    jw: usize,
    mul: impl Fn(f64) -> f64,
) -> f64 {
    let h = grid.step();
    let q = q_near_endpoint_mul(values, grid, endpoint, p, jw + 4, mul);
    // in the endpoint-inward coordinate, panels are [k, k+1]*h for k=0..jw,
    // and q is interpolated on the same one-sided grid; integrate
    // (w)^p * cubic(q)(w) with w the scaled distance from the endpoint.
    let panels_q = q.len() - 1;
    let mut acc = 0.0;
    for k in 0..jw {
        let a = cubic_coeffs(&q, k, panels_q);
        // moments M_r = int_k^{k+1} w^{p+r} dw of the local poly in xi = w - k:
        // xi^r -> sum over binomial expansion
        let kf = k as f64;
        let lo = kf.powf(p + 1.0);
        let hi = (kf + 1.0).powf(p + 1.0);
        let mut mom = [0.0; 4]; // int w^{p+r}
        let mut lo_r = lo;
        let mut hi_r = hi;
        for (r, m) in mom.iter_mut().enumerate() {
            *m = (hi_r - lo_r) / (p + 1.0 + r as f64);
            lo_r *= kf;
            hi_r *= kf + 1.0;
        }
        // xi^s = (w - k)^s expanded in w
        let mut panel = 0.0;
        for (s, &as_) in a.iter().enumerate() {
            // (w-k)^s = sum_r C(s,r) w^r (-k)^{s-r}
            let mut term = 0.0;
            for (r, m) in mom.iter().enumerate().take(s + 1) {
                term += binom(s, r) * (-kf).powi((s - r) as i32) * m;
            }
            panel += as_ * term;
        }
        acc += panel;
    }
    acc * h.powf(p + 1.0)
}

#[inline]
fn binom(n: usize, k: usize) -> f64 {
    const TABLE: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    TABLE[n][k]
}

fn exponents_of(f: &GridFunction) -> (f64, f64) {
    match f.singular_exponent() {
        Some(SingularExponent {
            endpoint: Endpoint::Left,
            exponent,
        }) => (exponent, 0.0),
        Some(SingularExponent {
            endpoint: Endpoint::Right,
            exponent,
        }) => (0.0, exponent),
        None => (0.0, 0.0),
    }
}

/// Integral of a grid function over [0, 1], honoring its endpoint metadata.
pub fn integrate(f: &GridFunction) -> f64 {
    let (lp, rp) = exponents_of(f);
    integrate_values(f.grid(), f.values(), lp, rp)
}

/// L2 inner product of two grid functions on the same grid.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch(
            "inner product across different grids".into(),
        ));
    }
    let vals: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .collect();
    let (lf, rf) = exponents_of(f);
    let (lg, rg) = exponents_of(g);
    Ok(integrate_values(f.grid(), &vals, lf + lg, rf + rg))
}

// ---------------------------------------------------------------------------
// Fractional integral transform (left); right is its grid reflection
// ---------------------------------------------------------------------------

/// Convolution weights W[D][k] = int_{D-1}^{D} w^{alpha-1} (D - w)^k dw,
/// computed stably via the binomial series of (1 - v/D)^{alpha-1}.
fn conv_weights(alpha: f64, max_d: usize) -> Vec<[f64; 4]> {
    let mut w = vec![[0.0; 4]; max_d + 1];
    // D = 1: exact Beta moments
    for (k, v) in w[1].iter_mut().enumerate() {
        *v = beta(alpha, k as f64 + 1.0);
    }
    for (d, wd) in w.iter_mut().enumerate().skip(2) {
        let df = d as f64;
        let lead = df.powf(alpha - 1.0);
        // int_0^1 (D-v)^{alpha-1} v^k dv = D^{alpha-1} sum_r c_r D^{-r} / (k+r+1)
        // with c_r the binomial series coefficients of (1-x)^{alpha-1}
        let mut c = 1.0f64;
        let mut dinv_r = 1.0f64;
        let mut acc = [0.0f64; 4];
        for r in 0..70 {
            let rf = r as f64;
            let term_base = c * dinv_r;
            for (k, a) in acc.iter_mut().enumerate() {
                *a += term_base / (k as f64 + rf + 1.0);
            }
            if term_base.abs() < 1e-17 {
                break;
            }
            // next coefficient of (1-x)^{alpha-1}: c_{r+1} = c_r * (r+1-alpha)/(r+1)
            c *= (rf + 1.0 - alpha) / (rf + 1.0);
            dinv_r /= df;
        }
        for (v, a) in wd.iter_mut().zip(&acc) {
            *v = lead * a;
        }
    }
    w
}

/// Core of I^alpha_{0+}: values of the transform at every grid node.
/// `left_p` is the input's multiplicative power at 0 (0.0 when untagged).
fn frac_left_values(grid: &Grid, values: &[f64], left_p: f64, alpha: f64) -> Vec<f64> {
    let mlen = grid.len();
    let panels = grid.panels();
    let h = grid.step();
    let ga = gamma(alpha);
    let w = conv_weights(alpha, panels);

    // per-panel cubic coefficients of the raw data
    let coeffs: Vec<[f64; 4]> = (0..panels)
        .map(|j| cubic_coeffs(values, j, panels))
        .collect();

    let has_left = left_p > 0.0;
    let jw = if has_left {
        WEIGHTED_PANELS.min(panels / 2)
    } else {
        0
    };
    // on very small grids the Maclaurin branch covers every node
    let small_x = SMALL_X_NODES.min(mlen - 1);
    let q = if has_left {
        q_near_endpoint(
            values,
            grid,
            Endpoint::Left,
            left_p,
            (jw + 4).max(small_x + 1).min(mlen),
        )
    } else {
        Vec::new()
    };

    let halpha = h.powf(alpha);
    let out: Vec<f64> = (0..mlen)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let x = grid.node(i);
            if has_left && i <= small_x {
                // Maclaurin branch: fit a cubic to q on [0, x], use exact
                // Beta moments int_0^x (x-t)^{alpha-1} t^{p+k} dt
                return maclaurin_value(&q, grid, left_p, alpha, i) / ga;
            }
            let mut acc = 0.0;
            let j_start = if has_left { jw.min(i) } else { 0 };
            for (j, a) in coeffs.iter().enumerate().take(i).skip(j_start) {
                let wd = &w[i - j];
                acc += a[0] * wd[0] + a[1] * wd[1] + a[2] * wd[2] + a[3] * wd[3];
            }
            let mut val = halpha * acc;
            if has_left && j_start > 0 {
                val += left_weighted_part(&q, grid, left_p, alpha, i, j_start);
            }
            // i == panels: x == 1 exactly; nothing special, loop covered all panels
            let _ = x;
            val / ga
        })
        .collect();
    out
}

/// Contribution of the first `jw` panels when the input carries t^p:
/// exact t^{p+r} moments against the cubic of q(t) * (x-t)^{alpha-1}.
fn left_weighted_part(q: &[f64], grid: &Grid, p: f64, alpha: f64, i: usize, jw: usize) -> f64 {
    let h = grid.step();
    let x_over_h = i as f64;
    // q~ nodes: q_k * ((i-k) h)^{alpha-1} for k = 0..jw+3
    let n_nodes = jw + 4;
    let mut qt = vec![0.0; n_nodes];
    for (k, v) in qt.iter_mut().enumerate() {
        *v = q[k] * ((x_over_h - k as f64) * h).powf(alpha - 1.0);
    }
    let panels_q = n_nodes - 1;
    let mut acc = 0.0;
    for k in 0..jw {
        let a = cubic_coeffs(&qt, k, panels_q);
        let kf = k as f64;
        let lo = kf.powf(p + 1.0);
        let hi = (kf + 1.0).powf(p + 1.0);
        let mut mom = [0.0; 4];
        let mut lo_r = lo;
        let mut hi_r = hi;
        for (r, m) in mom.iter_mut().enumerate() {
            *m = (hi_r - lo_r) / (p + 1.0 + r as f64);
            lo_r *= kf;
            hi_r *= kf + 1.0;
        }
        for (s, &as_) in a.iter().enumerate() {
            let mut term = 0.0;
            for (r, m) in mom.iter().enumerate().take(s + 1) {
                term += binom(s, r) * (-kf).powi((s - r) as i32) * m;
            }
            acc += as_ * term;
        }
    }
    acc * h.powf(p + 1.0)
}

/// Small-x branch: int_0^x (x-t)^{alpha-1} t^p q(t) dt with q fitted by a
/// cubic through 4 spread nodes of [0, x_i].
fn maclaurin_value(q: &[f64], grid: &Grid, p: f64, alpha: f64, i: usize) -> f64 {
    let h = grid.step();
    let x = grid.node(i);
    // spread node indices across [0, i]
    let (n0, n1, n2, n3) = if i >= 3 {
        (0, i.div_ceil(3), (2 * i + 1) / 3, i)
    } else {
        (0, 1, 2, 3)
    };
    let ts = [n0 as f64 * h, n1 as f64 * h, n2 as f64 * h, n3 as f64 * h];
    let qs = [q[n0], q[n1], q[n2], q[n3]];
    // Newton -> monomial coefficients of the cubic through (ts, qs)
    let c = cubic_through(&ts, &qs);
    let mut acc = 0.0;
    for (k, ck) in c.iter().enumerate() {
        acc += ck * x.powf(alpha + p + k as f64) * beta(alpha, p + k as f64 + 1.0);
    }
    acc
}

/// Monomial coefficients of the cubic interpolating (xs, ys), xs distinct.
fn cubic_through(xs: &[f64; 4], ys: &[f64; 4]) -> [f64; 4] {
    // divided differences
    let mut dd = *ys;
    for level in 1..4 {
        for r in (level..4).rev() {
            dd[r] = (dd[r] - dd[r - 1]) / (xs[r] - xs[r - level]);
        }
    }
    // Newton to monomial: p(t) = dd0 + dd1 (t-x0) + dd2 (t-x0)(t-x1) + ...
    let mut c = [0.0f64; 4];
    c[0] = dd[3];
    for r in (0..3).rev() {
        // multiply by (t - xs[r]) and add dd[r]
        let mut nc = [0.0f64; 4];
        for k in (0..3).rev() {
            nc[k + 1] += c[k];
        }
        for k in 0..4 {
            nc[k] -= xs[r] * c[k];
        }
        nc[0] += dd[r];
        c = nc;
    }
    c
}

/// Left Riemann-Liouville fractional integral of grid data.
pub fn frac_left(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    let (lp, _) = exponents_of(f);
    let vals = frac_left_values(f.grid(), f.values(), lp, alpha);
    Ok(GridFunction::new(f.grid().clone(), vals)?
        .with_singularity(SingularExponent::left(alpha + lp)))
}

/// Right Riemann-Liouville fractional integral: reflection of the left one.
pub fn frac_right(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    let (_, rp) = exponents_of(f);
    let mut rev: Vec<f64> = f.values().to_vec();
    rev.reverse();
    let mut vals = frac_left_values(f.grid(), &rev, rp, alpha);
    vals.reverse();
    Ok(GridFunction::new(f.grid().clone(), vals)?
        .with_singularity(SingularExponent::right(alpha + rp)))
}

// ---------------------------------------------------------------------------
// Trigonometric power moments C/S(p, omega, L) = int_0^L u^{p-1} cos/sin(w u)
// ---------------------------------------------------------------------------

// inverse Vandermonde for the 6-point stencil at offsets -2..3, built once
fn quintic_stencil_matrix() -> &'static [[f64; 6]; 6] {
    static MAT: OnceLock<[[f64; 6]; 6]> = OnceLock::new();
    MAT.get_or_init(|| {
        let mut v = nalgebra::DMatrix::<f64>::zeros(6, 6);
        for (r, xi) in (-2..=3).enumerate() {
            let mut p = 1.0;
            for k in 0..6 {
                v[(r, k)] = p;
                p *= xi as f64;
            }
        }
        let inv = v.try_inverse().expect("stencil Vandermonde invertible");
        let mut out = [[0.0; 6]; 6];
        for k in 0..6 {
            for r in 0..6 {
                out[k][r] = inv[(k, r)];
            }
        }
        out
    })
}

/// Filon-type integration of grid data against cos/sin(omega t): integrates
/// the data's quintic interpolant exactly against the oscillation, so
/// accuracy is O(h^6) independent of omega. Endpoint power metadata is
/// honored by absorbing the (locally smooth) trig factor into the weighted
/// panels. Returns (int f cos(omega t) dt, int f sin(omega t) dt).
pub fn trig_integral(f: &GridFunction, omega: f64) -> (f64, f64) {
    let grid = f.grid();
    let values = f.values();
    let panels = grid.panels();
    let h = grid.step();
    let theta = omega * h;
    debug_assert!(
        theta.abs() <= 6.5,
        "basis frequency exceeds grid resolution"
    );
    let (lp, rp) = exponents_of(f);
    let jw = WEIGHTED_PANELS.min(panels / 2 - 1);
    let left_w = if lp > 0.0 { jw } else { 0 };
    let right_w = if rp > 0.0 { jw } else { 0 };

    // A_k(theta) = int_0^1 xi^k cos(theta xi) dxi, B_k the sin analogue
    let (a_mom, b_mom) = filon_panel_moments(theta);
    let quintic = quintic_stencil_matrix();
    let (mut acc_c, mut acc_s) = (0.0, 0.0);
    for j in left_w..panels - right_w {
        let (mut pc, mut ps) = (0.0, 0.0);
        if j >= 2 && j + 3 < values.len() {
            let f6 = &values[j - 2..j + 4];
            for k in 0..6 {
                let row = &quintic[k];
                let mut a = 0.0;
                for r in 0..6 {
                    a += row[r] * f6[r];
                }
                pc += a * a_mom[k];
                ps += a * b_mom[k];
            }
        } else {
            let a = cubic_coeffs(values, j, panels);
            for k in 0..4 {
                pc += a[k] * a_mom[k];
                ps += a[k] * b_mom[k];
            }
        }
        let (sj, cj) = (omega * grid.node(j)).sin_cos();
        acc_c += h * (cj * pc - sj * ps);
        acc_s += h * (sj * pc + cj * ps);
    }
    if left_w > 0 {
        acc_c += weighted_end_mul(grid, values, Endpoint::Left, lp, left_w, |t| {
            (omega * t).cos()
        });
        acc_s += weighted_end_mul(grid, values, Endpoint::Left, lp, left_w, |t| {
            (omega * t).sin()
        });
    }
    if right_w > 0 {
        acc_c += weighted_end_mul(grid, values, Endpoint::Right, rp, right_w, |t| {
            (omega * t).cos()
        });
        acc_s += weighted_end_mul(grid, values, Endpoint::Right, rp, right_w, |t| {
            (omega * t).sin()
        });
    }
    (acc_c, acc_s)
}

/// Series evaluation of A_k(theta), B_k(theta) for k = 0..5; converges fast
/// for the panel phases theta <= ~6 that a resolved grid produces.
fn filon_panel_moments(theta: f64) -> ([f64; 6], [f64; 6]) {
    let mut a = [0.0; 6];
    let mut b = [0.0; 6];
    let t2 = theta * theta;
    for k in 0..6 {
        let kf = k as f64;
        let mut term_c = 1.0f64; // theta^{2m} / (2m)!
        let mut term_s = theta; // theta^{2m+1} / (2m+1)!
        for m in 0..44 {
            let mf = 2.0 * m as f64;
            a[k] += term_c / (kf + mf + 1.0);
            b[k] += term_s / (kf + mf + 2.0);
            term_c *= -t2 / ((mf + 1.0) * (mf + 2.0));
            term_s *= -t2 / ((mf + 2.0) * (mf + 3.0));
            if term_c.abs() < 1e-18 && term_s.abs() < 1e-18 {
                break;
            }
        }
    }
    (a, b)
}

/// Taylor zone boundary in the phase variable omega * u.
const TRIG_TAYLOR_PHASE: f64 = 6.0;
/// Target phase advance per Gauss-Legendre panel.
const TRIG_PANEL_PHASE: f64 = 1.5;

/// (C, S) at a single endpoint, for p > 0.
pub fn trig_power_point(p: f64, omega: f64, l: f64) -> (f64, f64) {
    debug_assert!(p > 0.0);
    if l <= 0.0 {
        return (0.0, 0.0);
    }
    let om = omega.abs();
    let sign = if omega < 0.0 { -1.0 } else { 1.0 };
    if om * l <= TRIG_TAYLOR_PHASE {
        let (c, s) = trig_power_taylor(p, om, l);
        return (c, sign * s);
    }
    let u_t = TRIG_TAYLOR_PHASE / om;
    let (mut c, mut s) = trig_power_taylor(p, om, u_t);
    let rule = gl12();
    let n_panels = ((l - u_t) * om / TRIG_PANEL_PHASE).ceil() as usize;
    let width = (l - u_t) / n_panels as f64;
    for k in 0..n_panels {
        let a = u_t + k as f64 * width;
        let b = a + width;
        c += rule.integrate(a, b, |u| u.powf(p - 1.0) * (om * u).cos());
        s += rule.integrate(a, b, |u| u.powf(p - 1.0) * (om * u).sin());
    }
    (c, sign * s)
}

/// Series evaluation valid for omega * l <= ~6.3.
fn trig_power_taylor(p: f64, omega: f64, l: f64) -> (f64, f64) {
    if omega == 0.0 {
        return (l.powf(p) / p, 0.0);
    }
    let z2 = (omega * l) * (omega * l);
    let lp = l.powf(p);
    // C = l^p sum_m (-1)^m (wl)^{2m} / ((2m)! (p+2m))
    // S = l^p (wl) sum_m (-1)^m (wl)^{2m} / ((2m+1)! (p+2m+1))
    let mut c = 0.0;
    let mut s = 0.0;
    let mut tc = 1.0f64; // (wl)^{2m} / (2m)!
    let mut ts = omega * l; // (wl)^{2m+1} / (2m+1)!
    for m in 0..60 {
        let mf = 2.0 * m as f64;
        c += tc / (p + mf);
        s += ts / (p + mf + 1.0);
        tc *= -z2 / ((mf + 1.0) * (mf + 2.0));
        ts *= -z2 / ((mf + 2.0) * (mf + 3.0));
        if tc.abs() < 1e-18 && ts.abs() < 1e-18 {
            break;
        }
    }
    (lp * c, lp * s)
}

/// Cumulative (C_i, S_i) at every grid node u_i = i * h, shared panel sweep.
pub fn trig_power_grid(p: f64, omega: f64, grid: &Arc<Grid>) -> (Vec<f64>, Vec<f64>) {
    let mlen = grid.len();
    let h = grid.step();
    let om = omega.abs();
    let mut c = vec![0.0; mlen];
    let mut s = vec![0.0; mlen];
    if om == 0.0 {
        for (i, v) in c.iter_mut().enumerate().skip(1) {
            *v = grid.node(i).powf(p) / p;
        }
        return (c, s);
    }
    let rule = gl12();
    let sub = (om * h / TRIG_PANEL_PHASE).ceil().max(1.0) as usize;
    for i in 1..mlen {
        let u = grid.node(i);
        if om * u <= TRIG_TAYLOR_PHASE {
            let (ci, si) = trig_power_taylor(p, om, u);
            c[i] = ci;
            s[i] = si;
        } else {
            let (mut ci, mut si) = (c[i - 1], s[i - 1]);
            if om * grid.node(i - 1) <= TRIG_TAYLOR_PHASE {
                // previous node was in the Taylor zone; rebuild it exactly
                let (cp, sp) = trig_power_taylor(p, om, grid.node(i - 1));
                ci = cp;
                si = sp;
            }
            let a0 = grid.node(i - 1);
            let width = (u - a0) / sub as f64;
            for k in 0..sub {
                let a = a0 + k as f64 * width;
                let b = a + width;
                ci += rule.integrate(a, b, |t| t.powf(p - 1.0) * (om * t).cos());
                si += rule.integrate(a, b, |t| t.powf(p - 1.0) * (om * t).sin());
            }
            c[i] = ci;
            s[i] = si;
        }
    }
    if omega < 0.0 {
        for v in &mut s {
            *v = -*v;
        }
    }
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn default_gf(f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(Grid::default_grid(), f).unwrap()
    }

    #[test]
    fn legendre_integrates_cos() {
        let rule = GaussRule::legendre(12);
        let v = rule.integrate(0.0, 1.0, f64::cos);
        assert_relative_eq!(v, 1f64.sin(), max_relative = 1e-14);
    }

    #[test]
    fn jacobi_handles_endpoint_singularities() {
        // int_0^1 (1-x)^(-1/2) dx = 2
        let rule = GaussRule::jacobi(8, -0.5, 0.0).unwrap();
        let v = rule.integrate(0.0, 1.0, |_| 1.0);
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        // int_0^1 (1-x)^(-1/4) x dx = B(2, 3/4)
        let rule = GaussRule::jacobi(10, -0.25, 0.0).unwrap();
        let v = rule.integrate(0.0, 1.0, |x| x);
        assert_relative_eq!(v, beta(2.0, 0.75), max_relative = 1e-13);
        // int_0^1 x^(-1/2) cos(x) dx (singularity at the lower end);
        // reference frozen from the alternating series 2 sum (-1)^m / ((2m)! (4m+1))
        let rule = GaussRule::jacobi(16, 0.0, -0.5).unwrap();
        let v = rule.integrate(0.0, 1.0, f64::cos);
        assert_relative_eq!(v, 1.809_048_475_800_544, max_relative = 1e-12);
        let oracle = graded_integral(&|x: f64| x.powf(-0.5) * x.cos(), 0.0, 1.0, true, false);
        assert_relative_eq!(v, oracle, max_relative = 1e-7);
    }

    #[test]
    fn plain_cubic_integration_fourth_order() {
        let f = default_gf(|x| (2.5 * x).sin() + x * x);
        let exact = (1.0 - (2.5f64).cos()) / 2.5 + 1.0 / 3.0;
        assert_abs_diff_eq!(integrate(&f), exact, epsilon = 1e-11);
    }

    #[test]
    fn weighted_integration_right_power() {
        // f = (1-x)^(3/4) cos(x), tagged; compare against graded oracle.
        // the untagged tail panels contribute O(h^{p+1}) with a small constant
        let f = default_gf(|x| (1.0 - x).powf(0.75) * x.cos())
            .with_singularity(SingularExponent::right(0.75));
        let oracle = graded_integral(
            &|x: f64| (1.0 - x).powf(0.75) * x.cos(),
            0.0,
            1.0,
            false,
            true,
        );
        assert_abs_diff_eq!(integrate(&f), oracle, epsilon = 3e-9);
    }

    #[test]
    fn weighted_integration_left_power() {
        let f =
            default_gf(|x| x.powf(0.6) * (1.0 + x)).with_singularity(SingularExponent::left(0.6));
        let exact = 1.0 / 1.6 + 1.0 / 2.6;
        assert_abs_diff_eq!(integrate(&f), exact, epsilon = 3e-9);
    }

    #[test]
    fn weighted_integration_gram_exponent_is_tight() {
        // p = 3/2 is the exponent class of the h_n Gram integrands
        let f =
            default_gf(|x| x.powf(1.5) * (2.0 - x)).with_singularity(SingularExponent::left(1.5));
        let exact = 2.0 / 2.5 - 1.0 / 3.5;
        assert_abs_diff_eq!(integrate(&f), exact, epsilon = 1e-10);
    }

    #[test]
    fn inner_product_combines_exponents() {
        let f =
            default_gf(|x| (1.0 - x).powf(0.75)).with_singularity(SingularExponent::right(0.75));
        let g = f.clone();
        // int (1-x)^{3/2} = 2/5
        assert_abs_diff_eq!(inner_product(&f, &g).unwrap(), 0.4, epsilon = 1e-11);
    }

    #[test]
    fn conv_weights_match_direct_integrals() {
        let alpha = 0.7;
        let w = conv_weights(alpha, 50);
        for &d in &[1usize, 2, 3, 10, 50] {
            for (k, &wk) in w[d].iter().enumerate() {
                let oracle = graded_integral(
                    &|v: f64| (d as f64 - v).powf(alpha - 1.0) * v.powi(k as i32),
                    0.0,
                    1.0,
                    false,
                    d == 1,
                );
                assert_relative_eq!(wk, oracle, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn frac_left_of_one_is_power() {
        // I^alpha(1)(x) = x^alpha / Gamma(alpha+1)
        for &alpha in &[0.3, 0.5, 0.75, 1.0] {
            let f = default_gf(|_| 1.0);
            let out = frac_left(&f, alpha).unwrap();
            let ga1 = gamma(alpha + 1.0);
            for &i in &[1usize, 5, 24, 25, 100, 511, 1023] {
                let x = out.grid().node(i);
                assert_relative_eq!(
                    out.values()[i],
                    x.powf(alpha) / ga1,
                    max_relative = 1e-9,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn frac_left_of_cos_matches_oracle() {
        let alpha = 0.75;
        let f = default_gf(|x| (3.0 * x).cos());
        let out = frac_left(&f, alpha).unwrap();
        for &i in &[37usize, 300, 1023] {
            let x = out.grid().node(i);
            let oracle = graded_integral(
                &|t: f64| (x - t).powf(alpha - 1.0) * (3.0 * t).cos(),
                0.0,
                x,
                false,
                true,
            ) / gamma(alpha);
            assert_relative_eq!(out.values()[i], oracle, max_relative = 1e-9);
        }
    }

    #[test]
    fn frac_semigroup_with_left_metadata() {
        // I^a(I^b 1) = x^{a+b}/Gamma(a+b+1): second pass consumes left metadata
        let (a, b) = (0.5, 0.3);
        let f = default_gf(|_| 1.0);
        let inner = frac_left(&f, b).unwrap();
        assert_eq!(inner.singular_exponent(), Some(SingularExponent::left(0.3)));
        let out = frac_left(&inner, a).unwrap();
        let g = gamma(a + b + 1.0);
        for &i in &[3usize, 17, 24, 25, 26, 60, 512, 1023] {
            let x = out.grid().node(i);
            // transition nodes just past the Maclaurin branch carry ~1e-8
            assert_relative_eq!(
                out.values()[i],
                x.powf(a + b) / g,
                max_relative = 5e-7,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn frac_left_with_metadata_on_tiny_grid() {
        // the Maclaurin branch must cover every node when the grid is small
        let grid = Grid::new(12).unwrap();
        let f = GridFunction::from_fn(grid, |t| t.powf(0.4))
            .unwrap()
            .with_singularity(SingularExponent::left(0.4));
        let out = frac_left(&f, 0.5).unwrap();
        let factor = gamma(1.4) / gamma(1.9);
        for &i in &[1usize, 6, 11] {
            let x = out.grid().node(i);
            assert_relative_eq!(out.values()[i], factor * x.powf(0.9), max_relative = 1e-4);
        }
    }

    #[test]
    fn frac_right_mirrors_left() {
        // I^alpha_{1-}(1)(x) = (1-x)^alpha / Gamma(alpha+1)
        let alpha = 0.75;
        let f = default_gf(|_| 1.0);
        let out = frac_right(&f, alpha).unwrap();
        let ga1 = gamma(alpha + 1.0);
        for &i in &[0usize, 100, 999, 1023] {
            let x = out.grid().node(i);
            assert_relative_eq!(
                out.values()[i],
                (1.0 - x).powf(alpha) / ga1,
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
        assert_eq!(out.values()[1023], 0.0);
    }

    #[test]
    fn trig_power_point_matches_graded_oracle() {
        let (p, om, l) = (0.75, 37.2, 0.83);
        let (c, s) = trig_power_point(p, om, l);
        let co = graded_integral(
            &|u: f64| u.powf(p - 1.0) * (om * u).cos(),
            0.0,
            l,
            true,
            false,
        );
        let so = graded_integral(
            &|u: f64| u.powf(p - 1.0) * (om * u).sin(),
            0.0,
            l,
            true,
            false,
        );
        assert_relative_eq!(c, co, max_relative = 1e-9, epsilon = 1e-12);
        assert_relative_eq!(s, so, max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn trig_power_grid_consistent_with_point() {
        let grid = Grid::new(256).unwrap();
        let (p, om) = (1.75, 101.3);
        let (c, s) = trig_power_grid(p, om, &grid);
        for &i in &[1usize, 7, 40, 128, 255] {
            let (cp, sp) = trig_power_point(p, om, grid.node(i));
            assert_relative_eq!(c[i], cp, max_relative = 1e-9, epsilon = 1e-13);
            assert_relative_eq!(s[i], sp, max_relative = 1e-9, epsilon = 1e-13);
        }
    }

    #[test]
    fn filon_trig_integral_oscillation_independent() {
        // int_0^1 x^2 cos(wx) dx and the sin analogue have closed forms
        for &om in &[0.0f64, 3.7, 150.0, 402.1] {
            let f = default_gf(|x| x * x);
            let (c, s) = trig_integral(&f, om);
            let (exc, exs) = if om == 0.0 {
                (1.0 / 3.0, 0.0)
            } else {
                let (sn, cs) = om.sin_cos();
                (
                    ((om * om - 2.0) * sn + 2.0 * om * cs) / om.powi(3),
                    (2.0 * om * sn - (om * om - 2.0) * cs - 2.0) / om.powi(3),
                )
            };
            assert_abs_diff_eq!(c, exc, epsilon = 1e-11);
            assert_abs_diff_eq!(s, exs, epsilon = 1e-11);
        }
    }

    #[test]
    fn filon_respects_endpoint_metadata() {
        // f = x^{3/4}, int_0^1 x^{3/4} cos(w x) dx = C(7/4, w, 1)
        let om = 33.0;
        let f = default_gf(|x| x.powf(0.75)).with_singularity(SingularExponent::left(0.75));
        let (c, s) = trig_integral(&f, om);
        let (cr, sr) = trig_power_point(1.75, om, 1.0);
        assert_abs_diff_eq!(c, cr, epsilon = 1e-9);
        assert_abs_diff_eq!(s, sr, epsilon = 1e-9);
    }

    #[test]
    fn trig_power_integration_by_parts_identity() {
        // C_{p+1} = L^p sin(wL)/w - (p/w) S_p ; S_{p+1} = -L^p cos(wL)/w + (p/w) C_p
        for &(p, om, l) in &[(0.6, 11.0, 1.0), (0.75, 97.39, 0.43), (1.75, 804.2, 0.97)] {
            let (c0, s0) = trig_power_point(p, om, l);
            let (c1, s1) = trig_power_point(p + 1.0, om, l);
            let lp = l.powf(p);
            assert_relative_eq!(
                c1,
                lp * (om * l).sin() / om - p / om * s0,
                max_relative = 1e-11,
                epsilon = 1e-14
            );
            assert_relative_eq!(
                s1,
                -lp * (om * l).cos() / om + p / om * c0,
                max_relative = 1e-11,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn trig_power_zero_frequency() {
        let (c, s) = trig_power_point(0.75, 0.0, 0.5);
        assert_relative_eq!(c, 0.5f64.powf(0.75) / 0.75, max_relative = 1e-14);
        assert_eq!(s, 0.0);
    }
}
