//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured quantities. Run with `cargo test --release --test
//! acceptance -- --nocapture` to see every line; runtime limits are asserted
//! in release builds only.
//!
//! Criteria 3 and 5 are implemented exactly as stated and are expected to
//! fail: the basis-truncation tail of the computable quantities exceeds the
//! stated tolerances (2.38% vs 2% for the Dirac-Parseval sum at N=256; the
//! beta = 0.4 trace-gap slope steepens to ~-0.46 against the [-0.35, -0.05]
//! window at N=128). The failure messages carry the analysis.

use std::sync::OnceLock;
use std::time::Instant;

use steinpath::fractional::{
    frac_integral_left, frac_integral_right, gauss_2f1, hs_norm, FracOrder,
};
use steinpath::grid::{Grid, GridFunction};
use steinpath::hilbert::{partial_trace, Embedding};
use steinpath::processes;
use steinpath::quad::{graded_integral, inner_product, GaussRule};
use steinpath::special::gamma_fn;
use steinpath::stein;
use steinpath::verify;

fn embedding_b25_n64() -> &'static Embedding {
    static E: OnceLock<Embedding> = OnceLock::new();
    E.get_or_init(|| Embedding::with_default_grid(0.25, 64).unwrap())
}

fn embedding_b25_n8() -> &'static Embedding {
    static E: OnceLock<Embedding> = OnceLock::new();
    E.get_or_init(|| Embedding::with_default_grid(0.25, 8).unwrap())
}

fn check_runtime(started: Instant, limit_secs: f64, criterion: &str) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("  [{criterion}] runtime {elapsed:.2} s (limit {limit_secs} s)");
    if cfg!(not(debug_assertions)) {
        assert!(
            elapsed < limit_secs,
            "{criterion}: runtime {elapsed:.2} s exceeded {limit_secs} s"
        );
    }
}

/// Independent double-integral oracle for the Hilbert-Schmidt norm:
/// sqrt( Gamma(alpha)^-2 * int_0^1 [ int_0^t (t-s)^(2 alpha - 2) ds ] dt ),
/// inner integral by Gauss-Jacobi with the kernel's exponent, outer by
/// graded composite Gauss-Legendre (the integrand is a bounded kink).
fn hs_norm_oracle(alpha: f64) -> f64 {
    let exponent = 2.0 * alpha - 2.0;
    let rule = GaussRule::jacobi(24, exponent, 0.0).unwrap();
    let inner = move |t: f64| rule.integrate(0.0, t, |_| 1.0);
    let outer = graded_integral(&inner, 0.0, 1.0, true, false);
    (outer / gamma_fn(alpha).unwrap().powi(2)).sqrt()
}

#[test]
fn criterion_01_hs_norm_closed_form_vs_quadrature_oracle() {
    let t0 = Instant::now();
    for &alpha in &[0.6, 0.75, 0.9, 1.0] {
        let closed = hs_norm(alpha).unwrap();
        let oracle = hs_norm_oracle(alpha);
        let rel = (closed - oracle).abs() / oracle;
        println!("  c_{alpha} closed {closed:.9} oracle {oracle:.9} rel {rel:.2e}");
        assert!(rel < 1e-6, "relative gap {rel} at alpha = {alpha}");
    }
    let c1 = hs_norm(1.0).unwrap();
    assert!((c1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    check_runtime(t0, 1.0, "criterion 1");
    println!("criterion 1 (hs norm vs double-integral oracle): PASS");
}

#[test]
fn criterion_02_semigroup_and_duality_identities() {
    let t0 = Instant::now();
    let grid = Grid::default_grid();
    assert_eq!(grid.len(), 1024);
    let f = GridFunction::from_fn(grid.clone(), |x| (2.3 * x + 0.4).cos()).unwrap();
    let g = GridFunction::from_fn(grid.clone(), |x| 0.3 + x * x).unwrap();

    for &(a, b) in &[(0.3, 0.4), (0.5, 0.5), (0.25, 0.6), (0.1, 0.9)] {
        let two = frac_integral_left(
            &frac_integral_left(&f, FracOrder::new(b).unwrap()).unwrap(),
            FracOrder::new(a).unwrap(),
        )
        .unwrap();
        let one = frac_integral_left(&f, FracOrder::new(a + b).unwrap()).unwrap();
        let worst = two
            .values()
            .iter()
            .zip(one.values())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max);
        println!("  semigroup ({a},{b}): sup deviation {worst:.2e}");
        assert!(worst < 1e-6, "semigroup deviation {worst} at ({a},{b})");
    }

    for &a in &[0.25, 0.5, 0.75] {
        let ord = FracOrder::new(a).unwrap();
        let lhs = inner_product(&f, &frac_integral_left(&g, ord).unwrap()).unwrap();
        let rhs = inner_product(&frac_integral_right(&f, ord).unwrap(), &g).unwrap();
        let dev = (lhs - rhs).abs();
        println!("  duality alpha={a}: |lhs - rhs| = {dev:.2e}");
        assert!(dev < 1e-6, "duality deviation {dev} at alpha = {a}");
    }
    check_runtime(t0, 5.0, "criterion 2");
    println!("criterion 2 (semigroup + duality at 1e-6, M = 1024): PASS");
}

#[test]
fn criterion_03_dirac_parseval_tail_at_n256() {
    let t0 = Instant::now();
    let (alpha, tau) = (0.75, 0.5);
    let basis = steinpath::fractional::FracBasis::new(
        FracOrder::new(alpha).unwrap(),
        steinpath::fractional::BasisSpec::cosine(256),
        Grid::default_grid(),
    )
    .unwrap();
    let closed = stein::dirac_norm(alpha, tau).unwrap();
    let mut sum = 0.0f64;
    let mut prev = -1.0f64;
    for n in 1..=256 {
        sum += basis.h_at(n, tau).unwrap().powi(2);
        assert!(sum >= prev, "partial sums must be nondecreasing");
        prev = sum;
    }
    let rel = (closed - sum) / closed;
    check_runtime(t0, 30.0, "criterion 3");
    println!(
        "criterion 3 (Dirac-Parseval at N=256, (alpha,tau)=(0.75,0.5)): \
         sum {sum:.6} closed {closed:.6} relative gap {:.3}% vs stated 2%",
        rel * 100.0
    );
    assert!(
        rel.abs() <= 0.02,
        "relative gap {:.4}% exceeds the stated 2%: the cosine-basis tail is \
         sum_(k>N) <(.-tau)^(alpha-1), e_k>^2 / Gamma(alpha)^2 ~ pi^(-3/2) sum_(k>N) k^(2 alpha-2) \
         ~ 2.4% at N = 256 and tau = 0.5 (any admissible orthonormal basis has the same \
         N^(1-2 alpha) rate; N ~ 470 or a 2.5% tolerance would pass). \
         Monotonicity holds; the tolerance is unattainable as stated.",
        rel * 100.0
    );
}

#[test]
fn criterion_04_gram_identity_two_paths() {
    let t0 = Instant::now();
    let e = embedding_b25_n64();
    let cov = e.covariance_matrix().unwrap();
    let gram = partial_trace(&e.poisson_family()).unwrap();
    let worst = cov.max_abs_entry_diff(&gram);
    check_runtime(t0, 60.0, "criterion 4");
    println!(
        "criterion 4 (partial_trace(H_1) vs covariance, beta=0.25, N=64): \
         max entry diff {worst:.2e} (tolerance 1e-8): {}",
        if worst < 1e-8 { "PASS" } else { "FAIL" }
    );
    assert!(worst < 1e-8, "entrywise disagreement {worst}");
}

#[test]
fn criterion_05_interp_certificates_and_slopes() {
    let t0 = Instant::now();
    let ms = [2usize, 4, 8, 16, 32];
    let mut all_dominated = true;
    let mut slope_results = Vec::new();
    for &beta in &[0.1, 0.25, 0.4] {
        let e = Embedding::with_default_grid(beta, 128).unwrap();
        let mut points = Vec::new();
        for &m in &ms {
            let r = stein::bound_interp(&e, m).unwrap();
            let cert = r.certificate.unwrap();
            let ok = cert <= r.closed_form_value;
            all_dominated &= ok;
            println!(
                "  beta={beta} m={m}: certificate {cert:.6} <= bound {:.6}: {ok}",
                r.closed_form_value
            );
            points.push((m as f64, 2.0 * cert)); // the trace gap itself
        }
        let fit = verify::rate_fit(&points).unwrap();
        let target = 2.0 * beta - 1.0;
        let ok = (fit.fitted_slope - target).abs() <= 0.15;
        println!(
            "  beta={beta}: slope {:.4} target {target:.2} +- 0.15: {}",
            fit.fitted_slope,
            if ok { "PASS" } else { "FAIL" }
        );
        slope_results.push((beta, fit.fitted_slope, ok));
    }
    check_runtime(t0, 120.0, "criterion 5");
    assert!(
        all_dominated,
        "a certificate exceeded its closed-form bound"
    );
    for (beta, slope, ok) in slope_results {
        assert!(
            ok,
            "criterion 5: slope {slope:.4} at beta = {beta} outside [{:.2}, {:.2}]. \
             The computable gap at truncation N=128 is gap_full(m) - tail_N + T_N(m) with \
             tail_N = c^2 - sum_(n<=N) ||h_n||^2 an m-independent offset (~0.48 at beta=0.4, \
             rate N^(2 beta - 1) in the basis size); subtracting a constant from a power law \
             steepens the measured log-log slope. Passing at beta = 0.4 would need N ~ 1e6. \
             The domination half of the criterion passes for all 15 (m, beta) pairs.",
            2.0 * beta - 1.0 - 0.15,
            2.0 * beta - 1.0 + 0.15,
        );
    }
    println!("criterion 5 (interp certificates + slopes): PASS");
}

#[test]
fn criterion_06_donsker_remainder_envelope() {
    let t0 = Instant::now();
    let beta = 0.25;
    let g2 = gamma_fn(1.0 - beta).unwrap().powi(2);
    for &m in &[4usize, 8, 16] {
        let norms_sq = stein::donsker_block_norms_sq(beta, m).unwrap();
        let remainder: f64 = norms_sq.iter().map(|v| v.powf(1.5)).sum();
        let envelope = (m as f64).powf(3.0 * beta - 3.5) / ((1.0 - beta) * g2);
        println!("  m={m}: sum ||H(j)||^3 = {remainder:.3e} <= envelope {envelope:.3e}");
        assert!(
            remainder <= envelope,
            "remainder {remainder} exceeds envelope {envelope} at m = {m}"
        );
    }
    check_runtime(t0, 60.0, "criterion 6");
    println!("criterion 6 (Donsker remainder under analytic envelope): PASS");
}

#[test]
fn criterion_07_poisson_char_gap_rate() {
    let t0 = Instant::now();
    let e = embedding_b25_n8();
    let theta = [1.0, 0.5, 0.25, 0.125];
    let lambdas = [1e2, 1e3, 1e4, 1e5];
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| (l, verify::char_gap_poisson(e, l, &theta).unwrap()))
        .collect();
    for (l, g) in &points {
        println!("  lambda {l:>8}: char gap {g:.6e}");
    }
    let fit = verify::rate_fit(&points).unwrap();
    check_runtime(t0, 120.0, "criterion 7");
    println!(
        "criterion 7 (char-gap slope {:.4} in -0.5 +- 0.1): {}",
        fit.fitted_slope,
        if (fit.fitted_slope + 0.5).abs() <= 0.1 {
            "PASS"
        } else {
            "FAIL"
        }
    );
    assert!(
        (fit.fitted_slope + 0.5).abs() <= 0.1,
        "slope {} outside -0.5 +- 0.1",
        fit.fitted_slope
    );
}

#[test]
fn criterion_08_third_cumulant_monte_carlo() {
    let t0 = Instant::now();
    let e = embedding_b25_n8();
    let mut v = vec![0.0; 8];
    v[0] = 0.8;
    v[1] = 0.6;
    let (est, oracle) = verify::third_cumulant_poisson(e, 50.0, &v, 100_000, 2024).unwrap();
    let dev = (est.mean - oracle).abs() / est.std_error;
    println!(
        "  MC {:.6} +- {:.6} vs oracle {oracle:.6}: {dev:.2} SE",
        est.mean, est.std_error
    );
    assert!(dev < verify::SE_TOLERANCE, "deviation {dev} SE");
    // oracle halves exactly when lambda quadruples
    let o1 = verify::third_cumulant_oracle(e, 50.0, &v).unwrap();
    let o4 = verify::third_cumulant_oracle(e, 200.0, &v).unwrap();
    let ratio = o4 / o1;
    println!("  oracle(4 lambda)/oracle(lambda) = {ratio:.12}");
    assert!((ratio - 0.5).abs() < 1e-12);
    check_runtime(t0, 120.0, "criterion 8");
    println!("criterion 8 (third-cumulant MC within 4 SE + exact scaling): PASS");
}

#[test]
fn criterion_09_embedded_covariances_four_processes() {
    let t0 = Instant::now();
    let e = embedding_b25_n8();
    let n_samples = 100_000;

    // Poisson, lambda = 50
    let mc = verify::covariance_mc(e.beta(), e.n_max(), n_samples, 101, |rng| {
        let p = processes::sample_poisson_with_rng(50.0, rng).unwrap();
        e.embed_step_path(&p).unwrap().coeffs
    })
    .unwrap();
    let s_beta = e.covariance_matrix().unwrap();
    let dev_poisson = mc.max_se_deviation(s_beta).unwrap();
    println!("  poisson lambda=50: max deviation {dev_poisson:.2} SE");
    assert!(dev_poisson < verify::SE_TOLERANCE);

    // interpolation, m = 8
    let interp_gram = partial_trace(&e.interp_family(8).unwrap()).unwrap();
    let mc = verify::covariance_mc(e.beta(), e.n_max(), n_samples, 103, |rng| {
        let p = processes::sample_interp_bm_with_rng(8, rng).unwrap();
        e.embed_piecewise_linear(&p).unwrap().coeffs
    })
    .unwrap();
    let dev_interp = mc.max_se_deviation(&interp_gram).unwrap();
    println!("  interpolation m=8: max deviation {dev_interp:.2} SE");
    assert!(dev_interp < verify::SE_TOLERANCE);

    // Donsker walk, m = 8 (same analytic Gram by the trace identity)
    let donsker_gram = partial_trace(&e.donsker_family(8).unwrap()).unwrap();
    let mc = verify::covariance_mc(e.beta(), e.n_max(), n_samples, 107, |rng| {
        let p = processes::sample_donsker_with_rng(8, rng).unwrap();
        e.embed_piecewise_linear(&p).unwrap().coeffs
    })
    .unwrap();
    let dev_donsker = mc.max_se_deviation(&donsker_gram).unwrap();
    println!("  donsker m=8: max deviation {dev_donsker:.2} SE");
    assert!(dev_donsker < verify::SE_TOLERANCE);

    // series Brownian motion: exact Gram of the truncated series is P P^T
    let series_gram = e.series_covariance().unwrap();
    let mc = verify::covariance_mc(e.beta(), e.n_max(), n_samples, 109, |rng| {
        let (_, emb) = processes::sample_bm_series_with_rng(e, rng).unwrap();
        emb.coeffs
    })
    .unwrap();
    let dev_series = mc.max_se_deviation(&series_gram).unwrap();
    println!("  series BM: max deviation {dev_series:.2} SE");
    assert!(dev_series < verify::SE_TOLERANCE);

    check_runtime(t0, 300.0, "criterion 9");
    println!("criterion 9 (four embedded covariances within 4 SE): PASS");
}

#[test]
fn criterion_10_fbm_kernel_identities() {
    let t0 = Instant::now();
    // K_{1/2} = 1 exactly on a (t, r) grid
    for i in 1..=16 {
        let t = i as f64 / 16.0;
        for j in 1..16 {
            let r = t * j as f64 / 16.0;
            if r < t {
                assert_eq!(
                    processes::kernel_kh(t, r, 0.5).unwrap(),
                    1.0,
                    "K_1/2({t},{r}) != 1"
                );
            }
        }
    }
    println!("  K_(1/2) = 1 exactly on the 16x16 grid");

    // dual-path 2F1 at H = 0.75
    let h = 0.75;
    let (a, b, c) = (0.5 - h, h - 0.5, h + 0.5);
    let series = |a: f64, b: f64, c: f64, z: f64| -> f64 {
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 0..400_000 {
            let kf = k as f64;
            term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum
    };
    // the kernel's exact spot case (t, r) = (1, 1/2), i.e. z = -1: the
    // direct series still converges there (c - a - b = 1/2 > 0) and must
    // match the transformed route
    let direct = series(a, b, c, -1.0);
    let via_impl = gauss_2f1(a, b, c, -1.0).unwrap();
    let rel_direct = ((via_impl - direct) / direct).abs();
    println!("  2F1 at z=-1: direct series {direct:.12} vs impl {via_impl:.12} rel {rel_direct:.2e}");
    assert!(rel_direct < 1e-8, "direct-series disagreement {rel_direct}");
    // for z < -1 the direct series diverges; the second Pfaff map
    // (on the b parameter) gives an independent convergent route
    let mut worst: f64 = rel_direct;
    for &z in &[-9.0f64, -4.0, -1.0, -0.2] {
        let via_impl = gauss_2f1(a, b, c, z).unwrap();
        let dual = (1.0 - z).powf(-b) * series(c - a, b, c, z / (z - 1.0));
        let rel = ((via_impl - dual) / dual).abs();
        assert!(rel.is_finite());
        worst = worst.max(rel);
        println!("  2F1 dual-path at z={z}: impl {via_impl:.12} pfaff-b {dual:.12} rel {rel:.2e}");
    }
    check_runtime(t0, 10.0, "criterion 10");
    assert!(worst < 1e-8, "dual-path disagreement {worst}");
    println!("criterion 10 (K_(1/2) = 1 exact, 2F1 dual-path 1e-8): PASS");
}

#[test]
fn criterion_11_poisson_discrepancy_ledger() {
    let t0 = Instant::now();
    let e = embedding_b25_n64();
    let r = stein::bound_poisson(e, 100.0).unwrap();
    let cert = r.certificate.unwrap();
    let stmt = r.extras["a_statement"];
    let proof = r.extras["a_proof"];
    println!(
        "  statement constant {stmt:.8}, proof constant {proof:.8} \
         (ratio {:.6} ~ 2^(3/2)), certificate {cert:.8}",
        proof / stmt
    );
    // both are emitted; the suite asserts only domination by the max
    assert!(r.extras.contains_key("a_statement") && r.extras.contains_key("a_proof"));
    assert!(
        cert <= stmt.max(proof) * (1.0 + 1e-8),
        "certificate {cert} above max(statement, proof) = {}",
        stmt.max(proof)
    );
    // the discrepancy itself, documented not hidden:
    assert!(
        (proof / stmt - 2f64.sqrt().powi(3)).abs() < 1e-10,
        "constant-factor ratio drifted from 2^(3/2)"
    );
    check_runtime(t0, 60.0, "criterion 11");
    println!("criterion 11 (discrepancy ledger, certificate <= max constant): PASS");
}
