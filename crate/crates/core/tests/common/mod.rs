//! Reference computations shared by the integration tests. None of them
//! call into the library's solvers or special functions.

#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Test-data generator, independent of the library's streams.
pub struct TestRng(ChaCha20Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(ChaCha20Rng::seed_from_u64(seed))
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    pub fn below(&mut self, k: usize) -> usize {
        (self.uniform() * k as f64) as usize
    }
}

/// `max Σ log(n p_i)` over the probability simplex subject to
/// `Σ p_i y_i = mu0`, by feasible-start Newton on the primal problem.
/// Returns `−2·max` (the log-likelihood ratio statistic). `mu0` must lie
/// strictly inside `(min y, max y)`.
pub fn primal_statistic(y: &[f64], mu0: f64) -> f64 {
    let n = y.len();
    let (imin, imax) = (0..n).fold((0, 0), |(a, b), i| {
        (if y[i] < y[a] { i } else { a }, if y[i] > y[b] { i } else { b })
    });
    let (lo, hi) = (y[imin], y[imax]);
    assert!(lo < mu0 && mu0 < hi, "mu0 outside the open hull");
    let mean = y.iter().sum::<f64>() / n as f64;

    // p = ε·uniform + (1 − ε)·(two-point mass on min and max) with the
    // two-point mean chosen so that the mixture has mean mu0.
    let mut eps = 0.5;
    let mut p = loop {
        let target = (mu0 - eps * mean) / (1.0 - eps);
        if lo < target && target < hi {
            let w = (target - lo) / (hi - lo);
            let mut p = vec![eps / n as f64; n];
            p[imin] += (1.0 - eps) * (1.0 - w);
            p[imax] += (1.0 - eps) * w;
            break p;
        }
        eps *= 0.5;
    };

    let objective = |p: &[f64]| -> f64 { p.iter().map(|q| -q.ln()).sum() };
    for _ in 0..500 {
        // KKT system for min −Σ log p s.t. [1ᵀ; yᵀ] p fixed: with H = diag(1/p²)
        // the step is dx = p − p²∘(Aᵀw) where (A P² Aᵀ) w = A p.
        let (mut s0, mut s1, mut s2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let q2 = p[i] * p[i];
            s0 += q2;
            s1 += q2 * y[i];
            s2 += q2 * y[i] * y[i];
            r0 += p[i];
            r1 += p[i] * y[i];
        }
        let det = s0 * s2 - s1 * s1;
        let w0 = (r0 * s2 - r1 * s1) / det;
        let w1 = (s0 * r1 - s1 * r0) / det;
        let dx: Vec<f64> = (0..n).map(|i| p[i] - p[i] * p[i] * (w0 + w1 * y[i])).collect();
        let decrement: f64 = (0..n).map(|i| (dx[i] / p[i]).powi(2)).sum();
        if decrement < 1e-24 {
            break;
        }
        let f0 = objective(&p);
        let slope = -decrement;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..n).map(|i| p[i] + t * dx[i]).collect();
            if trial.iter().all(|&q| q > 0.0) && objective(&trial) <= f0 + 0.25 * t * slope {
                p = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return -2.0 * p.iter().map(|q| (n as f64 * q).ln()).sum::<f64>();
            }
        }
    }
    -2.0 * p.iter().map(|q| (n as f64 * q).ln()).sum::<f64>()
}

/// For n = 3 the constraint set is a segment; maximize along it by golden
/// section on the weight of the first point.
pub fn three_point_statistic(y: [f64; 3], mu0: f64) -> f64 {
    // Given p0, solve p1 + p2 = 1 − p0 and p1 y1 + p2 y2 = mu0 − p0 y0.
    let rest = |p0: f64| -> Option<(f64, f64)> {
        let m = 1.0 - p0;
        let p1 = (mu0 - p0 * y[0] - m * y[2]) / (y[1] - y[2]);
        let p2 = m - p1;
        (p0 > 0.0 && p1 > 0.0 && p2 > 0.0).then_some((p1, p2))
    };
    let value = |p0: f64| match rest(p0) {
        Some((p1, p2)) => (3.0 * p0).ln() + (3.0 * p1).ln() + (3.0 * p2).ln(),
        None => f64::NEG_INFINITY,
    };
    // feasible p0 interval by scanning
    let grid = 20_000;
    let feasible: Vec<f64> = (1..grid)
        .map(|k| k as f64 / grid as f64)
        .filter(|&p0| rest(p0).is_some())
        .collect();
    let (mut a, mut b) = (
        feasible[0] - 1.0 / grid as f64,
        feasible[feasible.len() - 1] + 1.0 / grid as f64,
    );
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if value(c) > value(d) {
            b = d;
        } else {
            a = c;
        }
    }
    -2.0 * value(0.5 * (a + b))
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// ∫ₐᵇ f by composite Gauss–Legendre on `panels` equal panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        total += rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h;
    }
    total
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Standard normal density, written out independently.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed-form hull-violation probability for Exp(1) samples of size n:
/// every observation on one side of the mean 1.
pub fn exp_hull_violation(n: i32) -> f64 {
    let above = (-1f64).exp();
    above.powi(n) + (1.0 - above).powi(n)
}

/// Upper-tail binomial standard error.
pub fn binomial_se(p: f64, b: usize) -> f64 {
    (p * (1.0 - p) / b as f64).sqrt()
}
