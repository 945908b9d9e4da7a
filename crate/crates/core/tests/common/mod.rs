#![allow(dead_code, clippy::needless_range_loop)]

use ivbma_core::kernels::RngStream;
use ivbma_core::simulate::{generate, SimSpec};
use ivbma_core::{Dataset, Indicator};
use rand::Rng;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
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
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Joint log density of `(Y, X)` under the two-equation system, dropping the
/// `2π` constant.
pub fn log_joint_lik(data: &Dataset<f64>, rho: &[f64], lambda: &[f64], sigma: [f64; 3]) -> f64 {
    let (n, p, q) = (data.n(), data.p(), data.q());
    let [s11, s12, s22] = sigma;
    let det = s11 * s22 - s12 * s12;
    let (i11, i12, i22) = (s22 / det, -s12 / det, s11 / det);
    let mut quad = 0.0;
    for i in 0..n {
        let mut eps = data.y()[i] - rho[0] * data.x()[i];
        let mut eta = data.x()[i];
        for k in 0..p {
            eps -= rho[1 + k] * data.w()[(i, k)];
            eta -= lambda[q + k] * data.w()[(i, k)];
        }
        for (j, &d) in lambda[..q].iter().enumerate() {
            eta -= d * data.z()[(i, j)];
        }
        quad += i11 * eps * eps + 2.0 * i12 * eps * eta + i22 * eta * eta;
    }
    -0.5 * n as f64 * det.ln() - 0.5 * quad
}

/// `log ∫ exp(g(θ)) dθ` for `θ ∈ ℝ^d`, `d ≤ 2`, with `g` a concave quadratic.
/// The mode and spread come from finite differences; the integral from a
/// composite Gauss-Legendre product rule over ±14 marginal sd.
pub fn log_integral(d: usize, g: &dyn Fn(&[f64]) -> f64) -> f64 {
    assert!(d <= 2);
    if d == 0 {
        return g(&[]);
    }
    let h = 0.5;
    let at = |shift: &[(usize, f64)]| {
        let mut t = vec![0.0; d];
        for &(k, s) in shift {
            t[k] += s;
        }
        g(&t)
    };
    let g0 = at(&[]);
    let mut grad = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    for a in 0..d {
        grad[a] = (at(&[(a, h)]) - at(&[(a, -h)])) / (2.0 * h);
        hess[a][a] = (at(&[(a, h)]) - 2.0 * g0 + at(&[(a, -h)])) / (h * h);
        for b in 0..a {
            let v = (at(&[(a, h), (b, h)]) - at(&[(a, h), (b, -h)]) - at(&[(a, -h), (b, h)])
                + at(&[(a, -h), (b, -h)]))
                / (4.0 * h * h);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    // Negative Hessian inverse is the covariance of the normalised integrand.
    let cov: Vec<Vec<f64>> = if d == 1 {
        vec![vec![-1.0 / hess[0][0]]]
    } else {
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        vec![
            vec![-hess[1][1] / det, hess[0][1] / det],
            vec![hess[1][0] / det, -hess[0][0] / det],
        ]
    };
    let mode: Vec<f64> = (0..d)
        .map(|a| (0..d).map(|b| cov[a][b] * grad[b]).sum())
        .collect();
    let gm = g(&mode);

    let (gx, gw) = gauss_legendre(12);
    let panels = 40;
    let axis = |a: usize| -> Vec<(f64, f64)> {
        let sd = cov[a][a].sqrt();
        let (lo, hi) = (mode[a] - 14.0 * sd, mode[a] + 14.0 * sd);
        let width = (hi - lo) / panels as f64;
        let mut pts = Vec::with_capacity(panels * gx.len());
        for k in 0..panels {
            let c = lo + (k as f64 + 0.5) * width;
            for (x, w) in gx.iter().zip(&gw) {
                pts.push((c + 0.5 * width * x, 0.5 * width * w));
            }
        }
        pts
    };
    let total = if d == 1 {
        axis(0)
            .iter()
            .map(|&(t, w)| w * (g(&[t]) - gm).exp())
            .sum::<f64>()
    } else {
        let (ax, ay) = (axis(0), axis(1));
        let mut s = 0.0;
        for &(tx, wx) in &ax {
            for &(ty, wy) in &ay {
                s += wx * wy * (g(&[tx, ty]) - gm).exp();
            }
        }
        s
    };
    gm + total.ln()
}

fn log_std_normal(t: &[f64]) -> f64 {
    t.iter()
        .map(|v| -0.5 * v * v - 0.5 * (2.0 * std::f64::consts::PI).ln())
        .sum()
}

fn embed(base: &[f64], active: &[usize], theta: &[f64]) -> Vec<f64> {
    let mut v = base.to_vec();
    for &k in active {
        v[k] = 0.0;
    }
    for (&k, &t) in active.iter().zip(theta) {
        v[k] = t;
    }
    v
}

/// Brute-force log of `∫ p(Y, X | ρ_L, λ, Σ) N(ρ_L; 0, I) dρ_L`, relative to
/// the empty model.
pub fn oracle_log_marginal_second(
    data: &Dataset<f64>,
    lambda: &[f64],
    sigma: [f64; 3],
    model: &Indicator,
) -> f64 {
    let active = model.active();
    let zero = vec![0.0; 1 + data.p()];
    let base = log_joint_lik(data, &zero, lambda, sigma);
    let g = |t: &[f64]| {
        log_joint_lik(data, &embed(&zero, &active, t), lambda, sigma) - base + log_std_normal(t)
    };
    log_integral(active.len(), &g)
}

/// Brute-force log of `∫ p(Y, X | ρ, λ_M, Σ) N(λ_M; 0, I) dλ_M`, relative to
/// the empty model.
pub fn oracle_log_marginal_first(
    data: &Dataset<f64>,
    rho: &[f64],
    sigma: [f64; 3],
    model: &Indicator,
) -> f64 {
    let active = model.active();
    let zero = vec![0.0; data.q() + data.p()];
    let base = log_joint_lik(data, rho, &zero, sigma);
    let g = |t: &[f64]| {
        log_joint_lik(data, rho, &embed(&zero, &active, t), sigma) - base + log_std_normal(t)
    };
    log_integral(active.len(), &g)
}

/// Random indicator of length `len` with at most `max_active` slots set.
pub fn random_small_model<R: Rng>(rng: &mut R, len: usize, max_active: usize) -> Indicator {
    let k = rng.random_range(0..=max_active.min(len));
    let mut bits = vec![false; len];
    let mut set = 0;
    while set < k {
        let j = rng.random_range(0..len);
        if !bits[j] {
            bits[j] = true;
            set += 1;
        }
    }
    Indicator::new(bits)
}

/// Random positive-definite 2x2 covariance.
pub fn random_sigma<R: Rng>(rng: &mut R) -> [f64; 3] {
    let s11 = rng.random_range(0.5..2.0);
    let s22 = rng.random_range(0.5..2.0);
    let r: f64 = rng.random_range(-0.8..0.8);
    [s11, r * (s11 * s22).sqrt(), s22]
}

/// Small simulated dataset with standard-normal covariates.
pub fn small_dataset(n: usize, p: usize, q: usize, seed: u64) -> Dataset<f64> {
    let spec = SimSpec::with_dims(n, p, q, seed);
    generate(&spec, &mut RngStream::new(seed)).unwrap().0
}

/// Relative error of `exp(a)` against `exp(b)`.
pub fn ratio_error(log_a: f64, log_b: f64) -> f64 {
    (log_a - log_b).exp_m1().abs()
}

/// A CBF-oracle instance: one second-stage and one first-stage comparison.
pub struct OracleCase {
    pub second_err: f64,
    pub first_err: f64,
    pub doubled: bool,
}

/// Draws instance `index` and returns the relative errors of the implemented
/// CBFs (each model against a second random model) versus quadrature. Every
/// fifth instance has `β = 0`, exercising the seemingly-unrelated branch.
pub fn oracle_case(index: u64) -> OracleCase {
    use ivbma_core::posterior::{log_integrated_lik_first, log_integrated_lik_second};
    use ivbma_core::{Cov2, FirstStageModel, SecondStageModel};

    let mut rng = RngStream::with_stream(2024, index);
    let p = rng.random_range(1..=4);
    let q = rng.random_range(1..=3);
    let data = small_dataset(30, p, q, 1000 + index);
    let s = random_sigma(&mut rng);
    let sigma = Cov2::new(s[0], s[1], s[2]);
    let mut rho: Vec<f64> = (0..1 + p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let doubled = index % 5 != 4;
    if !doubled {
        rho[0] = 0.0;
    } else if rho[0].abs() < 0.2 {
        rho[0] = 0.2f64.copysign(rho[0]);
    }
    let lambda: Vec<f64> = (0..q + p).map(|_| rng.random_range(-1.5..1.5)).collect();

    let la = random_small_model(&mut rng, 1 + p, 2);
    let lb = random_small_model(&mut rng, 1 + p, 2);
    let impl_second =
        log_integrated_lik_second(&data, &lambda, &sigma, &SecondStageModel(la.clone())).unwrap()
            - log_integrated_lik_second(&data, &lambda, &sigma, &SecondStageModel(lb.clone()))
                .unwrap();
    let oracle_second = oracle_log_marginal_second(&data, &lambda, s, &la)
        - oracle_log_marginal_second(&data, &lambda, s, &lb);

    let ma = random_small_model(&mut rng, q + p, 2);
    let mb = random_small_model(&mut rng, q + p, 2);
    let fm = |m: &Indicator| FirstStageModel::new(m.clone(), q).unwrap();
    let impl_first = log_integrated_lik_first(&data, &rho, &sigma, &fm(&ma)).unwrap()
        - log_integrated_lik_first(&data, &rho, &sigma, &fm(&mb)).unwrap();
    let oracle_first = oracle_log_marginal_first(&data, &rho, s, &ma)
        - oracle_log_marginal_first(&data, &rho, s, &mb);

    OracleCase {
        second_err: ratio_error(impl_second, oracle_second),
        first_err: ratio_error(impl_first, oracle_first),
        doubled,
    }
}
