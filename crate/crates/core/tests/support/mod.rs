#![allow(dead_code)]

use pfml::prelude::*;

pub fn lgss_data(horizon: usize, seed: u64) -> (Lgss, Dataset) {
    let m = Lgss::default_scalar();
    let data = simulate(&m, &m.true_theta().unwrap(), horizon, RngStream::new(seed, 0)).unwrap();
    (m, data)
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The estimator written as a product over t of sums
/// `Σ_n c_t^n ω_t^n(θ) f_θ(x_t^n | x_{t-1}^{a_t^n}) g_θ(y_t | x_t^n)`, with
/// the θ-free constants `c` and the normalized ancestor weights `ω` built
/// separately. Returns the log-likelihood and every `ω_t` row.
pub fn structural_form<M: StateSpaceModel>(m: &M, sys: &ParticleSystem, theta: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let n = sys.num_particles();
    let th_ref = sys.theta_ref().values().to_vec();
    let ln_n = (n as f64).ln();

    // c_t^n = 1 / (N ★_t^n f_ref(x_t^n | x_{t-1}^{a_t^n})), from θ_ref alone
    let mut log_c = Vec::new();
    for t in 1..=sys.horizon() {
        let anc = sys.ancestors_at(t);
        let log_star: Vec<f64> = if t == 1 {
            vec![-ln_n; n]
        } else {
            let g: Vec<f64> = anc
                .iter()
                .map(|&a| m.obs_logdensity(&th_ref, sys.y(t - 1), sys.particle(t - 1, a), t - 1))
                .collect();
            let norm = lse(&g);
            g.iter().map(|x| x - norm).collect()
        };
        let row: Vec<f64> = (0..n)
            .map(|i| {
                let f_ref = m.trans_logdensity(&th_ref, sys.particle(t, i), sys.particle(t - 1, anc[i]), t);
                -ln_n - log_star[i] - f_ref
            })
            .collect();
        log_c.push(row);
    }

    // ω_t^n(θ) = w_{t-1}^{a_t^n}(θ) / Σ_j w_{t-1}^{a_t^j}(θ)
    let mut log_w_prev = vec![0.0; n];
    let mut omegas = Vec::new();
    let mut loglik = 0.0;
    for t in 1..=sys.horizon() {
        let anc = sys.ancestors_at(t);
        let gathered: Vec<f64> = anc.iter().map(|&a| log_w_prev[a]).collect();
        let norm = lse(&gathered);
        let omega: Vec<f64> = gathered.iter().map(|x| (x - norm).exp()).collect();
        let terms: Vec<f64> = (0..n)
            .map(|i| {
                let x = sys.particle(t, i);
                let f = m.trans_logdensity(theta, x, sys.particle(t - 1, anc[i]), t);
                let g = m.obs_logdensity(theta, sys.y(t), x, t);
                log_c[t - 1][i] + omega[i].ln() + f + g
            })
            .collect();
        loglik += lse(&terms);
        // unnormalized weights of this step, up to a common factor
        log_w_prev = terms.iter().map(|x| x + ln_n).collect();
        omegas.push(omega);
    }
    (loglik, omegas)
}

/// Kolmogorov–Smirnov distance between `samples` and the distribution with
/// log-density `logpdf`, whose CDF is obtained by Simpson integration on
/// `[lo, hi]`.
pub fn ks_against_density(samples: &mut [f64], logpdf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let cells = 200_000;
    let h = (hi - lo) / cells as f64;
    let mut cdf = vec![0.0; cells + 1];
    for k in 0..cells {
        let a = lo + h * k as f64;
        let area = h / 6.0 * (logpdf(a).exp() + 4.0 * logpdf(a + 0.5 * h).exp() + logpdf(a + h).exp());
        cdf[k + 1] = cdf[k] + area;
    }
    let total = cdf[cells];
    let at = |x: f64| -> f64 {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let pos = (x - lo) / h;
        let k = (pos as usize).min(cells - 1);
        let frac = pos - k as f64;
        (cdf[k] + frac * (cdf[k + 1] - cdf[k])) / total
    };
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = at(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
