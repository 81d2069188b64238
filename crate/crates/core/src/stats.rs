//! Logical error rates, finite-size threshold fits and decoder gains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::code::Deformation;
use crate::error::{Error, Result};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `failures` out of `shots`.
pub fn wilson_interval(failures: u64, shots: u64, z: f64) -> (f64, f64) {
    let n = shots as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if failures == shots { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub d: usize,
    pub ell: usize,
    pub deformation: Deformation,
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub p: f64,
    pub decoder: String,
    pub shots: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Identifies the curve a rate belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLabel {
    pub d: usize,
    pub ell: usize,
    pub deformation: Deformation,
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub p: f64,
    pub decoder: String,
}

impl RatePoint {
    pub fn from_counts(label: PointLabel, shots: u64, failures: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InsufficientData("a rate needs at least one shot".into()));
        }
        if failures > shots {
            return Err(Error::InsufficientData(format!("{failures} failures out of {shots} shots")));
        }
        let (ci_low, ci_high) = wilson_interval(failures, shots, Z95);
        Ok(RatePoint {
            d: label.d,
            ell: label.ell,
            deformation: label.deformation,
            eta: label.eta,
            p: label.p,
            decoder: label.decoder,
            shots,
            failures,
            rate: failures as f64 / shots as f64,
            ci_low,
            ci_high,
        })
    }
}

/// A shot fails when any observable prediction differs from the truth.
pub fn estimate_rate(label: PointLabel, predicted: &[u64], truth: &[u64]) -> Result<RatePoint> {
    if predicted.len() != truth.len() {
        return Err(Error::InsufficientData("prediction and truth lengths differ".into()));
    }
    let failures = predicted.iter().zip(truth).filter(|(a, b)| a != b).count() as u64;
    RatePoint::from_counts(label, predicted.len() as u64, failures)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub p_th: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sum of squared rate residuals over the fitted points.
    pub residual: f64,
    /// Bootstrap variances of `p_th` and `nu`.
    pub covariance_diag: [f64; 2],
    /// 2.5% and 97.5% bootstrap percentiles.
    pub p_th_ci: (f64, f64),
    pub nu_ci: (f64, f64),
    /// Empirical crossing of the two largest distances, `(p, rate)`.
    pub crossing: (f64, f64),
    pub points_used: usize,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bootstrap: usize,
    /// Relative half-width of the rate window around the crossing.
    pub window: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { bootstrap: 200, window: 0.3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Obs {
    d: f64,
    p: f64,
    rate: f64,
    shots: u64,
}

/// Linear interpolation of the first sign change of `L_big - L_small` over
/// their shared p-values.
fn empirical_crossing(big: &[(f64, f64)], small: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut diffs = Vec::new();
    for &(p, lb) in big {
        if let Some(&(_, ls)) = small.iter().find(|s| s.0 == p) {
            diffs.push((p, lb - ls, lb, ls));
        }
    }
    let nonzero: Vec<_> = diffs.iter().filter(|x| x.1 != 0.0).collect();
    for w in nonzero.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.1.signum() != b.1.signum() {
            if let Some(z) = diffs.iter().find(|x| x.1 == 0.0 && x.0 > a.0 && x.0 < b.0) {
                return Some((z.0, z.2));
            }
            let t = a.1 / (a.1 - b.1);
            let p = a.0 + t * (b.0 - a.0);
            let l = 0.5 * ((a.2 + t * (b.2 - a.2)) + (a.3 + t * (b.3 - a.3)));
            return Some((p, l));
        }
    }
    None
}

/// Least squares for `L = A + Bx + Cx^2` at fixed `(p_th, nu)`; returns the
/// coefficients and the residual sum of squares.
fn project(obs: &[Obs], p_th: f64, nu: f64) -> Option<([f64; 3], f64)> {
    let xs: Vec<f64> = obs.iter().map(|o| (o.p - p_th) * o.d.powf(1.0 / nu)).collect();
    let mut m = [[0.0; 4]; 3];
    for (o, &x) in obs.iter().zip(&xs) {
        let row = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * o.rate;
        }
    }
    // Gauss-Jordan with partial pivoting.
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..4 {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    let coef = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];
    let ssr = obs
        .iter()
        .zip(&xs)
        .map(|(o, &x)| {
            let r = o.rate - (coef[0] + coef[1] * x + coef[2] * x * x);
            r * r
        })
        .sum();
    Some((coef, ssr))
}

/// Downhill simplex minimization.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: &[f64], iterations: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= 1e-16 * (simplex[0].1.abs() + 1e-300) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { lerp(&centroid, &reflected, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = lerp(&best, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Minimizes over `(p_th, ln nu)` with the quadratic coefficients projected
/// out; restarts until the optimum stops moving.
fn fit_core(obs: &[Obs], p_start: f64, nu_start: f64) -> Option<(f64, f64, [f64; 3], f64)> {
    let cost = |v: &[f64]| -> f64 {
        let (p, nu) = (v[0], v[1].exp());
        if !(p > 0.0 && p < 0.5) || !(0.05..=20.0).contains(&nu) {
            return f64::INFINITY;
        }
        project(obs, p, nu).map_or(f64::INFINITY, |r| r.1)
    };
    let mut x = vec![p_start, nu_start.ln()];
    let mut fx = cost(&x);
    for _ in 0..6 {
        let (nx, nf) = nelder_mead(cost, &x, &[0.05 * x[0].max(1e-4), 0.2], 2000);
        let moved = (nf - fx).abs() <= 1e-14 * fx.abs().max(1e-300);
        x = nx;
        fx = nf;
        if moved {
            break;
        }
    }
    let (p, nu) = (x[0], x[1].exp());
    let (coef, ssr) = project(obs, p, nu)?;
    ssr.is_finite().then_some((p, nu, coef, ssr))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len().max(2) - 1) as f64
}

/// Fits `L = A + Bx + Cx^2`, `x = (p - p_th) d^(1/nu)`, to the points near the
/// empirical crossing of the two largest distances.
///
/// Points with rates outside (0, 0.5) are dropped. The window keeps points
/// with `|L - L_cross| <= window * L_cross`; when fewer than six survive the
/// whole set is used. Parameter spread comes from refitting binomially
/// resampled failure counts.
pub fn fit_threshold(points: &[RatePoint], opts: FitOptions) -> Result<ThresholdFit> {
    let mut obs: Vec<Obs> = points
        .iter()
        .filter(|r| r.rate > 0.0 && r.rate < 0.5)
        .map(|r| Obs { d: r.d as f64, p: r.p, rate: r.rate, shots: r.shots })
        .collect();
    obs.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.p.total_cmp(&b.p)));
    let mut distances: Vec<f64> = obs.iter().map(|o| o.d).collect();
    distances.dedup();
    if distances.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 distances with usable rates, have {}", distances.len())));
    }
    let curve = |d: f64| -> Vec<(f64, f64)> { obs.iter().filter(|o| o.d == d).map(|o| (o.p, o.rate)).collect() };
    let (big, small) = (curve(distances[distances.len() - 1]), curve(distances[distances.len() - 2]));
    if big.len() < 4 || small.len() < 4 {
        return Err(Error::InsufficientData("need at least 4 p-values per distance".into()));
    }
    let crossing = empirical_crossing(&big, &small).ok_or(Error::NoCrossing)?;

    let windowed: Vec<Obs> = obs.iter().copied().filter(|o| (o.rate - crossing.1).abs() <= opts.window * crossing.1).collect();
    let used = if windowed.len() >= 6 { windowed } else { obs.clone() };

    let (p_th, nu, coef, residual) = fit_core(&used, crossing.0, 1.0).ok_or(Error::NoCrossing)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ps = Vec::with_capacity(opts.bootstrap);
    let mut nus = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let resampled: Vec<Obs> = used
            .iter()
            .map(|o| {
                let f = Binomial::new(o.shots, o.rate).map(|b| b.sample(&mut rng)).unwrap_or(0);
                Obs { rate: f as f64 / o.shots as f64, ..*o }
            })
            .collect();
        if let Some((p, n, _, _)) = fit_core(&resampled, p_th, nu) {
            ps.push(p);
            nus.push(n);
        }
    }
    let (covariance_diag, p_th_ci, nu_ci) = if ps.len() >= 2 {
        let cov = [variance(&ps), variance(&nus)];
        ps.sort_by(f64::total_cmp);
        nus.sort_by(f64::total_cmp);
        (cov, (percentile(&ps, 0.025), percentile(&ps, 0.975)), (percentile(&nus, 0.025), percentile(&nus, 0.975)))
    } else {
        ([0.0, 0.0], (p_th, p_th), (nu, nu))
    };
    Ok(ThresholdFit {
        p_th,
        nu,
        a: coef[0],
        b: coef[1],
        c: coef[2],
        residual,
        covariance_diag,
        p_th_ci,
        nu_ci,
        crossing,
        points_used: used.len(),
        bootstrap_resamples: ps.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    /// `p_th(corr) - p_th(mwpm)`.
    pub delta: f64,
    /// `delta / p_th(mwpm)`; absent when the reference threshold is not positive.
    pub relative_gain: Option<f64>,
    /// Sum of the two bootstrap CI half-widths.
    pub delta_uncertainty: f64,
    pub relative_uncertainty: Option<f64>,
}

pub fn decoder_gain(corr: &ThresholdFit, mwpm: &ThresholdFit) -> GainRecord {
    let delta = corr.p_th - mwpm.p_th;
    let half = |f: &ThresholdFit| 0.5 * (f.p_th_ci.1 - f.p_th_ci.0);
    let delta_uncertainty = half(corr) + half(mwpm);
    let positive = mwpm.p_th > 0.0;
    GainRecord {
        delta,
        relative_gain: positive.then(|| delta / mwpm.p_th),
        delta_uncertainty,
        relative_uncertainty: positive.then(|| delta_uncertainty / mwpm.p_th),
    }
}
