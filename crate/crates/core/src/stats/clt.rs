//! Transverse hitting probability of a random walk conditioned on its
//! pivot coordinate, sampled under the exponential tilt along the pivot.
//!
//! Walks are drawn from the tilted law and reweighted by `exp(−λ·S_n)`
//! within the acceptance band, so the self-normalised estimate targets the
//! untilted conditional probability exactly.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{fit_line, tag, Model, Summary, TailFit};
use crate::error::{Error, Result};
use crate::laws::IncrementKind;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSettings {
    pub seed: u64,
    /// Walks per substream batch.
    pub batch: usize,
    /// Batches run between stopping checks.
    pub batches_per_round: usize,
    /// Stop once this many accepted walks hit.
    pub min_hits: usize,
    pub max_walks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltPoint {
    pub x: f64,
    pub steps: u32,
    pub walks: usize,
    pub accepted: usize,
    pub hits: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// Exact value for isotropic Gaussian jumps.
    pub gaussian_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub points: Vec<CltPoint>,
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    walks: usize,
    accepted: usize,
    hits: usize,
    w: f64,
    w_hit: f64,
    w2: f64,
    w2_hit: f64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.walks += o.walks;
        self.accepted += o.accepted;
        self.hits += o.hits;
        self.w += o.w;
        self.w_hit += o.w_hit;
        self.w2 += o.w2;
        self.w2_hit += o.w2_hit;
    }
}

/// `P(|N(0, n σ² I_{d−1})| ≤ ½)`.
pub fn gaussian_transverse_hit(dimension: usize, sigma: f64, steps: u32) -> f64 {
    let k = (dimension - 1) as f64;
    let chi = ChiSquared::new(k).expect("positive degrees of freedom");
    chi.cdf(0.25 / (steps as f64 * sigma * sigma))
}

fn run_batch(model: &Model, steps: u32, lambda: &[f64], level: f64, center_t: &[f64], rng: &mut RandomStream, walks: usize) -> Tally {
    let a = &model.asymptote;
    let d = model.dimension();
    let pivot = a.pivot();
    let basis = a.transverse_basis();
    let tilt = a.pivot_tilt();
    let mut jump = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut t = Tally::default();
    for _ in 0..walks {
        sum.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..steps {
            model.increment.sample_tilted_into(lambda, rng, &mut jump);
            for (s, j) in sum.iter_mut().zip(&jump) {
                *s += j;
            }
        }
        t.walks += 1;
        let p: f64 = sum.iter().zip(&pivot).map(|(a, b)| a * b).sum();
        if (p - level).abs() > 0.5 {
            continue;
        }
        t.accepted += 1;
        // likelihood ratio up to a constant; the band keeps it within e^{±tilt/2}
        let w = (-tilt * (p - level)).exp();
        let r2: f64 = basis
            .iter()
            .zip(center_t)
            .map(|(b, c)| {
                let u: f64 = b.iter().zip(&sum).map(|(x, y)| x * y).sum();
                (u - c) * (u - c)
            })
            .sum();
        t.w += w;
        t.w2 += w * w;
        if r2 <= 0.25 {
            t.hits += 1;
            t.w_hit += w;
            t.w2_hit += w * w;
        }
    }
    t
}

/// Estimate at one target `x` with walks of `⌊t̃_x⌋` steps.
pub fn transverse_hit_point(model: &Model, settings: &CltSettings, x: f64, label: u64) -> Result<CltPoint> {
    let a = &model.asymptote;
    let d = model.dimension();
    if d < 2 {
        return Err(Error::InvalidArgument("the transverse hit needs dimension at least 2".into()));
    }
    let steps = a.t_tilde(x).floor();
    if steps < 1.0 {
        return Err(Error::InvalidArgument(format!("walk length for x = {x} is below one step")));
    }
    let steps = steps as u32;
    let pivot = a.pivot();
    let lambda: Vec<f64> = pivot.iter().map(|u| u * a.pivot_tilt()).collect();
    let mut center = vec![0.0; d];
    center[0] = x;
    let level = a.pivot_level(x);
    let center_t: Vec<f64> = a
        .transverse_basis()
        .iter()
        .map(|b| b.iter().zip(&center).map(|(p, q)| p * q).sum())
        .collect();

    let mut total = Tally::default();
    let mut next_batch = 0u64;
    while total.hits < settings.min_hits && total.walks < settings.max_walks {
        let first = next_batch;
        let tallies = super::par_map(settings.batches_per_round, |b| {
            let mut rng = RandomStream::derive(settings.seed, &[tag::CLT, label, first + b as u64]);
            run_batch(model, steps, &lambda, level, &center_t, &mut rng, settings.batch)
        });
        next_batch += settings.batches_per_round as u64;
        for t in &tallies {
            total.add(t);
        }
    }
    if total.accepted == 0 {
        return Err(Error::NoAcceptedSamples(x));
    }
    let p = total.w_hit / total.w;
    // delta-method variance of a ratio estimator
    let var = (total.w2_hit * (1.0 - p) * (1.0 - p) + (total.w2 - total.w2_hit) * p * p) / (total.w * total.w);
    let gaussian_exact = match model.increment.kind() {
        IncrementKind::IsotropicGaussian { sigma } => Some(gaussian_transverse_hit(d, *sigma, steps)),
        _ => None,
    };
    Ok(CltPoint {
        x,
        steps,
        walks: total.walks,
        accepted: total.accepted,
        hits: total.hits,
        estimate: p,
        std_error: var.sqrt(),
        gaussian_exact,
    })
}

/// Slope of `log p̂(x)` against `log x`, compared with `−(d−1)/2`.
pub fn conditional_transverse_hit(model: &Model, settings: &CltSettings, x_grid: &[f64]) -> Result<CltReport> {
    let points: Vec<CltPoint> = x_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| transverse_hit_point(model, settings, x, i as u64))
        .collect::<Result<_>>()?;
    let usable: Vec<&CltPoint> = points.iter().filter(|p| p.hits > 0).collect();
    let xs: Vec<f64> = usable.iter().map(|p| p.x.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.estimate.ln()).collect();
    let fit = fit_line(&xs, &ys).ok();
    let summary = fit.map(|f| {
        let d = model.dimension();
        let target = -((d - 1) as f64) / 2.0;
        let tolerance = if d == 2 { 0.15 } else { 0.2 };
        // interval from the per-point standard errors, propagated linearly
        let sxx: f64 = {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum()
        };
        let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 = usable
            .iter()
            .zip(&xs)
            .map(|(p, x)| ((x - mean_x) / sxx).powi(2) * (p.std_error / p.estimate).powi(2))
            .sum();
        let half = 1.96 * var.sqrt();
        Summary::absolute(f.slope, (f.slope - half, f.slope + half), target, tolerance)
    });
    Ok(CltReport { points, fit, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{IncrementLaw, OffspringLaw};

    #[test]
    fn gaussian_oracle_limits() {
        // d = 2: erf(1 / (2 sqrt(2n)))
        let p = gaussian_transverse_hit(2, 1.0, 50);
        let erf = statrs::function::erf::erf(0.5 / (2.0f64 * 50.0).sqrt());
        assert!((p - erf).abs() < 1e-12);
        let p3 = gaussian_transverse_hit(3, 1.0, 50);
        assert!((p3 - (1.0 - (-1.0f64 / 400.0).exp())).abs() < 1e-12);
    }

    #[test]
    fn matches_gaussian_closed_form() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(2, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let s = CltSettings {
            seed: 7,
            batch: 500,
            batches_per_round: 8,
            min_hits: 400,
            max_walks: 2_000_000,
        };
        let p = transverse_hit_point(&m, &s, 30.0, 0).unwrap();
        let exact = p.gaussian_exact.unwrap();
        assert!((p.estimate - exact).abs() < 4.0 * p.std_error, "{p:?}");
    }

    #[test]
    fn one_dimension_is_rejected() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let s = CltSettings {
            seed: 0,
            batch: 1,
            batches_per_round: 1,
            min_hits: 1,
            max_walks: 1,
        };
        assert!(transverse_hit_point(&m, &s, 30.0, 0).is_err());
    }
}
