use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::quadrature;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Relative tolerance of the quadrature fallback for log-MGF evaluation.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Built-in jump families. Every family has mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncrementKind {
    IsotropicGaussian {
        sigma: f64,
    },
    UniformBall {
        radius: f64,
    },
    UniformCube {
        half_width: f64,
    },
    AnisotropicGaussian {
        scales: Vec<f64>,
    },
    /// Equal-scale Gaussian mixture; `shifts` are the component means after
    /// subtracting the mixture mean.
    GaussianMixture {
        sigma: f64,
        weights: Vec<f64>,
        shifts: Vec<Vec<f64>>,
    },
}

/// Region where `E[exp(λ·ξ)]` is finite: the open ball of the given radius
/// around the origin (`f64::INFINITY` for all of R^d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfDomain {
    pub radius: f64,
}

impl MgfDomain {
    pub const WHOLE: MgfDomain = MgfDomain {
        radius: f64::INFINITY,
    };

    pub fn contains(&self, lambda: &[f64]) -> bool {
        norm(lambda) < self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    dimension: usize,
    kind: IncrementKind,
    mgf_domain: MgfDomain,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLaw(format!("{name} must be positive and finite, got {v}")))
    }
}

// log(sinh t / t), with its first two derivatives, stable for all t.
fn log_sinhc(t: f64) -> f64 {
    let a = t.abs();
    if a < 1e-4 {
        let t2 = t * t;
        t2 / 6.0 - t2 * t2 / 180.0
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a + (-(-2.0 * a).exp()).ln_1p() - (2.0 * a).ln()
    }
}

fn log_sinhc_d1(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        t / 3.0 - t * t * t / 45.0
    } else {
        1.0 / t.tanh() - 1.0 / t
    }
}

fn log_sinhc_d2(t: f64) -> f64 {
    let a = t.abs();
    if a < 1e-3 {
        1.0 / 3.0 - t * t / 15.0
    } else if a < 20.0 {
        let s = a.sinh();
        1.0 / (a * a) - 1.0 / (s * s)
    } else {
        1.0 / (a * a)
    }
}

/// Tilted moments of the projection of the uniform unit ball in R^d onto a
/// line, parametrised by θ with s = sin θ so the weight becomes cos^d θ.
/// Returns (log Z(t), E_t[s], E_t[s²]) where Z(t) = E[exp(t s)].
fn ball_projection_moments(d: usize, t: f64) -> Result<(f64, f64, f64)> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let dd = d as i32;
    let [norm0] = quadrature::integrate(|th: f64| [th.cos().powi(dd)], -half_pi, half_pi, 1e-14)?;
    // factor exp(t) out of the integrand to avoid overflow
    let shift = t.abs();
    let [z, m1, m2] = quadrature::integrate(
        |th: f64| {
            let s = th.sin();
            let w = th.cos().powi(dd) * (t * s - shift).exp();
            [w, s * w, s * s * w]
        },
        -half_pi,
        half_pi,
        QUADRATURE_TOL,
    )?;
    Ok((shift + (z / norm0).ln(), m1 / z, m2 / z))
}

impl IncrementLaw {
    fn build(dimension: usize, kind: IncrementKind) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidLaw("dimension must be at least 1".into()));
        }
        Ok(Self {
            dimension,
            kind,
            mgf_domain: MgfDomain::WHOLE,
        })
    }

    pub fn isotropic_gaussian(dimension: usize, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Self::build(dimension, IncrementKind::IsotropicGaussian { sigma })
    }

    pub fn uniform_ball(dimension: usize, radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Self::build(dimension, IncrementKind::UniformBall { radius })
    }

    pub fn uniform_cube(dimension: usize, half_width: f64) -> Result<Self> {
        positive("half_width", half_width)?;
        Self::build(dimension, IncrementKind::UniformCube { half_width })
    }

    pub fn anisotropic_gaussian(scales: Vec<f64>) -> Result<Self> {
        for &s in &scales {
            positive("scale", s)?;
        }
        Self::build(scales.len(), IncrementKind::AnisotropicGaussian { scales })
    }

    /// Mixture of `N(mean_k, sigma² I)` with the given weights, re-centred
    /// by subtracting the mixture mean.
    pub fn gaussian_mixture(sigma: f64, weights: Vec<f64>, means: Vec<Vec<f64>>) -> Result<Self> {
        positive("sigma", sigma)?;
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::InvalidLaw(
                "mixture needs one mean per weight and at least one component".into(),
            ));
        }
        let d = means[0].len();
        if means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidLaw("mixture means differ in dimension".into()));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidLaw("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidLaw("mixture weights sum to zero".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut center = vec![0.0; d];
        for (w, m) in weights.iter().zip(&means) {
            for i in 0..d {
                center[i] += w * m[i];
            }
        }
        let shifts = means
            .iter()
            .map(|m| m.iter().zip(&center).map(|(a, c)| a - c).collect())
            .collect();
        Self::build(
            d,
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            },
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &IncrementKind {
        &self.kind
    }

    pub fn mgf_domain(&self) -> MgfDomain {
        self.mgf_domain
    }

    /// Invariance under every orthonormal map of R^d. Declared per family.
    pub fn spherically_symmetric(&self) -> bool {
        match &self.kind {
            IncrementKind::IsotropicGaussian { .. } | IncrementKind::UniformBall { .. } => true,
            IncrementKind::UniformCube { .. } => self.dimension == 1,
            IncrementKind::AnisotropicGaussian { scales } => scales.iter().all(|s| *s == scales[0]),
            IncrementKind::GaussianMixture { .. } => false,
        }
    }

    /// Every built-in family is absolutely continuous, hence non-lattice.
    pub fn non_lattice(&self) -> bool {
        true
    }

    pub fn mean(&self) -> Vec<f64> {
        vec![0.0; self.dimension]
    }

    /// Per-coordinate variance.
    pub fn variance(&self) -> Vec<f64> {
        let d = self.dimension;
        match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => vec![sigma * sigma; d],
            IncrementKind::UniformBall { radius } => vec![radius * radius / (d as f64 + 2.0); d],
            IncrementKind::UniformCube { half_width } => vec![half_width * half_width / 3.0; d],
            IncrementKind::AnisotropicGaussian { scales } => scales.iter().map(|s| s * s).collect(),
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => (0..d)
                .map(|i| sigma * sigma + weights.iter().zip(shifts).map(|(w, a)| w * a[i] * a[i]).sum::<f64>())
                .collect(),
        }
    }

    /// Supremum of `u·ξ` over the support (infinite for Gaussian families).
    pub fn support_extent(&self, u: &[f64]) -> f64 {
        match &self.kind {
            IncrementKind::UniformBall { radius } => radius * norm(u),
            IncrementKind::UniformCube { half_width } => half_width * u.iter().map(|x| x.abs()).sum::<f64>(),
            _ => f64::INFINITY,
        }
    }

    fn check_dim(&self, v: &[f64]) {
        assert_eq!(v.len(), self.dimension, "vector dimension does not match the law");
    }

    /// Draws one jump into `out`.
    pub fn sample_into(&self, rng: &mut RandomStream, out: &mut [f64]) {
        self.check_dim(out);
        match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => {
                for o in out.iter_mut() {
                    *o = sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            IncrementKind::AnisotropicGaussian { scales } => {
                for (o, s) in out.iter_mut().zip(scales) {
                    *o = s * rng.sample::<f64, _>(StandardNormal);
                }
            }
            IncrementKind::UniformCube { half_width } => {
                for o in out.iter_mut() {
                    *o = half_width * (2.0 * rng.uniform() - 1.0);
                }
            }
            IncrementKind::UniformBall { radius } => {
                if self.dimension == 1 {
                    out[0] = radius * (2.0 * rng.uniform() - 1.0);
                    return;
                }
                // direction from a normal vector, radius r U^{1/d}
                loop {
                    for o in out.iter_mut() {
                        *o = rng.sample::<f64, _>(StandardNormal);
                    }
                    let n = norm(out);
                    if n > 0.0 {
                        let r = radius * rng.uniform().powf(1.0 / self.dimension as f64);
                        for o in out.iter_mut() {
                            *o *= r / n;
                        }
                        return;
                    }
                }
            }
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => {
                let k = pick(weights, rng.uniform());
                for (o, a) in out.iter_mut().zip(&shifts[k]) {
                    *o = a + sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        self.sample_into(rng, &mut v);
        v
    }

    /// Draws one jump from the exponentially tilted law
    /// `dQ/dP(ξ) = exp(λ·ξ − log φ(λ))`. Exact for every family.
    pub fn sample_tilted_into(&self, lambda: &[f64], rng: &mut RandomStream, out: &mut [f64]) {
        self.check_dim(lambda);
        self.check_dim(out);
        match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => {
                for (o, l) in out.iter_mut().zip(lambda) {
                    *o = sigma * sigma * l + sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            IncrementKind::AnisotropicGaussian { scales } => {
                for ((o, l), s) in out.iter_mut().zip(lambda).zip(scales) {
                    *o = s * s * l + s * rng.sample::<f64, _>(StandardNormal);
                }
            }
            IncrementKind::UniformCube { half_width } => {
                for (o, &l) in out.iter_mut().zip(lambda) {
                    *o = tilted_uniform(*half_width, l, rng.uniform());
                }
            }
            IncrementKind::UniformBall { radius } => {
                if self.dimension == 1 {
                    out[0] = tilted_uniform(*radius, lambda[0], rng.uniform());
                    return;
                }
                let bound = radius * norm(lambda);
                loop {
                    self.sample_into(rng, out);
                    if rng.uniform() < (dot(lambda, out) - bound).exp() {
                        return;
                    }
                }
            }
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => {
                let tilted = tilted_mixture_weights(weights, shifts, lambda);
                let k = pick(&tilted, rng.uniform());
                for ((o, a), l) in out.iter_mut().zip(&shifts[k]).zip(lambda) {
                    *o = a + sigma * sigma * l + sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }

    /// `log E[exp(λ·ξ)]`; `+∞` outside the MGF domain.
    pub fn log_mgf(&self, lambda: &[f64]) -> Result<f64> {
        self.check_dim(lambda);
        if lambda.iter().all(|&l| l == 0.0) {
            return Ok(0.0);
        }
        if !self.mgf_domain.contains(lambda) {
            return Ok(f64::INFINITY);
        }
        Ok(match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => 0.5 * sigma * sigma * dot(lambda, lambda),
            IncrementKind::AnisotropicGaussian { scales } => lambda
                .iter()
                .zip(scales)
                .map(|(l, s)| 0.5 * s * s * l * l)
                .sum(),
            IncrementKind::UniformCube { half_width } => lambda.iter().map(|l| log_sinhc(half_width * l)).sum(),
            IncrementKind::UniformBall { radius } => {
                let t = radius * norm(lambda);
                if self.dimension == 1 {
                    log_sinhc(t)
                } else {
                    ball_projection_moments(self.dimension, t)?.0
                }
            }
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(shifts)
                    .map(|(w, a)| w.ln() + dot(lambda, a))
                    .collect();
                0.5 * sigma * sigma * dot(lambda, lambda) + log_sum_exp(&terms)
            }
        })
    }

    /// Gradient of the log-MGF, i.e. the mean of the tilted law.
    pub fn log_mgf_grad(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(lambda);
        if !self.mgf_domain.contains(lambda) {
            return Err(Error::DomainError(format!("{lambda:?}")));
        }
        Ok(match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => lambda.iter().map(|l| sigma * sigma * l).collect(),
            IncrementKind::AnisotropicGaussian { scales } => {
                lambda.iter().zip(scales).map(|(l, s)| s * s * l).collect()
            }
            IncrementKind::UniformCube { half_width } => lambda
                .iter()
                .map(|l| half_width * log_sinhc_d1(half_width * l))
                .collect(),
            IncrementKind::UniformBall { radius } => {
                let n = norm(lambda);
                if n == 0.0 {
                    return Ok(vec![0.0; self.dimension]);
                }
                let t = radius * n;
                let slope = if self.dimension == 1 {
                    log_sinhc_d1(t)
                } else {
                    ball_projection_moments(self.dimension, t)?.1
                };
                lambda.iter().map(|l| radius * slope * l / n).collect()
            }
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => {
                let pi = tilted_mixture_weights(weights, shifts, lambda);
                (0..self.dimension)
                    .map(|i| sigma * sigma * lambda[i] + pi.iter().zip(shifts).map(|(p, a)| p * a[i]).sum::<f64>())
                    .collect()
            }
        })
    }

    /// Hessian of the log-MGF (row-major `d × d`), the covariance of the
    /// tilted law.
    pub fn log_mgf_hessian(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(lambda);
        if !self.mgf_domain.contains(lambda) {
            return Err(Error::DomainError(format!("{lambda:?}")));
        }
        let d = self.dimension;
        let mut h = vec![0.0; d * d];
        match &self.kind {
            IncrementKind::IsotropicGaussian { sigma } => {
                for i in 0..d {
                    h[i * d + i] = sigma * sigma;
                }
            }
            IncrementKind::AnisotropicGaussian { scales } => {
                for i in 0..d {
                    h[i * d + i] = scales[i] * scales[i];
                }
            }
            IncrementKind::UniformCube { half_width } => {
                for i in 0..d {
                    h[i * d + i] = half_width * half_width * log_sinhc_d2(half_width * lambda[i]);
                }
            }
            IncrementKind::UniformBall { radius } => {
                let n = norm(lambda);
                let t = radius * n;
                let r2 = radius * radius;
                if d == 1 {
                    h[0] = r2 * log_sinhc_d2(t);
                } else if n == 0.0 {
                    for i in 0..d {
                        h[i * d + i] = r2 / (d as f64 + 2.0);
                    }
                } else {
                    let (_, m1, m2) = ball_projection_moments(d, t)?;
                    let radial = m2 - m1 * m1;
                    // transverse curvature ψ'(t)/t; the exact small-t limit is 1/(d+2)
                    let transverse = if t < 1e-6 { 1.0 / (d as f64 + 2.0) } else { m1 / t };
                    for i in 0..d {
                        for j in 0..d {
                            let uu = lambda[i] * lambda[j] / (n * n);
                            let id = if i == j { 1.0 } else { 0.0 };
                            h[i * d + j] = r2 * (radial * uu + transverse * (id - uu));
                        }
                    }
                }
            }
            IncrementKind::GaussianMixture {
                sigma,
                weights,
                shifts,
            } => {
                let pi = tilted_mixture_weights(weights, shifts, lambda);
                let mean: Vec<f64> = (0..d)
                    .map(|i| pi.iter().zip(shifts).map(|(p, a)| p * a[i]).sum())
                    .collect();
                for i in 0..d {
                    for j in 0..d {
                        let second: f64 = pi.iter().zip(shifts).map(|(p, a)| p * a[i] * a[j]).sum();
                        h[i * d + j] = second - mean[i] * mean[j] + if i == j { sigma * sigma } else { 0.0 };
                    }
                }
            }
        }
        Ok(h)
    }

    /// Restriction of the law to the line spanned by the unit vector `u`.
    pub fn along<'a>(&'a self, u: &'a [f64]) -> Projection<'a> {
        self.check_dim(u);
        Projection { law: self, u }
    }
}

/// One-dimensional view `u·ξ` of a d-dimensional law.
#[derive(Debug, Clone, Copy)]
pub struct Projection<'a> {
    law: &'a IncrementLaw,
    u: &'a [f64],
}

impl Projection<'_> {
    fn scaled(&self, t: f64) -> Vec<f64> {
        self.u.iter().map(|x| x * t).collect()
    }

    pub fn log_mgf(&self, t: f64) -> Result<f64> {
        self.law.log_mgf(&self.scaled(t))
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        Ok(dot(&self.law.log_mgf_grad(&self.scaled(t))?, self.u))
    }

    pub fn d2(&self, t: f64) -> Result<f64> {
        let h = self.law.log_mgf_hessian(&self.scaled(t))?;
        let d = self.u.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.u[i] * h[i * d + j] * self.u[j];
            }
        }
        Ok(acc)
    }

    /// Supremum of attainable slopes `(log φ)'`.
    pub fn sup_slope(&self) -> f64 {
        self.law.support_extent(self.u)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn tilted_mixture_weights(weights: &[f64], shifts: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = weights
        .iter()
        .zip(shifts)
        .map(|(w, a)| w.ln() + dot(lambda, a))
        .collect();
    let lse = log_sum_exp(&logs);
    logs.iter().map(|l| (l - lse).exp()).collect()
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Inverse CDF of the uniform law on `[-a, a]` tilted by `exp(l x)`.
fn tilted_uniform(a: f64, l: f64, u: f64) -> f64 {
    let t = 2.0 * a * l;
    if t.abs() < 1e-9 {
        return a * (2.0 * u - 1.0);
    }
    // x + a = log(1 + u (e^{2al} - 1)) / l, written to stay finite for large |t|
    let y = if t > 0.0 {
        // log(1 - u + u e^t) = t + log(u + (1-u) e^{-t})
        t + (u + (1.0 - u) * (-t).exp()).ln()
    } else {
        (u * t.exp_m1()).ln_1p()
    };
    (y / l - a).clamp(-a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws() -> Vec<IncrementLaw> {
        vec![
            IncrementLaw::isotropic_gaussian(2, 1.3).unwrap(),
            IncrementLaw::uniform_ball(1, 1.0).unwrap(),
            IncrementLaw::uniform_ball(2, 1.0).unwrap(),
            IncrementLaw::uniform_ball(3, 2.0).unwrap(),
            IncrementLaw::uniform_cube(2, 1.0).unwrap(),
            IncrementLaw::anisotropic_gaussian(vec![1.0, 2.0]).unwrap(),
            IncrementLaw::gaussian_mixture(0.8, vec![0.3, 0.7], vec![vec![1.0, 0.5], vec![-0.5, 0.0]]).unwrap(),
        ]
    }

    #[test]
    fn log_mgf_at_zero_is_exactly_zero() {
        for law in laws() {
            assert_eq!(law.log_mgf(&vec![0.0; law.dimension()]).unwrap(), 0.0);
            let g = law.log_mgf_grad(&vec![0.0; law.dimension()]).unwrap();
            assert!(g.iter().all(|x| x.abs() < 1e-14), "{law:?}: {g:?}");
        }
    }

    #[test]
    fn gaussian_closed_form() {
        let law = IncrementLaw::isotropic_gaussian(3, 1.0).unwrap();
        assert!((law.log_mgf(&[0.7, 0.0, 0.0]).unwrap() - 0.245).abs() < 1e-15);
        assert_eq!(law.log_mgf_grad(&[0.7, -0.2, 0.1]).unwrap(), vec![0.7, -0.2, 0.1]);
    }

    #[test]
    fn uniform_interval_closed_form() {
        let law = IncrementLaw::uniform_cube(1, 1.0).unwrap();
        let expected = (2f64.sinh() / 2.0).ln();
        assert!((law.log_mgf(&[2.0]).unwrap() - expected).abs() < 1e-15);
        let g = law.log_mgf_grad(&[1.0]).unwrap()[0];
        assert!((g - (1.0 / 1f64.tanh() - 1.0)).abs() < 1e-15);
        assert!((g - 0.3130).abs() < 1e-4);
    }

    #[test]
    fn ball_quadrature_matches_closed_form_in_three_dimensions() {
        // E[e^{t s}] for the uniform unit ball in R^3 is 3 (t cosh t - sinh t) / t^3
        let law = IncrementLaw::uniform_ball(3, 1.0).unwrap();
        for t in [0.01f64, 0.5, 2.0, 15.0, 80.0] {
            let exact = if t < 30.0 {
                (3.0 * (t * t.cosh() - t.sinh()) / t.powi(3)).ln()
            } else {
                // cosh, sinh ~ e^t / 2
                t + (3.0 * (t - 1.0) / (2.0 * t.powi(3))).ln()
            };
            let got = law.log_mgf(&[0.0, t, 0.0]).unwrap();
            assert!((got - exact).abs() < 1e-9 * exact.abs().max(1.0), "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn ball_in_one_dimension_is_the_interval() {
        let ball = IncrementLaw::uniform_ball(1, 1.5).unwrap();
        let cube = IncrementLaw::uniform_cube(1, 1.5).unwrap();
        assert_eq!(ball.log_mgf(&[0.8]).unwrap(), cube.log_mgf(&[0.8]).unwrap());
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        for law in laws() {
            let d = law.dimension();
            let lambda: Vec<f64> = (0..d).map(|i| 0.4 + 0.3 * i as f64).collect();
            let h = law.log_mgf_hessian(&lambda).unwrap();
            let eps = 1e-5;
            for j in 0..d {
                let mut up = lambda.clone();
                let mut dn = lambda.clone();
                up[j] += eps;
                dn[j] -= eps;
                let gu = law.log_mgf_grad(&up).unwrap();
                let gd = law.log_mgf_grad(&dn).unwrap();
                for i in 0..d {
                    let fd = (gu[i] - gd[i]) / (2.0 * eps);
                    assert!((fd - h[i * d + j]).abs() < 1e-6, "{law:?} ({i},{j}): {fd} vs {}", h[i * d + j]);
                }
            }
        }
    }

    #[test]
    fn support_constraints_hold() {
        let mut rng = RandomStream::from_seed(3);
        let ball = IncrementLaw::uniform_ball(3, 1.0).unwrap();
        let cube = IncrementLaw::uniform_cube(2, 0.5).unwrap();
        for _ in 0..10_000 {
            assert!(norm(&ball.sample(&mut rng)) <= 1.0);
            assert!(cube.sample(&mut rng).iter().all(|x| x.abs() <= 0.5));
            let tilted = {
                let mut v = [0.0; 3];
                ball.sample_tilted_into(&[3.0, 0.0, 0.0], &mut rng, &mut v);
                v
            };
            assert!(norm(&tilted) <= 1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        for law in laws() {
            let mut a = RandomStream::derive(11, &[2]);
            let mut b = RandomStream::derive(11, &[2]);
            assert_eq!(law.sample(&mut a), law.sample(&mut b));
        }
    }

    #[test]
    fn mixture_is_recentred() {
        let law = IncrementLaw::gaussian_mixture(1.0, vec![1.0, 3.0], vec![vec![4.0], vec![0.0]]).unwrap();
        match law.kind() {
            IncrementKind::GaussianMixture { weights, shifts, .. } => {
                let mean: f64 = weights.iter().zip(shifts).map(|(w, s)| w * s[0]).sum();
                assert!(mean.abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn tilted_sampler_mean_matches_gradient() {
        let mut rng = RandomStream::from_seed(5);
        for law in laws() {
            let d = law.dimension();
            let lambda: Vec<f64> = (0..d).map(|i| 0.9 - 0.5 * i as f64).collect();
            let target = law.log_mgf_grad(&lambda).unwrap();
            let var: Vec<f64> = {
                let h = law.log_mgf_hessian(&lambda).unwrap();
                (0..d).map(|i| h[i * d + i]).collect()
            };
            let n = 200_000;
            let mut acc = vec![0.0; d];
            let mut v = vec![0.0; d];
            for _ in 0..n {
                law.sample_tilted_into(&lambda, &mut rng, &mut v);
                for i in 0..d {
                    acc[i] += v[i];
                }
            }
            for i in 0..d {
                let m = acc[i] / n as f64;
                let se = (var[i] / n as f64).sqrt();
                assert!((m - target[i]).abs() < 5.0 * se, "{law:?} coord {i}: {m} vs {}", target[i]);
            }
        }
    }
}
