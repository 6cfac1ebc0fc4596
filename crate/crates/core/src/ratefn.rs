//! Rate functions by numerical convex conjugation, the BRW constants derived
//! from them, and the deterministic asymptotes of the maximum and of the
//! first passage time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::increment::norm;
use crate::laws::{IncrementLaw, OffspringLaw};

pub const LAMBDA_TOL: f64 = 1e-12;
pub const ND_GRADIENT_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 200;
const BISECTION_LOW: f64 = 1e-6;
const BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate1d {
    pub value: f64,
    pub lambda: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateNd {
    pub value: f64,
    pub lambda: Vec<f64>,
    pub iterations: usize,
}

pub fn unit(d: usize, axis: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[axis] = 1.0;
    e
}

/// `I(x) = sup_λ (λx − log φ_u(λ))` for the projection of `law` on the unit
/// vector `direction`. Solves `(log φ_u)'(λ) = x` by Newton's method
/// safeguarded with bisection on the monotone derivative.
pub fn legendre_1d(law: &IncrementLaw, direction: &[f64], x: f64) -> Result<Conjugate1d> {
    let p = law.along(direction);
    if x == 0.0 {
        return Ok(Conjugate1d {
            value: 0.0,
            lambda: 0.0,
            iterations: 0,
        });
    }
    let sign = x.signum();
    let reach = if sign > 0.0 {
        p.sup_slope()
    } else {
        let neg: Vec<f64> = direction.iter().map(|v| -v).collect();
        law.support_extent(&neg)
    };
    if x.abs() >= reach {
        return Err(Error::RangeError {
            value: x,
            low: -law.support_extent(&direction.iter().map(|v| -v).collect::<Vec<_>>()),
            high: p.sup_slope(),
        });
    }
    // bracket [lo, hi] in the direction of x, with slope(lo) < x <= slope(hi) (mirrored for x < 0)
    let slope = |l: f64| p.d1(l).map(|s| s - x);
    let (mut lo, mut hi) = (0.0f64, sign);
    let mut iterations = 0;
    while sign * slope(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi.abs() > 1e8 {
            return Err(Error::RangeError {
                value: x,
                low: f64::NEG_INFINITY,
                high: f64::INFINITY,
            });
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    loop {
        iterations += 1;
        let h = slope(lambda)?;
        if h == 0.0 {
            break;
        }
        if sign * h < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let curvature = p.d2(lambda)?;
        let newton = lambda - h / curvature;
        let inside = curvature > 0.0 && newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        let step = (next - lambda).abs();
        lambda = next;
        if step <= LAMBDA_TOL * lambda.abs().max(1.0) || (hi - lo).abs() <= LAMBDA_TOL {
            break;
        }
        if iterations > MAX_NEWTON {
            return Err(Error::ConvergenceFailure {
                iterations,
                residual: h.abs(),
                best: vec![lambda],
            });
        }
    }
    Ok(Conjugate1d {
        value: lambda * x - p.log_mgf(lambda)?,
        lambda,
        iterations,
    })
}

fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

/// `Î(x) = sup_λ (λ·x − log φ(λ))` by damped Newton on the convex dual
/// objective `log φ(λ) − λ·x`.
pub fn legendre_nd(law: &IncrementLaw, x: &[f64]) -> Result<ConjugateNd> {
    let d = law.dimension();
    assert_eq!(x.len(), d, "point dimension does not match the law");
    let objective = |l: &[f64]| -> Result<f64> {
        Ok(law.log_mgf(l)? - l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
    };
    let mut lambda = vec![0.0; d];
    let mut value = objective(&lambda)?;
    let mut best = (f64::INFINITY, lambda.clone());
    for iterations in 0..MAX_NEWTON {
        let grad: Vec<f64> = law
            .log_mgf_grad(&lambda)?
            .iter()
            .zip(x)
            .map(|(g, t)| g - t)
            .collect();
        let gnorm = norm(&grad);
        if gnorm < best.0 {
            best = (gnorm, lambda.clone());
        }
        if gnorm <= ND_GRADIENT_TOL {
            return Ok(ConjugateNd {
                value: -value,
                lambda,
                iterations,
            });
        }
        let hess = law.log_mgf_hessian(&lambda)?;
        let step = solve_linear(hess, grad.iter().map(|g| -g).collect()).unwrap_or_else(|| grad.iter().map(|g| -g).collect());
        // halve while the MGF is infinite or the objective fails to decrease
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = lambda.iter().zip(&step).map(|(l, s)| l + t * s).collect();
            let v = objective(&trial)?;
            if v.is_finite() && v <= value + 1e-14 * value.abs().max(1.0) {
                lambda = trial;
                value = v;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::ConvergenceFailure {
                    iterations,
                    residual: gnorm,
                    best: best.1,
                });
            }
        }
        if norm(&lambda) > 1e8 {
            return Err(Error::RangeError {
                value: norm(x),
                low: 0.0,
                high: f64::INFINITY,
            });
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: MAX_NEWTON,
        residual: best.0,
        best: best.1,
    })
}

/// Bisection for the root of an increasing function on `[lo, hi]`.
fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64) -> Result<(f64, usize)> {
    for it in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((mid, it));
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), BISECTION_ITERS))
}

/// Upper bisection bracket for a rate function that is increasing on
/// `(0, reach)`: `0.999 · reach` for bounded slopes, doubling otherwise.
fn upper_bracket<F: FnMut(f64) -> Result<f64>>(mut rate: F, reach: f64, log_rho: f64) -> Result<f64> {
    if reach.is_finite() {
        let hi = 0.999 * reach;
        if rate(hi)? <= log_rho {
            return Err(Error::RangeError {
                value: log_rho,
                low: 0.0,
                high: rate(hi)?,
            });
        }
        return Ok(hi);
    }
    let mut hi = 1.0;
    while rate(hi)? <= log_rho {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::RangeError {
                value: log_rho,
                low: 0.0,
                high: f64::INFINITY,
            });
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub lambda_tol: f64,
    pub gradient_tol: f64,
    pub bisection_lower: f64,
    pub bisection_upper_c1: f64,
    pub bisection_upper_c1_hat: f64,
    pub iterations_c1: usize,
    pub iterations_c1_hat: usize,
}

/// General-case constants and the pivot frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotFrame {
    pub c1_hat: f64,
    pub c2_vec: Vec<f64>,
    /// `c2_vec / |c2_vec|`.
    pub pivot: Vec<f64>,
    /// Orthonormal basis of the hyperplane orthogonal to the pivot.
    pub transverse: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdConstants {
    pub dimension: usize,
    pub rho: f64,
    /// Speed of the BRW of first coordinates: `I(c1) = log ρ`.
    pub c1: f64,
    /// `I'(c1)`.
    pub c2: f64,
    pub frame: PivotFrame,
    pub spherically_symmetric: bool,
    pub provenance: Provenance,
}

impl LdConstants {
    pub fn pivot(&self) -> &[f64] {
        &self.frame.pivot
    }

    /// Coordinates of `v` in the transverse basis.
    pub fn transverse_coords(&self, v: &[f64]) -> Vec<f64> {
        self.frame
            .transverse
            .iter()
            .map(|b| b.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    }
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `pivot`.
pub fn gram_schmidt_complement(pivot: &[f64]) -> Vec<Vec<f64>> {
    let d = pivot.len();
    let mut basis: Vec<Vec<f64>> = vec![pivot.to_vec()];
    // start from the axes least aligned with the pivot
    let mut axes: Vec<usize> = (0..d).collect();
    axes.sort_by(|&a, &b| pivot[a].abs().total_cmp(&pivot[b].abs()).then(a.cmp(&b)));
    for axis in axes {
        if basis.len() == d {
            break;
        }
        let mut v = unit(d, axis);
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    let mut rest = basis.split_off(1);
    // deterministic orientation: largest-magnitude coordinate positive
    for v in rest.iter_mut() {
        let idx = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|p| p.0)
            .unwrap_or(0);
        if v[idx] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    rest.sort_by(|a, b| {
        let ia = a.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0;
        let ib = b.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0;
        ia.cmp(&ib)
    });
    rest
}

/// Solves `I(c1) = log ρ`, `c2 = I'(c1)` for the first-coordinate law and
/// `Î(ĉ1 e1) = log ρ`, `c2_vec = ∇Î(ĉ1 e1)` for the full law.
pub fn solve_constants(inc: &IncrementLaw, off: &OffspringLaw) -> Result<LdConstants> {
    solve_constants_with_lower(inc, off, BISECTION_LOW)
}

/// [`solve_constants`] with a custom lower bisection bracket.
pub fn solve_constants_with_lower(inc: &IncrementLaw, off: &OffspringLaw, lower: f64) -> Result<LdConstants> {
    let rho = off.rho();
    if rho <= 1.0 {
        return Err(Error::InvalidArgument(format!("offspring mean {rho} is not supercritical")));
    }
    let log_rho = rho.ln();
    let d = inc.dimension();
    let e1 = unit(d, 0);

    let rate_1d = |x: f64| legendre_1d(inc, &e1, x).map(|c| c.value);
    let hi = upper_bracket(rate_1d, inc.support_extent(&e1), log_rho)?;
    let (c1, iterations_c1) = bisect(|x| rate_1d(x).map(|v| v - log_rho), lower, hi)?;
    let c2 = legendre_1d(inc, &e1, c1)?.lambda;

    let rate_nd = |x: f64| {
        let mut p = vec![0.0; d];
        p[0] = x;
        legendre_nd(inc, &p).map(|c| c.value)
    };
    let hi_hat = upper_bracket(rate_nd, inc.support_extent(&e1), log_rho)?;
    let (c1_hat, iterations_c1_hat) = bisect(|x| rate_nd(x).map(|v| v - log_rho), lower, hi_hat)?;
    let mut point = vec![0.0; d];
    point[0] = c1_hat;
    let c2_vec = legendre_nd(inc, &point)?.lambda;
    let n = norm(&c2_vec);
    let pivot: Vec<f64> = c2_vec.iter().map(|x| x / n).collect();
    let transverse = gram_schmidt_complement(&pivot);

    Ok(LdConstants {
        dimension: d,
        rho,
        c1,
        c2,
        frame: PivotFrame {
            c1_hat,
            c2_vec,
            pivot,
            transverse,
        },
        spherically_symmetric: inc.spherically_symmetric(),
        provenance: Provenance {
            lambda_tol: LAMBDA_TOL,
            gradient_tol: ND_GRADIENT_TOL,
            bisection_lower: lower,
            bisection_upper_c1: hi,
            bisection_upper_c1_hat: hi_hat,
            iterations_c1,
            iterations_c1_hat,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Symmetric,
    General,
}

/// Deterministic asymptotes `m_n` (along the pivot) and `t_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub constants: LdConstants,
    pub case: Case,
}

impl Asymptote {
    pub fn new(constants: LdConstants) -> Self {
        let case = if constants.spherically_symmetric {
            Case::Symmetric
        } else {
            Case::General
        };
        Self { constants, case }
    }

    pub fn with_case(constants: LdConstants, case: Case) -> Self {
        Self { constants, case }
    }

    pub fn dimension(&self) -> usize {
        self.constants.dimension
    }

    pub fn pivot(&self) -> Vec<f64> {
        match self.case {
            Case::Symmetric => unit(self.dimension(), 0),
            Case::General => self.constants.frame.pivot.clone(),
        }
    }

    /// Orthonormal basis of the pivot's orthogonal complement.
    pub fn transverse_basis(&self) -> Vec<Vec<f64>> {
        gram_schmidt_complement(&self.pivot())
    }

    /// Speed of the BRW projected on the unit pivot.
    pub fn pivot_speed(&self) -> f64 {
        match self.case {
            Case::Symmetric => self.constants.c1,
            Case::General => {
                let f = &self.constants.frame;
                f.c1_hat * f.pivot[0]
            }
        }
    }

    /// Tilt of the projected BRW; plays the role of `c2` along the pivot.
    pub fn pivot_tilt(&self) -> f64 {
        match self.case {
            Case::Symmetric => self.constants.c2,
            Case::General => norm(&self.constants.frame.c2_vec),
        }
    }

    /// Pivot coordinate of the target centre `x e1`.
    pub fn pivot_level(&self, x: f64) -> f64 {
        match self.case {
            Case::Symmetric => x,
            Case::General => x * self.constants.frame.pivot[0],
        }
    }

    /// `m_n = c1 n − (3 / (2 c2)) log n` in pivot units.
    pub fn m_of_n(&self, n: f64) -> f64 {
        self.pivot_speed() * n - 1.5 / self.pivot_tilt() * n.ln()
    }

    pub fn t_of_x_symmetric(&self, x: f64) -> f64 {
        let k = &self.constants;
        let d = k.dimension as f64;
        x / k.c1 + (d + 2.0) / (2.0 * k.c2 * k.c1) * x.ln()
    }

    pub fn t_of_x_general(&self, x: f64) -> f64 {
        let f = &self.constants.frame;
        let d = self.constants.dimension as f64;
        x / f.c1_hat + (d + 2.0) / (2.0 * f.c1_hat * f.c2_vec[0]) * x.ln()
    }

    /// `t_x`, the first-passage asymptote.
    pub fn t_of_x(&self, x: f64) -> f64 {
        match self.case {
            Case::Symmetric => self.t_of_x_symmetric(x),
            Case::General => self.t_of_x_general(x),
        }
    }

    /// `t_x − (log x)²`.
    pub fn t_tilde(&self, x: f64) -> f64 {
        self.t_of_x(x) - x.ln().powi(2)
    }

    /// Slope `(d + 2) / (2 c1 c2)` of the logarithmic correction of `t_x`.
    pub fn log_coefficient(&self) -> f64 {
        let d = self.constants.dimension as f64;
        match self.case {
            Case::Symmetric => (d + 2.0) / (2.0 * self.constants.c1 * self.constants.c2),
            Case::General => {
                let f = &self.constants.frame;
                (d + 2.0) / (2.0 * f.c1_hat * f.c2_vec[0])
            }
        }
    }

    pub fn fpt_speed(&self) -> f64 {
        match self.case {
            Case::Symmetric => self.constants.c1,
            Case::General => self.constants.frame.c1_hat,
        }
    }

    fn mwtx_rhs(&self, x: f64) -> f64 {
        let d = self.constants.dimension as f64;
        let l = x.ln();
        x + (d - 1.0) / (2.0 * self.pivot_tilt()) * l - self.pivot_speed() * l * l
    }

    /// `m_{⌊t̃_x⌋} − (x + ((d−1)/(2c2)) log x − c1 (log x)²)`.
    pub fn mwtx_residual(&self, x: f64) -> f64 {
        self.m_of_n(self.t_tilde(x).floor()) - self.mwtx_rhs(x)
    }

    /// Same difference without the floor, i.e. the analytic remainder.
    pub fn mwtx_remainder(&self, x: f64) -> f64 {
        self.m_of_n(self.t_tilde(x)) - self.mwtx_rhs(x)
    }

    /// Limit of [`Self::mwtx_remainder`] as `x → ∞`: `(3/(2c2)) log c1`.
    pub fn mwtx_remainder_limit(&self) -> f64 {
        1.5 / self.pivot_tilt() * self.fpt_speed().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(d: usize) -> IncrementLaw {
        IncrementLaw::isotropic_gaussian(d, 1.0).unwrap()
    }

    #[test]
    fn gaussian_conjugate_is_quadratic() {
        let c = legendre_1d(&gaussian(1), &[1.0], 0.8).unwrap();
        assert!((c.value - 0.32).abs() < 1e-14);
        assert!((c.lambda - 0.8).abs() < 1e-12);
        let c = legendre_nd(&gaussian(2), &[0.5, 0.3]).unwrap();
        assert!((c.value - 0.17).abs() < 1e-14);
        assert!((c.lambda[0] - 0.5).abs() < 1e-12 && (c.lambda[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn conjugate_vanishes_at_the_mean() {
        let law = IncrementLaw::uniform_ball(2, 1.0).unwrap();
        let c = legendre_1d(&law, &[1.0, 0.0], 0.0).unwrap();
        assert_eq!((c.value, c.lambda), (0.0, 0.0));
        let c = legendre_nd(&law, &[0.0, 0.0]).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.lambda.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn negative_slopes_use_negative_tilts() {
        let c = legendre_1d(&gaussian(1), &[1.0], -0.6).unwrap();
        assert!((c.lambda + 0.6).abs() < 1e-12);
        assert!((c.value - 0.18).abs() < 1e-14);
    }

    #[test]
    fn anisotropic_is_separable() {
        let law = IncrementLaw::anisotropic_gaussian(vec![1.0, 2.0]).unwrap();
        let c = legendre_nd(&law, &[0.4, 0.4]).unwrap();
        let exact = 0.4f64 * 0.4 / 2.0 + 0.4 * 0.4 / 8.0;
        assert!((c.value - exact).abs() < 1e-9);
    }

    #[test]
    fn bounded_support_rejects_unreachable_slopes() {
        let law = IncrementLaw::uniform_cube(1, 1.0).unwrap();
        assert!(matches!(legendre_1d(&law, &[1.0], 1.0), Err(Error::RangeError { .. })));
        assert!(matches!(legendre_1d(&law, &[1.0], -1.2), Err(Error::RangeError { .. })));
    }

    #[test]
    fn gaussian_constants() {
        let k = solve_constants(&gaussian(1), &OffspringLaw::deterministic(2)).unwrap();
        let exact = (2.0 * 2f64.ln()).sqrt();
        assert!((k.c1 - exact).abs() < 1e-9);
        assert!((k.c2 - exact).abs() < 1e-9);
        assert!((k.c1 - 1.177410).abs() < 1e-6);
    }

    #[test]
    fn general_frame_reduces_for_gaussian() {
        let k = solve_constants(&gaussian(3), &OffspringLaw::deterministic(2)).unwrap();
        assert!((k.frame.c1_hat - k.c1).abs() < 1e-9);
        assert!((k.frame.c2_vec[0] - k.c2).abs() < 1e-9);
        assert!(k.frame.c2_vec[1..].iter().all(|x| x.abs() < 1e-9));
        assert_eq!(k.frame.transverse.len(), 2);
        for b in &k.frame.transverse {
            assert!(b[0].abs() < 1e-12 && (norm(b) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_and_t_formulas() {
        let k = solve_constants(&gaussian(2), &OffspringLaw::deterministic(2)).unwrap();
        let a = Asymptote::new(k.clone());
        let m100 = a.m_of_n(100.0);
        assert!((m100 - 111.874).abs() < 1e-3, "{m100}");
        assert!((a.m_of_n(2.0) - (2.0 * k.c1 - 1.5 / k.c2 * 2f64.ln())).abs() < 1e-12);
        let t50 = a.t_of_x(50.0);
        assert!((t50 - 48.11).abs() < 5e-3, "{t50}");
        assert!((a.t_of_x_general(50.0) - t50).abs() < 1e-6);
        let one_d = Asymptote::new(solve_constants(&gaussian(1), &OffspringLaw::deterministic(2)).unwrap());
        let e = std::f64::consts::E;
        let kc = &one_d.constants;
        assert!((one_d.t_of_x(e) - (e / kc.c1 + 3.0 / (2.0 * kc.c2 * kc.c1))).abs() < 1e-12);
    }

    #[test]
    fn m_is_increasing_on_the_grid() {
        let a = Asymptote::new(solve_constants(&gaussian(1), &OffspringLaw::deterministic(2)).unwrap());
        let k = &a.constants;
        assert!(k.c1 > 3.0 / (2.0 * k.c2 * 2.0));
        let mut prev = a.m_of_n(2.0);
        for n in 3..=1_000_000u32 {
            let m = a.m_of_n(n as f64);
            assert!(m > prev, "n = {n}");
            prev = m;
        }
    }

    #[test]
    fn mwtx_residual_bounded_by_rounding() {
        for d in [1usize, 2] {
            let a = Asymptote::new(solve_constants(&gaussian(d), &OffspringLaw::deterministic(2)).unwrap());
            let c1 = a.constants.c1;
            assert!(a.mwtx_residual(1e6).abs() <= c1 + 0.01);
            assert!(a.mwtx_residual(1e9).abs() <= a.mwtx_residual(1e3).abs() + c1);
        }
    }

    #[test]
    fn mwtx_remainder_converges_to_its_limit() {
        let a = Asymptote::new(solve_constants(&gaussian(2), &OffspringLaw::deterministic(2)).unwrap());
        let lim = a.mwtx_remainder_limit();
        let mut prev = f64::INFINITY;
        for e in 3..=9 {
            let gap = (a.mwtx_remainder(10f64.powi(e)) - lim).abs();
            assert!(gap < prev, "x = 1e{e}: {gap}");
            prev = gap;
        }
        assert!(prev < 1e-5);
    }
}
