//! Globally adaptive Gauss–Kronrod (7/15) quadrature for a small vector of
//! integrands sharing one abscissa set.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 500;

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Panel<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let points: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
        for &p in points {
            let fx = f(center + half * p);
            for k in 0..N {
                kronrod[k] += w * fx[k];
                if j % 2 == 1 {
                    gauss[k] += WG[j / 2] * fx[k];
                }
            }
        }
    }
    let mut error = 0.0f64;
    for k in 0..N {
        kronrod[k] *= half;
        gauss[k] *= half;
        error = error.max((kronrod[k] - gauss[k]).abs());
    }
    Panel {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrates every component of `f` over `[a, b]`.
///
/// Convergence is judged on the worst component error against
/// `rel_tol * |first component|`; callers put the dominating integral first.
pub(crate) fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<[f64; N]> {
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in &panels {
            for k in 0..N {
                total[k] += p.value[k];
            }
            err += p.error;
        }
        let scale = total[0].abs().max(f64::MIN_POSITIVE);
        if err <= rel_tol * scale {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure {
                tolerance: rel_tol,
                estimate: err / scale,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let [v] = integrate(|x| [x * x], 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let [v] = integrate(|x| [x.exp()], -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 * 1f64.sinh()).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand_subdivides() {
        let [v] = integrate(|x| [(-400.0 * (x - 0.3) * (x - 0.3)).exp()], -1.0, 1.0, 1e-10).unwrap();
        let exact = (std::f64::consts::PI / 400.0).sqrt();
        assert!((v - exact).abs() < 1e-10 * exact);
    }
}
