//! Rate-function solvers against brute-force grid conjugates.

use brwlab::ratefn::{legendre_1d, solve_constants};
use brwlab::{IncrementLaw, OffspringLaw};

/// `log E e^{λU}` for `U` uniform on `[−1, 1]`, written independently of the library.
fn uniform_log_mgf(l: f64) -> f64 {
    if l.abs() < 1e-8 {
        l * l / 6.0
    } else {
        (l.sinh() / l).ln()
    }
}

/// Dense grid maximum of `λx − Λ(λ)` on `[0, 40]` with step 1e-5, then a
/// golden-section polish around the best grid point.
fn grid_conjugate(x: f64) -> (f64, f64) {
    let f = |l: f64| l * x - uniform_log_mgf(l);
    let step = 1e-5;
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut k = 0u64;
    loop {
        let l = k as f64 * step;
        if l > 40.0 {
            break;
        }
        let v = f(l);
        if v > best.0 {
            best = (v, l);
        }
        k += 1;
    }
    let (mut a, mut b) = ((best.1 - step).max(0.0), best.1 + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let l = (a + b) / 2.0;
    (f(l), l)
}

#[test]
fn uniform_conjugate_matches_grid() {
    let law = IncrementLaw::uniform_cube(1, 1.0).unwrap();
    let (value, lambda) = grid_conjugate(0.5);
    let c = legendre_1d(&law, &[1.0], 0.5).unwrap();
    assert!((c.value - value).abs() < 1e-9, "{} vs {}", c.value, value);
    assert!((c.lambda - lambda).abs() < 1e-6);
}

#[test]
fn uniform_speed_and_tilt_match_grid_inversion() {
    let inc = IncrementLaw::uniform_cube(1, 1.0).unwrap();
    let off = OffspringLaw::deterministic(2);
    let k = solve_constants(&inc, &off).unwrap();
    // bisection on the grid conjugate
    let (mut lo, mut hi) = (1e-3, 0.999);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if grid_conjugate(mid).0 < 2f64.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c1 = 0.5 * (lo + hi);
    let c2 = grid_conjugate(c1).1;
    assert!((k.c1 - c1).abs() < 1e-6, "{} vs {}", k.c1, c1);
    assert!((k.c2 - c2).abs() < 1e-6, "{} vs {}", k.c2, c2);
}

#[test]
fn gaussian_speed_is_closed_form() {
    let k = solve_constants(&IncrementLaw::isotropic_gaussian(3, 1.0).unwrap(), &OffspringLaw::deterministic(2)).unwrap();
    let exact = (2.0 * 2f64.ln()).sqrt();
    assert!((k.c1 - exact).abs() < 1e-9);
    assert!((k.c2 - exact).abs() < 1e-9);
}

#[test]
fn symmetric_laws_have_consistent_general_constants() {
    let off = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
    let laws = [
        IncrementLaw::isotropic_gaussian(2, 0.7).unwrap(),
        IncrementLaw::uniform_ball(3, 1.5).unwrap(),
        IncrementLaw::uniform_ball(1, 1.0).unwrap(),
    ];
    for law in &laws {
        let k = solve_constants(law, &off).unwrap();
        assert!((k.frame.c1_hat - k.c1).abs() <= 1e-7);
        let mut e = vec![0.0; law.dimension()];
        e[0] = k.c2;
        let gap: f64 = k.frame.c2_vec.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(gap <= 1e-7);
    }
}
