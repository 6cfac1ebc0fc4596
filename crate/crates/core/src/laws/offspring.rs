use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Finite-support reproduction law `{p_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    rho: f64,
    third_moment: f64,
}

impl OffspringLaw {
    /// Builds the law from `(i, p_i)` pairs. Probabilities must be
    /// non-negative and sum to one within 1e-9; they are renormalised.
    ///
    /// Subcritical and critical laws are accepted here so that
    /// [`crate::laws::check_assumptions`] can report them.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidLaw("offspring pmf is empty".into()));
        }
        let max = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let mut pmf = vec![0.0; max + 1];
        for &(i, p) in pairs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidLaw(format!("p_{i} = {p} is not a probability")));
            }
            pmf[i] += p;
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLaw(format!("offspring pmf sums to {total}, not 1")));
        }
        for p in pmf.iter_mut() {
            *p /= total;
        }
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let rho = pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
        let third_moment = pmf.iter().enumerate().map(|(i, p)| (i as f64).powi(3) * p).sum();
        Ok(Self {
            pmf,
            cdf,
            rho,
            third_moment,
        })
    }

    /// Every particle has exactly `k` children.
    pub fn deterministic(k: usize) -> Self {
        Self::from_pairs(&[(k, 1.0)]).expect("point mass is a valid pmf")
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.pmf.iter().cloned().enumerate().filter(|(_, p)| *p > 0.0).collect()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn third_moment(&self) -> f64 {
        self.third_moment
    }

    pub fn max_offspring(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn can_die(&self) -> bool {
        self.pmf[0] > 0.0
    }

    fn point_mass(&self) -> Option<usize> {
        self.pmf.iter().position(|&p| p == 1.0)
    }

    /// Inverse-CDF draw. A point mass consumes no randomness.
    #[inline]
    pub fn sample(&self, rng: &mut RandomStream) -> usize {
        if let Some(k) = self.point_mass() {
            return k;
        }
        let u = rng.uniform();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.pmf.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn moments() {
        let law = OffspringLaw::from_pairs(&[(0, 0.3), (2, 0.7)]).unwrap();
        assert!((law.rho() - 1.4).abs() < 1e-15);
        assert!((law.third_moment() - 5.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_pmf() {
        assert!(OffspringLaw::from_pairs(&[(1, 0.5), (2, 0.4)]).is_err());
        assert!(OffspringLaw::from_pairs(&[(1, -0.5), (2, 1.5)]).is_err());
        assert!(OffspringLaw::from_pairs(&[]).is_err());
    }

    #[test]
    fn point_mass_consumes_no_randomness() {
        let law = OffspringLaw::deterministic(2);
        let mut a = RandomStream::from_seed(1);
        let b = a.clone();
        assert_eq!(law.sample(&mut a), 2);
        assert_eq!(a.uniform(), b.clone().uniform());
    }

    #[test]
    fn frequencies_pass_chi_square() {
        let law = OffspringLaw::from_pairs(&[(0, 0.2), (1, 0.1), (2, 0.4), (3, 0.3)]).unwrap();
        let mut rng = RandomStream::from_seed(99);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[law.sample(&mut rng)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(law.pmf())
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let pvalue = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
        assert!(pvalue > 1e-3, "chi2 = {stat}, p = {pvalue}");
    }
}
