//! Jump and reproduction laws.

pub mod increment;
pub mod offspring;
mod quadrature;

use serde::{Deserialize, Serialize};

pub use increment::{IncrementKind, IncrementLaw, MgfDomain, Projection};
pub use offspring::OffspringLaw;

use crate::ratefn::{legendre_1d, legendre_nd, unit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub holds: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, holds: bool, value: Option<f64>, detail: String) -> AssumptionCheck {
    AssumptionCheck {
        name: name.into(),
        holds,
        value,
        detail,
    }
}

/// Evaluates the standing hypotheses on a pair of laws. Nothing here fails:
/// every violation is recorded in the report instead.
pub fn check_assumptions(inc: &IncrementLaw, off: &OffspringLaw) -> AssumptionReport {
    let d = inc.dimension();
    let e1 = unit(d, 0);
    let log_rho = off.rho().ln();
    let mut checks = Vec::new();

    let m3 = off.third_moment();
    checks.push(check("third_moment", m3.is_finite(), Some(m3), format!("sum i^3 p_i = {m3}")));
    checks.push(check(
        "supercritical",
        off.rho() > 1.0,
        Some(off.rho()),
        format!("offspring mean {}", off.rho()),
    ));

    let drift = inc.log_mgf_grad(&vec![0.0; d]).map(|g| g.iter().map(|x| x.abs()).fold(0.0, f64::max));
    checks.push(match drift {
        Ok(v) => check("centered", v < 1e-9, Some(v), format!("max |E xi_i| = {v:e}")),
        Err(e) => check("centered", false, None, e.to_string()),
    });

    checks.push(check(
        "spherical_symmetry",
        inc.spherically_symmetric(),
        None,
        format!("{:?}", inc.kind()),
    ));
    checks.push(check("non_lattice", inc.non_lattice(), None, "continuous law".into()));

    let reach = inc.support_extent(&e1);
    let probe = |f: &dyn Fn(f64) -> crate::Result<f64>| -> (bool, Option<f64>, String) {
        if reach.is_finite() {
            let x = 0.999 * reach;
            match f(x) {
                Ok(v) => (v > log_rho, Some(v), format!("rate at {x} is {v}, log rho = {log_rho}")),
                Err(e) => (false, None, e.to_string()),
            }
        } else {
            let mut x = 1.0;
            loop {
                match f(x) {
                    Ok(v) if v > log_rho => {
                        break (true, Some(v), format!("rate at {x} is {v}, log rho = {log_rho}"))
                    }
                    Ok(v) if x > 1e6 => break (false, Some(v), format!("rate stays below log rho up to {x}")),
                    Ok(_) => x *= 2.0,
                    Err(e) => break (false, None, e.to_string()),
                }
            }
        }
    };
    let (holds, value, detail) = probe(&|x| legendre_1d(inc, &e1, x).map(|c| c.value));
    checks.push(check("rate_exceeds_log_rho", holds, value, detail));
    let (holds, value, detail) = probe(&|x| {
        let mut p = vec![0.0; d];
        p[0] = x;
        legendre_nd(inc, &p).map(|c| c.value)
    });
    checks.push(check("full_rate_exceeds_log_rho", holds, value, detail));

    AssumptionReport { checks }
}
