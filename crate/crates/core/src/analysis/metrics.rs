use crate::cavity::{dephasing_penalty, DephasingParams, ReflectionPair};
use crate::error::{Error, Result};
use crate::hilbert::{overlap, HybridState, PROBABILITY_TOL};

/// `|<ideal|actual>|^2` with `actual` renormalized first.
pub fn fidelity(actual: &HybridState, ideal: &HybridState) -> Result<f64> {
    let n_ideal = ideal.norm_sqr();
    if (n_ideal - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::Precondition(format!("reference state has norm^2 {n_ideal}")));
    }
    let n = actual.norm_sqr();
    if n == 0.0 {
        return Err(Error::NumericDomain("cannot compare an empty state".into()));
    }
    let f = overlap(ideal, actual)?.norm_sqr() / (n * n_ideal);
    Ok(f.clamp(0.0, 1.0))
}

/// `|(r_h - r_o)/2|^8`: both blocks of each photon must succeed, in both
/// the generator and the analyzer.
pub fn efficiency_closed_form(pair: &ReflectionPair) -> Result<f64> {
    if !pair.is_finite() {
        return Err(Error::NumericDomain("reflection coefficients must be finite".into()));
    }
    Ok(((pair.r_h - pair.r_o) * 0.5).norm_sqr().powi(4))
}

/// Fidelity after trion dephasing, in both readings of the penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasedFidelity {
    pub penalty: f64,
    /// `F - (1 - exp(-tau/Gamma))`.
    pub subtractive: f64,
    /// `F * exp(-tau/Gamma)`.
    pub multiplicative: f64,
}

impl DephasedFidelity {
    pub fn new(fidelity: f64, d: &DephasingParams) -> Self {
        let penalty = dephasing_penalty(d);
        DephasedFidelity {
            penalty,
            subtractive: fidelity - penalty,
            multiplicative: fidelity * (1.0 - penalty),
        }
    }
}
