//! Reflection of a single photon from a charged quantum dot in a single-sided
//! micropillar cavity, in the weak-excitation steady state.
//!
//! All rates are in units of the cavity decay rate and all frequencies enter
//! only as detunings, so `kappa = 1` is the usual choice.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::re;

/// Physical parameters of one QD-cavity unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityParams {
    /// QD-cavity coupling strength.
    pub g: f64,
    /// Cavity field decay rate.
    pub kappa: f64,
    /// Side leakage rate.
    pub kappa_s: f64,
    /// Trion decay rate.
    pub gamma: f64,
    /// Photon frequency.
    pub omega: f64,
    /// Cavity resonance.
    pub omega_c: f64,
    /// Trion transition frequency.
    pub omega_x: f64,
}

impl CavityParams {
    /// `omega = omega_c = omega_x` with `kappa = 1`.
    pub fn resonant(g: f64, kappa_s: f64, gamma: f64) -> Self {
        CavityParams {
            g,
            kappa: 1.0,
            kappa_s,
            gamma,
            omega: 0.0,
            omega_c: 0.0,
            omega_x: 0.0,
        }
    }

    /// Detune the photon by `delta` from both the cavity and the trion line.
    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.omega = self.omega_c + delta;
        self.omega_x = self.omega_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g,
            self.kappa,
            self.kappa_s,
            self.gamma,
            self.omega,
            self.omega_c,
            self.omega_x,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain("cavity parameters must be finite".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::NumericDomain("kappa must be positive".into()));
        }
        if self.kappa_s < 0.0 || self.gamma < 0.0 || self.g < 0.0 {
            return Err(Error::NumericDomain("g, kappa_s and gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Cold-cavity (`r_o`) and hot-cavity (`r_h`) reflection coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionPair {
    pub r_o: C64,
    pub r_h: C64,
}

impl ReflectionPair {
    pub fn new(r_o: C64, r_h: C64) -> Self {
        ReflectionPair { r_o, r_h }
    }

    /// Lossless resonant limit: `r_o = -1`, `r_h = +1`.
    pub fn ideal() -> Self {
        ReflectionPair::new(re(-1.0), re(1.0))
    }

    pub fn phi_o(&self) -> f64 {
        self.r_o.arg()
    }

    pub fn phi_h(&self) -> f64 {
        self.r_h.arg()
    }

    /// `phi_h - phi_o` folded into `[0, 2pi)`.
    pub fn phase_difference(&self) -> f64 {
        (self.phi_h() - self.phi_o()).rem_euclid(std::f64::consts::TAU)
    }

    /// Amplitude with which a photon leaves a block with its spin flipped:
    /// `(r_o - r_h)/2`.
    pub fn success_amplitude(&self) -> C64 {
        (self.r_o - self.r_h) * 0.5
    }

    /// Amplitude that leaves a block unchanged: `(r_o + r_h)/2`.
    pub fn leak_amplitude(&self) -> C64 {
        (self.r_o + self.r_h) * 0.5
    }

    /// The pair `(s, -s)` with `s` the success amplitude. It has the same
    /// success amplitude as `self` and zero leak amplitude, so a circuit run
    /// with it yields exactly the error-free component of a run with `self`.
    pub fn leak_free(&self) -> Self {
        let s = self.success_amplitude();
        ReflectionPair::new(s, -s)
    }

    pub fn is_finite(&self) -> bool {
        self.r_o.is_finite() && self.r_h.is_finite()
    }
}

/// Steady-state reflection coefficients for the given cavity.
pub fn reflection_coefficients(p: &CavityParams) -> Result<ReflectionPair> {
    p.validate()?;
    let cavity = C64::new(p.kappa / 2.0 + p.kappa_s / 2.0, p.omega_c - p.omega);
    let denom_o = cavity;
    if denom_o == C64::default() {
        return Err(Error::NumericDomain("cold-cavity denominator vanishes".into()));
    }
    let r_o = C64::new(p.kappa_s / 2.0 - p.kappa / 2.0, p.omega_c - p.omega) / denom_o;

    let r_h = if p.g == 0.0 {
        r_o
    } else {
        let trion = C64::new(p.gamma / 2.0, p.omega_x - p.omega);
        let denom = trion * cavity + p.g * p.g;
        if denom == C64::default() {
            return Err(Error::NumericDomain("hot-cavity denominator vanishes".into()));
        }
        re(1.0) - trion * p.kappa / denom
    };
    let pair = ReflectionPair::new(r_o, r_h);
    if !pair.is_finite() {
        return Err(Error::NumericDomain("reflection coefficient is not finite".into()));
    }
    Ok(pair)
}

/// Spin-selective reflection on `{R up, R down, L up, L down}`.
///
/// `R up` and `L down` see the cold cavity, `R down` and `L up` drive the
/// trion and see the hot cavity. The raw complex coefficients are used as-is.
pub fn reflection_operator(pair: &ReflectionPair) -> Matrix4<C64> {
    Matrix4::from_diagonal(&Vector4::new(pair.r_o, pair.r_h, pair.r_h, pair.r_o))
}

/// Trion dephasing time scales, in picoseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingParams {
    /// Cavity photon lifetime.
    pub tau: f64,
    /// Trion coherence time.
    pub big_gamma: f64,
}

impl DephasingParams {
    pub fn new(tau: f64, big_gamma: f64) -> Result<Self> {
        if !(tau > 0.0 && big_gamma > 0.0 && tau.is_finite() && big_gamma.is_finite()) {
            return Err(Error::NumericDomain("tau and Gamma must be positive and finite".into()));
        }
        Ok(DephasingParams { tau, big_gamma })
    }
}

/// Fidelity reduction `1 - exp(-tau/Gamma)`.
pub fn dephasing_penalty(d: &DephasingParams) -> f64 {
    -(-d.tau / d.big_gamma).exp_m1()
}
