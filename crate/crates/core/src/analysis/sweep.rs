use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::cavity::{reflection_coefficients, CavityParams, DephasingParams, ReflectionPair};
use crate::error::{Error, Result};
use crate::hilbert::HybridState;
use crate::protocols::{hbsa_stage1_output, leakage_between, make_bell, run_hbsg, HyperBellLabel};

use super::metrics::{efficiency_closed_form, DephasedFidelity};

/// Axes of a parameter sweep, all rates in units of `kappa`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub kappa_s_over_kappa: Vec<f64>,
    /// `g / (kappa_s + kappa)`.
    pub g_over_sum: Vec<f64>,
    pub gamma_over_kappa: f64,
    pub detuning: f64,
    pub dephasing: Option<DephasingParams>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            kappa_s_over_kappa: linspace(0.0, 1.0, 101),
            g_over_sum: linspace(0.0, 2.5, 101),
            gamma_over_kappa: 0.1,
            detuning: 0.0,
            dephasing: None,
        }
    }
}

/// `steps` evenly spaced points from `min` to `max` inclusive. One step
/// gives `[min]`.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![min],
        _ => (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    max
                } else {
                    min + (max - min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

impl SweepGrid {
    pub fn new(kappa_s_over_kappa: Vec<f64>, g_over_sum: Vec<f64>, gamma_over_kappa: f64) -> Result<Self> {
        let grid = SweepGrid {
            kappa_s_over_kappa,
            g_over_sum,
            gamma_over_kappa,
            ..SweepGrid::default()
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_s_over_kappa.is_empty() || self.g_over_sum.is_empty() {
            return Err(Error::config("sweep axes must not be empty"));
        }
        let values = self
            .kappa_s_over_kappa
            .iter()
            .chain(&self.g_over_sum)
            .chain([&self.gamma_over_kappa]);
        for &v in values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NumericDomain(format!(
                    "grid value {v} must be finite and non-negative"
                )));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::NumericDomain("detuning must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.kappa_s_over_kappa.len() * self.g_over_sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order, `kappa_s` outermost.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.kappa_s_over_kappa
            .iter()
            .flat_map(move |&ks| self.g_over_sum.iter().map(move |&g| (ks, g)))
    }

    pub fn params(&self, ks: f64, g_over_sum: f64) -> CavityParams {
        CavityParams::resonant(g_over_sum * (1.0 + ks), ks, self.gamma_over_kappa).with_detuning(self.detuning)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub kappa_s_over_kappa: f64,
    pub g_over_sum: f64,
    pub pair: ReflectionPair,
    pub eta_closed: f64,
    pub eta_sim: f64,
    /// Probability that at least one generator block heralds a failure.
    pub herald_rate: f64,
    /// Part of the analyzer's spin-stage output not explained by its
    /// error-free component, averaged over the 16 basis inputs.
    pub leakage_rate: f64,
    /// Worst fidelity of the generator's error-free output against its
    /// target.
    pub cond_fidelity: f64,
    pub dephasing: Option<DephasedFidelity>,
}

/// Mean leakage fraction of the analyzer's spin stage over all 16 inputs.
pub fn leakage_rate(pair: &ReflectionPair) -> Result<f64> {
    // The error-free output is the lossless output scaled by s^4, so its
    // direction does not depend on the cavity.
    static LOSSLESS: OnceLock<Vec<HybridState>> = OnceLock::new();
    let lossless = match LOSSLESS.get() {
        Some(v) => v,
        None => {
            let v = HyperBellLabel::all()
                .map(|l| hbsa_stage1_output(&make_bell(l), &ReflectionPair::ideal()))
                .collect::<Result<Vec<_>>>()?;
            LOSSLESS.get_or_init(|| v)
        }
    };
    let empty = pair.success_amplitude() == C64::default();
    let mut total = 0.0;
    for (label, reference) in HyperBellLabel::all().zip(lossless) {
        let state = hbsa_stage1_output(&make_bell(label), pair)?;
        total += if empty && state.norm_sqr() > 0.0 {
            1.0
        } else {
            leakage_between(reference, &state)
        };
    }
    Ok(total / 16.0)
}

fn evaluate(grid: &SweepGrid, ks: f64, g_over_sum: f64, fallback_fidelity: f64) -> Result<SweepRecord> {
    let pair = reflection_coefficients(&grid.params(ks, g_over_sum))?;
    let run = run_hbsg(&pair)?;
    // With no success amplitude there is no error-free output to compare;
    // its shape is the same as in the lossless case.
    let cond_fidelity = run.conditional_fidelity().unwrap_or(fallback_fidelity);
    Ok(SweepRecord {
        kappa_s_over_kappa: ks,
        g_over_sum,
        pair,
        eta_closed: efficiency_closed_form(&pair)?,
        eta_sim: run.success_probability(),
        herald_rate: run.herald_rate(),
        leakage_rate: leakage_rate(&pair)?,
        cond_fidelity,
        dephasing: grid.dephasing.map(|d| DephasedFidelity::new(cond_fidelity, &d)),
    })
}

/// Evaluate every grid point. Points run in parallel; the output is in
/// row-major grid order regardless of scheduling.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepRecord>> {
    grid.validate()?;
    let fallback = run_hbsg(&ReflectionPair::ideal())?
        .conditional_fidelity()
        .expect("the lossless generator always succeeds");
    let points: Vec<(f64, f64)> = grid.points().collect();
    points
        .par_iter()
        .map(|&(ks, g)| evaluate(grid, ks, g, fallback))
        .collect()
}
