//! Branching evaluation of a circuit on a state vector.

use std::sync::Arc;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use crate::cavity::{reflection_operator, ReflectionPair};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_single_photon_op, apply_spin_conditional_op, projections, BranchOutcome, HybridState, Layout, Observable,
    Outcome, PhotonOp, NEGLIGIBLE_PROBABILITY,
};

use super::circuit::Circuit;
use super::elements::{bs_op, cpbs_op, hp_op, pbs_op, scale_op, z_op, Element};

enum Step {
    Photon {
        photon: usize,
        op: PhotonOp,
    },
    Reflect {
        photon: usize,
        spin: usize,
        path: usize,
        op: Box<Matrix4<C64>>,
    },
    Measure {
        photon: Option<usize>,
        obs: Observable,
    },
}

fn compile(circuit: &Circuit, layout: &Layout, pair: &ReflectionPair) -> Result<Vec<Step>> {
    let paths = |ph: usize, names: &[String]| -> Result<Vec<usize>> {
        names.iter().map(|n| layout.path_index(ph, n)).collect()
    };
    let mut steps = Vec::with_capacity(circuit.ops.len());
    for el in &circuit.ops {
        let photon = el.photon().map(|p| layout.photon_index(p)).transpose()?;
        let step = match el {
            Element::Cpbs { inputs, outputs, .. } | Element::Bs { inputs, outputs, .. } => {
                let ph = photon.expect("optical element has a photon");
                let n = layout.num_paths(ph)?;
                let i = paths(ph, inputs)?;
                let o = paths(ph, outputs)?;
                let op = if matches!(el, Element::Cpbs { .. }) {
                    cpbs_op(n, [i[0], i[1]], [o[0], o[1]])?
                } else {
                    bs_op(n, [i[0], i[1]], [o[0], o[1]])?
                };
                Step::Photon { photon: ph, op }
            }
            Element::Pbs {
                path,
                transmit,
                reflect,
                ..
            } => {
                let ph = photon.expect("optical element has a photon");
                let p = paths(ph, &[path.clone(), transmit.clone(), reflect.clone()])?;
                Step::Photon {
                    photon: ph,
                    op: pbs_op(layout.num_paths(ph)?, p[0], p[1], p[2])?,
                }
            }
            Element::Hp { path, .. } | Element::Z { path, .. } | Element::Wfc { path, .. } => {
                let ph = photon.expect("optical element has a photon");
                let n = layout.num_paths(ph)?;
                let p = layout.path_index(ph, path)?;
                let op = match el {
                    Element::Hp { .. } => hp_op(n, p),
                    Element::Z { .. } => z_op(n, p),
                    _ => scale_op(n, p, pair.success_amplitude()),
                };
                Step::Photon { photon: ph, op }
            }
            Element::QdArm { path, qd, .. } => {
                let ph = photon.expect("optical element has a photon");
                Step::Reflect {
                    photon: ph,
                    spin: layout.spin_index(qd)?,
                    path: layout.path_index(ph, path)?,
                    op: Box::new(reflection_operator(pair)),
                }
            }
            Element::Detector {
                path, filter, label, ..
            } => {
                let ph = photon.expect("optical element has a photon");
                Step::Measure {
                    photon: Some(ph),
                    obs: Observable::Detector {
                        photon: ph,
                        path: layout.path_index(ph, path)?,
                        filter: *filter,
                        label: label.clone(),
                    },
                }
            }
            Element::MeasureSpin { qd } => Step::Measure {
                photon: None,
                obs: Observable::SpinX {
                    spin: layout.spin_index(qd)?,
                    label: qd.clone(),
                },
            },
        };
        steps.push(step);
    }
    Ok(steps)
}

/// An unnormalized branch: the state is the projected amplitude, so its
/// norm² is the branch probability.
#[derive(Clone, Debug)]
pub struct RawBranch {
    pub record: Vec<(String, Outcome)>,
    pub state: HybridState,
    /// Photons absorbed by a detector that fired in this branch.
    pub terminated: Vec<bool>,
}

impl RawBranch {
    pub fn probability(&self) -> f64 {
        self.state.norm_sqr()
    }

    pub fn outcome(&self, label: &str) -> Option<Outcome> {
        self.record.iter().find(|(l, _)| l == label).map(|(_, o)| *o)
    }
}

/// Run the circuit keeping every branch unnormalized, including branches of
/// zero weight that are structurally possible. Elements acting on a photon
/// that has already been detected in a branch are skipped in that branch.
pub fn evolve(circuit: &Circuit, input: &HybridState, pair: &ReflectionPair) -> Result<Vec<RawBranch>> {
    let layout = circuit.layout()?;
    if **input.layout() != *layout {
        return Err(Error::config("input layout does not match the circuit declarations"));
    }
    let layout: Arc<Layout> = input.layout().clone();
    let steps = compile(circuit, &layout, pair)?;
    let mut branches = vec![RawBranch {
        record: Vec::new(),
        state: input.clone(),
        terminated: vec![false; layout.photons().len()],
    }];
    for step in &steps {
        let mut next = Vec::with_capacity(branches.len());
        for br in branches {
            let skip = match step {
                Step::Photon { photon, .. } | Step::Reflect { photon, .. } => br.terminated[*photon],
                Step::Measure { photon, .. } => photon.is_some_and(|p| br.terminated[p]),
            };
            if skip {
                next.push(br);
                continue;
            }
            match step {
                Step::Photon { photon, op } => {
                    let state = apply_single_photon_op(&br.state, *photon, op)?;
                    next.push(RawBranch { state, ..br });
                }
                Step::Reflect { photon, spin, path, op } => {
                    let state = apply_spin_conditional_op(&br.state, *photon, *spin, *path, op)?;
                    next.push(RawBranch { state, ..br });
                }
                Step::Measure { photon, obs } => {
                    for (outcome, state) in projections(&br.state, obs)? {
                        let mut record = br.record.clone();
                        record.push((obs.label().to_string(), outcome));
                        let mut terminated = br.terminated.clone();
                        if let (Some(p), Outcome::Click) = (photon, outcome) {
                            terminated[*p] = true;
                        }
                        next.push(RawBranch {
                            record,
                            state,
                            terminated,
                        });
                    }
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Run the circuit and return every branch of non-negligible probability with
/// its renormalized residual state.
pub fn run_circuit(circuit: &Circuit, input: &HybridState, pair: &ReflectionPair) -> Result<Vec<BranchOutcome>> {
    evolve(circuit, input, pair)?
        .into_iter()
        .filter(|b| b.probability() > NEGLIGIBLE_PROBABILITY)
        .map(|b| {
            Ok(BranchOutcome {
                probability: b.probability(),
                residual: b.state.normalized()?,
                record: b.record,
            })
        })
        .collect()
}
