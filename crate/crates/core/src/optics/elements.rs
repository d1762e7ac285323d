//! Linear-optical elements as single-photon operators.
//!
//! Routing elements (BS, CPBS, PBS) are defined by where their input modes
//! go. Any output mode that is not also an input is sent back to a vacated
//! input mode, which completes the routing to a unitary on the whole photon
//! factor. For physical circuits those modes are empty, so the completion
//! never changes a result; it keeps every passive element exactly unitary.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_single_photon_op, mode, re, HybridState, LinearPolarization, PhotonOp, PolFilter, Polarization, INV_SQRT_2,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    /// Circular polarizing beam splitter. `L` keeps its port index, `R`
    /// crosses: `(R, in1) -> out2`, `(R, in2) -> out1`.
    Cpbs {
        photon: String,
        inputs: [String; 2],
        outputs: [String; 2],
    },
    /// Linear polarizing beam splitter: `H` to `transmit`, `V` to `reflect`.
    Pbs {
        photon: String,
        path: String,
        transmit: String,
        reflect: String,
    },
    /// 50:50 beam splitter, `x1 -> (y1 + y2)/sqrt2`, `x2 -> (y1 - y2)/sqrt2`.
    Bs {
        photon: String,
        inputs: [String; 2],
        outputs: [String; 2],
    },
    /// Half-wave plate acting as a polarization Hadamard.
    Hp { photon: String, path: String },
    /// Half-wave plate acting as a polarization bit flip.
    Z { photon: String, path: String },
    /// Waveform corrector: scales the path by the block success amplitude.
    Wfc { photon: String, path: String },
    /// Reflection from a QD-cavity unit.
    QdArm { photon: String, path: String, qd: String },
    /// Ideal detector, optionally polarization resolving.
    Detector {
        photon: String,
        path: String,
        filter: Option<PolFilter>,
        label: String,
    },
    /// Spin readout in the `{phi+, phi-}` basis.
    MeasureSpin { qd: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Cpbs,
    Pbs,
    Bs,
    Hp,
    Z,
    Wfc,
    QdArm,
    Detector,
    MeasureSpin,
}

impl ElementKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Cpbs => "cpbs",
            ElementKind::Pbs => "pbs",
            ElementKind::Bs => "bs",
            ElementKind::Hp => "hp",
            ElementKind::Z => "z",
            ElementKind::Wfc => "wfc",
            ElementKind::QdArm => "qdarm",
            ElementKind::Detector => "detector",
            ElementKind::MeasureSpin => "measure_spin",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "cpbs" => ElementKind::Cpbs,
            "pbs" => ElementKind::Pbs,
            "bs" => ElementKind::Bs,
            "hp" => ElementKind::Hp,
            "z" => ElementKind::Z,
            "wfc" => ElementKind::Wfc,
            "qdarm" => ElementKind::QdArm,
            "detector" => ElementKind::Detector,
            "measure_spin" => ElementKind::MeasureSpin,
            _ => return None,
        })
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::Cpbs { .. } => ElementKind::Cpbs,
            Element::Pbs { .. } => ElementKind::Pbs,
            Element::Bs { .. } => ElementKind::Bs,
            Element::Hp { .. } => ElementKind::Hp,
            Element::Z { .. } => ElementKind::Z,
            Element::Wfc { .. } => ElementKind::Wfc,
            Element::QdArm { .. } => ElementKind::QdArm,
            Element::Detector { .. } => ElementKind::Detector,
            Element::MeasureSpin { .. } => ElementKind::MeasureSpin,
        }
    }

    pub fn photon(&self) -> Option<&str> {
        match self {
            Element::Cpbs { photon, .. }
            | Element::Pbs { photon, .. }
            | Element::Bs { photon, .. }
            | Element::Hp { photon, .. }
            | Element::Z { photon, .. }
            | Element::Wfc { photon, .. }
            | Element::QdArm { photon, .. }
            | Element::Detector { photon, .. } => Some(photon),
            Element::MeasureSpin { .. } => None,
        }
    }

    /// Every path label the element touches.
    pub fn paths(&self) -> Vec<&str> {
        match self {
            Element::Cpbs { inputs, outputs, .. } | Element::Bs { inputs, outputs, .. } => {
                inputs.iter().chain(outputs.iter()).map(|s| s.as_str()).collect()
            }
            Element::Pbs {
                path,
                transmit,
                reflect,
                ..
            } => vec![path, transmit, reflect],
            Element::Hp { path, .. }
            | Element::Z { path, .. }
            | Element::Wfc { path, .. }
            | Element::QdArm { path, .. }
            | Element::Detector { path, .. } => vec![path],
            Element::MeasureSpin { .. } => vec![],
        }
    }

    pub fn qd(&self) -> Option<&str> {
        match self {
            Element::QdArm { qd, .. } | Element::MeasureSpin { qd } => Some(qd),
            _ => None,
        }
    }
}

fn check_distinct(pair: &[usize; 2], what: &str) -> Result<()> {
    if pair[0] == pair[1] {
        return Err(Error::config(format!("routing maps two {what} onto the same port")));
    }
    Ok(())
}

/// Permutation of `dim` modes sending `inputs[k] -> images[k]`, completed so
/// that images which are not inputs return to inputs which are not images.
fn completed_permutation(dim: usize, inputs: &[usize], images: &[usize]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for (&i, &j) in inputs.iter().zip(images) {
        m[(j, i)] = re(1.0);
    }
    let vacated: Vec<usize> = inputs.iter().copied().filter(|i| !images.contains(i)).collect();
    let incoming: Vec<usize> = images.iter().copied().filter(|j| !inputs.contains(j)).collect();
    for (&from, &to) in incoming.iter().zip(&vacated) {
        m[(to, from)] = re(1.0);
    }
    for k in 0..dim {
        if !inputs.contains(&k) && !images.contains(&k) {
            m[(k, k)] = re(1.0);
        }
    }
    m
}

/// 2x2 map on the polarization of one path, identity elsewhere.
pub fn local_polarization_op(num_paths: usize, path: usize, m: [[C64; 2]; 2]) -> PhotonOp {
    let dim = 2 * num_paths;
    let mut mat = DMatrix::identity(dim, dim);
    for a in Polarization::ALL {
        for b in Polarization::ALL {
            mat[(mode(a, path, num_paths), mode(b, path, num_paths))] = m[a.index()][b.index()];
        }
    }
    PhotonOp::from_matrix(mat).expect("square")
}

pub fn hp_op(num_paths: usize, path: usize) -> PhotonOp {
    let h = re(INV_SQRT_2);
    local_polarization_op(num_paths, path, [[h, h], [h, -h]])
}

pub fn z_op(num_paths: usize, path: usize) -> PhotonOp {
    local_polarization_op(num_paths, path, [[re(0.0), re(1.0)], [re(1.0), re(0.0)]])
}

/// Uniform attenuation (or phase) of one path.
pub fn scale_op(num_paths: usize, path: usize, factor: C64) -> PhotonOp {
    local_polarization_op(num_paths, path, [[factor, re(0.0)], [re(0.0), factor]])
}

pub fn bs_op(num_paths: usize, inputs: [usize; 2], outputs: [usize; 2]) -> Result<PhotonOp> {
    check_distinct(&inputs, "inputs")?;
    check_distinct(&outputs, "outputs")?;
    let h = re(INV_SQRT_2);
    let mut spatial = DMatrix::zeros(num_paths, num_paths);
    spatial[(outputs[0], inputs[0])] += h;
    spatial[(outputs[1], inputs[0])] += h;
    spatial[(outputs[0], inputs[1])] += h;
    spatial[(outputs[1], inputs[1])] -= h;
    let vacated: Vec<usize> = inputs.iter().copied().filter(|i| !outputs.contains(i)).collect();
    let incoming: Vec<usize> = outputs.iter().copied().filter(|j| !inputs.contains(j)).collect();
    for (&from, &to) in incoming.iter().zip(&vacated) {
        spatial[(to, from)] = re(1.0);
    }
    for k in 0..num_paths {
        if !inputs.contains(&k) && !outputs.contains(&k) {
            spatial[(k, k)] = re(1.0);
        }
    }
    let dim = 2 * num_paths;
    let mut mat = DMatrix::zeros(dim, dim);
    for pol in Polarization::ALL {
        for i in 0..num_paths {
            for j in 0..num_paths {
                mat[(mode(pol, i, num_paths), mode(pol, j, num_paths))] = spatial[(i, j)];
            }
        }
    }
    PhotonOp::from_matrix(mat)
}

pub fn cpbs_op(num_paths: usize, inputs: [usize; 2], outputs: [usize; 2]) -> Result<PhotonOp> {
    check_distinct(&inputs, "inputs")?;
    check_distinct(&outputs, "outputs")?;
    let n = num_paths;
    use Polarization::{L, R};
    let from = [
        mode(L, inputs[0], n),
        mode(L, inputs[1], n),
        mode(R, inputs[0], n),
        mode(R, inputs[1], n),
    ];
    let to = [
        mode(L, outputs[0], n),
        mode(L, outputs[1], n),
        mode(R, outputs[1], n),
        mode(R, outputs[0], n),
    ];
    PhotonOp::from_matrix(completed_permutation(2 * n, &from, &to))
}

pub fn pbs_op(num_paths: usize, path: usize, transmit: usize, reflect: usize) -> Result<PhotonOp> {
    if transmit == reflect {
        return Err(Error::config("PBS transmit and reflect ports must differ"));
    }
    let n = num_paths;
    let dim = 2 * n;
    // Permutation in the {H, V} basis; index 0 plays H, index 1 plays V.
    let h = |p| p;
    let v = |p| n + p;
    let perm = completed_permutation(dim, &[h(path), v(path)], &[h(transmit), v(reflect)]);
    let mut basis = DMatrix::zeros(dim, dim);
    for p in 0..n {
        let hk = LinearPolarization::H.ket();
        let vk = LinearPolarization::V.ket();
        basis[(mode(Polarization::R, p, n), h(p))] = hk[0];
        basis[(mode(Polarization::L, p, n), h(p))] = hk[1];
        basis[(mode(Polarization::R, p, n), v(p))] = vk[0];
        basis[(mode(Polarization::L, p, n), v(p))] = vk[1];
    }
    let mut mat = &basis * perm * basis.adjoint();
    // Paths the element does not touch stay exactly untouched.
    for p in (0..n).filter(|p| ![path, transmit, reflect].contains(p)) {
        for pol in Polarization::ALL {
            let k = mode(pol, p, n);
            for j in 0..dim {
                mat[(k, j)] = re(0.0);
                mat[(j, k)] = re(0.0);
            }
            mat[(k, k)] = re(1.0);
        }
    }
    PhotonOp::from_matrix(mat)
}

/// `R -> R`, `L -> -L` on every path.
pub fn polarization_phase_flip(num_paths: usize) -> PhotonOp {
    let mut op = PhotonOp::identity(2 * num_paths);
    for p in 0..num_paths {
        op = op
            .then(&local_polarization_op(
                num_paths,
                p,
                [[re(1.0), re(0.0)], [re(0.0), re(-1.0)]],
            ))
            .expect("same dimension");
    }
    op
}

/// `R <-> L` on every path.
pub fn polarization_bit_flip(num_paths: usize) -> PhotonOp {
    let mut op = PhotonOp::identity(2 * num_paths);
    for p in 0..num_paths {
        op = op.then(&z_op(num_paths, p)).expect("same dimension");
    }
    op
}

/// Exchange two paths, polarization untouched.
pub fn path_swap(num_paths: usize, a: usize, b: usize) -> Result<PhotonOp> {
    if a == b {
        return Err(Error::config("cannot swap a path with itself"));
    }
    let n = num_paths;
    let from: Vec<usize> = Polarization::ALL
        .iter()
        .flat_map(|&p| [mode(p, a, n), mode(p, b, n)])
        .collect();
    let to: Vec<usize> = Polarization::ALL
        .iter()
        .flat_map(|&p| [mode(p, b, n), mode(p, a, n)])
        .collect();
    PhotonOp::from_matrix(completed_permutation(2 * n, &from, &to))
}

// State-level wrappers addressed by photon id and path label.

fn resolve(state: &HybridState, photon: &str, path: &str) -> Result<(usize, usize, usize)> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let n = layout.num_paths(ph)?;
    Ok((ph, n, layout.path_index(ph, path)?))
}

pub fn apply_hp(state: &HybridState, photon: &str, path: &str) -> Result<HybridState> {
    let (ph, n, p) = resolve(state, photon, path)?;
    apply_single_photon_op(state, ph, &hp_op(n, p))
}

pub fn apply_z(state: &HybridState, photon: &str, path: &str) -> Result<HybridState> {
    let (ph, n, p) = resolve(state, photon, path)?;
    apply_single_photon_op(state, ph, &z_op(n, p))
}

pub fn apply_wfc(
    state: &HybridState,
    photon: &str,
    path: &str,
    pair: &crate::cavity::ReflectionPair,
) -> Result<HybridState> {
    let (ph, n, p) = resolve(state, photon, path)?;
    apply_single_photon_op(state, ph, &scale_op(n, p, pair.success_amplitude()))
}

pub fn apply_bs(state: &HybridState, photon: &str, inputs: [&str; 2], outputs: [&str; 2]) -> Result<HybridState> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let n = layout.num_paths(ph)?;
    let i = [layout.path_index(ph, inputs[0])?, layout.path_index(ph, inputs[1])?];
    let o = [layout.path_index(ph, outputs[0])?, layout.path_index(ph, outputs[1])?];
    apply_single_photon_op(state, ph, &bs_op(n, i, o)?)
}

pub fn apply_cpbs(state: &HybridState, photon: &str, inputs: [&str; 2], outputs: [&str; 2]) -> Result<HybridState> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let n = layout.num_paths(ph)?;
    let i = [layout.path_index(ph, inputs[0])?, layout.path_index(ph, inputs[1])?];
    let o = [layout.path_index(ph, outputs[0])?, layout.path_index(ph, outputs[1])?];
    apply_single_photon_op(state, ph, &cpbs_op(n, i, o)?)
}

pub fn apply_pbs(state: &HybridState, photon: &str, path: &str, transmit: &str, reflect: &str) -> Result<HybridState> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let n = layout.num_paths(ph)?;
    let op = pbs_op(
        n,
        layout.path_index(ph, path)?,
        layout.path_index(ph, transmit)?,
        layout.path_index(ph, reflect)?,
    )?;
    apply_single_photon_op(state, ph, &op)
}
