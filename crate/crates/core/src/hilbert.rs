//! Dense state vectors over the joint photon/spin space.
//!
//! A [`Layout`] fixes the tensor factors in the order
//! `(photon A: pol x path) (photon B: pol x path) (spin 1) (spin 2)` and the
//! global basis index is lexicographic over those factors, polarization before
//! path inside a photon factor. Either photon or spin slot may be absent, in
//! which case that factor is simply dropped from the product.
//!
//! States are allowed to be subnormalized: lossy reflection, waveform
//! correction and heralding all shrink the norm, and only [`measure`]
//! renormalizes.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAX_PHOTONS: usize = 2;
pub const MAX_SPINS: usize = 2;
pub const MAX_PATHS: usize = 4;

/// Absolute tolerance for amplitude comparisons.
pub const AMPLITUDE_TOL: f64 = 1e-12;
/// Absolute tolerance for probability comparisons.
pub const PROBABILITY_TOL: f64 = 1e-10;
/// Branches at or below this probability are treated as impossible.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-24;

pub(crate) const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Circular polarization, the computational basis for photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::R, Polarization::L];

    pub fn index(self) -> usize {
        match self {
            Polarization::R => 0,
            Polarization::L => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    pub fn ket(self) -> [C64; 2] {
        match self {
            Polarization::R => [re(1.0), re(0.0)],
            Polarization::L => [re(0.0), re(1.0)],
        }
    }
}

/// Linear polarization, `H = (R + L)/sqrt2`, `V = (R - L)/sqrt2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinearPolarization {
    H,
    V,
}

impl LinearPolarization {
    /// Coordinates in the circular basis.
    pub fn ket(self) -> [C64; 2] {
        match self {
            LinearPolarization::H => [re(INV_SQRT_2), re(INV_SQRT_2)],
            LinearPolarization::V => [re(INV_SQRT_2), re(-INV_SQRT_2)],
        }
    }
}

/// Polarization selected by a polarization-resolving detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolFilter {
    Circular(Polarization),
    Linear(LinearPolarization),
}

impl PolFilter {
    pub fn ket(self) -> [C64; 2] {
        match self {
            PolFilter::Circular(p) => p.ket(),
            PolFilter::Linear(p) => p.ket(),
        }
    }
}

impl fmt::Display for PolFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolFilter::Circular(Polarization::R) => "R",
            PolFilter::Circular(Polarization::L) => "L",
            PolFilter::Linear(LinearPolarization::H) => "H",
            PolFilter::Linear(LinearPolarization::V) => "V",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PolFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(PolFilter::Circular(Polarization::R)),
            "L" => Ok(PolFilter::Circular(Polarization::L)),
            "H" => Ok(PolFilter::Linear(LinearPolarization::H)),
            "V" => Ok(PolFilter::Linear(LinearPolarization::V)),
            other => Err(Error::config(format!("unknown polarization filter `{other}`"))),
        }
    }
}

/// Electron spin in the z basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn ket(self) -> [C64; 2] {
        match self {
            Spin::Up => [re(1.0), re(0.0)],
            Spin::Down => [re(0.0), re(1.0)],
        }
    }
}

/// Electron spin in the x basis, `phi+- = (up +- down)/sqrt2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinX {
    Plus,
    Minus,
}

impl SpinX {
    pub const ALL: [SpinX; 2] = [SpinX::Plus, SpinX::Minus];

    pub fn ket(self) -> [C64; 2] {
        match self {
            SpinX::Plus => [re(INV_SQRT_2), re(INV_SQRT_2)],
            SpinX::Minus => [re(INV_SQRT_2), re(-INV_SQRT_2)],
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SpinX::Plus => SpinX::Minus,
            SpinX::Minus => SpinX::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SpinX::Plus => "+",
            SpinX::Minus => "-",
        }
    }
}

impl fmt::Display for SpinX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A photon and the spatial modes it may occupy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhotonModes {
    pub id: String,
    pub paths: Vec<String>,
}

impl PhotonModes {
    pub fn new(id: impl Into<String>, paths: &[&str]) -> Self {
        PhotonModes {
            id: id.into(),
            paths: paths.iter().map(|p| p.to_string()).collect(),
        }
    }
}

/// Tensor-factor layout shared by every state of one simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    photons: Vec<PhotonModes>,
    spins: Vec<String>,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    pub fn new(photons: Vec<PhotonModes>, spins: Vec<String>) -> Result<Arc<Self>> {
        if photons.len() > MAX_PHOTONS {
            return Err(Error::config(format!(
                "at most {MAX_PHOTONS} photons are supported, got {}",
                photons.len()
            )));
        }
        if spins.len() > MAX_SPINS {
            return Err(Error::config(format!(
                "at most {MAX_SPINS} spins are supported, got {}",
                spins.len()
            )));
        }
        for (i, ph) in photons.iter().enumerate() {
            if ph.paths.is_empty() || ph.paths.len() > MAX_PATHS {
                return Err(Error::config(format!(
                    "photon {} must own between 1 and {MAX_PATHS} paths",
                    ph.id
                )));
            }
            for (j, p) in ph.paths.iter().enumerate() {
                if ph.paths[..j].contains(p) {
                    return Err(Error::config(format!("photon {} declares path {p} twice", ph.id)));
                }
                for other in &photons[..i] {
                    if other.paths.contains(p) {
                        return Err(Error::config(format!(
                            "path {p} is owned by both {} and {}",
                            other.id, ph.id
                        )));
                    }
                }
            }
            if photons[..i].iter().any(|o| o.id == ph.id) {
                return Err(Error::config(format!("duplicate photon id {}", ph.id)));
            }
        }
        for (j, s) in spins.iter().enumerate() {
            if spins[..j].contains(s) {
                return Err(Error::config(format!("duplicate spin id {s}")));
            }
        }

        let mut dims: Vec<usize> = photons.iter().map(|p| 2 * p.paths.len()).collect();
        dims.extend(std::iter::repeat_n(2, spins.len()));
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Arc::new(Layout {
            photons,
            spins,
            dims,
            strides,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn photons(&self) -> &[PhotonModes] {
        &self.photons
    }

    pub fn spins(&self) -> &[String] {
        &self.spins
    }

    pub fn photon_index(&self, id: &str) -> Result<usize> {
        self.photons
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::config(format!("unknown photon {id}")))
    }

    pub fn spin_index(&self, id: &str) -> Result<usize> {
        self.spins
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::config(format!("unknown quantum dot {id}")))
    }

    pub fn path_index(&self, photon: usize, path: &str) -> Result<usize> {
        let ph = self.photon(photon)?;
        ph.paths
            .iter()
            .position(|p| p == path)
            .ok_or_else(|| Error::config(format!("path {path} is not owned by photon {}", ph.id)))
    }

    pub fn num_paths(&self, photon: usize) -> Result<usize> {
        Ok(self.photon(photon)?.paths.len())
    }

    fn photon(&self, photon: usize) -> Result<&PhotonModes> {
        self.photons
            .get(photon)
            .ok_or_else(|| Error::config(format!("photon slot {photon} is not present")))
    }

    fn photon_factor(&self, photon: usize) -> Result<(usize, usize)> {
        self.photon(photon)?;
        Ok((self.strides[photon], self.dims[photon]))
    }

    fn spin_factor(&self, spin: usize) -> Result<usize> {
        if spin >= self.spins.len() {
            return Err(Error::config(format!("spin slot {spin} is not present")));
        }
        Ok(self.strides[self.photons.len() + spin])
    }

    /// Global index of a basis configuration.
    pub fn index(&self, photons: &[(Polarization, usize)], spins: &[Spin]) -> Result<usize> {
        if photons.len() != self.photons.len() || spins.len() != self.spins.len() {
            return Err(Error::config("basis configuration does not match layout"));
        }
        let mut idx = 0;
        for (k, &(pol, path)) in photons.iter().enumerate() {
            let n = self.photons[k].paths.len();
            if path >= n {
                return Err(Error::config("path index out of range"));
            }
            idx += self.strides[k] * (pol.index() * n + path);
        }
        for (j, s) in spins.iter().enumerate() {
            idx += self.strides[self.photons.len() + j] * s.index();
        }
        Ok(idx)
    }

    /// Readable name of a basis index, e.g. `R.a1 L.b2 up`.
    pub fn basis_label(&self, index: usize) -> String {
        let mut parts = Vec::with_capacity(self.dims.len());
        for (k, ph) in self.photons.iter().enumerate() {
            let local = index / self.strides[k] % self.dims[k];
            let n = ph.paths.len();
            let pol = if local / n == 0 { "R" } else { "L" };
            parts.push(format!("{pol}.{}", ph.paths[local % n]));
        }
        for j in 0..self.spins.len() {
            let k = self.photons.len() + j;
            parts.push(
                if (index / self.strides[k]).is_multiple_of(2) {
                    "up"
                } else {
                    "down"
                }
                .to_string(),
            );
        }
        parts.join(" ")
    }

    /// Same photons, different spin factors.
    pub fn with_spins(&self, spins: Vec<String>) -> Result<Arc<Layout>> {
        Layout::new(self.photons.clone(), spins)
    }
}

/// Index of the single-photon mode `(pol, path)` inside a photon factor.
pub fn mode(pol: Polarization, path: usize, num_paths: usize) -> usize {
    pol.index() * num_paths + path
}

/// Linear map on one photon's polarization x path factor.
///
/// Only the rows and columns that differ from the identity are touched when
/// the operator is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonOp {
    matrix: DMatrix<C64>,
    active: Vec<usize>,
}

impl PhotonOp {
    pub fn identity(dim: usize) -> Self {
        PhotonOp {
            matrix: DMatrix::identity(dim, dim),
            active: Vec::new(),
        }
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::config("photon operator must be square"));
        }
        let n = matrix.nrows();
        let active = (0..n)
            .filter(|&k| {
                (0..n).any(|j| {
                    let id = if j == k { 1.0 } else { 0.0 };
                    matrix[(k, j)] != re(id) || matrix[(j, k)] != re(id)
                })
            })
            .collect();
        Ok(PhotonOp { matrix, active })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &PhotonOp) -> Result<PhotonOp> {
        if self.dim() != other.dim() {
            return Err(Error::config("operator dimensions differ"));
        }
        PhotonOp::from_matrix(&other.matrix * &self.matrix)
    }

    pub fn adjoint(&self) -> PhotonOp {
        PhotonOp {
            matrix: self.matrix.adjoint(),
            active: self.active.clone(),
        }
    }

    /// Max-abs deviation of `U^dagger U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - re(id)).norm());
            }
        }
        worst
    }
}

/// A joint state of up to two photons and two electron spins.
#[derive(Clone, Debug)]
pub struct HybridState {
    layout: Arc<Layout>,
    amps: Vec<C64>,
}

impl PartialEq for HybridState {
    fn eq(&self, other: &Self) -> bool {
        same_layout(&self.layout, &other.layout) && self.amps == other.amps
    }
}

fn same_layout(a: &Arc<Layout>, b: &Arc<Layout>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl HybridState {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.dim();
        HybridState {
            layout,
            amps: vec![C64::default(); n],
        }
    }

    pub fn from_amplitudes(layout: Arc<Layout>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::config(format!(
                "expected {} amplitudes, got {}",
                layout.dim(),
                amps.len()
            )));
        }
        Ok(HybridState { layout, amps })
    }

    /// Product state from one single-photon vector per photon (length
    /// `2 * num_paths`) and one spin ket per spin.
    pub fn product(layout: Arc<Layout>, photons: &[Vec<C64>], spins: &[[C64; 2]]) -> Result<Self> {
        if photons.len() != layout.photons.len() || spins.len() != layout.spins.len() {
            return Err(Error::config("product factors do not match layout"));
        }
        for (k, v) in photons.iter().enumerate() {
            if v.len() != layout.dims[k] {
                return Err(Error::config(format!(
                    "photon {} vector must have length {}",
                    layout.photons[k].id, layout.dims[k]
                )));
            }
        }
        let factors: Vec<&[C64]> = photons
            .iter()
            .map(|v| v.as_slice())
            .chain(spins.iter().map(|s| s.as_slice()))
            .collect();
        let mut amps = vec![re(1.0)];
        for f in factors {
            amps = amps.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
        }
        Ok(HybridState { layout, amps })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Basis labels and amplitudes of every component above `tol` in
    /// modulus.
    pub fn terms(&self, tol: f64) -> Vec<(String, C64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > tol)
            .map(|(i, a)| (self.layout.basis_label(i), *a))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NumericDomain("cannot normalize a zero state".into()));
        }
        Ok(self.scaled(re(1.0 / n)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        HybridState {
            layout: self.layout.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn add(&self, other: &HybridState) -> Result<Self> {
        self.check_layout(other)?;
        Ok(HybridState {
            layout: self.layout.clone(),
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &HybridState) -> Result<Self> {
        self.add(&other.scaled(re(-1.0)))
    }

    /// Largest amplitude difference; layouts must match.
    pub fn max_abs_diff(&self, other: &HybridState) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn check_layout(&self, other: &HybridState) -> Result<()> {
        if same_layout(&self.layout, &other.layout) {
            Ok(())
        } else {
            Err(Error::config("states have different photon/path/spin layouts"))
        }
    }

    /// Tensor this state with additional spin kets.
    pub fn with_spins(&self, spins: &[(&str, [C64; 2])]) -> Result<Self> {
        let mut ids = self.layout.spins.clone();
        ids.extend(spins.iter().map(|(id, _)| id.to_string()));
        let layout = self.layout.with_spins(ids)?;
        let mut amps = self.amps.clone();
        for (_, ket) in spins {
            amps = amps.iter().flat_map(|&a| ket.iter().map(move |&b| a * b)).collect();
        }
        Ok(HybridState { layout, amps })
    }

    /// Contract every spin factor with the given bra (conjugated ket),
    /// leaving a photon-only state.
    pub fn project_spins(&self, kets: &[[C64; 2]]) -> Result<Self> {
        let nspins = self.layout.spins.len();
        if kets.len() != nspins {
            return Err(Error::config(format!("expected {nspins} spin kets")));
        }
        let layout = self.layout.with_spins(Vec::new())?;
        let block = 1 << nspins;
        let amps = self
            .amps
            .chunks(block)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| {
                        let mut w = re(1.0);
                        for (j, ket) in kets.iter().enumerate() {
                            let bit = (k >> (nspins - 1 - j)) & 1;
                            w *= ket[bit].conj();
                        }
                        w * a
                    })
                    .sum()
            })
            .collect();
        Ok(HybridState { layout, amps })
    }

    /// Apply `op` to the factor with the given stride, touching only the
    /// listed local indices.
    fn apply_factor(&self, stride: usize, dim: usize, mat: &DMatrix<C64>, active: &[usize]) -> Self {
        let mut out = self.amps.clone();
        if active.is_empty() {
            return HybridState {
                layout: self.layout.clone(),
                amps: out,
            };
        }
        // Nonzero entries of the active block as (output offset, input slot, value).
        let mut entries = Vec::with_capacity(active.len() * active.len());
        for &r in active {
            for (k, &col) in active.iter().enumerate() {
                let v = mat[(r, col)];
                if v != C64::default() {
                    entries.push((r * stride, k, v));
                }
            }
        }
        let block = stride * dim;
        let mut gathered = vec![C64::default(); active.len()];
        for outer in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (g, &a) in gathered.iter_mut().zip(active) {
                    *g = self.amps[base + a * stride];
                }
                for &r in active {
                    out[base + r * stride] = C64::default();
                }
                for &(off, k, v) in &entries {
                    out[base + off] += v * gathered[k];
                }
            }
        }
        HybridState {
            layout: self.layout.clone(),
            amps: out,
        }
    }
}

/// Conjugate-linear in `a`, linear in `b`.
pub fn overlap(a: &HybridState, b: &HybridState) -> Result<C64> {
    a.check_layout(b)?;
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

pub fn apply_single_photon_op(state: &HybridState, photon: usize, op: &PhotonOp) -> Result<HybridState> {
    let (stride, dim) = state.layout.photon_factor(photon)?;
    if op.dim() != dim {
        return Err(Error::config(format!(
            "operator of dimension {} does not fit photon factor of dimension {dim}",
            op.dim()
        )));
    }
    Ok(state.apply_factor(stride, dim, &op.matrix, &op.active))
}

/// Apply a 4x4 map on `{R up, R down, L up, L down}` of one photon and one
/// spin, restricted to amplitudes where the photon occupies `path`.
pub fn apply_spin_conditional_op(
    state: &HybridState,
    photon: usize,
    spin: usize,
    path: usize,
    op: &Matrix4<C64>,
) -> Result<HybridState> {
    let layout = &state.layout;
    let (pstride, _) = layout.photon_factor(photon)?;
    let sstride = layout.spin_factor(spin)?;
    let n = layout.num_paths(photon)?;
    if path >= n {
        return Err(Error::config("path index out of range"));
    }
    let r_mode = mode(Polarization::R, path, n);
    let l_mode = mode(Polarization::L, path, n);
    let dim = layout.dim();
    let mut out = state.amps.clone();
    for idx in 0..dim {
        let local = (idx / pstride) % (2 * n);
        let s = (idx / sstride) % 2;
        if local != r_mode || s != 0 {
            continue;
        }
        let base = idx;
        let slots = [
            base,
            base + sstride,
            base + (l_mode - r_mode) * pstride,
            base + (l_mode - r_mode) * pstride + sstride,
        ];
        let v = [
            state.amps[slots[0]],
            state.amps[slots[1]],
            state.amps[slots[2]],
            state.amps[slots[3]],
        ];
        for (r, &slot) in slots.iter().enumerate() {
            out[slot] = (0..4).map(|k| op[(r, k)] * v[k]).sum();
        }
    }
    Ok(HybridState {
        layout: layout.clone(),
        amps: out,
    })
}

/// Apply a 2x2 map to one spin factor.
pub fn apply_spin_op(state: &HybridState, spin: usize, op: &[[C64; 2]; 2]) -> Result<HybridState> {
    let stride = state.layout.spin_factor(spin)?;
    let mat = DMatrix::from_fn(2, 2, |r, k| op[r][k]);
    Ok(state.apply_factor(stride, 2, &mat, &[0, 1]))
}

/// Single measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Click,
    NoClick,
    Spin(SpinX),
    /// Index into a user-supplied projector list.
    Ket(usize),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Click => f.write_str("click"),
            Outcome::NoClick => f.write_str("none"),
            Outcome::Spin(s) => write!(f, "{s}"),
            Outcome::Ket(k) => write!(f, "#{k}"),
        }
    }
}

/// A complete set of orthogonal projectors.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// Ideal detector on one path, optionally behind a polarization filter.
    Detector {
        photon: usize,
        path: usize,
        filter: Option<PolFilter>,
        label: String,
    },
    /// Spin readout in the `{phi+, phi-}` basis.
    SpinX { spin: usize, label: String },
    /// Spin readout in an arbitrary basis given as kets.
    SpinBasis {
        spin: usize,
        kets: Vec<[C64; 2]>,
        label: String,
    },
}

impl Observable {
    pub fn label(&self) -> &str {
        match self {
            Observable::Detector { label, .. }
            | Observable::SpinX { label, .. }
            | Observable::SpinBasis { label, .. } => label,
        }
    }
}

/// One measurement branch.
#[derive(Clone, Debug)]
pub struct BranchOutcome {
    pub record: Vec<(String, Outcome)>,
    /// Renormalized post-measurement state.
    pub residual: HybridState,
    pub probability: f64,
}

fn spin_projector(ket: [C64; 2]) -> [[C64; 2]; 2] {
    [
        [ket[0] * ket[0].conj(), ket[0] * ket[1].conj()],
        [ket[1] * ket[0].conj(), ket[1] * ket[1].conj()],
    ]
}

fn check_spin_basis(kets: &[[C64; 2]]) -> Result<()> {
    if kets.len() != 2 {
        return Err(Error::config("a spin basis needs exactly two kets"));
    }
    for (i, a) in kets.iter().enumerate() {
        for (j, b) in kets.iter().enumerate() {
            let ip: C64 = a[0].conj() * b[0] + a[1].conj() * b[1];
            let want = if i == j { 1.0 } else { 0.0 };
            if (ip - re(want)).norm() > AMPLITUDE_TOL {
                return Err(Error::config("spin projectors are not orthonormal"));
            }
        }
    }
    Ok(())
}

/// Unnormalized projections onto every outcome of `obs`, in a fixed order.
pub fn projections(state: &HybridState, obs: &Observable) -> Result<Vec<(Outcome, HybridState)>> {
    match obs {
        Observable::Detector {
            photon, path, filter, ..
        } => {
            let (stride, dim) = state.layout.photon_factor(*photon)?;
            let n = dim / 2;
            if *path >= n {
                return Err(Error::config("detector path index out of range"));
            }
            let pol_proj = match filter {
                Some(f) => spin_projector(f.ket()),
                None => [[re(1.0), re(0.0)], [re(0.0), re(1.0)]],
            };
            let mut click = DMatrix::zeros(dim, dim);
            for a in 0..2 {
                for b in 0..2 {
                    click[(a * n + path, b * n + path)] = pol_proj[a][b];
                }
            }
            let none = PhotonOp::from_matrix(DMatrix::identity(dim, dim) - &click)?;
            let click = PhotonOp::from_matrix(click)?;
            Ok(vec![
                (
                    Outcome::Click,
                    state.apply_factor(stride, dim, &click.matrix, &click.active),
                ),
                (
                    Outcome::NoClick,
                    state.apply_factor(stride, dim, &none.matrix, &none.active),
                ),
            ])
        }
        Observable::SpinX { spin, .. } => SpinX::ALL
            .iter()
            .map(|&sx| {
                Ok((
                    Outcome::Spin(sx),
                    apply_spin_op(state, *spin, &spin_projector(sx.ket()))?,
                ))
            })
            .collect(),
        Observable::SpinBasis { spin, kets, .. } => {
            check_spin_basis(kets)?;
            kets.iter()
                .enumerate()
                .map(|(k, ket)| Ok((Outcome::Ket(k), apply_spin_op(state, *spin, &spin_projector(*ket))?)))
                .collect()
        }
    }
}

/// Projective measurement. Impossible outcomes are omitted; each residual is
/// renormalized and carries its Born probability relative to the (possibly
/// subnormalized) input.
pub fn measure(state: &HybridState, obs: &Observable) -> Result<Vec<BranchOutcome>> {
    let mut out = Vec::new();
    for (outcome, projected) in projections(state, obs)? {
        let p = projected.norm_sqr();
        if p <= NEGLIGIBLE_PROBABILITY {
            continue;
        }
        out.push(BranchOutcome {
            record: vec![(obs.label().to_string(), outcome)],
            residual: projected.normalized()?,
            probability: p,
        });
    }
    Ok(out)
}
