//! Circuit container and its line-oriented text form.
//!
//! ```text
//! qd QD1 basis=+
//! photon A paths=a1,a2,c1,c2
//! op cpbs photon=A in=a1,a2 out=a1,a2
//! block mode=heralded qd=QD1 photon=A path=a1 label=hA
//! op measure_spin qd=QD1
//! ```
//!
//! Declarations must precede their first use. `block` lines are a macro that
//! expands into primitive elements; serializing always emits primitives.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::blocks::{expand_block, BlockMode};
use crate::error::{Error, Result};
use crate::hilbert::{HybridState, Layout, PhotonModes, PolFilter, SpinX};

use super::elements::{Element, ElementKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QdDecl {
    pub id: String,
    pub basis: SpinX,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub qds: Vec<QdDecl>,
    pub photons: Vec<PhotonModes>,
    pub ops: Vec<Element>,
}

impl Circuit {
    pub fn new(qds: Vec<QdDecl>, photons: Vec<PhotonModes>, ops: Vec<Element>) -> Result<Self> {
        let c = Circuit { qds, photons, ops };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.layout()?;
        let mut labels = Vec::new();
        for op in &self.ops {
            check_element(&layout, op)?;
            if let Element::Detector { label, .. } = op {
                if labels.contains(&label) {
                    return Err(Error::config(format!("detector label {label} is used twice")));
                }
                labels.push(label);
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<Arc<Layout>> {
        Layout::new(self.photons.clone(), self.qds.iter().map(|q| q.id.clone()).collect())
    }

    /// Initial spin kets in declaration order.
    pub fn spin_kets(&self) -> Vec<[C64; 2]> {
        self.qds.iter().map(|q| q.basis.ket()).collect()
    }

    /// Product input from one single-photon vector per declared photon and
    /// the declared spin preparations.
    pub fn input_state(&self, photons: &[Vec<C64>]) -> Result<HybridState> {
        HybridState::product(self.layout()?, photons, &self.spin_kets())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for q in &self.qds {
            let _ = writeln!(out, "qd {} basis={}", q.id, q.basis);
        }
        for p in &self.photons {
            let _ = writeln!(out, "photon {} paths={}", p.id, p.paths.join(","));
        }
        for op in &self.ops {
            let _ = writeln!(out, "{}", element_line(op));
        }
        out
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_circuit(s)
    }
}

fn check_element(layout: &Layout, op: &Element) -> Result<()> {
    if let Some(photon) = op.photon() {
        let ph = layout.photon_index(photon)?;
        for p in op.paths() {
            layout.path_index(ph, p)?;
        }
    }
    if let Some(qd) = op.qd() {
        layout.spin_index(qd)?;
    }
    match op {
        Element::Cpbs { inputs, outputs, .. } | Element::Bs { inputs, outputs, .. } => {
            if inputs[0] == inputs[1] || outputs[0] == outputs[1] {
                return Err(Error::config(format!(
                    "{} binds the same path twice on one side",
                    op.kind()
                )));
            }
        }
        Element::Pbs { transmit, reflect, .. } if transmit == reflect => {
            return Err(Error::config("pbs outputs must differ"));
        }
        _ => {}
    }
    Ok(())
}

fn element_line(op: &Element) -> String {
    let kind = op.kind();
    match op {
        Element::Cpbs {
            photon,
            inputs,
            outputs,
        }
        | Element::Bs {
            photon,
            inputs,
            outputs,
        } => format!(
            "op {kind} photon={photon} in={},{} out={},{}",
            inputs[0], inputs[1], outputs[0], outputs[1]
        ),
        Element::Pbs {
            photon,
            path,
            transmit,
            reflect,
        } => format!("op {kind} photon={photon} path={path} out={transmit},{reflect}"),
        Element::Hp { photon, path } | Element::Z { photon, path } | Element::Wfc { photon, path } => {
            format!("op {kind} photon={photon} path={path}")
        }
        Element::QdArm { photon, path, qd } => format!("op {kind} photon={photon} path={path} qd={qd}"),
        Element::Detector {
            photon,
            path,
            filter,
            label,
        } => match filter {
            Some(f) => format!("op {kind} photon={photon} path={path} pol={f} label={label}"),
            None => format!("op {kind} photon={photon} path={path} label={label}"),
        },
        Element::MeasureSpin { qd } => format!("op {kind} qd={qd}"),
    }
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, tokens: &[&'a str], allowed: &[&str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, got `{tok}`")))?;
            if !allowed.contains(&k) {
                return Err(Error::parse(line, format!("unexpected key `{k}`")));
            }
            if v.is_empty() {
                return Err(Error::parse(line, format!("empty value for `{k}`")));
            }
            if map.insert(k, v).is_some() {
                return Err(Error::parse(line, format!("key `{k}` given twice")));
            }
        }
        Ok(Fields { line, map })
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| Error::parse(self.line, format!("missing `{key}=`")))
    }

    fn opt(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn owned(&self, key: &str) -> Result<String> {
        self.get(key).map(str::to_string)
    }

    fn pair(&self, key: &str) -> Result<[String; 2]> {
        let v = self.get(key)?;
        let parts: Vec<&str> = v.split(',').collect();
        match parts.as_slice() {
            [a, b] if !a.is_empty() && !b.is_empty() => Ok([a.to_string(), b.to_string()]),
            _ => Err(Error::parse(self.line, format!("`{key}=` needs exactly two paths"))),
        }
    }
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '+' || c == '.')
}

fn parse_op(line: usize, kind: &str, rest: &[&str]) -> Result<Element> {
    let kind =
        ElementKind::from_keyword(kind).ok_or_else(|| Error::parse(line, format!("unknown element kind `{kind}`")))?;
    let el = match kind {
        ElementKind::Cpbs | ElementKind::Bs => {
            let f = Fields::parse(line, rest, &["photon", "in", "out"])?;
            let (photon, inputs, outputs) = (f.owned("photon")?, f.pair("in")?, f.pair("out")?);
            if kind == ElementKind::Cpbs {
                Element::Cpbs {
                    photon,
                    inputs,
                    outputs,
                }
            } else {
                Element::Bs {
                    photon,
                    inputs,
                    outputs,
                }
            }
        }
        ElementKind::Pbs => {
            let f = Fields::parse(line, rest, &["photon", "path", "out"])?;
            let [transmit, reflect] = f.pair("out")?;
            Element::Pbs {
                photon: f.owned("photon")?,
                path: f.owned("path")?,
                transmit,
                reflect,
            }
        }
        ElementKind::Hp | ElementKind::Z | ElementKind::Wfc => {
            let f = Fields::parse(line, rest, &["photon", "path"])?;
            let (photon, path) = (f.owned("photon")?, f.owned("path")?);
            match kind {
                ElementKind::Hp => Element::Hp { photon, path },
                ElementKind::Z => Element::Z { photon, path },
                _ => Element::Wfc { photon, path },
            }
        }
        ElementKind::QdArm => {
            let f = Fields::parse(line, rest, &["photon", "path", "qd"])?;
            Element::QdArm {
                photon: f.owned("photon")?,
                path: f.owned("path")?,
                qd: f.owned("qd")?,
            }
        }
        ElementKind::Detector => {
            let f = Fields::parse(line, rest, &["photon", "path", "pol", "label"])?;
            let filter = match f.opt("pol") {
                Some(p) => Some(PolFilter::from_str(p).map_err(|e| Error::parse(line, e.to_string()))?),
                None => None,
            };
            Element::Detector {
                photon: f.owned("photon")?,
                path: f.owned("path")?,
                filter,
                label: f.owned("label")?,
            }
        }
        ElementKind::MeasureSpin => {
            let f = Fields::parse(line, rest, &["qd"])?;
            Element::MeasureSpin { qd: f.owned("qd")? }
        }
    };
    Ok(el)
}

/// Parse and validate a circuit description.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit = Circuit::default();
    let mut labels: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&head, rest)) = tokens.split_first() else {
            continue;
        };
        match head {
            "qd" => {
                let (&id, rest) = rest.split_first().ok_or_else(|| Error::parse(line, "qd needs an id"))?;
                if id.contains('=') || !valid_ident(id) {
                    return Err(Error::parse(line, format!("invalid qd id `{id}`")));
                }
                let f = Fields::parse(line, rest, &["basis"])?;
                let basis = match f.opt("basis").unwrap_or("+") {
                    "+" => SpinX::Plus,
                    "-" => SpinX::Minus,
                    other => return Err(Error::parse(line, format!("basis must be + or -, got `{other}`"))),
                };
                if circuit.qds.iter().any(|q| q.id == id) {
                    return Err(Error::parse(line, format!("duplicate qd id {id}")));
                }
                circuit.qds.push(QdDecl {
                    id: id.to_string(),
                    basis,
                });
                circuit.layout().map_err(|e| Error::parse(line, e.to_string()))?;
            }
            "photon" => {
                let (&id, rest) = rest
                    .split_first()
                    .ok_or_else(|| Error::parse(line, "photon needs an id"))?;
                if id.contains('=') || !valid_ident(id) {
                    return Err(Error::parse(line, format!("invalid photon id `{id}`")));
                }
                let f = Fields::parse(line, rest, &["paths"])?;
                let paths: Vec<String> = f.get("paths")?.split(',').map(str::to_string).collect();
                if paths.iter().any(|p| !valid_ident(p)) {
                    return Err(Error::parse(line, "invalid path name"));
                }
                circuit.photons.push(PhotonModes {
                    id: id.to_string(),
                    paths,
                });
                circuit.layout().map_err(|e| Error::parse(line, e.to_string()))?;
            }
            "op" => {
                let (&kind, rest) = rest
                    .split_first()
                    .ok_or_else(|| Error::parse(line, "op needs an element kind"))?;
                let el = parse_op(line, kind, rest)?;
                push_checked(&mut circuit, &mut labels, el, line)?;
            }
            "block" => {
                let f = Fields::parse(line, rest, &["mode", "qd", "photon", "path", "label"])?;
                let mode = match f.get("mode")? {
                    "heralded" => BlockMode::Heralded,
                    "parity" => BlockMode::ParityGate,
                    other => return Err(Error::parse(line, format!("unknown block mode `{other}`"))),
                };
                let els = expand_block(mode, f.get("photon")?, f.get("path")?, f.get("qd")?, f.opt("label"))
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                for el in els {
                    push_checked(&mut circuit, &mut labels, el, line)?;
                }
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok(circuit)
}

fn push_checked(circuit: &mut Circuit, labels: &mut Vec<String>, el: Element, line: usize) -> Result<()> {
    let layout = circuit.layout().map_err(|e| Error::parse(line, e.to_string()))?;
    check_element(&layout, &el).map_err(|e| Error::parse(line, e.to_string()))?;
    if let Element::Detector { label, .. } = &el {
        if labels.contains(label) {
            return Err(Error::parse(line, format!("detector label {label} is used twice")));
        }
        labels.push(label.clone());
    }
    circuit.ops.push(el);
    Ok(())
}
