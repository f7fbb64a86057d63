//! Model files.
//!
//! Binary layout, all integers and reals little-endian, reals as IEEE `f64`:
//!
//! ```text
//! "NLMM"  u16 version  u8 kind (0 knn, 1 svm, 2 mlp, 3 rf)
//! section*: u8 tag  u64 byte length  body
//!   1 meta:    u32 layout_len, u8 harmonic mode, u32 n + u32[n] selected,
//!              u32 n + str[n] classes, u64 seed, str spec, str provenance
//!   2 scaler:  u8 present, u32 n, f64[n] mean, f64[n] std
//!   3 payload: kind-specific, see `write_payload`
//! ```
//!
//! Strings are `u32` byte length plus UTF-8. The JSON export mirrors the same
//! fields with every real written as the hex of its bit pattern, so it is
//! lossless too.

use std::fs;
use std::path::Path;

use nilm_core::features::HarmonicMode;
use nilm_core::models::{
    Classifier, Kernel, KnnModel, Layer, MlpModel, ModelKind, Node, RfModel, Scaler, SvmModel,
    TrainedModel, Tree,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{FileError, Result};

pub const MAGIC: &[u8; 4] = b"NLMM";
pub const VERSION: u16 = 1;

const TAG_META: u8 = 1;
const TAG_SCALER: u8 = 2;
const TAG_PAYLOAD: u8 = 3;

/// Provenance stored next to the model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    /// Training hyperparameters as JSON.
    pub spec: String,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub meta: ModelMeta,
}

fn kind_code(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::Knn => 0,
        ModelKind::Svm => 1,
        ModelKind::Mlp => 2,
        ModelKind::Rf => 3,
    }
}

fn mode_code(mode: HarmonicMode) -> u8 {
    match mode {
        HarmonicMode::Complex => 0,
        HarmonicMode::Magnitude => 1,
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: usize) {
        let x = u32::try_from(x).expect("model dimensions fit in u32");
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn reals(&mut self, xs: &[f64]) {
        for &x in xs {
            self.f64(x);
        }
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn section(&mut self, tag: u8, body: Writer) {
        self.u8(tag);
        self.u64(body.0.len() as u64);
        self.0.extend_from_slice(&body.0);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(FileError::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    /// `n` reals, checking the length before allocating.
    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or(FileError::Truncated)?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
    fn indices(&mut self, n: usize) -> Result<Vec<usize>> {
        let raw = self.take(n.checked_mul(4).ok_or(FileError::Truncated)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
            .collect())
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| FileError::Corrupt("string is not UTF-8".into()))
    }
    fn section(&mut self, tag: u8) -> Result<Reader<'a>> {
        let found = self.u8()?;
        if found != tag {
            return Err(FileError::Corrupt(format!("expected section {tag}, found {found}")));
        }
        let len = usize::try_from(self.u64()?).map_err(|_| FileError::Truncated)?;
        Ok(Reader { bytes: self.take(len)? })
    }
    fn finish(&self, what: &str) -> Result<()> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(FileError::Corrupt(format!("{} unread bytes in {what}", self.bytes.len())))
        }
    }
}

pub fn to_bytes(file: &ModelFile) -> Vec<u8> {
    let m = &file.model;
    let mut out = Writer(MAGIC.to_vec());
    out.0.extend_from_slice(&VERSION.to_le_bytes());
    out.u8(kind_code(m.kind()));

    let mut meta = Writer(Vec::new());
    meta.u32(m.layout_len);
    meta.u8(mode_code(m.harmonic_mode));
    meta.u32(m.selected.len());
    for &k in &m.selected {
        meta.u32(k);
    }
    meta.u32(m.classes.len());
    for c in &m.classes {
        meta.str(c);
    }
    meta.u64(file.meta.seed);
    meta.str(&file.meta.spec);
    meta.str(&file.meta.provenance);
    out.section(TAG_META, meta);

    let mut scaler = Writer(Vec::new());
    match &m.scaler {
        Some(s) => {
            scaler.u8(1);
            scaler.u32(s.len());
            scaler.reals(s.mean());
            scaler.reals(s.std());
        }
        None => scaler.u8(0),
    }
    out.section(TAG_SCALER, scaler);

    let mut payload = Writer(Vec::new());
    write_payload(&mut payload, &m.classifier);
    out.section(TAG_PAYLOAD, payload);
    out.0
}

fn write_payload(w: &mut Writer, c: &Classifier) {
    match c {
        // k, n, f, classes, n·f rows, n labels
        Classifier::Knn(m) => {
            w.u32(m.k());
            w.u32(m.n_rows());
            w.u32(m.n_features());
            w.u32(m.n_classes());
            for row in m.rows() {
                w.reals(row);
            }
            for &l in m.labels() {
                w.u32(l);
            }
        }
        // classes, kernel (0 linear, 1 rbf), gamma, n_sv, f, n_sv·f vectors,
        // n_sv classes, (classes−1)·n_sv coefficients, pair intercepts, capped
        Classifier::Svm(m) => {
            w.u32(m.n_classes());
            match m.kernel() {
                Kernel::Linear => {
                    w.u8(0);
                    w.f64(0.0);
                }
                Kernel::Rbf { gamma } => {
                    w.u8(1);
                    w.f64(gamma);
                }
            }
            w.u32(m.n_sv());
            w.u32(m.n_features());
            for sv in m.support_vectors() {
                w.reals(sv);
            }
            for &c in m.sv_class() {
                w.u32(c);
            }
            for row in m.dual_coef() {
                w.reals(row);
            }
            w.reals(m.intercepts());
            w.u8(u8::from(m.capped));
        }
        // n_layers, then per layer: inputs, outputs, weights, bias
        Classifier::Mlp(m) => {
            w.u32(m.layers().len());
            for l in m.layers() {
                w.u32(l.inputs);
                w.u32(l.outputs);
                w.reals(&l.weights);
                w.reals(&l.bias);
            }
        }
        // f, classes, n_trees, then per tree: n_nodes and nodes
        // (0 class | 1 feature threshold left right)
        Classifier::Rf(m) => {
            w.u32(m.n_features());
            w.u32(m.n_classes());
            w.u32(m.trees().len());
            for t in m.trees() {
                w.u32(t.nodes().len());
                for node in t.nodes() {
                    match *node {
                        Node::Leaf { class } => {
                            w.u8(0);
                            w.u32(class);
                        }
                        Node::Split { feature, threshold, left, right } => {
                            w.u8(1);
                            w.u32(feature);
                            w.f64(threshold);
                            w.u32(left);
                            w.u32(right);
                        }
                    }
                }
            }
        }
    }
}

fn read_payload(r: &mut Reader<'_>, kind: ModelKind) -> Result<Classifier> {
    Ok(match kind {
        ModelKind::Knn => {
            let (k, n, f, classes) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
            let flat = r.reals(n.checked_mul(f).ok_or(FileError::Truncated)?)?;
            let rows = if f == 0 { vec![Vec::new(); n] } else { flat.chunks(f).map(<[f64]>::to_vec).collect() };
            let labels = r.indices(n)?;
            Classifier::Knn(KnnModel::new(k, rows, labels, classes)?)
        }
        ModelKind::Svm => {
            let classes = r.u32()?;
            let kernel = match (r.u8()?, r.f64()?) {
                (0, _) => Kernel::Linear,
                (1, gamma) => Kernel::Rbf { gamma },
                (code, _) => return Err(FileError::Corrupt(format!("unknown kernel code {code}"))),
            };
            let (n_sv, f) = (r.u32()?, r.u32()?);
            let mut svs = Vec::new();
            for _ in 0..n_sv {
                svs.push(r.reals(f)?);
            }
            let sv_class = r.indices(n_sv)?;
            let mut dual = Vec::new();
            for _ in 0..classes.saturating_sub(1) {
                dual.push(r.reals(n_sv)?);
            }
            let intercepts = r.reals(classes * classes.saturating_sub(1) / 2)?;
            let capped = r.u8()? != 0;
            let mut m = SvmModel::new(classes, kernel, svs, sv_class, dual, intercepts)?;
            m.capped = capped;
            Classifier::Svm(m)
        }
        ModelKind::Mlp => {
            let n = r.u32()?;
            let mut layers = Vec::new();
            for _ in 0..n {
                let (inputs, outputs) = (r.u32()?, r.u32()?);
                let weights = r.reals(inputs.checked_mul(outputs).ok_or(FileError::Truncated)?)?;
                let bias = r.reals(outputs)?;
                layers.push(Layer { inputs, outputs, weights, bias });
            }
            Classifier::Mlp(MlpModel::new(layers)?)
        }
        ModelKind::Rf => {
            let (f, classes, n_trees) = (r.u32()?, r.u32()?, r.u32()?);
            let mut trees = Vec::new();
            for _ in 0..n_trees {
                let n = r.u32()?;
                let mut nodes = Vec::new();
                for _ in 0..n {
                    nodes.push(match r.u8()? {
                        0 => Node::Leaf { class: r.u32()? },
                        1 => Node::Split {
                            feature: r.u32()?,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        },
                        code => return Err(FileError::Corrupt(format!("unknown node code {code}"))),
                    });
                }
                trees.push(Tree::new(nodes, f, classes)?);
            }
            Classifier::Rf(RfModel::new(trees, f, classes)?)
        }
    })
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader { bytes };
    if r.take(4).map_err(|_| FileError::BadMagic { expected: "NLMM" })? != MAGIC {
        return Err(FileError::BadMagic { expected: "NLMM" });
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(FileError::Version {
            found: u32::from(version),
            supported: u32::from(VERSION),
        });
    }
    let kind = match r.u8()? {
        0 => ModelKind::Knn,
        1 => ModelKind::Svm,
        2 => ModelKind::Mlp,
        3 => ModelKind::Rf,
        code => return Err(FileError::Corrupt(format!("unknown model kind {code}"))),
    };

    let mut meta = r.section(TAG_META)?;
    let layout_len = meta.u32()?;
    let harmonic_mode = match meta.u8()? {
        0 => HarmonicMode::Complex,
        1 => HarmonicMode::Magnitude,
        code => return Err(FileError::Corrupt(format!("unknown harmonic mode {code}"))),
    };
    let n_sel = meta.u32()?;
    let selected = meta.indices(n_sel)?;
    let n_classes = meta.u32()?;
    let mut classes = Vec::new();
    for _ in 0..n_classes {
        classes.push(meta.str()?);
    }
    let info = ModelMeta {
        seed: meta.u64()?,
        spec: meta.str()?,
        provenance: meta.str()?,
    };
    meta.finish("meta section")?;

    let mut sc = r.section(TAG_SCALER)?;
    let scaler = match sc.u8()? {
        0 => None,
        1 => {
            let n = sc.u32()?;
            let mean = sc.reals(n)?;
            let std = sc.reals(n)?;
            Some(Scaler::from_parts(mean, std)?)
        }
        code => return Err(FileError::Corrupt(format!("bad scaler flag {code}"))),
    };
    sc.finish("scaler section")?;

    let mut payload = r.section(TAG_PAYLOAD)?;
    let classifier = read_payload(&mut payload, kind)?;
    payload.finish("payload section")?;
    r.finish("file")?;

    let model = TrainedModel {
        classifier,
        scaler,
        selected,
        layout_len,
        harmonic_mode,
        classes,
    };
    model.validate()?;
    Ok(ModelFile { model, meta: info })
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(file)).map_err(|e| FileError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| FileError::io(path, e))?;
    from_bytes(&bytes).map_err(|e| match e {
        FileError::Io { .. } => e,
        other => FileError::format(path, other.to_string()),
    })
}

/// A real stored as the hex of its IEEE bit pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hex(pub f64);

impl Serialize for Hex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:016x}", self.0.to_bits()))
    }
}

impl<'de> Deserialize<'de> for Hex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(|bits| Hex(f64::from_bits(bits)))
            .map_err(|_| serde::de::Error::custom(format!("`{s}` is not a 64-bit hex real")))
    }
}

fn hex(xs: &[f64]) -> Vec<Hex> {
    xs.iter().copied().map(Hex).collect()
}

fn unhex(xs: &[Hex]) -> Vec<f64> {
    xs.iter().map(|h| h.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u16,
    kind: ModelKind,
    layout_len: usize,
    harmonic_mode: HarmonicMode,
    selected: Vec<usize>,
    classes: Vec<String>,
    meta: ModelMeta,
    scaler: Option<ScalerDoc>,
    payload: PayloadDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScalerDoc {
    mean: Vec<Hex>,
    std: Vec<Hex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PayloadDoc {
    Knn {
        k: usize,
        n_classes: usize,
        rows: Vec<Vec<Hex>>,
        labels: Vec<usize>,
    },
    Svm {
        n_classes: usize,
        kernel: KernelDoc,
        support_vectors: Vec<Vec<Hex>>,
        sv_class: Vec<usize>,
        dual_coef: Vec<Vec<Hex>>,
        intercepts: Vec<Hex>,
        capped: bool,
    },
    Mlp {
        layers: Vec<LayerDoc>,
    },
    Rf {
        n_features: usize,
        n_classes: usize,
        trees: Vec<Vec<NodeDoc>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KernelDoc {
    Linear,
    Rbf { gamma: Hex },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerDoc {
    inputs: usize,
    outputs: usize,
    weights: Vec<Hex>,
    bias: Vec<Hex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NodeDoc {
    Leaf { class: usize },
    Split { feature: usize, threshold: Hex, left: usize, right: usize },
}

impl ModelDoc {
    fn new(file: &ModelFile) -> Self {
        let m = &file.model;
        let payload = match &m.classifier {
            Classifier::Knn(k) => PayloadDoc::Knn {
                k: k.k(),
                n_classes: k.n_classes(),
                rows: k.rows().iter().map(|r| hex(r)).collect(),
                labels: k.labels().to_vec(),
            },
            Classifier::Svm(s) => PayloadDoc::Svm {
                n_classes: s.n_classes(),
                kernel: match s.kernel() {
                    Kernel::Linear => KernelDoc::Linear,
                    Kernel::Rbf { gamma } => KernelDoc::Rbf { gamma: Hex(gamma) },
                },
                support_vectors: s.support_vectors().iter().map(|r| hex(r)).collect(),
                sv_class: s.sv_class().to_vec(),
                dual_coef: s.dual_coef().iter().map(|r| hex(r)).collect(),
                intercepts: hex(s.intercepts()),
                capped: s.capped,
            },
            Classifier::Mlp(n) => PayloadDoc::Mlp {
                layers: n
                    .layers()
                    .iter()
                    .map(|l| LayerDoc {
                        inputs: l.inputs,
                        outputs: l.outputs,
                        weights: hex(&l.weights),
                        bias: hex(&l.bias),
                    })
                    .collect(),
            },
            Classifier::Rf(f) => PayloadDoc::Rf {
                n_features: f.n_features(),
                n_classes: f.n_classes(),
                trees: f
                    .trees()
                    .iter()
                    .map(|t| {
                        t.nodes()
                            .iter()
                            .map(|n| match *n {
                                Node::Leaf { class } => NodeDoc::Leaf { class },
                                Node::Split { feature, threshold, left, right } => NodeDoc::Split {
                                    feature,
                                    threshold: Hex(threshold),
                                    left,
                                    right,
                                },
                            })
                            .collect()
                    })
                    .collect(),
            },
        };
        ModelDoc {
            format: "NLMM".into(),
            version: VERSION,
            kind: m.kind(),
            layout_len: m.layout_len,
            harmonic_mode: m.harmonic_mode,
            selected: m.selected.clone(),
            classes: m.classes.clone(),
            meta: file.meta.clone(),
            scaler: m.scaler.as_ref().map(|s| ScalerDoc {
                mean: hex(s.mean()),
                std: hex(s.std()),
            }),
            payload,
        }
    }

    fn into_file(self) -> Result<ModelFile> {
        if self.format != "NLMM" {
            return Err(FileError::BadMagic { expected: "NLMM" });
        }
        if self.version != VERSION {
            return Err(FileError::Version {
                found: u32::from(self.version),
                supported: u32::from(VERSION),
            });
        }
        let classifier = match self.payload {
            PayloadDoc::Knn { k, n_classes, rows, labels } => {
                Classifier::Knn(KnnModel::new(k, rows.iter().map(|r| unhex(r)).collect(), labels, n_classes)?)
            }
            PayloadDoc::Svm { n_classes, kernel, support_vectors, sv_class, dual_coef, intercepts, capped } => {
                let kernel = match kernel {
                    KernelDoc::Linear => Kernel::Linear,
                    KernelDoc::Rbf { gamma } => Kernel::Rbf { gamma: gamma.0 },
                };
                let mut m = SvmModel::new(
                    n_classes,
                    kernel,
                    support_vectors.iter().map(|r| unhex(r)).collect(),
                    sv_class,
                    dual_coef.iter().map(|r| unhex(r)).collect(),
                    unhex(&intercepts),
                )?;
                m.capped = capped;
                Classifier::Svm(m)
            }
            PayloadDoc::Mlp { layers } => Classifier::Mlp(MlpModel::new(
                layers
                    .into_iter()
                    .map(|l| Layer {
                        inputs: l.inputs,
                        outputs: l.outputs,
                        weights: unhex(&l.weights),
                        bias: unhex(&l.bias),
                    })
                    .collect(),
            )?),
            PayloadDoc::Rf { n_features, n_classes, trees } => {
                let trees = trees
                    .into_iter()
                    .map(|nodes| {
                        let nodes = nodes
                            .into_iter()
                            .map(|n| match n {
                                NodeDoc::Leaf { class } => Node::Leaf { class },
                                NodeDoc::Split { feature, threshold, left, right } => Node::Split {
                                    feature,
                                    threshold: threshold.0,
                                    left,
                                    right,
                                },
                            })
                            .collect();
                        Tree::new(nodes, n_features, n_classes)
                    })
                    .collect::<nilm_core::Result<Vec<_>>>()?;
                Classifier::Rf(RfModel::new(trees, n_features, n_classes)?)
            }
        };
        if classifier.kind() != self.kind {
            return Err(FileError::Corrupt(format!(
                "kind {} does not match a {} payload",
                self.kind,
                classifier.kind()
            )));
        }
        let scaler = match self.scaler {
            Some(s) => Some(Scaler::from_parts(unhex(&s.mean), unhex(&s.std))?),
            None => None,
        };
        let model = TrainedModel {
            classifier,
            scaler,
            selected: self.selected,
            layout_len: self.layout_len,
            harmonic_mode: self.harmonic_mode,
            classes: self.classes,
        };
        model.validate()?;
        Ok(ModelFile { model, meta: self.meta })
    }
}

/// Lossless JSON export.
pub fn to_json(file: &ModelFile) -> String {
    serde_json::to_string_pretty(&ModelDoc::new(file)).expect("plain data serializes")
}

pub fn from_json(text: &str) -> Result<ModelFile> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| FileError::Corrupt(e.to_string()))?;
    doc.into_file()
}
