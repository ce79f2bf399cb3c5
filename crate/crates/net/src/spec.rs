//! Declarative architecture descriptions and symbolic parameter counting.

use serde::{Deserialize, Serialize};

use crate::{NetError, Result};

/// Half-open crop of the 96-bin frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandCrop {
    pub lo_bin: usize,
    pub hi_bin: usize,
}

/// Low-octave band driving the pitch-spiral branch: A2 (110 Hz) up to
/// A6 (1.76 kHz), 48 bins.
pub const SPIRAL_CROP: BandCrop = BandCrop { lo_bin: 12, hi_bin: 60 };
/// Top-octave band driving the temporal branch: A6 up to A9 (14 kHz),
/// 36 bins.
pub const ONE_D_CROP: BandCrop = BandCrop { lo_bin: 60, hi_bin: 96 };
/// The full axis for the flat time-frequency branch.
pub const FULL_CROP: BandCrop = BandCrop { lo_bin: 0, hi_bin: 96 };

impl BandCrop {
    pub fn new(lo_bin: usize, hi_bin: usize) -> Result<Self> {
        if lo_bin >= hi_bin || hi_bin > 96 {
            return Err(NetError::InvalidSpec(format!(
                "band crop [{lo_bin}, {hi_bin}) must satisfy 0 <= lo < hi <= 96"
            )));
        }
        Ok(BandCrop { lo_bin, hi_bin })
    }

    pub fn width(&self) -> usize {
        self.hi_bin - self.lo_bin
    }
}

/// One layer of a branch or of the shared head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        dt: usize,
        dk: usize,
        cout: usize,
    },
    /// Temporal convolution whose frequency support spans the whole current
    /// height, so the output collapses to a single row per channel.
    Conv1dFullHeight {
        dt: usize,
        cout: usize,
    },
    Spiral {
        dt: usize,
        dk: usize,
        octaves: usize,
        q: usize,
        cout: usize,
    },
    MaxPool {
        pt: usize,
        pk: usize,
    },
    Relu {
        alpha: f64,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
    /// Concatenation of all flattened branch outputs; only valid as the
    /// first head layer.
    Concat,
    Dense {
        units: usize,
        bias: bool,
    },
    Softmax,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Conv1dFullHeight { .. } => "conv1d_fullheight",
            LayerSpec::Spiral { .. } => "spiral",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Relu { .. } => "relu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Concat => "concat",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Softmax => "softmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub crop: BandCrop,
    pub layers: Vec<LayerSpec>,
}

/// Full multi-branch architecture. Branch outputs must be flattened; the
/// head concatenates them and applies the shared dense classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_frames: usize,
    pub input_bins: usize,
    pub branches: Vec<BranchSpec>,
    pub head: Vec<LayerSpec>,
}

/// Intermediate shape while walking a spec: a feature map or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeState {
    Map { t: usize, k: usize, c: usize },
    Flat(usize),
}

impl ShapeState {
    pub fn numel(&self) -> usize {
        match *self {
            ShapeState::Map { t, k, c } => t * k * c,
            ShapeState::Flat(n) => n,
        }
    }
}

/// Shape of a layer's output given its input, or an error naming the layer.
pub fn layer_output_shape(
    layer: &LayerSpec,
    input: ShapeState,
    layer_index: usize,
) -> Result<ShapeState> {
    let err = |reason: String| NetError::LayerShape {
        layer: layer_index,
        kind: layer.kind(),
        reason,
    };
    match (layer, input) {
        (LayerSpec::Conv2d { dt, dk, cout }, ShapeState::Map { t, k, .. }) => {
            if t < *dt || k < *dk {
                return Err(err(format!("kernel {dt}x{dk} exceeds input {t}x{k}")));
            }
            Ok(ShapeState::Map { t: t - dt + 1, k: k - dk + 1, c: *cout })
        }
        (LayerSpec::Conv1dFullHeight { dt, cout }, ShapeState::Map { t, .. }) => {
            if t < *dt {
                return Err(err(format!("kernel width {dt} exceeds input length {t}")));
            }
            Ok(ShapeState::Map { t: t - dt + 1, k: 1, c: *cout })
        }
        (LayerSpec::Spiral { dt, dk, octaves, q, cout }, ShapeState::Map { t, k, .. }) => {
            let span = q * (octaves - 1) + dk;
            if t < *dt || k < span {
                return Err(err(format!("spiral span {span} exceeds input height {k}")));
            }
            Ok(ShapeState::Map { t: t - dt + 1, k: k - span + 1, c: *cout })
        }
        (LayerSpec::MaxPool { pt, pk }, ShapeState::Map { t, k, c }) => {
            if *pt == 0 || *pk == 0 || *pt > t || *pk > k {
                return Err(err(format!("pool {pt}x{pk} invalid for input {t}x{k}")));
            }
            Ok(ShapeState::Map { t: t / pt, k: k / pk, c })
        }
        (LayerSpec::Relu { .. } | LayerSpec::Dropout { .. }, shape) => Ok(shape),
        (LayerSpec::Flatten, ShapeState::Map { .. }) => Ok(ShapeState::Flat(input.numel())),
        (LayerSpec::Dense { units, .. }, ShapeState::Flat(_)) => Ok(ShapeState::Flat(*units)),
        (LayerSpec::Softmax, ShapeState::Flat(n)) => Ok(ShapeState::Flat(n)),
        (_, input) => Err(err(format!("cannot apply to input shape {input:?}"))),
    }
}

/// Parameter element count of one layer given its input shape.
fn layer_param_count(layer: &LayerSpec, input: ShapeState) -> usize {
    match (layer, input) {
        (LayerSpec::Conv2d { dt, dk, cout }, ShapeState::Map { c, .. }) => dt * dk * c * cout + cout,
        (LayerSpec::Conv1dFullHeight { dt, cout }, ShapeState::Map { k, c, .. }) => {
            dt * k * c * cout + cout
        }
        (LayerSpec::Spiral { dt, dk, octaves, cout, .. }, ShapeState::Map { c, .. }) => {
            dt * dk * octaves * c * cout + cout
        }
        (LayerSpec::Dense { units, bias }, ShapeState::Flat(n)) => {
            n * units + if *bias { *units } else { 0 }
        }
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCount {
    /// "branch0", "branch1", ... or "head".
    pub section: String,
    pub layer: usize,
    pub kind: &'static str,
    pub output: String,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCount {
    pub rows: Vec<LayerCount>,
    pub total: usize,
}

fn shape_label(s: ShapeState) -> String {
    match s {
        ShapeState::Map { t, k, c } => format!("{t}x{k}x{c}"),
        ShapeState::Flat(n) => format!("{n}"),
    }
}

/// Exact weight and bias element counts per layer, computed symbolically
/// from the network description without allocating any tensor.
pub fn count_params(spec: &NetworkSpec) -> Result<ParamCount> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut total = 0usize;
    let mut branch_flat = 0usize;
    for (b, branch) in spec.branches.iter().enumerate() {
        let mut shape = ShapeState::Map {
            t: spec.input_frames,
            k: branch.crop.width(),
            c: 1,
        };
        for (i, layer) in branch.layers.iter().enumerate() {
            let params = layer_param_count(layer, shape);
            shape = layer_output_shape(layer, shape, i)?;
            total += params;
            rows.push(LayerCount {
                section: format!("branch{b}"),
                layer: i,
                kind: layer.kind(),
                output: shape_label(shape),
                params,
            });
        }
        branch_flat += shape.numel();
    }
    let mut shape = ShapeState::Flat(branch_flat);
    for (i, layer) in spec.head.iter().enumerate() {
        if matches!(layer, LayerSpec::Concat) {
            rows.push(LayerCount {
                section: "head".into(),
                layer: i,
                kind: "concat",
                output: shape_label(shape),
                params: 0,
            });
            continue;
        }
        let params = layer_param_count(layer, shape);
        shape = layer_output_shape(layer, shape, i)?;
        total += params;
        rows.push(LayerCount {
            section: "head".into(),
            layer: i,
            kind: layer.kind(),
            output: shape_label(shape),
            params,
        });
    }
    Ok(ParamCount { rows, total })
}

impl NetworkSpec {
    /// Structural sanity: at least one branch, every branch ends in a
    /// flatten, and the head starts with the concat marker.
    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(NetError::InvalidSpec("no branches".into()));
        }
        for (b, branch) in self.branches.iter().enumerate() {
            if branch.crop.hi_bin > self.input_bins {
                return Err(NetError::InvalidSpec(format!(
                    "branch {b} crop exceeds {} input bins",
                    self.input_bins
                )));
            }
            if !matches!(branch.layers.last(), Some(LayerSpec::Flatten)) {
                return Err(NetError::InvalidSpec(format!(
                    "branch {b} must end in a flatten layer"
                )));
            }
        }
        match self.head.first() {
            Some(LayerSpec::Concat) => {}
            _ => {
                return Err(NetError::InvalidSpec(
                    "head must start with the concat layer".into(),
                ))
            }
        }
        if !matches!(self.head.last(), Some(LayerSpec::Softmax)) {
            return Err(NetError::InvalidSpec("head must end in softmax".into()));
        }
        Ok(())
    }

    /// Number of output classes (units of the last dense layer).
    pub fn classes(&self) -> usize {
        self.head
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { units, .. } => Some(*units),
                _ => None,
            })
            .next_back()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network spec serializes")
    }

    pub fn from_json(s: &str) -> Result<NetworkSpec> {
        serde_json::from_str(s).map_err(|e| NetError::InvalidSpec(e.to_string()))
    }
}

/// The shared classifier head: concat, dropout, 64 hidden units with bias
/// behind a leaky rectifier, dropout, 8 bias-free output units, softmax.
pub fn standard_head() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Concat,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Dense { units: 64, bias: true },
        LayerSpec::Relu { alpha: 0.3 },
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Dense { units: 8, bias: false },
        LayerSpec::Softmax,
    ]
}

fn two_d_branch(n_kernels: usize) -> BranchSpec {
    BranchSpec {
        crop: FULL_CROP,
        layers: vec![
            LayerSpec::Conv2d { dt: 5, dk: 5, cout: n_kernels },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 3 },
            LayerSpec::Conv2d { dt: 5, dk: 5, cout: n_kernels },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 3 },
            LayerSpec::Flatten,
        ],
    }
}

fn one_d_branch() -> BranchSpec {
    BranchSpec {
        crop: ONE_D_CROP,
        layers: vec![
            LayerSpec::Conv1dFullHeight { dt: 3, cout: 32 },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 1 },
            LayerSpec::Conv1dFullHeight { dt: 3, cout: 32 },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 1 },
            LayerSpec::Flatten,
        ],
    }
}

fn spiral_branch() -> BranchSpec {
    BranchSpec {
        crop: SPIRAL_CROP,
        layers: vec![
            LayerSpec::Spiral { dt: 5, dk: 3, octaves: 3, q: 12, cout: 32 },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 3 },
            LayerSpec::Conv2d { dt: 5, dk: 5, cout: 32 },
            LayerSpec::Relu { alpha: 0.3 },
            LayerSpec::MaxPool { pt: 5, pk: 3 },
            LayerSpec::Flatten,
        ],
    }
}

/// Flat time-frequency network: two conv/pool stages of `n_kernels` 5x5
/// kernels with 5x3 pooling over the full 96-bin axis.
pub fn build_2d(n_kernels: usize) -> Result<NetworkSpec> {
    if n_kernels != 32 && n_kernels != 48 {
        return Err(NetError::InvalidSpec(format!(
            "2-d network is defined for 32 or 48 kernels, got {n_kernels}"
        )));
    }
    Ok(NetworkSpec {
        name: format!("2d{n_kernels}"),
        input_frames: 128,
        input_bins: 96,
        branches: vec![two_d_branch(n_kernels)],
        head: standard_head(),
    })
}

/// Temporal network on the top three octaves: full-height width-3 kernels
/// with width-5 time pooling, twice.
pub fn build_1d() -> NetworkSpec {
    NetworkSpec {
        name: "1d".into(),
        input_frames: 128,
        input_bins: 96,
        branches: vec![one_d_branch()],
        head: standard_head(),
    }
}

/// Pitch-spiral network on the low four octaves: 5x3 kernels with three
/// octave taps, then the same pooling and second stage as the 2-d network.
pub fn build_spiral() -> NetworkSpec {
    NetworkSpec {
        name: "spiral".into(),
        input_frames: 128,
        input_bins: 96,
        branches: vec![spiral_branch()],
        head: standard_head(),
    }
}

/// Weight sharing strategies available for hybridization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    TwoD,
    OneD,
    Spiral,
}

/// Hybrid network: each requested strategy contributes its convolutional
/// branch, the flattened branch features are concatenated, and one shared
/// dense head classifies the result.
pub fn build_hybrid(strategies: &[Strategy]) -> Result<NetworkSpec> {
    if strategies.is_empty() {
        return Err(NetError::InvalidSpec(
            "hybrid needs at least one strategy".into(),
        ));
    }
    let mut ordered: Vec<Strategy> = strategies.to_vec();
    ordered.sort();
    ordered.dedup();
    let branches = ordered
        .iter()
        .map(|s| match s {
            Strategy::TwoD => two_d_branch(32),
            Strategy::OneD => one_d_branch(),
            Strategy::Spiral => spiral_branch(),
        })
        .collect();
    let name = ordered
        .iter()
        .map(|s| match s {
            Strategy::TwoD => "2d",
            Strategy::OneD => "1d",
            Strategy::Spiral => "spiral",
        })
        .collect::<Vec<_>>()
        .join("+");
    Ok(NetworkSpec {
        name,
        input_frames: 128,
        input_bins: 96,
        branches,
        head: standard_head(),
    })
}

/// Architecture names exposed on the command line, one per results row.
pub fn canonical_names() -> &'static [&'static str] {
    &["2d32", "2d48", "1d", "spiral", "spiral+1d", "spiral+2d", "1d+2d", "all"]
}

pub fn by_name(name: &str) -> Result<NetworkSpec> {
    match name {
        "2d32" => build_2d(32),
        "2d48" => build_2d(48),
        "1d" => Ok(build_1d()),
        "spiral" => Ok(build_spiral()),
        "spiral+1d" => build_hybrid(&[Strategy::Spiral, Strategy::OneD]),
        "spiral+2d" => build_hybrid(&[Strategy::Spiral, Strategy::TwoD]),
        "1d+2d" => build_hybrid(&[Strategy::OneD, Strategy::TwoD]),
        "all" => build_hybrid(&[Strategy::TwoD, Strategy::OneD, Strategy::Spiral]),
        other => Err(NetError::UnknownArchitecture(other.into())),
    }
}
