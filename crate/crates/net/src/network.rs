//! Runtime instantiation of a [`NetworkSpec`]: parameter storage, the
//! forward pass, and reverse-mode backpropagation through every branch.

use rand::Rng;

use timbre_tensor::ops::{
    conv2d_valid, conv2d_valid_backward, dense, dense_backward, dropout_backward,
    dropout_with_mask, maxpool_with_indices, maxpool_backward, relu_leaky, relu_leaky_backward,
    softmax, softmax_cross_entropy_grad, spiral_conv, spiral_conv_backward,
};
use timbre_tensor::{
    Checkpoint, ConvKernel, DenseWeights, Scalar, SpiralKernel, Tensor, TensorError,
};

use crate::spec::{layer_output_shape, LayerSpec, NetworkSpec, ShapeState};
use crate::{NetError, Result};

enum RtParams<T: Scalar> {
    Conv(ConvKernel<T>),
    Spiral(SpiralKernel<T>),
    Dense(DenseWeights<T>),
    None,
}

struct RtLayer<T: Scalar> {
    spec: LayerSpec,
    params: RtParams<T>,
}

/// Everything recorded during one training-mode forward pass; consumed by
/// the backward pass of the same sample.
pub struct TrainTape<T: Scalar> {
    branch_records: Vec<Vec<Record<T>>>,
    head_records: Vec<Record<T>>,
    flat_sizes: Vec<usize>,
    probs: Tensor<T>,
}

impl<T: Scalar> TrainTape<T> {
    pub fn probs(&self) -> &Tensor<T> {
        &self.probs
    }
}

enum Record<T: Scalar> {
    Input(Tensor<T>),
    Pool { input_shape: Vec<usize>, indices: Vec<u32> },
    DropMask(Option<Vec<T>>),
    Reshape(Vec<usize>),
    Marker,
}

/// Per-parameter gradients in the same order as [`Network::params`].
pub type Gradients<T> = Vec<Tensor<T>>;

/// A spec instantiated with parameters. Forward with frozen parameters is
/// `&self` and reentrant; mutation happens only through `params_mut` /
/// checkpoint loading on the owning thread.
pub struct Network<T: Scalar> {
    spec: NetworkSpec,
    branches: Vec<Vec<RtLayer<T>>>,
    head: Vec<RtLayer<T>>,
    pending: Option<TrainTape<T>>,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> Result<Self> {
        Self::build(
            spec,
            &mut |shape, fan_in, fan_out, rng: &mut R| {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Tensor::uniform(shape, limit, rng)
            },
            rng,
        )
    }

    /// All parameters zero; with zero logits the output is uniform.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let mut rng = NoRng;
        Self::build(spec, &mut |shape, _, _, _: &mut NoRng| Tensor::zeros(shape), &mut rng)
    }

    fn build<R>(
        spec: &NetworkSpec,
        make_weights: &mut impl FnMut(&[usize], usize, usize, &mut R) -> Tensor<T>,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let mut branches = Vec::with_capacity(spec.branches.len());
        let mut flat_total = 0usize;
        for branch in &spec.branches {
            let mut shape = ShapeState::Map { t: spec.input_frames, k: branch.crop.width(), c: 1 };
            let mut layers = Vec::with_capacity(branch.layers.len());
            for (i, layer) in branch.layers.iter().enumerate() {
                let params = instantiate(layer, shape, make_weights, rng)?;
                shape = layer_output_shape(layer, shape, i)?;
                layers.push(RtLayer { spec: layer.clone(), params });
            }
            flat_total += shape.numel();
            branches.push(layers);
        }
        let mut shape = ShapeState::Flat(flat_total);
        let mut head = Vec::with_capacity(spec.head.len());
        for (i, layer) in spec.head.iter().enumerate() {
            if matches!(layer, LayerSpec::Concat) {
                head.push(RtLayer { spec: layer.clone(), params: RtParams::None });
                continue;
            }
            let params = instantiate(layer, shape, make_weights, rng)?;
            shape = layer_output_shape(layer, shape, i)?;
            head.push(RtLayer { spec: layer.clone(), params });
        }
        Ok(Network { spec: spec.clone(), branches, head, pending: None })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Parameter tensors in declaration order (branches, then head).
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for layer in self.layers() {
            match &layer.params {
                RtParams::Conv(k) => {
                    out.push(&k.weights);
                    out.push(&k.bias);
                }
                RtParams::Spiral(k) => {
                    out.push(&k.weights);
                    out.push(&k.bias);
                }
                RtParams::Dense(d) => {
                    out.push(&d.weights);
                    if let Some(b) = &d.bias {
                        out.push(b);
                    }
                }
                RtParams::None => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for layer in self
            .branches
            .iter_mut()
            .flatten()
            .chain(self.head.iter_mut())
        {
            match &mut layer.params {
                RtParams::Conv(k) => {
                    out.push(&mut k.weights);
                    out.push(&mut k.bias);
                }
                RtParams::Spiral(k) => {
                    out.push(&mut k.weights);
                    out.push(&mut k.bias);
                }
                RtParams::Dense(d) => {
                    out.push(&mut d.weights);
                    if let Some(b) = &mut d.bias {
                        out.push(b);
                    }
                }
                RtParams::None => {}
            }
        }
        out
    }

    fn layers(&self) -> impl Iterator<Item = &RtLayer<T>> {
        self.branches.iter().flatten().chain(self.head.iter())
    }

    /// Declaration-ordered `(name, tensor)` pairs for checkpointing.
    pub fn named_params(&self) -> Vec<(String, Tensor<f32>)> {
        let mut out = Vec::new();
        let mut push = |section: &str, idx: usize, layer: &RtLayer<T>| match &layer.params {
            RtParams::Conv(k) => {
                out.push((format!("{section}.{idx}.conv.weights"), k.weights.cast()));
                out.push((format!("{section}.{idx}.conv.bias"), k.bias.cast()));
            }
            RtParams::Spiral(k) => {
                out.push((format!("{section}.{idx}.spiral.weights"), k.weights.cast()));
                out.push((format!("{section}.{idx}.spiral.bias"), k.bias.cast()));
            }
            RtParams::Dense(d) => {
                out.push((format!("{section}.{idx}.dense.weights"), d.weights.cast()));
                if let Some(b) = &d.bias {
                    out.push((format!("{section}.{idx}.dense.bias"), b.cast()));
                }
            }
            RtParams::None => {}
        };
        for (b, layers) in self.branches.iter().enumerate() {
            for (i, layer) in layers.iter().enumerate() {
                push(&format!("branch{b}"), i, layer);
            }
        }
        for (i, layer) in self.head.iter().enumerate() {
            push("head", i, layer);
        }
        out
    }

    pub fn to_checkpoint(
        &self,
        metadata: serde_json::Map<String, serde_json::Value>,
    ) -> Checkpoint {
        Checkpoint::new(
            serde_json::to_value(&self.spec).expect("spec serializes"),
            self.named_params(),
            metadata,
        )
    }

    /// Rebuilds a network from a checkpoint, validating that the stored
    /// parameter blocks match the architecture document.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Network<T>> {
        let spec: NetworkSpec = serde_json::from_value(ckpt.header.architecture.clone())
            .map_err(|e| NetError::InvalidSpec(format!("checkpoint architecture: {e}")))?;
        let mut net = Network::zeros(&spec)?;
        let expected = net.named_params();
        if expected.len() != ckpt.params.len() {
            return Err(NetError::InvalidSpec(format!(
                "checkpoint holds {} parameter blocks, architecture needs {}",
                ckpt.params.len(),
                expected.len()
            )));
        }
        for ((name, want), (record, stored)) in expected
            .iter()
            .zip(ckpt.header.params.iter().zip(&ckpt.params))
        {
            if &record.name != name || stored.shape() != want.shape() {
                return Err(NetError::InvalidSpec(format!(
                    "checkpoint block `{}` {:?} does not match `{}` {:?}",
                    record.name,
                    stored.shape(),
                    name,
                    want.shape()
                )));
            }
        }
        for (slot, stored) in net.params_mut().into_iter().zip(&ckpt.params) {
            *slot = stored.cast();
        }
        Ok(net)
    }

    fn crop_input(&self, input: &Tensor<T>, branch: usize) -> Result<Tensor<T>> {
        if input.shape() != [self.spec.input_frames, self.spec.input_bins] {
            return Err(NetError::Tensor(TensorError::DimMismatch {
                axis: "spectrogram",
                expected: self.spec.input_frames * self.spec.input_bins,
                got: input.numel(),
            }));
        }
        let crop = self.spec.branches[branch].crop;
        let (frames, bins, width) = (self.spec.input_frames, self.spec.input_bins, crop.width());
        let mut data = Vec::with_capacity(frames * width);
        let src = input.data();
        for t in 0..frames {
            let row = t * bins;
            data.extend_from_slice(&src[row + crop.lo_bin..row + crop.hi_bin]);
        }
        Ok(Tensor::from_vec(&[frames, width, 1], data)?)
    }

    /// Inference-mode forward pass: dropout is the identity, nothing is
    /// recorded. Returns the class probability vector.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut flats = Vec::with_capacity(self.branches.len());
        for (b, layers) in self.branches.iter().enumerate() {
            let mut x = self.crop_input(input, b)?;
            for layer in layers {
                x = eval_layer(layer, x)?;
            }
            flats.push(x);
        }
        let mut x = concat(&flats)?;
        for layer in &self.head {
            x = eval_layer(layer, x)?;
        }
        Ok(x)
    }

    /// Training-mode forward pass: dropout masks are sampled from `rng` and
    /// every intermediate needed by backprop is recorded on the returned
    /// tape. `&self` so batches can be evaluated in parallel against frozen
    /// parameters.
    pub fn forward_train<R: Rng>(
        &self,
        input: &Tensor<T>,
        rng: &mut R,
    ) -> Result<(Tensor<T>, TrainTape<T>)> {
        let mut branch_records = Vec::with_capacity(self.branches.len());
        let mut flats = Vec::with_capacity(self.branches.len());
        for (b, layers) in self.branches.iter().enumerate() {
            let mut x = self.crop_input(input, b)?;
            let mut records = Vec::with_capacity(layers.len());
            for layer in layers {
                let (y, record) = train_layer(layer, x, rng)?;
                records.push(record);
                x = y;
            }
            branch_records.push(records);
            flats.push(x);
        }
        let flat_sizes = flats.iter().map(|f| f.numel()).collect();
        let mut x = concat(&flats)?;
        let mut head_records = Vec::with_capacity(self.head.len());
        for layer in &self.head {
            let (y, record) = train_layer(layer, x, rng)?;
            head_records.push(record);
            x = y;
        }
        let tape = TrainTape {
            branch_records,
            head_records,
            flat_sizes,
            probs: x.clone(),
        };
        Ok((x, tape))
    }

    /// Backpropagation from the fused softmax/cross-entropy gradient for
    /// `class`, consuming the tape of the matching forward pass. Gradients
    /// come back in [`Network::params`] order. Input gradients are not
    /// propagated past each branch's first layer.
    pub fn backward(&self, tape: TrainTape<T>, class: usize) -> Result<Gradients<T>> {
        let mut grads: Vec<Tensor<T>> = Vec::new();
        // Head, in reverse; parameter gradients are collected in reverse
        // order and flipped at the end.
        let mut g = softmax_cross_entropy_grad(&tape.probs, class)?;
        let mut rev_head: Vec<Tensor<T>> = Vec::new();
        for (layer, record) in self.head.iter().zip(tape.head_records.iter()).rev() {
            g = backward_layer(layer, record, g, true, &mut rev_head)?;
        }
        // Split the concatenated gradient back into branch segments.
        let mut rev_branches: Vec<Tensor<T>> = Vec::new();
        let mut offset = 0usize;
        let mut segments = Vec::with_capacity(tape.flat_sizes.len());
        for &n in &tape.flat_sizes {
            segments.push(Tensor::from_vec(&[n], g.data()[offset..offset + n].to_vec())?);
            offset += n;
        }
        for ((layers, records), seg) in self
            .branches
            .iter()
            .zip(tape.branch_records.iter())
            .zip(segments)
            .rev()
        {
            let mut gb = seg;
            for (i, (layer, record)) in layers.iter().zip(records.iter()).enumerate().rev() {
                let need_input = i > 0;
                gb = backward_layer(layer, record, gb, need_input, &mut rev_branches)?;
            }
        }
        grads.extend(rev_branches.into_iter().rev());
        grads.extend(rev_head.into_iter().rev());
        Ok(grads)
    }

    /// Stateful convenience: records the forward pass on the network itself.
    pub fn record_forward<R: Rng>(&mut self, input: &Tensor<T>, rng: &mut R) -> Result<Tensor<T>> {
        let (probs, tape) = self.forward_train(input, rng)?;
        self.pending = Some(tape);
        Ok(probs)
    }

    /// Backward for the last recorded forward; errors if none is pending.
    pub fn backward_recorded(&mut self, class: usize) -> Result<Gradients<T>> {
        let tape = self
            .pending
            .take()
            .ok_or(NetError::Tensor(TensorError::BackwardBeforeForward))?;
        self.backward(tape, class)
    }
}

struct NoRng;

fn instantiate<T: Scalar, R>(
    layer: &LayerSpec,
    input: ShapeState,
    make_weights: &mut impl FnMut(&[usize], usize, usize, &mut R) -> Tensor<T>,
    rng: &mut R,
) -> Result<RtParams<T>> {
    match (layer, input) {
        (LayerSpec::Conv2d { dt, dk, cout }, ShapeState::Map { c, .. }) => {
            let fan_in = dt * dk * c;
            let fan_out = dt * dk * cout;
            let w = make_weights(&[*dt, *dk, c, *cout], fan_in, fan_out, rng);
            Ok(RtParams::Conv(ConvKernel::new(w, Tensor::zeros(&[*cout]))?))
        }
        (LayerSpec::Conv1dFullHeight { dt, cout }, ShapeState::Map { k, c, .. }) => {
            // Full-height kernel: the frequency support equals the current
            // height, collapsing the sum over bins into the kernel.
            let fan_in = dt * k * c;
            let fan_out = dt * k * cout;
            let w = make_weights(&[*dt, k, c, *cout], fan_in, fan_out, rng);
            Ok(RtParams::Conv(ConvKernel::new(w, Tensor::zeros(&[*cout]))?))
        }
        (LayerSpec::Spiral { dt, dk, octaves, q, cout }, ShapeState::Map { c, .. }) => {
            let fan_in = dt * dk * octaves * c;
            let fan_out = dt * dk * octaves * cout;
            let w = make_weights(&[*dt, *dk, *octaves, c, *cout], fan_in, fan_out, rng);
            Ok(RtParams::Spiral(SpiralKernel::new(w, Tensor::zeros(&[*cout]), *q)?))
        }
        (LayerSpec::Dense { units, bias }, ShapeState::Flat(n)) => {
            let w = make_weights(&[n, *units], n, *units, rng);
            let b = bias.then(|| Tensor::zeros(&[*units]));
            Ok(RtParams::Dense(DenseWeights::new(w, b)?))
        }
        (
            LayerSpec::MaxPool { .. }
            | LayerSpec::Relu { .. }
            | LayerSpec::Dropout { .. }
            | LayerSpec::Flatten
            | LayerSpec::Softmax,
            _,
        ) => Ok(RtParams::None),
        (layer, shape) => Err(NetError::InvalidSpec(format!(
            "{} cannot take input {shape:?}",
            layer.kind()
        ))),
    }
}

fn concat<T: Scalar>(flats: &[Tensor<T>]) -> Result<Tensor<T>> {
    let total = flats.iter().map(|f| f.numel()).sum();
    let mut data = Vec::with_capacity(total);
    for f in flats {
        data.extend_from_slice(f.data());
    }
    Ok(Tensor::from_vec(&[total], data)?)
}

fn eval_layer<T: Scalar>(layer: &RtLayer<T>, x: Tensor<T>) -> Result<Tensor<T>> {
    Ok(match (&layer.spec, &layer.params) {
        (LayerSpec::Conv2d { .. } | LayerSpec::Conv1dFullHeight { .. }, RtParams::Conv(k)) => {
            conv2d_valid(&x, k)?
        }
        (LayerSpec::Spiral { .. }, RtParams::Spiral(k)) => spiral_conv(&x, k)?,
        (LayerSpec::MaxPool { pt, pk }, _) => {
            timbre_tensor::ops::maxpool(&x, *pt, *pk)?
        }
        (LayerSpec::Relu { alpha }, _) => relu_leaky(&x, T::from_f64(*alpha))?,
        (LayerSpec::Dropout { .. }, _) => x, // identity at inference
        (LayerSpec::Flatten, _) => {
            let n = x.numel();
            x.reshape(&[n])?
        }
        (LayerSpec::Concat, _) => x,
        (LayerSpec::Dense { .. }, RtParams::Dense(d)) => dense(&x, d)?,
        (LayerSpec::Softmax, _) => softmax(&x)?,
        (spec, _) => {
            return Err(NetError::InvalidSpec(format!(
                "layer {} has no matching parameters",
                spec.kind()
            )))
        }
    })
}

fn train_layer<T: Scalar, R: Rng>(
    layer: &RtLayer<T>,
    x: Tensor<T>,
    rng: &mut R,
) -> Result<(Tensor<T>, Record<T>)> {
    Ok(match (&layer.spec, &layer.params) {
        (LayerSpec::Conv2d { .. } | LayerSpec::Conv1dFullHeight { .. }, RtParams::Conv(k)) => {
            let y = conv2d_valid(&x, k)?;
            (y, Record::Input(x))
        }
        (LayerSpec::Spiral { .. }, RtParams::Spiral(k)) => {
            let y = spiral_conv(&x, k)?;
            (y, Record::Input(x))
        }
        (LayerSpec::MaxPool { pt, pk }, _) => {
            let (y, indices) = maxpool_with_indices(&x, *pt, *pk)?;
            (y, Record::Pool { input_shape: x.shape().to_vec(), indices })
        }
        (LayerSpec::Relu { alpha }, _) => {
            let y = relu_leaky(&x, T::from_f64(*alpha))?;
            (y, Record::Input(x))
        }
        (LayerSpec::Dropout { rate }, _) => {
            if *rate == 0.0 {
                (x, Record::DropMask(None))
            } else {
                let (y, mask) = dropout_with_mask(&x, *rate, rng)?;
                (y, Record::DropMask(Some(mask)))
            }
        }
        (LayerSpec::Flatten, _) => {
            let shape = x.shape().to_vec();
            let n = x.numel();
            (x.reshape(&[n])?, Record::Reshape(shape))
        }
        (LayerSpec::Concat, _) => (x, Record::Marker),
        (LayerSpec::Dense { .. }, RtParams::Dense(d)) => {
            let y = dense(&x, d)?;
            (y, Record::Input(x))
        }
        (LayerSpec::Softmax, _) => {
            let y = softmax(&x)?;
            (y, Record::Marker)
        }
        (spec, _) => {
            return Err(NetError::InvalidSpec(format!(
                "layer {} has no matching parameters",
                spec.kind()
            )))
        }
    })
}

/// One layer of reverse mode. Parameter gradients are appended to
/// `rev_params` (weights before bias, layers visited in reverse).
fn backward_layer<T: Scalar>(
    layer: &RtLayer<T>,
    record: &Record<T>,
    grad: Tensor<T>,
    need_input: bool,
    rev_params: &mut Vec<Tensor<T>>,
) -> Result<Tensor<T>> {
    Ok(match (&layer.spec, &layer.params, record) {
        (
            LayerSpec::Conv2d { .. } | LayerSpec::Conv1dFullHeight { .. },
            RtParams::Conv(k),
            Record::Input(x),
        ) => {
            let g = conv2d_valid_backward(x, k, &grad, need_input)?;
            rev_params.push(g.bias);
            rev_params.push(g.weights);
            g.input.unwrap_or_else(|| Tensor::zeros(&[0]))
        }
        (LayerSpec::Spiral { .. }, RtParams::Spiral(k), Record::Input(x)) => {
            let g = spiral_conv_backward(x, k, &grad, need_input)?;
            rev_params.push(g.bias);
            rev_params.push(g.weights);
            g.input.unwrap_or_else(|| Tensor::zeros(&[0]))
        }
        (LayerSpec::MaxPool { .. }, _, Record::Pool { input_shape, indices }) => {
            maxpool_backward(input_shape, indices, &grad)?
        }
        (LayerSpec::Relu { alpha }, _, Record::Input(x)) => {
            relu_leaky_backward(x, &grad, T::from_f64(*alpha))?
        }
        (LayerSpec::Dropout { .. }, _, Record::DropMask(mask)) => match mask {
            Some(mask) => dropout_backward(&grad, mask)?,
            None => grad,
        },
        (LayerSpec::Flatten, _, Record::Reshape(shape)) => grad.reshape(shape)?,
        (LayerSpec::Concat, _, _) => grad,
        (LayerSpec::Dense { .. }, RtParams::Dense(d), Record::Input(x)) => {
            let g = dense_backward(x, d, &grad)?;
            if let Some(b) = g.bias {
                rev_params.push(b);
            }
            rev_params.push(g.weights);
            g.input
        }
        // Softmax is fused with the loss; its gradient arrives pre-formed.
        (LayerSpec::Softmax, _, _) => grad,
        (spec, _, _) => {
            return Err(NetError::InvalidSpec(format!(
                "layer {} tape record mismatch",
                spec.kind()
            )))
        }
    })
}
