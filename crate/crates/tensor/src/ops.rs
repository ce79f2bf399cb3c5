//! Layer operations: valid convolutions (planar and pitch-spiral), leaky
//! ReLU, non-overlapping max-pooling, dense projections, softmax with
//! cross-entropy, and inverted dropout. Each forward op has a paired
//! backward producing exact reverse-mode gradients.
//!
//! Feature maps are `[time, frequency, channel]`, kernels keep the output
//! channel innermost so the hot loops vectorize over it.

use crate::{Result, Scalar, Tensor, TensorError};

/// Probability floor applied inside the cross-entropy logarithm.
pub const CROSS_ENTROPY_FLOOR: f64 = 1e-12;

/// Planar convolution kernel: weights `[dt, dk, cin, cout]` plus one bias
/// per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel<T: Scalar> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> ConvKernel<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weights.ndim() != 4 {
            return Err(TensorError::DimMismatch {
                axis: "kernel rank",
                expected: 4,
                got: weights.ndim(),
            });
        }
        if weights.shape().contains(&0) {
            return Err(TensorError::InvalidArg {
                name: "kernel shape",
                reason: format!("extents must be positive, got {:?}", weights.shape()),
            });
        }
        let cout = weights.shape()[3];
        if bias.shape() != [cout] {
            return Err(TensorError::DimMismatch {
                axis: "bias",
                expected: cout,
                got: bias.numel(),
            });
        }
        Ok(ConvKernel { weights, bias })
    }

    pub fn dt(&self) -> usize {
        self.weights.shape()[0]
    }
    pub fn dk(&self) -> usize {
        self.weights.shape()[1]
    }
    pub fn cin(&self) -> usize {
        self.weights.shape()[2]
    }
    pub fn cout(&self) -> usize {
        self.weights.shape()[3]
    }
}

/// Pitch-spiral kernel: weights `[dt, dk, j1, cin, cout]`. The `j1` axis
/// taps the input `q` bins (one octave) apart, so tap `j` reads frequency
/// `k + dk_offset + q * j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralKernel<T: Scalar> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub q: usize,
}

impl<T: Scalar> SpiralKernel<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>, q: usize) -> Result<Self> {
        if weights.ndim() != 5 {
            return Err(TensorError::DimMismatch {
                axis: "kernel rank",
                expected: 5,
                got: weights.ndim(),
            });
        }
        if weights.shape().contains(&0) || q == 0 {
            return Err(TensorError::InvalidArg {
                name: "spiral kernel",
                reason: format!("extents and q must be positive, got {:?}, q={q}", weights.shape()),
            });
        }
        let cout = weights.shape()[4];
        if bias.shape() != [cout] {
            return Err(TensorError::DimMismatch {
                axis: "bias",
                expected: cout,
                got: bias.numel(),
            });
        }
        Ok(SpiralKernel { weights, bias, q })
    }

    pub fn dt(&self) -> usize {
        self.weights.shape()[0]
    }
    pub fn dk(&self) -> usize {
        self.weights.shape()[1]
    }
    pub fn octaves(&self) -> usize {
        self.weights.shape()[2]
    }
    pub fn cin(&self) -> usize {
        self.weights.shape()[3]
    }
    pub fn cout(&self) -> usize {
        self.weights.shape()[4]
    }

    /// Frequency span the kernel needs: `q * (j1 - 1) + dk`.
    pub fn span(&self) -> usize {
        self.q * (self.octaves() - 1) + self.dk()
    }
}

/// Dense projection weights `[in, out]`; the bias is optional because the
/// output layer has none.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights<T: Scalar> {
    pub weights: Tensor<T>,
    pub bias: Option<Tensor<T>>,
}

impl<T: Scalar> DenseWeights<T> {
    pub fn new(weights: Tensor<T>, bias: Option<Tensor<T>>) -> Result<Self> {
        if weights.ndim() != 2 {
            return Err(TensorError::DimMismatch {
                axis: "weights rank",
                expected: 2,
                got: weights.ndim(),
            });
        }
        let out = weights.shape()[1];
        if let Some(b) = &bias {
            if b.shape() != [out] {
                return Err(TensorError::DimMismatch {
                    axis: "bias",
                    expected: out,
                    got: b.numel(),
                });
            }
        }
        Ok(DenseWeights { weights, bias })
    }

    pub fn fan_in(&self) -> usize {
        self.weights.shape()[0]
    }
    pub fn fan_out(&self) -> usize {
        self.weights.shape()[1]
    }
}

fn expect_3d<T: Scalar>(input: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if input.ndim() != 3 {
        return Err(TensorError::DimMismatch {
            axis: "input rank",
            expected: 3,
            got: input.ndim(),
        });
    }
    let s = input.shape();
    Ok((s[0], s[1], s[2]))
}

/// Dot product with unrolled accumulators so the reduction vectorizes.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::ZERO; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (ac, bc) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for l in 0..8 {
            lanes[l] += ac[l] * bc[l];
        }
    }
    let mut s = T::ZERO;
    for l in lanes {
        s += l;
    }
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Valid (no padding) 2-d convolution with bias: the output at `(t, k, co)`
/// is the full correlation sum over the kernel's time-frequency support and
/// input channels. Output shape `(T - dt + 1, K - dk + 1, cout)`.
pub fn conv2d_valid<T: Scalar>(input: &Tensor<T>, kernel: &ConvKernel<T>) -> Result<Tensor<T>> {
    let (t_in, k_in, cin) = expect_3d(input)?;
    let (dt, dk, cout) = (kernel.dt(), kernel.dk(), kernel.cout());
    if cin != kernel.cin() {
        return Err(TensorError::DimMismatch {
            axis: "channels",
            expected: kernel.cin(),
            got: cin,
        });
    }
    if t_in < dt {
        return Err(TensorError::DimMismatch {
            axis: "time",
            expected: dt,
            got: t_in,
        });
    }
    if k_in < dk {
        return Err(TensorError::DimMismatch {
            axis: "frequency",
            expected: dk,
            got: k_in,
        });
    }
    let (t_out, k_out) = (t_in - dt + 1, k_in - dk + 1);
    let x = input.data();
    let w = kernel.weights.data();
    let bias = kernel.bias.data();
    let mut out = vec![T::ZERO; t_out * k_out * cout];

    for t in 0..t_out {
        for k in 0..k_out {
            let acc = &mut out[(t * k_out + k) * cout..(t * k_out + k + 1) * cout];
            acc.copy_from_slice(bias);
            for dt_i in 0..dt {
                let row = ((t + dt_i) * k_in + k) * cin;
                let w_t = dt_i * dk * cin * cout;
                for dk_i in 0..dk {
                    let x_base = row + dk_i * cin;
                    let w_base = w_t + dk_i * cin * cout;
                    for ci in 0..cin {
                        let xv = x[x_base + ci];
                        let w_row = &w[w_base + ci * cout..w_base + (ci + 1) * cout];
                        for (a, &wv) in acc.iter_mut().zip(w_row) {
                            *a += xv * wv;
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[t_out, k_out, cout], out)
}

/// Gradients produced by a convolution backward pass. `input` is `None`
/// when the caller asked to skip it (first layer of a network).
pub struct ConvGrads<T: Scalar> {
    pub input: Option<Tensor<T>>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_valid_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &ConvKernel<T>,
    grad_out: &Tensor<T>,
    need_grad_input: bool,
) -> Result<ConvGrads<T>> {
    let (t_in, k_in, cin) = expect_3d(input)?;
    let (dt, dk, cout) = (kernel.dt(), kernel.dk(), kernel.cout());
    let (t_out, k_out) = (t_in - dt + 1, k_in - dk + 1);
    if grad_out.shape() != [t_out, k_out, cout] {
        return Err(TensorError::DimMismatch {
            axis: "grad_out",
            expected: t_out * k_out * cout,
            got: grad_out.numel(),
        });
    }
    let x = input.data();
    let w = kernel.weights.data();
    let go = grad_out.data();

    let mut gw = vec![T::ZERO; kernel.weights.numel()];
    let mut gb = vec![T::ZERO; cout];
    let mut gi = if need_grad_input {
        vec![T::ZERO; input.numel()]
    } else {
        Vec::new()
    };

    for t in 0..t_out {
        for k in 0..k_out {
            let go_row = &go[(t * k_out + k) * cout..(t * k_out + k + 1) * cout];
            for (b, &g) in gb.iter_mut().zip(go_row) {
                *b += g;
            }
            for dt_i in 0..dt {
                let row = ((t + dt_i) * k_in + k) * cin;
                let w_t = dt_i * dk * cin * cout;
                for dk_i in 0..dk {
                    let x_base = row + dk_i * cin;
                    let w_base = w_t + dk_i * cin * cout;
                    for ci in 0..cin {
                        let xv = x[x_base + ci];
                        let gw_row = &mut gw[w_base + ci * cout..w_base + (ci + 1) * cout];
                        for (g, &gov) in gw_row.iter_mut().zip(go_row) {
                            *g += xv * gov;
                        }
                        if need_grad_input {
                            let w_row = &w[w_base + ci * cout..w_base + (ci + 1) * cout];
                            gi[x_base + ci] += dot(w_row, go_row);
                        }
                    }
                }
            }
        }
    }

    Ok(ConvGrads {
        input: if need_grad_input {
            Some(Tensor::from_vec(input.shape(), gi)?)
        } else {
            None
        },
        weights: Tensor::from_vec(kernel.weights.shape(), gw)?,
        bias: Tensor::from_vec(&[cout], gb)?,
    })
}

/// Convolution on the pitch spiral: like [`conv2d_valid`] but the kernel
/// additionally taps the input at octave offsets `q * j1`, coupling
/// semitone neighborhoods one and two octaves apart. Output height is
/// `K - q*(j1 - 1) - (dk - 1)`.
pub fn spiral_conv<T: Scalar>(input: &Tensor<T>, kernel: &SpiralKernel<T>) -> Result<Tensor<T>> {
    let (t_in, k_in, cin) = expect_3d(input)?;
    let (dt, dk, j1, cout, q) = (
        kernel.dt(),
        kernel.dk(),
        kernel.octaves(),
        kernel.cout(),
        kernel.q,
    );
    if cin != kernel.cin() {
        return Err(TensorError::DimMismatch {
            axis: "channels",
            expected: kernel.cin(),
            got: cin,
        });
    }
    if t_in < dt {
        return Err(TensorError::DimMismatch {
            axis: "time",
            expected: dt,
            got: t_in,
        });
    }
    if k_in < kernel.span() {
        return Err(TensorError::DimMismatch {
            axis: "frequency",
            expected: kernel.span(),
            got: k_in,
        });
    }
    let t_out = t_in - dt + 1;
    let k_out = k_in - kernel.span() + 1;
    let x = input.data();
    let w = kernel.weights.data();
    let bias = kernel.bias.data();
    let mut out = vec![T::ZERO; t_out * k_out * cout];

    for t in 0..t_out {
        for k in 0..k_out {
            let acc = &mut out[(t * k_out + k) * cout..(t * k_out + k + 1) * cout];
            acc.copy_from_slice(bias);
            for dt_i in 0..dt {
                let t_row = (t + dt_i) * k_in;
                for dk_i in 0..dk {
                    for j in 0..j1 {
                        let x_base = (t_row + k + dk_i + q * j) * cin;
                        let w_base = (((dt_i * dk + dk_i) * j1 + j) * cin) * cout;
                        for ci in 0..cin {
                            let xv = x[x_base + ci];
                            let w_row = &w[w_base + ci * cout..w_base + (ci + 1) * cout];
                            for (a, &wv) in acc.iter_mut().zip(w_row) {
                                *a += xv * wv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[t_out, k_out, cout], out)
}

pub fn spiral_conv_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &SpiralKernel<T>,
    grad_out: &Tensor<T>,
    need_grad_input: bool,
) -> Result<ConvGrads<T>> {
    let (t_in, k_in, cin) = expect_3d(input)?;
    let (dt, dk, j1, cout, q) = (
        kernel.dt(),
        kernel.dk(),
        kernel.octaves(),
        kernel.cout(),
        kernel.q,
    );
    let t_out = t_in - dt + 1;
    let k_out = k_in - kernel.span() + 1;
    if grad_out.shape() != [t_out, k_out, cout] {
        return Err(TensorError::DimMismatch {
            axis: "grad_out",
            expected: t_out * k_out * cout,
            got: grad_out.numel(),
        });
    }
    let x = input.data();
    let w = kernel.weights.data();
    let go = grad_out.data();

    let mut gw = vec![T::ZERO; kernel.weights.numel()];
    let mut gb = vec![T::ZERO; cout];
    let mut gi = if need_grad_input {
        vec![T::ZERO; input.numel()]
    } else {
        Vec::new()
    };

    for t in 0..t_out {
        for k in 0..k_out {
            let go_row = &go[(t * k_out + k) * cout..(t * k_out + k + 1) * cout];
            for (b, &g) in gb.iter_mut().zip(go_row) {
                *b += g;
            }
            for dt_i in 0..dt {
                let t_row = (t + dt_i) * k_in;
                for dk_i in 0..dk {
                    for j in 0..j1 {
                        let x_base = (t_row + k + dk_i + q * j) * cin;
                        let w_base = (((dt_i * dk + dk_i) * j1 + j) * cin) * cout;
                        for ci in 0..cin {
                            let xv = x[x_base + ci];
                            let gw_row = &mut gw[w_base + ci * cout..w_base + (ci + 1) * cout];
                            for (g, &gov) in gw_row.iter_mut().zip(go_row) {
                                *g += xv * gov;
                            }
                            if need_grad_input {
                                let w_row = &w[w_base + ci * cout..w_base + (ci + 1) * cout];
                                gi[x_base + ci] += dot(w_row, go_row);
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(ConvGrads {
        input: if need_grad_input {
            Some(Tensor::from_vec(input.shape(), gi)?)
        } else {
            None
        },
        weights: Tensor::from_vec(kernel.weights.shape(), gw)?,
        bias: Tensor::from_vec(&[cout], gb)?,
    })
}

/// Leaky rectifier: `alpha * x` for negative inputs, identity otherwise.
pub fn relu_leaky<T: Scalar>(x: &Tensor<T>, alpha: T) -> Result<Tensor<T>> {
    validate_alpha(alpha)?;
    Ok(x.map(|v| if v < T::ZERO { alpha * v } else { v }))
}

/// Subgradient at exactly zero is `alpha`.
pub fn relu_leaky_backward<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
    alpha: T,
) -> Result<Tensor<T>> {
    validate_alpha(alpha)?;
    if input.shape() != grad_out.shape() {
        return Err(TensorError::DimMismatch {
            axis: "grad_out",
            expected: input.numel(),
            got: grad_out.numel(),
        });
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::ZERO { g } else { alpha * g })
        .collect();
    Tensor::from_vec(input.shape(), data)
}

fn validate_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha < T::ZERO || alpha > T::ONE {
        return Err(TensorError::InvalidArg {
            name: "alpha",
            reason: format!("must lie in [0, 1], got {alpha}"),
        });
    }
    Ok(())
}

/// Max-pooling over non-overlapping `pt x pk` rectangles; trailing
/// remainder rows and columns are dropped.
pub fn maxpool<T: Scalar>(x: &Tensor<T>, pt: usize, pk: usize) -> Result<Tensor<T>> {
    maxpool_with_indices(x, pt, pk).map(|(out, _)| out)
}

/// Pooling plus the flat input index of each window maximum (first maximal
/// element wins ties), which the backward pass routes gradients to.
pub fn maxpool_with_indices<T: Scalar>(
    x: &Tensor<T>,
    pt: usize,
    pk: usize,
) -> Result<(Tensor<T>, Vec<u32>)> {
    let (t_in, k_in, c) = expect_3d(x)?;
    if pt == 0 || pk == 0 {
        return Err(TensorError::InvalidArg {
            name: "pool extent",
            reason: format!("must be >= 1, got {pt}x{pk}"),
        });
    }
    if pt > t_in {
        return Err(TensorError::DimMismatch {
            axis: "time",
            expected: pt,
            got: t_in,
        });
    }
    if pk > k_in {
        return Err(TensorError::DimMismatch {
            axis: "frequency",
            expected: pk,
            got: k_in,
        });
    }
    let (t_out, k_out) = (t_in / pt, k_in / pk);
    let data = x.data();
    let mut out = vec![T::ZERO; t_out * k_out * c];
    let mut idx = vec![0u32; t_out * k_out * c];

    for t in 0..t_out {
        for k in 0..k_out {
            let o_base = (t * k_out + k) * c;
            for ch in 0..c {
                let mut best = T::from_f64(f64::NEG_INFINITY);
                let mut best_i = 0u32;
                for wt in 0..pt {
                    for wk in 0..pk {
                        let i = ((t * pt + wt) * k_in + (k * pk + wk)) * c + ch;
                        if data[i] > best {
                            best = data[i];
                            best_i = i as u32;
                        }
                    }
                }
                out[o_base + ch] = best;
                idx[o_base + ch] = best_i;
            }
        }
    }
    Ok((Tensor::from_vec(&[t_out, k_out, c], out)?, idx))
}

pub fn maxpool_backward<T: Scalar>(
    input_shape: &[usize],
    indices: &[u32],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if indices.len() != grad_out.numel() {
        return Err(TensorError::DimMismatch {
            axis: "grad_out",
            expected: indices.len(),
            got: grad_out.numel(),
        });
    }
    let mut gi = vec![T::ZERO; input_shape.iter().product()];
    for (&i, &g) in indices.iter().zip(grad_out.data()) {
        gi[i as usize] += g;
    }
    Tensor::from_vec(input_shape, gi)
}

/// Dense projection `y[o] = bias[o] + sum_i w[i, o] * x[i]` on a flattened
/// input; the bias term is omitted when the layer has none.
pub fn dense<T: Scalar>(x: &Tensor<T>, w: &DenseWeights<T>) -> Result<Tensor<T>> {
    if x.numel() != w.fan_in() {
        return Err(TensorError::DimMismatch {
            axis: "input length",
            expected: w.fan_in(),
            got: x.numel(),
        });
    }
    let out_n = w.fan_out();
    let mut out = match &w.bias {
        Some(b) => b.data().to_vec(),
        None => vec![T::ZERO; out_n],
    };
    let wd = w.weights.data();
    for (i, &xv) in x.data().iter().enumerate() {
        let w_row = &wd[i * out_n..(i + 1) * out_n];
        for (a, &wv) in out.iter_mut().zip(w_row) {
            *a += xv * wv;
        }
    }
    Tensor::from_vec(&[out_n], out)
}

pub struct DenseGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Option<Tensor<T>>,
}

pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &DenseWeights<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    let out_n = w.fan_out();
    if grad_out.numel() != out_n {
        return Err(TensorError::DimMismatch {
            axis: "grad_out",
            expected: out_n,
            got: grad_out.numel(),
        });
    }
    let go = grad_out.data();
    let wd = w.weights.data();
    let mut gw = vec![T::ZERO; w.weights.numel()];
    let mut gx = vec![T::ZERO; x.numel()];
    for (i, &xv) in x.data().iter().enumerate() {
        let gw_row = &mut gw[i * out_n..(i + 1) * out_n];
        for (g, &gov) in gw_row.iter_mut().zip(go) {
            *g += xv * gov;
        }
        gx[i] = dot(&wd[i * out_n..(i + 1) * out_n], go);
    }
    Ok(DenseGrads {
        input: Tensor::from_vec(x.shape(), gx)?,
        weights: Tensor::from_vec(w.weights.shape(), gw)?,
        bias: w.bias.as_ref().map(|_| {
            Tensor::from_vec(&[out_n], go.to_vec()).expect("bias grad shape")
        }),
    })
}

/// Numerically stable softmax (max-shifted); output sums to one.
pub fn softmax<T: Scalar>(y: &Tensor<T>) -> Result<Tensor<T>> {
    y.check_finite("softmax input")?;
    let max = y.max_value();
    let exps: Vec<T> = y.data().iter().map(|&v| (v - max).exp()).collect();
    let mut sum = T::ZERO;
    for &e in &exps {
        sum += e;
    }
    Tensor::from_vec(y.shape(), exps.into_iter().map(|e| e / sum).collect())
}

/// `-log(p[k] + floor)` with a 1e-12 probability floor.
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, class: usize) -> Result<T> {
    if class >= probs.numel() {
        return Err(TensorError::IndexOutOfRange {
            index: class,
            extent: probs.numel(),
        });
    }
    let p = probs.data()[class];
    Ok(-(p + T::from_f64(CROSS_ENTROPY_FLOOR)).ln())
}

/// Fused softmax + cross-entropy gradient with respect to the logits:
/// exactly `probs - onehot(class)`.
pub fn softmax_cross_entropy_grad<T: Scalar>(probs: &Tensor<T>, class: usize) -> Result<Tensor<T>> {
    if class >= probs.numel() {
        return Err(TensorError::IndexOutOfRange {
            index: class,
            extent: probs.numel(),
        });
    }
    let mut g = probs.data().to_vec();
    g[class] -= T::ONE;
    Tensor::from_vec(probs.shape(), g)
}

/// Inverted dropout: in training, zero each element with probability
/// `rate` and scale survivors by `1 / (1 - rate)`; at inference it is the
/// identity, so the plain forward pass needs no rescaling.
pub fn dropout<T: Scalar, R: rand::Rng>(
    x: &Tensor<T>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<Tensor<T>> {
    if training {
        dropout_with_mask(x, rate, rng).map(|(out, _)| out)
    } else {
        validate_rate(rate)?;
        Ok(x.clone())
    }
}

/// Training-mode dropout returning the multiplicative mask for backward.
pub fn dropout_with_mask<T: Scalar, R: rand::Rng>(
    x: &Tensor<T>,
    rate: f64,
    rng: &mut R,
) -> Result<(Tensor<T>, Vec<T>)> {
    validate_rate(rate)?;
    let keep_scale = T::from_f64(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..x.numel())
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::ZERO
            } else {
                keep_scale
            }
        })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok((Tensor::from_vec(x.shape(), data)?, mask))
}

pub fn dropout_backward<T: Scalar>(grad_out: &Tensor<T>, mask: &[T]) -> Result<Tensor<T>> {
    if mask.len() != grad_out.numel() {
        return Err(TensorError::DimMismatch {
            axis: "mask",
            expected: grad_out.numel(),
            got: mask.len(),
        });
    }
    let data = grad_out.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
    Tensor::from_vec(grad_out.shape(), data)
}

fn validate_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(TensorError::InvalidArg {
            name: "rate",
            reason: format!("must lie in [0, 1), got {rate}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn conv_identity_kernel_passes_input_through() {
        let mut r = rng(1);
        let input = Tensor::<f64>::uniform(&[7, 5, 1], 1.0, &mut r);
        let kernel = ConvKernel::new(
            Tensor::from_vec(&[1, 1, 1, 1], vec![1.0]).unwrap(),
            Tensor::zeros(&[1]),
        )
        .unwrap();
        let out = conv2d_valid(&input, &kernel).unwrap();
        assert_eq!(out.shape(), input.shape());
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn conv_constant_field_sums_kernel_support() {
        let input = Tensor::<f64>::filled(&[128, 96, 1], 1.0);
        let kernel = ConvKernel::new(
            Tensor::filled(&[5, 5, 1, 1], 1.0),
            Tensor::zeros(&[1]),
        )
        .unwrap();
        let out = conv2d_valid(&input, &kernel).unwrap();
        assert_eq!(out.shape(), &[124, 92, 1]);
        assert!(out.data().iter().all(|&v| (v - 25.0).abs() < 1e-12));
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let input = Tensor::<f64>::zeros(&[4, 4, 2]);
        let kernel = ConvKernel::new(
            Tensor::zeros(&[2, 2, 3, 1]),
            Tensor::zeros(&[1]),
        )
        .unwrap();
        let err = conv2d_valid(&input, &kernel).unwrap_err();
        assert!(matches!(err, TensorError::DimMismatch { axis: "channels", .. }));
    }

    #[test]
    fn spiral_with_single_octave_equals_conv2d() {
        let mut r = rng(2);
        let input = Tensor::<f64>::uniform(&[9, 8, 2], 1.0, &mut r);
        let w = Tensor::uniform(&[3, 2, 1, 2, 4], 1.0, &mut r);
        let b = Tensor::uniform(&[4], 0.5, &mut r);
        let spiral = SpiralKernel::new(w.clone(), b.clone(), 12).unwrap();
        let planar = ConvKernel::new(
            w.reshape(&[3, 2, 2, 4]).unwrap(),
            b,
        )
        .unwrap();
        let a = spiral_conv(&input, &spiral).unwrap();
        let c = conv2d_valid(&input, &planar).unwrap();
        assert_eq!(a.shape(), c.shape());
        for (x, y) in a.data().iter().zip(c.data()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn spiral_output_height_follows_span() {
        // 48-bin input, dt=5, dk=3, 3 octave taps at q=12 -> height 22.
        let input = Tensor::<f64>::zeros(&[128, 48, 1]);
        let kernel = SpiralKernel::new(
            Tensor::zeros(&[5, 3, 3, 1, 32]),
            Tensor::zeros(&[32]),
            12,
        )
        .unwrap();
        let out = spiral_conv(&input, &kernel).unwrap();
        assert_eq!(out.shape(), &[124, 22, 32]);
    }

    #[test]
    fn spiral_rejects_short_frequency_axis() {
        let input = Tensor::<f64>::zeros(&[16, 20, 1]);
        let kernel = SpiralKernel::new(
            Tensor::zeros(&[3, 3, 3, 1, 4]),
            Tensor::zeros(&[4]),
            12,
        )
        .unwrap();
        assert!(spiral_conv(&input, &kernel).is_err());
    }

    #[test]
    fn relu_matches_formula() {
        let x = Tensor::from_vec(&[3], vec![-2.0, 0.0, 3.0]).unwrap();
        let y = relu_leaky(&x, 0.3).unwrap();
        assert_eq!(y.data(), &[-0.6, 0.0, 3.0]);
    }

    #[test]
    fn relu_alpha_one_is_identity() {
        let mut r = rng(3);
        let x = Tensor::<f64>::uniform(&[17], 5.0, &mut r);
        assert_eq!(relu_leaky(&x, 1.0).unwrap().data(), x.data());
    }

    #[test]
    fn relu_keeps_nonnegative_input() {
        let x = Tensor::from_vec(&[4], vec![0.0, 0.5, 1.0, 7.0]).unwrap();
        assert_eq!(relu_leaky(&x, 0.3).unwrap().data(), x.data());
    }

    #[test]
    fn maxpool_shapes_use_floor_division() {
        let x = Tensor::<f64>::zeros(&[124, 92, 1]);
        let out = maxpool(&x, 5, 3).unwrap();
        assert_eq!(out.shape(), &[24, 30, 1]);
    }

    #[test]
    fn maxpool_constant_input_stays_constant() {
        let x = Tensor::<f64>::filled(&[10, 9, 2], 4.25);
        let out = maxpool(&x, 5, 3).unwrap();
        assert_eq!(out.shape(), &[2, 3, 2]);
        assert!(out.data().iter().all(|&v| v == 4.25));
    }

    #[test]
    fn maxpool_matches_window_loop_oracle() {
        let mut r = rng(4);
        let x = Tensor::<f64>::uniform(&[10, 9, 1], 1.0, &mut r);
        let out = maxpool(&x, 5, 3).unwrap();
        for t in 0..2 {
            for k in 0..3 {
                let mut best = f64::NEG_INFINITY;
                for wt in 0..5 {
                    for wk in 0..3 {
                        best = best.max(x.at(&[t * 5 + wt, k * 3 + wk, 0]));
                    }
                }
                assert_eq!(out.at(&[t, k, 0]), best);
            }
        }
    }

    #[test]
    fn maxpool_rejects_oversized_window() {
        let x = Tensor::<f64>::zeros(&[4, 4, 1]);
        assert!(maxpool(&x, 5, 1).is_err());
        assert!(maxpool(&x, 1, 5).is_err());
    }

    #[test]
    fn maxpool_ties_route_to_first_index() {
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let (_, idx) = maxpool_with_indices(&x, 2, 2).unwrap();
        assert_eq!(idx, vec![0]);
    }

    #[test]
    fn dense_identity_and_bias_cases() {
        let eye = Tensor::from_vec(&[3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let w = DenseWeights::new(eye, Some(Tensor::zeros(&[3]))).unwrap();
        let x = Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        assert_eq!(dense(&x, &w).unwrap().data(), x.data());

        let b = Tensor::from_vec(&[2], vec![3.0, -4.0]).unwrap();
        let w = DenseWeights::new(Tensor::zeros(&[3, 2]), Some(b.clone())).unwrap();
        let zero = Tensor::zeros(&[3]);
        assert_eq!(dense(&zero, &w).unwrap().data(), b.data());
    }

    #[test]
    fn dense_matches_dot_product_oracle() {
        let mut r = rng(5);
        let x = Tensor::<f64>::uniform(&[12], 1.0, &mut r);
        let weights = Tensor::uniform(&[12, 5], 1.0, &mut r);
        let bias = Tensor::uniform(&[5], 1.0, &mut r);
        let w = DenseWeights::new(weights.clone(), Some(bias.clone())).unwrap();
        let y = dense(&x, &w).unwrap();
        for o in 0..5 {
            let mut expect = bias.data()[o];
            for i in 0..12 {
                expect += weights.at(&[i, o]) * x.data()[i];
            }
            assert!((y.data()[o] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn dense_rejects_length_mismatch() {
        let w = DenseWeights::<f64>::new(Tensor::zeros(&[4, 2]), None).unwrap();
        let x = Tensor::zeros(&[5]);
        assert!(dense(&x, &w).is_err());
    }

    #[test]
    fn softmax_uniform_logits() {
        let y = Tensor::<f64>::zeros(&[8]);
        let p = softmax(&y).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn softmax_closed_form() {
        let y = Tensor::from_vec(&[3], vec![2.0_f64.ln(), 0.0, 0.0]).unwrap();
        let p = softmax(&y).unwrap();
        assert!((p.data()[0] - 0.5).abs() < 1e-12);
        assert!((p.data()[1] - 0.25).abs() < 1e-12);
        assert!((p.data()[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_known_values() {
        let uniform = Tensor::<f64>::filled(&[8], 0.125);
        for k in 0..8 {
            assert!((cross_entropy(&uniform, k).unwrap() - 8.0_f64.ln()).abs() < 1e-9);
        }
        let mut onehot = Tensor::<f64>::zeros(&[4]);
        onehot.data_mut()[2] = 1.0;
        assert!(cross_entropy(&onehot, 2).unwrap().abs() < 1e-9);
        let quarter = Tensor::<f64>::filled(&[4], 0.25);
        assert!((cross_entropy(&quarter, 1).unwrap() - 4.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_rejects_out_of_range_class() {
        let p = Tensor::<f64>::filled(&[4], 0.25);
        assert!(matches!(
            cross_entropy(&p, 4),
            Err(TensorError::IndexOutOfRange { index: 4, extent: 4 })
        ));
    }

    #[test]
    fn fused_grad_is_probs_minus_onehot() {
        let p = Tensor::<f64>::filled(&[8], 0.125);
        let g = softmax_cross_entropy_grad(&p, 0).unwrap();
        assert_eq!(g.data()[0], 0.125 - 1.0);
        assert!(g.data()[1..].iter().all(|&v| v == 0.125));
    }

    #[test]
    fn zero_upstream_gradient_yields_zero_parameter_gradients() {
        let mut r = rng(6);
        let input = Tensor::<f64>::uniform(&[6, 6, 2], 1.0, &mut r);
        let kernel = ConvKernel::new(
            Tensor::uniform(&[3, 3, 2, 4], 1.0, &mut r),
            Tensor::uniform(&[4], 1.0, &mut r),
        )
        .unwrap();
        let out = conv2d_valid(&input, &kernel).unwrap();
        let go = Tensor::zeros(out.shape());
        let grads = conv2d_valid_backward(&input, &kernel, &go, true).unwrap();
        assert!(grads.weights.data().iter().all(|&v| v == 0.0));
        assert!(grads.bias.data().iter().all(|&v| v == 0.0));
        assert!(grads.input.unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_rate_zero_and_inference_are_identity() {
        let mut r = rng(7);
        let x = Tensor::<f64>::uniform(&[64], 1.0, &mut r);
        let y = dropout(&x, 0.0, true, &mut r).unwrap();
        assert_eq!(y.data(), x.data());
        let z = dropout(&x, 0.9, false, &mut r).unwrap();
        assert_eq!(z.data(), x.data());
    }

    #[test]
    fn dropout_preserves_mean_at_large_scale() {
        let mut r = rng(8);
        let x = Tensor::<f64>::filled(&[1_000_000], 1.0);
        let y = dropout(&x, 0.5, true, &mut r).unwrap();
        let mean = y.mean();
        assert!((mean - 1.0).abs() < 0.01, "sample mean {mean} drifted past 1%");
    }

    #[test]
    fn dropout_rejects_rate_one() {
        let x = Tensor::<f64>::zeros(&[4]);
        let mut r = rng(9);
        assert!(dropout(&x, 1.0, true, &mut r).is_err());
    }
}
