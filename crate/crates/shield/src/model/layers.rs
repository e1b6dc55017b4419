//! Layer primitives with explicit forward and backward passes.
//!
//! Single-instance semantics: activations are `[C, H, W]` or `[N]`, and
//! batching is handled by the caller. Backward passes recompute cheap
//! nonlinearities instead of caching outputs.

use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Layer {
    /// 2D convolution, stride 1, zero padding `pad`.
    /// Weight `[out_c, in_c, k, k]`, bias `[out_c]`.
    Conv2d {
        weight: Tensor,
        bias: Tensor,
        pad: usize,
    },
    Tanh,
    /// 2x2 average pooling with stride 2.
    AvgPool2,
    Flatten,
    /// Fully connected: weight `[out, in]`, bias `[out]`.
    Dense { weight: Tensor, bias: Tensor },
}

/// Parameter gradients for one layer, shapes matching the layer's own.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Conv2d { .. } | Layer::Dense { .. })
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        match self {
            Layer::Conv2d { weight, bias, pad } => conv_forward(x, weight, bias, *pad),
            Layer::Tanh => {
                let mut out = x.clone();
                for v in out.data_mut() {
                    *v = v.tanh();
                }
                out
            }
            Layer::AvgPool2 => pool_forward(x),
            Layer::Flatten => x.reshaped(vec![x.len()]).expect("flatten"),
            Layer::Dense { weight, bias } => dense_forward(x, weight, bias),
        }
    }

    /// Gradient of the loss with respect to this layer's input and, for
    /// parameterized layers, its parameters. `x` is the input the forward
    /// pass saw.
    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> (Tensor, Option<LayerGrads>) {
        match self {
            Layer::Conv2d { weight, bias, pad } => {
                let (gin, gw, gb) = conv_backward(x, weight, bias, *pad, grad_out);
                (gin, Some(LayerGrads { weight: gw, bias: gb }))
            }
            Layer::Tanh => {
                let mut gin = grad_out.clone();
                for (g, &v) in gin.data_mut().iter_mut().zip(x.data()) {
                    let t = v.tanh();
                    *g *= 1.0 - t * t;
                }
                (gin, None)
            }
            Layer::AvgPool2 => (pool_backward(x, grad_out), None),
            Layer::Flatten => (
                grad_out.reshaped(x.shape().to_vec()).expect("unflatten"),
                None,
            ),
            Layer::Dense { weight, .. } => {
                let (gin, gw, gb) = dense_backward(x, weight, grad_out);
                (gin, Some(LayerGrads { weight: gw, bias: gb }))
            }
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Vec<usize> {
        match self {
            Layer::Conv2d { weight, pad, .. } => {
                let k = weight.shape()[2];
                vec![
                    weight.shape()[0],
                    input[1] + 2 * pad - k + 1,
                    input[2] + 2 * pad - k + 1,
                ]
            }
            Layer::Tanh => input.to_vec(),
            Layer::AvgPool2 => vec![input[0], input[1] / 2, input[2] / 2],
            Layer::Flatten => vec![input.iter().product()],
            Layer::Dense { weight, .. } => vec![weight.shape()[0]],
        }
    }
}

fn conv_forward(x: &Tensor, weight: &Tensor, bias: &Tensor, pad: usize) -> Tensor {
    let (in_c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (out_c, k) = (weight.shape()[0], weight.shape()[2]);
    let (oh, ow) = (h + 2 * pad - k + 1, w + 2 * pad - k + 1);
    let mut out = Tensor::zeros(vec![out_c, oh, ow]);
    let xd = x.data();
    let wd = weight.data();
    let od = out.data_mut();
    for oc in 0..out_c {
        let b = bias.data()[oc];
        for v in &mut od[oc * oh * ow..(oc + 1) * oh * ow] {
            *v = b;
        }
        for ic in 0..in_c {
            for kh in 0..k {
                for kw in 0..k {
                    let wv = wd[((oc * in_c + ic) * k + kh) * k + kw];
                    if wv == 0.0 {
                        continue;
                    }
                    for orow in 0..oh {
                        let irow = (orow + kh) as isize - pad as isize;
                        if irow < 0 || irow >= h as isize {
                            continue;
                        }
                        let xrow = (ic * h + irow as usize) * w;
                        let orow_base = (oc * oh + orow) * ow;
                        for ocol in 0..ow {
                            let icol = (ocol + kw) as isize - pad as isize;
                            if icol < 0 || icol >= w as isize {
                                continue;
                            }
                            od[orow_base + ocol] += wv * xd[xrow + icol as usize];
                        }
                    }
                }
            }
        }
    }
    out
}

fn conv_backward(
    x: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    pad: usize,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (in_c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (out_c, k) = (weight.shape()[0], weight.shape()[2]);
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);
    let mut gin = Tensor::zeros(vec![in_c, h, w]);
    let mut gw = Tensor::zeros(weight.shape().to_vec());
    let mut gb = Tensor::zeros(bias.shape().to_vec());
    let xd = x.data();
    let wd = weight.data();
    let gd = grad_out.data();

    for oc in 0..out_c {
        let mut bacc = 0.0;
        for &g in &gd[oc * oh * ow..(oc + 1) * oh * ow] {
            bacc += g;
        }
        gb.data_mut()[oc] = bacc;
        for ic in 0..in_c {
            for kh in 0..k {
                for kw in 0..k {
                    let widx = ((oc * in_c + ic) * k + kh) * k + kw;
                    let wv = wd[widx];
                    let mut wacc = 0.0;
                    for orow in 0..oh {
                        let irow = (orow + kh) as isize - pad as isize;
                        if irow < 0 || irow >= h as isize {
                            continue;
                        }
                        let xrow = (ic * h + irow as usize) * w;
                        let grow = (oc * oh + orow) * ow;
                        for ocol in 0..ow {
                            let icol = (ocol + kw) as isize - pad as isize;
                            if icol < 0 || icol >= w as isize {
                                continue;
                            }
                            let g = gd[grow + ocol];
                            wacc += g * xd[xrow + icol as usize];
                            gin.data_mut()[xrow + icol as usize] += g * wv;
                        }
                    }
                    gw.data_mut()[widx] = wacc;
                }
            }
        }
    }
    (gin, gw, gb)
}

fn pool_forward(x: &Tensor) -> Tensor {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(vec![c, oh, ow]);
    for ch in 0..c {
        for r in 0..oh {
            for col in 0..ow {
                let base = (ch * h + 2 * r) * w + 2 * col;
                let s = x.data()[base]
                    + x.data()[base + 1]
                    + x.data()[base + w]
                    + x.data()[base + w + 1];
                out.data_mut()[(ch * oh + r) * ow + col] = s / 4.0;
            }
        }
    }
    out
}

fn pool_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    let mut gin = Tensor::zeros(vec![c, h, w]);
    for ch in 0..c {
        for r in 0..oh {
            for col in 0..ow {
                let g = grad_out.data()[(ch * oh + r) * ow + col] / 4.0;
                let base = (ch * h + 2 * r) * w + 2 * col;
                gin.data_mut()[base] += g;
                gin.data_mut()[base + 1] += g;
                gin.data_mut()[base + w] += g;
                gin.data_mut()[base + w + 1] += g;
            }
        }
    }
    gin
}

fn dense_forward(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Tensor {
    let (out_n, in_n) = (weight.shape()[0], weight.shape()[1]);
    let mut out = Tensor::zeros(vec![out_n]);
    for o in 0..out_n {
        let row = &weight.data()[o * in_n..(o + 1) * in_n];
        let mut acc = bias.data()[o];
        for (wv, xv) in row.iter().zip(x.data()) {
            acc += wv * xv;
        }
        out.data_mut()[o] = acc;
    }
    out
}

fn dense_backward(x: &Tensor, weight: &Tensor, grad_out: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (out_n, in_n) = (weight.shape()[0], weight.shape()[1]);
    let mut gin = Tensor::zeros(vec![in_n]);
    let mut gw = Tensor::zeros(vec![out_n, in_n]);
    let gb = grad_out.clone();
    for o in 0..out_n {
        let g = grad_out.data()[o];
        let row = &weight.data()[o * in_n..(o + 1) * in_n];
        let grow = &mut gw.data_mut()[o * in_n..(o + 1) * in_n];
        for i in 0..in_n {
            gin.data_mut()[i] += g * row[i];
            grow[i] = g * x.data()[i];
        }
    }
    (gin, gw, gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_tensor(seed: u64, shape: Vec<usize>) -> Tensor {
        let mut rng = SplitMix64::new(seed);
        let len = shape.iter().product();
        Tensor::new(shape, (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    /// Direct nested-loop convolution oracle.
    fn naive_conv(x: &Tensor, w: &Tensor, b: &Tensor, pad: usize) -> Tensor {
        let (in_c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (out_c, k) = (w.shape()[0], w.shape()[2]);
        let (oh, ow) = (h + 2 * pad - k + 1, wd + 2 * pad - k + 1);
        let mut out = Tensor::zeros(vec![out_c, oh, ow]);
        for oc in 0..out_c {
            for r in 0..oh {
                for c in 0..ow {
                    let mut acc = b.data()[oc];
                    for ic in 0..in_c {
                        for kh in 0..k {
                            for kw in 0..k {
                                let ir = r as isize + kh as isize - pad as isize;
                                let icc = c as isize + kw as isize - pad as isize;
                                if ir >= 0 && (ir as usize) < h && icc >= 0 && (icc as usize) < wd
                                {
                                    acc += w.data()[((oc * in_c + ic) * k + kh) * k + kw]
                                        * x.data()[(ic * h + ir as usize) * wd + icc as usize];
                                }
                            }
                        }
                    }
                    out.data_mut()[(oc * oh + r) * ow + c] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let x = random_tensor(1, vec![3, 9, 7]);
        let w = random_tensor(2, vec![4, 3, 3, 3]);
        let b = random_tensor(3, vec![4]);
        let layer = Layer::Conv2d {
            weight: w.clone(),
            bias: b.clone(),
            pad: 1,
        };
        let got = layer.forward(&x);
        let want = naive_conv(&x, &w, &b, 1);
        assert_eq!(got.shape(), want.shape());
        for (a, e) in got.data().iter().zip(want.data()) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_averages_quads() {
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let out = Layer::AvgPool2.forward(&x);
        assert_eq!(out.data(), &[4.0]);
    }

    #[test]
    fn dense_is_a_dot_product() {
        let x = Tensor::new(vec![2], vec![0.3, 0.1]).unwrap();
        let layer = Layer::Dense {
            weight: Tensor::new(vec![2, 2], vec![1.0, 0.0, -1.0, 0.0]).unwrap(),
            bias: Tensor::zeros(vec![2]),
        };
        let out = layer.forward(&x);
        assert!((out.data()[0] - 0.3).abs() < 1e-15);
        assert!((out.data()[1] + 0.3).abs() < 1e-15);
    }

    /// Central-difference check of every layer's input gradient via a
    /// scalar head `sum(out * probe)`.
    #[test]
    fn layer_backward_matches_finite_differences() {
        let cases: Vec<(Layer, Vec<usize>)> = vec![
            (
                Layer::Conv2d {
                    weight: random_tensor(10, vec![2, 3, 3, 3]),
                    bias: random_tensor(11, vec![2]),
                    pad: 1,
                },
                vec![3, 6, 6],
            ),
            (Layer::Tanh, vec![2, 4, 4]),
            (Layer::AvgPool2, vec![2, 6, 6]),
            (
                Layer::Dense {
                    weight: random_tensor(12, vec![3, 8]),
                    bias: random_tensor(13, vec![3]),
                },
                vec![8],
            ),
        ];
        for (layer, in_shape) in cases {
            let x = random_tensor(20, in_shape.clone());
            let out_shape = layer.output_shape(&in_shape);
            let probe = random_tensor(21, out_shape);
            let scalar = |t: &Tensor| -> f64 {
                layer
                    .forward(t)
                    .data()
                    .iter()
                    .zip(probe.data())
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let (gin, _) = layer.backward(&x, &probe);
            let h = 1e-5;
            for i in (0..x.len()).step_by(x.len().div_ceil(12).max(1)) {
                let mut plus = x.clone();
                plus.data_mut()[i] += h;
                let mut minus = x.clone();
                minus.data_mut()[i] -= h;
                let fd = (scalar(&plus) - scalar(&minus)) / (2.0 * h);
                let an = gin.data()[i];
                assert!(
                    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6) < 1e-5,
                    "{layer:?} coord {i}: fd {fd} vs {an}"
                );
            }
        }
    }
}
