//! Network layout, forward pass, and hand-derived backward pass.
//!
//! All layers read their weights out of one flat parameter vector through
//! precomputed offsets: stem conv, residual blocks (two 3x3 convs each plus
//! a 1x1 projection where the width changes), then the linear head. The
//! backward pass writes gradients into a vector of the same layout.

use ndarray::Array3;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{loss, CnnConfig};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamDomain};

#[derive(Clone, Copy, Debug)]
struct ConvSpec {
    in_c: usize,
    out_c: usize,
    k: usize,
    pad: usize,
    offset: usize,
}

impl ConvSpec {
    fn n_weights(&self) -> usize {
        self.out_c * self.in_c * self.k * self.k
    }

    fn n_params(&self) -> usize {
        self.n_weights() + self.out_c
    }

    #[inline]
    fn w_index(&self, o: usize, c: usize, ky: usize, kx: usize) -> usize {
        self.offset + ((o * self.in_c + c) * self.k + ky) * self.k + kx
    }

    #[inline]
    fn b_index(&self, o: usize) -> usize {
        self.offset + self.n_weights() + o
    }

    /// Stride-1 convolution; spatial size is preserved when `pad = (k-1)/2`.
    fn forward(&self, params: &[f64], input: &Array3<f64>) -> Array3<f64> {
        let (h, w) = (input.shape()[1], input.shape()[2]);
        let mut out = Array3::zeros((self.out_c, h, w));
        for o in 0..self.out_c {
            let bias = params[self.b_index(o)];
            for y in 0..h {
                for x in 0..w {
                    let mut acc = bias;
                    for c in 0..self.in_c {
                        for ky in 0..self.k {
                            let iy = y as isize + ky as isize - self.pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..self.k {
                                let ix = x as isize + kx as isize - self.pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += params[self.w_index(o, c, ky, kx)]
                                    * input[[c, iy as usize, ix as usize]];
                            }
                        }
                    }
                    out[[o, y, x]] = acc;
                }
            }
        }
        out
    }

    /// Accumulates weight and bias gradients into `grad` and returns the
    /// gradient with respect to the layer input.
    fn backward(
        &self,
        params: &[f64],
        input: &Array3<f64>,
        d_out: &Array3<f64>,
        grad: &mut [f64],
    ) -> Array3<f64> {
        let (h, w) = (input.shape()[1], input.shape()[2]);
        let mut d_in = Array3::zeros((self.in_c, h, w));
        for o in 0..self.out_c {
            let mut d_bias = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let g = d_out[[o, y, x]];
                    if g == 0.0 {
                        continue;
                    }
                    d_bias += g;
                    for c in 0..self.in_c {
                        for ky in 0..self.k {
                            let iy = y as isize + ky as isize - self.pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..self.k {
                                let ix = x as isize + kx as isize - self.pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let (iyu, ixu) = (iy as usize, ix as usize);
                                grad[self.w_index(o, c, ky, kx)] += g * input[[c, iyu, ixu]];
                                d_in[[c, iyu, ixu]] += g * params[self.w_index(o, c, ky, kx)];
                            }
                        }
                    }
                }
            }
            grad[self.b_index(o)] += d_bias;
        }
        d_in
    }
}

#[derive(Clone, Copy, Debug)]
struct BlockSpec {
    conv1: ConvSpec,
    conv2: ConvSpec,
    /// 1x1 projection on the skip path when the width changes.
    proj: Option<ConvSpec>,
}

fn relu(a: &Array3<f64>) -> Array3<f64> {
    a.mapv(|v| v.max(0.0))
}

/// Gradient through ReLU given the pre-activation; exact zeros pass nothing.
fn relu_backward(pre: &Array3<f64>, d_post: &Array3<f64>) -> Array3<f64> {
    let mut d = d_post.clone();
    d.zip_mut_with(pre, |g, &a| {
        if a <= 0.0 {
            *g = 0.0;
        }
    });
    d
}

/// 2x2 max pooling with stride 2. Trailing rows or columns form partial
/// windows, so the output size is the ceiling of half the input size. Ties
/// route the gradient to the first element in row-major window order.
fn pool_forward(input: &Array3<f64>) -> (Array3<f64>, Array3<usize>) {
    let (c_n, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (ph, pw) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Array3::zeros((c_n, ph, pw));
    let mut argmax = Array3::zeros((c_n, ph, pw));
    for c in 0..c_n {
        for py in 0..ph {
            for px in 0..pw {
                let mut best = f64::NEG_INFINITY;
                let mut best_at = 0usize;
                for y in 2 * py..(2 * py + 2).min(h) {
                    for x in 2 * px..(2 * px + 2).min(w) {
                        let v = input[[c, y, x]];
                        if v > best {
                            best = v;
                            best_at = y * w + x;
                        }
                    }
                }
                out[[c, py, px]] = best;
                argmax[[c, py, px]] = best_at;
            }
        }
    }
    (out, argmax)
}

fn pool_backward(
    d_out: &Array3<f64>,
    argmax: &Array3<usize>,
    in_h: usize,
    in_w: usize,
) -> Array3<f64> {
    let c_n = d_out.shape()[0];
    let mut d_in = Array3::zeros((c_n, in_h, in_w));
    for ((c, py, px), &g) in d_out.indexed_iter() {
        let flat = argmax[[c, py, px]];
        d_in[[c, flat / in_w, flat % in_w]] += g;
    }
    d_in
}

struct BlockCache {
    input: Array3<f64>,
    pre1: Array3<f64>,
    act1: Array3<f64>,
    sum_pre: Array3<f64>,
}

/// Every intermediate needed to run the backward pass.
pub struct ForwardCache {
    input: Array3<f64>,
    stem_pre: Array3<f64>,
    pool_argmax: Array3<usize>,
    blocks: Vec<BlockCache>,
    gap: Vec<f64>,
    pub logits: Vec<f64>,
}

pub struct CnnModel {
    pub config: CnnConfig,
    stem: ConvSpec,
    blocks: Vec<BlockSpec>,
    fc_offset: usize,
    fc_in: usize,
    n_params: usize,
    pooled_h: usize,
    pooled_w: usize,
}

impl CnnModel {
    pub fn new(config: CnnConfig) -> Result<Self> {
        config.validate()?;
        let mut offset = 0usize;
        let mut take = |in_c: usize, out_c: usize, k: usize, pad: usize| {
            let spec = ConvSpec { in_c, out_c, k, pad, offset };
            offset += spec.n_params();
            spec
        };
        let stem = take(config.input_channels, config.block_widths[0], 3, 1);
        let mut blocks = Vec::new();
        let mut width = config.block_widths[0];
        for &next in &config.block_widths {
            let conv1 = take(width, next, 3, 1);
            let conv2 = take(next, next, 3, 1);
            let proj = (width != next).then(|| take(width, next, 1, 0));
            blocks.push(BlockSpec { conv1, conv2, proj });
            width = next;
        }
        let fc_offset = offset;
        let fc_in = width;
        let n_params = fc_offset + config.output_dim * (fc_in + 1);
        let pooled_h = config.input_height.div_ceil(2);
        let pooled_w = config.input_width.div_ceil(2);
        Ok(Self { config, stem, blocks, fc_offset, fc_in, n_params, pooled_h, pooled_w })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    #[inline]
    fn fc_w(&self, i: usize, c: usize) -> usize {
        self.fc_offset + i * self.fc_in + c
    }

    #[inline]
    fn fc_b(&self, i: usize) -> usize {
        self.fc_offset + self.config.output_dim * self.fc_in + i
    }

    /// Scaled-normal weights (std `sqrt(2 / fan_in)`), zero biases. The draw
    /// order is the parameter order, so one seed fixes every weight.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, StreamDomain::WeightInit, 0);
        let mut params = vec![0.0; self.n_params];
        let fill = |spec: &ConvSpec, params: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| {
            let std = (2.0 / (spec.in_c * spec.k * spec.k) as f64).sqrt();
            for i in 0..spec.n_weights() {
                let z: f64 = rng.sample(StandardNormal);
                params[spec.offset + i] = z * std;
            }
        };
        fill(&self.stem, &mut params, &mut rng);
        for block in &self.blocks {
            fill(&block.conv1, &mut params, &mut rng);
            fill(&block.conv2, &mut params, &mut rng);
            if let Some(proj) = &block.proj {
                fill(proj, &mut params, &mut rng);
            }
        }
        let std = (2.0 / self.fc_in as f64).sqrt();
        for i in 0..self.config.output_dim * self.fc_in {
            let z: f64 = rng.sample(StandardNormal);
            params[self.fc_offset + i] = z * std;
        }
        params
    }

    fn check_shapes(&self, params: &[f64], input: &Array3<f64>) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Shape(format!(
                "parameter vector has {} entries, the model needs {}",
                params.len(),
                self.n_params
            )));
        }
        let expected =
            [self.config.input_channels, self.config.input_height, self.config.input_width];
        if input.shape() != expected {
            return Err(Error::Shape(format!(
                "input shape {:?} does not match the configured {:?}",
                input.shape(),
                expected
            )));
        }
        Ok(())
    }

    pub fn forward_cached(&self, params: &[f64], input: &Array3<f64>) -> Result<ForwardCache> {
        self.check_shapes(params, input)?;
        let stem_pre = self.stem.forward(params, input);
        let stem_act = relu(&stem_pre);
        let (pooled, pool_argmax) = pool_forward(&stem_act);
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut current = pooled;
        for spec in &self.blocks {
            let pre1 = spec.conv1.forward(params, &current);
            let act1 = relu(&pre1);
            let pre2 = spec.conv2.forward(params, &act1);
            let skip = match &spec.proj {
                Some(proj) => proj.forward(params, &current),
                None => current.clone(),
            };
            let sum_pre = &pre2 + &skip;
            let out = relu(&sum_pre);
            blocks.push(BlockCache { input: current, pre1, act1, sum_pre });
            current = out;
        }
        let spatial = (self.pooled_h * self.pooled_w) as f64;
        let gap: Vec<f64> = (0..self.fc_in)
            .map(|c| current.index_axis(ndarray::Axis(0), c).sum() / spatial)
            .collect();
        let logits: Vec<f64> = (0..self.config.output_dim)
            .map(|i| {
                params[self.fc_b(i)]
                    + (0..self.fc_in).map(|c| params[self.fc_w(i, c)] * gap[c]).sum::<f64>()
            })
            .collect();
        Ok(ForwardCache { input: input.clone(), stem_pre, pool_argmax, blocks, gap, logits })
    }

    pub fn logits(&self, params: &[f64], input: &Array3<f64>) -> Result<Vec<f64>> {
        Ok(self.forward_cached(params, input)?.logits)
    }

    /// Head probabilities for one input.
    pub fn predict(&self, params: &[f64], input: &Array3<f64>) -> Result<Vec<f64>> {
        Ok(loss::head_output(self.config.head, &self.logits(params, input)?))
    }

    /// Full parameter gradient from the logit gradient of one sample.
    pub fn backward(&self, params: &[f64], cache: &ForwardCache, d_logits: &[f64]) -> Vec<f64> {
        assert_eq!(d_logits.len(), self.config.output_dim, "logit gradient length");
        let mut grad = vec![0.0; self.n_params];
        let mut d_gap = vec![0.0; self.fc_in];
        for i in 0..self.config.output_dim {
            let g = d_logits[i];
            grad[self.fc_b(i)] += g;
            for c in 0..self.fc_in {
                grad[self.fc_w(i, c)] += g * cache.gap[c];
                d_gap[c] += g * params[self.fc_w(i, c)];
            }
        }
        let spatial = (self.pooled_h * self.pooled_w) as f64;
        let mut d_current =
            Array3::from_shape_fn((self.fc_in, self.pooled_h, self.pooled_w), |(c, _, _)| {
                d_gap[c] / spatial
            });
        for (spec, cache_b) in self.blocks.iter().zip(&cache.blocks).rev() {
            let d_sum = relu_backward(&cache_b.sum_pre, &d_current);
            let d_skip = match &spec.proj {
                Some(proj) => proj.backward(params, &cache_b.input, &d_sum, &mut grad),
                None => d_sum.clone(),
            };
            let d_act1 = spec.conv2.backward(params, &cache_b.act1, &d_sum, &mut grad);
            let d_pre1 = relu_backward(&cache_b.pre1, &d_act1);
            let d_main = spec.conv1.backward(params, &cache_b.input, &d_pre1, &mut grad);
            d_current = &d_main + &d_skip;
        }
        let d_stem_act = pool_backward(
            &d_current,
            &cache.pool_argmax,
            self.config.input_height,
            self.config.input_width,
        );
        let d_stem_pre = relu_backward(&cache.stem_pre, &d_stem_act);
        self.stem.backward(params, &cache.input, &d_stem_pre, &mut grad);
        grad
    }
}
