use super::{Gradients, Layer, ModelParams};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Points pushed through the shared MLP together. Each point's arithmetic is
/// identical whatever block it lands in, which keeps pooling bit-exactly
/// permutation invariant.
const BLOCK: usize = 8;

/// Pooled global feature plus, per feature, the index of the point that
/// attained the maximum (lowest index on ties).
struct Pooled {
    values: Vec<f64>,
    argmax: Vec<usize>,
}

/// `out[p] = bias + in[p] . W` for `rows` points stored contiguously.
///
/// Every output is accumulated as `bias + a_0 w_0 + a_1 w_1 + ...` in input
/// order whatever the tiling, so results do not depend on `rows` or on where
/// a point sits in the block.
#[inline]
fn dense_block(values: &[f64], layer: &Layer, input: &[f64], out: &mut [f64], rows: usize) {
    let (n_in, n_out) = (layer.input, layer.output);
    let w = &values[layer.weight_range()];
    let b = &values[layer.bias_range()];
    let mut r = 0;
    while r + TILE_ROWS <= rows {
        dense_tile::<TILE_ROWS>(w, b, &input[r * n_in..], &mut out[r * n_out..], n_in, n_out);
        r += TILE_ROWS;
    }
    while r < rows {
        dense_tile::<1>(w, b, &input[r * n_in..], &mut out[r * n_out..], n_in, n_out);
        r += 1;
    }
}

const TILE_ROWS: usize = 4;
const TILE_COLS: usize = 4;

#[inline(always)]
fn dense_tile<const R: usize>(w: &[f64], b: &[f64], input: &[f64], out: &mut [f64], n_in: usize, n_out: usize) {
    let inputs: [&[f64]; R] = std::array::from_fn(|r| &input[r * n_in..(r + 1) * n_in]);
    let w = &w[..n_in * n_out];
    let mut j = 0;
    while j + TILE_COLS <= n_out {
        let mut acc = [[0.0; TILE_COLS]; R];
        for row in acc.iter_mut() {
            row.copy_from_slice(&b[j..j + TILE_COLS]);
        }
        for (i, w_row) in w.chunks_exact(n_out).enumerate() {
            let wv: &[f64; TILE_COLS] = w_row[j..j + TILE_COLS].try_into().unwrap();
            for (row, x) in acc.iter_mut().zip(&inputs) {
                let a = x[i];
                for (o, wc) in row.iter_mut().zip(wv) {
                    *o += a * wc;
                }
            }
        }
        for (r, row) in acc.iter().enumerate() {
            out[r * n_out + j..r * n_out + j + TILE_COLS].copy_from_slice(row);
        }
        j += TILE_COLS;
    }
    for j in j..n_out {
        for (r, x) in inputs.iter().enumerate() {
            let mut s = b[j];
            for (a, w_row) in x.iter().zip(w.chunks_exact(n_out)) {
                s += a * w_row[j];
            }
            out[r * n_out + j] = s;
        }
    }
}

#[inline]
fn relu_in_place(xs: &mut [f64]) {
    for x in xs {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn check_cloud(cloud: &PointCloud) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("cannot classify an empty point cloud".into()));
    }
    Ok(())
}

fn pool_points(params: &ModelParams, layers: &[Layer], cloud: &PointCloud) -> Pooled {
    let width = layers.last().map_or(3, |l| l.output);
    let max_width = layers.iter().map(|l| l.output).max().unwrap_or(3).max(3);
    let mut a = vec![0.0; BLOCK * max_width];
    let mut b = vec![0.0; BLOCK * max_width];
    let mut pooled = Pooled {
        values: vec![f64::NEG_INFINITY; width],
        argmax: vec![0; width],
    };
    for (chunk_index, chunk) in cloud.points.chunks(BLOCK).enumerate() {
        let rows = chunk.len();
        for (r, p) in chunk.iter().enumerate() {
            a[r * 3..r * 3 + 3].copy_from_slice(p);
        }
        for layer in layers {
            dense_block(params.values(), layer, &a, &mut b, rows);
            relu_in_place(&mut b[..rows * layer.output]);
            std::mem::swap(&mut a, &mut b);
        }
        for r in 0..rows {
            let index = chunk_index * BLOCK + r;
            let feats = &a[r * width..(r + 1) * width];
            for (j, &v) in feats.iter().enumerate() {
                if v > pooled.values[j] {
                    pooled.values[j] = v;
                    pooled.argmax[j] = index;
                }
            }
        }
    }
    pooled
}

/// Head activations: `acts[0]` is the pooled feature, `acts[l + 1]` the
/// output of head layer `l` (post-ReLU except for the logits).
fn head_forward(params: &ModelParams, head: &[Layer], pooled: Vec<f64>) -> Vec<Vec<f64>> {
    let mut acts = vec![pooled];
    for (l, layer) in head.iter().enumerate() {
        let mut out = vec![0.0; layer.output];
        dense_block(params.values(), layer, acts.last().unwrap(), &mut out, 1);
        if l + 1 < head.len() {
            relu_in_place(&mut out);
        }
        acts.push(out);
    }
    acts
}

/// Class logits for one cloud.
pub fn forward(params: &ModelParams, cloud: &PointCloud) -> Result<Vec<f64>> {
    check_cloud(cloud)?;
    let layers = params.architecture().layers();
    let split = params.architecture().point_widths.len();
    let pooled = pool_points(params, &layers[..split], cloud);
    let mut acts = head_forward(params, &layers[split..], pooled.values);
    Ok(acts.pop().unwrap())
}

/// Index of the largest logit (lowest index on ties).
pub fn predict(params: &ModelParams, cloud: &PointCloud) -> Result<usize> {
    let logits = forward(params, cloud)?;
    Ok(argmax(&logits))
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Softmax cross-entropy `logsumexp(logits) - logits[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    max + sum.ln() - logits[label]
}

fn check_batch(params: &ModelParams, batch: &[PointCloud]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let classes = params.architecture().classes;
    for cloud in batch {
        check_cloud(cloud)?;
        if cloud.label >= classes {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for {classes} classes",
                cloud.label
            )));
        }
    }
    Ok(())
}

/// Mean cross-entropy over the batch.
pub fn loss_batch(params: &ModelParams, batch: &[PointCloud]) -> Result<f64> {
    check_batch(params, batch)?;
    let mut total = 0.0;
    for cloud in batch {
        total += cross_entropy(&forward(params, cloud)?, cloud.label);
    }
    Ok(total / batch.len() as f64)
}

/// Mean cross-entropy and its exact gradient.
pub fn loss_and_grad(params: &ModelParams, batch: &[PointCloud]) -> Result<(f64, Gradients)> {
    check_batch(params, batch)?;
    let arch = params.architecture();
    let layers = arch.layers();
    let split = arch.point_widths.len();
    let (point_layers, head_layers) = layers.split_at(split);
    let scale = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros(arch);
    let mut total = 0.0;
    for cloud in batch {
        let pooled = pool_points(params, point_layers, cloud);
        let argmax = pooled.argmax;
        let acts = head_forward(params, head_layers, pooled.values);
        let logits = acts.last().unwrap();
        total += cross_entropy(logits, cloud.label);

        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let mut delta: Vec<f64> = exps.iter().map(|e| e / sum * scale).collect();
        delta[cloud.label] -= scale;

        // Head, last layer first. `delta` is d loss / d pre-activation.
        for l in (0..head_layers.len()).rev() {
            let layer = &head_layers[l];
            let input = &acts[l];
            let mut d_input = backprop_dense(params, &mut grads, layer, input, &delta);
            // acts[l] is post-ReLU for head layers and the (non-negative)
            // pooled feature for l == 0; either way its gate is `> 0`.
            if l > 0 {
                for (d, &a) in d_input.iter_mut().zip(input.iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = d_input;
        }

        backprop_points(params, &mut grads, point_layers, cloud, &argmax, &delta);
    }
    Ok((total * scale, grads))
}

/// Accumulates weight and bias gradients of one dense layer and returns the
/// gradient with respect to its input.
fn backprop_dense(
    params: &ModelParams,
    grads: &mut Gradients,
    layer: &Layer,
    input: &[f64],
    delta: &[f64],
) -> Vec<f64> {
    let n_out = layer.output;
    let w = &params.values()[layer.weight_range()];
    let g = grads.values_mut();
    for (gb, d) in g[layer.bias_range()].iter_mut().zip(delta) {
        *gb += d;
    }
    let gw = &mut g[layer.weight_range()];
    let mut d_input = vec![0.0; layer.input];
    for (i, &a) in input.iter().enumerate() {
        let row = &w[i * n_out..(i + 1) * n_out];
        let grow = &mut gw[i * n_out..(i + 1) * n_out];
        let mut acc = 0.0;
        for j in 0..n_out {
            grow[j] += a * delta[j];
            acc += row[j] * delta[j];
        }
        d_input[i] = acc;
    }
    d_input
}

/// Routes the pooled-feature gradient to the argmax points and back through
/// the shared MLP. Only points that win at least one feature are revisited.
fn backprop_points(
    params: &ModelParams,
    grads: &mut Gradients,
    layers: &[Layer],
    cloud: &PointCloud,
    argmax: &[usize],
    d_pooled: &[f64],
) {
    let mut routed: Vec<(usize, usize)> = argmax
        .iter()
        .enumerate()
        .filter(|&(j, _)| d_pooled[j] != 0.0)
        .map(|(j, &p)| (p, j))
        .collect();
    routed.sort_unstable();

    let width = layers.last().map_or(3, |l| l.output);
    let mut start = 0;
    while start < routed.len() {
        let point = routed[start].0;
        let mut end = start;
        let mut delta = vec![0.0; width];
        while end < routed.len() && routed[end].0 == point {
            let j = routed[end].1;
            delta[j] = d_pooled[j];
            end += 1;
        }
        start = end;

        // Recompute this point's activations (post-ReLU) layer by layer.
        let mut acts: Vec<Vec<f64>> = vec![cloud.points[point].to_vec()];
        for layer in layers {
            let mut out = vec![0.0; layer.output];
            dense_block(params.values(), layer, acts.last().unwrap(), &mut out, 1);
            relu_in_place(&mut out);
            acts.push(out);
        }
        for l in (0..layers.len()).rev() {
            // ReLU gate of this layer's output.
            for (d, &a) in delta.iter_mut().zip(&acts[l + 1]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            if delta.iter().all(|&d| d == 0.0) {
                break;
            }
            delta = backprop_dense(params, grads, &layers[l], &acts[l], &delta);
        }
    }
}
