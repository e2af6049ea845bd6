//! Single-precision inference copy of a network.
//!
//! Solvers score millions of candidate rides, so scoring runs on f32
//! column-major weights, visiting only non-zero inputs. Training and the
//! reference forward pass stay in f64.

use super::mlp::DenseLayer;

const STACK_WIDTH: usize = 128;

#[derive(Debug, Clone)]
struct Layer {
    outputs: usize,
    /// `columns[j * outputs + o]` is the weight from input `j` to output `o`.
    columns: Vec<f32>,
    bias: Vec<f32>,
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledMlp {
    layers: Vec<Layer>,
    max_width: usize,
}

impl CompiledMlp {
    pub(crate) fn new(layers: &[DenseLayer]) -> Self {
        let layers: Vec<Layer> = layers
            .iter()
            .map(|l| {
                let mut columns = vec![0.0; l.weights.len()];
                for (o, row) in l.weights.chunks_exact(l.inputs).enumerate() {
                    for (j, &w) in row.iter().enumerate() {
                        columns[j * l.outputs + o] = w as f32;
                    }
                }
                Layer {
                    outputs: l.outputs,
                    columns,
                    bias: l.biases.iter().map(|&b| b as f32).collect(),
                }
            })
            .collect();
        let max_width = layers
            .iter()
            .map(|l| l.outputs)
            .chain(std::iter::once(layers[0].columns.len() / layers[0].outputs))
            .max()
            .unwrap();
        CompiledMlp { layers, max_width }
    }

    /// Unclamped output. `features` must match the input width.
    pub(crate) fn forward(&self, features: &[f64]) -> f64 {
        if self.max_width <= STACK_WIDTH {
            let mut out = [0.0; STACK_WIDTH];
            let mut active = [(0, 0.0); STACK_WIDTH];
            self.forward_into(features, &mut out, &mut active)
        } else {
            let w = self.max_width;
            self.forward_into(features, &mut vec![0.0; w], &mut vec![(0, 0.0); w])
        }
    }

    /// `active` holds `(column offset, value)` for the inputs that are
    /// non-zero: one-hot gaps and rectified units are skipped.
    fn forward_into(&self, features: &[f64], out: &mut [f32], active: &mut [(usize, f32)]) -> f64 {
        let width = self.layers[0].outputs;
        let mut n_active = 0;
        for (j, &x) in features.iter().enumerate() {
            active[n_active] = (j * width, x as f32);
            n_active += (x != 0.0) as usize;
        }
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let out = &mut out[..layer.outputs];
            layer_forward(&layer.columns, &layer.bias, &active[..n_active], out);
            if i < last {
                let next_width = self.layers[i + 1].outputs;
                n_active = 0;
                // Branch-free: the sign pattern is unpredictable.
                for (j, &v) in out.iter().enumerate() {
                    active[n_active] = (j * next_width, v);
                    n_active += (v > 0.0) as usize;
                }
            }
        }
        out[0] as f64
    }
}

/// Outputs `base..base + B`: bias plus `x * column` over the active inputs.
/// Active inputs are dealt round-robin into `P` partial sums (more for
/// narrow blocks, to break the dependency chain), which are added to the
/// bias in order at the end.
///
/// # Safety
/// `off + base + B <= columns.len()` for every active offset.
#[inline(always)]
#[allow(clippy::needless_range_loop)]
unsafe fn output_block<const B: usize, const P: usize>(
    columns: &[f32],
    bias: &[f32],
    active: &[(usize, f32)],
    base: usize,
    out: &mut [f32],
) {
    let ptr = columns.as_ptr().add(base);
    let mut acc = [[0.0f32; B]; P];
    let mut chunks = active.chunks_exact(P);
    for chunk in &mut chunks {
        for p in 0..P {
            let (off, x) = chunk[p];
            let col = ptr.add(off);
            for k in 0..B {
                acc[p][k] = x.mul_add(*col.add(k), acc[p][k]);
            }
        }
    }
    for (p, &(off, x)) in chunks.remainder().iter().enumerate() {
        let col = ptr.add(off);
        for k in 0..B {
            acc[p][k] = x.mul_add(*col.add(k), acc[p][k]);
        }
    }
    for k in 0..B {
        let mut v = bias[base + k];
        for part in &acc {
            v += part[k];
        }
        out[base + k] = v;
    }
}

/// # Safety
/// As for [`output_block`], for every block up to `bias.len()`.
#[inline(always)]
unsafe fn layer_body(columns: &[f32], bias: &[f32], active: &[(usize, f32)], out: &mut [f32]) {
    let width = bias.len();
    let mut base = 0;
    while base + 64 <= width {
        output_block::<64, 2>(columns, bias, active, base, out);
        base += 64;
    }
    while base + 16 <= width {
        output_block::<16, 4>(columns, bias, active, base, out);
        base += 16;
    }
    while base + 4 <= width {
        output_block::<4, 4>(columns, bias, active, base, out);
        base += 4;
    }
    while base < width {
        output_block::<1, 8>(columns, bias, active, base, out);
        base += 1;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn layer_avx512(columns: &[f32], bias: &[f32], active: &[(usize, f32)], out: &mut [f32]) {
    layer_body(columns, bias, active, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn layer_avx2(columns: &[f32], bias: &[f32], active: &[(usize, f32)], out: &mut [f32]) {
    layer_body(columns, bias, active, out)
}

/// `mul_add` is always fused (in hardware or software), so every path gives
/// identical results; only the speed differs.
fn layer_forward(columns: &[f32], bias: &[f32], active: &[(usize, f32)], out: &mut [f32]) {
    let width = bias.len();
    assert!(out.len() >= width);
    assert!(active.iter().all(|&(off, _)| off + width <= columns.len()));
    // SAFETY: every column read is in bounds by the check above, and the
    // vector paths only run when the CPU supports them.
    unsafe {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx512f") {
            return layer_avx512(columns, bias, active, out);
        }
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        {
            return layer_avx2(columns, bias, active, out);
        }
        layer_body(columns, bias, active, out)
    }
}
