use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::KanConfig;
use crate::bspline;
use crate::error::{Error, Result};

/// All basis values of the given degree at `x` on `knots`.
pub fn bspline_basis(x: f64, knots: &[f64], degree: usize) -> Vec<f64> {
    bspline::basis(knots, degree, x)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_derivative(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// One fully connected layer of spline edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub degree: usize,
    pub intervals: usize,
    /// Spline domain `[grid_lo[p], grid_hi[p]]` of input `p`; inputs outside are clamped.
    pub grid_lo: Vec<f64>,
    pub grid_hi: Vec<f64>,
    /// Extended uniform knot vector per input.
    pub knots: Vec<Vec<f64>>,
    /// `[out][in][basis]`.
    pub coefficients: Vec<f64>,
    /// `[out][in]`.
    pub base_weights: Vec<f64>,
    /// `[out][in]`.
    pub spline_weights: Vec<f64>,
}

impl KanLayer {
    fn new(in_dim: usize, out_dim: usize, config: &KanConfig, ranges: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Self {
        let degree = config.spline_order;
        let intervals = config.intervals();
        let nb = intervals + degree;
        let coefficients = (0..out_dim * in_dim * nb)
            .map(|_| {
                if config.init_scale > 0.0 {
                    rng.random_range(-config.init_scale..config.init_scale)
                } else {
                    0.0
                }
            })
            .collect();
        let base = if config.base_blend { 1.0 } else { 0.0 };
        Self {
            in_dim,
            out_dim,
            degree,
            intervals,
            grid_lo: ranges.iter().map(|r| r.0).collect(),
            grid_hi: ranges.iter().map(|r| r.1).collect(),
            knots: ranges
                .iter()
                .map(|&(lo, hi)| bspline::extended_uniform_knots(lo, hi, degree, intervals))
                .collect(),
            coefficients,
            base_weights: vec![base; out_dim * in_dim],
            spline_weights: vec![1.0; out_dim * in_dim],
        }
    }

    pub fn basis_count(&self) -> usize {
        self.intervals + self.degree
    }

    fn param_count(&self, base_blend: bool) -> usize {
        let edges = self.out_dim * self.in_dim;
        edges * self.basis_count() + edges * (1 + usize::from(base_blend))
    }

    /// Clamps `x` into the grid of input `p` and locates its knot span.
    fn locate(&self, p: usize, x: f64) -> (f64, usize, bool) {
        let (lo, hi) = (self.grid_lo[p], self.grid_hi[p]);
        let clamped = !(x >= lo && x <= hi);
        let xc = if x.is_nan() { lo } else { x.clamp(lo, hi) };
        let step = (hi - lo) / self.intervals as f64;
        let cell = (((xc - lo) / step).floor().max(0.0) as usize).min(self.intervals - 1);
        (xc, self.degree + cell, clamped)
    }
}

/// Per-layer buffers for one sample's forward and backward pass.
#[derive(Debug, Clone)]
struct LayerCache {
    input: Vec<f64>,
    span: Vec<usize>,
    clamped: Vec<bool>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    spline: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    layers: Vec<LayerCache>,
    output: Vec<f64>,
    grad_out: Vec<f64>,
    grad_in: Vec<f64>,
}

impl Workspace {
    fn new(model: &KanModel) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|l| LayerCache {
                input: vec![0.0; l.in_dim],
                span: vec![0; l.in_dim],
                clamped: vec![false; l.in_dim],
                values: vec![0.0; l.in_dim * (l.degree + 1)],
                derivs: vec![0.0; l.in_dim * (l.degree + 1)],
                spline: vec![0.0; l.out_dim * l.in_dim],
            })
            .collect();
        let widest = model.config.widths.iter().copied().max().unwrap_or(1);
        Self {
            layers,
            output: vec![0.0; *model.config.widths.last().unwrap_or(&1)],
            grad_out: vec![0.0; widest],
            grad_in: vec![0.0; widest],
        }
    }
}

/// Model outputs plus the number of edge inputs that fell outside their grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanModel {
    pub config: KanConfig,
    /// Raw input range mapped affinely onto `[-1, 1]`.
    pub input_lo: Vec<f64>,
    pub input_hi: Vec<f64>,
    pub layers: Vec<KanLayer>,
}

/// Summary of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_loss: f64,
    /// Training MSE after the last epoch.
    pub final_loss: f64,
    /// Training MSE after each epoch.
    pub loss_history: Vec<f64>,
    /// Iterations where the line search failed and a gradient step was taken.
    pub line_search_fallbacks: usize,
    /// Set when the optimiser stopped before running every epoch.
    pub stopped_early: bool,
}

impl KanModel {
    /// Builds a model whose grids cover `inputs` (row-major, two columns).
    /// Hidden-layer grids span the initial activations over `inputs` with a
    /// 10% margin and stay fixed afterwards.
    pub fn init(config: &KanConfig, inputs: &[f64]) -> Result<Self> {
        config.validate()?;
        let dim = config.widths[0];
        if inputs.is_empty() || !inputs.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "need a non-empty {dim}-column input matrix, got {} values",
                inputs.len()
            )));
        }
        let mut input_lo = vec![f64::INFINITY; dim];
        let mut input_hi = vec![f64::NEG_INFINITY; dim];
        for row in inputs.chunks(dim) {
            for p in 0..dim {
                input_lo[p] = input_lo[p].min(row[p]);
                input_hi[p] = input_hi[p].max(row[p]);
            }
        }
        if input_lo.iter().chain(&input_hi).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite training input".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut model = Self {
            config: config.clone(),
            input_lo,
            input_hi,
            layers: Vec::new(),
        };
        let mut ranges = vec![(-1.0, 1.0); dim];
        for w in config.widths.windows(2) {
            model.layers.push(KanLayer::new(w[0], w[1], config, &ranges, &mut rng));
            if model.layers.len() == config.widths.len() - 1 {
                break;
            }
            let acts = model.hidden_activations(inputs, w[1]);
            ranges = acts
                .iter()
                .map(|&(lo, hi)| {
                    let margin = if hi > lo { 0.1 * (hi - lo) } else { 0.1 };
                    (lo - margin, hi + margin)
                })
                .collect();
        }
        Ok(model)
    }

    /// Range of the outputs of the current last layer over `inputs`.
    fn hidden_activations(&self, inputs: &[f64], width: usize) -> Vec<(f64, f64)> {
        let mut ws = Workspace::new(self);
        ws.output = vec![0.0; width];
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
        for row in inputs.chunks(self.config.widths[0]) {
            self.forward(row, &mut ws);
            for (r, &v) in ranges.iter_mut().zip(&ws.output) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        ranges
    }

    pub fn input_dim(&self) -> usize {
        self.config.widths[0]
    }

    pub fn normalize(&self, p: usize, x: f64) -> f64 {
        let (lo, hi) = (self.input_lo[p], self.input_hi[p]);
        // Maps the training extremes to exactly -1 and 1.
        if hi > lo {
            2.0 * ((x - lo) / (hi - lo)) - 1.0
        } else {
            x - lo
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count(self.config.base_blend)).sum()
    }

    /// Flat parameter vector: per layer, coefficients, then base weights (when
    /// blended), then spline weights.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.coefficients);
            if self.config.base_blend {
                out.extend_from_slice(&l.base_weights);
            }
            out.extend_from_slice(&l.spline_weights);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter vector length");
        let blend = self.config.base_blend;
        let mut rest = params;
        for l in &mut self.layers {
            let (c, r) = rest.split_at(l.coefficients.len());
            l.coefficients.copy_from_slice(c);
            rest = r;
            if blend {
                let (b, r) = rest.split_at(l.base_weights.len());
                l.base_weights.copy_from_slice(b);
                rest = r;
            }
            let (s, r) = rest.split_at(l.spline_weights.len());
            l.spline_weights.copy_from_slice(s);
            rest = r;
        }
    }

    /// Forward pass of one raw input row through the layers built so far.
    /// Returns the number of clamped edge inputs; the result is in `ws.output`.
    fn forward(&self, raw: &[f64], ws: &mut Workspace) -> usize {
        let mut clamped = 0;
        for p in 0..self.input_dim() {
            ws.layers[0].input[p] = self.normalize(p, raw[p]);
        }
        for (li, layer) in self.layers.iter().enumerate() {
            let k1 = layer.degree + 1;
            let nb = layer.basis_count();
            let (head, tail) = ws.layers.split_at_mut(li + 1);
            let cache = &mut head[li];
            for p in 0..layer.in_dim {
                let (xc, span, out) = layer.locate(p, cache.input[p]);
                clamped += usize::from(out);
                cache.span[p] = span;
                cache.clamped[p] = out;
                bspline::local_basis_with_derivative(
                    &layer.knots[p],
                    layer.degree,
                    span,
                    xc,
                    &mut cache.values[p * k1..(p + 1) * k1],
                    &mut cache.derivs[p * k1..(p + 1) * k1],
                );
            }
            let next: &mut Vec<f64> = match tail.first_mut() {
                Some(c) => &mut c.input,
                None => &mut ws.output,
            };
            for q in 0..layer.out_dim {
                let mut acc = 0.0;
                for p in 0..layer.in_dim {
                    let e = q * layer.in_dim + p;
                    let first = e * nb + cache.span[p] - layer.degree;
                    let coef = &layer.coefficients[first..first + k1];
                    let s: f64 = coef.iter().zip(&cache.values[p * k1..(p + 1) * k1]).map(|(c, b)| c * b).sum();
                    cache.spline[e] = s;
                    acc += layer.spline_weights[e] * s;
                    if self.config.base_blend {
                        acc += layer.base_weights[e] * silu(cache.input[p]);
                    }
                }
                next[q] = acc;
            }
        }
        clamped
    }

    /// Adds `scale · ∂output/∂θ` (output weighted by `ws.grad_out`) into `grad`.
    fn backward(&self, ws: &mut Workspace, grad: &mut [f64]) {
        let blend = self.config.base_blend;
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.param_count(blend);
        }
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let k1 = layer.degree + 1;
            let nb = layer.basis_count();
            let edges = layer.out_dim * layer.in_dim;
            let coef_off = offsets[li];
            let base_off = coef_off + edges * nb;
            let spline_off = base_off + if blend { edges } else { 0 };
            let cache = &ws.layers[li];
            ws.grad_in[..layer.in_dim].iter_mut().for_each(|g| *g = 0.0);
            for q in 0..layer.out_dim {
                let g = ws.grad_out[q];
                if g == 0.0 {
                    continue;
                }
                for p in 0..layer.in_dim {
                    let e = q * layer.in_dim + p;
                    let x = cache.input[p];
                    let ws_e = layer.spline_weights[e];
                    let first = e * nb + cache.span[p] - layer.degree;
                    let values = &cache.values[p * k1..(p + 1) * k1];
                    let gs = g * ws_e;
                    for (r, b) in values.iter().enumerate() {
                        grad[coef_off + first + r] += gs * b;
                    }
                    grad[spline_off + e] += g * cache.spline[e];
                    let mut dx = 0.0;
                    if blend {
                        grad[base_off + e] += g * silu(x);
                        dx += layer.base_weights[e] * silu_derivative(x);
                    }
                    if li > 0 && !cache.clamped[p] {
                        let coef = &layer.coefficients[first..first + k1];
                        let ds: f64 = coef.iter().zip(&cache.derivs[p * k1..(p + 1) * k1]).map(|(c, d)| c * d).sum();
                        dx += ws_e * ds;
                    }
                    ws.grad_in[p] += g * dx;
                }
            }
            if li > 0 {
                let n = layer.in_dim;
                let (go, gi) = (&mut ws.grad_out, &ws.grad_in);
                go[..n].copy_from_slice(&gi[..n]);
            }
        }
    }

    /// Mean squared error over `(inputs, targets)`, writing its gradient into `grad`.
    pub fn loss_and_gradient(&self, inputs: &[f64], targets: &[f64], grad: &mut [f64]) -> f64 {
        assert_eq!(grad.len(), self.param_count());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let dim = self.input_dim();
        let n = targets.len();
        assert_eq!(inputs.len(), n * dim);
        let mut ws = Workspace::new(self);
        let mut sse = 0.0;
        for (row, &y) in inputs.chunks(dim).zip(targets) {
            self.forward(row, &mut ws);
            let r = ws.output[0] - y;
            sse += r * r;
            ws.grad_out[0] = 2.0 * r / n as f64;
            self.backward(&mut ws, grad);
        }
        sse / n as f64
    }

    pub fn loss(&self, inputs: &[f64], targets: &[f64]) -> f64 {
        let pred = self.predict(inputs);
        pred.values
            .iter()
            .zip(targets)
            .map(|(p, y)| (p - y).powi(2))
            .sum::<f64>()
            / targets.len() as f64
    }

    pub fn predict_one(&self, input: &[f64]) -> f64 {
        let mut ws = Workspace::new(self);
        self.forward(input, &mut ws);
        ws.output[0]
    }

    pub fn predict(&self, inputs: &[f64]) -> Prediction {
        let mut ws = Workspace::new(self);
        let mut clamped = 0;
        let values = inputs
            .chunks(self.input_dim())
            .map(|row| {
                clamped += self.forward(row, &mut ws);
                ws.output[0]
            })
            .collect();
        Prediction { values, clamped }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        model.check_shapes()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn check_shapes(&self) -> Result<()> {
        self.config.validate()?;
        let bad = |m: String| Err(Error::Checkpoint(m));
        if self.layers.len() + 1 != self.config.widths.len() {
            return bad("layer count does not match widths".into());
        }
        if self.input_lo.len() != self.input_dim() || self.input_hi.len() != self.input_dim() {
            return bad("normalisation constants do not match the input width".into());
        }
        for (i, (l, w)) in self.layers.iter().zip(self.config.widths.windows(2)).enumerate() {
            let edges = w[0] * w[1];
            let ok = l.in_dim == w[0]
                && l.out_dim == w[1]
                && l.intervals >= 1
                && l.grid_lo.len() == l.in_dim
                && l.grid_hi.len() == l.in_dim
                && l.knots.iter().all(|k| k.len() == l.intervals + 2 * l.degree + 1)
                && l.knots.len() == l.in_dim
                && l.coefficients.len() == edges * l.basis_count()
                && l.base_weights.len() == edges
                && l.spline_weights.len() == edges;
            if !ok {
                return bad(format!("layer {i} has inconsistent shapes"));
            }
        }
        Ok(())
    }
}
