//! Fully-connected tanh network `u(x) = N^L(x; theta)` with an affine output.

pub mod batch;
pub mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{eval_jet, Jet2, Real, MAX_DIM};
use crate::{Error, Result};

pub use batch::{BatchWorkspace, Order};
pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, write_checkpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            input_dim: 2,
            hidden_layers: 7,
            hidden_width: 20,
            activation: Activation::Tanh,
        }
    }
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_layers: usize, hidden_width: usize) -> Result<Self> {
        let spec = MlpSpec {
            input_dim,
            hidden_layers,
            hidden_width,
            activation: Activation::Tanh,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.input_dim > MAX_DIM {
            return Err(Error::InvalidSpec(format!(
                "input_dim must be in 1..={MAX_DIM}, got {}",
                self.input_dim
            )));
        }
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidSpec(
                "hidden_layers and hidden_width must be positive".into(),
            ));
        }
        Ok(())
    }

    pub const fn output_dim(&self) -> usize {
        1
    }

    /// `(fan_out, fan_in)` of every affine layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            shapes.push((self.hidden_width, fan_in));
            fan_in = self.hidden_width;
        }
        shapes.push((1, fan_in));
        shapes
    }

    pub fn n_network_params(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * i + o).sum()
    }
}

/// Named position inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamIndex {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, row: usize },
    Lambda(usize),
}

/// Flat layout: for each layer its row-major weight matrix then its bias,
/// followed by the trainable PDE parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    shapes: Vec<(usize, usize)>,
    weight_offsets: Vec<usize>,
    n_network: usize,
    n_lambda: usize,
}

impl Layout {
    pub fn new(spec: &MlpSpec, n_lambda: usize) -> Self {
        let shapes = spec.layer_shapes();
        let mut weight_offsets = Vec::with_capacity(shapes.len());
        let mut off = 0;
        for &(o, i) in &shapes {
            weight_offsets.push(off);
            off += o * i + o;
        }
        Layout {
            shapes,
            weight_offsets,
            n_network: off,
            n_lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.n_network + self.n_lambda
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_network(&self) -> usize {
        self.n_network
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn weight_offset(&self, layer: usize) -> usize {
        self.weight_offsets[layer]
    }

    pub fn bias_offset(&self, layer: usize) -> usize {
        let (o, i) = self.shapes[layer];
        self.weight_offsets[layer] + o * i
    }

    pub fn index(&self, p: ParamIndex) -> usize {
        match p {
            ParamIndex::Weight { layer, row, col } => {
                let (o, i) = self.shapes[layer];
                assert!(row < o && col < i);
                self.weight_offsets[layer] + row * i + col
            }
            ParamIndex::Bias { layer, row } => {
                assert!(row < self.shapes[layer].0);
                self.bias_offset(layer) + row
            }
            ParamIndex::Lambda(k) => {
                assert!(k < self.n_lambda);
                self.n_network + k
            }
        }
    }

    pub fn locate(&self, flat: usize) -> ParamIndex {
        assert!(flat < self.len());
        if flat >= self.n_network {
            return ParamIndex::Lambda(flat - self.n_network);
        }
        let layer = self
            .weight_offsets
            .iter()
            .rposition(|&off| off <= flat)
            .expect("offset table starts at zero");
        let (o, i) = self.shapes[layer];
        let local = flat - self.weight_offsets[layer];
        if local < o * i {
            ParamIndex::Weight {
                layer,
                row: local / i,
                col: local % i,
            }
        } else {
            ParamIndex::Bias {
                layer,
                row: local - o * i,
            }
        }
    }
}

/// All trainable values: network weights/biases then optional PDE parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: Layout,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(spec: &MlpSpec, n_lambda: usize) -> Self {
        let layout = Layout::new(spec, n_lambda);
        let values = vec![0.0; layout.len()];
        ParamVector { layout, values }
    }

    pub fn from_values(spec: &MlpSpec, n_lambda: usize, values: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(spec, n_lambda);
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                got: values.len(),
            });
        }
        Ok(ParamVector { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn network(&self) -> &[f64] {
        &self.values[..self.layout.n_network]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.values[self.layout.n_network..]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, p: ParamIndex) -> f64 {
        self.values[self.layout.index(p)]
    }

    pub fn set(&mut self, p: ParamIndex, v: f64) {
        let k = self.layout.index(p);
        self.values[k] = v;
    }
}

/// Glorot-uniform weights, zero biases; `lambda_init` fills the PDE parameters.
pub fn init_params(spec: &MlpSpec, seed: u64, lambda_init: &[f64]) -> ParamVector {
    let mut params = ParamVector::zeros(spec, lambda_init.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = params.layout.clone();
    for (layer, &(fan_out, fan_in)) in layout.shapes().iter().enumerate() {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let off = layout.weight_offset(layer);
        for w in &mut params.values[off..off + fan_out * fan_in] {
            *w = rng.gen_range(-bound..=bound);
        }
    }
    let n = layout.n_network();
    params.values[n..].copy_from_slice(lambda_init);
    params
}

/// Network value at `x`, generic over the scalar type.
///
/// `params` must hold at least the network part of the layout.
pub fn forward<T: Real>(spec: &MlpSpec, params: &[T], x: &[T]) -> Result<T> {
    if x.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            got: x.len(),
        });
    }
    let layout = Layout::new(spec, 0);
    if params.len() < layout.n_network() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_network(),
            got: params.len(),
        });
    }
    let shapes = layout.shapes();
    let last = shapes.len() - 1;
    let mut act: Vec<T> = x.to_vec();
    let mut next: Vec<T> = Vec::with_capacity(spec.hidden_width);
    for (layer, &(fan_out, fan_in)) in shapes.iter().enumerate() {
        let w = &params[layout.weight_offset(layer)..];
        let b = &params[layout.bias_offset(layer)..];
        next.clear();
        for r in 0..fan_out {
            let row = &w[r * fan_in..(r + 1) * fan_in];
            let mut acc = b[r];
            for (&wij, &aj) in row.iter().zip(&act) {
                acc = acc + wij * aj;
            }
            next.push(if layer == last { acc } else { acc.tanh() });
        }
        std::mem::swap(&mut act, &mut next);
    }
    Ok(act[0])
}

/// Value, gradient and Hessian of the network with respect to `x`.
pub fn forward_jet(spec: &MlpSpec, params: &[f64], x: &[f64]) -> Result<Jet2<f64>> {
    forward_jet_generic(spec, params, x)
}

/// [`forward_jet`] over an arbitrary parameter scalar, e.g. tape variables.
pub fn forward_jet_generic<S: Real>(spec: &MlpSpec, params: &[S], x: &[f64]) -> Result<Jet2<S>> {
    if x.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            got: x.len(),
        });
    }
    let jet_params: Vec<Jet2<S>> = params.iter().map(|&p| Jet2::constant(p)).collect();
    let xs: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
    let mut inner = None;
    let jet = eval_jet(
        |inputs| match forward(spec, &jet_params, inputs) {
            Ok(j) => j,
            Err(e) => {
                inner = Some(e);
                Jet2::constant(S::zero())
            }
        },
        &xs,
    )?;
    match inner {
        Some(e) => Err(e),
        None => Ok(jet),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let spec = MlpSpec::default();
        let a = init_params(&spec, 42, &[]);
        let b = init_params(&spec, 42, &[]);
        assert_eq!(a, b);
        let c = init_params(&spec, 43, &[]);
        assert_ne!(a, c);
        let layout = a.layout();
        for (layer, &(o, i)) in layout.shapes().iter().enumerate() {
            let bound = (6.0 / (o + i) as f64).sqrt();
            for r in 0..o {
                assert_eq!(a.get(ParamIndex::Bias { layer, row: r }), 0.0);
                for col in 0..i {
                    let w = a.get(ParamIndex::Weight { layer, row: r, col });
                    assert!(w.abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn default_parameter_count() {
        // 2*20+20 + 6*(400+20) + 20+1
        assert_eq!(MlpSpec::default().n_network_params(), 2601);
    }

    #[test]
    fn layout_is_a_bijection() {
        let spec = MlpSpec::new(2, 3, 5).unwrap();
        let layout = Layout::new(&spec, 2);
        for flat in 0..layout.len() {
            assert_eq!(layout.index(layout.locate(flat)), flat);
        }
    }

    #[test]
    fn zero_params_give_zero_output() {
        let spec = MlpSpec::default();
        let p = ParamVector::zeros(&spec, 0);
        for x in [[0.3, 0.7], [-4.0, 9.0]] {
            assert_eq!(forward(&spec, p.values(), &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_neuron_is_tanh() {
        let spec = MlpSpec::new(1, 1, 1).unwrap();
        let p = ParamVector::from_values(&spec, 0, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        for x in [-2.0, -0.1, 0.0, 0.5, 3.0] {
            assert_eq!(forward(&spec, p.values(), &[x]).unwrap(), f64::tanh(x));
        }
    }

    #[test]
    fn jet_value_matches_forward_bitwise() {
        let spec = MlpSpec::default();
        let p = init_params(&spec, 7, &[]);
        for x in [[0.1, 0.9], [0.5, 0.5], [0.77, 0.03]] {
            let v = forward(&spec, p.values(), &x).unwrap();
            let j = forward_jet(&spec, p.values(), &x).unwrap();
            assert_eq!(v.to_bits(), j.value().to_bits());
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = MlpSpec::default();
        let p = init_params(&spec, 1, &[]);
        assert!(matches!(
            forward(&spec, p.values(), &[0.1]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn hidden_permutation_invariance() {
        let spec = MlpSpec::new(2, 2, 4).unwrap();
        let p = init_params(&spec, 3, &[]);
        let mut q = p.clone();
        // swap hidden neurons 0 and 2 of the first hidden layer
        let perm = [2usize, 1, 0, 3];
        for (new, &old) in perm.iter().enumerate() {
            for col in 0..2 {
                q.set(
                    ParamIndex::Weight { layer: 0, row: new, col },
                    p.get(ParamIndex::Weight { layer: 0, row: old, col }),
                );
            }
            q.set(
                ParamIndex::Bias { layer: 0, row: new },
                p.get(ParamIndex::Bias { layer: 0, row: old }),
            );
            for row in 0..4 {
                q.set(
                    ParamIndex::Weight { layer: 1, row, col: new },
                    p.get(ParamIndex::Weight { layer: 1, row, col: old }),
                );
            }
        }
        let x = [0.3, -0.6];
        let a = forward(&spec, p.values(), &x).unwrap();
        let b = forward(&spec, q.values(), &x).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(MlpSpec::new(0, 1, 1).is_err());
        assert!(MlpSpec::new(4, 1, 1).is_err());
        assert!(MlpSpec::new(2, 0, 1).is_err());
        assert!(MlpSpec::new(2, 1, 0).is_err());
    }
}
