//! Exact ReLU-network representation: alternating affine / ReLU layers over
//! rational weights, with forward evaluation and structural surgery.

pub mod oracle;

pub use oracle::{
    count_activation_patterns, enumerate_regions, exact_bounds, exact_output_graph,
    ActivationPattern, LinearRegion,
};

use crate::rat::{dot, relu, Q};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineLayer {
    /// out_dim x in_dim.
    pub weights: Vec<Vec<Q>>,
    pub bias: Vec<Q>,
}

impl AffineLayer {
    pub fn new(weights: Vec<Vec<Q>>, bias: Vec<Q>) -> Result<Self> {
        if weights.len() != bias.len() {
            return Err(Error::DimensionMismatch("weights vs bias".into()));
        }
        let in_dim = weights.first().map(|r| r.len()).unwrap_or(0);
        if weights.iter().any(|r| r.len() != in_dim) {
            return Err(Error::DimensionMismatch("ragged weight matrix".into()));
        }
        Ok(AffineLayer { weights, bias })
    }

    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i == j {
                            crate::rat::qone()
                        } else {
                            crate::rat::qz()
                        }
                    })
                    .collect()
            })
            .collect();
        AffineLayer {
            weights,
            bias: vec![crate::rat::qz(); dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, x: &[Q]) -> Vec<Q> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layer {
    Affine(AffineLayer),
    /// Componentwise max(x, 0); width equals the preceding layer's out-dim.
    Relu(usize),
}

impl Layer {
    pub fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Layer::Affine(a) => a.out_dim(),
            Layer::Relu(w) => {
                debug_assert_eq!(*w, in_dim);
                *w
            }
        }
    }
}

/// An alternating (in any interleaving) affine/ReLU chain with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Affine(a) => {
                    if a.in_dim() != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "layer {i}: affine expects {} inputs, got {dim}",
                            a.in_dim()
                        )));
                    }
                    dim = a.out_dim();
                }
                Layer::Relu(w) => {
                    if *w != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "layer {i}: relu width {w} vs incoming {dim}"
                        )));
                    }
                }
            }
        }
        Ok(Network { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        let mut dim = self.input_dim;
        for layer in &self.layers {
            dim = layer.out_dim(dim);
        }
        dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Dimension of the variable block after layer `i` (0 = input).
    pub fn dim_after(&self, i: usize) -> usize {
        let mut dim = self.input_dim;
        for layer in &self.layers[..i] {
            dim = layer.out_dim(dim);
        }
        dim
    }

    pub fn relu_neuron_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Relu(w) => *w,
                Layer::Affine(_) => 0,
            })
            .sum()
    }

    /// ReLU neurons in topological order as (layer index, coordinate).
    pub fn relu_neurons(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::Relu(w) = layer {
                for c in 0..*w {
                    out.push((i, c));
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> Result<Vec<Q>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "eval: expected {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let mut v = x.to_vec();
        for layer in &self.layers {
            v = match layer {
                Layer::Affine(a) => a.eval(&v),
                Layer::Relu(_) => v.iter().map(relu).collect(),
            };
        }
        Ok(v)
    }

    /// Values at every block: input first, then the output of each layer.
    pub fn eval_trace(&self, x: &[Q]) -> Result<Vec<Vec<Q>>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch("eval_trace input".into()));
        }
        let mut trace = vec![x.to_vec()];
        for layer in &self.layers {
            let prev = trace.last().unwrap();
            let next = match layer {
                Layer::Affine(a) => a.eval(prev),
                Layer::Relu(_) => prev.iter().map(relu).collect(),
            };
            trace.push(next);
        }
        Ok(trace)
    }

    /// Splits into a prefix of `i` layers and the remaining suffix; the
    /// composition equals the original network pointwise.
    pub fn split(&self, i: usize) -> Result<(Network, Network)> {
        if i == 0 || i >= self.layers.len() {
            return Err(Error::Invalid(format!(
                "split index {i} out of range 1..{}",
                self.layers.len()
            )));
        }
        let first = Network::new(self.input_dim, self.layers[..i].to_vec())?;
        let second = Network::new(first.output_dim(), self.layers[i..].to_vec())?;
        Ok((first, second))
    }

    /// Sub-network consisting of layers `range` (input block = dim before).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Network> {
        let in_dim = self.dim_after(range.start);
        Network::new(in_dim, self.layers[range].to_vec())
    }

    /// `second . first` as one chain.
    pub fn compose(first: &Network, second: &Network) -> Result<Network> {
        if first.output_dim() != second.input_dim {
            return Err(Error::DimensionMismatch("compose".into()));
        }
        let mut layers = first.layers.clone();
        layers.extend(second.layers.iter().cloned());
        Network::new(first.input_dim, layers)
    }
}


#[cfg(test)]
mod tests {
    use super::tests_support::max2_flavor;
    use super::*;
    use crate::rat::{q, qi};

    #[test]
    fn eval_max_network() {
        let net = max2_flavor();
        assert_eq!(net.eval(&[q(3, 10), q(7, 10)]).unwrap(), vec![q(7, 10)]);
        assert_eq!(net.eval(&[qi(1), qi(0)]).unwrap(), vec![qi(1)]);
    }

    #[test]
    fn split_composes_back() {
        use rand::{Rng, SeedableRng};
        let net = max2_flavor();
        let (f1, f2) = net.split(1).unwrap();
        assert_eq!(f1.layer_count(), 1);
        assert_eq!(f2.layer_count(), 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = vec![q(rng.gen_range(-20..20), 10), q(rng.gen_range(-20..20), 10)];
            let direct = net.eval(&x).unwrap();
            let staged = f2.eval(&f1.eval(&x).unwrap()).unwrap();
            assert_eq!(direct, staged);
        }
        assert!(net.split(0).is_err());
        assert!(net.split(3).is_err());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let a1 = AffineLayer::new(vec![vec![qi(1), qi(1)]], vec![qi(0)]).unwrap();
        assert!(Network::new(2, vec![Layer::Affine(a1), Layer::Relu(2)]).is_err());
        let net = max2_flavor();
        assert!(net.eval(&[qi(1)]).is_err());
    }
}
