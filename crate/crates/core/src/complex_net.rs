//! Random complex-valued MLP used as the map `g` in `z <- g(z) + c`.

use num_complex::Complex;
use num_traits::Zero;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::dynamics::Dynamics;
use crate::scalar::Scalar;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    /// Standard deviation of the real and imaginary parts of every weight.
    pub weight_std: f64,
    pub use_bias: bool,
    pub output_exponent: u32,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            neurons_per_layer: 6,
            weight_std: 1.0,
            use_bias: true,
            output_exponent: 3,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers < 1 {
            return Err(Error::Config("hidden_layers must be at least 1".into()));
        }
        if self.neurons_per_layer < 1 {
            return Err(Error::Config("neurons_per_layer must be at least 1".into()));
        }
        if !(self.weight_std.is_finite() && self.weight_std > 0.0) {
            return Err(Error::Config(format!(
                "weight_std must be positive and finite, got {}",
                self.weight_std
            )));
        }
        if self.output_exponent < 1 {
            return Err(Error::Config("output_exponent must be at least 1".into()));
        }
        Ok(())
    }
}

/// One dense layer. `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    inputs: usize,
    outputs: usize,
    weights: Vec<Complex<T>>,
    bias: Option<Vec<Complex<T>>>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<Complex<T>>,
        bias: Option<Vec<Complex<T>>>,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config("layer dimensions must be non-zero".into()));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::Config(format!(
                "layer {inputs}->{outputs} needs {} weights, got {}",
                inputs * outputs,
                weights.len()
            )));
        }
        if let Some(b) = &bias {
            if b.len() != outputs {
                return Err(Error::Config(format!(
                    "layer {inputs}->{outputs} needs {outputs} biases, got {}",
                    b.len()
                )));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    pub fn bias(&self) -> Option<&[Complex<T>]> {
        self.bias.as_deref()
    }
}

/// Complex MLP: tanh after every hidden layer, a linear scalar output, and the
/// output raised to an integer power.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMlp<T> {
    layers: Vec<Layer<T>>,
    output_exponent: u32,
}

type Activations<T> = SmallVec<[Complex<T>; 16]>;

impl<T: Scalar> ComplexMlp<T> {
    /// Builds a network from explicit layers. The first layer must take one
    /// input, the last must produce one output, and widths must chain.
    pub fn from_layers(layers: Vec<Layer<T>>, output_exponent: u32) -> Result<Self> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Config("network needs at least one layer".into())),
        };
        if first.inputs != 1 || last.outputs != 1 {
            return Err(Error::Config("network must map one value to one value".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Config(format!(
                    "layer widths do not chain: {} outputs feed {} inputs",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        if output_exponent < 1 {
            return Err(Error::Config("output_exponent must be at least 1".into()));
        }
        Ok(Self {
            layers,
            output_exponent,
        })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn output_exponent(&self) -> u32 {
        self.output_exponent
    }

    /// `(inputs, outputs)` for every layer in order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn forward(&self, z: Complex<T>) -> Complex<T> {
        let mut cur: Activations<T> = SmallVec::new();
        let mut next: Activations<T> = SmallVec::new();
        cur.push(z);

        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            next.clear();
            for o in 0..layer.outputs {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let mut acc = match &layer.bias {
                    Some(b) => b[o],
                    None => Complex::zero(),
                };
                for (w, x) in row.iter().zip(cur.iter()) {
                    acc = acc + *w * *x;
                }
                next.push(if k == last { acc } else { complex_tanh(acc) });
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0].powu(self.output_exponent)
    }
}

impl<T: Scalar> Dynamics<T> for ComplexMlp<T> {
    #[inline]
    fn apply(&self, z: Complex<T>) -> Complex<T> {
        self.forward(z)
    }
}

/// Draws every weight (and bias) with independent `N(0, weight_std^2)` real
/// and imaginary parts from a generator seeded by `config.seed`.
///
/// Draw order: layer by layer, weights row-major then biases, real part before
/// imaginary part. Values are drawn in `f64` and rounded to `T`, so an `f32`
/// network is the rounding of the `f64` network with the same seed.
pub fn init_network<T: Scalar>(config: &NetworkConfig) -> Result<ComplexMlp<T>> {
    config.validate()?;
    let normal = Normal::new(0.0, config.weight_std)
        .map_err(|e| Error::Config(format!("weight distribution: {e}")))?;
    let mut rng = seed::rng(config.seed);
    let mut draw = |count: usize| -> Vec<Complex<T>> {
        (0..count)
            .map(|_| {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im))
            })
            .collect()
    };

    let width = config.neurons_per_layer;
    let mut dims = Vec::with_capacity(config.hidden_layers + 1);
    dims.push((1, width));
    for _ in 1..config.hidden_layers {
        dims.push((width, width));
    }
    dims.push((width, 1));

    let mut layers = Vec::with_capacity(dims.len());
    for (inputs, outputs) in dims {
        let weights = draw(inputs * outputs);
        let bias = config.use_bias.then(|| draw(outputs));
        layers.push(Layer::new(inputs, outputs, weights, bias)?);
    }
    ComplexMlp::from_layers(layers, config.output_exponent)
}

/// Complex hyperbolic tangent,
/// `(sinh a cosh a + i sin b cos b) / (sinh^2 a + cos^2 b)` for `z = a + ib`.
///
/// The denominator is a sum of squares, so it stays accurate next to the
/// poles at `a = 0, cos b = 0`. `sinh`/`cosh` come from a single exponential
/// (`expm1` near zero). Past the saturation point `tanh(a)` rounds to `+-1`
/// and the squares would overflow, so the asymptotic form is used instead.
#[inline]
pub fn complex_tanh<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let (a, b) = (z.re, z.im);
    let one = T::one();
    let two = one + one;
    let cutoff = T::from_f64_lossy(T::TANH_SATURATION);
    let (sin_b, cos_b) = b.sin_cos();
    if a.abs() > cutoff {
        let four = two + two;
        return Complex::new(a.signum(), four * sin_b * cos_b * (-two * a.abs()).exp());
    }
    let (sinh_a, cosh_a) = if a.abs() < T::from_f64_lossy(0.25) {
        // expm1 keeps sinh accurate near 0
        let e = a.exp_m1();
        (e * (e + two) / (two * (e + one)), one + e * e / (two * (e + one)))
    } else {
        let e = a.exp();
        let inv = one / e;
        ((e - inv) / two, (e + inv) / two)
    };
    let d = sinh_a * sinh_a + cos_b * cos_b;
    Complex::new(sinh_a * cosh_a / d, sin_b * cos_b / d)
}
