use ndarray::{Array1, Array2};

use super::config::{HeadKind, ModelConfig};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::scalar::Real;

/// Affine map `y = W x + b`; `weight` is `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Layer<T> {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Layer {
            weight: Array2::zeros((out, inp)),
            bias: Array1::zeros(out),
        }
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(out: usize, inp: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / (out + inp) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((out, inp), || {
            T::c((2.0 * rng.uniform() - 1.0) * bound)
        });
        Layer {
            weight,
            bias: Array1::zeros(out),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// Head matrix names in storage order.
pub fn head_names(kind: HeadKind) -> &'static [&'static str] {
    match kind {
        HeadKind::Binary => &["output"],
        HeadKind::Mog { .. } => &["mix_logit", "mean", "log_sigma"],
    }
}

/// The full parameter set shared by every ordering.
///
/// `input` maps the (masked) input to the first hidden layer, `hidden[l]`
/// maps hidden layer `l + 1` to `l + 2`, and `head` holds one matrix for the
/// Bernoulli logits or three for the mixture logits, means and log standard
/// deviations. Mixture rows are laid out dimension-major: row `i * K + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<T> {
    config: ModelConfig,
    pub input: Layer<T>,
    pub hidden: Vec<Layer<T>>,
    pub head: Vec<Layer<T>>,
}

impl<T: Real> Parameters<T> {
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let h = &config.hidden_sizes;
        let rows = config.head.rows_per_output(config.dim);
        Ok(Parameters {
            config: config.clone(),
            input: Layer::zeros(h[0], config.input_width()),
            hidden: h.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect(),
            head: (0..config.head.n_outputs())
                .map(|_| Layer::zeros(rows, config.top_width()))
                .collect(),
        })
    }

    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let h = &config.hidden_sizes;
        let input = Layer::glorot(h[0], config.input_width(), rng);
        let hidden = h.windows(2).map(|w| Layer::glorot(w[1], w[0], rng)).collect();
        let head = Self::fresh_head(config, rng);
        Ok(Parameters {
            config: config.clone(),
            input,
            hidden,
            head,
        })
    }

    fn fresh_head(config: &ModelConfig, rng: &mut Rng) -> Vec<Layer<T>> {
        let rows = config.head.rows_per_output(config.dim);
        (0..config.head.n_outputs())
            .map(|_| Layer::glorot(rows, config.top_width(), rng))
            .collect()
    }

    /// Assembles parameters from explicit layers, checking every shape.
    pub fn from_layers(
        config: &ModelConfig,
        input: Layer<T>,
        hidden: Vec<Layer<T>>,
        head: Vec<Layer<T>>,
    ) -> Result<Self> {
        let params = Parameters {
            config: config.clone(),
            input,
            hidden,
            head,
        };
        params.check_shapes()?;
        Ok(params)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let reference = Self::zeros(&self.config)?;
        if self.hidden.len() != reference.hidden.len() || self.head.len() != reference.head.len() {
            return Err(Error::shape(
                format!("{} hidden, {} head tensors", reference.hidden.len(), reference.head.len()),
                format!("{} hidden, {} head tensors", self.hidden.len(), self.head.len()),
            ));
        }
        for ((name, a), (_, b)) in self.layers().zip(reference.layers()) {
            if a.weight.dim() != b.weight.dim() || a.bias.len() != b.bias.len() {
                return Err(Error::shape(
                    format!("{name}: {:?}/{}", b.weight.dim(), b.bias.len()),
                    format!("{:?}/{}", a.weight.dim(), a.bias.len()),
                ));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// All layers with stable names, input first.
    pub fn layers(&self) -> impl Iterator<Item = (String, &Layer<T>)> {
        let names = head_names(self.config.head);
        std::iter::once(("input".to_string(), &self.input))
            .chain(
                self.hidden
                    .iter()
                    .enumerate()
                    .map(|(l, layer)| (format!("hidden.{}", l + 2), layer)),
            )
            .chain(self.head.iter().zip(names).map(|(layer, n)| (n.to_string(), layer)))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer<T>> {
        std::iter::once(&mut self.input)
            .chain(self.hidden.iter_mut())
            .chain(self.head.iter_mut())
    }

    /// Named tensors as `(name, shape, values, is_weight)` in storage order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[T], bool)> {
        let mut out = Vec::new();
        for (name, layer) in self.layers() {
            out.push((
                format!("{name}.weight"),
                layer.weight.shape().to_vec(),
                layer.weight.as_slice().expect("standard layout"),
                true,
            ));
            out.push((
                format!("{name}.bias"),
                layer.bias.shape().to_vec(),
                layer.bias.as_slice().expect("standard layout"),
                false,
            ));
        }
        out
    }

    /// Mutable tensor slices in the same order as [`Parameters::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in self.layers_mut() {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        self.tensors().into_iter().map(|t| t.0).collect()
    }

    pub fn n_values(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.n_values());
        for (_, _, values, _) in self.tensors() {
            v.extend_from_slice(values);
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        let n = self.n_values();
        if flat.len() != n {
            return Err(Error::shape(n, flat.len()));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let len = t.len();
            t.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("config already validated")
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.layers_mut().zip(other.layers().map(|(_, l)| l)) {
            a.weight.scaled_add(alpha, &b.weight);
            a.bias.scaled_add(alpha, &b.bias);
        }
    }

    pub fn scale(&mut self, alpha: T) {
        for layer in self.layers_mut() {
            layer.weight *= alpha;
            layer.bias *= alpha;
        }
    }

    /// Adds `decay * W` for every weight matrix; biases are left alone.
    pub fn add_weight_decay(&mut self, params: &Self, decay: T) {
        for (g, (_, p)) in self.layers_mut().zip(params.layers()) {
            g.weight.scaled_add(decay, &p.weight);
        }
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|(_, _, v, _)| v.iter().any(|x| !x.is_finite()))
            .map(|t| t.0)
    }

    pub fn is_zero(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, v, _)| v.iter().all(|x| *x == T::zero()))
    }

    /// Drops the head, appends a freshly initialised hidden layer of `width`
    /// units and attaches a fresh head on top of it.
    pub fn grow(&self, width: usize, rng: &mut Rng) -> Result<Self> {
        let mut config = self.config.clone();
        config.hidden_sizes.push(width);
        config.validate()?;
        let mut hidden = self.hidden.clone();
        hidden.push(Layer::glorot(width, self.config.top_width(), rng));
        let head = Self::fresh_head(&config, rng);
        Ok(Parameters {
            config,
            input: self.input.clone(),
            hidden,
            head,
        })
    }

    pub fn cast<U: Real>(&self) -> Parameters<U> {
        let conv = |layer: &Layer<T>| Layer {
            weight: layer.weight.mapv(|v| U::c(v.f64())),
            bias: layer.bias.mapv(|v| U::c(v.f64())),
        };
        Parameters {
            config: self.config.clone(),
            input: conv(&self.input),
            hidden: self.hidden.iter().map(conv).collect(),
            head: self.head.iter().map(conv).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig::mog(5, &[7, 6, 4], 3);
        let p = Parameters::<f64>::init(&cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(p.input.weight.dim(), (7, 10));
        assert_eq!(p.hidden[0].weight.dim(), (6, 7));
        assert_eq!(p.hidden[1].weight.dim(), (4, 6));
        assert_eq!(p.head.len(), 3);
        assert_eq!(p.head[2].weight.dim(), (15, 4));
        assert_eq!(
            p.tensor_names(),
            vec![
                "input.weight", "input.bias", "hidden.2.weight", "hidden.2.bias",
                "hidden.3.weight", "hidden.3.bias", "mix_logit.weight", "mix_logit.bias",
                "mean.weight", "mean.bias", "log_sigma.weight", "log_sigma.bias",
            ]
        );
        assert!(p.check_shapes().is_ok());
        assert!(p.head.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_bounds_and_determinism() {
        let cfg = ModelConfig::binary(6, &[10]);
        let a = Parameters::<f64>::init(&cfg, &mut Rng::new(3)).unwrap();
        let b = Parameters::<f64>::init(&cfg, &mut Rng::new(3)).unwrap();
        assert_eq!(a, b);
        let bound = (6.0f64 / 22.0).sqrt();
        assert!(a.input.weight.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn flat_round_trip() {
        let cfg = ModelConfig::binary(3, &[2, 2]);
        let mut p = Parameters::<f64>::init(&cfg, &mut Rng::new(9)).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.n_values());
        let mut q = p.zeros_like();
        q.set_flat(&flat).unwrap();
        assert_eq!(p, q);
        assert!(p.set_flat(&flat[1..]).is_err());
    }

    #[test]
    fn grow_appends_layer_and_keeps_lower_layers() {
        let cfg = ModelConfig::binary(4, &[5]);
        let p = Parameters::<f64>::init(&cfg, &mut Rng::new(2)).unwrap();
        let q = p.grow(3, &mut Rng::new(4)).unwrap();
        assert_eq!(q.config().hidden_sizes, vec![5, 3]);
        assert_eq!(q.input, p.input);
        assert_eq!(q.head[0].weight.dim(), (4, 3));
        assert!(q.check_shapes().is_ok());
    }

    #[test]
    fn weight_decay_skips_biases() {
        let cfg = ModelConfig::binary(2, &[2]);
        let mut p = Parameters::<f64>::zeros(&cfg).unwrap();
        p.input.weight.fill(1.0);
        p.input.bias.fill(1.0);
        let mut g = p.zeros_like();
        g.add_weight_decay(&p, 0.5);
        assert!(g.input.weight.iter().all(|&v| v == 0.5));
        assert!(g.input.bias.iter().all(|&v| v == 0.0));
    }
}
