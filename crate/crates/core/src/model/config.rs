use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Output distribution family for every conditional.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum HeadKind {
    /// Bernoulli conditionals (NADE).
    Binary,
    /// Mixture of `components` Gaussians per dimension (RNADE).
    Mog { components: usize },
}

impl HeadKind {
    pub fn name(&self) -> &'static str {
        match self {
            HeadKind::Binary => "binary",
            HeadKind::Mog { .. } => "mog",
        }
    }

    /// Number of head weight matrices.
    pub fn n_outputs(&self) -> usize {
        match self {
            HeadKind::Binary => 1,
            HeadKind::Mog { .. } => 3,
        }
    }

    /// Rows of each head weight matrix for a `dim`-dimensional model.
    pub fn rows_per_output(&self, dim: usize) -> usize {
        match self {
            HeadKind::Binary => dim,
            HeadKind::Mog { components } => dim * components,
        }
    }
}

/// Architecture of a masked deep NADE.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub head: HeadKind,
    pub input_masks: bool,
}

impl ModelConfig {
    pub fn new(dim: usize, hidden_sizes: Vec<usize>, activation: Activation, head: HeadKind) -> Self {
        ModelConfig {
            dim,
            hidden_sizes,
            activation,
            head,
            input_masks: true,
        }
    }

    pub fn binary(dim: usize, hidden_sizes: &[usize]) -> Self {
        Self::new(dim, hidden_sizes.to_vec(), Activation::Relu, HeadKind::Binary)
    }

    pub fn mog(dim: usize, hidden_sizes: &[usize], components: usize) -> Self {
        Self::new(
            dim,
            hidden_sizes.to_vec(),
            Activation::Relu,
            HeadKind::Mog { components },
        )
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_input_masks(mut self, on: bool) -> Self {
        self.input_masks = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("input dimension must be at least 1".into()));
        }
        if self.hidden_sizes.is_empty() {
            return Err(Error::Config("at least one hidden layer is required".into()));
        }
        if let Some(l) = self.hidden_sizes.iter().position(|&h| h == 0) {
            return Err(Error::Config(format!("hidden layer {} has zero width", l + 1)));
        }
        if let HeadKind::Mog { components: 0 } = self.head {
            return Err(Error::Config("mixture head needs at least one component".into()));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.hidden_sizes.len()
    }

    /// Width of the first-layer input: `2D` with masks, `D` without.
    pub fn input_width(&self) -> usize {
        if self.input_masks {
            2 * self.dim
        } else {
            self.dim
        }
    }

    pub fn top_width(&self) -> usize {
        *self.hidden_sizes.last().expect("validated config has a hidden layer")
    }

    pub fn components(&self) -> usize {
        match self.head {
            HeadKind::Binary => 1,
            HeadKind::Mog { components } => components,
        }
    }
}
