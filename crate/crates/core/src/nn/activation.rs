use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    /// `clamp(0.2 x + 0.5, 0, 1)`.
    HardSigmoid,
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Activation::HardSigmoid => (0.2 * x + 0.5).clamp(0.0, 1.0),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative at pre-activation `x`, given `y = apply(x)`.
    /// Kinks take the derivative of the flat side.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::HardSigmoid => {
                if x > -2.5 && x < 2.5 {
                    0.2
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::HardSigmoid => "hard_sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sigmoid" => Activation::Sigmoid,
            "hard_sigmoid" => Activation::HardSigmoid,
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            "linear" => Activation::Linear,
            other => return Err(Error::invalid(format!("unknown activation '{other}'"))),
        })
    }
}

/// Row-major array of up to three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::shape(format!("rank {} not in 1..=3", shape.len())));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(DenseArray { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        DenseArray {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseArray {
        DenseArray {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Elementwise activation.
pub fn activation(kind: Activation, x: &DenseArray) -> DenseArray {
    x.map(|v| kind.apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_clips_negatives() {
        let y = activation(Activation::Relu, &DenseArray::from_vec(vec![-1.0, 0.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn hard_sigmoid_definition() {
        let y = activation(Activation::HardSigmoid, &DenseArray::from_vec(vec![-2.5, 0.0, 2.5]));
        assert_eq!(y.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn tanh_and_sigmoid_at_zero() {
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!("softmax".parse::<Activation>().is_err());
        assert_eq!("hard_sigmoid".parse::<Activation>().unwrap(), Activation::HardSigmoid);
    }

    #[test]
    fn array_shape_checks() {
        assert!(DenseArray::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(DenseArray::new(vec![1, 1, 1, 1], vec![0.0]).is_err());
        assert_eq!(DenseArray::zeros(vec![2, 2, 2]).unwrap().data().len(), 8);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-6;
        for kind in [
            Activation::Sigmoid,
            Activation::HardSigmoid,
            Activation::Tanh,
            Activation::Relu,
            Activation::Linear,
        ] {
            for x in [-3.1, -1.2, 0.3, 1.7, 2.9] {
                let fd = (kind.apply(x + h) - kind.apply(x - h)) / (2.0 * h);
                let d = kind.derivative(x, kind.apply(x));
                assert!((fd - d).abs() < 1e-8, "{kind} at {x}: {d} vs {fd}");
            }
        }
    }

    proptest! {
        #[test]
        fn gate_ranges(x in -1e3f64..1e3) {
            for kind in [Activation::Sigmoid, Activation::HardSigmoid] {
                let y = kind.apply(x);
                prop_assert!((0.0..=1.0).contains(&y));
            }
            prop_assert!(Activation::Tanh.apply(x).abs() <= 1.0);
        }
    }
}
