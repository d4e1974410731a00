use crate::numkern::Tensor;
use crate::{Error, Result};

/// Columns with a spread below this keep unit scale.
const MIN_STD: f64 = 1e-8;

/// Per-column standardisation of model inputs and targets, fitted on
/// training data and stored with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub output_mean: Vec<f64>,
    pub output_std: Vec<f64>,
}

fn column_stats(t: &Tensor) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (t.rows(), t.cols());
    if n == 0 {
        return (vec![0.0; d], vec![1.0; d]);
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(t.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(t.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .iter()
        .map(|s| (s / n as f64).sqrt())
        .map(|s| if s < MIN_STD { 1.0 } else { s })
        .collect();
    (mean, std)
}

fn affine(t: &Tensor, shift: &[f64], scale: &[f64], forward: bool) -> Result<Tensor> {
    if t.shape().len() != 2 || t.cols() != shift.len() {
        return Err(Error::Shape {
            op: "normalizer",
            lhs: t.shape().to_vec(),
            rhs: vec![shift.len()],
        });
    }
    let mut out = t.clone();
    let d = shift.len();
    for (k, v) in out.data_mut().iter_mut().enumerate() {
        let j = k % d;
        *v = if forward {
            (*v - shift[j]) / scale[j]
        } else {
            *v * scale[j] + shift[j]
        };
    }
    Ok(out)
}

impl Normalizer {
    /// Leaves values unchanged.
    pub fn identity(input_dim: usize, output_dim: usize) -> Self {
        Normalizer {
            input_mean: vec![0.0; input_dim],
            input_std: vec![1.0; input_dim],
            output_mean: vec![0.0; output_dim],
            output_std: vec![1.0; output_dim],
        }
    }

    /// Inputs: column means and population standard deviations, with
    /// near-constant columns at unit scale. Targets: column means and one
    /// shared scale, the root mean column variance, so that squared error in
    /// normalised units stays proportional to squared error in metres.
    pub fn fit(inputs: &Tensor, targets: &Tensor) -> Self {
        let (input_mean, input_std) = column_stats(inputs);
        let (output_mean, column_std) = column_stats(targets);
        let raw: Vec<f64> = column_std
            .iter()
            .map(|s| if *s == 1.0 { 0.0 } else { *s })
            .collect();
        let shared = (raw.iter().map(|s| s * s).sum::<f64>() / raw.len().max(1) as f64).sqrt();
        let shared = if shared < MIN_STD { 1.0 } else { shared };
        let output_std = vec![shared; column_std.len()];
        Normalizer {
            input_mean,
            input_std,
            output_mean,
            output_std,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_mean.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.input_std.len() == self.input_mean.len()
            && self.output_std.len() == self.output_mean.len()
            && self
                .input_mean
                .iter()
                .chain(&self.output_mean)
                .all(|v| v.is_finite())
            && self
                .input_std
                .iter()
                .chain(&self.output_std)
                .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "normalizer needs finite means and positive scales",
            ))
        }
    }

    pub fn normalize_inputs(&self, x: &Tensor) -> Result<Tensor> {
        affine(x, &self.input_mean, &self.input_std, true)
    }

    pub fn normalize_targets(&self, y: &Tensor) -> Result<Tensor> {
        affine(y, &self.output_mean, &self.output_std, true)
    }

    pub fn denormalize_outputs(&self, y: &Tensor) -> Result<Tensor> {
        affine(y, &self.output_mean, &self.output_std, false)
    }
}
