use super::Tensor;
use crate::{Error, Result};

/// Pointwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// Slope applied to negative inputs, in `(0, 1)`.
    LeakyRelu(f64),
}

impl Activation {
    pub(crate) fn validate(self) -> Result<()> {
        match self {
            Activation::LeakyRelu(s) if !(s > 0.0 && s < 1.0) => Err(Error::invalid(format!(
                "leaky relu slope must lie in (0, 1), got {s}"
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu(s) => {
                if v >= 0.0 {
                    v
                } else {
                    s * v
                }
            }
        }
    }

    /// Derivative with respect to the input `v`.
    #[inline]
    pub(crate) fn slope_at(self, v: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if v >= 0.0 {
                    1.0
                } else {
                    s
                }
            }
        }
    }
}

/// `c (+)= a · b` for row-major views described by element strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        return;
    }
    debug_assert!(c.len() >= m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: every view lies inside its slice: callers derive strides from
    // the tensor shapes (`m×k`, `k×n`, `m×n`) that the slices were built for.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn check_matrix(t: &Tensor, op: &'static str) -> Result<()> {
    if t.shape().len() != 2 {
        return Err(Error::Shape {
            op,
            lhs: t.shape().to_vec(),
            rhs: vec![],
        });
    }
    Ok(())
}

/// Matrix product of `a [m×k]` and `b [k×n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_matrix(a, "matmul")?;
    check_matrix(b, "matmul")?;
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(Error::Shape {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm(
        m,
        k,
        n,
        a.data(),
        (k as isize, 1),
        b.data(),
        (n as isize, 1),
        out.data_mut(),
        false,
    );
    Ok(out)
}

pub fn elementwise_activation(x: &Tensor, kind: Activation) -> Result<Tensor> {
    kind.validate()?;
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = kind.apply(*v));
    Ok(out)
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    elementwise_activation(x, Activation::LeakyRelu(slope))
}

/// Softmax taken separately over the logits sharing a segment id.
///
/// Each segment is shifted by its own maximum before exponentiation.
pub fn segment_softmax(logits: &[f64], segments: &[usize]) -> Result<Vec<f64>> {
    if segments.is_empty() {
        return Err(Error::invalid("segment_softmax needs at least one segment"));
    }
    if logits.len() != segments.len() {
        return Err(Error::Shape {
            op: "segment_softmax",
            lhs: vec![logits.len()],
            rhs: vec![segments.len()],
        });
    }
    let n_seg = segments.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![0.0; logits.len()];
    segment_softmax_into(logits, segments, n_seg, &mut out);
    Ok(out)
}

pub(crate) fn segment_softmax_into(
    logits: &[f64],
    segments: &[usize],
    n_seg: usize,
    out: &mut [f64],
) {
    let mut max = vec![f64::NEG_INFINITY; n_seg];
    for (&z, &s) in logits.iter().zip(segments) {
        if z > max[s] {
            max[s] = z;
        }
    }
    let mut denom = vec![0.0; n_seg];
    for ((o, &z), &s) in out.iter_mut().zip(logits).zip(segments) {
        *o = (z - max[s]).exp();
        denom[s] += *o;
    }
    for (o, &s) in out.iter_mut().zip(segments) {
        *o /= denom[s];
    }
}

/// Mean of squared differences over every entry.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    pred.same_shape(target, "mse_loss")?;
    if pred.is_empty() {
        return Err(Error::invalid("mse_loss of empty tensors"));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}
