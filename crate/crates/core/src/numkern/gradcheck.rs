use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

/// Largest relative error between the tape gradient of `f` and central
/// differences, over every parameter entry in `store`.
///
/// `f` records a scalar on the given tape. Relative error per entry is
/// `|analytic − numeric| / max(1e-8, |numeric|)`.
pub fn finite_diff_check<F>(store: &mut ParamStore, eps: f64, f: F) -> Result<f64>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    finite_diff_check_sampled(store, eps, None, f)
}

/// As [`finite_diff_check`], probing at most `per_param.0` entries of each
/// parameter tensor, chosen with seed `per_param.1`.
pub fn finite_diff_check_sampled<F>(
    store: &mut ParamStore,
    eps: f64,
    per_param: Option<(usize, u64)>,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    store.zero_grad();
    let mut tape = Tape::new();
    let out = f(&mut tape, store)?;
    if !tape.value(out).is_finite() {
        return Err(Error::NonFinite("gradient check objective".into()));
    }
    tape.backward(out, store)?;
    let analytic: Vec<Tensor> = store.iter().map(|p| p.grad.clone()).collect();
    relative_gradient_error(store, &analytic, eps, per_param, f)
}

/// Compares caller-supplied `analytic` gradients (one tensor per parameter)
/// with central differences of `f`.
pub fn relative_gradient_error<F>(
    store: &mut ParamStore,
    analytic: &[Tensor],
    eps: f64,
    per_param: Option<(usize, u64)>,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if analytic.len() != store.len() {
        return Err(Error::invalid(
            "one analytic gradient per parameter required",
        ));
    }
    let mut eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let v = f(&mut tape, store)?;
        let value = tape.value(v).item();
        if !value.is_finite() {
            return Err(Error::NonFinite("gradient check objective".into()));
        }
        Ok(value)
    };
    let mut worst: f64 = 0.0;
    let ids: Vec<_> = store.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let n = store.get(id).value.len();
        let entries: Vec<usize> = match per_param {
            Some((k, seed)) if k < n => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(pi as u64));
                let mut picked = sample(&mut rng, n, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..n).collect(),
        };
        for e in entries {
            let original = store.get(id).value.data()[e];
            store.get_mut(id).value.data_mut()[e] = original + eps;
            let plus = eval(store);
            store.get_mut(id).value.data_mut()[e] = original - eps;
            let minus = eval(store);
            store.get_mut(id).value.data_mut()[e] = original;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let a = analytic[pi].data()[e];
            let rel = (a - numeric).abs() / numeric.abs().max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> (ParamStore, super::super::ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("x", Tensor::new(vec![3, 1], vec![0.7, -1.3, 2.1]).unwrap());
        (s, id)
    }

    #[test]
    fn linear_function_is_exact() {
        let (mut s, id) = store();
        let c = Tensor::new(vec![1, 3], vec![1.5, -2.0, 0.25]).unwrap();
        let err = finite_diff_check(&mut s, 1e-5, |t, s| {
            let x = t.param(s, id);
            let c = t.constant(c.clone());
            t.matmul(c, x)
        })
        .unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn sum_of_squares() {
        let (mut s, id) = store();
        let zero = Tensor::zeros(&[3, 1]);
        let err = finite_diff_check(&mut s, 1e-5, |t, s| {
            let x = t.param(s, id);
            let m = t.mse(x, &zero)?;
            Ok(t.scale(m, 3.0))
        })
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let (mut s, id) = store();
        let zero = Tensor::zeros(&[3, 1]);
        let analytic = vec![Tensor::new(
            vec![3, 1],
            vec![2.0 * 2.0 * 0.7, 2.0 * 2.0 * -1.3, 2.0 * 2.0 * 2.1],
        )
        .unwrap()];
        let err = relative_gradient_error(&mut s, &analytic, 1e-5, None, |t, s| {
            let x = t.param(s, id);
            let m = t.mse(x, &zero)?;
            Ok(t.scale(m, 3.0))
        })
        .unwrap();
        assert!((err - 1.0).abs() < 1e-6, "{err}");
    }

    #[test]
    fn rejects_bad_eps_and_nan() {
        let (mut s, id) = store();
        assert!(finite_diff_check(&mut s, 0.0, |t, s| Ok(t.param(s, id))).is_err());
        let nan = Tensor::full(&[3, 1], f64::NAN);
        let r = finite_diff_check(&mut s, 1e-5, |t, s| {
            let x = t.param(s, id);
            t.mse(x, &nan)
        });
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
