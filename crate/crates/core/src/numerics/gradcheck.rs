use rand::seq::index::sample;

use crate::rng::seeded;

use super::params::ParamSet;

/// Above this many scalars, a deterministic random subset of coordinates is checked.
pub const MAX_CHECKED_COORDINATES: usize = 512;

/// Relative error between a numeric and an analytic derivative. The denominator
/// is floored at `1e-6` so that coordinates with vanishing gradient are judged on
/// absolute error.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6)
}

/// Compares the analytic gradients stored in `params` against central
/// differences of `f` and returns the largest relative error.
pub fn finite_diff_check<F>(f: F, params: &ParamSet, h: f64) -> f64
where
    F: Fn(&ParamSet) -> f64,
{
    let coords = params.coordinates();
    let chosen: Vec<usize> = if coords.len() > MAX_CHECKED_COORDINATES {
        let mut idx = sample(&mut seeded(0x6772_6164), coords.len(), MAX_CHECKED_COORDINATES).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..coords.len()).collect()
    };
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for i in chosen {
        let (name, k) = &coords[i];
        let orig = params.get(name).data()[*k];
        probe.get_mut(name).data_mut()[*k] = orig + h;
        let up = f(&probe);
        probe.get_mut(name).data_mut()[*k] = orig - h;
        let down = f(&probe);
        probe.get_mut(name).data_mut()[*k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = params.grad(name).data()[*k];
        worst = worst.max(relative_error(numeric, analytic));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ops::{cross_entropy, glorot_init};
    use crate::numerics::DenseMatrix;

    #[test]
    fn linear_function_is_exact() {
        let mut p = ParamSet::new();
        p.insert("w", glorot_init(3, 4, 1));
        let coef = glorot_init(3, 4, 2);
        let f = |ps: &ParamSet| -> f64 {
            ps.get("w").data().iter().zip(coef.data()).map(|(a, b)| a * b).sum()
        };
        p.grad_mut("w").data_mut().copy_from_slice(coef.data());
        assert!(finite_diff_check(f, &p, 1e-5) <= 1e-8);
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let mut p = ParamSet::new();
        p.insert("w", DenseMatrix::row_vector(&[1.0, 2.0]));
        p.grad_mut("w").data_mut().copy_from_slice(&[2.0, 0.0]);
        let f = |ps: &ParamSet| ps.get("w").data().iter().map(|v| v * v).sum::<f64>();
        assert!(finite_diff_check(f, &p, 1e-5) > 0.5);
    }

    #[test]
    fn softmax_cross_entropy_composite() {
        for seed in 0..10 {
            let mut p = ParamSet::new();
            p.insert("logits", glorot_init(6, 4, seed));
            let targets = [0, 3, 1, 2, 2, 0];
            let mask = [0, 2, 3, 5];
            let (_, g) = cross_entropy(p.get("logits"), &targets, &mask).unwrap();
            p.grad_mut("logits").data_mut().copy_from_slice(g.data());
            let f = |ps: &ParamSet| cross_entropy(ps.get("logits"), &targets, &mask).unwrap().0;
            let err = finite_diff_check(f, &p, 1e-5);
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
    }
}
