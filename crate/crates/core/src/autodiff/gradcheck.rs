use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::TensorError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    pub tolerance: f64,
    /// Check at most this many coordinates per input (sampled with `seed`).
    pub max_coords_per_input: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { eps: 1e-3, tolerance: 1e-4, max_coords_per_input: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(input, coordinate)` of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    pub passed: bool,
}

/// Compares reverse-mode gradients of a scalar function against central
/// differences. `f` receives one leaf per entry of `point`.
///
/// The error per coordinate is `|a - n| / max(1e-8, |a| + |n|)`; the report
/// carries the maximum.
pub fn grad_check<F>(f: F, point: &[Tensor<f64>], opts: &GradCheckOptions) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, TensorError>,
{
    let eval = |inputs: &[Tensor<f64>]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), false)).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Tensor<f64>> = point.to_vec();
    let mut max_rel = 0.0f64;
    let mut worst = None;
    let mut checked = 0;

    for (input, var) in vars.iter().enumerate() {
        let n = point[input].len();
        let analytic: Vec<f64> = match grads.get(*var) {
            Some(g) => g.data().to_vec(),
            None => vec![0.0; n],
        };
        let coords: Vec<usize> = match opts.max_coords_per_input {
            Some(c) if c < n => {
                let mut idx = sample(&mut rng, n, c).into_vec();
                idx.sort_unstable();
                idx
            }
            _ => (0..n).collect(),
        };
        for idx in coords {
            let a = analytic[idx];
            if !a.is_finite() {
                return Err(TensorError::NonFiniteGradient { input, index: idx });
            }
            let orig = work[input].data()[idx];
            work[input].data_mut()[idx] = orig + opts.eps;
            let plus = eval(&work)?;
            work[input].data_mut()[idx] = orig - opts.eps;
            let minus = eval(&work)?;
            work[input].data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * opts.eps);
            if !numeric.is_finite() {
                return Err(TensorError::NonFiniteGradient { input, index: idx });
            }
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            if rel > max_rel || worst.is_none() {
                max_rel = max_rel.max(rel);
                worst = Some((input, idx));
            }
            checked += 1;
        }
    }

    Ok(GradCheckReport { max_rel_error: max_rel, worst, checked, passed: max_rel <= opts.tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Values bounded at least `margin` away from zero.
    fn away_from_zero(shape: &[usize], margin: f64, rng: &mut impl Rng) -> Tensor<f64> {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                let m = rng.gen_range(margin..1.5);
                if rng.gen_bool(0.5) { m } else { -m }
            })
            .collect();
        Tensor::new(shape, data).unwrap()
    }

    fn sum_of_squares(tape: &mut Tape<f64>, v: Var) -> Result<Var, TensorError> {
        let zeros = tape.leaf(Tensor::zeros(tape.value(v).shape()), false);
        tape.mse_loss(v, zeros)
    }

    #[test]
    fn sum_of_squares_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_tensor(&[7], &mut rng);
        let r = grad_check(|t, v| sum_of_squares(t, v[0]), &[x], &GradCheckOptions::default()).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
        assert_eq!(r.checked, 7);
    }

    #[test]
    fn conv_gradients_at_ten_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for stride in [1, 2] {
            for _ in 0..5 {
                let x = random_tensor(&[1, 8, 8], &mut rng);
                let k = random_tensor(&[2, 1, 3, 3], &mut rng);
                let b = random_tensor(&[2], &mut rng);
                let target = random_tensor(&[2, 8usize.div_ceil(stride), 8usize.div_ceil(stride)], &mut rng);
                let r = grad_check(
                    |t, v| {
                        let y = t.conv2d(v[0], v[1], v[2], stride)?;
                        let tt = t.leaf(target.clone(), false);
                        t.mse_loss(y, tt)
                    },
                    &[x, k, b],
                    &GradCheckOptions { eps: 1e-3, tolerance: 1e-3, ..Default::default() },
                )
                .unwrap();
                assert!(r.passed, "stride {stride}: {r:?}");
            }
        }
    }

    #[test]
    fn multichannel_conv_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_tensor(&[3, 5, 6], &mut rng);
        let k = random_tensor(&[4, 3, 3, 3], &mut rng);
        let b = random_tensor(&[4], &mut rng);
        let r = grad_check(
            |t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 2)?;
                sum_of_squares(t, y)
            },
            &[x, k, b],
            &GradCheckOptions { tolerance: 1e-3, ..Default::default() },
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn dense_gradients_at_ten_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x = random_tensor(&[5], &mut rng);
            let w = random_tensor(&[3, 5], &mut rng);
            let b = random_tensor(&[3], &mut rng);
            let target = random_tensor(&[3], &mut rng);
            let r = grad_check(
                |t, v| {
                    let y = t.dense(v[0], v[1], v[2])?;
                    let tt = t.leaf(target.clone(), false);
                    t.mse_loss(y, tt)
                },
                &[x, w, b],
                &GradCheckOptions::default(),
            )
            .unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn relu_gradients_away_from_kink() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let x = away_from_zero(&[9], 0.1, &mut rng);
            let target = random_tensor(&[9], &mut rng);
            let r = grad_check(
                |t, v| {
                    let y = t.relu(v[0]);
                    let tt = t.leaf(target.clone(), false);
                    t.mse_loss(y, tt)
                },
                &[x],
                &GradCheckOptions::default(),
            )
            .unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn pooling_concat_mean_scale_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let a = random_tensor(&[2, 3, 3], &mut rng);
            let b = random_tensor(&[2, 3, 3], &mut rng);
            let extra = random_tensor(&[2], &mut rng);
            let target = random_tensor(&[4], &mut rng);
            let r = grad_check(
                |t, v| {
                    let pa = t.global_avg_pool(v[0])?;
                    let pb = t.global_avg_pool(v[1])?;
                    let ca = t.concat(&[pa, v[2]])?;
                    let cb = t.concat(&[pb, v[2]])?;
                    let m = t.mean_over_set(&[ca, cb])?;
                    let s = t.scale(m, 2.5);
                    let s = t.scale_each(s, &[0.5, 3.0, 1.0, 7.0])?;
                    let tt = t.leaf(target.clone(), false);
                    t.mse_loss(s, tt)
                },
                &[a, b, extra],
                &GradCheckOptions::default(),
            )
            .unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn nan_producing_op_is_reported() {
        let x = Tensor::from_vec(vec![1.0, 2.0]);
        let err = grad_check(
            |t, v| {
                let y = t.scale(v[0], f64::NAN);
                sum_of_squares(t, y)
            },
            &[x],
            &GradCheckOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, TensorError::NonFiniteGradient { .. }));
    }

    #[test]
    fn coordinate_subsampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&[50], &mut rng);
        let opts = GradCheckOptions { max_coords_per_input: Some(10), ..Default::default() };
        let r = grad_check(|t, v| sum_of_squares(t, v[0]), &[x], &opts).unwrap();
        assert_eq!(r.checked, 10);
        assert!(r.passed);
    }
}
