//! Central finite-difference gradient verification.
//!
//! The checker evaluates a scalar-valued function twice per coordinate with
//! a step of `h = step * (1 + |x|)` and compares the numeric derivative
//! against what backward produced. It is the independent oracle for every
//! differentiable op in the crate, so it never calls backward itself during
//! the numeric sweep.

use crate::tensor::rng::Rng;
use crate::tensor::{no_grad, Scalar, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Check every coordinate of every input.
pub fn finite_diff_check<T, F>(inputs: &[Tensor<T>], f: F) -> GradCheckReport
where
    T: Scalar,
    F: Fn(&[Tensor<T>]) -> Tensor<T>,
{
    finite_diff_check_sampled(inputs, f, usize::MAX, 0)
}

/// Check at most `max_coords_per_input` coordinates of each input, chosen
/// deterministically from `seed`. Use this for whole-model checks where the
/// full sweep would be wasteful.
pub fn finite_diff_check_sampled<T, F>(
    inputs: &[Tensor<T>],
    f: F,
    max_coords_per_input: usize,
    seed: u64,
) -> GradCheckReport
where
    T: Scalar,
    F: Fn(&[Tensor<T>]) -> Tensor<T>,
{
    for t in inputs {
        assert!(t.is_param(), "gradcheck inputs must be requires_grad leaves");
        t.zero_grad();
    }

    let out = f(inputs);
    assert_eq!(out.numel(), 1, "gradcheck target must be scalar");
    out.backward().expect("backward failed during gradcheck");
    let analytic: Vec<Vec<T>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![T::zero(); t.numel()]))
        .collect();

    let step = if T::DTYPE == crate::tensor::Dtype::F64 { 1e-5 } else { 5e-3 };
    let mut rng = Rng::new(seed ^ 0x6fd7_35c9);
    let mut report = GradCheckReport { max_rel_err: 0.0, coords_checked: 0 };

    for (i, input) in inputs.iter().enumerate() {
        let numel = input.numel();
        let coords: Vec<usize> = if numel <= max_coords_per_input {
            (0..numel).collect()
        } else {
            (0..max_coords_per_input).map(|_| rng.index(numel)).collect()
        };

        for &j in &coords {
            let x = input.data()[j].to_f64_val();
            let h = step * (1.0 + x.abs());

            let eval = |value: f64| -> f64 {
                let mut probe: Vec<Tensor<T>> = inputs.to_vec();
                let mut data = input.data().to_vec();
                data[j] = T::from_f64(value);
                probe[i] = Tensor::leaf(data, input.shape().clone(), false);
                no_grad(|| f(&probe)).item().to_f64_val()
            };

            let numeric = (eval(x + h) - eval(x - h)) / (2.0 * h);
            let exact = analytic[i][j].to_f64_val();
            let denom = exact.abs().max(numeric.abs()).max(1e-6);
            let rel = (exact - numeric).abs() / denom;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
            }
            report.coords_checked += 1;
        }
    }
    report
}
