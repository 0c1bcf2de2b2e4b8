//! Central-finite-difference gradient verification.
//!
//! The checker is the independent oracle for every differentiable block in
//! the crate: it never touches the tape's backward pass except to compare
//! against it.

use ndarray::ArrayD;

/// Default step for central differences in double precision.
pub const FD_STEP: f64 = 1e-5;

/// Worst relative error between analytic and numerical gradients.
///
/// `f` evaluates the scalar objective from scratch given the inputs;
/// `analytic` holds one gradient array per input, in the same order.
pub fn max_relative_error<F>(inputs: &[ArrayD<f64>], analytic: &[ArrayD<f64>], f: F, step: f64) -> f64
where
    F: Fn(&[ArrayD<f64>]) -> f64,
{
    assert_eq!(inputs.len(), analytic.len());
    let mut worst = 0.0f64;
    let mut work: Vec<ArrayD<f64>> = inputs.to_vec();
    for (i, grad) in analytic.iter().enumerate() {
        assert_eq!(grad.shape(), inputs[i].shape(), "gradient shape mismatch on input {i}");
        let n = inputs[i].len();
        for j in 0..n {
            let orig = work[i].as_slice_memory_order().unwrap()[j];

            work[i].as_slice_memory_order_mut().unwrap()[j] = orig + step;
            let up = f(&work);
            work[i].as_slice_memory_order_mut().unwrap()[j] = orig - step;
            let down = f(&work);
            work[i].as_slice_memory_order_mut().unwrap()[j] = orig;

            let numeric = (up - down) / (2.0 * step);
            let exact = grad.as_slice_memory_order().unwrap()[j];
            let rel = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-6);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}
