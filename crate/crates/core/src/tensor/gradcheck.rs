/// Step used for central differences in double precision.
pub const GRAD_CHECK_EPS: f64 = 1e-4;

/// Compares an analytic gradient against central finite differences of a
/// scalar function.
///
/// `point` flattens every input and parameter the function depends on and
/// `analytic` holds the claimed gradient at that point, in the same order.
/// Returns `max_i |analytic_i - numeric_i| / max(1, |numeric_i|)`.
pub fn grad_check<F>(mut loss: F, point: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len(), "gradient length must match the point");
    let mut probe = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let up = loss(&probe);
        probe[i] = point[i] - eps;
        let down = loss(&probe);
        probe[i] = point[i];
        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}
