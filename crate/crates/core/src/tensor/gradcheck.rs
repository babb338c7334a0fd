//! Central finite differences, used to check analytic gradients.

use super::params::{Matrix, ParamId, ParamStore};

/// Central-difference gradient of `loss` with respect to parameter `id`.
/// `loss` is evaluated twice per entry; the store is restored afterwards.
pub fn numeric_gradient<F>(store: &mut ParamStore, id: ParamId, step: f64, mut loss: F) -> Matrix
where
    F: FnMut(&ParamStore) -> f64,
{
    let shape = store.get(id).dim();
    let mut grad = Matrix::zeros(shape);
    for r in 0..shape.0 {
        for c in 0..shape.1 {
            let orig = store.get(id)[[r, c]];
            store.get_mut(id)[[r, c]] = orig + step;
            let plus = loss(store);
            store.get_mut(id)[[r, c]] = orig - step;
            let minus = loss(store);
            store.get_mut(id)[[r, c]] = orig;
            grad[[r, c]] = (plus - minus) / (2.0 * step);
        }
    }
    grad
}

/// `||a - b|| / (||a|| + ||b||)`, zero when both are zero.
pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    let norm = |m: &Matrix| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(&(a - b));
    let denom = norm(a) + norm(b);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}
