//! The planning objective `J = integral(m_dot_f + k_a * a^2) dt` over
//! the Hermite elements, with its analytic gradient.

use super::{hermite_basis, PccProblem, GAUSS3};

/// Evaluate the objective and its gradient with respect to the node
/// vector `x = [s_1, v_1, ..., s_n, v_n]`.
pub fn objective(x: &[f64], prob: &PccProblem) -> (f64, Vec<f64>) {
    debug_assert_eq!(x.len(), 2 * prob.n);
    let h = prob.element_dt();
    let mut j = 0.0;
    let mut grad = vec![0.0; x.len()];
    for e in 0..prob.n - 1 {
        let dofs = [x[2 * e], x[2 * e + 1], x[2 * e + 2], x[2 * e + 3]];
        for &(t, w) in GAUSS3.iter() {
            let (nv, nd, ndd) = hermite_basis(t, h);
            let mut s = 0.0;
            let mut v = 0.0;
            let mut a = 0.0;
            for k in 0..4 {
                s += nv[k] * dofs[k];
                v += nd[k] * dofs[k];
                a += ndd[k] * dofs[k];
            }
            let p = prob.power_kw(s, v, a);
            let flow = prob.fuel.flow(p);
            j += w * h * (flow + prob.k_a * a * a);

            let dflow = prob.fuel.dflow(p);
            let (dp_ds, dp_dv, dp_da) = prob.power_grad(s, v, a);
            let cs = w * h * dflow * dp_ds;
            let cv = w * h * dflow * dp_dv;
            let ca = w * h * (dflow * dp_da + 2.0 * prob.k_a * a);
            for k in 0..4 {
                grad[2 * e + k] += cs * nv[k] + cv * nd[k] + ca * ndd[k];
            }
        }
    }
    (j, grad)
}
