//! Damped Newton iteration for small square polynomial systems.

use crate::budget::NEWTON_TOL;
use crate::linalg::{inf_norm, solve_linear, sq_norm};

pub(crate) struct NewtonResult {
    /// A point worth filtering (converged or stalled); `None` when the
    /// Jacobian went singular before any progress criterion was met.
    pub candidate: Option<Vec<f64>>,
    pub iterations: usize,
}

const MAX_HALVINGS: usize = 40;

/// Runs damped Newton from `start`. `eval` writes the system values, `jac`
/// the row-major Jacobian. Steps are halved until the squared norm decreases.
pub(crate) fn damped_newton(
    start: &[f64],
    max_iter: usize,
    mut eval: impl FnMut(&[f64], &mut [f64]),
    mut jac: impl FnMut(&[f64], &mut [f64]),
) -> NewtonResult {
    let k = start.len();
    let mut x = start.to_vec();
    if k == 0 {
        return NewtonResult {
            candidate: Some(x),
            iterations: 0,
        };
    }
    let mut fx = vec![0.0; k];
    let mut a = vec![0.0; k * k];
    let mut step = vec![0.0; k];
    let mut xt = vec![0.0; k];
    let mut ft = vec![0.0; k];
    let mut iterations = 0;
    eval(&x, &mut fx);
    for _ in 0..max_iter {
        if inf_norm(&fx) < NEWTON_TOL {
            return NewtonResult {
                candidate: Some(x),
                iterations,
            };
        }
        jac(&x, &mut a);
        for (s, f) in step.iter_mut().zip(&fx) {
            *s = -f;
        }
        if !solve_linear(&mut a, &mut step, k) {
            return NewtonResult {
                candidate: None,
                iterations,
            };
        }
        iterations += 1;
        let f0 = sq_norm(&fx);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..k {
                xt[i] = x[i] + alpha * step[i];
            }
            eval(&xt, &mut ft);
            if sq_norm(&ft) < f0 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // stalled at a local minimum of the squared norm; let the caller
            // filter the point
            return NewtonResult {
                candidate: Some(x),
                iterations,
            };
        }
        let step_norm = alpha * inf_norm(&step);
        x.copy_from_slice(&xt);
        fx.copy_from_slice(&ft);
        if step_norm < NEWTON_TOL {
            return NewtonResult {
                candidate: Some(x),
                iterations,
            };
        }
    }
    NewtonResult {
        candidate: Some(x),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_cubic() {
        // x^3 = 8
        let r = damped_newton(
            &[1.0],
            100,
            |x, f| f[0] = x[0] * x[0] * x[0] - 8.0,
            |x, a| a[0] = 3.0 * x[0] * x[0],
        );
        let x = r.candidate.unwrap();
        assert!((x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn solves_a_coupled_system() {
        // x*y^2 = 1, y^3 - x^2*y = 1 (the two-variable system behind the
        // golden-ratio root).
        let r = damped_newton(
            &[1.0, 1.0],
            100,
            |x, f| {
                f[0] = x[0] * x[1] * x[1] - 1.0;
                f[1] = x[1] * x[1] * x[1] - x[0] * x[0] * x[1] - 1.0;
            },
            |x, a| {
                a[0] = x[1] * x[1];
                a[1] = 2.0 * x[0] * x[1];
                a[2] = -2.0 * x[0] * x[1];
                a[3] = 3.0 * x[1] * x[1] - x[0] * x[0];
            },
        );
        let x = r.candidate.unwrap();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((x[1] - phi.powf(1.0 / 3.0)).abs() < 1e-10);
        assert!((x[0] - 1.0 / (x[1] * x[1])).abs() < 1e-10);
    }

    #[test]
    fn reports_singular_jacobian() {
        // F identically (x1 - x2)^2 twice: Jacobian rank 1 everywhere.
        let r = damped_newton(
            &[2.0, 1.0],
            100,
            |x, f| {
                let d = (x[0] - x[1]) * (x[0] - x[1]);
                f[0] = d + 1.0;
                f[1] = d + 1.0;
            },
            |x, a| {
                let d = 2.0 * (x[0] - x[1]);
                a[0] = d;
                a[1] = -d;
                a[2] = d;
                a[3] = -d;
            },
        );
        assert!(r.candidate.is_none());
    }

    #[test]
    fn zero_start_on_satisfied_system_converges_immediately() {
        let r = damped_newton(
            &[1.0, 1.0],
            100,
            |x, f| {
                let d = (x[0] - x[1]) * (x[0] - x[1]);
                f[0] = d;
                f[1] = d;
            },
            |_, a| a.fill(0.0),
        );
        assert_eq!(r.candidate.unwrap(), vec![1.0, 1.0]);
        assert_eq!(r.iterations, 0);
    }
}
