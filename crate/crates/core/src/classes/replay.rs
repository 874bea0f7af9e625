//! Independent re-verification of falsification witnesses.
//!
//! Every `Falsified` verdict must survive this replay: the witness is pushed
//! back through `apply` / `apply_scalar` (never through the search path that
//! found it) and the defining inequality of the class must be violated.
//! Search witnesses must violate by more than `falsify_tol`; exact
//! coefficient witnesses need only a strictly positive margin.

use crate::budget::{SearchBudget, PAIR_TOL};
use crate::classes::{Class, WitnessKind};
use crate::error::ReplayError;
use crate::solver::{solve, SolveStatus, TCPInstance};
use crate::tensor::Tensor;

fn err(msg: impl Into<String>) -> ReplayError {
    ReplayError(msg.into())
}

fn expect_len(v: &[f64], n: usize, what: &str) -> Result<(), ReplayError> {
    if v.len() != n {
        return Err(err(format!("{what} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(err(format!("{what} has non-finite components")));
    }
    Ok(())
}

fn expect_nonneg(v: &[f64], what: &str) -> Result<(), ReplayError> {
    if v.iter().any(|&x| x < 0.0) {
        return Err(err(format!("{what} has negative components")));
    }
    Ok(())
}

fn gate(violation: f64, threshold: f64) -> Result<f64, ReplayError> {
    if violation > threshold {
        Ok(violation)
    } else {
        Err(err(format!(
            "violation {violation:e} does not exceed {threshold:e}"
        )))
    }
}

/// Replays `witness` against the defining condition of `class` on `tensor`.
/// Returns the violation magnitude, or an error naming the failed condition.
pub fn replay_witness(
    tensor: &Tensor,
    class: Class,
    witness: &WitnessKind,
    budget: &SearchBudget,
) -> Result<f64, ReplayError> {
    let n = tensor.dim();
    let m = tensor.order();
    match (class, witness) {
        (Class::Nonnegative, WitnessKind::Index(tuple)) => {
            let c = tensor
                .coeff(tuple)
                .map_err(|e| err(format!("bad coefficient index: {e}")))?;
            if c < 0.0 {
                Ok(-c)
            } else {
                Err(err(format!("coefficient at {tuple:?} is {c}, not negative")))
            }
        }
        (Class::R0, WitnessKind::Point(x)) => {
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            replay_homogeneous_system(tensor, x, 0.0, SystemCoupling::None, budget)
        }
        (Class::R, WitnessKind::PointScalar(x, t)) => {
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            if *t < 0.0 {
                return Err(err(format!("witness scalar t = {t} is negative")));
            }
            replay_homogeneous_system(tensor, x, *t, SystemCoupling::Constant, budget)
        }
        (Class::Er, WitnessKind::PointScalar(x, t)) => {
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            if *t < 0.0 {
                return Err(err(format!("witness scalar t = {t} is negative")));
            }
            replay_homogeneous_system(tensor, x, *t, SystemCoupling::Proportional, budget)
        }
        (Class::SemiPositive, WitnessKind::Point(x)) => {
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            let ax = tensor.apply(x).map_err(|e| err(e.to_string()))?;
            let mut worst = f64::NEG_INFINITY;
            let mut active = 0;
            for (&xi, &fi) in x.iter().zip(&ax) {
                if xi > 0.0 {
                    active += 1;
                    worst = worst.max(fi);
                }
            }
            if active == 0 {
                return Err(err("witness point is zero"));
            }
            gate(-worst, budget.falsify_tol)
        }
        (Class::P0, WitnessKind::Point(x)) | (Class::P0Prime, WitnessKind::Point(x)) => {
            expect_len(x, n, "witness point")?;
            let ax = tensor.apply(x).map_err(|e| err(e.to_string()))?;
            let mut worst = f64::NEG_INFINITY;
            let mut active = 0;
            for (&xi, &fi) in x.iter().zip(&ax) {
                if xi != 0.0 {
                    active += 1;
                    let factor = if class == Class::P0 {
                        xi
                    } else {
                        xi.powi(m as i32 - 1)
                    };
                    worst = worst.max(factor * fi);
                }
            }
            if active == 0 {
                return Err(err("witness point is zero"));
            }
            gate(-worst, budget.falsify_tol)
        }
        (Class::Sp0, WitnessKind::Pair(x, y)) => {
            expect_len(x, n, "witness pair (first)")?;
            expect_len(y, n, "witness pair (second)")?;
            let ax = tensor.apply(x).map_err(|e| err(e.to_string()))?;
            let ay = tensor.apply(y).map_err(|e| err(e.to_string()))?;
            let mut worst = f64::NEG_INFINITY;
            let mut active = 0;
            for i in 0..n {
                let d = x[i] - y[i];
                if d != 0.0 {
                    if d.abs() <= PAIR_TOL {
                        return Err(err(format!(
                            "pair coordinate {} differs by {d:e}, inside the tie band",
                            i + 1
                        )));
                    }
                    active += 1;
                    worst = worst.max(d * (ax[i] - ay[i]));
                }
            }
            if active == 0 {
                return Err(err("witness pair is identical"));
            }
            gate(-worst, budget.falsify_tol)
        }
        (Class::Sp0, WitnessKind::Index(idx)) => {
            // coefficient-level refutation for odd order: component i depends
            // on its own variable
            if m % 2 == 0 {
                return Err(err("index witness needs odd order"));
            }
            let [i] = idx[..] else {
                return Err(err("index witness must name one component"));
            };
            let mf = tensor
                .monomial_form(i)
                .map_err(|e| err(format!("bad component: {e}")))?;
            if mf.is_zero() {
                return Err(err(format!("component {i} is identically zero")));
            }
            if !mf.depends_on(i) {
                return Err(err(format!("component {i} does not depend on x{i}")));
            }
            gate(mf.max_abs_coeff_on(i), 0.0)
        }
        (Class::Copositive, WitnessKind::Point(x)) => {
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            let v = tensor.apply_scalar(x).map_err(|e| err(e.to_string()))?;
            gate(-v, budget.falsify_tol)
        }
        (Class::Q, WitnessKind::QVector(q)) => {
            expect_len(q, n, "witness q")?;
            let inst = TCPInstance::new(tensor.clone(), q.clone()).map_err(|e| err(e.to_string()))?;
            match solve(&inst, budget).map_err(|e| err(e.to_string()))?.status {
                SolveStatus::CertifiedNoSolution(cert) => gate(cert.min_margin, 0.0),
                SolveStatus::Solved(_) => Err(err("instance solved; q is not a witness")),
                SolveStatus::NoSolutionFound => {
                    Err(err("no solution found but not certified; q is not a witness"))
                }
            }
        }
        (Class::Q, WitnessKind::Point(x)) => {
            // nonnegative route: a verified homogeneous-system point plus
            // nonnegativity certifies non-membership
            if let Some((tuple, _)) = tensor.first_negative() {
                return Err(err(format!(
                    "point witness for Q needs a nonnegative tensor; coefficient at {tuple:?} is negative"
                )));
            }
            expect_len(x, n, "witness point")?;
            expect_nonneg(x, "witness point")?;
            replay_homogeneous_system(tensor, x, 0.0, SystemCoupling::None, budget)
        }
        (class, kind) => Err(err(format!(
            "witness kind {kind:?} does not apply to class {class}"
        ))),
    }
}

enum SystemCoupling {
    /// `A x^{m-1} = 0` on the support, slack off it.
    None,
    /// `(A x^{m-1})_i + t = 0` on the support, slack plus `t` off it.
    Constant,
    /// `(A x^{m-1})_i + t x_i = 0` on the support, plain slack off it.
    Proportional,
}

fn replay_homogeneous_system(
    tensor: &Tensor,
    x: &[f64],
    t: f64,
    coupling: SystemCoupling,
    budget: &SearchBudget,
) -> Result<f64, ReplayError> {
    let ax = tensor.apply(x).map_err(|e| err(e.to_string()))?;
    let mut norm = 0.0f64;
    for (i, (&xi, &fi)) in x.iter().zip(&ax).enumerate() {
        norm = norm.max(xi);
        if xi > 0.0 {
            let lhs = match coupling {
                SystemCoupling::None => fi,
                SystemCoupling::Constant => fi + t,
                SystemCoupling::Proportional => fi + t * xi,
            };
            if lhs.abs() > budget.accept_tol {
                return Err(err(format!(
                    "equation {} off by {lhs:e} at the witness",
                    i + 1
                )));
            }
        } else {
            let slack = match coupling {
                SystemCoupling::None | SystemCoupling::Proportional => fi,
                SystemCoupling::Constant => fi + t,
            };
            if slack < -budget.feas_tol {
                return Err(err(format!("slack {} is {slack:e} at the witness", i + 1)));
            }
        }
    }
    gate(norm, budget.falsify_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn r0_point_witnesses_replay() {
        let t = fixtures::example_3_1();
        let v =
            replay_witness(&t, Class::R0, &WitnessKind::Point(vec![1.0, 0.0]), &budget()).unwrap();
        assert_eq!(v, 1.0);
        // (0, 1) is not an R0 witness here: equation 2 evaluates to 1.
        assert!(
            replay_witness(&t, Class::R0, &WitnessKind::Point(vec![0.0, 1.0]), &budget()).is_err()
        );
        // zero point is rejected
        assert!(
            replay_witness(&t, Class::R0, &WitnessKind::Point(vec![0.0, 0.0]), &budget()).is_err()
        );
    }

    #[test]
    fn r_and_er_scalar_witnesses_replay() {
        // a_111 = -1 only: x = (1, 0), t = 1 satisfies both variants.
        let t = Tensor::from_entries(3, 2, vec![(vec![1, 1, 1], -1.0)]).unwrap();
        let w = WitnessKind::PointScalar(vec![1.0, 0.0], 1.0);
        assert_eq!(replay_witness(&t, Class::R, &w, &budget()).unwrap(), 1.0);
        assert_eq!(replay_witness(&t, Class::Er, &w, &budget()).unwrap(), 1.0);
        // negative t rejected
        let bad = WitnessKind::PointScalar(vec![1.0, 0.0], -0.5);
        assert!(replay_witness(&t, Class::R, &bad, &budget()).is_err());
    }

    #[test]
    fn product_witnesses_replay() {
        // example-3.6 is not P0: x = (-1, 1) has both active products negative.
        let t = fixtures::example_3_6();
        let v =
            replay_witness(&t, Class::P0, &WitnessKind::Point(vec![-1.0, 1.0]), &budget()).unwrap();
        assert_eq!(v, 1.0);
        // example-3.5 is not P0': x = (1, -1).
        let t = fixtures::example_3_5();
        let v = replay_witness(
            &t,
            Class::P0Prime,
            &WitnessKind::Point(vec![1.0, -1.0]),
            &budget(),
        )
        .unwrap();
        assert_eq!(v, 1.0);
        // but example-3.5 is P0, so the same point must NOT replay there.
        assert!(
            replay_witness(&t, Class::P0, &WitnessKind::Point(vec![1.0, -1.0]), &budget()).is_err()
        );
    }

    #[test]
    fn pair_witnesses_replay() {
        // example-3.4: x = (1,1), y = (1,-2) gives the single active product -9.
        let t = fixtures::example_3_4();
        let w = WitnessKind::Pair(vec![1.0, 1.0], vec![1.0, -2.0]);
        let v = replay_witness(&t, Class::Sp0, &w, &budget()).unwrap();
        assert_eq!(v, 9.0);
        // example-4.1 with the recomputed products -9 and -25.
        let t = fixtures::example_4_1();
        let w = WitnessKind::Pair(vec![-2.0, -3.0], vec![1.0, 2.0]);
        let v = replay_witness(&t, Class::Sp0, &w, &budget()).unwrap();
        assert_eq!(v, 9.0);
        // identical pair rejected
        let w = WitnessKind::Pair(vec![1.0, 1.0], vec![1.0, 1.0]);
        assert!(replay_witness(&t, Class::Sp0, &w, &budget()).is_err());
    }

    #[test]
    fn copositive_and_q_witnesses_replay() {
        let t = Tensor::from_entries(3, 2, vec![(vec![1, 1, 1], -1.0)]).unwrap();
        let v = replay_witness(
            &t,
            Class::Copositive,
            &WitnessKind::Point(vec![1.0, 0.0]),
            &budget(),
        )
        .unwrap();
        assert_eq!(v, 1.0);

        let z = Tensor::zeros(3, 2).unwrap();
        let v = replay_witness(
            &z,
            Class::Q,
            &WitnessKind::QVector(vec![-1.0, 0.0]),
            &budget(),
        )
        .unwrap();
        assert_eq!(v, 1.0);
        // a solvable q is rejected as a witness
        assert!(replay_witness(
            &z,
            Class::Q,
            &WitnessKind::QVector(vec![1.0, 1.0]),
            &budget()
        )
        .is_err());
    }

    #[test]
    fn mismatched_kinds_are_rejected() {
        let t = fixtures::example_3_1();
        assert!(replay_witness(
            &t,
            Class::Copositive,
            &WitnessKind::Pair(vec![1.0, 0.0], vec![0.0, 1.0]),
            &budget()
        )
        .is_err());
    }
}
