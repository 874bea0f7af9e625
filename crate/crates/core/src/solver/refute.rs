//! Exact refutation of support subsystems by coefficient-sign analysis.
//!
//! On the support `J`, every equation restricted to the orthant is a
//! homogeneous polynomial of degree `m-1` plus a constant, so sign analysis
//! of the surviving coefficients decides several cases exactly:
//!
//! * an equation whose restricted polynomial vanishes identically and whose
//!   constant is nonzero has no root at all;
//! * an equation whose restricted coefficients all share the strict sign of
//!   its constant is bounded away from zero on the orthant (a univariate
//!   restriction is a single monomial `c * t^{m-1}`, so this covers it
//!   completely);
//! * an off-support slack whose restricted polynomial is nonpositive on the
//!   orthant (no terms, or all terms negative) stays below a negative
//!   constant.
//!
//! Anything else is left to the numerical search.

use crate::monomial::MonomialForm;
use crate::tensor::IndexSet;

/// Why a support subsystem provably has no feasible point.
#[derive(Debug, Clone, PartialEq)]
pub enum Refutation {
    /// Equation `i` reduces to the nonzero constant `q_i`.
    ConstantEquation { component: usize, margin: f64 },
    /// Equation `i` is strictly one-signed on the nonnegative orthant.
    OneSignedEquation { component: usize, margin: f64 },
    /// Slack `i` is at most the negative constant `q_i` on the orthant.
    NegativeSlack { component: usize, margin: f64 },
}

impl Refutation {
    pub fn margin(&self) -> f64 {
        match self {
            Refutation::ConstantEquation { margin, .. }
            | Refutation::OneSignedEquation { margin, .. }
            | Refutation::NegativeSlack { margin, .. } => *margin,
        }
    }

    pub fn component(&self) -> usize {
        match self {
            Refutation::ConstantEquation { component, .. }
            | Refutation::OneSignedEquation { component, .. }
            | Refutation::NegativeSlack { component, .. } => *component,
        }
    }
}

impl std::fmt::Display for Refutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Refutation::ConstantEquation { component, margin } => write!(
                f,
                "equation {component} is the nonzero constant with magnitude {margin}"
            ),
            Refutation::OneSignedEquation { component, margin } => write!(
                f,
                "equation {component} is one-signed on the orthant with margin {margin}"
            ),
            Refutation::NegativeSlack { component, margin } => write!(
                f,
                "slack {component} stays below -{margin} on the orthant"
            ),
        }
    }
}

/// Returns the first exact refutation of the support-`J` subsystem of
/// `A x^{m-1} + q` with `x >= 0`, or `None` when no sign argument applies.
pub(crate) fn refute_support(
    forms: &[MonomialForm],
    q: &[f64],
    j: &IndexSet,
) -> Option<Refutation> {
    for (idx, form) in forms.iter().enumerate() {
        let component = idx + 1;
        let qi = q[idx];
        let restricted = form.restrict(j);
        if j.contains(component) {
            // equation: restricted(x_J) + q_i = 0 with x_J >= 0
            if restricted.is_zero() {
                if qi != 0.0 {
                    return Some(Refutation::ConstantEquation {
                        component,
                        margin: qi.abs(),
                    });
                }
            } else if (restricted.all_coeffs_positive() && qi > 0.0)
                || (restricted.all_coeffs_negative() && qi < 0.0)
            {
                return Some(Refutation::OneSignedEquation {
                    component,
                    margin: qi.abs(),
                });
            }
        } else {
            // slack: restricted(x_J) + q_i >= 0 with x_J >= 0
            if qi < 0.0 && (restricted.is_zero() || restricted.all_coeffs_negative()) {
                return Some(Refutation::NegativeSlack {
                    component,
                    margin: qi.abs(),
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;
    use crate::tensor::Tensor;

    fn forms_of(t: &Tensor) -> Vec<MonomialForm> {
        t.monomial_forms()
    }

    #[test]
    fn zero_tensor_negative_q_is_refuted_on_every_support() {
        let z = Tensor::zeros(3, 2).unwrap();
        let forms = forms_of(&z);
        let q = [-1.0, 0.0];
        for members in [vec![], vec![1], vec![2], vec![1, 2]] {
            let j = IndexSet::new(members).unwrap();
            let r = refute_support(&forms, &q, &j).expect("refuted");
            assert_eq!(r.component(), 1);
            assert_eq!(r.margin(), 1.0);
        }
    }

    #[test]
    fn positive_q_on_zero_tensor_is_not_refuted_at_empty_support() {
        let z = Tensor::zeros(3, 2).unwrap();
        let forms = forms_of(&z);
        assert!(refute_support(&forms, &[1.0, 1.0], &IndexSet::empty()).is_none());
    }

    #[test]
    fn one_signed_equation_refutes() {
        // example-3.4: both components are x1*x2^2, positive coefficients.
        let t = fixtures::example_3_4();
        let forms = forms_of(&t);
        let q = [1.0, -1.0];
        let full = IndexSet::full(2);
        let r = refute_support(&forms, &q, &full).unwrap();
        assert!(matches!(r, Refutation::OneSignedEquation { component: 1, .. }));
        // but a negative q on the same support is not sign-refutable
        assert!(refute_support(&forms, &[-1.0, -1.0], &full).is_none());
    }

    #[test]
    fn restricted_constant_equation_refutes() {
        // example-3.3 component 1 is x2^{m-1}; on support {1} it vanishes.
        let t = fixtures::example_3_3();
        let forms = forms_of(&t);
        let j = IndexSet::singleton(1);
        let r = refute_support(&forms, &[-1.0, 1.0], &j).unwrap();
        assert!(matches!(r, Refutation::ConstantEquation { component: 1, .. }));
        // with q1 = 0 the equation is identically satisfied: no refutation
        assert!(refute_support(&forms, &[0.0, 1.0], &j).is_none());
    }

    #[test]
    fn negative_slack_refutes() {
        // support {2} of example-3.3: component 1 slack is x2^{m-1} + q1 which
        // is not refutable, component 2 equation is the constant q2.
        let t = fixtures::example_3_3();
        let forms = forms_of(&t);
        let j = IndexSet::singleton(2);
        let r = refute_support(&forms, &[-1.0, 1.0], &j).unwrap();
        assert!(matches!(r, Refutation::ConstantEquation { component: 2, .. }));
        // all-negative slack polynomial with negative constant
        let neg = Tensor::from_entries(3, 2, vec![(vec![1, 2, 2], -1.0)]).unwrap();
        let r = refute_support(&forms_of(&neg), &[-0.5, 0.0], &IndexSet::singleton(2)).unwrap();
        assert!(matches!(r, Refutation::NegativeSlack { component: 1, .. }));
    }
}
