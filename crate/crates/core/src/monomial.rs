//! Per-component polynomials of the map `x -> A x^{m-1}`, aggregated by
//! monomial. Exponent vectors are canonical: nonnegative integers summing to
//! `m-1`. Terms whose coefficients cancel to exactly zero are dropped.

use std::collections::BTreeMap;

use crate::tensor::{IndexSet, Tensor};

/// One component of the multilinear map as a polynomial in `x_1, ..., x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialForm {
    component: usize,
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MonomialForm {
    pub(crate) fn build(tensor: &Tensor, i: usize) -> MonomialForm {
        let n = tensor.dim();
        let m = tensor.order();
        let block = n.pow((m - 1) as u32);
        let mut terms: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let base = (i - 1) * block;
        for offset in 0..block {
            let c = tensor.coeffs()[base + offset];
            if c == 0.0 {
                continue;
            }
            let mut expo = vec![0u32; n];
            let mut rest = offset;
            for _ in 1..m {
                expo[rest % n] += 1;
                rest /= n;
            }
            *terms.entry(expo).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        MonomialForm {
            component: i,
            dim: n,
            degree: m - 1,
            terms,
        }
    }

    pub fn component(&self) -> usize {
        self.component
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total degree of every term (`m - 1`).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True when the polynomial has no terms (identically zero).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of an exponent vector, zero when absent.
    pub fn coefficient(&self, expo: &[u32]) -> f64 {
        self.terms.get(expo).copied().unwrap_or(0.0)
    }

    /// True when some term has a positive exponent on variable `j` (1-based).
    pub fn depends_on(&self, j: usize) -> bool {
        self.terms.keys().any(|e| e[j - 1] > 0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (expo, c) in &self.terms {
            let mut prod = *c;
            for (xj, &e) in x.iter().zip(expo) {
                if e > 0 {
                    prod *= xj.powi(e as i32);
                }
            }
            acc += prod;
        }
        acc
    }

    /// Partial derivative with respect to variable `j` (1-based), evaluated
    /// at `x`.
    pub fn eval_grad(&self, x: &[f64], j: usize) -> f64 {
        let jj = j - 1;
        let mut acc = 0.0;
        for (expo, c) in &self.terms {
            let ej = expo[jj];
            if ej == 0 {
                continue;
            }
            let mut prod = *c * ej as f64;
            for (k, (xk, &e)) in x.iter().zip(expo).enumerate() {
                let e = if k == jj { e - 1 } else { e };
                if e > 0 {
                    prod *= xk.powi(e as i32);
                }
            }
            acc += prod;
        }
        acc
    }

    /// Full gradient at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (1..=self.dim).map(|j| self.eval_grad(x, j)).collect()
    }

    /// Drops every term with a positive exponent outside `keep`; those terms
    /// vanish when the remaining variables are zero.
    pub fn restrict(&self, keep: &IndexSet) -> MonomialForm {
        let terms = self
            .terms
            .iter()
            .filter(|(expo, _)| {
                expo.iter()
                    .enumerate()
                    .all(|(k, &e)| e == 0 || keep.contains(k + 1))
            })
            .map(|(e, &c)| (e.clone(), c))
            .collect();
        MonomialForm {
            component: self.component,
            dim: self.dim,
            degree: self.degree,
            terms,
        }
    }

    /// True when every term's coefficient is strictly positive (and at least
    /// one term exists).
    pub fn all_coeffs_positive(&self) -> bool {
        !self.terms.is_empty() && self.terms.values().all(|&c| c > 0.0)
    }

    /// True when every term's coefficient is strictly negative (and at least
    /// one term exists).
    pub fn all_coeffs_negative(&self) -> bool {
        !self.terms.is_empty() && self.terms.values().all(|&c| c < 0.0)
    }

    /// Largest absolute coefficient among terms with positive exponent on
    /// variable `j`; zero when none.
    pub fn max_abs_coeff_on(&self, j: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(e, _)| e[j - 1] > 0)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
    }
}

impl std::fmt::Display for MonomialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (expo, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if k == 0 && sign == "+" {
                // leading plus omitted
            } else {
                write!(f, "{sign} ")?;
            }
            let mag = c.abs();
            let mut wrote = false;
            if mag != 1.0 {
                write!(f, "{mag}")?;
                wrote = true;
            }
            for (j, &e) in expo.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote {
                    write!(f, "*")?;
                }
                write!(f, "x{}", j + 1)?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
                wrote = true;
            }
            if !wrote {
                write!(f, "{mag}")?;
            }
            if k + 1 < self.terms.len() {
                write!(f, " ")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aggregation_matches_hand_count() {
        // Component 2 of example-3.1 is x2^3 - x1^2*x2.
        let t = fixtures::example_3_1();
        let mf = t.monomial_form(2).unwrap();
        assert_eq!(mf.term_count(), 2);
        assert_eq!(mf.coefficient(&[0, 3]), 1.0);
        assert_eq!(mf.coefficient(&[2, 1]), -1.0);
        // Component 1 is x1*x2^2.
        let mf1 = t.monomial_form(1).unwrap();
        assert_eq!(mf1.coefficient(&[1, 2]), 1.0);
        assert_eq!(mf1.term_count(), 1);
    }

    #[test]
    fn zero_tensor_has_empty_forms() {
        let z = crate::tensor::Tensor::zeros(4, 3).unwrap();
        for i in 1..=3 {
            assert!(z.monomial_form(i).unwrap().is_zero());
            for j in 1..=3 {
                assert!(!z.component_depends_on(i, j).unwrap());
            }
        }
    }

    #[test]
    fn example_3_3_single_term() {
        // a_{122...2} = 1, so component 1 is x2^{m-1} and the rest vanish.
        let t = fixtures::example_3_3();
        let mf = t.monomial_form(1).unwrap();
        assert_eq!(mf.coefficient(&[0, 2]), 1.0);
        assert_eq!(mf.term_count(), 1);
        assert!(t.monomial_form(2).unwrap().is_zero());
        assert!(!t.component_depends_on(1, 1).unwrap());
        assert!(t.component_depends_on(1, 2).unwrap());
    }

    #[test]
    fn dependence_on_example_3_1() {
        let t = fixtures::example_3_1();
        assert!(t.component_depends_on(2, 2).unwrap());
        assert!(t.component_depends_on(2, 1).unwrap());
        assert!(t.component_depends_on(1, 1).unwrap());
    }

    #[test]
    fn cancellation_drops_terms() {
        // a_112 = 1 and a_121 = -1 aggregate to the same monomial x1*x2 and cancel.
        let t =
            crate::tensor::Tensor::from_entries(3, 2, vec![(vec![1, 1, 2], 1.0), (vec![1, 2, 1], -1.0)])
                .unwrap();
        let mf = t.monomial_form(1).unwrap();
        assert!(mf.is_zero());
        assert!(!t.component_depends_on(1, 2).unwrap());
    }

    #[test]
    fn evaluation_agrees_with_apply() {
        // 100 random points per component, relative tolerance 1e-12.
        let tensors = [
            fixtures::example_3_1(),
            fixtures::example_3_2(),
            fixtures::example_3_4(),
            fixtures::example_4_2(),
            crate::corpus::example51_family(5).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in &tensors {
            let forms = t.monomial_forms();
            for _ in 0..100 {
                let x: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let ax = t.apply(&x).unwrap();
                for (i, mf) in forms.iter().enumerate() {
                    let v = mf.eval(&x);
                    assert!(
                        (v - ax[i]).abs() <= 1e-12 * (1.0 + ax[i].abs()),
                        "component {} mismatch: {} vs {}",
                        i + 1,
                        v,
                        ax[i]
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = fixtures::example_3_1();
        let mf = t.monomial_form(2).unwrap();
        let x = [1.3, -0.7];
        let h = 1e-6;
        for j in 1..=2 {
            let mut xp = x;
            let mut xm = x;
            xp[j - 1] += h;
            xm[j - 1] -= h;
            let fd = (mf.eval(&xp) - mf.eval(&xm)) / (2.0 * h);
            assert!((mf.eval_grad(&x, j) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn restriction_drops_foreign_terms() {
        let t = fixtures::example_3_1();
        let mf = t.monomial_form(2).unwrap(); // x2^3 - x1^2*x2
        let only2 = mf.restrict(&IndexSet::singleton(2));
        assert_eq!(only2.term_count(), 1);
        assert_eq!(only2.coefficient(&[0, 3]), 1.0);
        let only1 = mf.restrict(&IndexSet::singleton(1));
        assert!(only1.is_zero());
    }

    #[test]
    fn display_is_readable() {
        let t = fixtures::example_3_1();
        assert_eq!(t.monomial_form(2).unwrap().to_string(), "x2^3 - x1^2*x2");
        assert_eq!(t.monomial_form(1).unwrap().to_string(), "x1*x2^2");
        let z = crate::tensor::Tensor::zeros(3, 2).unwrap();
        assert_eq!(z.monomial_form(1).unwrap().to_string(), "0");
    }
}
