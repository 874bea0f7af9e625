//! Dense real tensors of order `m` and dimension `n`, the multilinear map
//! `x -> A x^{m-1}`, and principal sub-tensors.
//!
//! All indices in the public API are 1-based, matching the text formats.

use crate::error::TensorError;
use crate::monomial::MonomialForm;

/// Hard cap on dense storage; construction beyond this is rejected.
pub const MAX_DENSE_COEFFS: usize = 10_000_000;

/// Sorted, duplicate-free set of 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet {
    members: Vec<usize>,
}

impl IndexSet {
    /// Builds a set from arbitrary 1-based indices; sorts and deduplicates.
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self, TensorError> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if members.iter().any(|&i| i == 0) {
            return Err(TensorError::BadIndexSet {
                dim: 0,
                reason: "indices are 1-based; 0 is not valid".into(),
            });
        }
        members.sort_unstable();
        members.dedup();
        Ok(IndexSet { members })
    }

    pub fn empty() -> Self {
        IndexSet { members: Vec::new() }
    }

    pub fn singleton(i: usize) -> Self {
        IndexSet { members: vec![i] }
    }

    /// The full set `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        IndexSet {
            members: (1..=n).collect(),
        }
    }

    /// `{1, ..., n}` minus this set.
    pub fn complement(&self, n: usize) -> Self {
        IndexSet {
            members: (1..=n).filter(|i| !self.contains(*i)).collect(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// True when every member lies in `[1, n]`.
    pub fn within(&self, n: usize) -> bool {
        self.members.last().is_none_or(|&max| max <= n)
    }

    /// Support bitmask; unique per subset of `[1, 64]`.
    pub fn bitmask(&self) -> u64 {
        self.members.iter().fold(0u64, |acc, &i| acc | 1u64 << (i - 1))
    }
}

impl std::fmt::Display for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Dense `m`-order `n`-dimensional real tensor.
///
/// Coefficients are stored row-major over index tuples `(i1, ..., im)`;
/// the sparse entry list used at construction is retained.
#[derive(Debug, Clone)]
pub struct Tensor {
    order: usize,
    dim: usize,
    coeffs: Vec<f64>,
    entries: Vec<(Vec<usize>, f64)>,
}

fn check_shape(order: usize, dim: usize) -> Result<usize, TensorError> {
    if order < 2 {
        return Err(TensorError::OrderTooSmall(order));
    }
    if dim < 1 {
        return Err(TensorError::DimTooSmall(dim));
    }
    let len = dim
        .checked_pow(order as u32)
        .filter(|&l| l <= MAX_DENSE_COEFFS)
        .ok_or(TensorError::TooLarge { order, dim })?;
    Ok(len)
}

impl Tensor {
    /// Builds a tensor from sparse `(index-tuple, value)` entries; unlisted
    /// coefficients are zero. Duplicate tuples resolve last-write-wins with a
    /// warning.
    pub fn from_entries(
        order: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self, TensorError> {
        let len = check_shape(order, dim)?;
        let mut coeffs = vec![0.0; len];
        let mut seen = vec![false; len];
        let entries: Vec<(Vec<usize>, f64)> = entries.into_iter().collect();
        for (tuple, value) in &entries {
            if tuple.len() != order {
                return Err(TensorError::TupleLength {
                    tuple: tuple.clone(),
                    got: tuple.len(),
                    expected: order,
                });
            }
            if tuple.iter().any(|&i| i == 0 || i > dim) {
                return Err(TensorError::IndexOutOfRange {
                    tuple: tuple.clone(),
                    dim,
                });
            }
            let flat = flat_index(tuple, dim);
            if seen[flat] {
                log::warn!("duplicate tensor entry at {tuple:?}; last write wins");
            }
            seen[flat] = true;
            coeffs[flat] = *value;
        }
        Ok(Tensor {
            order,
            dim,
            coeffs,
            entries,
        })
    }

    /// Builds a tensor from a full dense coefficient array (row-major).
    /// The retained entry list is the nonzero coefficients.
    pub fn from_coeffs(order: usize, dim: usize, coeffs: Vec<f64>) -> Result<Self, TensorError> {
        let len = check_shape(order, dim)?;
        if coeffs.len() != len {
            return Err(TensorError::DimMismatch {
                got: coeffs.len(),
                expected: len,
            });
        }
        let entries = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(flat, &c)| (tuple_from_flat(flat, order, dim), c))
            .collect();
        Ok(Tensor {
            order,
            dim,
            coeffs,
            entries,
        })
    }

    /// Zero tensor of the given shape.
    pub fn zeros(order: usize, dim: usize) -> Result<Self, TensorError> {
        Self::from_entries(order, dim, Vec::new())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The sparse entry list recorded at construction.
    pub fn entries(&self) -> &[(Vec<usize>, f64)] {
        &self.entries
    }

    /// Coefficient at a 1-based index tuple.
    pub fn coeff(&self, tuple: &[usize]) -> Result<f64, TensorError> {
        if tuple.len() != self.order {
            return Err(TensorError::TupleLength {
                tuple: tuple.to_vec(),
                got: tuple.len(),
                expected: self.order,
            });
        }
        if tuple.iter().any(|&i| i == 0 || i > self.dim) {
            return Err(TensorError::IndexOutOfRange {
                tuple: tuple.to_vec(),
                dim: self.dim,
            });
        }
        Ok(self.coeffs[flat_index(tuple, self.dim)])
    }

    /// 1-based tuple for a flat coefficient position.
    pub fn tuple_of(&self, flat: usize) -> Vec<usize> {
        tuple_from_flat(flat, self.order, self.dim)
    }

    /// The map `x -> A x^{m-1}`: component `i` sums
    /// `a_{i i2 ... im} * x_{i2} * ... * x_{im}` over all trailing tuples.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TensorError> {
        if x.len() != self.dim {
            return Err(TensorError::DimMismatch {
                got: x.len(),
                expected: self.dim,
            });
        }
        let block = self.dim.pow((self.order - 1) as u32);
        let mut out = vec![0.0; self.dim];
        for (flat, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let comp = flat / block;
            let mut rest = flat % block;
            let mut prod = c;
            for _ in 1..self.order {
                prod *= x[rest % self.dim];
                rest /= self.dim;
            }
            out[comp] += prod;
        }
        Ok(out)
    }

    /// The scalar form `A x^m = x^T (A x^{m-1})`.
    pub fn apply_scalar(&self, x: &[f64]) -> Result<f64, TensorError> {
        let ax = self.apply(x)?;
        Ok(x.iter().zip(&ax).map(|(a, b)| a * b).sum())
    }

    /// Restriction of every index to `j`, relabeled to `[1, |j|]` preserving
    /// the order of `j`.
    pub fn principal_sub_tensor(&self, j: &IndexSet) -> Result<Tensor, TensorError> {
        if j.is_empty() {
            return Err(TensorError::EmptyIndexSet);
        }
        if !j.within(self.dim) {
            return Err(TensorError::BadIndexSet {
                dim: self.dim,
                reason: format!("{j} exceeds dimension"),
            });
        }
        let r = j.len();
        let members = j.members();
        let len = r.pow(self.order as u32);
        let mut coeffs = vec![0.0; len];
        for (sub_flat, slot) in coeffs.iter_mut().enumerate() {
            let sub_tuple = tuple_from_flat(sub_flat, self.order, r);
            let parent_tuple: Vec<usize> = sub_tuple.iter().map(|&k| members[k - 1]).collect();
            *slot = self.coeffs[flat_index(&parent_tuple, self.dim)];
        }
        Tensor::from_coeffs(self.order, r, coeffs)
    }

    /// Canonical per-component polynomial: exponent vectors summing to `m-1`
    /// mapped to aggregated coefficients. Zero aggregates are dropped.
    pub fn monomial_form(&self, i: usize) -> Result<MonomialForm, TensorError> {
        if i == 0 || i > self.dim {
            return Err(TensorError::ComponentOutOfRange(i, self.dim));
        }
        Ok(MonomialForm::build(self, i))
    }

    /// Monomial forms for all components, in component order.
    pub fn monomial_forms(&self) -> Vec<MonomialForm> {
        (1..=self.dim).map(|i| MonomialForm::build(self, i)).collect()
    }

    /// Exact coefficient-level test: does component `i` contain a term with
    /// nonzero coefficient and positive exponent on variable `j`?
    pub fn component_depends_on(&self, i: usize, j: usize) -> Result<bool, TensorError> {
        if j == 0 || j > self.dim {
            return Err(TensorError::ComponentOutOfRange(j, self.dim));
        }
        Ok(self.monomial_form(i)?.depends_on(j))
    }

    /// The `n` diagonal coefficients `a_{i...i}`.
    pub fn diagonal(&self) -> Vec<f64> {
        (1..=self.dim)
            .map(|i| self.coeffs[flat_index(&vec![i; self.order], self.dim)])
            .collect()
    }

    /// First negative coefficient in row-major order, if any.
    pub fn first_negative(&self) -> Option<(Vec<usize>, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, &c)| c < 0.0)
            .map(|(flat, &c)| (self.tuple_of(flat), c))
    }

    /// Numeric coefficient equality with another tensor of the same shape.
    pub fn coeffs_equal(&self, other: &Tensor) -> bool {
        self.order == other.order && self.dim == other.dim && self.coeffs == other.coeffs
    }

    /// Count of nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0.0).count()
    }
}

pub(crate) fn flat_index(tuple: &[usize], dim: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * dim + (i - 1))
}

pub(crate) fn tuple_from_flat(flat: usize, order: usize, dim: usize) -> Vec<usize> {
    let mut tuple = vec![0; order];
    let mut rest = flat;
    for k in (0..order).rev() {
        tuple[k] = rest % dim + 1;
        rest /= dim;
    }
    tuple
}

/// Embeds `values` at the 1-based positions in `j` of a zero vector of
/// length `n`.
pub fn embed(values: &[f64], j: &IndexSet, n: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), j.len());
    let mut out = vec![0.0; n];
    for (v, i) in values.iter().zip(j.iter()) {
        out[i - 1] = *v;
    }
    out
}

/// Gathers the `j`-components of `x`.
pub fn gather(x: &[f64], j: &IndexSet) -> Vec<f64> {
    j.iter().map(|i| x[i - 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;

    #[test]
    fn from_entries_builds_example_tensors() {
        let t = fixtures::example_3_1();
        assert_eq!(t.order(), 4);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.coeff(&[1, 1, 2, 2]).unwrap(), 1.0);
        assert_eq!(t.coeff(&[2, 2, 2, 2]).unwrap(), 1.0);
        assert_eq!(t.coeff(&[2, 1, 1, 2]).unwrap(), -1.0);
        assert_eq!(t.nnz(), 3);

        let t2 = fixtures::example_3_2();
        assert_eq!(t2.coeff(&[1, 2, 2]).unwrap(), 1.0);
        assert_eq!(t2.coeff(&[2, 2, 2]).unwrap(), 1.0);
        assert_eq!(t2.coeff(&[2, 1, 2]).unwrap(), -1.0);
    }

    #[test]
    fn zero_tensor_applies_to_zero() {
        let z = Tensor::zeros(3, 2).unwrap();
        assert_eq!(z.apply(&[1.5, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(z.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn from_entries_rejects_bad_input() {
        assert!(matches!(
            Tensor::from_entries(1, 2, vec![]),
            Err(TensorError::OrderTooSmall(1))
        ));
        assert!(matches!(
            Tensor::from_entries(3, 0, vec![]),
            Err(TensorError::DimTooSmall(0))
        ));
        let err = Tensor::from_entries(3, 2, vec![(vec![1, 3, 1], 1.0)]).unwrap_err();
        match err {
            TensorError::IndexOutOfRange { tuple, dim } => {
                assert_eq!(tuple, vec![1, 3, 1]);
                assert_eq!(dim, 2);
            }
            other => panic!("unexpected error {other}"),
        }
        assert!(Tensor::from_entries(3, 2, vec![(vec![0, 1, 1], 1.0)]).is_err());
        // 10^7 cap: 10^8 coefficients rejected.
        assert!(matches!(
            Tensor::from_entries(8, 10, vec![]),
            Err(TensorError::TooLarge { .. })
        ));
    }

    #[test]
    fn duplicate_entries_last_write_wins() {
        let t = Tensor::from_entries(3, 2, vec![(vec![1, 2, 2], 5.0), (vec![1, 2, 2], 1.0)]).unwrap();
        assert_eq!(t.coeff(&[1, 2, 2]).unwrap(), 1.0);
        assert_eq!(t.entries().len(), 2);
    }

    #[test]
    fn entries_reconstruct_coeffs() {
        let t = fixtures::example_3_1();
        let rebuilt = Tensor::from_entries(t.order(), t.dim(), t.entries().to_vec()).unwrap();
        assert!(rebuilt.coeffs_equal(&t));
    }

    #[test]
    fn apply_matches_closed_forms() {
        // Component maps: (x1*x2^2, x2^3 - x1^2*x2).
        let t = fixtures::example_3_1();
        assert_eq!(t.apply(&[1.0, 2.0]).unwrap(), vec![4.0, 6.0]);
        // (x2^2, x2^2 - x1*x2) at (0, b).
        let t2 = fixtures::example_3_2();
        assert_eq!(t2.apply(&[0.0, 3.0]).unwrap(), vec![9.0, 9.0]);
        assert_eq!(t2.apply(&[0.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let t = fixtures::example_3_2();
        assert!(t.apply(&[1.0]).is_err());
        assert!(t.apply_scalar(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn apply_scalar_closed_forms() {
        // x^T A x^3 = x2^4 for example-3.1.
        let t = fixtures::example_3_1();
        let x = [1.5, -2.0];
        assert!((t.apply_scalar(&x).unwrap() - 16.0).abs() < 1e-12);
        // x^T A x^2 = x2^3 for example-3.2.
        let t2 = fixtures::example_3_2();
        assert!((t2.apply_scalar(&[2.0, 3.0]).unwrap() - 27.0).abs() < 1e-12);
        assert_eq!(t2.apply_scalar(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn principal_sub_tensor_selects_coefficients() {
        let t = fixtures::example_3_1();
        let sub = t.principal_sub_tensor(&IndexSet::singleton(2)).unwrap();
        assert_eq!(sub.order(), 4);
        assert_eq!(sub.dim(), 1);
        assert_eq!(sub.coeffs(), &[1.0]); // a_2222

        let full = t.principal_sub_tensor(&IndexSet::full(2)).unwrap();
        assert!(full.coeffs_equal(&t));

        // example-3.3 has a_{12...2}=1 only, so the {1} sub-tensor is zero.
        let e33 = fixtures::example_3_3();
        let sub1 = e33.principal_sub_tensor(&IndexSet::singleton(1)).unwrap();
        assert_eq!(sub1.coeffs(), &[0.0]);

        assert!(t.principal_sub_tensor(&IndexSet::empty()).is_err());
    }

    #[test]
    fn diagonal_and_negativity_scans() {
        let e41 = fixtures::example_4_1();
        assert_eq!(e41.diagonal(), vec![1.0, 1.0]);
        assert!(e41.first_negative().is_none());

        let e42 = fixtures::example_4_2();
        let (tuple, c) = e42.first_negative().unwrap();
        assert_eq!(tuple, vec![1, 1, 2, 2]);
        assert_eq!(c, -1.0);

        let e31 = fixtures::example_3_1();
        assert_eq!(e31.diagonal()[0], 0.0);
    }

    #[test]
    fn index_set_basics() {
        let j = IndexSet::new([3, 1, 3]).unwrap();
        assert_eq!(j.members(), &[1, 3]);
        assert_eq!(j.complement(4).members(), &[2, 4]);
        assert!(j.contains(3) && !j.contains(2));
        assert!(IndexSet::new([0]).is_err());
        assert_eq!(j.bitmask(), 0b101);
        assert_eq!(format!("{j}"), "{1,3}");
    }

    #[test]
    fn embed_and_gather_roundtrip() {
        let j = IndexSet::new([1, 3]).unwrap();
        let x = embed(&[2.0, 5.0], &j, 4);
        assert_eq!(x, vec![2.0, 0.0, 5.0, 0.0]);
        assert_eq!(gather(&x, &j), vec![2.0, 5.0]);
    }
}
