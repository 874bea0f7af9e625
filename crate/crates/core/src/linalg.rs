//! Small dense linear algebra helpers for the Newton and least-squares
//! drivers. Systems here are tiny (at most the support size plus one).

/// Solves `a * x = b` in place via LU with partial pivoting; `a` is row-major
/// `n x n`. Returns `false` when the matrix is numerically singular.
pub(crate) fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    let tiny = 1e-14 * scale;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() <= tiny {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    true
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

pub(crate) fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_systems() {
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let mut b = vec![5.0, 10.0];
        assert!(solve_linear(&mut a, &mut b, 2));
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_singularity() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(!solve_linear(&mut a, &mut b, 2));
        let mut z = vec![0.0; 4];
        let mut b = vec![1.0, 2.0];
        assert!(!solve_linear(&mut z, &mut b, 2));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![3.0, 7.0];
        assert!(solve_linear(&mut a, &mut b, 2));
        assert_eq!(b, vec![7.0, 3.0]);
    }

    #[test]
    fn norms() {
        assert_eq!(inf_norm(&[-3.0, 2.0]), 3.0);
        assert_eq!(inf_dist(&[1.0, 2.0], [1.5, 0.0].as_slice()), 2.0);
        assert_eq!(sq_norm(&[3.0, 4.0]), 25.0);
    }
}
