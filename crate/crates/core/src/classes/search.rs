//! Numerical machinery behind the falsification searches: simplex and sphere
//! projections, a projected subgradient loop for min-max objectives, a small
//! Levenberg-Marquardt least-squares driver, and pair refinement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{inf_norm, solve_linear, sq_norm};

/// Euclidean projection onto the unit simplex `{x >= 0, sum x = 1}`.
pub(crate) fn project_simplex(x: &mut [f64]) {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    let mut found = false;
    for (k, &v) in u.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (k as f64 + 1.0);
        if v - t > 0.0 {
            theta = t;
            found = true;
        }
    }
    if !found {
        // all mass collapses to the largest coordinate
        let arg = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        x.iter_mut().for_each(|v| *v = 0.0);
        x[arg] = 1.0;
        return;
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

/// Clamps to the nonnegative orthant and rescales to the unit 2-sphere.
pub(crate) fn project_nonneg_sphere(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let norm = sq_norm(x).sqrt();
    if norm == 0.0 {
        let k = x.len() as f64;
        x.iter_mut().for_each(|v| *v = 1.0 / k.sqrt());
    } else {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Random point on the unit simplex.
pub(crate) fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| -rng.random_range(1e-12..1.0f64).ln())
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random nonnegative point on the unit 2-sphere.
pub(crate) fn random_nonneg_sphere(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0f64)).collect();
    project_nonneg_sphere(&mut v);
    v
}

/// Projected subgradient descent on `f(x) = max_k value(x, k)`. Returns the
/// best point and value found; descent directions average the gradients of
/// the near-maximal components.
pub(crate) fn minimize_max(
    start: &[f64],
    components: usize,
    value: &dyn Fn(&[f64], usize) -> f64,
    grad: &dyn Fn(&[f64], usize) -> Vec<f64>,
    project: &dyn Fn(&mut [f64]),
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let fmax = |x: &[f64]| {
        (0..components)
            .map(|k| value(x, k))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut x = start.to_vec();
    project(&mut x);
    let mut fx = fmax(&x);
    let mut scale = 0.5f64;
    for _ in 0..max_iters {
        let vals: Vec<f64> = (0..components).map(|k| value(&x, k)).collect();
        let top = vals.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let act_tol = 1e-9 * (1.0 + top.abs());
        let mut dir = vec![0.0; n];
        for (k, &v) in vals.iter().enumerate() {
            if v >= top - act_tol {
                for (d, g) in dir.iter_mut().zip(grad(&x, k)) {
                    *d -= g;
                }
            }
        }
        let norm = inf_norm(&dir);
        if norm == 0.0 {
            break;
        }
        dir.iter_mut().for_each(|d| *d /= norm);
        let mut improved = false;
        let mut t = scale;
        for _ in 0..12 {
            let mut cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            project(&mut cand);
            let fc = fmax(&cand);
            if fc < fx - 1e-15 {
                x = cand;
                fx = fc;
                scale = (t * 2.0).min(1.0);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            scale *= 0.5;
            if scale < 1e-12 {
                break;
            }
        }
    }
    (x, fx)
}

/// Levenberg-Marquardt on a residual vector, optionally clamped to the
/// nonnegative orthant after each step. Returns the point and the final
/// squared residual norm.
pub(crate) fn levenberg_marquardt(
    start: &[f64],
    residuals: usize,
    eval: &dyn Fn(&[f64], &mut [f64]),
    jac: &dyn Fn(&[f64], &mut [f64]),
    clamp_nonneg: bool,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = start.to_vec();
    if clamp_nonneg {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut r = vec![0.0; residuals];
    let mut j = vec![0.0; residuals * n];
    eval(&x, &mut r);
    let mut f = sq_norm(&r);
    let mut lambda = 1e-3;
    for _ in 0..max_iters {
        if f < 1e-28 {
            break;
        }
        jac(&x, &mut j);
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for row in 0..residuals {
            for c1 in 0..n {
                let jr = j[row * n + c1];
                if jr == 0.0 {
                    continue;
                }
                b[c1] -= jr * r[row];
                for c2 in 0..n {
                    a[c1 * n + c2] += jr * j[row * n + c2];
                }
            }
        }
        let diag_scale = (0..n)
            .map(|i| a[i * n + i])
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let mut accepted = false;
        for _ in 0..8 {
            let mut am = a.clone();
            for i in 0..n {
                am[i * n + i] += lambda * diag_scale;
            }
            let mut d = b.clone();
            if solve_linear(&mut am, &mut d, n) {
                let mut cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + di).collect();
                if clamp_nonneg {
                    cand.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                let mut rc = vec![0.0; residuals];
                eval(&cand, &mut rc);
                let fc = sq_norm(&rc);
                if fc < f {
                    x = cand;
                    r = rc;
                    f = fc;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (x, f)
}

/// Greedy coordinate descent on a pair objective. Coordinates where `diff`
/// is false move together so the pair keeps its equality pattern.
pub(crate) fn refine_pair(
    x: &mut [f64],
    y: &mut [f64],
    diff: &[bool],
    objective: &dyn Fn(&[f64], &[f64]) -> f64,
    sweeps: usize,
) -> f64 {
    let steps = [1.0, 0.5, 0.2, 0.05, 0.01];
    let mut best = objective(x, y);
    for _ in 0..sweeps {
        let mut improved = false;
        for c in 0..x.len() {
            for &s in &steps {
                for dir in [1.0, -1.0] {
                    let delta = s * dir;
                    x[c] += delta;
                    if !diff[c] {
                        y[c] += delta;
                    }
                    let v = objective(x, y);
                    if v < best - 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        x[c] -= delta;
                        if !diff[c] {
                            y[c] -= delta;
                        }
                    }
                }
            }
            if diff[c] {
                for &s in &steps {
                    for dir in [1.0, -1.0] {
                        let delta = s * dir;
                        y[c] += delta;
                        let v = objective(x, y);
                        if v < best - 1e-15 {
                            best = v;
                            improved = true;
                        } else {
                            y[c] -= delta;
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn simplex_projection_is_feasible_and_idempotent() {
        let cases = [
            vec![0.5, 0.5],
            vec![2.0, -1.0],
            vec![-3.0, -4.0, -5.0],
            vec![0.2, 0.9, 0.4],
        ];
        for case in cases {
            let mut x = case.clone();
            project_simplex(&mut x);
            assert!(x.iter().all(|&v| v >= 0.0), "{case:?} -> {x:?}");
            let s: f64 = x.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{case:?} -> {x:?}");
            let mut again = x.clone();
            project_simplex(&mut again);
            for (a, b) in x.iter().zip(&again) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_projection_preserves_interior_points() {
        let mut x = vec![0.25, 0.75];
        project_simplex(&mut x);
        assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sphere_projection_normalizes() {
        let mut x = vec![-1.0, 3.0, 4.0];
        project_nonneg_sphere(&mut x);
        assert_eq!(x[0], 0.0);
        assert!((sq_norm(&x) - 1.0).abs() < 1e-12);
        let mut zero = vec![0.0, 0.0];
        project_nonneg_sphere(&mut zero);
        assert!((sq_norm(&zero) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_points_live_on_their_sets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = random_simplex(&mut rng, 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&v| v > 0.0));
        let u = random_nonneg_sphere(&mut rng, 4);
        assert!((sq_norm(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimize_max_finds_a_simplex_vertex() {
        // min over the simplex of max(x1, 2*x2) is 0 at e3... with 3 coords the
        // optimum puts all mass on x3.
        let (x, f) = minimize_max(
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            2,
            &|x, k| if k == 0 { x[0] } else { 2.0 * x[1] },
            &|_, k| {
                if k == 0 {
                    vec![1.0, 0.0, 0.0]
                } else {
                    vec![0.0, 2.0, 0.0]
                }
            },
            &project_simplex,
            300,
        );
        assert!(f < 1e-6, "f = {f}, x = {x:?}");
    }

    #[test]
    fn lm_fits_an_overdetermined_root() {
        // residuals: x1 - 1, x2 - 2, (x1 + x2) - 3: consistent root (1, 2).
        let (x, f) = levenberg_marquardt(
            &[4.0, -1.0],
            3,
            &|x, r| {
                r[0] = x[0] - 1.0;
                r[1] = x[1] - 2.0;
                r[2] = x[0] + x[1] - 3.0;
            },
            &|_, j| {
                j.copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
            },
            false,
            100,
        );
        assert!(f < 1e-20);
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pair_refinement_improves_the_objective() {
        // objective: (x0 - y0) * (x0^2 - y0^2); diff only in coordinate 0.
        // Starting on the negative side, descent deepens the violation.
        let mut x = vec![-1.0, 0.5];
        let mut y = vec![0.9, 0.5];
        let diff = [true, false];
        let obj = |x: &[f64], y: &[f64]| (x[0] - y[0]) * (x[0] * x[0] - y[0] * y[0]);
        let before = obj(&x, &y);
        assert!(before < 0.0);
        let after = refine_pair(&mut x, &mut y, &diff, &obj, 10);
        assert!(after < before);
        assert_eq!(x[1], y[1]); // tied coordinate stayed tied
        assert!(after < -5.0, "after = {after}");
    }
}
