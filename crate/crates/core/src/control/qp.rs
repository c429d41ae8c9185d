//! Dense strictly convex QP by the Goldfarb-Idnani dual active-set method.
//!
//! ```text
//! minimize   1/2 x' H x + g' x
//! subject to C x >= d
//! ```
//!
//! The method starts from the unconstrained minimum and adds violated
//! constraints one at a time, so no feasible starting point is needed and
//! infeasibility is detected as the constraint that cannot be added.

use crate::linalg::{cholesky_solve, dot, DMat};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    /// Indices of the active constraints at the solution.
    pub active: Vec<usize>,
    /// Lagrange multipliers matching `active`.
    pub multipliers: Vec<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraint {0} cannot be satisfied together with the active set")]
    Infeasible(usize),
    #[error("iteration limit reached")]
    IterationLimit,
}

fn column_solve<T: Real>(l: &DMat<T>, c: &DMat<T>, row: usize) -> Vec<T> {
    cholesky_solve(l, c.row(row))
}

/// Re-solves the KKT system of the final active set directly. The dual
/// iterations accumulate round-off along nearly flat directions of `H`; one
/// pivoted solve restores the active constraints to working precision.
fn polish<T: Real>(h: &DMat<T>, g: &[T], c: &DMat<T>, d: &[T], active: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
    if active.is_empty() {
        return None;
    }
    let n = h.rows();
    let q = active.len();
    let mut k = DMat::zeros(n + q, n + q);
    let mut rhs = vec![T::zero(); n + q];
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = h[(i, j)];
        }
        rhs[i] = -g[i];
    }
    for (a, &ci) in active.iter().enumerate() {
        for j in 0..n {
            k[(n + a, j)] = c[(ci, j)];
            k[(j, n + a)] = -c[(ci, j)];
        }
        rhs[n + a] = d[ci];
    }
    let sol = k.solve(&rhs)?;
    let (x, u) = sol.split_at(n);
    if u.iter().any(|v| *v < -T::epsilon().sqrt()) {
        return None;
    }
    Some((x.to_vec(), u.to_vec()))
}

pub fn solve_qp<T: Real>(h: &DMat<T>, g: &[T], c: &DMat<T>, d: &[T]) -> Result<QpSolution<T>, QpError> {
    let n = h.rows();
    assert_eq!(h.cols(), n, "square Hessian required");
    assert_eq!(g.len(), n, "gradient dimension");
    assert_eq!(c.cols(), n, "constraint dimension");
    assert_eq!(c.rows(), d.len(), "constraint count");
    let m = c.rows();
    let l = h.cholesky().ok_or(QpError::NotPositiveDefinite)?;

    let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();
    let mut x = cholesky_solve(&l, &neg_g);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<T> = Vec::new();

    let row_norms: Vec<T> = (0..m).map(|i| dot(c.row(i), c.row(i)).sqrt()).collect();
    let feas_tol = T::epsilon().sqrt() * T::lit(1e-3);
    let zero_tol = T::epsilon() * T::lit(1e3);
    let max_iter = 10 * (n + m) + 100;
    let mut iterations = 0;

    loop {
        let xnorm = dot(&x, &x).sqrt();
        let mut worst: Option<(usize, T)> = None;
        for i in 0..m {
            if active.contains(&i) || row_norms[i] == T::zero() {
                continue;
            }
            let s = dot(c.row(i), &x) - d[i];
            let tol = feas_tol * (T::one() + d[i].abs() + row_norms[i] * xnorm);
            if s < -tol {
                let scaled = s / row_norms[i];
                if worst.is_none_or(|(_, w)| scaled < w) {
                    worst = Some((i, scaled));
                }
            }
        }
        let Some((p, _)) = worst else {
            if let Some((xp, up)) = polish(h, g, c, d, &active) {
                let ok = (0..m).all(|i| {
                    let tol = feas_tol * (T::one() + d[i].abs() + row_norms[i] * xnorm);
                    dot(c.row(i), &xp) - d[i] >= -tol
                });
                if ok {
                    x = xp;
                    u = up;
                }
            }
            return Ok(QpSolution {
                x,
                active,
                multipliers: u,
                iterations,
            });
        };

        let np = c.row(p).to_vec();
        let mut u_plus = u.clone();
        u_plus.push(T::zero());

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let q = active.len();
            let hn = cholesky_solve(&l, &np);
            let (z, r) = if q == 0 {
                (hn.clone(), Vec::new())
            } else {
                let hcols: Vec<Vec<T>> = active.iter().map(|&j| column_solve(&l, c, j)).collect();
                let mut mm = DMat::zeros(q, q);
                for a in 0..q {
                    for b in 0..q {
                        mm[(a, b)] = dot(c.row(active[a]), &hcols[b]);
                    }
                }
                let rhs: Vec<T> = active.iter().map(|&j| dot(c.row(j), &hn)).collect();
                let r = mm.solve(&rhs).ok_or(QpError::Infeasible(p))?;
                let mut z = hn.clone();
                for (rb, hc) in r.iter().zip(&hcols) {
                    for (zi, hi) in z.iter_mut().zip(hc) {
                        *zi -= *rb * *hi;
                    }
                }
                (z, r)
            };

            let mut t1 = T::infinity();
            let mut drop_k = None;
            for (i, ri) in r.iter().enumerate() {
                if *ri > T::zero() {
                    let ratio = u_plus[i] / *ri;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_k = Some(i);
                    }
                }
            }
            let zn = dot(&z, &np);
            let full = zn > zero_tol * dot(&np, &hn).max(T::min_positive_value());
            let sp = dot(&np, &x) - d[p];
            let t2 = if full { (-sp / zn).max(T::zero()) } else { T::infinity() };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible(p));
            }

            for (ui, ri) in u_plus.iter_mut().zip(&r) {
                *ui -= t * *ri;
            }
            u_plus[q] += t;

            if full {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * *zi;
                }
            }
            if full && t2 <= t1 {
                active.push(p);
                u = u_plus;
                break;
            }
            let k = drop_k.expect("partial step has a blocking constraint");
            active.remove(k);
            u_plus.remove(k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMat<f64> {
        let mut m = DMat::zeros(v.len(), v.len());
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] = *x;
        }
        m
    }

    #[test]
    fn unconstrained_minimum() {
        let s = solve_qp(&diag(&[2.0, 4.0]), &[-2.0, -8.0], &DMat::zeros(0, 2), &[]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn box_projection() {
        // min |x - (3, -1)|^2 s.t. 0 <= x <= 1
        let c = DMat::from_rows(4, 2, vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let d = [0.0, -1.0, 0.0, -1.0];
        let s = solve_qp(&diag(&[2.0, 2.0]), &[-6.0, 2.0], &c, &d).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert_eq!(s.active.len(), 2);
        assert!(s.multipliers.iter().all(|u| *u >= 0.0));
    }

    #[test]
    fn halfplane_projection_matches_closed_form() {
        // min |x|^2 s.t. x0 + x1 >= 2  ->  (1, 1)
        let c = DMat::from_rows(1, 2, vec![1.0, 1.0]);
        let s = solve_qp(&diag(&[2.0, 2.0]), &[0.0, 0.0], &c, &[2.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!((s.multipliers[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let c = DMat::from_rows(2, 1, vec![1.0, -1.0]);
        let err = solve_qp(&diag(&[1.0]), &[0.0], &c, &[2.0, -1.0]).unwrap_err();
        assert!(matches!(err, QpError::Infeasible(_)));
    }

    #[test]
    fn redundant_constraints_do_not_break_the_active_set() {
        let c = DMat::from_rows(3, 2, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let s = solve_qp(&diag(&[2.0, 2.0]), &[4.0, 0.0], &c, &[1.0, 1.0, 2.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_projected_gradient_on_random_problems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = 3;
            let a = DMat::from_rows(4, n, (0..4 * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let mut h = a.transpose().matmul(&a);
            for i in 0..n {
                h[(i, i)] += 0.1;
            }
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            // feasible box around a random center
            let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..0.0)).collect();
            let mut rows = Vec::new();
            let mut d = Vec::new();
            for i in 0..n {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                rows.extend(r.iter().copied());
                d.push(lo[i]);
                r[i] = -1.0;
                rows.extend(r);
                d.push(-(lo[i] + 1.0));
            }
            let c = DMat::from_rows(2 * n, n, rows);
            let s = solve_qp(&h, &g, &c, &d).unwrap();
            let obj = |x: &[f64]| 0.5 * dot(x, &h.mul_vec(x)) + dot(&g, x);
            // projected gradient descent oracle
            let mut y = vec![0.0; n];
            for i in 0..n {
                y[i] = lo[i] + 0.5;
            }
            for _ in 0..20_000 {
                let grad: Vec<f64> = h.mul_vec(&y).iter().zip(&g).map(|(a, b)| a + b).collect();
                for i in 0..n {
                    y[i] = (y[i] - 0.05 * grad[i]).clamp(lo[i], lo[i] + 1.0);
                }
            }
            assert!(obj(&s.x) <= obj(&y) + 1e-9);
            for (i, di) in d.iter().enumerate() {
                assert!(dot(c.row(i), &s.x) - di >= -1e-9);
            }
        }
    }
}
