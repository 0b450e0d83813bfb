//! Derivative-free minimizers used for parameter estimation.
//!
//! [`minimize_scalar`] is Brent's bounded scalar search (golden section with
//! parabolic steps); [`nelder_mead`] is a box-constrained Nelder-Mead simplex
//! that projects trial points back onto the bounds.

use crate::error::{invalid, Error, Result};

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
}

/// Minimizes `f` on `[lo, hi]` to absolute tolerance `tol` in `x`.
pub fn minimize_scalar(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarMin> {
    if !(hi > lo) {
        return Err(invalid(format!("empty search interval [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    if !fx.is_finite() {
        return Err(Error::Numerical(format!("objective is {fx} at x = {x}")));
    }
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut evals = 1;
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = 1e-10 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through (v, fv), (w, fw), (x, fx)
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let mut fu = f(u);
        evals += 1;
        if fu.is_nan() {
            fu = f64::INFINITY;
        }
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok(ScalarMin { x, f: fx, evals })
}

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Convergence tolerance on both simplex spread in x and in f.
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub f_start: f64,
    pub iterations: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Box-constrained Nelder-Mead (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Trial points are clamped onto `[lower, upper]`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let n = start.len();
    if n == 0 || opts.lower.len() != n || opts.upper.len() != n {
        return Err(invalid("start point and bounds must share a non-zero dimension"));
    }
    if opts.lower.iter().zip(&opts.upper).any(|(l, u)| !(u >= l)) {
        return Err(invalid("lower bound exceeds upper bound"));
    }
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(opts.lower[i], opts.upper[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x0 = start.to_vec();
    clamp(&mut x0);
    let f0 = eval(&x0, &mut evals);
    if !f0.is_finite() {
        return Err(Error::Numerical(format!("objective is not finite at start {x0:?}")));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for i in 0..n {
        let mut xi = x0.clone();
        let step = if xi[i] != 0.0 { 0.05 * xi[i] } else { 0.00025 };
        xi[i] += step;
        if xi[i] > opts.upper[i] {
            xi[i] = x0[i] - step;
        }
        clamp(&mut xi);
        let fi = eval(&xi, &mut evals);
        simplex.push((xi, fi));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let f_spread = simplex.iter().map(|s| (s.1 - best.1).abs()).fold(0.0, f64::max);
        let x_spread = simplex
            .iter()
            .flat_map(|s| s.0.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.tol && x_spread <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += x[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |coef: f64| {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + coef * (centroid[i] - worst.0[i])).collect();
            clamp(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection beat the worst point, else inside
        let (xc, fc) = if fr < worst.1 {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for s in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = (0..n).map(|i| x_best[i] + 0.5 * (s.0[i] - x_best[i])).collect();
            clamp(&mut p);
            let fp = eval(&p, &mut evals);
            *s = (p, fp);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    if !fx.is_finite() {
        return Err(Error::Numerical("objective diverged".into()));
    }
    Ok(NelderMeadResult {
        x,
        f: fx,
        f_start: f0,
        iterations,
        evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_quadratic() {
        let r = minimize_scalar(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-8, 200).unwrap();
        assert!((r.x - 0.3).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn scalar_minimum_at_bound() {
        let r = minimize_scalar(|x| x, 1e-4, 1.0, 1e-8, 200).unwrap();
        assert!(r.x < 1e-3);
    }

    #[test]
    fn nelder_mead_rosenbrock_in_box() {
        let opts = NelderMeadOptions {
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
            tol: 1e-10,
            max_iter: 2000,
        };
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{r:?}");
        assert!(r.f <= r.f_start);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let opts = NelderMeadOptions {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            tol: 1e-8,
            max_iter: 500,
        };
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2), &[0.1, 0.1], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && r.x[1].abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn nelder_mead_rejects_nan_start() {
        let opts = NelderMeadOptions {
            lower: vec![0.0],
            upper: vec![1.0],
            tol: 1e-6,
            max_iter: 10,
        };
        assert!(nelder_mead(|_| f64::NAN, &[0.5], &opts).is_err());
    }
}
