//! Linear-programming solver for linear quantile regression.
//!
//! The pinball problem `min_β Σ ρ_τ(y_i − x_iβ)` is solved through its dual,
//!
//! ```text
//!   max  yᵀa   s.t.  Xᵀa = (1 − τ) Xᵀ1,   0 ≤ a ≤ 1,
//! ```
//!
//! with a bounded-variable revised simplex whose basis has only `p` rows. The
//! coefficient vector is the simplex multiplier of the equality constraints.
//! When the optimal basis is degenerate the optimal β set is a polyhedron; the
//! solver then returns its minimum-Euclidean-norm point via a small active-set
//! quadratic program.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, invert, solve_square, Matrix};

const REFACTOR_EVERY: usize = 64;

/// Result of a pinball-loss fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PinballFit {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub fn pinball_loss(u: f64, tau: f64) -> f64 {
    if u >= 0.0 {
        tau * u
    } else {
        (tau - 1.0) * u
    }
}

/// Total pinball loss of coefficients `beta` on `(x, y)`.
pub fn pinball_objective(x: &Matrix, y: &[f64], beta: &[f64], tau: f64) -> f64 {
    (0..x.rows())
        .map(|i| pinball_loss(y[i] - dot(x.row(i), beta), tau))
        .sum()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Lower,
    Upper,
    Basic(usize),
}

struct Simplex<'a> {
    x: &'a Matrix,
    p: usize,
    n: usize,
    /// Column `j` of the constraint matrix; artificials are signed unit vectors.
    art_sign: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Values of basic variables, by basis row.
    xb: Vec<f64>,
    binv: Vec<f64>,
    rhs: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
    degenerate_streak: usize,
    tol: f64,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(self.x.row(j));
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j - self.n] = self.art_sign[j - self.n];
        }
    }

    fn upper(&self, j: usize) -> f64 {
        if j < self.n {
            1.0
        } else {
            f64::INFINITY
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Upper => 1.0,
            _ => 0.0,
        }
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        let p = self.p;
        (0..p).map(|r| dot(&self.binv[r * p..(r + 1) * p], col)).collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let p = self.p;
        let mut b = vec![0.0; p * p];
        let mut col = vec![0.0; p];
        for (r, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for k in 0..p {
                b[k * p + r] = col[k];
            }
        }
        self.binv = invert(&b, p)?;
        // x_B = B⁻¹ (b − Σ_nonbasic A_j x_j)
        let mut resid = self.rhs.clone();
        for j in 0..self.n {
            if self.state[j] == State::Upper {
                for (r, v) in resid.iter_mut().zip(self.x.row(j)) {
                    *r -= v;
                }
            }
        }
        self.xb = self.ftran(&resid);
        self.since_refactor = 0;
        Ok(())
    }

    /// Runs simplex iterations maximizing `cost`; artificials are barred from
    /// entering when `allow_artificial` is false.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, allow_artificial: bool) -> Result<()> {
        let p = self.p;
        let total = self.n + p;
        let mut col = vec![0.0; p];
        let max_pivots = 50 * (self.n + p) + 1000;
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Numerical("simplex iteration limit reached".into()));
            }
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
            let mut pi = vec![0.0; p];
            for (r, &c) in cb.iter().enumerate() {
                if c != 0.0 {
                    for k in 0..p {
                        pi[k] += c * self.binv[r * p + k];
                    }
                }
            }
            // Dantzig pricing, falling back to Bland's rule on long degenerate runs
            let bland = self.degenerate_streak > 2 * p + 20;
            let mut enter = None;
            let mut best = self.tol;
            let limit = if allow_artificial { total } else { self.n };
            for j in 0..limit {
                let dir = match self.state[j] {
                    State::Basic(_) => continue,
                    State::Lower => 1.0,
                    State::Upper => -1.0,
                };
                self.column(j, &mut col);
                let d = cost(j) - dot(&pi, &col);
                if dir * d > best {
                    best = dir * d;
                    enter = Some((j, dir));
                    if bland {
                        break;
                    }
                }
            }
            let Some((j, dir)) = enter else {
                return Ok(());
            };

            self.column(j, &mut col);
            let alpha = self.ftran(&col);
            // basic variable r moves by −dir·alpha_r·θ
            let mut theta = self.upper(j);
            let mut leave: Option<(usize, State)> = None;
            let piv_tol = 1e-9;
            for r in 0..p {
                let rate = -dir * alpha[r];
                let bj = self.basis[r];
                if rate < -piv_tol {
                    let room = (self.xb[r] - 0.0).max(0.0) / -rate;
                    if room < theta {
                        theta = room;
                        leave = Some((r, State::Lower));
                    }
                } else if rate > piv_tol {
                    let ub = self.upper(bj);
                    if ub.is_finite() {
                        let room = (ub - self.xb[r]).max(0.0) / rate;
                        if room < theta {
                            theta = room;
                            leave = Some((r, State::Upper));
                        }
                    }
                }
            }
            if !theta.is_finite() {
                return Err(Error::Numerical("unbounded linear program".into()));
            }
            for r in 0..p {
                self.xb[r] -= dir * alpha[r] * theta;
            }
            self.pivots += 1;
            if theta <= 1e-12 {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 { State::Upper } else { State::Lower };
                }
                Some((r, bound)) => {
                    let old = self.basis[r];
                    self.state[old] = bound;
                    self.basis[r] = j;
                    self.state[j] = State::Basic(r);
                    self.xb[r] = self.nonbasic_value_for_entering(dir) + dir * theta;
                    let piv = alpha[r];
                    let row_r: Vec<f64> = self.binv[r * p..(r + 1) * p].iter().map(|v| v / piv).collect();
                    for k in 0..p {
                        if k == r {
                            continue;
                        }
                        let f = alpha[k];
                        if f != 0.0 {
                            for c in 0..p {
                                self.binv[k * p + c] -= f * row_r[c];
                            }
                        }
                    }
                    self.binv[r * p..(r + 1) * p].copy_from_slice(&row_r);
                    self.since_refactor += 1;
                    if self.since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    fn nonbasic_value_for_entering(&self, dir: f64) -> f64 {
        if dir > 0.0 {
            0.0
        } else {
            1.0
        }
    }

    /// Replaces the right-hand side with the one for `tau` and recomputes the
    /// basic values; the basis itself is kept.
    fn set_tau(&mut self, tau: f64) -> Result<()> {
        let p = self.p;
        self.rhs = vec![0.0; p];
        for i in 0..self.n {
            for (r, v) in self.rhs.iter_mut().zip(self.x.row(i)) {
                *r += (1.0 - tau) * v;
            }
        }
        self.refactor()
    }

    /// Dual simplex from a dual-feasible basis whose basic values may violate
    /// their bounds. Artificial columns never re-enter.
    fn dual_simplex(&mut self, y: &[f64]) -> Result<()> {
        let (n, p) = (self.n, self.p);
        if self.basis.iter().any(|&j| j >= n) {
            return Err(Error::Numerical("artificial column in a warm basis".into()));
        }
        let feas_tol = 1e-9;
        let max_pivots = 10 * (n + p) + 100;
        let mut col = vec![0.0; p];
        for _ in 0..max_pivots {
            // leaving row: largest bound violation
            let mut leave = None;
            let mut worst = feas_tol;
            for r in 0..p {
                let v = self.xb[r];
                let viol = if v < 0.0 { -v } else { v - 1.0 };
                if viol > worst {
                    worst = viol;
                    leave = Some(r);
                }
            }
            let Some(r) = leave else {
                return Ok(());
            };
            // basic value must rise when below 0, fall when above 1
            let rise = self.xb[r] < 0.0;
            let pi: Vec<f64> = {
                let mut pi = vec![0.0; p];
                for (row, &j) in self.basis.iter().enumerate() {
                    let c = y[j];
                    for k in 0..p {
                        pi[k] += c * self.binv[row * p + k];
                    }
                }
                pi
            };
            let brow = &self.binv[r * p..(r + 1) * p];
            let mut enter = None;
            let mut best_ratio = f64::INFINITY;
            for j in 0..n {
                let at_upper = match self.state[j] {
                    State::Basic(_) => continue,
                    State::Upper => true,
                    State::Lower => false,
                };
                let xj = self.x.row(j);
                let alpha = dot(brow, xj);
                if alpha.abs() < 1e-9 {
                    continue;
                }
                // x_B[r] changes by −alpha per unit increase of x_j
                let helps = match (at_upper, rise) {
                    (false, true) => alpha < 0.0,
                    (false, false) => alpha > 0.0,
                    (true, true) => alpha > 0.0,
                    (true, false) => alpha < 0.0,
                };
                if !helps {
                    continue;
                }
                let d = y[j] - dot(&pi, xj);
                let ratio = d.abs() / alpha.abs();
                if ratio < best_ratio {
                    best_ratio = ratio;
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Err(Error::Numerical("dual simplex found no entering column".into()));
            };
            self.column(j, &mut col);
            let alpha = self.ftran(&col);
            let old = self.basis[r];
            self.state[old] = if rise { State::Lower } else { State::Upper };
            self.basis[r] = j;
            self.state[j] = State::Basic(r);
            let piv = alpha[r];
            let row_r: Vec<f64> = self.binv[r * p..(r + 1) * p].iter().map(|v| v / piv).collect();
            for k in 0..p {
                if k == r {
                    continue;
                }
                let f = alpha[k];
                if f != 0.0 {
                    for c in 0..p {
                        self.binv[k * p + c] -= f * row_r[c];
                    }
                }
            }
            self.binv[r * p..(r + 1) * p].copy_from_slice(&row_r);
            self.pivots += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            } else {
                self.recompute_xb();
            }
        }
        Err(Error::Numerical("dual simplex iteration limit reached".into()))
    }

    fn recompute_xb(&mut self) {
        let mut resid = self.rhs.clone();
        for j in 0..self.n {
            if self.state[j] == State::Upper {
                for (r, v) in resid.iter_mut().zip(self.x.row(j)) {
                    *r -= v;
                }
            }
        }
        self.xb = self.ftran(&resid);
    }

    fn multipliers(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let p = self.p;
        let mut pi = vec![0.0; p];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = cost(j);
            for k in 0..p {
                pi[k] += c * self.binv[r * p + k];
            }
        }
        pi
    }
}

/// Fits `min_β Σ ρ_τ(y_i − x_iβ)`.
///
/// `warm` (for example the coefficients at a neighbouring τ) only seeds the
/// starting vertex; the optimum does not depend on it. Among multiple optimal
/// β the minimum-norm one is returned.
pub fn quantile_regression(x: &Matrix, y: &[f64], tau: f64, warm: Option<&[f64]>) -> Result<PinballFit> {
    let sx = solve_fresh(x, y, tau, warm)?;
    finish(&sx, y, tau)
}

/// Fits every τ in `taus` (any order; results follow the input order).
///
/// The first fit starts from scratch; each later one restarts from the
/// previous optimal basis, which stays dual feasible when only τ changes, and
/// restores primal feasibility with dual simplex pivots.
pub fn quantile_regression_path(x: &Matrix, y: &[f64], taus: &[f64]) -> Result<Vec<PinballFit>> {
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
    let mut out: Vec<Option<PinballFit>> = vec![None; taus.len()];
    let mut sx: Option<Simplex> = None;
    for &k in &order {
        let tau = taus[k];
        let fit = match sx.as_mut() {
            None => {
                let fresh = solve_fresh(x, y, tau, None)?;
                let fit = finish(&fresh, y, tau)?;
                sx = Some(fresh);
                fit
            }
            Some(prev) => {
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(invalid(format!("tau {tau} outside (0, 1)")));
                }
                let before = prev.pivots;
                prev.set_tau(tau)?;
                if prev.dual_simplex(y).is_err() {
                    // fall back to a cold start on numerical trouble
                    *prev = solve_fresh(x, y, tau, None)?;
                }
                let mut fit = finish(prev, y, tau)?;
                fit.pivots = prev.pivots.saturating_sub(before);
                fit
            }
        };
        out[k] = Some(fit);
    }
    Ok(out.into_iter().map(|f| f.expect("every tau fitted")).collect())
}

fn solve_fresh<'a>(x: &'a Matrix, y: &[f64], tau: f64, warm: Option<&[f64]>) -> Result<Simplex<'a>> {
    let (n, p) = (x.rows(), x.cols());
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("tau {tau} outside (0, 1)")));
    }
    if y.len() != n {
        return Err(invalid("response length differs from design rows"));
    }
    if n == 0 || p == 0 {
        return Err(invalid("empty design"));
    }
    if y.iter().any(|v| !v.is_finite()) || (0..n).any(|i| x.row(i).iter().any(|v| !v.is_finite())) {
        return Err(invalid("non-finite values in regression data"));
    }

    let mut rhs = vec![0.0; p];
    for i in 0..n {
        for (r, v) in rhs.iter_mut().zip(x.row(i)) {
            *r += (1.0 - tau) * v;
        }
    }
    // starting bounds: a_i = 1 where the warm fit leaves a positive residual
    let mut state = vec![State::Lower; n + p];
    for i in 0..n {
        let up = match warm {
            Some(b) if b.len() == p => y[i] - dot(x.row(i), b) > 0.0,
            _ => tau < 0.5,
        };
        if up {
            state[i] = State::Upper;
        }
    }
    let mut resid = rhs.clone();
    for i in 0..n {
        if state[i] == State::Upper {
            for (r, v) in resid.iter_mut().zip(x.row(i)) {
                *r -= v;
            }
        }
    }
    let art_sign: Vec<f64> = resid.iter().map(|&r| if r >= 0.0 { 1.0 } else { -1.0 }).collect();
    let basis: Vec<usize> = (n..n + p).collect();
    for (r, &j) in basis.iter().enumerate() {
        state[j] = State::Basic(r);
    }
    let mut binv = vec![0.0; p * p];
    for r in 0..p {
        binv[r * p + r] = art_sign[r];
    }
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut sx = Simplex {
        x,
        p,
        n,
        xb: resid.iter().map(|r| r.abs()).collect(),
        art_sign,
        state,
        basis,
        binv,
        rhs,
        pivots: 0,
        since_refactor: 0,
        degenerate_streak: 0,
        tol: 1e-11,
    };

    // phase 1: drive artificials to zero
    let phase1 = |j: usize| if j >= n { -1.0 } else { 0.0 };
    sx.optimize(&phase1, true)?;
    sx.refactor()?;
    let infeas: f64 = sx
        .basis
        .iter()
        .zip(&sx.xb)
        .filter(|(&j, _)| j >= n)
        .map(|(_, v)| v.abs())
        .sum();
    let rhs_scale = sx.rhs.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if infeas > 1e-8 * rhs_scale {
        return Err(Error::Numerical(format!("quantile LP infeasible (residual {infeas:e})")));
    }
    // pivot remaining (zero-valued) artificials out of the basis
    let mut col = vec![0.0; p];
    for r in 0..p {
        if sx.basis[r] < n {
            continue;
        }
        let mut replaced = false;
        for j in 0..n {
            if matches!(sx.state[j], State::Basic(_)) {
                continue;
            }
            sx.column(j, &mut col);
            let alpha = sx.ftran(&col);
            if alpha[r].abs() > 1e-7 {
                let old = sx.basis[r];
                sx.state[old] = State::Lower;
                let val = sx.nonbasic_value(j);
                sx.basis[r] = j;
                sx.state[j] = State::Basic(r);
                sx.refactor()?;
                debug_assert!((sx.xb[r] - val).abs() < 1e-6);
                replaced = true;
                break;
            }
        }
        if !replaced {
            return Err(Error::RankDeficient(vec![r]));
        }
    }

    // phase 2
    sx.tol = 1e-12 * scale.max(1.0) * 10.0;
    let phase2 = |j: usize| if j >= n { 0.0 } else { y[j] };
    sx.optimize(&phase2, false)?;
    sx.refactor()?;
    Ok(sx)
}

/// Coefficients (with the minimum-norm tie-break) from an optimal basis.
fn finish(sx: &Simplex, y: &[f64], tau: f64) -> Result<PinballFit> {
    let (x, n, p) = (sx.x, sx.n, sx.p);
    let phase2 = |j: usize| if j >= n { 0.0 } else { y[j] };
    let mut beta = sx.multipliers(&phase2);

    // optimal-face description from the final dual solution
    let edge = 1e-9;
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new(); // (row, sign) meaning sign·x_iβ ≤ sign·y_i
    for j in 0..n {
        let value = match sx.state[j] {
            State::Basic(r) => sx.xb[r],
            other => {
                if other == State::Upper {
                    1.0
                } else {
                    0.0
                }
            }
        };
        if value > edge && value < 1.0 - edge {
            equalities.push(j);
        } else if value >= 1.0 - edge {
            inequalities.push((j, 1.0));
        } else {
            inequalities.push((j, -1.0));
        }
    }
    if equalities.len() < p {
        let working: Vec<(usize, f64)> = sx
            .basis
            .iter()
            .map(|&j| {
                let sign = inequalities
                    .iter()
                    .find(|(i, _)| *i == j)
                    .map_or(0.0, |(_, s)| *s);
                (j, sign)
            })
            .collect();
        // the vertex is already optimal; a degenerate face can stall the
        // tie-break, in which case the vertex is kept
        let vertex_objective = pinball_objective(x, y, &beta, tau);
        if let Ok(candidate) = min_norm_on_face(x, y, &beta, &working, &inequalities) {
            let objective = pinball_objective(x, y, &candidate, tau);
            if objective <= vertex_objective + 1e-9 * vertex_objective.abs().max(1.0) {
                beta = candidate;
            }
        }
    }
    let objective = pinball_objective(x, y, &beta, tau);
    Ok(PinballFit {
        beta,
        objective,
        pivots: sx.pivots,
    })
}

/// Active-set QP: minimize ½‖β‖² subject to `x_iβ = y_i` for the equality rows
/// and `s·x_iβ ≤ s·y_i` for the inequality rows, starting from the feasible
/// vertex `beta0` whose active set is `working` (sign 0 marks an equality).
fn min_norm_on_face(
    x: &Matrix,
    y: &[f64],
    beta0: &[f64],
    working: &[(usize, f64)],
    inequalities: &[(usize, f64)],
) -> Result<Vec<f64>> {
    let p = x.cols();
    let mut beta = beta0.to_vec();
    let mut active: Vec<(usize, f64)> = working.to_vec();
    let constraint = |(i, s): (usize, f64)| -> (Vec<f64>, f64) {
        let sign = if s == 0.0 { 1.0 } else { s };
        (x.row(i).iter().map(|v| sign * v).collect(), sign * y[i])
    };
    let tol = 1e-10 * (1.0 + beta0.iter().map(|b| b.abs()).fold(0.0, f64::max));
    for _ in 0..(10 * (inequalities.len() + p) + 100) {
        // equality-constrained minimum-norm point on the working set
        let rows: Vec<(Vec<f64>, f64)> = active.iter().map(|&c| constraint(c)).collect();
        let m = rows.len();
        let (target, lambda) = if m == 0 {
            (vec![0.0; p], Vec::new())
        } else {
            let mut ggt = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    ggt[a * m + b] = dot(&rows[a].0, &rows[b].0);
                }
            }
            let h: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let nu = solve_square(&ggt, m, &h)?;
            let mut t = vec![0.0; p];
            for (r, nu_r) in rows.iter().zip(&nu) {
                for k in 0..p {
                    t[k] += nu_r * r.0[k];
                }
            }
            // KKT: β + Gᵀλ = 0  ⇒  λ = −ν
            (t, nu.iter().map(|v| -v).collect::<Vec<f64>>())
        };
        let step: Vec<f64> = target.iter().zip(&beta).map(|(t, b)| t - b).collect();
        let step_norm = step.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if step_norm <= tol {
            // drop the inequality with the most negative multiplier, if any
            let mut worst = None;
            let mut most = -1e-12;
            for (k, &(_, s)) in active.iter().enumerate() {
                if s != 0.0 && lambda[k] < most {
                    most = lambda[k];
                    worst = Some(k);
                }
            }
            match worst {
                None => return Ok(target),
                Some(k) => {
                    active.remove(k);
                    continue;
                }
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for &(i, s) in inequalities {
            if active.iter().any(|&(a, _)| a == i) {
                continue;
            }
            let (g, h) = constraint((i, s));
            let gp = dot(&g, &step);
            if gp > 1e-14 {
                let room = ((h - dot(&g, &beta)) / gp).max(0.0);
                if room < alpha {
                    alpha = room;
                    blocking = Some((i, s));
                }
            }
        }
        for k in 0..p {
            beta[k] += alpha * step[k];
        }
        if let Some(c) = blocking {
            active.push(c);
        }
    }
    Err(Error::Numerical("minimum-norm tie-break did not converge".into()))
}
