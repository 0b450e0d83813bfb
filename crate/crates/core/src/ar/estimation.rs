//! Estimators shared by the autoregressive models: least squares, Burg,
//! Yule-Walker (Levinson-Durbin), AIC order selection and an HQC-tuned lasso.

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;

/// Relative size of an `R` diagonal entry below which a column is treated as
/// linearly dependent on the ones before it.
const RANK_TOL: f64 = 1e-10;

/// Least-squares coefficients by Householder QR with column pivoting.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(invalid(format!("{} responses for {n} design rows", y.len())));
    }
    if n < p || p == 0 {
        return Err(Error::InsufficientData { required: p.max(1), actual: n });
    }
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| x.get(i, j)).collect()).collect();
    let mut b = y.to_vec();
    let mut order: Vec<usize> = (0..p).collect();
    let mut r_diag = vec![0.0; p];
    let mut r00 = 0.0f64;
    for k in 0..p {
        let (mut best, mut best_norm) = (k, -1.0);
        for (j, col) in cols.iter().enumerate().skip(k) {
            let norm: f64 = col[k..].iter().map(|v| v * v).sum();
            if norm > best_norm {
                best = j;
                best_norm = norm;
            }
        }
        cols.swap(k, best);
        order.swap(k, best);
        let norm = best_norm.sqrt();
        if k == 0 {
            r00 = norm;
        }
        if !(norm > RANK_TOL * r00) {
            let mut dependent = order[k..].to_vec();
            dependent.sort_unstable();
            return Err(Error::RankDeficient(dependent));
        }
        let (head, tail) = cols.split_at_mut(k + 1);
        let v = &mut head[k][k..];
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        let reflect = |target: &mut [f64]| {
            let s: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * s / vtv;
            for (t, a) in target.iter_mut().zip(v.iter()) {
                *t -= f * a;
            }
        };
        for col in tail.iter_mut() {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
        r_diag[k] = alpha;
    }
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = b[i];
        for j in i + 1..p {
            s -= cols[j][i] * z[j];
        }
        z[i] = s / r_diag[i];
    }
    let mut beta = vec![0.0; p];
    for (k, &col) in order.iter().enumerate() {
        beta[col] = z[k];
    }
    Ok(beta)
}

/// Burg estimates for every order `0..=p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgPath {
    pub n: usize,
    /// `reflections[m - 1]` is the order-`m` reflection coefficient.
    pub reflections: Vec<f64>,
    /// `variances[m]` is the prediction-error variance at order `m`.
    pub variances: Vec<f64>,
    /// `coefficients[m]` holds `φ_1..φ_m`.
    pub coefficients: Vec<Vec<f64>>,
}

/// Runs the Burg recursion up to order `p_max`.
///
/// The recursion stops early if the prediction error vanishes, so the returned
/// path may be shorter than requested.
pub fn burg_path(x: &[f64], p_max: usize) -> Result<BurgPath> {
    let n = x.len();
    if n <= 2 * p_max {
        return Err(Error::InsufficientData {
            required: 2 * p_max + 1,
            actual: n,
        });
    }
    let e0 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::Numerical("series has zero energy".into()));
    }
    let mut f = x.to_vec();
    let mut b = x.to_vec();
    // prediction-error filter a[0] = 1
    let mut a = vec![1.0];
    let mut path = BurgPath {
        n,
        reflections: Vec::with_capacity(p_max),
        variances: vec![e0],
        coefficients: vec![Vec::new()],
    };
    let mut e = e0;
    for m in 1..=p_max {
        let (mut num, mut den) = (0.0, 0.0);
        for i in m..n {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if !(den > 0.0) {
            break;
        }
        let k = -2.0 * num / den;
        if !(k.abs() < 1.0) {
            break;
        }
        for i in (m..n).rev() {
            let fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
        let mut next = a.clone();
        next.push(0.0);
        for j in 1..=m {
            next[j] = a.get(j).copied().unwrap_or(0.0) + k * a[m - j];
        }
        a = next;
        e *= 1.0 - k * k;
        path.reflections.push(k);
        path.variances.push(e);
        path.coefficients.push(a[1..].iter().map(|c| -c).collect());
        if !(e > 0.0) {
            break;
        }
    }
    Ok(path)
}

/// Order-`p` Burg coefficients `φ_1..φ_p` and innovation variance.
pub fn burg(x: &[f64], p: usize) -> Result<(Vec<f64>, f64)> {
    if p == 0 {
        return Err(invalid("Burg order must be at least 1"));
    }
    let path = burg_path(x, p)?;
    if path.coefficients.len() <= p {
        return Err(Error::Numerical(format!(
            "Burg recursion degenerated at order {}",
            path.coefficients.len()
        )));
    }
    Ok((path.coefficients[p].clone(), path.variances[p]))
}

/// Default maximum order: 8 days of hourly lags, capped at a quarter of the
/// series length.
pub fn default_p_max(n: usize) -> usize {
    192.min(n / 4)
}

/// `AIC(p) = n ln σ̂²_p + 2p` for every order reached by the Burg path.
pub fn aic_curve(path: &BurgPath) -> Vec<f64> {
    let n = path.n as f64;
    path.variances
        .iter()
        .enumerate()
        .map(|(p, v)| n * v.ln() + 2.0 * p as f64)
        .collect()
}

/// Order minimizing AIC over `0..=p_max`; the smallest order wins ties.
pub fn aic_select(x: &[f64], p_max: usize) -> Result<usize> {
    if p_max == 0 {
        return Ok(0);
    }
    let path = burg_path(x, p_max)?;
    let aic = aic_curve(&path);
    let mut best = 0;
    for (p, &v) in aic.iter().enumerate() {
        if v < aic[best] {
            best = p;
        }
    }
    Ok(best)
}

/// Yule-Walker coefficients via Levinson-Durbin on the biased autocovariance.
pub fn yule_walker(x: &[f64], p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Ok(Vec::new());
    }
    let n = x.len();
    if n <= 2 * p {
        return Err(Error::InsufficientData {
            required: 2 * p + 1,
            actual: n,
        });
    }
    let r: Vec<f64> = (0..=p)
        .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    if !(r[0] > 0.0) {
        return Err(Error::Numerical("singular autocovariance".into()));
    }
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut e = r[0];
    for m in 1..=p {
        let acc: f64 = r[m] - phi.iter().enumerate().map(|(j, c)| c * r[m - 1 - j]).sum::<f64>();
        let k = acc / e;
        if !(k.abs() < 1.0) {
            return Err(Error::Numerical(format!("singular autocovariance at order {m}")));
        }
        let prev = phi.clone();
        for j in 0..m - 1 {
            phi[j] = prev[j] - k * prev[m - 2 - j];
        }
        phi.push(k);
        e *= 1.0 - k * k;
    }
    Ok(phi)
}

/// One point on the lasso regularization path, in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub nonzero: usize,
    pub rss: f64,
    pub hqc: f64,
}

impl LassoFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + crate::linalg::dot(row, &self.coefficients)
    }
}

const LASSO_PATH_LEN: usize = 100;
const LASSO_RATIO: f64 = 1e-4;

/// Full lasso path over 100 log-spaced penalties from `λ_max` down to
/// `1e-4·λ_max`, each point scored by HQC.
///
/// Columns are centred and scaled internally; the intercept is unpenalized.
/// Columns with zero variance keep a zero coefficient.
pub fn lasso_path(x: &Matrix, y: &[f64]) -> Result<Vec<LassoFit>> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(invalid(format!("{} responses for {n} design rows", y.len())));
    }
    let nf = n as f64;
    if nf <= std::f64::consts::E {
        return Err(Error::InsufficientData { required: 3, actual: n });
    }
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let tss: f64 = yc.iter().map(|v| v * v).sum();

    let mut means = vec![0.0; p];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v / nf;
        }
    }
    let mut sds = vec![0.0; p];
    for i in 0..n {
        for ((s, v), m) in sds.iter_mut().zip(x.row(i)).zip(&means) {
            *s += (v - m).powi(2) / nf;
        }
    }
    let active: Vec<usize> = (0..p).filter(|&j| sds[j] > 1e-12 * (1.0 + means[j].abs())).collect();
    let q = active.len();
    let sd: Vec<f64> = active.iter().map(|&j| sds[j].sqrt()).collect();

    // standardized Gram (divided by n) and correlation with the response
    let mut z = Matrix::zeros(n, q);
    for i in 0..n {
        let row = x.row(i);
        let out = z.row_mut(i);
        for (c, &j) in active.iter().enumerate() {
            out[c] = (row[j] - means[j]) / sd[c];
        }
    }
    let g: Vec<f64> = z.gram().into_iter().map(|v| v / nf).collect();
    let zy: Vec<f64> = z.tr_mul_vec(&yc).into_iter().map(|v| v / nf).collect();

    let lambda_max = zy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let hqc_penalty = 2.0 * nf.ln().ln();
    let rss_floor = f64::MIN_POSITIVE.max(tss * 1e-300);

    let mut beta = vec![0.0; q];
    // c = Zᵀ(yc − Zβ)/n, kept current under every coordinate update
    let mut c = zy.clone();
    let mut path = Vec::with_capacity(LASSO_PATH_LEN);
    for step in 0..LASSO_PATH_LEN {
        let lambda = if lambda_max > 0.0 {
            lambda_max * LASSO_RATIO.powf(step as f64 / (LASSO_PATH_LEN - 1) as f64)
        } else {
            0.0
        };
        coordinate_descent(&g, &mut c, &mut beta, lambda, 1e-7 * tss / nf);

        // RSS/n = yc·yc/n − 2βᵀzy + βᵀGβ
        let gb: f64 = (0..q)
            .filter(|&a| beta[a] != 0.0)
            .map(|a| beta[a] * (0..q).map(|b| g[a * q + b] * beta[b]).sum::<f64>())
            .sum();
        let rss = ((tss / nf - 2.0 * crate::linalg::dot(&beta, &zy) + gb) * nf).max(rss_floor);
        let nonzero = beta.iter().filter(|b| **b != 0.0).count();
        let mut coefficients = vec![0.0; p];
        let mut intercept = y_mean;
        for (c_idx, &j) in active.iter().enumerate() {
            let b = beta[c_idx] / sd[c_idx];
            coefficients[j] = b;
            intercept -= b * means[j];
        }
        path.push(LassoFit {
            lambda,
            intercept,
            coefficients,
            nonzero,
            rss,
            hqc: nf * (rss / nf).ln() + hqc_penalty * nonzero as f64,
        });
        if lambda_max == 0.0 {
            break;
        }
    }
    Ok(path)
}

/// The lasso path point with the smallest HQC (earliest on ties).
pub fn lasso_hqc(x: &Matrix, y: &[f64]) -> Result<LassoFit> {
    let path = lasso_path(x, y)?;
    let mut best = 0;
    for (i, fit) in path.iter().enumerate() {
        if fit.hqc < path[best].hqc {
            best = i;
        }
    }
    Ok(path.into_iter().nth(best).expect("path is never empty"))
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Covariance-update coordinate descent on standardized columns, warm-started
/// from `beta`. Alternates full sweeps with sweeps over the active set and
/// stops once no coordinate moves the objective by more than `tol` (in units of
/// the response variance, as the squared standardized step).
fn coordinate_descent(g: &[f64], c: &mut [f64], beta: &mut [f64], lambda: f64, tol: f64) {
    const MAX_SWEEPS: usize = 10_000;
    let q = beta.len();
    let update = |j: usize, c: &mut [f64], beta: &mut [f64]| -> f64 {
        let old = beta[j];
        let new = soft_threshold(c[j] + old, lambda);
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            let col = &g[j * q..(j + 1) * q];
            for (ck, gk) in c.iter_mut().zip(col) {
                *ck -= gk * delta;
            }
        }
        delta * delta
    };
    for _ in 0..MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for j in 0..q {
            max_delta = max_delta.max(update(j, c, beta));
        }
        if max_delta < tol {
            return;
        }
        let active: Vec<usize> = (0..q).filter(|&j| beta[j] != 0.0).collect();
        for _ in 0..MAX_SWEEPS {
            let mut inner = 0.0f64;
            for &j in &active {
                inner = inner.max(update(j, c, beta));
            }
            if inner < tol {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar_sim(phi: &[f64], n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 500;
        let mut x = vec![0.0; n + burn];
        for t in 0..n + burn {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            for (k, c) in phi.iter().enumerate() {
                if t > k {
                    v += c * x[t - k - 1];
                }
            }
            x[t] = v;
        }
        x.split_off(burn)
    }

    fn gaussian_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..n * p).map(|_| StandardNormal.sample(rng)).collect();
        Matrix::from_vec(n, p, data).unwrap()
    }

    #[test]
    fn ols_trivial() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let b = ols_fit(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!((b[0] - 4.0).abs() < 1e-12);

        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 5.0]]).unwrap();
        let b = ols_fit(&x, &[3.0, 5.0, 7.0, 13.0]).unwrap();
        let res: Vec<f64> = (0..4).map(|i| [3.0, 5.0, 7.0, 13.0][i] - crate::linalg::dot(x.row(i), &b)).collect();
        assert!(res.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn ols_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = gaussian_matrix(500, 10, &mut rng);
        let y: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b = ols_fit(&x, &y).unwrap();
        let oracle = crate::linalg::solve_square(&x.gram(), 10, &x.tr_mul_vec(&y)).unwrap();
        for (a, o) in b.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-7);
        }
        let r: Vec<f64> = y.iter().zip(x.mul_vec(&b)).map(|(a, f)| a - f).collect();
        assert!(x.tr_mul_vec(&r).iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn ols_names_dependent_columns() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let a = i as f64;
                vec![1.0, a, (a * 0.7).sin(), 2.0 * a + 1.0]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        match ols_fit(&x, &y) {
            Err(Error::RankDeficient(cols)) => {
                assert_eq!(cols.len(), 1);
                assert!([0, 1, 3].contains(&cols[0]));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn burg_recovers_ar1_and_ar2() {
        let (phi, _) = burg(&ar_sim(&[0.8], 10_000, 1), 1).unwrap();
        assert!((0.77..=0.83).contains(&phi[0]), "{phi:?}");
        let (phi, _) = burg(&ar_sim(&[], 10_000, 2), 1).unwrap();
        assert!(phi[0].abs() < 0.05);
        let (phi, var) = burg(&ar_sim(&[0.5, -0.3], 10_000, 3), 2).unwrap();
        assert!((phi[0] - 0.5).abs() < 0.04 && (phi[1] + 0.3).abs() < 0.04, "{phi:?}");
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn burg_rejects_constant_and_short_series() {
        assert!(burg(&[0.0; 100], 1).is_err());
        assert!(burg(&[3.0; 100], 1).is_err());
        assert!(burg(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn burg_reflections_inside_unit_interval() {
        for seed in 0..5 {
            let x = ar_sim(&[0.9, -0.5, 0.2], 2000, seed);
            let path = burg_path(&x, 20).unwrap();
            assert!(path.reflections.iter().all(|k| k.abs() < 1.0));
            assert!(path.variances.windows(2).all(|w| w[1] <= w[0]));
            // one-step prediction error energy never exceeds input energy
            let e0 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            let phi = &path.coefficients[3];
            let pe: f64 = (3..x.len())
                .map(|t| (x[t] - (0..3).map(|k| phi[k] * x[t - k - 1]).sum::<f64>()).powi(2))
                .sum::<f64>()
                / (x.len() - 3) as f64;
            assert!(pe <= e0);
        }
    }

    #[test]
    fn aic_order_selection() {
        // AIC keeps a spurious lag whenever its χ²₁ likelihood gain exceeds 2,
        // so on white noise it returns p=0 only about 71% of the time
        let white = (0..50).filter(|&s| aic_select(&ar_sim(&[], 10_000, 100 + s), 10).unwrap() == 0).count();
        assert!(white >= 28, "white noise picked p=0 in {white}/50");
        // the same overfitting tendency applies above the true order, but a
        // strong AR(3) is never underfitted
        let orders: Vec<usize> = (0..50)
            .map(|s| aic_select(&ar_sim(&[0.5, -0.3, 0.4], 10_000, 200 + s), 10).unwrap())
            .collect();
        let exact = orders.iter().filter(|&&p| p == 3).count();
        assert!(exact >= 28, "AR(3) picked p=3 in {exact}/50");
        assert!(orders.iter().all(|&p| p >= 3), "{orders:?}");
        assert_eq!(aic_select(&[1.0, 2.0], 0).unwrap(), 0);
    }

    #[test]
    fn aic_selection_attains_curve_minimum() {
        let x = ar_sim(&[0.6, 0.2], 800, 9);
        let path = burg_path(&x, 12).unwrap();
        let curve = aic_curve(&path);
        assert!(curve.iter().all(|v| v.is_finite()));
        let p = aic_select(&x, 12).unwrap();
        assert!(curve.iter().all(|&v| curve[p] <= v));
    }

    #[test]
    fn yule_walker_recovers_and_agrees_with_burg() {
        let phi = yule_walker(&ar_sim(&[0.8], 10_000, 4), 1).unwrap();
        assert!((phi[0] - 0.8).abs() < 0.03);
        let x = ar_sim(&[0.5, -0.3], 20_000, 5);
        let yw = yule_walker(&x, 2).unwrap();
        let (bg, _) = burg(&x, 2).unwrap();
        for (a, b) in yw.iter().zip(&bg) {
            assert!((a - b).abs() < 0.02);
        }
        assert!(yule_walker(&x, 0).unwrap().is_empty());
        assert!(yule_walker(&[0.0; 50], 1).is_err());
    }

    #[test]
    fn lasso_recovers_one_sparse_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = gaussian_matrix(1000, 21, &mut rng);
        let y: Vec<f64> = (0..1000).map(|i| 2.0 * x.get(i, 0)).collect();
        let fit = lasso_hqc(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 0.1, "{:?}", fit.coefficients[0]);
        let spurious = fit.coefficients[1..].iter().filter(|c| **c != 0.0).count();
        assert!(spurious <= 2, "{spurious} spurious columns");
    }

    #[test]
    fn lasso_path_starts_empty_and_grows_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = gaussian_matrix(300, 8, &mut rng);
        let y: Vec<f64> = (0..300)
            .map(|i| x.get(i, 0) - 0.5 * x.get(i, 3) + 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let path = lasso_path(&x, &y).unwrap();
        assert_eq!(path.len(), 100);
        assert_eq!(path[0].nonzero, 0);
        assert!((path[0].intercept - y.iter().sum::<f64>() / 300.0).abs() < 1e-12);
        assert!(path.windows(2).all(|w| w[0].lambda > w[1].lambda && w[0].nonzero <= w[1].nonzero));
    }

    #[test]
    fn lasso_ignores_pure_noise() {
        let mut zero = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let x = gaussian_matrix(500, 10, &mut rng);
            let y: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
            if lasso_hqc(&x, &y).unwrap().nonzero == 0 {
                zero += 1;
            }
        }
        assert!(zero >= 40, "k=0 in {zero}/50");
    }

    #[test]
    fn lasso_rejects_tiny_samples() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(lasso_path(&x, &[1.0, 2.0]).is_err());
    }
}
