//! Ridge, ordinary least squares and logistic regression.

use serde::{Deserialize, Serialize};

use super::tree::validate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.decision(row)
    }
}

/// In-place Cholesky solve of the symmetric positive-definite `a` (`n × n`,
/// row-major) against the columns of `b` (`n × m`).
fn cholesky_solve(mut a: Vec<f64>, n: usize, b: &mut [f64], m: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 1e-12 * (1.0 + a[j * n + j].abs())) {
            return Err(Error::Numeric(format!(
                "matrix is singular or not positive definite at pivot {j}"
            )));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s -= a[ri + k] * a[rj + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for c in 0..m {
        for i in 0..n {
            let mut s = b[i * m + c];
            for k in 0..i {
                s -= a[i * n + k] * b[k * m + c];
            }
            b[i * m + c] = s / a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i * m + c];
            for k in i + 1..n {
                s -= a[k * n + i] * b[k * m + c];
            }
            b[i * m + c] = s / a[i * n + i];
        }
    }
    Ok(())
}

/// Ridge regression with an unpenalized intercept: minimizes
/// `|y - Xw - b|² + alpha |w|²`. Uses the dual form when there are fewer
/// samples than features. `alpha = 0` is ordinary least squares and fails
/// with a numeric error on singular designs.
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<LinearModel> {
    let d = validate(x, y, 2)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let n = x.len();
    let nf = n as f64;
    let mean_x: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let mean_y = y.iter().sum::<f64>() / nf;
    let xc: Vec<f64> = x
        .iter()
        .flat_map(|r| r.iter().zip(&mean_x).map(|(v, m)| v - m))
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - mean_y).collect();

    let weights = if n >= d || alpha == 0.0 {
        let mut g = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        for i in 0..n {
            let row = &xc[i * d..(i + 1) * d];
            for a in 0..d {
                let va = row[a];
                if va == 0.0 {
                    continue;
                }
                rhs[a] += va * yc[i];
                let ga = &mut g[a * d..a * d + d];
                for b in a..d {
                    ga[b] += va * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g[a * d + b] = g[b * d + a];
            }
            g[a * d + a] += alpha;
        }
        cholesky_solve(g, d, &mut rhs, 1)?;
        rhs
    } else {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s: f64 = xc[i * d..(i + 1) * d]
                    .iter()
                    .zip(&xc[j * d..(j + 1) * d])
                    .map(|(a, b)| a * b)
                    .sum();
                k[i * n + j] = s;
                k[j * n + i] = s;
            }
            k[i * n + i] += alpha;
        }
        let mut c = yc.clone();
        cholesky_solve(k, n, &mut c, 1)?;
        let mut w = vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                w[j] += xc[i * d + j] * c[i];
            }
        }
        w
    };
    let intercept = mean_y - weights.iter().zip(&mean_x).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel { weights, intercept })
}

pub fn train_linear(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    train_ridge(x, y, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// L2 penalty on the weights (not the intercept), per sample.
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-4,
            tolerance: 1e-8,
            max_iter: 2000,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_loss(model: &LinearModel, x: &[Vec<f64>], y: &[f64], l2: f64) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            let z = model.decision(r);
            // log(1 + e^z) - t z, computed stably
            z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z
        })
        .sum::<f64>()
        / n;
    data + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Logistic regression by gradient descent with backtracking line search;
/// stops when the loss improves by less than `tolerance`.
pub fn train_logistic(x: &[Vec<f64>], y: &[f64], params: &LogisticParams) -> Result<LinearModel> {
    let d = validate(x, y, 2)?;
    if y.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::InvalidArgument(
            "logistic labels must be 0 or 1".into(),
        ));
    }
    let n = x.len() as f64;
    let mut model = LinearModel {
        weights: vec![0.0; d],
        intercept: 0.0,
    };
    let mut loss = log_loss(&model, x, y, params.l2);
    let mut step = 1.0;
    for _ in 0..params.max_iter {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (r, &t) in x.iter().zip(y) {
            let e = sigmoid(model.decision(r)) - t;
            gb += e;
            for (g, v) in gw.iter_mut().zip(r) {
                *g += e * v;
            }
        }
        gw.iter_mut()
            .zip(&model.weights)
            .for_each(|(g, w)| *g = *g / n + params.l2 * w);
        gb /= n;
        let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if g2.sqrt() < params.tolerance {
            break;
        }
        step *= 2.0;
        let next = loop {
            let cand = LinearModel {
                weights: model
                    .weights
                    .iter()
                    .zip(&gw)
                    .map(|(w, g)| w - step * g)
                    .collect(),
                intercept: model.intercept - step * gb,
            };
            let l = log_loss(&cand, x, y, params.l2);
            if l <= loss - 0.5 * step * g2 || step < 1e-12 {
                break (cand, l);
            }
            step *= 0.5;
        };
        let improvement = loss - next.1;
        model = next.0;
        loss = next.1;
        if improvement.abs() < params.tolerance {
            break;
        }
    }
    Ok(model)
}

pub fn logistic_probability(model: &LinearModel, row: &[f64]) -> f64 {
    sigmoid(model.decision(row))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let m = train_ridge(&x, &y, 1e-12).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-6);
        assert!(m.intercept.abs() < 1e-6);
    }

    #[test]
    fn huge_alpha_shrinks_to_zero() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64).collect();
        let m = train_ridge(&x, &y, 1e12).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn singular_ols_is_numeric_error() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(train_linear(&x, &y), Err(Error::Numeric(_))));
    }

    fn oracle(x: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
        let (n, d) = (x.len(), x[0].len());
        // Augmented design with an unpenalized intercept column.
        let a = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
        let mut p = DMatrix::<f64>::identity(d + 1, d + 1) * alpha;
        p[(d, d)] = 0.0;
        let lhs = a.transpose() * &a + p;
        let rhs = a.transpose() * DVector::from_column_slice(y);
        let sol = lhs.lu().solve(&rhs).unwrap();
        (sol.rows(0, d).iter().copied().collect(), sol[d])
    }

    #[test]
    fn matches_normal_equations_primal_and_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, d) in [(40, 5), (6, 12)] {
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m = train_ridge(&x, &y, 0.1).unwrap();
            let (w, b) = oracle(&x, &y, 0.1);
            for (a, o) in m.weights.iter().zip(&w) {
                assert!((a - o).abs() < 1e-8, "{a} vs {o}");
            }
            assert!((m.intercept - b).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_non_increasing_as_alpha_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rss = |a: f64| {
            let m = train_ridge(&x, &y, a).unwrap();
            x.iter()
                .zip(&y)
                .map(|(r, t)| (m.predict(r) - t).powi(2))
                .sum::<f64>()
        };
        let mut prev = f64::INFINITY;
        for a in [100.0, 10.0, 1.0, 0.1, 0.01] {
            let r = rss(a);
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn logistic_separates() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0 - 2.0]).collect();
        let y: Vec<f64> = (0..40).map(|i| f64::from(u8::from(i >= 20))).collect();
        let m = train_logistic(&x, &y, &LogisticParams::default()).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, &t)| f64::from(u8::from(logistic_probability(&m, r) > 0.5)) == t)
            .count();
        assert_eq!(correct, 40);
    }
}
