//! Soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimization.
//!
//! The solver follows Platt's SMO: pairwise coordinate ascent on the dual
//! with box constraints `0 <= alpha <= C`, an error cache, and the
//! second-choice heuristic `max |E1 - E2|`. All choice rules are
//! deterministic (first violator in index order, maximal-|dE| partner with
//! lowest-index tie-break), so training is reproducible.

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::Result;

/// SMO solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoConfig {
    /// Box penalty.
    pub c: f64,
    /// RBF width: k(x, z) = exp(-gamma * ||x - z||^2).
    pub gamma: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Cap on full passes without progress before giving up.
    pub max_passes: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: 0.1,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

/// RBF kernel value.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
    (-gamma * d2).exp()
}

/// One fitted binary machine: f(x) = sum_i alpha_i y_i k(x_i, x) + b.
///
/// Only support vectors (alpha > 0) are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed dual coefficients alpha_i * y_i.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl BinarySvm {
    /// Decision value for one input.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Convergence diagnostics kept alongside each binary machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmDiagnostics {
    /// Worst KKT residual over all training points at convergence.
    pub max_kkt_residual: f64,
    /// |sum_i alpha_i y_i| at convergence.
    pub alpha_balance: f64,
    /// Pair optimizations performed.
    pub steps: usize,
}

struct Solver<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    cfg: SmoConfig,
    kernel: Vec<f64>, // n x n, row-major
    alpha: Vec<f64>,
    errors: Vec<f64>,
    bias: f64,
    steps: usize,
}

impl<'a> Solver<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], cfg: SmoConfig) -> Self {
        let n = x.len();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = rbf_kernel(&x[i], &x[j], cfg.gamma);
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }
        // alpha = 0 => f = b = 0 => E_i = -y_i
        let errors = y.iter().map(|&v| -v).collect();
        Self {
            x,
            y,
            cfg,
            kernel,
            alpha: vec![0.0; n],
            errors,
            bias: 0.0,
            steps: 0,
        }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.x.len() + j]
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.errors[i] * self.y[i];
        (r < -self.cfg.tol && self.alpha[i] < self.cfg.c)
            || (r > self.cfg.tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ei, ej) = (self.errors[i], self.errors[j]);
        let c = self.cfg.c;

        let (lo, hi) = if yi != yj {
            ((aj_old - ai_old).max(0.0), (c + aj_old - ai_old).min(c))
        } else {
            ((ai_old + aj_old - c).max(0.0), (ai_old + aj_old).min(c))
        };
        if lo >= hi {
            return false;
        }
        let eta = 2.0 * self.k(i, j) - self.k(i, i) - self.k(j, j);
        if eta >= 0.0 {
            return false;
        }
        let mut aj = aj_old - yj * (ei - ej) / eta;
        aj = aj.clamp(lo, hi);
        if (aj - aj_old).abs() < 1e-12 * (aj + aj_old + 1e-12) {
            return false;
        }
        let ai = ai_old + yi * yj * (aj_old - aj);

        let b1 =
            self.bias - ei - yi * (ai - ai_old) * self.k(i, i) - yj * (aj - aj_old) * self.k(i, j);
        let b2 =
            self.bias - ej - yi * (ai - ai_old) * self.k(i, j) - yj * (aj - aj_old) * self.k(j, j);
        let new_bias = if ai > 0.0 && ai < c {
            b1
        } else if aj > 0.0 && aj < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        let db = new_bias - self.bias;
        let (dai, daj) = (ai - ai_old, aj - aj_old);
        for t in 0..self.x.len() {
            self.errors[t] += yi * dai * self.k(i, t) + yj * daj * self.k(j, t) + db;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        self.bias = new_bias;
        self.steps += 1;
        true
    }

    /// Second-choice heuristic: partner with maximal |E_i - E_j|, preferring
    /// non-bound points; deterministic lowest-index tie-break, then a full
    /// deterministic scan if the best candidate makes no progress.
    fn examine(&mut self, i: usize) -> bool {
        if !self.violates_kkt(i) {
            return false;
        }
        let n = self.x.len();
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || self.alpha[j] <= 0.0 || self.alpha[j] >= self.cfg.c {
                continue;
            }
            let gap = (self.errors[i] - self.errors[j]).abs();
            if best.is_none_or(|(g, _)| gap > g) {
                best = Some((gap, j));
            }
        }
        if let Some((_, j)) = best {
            if self.take_step(i, j) {
                return true;
            }
        }
        for off in 1..n {
            let j = (i + off) % n;
            if self.take_step(i, j) {
                return true;
            }
        }
        false
    }

    fn solve(mut self) -> (Vec<f64>, f64, usize) {
        let n = self.x.len();
        let mut examine_all = true;
        let mut passes = 0usize;
        loop {
            let mut changed = 0usize;
            if examine_all {
                for i in 0..n {
                    if self.examine(i) {
                        changed += 1;
                    }
                }
            } else {
                for i in 0..n {
                    if self.alpha[i] > 0.0 && self.alpha[i] < self.cfg.c && self.examine(i) {
                        changed += 1;
                    }
                }
            }
            passes += 1;
            if examine_all {
                if changed == 0 || passes >= self.cfg.max_passes {
                    break;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
            if passes >= self.cfg.max_passes {
                break;
            }
        }
        (self.alpha, self.bias, self.steps)
    }
}

/// Worst KKT residual over the training set for a given dual solution.
///
/// Residuals: `max(0, 1 - y f)` for `alpha = 0`, `|y f - 1|` for interior
/// points, `max(0, y f - 1)` for `alpha = C`.
pub fn kkt_residuals(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: &[f64],
    machine: &dyn Fn(&[f64]) -> f64,
    c: f64,
) -> Vec<f64> {
    x.iter()
        .zip(y)
        .zip(alpha)
        .map(|((xi, &yi), &a)| {
            let yf = yi * machine(xi);
            if a <= 0.0 {
                (1.0 - yf).max(0.0)
            } else if a >= c {
                (yf - 1.0).max(0.0)
            } else {
                (yf - 1.0).abs()
            }
        })
        .collect()
}

/// Train one binary machine on labels in {-1, +1}.
pub fn train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    cfg: &SmoConfig,
) -> Result<(BinarySvm, SvmDiagnostics)> {
    if x.is_empty() || x.len() != y.len() {
        return Err(ArcError::Model(
            "binary SVM needs equal-length nonempty inputs".into(),
        ));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(ArcError::Model("binary labels must be +/-1".into()));
    }
    if cfg.c.is_nan() || cfg.c <= 0.0 || cfg.gamma.is_nan() || cfg.gamma <= 0.0 {
        return Err(ArcError::InvalidParam("C and gamma must be > 0".into()));
    }
    // Solve in a canonical row order so the fitted machine is independent
    // of how the caller happened to arrange the training set.
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (alpha_sorted, bias, steps) = Solver::new(&xs, &ys, *cfg).solve();
    let mut alpha = vec![0.0; x.len()];
    for (k, &i) in order.iter().enumerate() {
        alpha[i] = alpha_sorted[k];
    }

    let balance: f64 = alpha.iter().zip(y).map(|(&a, &yi)| a * yi).sum();
    let full = BinarySvm {
        support_vectors: x.to_vec(),
        dual_coef: alpha.iter().zip(y).map(|(&a, &yi)| a * yi).collect(),
        bias,
        gamma: cfg.gamma,
    };
    let residuals = kkt_residuals(x, y, &alpha, &|v| full.decision(v), cfg.c);
    let diag = SvmDiagnostics {
        max_kkt_residual: residuals.iter().fold(0.0, |m, &r| m.max(r)),
        alpha_balance: balance.abs(),
        steps,
    };

    // keep only support vectors
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for ((xi, &a), &yi) in x.iter().zip(&alpha).zip(y) {
        if a > 0.0 {
            support_vectors.push(xi.clone());
            dual_coef.push(a * yi);
        }
    }
    Ok((
        BinarySvm {
            support_vectors,
            dual_coef,
            bias,
            gamma: cfg.gamma,
        },
        diag,
    ))
}

/// One-vs-rest multi-class SVM: one binary machine per class, scores are
/// the decision values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRestSvm {
    pub machines: Vec<BinarySvm>,
    pub diagnostics: Vec<SvmDiagnostics>,
}

impl OneVsRestSvm {
    /// `y` holds class indices `0..n_classes`.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, cfg: &SmoConfig) -> Result<Self> {
        let mut machines = Vec::with_capacity(n_classes);
        let mut diagnostics = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let labels: Vec<f64> = y
                .iter()
                .map(|&c| if c == class { 1.0 } else { -1.0 })
                .collect();
            let (machine, diag) = train_binary(x, &labels, cfg)?;
            machines.push(machine);
            diagnostics.push(diag);
        }
        Ok(Self {
            machines,
            diagnostics,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.decision(x)).collect()
    }
}
