//! Levenberg-Marquardt with central finite-difference Jacobians.

use serde::Serialize;

use crate::error::{Result, SpdcError};

/// A scalar model `y = f(p; x)` with a fixed parameter vector.
pub trait Model {
    fn names(&self) -> &'static [&'static str];
    fn eval(&self, p: &[f64], x: f64) -> f64;
    /// Analytic gradient with respect to the parameters.
    fn gradient(&self, p: &[f64], x: f64) -> Vec<f64>;
    /// Characteristic magnitude of each parameter, used for difference steps
    /// when a parameter sits near zero.
    fn scales(&self, p: &[f64]) -> Vec<f64>;
    /// Projects a trial point back into the admissible region.
    fn project(&self, _p: &mut [f64]) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// `1/max(y, 1)`.
    Poisson,
    Unweighted,
    /// `1/σ²` from the data; falls back to Poisson where σ is absent.
    Sigma,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Stop when an accepted step lowers the RSS by less than this fraction.
    pub relative_tolerance: f64,
    /// Return an unconverged report instead of `NonConvergence`.
    pub allow_unconverged: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            weighting: Weighting::Poisson,
            max_iterations: 200,
            initial_damping: 1e-3,
            relative_tolerance: 1e-10,
            allow_unconverged: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1σ, from the inverse curvature scaled by the reduced χ².
    pub uncertainties: Vec<f64>,
    /// Weighted residual sum of squares at the optimum.
    pub rss: f64,
    pub reduced_chi2: f64,
    pub converged: bool,
    pub iterations: usize,
    /// RSS after each accepted step, starting with the initial point.
    pub rss_history: Vec<f64>,
    /// Unweighted residuals `y − f(x)` at the optimum.
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.params[k])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.uncertainties[k])
    }

    /// Estimates are only trustworthy from a converged fit.
    pub fn reliable(&self) -> bool {
        self.converged
    }
}

pub(crate) fn weights(y: &[f64], sigma: Option<&[f64]>, w: Weighting) -> Vec<f64> {
    match w {
        Weighting::Unweighted => vec![1.0; y.len()],
        Weighting::Poisson => y.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
        Weighting::Sigma => match sigma {
            Some(s) => s
                .iter()
                .zip(y)
                .map(|(&s, &c)| if s > 0.0 { 1.0 / (s * s) } else { 1.0 / c.max(1.0) })
                .collect(),
            None => y.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
        },
    }
}

fn weighted_rss<M: Model>(m: &M, p: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&x, &y), &w)| {
            let r = y - m.eval(p, x);
            w * r * r
        })
        .sum()
}

/// Central-difference Jacobian, `n × p` row-major.
pub fn fd_jacobian<M: Model>(m: &M, p: &[f64], x: &[f64]) -> Vec<f64> {
    let np = p.len();
    let scales = m.scales(p);
    let mut jac = vec![0.0; x.len() * np];
    let mut pp = p.to_vec();
    for j in 0..np {
        let h = 6e-6 * p[j].abs().max(scales[j]);
        pp[j] = p[j] + h;
        let up: Vec<f64> = x.iter().map(|&x| m.eval(&pp, x)).collect();
        pp[j] = p[j] - h;
        for (i, &xi) in x.iter().enumerate() {
            jac[i * np + j] = (up[i] - m.eval(&pp, xi)) / (2.0 * h);
        }
        pp[j] = p[j];
    }
    jac
}

/// Solves the symmetric positive system `a·x = b` (row-major `n × n`) by
/// Gaussian elimination with partial pivoting. `None` if singular.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().partial_cmp(&a[j * n + c].abs()).unwrap())?;
        if !(a[piv * n + c].abs() > 0.0) || !a[piv * n + c].is_finite() {
            return None;
        }
        if piv != c {
            for k in 0..n {
                a.swap(c * n + k, piv * n + k);
            }
            b.swap(c, piv);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve(a.to_vec(), e)?;
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}

/// Normal matrix `JᵀWJ` and gradient `JᵀW·r`.
fn normal_equations(jac: &[f64], r: &[f64], w: &[f64], np: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; np * np];
    let mut g = vec![0.0; np];
    for (i, (&ri, &wi)) in r.iter().zip(w).enumerate() {
        let row = &jac[i * np..(i + 1) * np];
        for j in 0..np {
            g[j] += row[j] * wi * ri;
            for k in j..np {
                a[j * np + k] += row[j] * wi * row[k];
            }
        }
    }
    for j in 0..np {
        for k in 0..j {
            a[j * np + k] = a[k * np + j];
        }
    }
    (a, g)
}

const MAX_DAMPING: f64 = 1e16;

/// Minimizes `Σ w·(y − f(p; x))²` from `start`. Damping is multiplied by ten
/// on a rejected step and divided by ten on an accepted one; the diagonal of
/// `JᵀWJ` scales the damping term so the iteration is invariant to
/// parameter units.
pub fn levenberg_marquardt<M: Model>(
    model: &M,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    start: &[f64],
    opts: &FitOptions,
) -> Result<FitReport> {
    let np = start.len();
    assert_eq!(np, model.names().len());
    if x.len() <= np {
        return Err(SpdcError::DegenerateData(format!(
            "{} points cannot constrain {np} parameters",
            x.len()
        )));
    }
    let mut p = start.to_vec();
    model.project(&mut p);
    let mut rss = weighted_rss(model, &p, x, y, w);
    if !rss.is_finite() {
        return Err(SpdcError::NumericalFailure(
            "model is not finite at the start point".into(),
        ));
    }
    let scale_rss: f64 = y
        .iter()
        .zip(w)
        .map(|(y, w)| w * y * y)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut history = vec![rss];
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        if rss <= 1e-28 * scale_rss {
            converged = true;
            break;
        }
        let jac = fd_jacobian(model, &p, x);
        let r: Vec<f64> = x.iter().zip(y).map(|(&x, &y)| y - model.eval(&p, x)).collect();
        let (a, g) = normal_equations(&jac, &r, w, np);
        let diag: Vec<f64> = (0..np).map(|j| a[j * np + j].max(1e-300)).collect();

        let mut accepted = None;
        while lambda <= MAX_DAMPING {
            let mut damped = a.clone();
            for j in 0..np {
                damped[j * np + j] += lambda * diag[j];
            }
            if let Some(step) = solve(damped, g.clone()) {
                let mut trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
                model.project(&mut trial);
                let trial_rss = weighted_rss(model, &trial, x, y, w);
                if trial_rss.is_finite() && trial_rss < rss {
                    accepted = Some((trial, trial_rss));
                    lambda = (lambda / 10.0).max(1e-15);
                    break;
                }
            }
            lambda *= 10.0;
        }
        match accepted {
            None => {
                // no downhill step at any damping: stationary to working precision
                converged = true;
                break;
            }
            Some((trial, trial_rss)) => {
                let small_step = trial
                    .iter()
                    .zip(&p)
                    .zip(model.scales(&p))
                    .all(|((a, b), s)| (a - b).abs() <= 1e-14 * b.abs().max(s));
                let drop = (rss - trial_rss) / rss;
                p = trial;
                rss = trial_rss;
                history.push(rss);
                if drop < opts.relative_tolerance || small_step {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged && !opts.allow_unconverged {
        return Err(SpdcError::NonConvergence { iterations });
    }

    let jac = fd_jacobian(model, &p, x);
    let residuals: Vec<f64> = x.iter().zip(y).map(|(&x, &y)| y - model.eval(&p, x)).collect();
    let (a, _) = normal_equations(&jac, &residuals, w, np);
    let dof = (x.len() - np) as f64;
    let reduced_chi2 = rss / dof;
    let mut warnings = Vec::new();
    let uncertainties = match invert(&a, np) {
        Some(cov) => (0..np)
            .map(|j| (cov[j * np + j] * reduced_chi2).max(0.0).sqrt())
            .collect(),
        None => {
            warnings.push("singular curvature matrix: uncertainties unavailable".into());
            vec![f64::NAN; np]
        }
    };
    if !converged {
        warnings.push(format!(
            "not converged after {iterations} iterations; estimates unreliable"
        ));
    }
    Ok(FitReport {
        names: model.names().iter().map(|s| s.to_string()).collect(),
        params: p,
        uncertainties,
        rss,
        reduced_chi2,
        converged,
        iterations,
        rss_history: history,
        residuals,
        warnings,
    })
}
