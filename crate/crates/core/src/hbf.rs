//! HyperBF networks: Gaussian radial expansions whose centers move.
//!
//! `f(x) = sum_a c_a G(|x - t_a|^2)` with `G(r2) = exp(-r2 / (2 sigma^2))`.
//! The fit objective is `H = sum_i Delta_i^2`, `Delta_i = y_i - f(x_i)`.
//! Coefficients can be solved in closed form for fixed centers; centers and
//! coefficients are trained jointly by (optionally noisy) gradient descent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `exp(-r2 / (2 sigma^2))`.
pub fn radial_basis(r2: f64, sigma: f64) -> f64 {
    (-r2 / (2.0 * sigma * sigma)).exp()
}

/// `dG/d(r2) = -G(r2) / (2 sigma^2)`.
pub fn radial_basis_deriv(r2: f64, sigma: f64) -> f64 {
    -radial_basis(r2, sigma) / (2.0 * sigma * sigma)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching nonempty inputs/targets ({} vs {})",
                inputs.len(),
                targets.len()
            )));
        }
        let d = inputs[0].len();
        if let Some(x) = inputs.iter().find(|x| x.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        Ok(TrainingSet { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Median Euclidean distance over all input pairs; the default width.
    pub fn median_pairwise_distance(&self) -> f64 {
        let mut d: Vec<f64> = (0..self.len())
            .flat_map(|i| (i + 1..self.len()).map(move |j| (i, j)))
            .map(|(i, j)| sq_dist(&self.inputs[i], &self.inputs[j]).sqrt())
            .collect();
        if d.is_empty() {
            return 1.0;
        }
        d.sort_by(f64::total_cmp);
        let m = d.len();
        if m % 2 == 1 {
            d[m / 2]
        } else {
            0.5 * (d[m / 2 - 1] + d[m / 2])
        }
    }
}

/// On-disk form `{d, n, sigma, lambda, centers, coeffs}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    d: usize,
    n: usize,
    sigma: f64,
    lambda: f64,
    centers: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct HbfModel {
    centers: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    sigma: f64,
    lambda: f64,
}

impl TryFrom<ModelFile> for HbfModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.centers.len() != f.n {
            return Err(Error::InvalidArgument(format!("n = {} but {} centers", f.n, f.centers.len())));
        }
        if let Some(c) = f.centers.iter().find(|c| c.len() != f.d) {
            return Err(Error::DimensionMismatch { expected: f.d, got: c.len() });
        }
        HbfModel::new(f.centers, f.coeffs, f.sigma, f.lambda)
    }
}

impl From<HbfModel> for ModelFile {
    fn from(m: HbfModel) -> Self {
        ModelFile {
            d: m.dim(),
            n: m.n(),
            sigma: m.sigma,
            lambda: m.lambda,
            centers: m.centers,
            coeffs: m.coeffs,
        }
    }
}

impl HbfModel {
    pub fn new(centers: Vec<Vec<f64>>, coeffs: Vec<f64>, sigma: f64, lambda: f64) -> Result<Self> {
        if centers.is_empty() || centers.len() != coeffs.len() {
            return Err(Error::InvalidArgument(format!(
                "need n >= 1 centers with one coefficient each ({} vs {})",
                centers.len(),
                coeffs.len()
            )));
        }
        let d = centers[0].len();
        if let Some(c) = centers.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: c.len() });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(HbfModel { centers, coeffs, sigma, lambda })
    }

    /// Zero coefficients at the given centers.
    pub fn with_centers(centers: Vec<Vec<f64>>, sigma: f64, lambda: f64) -> Result<Self> {
        let n = centers.len();
        Self::new(centers, vec![0.0; n], sigma, lambda)
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn set_coeffs(&mut self, coeffs: Vec<f64>) -> Result<()> {
        if coeffs.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: coeffs.len() });
        }
        self.coeffs = coeffs;
        Ok(())
    }

    pub fn set_centers(&mut self, centers: Vec<Vec<f64>>) -> Result<()> {
        if centers.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: centers.len() });
        }
        if let Some(c) = centers.iter().find(|c| c.len() != self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: c.len() });
        }
        self.centers = centers;
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self
            .centers
            .iter()
            .zip(&self.coeffs)
            .map(|(t, c)| c * radial_basis(sq_dist(x, t), self.sigma))
            .sum())
    }

    fn check(&self, data: &TrainingSet) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: data.dim() });
        }
        Ok(())
    }

    /// `Delta_i = y_i - f(x_i)`.
    pub fn residuals(&self, data: &TrainingSet) -> Result<Vec<f64>> {
        self.check(data)?;
        data.inputs
            .iter()
            .zip(&data.targets)
            .map(|(x, y)| Ok(y - self.eval(x)?))
            .collect()
    }

    /// `(G)_{i a} = G(|x_i - t_a|^2)`.
    pub fn design_matrix(&self, data: &TrainingSet) -> DMatrix<f64> {
        DMatrix::from_fn(data.len(), self.n(), |i, a| {
            radial_basis(sq_dist(&data.inputs[i], &self.centers[a]), self.sigma)
        })
    }
}

pub fn hbf_eval(model: &HbfModel, x: &[f64]) -> Result<f64> {
    model.eval(x)
}

/// `H = sum_i Delta_i^2`.
pub fn objective(model: &HbfModel, data: &TrainingSet) -> Result<f64> {
    Ok(model.residuals(data)?.iter().map(|d| d * d).sum())
}

/// `dH/dc_a = -2 sum_i Delta_i G(|x_i - t_a|^2)`.
pub fn grad_coeffs(model: &HbfModel, data: &TrainingSet) -> Result<Vec<f64>> {
    let delta = model.residuals(data)?;
    Ok(model
        .centers
        .iter()
        .map(|t| {
            -2.0 * data
                .inputs
                .iter()
                .zip(&delta)
                .map(|(x, d)| d * radial_basis(sq_dist(x, t), model.sigma))
                .sum::<f64>()
        })
        .collect())
}

/// `dH/dt_a = 4 c_a sum_i Delta_i G'(|x_i - t_a|^2) (x_i - t_a)`.
pub fn grad_centers(model: &HbfModel, data: &TrainingSet) -> Result<Vec<Vec<f64>>> {
    let delta = model.residuals(data)?;
    Ok(model
        .centers
        .iter()
        .zip(&model.coeffs)
        .map(|(t, &c)| {
            let mut g = vec![0.0; t.len()];
            for (x, d) in data.inputs.iter().zip(&delta) {
                let w = d * radial_basis_deriv(sq_dist(x, t), model.sigma);
                for ((gk, xk), tk) in g.iter_mut().zip(x).zip(t) {
                    *gk += w * (xk - tk);
                }
            }
            g.iter_mut().for_each(|v| *v *= 4.0 * c);
            g
        })
        .collect())
}

/// Jitter added to the normal-equation diagonal when the plain system is rank deficient.
pub const JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
    pub jittered: bool,
    /// Fewer samples than centers; the coefficients are not pinned down by data.
    pub underdetermined: bool,
}

/// Coefficients minimizing `|y - G c|^2 + lambda c^T g c` for fixed centers,
/// with `(g)_{ab} = G(|t_a - t_b|^2)`; the solution of
/// `(G^T G + lambda g) c = G^T y`.
///
/// Solved as the stacked least-squares problem `[G; sqrt(lambda) S] c ~ [y; 0]`
/// with `S^T S = g`, whose conditioning is that of `G` rather than `G^T G`.
/// If the stack is numerically rank deficient, rows `sqrt(JITTER) I` are added,
/// which puts `JITTER` on the normal-equation diagonal.
pub fn solve_coeffs(model: &HbfModel, data: &TrainingSet) -> Result<SolveReport> {
    model.check(data)?;
    let n = model.n();
    let big_g = model.design_matrix(data);
    let small_g = DMatrix::from_fn(n, n, |a, b| {
        radial_basis(sq_dist(&model.centers[a], &model.centers[b]), model.sigma)
    });
    let eig = SymmetricEigen::new(small_g);
    // S = diag(sqrt(mu)) V^T so that S^T S = g (negative rounding noise clipped).
    let root = DMatrix::from_fn(n, n, |r, c| {
        eig.eigenvalues[r].max(0.0).sqrt() * eig.eigenvectors[(c, r)]
    });
    let y = DVector::from_column_slice(&data.targets);

    let solve = |jitter: f64| -> Option<DVector<f64>> {
        let extra = if jitter > 0.0 { n } else { 0 };
        let rows = data.len() + n + extra;
        let mut a = DMatrix::zeros(rows, n);
        a.view_mut((0, 0), (data.len(), n)).copy_from(&big_g);
        a.view_mut((data.len(), 0), (n, n)).copy_from(&(&root * model.lambda.sqrt()));
        for k in 0..extra {
            a[(data.len() + n + k, k)] = jitter.sqrt();
        }
        let mut b = DVector::zeros(rows);
        b.rows_mut(0, data.len()).copy_from(&y);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin <= smax * f64::EPSILON * rows as f64 {
            return None;
        }
        svd.solve(&b, 0.0).ok().filter(|c| c.iter().all(|v| v.is_finite()))
    };
    let (coef, jittered) = match solve(0.0) {
        Some(c) => (c, false),
        None => (solve(JITTER).ok_or(Error::SingularSystem)?, true),
    };
    let fitted = &big_g * &coef;
    let max_residual = (&y - fitted).amax();
    Ok(SolveReport {
        coeffs: coef.iter().copied().collect(),
        max_residual,
        jittered,
        underdetermined: data.len() < n,
    })
}

/// Maximum Lloyd iterations in [`init_centers`].
pub const KMEANS_MAX_ITERS: usize = 50;

/// k-means centers for `n` clusters.
///
/// Starts from `n` distinct samples drawn with `seed`. Stops after
/// [`KMEANS_MAX_ITERS`] iterations or once no center moves by more than `1e-8`
/// relative to the data scale. Points go to the nearest center, lowest index
/// on ties. An empty cluster is re-seeded at the point farthest from its
/// assigned center.
pub fn init_centers(data: &TrainingSet, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let len = data.len();
    if n == 0 || n > len {
        return Err(Error::InvalidN { n, len });
    }
    let d = data.dim();
    let mut r = rng::stream(seed, &[0x6b6d]);
    let mut centers: Vec<Vec<f64>> = sample(&mut r, len, n)
        .into_iter()
        .map(|i| data.inputs[i].clone())
        .collect();
    let scale = data
        .inputs
        .iter()
        .flat_map(|x| x.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let mut assign = vec![0usize; len];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut dist = vec![0.0; len];
        for (i, x) in data.inputs.iter().enumerate() {
            let (best, bd) = centers
                .iter()
                .enumerate()
                .map(|(a, c)| (a, sq_dist(x, c)))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            assign[i] = best;
            dist[i] = bd;
        }
        let mut sums = vec![vec![0.0; d]; n];
        let mut counts = vec![0usize; n];
        for (i, x) in data.inputs.iter().enumerate() {
            counts[assign[i]] += 1;
            sums[assign[i]].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(n);
        for a in 0..n {
            if counts[a] == 0 {
                let far = (0..len).fold(0, |best, i| if dist[i] > dist[best] { i } else { best });
                dist[far] = 0.0;
                next.push(data.inputs[far].clone());
            } else {
                next.push(sums[a].iter().map(|s| s / counts[a] as f64).collect());
            }
        }
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < 1e-8 * scale {
            break;
        }
    }
    Ok(centers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Step size of the descent.
    pub omega: f64,
    pub max_iters: usize,
    /// Stop once the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Standard deviation of the zero-mean noise at iteration 1; decays as `1/iteration`.
    pub noise_amplitude: f64,
    pub seed: u64,
    /// Keep centers fixed and descend on the coefficients only.
    #[serde(default)]
    pub freeze_centers: bool,
    /// Keep coefficients fixed and descend on the centers only.
    #[serde(default)]
    pub freeze_coeffs: bool,
    /// Re-solve the coefficients in closed form every this many iterations.
    #[serde(default)]
    pub resolve_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            omega: 1e-3,
            max_iters: 1000,
            grad_tol: 1e-8,
            noise_amplitude: 0.0,
            seed: 0,
            freeze_centers: false,
            freeze_coeffs: false,
            resolve_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || self.max_iters == 0 || !(self.grad_tol > 0.0) || !(self.noise_amplitude >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        if self.freeze_centers && self.freeze_coeffs {
            return Err(Error::InvalidArgument("cannot freeze both centers and coefficients".into()));
        }
        if self.resolve_every == Some(0) {
            return Err(Error::InvalidArgument("resolve_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// State before each update, plus the final state.
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn final_objective(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.objective)
    }

    /// CSV with columns `iteration,objective,grad_inf_norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,objective,grad_inf_norm\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.iteration, r.objective, r.grad_inf_norm));
        }
        s
    }
}

fn inf_norm<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

type Grads = (Option<Vec<f64>>, Option<Vec<Vec<f64>>>);

/// Gradients of the unfrozen parameter groups.
fn gradients(m: &HbfModel, data: &TrainingSet, config: &TrainConfig) -> Result<Grads> {
    let gc = if config.freeze_coeffs { None } else { Some(grad_coeffs(m, data)?) };
    let gt = if config.freeze_centers { None } else { Some(grad_centers(m, data)?) };
    Ok((gc, gt))
}

fn grad_norm(gc: &Option<Vec<f64>>, gt: &Option<Vec<Vec<f64>>>) -> f64 {
    let c = gc.as_ref().map_or(0.0, |g| inf_norm(g.iter()));
    let t = gt.as_ref().map_or(0.0, |g| inf_norm(g.iter().flatten()));
    c.max(t)
}

/// Joint descent `c <- c - omega dH/dc + eta`, `t <- t - omega dH/dt + mu`.
pub fn train(model: &HbfModel, data: &TrainingSet, config: &TrainConfig) -> Result<(HbfModel, TrainTrace)> {
    config.validate()?;
    model.check(data)?;
    let mut m = model.clone();
    let mut r = rng::stream(config.seed, &[0x7472]);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let initial = objective(&m, data)?;
    let limit = 1e6 * initial.max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    let mut converged = false;
    for iteration in 0..config.max_iters {
        if let Some(k) = config.resolve_every {
            if iteration > 0 && iteration % k == 0 {
                m.coeffs = solve_coeffs(&m, data)?.coeffs;
            }
        }
        let obj = objective(&m, data)?;
        if obj > limit || !obj.is_finite() {
            return Err(Error::DivergenceDetected { iteration, objective: obj });
        }
        let (gc, gt) = gradients(&m, data, config)?;
        let gnorm = grad_norm(&gc, &gt);
        rows.push(TraceRow { iteration, objective: obj, grad_inf_norm: gnorm });
        if gnorm < config.grad_tol {
            converged = true;
            break;
        }
        let amp = config.noise_amplitude / (iteration + 1) as f64;
        let mut noise = || if amp > 0.0 { amp * normal.sample(&mut r) } else { 0.0 };
        if let Some(gc) = gc {
            for (c, g) in m.coeffs.iter_mut().zip(&gc) {
                *c += -config.omega * g + noise();
            }
        }
        if let Some(gt) = gt {
            for (t, g) in m.centers.iter_mut().zip(&gt) {
                for (tk, gk) in t.iter_mut().zip(g) {
                    *tk += -config.omega * gk + noise();
                }
            }
        }
    }
    if !converged {
        let (gc, gt) = gradients(&m, data, config)?;
        rows.push(TraceRow {
            iteration: config.max_iters,
            objective: objective(&m, data)?,
            grad_inf_norm: grad_norm(&gc, &gt),
        });
    }
    Ok((m, TrainTrace { rows, converged }))
}

/// Result of [`refine_centers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub grad_inf_norm: f64,
}

/// Drives the center gradient below `tol` with coefficients held fixed.
///
/// Damped Gauss-Newton steps: `(2 J^T J + mu D) delta = -dH/dt` with `J` the
/// Jacobian of `f(x_i)` in the centers and `D` the diagonal of `2 J^T J`. A
/// step is kept if `H` decreases, or if `H` is unchanged up to rounding and the
/// gradient shrinks; `mu` shrinks after a kept step and grows after a rejected one.
pub fn refine_centers(model: &HbfModel, data: &TrainingSet, tol: f64, max_iters: usize) -> Result<(HbfModel, RefineReport)> {
    model.check(data)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (n, d) = (model.n(), model.dim());
    let mut m = model.clone();
    let mut obj = objective(&m, data)?;
    let mut mu = 1e-3;
    let flat = |g: Vec<Vec<f64>>| DVector::from_iterator(n * d, g.into_iter().flatten());
    let mut grad = flat(grad_centers(&m, data)?);
    let mut iterations = 0;
    while iterations < max_iters && grad.amax() >= tol {
        iterations += 1;
        let jac = DMatrix::from_fn(data.len(), n * d, |i, j| {
            let (a, k) = (j / d, j % d);
            let x = &data.inputs[i];
            let t = &m.centers[a];
            -2.0 * m.coeffs[a] * radial_basis_deriv(sq_dist(x, t), m.sigma) * (x[k] - t[k])
        });
        let gn = 2.0 * jac.transpose() * &jac;
        let mut accepted = false;
        while mu < 1e12 {
            let mut lhs = gn.clone();
            for j in 0..n * d {
                lhs[(j, j)] += mu * gn[(j, j)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
                mu *= 10.0;
                continue;
            };
            let mut trial = m.clone();
            for (j, s) in step.iter().enumerate() {
                trial.centers[j / d][j % d] += s;
            }
            let trial_obj = objective(&trial, data)?;
            let trial_grad = flat(grad_centers(&trial, data)?);
            // Close to the minimum H stalls at rounding level; then a smaller gradient decides.
            let flat_enough = trial_obj <= obj * (1.0 + 1e-12) && trial_grad.amax() < grad.amax();
            if trial_obj < obj || flat_enough {
                m = trial;
                obj = trial_obj;
                grad = trial_grad;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let grad_inf_norm = grad.amax();
    Ok((
        m,
        RefineReport {
            iterations,
            converged: grad_inf_norm < tol,
            objective: obj,
            grad_inf_norm,
        },
    ))
}

/// Denominator magnitude below which a center is skipped in the fixed-point check.
pub const FIXED_POINT_DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// Max over non-skipped centers of `|t_a - sum_i P_i x_i / sum_i P_i|_inf`; 0 if all skipped.
    pub residual: f64,
    pub skipped: Vec<usize>,
}

/// Distance of each center from the weighted data mean it must equal at a
/// stationary point, with weights `P_i = Delta_i G'(|x_i - t_a|^2)`.
pub fn center_fixed_point_residual(model: &HbfModel, data: &TrainingSet) -> Result<FixedPointReport> {
    let delta = model.residuals(data)?;
    let mut residual = 0.0_f64;
    let mut skipped = Vec::new();
    for (a, t) in model.centers.iter().enumerate() {
        let weights: Vec<f64> = data
            .inputs
            .iter()
            .zip(&delta)
            .map(|(x, d)| d * radial_basis_deriv(sq_dist(x, t), model.sigma))
            .collect();
        let denom: f64 = weights.iter().sum();
        if denom.abs() <= FIXED_POINT_DENOM_FLOOR {
            skipped.push(a);
            continue;
        }
        for k in 0..t.len() {
            let target = data.inputs.iter().zip(&weights).map(|(x, w)| w * x[k]).sum::<f64>() / denom;
            residual = residual.max((t[k] - target).abs());
        }
    }
    Ok(FixedPointReport { residual, skipped })
}

/// Default threshold on `N / (n + n d)` for "many more samples than parameters".
pub const CAPACITY_RATIO: f64 = 5.0;

/// `(N / (n + n d), ratio >= threshold)`.
pub fn check_capacity(samples: usize, n: usize, d: usize, threshold: f64) -> (f64, bool) {
    let ratio = samples as f64 / (n + n * d) as f64;
    (ratio, ratio >= threshold)
}

/// `n` evenly spaced points on `[0, 2 pi]` with targets `sin x`.
pub fn sine_task(n: usize) -> TrainingSet {
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![2.0 * std::f64::consts::PI * i as f64 / (n.max(2) - 1) as f64])
        .collect();
    let targets = inputs.iter().map(|x| x[0].sin()).collect();
    TrainingSet { inputs, targets }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingCentersOutcome {
    pub initial_objective: f64,
    pub moving_objective: f64,
    pub fixed_objective: f64,
    pub refine: RefineReport,
    pub fixed_point: FixedPointReport,
}

/// Moving versus fixed centers on a shared start.
///
/// Both arms start from k-means centers with closed-form coefficients and run
/// `config`; the fixed arm never updates its centers. The moving result is
/// then refined with [`refine_centers`] until the center gradient is below
/// `refine_tol`, and the center fixed point is checked there. Holding the
/// coefficients matters: at a joint stationary point `sum_i P_i` is itself
/// proportional to `dH/dc_a` and vanishes, so the fixed-point quotient is
/// undefined in the limit.
pub fn moving_centers_experiment(
    data: &TrainingSet,
    n: usize,
    sigma: f64,
    config: &TrainConfig,
    refine_tol: f64,
    refine_max_iters: usize,
) -> Result<MovingCentersOutcome> {
    let centers = init_centers(data, n, config.seed)?;
    let mut start = HbfModel::with_centers(centers, sigma, 0.0)?;
    start.coeffs = solve_coeffs(&start, data)?.coeffs;
    let initial_objective = objective(&start, data)?;
    let moving_cfg = TrainConfig { freeze_centers: false, freeze_coeffs: false, ..*config };
    let (moving, moving_trace) = train(&start, data, &moving_cfg)?;
    let (_, fixed_trace) = train(&start, data, &TrainConfig { freeze_centers: true, ..moving_cfg })?;
    let (refined, refine) = refine_centers(&moving, data, refine_tol, refine_max_iters)?;
    Ok(MovingCentersOutcome {
        initial_objective,
        moving_objective: moving_trace.final_objective(),
        fixed_objective: fixed_trace.final_objective(),
        refine,
        fixed_point: center_fixed_point_residual(&refined, data)?,
    })
}
