use hwkern::hbf::{
    check_capacity, grad_centers, grad_coeffs, moving_centers_experiment, objective, sine_task, solve_coeffs,
    CAPACITY_RATIO,
};
use hwkern::{HbfModel, TrainConfig, TrainingSet};
use rand::Rng;

use super::{max_abs_diff, stream, Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 3] = [gradients, solves, moving_centers];

pub const GRAD_INSTANCES: usize = 100;
pub const GRAD_REL_TOL: f64 = 1e-5;
pub const SINE_POINTS: usize = 200;
pub const SINE_CENTERS: usize = 10;
pub const SINE_SIGMA: f64 = 0.5;
pub const REFINE_TOL: f64 = 1e-10;
pub const REFINE_MAX_ITERS: usize = 500;

fn random_points<R: Rng>(r: &mut R, count: usize, d: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

fn targets(inputs: &[Vec<f64>]) -> Vec<f64> {
    inputs.iter().map(|x| x.iter().map(|v| v.sin()).sum()).collect()
}

/// Central differences of the objective in every coefficient and center coordinate,
/// flattened as `[coeffs..., t_1..., t_n...]`.
fn fd_gradient(model: &HbfModel, data: &TrainingSet) -> hwkern::Result<Vec<f64>> {
    let mut params: Vec<f64> = model.coeffs().to_vec();
    params.extend(model.centers().iter().flatten());
    let (n, d) = (model.n(), model.dim());
    let eval = |p: &[f64]| -> hwkern::Result<f64> {
        let centers = p[n..].chunks(d).map(<[f64]>::to_vec).collect();
        objective(&HbfModel::new(centers, p[..n].to_vec(), model.sigma(), model.lambda())?, data)
    };
    (0..params.len())
        .map(|i| {
            let h = 1e-6 * params[i].abs().max(1.0);
            let mut p = params.clone();
            p[i] += h;
            let up = eval(&p)?;
            p[i] -= 2.0 * h;
            Ok((up - eval(&p)?) / (2.0 * h))
        })
        .collect()
}

/// Worst `max |analytic - fd| / max(|analytic|_inf, 1e-12)` over random models.
fn gradients(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut r = stream(ctx, "hbf.gradients");
    let mut worst = 0.0_f64;
    for _ in 0..GRAD_INSTANCES {
        let (n, d, big_n) = (r.random_range(1..=4), r.random_range(1..=3), r.random_range(5..=15));
        let inputs = random_points(&mut r, big_n, d);
        let data = TrainingSet::new(inputs.clone(), targets(&inputs))?;
        let coeffs = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let model = HbfModel::new(random_points(&mut r, n, d), coeffs, r.random_range(0.3..1.5), 0.0)?;
        let mut analytic = grad_coeffs(&model, &data)?;
        analytic.extend(grad_centers(&model, &data)?.into_iter().flatten());
        let scale = analytic.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
        worst = worst.max(max_abs_diff(&analytic, &fd_gradient(&model, &data)?) / scale);
    }
    Ok(vec![Check::new("hbf.gradient_vs_fd", worst, Lt, GRAD_REL_TOL, Derived)])
}

fn solves(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut r = stream(ctx, "hbf.interpolation");
    let inputs = random_points(&mut r, 20, 2);
    let data = TrainingSet::new(inputs.clone(), targets(&inputs))?;
    let model = HbfModel::with_centers(inputs, data.median_pairwise_distance(), 1e-12)?;
    let interp = solve_coeffs(&model, &data)?;

    // One center at 0, data (0, 1) and (1, 0), sigma 1: c = 1 / (1 + e^-1).
    let tiny = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0])?;
    let c = solve_coeffs(&HbfModel::with_centers(vec![vec![0.0]], 1.0, 0.0)?, &tiny)?.coeffs[0];
    let (ratio, _) = check_capacity(SINE_POINTS, SINE_CENTERS, 1, CAPACITY_RATIO);
    Ok(vec![
        Check::new("hbf.interpolation_residual", interp.max_residual, Le, 1e-6, Paper),
        Check::new("hbf.solve_1x1", (c - 1.0 / (1.0 + (-1f64).exp())).abs(), Le, 1e-12, Derived),
        Check::new("hbf.capacity_ratio_sine", ratio, Ge, CAPACITY_RATIO, Trivial),
    ])
}

fn moving_centers(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let config = TrainConfig {
        omega: 1e-3,
        max_iters: 5000,
        grad_tol: REFINE_TOL,
        seed: ctx.seed,
        ..TrainConfig::default()
    };
    let out = moving_centers_experiment(
        &sine_task(SINE_POINTS),
        SINE_CENTERS,
        SINE_SIGMA,
        &config,
        REFINE_TOL,
        REFINE_MAX_ITERS,
    )?;
    let fixed_point = Check::new("hbf.center_fixed_point", out.fixed_point.residual, Le, 1e-6, Derived);
    let at_stationary_point = out.refine.converged && out.fixed_point.skipped.len() < SINE_CENTERS;
    Ok(vec![
        Check::new("hbf.moving_minus_fixed_objective", out.moving_objective - out.fixed_objective, Lt, 0.0, Derived),
        if at_stationary_point {
            fixed_point
        } else {
            fixed_point.skipped()
        },
    ])
}
