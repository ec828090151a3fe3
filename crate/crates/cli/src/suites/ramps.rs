use hwkern::ramp::{abs_identity, fit_ramp_combination, hat_via_ramps, step_approx, Grid};
use rand::Rng;

use super::{stream, Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 3] = [identities, steps, fits];

pub const GAUSSIAN_GRID: Grid = Grid {
    lo: -3.0,
    hi: 3.0,
    n_points: 601,
};

fn identities(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut r = stream(ctx, "ramps.abs");
    let abs_gap = (0..1_000_000)
        .map(|_| {
            let s: f64 = r.random_range(-1e3..1e3);
            (abs_identity(s) - s.abs()).abs()
        })
        .fold(0.0, f64::max);
    let peak_edges = [(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0)]
        .iter()
        .map(|&(s, want)| (hat_via_ramps(s, 1.0) - want).abs())
        .fold(0.0, f64::max);
    let flank = (hat_via_ramps(0.5, 1.0) - 0.5).abs().max((hat_via_ramps(-0.5, 1.0) - 0.5).abs());
    // The hat is piecewise linear with knots on the grid, so the trapezoid rule is exact.
    let n = 2001;
    let h = 4.0 / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| hat_via_ramps(-2.0 + i as f64 * h, 1.0)).collect();
    let integral = h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n - 1]));
    Ok(vec![
        Check::new("ramps.abs_identity", abs_gap, Le, 0.0, Trivial),
        Check::new("ramps.hat.peak_edges", peak_edges, Le, 0.0, Trivial),
        Check::new("ramps.hat.flank", flank, Le, 1e-15, Trivial),
        Check::new("ramps.hat.integral", (integral - 1.0).abs(), Le, 1e-12, Trivial),
    ])
}

fn steps(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let alphas = [10.0, 1e2, 1e4, 1e6];
    let mut increases = 0;
    let mut final_err = 0.0_f64;
    for s in [-0.5, -0.01, 0.01, 0.5] {
        let heaviside = if s > 0.0 { 1.0 } else { 0.0 };
        let errs: Vec<f64> = alphas.iter().map(|&a| (step_approx(s, a) - heaviside).abs()).collect();
        increases += errs.windows(2).filter(|w| w[1] > w[0]).count();
        final_err = final_err.max(errs[errs.len() - 1]);
    }
    Ok(vec![
        Check::new("ramps.step.error_nonincreasing", increases as f64, Eq, 0.0, Trivial),
        Check::new("ramps.step.error_at_alpha_1e6", final_err, Le, 0.0, Trivial),
    ])
}

fn fits(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let unit = Grid {
        lo: -1.0,
        hi: 1.0,
        n_points: 201,
    };
    let relu_fit = fit_ramp_combination(|s| s.max(0.0), unit, 1)?;
    let abs_fit = fit_ramp_combination(f64::abs, unit, 2)?;
    let gaussian = |s: f64| (-0.5 * s * s).exp();
    let sweep = [5, 10, 20, 40]
        .iter()
        .map(|&k| fit_ramp_combination(gaussian, GAUSSIAN_GRID, k).map(|f| f.sup_error))
        .collect::<hwkern::Result<Vec<_>>>()?;
    let worst_rise = sweep.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::new("ramps.fit.relu_k1", relu_fit.sup_error, Le, 1e-10, Trivial),
        Check::new("ramps.fit.abs_k2", abs_fit.sup_error, Le, 1e-10, Trivial),
        Check::new("ramps.fit.gaussian_k20", sweep[2], Le, 0.05, Derived),
        Check::new("ramps.fit.error_monotone_in_k", worst_rise, Le, 0.0, Derived),
    ])
}
