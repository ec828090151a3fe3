use std::f64::consts::PI;

use hwkern::kernels::{
    gram, k0_mc, ktilde_mc, ktilde_step, oracle, selectivity_scan, step_kernel_exact, step_kernel_numeric,
    SELECTIVITY_MARGIN, STEP_ALPHA,
};
use hwkern::signal::cyclic_group;
use hwkern::{GramReport, Signal, TemplateSampler};
use rand::Rng;

use super::{sig, stream, unit_vector, Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 6] = [arccos, mc_structure, step, step_group, gram_psd, selectivity];

pub const ARCCOS_PAIRS: usize = 20;
pub const ARCCOS_Z: f64 = 3.0;
pub const STEP_GRID: usize = 100_000;

/// Pair 0 sits at a right angle after augmentation; the rest are random.
fn arccos_pairs(ctx: &Ctx) -> Vec<(Signal, Signal)> {
    let mut r = stream(ctx, "kernels.arccos");
    let mut pairs = vec![(sig(&[1.0, 0.0, 0.0]), sig(&[-1.0, 0.0, 0.0]))];
    for k in 1..ARCCOS_PAIRS {
        let d = [2, 3, 5][k % 3];
        pairs.push((unit_vector(&mut r, d), unit_vector(&mut r, d)));
    }
    pairs
}

fn arccos(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let sampler = TemplateSampler::gaussian(ctx.seed);
    let mut rows = vec![Check::new(
        "kernels.arccos.right_angle_oracle",
        (oracle::k0_gaussian(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]) - 1.0 / PI).abs(),
        Le,
        1e-15,
        Derived,
    )];
    for (k, (x, x2)) in arccos_pairs(ctx).iter().enumerate() {
        let est = k0_mc(x, x2, &sampler, ctx.samples)?;
        let z = (est.value - oracle::k0_gaussian(x.as_slice(), x2.as_slice())).abs() / est.stderr;
        rows.push(Check::new(format!("kernels.arccos.pair_{k:02}"), z, Le, ARCCOS_Z, Derived));
    }
    Ok(rows)
}

fn mc_structure(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let sampler = TemplateSampler::gaussian(ctx.seed);
    let mut r = stream(ctx, "kernels.structure");
    let (x, y) = (unit_vector(&mut r, 4), unit_vector(&mut r, 4));
    let asym = (k0_mc(&x, &y, &sampler, ctx.samples)?.value - k0_mc(&y, &x, &sampler, ctx.samples)?.value).abs();
    let self_value = k0_mc(&x, &x, &sampler, ctx.samples)?.value;

    let g2 = cyclic_group(2);
    let (e0, e1) = (sig(&[1.0, 0.0]), sig(&[0.0, 1.0]));
    let across = ktilde_mc(&e0, &e1, &g2, &sampler, ctx.samples)?.value;
    let within = ktilde_mc(&e0, &e0, &g2, &sampler, ctx.samples)?.value;
    Ok(vec![
        Check::new("kernels.k0_symmetric", asym, Le, 0.0, Trivial),
        Check::new("kernels.k0_self_nonnegative", self_value, Ge, 0.0, Trivial),
        Check::new("kernels.ktilde_same_orbit_d2", (across - within).abs(), Le, 1e-12, Derived),
    ])
}

fn step(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut r = stream(ctx, "kernels.step");
    let mut numeric_gap = 0.0_f64;
    for _ in 0..100 {
        let (a, b) = (r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0));
        let gap = (step_kernel_exact(a, b, 1.0)? - step_kernel_numeric(a, b, 1.0, STEP_GRID, STEP_ALPHA)?).abs();
        numeric_gap = numeric_gap.max(gap);
    }
    let mut identity_gap = 0.0_f64;
    for _ in 0..10_000 {
        let p: f64 = r.random_range(0.1..=3.0);
        let (a, b) = (r.random_range(-p..=p), r.random_range(-p..=p));
        let identity = p - 0.5 * (a + b + (a - b).abs());
        identity_gap = identity_gap.max((step_kernel_exact(a, b, p)? - identity).abs());
    }
    Ok(vec![
        Check::new("kernels.step.example", (step_kernel_exact(0.2, 0.5, 1.0)? - 0.5).abs(), Le, 1e-15, Derived),
        Check::new("kernels.step.numeric_vs_exact", numeric_gap, Le, 1e-3, Derived),
        Check::new("kernels.step.identity", identity_gap, Le, 1e-12, Trivial),
    ])
}

fn step_group(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let g = cyclic_group(2);
    let t = [sig(&[1.0, 0.0])];
    let v = ktilde_step(&sig(&[1.0, 0.0]), &sig(&[0.0, 1.0]), &t, &[1.0], &g, 1.0)?;
    Ok(vec![Check::new("kernels.ktilde_step.example", (v - 0.25).abs(), Le, 1e-15, Derived)])
}

/// `min_eig / max(|max_eig|, 1)`, compared against the PSD tolerance.
fn scaled_min_eig(rep: &GramReport) -> f64 {
    rep.min_eigenvalue / rep.max_eigenvalue.abs().max(1.0)
}

fn gram_psd(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut r = stream(ctx, "kernels.gram");
    let g = cyclic_group(4);
    let templates: Vec<Signal> = (0..3).map(|_| unit_vector(&mut r, 4)).collect();
    let weights = [1.0 / 3.0; 3];
    let pts: Vec<Signal> = (0..5).map(|_| unit_vector(&mut r, 4)).collect();
    let step_rep = gram(&pts, |a, b| ktilde_step(a, b, &templates, &weights, &g, 1.0))?;

    let sampler = TemplateSampler::gaussian(ctx.seed);
    let pts: Vec<Signal> = (0..5).map(|_| unit_vector(&mut r, 3)).collect();
    let k0_rep = gram(&pts, |a, b| k0_mc(a, b, &sampler, ctx.samples).map(|e| e.value))?;
    let tol = -hwkern::kernels::PSD_TOLERANCE;
    Ok(vec![
        Check::new("kernels.gram_psd.step", scaled_min_eig(&step_rep), Ge, tol, Derived),
        Check::new("kernels.gram_psd.k0", scaled_min_eig(&k0_rep), Ge, tol, Trivial),
    ])
}

/// One-hot versus normalized all-ones orbits in d=4, step-kernel `K~` with
/// the single template `e0` and `p = 1`.
fn selectivity(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let g = cyclic_group(4);
    let t = [sig(&[1.0, 0.0, 0.0, 0.0])];
    let kernel = |a: &Signal, b: &Signal| ktilde_step(a, b, &t, &[1.0], &g, 1.0);
    let onehot = g.orbit(&sig(&[1.0, 0.0, 0.0, 0.0]))?;
    let ones = g.orbit(&sig(&[1.0; 4]))?;
    let rep = selectivity_scan(&[onehot.clone(), ones], kernel, SELECTIVITY_MARGIN)?;
    let twin = selectivity_scan(&[onehot.clone(), onehot], kernel, SELECTIVITY_MARGIN)?;
    Ok(vec![
        Check::new(
            "kernels.selectivity.margin",
            rep.margin.unwrap_or(f64::NAN),
            Ge,
            SELECTIVITY_MARGIN,
            Paper,
        ),
        Check::new("kernels.selectivity.bounded", rep.max_abs_normalized, Le, 1.0 + 1e-9, Trivial),
        Check::new(
            "kernels.selectivity.identical_orbits",
            (twin.same_orbit_min - 1.0).abs(),
            Le,
            1e-10,
            Trivial,
        ),
    ])
}
