use hwkern::hw::pool;
use hwkern::kernels::mex_psd_scan;
use hwkern::PoolingSpec;
use rand::Rng;

use super::{stream, Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 3] = [limits, shape, non_psd];

/// Instances in the indefiniteness scan.
pub const SCAN_INSTANCES: usize = 1000;
pub const SCAN_THRESHOLD: f64 = 1e-6;

fn mex(values: &[f64], xi: f64) -> hwkern::Result<f64> {
    pool(values, &PoolingSpec::mex(xi))
}

fn limits(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let v = [1.0, 2.0, 3.0, 4.0];
    let hi = mex(&v, 100.0)?;
    Ok(vec![
        Check::new("mex.limit.max", (hi - 4.0).abs(), Le, 0.05, Paper),
        Check::new("mex.limit.mean", (mex(&v, 1e-6)? - 2.5).abs(), Le, 1e-4, Paper),
        Check::new("mex.limit.min", (mex(&v, -100.0)? - 1.0).abs(), Le, 0.05, Paper),
        // log-sum-exp sits within ln(n)/xi below the max
        Check::new("mex.limit.max_gap_bound", 4.0 - hi, Le, 4f64.ln() / 100.0 + 1e-12, Derived),
        Check::new("mex.limit.mean_three", (mex(&[1.0, 2.0, 3.0], 1e-6)? - 2.0).abs(), Le, 1e-5, Trivial),
    ])
}

fn shape(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let direct = ((1.0 + 1f64.exp()) / 2.0).ln();
    let two_point = (mex(&[0.0, 1.0], 1.0)? - direct).abs();

    // Largest drop of Mex between consecutive xi on a grid, over random pools.
    let mut r = stream(ctx, "mex.monotone");
    let xis: Vec<f64> = (-40..=40).map(|k| k as f64 * 2.5).collect();
    let mut worst_drop = f64::NEG_INFINITY;
    let mut worst_escape = 0.0_f64;
    for _ in 0..200 {
        let len = r.random_range(1..=8);
        let vals: Vec<f64> = (0..len).map(|_| r.random_range(-2.0..2.0)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let curve = xis.iter().map(|&xi| mex(&vals, xi)).collect::<hwkern::Result<Vec<_>>>()?;
        for w in curve.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        for m in &curve {
            worst_escape = worst_escape.max(lo - m).max(m - hi);
        }
    }
    Ok(vec![
        Check::new("mex.two_point", two_point, Le, 1e-12, Derived),
        Check::new("mex.monotone_in_xi", worst_drop, Le, 1e-12, Trivial),
        Check::new("mex.within_min_max", worst_escape, Le, 0.0, Trivial),
    ])
}

fn non_psd(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let scan = mex_psd_scan(ctx.seed, SCAN_INSTANCES, SCAN_THRESHOLD)?;
    Ok(vec![Check::new(
        "mex.non_psd_scan",
        scan.most_negative.min_eigenvalue,
        Lt,
        -SCAN_THRESHOLD,
        Paper,
    )])
}
