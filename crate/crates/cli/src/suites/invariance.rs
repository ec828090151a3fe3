use hwkern::hw::pool;
use hwkern::kernels::ktilde_mc;
use hwkern::signal::{apply, cyclic_group};
use hwkern::{FiniteGroup, HwLayer, Permutation, PoolingSpec, TemplateSampler};

use super::{sig, stream, unit_vector, Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 4] = [axioms, layer_gaps, ktilde_gaps, misc];

pub const DIMS: [usize; 3] = [2, 4, 8];

fn axioms(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let failures = (1..=64).filter(|&d| !cyclic_group(d).verify_axioms().all_pass()).count();
    Ok(vec![Check::new("invariance.group_axioms_d1_64", failures as f64, Eq, 0.0, Trivial)])
}

fn pooling_kinds() -> [(&'static str, PoolingSpec); 5] {
    [
        ("sum", PoolingSpec::Sum),
        ("max", PoolingSpec::Max),
        ("mean", PoolingSpec::Mean),
        ("softmax", PoolingSpec::softmax(2)),
        ("mex", PoolingSpec::mex(5.0)),
    ]
}

/// Largest signature gap over random layers and inputs in every dimension.
fn layer_gaps(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut rows = Vec::new();
    for (name, spec) in pooling_kinds() {
        let mut r = stream(ctx, &format!("invariance.layer.{name}"));
        let mut gap = 0.0_f64;
        for d in DIMS {
            let templates = (0..3).map(|_| unit_vector(&mut r, d)).collect();
            let layer = HwLayer::new(templates, vec![-0.3, 0.0, 0.2], cyclic_group(d), spec)?;
            for _ in 0..10 {
                gap = gap.max(layer.invariance_gap(&unit_vector(&mut r, d))?);
            }
        }
        rows.push(Check::new(format!("invariance.layer_gap.{name}"), gap, Le, 1e-12, Trivial));
    }
    Ok(rows)
}

/// `max_g |K~(g x, x2) - K~(x, x2)|` with a shared sample stream.
fn ktilde_gaps(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let sampler = TemplateSampler::gaussian(ctx.seed);
    let mut r = stream(ctx, "invariance.ktilde");
    let mut rows = Vec::new();
    for d in DIMS {
        let group = cyclic_group(d);
        let (x, x2) = (unit_vector(&mut r, d), unit_vector(&mut r, d));
        let base = ktilde_mc(&x, &x2, &group, &sampler, ctx.samples)?.value;
        let mut gap = 0.0_f64;
        for g in group.elements() {
            let moved = ktilde_mc(&apply(g, &x)?, &x2, &group, &sampler, ctx.samples)?.value;
            gap = gap.max((moved - base).abs());
        }
        rows.push(Check::new(format!("invariance.ktilde_gap.d{d}"), gap, Le, 1e-10, Paper));
    }
    Ok(rows)
}

fn misc(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    // Pooling over {id, shift-1} in d=4 is not a group average.
    let subset = FiniteGroup::from_elements_unchecked(vec![Permutation::identity(4), Permutation::shift(4, 1)])?;
    let layer = HwLayer::new(vec![sig(&[1.0, 0.0, 0.0, 0.0])], vec![0.0], subset, PoolingSpec::Sum)?;
    let mut gap = 0.0_f64;
    for i in 0..4 {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        gap = gap.max(layer.invariance_gap(&sig(&v))?);
    }
    let softmax = pool(&[1.0, 0.0], &PoolingSpec::softmax(2))?;
    Ok(vec![
        Check::new("invariance.subset_gap_positive", gap, Gt, 0.0, Derived),
        Check::new("invariance.softmax_two_point", (softmax - 1.0 / 3.0).abs(), Le, 1e-15, Derived),
    ])
}
