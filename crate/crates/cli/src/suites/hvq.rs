use hwkern::hvq::{build_hvq, build_vq, memory_sweep, two_part_costs, Codebook, Match};
use hwkern::PatternFamily;

use super::{Ctx, Task};
use crate::report::{Check, Comparator::*, Provenance::*};

pub(super) const TASKS: [Task; 2] = [costs, classification];

fn costs(ctx: &Ctx) -> hwkern::Result<Vec<Check>> {
    let fam = PatternFamily::two_part_example(8);
    let (vq16, hvq16) = (build_vq(&fam)?.memory_cost(1), build_hvq(&fam)?.memory_cost(1));
    let mut formula_misses = 0;
    for n in (2..=64).step_by(2) {
        let fam = PatternFamily::two_part_example(n / 2);
        let built = (build_vq(&fam)?.memory_cost(1), build_hvq(&fam)?.memory_cost(1));
        if built != (4 * n, n + 8) || built != two_part_costs(n) {
            formula_misses += 1;
        }
    }
    let crossover = (1..=64).find(|&n| {
        let (vq, hvq) = two_part_costs(n);
        hvq < vq
    });
    let always_after = crossover.is_some_and(|c| (c..=64).all(|n| two_part_costs(n).1 < two_part_costs(n).0));

    // Ratio HVQ/VQ must fall as parts get longer, for every part count.
    let rows = memory_sweep(ctx.seed, &[2, 3, 4], &[1, 2, 4, 8, 16], 1)?;
    let ratio_rises = rows.chunks(5).flat_map(|c| c.windows(2)).filter(|w| w[1].ratio >= w[0].ratio).count();
    Ok(vec![
        Check::new("hvq.cost.vq_n16", vq16 as f64, Eq, 64.0, Paper),
        Check::new("hvq.cost.hvq_n16", hvq16 as f64, Eq, 24.0, Paper),
        Check::new("hvq.cost.formula_even_n_2_64", formula_misses as f64, Eq, 0.0, Paper),
        Check::new("hvq.cost.crossover_n", crossover.map_or(f64::NAN, |c| c as f64), Eq, 3.0, Derived),
        Check::new("hvq.cost.cheaper_beyond_crossover", always_after as u8 as f64, Eq, 1.0, Derived),
        Check::new("hvq.cost.ratio_falls_with_length", ratio_rises as f64, Eq, 0.0, Derived),
    ])
}

/// Both codebooks on every binary vector of the family's length, plus a few
/// off-alphabet probes.
fn classification(_: &Ctx) -> hwkern::Result<Vec<Check>> {
    let mut disagreements = 0usize;
    let mut members_missed = 0usize;
    for part_length in 1..=4 {
        let fam = PatternFamily::two_part_example(part_length);
        let (vq, hvq) = (build_vq(&fam)?, build_hvq(&fam)?);
        let len = fam.full_length();
        let probes = (0..1u32 << len)
            .map(|bits| (0..len).map(|i| i64::from((bits >> i) & 1)).collect::<Vec<i64>>())
            .chain([vec![2; len], vec![0; len + 1], vec![]]);
        for x in probes {
            if vq.classify(&x) != hvq.classify(&x) {
                disagreements += 1;
            }
        }
        for (k, &c) in fam.compositions.iter().enumerate() {
            if hvq.classify(&fam.pattern(c)) != Match::Class(k) {
                members_missed += 1;
            }
        }
    }
    Ok(vec![
        Check::new("hvq.classify.vq_hvq_disagreements", disagreements as f64, Eq, 0.0, Trivial),
        Check::new("hvq.classify.members_missed", members_missed as f64, Eq, 0.0, Paper),
    ])
}
