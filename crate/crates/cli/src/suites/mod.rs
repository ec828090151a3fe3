//! Check definitions, one module per suite.
//!
//! Every check id starts with its suite name, so sorting by id keeps a
//! suite's rows together in the combined report.

mod hbf;
mod hvq;
mod invariance;
mod kernels;
mod mex;
mod ramps;

use std::time::Instant;

use hwkern::rng;
use hwkern::Signal;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{Suite, SuiteConfig};
use crate::report::{Check, SuiteReport, SCHEMA_VERSION};
use crate::{CliError, Result};

/// Inputs shared by every check.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
    pub samples: usize,
}

type Task = fn(&Ctx) -> hwkern::Result<Vec<Check>>;

fn tasks(suite: Suite) -> Vec<Task> {
    match suite {
        Suite::Invariance => invariance::TASKS.to_vec(),
        Suite::Kernels => kernels::TASKS.to_vec(),
        Suite::Mex => mex::TASKS.to_vec(),
        Suite::Ramps => ramps::TASKS.to_vec(),
        Suite::Hbf => hbf::TASKS.to_vec(),
        Suite::Hvq => hvq::TASKS.to_vec(),
        Suite::All => Suite::INDIVIDUAL.iter().flat_map(|&s| tasks(s)).collect(),
    }
}

/// Runs every check of `config.suite` and returns the rows sorted by id.
///
/// Tasks run concurrently on a pool of `config.workers` threads. The values do
/// not depend on the pool size.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let ctx = Ctx {
        seed: config.seed,
        samples: config.samples,
    };
    let start = Instant::now();
    let work = tasks(config.suite);
    let run = || -> hwkern::Result<Vec<Vec<Check>>> { work.par_iter().map(|task| task(&ctx)).collect() };
    let groups = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::InvalidConfig(format!("cannot start {n} workers: {e}")))?
            .install(run),
        None => run(),
    }?;
    let mut checks: Vec<Check> = groups.into_iter().flatten().collect();
    checks.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    debug_assert!(checks.windows(2).all(|w| w[0].check_id != w[1].check_id));
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: config.suite,
        seed: config.seed,
        samples: config.samples,
        checks,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Independent random stream for check `tag`.
fn stream(ctx: &Ctx, tag: &str) -> rng::StreamRng {
    let key = tag.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    rng::stream(ctx.seed, &[key])
}

fn unit_vector<R: Rng>(r: &mut R, dim: usize) -> Signal {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(r)).collect();
        if let Ok(s) = Signal::normalize(&v) {
            return s;
        }
    }
}

fn sig(v: &[f64]) -> Signal {
    Signal::normalize(v).expect("nonzero literal")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
