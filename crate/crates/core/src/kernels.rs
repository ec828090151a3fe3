//! Kernels induced by rectifier HW modules.
//!
//! `K0(x, x') = E_{t,b}[ |<t,x>+b|_+ |<t,x'>+b|_+ ]` is estimated by Monte Carlo
//! over `(t, b)`. The group-averaged kernel `K~` replaces each factor by its
//! exact average over a finite group, so only the `(t, b)` axis carries
//! sampling error and invariance holds sample by sample.
//!
//! Samples are drawn in fixed-size blocks, each from its own stream keyed by
//! `(seed, block)`. Block results are merged in block order, so estimates do
//! not depend on the number of worker threads. Every evaluation with the same
//! sampler sees the same draws, which makes a Monte-Carlo Gram matrix a finite
//! sum of outer products.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hw::{pool, PoolingSpec};
use crate::rng;
use crate::signal::{cyclic_group, FiniteGroup, Orbit, Signal};
use crate::{dot, relu};

/// Samples per independently seeded block.
pub const BLOCK_SIZE: usize = 8192;

/// Relative floor applied to the largest eigenvalue when deciding PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateLaw {
    GaussianStdNormal,
    UniformSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasLaw {
    GaussianStdNormal,
    /// Uniform on `(-B, B)`.
    Uniform(f64),
}

/// The measure over `(t, b)` together with the seed of its sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateSampler {
    pub template_law: TemplateLaw,
    pub bias_law: BiasLaw,
    pub seed: u64,
}

impl TemplateSampler {
    /// Gaussian templates and biases; the configuration with a closed-form oracle.
    pub fn gaussian(seed: u64) -> Self {
        TemplateSampler {
            template_law: TemplateLaw::GaussianStdNormal,
            bias_law: BiasLaw::GaussianStdNormal,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bias_law {
            BiasLaw::Uniform(b) if !(b > 0.0 && b.is_finite()) => Err(Error::InvalidArgument(
                format!("uniform bias bound must be positive, got {b}"),
            )),
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut rng::StreamRng, t: &mut [f64]) -> f64 {
        for v in t.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        if self.template_law == TemplateLaw::UniformSphere {
            let n = dot(t, t).sqrt();
            t.iter_mut().for_each(|v| *v /= n);
        }
        match self.bias_law {
            BiasLaw::GaussianStdNormal => StandardNormal.sample(rng),
            BiasLaw::Uniform(b) => Uniform::new(-b, b).expect("validated bound").sample(rng),
        }
    }

    /// Folds each block of draws into its own accumulator, in parallel across
    /// blocks; accumulators come back in block order.
    fn fold_blocks<T, I, F>(&self, dim: usize, samples: usize, init: I, step: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &[f64], f64) + Sync,
    {
        let blocks = samples.div_ceil(BLOCK_SIZE);
        (0..blocks)
            .into_par_iter()
            .map(|k| {
                let len = BLOCK_SIZE.min(samples - k * BLOCK_SIZE);
                let mut r = rng::stream(self.seed, &[k as u64]);
                let mut t = vec![0.0; dim];
                let mut acc = init();
                for _ in 0..len {
                    let b = self.draw(&mut r, &mut t);
                    step(&mut acc, &t, b);
                }
                acc
            })
            .collect()
    }

    /// Materializes the first `samples` draws, in stream order.
    pub fn draws(&self, dim: usize, samples: usize) -> Vec<(Vec<f64>, f64)> {
        self.fold_blocks(dim, samples, Vec::new, |out, t, b| out.push((t.to_vec(), b)))
            .into_iter()
            .flatten()
            .collect()
    }
}

/// A Monte-Carlo kernel value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Running mean / sum of squared deviations, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n / n,
            m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n,
        }
    }

    fn estimate(self) -> KernelEstimate {
        let var = self.m2 / (self.n - 1.0);
        KernelEstimate {
            value: self.mean,
            stderr: (var / self.n).sqrt(),
            samples: self.n as usize,
        }
    }
}

fn check_dims(x: &Signal, y: &Signal) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 Monte-Carlo samples, got {samples}"
        )));
    }
    Ok(())
}

/// `K0(x, x2)` with no group action.
pub fn k0_mc(x: &Signal, x2: &Signal, sampler: &TemplateSampler, samples: usize) -> Result<KernelEstimate> {
    ktilde_mc(x, x2, &FiniteGroup::trivial(x.dim()), sampler, samples)
}

/// Group-averaged `K~(x, x2)`: exact double sum over the group, Monte Carlo over `(t, b)`.
///
/// The double sum factorizes per draw into
/// `(mean_g |<g t, x>+b|_+) * (mean_g' |<g' t, x2>+b|_+)`.
pub fn ktilde_mc(
    x: &Signal,
    x2: &Signal,
    group: &FiniteGroup,
    sampler: &TemplateSampler,
    samples: usize,
) -> Result<KernelEstimate> {
    check_dims(x, x2)?;
    if group.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            got: x.dim(),
        });
    }
    check_samples(samples)?;
    sampler.validate()?;
    // <g t, x> = <t, g^-1 x>
    let pulled = |s: &Signal| -> Vec<Vec<f64>> {
        group
            .elements()
            .iter()
            .map(|g| g.inverse().permute(s.as_slice()))
            .collect()
    };
    let (xs, x2s) = (pulled(x), pulled(x2));
    let order = group.order() as f64;
    let avg = |orbit: &[Vec<f64>], t: &[f64], b: f64| -> f64 {
        orbit.iter().map(|v| relu(dot(t, v) + b)).sum::<f64>() / order
    };
    let blocks = sampler.fold_blocks(x.dim(), samples, Moments::default, |m, t, b| {
        m.push(avg(&xs, t, b) * avg(&x2s, t, b))
    });
    Ok(blocks
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate())
}

fn check_range(v: f64, p: f64) -> Result<()> {
    // Dot products of unit vectors can round just past +-1.
    if v.abs() > p * (1.0 + 1e-12) || !v.is_finite() {
        return Err(Error::OutOfRange { value: v, p });
    }
    Ok(())
}

/// `int_{-p}^{p} H(b - xs) H(b - xs2) db = p - max(xs, xs2)`.
pub fn step_kernel_exact(xs: f64, xs2: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    check_range(xs, p)?;
    check_range(xs2, p)?;
    Ok(p - xs.max(xs2))
}

/// Default ramp steepness of the numeric step kernel.
pub const STEP_ALPHA: f64 = 1e4;

/// Trapezoid integration of the same integral with `H` replaced by the ramp
/// step `alpha (|s|_+ - |s - 1/alpha|_+)`.
pub fn step_kernel_numeric(xs: f64, xs2: f64, p: f64, grid_points: usize, alpha: f64) -> Result<f64> {
    if !(p > 0.0) || grid_points < 1000 || !(alpha > 0.0) {
        return Err(Error::InvalidArgument(
            "need p > 0, alpha > 0 and at least 1000 grid points".into(),
        ));
    }
    check_range(xs, p)?;
    check_range(xs2, p)?;
    let h = 2.0 * p / (grid_points - 1) as f64;
    let f = |b: f64| crate::ramp::step_approx(b - xs, alpha) * crate::ramp::step_approx(b - xs2, alpha);
    let interior: f64 = (1..grid_points - 1).map(|i| f(-p + i as f64 * h)).sum();
    Ok(h * (interior + 0.5 * (f(-p) + f(p))))
}

/// `p - sum_t w_t mean_{g,g'} max(<I2, g t>, <I, g' t>)`.
///
/// Evaluated as the average of the row- and column-major sums so that
/// swapping the arguments gives a bit-identical result.
pub fn ktilde_step(
    i1: &Signal,
    i2: &Signal,
    templates: &[Signal],
    weights: &[f64],
    group: &FiniteGroup,
    p: f64,
) -> Result<f64> {
    check_dims(i1, i2)?;
    if templates.len() != weights.len() || templates.is_empty() {
        return Err(Error::InvalidArgument(
            "need one weight per template and at least one template".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightsNotNormalized(total));
    }
    let order = group.order() as f64;
    let mut acc = 0.0;
    for (t, &w) in templates.iter().zip(weights) {
        check_dims(i1, t)?;
        if t.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: t.dim(),
            });
        }
        let proj = |s: &Signal| -> Result<Vec<f64>> {
            group
                .elements()
                .iter()
                .map(|g| {
                    let v = dot(s.as_slice(), &g.permute(t.as_slice()));
                    check_range(v, p).map(|_| v)
                })
                .collect()
        };
        let (u, v) = (proj(i2)?, proj(i1)?);
        let row: f64 = u.iter().map(|a| v.iter().map(|b| a.max(*b)).sum::<f64>()).sum();
        let col: f64 = v.iter().map(|b| u.iter().map(|a| a.max(*b)).sum::<f64>()).sum();
        acc += w * 0.5 * (row + col) / (order * order);
    }
    Ok(p - acc)
}

/// A Gram matrix with its extreme eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub matrix: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub psd_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSummary {
    pub min_eig: f64,
    pub max_eig: f64,
    pub psd_pass: bool,
    pub n_points: usize,
    pub kernel_id: String,
    pub seed: u64,
}

impl GramReport {
    /// Builds a report from a symmetric matrix.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Self {
        let n = matrix.len();
        let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        let eig = SymmetricEigen::new(m).eigenvalues;
        let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eigenvalue = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let psd_pass = min_eigenvalue >= -PSD_TOLERANCE * max_eigenvalue.abs().max(1.0);
        GramReport {
            matrix,
            min_eigenvalue,
            max_eigenvalue,
            psd_pass,
        }
    }

    pub fn summary(&self, kernel_id: &str, seed: u64) -> GramSummary {
        GramSummary {
            min_eig: self.min_eigenvalue,
            max_eig: self.max_eigenvalue,
            psd_pass: self.psd_pass,
            n_points: self.matrix.len(),
            kernel_id: kernel_id.to_string(),
            seed,
        }
    }

    /// `row,col,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,value\n");
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                s.push_str(&format!("{i},{j},{v:e}\n"));
            }
        }
        s
    }
}

/// Evaluates `kernel` on every ordered pair and runs a symmetric eigensolve.
pub fn gram<K>(points: &[Signal], kernel: K) -> Result<GramReport>
where
    K: Fn(&Signal, &Signal) -> Result<f64> + Sync,
{
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument("gram needs at least 2 points".into()));
    }
    let flat: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| kernel(&points[k / n], &points[k % n]))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (flat[i * n + j], flat[j * n + i]);
            let gap = (a - b).abs();
            if gap > 1e-9 {
                return Err(Error::KernelAsymmetric { i, j, gap });
            }
            matrix[i][j] = if i <= j { a } else { b };
        }
    }
    Ok(GramReport::from_matrix(matrix))
}

/// Normalized kernel extremes over same-orbit and distinct-orbit pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectivityReport {
    pub same_orbit_min: f64,
    pub distinct_orbit_max: Option<f64>,
    /// `same_orbit_min - distinct_orbit_max`; `None` when every orbit is equivalent.
    pub margin: Option<f64>,
    pub max_abs_normalized: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Default margin required for selectivity.
pub const SELECTIVITY_MARGIN: f64 = 1e-3;

/// Scans the normalized kernel `K(x,y)/sqrt(K(x,x)K(y,y))` over orbit members.
///
/// Orbits whose member multisets coincide are treated as the same orbit.
pub fn selectivity_scan<K>(orbits: &[Orbit], kernel: K, threshold: f64) -> Result<SelectivityReport>
where
    K: Fn(&Signal, &Signal) -> Result<f64> + Sync,
{
    let keys: Vec<Vec<Vec<f64>>> = orbits.iter().map(Orbit::sorted_members).collect();
    let class: Vec<usize> = (0..orbits.len())
        .map(|i| (0..=i).find(|&j| keys[j] == keys[i]).unwrap_or(i))
        .collect();
    let points: Vec<(usize, &Signal)> = orbits
        .iter()
        .enumerate()
        .flat_map(|(o, orb)| orb.members.iter().map(move |m| (o, m)))
        .collect();
    let diag: Vec<f64> = points
        .par_iter()
        .map(|(_, m)| kernel(m, m))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (i..points.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<(bool, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let k = kernel(points[i].1, points[j].1)?;
            let same = class[points[i].0] == class[points[j].0];
            Ok((same, k / (diag[i] * diag[j]).sqrt()))
        })
        .collect::<Result<_>>()?;
    let mut same_min = f64::INFINITY;
    let mut distinct_max: Option<f64> = None;
    let mut max_abs = 0.0_f64;
    for (same, v) in values {
        max_abs = max_abs.max(v.abs());
        if same {
            same_min = same_min.min(v);
        } else {
            distinct_max = Some(distinct_max.map_or(v, |d| d.max(v)));
        }
    }
    let margin = distinct_max.map(|d| same_min - d);
    Ok(SelectivityReport {
        same_orbit_min: same_min,
        distinct_orbit_max: distinct_max,
        margin,
        max_abs_normalized: max_abs,
        threshold,
        pass: margin.is_none_or(|m| m >= threshold),
    })
}

/// `Mex_xi({ <x, g y> : g in G })`, the pairwise similarity obtained by
/// Mex-pooling dot products over a group.
pub fn mex_similarity(x: &Signal, y: &Signal, group: &FiniteGroup, xi: f64) -> Result<f64> {
    check_dims(x, y)?;
    let vals: Vec<f64> = group
        .elements()
        .iter()
        .map(|g| dot(x.as_slice(), &g.permute(y.as_slice())))
        .collect();
    pool(&vals, &PoolingSpec::mex(xi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MexScanInstance {
    pub index: usize,
    pub dim: usize,
    pub xi: f64,
    pub n_points: usize,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MexScanReport {
    pub instances: usize,
    pub violations: usize,
    pub first_violation: Option<MexScanInstance>,
    pub most_negative: MexScanInstance,
}

pub const MEX_SCAN_DIMS: [usize; 3] = [2, 3, 4];
pub const MEX_SCAN_XIS: [f64; 3] = [1.0, 5.0, 25.0];

/// Random search for indefinite Mex-similarity matrices.
///
/// Instance `i` uses dimension and `xi` cycling through [`MEX_SCAN_DIMS`] and
/// [`MEX_SCAN_XIS`], between 3 and 6 random unit points, and the cyclic group.
/// An instance violates PSD when its smallest eigenvalue is below `-threshold`.
pub fn mex_psd_scan(seed: u64, instances: usize, threshold: f64) -> Result<MexScanReport> {
    if instances == 0 {
        return Err(Error::InvalidArgument("scan needs at least one instance".into()));
    }
    let results: Vec<MexScanInstance> = (0..instances)
        .into_par_iter()
        .map(|index| {
            let dim = MEX_SCAN_DIMS[index % MEX_SCAN_DIMS.len()];
            let xi = MEX_SCAN_XIS[(index / MEX_SCAN_DIMS.len()) % MEX_SCAN_XIS.len()];
            let mut r = rng::stream(seed, &[0x006d_6578, index as u64]);
            let n_points = r.random_range(3..=6);
            let points = (0..n_points)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
                    Signal::normalize(&v)
                })
                .collect::<Result<Vec<_>>>()?;
            let group = cyclic_group(dim);
            let report = gram(&points, |a, b| mex_similarity(a, b, &group, xi))?;
            Ok(MexScanInstance {
                index,
                dim,
                xi,
                n_points,
                min_eigenvalue: report.min_eigenvalue,
            })
        })
        .collect::<Result<_>>()?;
    let violating: Vec<&MexScanInstance> = results
        .iter()
        .filter(|r| r.min_eigenvalue < -threshold)
        .collect();
    let most_negative = results
        .iter()
        .min_by(|a, b| a.min_eigenvalue.total_cmp(&b.min_eigenvalue))
        .cloned()
        .expect("nonempty scan");
    Ok(MexScanReport {
        instances,
        violations: violating.len(),
        first_violation: violating.first().map(|r| (*r).clone()),
        most_negative,
    })
}

/// Closed-form reference kernels.
pub mod oracle {
    use std::f64::consts::PI;

    /// Order-1 arc-cosine kernel `(1/pi) |u| |v| (sin th + (pi - th) cos th)`.
    pub fn arccos1(u: &[f64], v: &[f64]) -> f64 {
        let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let c = (u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv)).clamp(-1.0, 1.0);
        let th = c.acos();
        nu * nv * (th.sin() + (PI - th) * c) / PI
    }

    /// `K0(x, x')` under standard Gaussian `t` and `b`, for unit `x`, `x'`.
    ///
    /// Absorbing `b` into `t` gives `E[relu(w.u) relu(w.v)]` with `w` standard
    /// normal in one more dimension and `u = (x, 1)`. That expectation is half
    /// the arc-cosine kernel of `u, v`, which equals the arc-cosine kernel of
    /// the unit augmented vectors `(x, 1)/sqrt(2)`.
    pub fn k0_gaussian(x: &[f64], x2: &[f64]) -> f64 {
        let aug = |s: &[f64]| -> Vec<f64> {
            s.iter().copied().chain(std::iter::once(1.0)).map(|v| v / 2f64.sqrt()).collect()
        };
        arccos1(&aug(x), &aug(x2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::apply;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use std::f64::consts::PI;

    fn sig(v: &[f64]) -> Signal {
        Signal::normalize(v).unwrap()
    }

    fn random_unit(r: &mut rng::StreamRng, d: usize) -> Signal {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(r)).collect();
        sig(&v)
    }

    #[test]
    fn k0_basic_properties() {
        let s = TemplateSampler::gaussian(3);
        let x = sig(&[0.6, 0.8]);
        let y = sig(&[-0.28, 0.96]);
        assert!(k0_mc(&x, &x, &s, 1000).unwrap().value >= 0.0);
        let a = k0_mc(&x, &y, &s, 5000).unwrap();
        let b = k0_mc(&y, &x, &s, 5000).unwrap();
        assert_eq!(a, b);
        assert!(k0_mc(&x, &y, &s, 1).is_err());
        assert!(k0_mc(&x, &sig(&[1.0, 0.0, 0.0]), &s, 10).is_err());
        let bad = TemplateSampler { bias_law: BiasLaw::Uniform(0.0), ..s };
        assert!(k0_mc(&x, &y, &bad, 10).is_err());
    }

    #[test]
    fn k0_matches_arccos_at_right_angle() {
        // Augmented vectors are orthogonal when x2 = -x.
        let x = sig(&[1.0, 0.0]);
        let y = sig(&[-1.0, 0.0]);
        let est = k0_mc(&x, &y, &TemplateSampler::gaussian(11), 1_000_000).unwrap();
        assert!((oracle::k0_gaussian(x.as_slice(), y.as_slice()) - 1.0 / PI).abs() < 1e-15);
        assert!((est.value - 1.0 / PI).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn oracle_matches_direct_quadrature() {
        // E[relu(a) relu(c)] for jointly normal (a, c) with var 2 and cov
        // 1 + <x,x'>, by 2-D quadrature over independent normals.
        let x = [0.6, 0.8];
        let y = [0.0, 1.0];
        let cov = 1.0 + 0.8;
        let (s1, rho) = (2f64.sqrt(), cov / 2.0);
        let n = 1600;
        let lim = 8.0;
        let h = 2.0 * lim / n as f64;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let mut acc = 0.0;
        for i in 0..n {
            let z1 = -lim + (i as f64 + 0.5) * h;
            for j in 0..n {
                let z2 = -lim + (j as f64 + 0.5) * h;
                let a = s1 * z1;
                let c = s1 * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
                acc += relu(a) * relu(c) * phi(z1) * phi(z2) * h * h;
            }
        }
        assert!((acc - oracle::k0_gaussian(&x, &y)).abs() < 1e-6, "{acc}");
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt() {
        let x = sig(&[0.6, 0.8]);
        let y = sig(&[0.8, -0.6]);
        for seed in 0..5 {
            let s = TemplateSampler::gaussian(seed);
            let a = k0_mc(&x, &y, &s, 20_000).unwrap().stderr;
            let b = k0_mc(&x, &y, &TemplateSampler::gaussian(seed + 100), 80_000).unwrap().stderr;
            let ratio = a / b;
            assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
        }
    }

    #[test]
    fn ktilde_examples() {
        let s = TemplateSampler::gaussian(5);
        let x = sig(&[0.6, 0.8]);
        let y = sig(&[0.28, -0.96]);
        assert_eq!(
            ktilde_mc(&x, &y, &FiniteGroup::trivial(2), &s, 3000).unwrap(),
            k0_mc(&x, &y, &s, 3000).unwrap()
        );
        let g = cyclic_group(2);
        let e0 = sig(&[1.0, 0.0]);
        let e1 = sig(&[0.0, 1.0]);
        let a = ktilde_mc(&e0, &e1, &g, &s, 3000).unwrap().value;
        let b = ktilde_mc(&e0, &e0, &g, &s, 3000).unwrap().value;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn ktilde_is_invariant_per_sample() {
        let s = TemplateSampler { bias_law: BiasLaw::Uniform(1.5), ..TemplateSampler::gaussian(9) };
        let mut r = rng::stream(1, &[]);
        for d in [2, 4, 8] {
            let g = cyclic_group(d);
            let x = random_unit(&mut r, d);
            let y = random_unit(&mut r, d);
            let base = ktilde_mc(&x, &y, &g, &s, 2000).unwrap().value;
            for a in g.elements() {
                for b in g.elements() {
                    let v = ktilde_mc(&apply(a, &x).unwrap(), &apply(b, &y).unwrap(), &g, &s, 2000).unwrap().value;
                    assert!((v - base).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn step_kernel_examples() {
        assert!((step_kernel_exact(0.2, 0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(step_kernel_exact(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(step_kernel_exact(-2.0, -2.0, 2.0).unwrap(), 4.0);
        assert!(matches!(step_kernel_exact(1.5, 0.0, 1.0), Err(Error::OutOfRange { .. })));
        let n = step_kernel_numeric(0.2, 0.5, 1.0, 100_000, STEP_ALPHA).unwrap();
        assert!((n - 0.5).abs() < 1e-3, "{n}");
        let n = step_kernel_numeric(0.0, 0.0, 1.0, 100_000, STEP_ALPHA).unwrap();
        assert!((n - 1.0).abs() < 1e-3, "{n}");
        assert!(step_kernel_numeric(0.0, 0.0, 1.0, 10, STEP_ALPHA).is_err());
        assert!(step_kernel_numeric(0.0, 2.0, 1.0, 1000, STEP_ALPHA).is_err());
    }

    #[test]
    fn numeric_step_kernel_converges() {
        let mut r = rng::stream(2, &[]);
        let errs: Vec<f64> = [(1e2, 20_001), (1e3, 200_001), (1e4, 400_001)]
            .iter()
            .map(|&(alpha, grid)| {
                let mut worst = 0.0_f64;
                for _ in 0..20 {
                    let a: f64 = r.random_range(-1.0..1.0);
                    let b: f64 = r.random_range(-1.0..1.0);
                    let e = step_kernel_numeric(a, b, 1.0, grid, alpha).unwrap() - step_kernel_exact(a, b, 1.0).unwrap();
                    worst = worst.max(e.abs());
                }
                worst
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn ktilde_step_examples() {
        let t = sig(&[0.6, 0.8]);
        let i1 = sig(&[1.0, 0.0]);
        let i2 = sig(&[0.0, 1.0]);
        let v = ktilde_step(&i1, &i2, std::slice::from_ref(&t), &[1.0], &FiniteGroup::trivial(2), 1.0).unwrap();
        assert!((v - (1.0 - 0.8)).abs() < 1e-15);
        assert_eq!(
            ktilde_step(&i1, &i2, std::slice::from_ref(&t), &[1.0], &cyclic_group(2), 1.0).unwrap(),
            ktilde_step(&i2, &i1, std::slice::from_ref(&t), &[1.0], &cyclic_group(2), 1.0).unwrap()
        );
        let v = ktilde_step(&i1, &i2, std::slice::from_ref(&i1), &[1.0], &cyclic_group(2), 1.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(matches!(
            ktilde_step(&i1, &i2, std::slice::from_ref(&t), &[0.9], &cyclic_group(2), 1.0),
            Err(Error::WeightsNotNormalized(_))
        ));
        assert!(matches!(
            ktilde_step(&i1, &i2, &[t], &[1.0], &cyclic_group(2), 0.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn gram_checks() {
        let mut r = rng::stream(4, &[]);
        let pts: Vec<Signal> = (0..5).map(|_| random_unit(&mut r, 3)).collect();
        let templates: Vec<Signal> = (0..3).map(|_| random_unit(&mut r, 3)).collect();
        let w = vec![1.0 / 3.0; 3];
        let g = cyclic_group(3);
        let rep = gram(&pts, |a, b| ktilde_step(a, b, &templates, &w, &g, 1.0)).unwrap();
        assert!(rep.psd_pass, "{rep:?}");
        let s = TemplateSampler::gaussian(8);
        let rep = gram(&pts, |a, b| Ok(k0_mc(a, b, &s, 2000)?.value)).unwrap();
        assert!(rep.psd_pass, "{rep:?}");
        let err = gram(&pts, |a, b| Ok(a.as_slice()[0] - b.as_slice()[1])).unwrap_err();
        assert!(matches!(err, Error::KernelAsymmetric { .. }));
        assert!(gram(&pts[..1], |_, _| Ok(1.0)).is_err());
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 26);
        let summary = rep.summary("k0_mc", 8);
        assert_eq!(summary.n_points, 5);
    }

    #[test]
    fn indefinite_matrix_fails_psd() {
        let rep = GramReport::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(!rep.psd_pass);
        assert!((rep.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    fn step_kernel_d4() -> impl Fn(&Signal, &Signal) -> Result<f64> + Sync {
        let g = cyclic_group(4);
        let t = sig(&[1.0, 0.0, 0.0, 0.0]);
        move |a, b| ktilde_step(a, b, std::slice::from_ref(&t), &[1.0], &g, 1.0)
    }

    #[test]
    fn selectivity_examples() {
        let g = cyclic_group(4);
        let onehot = g.orbit(&sig(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        let ones = g.orbit(&sig(&[1.0; 4])).unwrap();
        let rep = selectivity_scan(&[onehot.clone(), onehot.clone()], step_kernel_d4(), SELECTIVITY_MARGIN).unwrap();
        assert!((rep.same_orbit_min - 1.0).abs() < 1e-10);
        assert_eq!(rep.margin, None);
        let rep = selectivity_scan(&[onehot.clone(), ones], step_kernel_d4(), SELECTIVITY_MARGIN).unwrap();
        // K(e0,e0) = 9/16, K(u,u) = 1/2, K(e0,u) = 3/8 by direct expansion.
        let expect = 0.375 / (9.0f64 / 32.0).sqrt();
        assert!((rep.distinct_orbit_max.unwrap() - expect).abs() < 1e-12);
        assert!(rep.pass && rep.margin.unwrap() > 0.29);
        let shifted = g.orbit(&sig(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        let rep = selectivity_scan(&[onehot, shifted], step_kernel_d4(), SELECTIVITY_MARGIN).unwrap();
        assert_eq!(rep.distinct_orbit_max, None);
        assert!((rep.same_orbit_min - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mex_scan_finds_indefinite_matrices() {
        let rep = mex_psd_scan(0, 300, 1e-6).unwrap();
        assert!(rep.violations > 0, "{rep:?}");
        assert!(rep.most_negative.min_eigenvalue < -1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn step_kernel_matches_abs_identity(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let k = step_kernel_exact(a, b, 1.0).unwrap();
            prop_assert!((k - (1.0 - 0.5 * (a + b + (a - b).abs()))).abs() <= 1e-12);
        }

        #[test]
        fn normalized_step_kernel_is_bounded(seed in 0u64..1000) {
            let mut r = rng::stream(seed, &[]);
            let pts: Vec<Signal> = (0..4).map(|_| random_unit(&mut r, 4)).collect();
            let k = step_kernel_d4();
            for a in &pts {
                for b in &pts {
                    let v = k(a, b).unwrap() / (k(a, a).unwrap() * k(b, b).unwrap()).sqrt();
                    prop_assert!(v.abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
