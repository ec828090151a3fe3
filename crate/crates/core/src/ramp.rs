//! Shapes built from rectifier ramps: the `|s|` identity, steps, triangular
//! bumps, and least-squares fits of arbitrary 1-D targets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relu;

/// `|s|_+ + |-s|_+`, which is `|s|`.
pub fn abs_identity(s: f64) -> f64 {
    relu(s) + relu(-s)
}

/// Ramp approximation of the Heaviside step: `alpha (|s|_+ - |s - 1/alpha|_+)`.
pub fn step_approx(s: f64, alpha: f64) -> f64 {
    // Clamped form of the same expression; avoids cancellation for large s.
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 / alpha {
        1.0
    } else {
        alpha * s
    }
}

/// Triangular bump of half-width `w` and unit peak, as a second difference of ramps.
///
/// Evaluated at `|s|` so the result is bit-for-bit even in `s`.
pub fn hat_via_ramps(s: f64, w: f64) -> f64 {
    let a = s.abs();
    (relu(a + w) - 2.0 * relu(a) + relu(a - w)) / w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampUnit {
    pub c: f64,
    pub b: f64,
    pub sign: i8,
}

impl RampUnit {
    /// `relu(sign * (s - knot))`.
    pub fn at_knot(knot: f64, sign: i8) -> Self {
        RampUnit {
            c: 1.0,
            b: -(sign as f64) * knot,
            sign,
        }
    }

    pub fn knot(&self) -> f64 {
        -(self.sign as f64) * self.b
    }

    fn basis(&self, s: f64) -> f64 {
        relu(self.sign as f64 * s + self.b)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.c * self.basis(s)
    }
}

/// `s -> sum_i c_i |sign_i s + b_i|_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampCombination {
    pub units: Vec<RampUnit>,
}

impl RampCombination {
    pub fn new(units: Vec<RampUnit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidArgument("ramp combination needs a unit".into()));
        }
        if units.iter().any(|u| u.sign != 1 && u.sign != -1) {
            return Err(Error::InvalidArgument("ramp sign must be +1 or -1".into()));
        }
        Ok(RampCombination { units })
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.units.iter().map(|u| u.eval(s)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.hi - self.lo) / (self.n_points - 1) as f64;
        (0..self.n_points).map(move |i| {
            if i + 1 == self.n_points {
                self.hi
            } else {
                self.lo + i as f64 * h
            }
        })
    }
}

/// A fitted combination, the grid it was fitted on, and the max grid deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampFit {
    pub units: Vec<RampUnit>,
    pub grid: Grid,
    pub sup_error: f64,
}

impl RampFit {
    pub fn combination(&self) -> RampCombination {
        RampCombination {
            units: self.units.clone(),
        }
    }
}

/// Knot layout used by [`fit_ramp_combination`].
///
/// One unit is a rising ramp at the midpoint. For `k >= 2` the units are rising
/// ramps at the `k - 1` interior points of an even `k`-cell partition of
/// `[lo, hi]` plus a falling ramp at the midpoint. Partitions for `k` and `2k`
/// nest, so their spans nest too.
pub fn knot_layout(lo: f64, hi: f64, k: usize) -> Vec<RampUnit> {
    let mid = 0.5 * (lo + hi);
    if k == 1 {
        return vec![RampUnit::at_knot(mid, 1)];
    }
    let h = (hi - lo) / k as f64;
    (1..k)
        .map(|j| RampUnit::at_knot(lo + j as f64 * h, 1))
        .chain(std::iter::once(RampUnit::at_knot(mid, -1)))
        .collect()
}

/// Least-squares fit of `target` on an even grid with `k` ramp units at fixed knots.
pub fn fit_ramp_combination<F>(target: F, grid: Grid, k: usize) -> Result<RampFit>
where
    F: Fn(f64) -> f64,
{
    if k == 0 || !(grid.lo < grid.hi) || grid.n_points < 10 * k {
        return Err(Error::InvalidArgument(format!(
            "need k >= 1, lo < hi and n_points >= 10k (k = {k}, n_points = {})",
            grid.n_points
        )));
    }
    fit_with_layout(target, grid, &knot_layout(grid.lo, grid.hi, k))
}

/// Least-squares coefficients for a caller-chosen set of ramp units.
pub fn fit_with_layout<F>(target: F, grid: Grid, layout: &[RampUnit]) -> Result<RampFit>
where
    F: Fn(f64) -> f64,
{
    let k = layout.len();
    if k == 0 || grid.n_points < 2 {
        return Err(Error::InvalidArgument("empty layout or grid".into()));
    }
    let xs: Vec<f64> = grid.points().collect();
    let design = DMatrix::from_fn(xs.len(), k, |i, j| layout[j].basis(xs[i]));
    let y = DVector::from_iterator(xs.len(), xs.iter().map(|&s| target(s)));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax {
        return Err(Error::SingularDesign);
    }
    let coef = svd.solve(&y, 0.0).map_err(|_| Error::SingularDesign)?;
    let units: Vec<RampUnit> = layout
        .iter()
        .zip(coef.iter())
        .map(|(u, &c)| RampUnit { c, ..*u })
        .collect();
    let comb = RampCombination { units };
    let sup_error = xs
        .iter()
        .map(|&s| (comb.eval(s) - target(s)).abs())
        .fold(0.0, f64::max);
    Ok(RampFit {
        units: comb.units,
        grid,
        sup_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(s: f64) -> f64 {
        (-0.5 * s * s).exp()
    }

    #[test]
    fn abs_identity_examples() {
        assert_eq!(abs_identity(2.0), 2.0);
        assert_eq!(abs_identity(-3.0), 3.0);
        assert_eq!(abs_identity(0.0), 0.0);
    }

    #[test]
    fn step_examples() {
        assert_eq!(step_approx(0.05, 100.0), 1.0);
        assert_eq!(step_approx(-0.1, 100.0), 0.0);
        assert!((step_approx(0.005, 100.0) - 0.5).abs() < 1e-15);
        // the clamped form agrees with the literal ramp difference
        for s in [-1.0, 0.001, 0.004, 0.009, 0.5] {
            let literal = 100.0 * (relu(s) - relu(s - 0.01));
            assert!((step_approx(s, 100.0) - literal).abs() < 1e-12);
        }
    }

    #[test]
    fn step_converges_away_from_zero() {
        for s in [-0.3, -1e-3, 1e-3, 0.3] {
            let h = if s > 0.0 { 1.0 } else { 0.0 };
            let errs: Vec<f64> = [10.0, 1e2, 1e4, 1e6].iter().map(|&a| (step_approx(s, a) - h).abs()).collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*errs.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat_via_ramps(0.0, 1.0), 1.0);
        assert_eq!(hat_via_ramps(1.0, 1.0), 0.0);
        assert_eq!(hat_via_ramps(-1.0, 1.0), 0.0);
        assert_eq!(hat_via_ramps(0.5, 1.0), 0.5);
        assert_eq!(hat_via_ramps(3.0, 1.0), 0.0);
    }

    #[test]
    fn hat_integrates_to_width() {
        for w in [0.25, 1.0, 2.5] {
            let n = 200_001;
            let (lo, hi) = (-2.0 * w, 2.0 * w);
            let h = (hi - lo) / (n - 1) as f64;
            let f = |i: usize| hat_via_ramps(lo + i as f64 * h, w);
            let integral = h * ((1..n - 1).map(f).sum::<f64>() + 0.5 * (f(0) + f(n - 1)));
            assert!((integral - w).abs() < 1e-6, "w = {w}: {integral}");
        }
    }

    #[test]
    fn fits_in_span_are_exact() {
        let grid = Grid { lo: -1.0, hi: 1.0, n_points: 101 };
        let fit = fit_ramp_combination(relu, grid, 1).unwrap();
        assert!(fit.sup_error <= 1e-10, "{}", fit.sup_error);
        let fit = fit_ramp_combination(f64::abs, grid, 2).unwrap();
        assert!(fit.sup_error <= 1e-10, "{}", fit.sup_error);
    }

    #[test]
    fn gaussian_fit_and_refinement() {
        let errs: Vec<f64> = [5, 10, 20, 40]
            .iter()
            .map(|&k| {
                fit_ramp_combination(gaussian, Grid { lo: -3.0, hi: 3.0, n_points: 601 }, k)
                    .unwrap()
                    .sup_error
            })
            .collect();
        assert!(errs[2] <= 0.05, "{errs:?}");
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    }

    #[test]
    fn fit_rejects_bad_input() {
        let grid = Grid { lo: -1.0, hi: 1.0, n_points: 15 };
        assert!(fit_ramp_combination(relu, grid, 2).is_err());
        assert!(fit_ramp_combination(relu, Grid { lo: 1.0, hi: 1.0, n_points: 100 }, 2).is_err());
        assert!(fit_ramp_combination(relu, grid, 0).is_err());
        let dup = [RampUnit::at_knot(0.0, 1), RampUnit::at_knot(0.0, 1)];
        assert_eq!(fit_with_layout(relu, grid, &dup), Err(Error::SingularDesign));
    }

    #[test]
    fn fit_serializes() {
        let fit = fit_ramp_combination(f64::abs, Grid { lo: -1.0, hi: 1.0, n_points: 50 }, 2).unwrap();
        let json = serde_json::to_value(&fit).unwrap();
        assert!(json["units"][0]["sign"].is_i64());
        assert_eq!(json["grid"]["n_points"], 50);
        let back: RampFit = serde_json::from_value(json).unwrap();
        assert_eq!(back, fit);
    }

    proptest! {
        #[test]
        fn abs_identity_is_exact(s in -1e300f64..1e300) {
            prop_assert_eq!(abs_identity(s), s.abs());
        }

        #[test]
        fn hat_is_symmetric(s in -5.0f64..5.0, w in 0.01f64..3.0) {
            prop_assert_eq!(hat_via_ramps(s, w), hat_via_ramps(-s, w));
        }
    }
}
