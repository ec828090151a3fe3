//! Unit-norm signals, finite groups of coordinate permutations, and orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real vector of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Signal(Vec<f64>);

impl Signal {
    /// Scales `v` to unit norm.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ZeroVector);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm.is_finite() && norm > 1e-150 {
            return Ok(Signal(v.iter().map(|x| x / norm).collect()));
        }
        // Rescale by the largest magnitude first so tiny or huge vectors do not under/overflow.
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::ZeroVector);
        }
        let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
        let norm = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm * scale < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(Signal(scaled.into_iter().map(|x| x / norm).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Signal) -> f64 {
        crate::dot(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Signal::normalize(&v)
    }
}

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Self {
        s.0
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A permutation of coordinate indices; entry `i` is the destination of
/// coordinate `i`, so `apply` writes `y[p[i]] = x[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let d = map.len();
        if d == 0 {
            return Err(Error::InvalidGroup("empty permutation".into()));
        }
        let mut seen = vec![false; d];
        for &j in &map {
            if j >= d || seen[j] {
                return Err(Error::InvalidGroup(format!("{map:?} is not a permutation")));
            }
            seen[j] = true;
        }
        Ok(Permutation(map))
    }

    pub fn identity(d: usize) -> Self {
        Permutation((0..d).collect())
    }

    /// Cyclic shift taking index `i` to `(i + k) mod d`.
    pub fn shift(d: usize, k: usize) -> Self {
        Permutation((0..d).map(|i| (i + k) % d).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    /// Permutes raw coordinates. Panics on length mismatch; use [`apply`] for
    /// the checked form.
    pub fn permute(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.0.len());
        let mut y = vec![0.0; x.len()];
        for (i, &j) in self.0.iter().enumerate() {
            y[j] = x[i];
        }
        y
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// Applies `g` to `x`. Permutations preserve the norm exactly.
pub fn apply(g: &Permutation, x: &Signal) -> Result<Signal> {
    if g.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.dim(),
        });
    }
    Ok(Signal(g.permute(&x.0)))
}

/// An explicit list of permutations acting on `R^d`.
///
/// [`FiniteGroup::new`] and [`cyclic_group`] only produce genuine groups. The
/// unchecked constructor exists for pooling over arbitrary subsets of actions,
/// which is how invariance failures are exhibited.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    dim: usize,
    elements: Vec<Permutation>,
    identity_index: Option<usize>,
}

impl FiniteGroup {
    /// Builds a group, rejecting lists that fail any axiom.
    pub fn new(elements: Vec<Permutation>) -> Result<Self> {
        let g = Self::from_elements_unchecked(elements)?;
        let report = g.verify_axioms();
        if !report.all_pass() {
            return Err(Error::InvalidGroup(format!("{report:?}")));
        }
        Ok(g)
    }

    /// Any nonempty list of same-dimension permutations; axioms are not enforced.
    pub fn from_elements_unchecked(elements: Vec<Permutation>) -> Result<Self> {
        let dim = match elements.first() {
            Some(p) => p.dim(),
            None => return Err(Error::InvalidGroup("no elements".into())),
        };
        if let Some(p) = elements.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        let identity_index = elements.iter().position(Permutation::is_identity);
        Ok(FiniteGroup {
            dim,
            elements,
            identity_index,
        })
    }

    pub fn trivial(d: usize) -> Self {
        cyclic_group(d).truncated(1)
    }

    fn truncated(mut self, n: usize) -> Self {
        self.elements.truncate(n);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.identity_index
    }

    /// Exhaustive check of closure, identity and inverses.
    pub fn verify_axioms(&self) -> AxiomReport {
        let contains = |p: &Permutation| self.elements.contains(p);
        let closure = self
            .elements
            .iter()
            .all(|a| self.elements.iter().all(|b| contains(&a.compose(b))));
        let identity = self.identity_index.is_some();
        let inverses = self.elements.iter().all(|a| contains(&a.inverse()));
        AxiomReport {
            closure,
            identity,
            inverses,
        }
    }

    /// Orbit of `x`, one member per element in element order.
    pub fn orbit(&self, x: &Signal) -> Result<Orbit> {
        let members = self
            .elements
            .iter()
            .map(|g| apply(g, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Orbit {
            representative: x.clone(),
            members,
        })
    }
}

/// The `d` cyclic shifts of `R^d`; element `k` shifts by `k`.
pub fn cyclic_group(d: usize) -> FiniteGroup {
    assert!(d >= 1, "cyclic group needs d >= 1");
    FiniteGroup {
        dim: d,
        elements: (0..d).map(|k| Permutation::shift(d, k)).collect(),
        identity_index: Some(0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomReport {
    pub closure: bool,
    pub identity: bool,
    pub inverses: bool,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.closure && self.identity && self.inverses
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub representative: Signal,
    pub members: Vec<Signal>,
}

impl Orbit {
    /// Members sorted lexicographically, for multiset comparison.
    pub fn sorted_members(&self) -> Vec<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = self.members.iter().map(|s| s.0.clone()).collect();
        m.sort_by(|a, b| a.partial_cmp(b).expect("finite signals"));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::normalize(v).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(sig(&[3.0, 4.0]).as_slice(), &[0.6, 0.8]);
        assert_eq!(sig(&[1.0, 0.0, 0.0]).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(Signal::normalize(&[0.0, 0.0]), Err(Error::ZeroVector));
        assert_eq!(Signal::normalize(&[]), Err(Error::ZeroVector));
        assert!((sig(&[1e-200, 1e-200]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cyclic_shift_examples() {
        assert_eq!(cyclic_group(1).order(), 1);
        let g = cyclic_group(4);
        assert_eq!(g.elements()[1].permute(&[1.0, 2.0, 3.0, 4.0]), vec![4.0, 1.0, 2.0, 3.0]);
        assert!(g.elements()[1].compose(&g.elements()[3]).is_identity());
    }

    #[test]
    fn apply_examples() {
        let x = sig(&[0.6, 0.8]);
        let g2 = cyclic_group(2);
        assert_eq!(apply(&g2.elements()[0], &x).unwrap(), x);
        assert_eq!(apply(&g2.elements()[1], &x).unwrap().as_slice(), &[0.8, 0.6]);
        let e0 = sig(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            apply(&cyclic_group(4).elements()[2], &e0).unwrap().as_slice(),
            &[0.0, 0.0, 1.0, 0.0]
        );
        assert!(matches!(
            apply(&g2.elements()[1], &e0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orbit_examples() {
        let x = sig(&[0.3, 0.4, 0.5]);
        let o = FiniteGroup::trivial(3).orbit(&x).unwrap();
        assert_eq!(o.members, vec![x]);
        let o = cyclic_group(2).orbit(&sig(&[1.0, 0.0])).unwrap();
        assert_eq!(o.members, vec![sig(&[1.0, 0.0]), sig(&[0.0, 1.0])]);
        let o = cyclic_group(3).orbit(&sig(&[1.0, 0.0, 0.0])).unwrap();
        let mut m = o.sorted_members();
        m.dedup();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn axiom_examples() {
        assert!(cyclic_group(4).verify_axioms().all_pass());
        assert!(cyclic_group(1).verify_axioms().all_pass());
        let partial = FiniteGroup::from_elements_unchecked(vec![
            Permutation::identity(3),
            Permutation::shift(3, 1),
        ])
        .unwrap();
        let r = partial.verify_axioms();
        assert!(!r.closure);
        assert!(r.identity);
        assert!(!r.inverses);
        assert!(FiniteGroup::new(partial.elements().to_vec()).is_err());
    }

    #[test]
    fn cyclic_groups_satisfy_axioms_up_to_64() {
        for d in 1..=64 {
            assert!(cyclic_group(d).verify_axioms().all_pass(), "d = {d}");
        }
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
    }

    proptest! {
        #[test]
        fn action_preserves_norm_exactly(v in prop::collection::vec(-10.0f64..10.0, 1..12), k in 0usize..12) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let x = sig(&v);
            let g = Permutation::shift(v.len(), k % v.len());
            let y = apply(&g, &x).unwrap();
            let sq = |s: &Signal| s.as_slice().iter().map(|a| a * a).collect::<Vec<_>>();
            let mut a = sq(&x);
            let mut b = sq(&y);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn orbit_is_invariant_as_multiset(v in prop::collection::vec(-10.0f64..10.0, 1..10), k in 0usize..10) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let d = v.len();
            let grp = cyclic_group(d);
            let x = sig(&v);
            let gx = apply(&grp.elements()[k % d], &x).unwrap();
            prop_assert_eq!(grp.orbit(&x).unwrap().sorted_members(), grp.orbit(&gx).unwrap().sorted_members());
        }
    }
}
