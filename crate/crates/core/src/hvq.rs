//! Flat (VQ) versus hierarchical (HVQ) lookup tables for compositional patterns.
//!
//! A full pattern is the concatenation of two parts. VQ stores every full
//! pattern; HVQ stores the parts once plus a table of part-index pairs.
//! Lookup is exact equality over integer-valued entries, the zero-width limit
//! of a Gaussian unit.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Part = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFamily {
    pub part_length: usize,
    pub parts: Vec<Part>,
    pub compositions: Vec<(usize, usize)>,
}

impl PatternFamily {
    pub fn new(part_length: usize, parts: Vec<Part>, compositions: Vec<(usize, usize)>) -> Result<Self> {
        let f = PatternFamily { part_length, parts, compositions };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.part_length == 0 || self.parts.is_empty() {
            return Err(Error::InvalidArgument("family needs parts of positive length".into()));
        }
        if let Some(p) = self.parts.iter().find(|p| p.len() != self.part_length) {
            return Err(Error::DimensionMismatch { expected: self.part_length, got: p.len() });
        }
        let distinct: HashSet<&Part> = self.parts.iter().collect();
        if distinct.len() != self.parts.len() {
            return Err(Error::InvalidArgument("parts must be distinct".into()));
        }
        if let Some(&(a, b)) = self
            .compositions
            .iter()
            .find(|(a, b)| *a >= self.parts.len() || *b >= self.parts.len())
        {
            return Err(Error::InvalidArgument(format!("composition ({a}, {b}) references a missing part")));
        }
        Ok(())
    }

    /// Two parts `x'` (all zeros) and `x''` (all ones) composed as
    /// `x'x''`, `x'x'`, `x''x''`, `x''x'`.
    pub fn two_part_example(part_length: usize) -> Self {
        PatternFamily {
            part_length,
            parts: vec![vec![0; part_length], vec![1; part_length]],
            compositions: vec![(0, 1), (0, 0), (1, 1), (1, 0)],
        }
    }

    /// `n_parts` distinct random parts over `0..alphabet`, composed in all ordered pairs.
    pub fn random_complete(seed: u64, n_parts: usize, part_length: usize, alphabet: i64) -> Result<Self> {
        let capacity = (alphabet as f64).powi(part_length as i32);
        if n_parts == 0 || alphabet < 1 || capacity < n_parts as f64 {
            return Err(Error::InvalidArgument(format!(
                "cannot draw {n_parts} distinct parts of length {part_length} over {alphabet} symbols"
            )));
        }
        let mut r = rng::stream(seed, &[n_parts as u64, part_length as u64]);
        let mut parts: Vec<Part> = Vec::with_capacity(n_parts);
        while parts.len() < n_parts {
            let p: Part = (0..part_length).map(|_| r.random_range(0..alphabet)).collect();
            if !parts.contains(&p) {
                parts.push(p);
            }
        }
        let compositions = (0..n_parts).flat_map(|a| (0..n_parts).map(move |b| (a, b))).collect();
        PatternFamily::new(part_length, parts, compositions)
    }

    pub fn full_length(&self) -> usize {
        2 * self.part_length
    }

    pub fn pattern(&self, composition: (usize, usize)) -> Vec<i64> {
        let mut v = self.parts[composition.0].clone();
        v.extend_from_slice(&self.parts[composition.1]);
        v
    }

    fn check_unique_compositions(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for &(a, b) in &self.compositions {
            if !seen.insert((a, b)) {
                return Err(Error::DuplicateComposition(a, b));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Match {
    Class(usize),
    NoMatch,
}

pub trait Codebook {
    /// Stored scalars; each index in a composition row costs `index_weight`.
    fn memory_cost(&self, index_weight: usize) -> usize;
    fn classify(&self, x: &[i64]) -> Match;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VqCodebook {
    pub entries: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvqCodebook {
    pub part_length: usize,
    pub part_entries: Vec<Part>,
    pub composition_table: Vec<(usize, usize)>,
}

pub fn build_vq(family: &PatternFamily) -> Result<VqCodebook> {
    family.validate()?;
    family.check_unique_compositions()?;
    Ok(VqCodebook {
        entries: family.compositions.iter().map(|&c| family.pattern(c)).collect(),
    })
}

pub fn build_hvq(family: &PatternFamily) -> Result<HvqCodebook> {
    family.validate()?;
    family.check_unique_compositions()?;
    Ok(HvqCodebook {
        part_length: family.part_length,
        part_entries: family.parts.clone(),
        composition_table: family.compositions.clone(),
    })
}

impl Codebook for VqCodebook {
    fn memory_cost(&self, _index_weight: usize) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    fn classify(&self, x: &[i64]) -> Match {
        self.entries
            .iter()
            .position(|e| e.as_slice() == x)
            .map_or(Match::NoMatch, Match::Class)
    }
}

impl Codebook for HvqCodebook {
    fn memory_cost(&self, index_weight: usize) -> usize {
        self.part_entries.len() * self.part_length + self.composition_table.len() * 2 * index_weight
    }

    fn classify(&self, x: &[i64]) -> Match {
        if x.len() != 2 * self.part_length {
            return Match::NoMatch;
        }
        let (left, right) = x.split_at(self.part_length);
        let find = |half: &[i64]| self.part_entries.iter().position(|p| p.as_slice() == half);
        match (find(left), find(right)) {
            (Some(a), Some(b)) => self
                .composition_table
                .iter()
                .position(|&row| row == (a, b))
                .map_or(Match::NoMatch, Match::Class),
            _ => Match::NoMatch,
        }
    }
}

/// Costs of the two-part example at full length `n`: `(4n, 2 (n/2) + 8)`.
pub fn two_part_costs(n: usize) -> (usize, usize) {
    (4 * n, n + 8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub vq_cost: usize,
    pub hvq_cost: usize,
    pub ratio: f64,
}

/// Costs of complete random families for each `(n_parts, part_length)` pair.
pub fn memory_sweep(seed: u64, part_counts: &[usize], part_lengths: &[usize], index_weight: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in part_counts {
        for &len in part_lengths {
            let fam = PatternFamily::random_complete(seed, k, len, 4)?;
            let vq = build_vq(&fam)?.memory_cost(index_weight);
            let hvq = build_hvq(&fam)?.memory_cost(index_weight);
            rows.push(SweepRow {
                family_id: format!("complete-k{k}"),
                n: fam.full_length(),
                vq_cost: vq,
                hvq_cost: hvq,
                ratio: hvq as f64 / vq as f64,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("family_id,N,vq_cost,hvq_cost,ratio\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.family_id, r.n, r.vq_cost, r.hvq_cost, r.ratio));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let fam = PatternFamily::two_part_example(4);
        let vq = build_vq(&fam).unwrap();
        assert_eq!(vq.entries.len(), 4);
        let hvq = build_hvq(&fam).unwrap();
        assert_eq!((hvq.part_entries.len(), hvq.composition_table.len()), (2, 4));

        let one = PatternFamily::new(3, vec![vec![1, 2, 3]], vec![(0, 0)]).unwrap();
        assert_eq!(build_vq(&one).unwrap().entries, vec![vec![1, 2, 3, 1, 2, 3]]);
        let h = build_hvq(&one).unwrap();
        assert_eq!((h.part_entries.len(), h.composition_table.len()), (1, 1));

        let three = PatternFamily::random_complete(1, 3, 2, 3).unwrap();
        assert_eq!(build_vq(&three).unwrap().entries.len(), 9);
        let h = build_hvq(&three).unwrap();
        assert_eq!((h.part_entries.len(), h.composition_table.len()), (3, 9));
    }

    #[test]
    fn invalid_families() {
        assert!(PatternFamily::new(2, vec![vec![0, 0], vec![0, 0]], vec![]).is_err());
        assert!(PatternFamily::new(2, vec![vec![0, 0]], vec![(0, 1)]).is_err());
        assert!(PatternFamily::new(2, vec![vec![0]], vec![]).is_err());
        let dup = PatternFamily::new(1, vec![vec![0]], vec![(0, 0), (0, 0)]).unwrap();
        assert_eq!(build_vq(&dup), Err(Error::DuplicateComposition(0, 0)));
        assert_eq!(build_hvq(&dup), Err(Error::DuplicateComposition(0, 0)));
        assert!(PatternFamily::random_complete(0, 5, 1, 2).is_err());
    }

    #[test]
    fn memory_examples() {
        for (n, vq_cost, hvq_cost) in [(16, 64, 24), (4, 16, 12)] {
            let fam = PatternFamily::two_part_example(n / 2);
            assert_eq!(build_vq(&fam).unwrap().memory_cost(1), vq_cost);
            assert_eq!(build_hvq(&fam).unwrap().memory_cost(1), hvq_cost);
            assert_eq!(two_part_costs(n), (vq_cost, hvq_cost));
        }
        let fam = PatternFamily::two_part_example(8);
        assert_eq!(build_hvq(&fam).unwrap().memory_cost(2), 16 + 16);
    }

    #[test]
    fn crossover_at_three() {
        for n in 1..=64 {
            let (vq, hvq) = two_part_costs(n);
            assert_eq!(hvq < vq, n >= 3, "n = {n}");
        }
    }

    #[test]
    fn classify_examples() {
        let fam = PatternFamily::two_part_example(3);
        let vq = build_vq(&fam).unwrap();
        let hvq = build_hvq(&fam).unwrap();
        let x1 = fam.pattern((0, 1));
        assert_eq!(vq.classify(&x1), Match::Class(0));
        assert_eq!(hvq.classify(&x1), Match::Class(0));
        let stray = vec![2, 2, 2, 0, 0, 0];
        assert_eq!(vq.classify(&stray), Match::NoMatch);
        assert_eq!(hvq.classify(&stray), Match::NoMatch);
        assert_eq!(hvq.classify(&[0, 0]), Match::NoMatch);
        for &c in &fam.compositions {
            assert_eq!(vq.classify(&fam.pattern(c)), hvq.classify(&fam.pattern(c)));
        }
    }

    #[test]
    fn vq_and_hvq_agree_exhaustively() {
        for k in 1..=4 {
            for len in 1..=8 {
                let full = PatternFamily::random_complete(7, k, len, 4).unwrap();
                // every other ordered pair is a composition, the rest are probes
                let (kept, dropped): (Vec<_>, Vec<_>) = full
                    .compositions
                    .iter()
                    .enumerate()
                    .partition(|(i, _)| i % 2 == 0);
                let fam = PatternFamily { compositions: kept.into_iter().map(|(_, c)| *c).collect(), ..full.clone() };
                let vq = build_vq(&fam).unwrap();
                let hvq = build_hvq(&fam).unwrap();
                for &c in &fam.compositions {
                    let m = vq.classify(&fam.pattern(c));
                    assert!(matches!(m, Match::Class(_)));
                    assert_eq!(m, hvq.classify(&fam.pattern(c)));
                }
                for (_, &c) in &dropped {
                    assert_eq!(vq.classify(&full.pattern(c)), Match::NoMatch);
                    assert_eq!(hvq.classify(&full.pattern(c)), Match::NoMatch);
                }
                let off = vec![9; 2 * len];
                assert_eq!(vq.classify(&off), hvq.classify(&off));
            }
        }
    }

    #[test]
    fn reuse_makes_ratio_fall_with_length() {
        for seed in 0..5 {
            let rows = memory_sweep(seed, &[2, 3, 4], &[1, 2, 4, 8, 16], 1).unwrap();
            for chunk in rows.chunks(5) {
                assert!(chunk.windows(2).all(|w| w[1].ratio < w[0].ratio), "{chunk:?}");
            }
        }
        let csv = sweep_csv(&memory_sweep(0, &[2], &[4], 1).unwrap());
        assert_eq!(csv, "family_id,N,vq_cost,hvq_cost,ratio\ncomplete-k2,8,32,16,0.5\n");
    }
}
