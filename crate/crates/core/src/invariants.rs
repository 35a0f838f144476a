//! The quandle counting invariant and the enhanced counting polynomial.
//!
//! For a coloring `f` the image size `m(f)` is the number of distinct
//! quandle elements used on the arcs. Tallying `a_m = #{f : m(f) = m}`
//! over the full coloring set gives `Φ_E = Σ a_m q^m`; the plain count
//! `φ = Σ a_m` is the coefficient sum.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::solver::Coloring;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("records target different quandles: `{a}` vs `{b}`")]
    TargetMismatch { a: String, b: String },
}

/// Number of distinct quandle elements in the assignment's range.
pub fn image_size(coloring: &Coloring) -> usize {
    let mut values: Vec<u16> = coloring.values().to_vec();
    values.sort_unstable();
    values.dedup();
    values.len()
}

/// Tally image sizes over a coloring set: `m ↦ a_m`.
pub fn image_tally(colorings: &[Coloring]) -> BTreeMap<usize, u64> {
    let mut tally = BTreeMap::new();
    for c in colorings {
        *tally.entry(image_size(c)).or_insert(0) += 1;
    }
    tally
}

/// Sparse coefficient map `m ↦ a_m` for `Φ_E = Σ a_m q^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnhancedPolynomial {
    coeffs: BTreeMap<usize, u64>,
}

impl EnhancedPolynomial {
    /// Tally a coloring set. The coefficient sum equals the set size by
    /// construction; `from_tally` enforces the same check on raw maps.
    pub fn from_colorings(colorings: &[Coloring]) -> Self {
        EnhancedPolynomial {
            coeffs: image_tally(colorings),
        }
    }

    pub fn from_tally(coeffs: BTreeMap<usize, u64>, expected_total: u64) -> Option<Self> {
        let total: u64 = coeffs.values().sum();
        (total == expected_total && !coeffs.contains_key(&0))
            .then_some(EnhancedPolynomial { coeffs })
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, u64> {
        &self.coeffs
    }

    pub fn coefficient(&self, m: usize) -> u64 {
        self.coeffs.get(&m).copied().unwrap_or(0)
    }

    /// `Σ a_m`, the plain counting invariant of the generating solve.
    pub fn total(&self) -> u64 {
        self.coeffs.values().sum()
    }

    /// Largest `m` with `a_m > 0`; 0 for the empty polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }
}

impl fmt::Display for EnhancedPolynomial {
    /// Terms in ascending `m`, printing `q^1` as `q`: `9q + 72q^2 + 72q^3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&m, &a) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m == 1 {
                write!(f, "{a}q")?;
            } else {
                write!(f, "{a}q^{m}")?;
            }
        }
        Ok(())
    }
}

/// Invariants of one link against one target quandle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantRecord {
    pub link: String,
    pub target_spec: String,
    pub phi: u64,
    pub phi_e: EnhancedPolynomial,
}

impl InvariantRecord {
    pub fn new(link: &str, target_spec: &str, colorings: &[Coloring]) -> Self {
        InvariantRecord {
            link: link.to_string(),
            target_spec: target_spec.to_string(),
            phi: colorings.len() as u64,
            phi_e: EnhancedPolynomial::from_colorings(colorings),
        }
    }

    pub fn degree(&self) -> usize {
        self.phi_e.degree()
    }
}

/// Outcome of comparing two links over the same target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separation {
    ByCount,
    ByPolynomial,
    None,
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separation::ByCount => write!(f, "by_count"),
            Separation::ByPolynomial => write!(f, "by_polynomial"),
            Separation::None => write!(f, "none"),
        }
    }
}

/// `by_count` if φ differs, else `by_polynomial` if Φ_E differs, else
/// `none`. Comparing records computed against different targets is an
/// error, not a verdict.
pub fn separates(a: &InvariantRecord, b: &InvariantRecord) -> Result<Separation, InvariantError> {
    if a.target_spec != b.target_spec {
        return Err(InvariantError::TargetMismatch {
            a: a.target_spec.clone(),
            b: b.target_spec.clone(),
        });
    }
    if a.phi != b.phi {
        Ok(Separation::ByCount)
    } else if a.phi_e != b.phi_e {
        Ok(Separation::ByPolynomial)
    } else {
        Ok(Separation::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[u16]) -> Coloring {
        Coloring::new(values.to_vec())
    }

    #[test]
    fn image_size_counts_distinct_values() {
        assert_eq!(image_size(&col(&[3, 3, 3, 3])), 1);
        assert_eq!(image_size(&col(&[0, 1, 2, 1])), 3);
    }

    #[test]
    fn polynomial_renders_like_the_tables() {
        let cols: Vec<Coloring> = std::iter::repeat(col(&[1, 1]))
            .take(9)
            .chain(std::iter::repeat(col(&[1, 2])).take(72))
            .chain(std::iter::repeat(col(&[1, 2, 3])).take(72))
            .collect();
        let p = EnhancedPolynomial::from_colorings(&cols);
        assert_eq!(p.to_string(), "9q + 72q^2 + 72q^3");
        assert_eq!(p.total(), 153);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn tally_sum_is_enforced() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, 9u64);
        coeffs.insert(2, 72);
        assert!(EnhancedPolynomial::from_tally(coeffs.clone(), 81).is_some());
        assert!(EnhancedPolynomial::from_tally(coeffs, 80).is_none());
    }

    #[test]
    fn separation_verdicts() {
        let a = InvariantRecord {
            link: "H".into(),
            target_spec: "symplectic:p=3,lambda=2".into(),
            phi: 153,
            phi_e: EnhancedPolynomial::from_tally(
                [(1, 9u64), (2, 72), (3, 72)].into_iter().collect(),
                153,
            )
            .unwrap(),
        };
        let b = InvariantRecord {
            link: "L1".into(),
            target_spec: "symplectic:p=3,lambda=2".into(),
            phi: 153,
            phi_e: EnhancedPolynomial::from_tally(
                [(1, 9u64), (2, 72), (3, 24), (9, 48)].into_iter().collect(),
                153,
            )
            .unwrap(),
        };
        assert_eq!(separates(&a, &b).unwrap(), Separation::ByPolynomial);
        assert_eq!(separates(&b, &b).unwrap(), Separation::None);
        let mut c = a.clone();
        c.phi = 154;
        assert_eq!(separates(&a, &c).unwrap(), Separation::ByCount);
        let mut d = b.clone();
        d.target_spec = "takasaki:n=5".into();
        assert!(separates(&a, &d).is_err());
    }
}
