//! Oriented link diagrams as arc lists plus signed crossings, and the
//! fundamental-quandle presentation they induce.
//!
//! A diagram with `N` arcs and `C` crossings satisfies: every arc appears
//! exactly once as `under_in` and exactly once as `under_out` across all
//! crossings, unless it is the single arc of a closed crossing-free
//! component. Consequently `N = C + (number of crossing-free components)`.
//! One relation per crossing reads `out = in ▷ over` (positive sign) or
//! `out = in ▷⁻¹ over` (negative).
//!
//! The file format is JSON:
//!
//! ```json
//! {"name": "hopf", "arcs": 2,
//!  "components": [[0],[1]],
//!  "crossings": [{"sign": 1, "over": 1, "under_in": 0, "under_out": 0},
//!                {"sign": 1, "over": 0, "under_in": 1, "under_out": 1}]}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quandle::Sign;

/// Index of an arc, dense in `0..N` within one diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

impl std::fmt::Display for ArcId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("malformed diagram JSON: {0}")]
    Syntax(String),
    #[error("crossing {crossing} references undefined arc {arc}")]
    UndefinedArc { crossing: usize, arc: usize },
    #[error("sign must be 1 or -1, got {0}")]
    BadSign(i64),
    #[error("arc {arc} appears {count} times as {role}; expected exactly once")]
    BadUnderCount {
        arc: usize,
        role: &'static str,
        count: usize,
    },
    #[error("components do not partition the arc set")]
    BadPartition,
    #[error("component {component} does not follow the under_in → under_out succession")]
    BadSuccession { component: usize },
    #[error("crossing-free component {component} must consist of a single arc")]
    BadFreeComponent { component: usize },
    #[error("arc permutation is not a bijection on 0..{expected}")]
    BadPermutation { expected: usize },
}

/// One crossing: the over-arc and the under-strand's in/out arcs, signed
/// by orientation. `under_in == under_out` happens when the under-strand
/// component has a single undercrossing (a clasp arc or a kink).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    #[serde(with = "sign_as_int")]
    pub sign: Sign,
    pub over: usize,
    pub under_in: usize,
    pub under_out: usize,
}

mod sign_as_int {
    use super::Sign;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(sign: &Sign, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(sign.as_i8())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Sign, D::Error> {
        let v = i64::deserialize(d)?;
        i8::try_from(v)
            .ok()
            .and_then(Sign::from_i8)
            .ok_or_else(|| de::Error::custom(format!("sign must be 1 or -1, got {v}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
struct RawDiagram {
    name: String,
    arcs: usize,
    components: Vec<Vec<usize>>,
    crossings: Vec<Crossing>,
}

/// A validated oriented link diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkDiagram {
    name: String,
    arcs: usize,
    components: Vec<Vec<usize>>,
    crossings: Vec<Crossing>,
}

/// One Wirtinger-style relation: `out = in ▷^sign over`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relation {
    pub out: ArcId,
    pub input: ArcId,
    pub over: ArcId,
    pub sign: Sign,
}

/// Presentation of the fundamental quandle: one generator per arc, one
/// relation per crossing, in crossing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuandlePresentation {
    pub generator_count: usize,
    pub relations: Vec<Relation>,
}

impl LinkDiagram {
    pub fn new(
        name: String,
        arcs: usize,
        components: Vec<Vec<usize>>,
        crossings: Vec<Crossing>,
    ) -> Result<Self, DiagramError> {
        let d = LinkDiagram {
            name,
            arcs,
            components,
            crossings,
        };
        d.validate()?;
        Ok(d)
    }

    /// Parse and validate a diagram file.
    pub fn parse(text: &str) -> Result<Self, DiagramError> {
        let raw: RawDiagram =
            serde_json::from_str(text).map_err(|e| DiagramError::Syntax(e.to_string()))?;
        LinkDiagram::new(raw.name, raw.arcs, raw.components, raw.crossings)
    }

    /// Canonical serialization; `parse(to_json(d))` reproduces `d` and
    /// `to_json` is idempotent across the round trip.
    pub fn to_json(&self) -> String {
        let raw = RawDiagram {
            name: self.name.clone(),
            arcs: self.arcs,
            components: self.components.clone(),
            crossings: self.crossings.clone(),
        };
        let mut out = serde_json::to_string_pretty(&raw).expect("diagram serializes");
        out.push('\n');
        out
    }

    fn validate(&self) -> Result<(), DiagramError> {
        for (idx, c) in self.crossings.iter().enumerate() {
            for arc in [c.over, c.under_in, c.under_out] {
                if arc >= self.arcs {
                    return Err(DiagramError::UndefinedArc {
                        crossing: idx,
                        arc,
                    });
                }
            }
        }
        let mut in_count = vec![0usize; self.arcs];
        let mut out_count = vec![0usize; self.arcs];
        for c in &self.crossings {
            in_count[c.under_in] += 1;
            out_count[c.under_out] += 1;
        }
        for arc in 0..self.arcs {
            match (in_count[arc], out_count[arc]) {
                (0, 0) | (1, 1) => {}
                (i, _) if i != 1 => {
                    return Err(DiagramError::BadUnderCount {
                        arc,
                        role: "under_in",
                        count: i,
                    })
                }
                (_, o) => {
                    return Err(DiagramError::BadUnderCount {
                        arc,
                        role: "under_out",
                        count: o,
                    })
                }
            }
        }
        // components partition the arcs
        let mut seen = vec![false; self.arcs];
        for comp in &self.components {
            for &arc in comp {
                if arc >= self.arcs || seen[arc] {
                    return Err(DiagramError::BadPartition);
                }
                seen[arc] = true;
            }
        }
        if !seen.iter().all(|&s| s) || self.components.iter().any(|c| c.is_empty()) {
            return Err(DiagramError::BadPartition);
        }
        // succession: under_in arc -> under_out arc at each crossing
        let mut succ = vec![usize::MAX; self.arcs];
        for c in &self.crossings {
            succ[c.under_in] = c.under_out;
        }
        for (ci, comp) in self.components.iter().enumerate() {
            let free = comp.iter().all(|&a| in_count[a] == 0);
            if free {
                if comp.len() != 1 {
                    return Err(DiagramError::BadFreeComponent { component: ci });
                }
                continue;
            }
            let k = comp.len();
            for i in 0..k {
                if succ[comp[i]] != comp[(i + 1) % k] {
                    return Err(DiagramError::BadSuccession { component: ci });
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// One generator per arc, one relation per crossing.
    pub fn presentation(&self) -> QuandlePresentation {
        QuandlePresentation {
            generator_count: self.arcs,
            relations: self
                .crossings
                .iter()
                .map(|c| Relation {
                    out: ArcId(c.under_out),
                    input: ArcId(c.under_in),
                    over: ArcId(c.over),
                    sign: c.sign,
                })
                .collect(),
        }
    }

    /// Relabel arcs by a bijection of `0..N`. The result is an isomorphic
    /// diagram; every downstream invariant is unchanged.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, DiagramError> {
        if perm.len() != self.arcs {
            return Err(DiagramError::BadPermutation {
                expected: self.arcs,
            });
        }
        let mut seen = vec![false; self.arcs];
        for &v in perm {
            if v >= self.arcs || seen[v] {
                return Err(DiagramError::BadPermutation {
                    expected: self.arcs,
                });
            }
            seen[v] = true;
        }
        let crossings = self
            .crossings
            .iter()
            .map(|c| Crossing {
                sign: c.sign,
                over: perm[c.over],
                under_in: perm[c.under_in],
                under_out: perm[c.under_out],
            })
            .collect();
        let components = self
            .components
            .iter()
            .map(|comp| comp.iter().map(|&a| perm[a]).collect())
            .collect();
        LinkDiagram::new(self.name.clone(), self.arcs, components, crossings)
    }

    /// Add a positive Reidemeister-I kink on `arc`. Quandle axiom 1 makes
    /// this invisible to every coloring invariant; used by invariance tests.
    pub fn with_positive_kink(&self, arc: ArcId) -> Result<Self, DiagramError> {
        let target = arc.0;
        if target >= self.arcs {
            return Err(DiagramError::UndefinedArc {
                crossing: self.crossings.len(),
                arc: target,
            });
        }
        let mut crossings = self.crossings.clone();
        let producer = crossings.iter().position(|c| c.under_out == target);
        let Some(idx) = producer else {
            // crossing-free circle: the curl's single crossing has the arc
            // as its own over-arc and under-arc; no new arc appears.
            crossings.push(Crossing {
                sign: Sign::Positive,
                over: target,
                under_in: target,
                under_out: target,
            });
            return LinkDiagram::new(
                format!("{}+kink", self.name),
                self.arcs,
                self.components.clone(),
                crossings,
            );
        };
        // splice: the producing crossing now emits the fresh arc, which
        // curls under itself and continues as the original arc.
        let fresh = self.arcs;
        crossings[idx].under_out = fresh;
        crossings.push(Crossing {
            sign: Sign::Positive,
            over: fresh,
            under_in: fresh,
            under_out: target,
        });
        let mut components = self.components.clone();
        for comp in &mut components {
            if let Some(pos) = comp.iter().position(|&a| a == target) {
                comp.insert(pos, fresh);
                break;
            }
        }
        LinkDiagram::new(
            format!("{}+kink", self.name),
            self.arcs + 1,
            components,
            crossings,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hopf_json() -> &'static str {
        r#"{"name":"hopf","arcs":2,"components":[[0],[1]],
            "crossings":[{"sign":1,"over":1,"under_in":0,"under_out":0},
                         {"sign":1,"over":0,"under_in":1,"under_out":1}]}"#
    }

    #[test]
    fn parse_hopf() {
        let d = LinkDiagram::parse(hopf_json()).unwrap();
        assert_eq!(d.arc_count(), 2);
        assert_eq!(d.crossings().len(), 2);
        assert!(d.crossings().iter().all(|c| c.sign == Sign::Positive));
        let p = d.presentation();
        assert_eq!(p.generator_count, 2);
        assert_eq!(p.relations.len(), 2);
        assert_eq!(p.relations[0].over, ArcId(1));
    }

    #[test]
    fn undefined_arc_rejected() {
        let bad = r#"{"name":"x","arcs":4,"components":[[0,1],[2,3]],
            "crossings":[{"sign":1,"over":99,"under_in":0,"under_out":1}]}"#;
        let err = LinkDiagram::parse(bad).unwrap_err();
        assert!(matches!(err, DiagramError::UndefinedArc { arc: 99, .. }));
    }

    #[test]
    fn bad_sign_rejected() {
        let bad = r#"{"name":"x","arcs":1,"components":[[0]],
            "crossings":[{"sign":2,"over":0,"under_in":0,"under_out":0}]}"#;
        let err = LinkDiagram::parse(bad).unwrap_err();
        assert!(matches!(err, DiagramError::Syntax(_)));
    }

    #[test]
    fn duplicate_under_rejected() {
        let bad = r#"{"name":"x","arcs":2,"components":[[0,1]],
            "crossings":[{"sign":1,"over":0,"under_in":0,"under_out":1},
                         {"sign":1,"over":1,"under_in":0,"under_out":0}]}"#;
        let err = LinkDiagram::parse(bad).unwrap_err();
        assert!(matches!(
            err,
            DiagramError::BadUnderCount {
                role: "under_in",
                ..
            }
        ));
    }

    #[test]
    fn unknot_presentation_is_free() {
        let d = LinkDiagram::parse(r#"{"name":"u","arcs":1,"components":[[0]],"crossings":[]}"#)
            .unwrap();
        let p = d.presentation();
        assert_eq!((p.generator_count, p.relations.len()), (1, 0));
    }

    #[test]
    fn round_trip_is_identity() {
        let d = LinkDiagram::parse(hopf_json()).unwrap();
        let json = d.to_json();
        let d2 = LinkDiagram::parse(&json).unwrap();
        assert_eq!(d, d2);
        assert_eq!(json, d2.to_json());
    }

    #[test]
    fn relabel_requires_bijection() {
        let d = LinkDiagram::parse(hopf_json()).unwrap();
        assert!(d.relabel(&[0, 0]).is_err());
        assert!(d.relabel(&[1]).is_err());
        let id = d.relabel(&[0, 1]).unwrap();
        assert_eq!(id, d);
        let swapped = d.relabel(&[1, 0]).unwrap();
        assert_eq!(swapped.crossings()[0].over, 0);
    }

    #[test]
    fn kink_keeps_diagram_valid() {
        let d = LinkDiagram::parse(hopf_json()).unwrap();
        let k = d.with_positive_kink(ArcId(0)).unwrap();
        assert_eq!(k.arc_count(), 3);
        assert_eq!(k.crossings().len(), 3);
        assert_eq!(k.presentation().relations.len(), 3);
    }

    #[test]
    fn succession_mismatch_rejected() {
        let bad = r#"{"name":"x","arcs":2,"components":[[0],[1]],
            "crossings":[{"sign":1,"over":0,"under_in":0,"under_out":1},
                         {"sign":1,"over":1,"under_in":1,"under_out":0}]}"#;
        let err = LinkDiagram::parse(bad).unwrap_err();
        assert!(matches!(err, DiagramError::BadSuccession { .. }));
    }
}
