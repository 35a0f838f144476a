//! The link family `L_n`: n concatenated copies of a core tangle closed
//! through an axis circle, plus the color-transfer construction.
//!
//! The core is not hand-authored: it is extracted by diffing the shipped
//! `L1` and `L2` diagram files. `L2` must consist of the `L1` crossing
//! list followed by a translated replica of the core block; extraction
//! fails otherwise, and regenerating `L2` from the extracted core is a
//! built-in self-test. This keeps the generator and the shipped data from
//! drifting apart.
//!
//! Color transfer: every coloring of `L1` assigns the core's exit arcs the
//! same colors as its entry arcs (each core crossing is undone by a later
//! one, so the relations force the boundary colors to repeat). Mirroring
//! the copy-1 colors into copies `2..n` therefore satisfies every replica
//! relation and introduces no new colors, giving a coloring of `L_n` with
//! the same image.

use thiserror::Error;

use crate::diagram::{Crossing, DiagramError, LinkDiagram};
use crate::invariants::image_size;
use crate::quandle::{FiniteQuandle, Sign};
use crate::solver::Coloring;

/// Arcs of the closure (shared by every `L_n`): the two strand entry arcs
/// and the three axis arcs.
const ENTRY_S: usize = 0;
const ENTRY_T: usize = 1;
const CLOSURE_ARCS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("n must be >= 1")]
    BadIndex,
    #[error("core extraction failed: {0}")]
    Extraction(String),
    #[error("diagram construction failed: {0}")]
    Diagram(#[from] DiagramError),
    #[error("input coloring has {got} arcs; the base diagram has {expected}")]
    WrongArcCount { got: usize, expected: usize },
    #[error("input coloring fails the residual check at crossing {0}")]
    InvalidColoring(usize),
    #[error("transferred coloring fails the residual check at crossing {0} of the target")]
    TransferFailed(usize),
    #[error("invariant records are for different targets: `{a}` vs `{b}`")]
    TargetMismatch { a: String, b: String },
}

/// Where a core crossing's reference points: one of the two entry arcs of
/// the current copy, or an arc minted inside the copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoreRef {
    EntryS,
    EntryT,
    Local(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CoreCrossing {
    sign: Sign,
    over: CoreRef,
    under_in: CoreRef,
    under_out: usize, // local mint index, dense 0..core_len
}

/// The replicable crossing block of the `L_n` family, together with the
/// closure template it is spliced into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreTangle {
    crossings: Vec<CoreCrossing>,
    closure: [Crossing; CLOSURE_ARCS],
    /// local mint indices of the strand exits (the copy's boundary-out arcs)
    exit_s: usize,
    exit_t: usize,
    /// succession of local arcs along each strand, for component lists
    strand_s: Vec<usize>,
    strand_t: Vec<usize>,
    base_name: String,
}

impl CoreTangle {
    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    /// Extract the core by diffing the `L1` and `L2` diagrams, then verify
    /// the extraction by regenerating both.
    pub fn extract(l1: &LinkDiagram, l2: &LinkDiagram) -> Result<Self, FamilyError> {
        let err = |msg: &str| FamilyError::Extraction(msg.to_string());
        let c1 = l1.crossings();
        let c2 = l2.crossings();
        if c2.len() <= c1.len() || c1.len() <= CLOSURE_ARCS {
            return Err(err("L2 must extend L1 by one replica block"));
        }
        let core_len = c2.len() - c1.len();
        if c1.len() != CLOSURE_ARCS + core_len {
            return Err(err(
                "L1 must be the closure block followed by exactly one core copy",
            ));
        }
        // shared left half: closure + first copy, up to the exit-arc rewiring
        // in the closure (L2's closure reads the second copy's exits).
        let arcs_per_copy = core_len;
        let core1 = &c1[CLOSURE_ARCS..];

        // classify local arcs of copy 1 in L1: minted arcs are 5..5+core_len
        let to_ref = |arc: usize| -> Result<CoreRef, FamilyError> {
            if arc == ENTRY_S {
                Ok(CoreRef::EntryS)
            } else if arc == ENTRY_T {
                Ok(CoreRef::EntryT)
            } else if (CLOSURE_ARCS..CLOSURE_ARCS + arcs_per_copy).contains(&arc) {
                Ok(CoreRef::Local(arc - CLOSURE_ARCS))
            } else {
                Err(err(&format!("core crossing references closure arc {arc}")))
            }
        };
        let mut crossings = Vec::with_capacity(core_len);
        for (i, cr) in core1.iter().enumerate() {
            let out = match to_ref(cr.under_out)? {
                CoreRef::Local(k) => k,
                _ => return Err(err(&format!("core crossing {i} writes an entry arc"))),
            };
            if out != i {
                return Err(err("core mints must be dense and in crossing order"));
            }
            crossings.push(CoreCrossing {
                sign: cr.sign,
                over: to_ref(cr.over)?,
                under_in: to_ref(cr.under_in)?,
                under_out: out,
            });
        }

        // strand succession from L1's component lists
        let comps = l1.components();
        let find_strand = |entry: usize| -> Result<Vec<usize>, FamilyError> {
            let comp = comps
                .iter()
                .find(|c| c.contains(&entry))
                .ok_or_else(|| err("entry arc missing from components"))?;
            let pos = comp.iter().position(|&a| a == entry).unwrap();
            let rotated: Vec<usize> = comp[pos..].iter().chain(&comp[..pos]).copied().collect();
            rotated[1..]
                .iter()
                .map(|&a| match to_ref(a) {
                    Ok(CoreRef::Local(k)) => Ok(k),
                    _ => Err(err("strand wanders outside the core")),
                })
                .collect()
        };
        let strand_s = find_strand(ENTRY_S)?;
        let strand_t = find_strand(ENTRY_T)?;
        let exit_s = *strand_s.last().ok_or_else(|| err("S strand never crosses"))?;
        let exit_t = *strand_t.last().ok_or_else(|| err("T strand never crosses"))?;

        let mut closure = [c1[0]; CLOSURE_ARCS];
        closure.copy_from_slice(&c1[..CLOSURE_ARCS]);

        let base_name = l1
            .name()
            .trim_end_matches(|c: char| c.is_ascii_digit())
            .to_string();
        let core = CoreTangle {
            crossings,
            closure,
            exit_s,
            exit_t,
            strand_s,
            strand_t,
            base_name,
        };

        // built-in self-test: the extracted core must reproduce both inputs
        let regen1 = core.generate(1)?;
        if regen1.crossings() != l1.crossings() || regen1.components() != l1.components() {
            return Err(err("regenerated L1 does not match the shipped diagram"));
        }
        let regen2 = core.generate(2)?;
        if regen2.crossings() != l2.crossings() || regen2.components() != l2.components() {
            return Err(err("regenerated L2 does not match the shipped diagram"));
        }
        Ok(core)
    }

    /// Build `L_n` by concatenating `n` copies of the core and closing
    /// through the axis. Crossing count is `5 + n · core_len`; arc
    /// relabeling is deterministic.
    pub fn generate(&self, n: usize) -> Result<LinkDiagram, FamilyError> {
        if n == 0 {
            return Err(FamilyError::BadIndex);
        }
        let core_len = self.crossings.len();
        let arc_count = CLOSURE_ARCS + n * core_len;
        let mut crossings: Vec<Crossing> = Vec::with_capacity(CLOSURE_ARCS + n * core_len);
        let mut strand_s_arcs = vec![ENTRY_S];
        let mut strand_t_arcs = vec![ENTRY_T];
        let mut entry_s = ENTRY_S;
        let mut entry_t = ENTRY_T;
        let mut tangle: Vec<Crossing> = Vec::with_capacity(n * core_len);
        for copy in 0..n {
            let base = CLOSURE_ARCS + copy * core_len;
            let resolve = |r: CoreRef| -> usize {
                match r {
                    CoreRef::EntryS => entry_s,
                    CoreRef::EntryT => entry_t,
                    CoreRef::Local(k) => base + k,
                }
            };
            for cc in &self.crossings {
                tangle.push(Crossing {
                    sign: cc.sign,
                    over: resolve(cc.over),
                    under_in: resolve(cc.under_in),
                    under_out: base + cc.under_out,
                });
            }
            strand_s_arcs.extend(self.strand_s.iter().map(|&k| base + k));
            strand_t_arcs.extend(self.strand_t.iter().map(|&k| base + k));
            entry_s = base + self.exit_s;
            entry_t = base + self.exit_t;
        }
        let (exit_s, exit_t) = (entry_s, entry_t);

        // closure template: rewire the strand-exit references to copy n
        let l1_exit_s = CLOSURE_ARCS + self.exit_s;
        let l1_exit_t = CLOSURE_ARCS + self.exit_t;
        let rewire = |arc: usize| -> usize {
            if arc == l1_exit_s {
                exit_s
            } else if arc == l1_exit_t {
                exit_t
            } else {
                arc
            }
        };
        for template in &self.closure {
            crossings.push(Crossing {
                sign: template.sign,
                over: rewire(template.over),
                under_in: rewire(template.under_in),
                under_out: rewire(template.under_out),
            });
        }
        crossings.extend(tangle);

        let components = vec![strand_s_arcs, strand_t_arcs, vec![2, 3, 4]];
        let name = format!("{}{}", self.base_name, n);
        Ok(LinkDiagram::new(name, arc_count, components, crossings)?)
    }

    /// Transfer a coloring of `L1` to `L_n` by mirroring the copy-1 colors
    /// into every replica. The result is residual-checked and preserves the
    /// image exactly.
    pub fn transfer_coloring(
        &self,
        f1: &Coloring,
        n: usize,
        q: &FiniteQuandle,
    ) -> Result<Coloring, FamilyError> {
        if n == 0 {
            return Err(FamilyError::BadIndex);
        }
        let l1 = self.generate(1)?;
        if f1.arc_count() != l1.arc_count() {
            return Err(FamilyError::WrongArcCount {
                got: f1.arc_count(),
                expected: l1.arc_count(),
            });
        }
        if let Some(crossing) = f1.first_violation(&l1.presentation(), q) {
            return Err(FamilyError::InvalidColoring(crossing));
        }
        let core_len = self.crossings.len();
        let mut values = Vec::with_capacity(CLOSURE_ARCS + n * core_len);
        values.extend_from_slice(f1.values());
        for _copy in 1..n {
            for k in 0..core_len {
                values.push(f1.values()[CLOSURE_ARCS + k]);
            }
        }
        let fn_ = Coloring::new(values);
        let ln = self.generate(n)?;
        if let Some(crossing) = fn_.first_violation(&ln.presentation(), q) {
            return Err(FamilyError::TransferFailed(crossing));
        }
        debug_assert_eq!(image_size(&fn_), image_size(f1));
        Ok(fn_)
    }
}

/// Verdict of the degree-gap certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeGap {
    Separated,
    NotSeparated,
}

/// The color-transfer lemma pushes every coloring of `L1` into every `L_n`
/// with its image intact, so `deg Φ_E(L_n) ≥ deg Φ_E(L1)`. If
/// `deg Φ_E(L1) > deg Φ_E(H)` over a target, the enhanced polynomial
/// therefore separates `H` from the whole family without solving it.
pub fn degree_gap_check(
    h: &crate::invariants::InvariantRecord,
    l1: &crate::invariants::InvariantRecord,
) -> Result<DegreeGap, FamilyError> {
    if h.target_spec != l1.target_spec {
        return Err(FamilyError::TargetMismatch {
            a: h.target_spec.clone(),
            b: l1.target_spec.clone(),
        });
    }
    if l1.degree() > h.degree() {
        Ok(DegreeGap::Separated)
    } else {
        Ok(DegreeGap::NotSeparated)
    }
}
