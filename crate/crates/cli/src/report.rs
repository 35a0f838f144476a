//! The machine-readable run report: parameters, counts, tallies, plan and
//! validation flags. Schema is versioned; field order is fixed so that two
//! identical runs emit byte-identical JSON apart from `wall_time_ms`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use qcount_core::invariants::EnhancedPolynomial;
use qcount_core::quandle::{FiniteQuandle, QuandleKind};
use qcount_core::solver::SolveReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct QuandleInfo {
    pub spec: String,
    pub kind: String,
    /// p for symplectic targets, n otherwise
    pub modulus: u32,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[u32; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u32>,
}

impl QuandleInfo {
    pub fn describe(spec: &str, q: &FiniteQuandle) -> Self {
        fn base(kind: &QuandleKind) -> (String, Option<[[u32; 2]; 2]>, Option<u32>) {
            match kind {
                QuandleKind::Symplectic(form) => {
                    ("symplectic".to_string(), Some(form.matrix()), form.lambda())
                }
                QuandleKind::Takasaki { .. } => ("takasaki".to_string(), None, None),
                QuandleKind::Alexander { .. } => ("alexander".to_string(), None, None),
                QuandleKind::Subquandle { parent, .. } => {
                    let (name, m, l) = base(parent);
                    (format!("{name} subquandle"), m, l)
                }
            }
        }
        let (kind, matrix, lambda) = base(q.kind());
        QuandleInfo {
            spec: spec.to_string(),
            kind,
            modulus: q.kind().modulus(),
            size: q.len(),
            matrix,
            lambda,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SolverInfo {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_size: Option<u8>,
    pub threads: usize,
    pub blocks: usize,
    pub merges: usize,
    pub cartesian_merges: usize,
    pub max_table_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emptied_at: Option<String>,
    pub row_warning: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Validation {
    pub residual_ok: bool,
    pub sum_check: bool,
    pub max_image_bound: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Report {
    pub schema_version: u32,
    pub link: String,
    pub diagram_file: String,
    pub quandle: QuandleInfo,
    pub solver: SolverInfo,
    pub phi: u64,
    #[serde(rename = "phi_E")]
    pub phi_e: BTreeMap<usize, u64>,
    pub degree: usize,
    pub rendered: String,
    pub validation: Validation,
    pub wall_time_ms: u128,
}

impl Report {
    pub fn build(
        link: &str,
        diagram_file: &str,
        spec: &str,
        q: &FiniteQuandle,
        threads: usize,
        solve: &SolveReport,
    ) -> Self {
        let poly = EnhancedPolynomial::from_tally(solve.image_tally.clone(), solve.hom_count)
            .expect("solver tallies sum to the count");
        let max_image = solve.image_tally.keys().next_back().copied().unwrap_or(0);
        Report {
            schema_version: SCHEMA_VERSION,
            link: link.to_string(),
            diagram_file: diagram_file.to_string(),
            quandle: QuandleInfo::describe(spec, q),
            solver: SolverInfo {
                mode: solve.plan.mode.to_string(),
                block_size: solve.plan.block_size,
                threads,
                blocks: solve.plan.blocks,
                merges: solve.plan.merges,
                cartesian_merges: solve.plan.cartesian_merges,
                max_table_rows: solve.plan.max_table_rows,
                emptied_at: solve.plan.emptied_at.clone(),
                row_warning: solve.plan.row_warning,
            },
            phi: solve.hom_count,
            phi_e: solve.image_tally.clone(),
            degree: poly.degree(),
            rendered: poly.to_string(),
            validation: Validation {
                residual_ok: solve.residual_ok,
                sum_check: true,
                max_image_bound: max_image <= q.len(),
            },
            wall_time_ms: solve.wall_time.as_millis(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn polynomial(&self) -> Option<EnhancedPolynomial> {
        EnhancedPolynomial::from_tally(self.phi_e.clone(), self.phi)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("link:       {}\n", self.link));
        s.push_str(&format!("target:     {} (|T| = {})\n", self.quandle.spec, self.quandle.size));
        if let Some(m) = self.quandle.matrix {
            s.push_str(&format!(
                "form:       [[{},{}],[{},{}]] mod {}\n",
                m[0][0], m[0][1], m[1][0], m[1][1], self.quandle.modulus
            ));
        }
        s.push_str(&format!(
            "solver:     {}{}, {} thread(s)\n",
            self.solver.mode,
            self.solver
                .block_size
                .map(|b| format!(" (block size {b}, {} blocks, {} merges)", self.solver.blocks, self.solver.merges))
                .unwrap_or_default(),
            self.solver.threads
        ));
        if let Some(at) = &self.solver.emptied_at {
            s.push_str(&format!("emptied:    {at} (inconsistent system)\n"));
        }
        s.push_str(&format!("phi:        {}\n", self.phi));
        s.push_str(&format!("Phi_E:      {}\n", self.rendered));
        s.push_str(&format!("degree:     {}\n", self.degree));
        s.push_str(&format!(
            "validation: residual={} sum={} max_image={}\n",
            self.validation.residual_ok, self.validation.sum_check, self.validation.max_image_bound
        ));
        s.push_str(&format!("wall_time:  {} ms\n", self.wall_time_ms));
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,a_m\n");
        for (m, a) in &self.phi_e {
            s.push_str(&format!("{m},{a}\n"));
        }
        s
    }
}
