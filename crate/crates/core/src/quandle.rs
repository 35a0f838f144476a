//! Finite quandles as explicit operation tables.
//!
//! A quandle is a set with a binary operation `▷` satisfying
//!
//! 1. `x ▷ x = x`,
//! 2. `y ↦ x ▷ y`-style right translations are invertible: `(x ▷ y) ▷⁻¹ y = x`,
//! 3. `(x ▷ y) ▷ z = (x ▷ z) ▷ (y ▷ z)`.
//!
//! Three families are built in: symplectic quandles on `(ℤ_p)²` with an
//! alternating non-degenerate form `λJ`, Takasaki quandles on `ℤ_n`
//! (`x ▷ y = 2y − x`), and affine Alexander quandles (`x ▷ y = tx + (1−t)y`).
//! Tables are dense `n × n` arrays so the solver gets O(1) lookups; at the
//! sizes used here (`n ≤ 49`) that is a few kilobytes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuandleError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("lambda = {lambda} is not a unit modulo {modulus}")]
    NotAUnit { lambda: u32, modulus: u32 },
    #[error("form matrix is not alternating (need zero diagonal and M = -M^T mod p)")]
    NotAlternating,
    #[error("form matrix is degenerate (det = 0 mod {0})")]
    Degenerate(u32),
    #[error("takasaki order must be >= 1")]
    EmptyCarrier,
    #[error("subset is not closed under the quandle operation: {x} ▷ {y} = {result} is outside")]
    NotClosed { x: u16, y: u16, result: u16 },
    #[error("operation tables have inconsistent dimensions")]
    BadTables,
    #[error("unknown quandle spec `{0}`")]
    BadSpec(String),
}

/// A prime modulus, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldPrime(u32);

impl FieldPrime {
    pub fn new(p: u32) -> Result<Self, QuandleError> {
        if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(QuandleError::NotPrime(p));
        }
        Ok(FieldPrime(p))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// An alternating non-degenerate bilinear form on `(ℤ_p)²`, stored as a
/// 2×2 matrix. `lambda_j(p, λ)` builds `λJ` with `J = [[0,1],[-1,0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    p: FieldPrime,
    matrix: [[u32; 2]; 2],
    lambda: Option<u32>,
}

impl SymplecticForm {
    pub fn lambda_j(p: FieldPrime, lambda: u32) -> Result<Self, QuandleError> {
        let m = p.get();
        let lam = lambda % m;
        if lam == 0 {
            return Err(QuandleError::NotAUnit {
                lambda,
                modulus: m,
            });
        }
        let matrix = [[0, lam], [(m - lam) % m, 0]];
        let mut form = SymplecticForm {
            p,
            matrix,
            lambda: Some(lam),
        };
        form.validate()?;
        form.lambda = Some(lam);
        Ok(form)
    }

    /// Build from an explicit matrix, e.g. `SᵀJS` in basis-change tests.
    pub fn from_matrix(p: FieldPrime, matrix: [[u32; 2]; 2]) -> Result<Self, QuandleError> {
        let m = p.get();
        let matrix = [
            [matrix[0][0] % m, matrix[0][1] % m],
            [matrix[1][0] % m, matrix[1][1] % m],
        ];
        let mut form = SymplecticForm {
            p,
            matrix,
            lambda: None,
        };
        form.validate()?;
        // Every alternating 2x2 form is a multiple of J; record the unit.
        form.lambda = Some(form.matrix[0][1]);
        Ok(form)
    }

    fn validate(&self) -> Result<(), QuandleError> {
        let m = self.p.get();
        let a = self.matrix;
        if a[0][0] != 0 || a[1][1] != 0 || (a[0][1] + a[1][0]) % m != 0 {
            return Err(QuandleError::NotAlternating);
        }
        if self.det() == 0 {
            return Err(QuandleError::Degenerate(m));
        }
        Ok(())
    }

    pub fn prime(&self) -> FieldPrime {
        self.p
    }

    pub fn matrix(&self) -> [[u32; 2]; 2] {
        self.matrix
    }

    pub fn lambda(&self) -> Option<u32> {
        self.lambda
    }

    /// `det(M) mod p`; non-zero by construction.
    pub fn det(&self) -> u32 {
        let m = self.p.get() as u64;
        let a = self.matrix;
        let pos = (a[0][0] as u64) * (a[1][1] as u64) % m;
        let neg = (a[0][1] as u64) * (a[1][0] as u64) % m;
        ((pos + m - neg) % m) as u32
    }

    /// `⟨x, y⟩ = x M yᵀ mod p`.
    pub fn pair(&self, x: (u32, u32), y: (u32, u32)) -> u32 {
        let m = self.p.get() as u64;
        let a = self.matrix;
        let row0 = (x.0 as u64 * a[0][0] as u64 + x.1 as u64 * a[1][0] as u64) % m;
        let row1 = (x.0 as u64 * a[0][1] as u64 + x.1 as u64 * a[1][1] as u64) % m;
        ((row0 * y.0 as u64 + row1 * y.1 as u64) % m) as u32
    }
}

/// How a quandle was built; kept for reports and display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuandleKind {
    Symplectic(SymplecticForm),
    Takasaki { n: usize },
    Alexander { n: usize, t: u32 },
    Subquandle { parent: Box<QuandleKind>, kept: Vec<u16> },
}

impl QuandleKind {
    /// The modulus of the underlying arithmetic (p for symplectic, n otherwise).
    pub fn modulus(&self) -> u32 {
        match self {
            QuandleKind::Symplectic(f) => f.prime().get(),
            QuandleKind::Takasaki { n } | QuandleKind::Alexander { n, .. } => *n as u32,
            QuandleKind::Subquandle { parent, .. } => parent.modulus(),
        }
    }
}

/// An element index together with a single axiom violation found by
/// [`FiniteQuandle::verify_axioms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    Idempotence { x: u16 },
    RightInverse { x: u16, y: u16 },
    Distributivity { x: u16, y: u16, z: u16 },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::Idempotence { x } => write!(f, "axiom 1 fails at x={x}"),
            AxiomViolation::RightInverse { x, y } => {
                write!(f, "axiom 2 fails at (x,y)=({x},{y})")
            }
            AxiomViolation::Distributivity { x, y, z } => {
                write!(f, "axiom 3 fails at (x,y,z)=({x},{y},{z})")
            }
        }
    }
}

/// Exhaustive axiom check report. Empty means all three axioms hold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Crossing sign / operation direction: `Positive` applies `▷`,
/// `Negative` applies `▷⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Sign> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

/// A finite quandle as dense `▷` and `▷⁻¹` tables over element indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteQuandle {
    n: usize,
    op: Vec<u16>,
    inv: Vec<u16>,
    kind: QuandleKind,
    labels: Vec<String>,
}

impl FiniteQuandle {
    /// Symplectic quandle on `(ℤ_p)²` with form `λJ`:
    /// `x ▷ y = x + ⟨x,y⟩ y`, `x ▷⁻¹ y = x − ⟨x,y⟩ y`.
    ///
    /// Elements are indexed as `a·p + b` for the vector `(a, b)`.
    pub fn symplectic(p: u32, lambda: u32) -> Result<Self, QuandleError> {
        let form = SymplecticForm::lambda_j(FieldPrime::new(p)?, lambda)?;
        Ok(Self::symplectic_from_form(form))
    }

    pub fn symplectic_from_form(form: SymplecticForm) -> Self {
        let p = form.prime().get();
        let n = (p * p) as usize;
        let vec_of = |i: usize| ((i as u32) / p, (i as u32) % p);
        let idx_of = |v: (u32, u32)| (v.0 % p * p + v.1 % p) as usize;
        let mut op = vec![0u16; n * n];
        let mut inv = vec![0u16; n * n];
        for x in 0..n {
            for y in 0..n {
                let (xv, yv) = (vec_of(x), vec_of(y));
                let k = form.pair(xv, yv);
                let fwd = ((xv.0 + k * yv.0) % p, (xv.1 + k * yv.1) % p);
                let bck = (
                    (xv.0 + (p - k) % p * yv.0) % p,
                    (xv.1 + (p - k) % p * yv.1) % p,
                );
                op[x * n + y] = idx_of(fwd) as u16;
                inv[x * n + y] = idx_of(bck) as u16;
            }
        }
        let labels = (0..n).map(|i| format!("({},{})", vec_of(i).0, vec_of(i).1)).collect();
        FiniteQuandle {
            n,
            op,
            inv,
            kind: QuandleKind::Symplectic(form),
            labels,
        }
    }

    /// Takasaki quandle on `ℤ_n`: `x ▷ y = 2y − x`. Involutory, so `▷⁻¹ = ▷`.
    pub fn takasaki(n: usize) -> Result<Self, QuandleError> {
        if n == 0 {
            return Err(QuandleError::EmptyCarrier);
        }
        let m = n as u32;
        let mut op = vec![0u16; n * n];
        for x in 0..n {
            for y in 0..n {
                op[x * n + y] = (((2 * y as u32) % m + m - x as u32 % m) % m) as u16;
            }
        }
        let inv = op.clone();
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(FiniteQuandle {
            n,
            op,
            inv,
            kind: QuandleKind::Takasaki { n },
            labels,
        })
    }

    /// Affine Alexander quandle on `ℤ_n`: `x ▷ y = tx + (1−t)y` for a unit `t`.
    /// With `t = n−1` this is the Takasaki quandle.
    pub fn alexander(n: usize, t: u32) -> Result<Self, QuandleError> {
        if n == 0 {
            return Err(QuandleError::EmptyCarrier);
        }
        let m = n as u32;
        let t = t % m;
        let t_inv = match mod_inverse(t, m) {
            Some(v) => v,
            None => {
                return Err(QuandleError::NotAUnit {
                    lambda: t,
                    modulus: m,
                })
            }
        };
        let mut op = vec![0u16; n * n];
        let mut inv = vec![0u16; n * n];
        for x in 0..n {
            for y in 0..n {
                let xv = x as u64;
                let yv = y as u64;
                let fwd = (t as u64 * xv + (1 + m as u64 - t as u64) * yv) % m as u64;
                // z with t z + (1−t) y = x:  z = t⁻¹ (x − (1−t) y)
                let back = (t_inv as u64 * ((xv + (m as u64 + t as u64 - 1) * yv) % m as u64))
                    % m as u64;
                op[x * n + y] = fwd as u16;
                inv[x * n + y] = back as u16;
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(FiniteQuandle {
            n,
            op,
            inv,
            kind: QuandleKind::Alexander { n, t },
            labels,
        })
    }

    /// Build directly from tables. Shapes are checked; the axioms are not —
    /// run [`verify_axioms`](Self::verify_axioms) for that. Used by tests to
    /// inject broken tables and by the subquandle constructor.
    pub fn from_tables(
        op: Vec<u16>,
        inv: Vec<u16>,
        kind: QuandleKind,
        labels: Vec<String>,
    ) -> Result<Self, QuandleError> {
        let n = labels.len();
        if op.len() != n * n || inv.len() != n * n {
            return Err(QuandleError::BadTables);
        }
        if op.iter().chain(inv.iter()).any(|&v| v as usize >= n) {
            return Err(QuandleError::BadTables);
        }
        Ok(FiniteQuandle {
            n,
            op,
            inv,
            kind,
            labels,
        })
    }

    /// Restrict to a subset of elements, which must be closed under both
    /// `▷` and `▷⁻¹`.
    pub fn subquandle(&self, subset: &[u16]) -> Result<Self, QuandleError> {
        let mut keep = subset.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut index = vec![u16::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            index[old as usize] = new as u16;
        }
        let m = keep.len();
        let mut op = vec![0u16; m * m];
        let mut inv = vec![0u16; m * m];
        for (i, &x) in keep.iter().enumerate() {
            for (j, &y) in keep.iter().enumerate() {
                for (table, source) in [(&mut op, &self.op), (&mut inv, &self.inv)] {
                    let r = source[x as usize * self.n + y as usize];
                    if index[r as usize] == u16::MAX {
                        return Err(QuandleError::NotClosed { x, y, result: r });
                    }
                    table[i * m + j] = index[r as usize];
                }
            }
        }
        let labels = keep.iter().map(|&i| self.labels[i as usize].clone()).collect();
        FiniteQuandle::from_tables(
            op,
            inv,
            QuandleKind::Subquandle {
                parent: Box::new(self.kind.clone()),
                kept: keep,
            },
            labels,
        )
    }

    /// Drop the zero element, giving the connected subquandle `M∖{0}` of a
    /// symplectic quandle. Fails if the subset is not closed (non-symplectic
    /// targets generally are not).
    pub fn punctured(&self) -> Result<Self, QuandleError> {
        let subset: Vec<u16> = (1..self.n as u16).collect();
        self.subquandle(&subset)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> &QuandleKind {
        &self.kind
    }

    pub fn label(&self, x: u16) -> &str {
        &self.labels[x as usize]
    }

    #[inline]
    pub fn op(&self, x: u16, y: u16) -> u16 {
        self.op[x as usize * self.n + y as usize]
    }

    #[inline]
    pub fn inv_op(&self, x: u16, y: u16) -> u16 {
        self.inv[x as usize * self.n + y as usize]
    }

    /// `x ▷ y` or `x ▷⁻¹ y` depending on the sign.
    #[inline]
    pub fn apply(&self, x: u16, y: u16, sign: Sign) -> u16 {
        match sign {
            Sign::Positive => self.op(x, y),
            Sign::Negative => self.inv_op(x, y),
        }
    }

    /// Exhaustively check all three quandle axioms over every pair and
    /// triple. Violations come back as data, not errors.
    pub fn verify_axioms(&self) -> AxiomReport {
        let mut report = AxiomReport::default();
        let n = self.n as u16;
        for x in 0..n {
            if self.op(x, x) != x {
                report.violations.push(AxiomViolation::Idempotence { x });
            }
        }
        for x in 0..n {
            for y in 0..n {
                if self.inv_op(self.op(x, y), y) != x || self.op(self.inv_op(x, y), y) != x {
                    report.violations.push(AxiomViolation::RightInverse { x, y });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let lhs = self.op(self.op(x, y), z);
                    let rhs = self.op(self.op(x, z), self.op(y, z));
                    if lhs != rhs {
                        report
                            .violations
                            .push(AxiomViolation::Distributivity { x, y, z });
                    }
                }
            }
        }
        report
    }

    /// Orbit partition of `subset` under the group generated by the right
    /// translations `s ↦ s ▷ t` (and inverses) for `t` in the subset.
    /// The subset must be closed under the restricted action.
    pub fn connected_components(&self, subset: &[u16]) -> Result<Vec<Vec<u16>>, QuandleError> {
        let mut keep = subset.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let inside = |v: u16| keep.binary_search(&v).is_ok();
        for &x in &keep {
            for &y in &keep {
                let r = self.op(x, y);
                if !inside(r) {
                    return Err(QuandleError::NotClosed { x, y, result: r });
                }
                let r = self.inv_op(x, y);
                if !inside(r) {
                    return Err(QuandleError::NotClosed { x, y, result: r });
                }
            }
        }
        let mut seen = vec![false; self.n];
        let mut classes = Vec::new();
        for &start in &keep {
            if seen[start as usize] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start as usize] = true;
            let mut frontier = vec![start];
            while let Some(x) = frontier.pop() {
                for &t in &keep {
                    for next in [self.op(x, t), self.inv_op(x, t)] {
                        if !seen[next as usize] {
                            seen[next as usize] = true;
                            orbit.push(next);
                            frontier.push(next);
                        }
                    }
                }
            }
            orbit.sort_unstable();
            classes.push(orbit);
        }
        Ok(classes)
    }

    /// Greedily pick a small generating sequence: elements that enlarge the
    /// generated subquandle until it is everything.
    fn generating_sequence(&self) -> Vec<u16> {
        let mut gens = Vec::new();
        let mut span = vec![false; self.n];
        let mut count = 0;
        while count < self.n {
            let next = (0..self.n as u16).find(|&i| !span[i as usize]).unwrap();
            gens.push(next);
            // close span under ops with everything already in span
            span[next as usize] = true;
            count += 1;
            let mut changed = true;
            while changed {
                changed = false;
                for x in 0..self.n as u16 {
                    if !span[x as usize] {
                        continue;
                    }
                    for y in 0..self.n as u16 {
                        if !span[y as usize] {
                            continue;
                        }
                        for r in [self.op(x, y), self.inv_op(x, y)] {
                            if !span[r as usize] {
                                span[r as usize] = true;
                                count += 1;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        gens
    }

    /// Search for a quandle isomorphism onto `other`, returning the element
    /// map if one exists. Backtracks over images of a generating sequence
    /// and extends by closure, so it is practical for the table sizes used
    /// in tests (n ≤ 25).
    pub fn find_isomorphism(&self, other: &FiniteQuandle) -> Option<Vec<u16>> {
        if self.n != other.n {
            return None;
        }
        let gens = self.generating_sequence();
        let mut map = vec![u16::MAX; self.n];
        self.extend_isomorphism(other, &gens, 0, &mut map)
    }

    fn extend_isomorphism(
        &self,
        other: &FiniteQuandle,
        gens: &[u16],
        depth: usize,
        map: &mut Vec<u16>,
    ) -> Option<Vec<u16>> {
        // Propagate closure: whenever f(x), f(y) known, f(x ▷ y) is forced.
        fn close(a: &FiniteQuandle, b: &FiniteQuandle, map: &mut Vec<u16>) -> bool {
            let mut changed = true;
            while changed {
                changed = false;
                for x in 0..a.n as u16 {
                    if map[x as usize] == u16::MAX {
                        continue;
                    }
                    for y in 0..a.n as u16 {
                        if map[y as usize] == u16::MAX {
                            continue;
                        }
                        for (r, s) in [
                            (a.op(x, y), b.op(map[x as usize], map[y as usize])),
                            (a.inv_op(x, y), b.inv_op(map[x as usize], map[y as usize])),
                        ] {
                            let cur = map[r as usize];
                            if cur == u16::MAX {
                                map[r as usize] = s;
                                changed = true;
                            } else if cur != s {
                                return false;
                            }
                        }
                    }
                }
            }
            true
        }

        if depth == gens.len() {
            let mut used = vec![false; self.n];
            for &v in map.iter() {
                if v == u16::MAX || used[v as usize] {
                    return None;
                }
                used[v as usize] = true;
            }
            return Some(map.clone());
        }
        let g = gens[depth];
        if map[g as usize] != u16::MAX {
            return self.extend_isomorphism(other, gens, depth + 1, map);
        }
        for img in 0..self.n as u16 {
            if map.iter().any(|&v| v == img) {
                continue;
            }
            let mut trial = map.clone();
            trial[g as usize] = img;
            if close(self, other, &mut trial) {
                if let Some(found) = self.extend_isomorphism(other, gens, depth + 1, &mut trial) {
                    return Some(found);
                }
            }
        }
        None
    }

    /// Parse a CLI quandle spec, e.g. `symplectic:p=3,lambda=2`,
    /// `takasaki:n=5`, `alexander:n=5,t=4`, with optional `:punctured`.
    pub fn parse_spec(spec: &str) -> Result<Self, QuandleError> {
        let bad = || QuandleError::BadSpec(spec.to_string());
        let mut rest = spec.trim();
        let punctured = if let Some(stripped) = rest.strip_suffix(":punctured") {
            rest = stripped;
            true
        } else {
            false
        };
        let (family, args) = rest.split_once(':').ok_or_else(bad)?;
        let mut params = std::collections::BTreeMap::new();
        for piece in args.split(',') {
            let (k, v) = piece.split_once('=').ok_or_else(bad)?;
            let v: u32 = v.trim().parse().map_err(|_| bad())?;
            params.insert(k.trim().to_string(), v);
        }
        let q = match family {
            "symplectic" => {
                let p = *params.get("p").ok_or_else(bad)?;
                let lambda = *params.get("lambda").ok_or_else(bad)?;
                FiniteQuandle::symplectic(p, lambda)?
            }
            "takasaki" => {
                let n = *params.get("n").ok_or_else(bad)? as usize;
                FiniteQuandle::takasaki(n)?
            }
            "alexander" => {
                let n = *params.get("n").ok_or_else(bad)? as usize;
                let t = *params.get("t").ok_or_else(bad)?;
                FiniteQuandle::alexander(n, t)?
            }
            _ => return Err(bad()),
        };
        if punctured {
            q.punctured()
        } else {
            Ok(q)
        }
    }
}

fn mod_inverse(a: u32, m: u32) -> Option<u32> {
    let (mut t, mut new_t): (i64, i64) = (0, 1);
    let (mut r, mut new_r): (i64, i64) = (m as i64, (a % m) as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(((t % m as i64 + m as i64) % m as i64) as u32)
}
