//! Block-structured linear conic programs: free variables, a nonnegative
//! block, and a list of PSD blocks, tied together by linear equality
//! constraints. The SOS compilers produce these; the embedded solver and the
//! SDPA sparse writer/reader consume them.
//!
//! Coefficient convention for PSD entries: a term `(Psd{block,i,j}, c)` with
//! i < j contributes `c·(X_ij + X_ji) = 2c·X_ij`, i.e. `c` is the (i,j) entry
//! of a symmetric coefficient matrix paired with X in ⟨·,·⟩. This matches the
//! SDPA sparse format, where only upper-triangle entries are listed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Reference to one scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarRef {
    Free(usize),
    Nonneg(usize),
    /// Entry (row, col) of a PSD block, normalized to row ≤ col.
    Psd { block: usize, row: usize, col: usize },
}

#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub label: String,
    pub size: usize,
}

/// One linear equality Σ cᵥ·v = rhs.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(VarRef, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub sense: Sense,
    pub num_free: usize,
    pub num_nonneg: usize,
    pub psd_blocks: Vec<PsdBlock>,
    pub objective: Vec<(VarRef, f64)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("objective: {0}")]
    BadObjective(String),
    #[error("constraint {index}: {detail}")]
    BadConstraint { index: usize, detail: String },
    #[error("{0}")]
    Invalid(String),
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        ConicProgram {
            sense,
            num_free: 0,
            num_nonneg: 0,
            psd_blocks: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_free(&mut self) -> VarRef {
        self.num_free += 1;
        VarRef::Free(self.num_free - 1)
    }

    pub fn add_nonneg(&mut self) -> VarRef {
        self.num_nonneg += 1;
        VarRef::Nonneg(self.num_nonneg - 1)
    }

    /// Adds a PSD block and returns its index.
    pub fn add_psd_block(&mut self, label: impl Into<String>, size: usize) -> usize {
        self.psd_blocks.push(PsdBlock { label: label.into(), size });
        self.psd_blocks.len() - 1
    }

    /// Entry reference with (row, col) normalized to the upper triangle.
    pub fn psd_entry(&self, block: usize, row: usize, col: usize) -> VarRef {
        VarRef::Psd { block, row: row.min(col), col: row.max(col) }
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarRef, f64)>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn objective_push(&mut self, v: VarRef, c: f64) {
        self.objective.push((v, c));
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Total scalar unknowns carried by the PSD blocks (upper triangles).
    pub fn total_psd_entries(&self) -> usize {
        self.psd_blocks.iter().map(|b| b.size * (b.size + 1) / 2).sum()
    }

    /// Total scalar unknowns across all cones.
    pub fn num_scalar_variables(&self) -> usize {
        self.num_free + self.num_nonneg + self.total_psd_entries()
    }

    fn check_ref(&self, v: &VarRef) -> Result<(), String> {
        match *v {
            VarRef::Free(i) if i < self.num_free => Ok(()),
            VarRef::Free(i) => Err(format!("free variable {i} out of range (have {})", self.num_free)),
            VarRef::Nonneg(i) if i < self.num_nonneg => Ok(()),
            VarRef::Nonneg(i) => {
                Err(format!("nonnegative variable {i} out of range (have {})", self.num_nonneg))
            }
            VarRef::Psd { block, row, col } => {
                let b = self
                    .psd_blocks
                    .get(block)
                    .ok_or_else(|| format!("psd block {block} out of range"))?;
                if row > col {
                    return Err(format!("psd entry ({row},{col}) not upper-triangular"));
                }
                if col >= b.size {
                    return Err(format!(
                        "psd entry ({row},{col}) outside block '{}' of size {}",
                        b.label, b.size
                    ));
                }
                Ok(())
            }
        }
    }

    /// Checks every variable reference and coefficient.
    pub fn validate(&self) -> Result<(), ConicError> {
        for (v, c) in &self.objective {
            self.check_ref(v).map_err(ConicError::BadObjective)?;
            if !c.is_finite() {
                return Err(ConicError::BadObjective(format!("non-finite coefficient {c}")));
            }
        }
        for (index, con) in self.constraints.iter().enumerate() {
            for (v, c) in &con.terms {
                self.check_ref(v)
                    .map_err(|detail| ConicError::BadConstraint { index, detail })?;
                if !c.is_finite() {
                    return Err(ConicError::BadConstraint {
                        index,
                        detail: format!("non-finite coefficient {c}"),
                    });
                }
            }
            if !con.rhs.is_finite() {
                return Err(ConicError::BadConstraint {
                    index,
                    detail: format!("non-finite right-hand side {}", con.rhs),
                });
            }
        }
        Ok(())
    }

    /// Serializes to SDPA sparse format (".dat-s").
    ///
    /// The file encodes max ⟨F₀,Y⟩ s.t. ⟨F_k,Y⟩ = rhs_k, Y ⪰ 0 over our cone
    /// blocks, with free variables split into paired nonnegative slots and a
    /// Min objective negated; the SDPA optimum therefore equals this
    /// program's Max value (the negated Min value for Min-sense programs).
    pub fn write_sdpa(&self) -> Result<String, ConicError> {
        self.validate()?;
        let lp_size = self.num_nonneg + 2 * self.num_free;
        let mut blocks: Vec<i64> = self.psd_blocks.iter().map(|b| b.size as i64).collect();
        if lp_size > 0 {
            blocks.push(-(lp_size as i64));
        }
        if blocks.is_empty() {
            return Err(ConicError::Invalid("no cone variables to export".into()));
        }
        let lp_block_no = self.psd_blocks.len() + 1; // 1-based; valid when lp_size > 0

        // (matno, blkno, i, j) → accumulated coefficient, 1-based indices.
        let mut entries: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        let obj_sign = match self.sense {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        };
        let mut put = |matno: usize, v: &VarRef, c: f64| match *v {
            VarRef::Psd { block, row, col } => {
                *entries.entry((matno, block + 1, row + 1, col + 1)).or_insert(0.0) += c;
            }
            VarRef::Nonneg(i) => {
                *entries.entry((matno, lp_block_no, i + 1, i + 1)).or_insert(0.0) += c;
            }
            VarRef::Free(i) => {
                let plus = self.num_nonneg + i + 1;
                let minus = self.num_nonneg + self.num_free + i + 1;
                *entries.entry((matno, lp_block_no, plus, plus)).or_insert(0.0) += c;
                *entries.entry((matno, lp_block_no, minus, minus)).or_insert(0.0) -= c;
            }
        };
        for (v, c) in &self.objective {
            put(0, v, obj_sign * c);
        }
        for (k, con) in self.constraints.iter().enumerate() {
            for (v, c) in &con.terms {
                put(k + 1, v, *c);
            }
        }

        let mut out = String::new();
        let _ = writeln!(out, "{}", self.constraints.len());
        let _ = writeln!(out, "{}", blocks.len());
        let sizes: Vec<String> = blocks.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let rhs: Vec<String> = self.constraints.iter().map(|c| format!("{}", c.rhs)).collect();
        let _ = writeln!(out, "{}", rhs.join(" "));
        for ((matno, blk, i, j), c) in entries {
            if c != 0.0 {
                let _ = writeln!(out, "{matno} {blk} {i} {j} {c}");
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Error)]
pub enum SdpaError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
    #[error("declared sizes exceed the reader cap: {0}")]
    TooLarge(String),
}

/// Caps on declared dimensions, enforced before any allocation so that
/// hostile headers cannot balloon memory.
const SDPA_MAX_BLOCKS: usize = 10_000;
const SDPA_MAX_BLOCK_SIZE: usize = 2_000;
const SDPA_MAX_TOTAL_PSD: usize = 4_000_000; // Σ size²
const SDPA_MAX_DIAG: usize = 1_000_000;

/// Parses SDPA sparse format into a Max-sense [`ConicProgram`] over the
/// declared blocks: objective from the F₀ entries, one equality per
/// constraint matrix. Diagonal (negative-size) blocks become the nonnegative
/// block, concatenated in declaration order. The program's optimal value
/// equals the SDPA optimum, so a write→read round trip preserves the value
/// up to the Min-sense sign flip documented on [`ConicProgram::write_sdpa`].
pub fn read_sdpa(input: &str) -> Result<ConicProgram, SdpaError> {
    // Token stream with line provenance; comment lines start with * or ".
    // Commas, braces and parentheses are treated as separators, as in the
    // reference implementation.
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.starts_with('*') || trimmed.starts_with('"') {
            continue;
        }
        for piece in raw.split(|ch: char| ch.is_whitespace() || ",{}()".contains(ch)) {
            if !piece.is_empty() {
                tokens.push((line, piece));
            }
        }
    }
    let mut pos = 0usize;
    fn next_tok<'a>(
        tokens: &[(usize, &'a str)],
        pos: &mut usize,
        what: &str,
    ) -> Result<(usize, &'a str), SdpaError> {
        let t = tokens.get(*pos).copied().ok_or_else(|| SdpaError::Truncated(what.into()))?;
        *pos += 1;
        Ok(t)
    }
    let mut next = |what: &str| next_tok(&tokens, &mut pos, what);
    let parse_usize = |(line, tok): (usize, &str), what: &str| -> Result<usize, SdpaError> {
        tok.parse::<usize>().map_err(|_| SdpaError::Parse {
            line,
            detail: format!("expected {what}, found '{tok}'"),
        })
    };
    let parse_i64 = |(line, tok): (usize, &str), what: &str| -> Result<i64, SdpaError> {
        tok.parse::<i64>().map_err(|_| SdpaError::Parse {
            line,
            detail: format!("expected {what}, found '{tok}'"),
        })
    };
    let parse_f64 = |(line, tok): (usize, &str), what: &str| -> Result<f64, SdpaError> {
        let v: f64 = tok.parse().map_err(|_| SdpaError::Parse {
            line,
            detail: format!("expected {what}, found '{tok}'"),
        })?;
        if !v.is_finite() {
            return Err(SdpaError::Parse { line, detail: format!("non-finite {what} '{tok}'") });
        }
        Ok(v)
    };

    let m = parse_usize(next("number of constraints")?, "number of constraints")?;
    let nblocks = parse_usize(next("number of blocks")?, "number of blocks")?;
    if nblocks > SDPA_MAX_BLOCKS {
        return Err(SdpaError::TooLarge(format!("{nblocks} blocks")));
    }

    // Block layout: positive size → PSD block; negative (or the SDPA-LP
    // convention of 1) stays whatever sign it is declared with.
    enum Slot {
        Psd { index: usize, size: usize },
        Diag { offset: usize, size: usize },
    }
    let mut program = ConicProgram::new(Sense::Max);
    let mut slots: Vec<Slot> = Vec::with_capacity(nblocks);
    let mut total_psd = 0usize;
    let mut total_diag = 0usize;
    for b in 0..nblocks {
        let t = next("block size")?;
        let s = parse_i64(t, "block size")?;
        if s == 0 || s.unsigned_abs() as usize > SDPA_MAX_BLOCK_SIZE {
            return Err(SdpaError::Parse {
                line: t.0,
                detail: format!("block size {s} out of range"),
            });
        }
        if s > 0 {
            let size = s as usize;
            total_psd += size * size;
            if total_psd > SDPA_MAX_TOTAL_PSD {
                return Err(SdpaError::TooLarge(format!("psd entries beyond {SDPA_MAX_TOTAL_PSD}")));
            }
            let index = program.add_psd_block(format!("block{}", b + 1), size);
            slots.push(Slot::Psd { index, size });
        } else {
            let size = (-s) as usize;
            total_diag += size;
            if total_diag > SDPA_MAX_DIAG {
                return Err(SdpaError::TooLarge(format!("diagonal entries beyond {SDPA_MAX_DIAG}")));
            }
            let offset = program.num_nonneg;
            for _ in 0..size {
                program.add_nonneg();
            }
            slots.push(Slot::Diag { offset, size });
        }
    }

    let mut rhs = Vec::new();
    for _ in 0..m {
        rhs.push(parse_f64(next("objective coefficient")?, "objective coefficient")?);
    }
    for _ in 0..m {
        program.add_constraint(Vec::new(), rhs[program.constraints.len()]);
    }

    loop {
        let matno_tok = match next("matrix number") {
            Ok(t) => t,
            Err(_) => break, // token stream exhausted: no more entries
        };
        let matno = parse_usize(matno_tok, "matrix number")?;
        if matno > m {
            return Err(SdpaError::Parse {
                line: matno_tok.0,
                detail: format!("matrix number {matno} exceeds declared {m}"),
            });
        }
        let blk_tok = next("block number")?;
        let blk = parse_usize(blk_tok, "block number")?;
        if blk == 0 || blk > nblocks {
            return Err(SdpaError::Parse {
                line: blk_tok.0,
                detail: format!("block number {blk} outside 1..{nblocks}"),
            });
        }
        let i_tok = next("row index")?;
        let i = parse_usize(i_tok, "row index")?;
        let j_tok = next("column index")?;
        let j = parse_usize(j_tok, "column index")?;
        let value = parse_f64(next("entry value")?, "entry value")?;
        let (lo, hi) = (i.min(j), i.max(j));
        let v = match &slots[blk - 1] {
            Slot::Psd { index, size } => {
                if lo == 0 || hi > *size {
                    return Err(SdpaError::Parse {
                        line: i_tok.0,
                        detail: format!("entry ({i},{j}) outside block of size {size}"),
                    });
                }
                VarRef::Psd { block: *index, row: lo - 1, col: hi - 1 }
            }
            Slot::Diag { offset, size } => {
                if lo == 0 || hi > *size {
                    return Err(SdpaError::Parse {
                        line: i_tok.0,
                        detail: format!("entry ({i},{j}) outside diagonal block of size {size}"),
                    });
                }
                if lo != hi {
                    return Err(SdpaError::Parse {
                        line: i_tok.0,
                        detail: format!("off-diagonal entry ({i},{j}) in a diagonal block"),
                    });
                }
                VarRef::Nonneg(offset + lo - 1)
            }
        };
        if matno == 0 {
            program.objective_push(v, value);
        } else {
            program.constraints[matno - 1].terms.push((v, value));
        }
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min x s.t. [[x, 1], [1, x]] ⪰ 0, modeled with a free scalar tied to
    /// the diagonal of a 2×2 PSD block.
    fn arrow_program() -> ConicProgram {
        let mut p = ConicProgram::new(Sense::Min);
        let x = p.add_free();
        let b = p.add_psd_block("arrow", 2);
        let x00 = p.psd_entry(b, 0, 0);
        let x11 = p.psd_entry(b, 1, 1);
        let x01 = p.psd_entry(b, 0, 1);
        p.add_constraint(vec![(x00, 1.0), (x, -1.0)], 0.0);
        p.add_constraint(vec![(x11, 1.0), (x, -1.0)], 0.0);
        p.add_constraint(vec![(x01, 1.0)], 2.0); // the pair coefficient weights X_01 + X_10, so rhs 2 pins X_01 = 1
        p.objective_push(x, 1.0);
        p
    }

    #[test]
    fn build_and_validate() {
        let p = arrow_program();
        assert!(p.validate().is_ok());
        assert_eq!(p.num_constraints(), 3);
        assert_eq!(p.total_psd_entries(), 3);
        assert_eq!(p.num_scalar_variables(), 4);
    }

    #[test]
    fn validate_rejects_out_of_range_refs() {
        let mut p = ConicProgram::new(Sense::Min);
        let b = p.add_psd_block("only", 2);
        p.add_constraint(vec![(VarRef::Psd { block: b, row: 0, col: 2 }, 1.0)], 0.0);
        assert!(matches!(p.validate(), Err(ConicError::BadConstraint { index: 0, .. })));

        let mut p = ConicProgram::new(Sense::Min);
        p.objective_push(VarRef::Nonneg(0), 1.0);
        assert!(matches!(p.validate(), Err(ConicError::BadObjective(_))));

        let mut p = ConicProgram::new(Sense::Min);
        let z = p.add_nonneg();
        p.add_constraint(vec![(z, f64::NAN)], 0.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn psd_entry_normalizes_orientation() {
        let mut p = ConicProgram::new(Sense::Min);
        let b = p.add_psd_block("b", 3);
        assert_eq!(p.psd_entry(b, 2, 1), p.psd_entry(b, 1, 2));
    }

    #[test]
    fn sdpa_writer_golden_output() {
        let p = arrow_program();
        let text = p.write_sdpa().unwrap();
        let expected = "\
3
2
2 -2
0 0 2
0 2 1 1 -1
0 2 2 2 1
1 1 1 1 1
1 2 1 1 -1
1 2 2 2 1
2 1 2 2 1
2 2 1 1 -1
2 2 2 2 1
3 1 1 2 1
";
        assert_eq!(text, expected);
    }

    #[test]
    fn sdpa_round_trip_preserves_structure() {
        let p = arrow_program();
        let text = p.write_sdpa().unwrap();
        let q = read_sdpa(&text).unwrap();
        assert_eq!(q.sense, Sense::Max);
        assert_eq!(q.num_constraints(), 3);
        assert_eq!(q.psd_blocks.len(), 1);
        assert_eq!(q.psd_blocks[0].size, 2);
        assert_eq!(q.num_nonneg, 2); // the split free variable
        assert_eq!(q.num_free, 0);
        assert!(q.validate().is_ok());
        // Writing the re-read program is a fixpoint.
        let text2 = q.write_sdpa().unwrap();
        let text3 = read_sdpa(&text2).unwrap().write_sdpa().unwrap();
        assert_eq!(text2, text3);
    }

    #[test]
    fn sdpa_reader_accepts_comments_and_commas() {
        let input = "\
* a comment line
\" another comment
2
2
{2, -1}
1.0, 2.0
0 1 1 1 1.5
1 1 1 2 0.5
2 2 1 1 1
";
        let p = read_sdpa(input).unwrap();
        assert_eq!(p.num_constraints(), 2);
        assert_eq!(p.psd_blocks.len(), 1);
        assert_eq!(p.num_nonneg, 1);
        assert_eq!(p.constraints[0].rhs, 1.0);
        assert_eq!(p.constraints[1].rhs, 2.0);
        assert_eq!(p.objective, vec![(VarRef::Psd { block: 0, row: 0, col: 0 }, 1.5)]);
    }

    #[test]
    fn sdpa_reader_rejects_bad_input() {
        assert!(matches!(read_sdpa(""), Err(SdpaError::Truncated(_))));
        assert!(read_sdpa("1\n1\nnot-a-size\n0\n").is_err());
        // Declared block size beyond the cap must fail before allocation.
        assert!(matches!(
            read_sdpa("1\n1\n1999999999\n0\n"),
            Err(SdpaError::Parse { .. })
        ));
        assert!(matches!(
            read_sdpa("0\n3\n2000 2000 2000\n"),
            Err(SdpaError::TooLarge(_))
        ));
        // Off-diagonal entry in a diagonal block.
        assert!(read_sdpa("1\n1\n-3\n1\n1 1 1 2 5\n").is_err());
        // Entry outside the declared block.
        assert!(read_sdpa("1\n1\n2\n1\n1 1 1 3 5\n").is_err());
        // Matrix number beyond m.
        assert!(read_sdpa("1\n1\n2\n1\n2 1 1 1 5\n").is_err());
    }

    #[test]
    fn sdpa_writer_merges_duplicate_entries() {
        let mut p = ConicProgram::new(Sense::Max);
        let b = p.add_psd_block("b", 1);
        let e = p.psd_entry(b, 0, 0);
        p.add_constraint(vec![(e, 1.0), (e, 2.0)], 3.0);
        p.objective_push(e, 1.0);
        let text = p.write_sdpa().unwrap();
        assert!(text.contains("1 1 1 1 3"), "{text}");
    }
}
