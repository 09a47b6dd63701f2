//! SDPA sparse format (`.dat-s`).
//!
//! SDPA minimizes `Σ c_j x_j` subject to `Σ x_j F_j − F_0 ⪰ 0`, so the
//! written objective is `−c` while the matrices are written unchanged.
//! Diagonal blocks are written with a negative size. Only the upper
//! triangle is written; entries are ordered by matrix, block, row, column.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::model::{Block, BlockKind, BlockSdp};
use crate::error::{Error, Result};

fn num(v: f64) -> String {
    if v == 0.0 {
        "0.0".to_string()
    } else {
        format!("{v:?}")
    }
}

/// Renders `p` as SDPA sparse text.
pub fn export_sdpa(p: &BlockSdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", p.num_vars);
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Dense => b.order.to_string(),
            BlockKind::Diagonal => format!("-{}", b.order),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let obj: Vec<String> = p.objective.iter().map(|&c| num(-c)).collect();
    let _ = writeln!(out, "{}", obj.join(" "));

    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (b, blk) in p.blocks.iter().enumerate() {
        for &(r, c, v) in blk.constant.entries() {
            lines.push((0, b + 1, c + 1, r + 1, v));
        }
        for (j, f) in &blk.coeffs {
            for &(r, c, v) in f.entries() {
                lines.push((j + 1, b + 1, c + 1, r + 1, v));
            }
        }
    }
    lines.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (j, b, r, c, v) in lines {
        let _ = writeln!(out, "{j} {b} {r} {c} {}", num(v));
    }
    out
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|ch: char| ch.is_whitespace() || ",(){}".contains(ch))
        .filter(|t| !t.is_empty())
        .collect()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn valid_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Validation { line, msg: msg.into() }
}

/// Parses SDPA sparse text. Comment lines start with `*` or `"`; header
/// values may be separated by whitespace, commas or braces, and text after
/// a header number on the first two lines (e.g. `=mDIM`) is ignored.
pub fn import_sdpa(text: &str) -> Result<BlockSdp> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));

    let mut header_int = |what: &str| -> Result<(usize, i64)> {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing {what}")))?;
        let tok = tokens(l);
        let first = tok.first().ok_or_else(|| parse_err(ln, format!("missing {what}")))?;
        let v = first.parse::<i64>().map_err(|_| parse_err(ln, format!("bad {what} '{first}'")))?;
        Ok((ln, v))
    };
    let (ln_m, m) = header_int("number of variables")?;
    if m < 0 {
        return Err(valid_err(ln_m, "negative number of variables"));
    }
    let (ln_nb, nb) = header_int("number of blocks")?;
    if nb < 0 {
        return Err(valid_err(ln_nb, "negative number of blocks"));
    }
    let (m, nb) = (m as usize, nb as usize);

    let mut sizes: Vec<i64> = Vec::with_capacity(nb);
    let mut last_line = ln_nb;
    while sizes.len() < nb {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last_line, "missing block sizes"))?;
        last_line = ln;
        for t in tokens(l) {
            if sizes.len() == nb {
                return Err(parse_err(ln, "too many block sizes"));
            }
            let v = t.parse::<i64>().map_err(|_| parse_err(ln, format!("bad block size '{t}'")))?;
            if v == 0 {
                return Err(valid_err(ln, "block size 0"));
            }
            sizes.push(v);
        }
    }
    let mut objective: Vec<f64> = Vec::with_capacity(m);
    while objective.len() < m {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last_line, "missing objective"))?;
        last_line = ln;
        for t in tokens(l) {
            if objective.len() == m {
                return Err(parse_err(ln, "too many objective entries"));
            }
            let v = t.parse::<f64>().map_err(|_| parse_err(ln, format!("bad number '{t}'")))?;
            objective.push(-v);
        }
    }

    // (matrix, block, lower row, lower col) -> (value, stored-as-upper, line)
    let mut seen: HashMap<(usize, usize, usize, usize), (f64, bool, usize)> = HashMap::new();
    for (ln, l) in lines {
        let tok = tokens(l);
        if tok.len() != 5 {
            return Err(parse_err(ln, format!("expected 5 fields, found {}", tok.len())));
        }
        let int = |t: &str| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad index '{t}'")));
        let (j, b, r, c) = (int(tok[0])?, int(tok[1])?, int(tok[2])?, int(tok[3])?);
        let v = tok[4].parse::<f64>().map_err(|_| parse_err(ln, format!("bad number '{}'", tok[4])))?;
        if !v.is_finite() {
            return Err(valid_err(ln, "non-finite value"));
        }
        if j > m {
            return Err(valid_err(ln, format!("matrix index {j} exceeds {m}")));
        }
        if b == 0 || b > nb {
            return Err(valid_err(ln, format!("block index {b} outside 1..={nb}")));
        }
        let size = sizes[b - 1].unsigned_abs() as usize;
        if r == 0 || c == 0 || r > size || c > size {
            return Err(valid_err(ln, format!("entry ({r},{c}) outside block {b} of size {size}")));
        }
        if sizes[b - 1] < 0 && r != c {
            return Err(valid_err(ln, format!("off-diagonal entry ({r},{c}) in diagonal block {b}")));
        }
        let key = (j, b - 1, r.max(c) - 1, r.min(c) - 1);
        let upper = r < c;
        if let Some(&(w, up, first)) = seen.get(&key) {
            if up == upper || r == c {
                return Err(valid_err(ln, format!("entry ({r},{c}) of matrix {j} block {b} repeats line {first}")));
            }
            if w != v {
                return Err(valid_err(ln, format!("non-symmetric entry ({r},{c}) of matrix {j} block {b}")));
            }
            continue;
        }
        seen.insert(key, (v, upper, ln));
    }

    let mut per_block: Vec<(Vec<(usize, usize, f64)>, std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>>)> =
        (0..nb).map(|_| Default::default()).collect();
    for ((j, b, r, c), (v, _, _)) in seen {
        if j == 0 {
            per_block[b].0.push((r, c, v));
        } else {
            per_block[b].1.entry(j - 1).or_default().push((r, c, v));
        }
    }
    let blocks = per_block
        .into_iter()
        .zip(&sizes)
        .map(|((c0, fs), &s)| {
            let kind = if s < 0 { BlockKind::Diagonal } else { BlockKind::Dense };
            Block::from_parts(kind, s.unsigned_abs() as usize, c0, fs.into_iter().collect())
        })
        .collect::<Result<Vec<_>>>()?;
    BlockSdp::new(objective, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpsolve::model::SparseSym;

    fn one_by_one() -> BlockSdp {
        // max y s.t. 1 − y ⪰ 0, i.e. F_1 = [−1], F_0 = [−1].
        let blk = Block::dense(&[vec![-1.0]], &[(0, vec![vec![-1.0]])]).unwrap();
        BlockSdp::new(vec![1.0], vec![blk]).unwrap()
    }

    #[test]
    fn export_one_by_one() {
        assert_eq!(export_sdpa(&one_by_one()), "1\n1\n1\n-1.0\n0 1 1 1 -1.0\n1 1 1 1 -1.0\n");
    }

    #[test]
    fn round_trip_with_diagonal_block() {
        let dense = Block::dense(
            &[vec![1.0, 0.5], vec![0.5, 0.0]],
            &[(1, vec![vec![0.0, 1.0], vec![1.0, 2.0]])],
        )
        .unwrap();
        let diag = Block::diagonal(&[(vec![(0, 1.0)], 0.0), (vec![(0, -1.0), (1, 1e-17)], -3.25)]);
        let p = BlockSdp::new(vec![1.0, -0.1], vec![dense, diag]).unwrap();
        let text = export_sdpa(&p);
        assert!(text.lines().nth(2).unwrap() == "2 -2");
        assert_eq!(import_sdpa(&text).unwrap(), p);
    }

    #[test]
    fn flexible_syntax() {
        let text = "* comment\n\"title\n1 =mDIM\n1 =nBLOCK\n{2}\n{-1.0}\n0,1,1,2,0.5\n1 1 2 1 1.0\n1 1 1 2 1.0\n";
        let p = import_sdpa(text).unwrap();
        assert_eq!(p.objective, vec![1.0]);
        assert_eq!(p.blocks[0].constant, SparseSym::from_triples([(1, 0, 0.5)]).unwrap());
        assert_eq!(p.blocks[0].coeffs[0].1.get(0, 1), 1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(import_sdpa(""), Err(Error::Parse { .. })));
        let bad_block = "1\n1\n2\n1.0\n1 2 1 1 1.0\n";
        assert!(matches!(import_sdpa(bad_block), Err(Error::Validation { line: 5, .. })));
        let bad_row = "1\n1\n2\n1.0\n1 1 3 1 1.0\n";
        assert!(matches!(import_sdpa(bad_row), Err(Error::Validation { line: 5, .. })));
        let asym = "1\n1\n2\n1.0\n1 1 1 2 1.0\n1 1 2 1 2.0\n";
        assert!(matches!(import_sdpa(asym), Err(Error::Validation { line: 6, .. })));
        let garbage = "1\n1\n2\n1.0\n1 1 x 1 1.0\n";
        assert!(matches!(import_sdpa(garbage), Err(Error::Parse { line: 5, .. })));
        let short = "1\n1\n2\n1.0\n1 1 1\n";
        assert!(matches!(import_sdpa(short), Err(Error::Parse { line: 5, .. })));
    }
}
