//! Affine forms over relaxation variables, used to build constraint
//! matrices symbolically before they are compiled into a [`BlockSdp`].
//!
//! [`BlockSdp`]: crate::sdpsolve::BlockSdp

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graphs::VertexSet;

/// A decision variable of a relaxation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    /// Moment variable `y_I`.
    Moment(VertexSet),
    /// Free entry `(row, col)` (row > col) of an auxiliary matrix.
    Entry { matrix: u32, row: u32, col: u32 },
}

impl Var {
    pub fn is_singleton(self) -> bool {
        matches!(self, Var::Moment(s) if s.len() == 1)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Moment(s) => write!(f, "y{s}"),
            Var::Entry { matrix, row, col } => write!(f, "Y[{matrix}]({row},{col})"),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `constant + Σ coef·var`, terms sorted by variable with no zero
/// coefficients.
#[derive(Clone, PartialEq, Default)]
pub struct LinExpr {
    constant: f64,
    terms: Vec<(Var, f64)>,
}

impl fmt::Debug for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (v, c) in &self.terms {
            write!(f, " {:+}·{v:?}", c)?;
        }
        Ok(())
    }
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { constant: c, terms: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { constant: 0.0, terms: vec![(v, 1.0)] }
    }

    pub fn moment(s: VertexSet) -> Self {
        if s.is_empty() {
            Self::constant(1.0)
        } else {
            Self::var(Var::Moment(s))
        }
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[(Var, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, v: Var) -> f64 {
        self.terms.binary_search_by(|(w, _)| w.cmp(&v)).map_or(0.0, |k| self.terms[k].1)
    }

    /// `self += factor · other`, merging sorted term lists.
    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) {
        if factor == 0.0 || other.is_zero() {
            return;
        }
        self.constant += factor * other.constant;
        if other.terms.is_empty() {
            return;
        }
        if self.terms.is_empty() {
            self.terms = other.terms.iter().map(|&(v, c)| (v, factor * c)).collect();
            self.terms.retain(|t| t.1 != 0.0);
            return;
        }
        let mut merged = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut a, mut b) = (0, 0);
        while a < self.terms.len() || b < other.terms.len() {
            let next = match (self.terms.get(a), other.terms.get(b)) {
                (Some(&(va, ca)), Some(&(vb, cb))) => match va.cmp(&vb) {
                    std::cmp::Ordering::Less => {
                        a += 1;
                        (va, ca)
                    }
                    std::cmp::Ordering::Greater => {
                        b += 1;
                        (vb, factor * cb)
                    }
                    std::cmp::Ordering::Equal => {
                        a += 1;
                        b += 1;
                        (va, ca + factor * cb)
                    }
                },
                (Some(&t), None) => {
                    a += 1;
                    t
                }
                (None, Some(&(vb, cb))) => {
                    b += 1;
                    (vb, factor * cb)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != 0.0 {
                merged.push(next);
            }
        }
        self.terms = merged;
    }

    pub fn scaled(&self, factor: f64) -> LinExpr {
        let mut out = LinExpr::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn negated(&self) -> LinExpr {
        self.scaled(-1.0)
    }

    /// Replaces every variable that has an entry in `subs` by its
    /// expression.
    pub fn substitute(&self, subs: &HashMap<Var, LinExpr>) -> LinExpr {
        if subs.is_empty() || !self.terms.iter().any(|(v, _)| subs.contains_key(v)) {
            return self.clone();
        }
        let mut kept = LinExpr::constant(self.constant);
        let mut out = LinExpr::zero();
        for &(v, c) in &self.terms {
            match subs.get(&v) {
                Some(e) => out.add_scaled(e, c),
                None => kept.terms.push((v, c)),
            }
        }
        out.add_scaled(&kept, 1.0);
        out
    }

    /// Evaluates with `y_∅`-style constant folded and variable values from
    /// `value`.
    pub fn eval(&self, mut value: impl FnMut(Var) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * value(v)).sum::<f64>()
    }

    /// Scale so that the leading coefficient has absolute value 1. The
    /// normal form of `-e` is the negation of the normal form of `e`.
    pub fn normalized(&self) -> LinExpr {
        match self.terms.first() {
            Some(&(_, c)) => self.scaled(1.0 / c.abs()),
            None if self.constant != 0.0 => LinExpr::constant(self.constant.signum()),
            None => LinExpr::zero(),
        }
    }

    /// Exact bitwise key, for hashing expressions.
    pub fn key(&self) -> (u64, Vec<(Var, u64)>) {
        let canon = |x: f64| if x == 0.0 { 0u64 } else { x.to_bits() };
        (canon(self.constant), self.terms.iter().map(|&(v, c)| (v, canon(c))).collect())
    }
}
