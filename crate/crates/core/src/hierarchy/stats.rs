//! Closed-form formulation sizes, first principles next to the published
//! formulas.

use serde::Serialize;

use super::builders::Hierarchy;
use crate::graphs::{binomial, binomial_prefix_sum};

/// `h(n,t) = Σ_{s<t} (2n)^s`, the number of matrices of the explicit
/// `N_+^t` formulation.
pub fn h(n: usize, t: usize) -> u128 {
    (0..t).map(|s| (2 * n as u128).pow(s as u32)).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PublishedCounts {
    pub variables: u128,
    pub matrices: u128,
    pub k_conditions: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormulationStats {
    pub hierarchy: Hierarchy,
    pub n: usize,
    pub t: usize,
    /// Unknowns of the formulation; for moment-based hierarchies this
    /// includes `y_∅`.
    pub variables: u128,
    /// PSD matrices of order `matrix_order`.
    pub matrices: u128,
    pub matrix_order: u128,
    /// Vectors required to lie in `K` (each expands to one scalar per row).
    pub k_conditions: u128,
    /// Closed forms of the complexity table, where one exists.
    pub published: Option<PublishedCounts>,
    /// Fields where the published value disagrees with the count above.
    pub flags: Vec<String>,
}

/// Counts for `hierarchy` at `(n, t)`. Graph-based hierarchies are counted
/// for the edgeless graph, where no moment is eliminated.
pub fn formulation_stats(hierarchy: Hierarchy, n: usize, t: usize) -> FormulationStats {
    let t = t.max(1);
    let nn = n as u128;
    let (variables, matrices, order, k_conditions, published) = match hierarchy {
        Hierarchy::Theta => (binomial_prefix_sum(n, 2), 1, nn + 1, 0, None),
        Hierarchy::Lt => {
            let m = if t == 1 { 1 } else { binomial(n, t - 1) << (t - 1) };
            (binomial_prefix_sum(n, t + 1), m, nn + 1, 0, None)
        }
        Hierarchy::TildeLt => {
            let m = binomial(n, t - 1) << (t - 1);
            let published = PublishedCounts {
                variables: binomial_prefix_sum(n, t + 1),
                matrices: binomial(n, t - 1) << (t - 1),
                k_conditions: binomial(n, t - 1) << t,
            };
            (binomial_prefix_sum(n, t + 1), m, nn + 1, 2 * nn * m, Some(published))
        }
        Hierarchy::Lasserre => (binomial_prefix_sum(n, 2 * t), 1, binomial_prefix_sum(n, t), 0, None),
        Hierarchy::NplusExplicit => {
            let hh = h(n, t);
            let table: u128 = (0..=t).map(|i| (2 * nn).pow(i as u32)).sum();
            let published =
                PublishedCounts { variables: binomial(n, 2) * table, matrices: table, k_conditions: (2 * nn).pow(t as u32) };
            (nn + binomial(n, 2) * hh, hh, nn + 1, (2 * nn).pow(t as u32), Some(published))
        }
        Hierarchy::NplusTh => (nn + binomial(n, 2) * (2 * nn + 1), 2 * nn + 1, nn + 1, 0, None),
    };
    let mut flags = Vec::new();
    if let Some(p) = &published {
        if p.variables != variables {
            flags.push(format!("variables: published {} vs counted {}", p.variables, variables));
        }
        if p.matrices != matrices {
            flags.push(format!("matrices: published {} vs counted {}", p.matrices, matrices));
        }
        if p.k_conditions != k_conditions {
            flags.push(format!("k_conditions: published {} vs counted {}", p.k_conditions, k_conditions));
        }
    }
    FormulationStats { hierarchy, n, t, variables, matrices, matrix_order: order, k_conditions, published, flags }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_values() {
        assert_eq!(h(61, 2), 123);
        assert_eq!(h(61, 1), 1);
        assert_eq!(h(3, 3), 1 + 6 + 36);
    }

    #[test]
    fn tilde_l_two_at_61() {
        let s = formulation_stats(Hierarchy::TildeLt, 61, 2);
        assert_eq!(s.variables, 1 + 61 + 1830 + 35990);
        assert_eq!(s.variables, 37882);
        assert_eq!(s.matrices, 122);
        assert_eq!(s.k_conditions, 4 * 61 * 61);
        assert_eq!(s.published.as_ref().unwrap().k_conditions, 4 * 61);
        assert_eq!(s.flags.len(), 1);
        assert!(s.flags[0].starts_with("k_conditions"));
    }

    #[test]
    fn nplus_two_at_61() {
        let s = formulation_stats(Hierarchy::NplusExplicit, 61, 2);
        assert_eq!(s.matrices, 123);
        assert_eq!(s.k_conditions, 122 * 122);
        let p = s.published.as_ref().unwrap();
        assert_eq!(p.matrices, 1 + 122 + 122 * 122);
        assert_eq!(p.k_conditions, s.k_conditions);
        assert!(s.flags.iter().any(|f| f.starts_with("matrices")));
        assert!(s.flags.iter().any(|f| f.starts_with("variables")));
    }
}
