//! Secure-versus-insecure and centralized-versus-decentralized delay gaps
//! over memory grids.

use num_traits::Zero;

use super::formulas::{formula_point, CacheInput, Q};
use crate::error::Error;
use crate::schemes::SchemeKind;

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub memory: Q,
    /// `Err` holds the reason a point fell outside the scheme's region.
    pub values: Result<GapValues, Error>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapValues {
    pub reference: Q,
    pub compared: Q,
    pub gap: Q,
}

/// Secure delay against its insecure counterpart at each memory size.
pub fn gap_curves(kind: SchemeKind, k: usize, l: usize, n: usize, memories: &[Q]) -> Vec<GapRow> {
    memories
        .iter()
        .map(|m| GapRow {
            memory: m.clone(),
            values: formula_point(kind, k, l, n, &CacheInput::M(m.clone())).map(|p| GapValues {
                gap: &p.delay - &p.delay_insecure,
                reference: p.delay,
                compared: p.delay_insecure,
            }),
        })
        .collect()
}

/// Decentralized secure delay minus the centralized one at each memory size.
pub fn centralized_vs_decentralized(k: usize, l: usize, n: usize, memories: &[Q]) -> Vec<GapRow> {
    memories
        .iter()
        .map(|m| {
            let c = formula_point(SchemeKind::Mt, k, l, n, &CacheInput::M(m.clone()));
            let d = formula_point(
                SchemeKind::Decentralized,
                k,
                l,
                n,
                &CacheInput::M(m.clone()),
            );
            GapRow {
                memory: m.clone(),
                values: c.and_then(|c| {
                    d.map(|d| GapValues {
                        gap: &d.delay - &c.delay,
                        reference: c.delay,
                        compared: d.delay,
                    })
                }),
            }
        })
        .collect()
}

/// Largest gap among in-region points.
pub fn max_gap(rows: &[GapRow]) -> Option<Q> {
    rows.iter()
        .filter_map(|r| r.values.as_ref().ok())
        .map(|v| v.gap.clone())
        .fold(None, |acc: Option<Q>, g| {
            Some(acc.map_or(g.clone(), |a| a.max(g)))
        })
}

/// Memory grid N·j/steps for j = 1..=steps.
pub fn fraction_grid(n: usize, steps: usize) -> Vec<Q> {
    (1..=steps)
        .map(|j| Q::new((n * j).into(), steps.into()))
        .collect()
}

/// Whether every in-region point has a non-negative gap.
pub fn dominates(rows: &[GapRow]) -> bool {
    rows.iter()
        .filter_map(|r| r.values.as_ref().ok())
        .all(|v| v.gap >= Q::zero())
}
