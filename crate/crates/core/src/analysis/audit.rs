//! What a passive eavesdropper learns: key discipline, mask presence and a
//! chi-square uniformity test over re-keyed replays of one delivery.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::ChannelState;
use crate::delivery::{FragmentLayout, KeyId, KeyStore, TransmitLog};
use crate::error::Result;
use crate::library::FileLibrary;
use crate::seeds::{self, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    /// Every key id used exactly once and every block carries a key.
    pub structural_ok: bool,
    pub reused_keys: Vec<KeyId>,
    pub unkeyed_blocks: Vec<usize>,
    /// Every block has a key that reaches the eavesdropper with nonzero gain.
    pub mask_present: bool,
    pub unmasked_blocks: Vec<usize>,
    /// Combined p-value over all observed positions; `None` if not run.
    pub uniformity_pvalue: Option<f64>,
    pub min_position_pvalue: Option<f64>,
    pub chi_square: f64,
    pub dof: f64,
    pub positions: usize,
    pub trials: usize,
}

impl AuditReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.structural_ok
            && self.mask_present
            && self.uniformity_pvalue.is_some_and(|p| p > threshold)
    }
}

pub struct AuditInput<'a> {
    pub log: &'a TransmitLog,
    pub channel: &'a ChannelState,
    pub library: &'a FileLibrary,
    pub layout: &'a FragmentLayout,
    pub keys: &'a KeyStore,
}

/// Runs the three checks. With `ablate` every replay uses all-zero keys.
pub fn security_audit(
    input: &AuditInput<'_>,
    trials: usize,
    seed: u64,
    ablate: bool,
) -> Result<AuditReport> {
    let log = input.log;
    let uses = log.key_uses();
    let reused_keys: Vec<KeyId> = uses
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(id, _)| *id)
        .collect();
    let unkeyed_blocks: Vec<usize> = (0..log.blocks.len())
        .filter(|&i| log.blocks[i].keys.is_empty())
        .collect();
    let structural_ok = reused_keys.is_empty() && unkeyed_blocks.is_empty();
    let unmasked_blocks: Vec<usize> = log
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            b.width > 0
                && b.keys
                    .iter()
                    .all(|k| input.channel.eve_gain(&k.vector).is_zero())
        })
        .map(|(i, _)| i)
        .collect();
    let mut report = AuditReport {
        structural_ok,
        reused_keys,
        unkeyed_blocks,
        mask_present: unmasked_blocks.is_empty(),
        unmasked_blocks,
        uniformity_pvalue: None,
        min_position_pvalue: None,
        chi_square: 0.0,
        dof: 0.0,
        positions: log.total_columns(),
        trials,
    };
    if !structural_ok || trials == 0 || report.positions == 0 {
        return Ok(report);
    }
    let order = input.channel.field().order();
    let mut counts = vec![vec![0u32; order]; report.positions];
    for trial in 0..trials {
        let store = if ablate {
            input.keys.zeroed()
        } else {
            input
                .keys
                .resampled(seeds::derive(seed, Stream::Audit, &[trial as u64]))
        };
        let replay = log.rekeyed(input.library, input.layout, &store)?;
        let mut pos = 0;
        for b in &replay.blocks {
            for y in input.channel.eavesdrop(&b.payload) {
                counts[pos][y.0 as usize] += 1;
                pos += 1;
            }
        }
    }
    let expected = trials as f64 / order as f64;
    let per_dof = (order - 1) as f64;
    let single = ChiSquared::new(per_dof).expect("positive dof");
    let mut total = 0.0;
    let mut min_p = 1.0f64;
    for c in &counts {
        let stat: f64 = c
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        total += stat;
        min_p = min_p.min(single.sf(stat));
    }
    let dof = per_dof * report.positions as f64;
    report.chi_square = total;
    report.dof = dof;
    report.uniformity_pvalue = Some(ChiSquared::new(dof).expect("positive dof").sf(total));
    report.min_position_pvalue = Some(min_p);
    Ok(report)
}

/// Makes the second block reuse the first block's key: a doctored log
/// for exercising the structural check.
pub fn inject_key_reuse(log: &mut TransmitLog) -> bool {
    if log.blocks.len() < 2 || log.blocks[0].keys.is_empty() || log.blocks[1].keys.is_empty() {
        return false;
    }
    log.blocks[1].keys[0].id = log.blocks[0].keys[0].id;
    true
}

/// Key usage histogram, for reports.
pub fn key_use_counts(log: &TransmitLog) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for n in log.key_uses().values() {
        *hist.entry(*n).or_insert(0) += 1;
    }
    hist
}
