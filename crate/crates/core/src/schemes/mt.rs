//! Keyed multi-transmitter scheme with one common mask per block.
//!
//! Each file splits into C(K,t) sub-files and each sub-file into
//! C(K-t-1, L-1) mini-files. Every (t+L)-subset of users is served by
//! C(t+L-1, t) blocks, each carrying one zero-forced random combination per
//! (t+1)-subset and a fresh key spread over all streams.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{coefficient_schedule, ones, Scheme, SchemeKind, SystemParams};
use crate::analysis::formulas::{self, FormulaPoint};
use crate::channel::ChannelState;
use crate::combinatorics::{binom, enumerate_subsets, subsets_of, Profile, Subset};
use crate::delivery::{
    BlockLabel, FragmentAddr, FragmentLayout, KeyId, KeyStore, KeyTerm, Placement, Term,
    TransmitLog, Transmitter,
};
use crate::error::{Error, Result};
use crate::library::{DemandVector, FileLibrary};
use crate::seeds::{self, Stream};

#[derive(Clone, Debug)]
pub struct MtScheme {
    pub sys: SystemParams,
    pub t: usize,
}

impl MtScheme {
    pub fn new(sys: SystemParams, t: usize) -> Result<MtScheme> {
        sys.check_file_len(&Profile::Mt { t })?;
        Ok(MtScheme { sys, t })
    }

    fn trivial(&self) -> bool {
        self.t == self.sys.users
    }

    pub fn minis_per_subfile(&self) -> usize {
        if self.trivial() {
            1
        } else {
            binom(self.sys.users - self.t - 1, self.sys.streams - 1) as usize
        }
    }

    /// Symbols per mini-file, which is also the block and key width.
    pub fn mini_len(&self) -> usize {
        self.sys.file_len / (binom(self.sys.users, self.t) as usize * self.minis_per_subfile())
    }

    pub fn repetitions(&self) -> usize {
        binom(self.t + self.sys.streams - 1, self.t) as usize
    }

    pub fn layout(&self) -> FragmentLayout {
        let SystemParams {
            users,
            files,
            file_len,
            ..
        } = self.sys;
        let mut layout = FragmentLayout::new(files, file_len);
        let w = self.mini_len();
        for file in 0..files {
            let mut start = 0;
            for subset in enumerate_subsets(users, self.t) {
                for piece in 0..self.minis_per_subfile() {
                    layout.insert_range(
                        FragmentAddr {
                            file,
                            subset,
                            piece,
                        },
                        start,
                        w,
                    );
                    start += w;
                }
            }
        }
        layout
    }

    pub fn key_store(&self) -> KeyStore {
        let mut keys = KeyStore::new(
            &self.sys.field,
            seeds::derive(self.sys.seed, Stream::Keys, &[]),
        );
        if !self.trivial() {
            for subset in enumerate_subsets(self.sys.users, self.t + self.sys.streams) {
                for beta in 1..=self.repetitions() {
                    keys.add(
                        KeyId {
                            level: 0,
                            subset,
                            beta,
                        },
                        self.mini_len(),
                    );
                }
            }
        }
        keys
    }
}

impl Scheme for MtScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Mt
    }

    fn system(&self) -> &SystemParams {
        &self.sys
    }

    fn place(&self, library: &FileLibrary) -> Result<Placement> {
        Placement::by_membership(self.sys.users, self.layout(), self.key_store(), library)
    }

    fn deliver(
        &self,
        placement: &Placement,
        library: &FileLibrary,
        demand: &DemandVector,
        channel: &ChannelState,
    ) -> Result<TransmitLog> {
        let SystemParams {
            users,
            streams,
            file_len,
            ..
        } = self.sys;
        let mut log = TransmitLog {
            blocks: Vec::new(),
            file_len,
            streams,
        };
        if self.trivial() {
            return Ok(log);
        }
        let tx = Transmitter {
            library,
            layout: &placement.layout,
            keys: &placement.keys,
            channel,
        };
        let reps = self.repetitions();
        let width = self.mini_len();
        // next unused mini-file of sub-file (user, subset)
        let mut next_mini: HashMap<(usize, Subset), usize> = HashMap::new();
        for (group, s) in enumerate_subsets(users, self.t + streams)
            .into_iter()
            .enumerate()
        {
            let targets = subsets_of(s, self.t + 1);
            let precoders = targets
                .iter()
                .map(|&t| channel.zero_force(s, t))
                .collect::<Result<Vec<_>>>()?;
            let mut frags = Vec::with_capacity(targets.len());
            for t in &targets {
                let mut row = Vec::with_capacity(t.len());
                for r in t.iter() {
                    let sub = t.without(r);
                    let counter = next_mini.entry((r, sub)).or_insert(0);
                    if *counter >= self.minis_per_subfile() {
                        return Err(Error::CounterExhausted(format!(
                            "mini-files of W(user {}){sub}",
                            r + 1
                        )));
                    }
                    row.push((
                        r,
                        FragmentAddr {
                            file: demand.of(r),
                            subset: sub,
                            piece: *counter,
                        },
                    ));
                    *counter += 1;
                }
                frags.push(row);
            }
            let (attempt, coef) =
                coefficient_schedule(&self.sys.field, self.sys.seed, 0, s, &targets, reps)?;
            #[allow(clippy::needless_range_loop)]
            for rep in 0..reps {
                let mut terms = Vec::new();
                for (j, row) in frags.iter().enumerate() {
                    for (i, &(r, frag)) in row.iter().enumerate() {
                        terms.push(Term {
                            frag,
                            coef: coef[rep][j][i],
                            vector: precoders[j].u.clone(),
                            for_user: r,
                        });
                    }
                }
                let key = KeyTerm {
                    id: KeyId {
                        level: 0,
                        subset: s,
                        beta: rep + 1,
                    },
                    vector: ones(streams),
                };
                log.blocks.push(tx.emit(
                    BlockLabel::Mt {
                        subset: s,
                        rep: rep + 1,
                    },
                    group,
                    attempt,
                    s,
                    width,
                    terms,
                    vec![key],
                )?);
            }
        }
        Ok(log)
    }

    fn formula(&self) -> Result<FormulaPoint> {
        formulas::mt_at_t(
            self.sys.users,
            self.sys.streams,
            self.sys.files,
            &BigRational::from_integer(BigInt::from(self.t)),
        )
    }
}
