//! Keyed scheme with reduced channel feedback.
//!
//! For every L-subset of users the transmitters invert that subset's channel,
//! so each of its members hears exactly one row. The other t served users
//! hear a known mixture of all rows, and everything but their own fragment
//! in it is cached.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Scheme, SchemeKind, SystemParams};
use crate::analysis::formulas::{self, FormulaPoint};
use crate::channel::ChannelState;
use crate::combinatorics::{binom, enumerate_subsets, rank_within, subsets_of, Profile, Subset};
use crate::delivery::{
    BlockLabel, FragmentAddr, FragmentLayout, KeyId, KeyStore, KeyTerm, Placement, Term,
    TransmitLog, Transmitter,
};
use crate::error::{Error, Result};
use crate::gf::Gf;
use crate::library::{DemandVector, FileLibrary};
use crate::seeds::{self, Stream};

#[derive(Clone, Debug)]
pub struct FeedbackScheme {
    pub sys: SystemParams,
    pub t: usize,
}

impl FeedbackScheme {
    pub fn new(sys: SystemParams, t: usize) -> Result<FeedbackScheme> {
        sys.check_file_len(&Profile::Feedback { t })?;
        Ok(FeedbackScheme { sys, t })
    }

    fn trivial(&self) -> bool {
        self.t == self.sys.users
    }

    /// Uses of each fragment family: L as a channel-inverted user, t as a mixed one.
    pub fn rounds(&self) -> usize {
        self.sys.streams + self.t
    }

    pub fn pieces_per_subfile(&self) -> usize {
        if self.trivial() {
            1
        } else {
            binom(self.sys.users - self.t - 1, self.sys.streams - 1) as usize * self.rounds()
        }
    }

    pub fn piece_len(&self) -> usize {
        self.sys.file_len / (binom(self.sys.users, self.t) as usize * self.pieces_per_subfile())
    }

    pub fn betas_per_key_set(&self) -> usize {
        let SystemParams { users, streams, .. } = self.sys;
        (self.t + 1) * binom(users - self.t - 1, streams - 1) as usize * streams
    }

    pub fn layout(&self) -> FragmentLayout {
        let mut layout = FragmentLayout::new(self.sys.files, self.sys.file_len);
        let w = self.piece_len();
        for file in 0..self.sys.files {
            let mut start = 0;
            for subset in enumerate_subsets(self.sys.users, self.t) {
                for piece in 0..self.pieces_per_subfile() {
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
            for subset in enumerate_subsets(self.sys.users, self.t + 1) {
                for beta in 1..=self.betas_per_key_set() {
                    keys.add(
                        KeyId {
                            level: 0,
                            subset,
                            beta,
                        },
                        self.piece_len(),
                    );
                }
            }
        }
        keys
    }

    /// Splits the members of `pi` into L consecutive chunks.
    fn chunks(&self, pi: Subset) -> Vec<Subset> {
        let members = pi.members();
        let size = self.t / self.sys.streams;
        (0..self.sys.streams)
            .map(|i| Subset::from_members(members[i * size..(i + 1) * size].iter().copied()))
            .collect()
    }
}

impl Scheme for FeedbackScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Feedback
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
            streams: l,
            file_len,
            ..
        } = self.sys;
        let mut log = TransmitLog {
            blocks: Vec::new(),
            file_len,
            streams: l,
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
        let everyone = Subset::full(users);
        let mut next_round: HashMap<(usize, Subset, Subset), usize> = HashMap::new();
        let mut next_beta: HashMap<Subset, usize> = HashMap::new();
        for lambda in enumerate_subsets(users, l) {
            let inv = channel.rows_of(lambda).inverse()?;
            let lam = lambda.members();
            for pi in subsets_of(everyone.minus(lambda), self.t) {
                let phi = self.chunks(pi);
                for shift in 0..l {
                    let mut terms = Vec::new();
                    let mut keys = Vec::new();
                    for (i, &head) in lam.iter().enumerate() {
                        let column = inv.col_vec(i);
                        let part = phi[(shift + i) % l];
                        let sigma = lambda.without(head);
                        let span = pi.with(head);
                        for k in part.with(head).iter() {
                            let tau = span.without(k);
                            let r = next_round.entry((k, sigma, tau)).or_insert(0);
                            if *r >= self.rounds() {
                                return Err(Error::CounterExhausted(format!(
                                    "user {} fragment {sigma}/{tau}",
                                    k + 1
                                )));
                            }
                            let sigma_rank =
                                rank_within(sigma, everyone.minus(tau).without(k)) as usize;
                            terms.push(Term {
                                frag: FragmentAddr {
                                    file: demand.of(k),
                                    subset: tau,
                                    piece: sigma_rank * self.rounds() + *r,
                                },
                                coef: Gf::ONE,
                                vector: column.clone(),
                                for_user: k,
                            });
                            *r += 1;
                        }
                        let beta = next_beta.entry(span).or_insert(0);
                        *beta += 1;
                        if *beta > self.betas_per_key_set() {
                            return Err(Error::CounterExhausted(format!("keys of {span}")));
                        }
                        keys.push(KeyTerm {
                            id: KeyId {
                                level: 0,
                                subset: span,
                                beta: *beta,
                            },
                            vector: column,
                        });
                    }
                    let index = log.blocks.len();
                    log.blocks.push(tx.emit(
                        BlockLabel::Feedback { lambda, pi, shift },
                        index,
                        0,
                        lambda.union(pi),
                        self.piece_len(),
                        terms,
                        keys,
                    )?);
                }
            }
        }
        Ok(log)
    }

    fn formula(&self) -> Result<FormulaPoint> {
        formulas::feedback_at_t(
            self.sys.users,
            self.sys.streams,
            self.sys.files,
            &BigRational::from_integer(BigInt::from(self.t)),
        )
    }
}
