//! Decentralized placement with centrally placed keys.
//!
//! Users cache symbols at random; the realised caching sets index the
//! sub-files. Delivery runs level by level from s = K down to 1, serving
//! groups of d = min(s+L-1, K) users with combinations of fragments from
//! sub-files cached by s-1 users.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use super::{chunk_sizes, coefficient_schedule, ones, Scheme, SchemeKind, SystemParams};
use crate::analysis::formulas::{self, FormulaPoint};
use crate::channel::ChannelState;
use crate::combinatorics::{binom, enumerate_subsets, pow, subsets_of, Profile, Subset};
use crate::delivery::{
    BlockLabel, FragmentAddr, FragmentLayout, KeyId, KeyStore, KeyTerm, Placement, Term,
    TransmitLog, Transmitter,
};
use crate::error::{Error, Result};
use crate::library::{DemandVector, FileLibrary};
use crate::seeds::{self, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlacementMode {
    /// Every sub-file has exactly its expected size.
    Ideal,
    /// Each user caches each symbol independently.
    Bernoulli,
}

impl fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementMode::Ideal => "ideal",
            PlacementMode::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for PlacementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<PlacementMode> {
        match s {
            "ideal" => Ok(PlacementMode::Ideal),
            "bernoulli" => Ok(PlacementMode::Bernoulli),
            other => Err(Error::InvalidParams(format!(
                "unknown placement mode {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecentralizedScheme {
    pub sys: SystemParams,
    pub cache_prob: BigRational,
    pub mode: PlacementMode,
}

impl DecentralizedScheme {
    pub fn new(
        sys: SystemParams,
        cache_prob: BigRational,
        mode: PlacementMode,
    ) -> Result<DecentralizedScheme> {
        let profile = Profile::Decentralized {
            cache_prob: cache_prob.clone(),
        };
        match mode {
            PlacementMode::Ideal => {
                sys.check_file_len(&profile)?;
            }
            PlacementMode::Bernoulli => {
                crate::combinatorics::min_valid_f(&profile, sys.users, sys.streams)?;
                if cache_prob.denom().to_u64().is_none() {
                    return Err(Error::InvalidParams(
                        "cache probability denominator too large".into(),
                    ));
                }
            }
        }
        Ok(DecentralizedScheme {
            sys,
            cache_prob,
            mode,
        })
    }

    /// Group size served at level `s`.
    pub fn group_size(&self, s: usize) -> usize {
        (s + self.sys.streams - 1).min(self.sys.users)
    }

    /// Pieces per sub-file cached by `s - 1` users.
    pub fn pieces(&self, s: usize) -> usize {
        if s > self.sys.users {
            1
        } else {
            binom(self.sys.users - s, self.group_size(s) - s) as usize
        }
    }

    pub fn repetitions(&self, s: usize) -> usize {
        binom(self.group_size(s) - 1, s - 1) as usize
    }

    fn masks(&self, file: usize) -> BTreeMap<Subset, Vec<u32>> {
        let SystemParams {
            users, file_len, ..
        } = self.sys;
        let mut by_mask: BTreeMap<Subset, Vec<u32>> = BTreeMap::new();
        match self.mode {
            PlacementMode::Ideal => {
                let one = BigRational::one();
                let mut start = 0u32;
                for size in 0..=users {
                    let frac =
                        pow(&self.cache_prob, size) * pow(&(&one - &self.cache_prob), users - size);
                    let len = (frac * BigRational::from_integer(BigInt::from(file_len)))
                        .to_integer()
                        .to_u32()
                        .expect("sub-file length fits");
                    for tau in enumerate_subsets(users, size) {
                        by_mask.insert(tau, (start..start + len).collect());
                        start += len;
                    }
                }
            }
            PlacementMode::Bernoulli => {
                let num = self.cache_prob.numer().to_u64().expect("validated");
                let den = self.cache_prob.denom().to_u64().expect("validated");
                let mut rng = seeds::rng(self.sys.seed, Stream::Placement, &[file as u64]);
                for size in 0..=users {
                    for tau in enumerate_subsets(users, size) {
                        by_mask.insert(tau, Vec::new());
                    }
                }
                for p in 0..file_len as u32 {
                    let mask = (0..users)
                        .filter(|_| rng.gen_range(0..den) < num)
                        .fold(Subset::EMPTY, |m, u| m.with(u));
                    by_mask.get_mut(&mask).expect("all masks present").push(p);
                }
            }
        }
        by_mask
    }

    /// Placement masks realised as a fragment layout. Public metadata.
    pub fn layout(&self) -> FragmentLayout {
        let mut layout = FragmentLayout::new(self.sys.files, self.sys.file_len);
        for file in 0..self.sys.files {
            for (tau, positions) in self.masks(file) {
                let parts = self.pieces(tau.len() + 1);
                let mut rest = positions.as_slice();
                for (piece, n) in chunk_sizes(positions.len(), parts).into_iter().enumerate() {
                    let (head, tail) = rest.split_at(n);
                    layout.insert(
                        FragmentAddr {
                            file,
                            subset: tau,
                            piece,
                        },
                        head.to_vec(),
                    );
                    rest = tail;
                }
            }
        }
        layout
    }

    /// Largest piece any file has at level `s`; keys of that level use this size.
    fn level_width(&self, layout: &FragmentLayout, s: usize) -> usize {
        layout
            .iter()
            .filter(|(a, _)| a.subset.len() == s - 1)
            .map(|(_, p)| p.len())
            .max()
            .unwrap_or(0)
    }

    pub fn key_store(&self, layout: &FragmentLayout) -> KeyStore {
        let mut keys = KeyStore::new(
            &self.sys.field,
            seeds::derive(self.sys.seed, Stream::Keys, &[]),
        );
        for s in 1..=self.sys.users {
            let width = self.level_width(layout, s);
            for subset in enumerate_subsets(self.sys.users, self.group_size(s)) {
                for beta in 1..=self.repetitions(s) {
                    keys.add(
                        KeyId {
                            level: s,
                            subset,
                            beta,
                        },
                        width,
                    );
                }
            }
        }
        keys
    }
}

impl Scheme for DecentralizedScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Decentralized
    }

    fn system(&self) -> &SystemParams {
        &self.sys
    }

    fn place(&self, library: &FileLibrary) -> Result<Placement> {
        let layout = self.layout();
        let keys = self.key_store(&layout);
        Placement::by_membership(self.sys.users, layout, keys, library)
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
        let layout = &placement.layout;
        let mut log = TransmitLog {
            blocks: Vec::new(),
            file_len,
            streams,
        };
        let tx = Transmitter {
            library,
            layout,
            keys: &placement.keys,
            channel,
        };
        let mut group = 0;
        for s in (1..=users).rev() {
            let d = self.group_size(s);
            let reps = self.repetitions(s);
            let mut next_piece: HashMap<(usize, Subset), usize> = HashMap::new();
            for big in enumerate_subsets(users, d) {
                let targets = subsets_of(big, s);
                let precoders = targets
                    .iter()
                    .map(|&u| channel.zero_force(big, u))
                    .collect::<Result<Vec<_>>>()?;
                let mut frags = Vec::with_capacity(targets.len());
                for u in &targets {
                    let mut row = Vec::with_capacity(u.len());
                    for r in u.iter() {
                        let tau = u.without(r);
                        let counter = next_piece.entry((r, tau)).or_insert(0);
                        if *counter >= self.pieces(s) {
                            return Err(Error::CounterExhausted(format!(
                                "pieces of W(user {}){tau}",
                                r + 1
                            )));
                        }
                        row.push((
                            r,
                            FragmentAddr {
                                file: demand.of(r),
                                subset: tau,
                                piece: *counter,
                            },
                        ));
                        *counter += 1;
                    }
                    frags.push(row);
                }
                // zero-pad every fragment to the largest one in the block
                let width = frags
                    .iter()
                    .flatten()
                    .map(|(_, a)| layout.len(a))
                    .max()
                    .unwrap_or(0);
                let (attempt, coef) =
                    coefficient_schedule(&self.sys.field, self.sys.seed, s, big, &targets, reps)?;
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
                            level: s,
                            subset: big,
                            beta: rep + 1,
                        },
                        vector: ones(streams),
                    };
                    log.blocks.push(tx.emit(
                        BlockLabel::Decentralized {
                            level: s,
                            subset: big,
                            rep: rep + 1,
                        },
                        group,
                        attempt,
                        big,
                        width,
                        terms,
                        vec![key],
                    )?);
                }
                group += 1;
            }
        }
        Ok(log)
    }

    fn formula(&self) -> Result<FormulaPoint> {
        formulas::decentralized_at_q(
            self.sys.users,
            self.sys.streams,
            self.sys.files,
            &self.cache_prob,
        )
    }
}
