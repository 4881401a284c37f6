//! Keyed scheme over user groups with identical caches.
//!
//! Users split into K/L groups of L. Each group behaves like one user of a
//! single-stream keyed scheme, and within a group each member's fragment is
//! precoded to be silent at the other members.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{unit, Scheme, SchemeKind, SystemParams};
use crate::analysis::formulas::{self, FormulaPoint};
use crate::channel::ChannelState;
use crate::combinatorics::{binom, enumerate_subsets, Profile, Subset};
use crate::delivery::{
    BlockLabel, FragmentAddr, FragmentLayout, KeyId, KeyStore, KeyTerm, Placement, Term,
    TransmitLog, Transmitter,
};
use crate::error::Result;
use crate::gf::Gf;
use crate::library::{DemandVector, FileLibrary};
use crate::seeds::{self, Stream};

#[derive(Clone, Debug)]
pub struct GroupedScheme {
    pub sys: SystemParams,
    pub t: usize,
}

impl GroupedScheme {
    pub fn new(sys: SystemParams, t: usize) -> Result<GroupedScheme> {
        sys.check_file_len(&Profile::Grouped { t })?;
        Ok(GroupedScheme { sys, t })
    }

    pub fn group_count(&self) -> usize {
        self.sys.users / self.sys.streams
    }

    /// Members of group `g` (0-based): users `l * (K/L) + g`.
    pub fn group(&self, g: usize) -> Subset {
        let kp = self.group_count();
        Subset::from_members((0..self.sys.streams).map(|l| l * kp + g))
    }

    pub fn users_of(&self, groups: Subset) -> Subset {
        groups
            .iter()
            .fold(Subset::EMPTY, |acc, g| acc.union(self.group(g)))
    }

    pub fn group_of(&self, user: usize) -> usize {
        user % self.group_count()
    }

    pub fn subfile_len(&self) -> usize {
        self.sys.file_len / binom(self.group_count(), self.t / self.sys.streams) as usize
    }

    pub fn layout(&self) -> FragmentLayout {
        let mut layout = FragmentLayout::new(self.sys.files, self.sys.file_len);
        let w = self.subfile_len();
        for file in 0..self.sys.files {
            for (i, groups) in enumerate_subsets(self.group_count(), self.t / self.sys.streams)
                .into_iter()
                .enumerate()
            {
                let addr = FragmentAddr {
                    file,
                    subset: self.users_of(groups),
                    piece: 0,
                };
                layout.insert_range(addr, i * w, w);
            }
        }
        layout
    }

    pub fn key_store(&self) -> KeyStore {
        let mut keys = KeyStore::new(
            &self.sys.field,
            seeds::derive(self.sys.seed, Stream::Keys, &[]),
        );
        for groups in enumerate_subsets(self.group_count(), self.t / self.sys.streams + 1) {
            for beta in 1..=self.sys.streams {
                keys.add(
                    KeyId {
                        level: 0,
                        subset: self.users_of(groups),
                        beta,
                    },
                    self.subfile_len(),
                );
            }
        }
        keys
    }
}

impl Scheme for GroupedScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Grouped
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
        let l = self.sys.streams;
        let mut log = TransmitLog {
            blocks: Vec::new(),
            file_len: self.sys.file_len,
            streams: l,
        };
        let tx = Transmitter {
            library,
            layout: &placement.layout,
            keys: &placement.keys,
            channel,
        };
        // one precoder per user, silent at its group mates
        let precoders = (0..self.sys.users)
            .map(|k| channel.zero_force(self.group(self.group_of(k)), Subset::singleton(k)))
            .collect::<Result<Vec<_>>>()?;
        for (index, groups) in enumerate_subsets(self.group_count(), self.t / l + 1)
            .into_iter()
            .enumerate()
        {
            let served = self.users_of(groups);
            let mut terms = Vec::new();
            for g in groups.iter() {
                let rest = self.users_of(groups.without(g));
                for k in self.group(g).iter() {
                    terms.push(Term {
                        frag: FragmentAddr {
                            file: demand.of(k),
                            subset: rest,
                            piece: 0,
                        },
                        coef: Gf::ONE,
                        vector: precoders[k].u.clone(),
                        for_user: k,
                    });
                }
            }
            let keys = (0..l)
                .map(|b| KeyTerm {
                    id: KeyId {
                        level: 0,
                        subset: served,
                        beta: b + 1,
                    },
                    vector: unit(l, b),
                })
                .collect();
            log.blocks.push(tx.emit(
                BlockLabel::Grouped { groups },
                index,
                0,
                served,
                self.subfile_len(),
                terms,
                keys,
            )?);
        }
        Ok(log)
    }

    fn formula(&self) -> Result<FormulaPoint> {
        formulas::grouped_at_t(
            self.sys.users,
            self.sys.streams,
            self.sys.files,
            &BigRational::from_integer(BigInt::from(self.t)),
        )
    }
}
