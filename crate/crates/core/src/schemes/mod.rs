//! The four placement/delivery schemes behind a common interface.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::analysis::formulas::FormulaPoint;
use crate::channel::ChannelState;
use crate::combinatorics::{min_valid_f, Profile, Subset};
use crate::delivery::{Placement, TransmitLog};
use crate::error::{Error, Result};
use crate::gf::{Field, Gf};
use crate::library::{DemandVector, FileLibrary};
use crate::matrix::FieldMatrix;
use crate::seeds::{self, Stream};

pub mod decentralized;
pub mod feedback;
pub mod grouped;
pub mod mt;

pub use decentralized::{DecentralizedScheme, PlacementMode};
pub use feedback::FeedbackScheme;
pub use grouped::GroupedScheme;
pub use mt::MtScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Mt,
    Grouped,
    Feedback,
    Decentralized,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Mt,
        SchemeKind::Grouped,
        SchemeKind::Feedback,
        SchemeKind::Decentralized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Mt => "mt",
            SchemeKind::Grouped => "grouped",
            SchemeKind::Feedback => "feedback",
            SchemeKind::Decentralized => "decentralized",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown scheme {s:?}")))
    }
}

/// Network and library dimensions shared by all schemes.
#[derive(Clone, Debug)]
pub struct SystemParams {
    pub users: usize,
    pub streams: usize,
    pub files: usize,
    pub file_len: usize,
    pub field: Field,
    pub seed: u64,
}

impl SystemParams {
    pub fn new(
        users: usize,
        streams: usize,
        files: usize,
        file_len: usize,
        field: Field,
        seed: u64,
    ) -> Result<SystemParams> {
        if streams == 0 || users < streams {
            return Err(Error::InvalidParams(format!(
                "need K >= L >= 1, got K={users}, L={streams}"
            )));
        }
        if files < users {
            return Err(Error::InvalidParams(format!(
                "need N >= K, got N={files}, K={users}"
            )));
        }
        if users > 16 {
            return Err(Error::InvalidParams(format!(
                "simulation supports at most 16 users, got K={users}"
            )));
        }
        if file_len == 0 {
            return Err(Error::InvalidParams("file length must be positive".into()));
        }
        Ok(SystemParams {
            users,
            streams,
            files,
            file_len,
            field,
            seed,
        })
    }

    pub(crate) fn check_file_len(&self, profile: &Profile) -> Result<u64> {
        let min = min_valid_f(profile, self.users, self.streams)?;
        if !(self.file_len as u64).is_multiple_of(min) {
            return Err(Error::InvalidParams(format!(
                "f={} is not a multiple of min_valid_f={min}",
                self.file_len
            )));
        }
        Ok(min)
    }
}

pub trait Scheme: Send + Sync {
    fn kind(&self) -> SchemeKind;
    fn system(&self) -> &SystemParams;
    fn place(&self, library: &FileLibrary) -> Result<Placement>;
    fn deliver(
        &self,
        placement: &Placement,
        library: &FileLibrary,
        demand: &DemandVector,
        channel: &ChannelState,
    ) -> Result<TransmitLog>;
    /// Closed-form prediction for these parameters.
    fn formula(&self) -> Result<FormulaPoint>;
}

pub const MAX_COEFFICIENT_ATTEMPTS: usize = 64;

/// Public random combining coefficients for one subset of a delivery round.
///
/// `coef[w][j][i]` multiplies the fragment meant for the `i`-th member of
/// `targets[j]` in repetition `w`. Attempts are drawn until every user of
/// `ground` faces an invertible system.
pub(crate) fn coefficient_schedule(
    field: &Field,
    seed: u64,
    level: usize,
    ground: Subset,
    targets: &[Subset],
    reps: usize,
) -> Result<(usize, Vec<Vec<Vec<Gf>>>)> {
    for attempt in 0..MAX_COEFFICIENT_ATTEMPTS {
        let mut rng = seeds::rng(
            seed,
            Stream::Coefficients,
            &[level as u64, ground.0 as u64, attempt as u64],
        );
        let coef: Vec<Vec<Vec<Gf>>> = (0..reps)
            .map(|_| {
                targets
                    .iter()
                    .map(|t| {
                        (0..t.len())
                            .map(|_| Gf(rng.gen_range(1..field.order()) as u16))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let solvable = ground.iter().all(|k| {
            let cols: Vec<(usize, usize)> = targets
                .iter()
                .enumerate()
                .filter_map(|(j, t)| t.index_of(k).map(|i| (j, i)))
                .collect();
            if cols.len() != reps {
                return false;
            }
            let mut m = FieldMatrix::zeros(field, reps, reps);
            for (w, row) in coef.iter().enumerate() {
                for (c, &(j, i)) in cols.iter().enumerate() {
                    m.set(w, c, row[j][i]);
                }
            }
            m.rank() == reps
        });
        if solvable {
            return Ok((attempt, coef));
        }
    }
    Err(Error::SingularDecode {
        user: ground.iter().next().map_or(0, |u| u + 1),
        detail: format!(
            "no invertible coefficient schedule for {ground} after {MAX_COEFFICIENT_ATTEMPTS} attempts"
        ),
    })
}

pub(crate) fn ones(l: usize) -> Vec<Gf> {
    vec![Gf::ONE; l]
}

pub(crate) fn unit(l: usize, i: usize) -> Vec<Gf> {
    let mut v = vec![Gf::ZERO; l];
    v[i] = Gf::ONE;
    v
}

/// Splits `total` symbols into `parts` consecutive chunks whose sizes differ by at most one.
pub(crate) fn chunk_sizes(total: usize, parts: usize) -> Vec<usize> {
    let (q, r) = (total / parts, total % parts);
    (0..parts).map(|i| q + usize::from(i < r)).collect()
}

/// Cache parameters t in 0..=K that the centralized scheme `kind` accepts.
pub fn valid_t(kind: SchemeKind, users: usize, streams: usize) -> Vec<usize> {
    (0..=users)
        .filter(|&t| {
            let profile = match kind {
                SchemeKind::Mt => Profile::Mt { t },
                SchemeKind::Grouped => Profile::Grouped { t },
                SchemeKind::Feedback => Profile::Feedback { t },
                SchemeKind::Decentralized => return false,
            };
            min_valid_f(&profile, users, streams).is_ok()
        })
        .collect()
}

/// Builds a scheme from a kind and its integer cache parameter.
pub fn centralized(kind: SchemeKind, sys: SystemParams, t: usize) -> Result<Box<dyn Scheme>> {
    Ok(match kind {
        SchemeKind::Mt => Box::new(MtScheme::new(sys, t)?),
        SchemeKind::Grouped => Box::new(GroupedScheme::new(sys, t)?),
        SchemeKind::Feedback => Box::new(FeedbackScheme::new(sys, t)?),
        SchemeKind::Decentralized => {
            return Err(Error::InvalidParams(
                "the decentralized scheme takes a cache probability".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::subsets_of;

    #[test]
    fn schedule_over_gf2_fails_when_systems_are_larger_than_one() {
        let f = Field::with_bits(1).unwrap();
        let s = Subset::full(3);
        let targets = subsets_of(s, 2);
        assert!(coefficient_schedule(&f, 1, 0, s, &targets, 2).is_err());
        let singles = subsets_of(s, 1);
        assert_eq!(coefficient_schedule(&f, 1, 0, s, &singles, 1).unwrap().0, 0);
    }

    #[test]
    fn schedule_is_public_and_repeatable() {
        let f = Field::gf256();
        let s = Subset::full(4);
        let targets = subsets_of(s, 2);
        let a = coefficient_schedule(&f, 5, 0, s, &targets, 3).unwrap();
        assert_eq!(a, coefficient_schedule(&f, 5, 0, s, &targets, 3).unwrap());
        assert!(a.1.iter().flatten().flatten().all(|c| !c.is_zero()));
    }

    #[test]
    fn chunks_cover() {
        assert_eq!(chunk_sizes(7, 3), vec![3, 2, 2]);
        assert_eq!(chunk_sizes(0, 2), vec![0, 0]);
        assert_eq!(
            "feedback".parse::<SchemeKind>().unwrap(),
            SchemeKind::Feedback
        );
        assert!("nope".parse::<SchemeKind>().is_err());
    }
}
