//! End-to-end orchestration: place, deliver, decode, measure, compare.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::analysis::formulas::FormulaPoint;
use crate::channel::{sample_channel, ChannelState};
use crate::delivery::{decode_user, Placement, TransmitLog};
use crate::error::{Error, Result};
use crate::library::{DemandVector, FileLibrary};
use crate::schemes::{Scheme, SchemeKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserVerdict {
    pub user: usize,
    pub file: usize,
    pub error: Option<Error>,
}

impl UserVerdict {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: SchemeKind,
    pub users: usize,
    pub streams: usize,
    pub files: usize,
    pub file_len: usize,
    pub blocks: usize,
    pub measured_delay: BigRational,
    /// Mean over users, in files.
    pub measured_m_d: BigRational,
    pub measured_m_k: BigRational,
    /// (data symbols, key symbols) per user.
    pub storage: Vec<(usize, usize)>,
    pub formula: Option<FormulaPoint>,
    pub verdicts: Vec<UserVerdict>,
}

impl RunReport {
    pub fn all_decoded(&self) -> bool {
        self.verdicts.iter().all(UserVerdict::ok)
    }

    /// Measured delay and storage equal the closed form exactly.
    pub fn matches_formula(&self) -> bool {
        self.formula.as_ref().is_some_and(|p| {
            p.delay == self.measured_delay
                && p.m_d == self.measured_m_d
                && p.m_k == self.measured_m_k
        })
    }

    pub fn first_failure(&self) -> Option<&Error> {
        self.verdicts.iter().find_map(|v| v.error.as_ref())
    }
}

/// Everything a run produced, for audits and inspection.
pub struct RunArtifacts {
    pub library: FileLibrary,
    pub placement: Placement,
    pub channel: ChannelState,
    pub log: TransmitLog,
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn run(scheme: &dyn Scheme, demand: &DemandVector) -> Result<(RunReport, RunArtifacts)> {
    let sys = scheme.system();
    if demand.users() != sys.users {
        return Err(Error::InvalidParams(format!(
            "demand covers {} users, expected {}",
            demand.users(),
            sys.users
        )));
    }
    let channel = sample_channel(sys.users, sys.streams, &sys.field, sys.seed)?;
    let library = FileLibrary::random(&sys.field, sys.files, sys.file_len, sys.seed);
    let placement = scheme.place(&library)?;
    let log = scheme.deliver(&placement, &library, demand, &channel)?;
    let verdicts = (0..sys.users)
        .map(|k| {
            let file = demand.of(k);
            let error = match decode_user(
                k,
                file,
                &log,
                &channel,
                &placement.caches[k],
                &placement.layout,
            ) {
                Ok(w) if w == library.file(file) => None,
                Ok(_) => Some(Error::IncompleteFile {
                    user: k + 1,
                    file: file + 1,
                }),
                Err(e) => Some(e),
            };
            UserVerdict {
                user: k,
                file,
                error,
            }
        })
        .collect();
    let storage: Vec<(usize, usize)> = placement
        .caches
        .iter()
        .map(|c| (c.data_symbols(), c.key_symbols()))
        .collect();
    let denom = sys.users * sys.file_len;
    let report = RunReport {
        kind: scheme.kind(),
        users: sys.users,
        streams: sys.streams,
        files: sys.files,
        file_len: sys.file_len,
        blocks: log.blocks.len(),
        measured_delay: log.delay(),
        measured_m_d: ratio(storage.iter().map(|s| s.0).sum(), denom),
        measured_m_k: ratio(storage.iter().map(|s| s.1).sum(), denom),
        storage,
        formula: scheme.formula().ok(),
        verdicts,
    };
    Ok((
        report,
        RunArtifacts {
            library,
            placement,
            channel,
            log,
        },
    ))
}
