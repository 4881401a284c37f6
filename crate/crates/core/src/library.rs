//! File library and demand vectors.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{Field, Gf};
use crate::seeds::{self, Stream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileLibrary {
    field: Field,
    files: Vec<Vec<Gf>>,
}

impl FileLibrary {
    /// `n` files of `f` uniformly random symbols.
    pub fn random(field: &Field, n: usize, f: usize, seed: u64) -> FileLibrary {
        let files = (0..n)
            .map(|i| {
                let mut rng = seeds::rng(seed, Stream::Library, &[i as u64]);
                (0..f)
                    .map(|_| Gf(rng.gen_range(0..field.order()) as u16))
                    .collect()
            })
            .collect();
        FileLibrary {
            field: field.clone(),
            files,
        }
    }

    pub fn from_files(field: &Field, files: Vec<Vec<Gf>>) -> Result<FileLibrary> {
        let f = files.first().map_or(0, Vec::len);
        if files.iter().any(|w| w.len() != f) {
            return Err(Error::InvalidParams("files differ in length".into()));
        }
        Ok(FileLibrary {
            field: field.clone(),
            files,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn files(&self) -> usize {
        self.files.len()
    }

    pub fn file_len(&self) -> usize {
        self.files.first().map_or(0, Vec::len)
    }

    pub fn file(&self, n: usize) -> &[Gf] {
        &self.files[n]
    }
}

/// One requested file per user, 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandVector(pub Vec<usize>);

impl DemandVector {
    /// Distinct files where possible, which is a worst case for every scheme here.
    pub fn worst(k: usize, n: usize) -> DemandVector {
        DemandVector((0..k).map(|u| u % n).collect())
    }

    pub fn random(k: usize, n: usize, seed: u64) -> DemandVector {
        let mut rng = seeds::rng(seed, Stream::Demand, &[]);
        DemandVector((0..k).map(|_| rng.gen_range(0..n)).collect())
    }

    pub fn explicit(files: Vec<usize>, k: usize, n: usize) -> Result<DemandVector> {
        if files.len() != k {
            return Err(Error::InvalidParams(format!(
                "demand lists {} files for {k} users",
                files.len()
            )));
        }
        if let Some(bad) = files.iter().find(|&&d| d >= n) {
            return Err(Error::InvalidParams(format!(
                "demanded file {} exceeds N={n}",
                bad + 1
            )));
        }
        Ok(DemandVector(files))
    }

    pub fn of(&self, user: usize) -> usize {
        self.0[user]
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }
}
