//! Machinery shared by every scheme: fragment addressing, key streams, user
//! caches, transmitted blocks and the generic linear decoder.
//!
//! A block is an `L x width` symbol matrix
//! `Σ vector ⊗ (coef · fragment) + Σ vector ⊗ key`, where fragments shorter
//! than the block are zero-padded. Everything except fragment and key
//! contents is public, so a receiver can rebuild its own equations.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::channel::ChannelState;
use crate::combinatorics::Subset;
use crate::error::{Error, Result};
use crate::gf::{Field, Gf};
use crate::library::FileLibrary;
use crate::matrix::FieldMatrix;
use crate::seeds::{self, Stream};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FragmentAddr {
    pub file: usize,
    /// Users that cache this fragment.
    pub subset: Subset,
    pub piece: usize,
}

impl fmt::Display for FragmentAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}{}#{}", self.file + 1, self.subset, self.piece + 1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct KeyId {
    /// Zero for centralized schemes, the placement level otherwise.
    pub level: usize,
    pub subset: Subset,
    /// 1-based repetition index.
    pub beta: usize,
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level > 0 {
            write!(f, "K{}@s={}^{}", self.subset, self.level, self.beta)
        } else {
            write!(f, "K{}^{}", self.subset, self.beta)
        }
    }
}

/// Where every fragment of every file lives. Public to all parties.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FragmentLayout {
    file_len: usize,
    files: usize,
    frags: BTreeMap<FragmentAddr, Vec<u32>>,
}

impl FragmentLayout {
    pub fn new(files: usize, file_len: usize) -> FragmentLayout {
        FragmentLayout {
            file_len,
            files,
            frags: BTreeMap::new(),
        }
    }

    pub fn file_len(&self) -> usize {
        self.file_len
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn insert(&mut self, addr: FragmentAddr, positions: Vec<u32>) {
        let old = self.frags.insert(addr, positions);
        assert!(old.is_none(), "fragment {addr} placed twice");
    }

    pub fn insert_range(&mut self, addr: FragmentAddr, start: usize, len: usize) {
        self.insert(addr, (start as u32..(start + len) as u32).collect());
    }

    /// Length in symbols; absent fragments are empty.
    pub fn len(&self, addr: &FragmentAddr) -> usize {
        self.frags.get(addr).map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.frags.is_empty()
    }

    pub fn contains(&self, addr: &FragmentAddr) -> bool {
        self.frags.contains_key(addr)
    }

    pub fn positions(&self, addr: &FragmentAddr) -> &[u32] {
        self.frags.get(addr).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FragmentAddr, &Vec<u32>)> {
        self.frags.iter()
    }

    pub fn file_fragments(&self, file: usize) -> impl Iterator<Item = (&FragmentAddr, &Vec<u32>)> {
        let lo = FragmentAddr {
            file,
            subset: Subset(0),
            piece: 0,
        };
        self.frags
            .range(lo..)
            .take_while(move |(a, _)| a.file == file)
    }

    pub fn extract(&self, addr: &FragmentAddr, library: &FileLibrary) -> Vec<Gf> {
        let w = library.file(addr.file);
        self.positions(addr)
            .iter()
            .map(|&p| w[p as usize])
            .collect()
    }

    /// Every file's positions covered exactly once.
    pub fn check_partition(&self) -> Result<()> {
        for file in 0..self.files {
            let mut seen = vec![false; self.file_len];
            for (addr, pos) in self.file_fragments(file) {
                for &p in pos {
                    let slot = seen.get_mut(p as usize).ok_or_else(|| {
                        Error::InvalidParams(format!("{addr} points past the file end"))
                    })?;
                    if std::mem::replace(slot, true) {
                        return Err(Error::InvalidParams(format!(
                            "{addr} overlaps another fragment"
                        )));
                    }
                }
            }
            if let Some(p) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidParams(format!(
                    "symbol {p} of file {} is unassigned",
                    file + 1
                )));
            }
        }
        Ok(())
    }
}

/// Transmitter-side key material. Each key is an independent seeded stream.
#[derive(Clone, Debug)]
pub struct KeyStore {
    field: Field,
    seed: u64,
    zeroed: bool,
    lens: BTreeMap<KeyId, usize>,
}

impl KeyStore {
    pub fn new(field: &Field, seed: u64) -> KeyStore {
        KeyStore {
            field: field.clone(),
            seed,
            zeroed: false,
            lens: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, id: KeyId, len: usize) {
        let old = self.lens.insert(id, len);
        assert!(old.is_none(), "key {id} generated twice");
    }

    pub fn len(&self, id: &KeyId) -> Option<usize> {
        self.lens.get(id).copied()
    }

    pub fn count(&self) -> usize {
        self.lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lens.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = (&KeyId, &usize)> {
        self.lens.iter()
    }

    pub fn key(&self, id: &KeyId) -> Result<Vec<Gf>> {
        let len = self
            .len(id)
            .ok_or_else(|| Error::InvalidParams(format!("unknown key {id}")))?;
        if self.zeroed {
            return Ok(vec![Gf::ZERO; len]);
        }
        let mut rng = seeds::rng(
            self.seed,
            Stream::Keys,
            &[id.level as u64, id.subset.0 as u64, id.beta as u64],
        );
        Ok((0..len)
            .map(|_| Gf(rng.gen_range(0..self.field.order()) as u16))
            .collect())
    }

    /// Same key ids and sizes, fresh contents.
    pub fn resampled(&self, seed: u64) -> KeyStore {
        KeyStore {
            seed,
            ..self.clone()
        }
    }

    /// All-zero keys: the insecure ablation.
    pub fn zeroed(&self) -> KeyStore {
        KeyStore {
            zeroed: true,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UserCache {
    pub user: usize,
    pub data: BTreeMap<FragmentAddr, Vec<Gf>>,
    pub keys: BTreeMap<KeyId, Vec<Gf>>,
}

impl UserCache {
    /// Everything whose caching set contains the user.
    pub fn by_membership(
        user: usize,
        layout: &FragmentLayout,
        keys: &KeyStore,
        library: &FileLibrary,
    ) -> Result<UserCache> {
        let data = layout
            .iter()
            .filter(|(a, _)| a.subset.contains(user))
            .map(|(a, _)| (*a, layout.extract(a, library)))
            .collect();
        let mut stored = BTreeMap::new();
        for (id, _) in keys.ids().filter(|(id, _)| id.subset.contains(user)) {
            stored.insert(*id, keys.key(id)?);
        }
        Ok(UserCache {
            user,
            data,
            keys: stored,
        })
    }

    pub fn data_symbols(&self) -> usize {
        self.data.values().map(Vec::len).sum()
    }

    pub fn key_symbols(&self) -> usize {
        self.keys.values().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Placement {
    pub layout: FragmentLayout,
    pub keys: KeyStore,
    pub caches: Vec<UserCache>,
}

impl Placement {
    pub fn by_membership(
        users: usize,
        layout: FragmentLayout,
        keys: KeyStore,
        library: &FileLibrary,
    ) -> Result<Placement> {
        layout.check_partition()?;
        let caches = (0..users)
            .map(|u| UserCache::by_membership(u, &layout, &keys, library))
            .collect::<Result<_>>()?;
        Ok(Placement {
            layout,
            keys,
            caches,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockLabel {
    Mt {
        subset: Subset,
        rep: usize,
    },
    Grouped {
        groups: Subset,
    },
    Feedback {
        lambda: Subset,
        pi: Subset,
        shift: usize,
    },
    Decentralized {
        level: usize,
        subset: Subset,
        rep: usize,
    },
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLabel::Mt { subset, rep } => write!(f, "S={subset} w={rep}"),
            BlockLabel::Grouped { groups } => write!(f, "groups={groups}"),
            BlockLabel::Feedback { lambda, pi, shift } => {
                write!(f, "lambda={lambda} pi={pi} shift={shift}")
            }
            BlockLabel::Decentralized { level, subset, rep } => {
                write!(f, "s={level} S={subset} w={rep}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub frag: FragmentAddr,
    pub coef: Gf,
    /// Precoding vector over the L transmit streams.
    pub vector: Vec<Gf>,
    /// The user this fragment is meant for.
    pub for_user: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyTerm {
    pub id: KeyId,
    pub vector: Vec<Gf>,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub label: BlockLabel,
    /// Blocks sharing a group id are decoded as one linear system.
    pub group: usize,
    /// Coefficient-schedule attempt that produced this block.
    pub attempt: usize,
    /// Users that decode from this block.
    pub served: Subset,
    pub width: usize,
    pub terms: Vec<Term>,
    pub keys: Vec<KeyTerm>,
    pub payload: FieldMatrix,
}

/// Transmitter view during delivery.
pub struct Transmitter<'a> {
    pub library: &'a FileLibrary,
    pub layout: &'a FragmentLayout,
    pub keys: &'a KeyStore,
    pub channel: &'a ChannelState,
}

#[allow(clippy::too_many_arguments)]
pub fn compose_payload(
    field: &Field,
    streams: usize,
    width: usize,
    terms: &[Term],
    keys: &[KeyTerm],
    library: &FileLibrary,
    layout: &FragmentLayout,
    store: &KeyStore,
) -> Result<FieldMatrix> {
    let mut payload = FieldMatrix::zeros(field, streams, width);
    for term in terms {
        let frag = layout.extract(&term.frag, library);
        if frag.len() > width {
            return Err(Error::Dimension(format!(
                "{} is wider than its block",
                term.frag
            )));
        }
        for (r, &v) in term.vector.iter().enumerate() {
            let c = field.mul(v, term.coef);
            if !c.is_zero() {
                field.mul_add_slice(&mut payload.row_mut(r)[..frag.len()], &frag, c);
            }
        }
    }
    for kt in keys {
        let key = store.key(&kt.id)?;
        if key.len() < width {
            return Err(Error::Dimension(format!(
                "key {} is shorter than its block",
                kt.id
            )));
        }
        for (r, &v) in kt.vector.iter().enumerate() {
            if !v.is_zero() {
                field.mul_add_slice(payload.row_mut(r), &key[..width], v);
            }
        }
    }
    Ok(payload)
}

impl Transmitter<'_> {
    #[allow(clippy::too_many_arguments)]
    pub fn emit(
        &self,
        label: BlockLabel,
        group: usize,
        attempt: usize,
        served: Subset,
        width: usize,
        terms: Vec<Term>,
        keys: Vec<KeyTerm>,
    ) -> Result<Block> {
        let payload = compose_payload(
            self.channel.field(),
            self.channel.streams(),
            width,
            &terms,
            &keys,
            self.library,
            self.layout,
            self.keys,
        )?;
        Ok(Block {
            label,
            group,
            attempt,
            served,
            width,
            terms,
            keys,
            payload,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TransmitLog {
    pub blocks: Vec<Block>,
    pub file_len: usize,
    pub streams: usize,
}

impl TransmitLog {
    pub fn total_columns(&self) -> usize {
        self.blocks.iter().map(|b| b.width).sum()
    }

    /// Transmitted columns normalized by the file length.
    pub fn delay(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.total_columns()),
            BigInt::from(self.file_len.max(1)),
        )
    }

    pub fn key_uses(&self) -> BTreeMap<KeyId, usize> {
        let mut uses = BTreeMap::new();
        for kt in self.blocks.iter().flat_map(|b| &b.keys) {
            *uses.entry(kt.id).or_insert(0) += 1;
        }
        uses
    }

    /// The same schedule re-encrypted under a different key store.
    pub fn rekeyed(
        &self,
        library: &FileLibrary,
        layout: &FragmentLayout,
        store: &KeyStore,
    ) -> Result<TransmitLog> {
        let mut out = self.clone();
        for b in &mut out.blocks {
            b.payload = compose_payload(
                b.payload.field(),
                self.streams,
                b.width,
                &b.terms,
                &b.keys,
                library,
                layout,
                store,
            )?;
        }
        Ok(out)
    }
}

/// Recovers `file` for `user` from what it hears plus its cache.
pub fn decode_user(
    user: usize,
    file: usize,
    log: &TransmitLog,
    channel: &ChannelState,
    cache: &UserCache,
    layout: &FragmentLayout,
) -> Result<Vec<Gf>> {
    let field = channel.field();
    let mut groups: BTreeMap<usize, Vec<&Block>> = BTreeMap::new();
    for b in log.blocks.iter().filter(|b| b.served.contains(user)) {
        groups.entry(b.group).or_default().push(b);
    }
    let mut recovered: BTreeMap<FragmentAddr, Vec<Gf>> = BTreeMap::new();
    for blocks in groups.values() {
        let width = blocks.iter().map(|b| b.width).max().unwrap_or(0);
        let mut unknown_cols: BTreeMap<FragmentAddr, usize> = BTreeMap::new();
        let mut entries: Vec<Vec<(usize, Gf)>> = Vec::with_capacity(blocks.len());
        let mut rhs = FieldMatrix::zeros(field, blocks.len(), width);
        for (row, b) in blocks.iter().enumerate() {
            let mut y = channel.receive(user, &b.payload);
            for kt in &b.keys {
                let g = channel.gain(user, &kt.vector);
                if g.is_zero() {
                    continue;
                }
                let key = cache.keys.get(&kt.id).ok_or_else(|| Error::MissingKey {
                    user: user + 1,
                    key: kt.id.to_string(),
                })?;
                field.mul_add_slice(&mut y, &key[..b.width], g);
            }
            let mut eq = Vec::new();
            for term in &b.terms {
                let e = field.mul(term.coef, channel.gain(user, &term.vector));
                if e.is_zero() {
                    continue;
                }
                if let Some(v) = cache.data.get(&term.frag) {
                    field.mul_add_slice(&mut y[..v.len()], v, e);
                } else {
                    let next = unknown_cols.len();
                    let col = *unknown_cols.entry(term.frag).or_insert(next);
                    eq.push((col, e));
                }
            }
            rhs.row_mut(row)[..b.width].copy_from_slice(&y);
            entries.push(eq);
        }
        if unknown_cols.is_empty() {
            continue;
        }
        let mut a = FieldMatrix::zeros(field, blocks.len(), unknown_cols.len());
        for (row, eq) in entries.iter().enumerate() {
            for &(col, e) in eq {
                let cur = a.get(row, col);
                a.set(row, col, cur + e);
            }
        }
        let x = a
            .solve_full_column_rank(&rhs)
            .map_err(|_| Error::SingularDecode {
                user: user + 1,
                detail: format!(
                    "{} unknowns from {} blocks at {}",
                    unknown_cols.len(),
                    blocks.len(),
                    blocks[0].label
                ),
            })?;
        for (addr, col) in unknown_cols {
            let len = layout.len(&addr);
            recovered.insert(addr, x.row(col)[..len].to_vec());
        }
    }
    let mut out = vec![Gf::ZERO; layout.file_len()];
    for (addr, pos) in layout.file_fragments(file) {
        let values =
            cache
                .data
                .get(addr)
                .or_else(|| recovered.get(addr))
                .ok_or(Error::IncompleteFile {
                    user: user + 1,
                    file: file + 1,
                })?;
        for (&p, &v) in pos.iter().zip(values) {
            out[p as usize] = v;
        }
    }
    Ok(out)
}
