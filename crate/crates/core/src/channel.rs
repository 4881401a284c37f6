//! The linear network: legitimate transfer matrix, eavesdropper channel and
//! zero-forcing precoders.

use rand::Rng;

use crate::combinatorics::{enumerate_subsets, Subset};
use crate::error::{Error, Result};
use crate::gf::{Field, Gf};
use crate::matrix::FieldMatrix;
use crate::seeds::{self, Stream};

pub const MAX_RESAMPLES: usize = 1000;
pub const MAX_COMBINATIONS: usize = 100;

#[derive(Clone, Debug)]
pub struct ChannelState {
    field: Field,
    h_r: FieldMatrix,
    h_e: Vec<Gf>,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Precoder {
    pub u: Vec<Gf>,
    pub targets: Subset,
    pub zeroed: Subset,
}

fn uniform(field: &Field, rng: &mut impl Rng) -> Gf {
    Gf(rng.gen_range(0..field.order()) as u16)
}

pub fn sample_channel(k: usize, l: usize, field: &Field, seed: u64) -> Result<ChannelState> {
    if l == 0 || k < l {
        return Err(Error::InvalidParams(format!(
            "need K >= L >= 1, got K={k}, L={l}"
        )));
    }
    let mut rng = seeds::rng(seed, Stream::Channel, &[k as u64, l as u64]);
    let row_sets = enumerate_subsets(k, l);
    for _ in 0..MAX_RESAMPLES {
        let data = (0..k * l).map(|_| uniform(field, &mut rng)).collect();
        let h_r = FieldMatrix::from_vec(field, k, l, data)?;
        let h_e: Vec<Gf> = (0..l).map(|_| uniform(field, &mut rng)).collect();
        if h_e.iter().all(|x| x.is_zero()) {
            continue;
        }
        if row_sets
            .iter()
            .all(|s| h_r.select_rows(&s.members()).rank() == l)
        {
            return Ok(ChannelState {
                field: field.clone(),
                h_r,
                h_e,
                seed,
            });
        }
    }
    Err(Error::DegenerateField(MAX_RESAMPLES))
}

impl ChannelState {
    /// Builds a channel from explicit matrices without the full-rank check.
    pub fn from_parts(
        field: &Field,
        h_r: FieldMatrix,
        h_e: Vec<Gf>,
        seed: u64,
    ) -> Result<ChannelState> {
        if h_e.len() != h_r.cols() {
            return Err(Error::Dimension("eavesdropper channel length".into()));
        }
        Ok(ChannelState {
            field: field.clone(),
            h_r,
            h_e,
            seed,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn users(&self) -> usize {
        self.h_r.rows()
    }

    pub fn streams(&self) -> usize {
        self.h_r.cols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transfer(&self) -> &FieldMatrix {
        &self.h_r
    }

    pub fn eavesdropper(&self) -> &[Gf] {
        &self.h_e
    }

    pub fn user_row(&self, user: usize) -> &[Gf] {
        self.h_r.row(user)
    }

    /// `h_kᵀ v` for user k.
    pub fn gain(&self, user: usize, v: &[Gf]) -> Gf {
        self.h_r.row_dot(user, v)
    }

    pub fn eve_gain(&self, v: &[Gf]) -> Gf {
        let f = &self.field;
        self.h_e
            .iter()
            .zip(v)
            .fold(Gf::ZERO, |acc, (&a, &b)| acc + f.mul(a, b))
    }

    /// Square submatrix of the rows in `users`.
    pub fn rows_of(&self, users: Subset) -> FieldMatrix {
        self.h_r.select_rows(&users.members())
    }

    /// Precoder silent at `S \ T` and audible at every user of `T`.
    pub fn zero_force(&self, s: Subset, t: Subset) -> Result<Precoder> {
        if !t.is_subset_of(s) {
            return Err(Error::InvalidParams(format!(
                "target set {t} is not inside {s}"
            )));
        }
        let zeroed = s.minus(t);
        let l = self.streams();
        if zeroed.len() >= l {
            return Err(Error::InvalidParams(format!(
                "cannot silence {} users with {l} streams",
                zeroed.len()
            )));
        }
        let basis = self.rows_of(zeroed).null_space();
        let audible = |u: &[Gf]| t.iter().all(|j| !self.gain(j, u).is_zero());
        if basis.cols() == 0 {
            return Err(Error::NonOrthogonalityFailure);
        }
        let first = basis.col_vec(0);
        if audible(&first) {
            return Ok(Precoder {
                u: first,
                targets: t,
                zeroed,
            });
        }
        let mut rng = seeds::rng(self.seed, Stream::ZeroForce, &[s.0 as u64, t.0 as u64]);
        for _ in 0..MAX_COMBINATIONS {
            let mut u = vec![Gf::ZERO; l];
            for c in 0..basis.cols() {
                let coef = uniform(&self.field, &mut rng);
                self.field.mul_add_slice(&mut u, &basis.col_vec(c), coef);
            }
            if audible(&u) {
                return Ok(Precoder {
                    u,
                    targets: t,
                    zeroed,
                });
            }
        }
        Err(Error::NonOrthogonalityFailure)
    }

    /// Legitimate outputs (one row per user) and the eavesdropper output.
    pub fn transmit(&self, s: &FieldMatrix) -> Result<(FieldMatrix, Vec<Gf>)> {
        let y_r = self.h_r.mul(s)?;
        let h_e = FieldMatrix::from_vec(&self.field, 1, self.h_e.len(), self.h_e.clone())?;
        let y_e = h_e.mul(s)?.row(0).to_vec();
        Ok((y_r, y_e))
    }

    /// What one user hears from an L-row block.
    pub fn receive(&self, user: usize, s: &FieldMatrix) -> Vec<Gf> {
        let mut out = vec![Gf::ZERO; s.cols()];
        for (r, &h) in self.user_row(user).iter().enumerate() {
            self.field.mul_add_slice(&mut out, s.row(r), h);
        }
        out
    }

    pub fn eavesdrop(&self, s: &FieldMatrix) -> Vec<Gf> {
        let mut out = vec![Gf::ZERO; s.cols()];
        for (r, &h) in self.h_e.iter().enumerate() {
            self.field.mul_add_slice(&mut out, s.row(r), h);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_user_gf2_is_forced() {
        let f = Field::with_bits(1).unwrap();
        let ch = sample_channel(1, 1, &f, 0).unwrap();
        assert_eq!(ch.user_row(0), &[Gf(1)]);
        assert_eq!(ch.eavesdropper(), &[Gf(1)]);
    }

    #[test]
    fn sampling_is_deterministic_and_full_rank() {
        let f = Field::gf256();
        let a = sample_channel(4, 2, &f, 7).unwrap();
        let b = sample_channel(4, 2, &f, 7).unwrap();
        assert_eq!(a.transfer(), b.transfer());
        assert_eq!(a.eavesdropper(), b.eavesdropper());
        for pair in enumerate_subsets(4, 2) {
            let m = a.rows_of(pair);
            let det = f.mul(m.get(0, 0), m.get(1, 1)) + f.mul(m.get(0, 1), m.get(1, 0));
            assert!(!det.is_zero(), "rows {pair}");
        }
    }

    #[test]
    fn tiny_field_degenerates() {
        // GF(2) has only three nonzero 2-vectors, so four users cannot be pairwise independent.
        let f = Field::with_bits(1).unwrap();
        assert_eq!(
            sample_channel(4, 2, &f, 1).unwrap_err(),
            Error::DegenerateField(MAX_RESAMPLES)
        );
    }

    #[test]
    fn zero_force_by_hand() {
        let f = Field::gf256();
        let h = FieldMatrix::from_u16(&f, 2, 2, &[1, 0, 0, 1]).unwrap();
        let ch = ChannelState::from_parts(&f, h, vec![Gf(1), Gf(1)], 0).unwrap();
        let p = ch
            .zero_force(Subset::from_members([0, 1]), Subset::singleton(1))
            .unwrap();
        assert!(p.u[0].is_zero() && !p.u[1].is_zero());
        // e1 is silent at user 2, so a random combination of the basis is used
        let q = ch
            .zero_force(Subset::from_members([0, 1]), Subset::from_members([0, 1]))
            .unwrap();
        assert!(!q.u[0].is_zero() && !q.u[1].is_zero());
        let ch2 = ChannelState::from_parts(
            &f,
            FieldMatrix::from_u16(&f, 2, 2, &[1, 1, 3, 1]).unwrap(),
            vec![Gf(1), Gf(0)],
            0,
        )
        .unwrap();
        let all = ch2
            .zero_force(Subset::from_members([0, 1]), Subset::from_members([0, 1]))
            .unwrap();
        assert_eq!(all.u, vec![Gf(1), Gf(0)]);
    }

    #[test]
    fn zero_force_on_random_channel() {
        let f = Field::gf256();
        let ch = sample_channel(6, 3, &f, 11).unwrap();
        for s in enumerate_subsets(6, 4) {
            for t in crate::combinatorics::subsets_of(s, 2) {
                let p = ch.zero_force(s, t).unwrap();
                for j in s.minus(t).iter() {
                    assert!(ch.gain(j, &p.u).is_zero());
                }
                for j in t.iter() {
                    assert!(!ch.gain(j, &p.u).is_zero());
                }
            }
        }
    }

    #[test]
    fn transmit_examples() {
        let f = Field::with_bits(1).unwrap();
        let ch = ChannelState::from_parts(
            &f,
            FieldMatrix::from_u16(&f, 1, 2, &[1, 1]).unwrap(),
            vec![Gf(1), Gf(0)],
            0,
        )
        .unwrap();
        let s = FieldMatrix::from_u16(&f, 2, 1, &[1, 1]).unwrap();
        let (y, e) = ch.transmit(&s).unwrap();
        assert_eq!(y.get(0, 0), Gf(0));
        assert_eq!(e, vec![Gf(1)]);
        let (y0, e0) = ch.transmit(&FieldMatrix::zeros(&f, 2, 3)).unwrap();
        assert!(y0.is_zero() && e0.iter().all(|x| x.is_zero()));

        let g = Field::gf256();
        let id =
            ChannelState::from_parts(&g, FieldMatrix::identity(&g, 3), vec![Gf(1); 3], 0).unwrap();
        let s = FieldMatrix::from_u16(&g, 3, 2, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(id.transmit(&s).unwrap().0, s);
        assert_eq!(id.receive(1, &s), vec![Gf(3), Gf(4)]);
    }
}
