//! Closed-form delay and storage expressions, evaluated in exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{binom, pow};
use crate::error::{Error, Result};
use crate::schemes::SchemeKind;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi<T: Into<BigInt>>(n: T) -> Q {
    Q::from_integer(n.into())
}

fn qb(n: u64) -> Q {
    qi(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// One evaluated operating point of a scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaPoint {
    pub kind: SchemeKind,
    pub users: usize,
    pub streams: usize,
    pub files: usize,
    /// Total memory per user, in files.
    pub memory: Q,
    /// The cache parameter: t for centralized schemes, the caching probability otherwise.
    pub param: Q,
    /// True when `param` came from a numerical root rather than exact algebra.
    pub numeric: bool,
    pub delay: Q,
    pub delay_insecure: Q,
    pub m_d: Q,
    pub m_k: Q,
    pub dof: usize,
    pub region_ok: bool,
}

/// How the cache size is specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheInput {
    T(Q),
    M(Q),
    Prob(Q),
}

fn out_of_region(msg: String) -> Error {
    Error::OutOfRegion(msg)
}

fn check_dims(k: usize, l: usize, n: usize) -> Result<()> {
    if l == 0 || k < l || n < 1 {
        return Err(out_of_region(format!(
            "need K >= L >= 1 and N >= 1 (K={k}, L={l}, N={n})"
        )));
    }
    Ok(())
}

fn check_t(k: usize, t: &Q) -> Result<()> {
    if t.is_negative() || *t > qb(k as u64) {
        return Err(out_of_region(format!("t={t} outside [0, {k}]")));
    }
    Ok(())
}

fn floor_usize(x: &Q) -> usize {
    x.floor().to_integer().to_usize().unwrap_or(0)
}

/// Delay of the insecure multi-stream baseline, K(1-M/N)/(L+KM/N).
pub fn insecure_mt_delay(k: usize, l: usize, n: usize, m: &Q) -> Q {
    let ratio = m / qb(n as u64);
    if ratio >= Q::one() {
        return Q::zero();
    }
    let kk = qb(k as u64);
    &kk * (Q::one() - &ratio) / (qb(l as u64) + &kk * &ratio)
}

pub fn mt_at_t(k: usize, l: usize, n: usize, t: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    check_t(k, t)?;
    let (kk, ll, nn) = (qb(k as u64), qb(l as u64), qb(n as u64));
    let m_d = &nn * t / &kk;
    let m_k = (&kk - t) / &kk;
    let memory = &m_d + &m_k;
    Ok(FormulaPoint {
        kind: SchemeKind::Mt,
        users: k,
        streams: l,
        files: n,
        delay: (&kk - t) / (&ll + t),
        delay_insecure: insecure_mt_delay(k, l, n, &memory),
        m_d,
        m_k,
        memory,
        param: t.clone(),
        numeric: false,
        dof: floor_usize(t) + l,
        region_ok: true,
    })
}

pub fn mt_at_m(k: usize, l: usize, n: usize, m: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    if n < 2 || *m < Q::one() || *m > qb(n as u64) {
        return Err(out_of_region(format!("M={m} outside [1, N={n}]")));
    }
    let t = qb(k as u64) * (m - Q::one()) / qb(n as u64 - 1);
    mt_at_t(k, l, n, &t)
}

/// Single-transmitter unicast-with-keys baseline K(1-(M-1)/(N-1)).
pub fn unicast_baseline(k: usize, n: usize, m: &Q) -> Q {
    let kk = qb(k as u64);
    &kk * (Q::one() - (m - Q::one()) / qb(n as u64 - 1))
}

/// Decentralized no-coding baseline K(1-q).
pub fn decentralized_baseline(k: usize, cache_prob: &Q) -> Q {
    qb(k as u64) * (Q::one() - cache_prob)
}

/// Key storage if keys were indexed by (t+1)-subsets instead of (t+L)-subsets.
pub fn per_target_key_storage(k: usize, l: usize, t: usize) -> Q {
    q((k - t) as i64, k as i64) * qb(binom(t + l - 1, t))
}

pub fn grouped_at_t(k: usize, l: usize, n: usize, t: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    check_t(k, t)?;
    let (kk, ll, nn) = (qb(k as u64), qb(l as u64), qb(n as u64));
    let m_d = &nn * t / &kk;
    let m_k = &ll * (&kk - t) / &kk;
    let memory = &m_d + &m_k;
    let region_ok = match grouped_operating_region(k, l, n) {
        Ok((lo, hi)) => memory >= lo && memory <= hi,
        Err(_) => false,
    };
    Ok(FormulaPoint {
        kind: SchemeKind::Grouped,
        users: k,
        streams: l,
        files: n,
        delay: (&kk - t) / (&ll + t),
        delay_insecure: insecure_mt_delay(k, l, n, &memory),
        m_d,
        m_k,
        memory,
        param: t.clone(),
        numeric: false,
        dof: floor_usize(t) + l,
        region_ok,
    })
}

pub fn grouped_at_m(k: usize, l: usize, n: usize, m: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    if n <= l || *m < qb(l as u64) || *m > qb(n as u64) {
        return Err(out_of_region(format!(
            "M={m} outside [L={l}, N={n}] or N <= L"
        )));
    }
    let t = qb(k as u64) * (m - qb(l as u64)) / qb((n - l) as u64);
    grouped_at_t(k, l, n, &t)
}

/// Memory range 2NL/(N+L) <= M <= (K-1)(N-L)/K + L where the grouped
/// scheme is worth running.
pub fn grouped_operating_region(k: usize, l: usize, n: usize) -> Result<(Q, Q)> {
    if k <= l {
        return Err(out_of_region(format!("region needs K > L (K={k}, L={l})")));
    }
    let (kk, ll, nn) = (qb(k as u64), qb(l as u64), qb(n as u64));
    let lo = qb(2) * &nn * &ll / (&nn + &ll);
    let hi = (&kk - Q::one()) * (&nn - &ll) / &kk + &ll;
    Ok((lo, hi))
}

pub fn feedback_at_t(k: usize, l: usize, n: usize, t: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    check_t(k, t)?;
    let (kk, ll, nn) = (qb(k as u64), qb(l as u64), qb(n as u64));
    let m_d = &nn * t / &kk;
    let m_k = &ll * (&kk - t) * (t + Q::one()) / (&kk * (t + &ll));
    let memory = &m_d + &m_k;
    let t_insecure = &kk * &memory / &nn;
    let delay_insecure = if t_insecure >= kk {
        Q::zero()
    } else {
        (&kk - &t_insecure) / (&ll + &t_insecure)
    };
    Ok(FormulaPoint {
        kind: SchemeKind::Feedback,
        users: k,
        streams: l,
        files: n,
        delay: (&kk - t) / (&ll + t),
        delay_insecure,
        m_d,
        m_k,
        memory,
        param: t.clone(),
        numeric: false,
        dof: floor_usize(t) + l,
        region_ok: true,
    })
}

fn exact_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (a, b) = (x.numer().sqrt(), x.denom().sqrt());
    (&a * &a == *x.numer() && &b * &b == *x.denom()).then(|| Q::new(a, b))
}

/// Cache parameter t solving the memory equation of the feedback scheme.
pub fn feedback_t_from_m(k: usize, l: usize, n: usize, m: &Q) -> Result<(Q, bool)> {
    let (kk, ll, nn) = (qb(k as u64), qb(l as u64), qb(n as u64));
    // (N-L) t^2 + (NL + LK - L - MK) t + (LK - MKL) = 0
    let a = &nn - &ll;
    let b = &nn * &ll + &ll * &kk - &ll - m * &kk;
    let c = &ll * &kk - m * &kk * &ll;
    let root = if a.is_zero() {
        if b.is_zero() {
            return Err(out_of_region(format!(
                "memory equation degenerates at M={m}"
            )));
        }
        (-c / b, false)
    } else {
        let disc = &b * &b - qb(4) * &a * &c;
        if disc.is_negative() {
            return Err(out_of_region(format!("no real t for M={m}")));
        }
        match exact_sqrt(&disc) {
            Some(r) => ((-&b + r) / (qb(2) * &a), false),
            None => {
                let (af, bf, df) = (to_f64(&a), to_f64(&b), to_f64(&disc));
                let t = (-bf + df.sqrt()) / (2.0 * af);
                (
                    Q::from_f64(t).ok_or_else(|| out_of_region("non-finite root".into()))?,
                    true,
                )
            }
        }
    };
    check_t(k, &root.0)?;
    Ok(root)
}

pub fn feedback_at_m(k: usize, l: usize, n: usize, m: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    if *m < Q::one() || *m > qb(n as u64) {
        return Err(out_of_region(format!("M={m} outside [1, N={n}]")));
    }
    let (t, numeric) = feedback_t_from_m(k, l, n, m)?;
    let mut p = feedback_at_t(k, l, n, &t)?;
    p.numeric = numeric;
    if numeric {
        p.memory = m.clone();
    }
    Ok(p)
}

/// Per-level delay and key-storage series of the decentralized scheme.
fn decentralized_series(k: usize, l: usize, cache_prob: &Q) -> (Q, Q) {
    let one = Q::one();
    let mut delay = Q::zero();
    let mut m_k = Q::zero();
    for s in 1..=k {
        let d = (s + l - 1).min(k);
        let w =
            pow(cache_prob, s - 1) * pow(&(&one - cache_prob), k - s + 1) / qb(binom(k - s, d - s));
        let reps = qb(binom(d - 1, s - 1));
        delay += qb(binom(k, d)) * &reps * &w;
        m_k += qb(binom(k - 1, d - 1)) * &reps * &w;
    }
    (delay, m_k)
}

pub fn decentralized_delay(k: usize, l: usize, cache_prob: &Q) -> Q {
    decentralized_series(k, l, cache_prob).0
}

pub fn decentralized_key_storage(k: usize, l: usize, cache_prob: &Q) -> Q {
    decentralized_series(k, l, cache_prob).1
}

fn decentralized_key_storage_f64(k: usize, l: usize, x: f64) -> f64 {
    (1..=k)
        .map(|s| {
            let d = (s + l - 1).min(k);
            binom(k - 1, d - 1) as f64 * binom(d - 1, s - 1) as f64 / binom(k - s, d - s) as f64
                * x.powi(s as i32 - 1)
                * (1.0 - x).powi((k - s + 1) as i32)
        })
        .sum()
}

pub fn decentralized_at_q(k: usize, l: usize, n: usize, cache_prob: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    if cache_prob.is_negative() || *cache_prob > Q::one() {
        return Err(out_of_region(format!(
            "cache probability {cache_prob} outside [0, 1]"
        )));
    }
    let (delay, m_k) = decentralized_series(k, l, cache_prob);
    let m_d = qb(n as u64) * cache_prob;
    let memory = &m_d + &m_k;
    let q_insecure = &memory / qb(n as u64);
    let delay_insecure = if q_insecure >= Q::one() {
        Q::zero()
    } else {
        decentralized_delay(k, l, &q_insecure)
    };
    Ok(FormulaPoint {
        kind: SchemeKind::Decentralized,
        users: k,
        streams: l,
        files: n,
        delay,
        delay_insecure,
        m_d,
        m_k,
        memory,
        param: cache_prob.clone(),
        numeric: false,
        dof: l.min(k),
        region_ok: true,
    })
}

pub fn decentralized_at_m(k: usize, l: usize, n: usize, m: &Q) -> Result<FormulaPoint> {
    check_dims(k, l, n)?;
    let sol = solve_cache_prob(k, l, n, m)?;
    let mut p = decentralized_at_q(k, l, n, &sol.cache_prob)?;
    if !sol.exact {
        p.numeric = true;
        p.memory = m.clone();
    }
    Ok(p)
}

/// Secure single-stream decentralized row, evaluated as printed:
/// min{(N-1)/(K(M-1)) (1 - (1-p)^K), 1} K(1-p) with p = (M-1)/(N-1).
pub fn single_stream_decentralized(k: usize, n: usize, m: &Q) -> Q {
    let p = (m - Q::one()) / qb(n as u64 - 1);
    let kk = qb(k as u64);
    let base = &kk * (Q::one() - &p);
    if p.is_zero() {
        return base;
    }
    let factor = (Q::one() - pow(&(Q::one() - &p), k)) / (&kk * &p);
    factor.min(Q::one()) * base
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheProbSolution {
    pub cache_prob: Q,
    /// The returned value satisfies the memory equation exactly.
    pub exact: bool,
    /// Every root bracketed on the probe grid, ascending.
    pub roots: Vec<f64>,
}

pub const CACHE_PROB_TOL: f64 = 1e-12;
const PROBE_POINTS: usize = 2000;
const SNAP_DENOMINATOR: i64 = 1000;

/// Finds the caching probability q with N q + M_K(q) = M.
pub fn solve_cache_prob(k: usize, l: usize, n: usize, m: &Q) -> Result<CacheProbSolution> {
    check_dims(k, l, n)?;
    let nn = qb(n as u64);
    if *m <= Q::one() || *m > nn {
        return Err(Error::NoRoot(format!("M={m} outside (1, N={n}]")));
    }
    let g_exact = |x: &Q| &nn * x + decentralized_key_storage(k, l, x) - m;
    if *m == nn {
        return Ok(CacheProbSolution {
            cache_prob: Q::one(),
            exact: true,
            roots: vec![1.0],
        });
    }
    let (nf, mf) = (n as f64, to_f64(m));
    let g = |x: f64| nf * x + decentralized_key_storage_f64(k, l, x) - mf;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_g = g(prev_x);
    for i in 1..=PROBE_POINTS {
        let x = i as f64 / PROBE_POINTS as f64;
        let gx = g(x);
        if gx == 0.0 {
            roots.push(x);
        } else if prev_g != 0.0 && prev_g.signum() != gx.signum() {
            let (mut lo, mut hi, mut glo) = (prev_x, x, prev_g);
            while hi - lo > CACHE_PROB_TOL {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_g = gx;
    }
    let Some(&best) = roots.first() else {
        return Err(Error::NoRoot(format!(
            "g(q) keeps one sign on (0,1] for M={m}"
        )));
    };
    for den in 1..=SNAP_DENOMINATOR {
        let num = (best * den as f64).round() as i64;
        if (num as f64 / den as f64 - best).abs() > 1e-9 {
            continue;
        }
        let cand = q(num, den);
        if g_exact(&cand).is_zero() {
            return Ok(CacheProbSolution {
                cache_prob: cand,
                exact: true,
                roots,
            });
        }
    }
    Ok(CacheProbSolution {
        cache_prob: Q::from_f64(best).expect("finite"),
        exact: false,
        roots,
    })
}

/// Evaluates any scheme from any of its cache parameterisations.
pub fn formula_point(
    kind: SchemeKind,
    k: usize,
    l: usize,
    n: usize,
    input: &CacheInput,
) -> Result<FormulaPoint> {
    match (kind, input) {
        (SchemeKind::Mt, CacheInput::T(t)) => mt_at_t(k, l, n, t),
        (SchemeKind::Mt, CacheInput::M(m)) => mt_at_m(k, l, n, m),
        (SchemeKind::Grouped, CacheInput::T(t)) => grouped_at_t(k, l, n, t),
        (SchemeKind::Grouped, CacheInput::M(m)) => grouped_at_m(k, l, n, m),
        (SchemeKind::Feedback, CacheInput::T(t)) => feedback_at_t(k, l, n, t),
        (SchemeKind::Feedback, CacheInput::M(m)) => feedback_at_m(k, l, n, m),
        (SchemeKind::Decentralized, CacheInput::Prob(p)) => decentralized_at_q(k, l, n, p),
        (SchemeKind::Decentralized, CacheInput::M(m)) => decentralized_at_m(k, l, n, m),
        (kind, input) => Err(Error::InvalidParams(format!(
            "{kind} cannot be parameterised by {input:?}"
        ))),
    }
}
