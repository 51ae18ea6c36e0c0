//! Binary words, their probabilities under a memoryless source, and the
//! overlap structure (correlation polynomials) between pairs of words.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Scalar;

/// Longest word representable in one machine word.
pub const MAX_WORD_LEN: usize = 64;

/// Largest `k` for which operations may enumerate all of `A^k`.
pub const WORD_ENUMERATION_CAP: usize = 12;

/// Largest `k` for which operations may loop over all ordered pairs of `A^k`.
pub const PAIR_ENUMERATION_CAP: usize = 8;

/// Largest `k` accepted by [`correlation_decay_sums`], whose pair sum is
/// organised by overlap lengths and costs `O(2^k k^2)`.
pub const DECAY_SUM_CAP: usize = 20;

/// Memoryless binary source emitting `a` with probability `p` and `b` with
/// probability `q = 1 - p`, with `p > q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    p: f64,
    q: f64,
}

impl Source {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::domain(format!("letter probability p = {p} must satisfy 1/2 < p < 1")));
        }
        Ok(Source { p, q: 1.0 - p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `(p, q)` in the requested field; `q` is computed as `1 - p` there.
    pub fn probs<T: Scalar>(&self) -> (T, T) {
        let p = T::from_prob(self.p);
        let q = T::one() - p.clone();
        (p, q)
    }

    /// Probability of a specific word with `a_count` letters `a` and
    /// `b_count` letters `b`.
    pub fn pro_counts<T: Scalar>(&self, a_count: u32, b_count: u32) -> T {
        let (p, q) = self.probs::<T>();
        p.powi(a_count) * q.powi(b_count)
    }

    pub fn pro_counts_f64(&self, a_count: u32, b_count: u32) -> f64 {
        self.p.powi(a_count as i32) * self.q.powi(b_count as i32)
    }
}

/// The probabilistic model: source, number of suffixes `n`, level `k`
/// and the ratio `alpha = k / ln n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub source: Source,
    pub n: u64,
    pub k: usize,
    /// Nominal `alpha`. When built from `(n, alpha)` this is the requested
    /// value, otherwise `k / ln n`.
    pub alpha: f64,
}

impl ModelParams {
    /// Derives `k = round(alpha ln n)`, which must be at least one.
    pub fn from_alpha(p: f64, alpha: f64, n: u64) -> Result<Self> {
        let source = Source::new(p)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha = {alpha} must be positive")));
        }
        if n < 1 {
            return Err(Error::domain("n must be at least 1"));
        }
        let k = (alpha * (n as f64).ln()).round();
        if k < 1.0 {
            return Err(Error::domain(format!(
                "k = round(alpha ln n) = {k} for alpha = {alpha}, n = {n}; need k >= 1"
            )));
        }
        let k = k as usize;
        if k > MAX_WORD_LEN {
            return Err(Error::resource(format!("k = {k} exceeds {MAX_WORD_LEN}")));
        }
        Ok(ModelParams { source, n, k, alpha })
    }

    pub fn from_k(p: f64, n: u64, k: usize) -> Result<Self> {
        let source = Source::new(p)?;
        if n < 1 || k < 1 {
            return Err(Error::domain("n and k must be at least 1"));
        }
        if k > MAX_WORD_LEN {
            return Err(Error::resource(format!("k = {k} exceeds {MAX_WORD_LEN}")));
        }
        let alpha = if n >= 2 { k as f64 / (n as f64).ln() } else { f64::INFINITY };
        Ok(ModelParams { source, n, k, alpha })
    }

    /// `k / ln n` for the integer `k` actually used. Asymptotic kernels are
    /// evaluated with this value so that `n^{h(s)}` is exactly
    /// `n^{-s} (p^{-s} + q^{-s})^k`.
    pub fn alpha_eff(&self) -> f64 {
        if self.n >= 2 {
            self.k as f64 / (self.n as f64).ln()
        } else {
            f64::INFINITY
        }
    }

    pub fn p(&self) -> f64 {
        self.source.p()
    }

    pub fn q(&self) -> f64 {
        self.source.q()
    }
}

/// A binary word of length `1..=64`, packed one bit per letter.
/// The first letter sits in the most significant used bit; `a` is `0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bits: u64,
    len: u8,
}

#[inline]
pub(crate) fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl Word {
    pub fn from_code(code: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_WORD_LEN {
            return Err(Error::domain(format!("word length {len} outside 1..=64")));
        }
        Ok(Word {
            bits: code & low_mask(len),
            len: len as u8,
        })
    }

    pub(crate) fn from_code_unchecked(code: u64, len: usize) -> Self {
        debug_assert!((1..=MAX_WORD_LEN).contains(&len));
        Word {
            bits: code & low_mask(len),
            len: len as u8,
        }
    }

    /// All `2^len` words of the given length in code order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = Word>> {
        if len == 0 || len > 24 {
            return Err(Error::resource(format!("refusing to enumerate A^{len}")));
        }
        Ok((0..(1u64 << len)).map(move |c| Word::from_code_unchecked(c, len)))
    }

    pub fn code(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `true` for `b` at position `i` (0-based from the left).
    pub fn is_b(&self, i: usize) -> bool {
        (self.bits >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn count_b(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn count_a(&self) -> u32 {
        self.len as u32 - self.count_b()
    }

    /// Code of the length-`l` suffix (0 for `l = 0`).
    #[inline]
    pub(crate) fn suffix_code(&self, l: usize) -> u64 {
        self.bits & low_mask(l)
    }

    /// Code of the length-`l` prefix (0 for `l = 0`).
    #[inline]
    pub(crate) fn prefix_code(&self, l: usize) -> u64 {
        if l == 0 {
            0
        } else {
            self.bits >> (self.len() - l)
        }
    }

    pub fn prefix(&self, l: usize) -> Result<Word> {
        Word::from_code(self.prefix_code(l), l)
    }

    pub fn suffix(&self, l: usize) -> Result<Word> {
        Word::from_code(self.suffix_code(l), l)
    }

    /// Letters `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Word> {
        if start >= end || end > self.len() {
            return Err(Error::domain(format!("slice {start}..{end} of a length-{} word", self.len())));
        }
        Word::from_code(self.prefix_code(end), end - start)
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        let len = self.len() + other.len();
        if len > MAX_WORD_LEN {
            return Err(Error::resource(format!("concatenation of length {len}")));
        }
        Word::from_code((self.bits << other.len()) | other.bits, len)
    }

    /// `(#a, #b)` in the suffix of length `l`.
    pub(crate) fn suffix_counts(&self, l: usize) -> (u32, u32) {
        let b = self.suffix_code(l).count_ones();
        (l as u32 - b, b)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.is_b(i) { "b" } else { "a" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::domain("empty word"));
        }
        if s.len() > MAX_WORD_LEN {
            return Err(Error::resource(format!("word of length {} exceeds {MAX_WORD_LEN}", s.len())));
        }
        let mut code = 0u64;
        for ch in s.chars() {
            code = (code << 1)
                | match ch {
                    'a' | 'A' => 0,
                    'b' | 'B' => 1,
                    other => return Err(Error::domain(format!("letter {other:?} is not in {{a, b}}"))),
                };
        }
        Word::from_code(code, s.len())
    }
}

/// `pro(u) = p^{#a} q^{#b}`.
pub fn pro<T: Scalar>(u: &Word, src: &Source) -> T {
    src.pro_counts(u.count_a(), u.count_b())
}

pub fn pro_f64(u: &Word, src: &Source) -> f64 {
    src.pro_counts_f64(u.count_a(), u.count_b())
}

/// Correlation polynomials share the dense polynomial representation.
pub type CorrelationPolynomial<T = f64> = Poly<T>;

/// Overlap lengths `l >= 1` for which the length-`l` suffix of `u` equals
/// the length-`l` prefix of `v`, ascending.
pub fn overlap_lengths(u: &Word, v: &Word) -> impl Iterator<Item = usize> {
    let max = u.len().min(v.len());
    let (u, v) = (*u, *v);
    (1..=max).filter(move |&l| u.suffix_code(l) == v.prefix_code(l))
}

/// Probability-weighted correlation polynomial `C_{u,v}(z)`: one term
/// `pro(v_{l+1..|v|}) z^{|v|-l}` per overlap length `l`.
pub fn correlation_poly<T: Scalar>(u: &Word, v: &Word, src: &Source) -> CorrelationPolynomial<T> {
    let vlen = v.len();
    let mut coeffs = vec![T::zero(); vlen];
    for l in overlap_lengths(u, v) {
        let (a, b) = v.suffix_counts(vlen - l);
        let power = vlen - l;
        coeffs[power] = coeffs[power].clone() + src.pro_counts::<T>(a, b);
    }
    Poly::new(coeffs)
}

/// `C_{u,v}(1)` without building the polynomial.
pub fn correlation_at_one(u: &Word, v: &Word, src: &Source) -> f64 {
    let vlen = v.len();
    overlap_lengths(u, v)
        .map(|l| {
            let (a, b) = v.suffix_counts(vlen - l);
            src.pro_counts_f64(a, b)
        })
        .sum()
}

/// Decomposition `u = sigma w`, `v = w theta` with `|sigma| = |theta| = ell`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapDecomposition {
    pub sigma: Word,
    pub w: Word,
    pub theta: Word,
    pub ell: usize,
    /// Number of `a` letters in `sigma`.
    pub i: u32,
    /// Number of `a` letters in `theta`.
    pub j: u32,
    pub r: f64,
    pub c: f64,
    pub d: f64,
}

fn check_distinct_pair(u: &Word, v: &Word) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::domain(format!("words of unequal length {} and {}", u.len(), v.len())));
    }
    if u == v {
        return Err(Error::domain(format!("pair requires distinct words, got {u} twice")));
    }
    Ok(())
}

/// Longest proper overlap of `u` into `v`, if any.
pub fn maximal_overlap(u: &Word, v: &Word) -> Result<Option<OverlapDecomposition>> {
    check_distinct_pair(u, v)?;
    let k = u.len();
    let Some(wlen) = (1..k).rev().find(|&l| u.suffix_code(l) == v.prefix_code(l)) else {
        return Ok(None);
    };
    let ell = k - wlen;
    let sigma = u.prefix(ell)?;
    let w = u.suffix(wlen)?;
    let theta = v.suffix(ell)?;
    let (i, j) = (sigma.count_a(), theta.count_a());
    Ok(Some(OverlapDecomposition {
        sigma,
        w,
        theta,
        ell,
        i,
        j,
        r: ell as f64 / k as f64,
        c: i as f64 / ell as f64,
        d: j as f64 / ell as f64,
    }))
}

/// Pairwise overlap statistics entering the mid-level variance estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairStats {
    /// `pro(u) + pro(v)`
    pub p_uv: f64,
    /// `pro(u) C_{u,v}(1) + pro(v) C_{v,u}(1)`
    pub theta_uv: f64,
    /// `(2k - 1) pro(u) pro(v)`
    pub k_uv: f64,
    /// `pro(sigma) + pro(theta)` of the maximal overlap, when one exists.
    pub q_st: Option<f64>,
    /// `pro(sigma) pro(theta)` of the maximal overlap, when one exists.
    pub t_st: Option<f64>,
}

pub fn pair_stats(u: &Word, v: &Word, src: &Source) -> Result<PairStats> {
    check_distinct_pair(u, v)?;
    let (pu, pv) = (pro_f64(u, src), pro_f64(v, src));
    let k = u.len() as f64;
    let overlap = maximal_overlap(u, v)?;
    let (q_st, t_st) = match overlap {
        Some(o) => {
            let (ps, pt) = (pro_f64(&o.sigma, src), pro_f64(&o.theta, src));
            (Some(ps + pt), Some(ps * pt))
        }
        None => (None, None),
    };
    Ok(PairStats {
        p_uv: pu + pv,
        theta_uv: pu * correlation_at_one(u, v, src) + pv * correlation_at_one(v, u, src),
        k_uv: (2.0 * k - 1.0) * pu * pv,
        q_st,
        t_st,
    })
}

/// The two overlap sums bounding the self- and cross-correlation mass:
/// `sum_u pro(u)(C_{u,u}(1) - 1)` and
/// `sum_{u != v} pro(u) C_{u,v}(1) C_{v,u}(1)`, both exact.
///
/// The pair sum is reorganised by the two overlap lengths `(l, m)`: for a
/// fixed `u` the admissible `v` are either determined uniquely (`l + m > k`)
/// or have a free middle block whose probabilities sum to one.
pub fn correlation_decay_sums(k: usize, src: &Source) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if k > DECAY_SUM_CAP {
        return Err(Error::resource(format!("correlation sums capped at k <= {DECAY_SUM_CAP}, got {k}")));
    }
    let pw = |a: u32, b: u32| src.pro_counts_f64(a, b);
    let counts = |code: u64, len: usize| {
        let b = (code & low_mask(len)).count_ones();
        (len as u32 - b, b)
    };
    let mut self_sum = Vec::with_capacity(1 << k);
    let mut cross_sum = Vec::with_capacity(1 << k);
    for code in 0..(1u64 << k) {
        let u = Word::from_code_unchecked(code, k);
        let (ua, ub) = (u.count_a(), u.count_b());
        let pu = pw(ua, ub);

        let mut s = 0.0;
        for l in 1..k {
            if u.suffix_code(l) == u.prefix_code(l) {
                let (a, b) = u.suffix_counts(k - l);
                s += pw(a, b);
            }
        }
        self_sum.push(pu * s);

        let mut c = 0.0;
        for l in 1..k {
            // v starts with the length-l suffix of u
            let head = u.suffix_code(l);
            for m in 1..k {
                // v ends with the length-m prefix of u
                let tail = u.prefix_code(m);
                let (ta, tb) = u.suffix_counts(k - m);
                let pro_u_tail = pw(ta, tb);
                if l + m <= k {
                    let (ba, bb) = counts(tail, m);
                    let mut mass = pw(ba, bb);
                    let v_equals_u_possible = u.prefix_code(l) == head && u.suffix_code(m) == tail;
                    if v_equals_u_possible {
                        // exclude v = u: its tail after the first l letters
                        let (xa, xb) = u.suffix_counts(k - l);
                        mass -= pw(xa, xb);
                    }
                    c += pu * mass * pro_u_tail;
                } else {
                    let shared = l + m - k;
                    // letters k-m..l of v are fixed by both constraints
                    let from_head = head & low_mask(l - (k - m));
                    let from_tail = tail >> (m - shared);
                    if from_head != from_tail {
                        continue;
                    }
                    let v_code = (head << (k - l)) | (tail & low_mask(k - l));
                    if v_code == code {
                        continue;
                    }
                    let (va, vb) = counts(v_code, k - l);
                    c += pu * pw(va, vb) * pro_u_tail;
                }
            }
        }
        cross_sum.push(c);
    }
    Ok((
        crate::scalar::neumaier_sum(self_sum),
        crate::scalar::neumaier_sum(cross_sum),
    ))
}
