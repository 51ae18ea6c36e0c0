use crate::error::{Error, Result};
use crate::words::{low_mask, Word, MAX_WORD_LEN};

/// Largest `k` whose k-gram counts live in a direct table of `2^k` bytes.
pub const DIRECT_TABLE_MAX_K: usize = 22;

/// A binary text packed 64 letters per machine word; letter `i` is bit
/// `i % 64` of word `i / 64` and `b` is `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Text {
    words: Vec<u64>,
    len: usize,
}

impl Text {
    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() * 64 < len {
            return Err(Error::domain(format!("{} words cannot hold {len} letters", words.len())));
        }
        let mut t = Text { words, len };
        t.words.truncate(len.div_ceil(64));
        if !len.is_multiple_of(64) {
            if let Some(last) = t.words.last_mut() {
                *last &= low_mask(len % 64);
            }
        }
        Ok(t)
    }

    /// Reuses the buffer for a text of `len` letters filled by `fill`,
    /// which receives the number of words to produce.
    pub fn refill(&mut self, len: usize, fill: impl FnOnce(&mut [u64])) {
        let nw = len.div_ceil(64);
        self.words.clear();
        self.words.resize(nw, 0);
        fill(&mut self.words);
        self.len = len;
        if !len.is_multiple_of(64) {
            self.words[nw - 1] &= low_mask(len % 64);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn letter(&self, i: usize) -> u64 {
        (self.words[i >> 6] >> (i & 63)) & 1
    }

    /// Calls `f` with the codes of the first `n` windows of length `k`.
    /// Requires `n + k - 1 <= len`.
    #[inline]
    pub(crate) fn for_each_window(&self, k: usize, n: usize, mut f: impl FnMut(u64)) {
        debug_assert!(n + k - 1 <= self.len);
        let mask = low_mask(k);
        let mut code = 0u64;
        for i in 0..k - 1 {
            code = (code << 1) | self.letter(i);
        }
        for i in k - 1..k - 1 + n {
            code = ((code << 1) | self.letter(i)) & mask;
            f(code);
        }
    }

    /// Codes of the `len - k + 1` sliding windows of length `k`, in order,
    /// each in the same bit layout as [`Word`].
    pub fn kgram_codes(&self, k: usize) -> impl Iterator<Item = u64> + '_ {
        let mask = low_mask(k);
        let mut code = 0u64;
        (0..self.len).filter_map(move |i| {
            code = ((code << 1) | self.letter(i)) & mask;
            (i + 1 >= k).then_some(code)
        })
    }
}

impl From<&Word> for Text {
    fn from(w: &Word) -> Self {
        let mut words = vec![0u64; w.len().div_ceil(64)];
        for i in 0..w.len() {
            if w.is_b(i) {
                words[i >> 6] |= 1 << (i & 63);
            }
        }
        Text { words, len: w.len() }
    }
}

impl std::str::FromStr for Text {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut words = vec![0u64; s.len().div_ceil(64)];
        for (i, ch) in s.chars().enumerate() {
            match ch {
                'a' | 'A' => {}
                'b' | 'B' => words[i >> 6] |= 1 << (i & 63),
                other => return Err(Error::domain(format!("letter {other:?} is not in {{a, b}}"))),
            }
        }
        Ok(Text { words, len: s.len() })
    }
}

enum Table {
    /// Saturating counts indexed by code.
    Direct(Vec<u8>),
    /// Open addressing; a slot is live iff its stamp equals the epoch.
    Hashed {
        keys: Vec<u64>,
        counts: Vec<u8>,
        stamps: Vec<u32>,
        shift: u32,
        epoch: u32,
    },
}

/// Reusable scratch space counting k-grams that occur at least twice.
pub struct ProfileCounter {
    k: usize,
    table: Table,
}

impl ProfileCounter {
    /// Scratch for `k`-grams over texts with up to `max_windows` windows.
    pub fn new(k: usize, max_windows: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        if k > MAX_WORD_LEN {
            return Err(Error::resource(format!("k = {k} exceeds {MAX_WORD_LEN}")));
        }
        let table = if k <= DIRECT_TABLE_MAX_K {
            Table::Direct(vec![0; 1 << k])
        } else {
            let cap = (2 * max_windows.max(8)).next_power_of_two();
            Table::Hashed {
                keys: vec![0; cap],
                counts: vec![0; cap],
                stamps: vec![0; cap],
                shift: 64 - cap.trailing_zeros(),
                epoch: 0,
            }
        };
        Ok(ProfileCounter { k, table })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `X_{n,k}`: distinct k-grams among the first `n` windows of `text`
    /// that occur at least twice.
    pub fn count(&mut self, text: &Text, n: usize) -> Result<u64> {
        let k = self.k;
        if text.len() < n + k - 1 {
            return Err(Error::domain(format!(
                "text of length {} has fewer than n + k - 1 = {} letters",
                text.len(),
                n + k - 1
            )));
        }
        let mut repeated = 0u64;
        match &mut self.table {
            Table::Direct(t) => {
                text.for_each_window(k, n, |c| {
                    let slot = &mut t[c as usize];
                    let v = *slot;
                    repeated += u64::from(v == 1);
                    *slot = (v + 1).min(2);
                });
                if 4 * n >= t.len() {
                    t.fill(0);
                } else {
                    text.for_each_window(k, n, |c| t[c as usize] = 0);
                }
            }
            Table::Hashed {
                keys,
                counts,
                stamps,
                shift,
                epoch,
            } => {
                if 2 * n > keys.len() {
                    let cap = (2 * n).next_power_of_two();
                    *keys = vec![0; cap];
                    *counts = vec![0; cap];
                    *stamps = vec![0; cap];
                    *shift = 64 - cap.trailing_zeros();
                    *epoch = 0;
                }
                *epoch = epoch.wrapping_add(1);
                if *epoch == 0 {
                    stamps.fill(0);
                    *epoch = 1;
                }
                let mask = keys.len() - 1;
                text.for_each_window(k, n, |c| {
                    let mut slot = (c.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> *shift) as usize;
                    loop {
                        if stamps[slot] != *epoch {
                            stamps[slot] = *epoch;
                            keys[slot] = c;
                            counts[slot] = 1;
                            break;
                        }
                        if keys[slot] == c {
                            if counts[slot] == 1 {
                                repeated += 1;
                                counts[slot] = 2;
                            }
                            break;
                        }
                        slot = (slot + 1) & mask;
                    }
                });
            }
        }
        Ok(repeated)
    }
}

/// `X_{n,k}` of a text with exactly `n + k - 1` letters.
pub fn count_profile(s: &Text, n: usize, k: usize) -> Result<u64> {
    if k > MAX_WORD_LEN {
        return Err(Error::resource(format!("k = {k} exceeds {MAX_WORD_LEN}")));
    }
    if n == 0 || s.len() != n + k - 1 {
        return Err(Error::domain(format!(
            "text length {} must equal n + k - 1 = {} with n >= 1",
            s.len(),
            (n + k).saturating_sub(1)
        )));
    }
    ProfileCounter::new(k, n)?.count(s, n)
}
