use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::scalar::Scalar;
use crate::words::{low_mask, Source, Word};

/// Longest string length enumerated exhaustively.
pub const ENUMERATION_MAX_LETTERS: usize = 22;

const CHUNK_BITS: usize = 14;

fn check_length(letters: usize) -> Result<()> {
    if letters > ENUMERATION_MAX_LETTERS {
        return Err(Error::resource(format!(
            "exhaustive enumeration capped at {ENUMERATION_MAX_LETTERS} letters, got {letters}"
        )));
    }
    Ok(())
}

/// Splits `0..2^len` into chunks and folds each string code with `f` into
/// a per-chunk accumulator, merged afterwards by `merge`.
fn fold_strings<A, I, F>(exec: Exec, len: usize, init: I, f: F, merge: impl Fn(&mut A, A)) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) + Sync + Send,
{
    let chunk_bits = CHUNK_BITS.min(len);
    let chunks = 1usize << (len - chunk_bits);
    let parts = par::map_range(exec, 0..chunks, |c| {
        let mut acc = init();
        let base = (c as u64) << chunk_bits;
        for s in 0..(1u64 << chunk_bits) {
            f(&mut acc, base | s);
        }
        acc
    });
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// Weight `p^{len-j} q^j` for every possible number `j` of `b` letters.
fn weights<T: Scalar>(src: &Source, len: usize) -> Vec<T> {
    (0..=len as u32).map(|j| src.pro_counts::<T>(len as u32 - j, j)).collect()
}

/// Profile value of one string code of `n + k - 1` letters (first letter
/// in the most significant bit), using a caller-provided zeroed table.
fn profile_of(code: u64, n: usize, k: usize, table: &mut [u8]) -> u64 {
    let len = n + k - 1;
    let mask = low_mask(k);
    let window = |j: usize| ((code >> (len - k - j)) & mask) as usize;
    let mut x = 0;
    for j in 0..n {
        let slot = &mut table[window(j)];
        if *slot < 2 {
            x += u64::from(*slot == 1);
            *slot += 1;
        }
    }
    for j in 0..n {
        table[window(j)] = 0;
    }
    x
}

/// `Var(X_{n,k})` over all `2^{n+k-1}` strings. Integer sums of `X` and
/// `X^2` are grouped by the number of `b` letters and weighted at the end,
/// so the rational result is exact.
pub fn exact_variance_enumeration<T: Scalar>(n: usize, k: usize, src: &Source, exec: Exec) -> Result<T> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let len = n + k - 1;
    check_length(len)?;
    type Acc = (Vec<u128>, Vec<u128>, Vec<u8>);
    let (sx, sx2, _) = fold_strings(
        exec,
        len,
        || -> Acc { (vec![0; len + 1], vec![0; len + 1], vec![0; 1 << k]) },
        |acc, code| {
            let x = profile_of(code, n, k, &mut acc.2) as u128;
            let j = code.count_ones() as usize;
            acc.0[j] += x;
            acc.1[j] += x * x;
        },
        |total, part| {
            for j in 0..=len {
                total.0[j] += part.0[j];
                total.1[j] += part.1[j];
            }
        },
    );
    let w = weights::<T>(src, len);
    let mean = T::sum_iter((0..=len).map(|j| w[j].clone() * T::from_u128(sx[j])));
    let second = T::sum_iter((0..=len).map(|j| w[j].clone() * T::from_u128(sx2[j])));
    Ok(second - mean.clone() * mean)
}

/// Joint class table `t[i][j] = P(U = i, V = j)` over strings of
/// `n_letters`, where `U`, `V` count (overlapping) occurrences of `u` and
/// `v` capped at two. Without `v` all mass sits in column `0`.
pub fn enumerate_class_table<T: Scalar>(u: &Word, v: Option<&Word>, n_letters: usize, src: &Source) -> Result<[[T; 3]; 3]> {
    check_length(n_letters)?;
    let k = u.len();
    if let Some(v) = v {
        if v.len() != k || v == u {
            return Err(Error::domain("class table needs two distinct words of equal length"));
        }
    }
    let mask = low_mask(k);
    let (cu, cv) = (u.code(), v.map(|w| w.code()));
    let len = n_letters;
    let counts = fold_strings(
        Exec::Sequential,
        len,
        || vec![[[0u64; 3]; 3]; len + 1],
        |acc, code| {
            let (mut a, mut b) = (0usize, 0usize);
            if len >= k {
                for j in 0..=len - k {
                    let win = (code >> (len - k - j)) & mask;
                    a += usize::from(win == cu);
                    b += usize::from(Some(win) == cv);
                }
            }
            acc[code.count_ones() as usize][a.min(2)][b.min(2)] += 1;
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(part) {
                for i in 0..3 {
                    for j in 0..3 {
                        t[i][j] += p[i][j];
                    }
                }
            }
        },
    );
    let w = weights::<T>(src, len);
    let mut table: [[T; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    for (nb, c) in counts.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                if c[i][j] > 0 {
                    table[i][j] = table[i][j].clone() + w[nb].clone() * T::from_u128(c[i][j] as u128);
                }
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn src(p: f64) -> Source {
        Source::new(p).unwrap()
    }

    #[test]
    fn variance_examples() {
        let v: BigRational = exact_variance_enumeration(2, 1, &src(0.7), Exec::Sequential).unwrap();
        assert_eq!(v, "609/2500".parse().unwrap());
        let v: f64 = exact_variance_enumeration(2, 1, &src(0.6), Exec::Sequential).unwrap();
        assert!((v - 0.2496).abs() < 1e-15);
        for k in 1..5 {
            let v: BigRational = exact_variance_enumeration(1, k, &src(0.7), Exec::Sequential).unwrap();
            assert_eq!(v, BigRational::from_integer(0.into()));
        }
        assert!(matches!(
            exact_variance_enumeration::<f64>(20, 4, &src(0.7), Exec::Sequential),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn hand_formula_for_single_letters() {
        // Var = p^2(1-p^2) + q^2(1-q^2) - 2 p^2 q^2 for n = 2, k = 1
        for p in [0.55, 0.6, 0.7, 0.9] {
            let q = 1.0 - p;
            let hand = p * p * (1.0 - p * p) + q * q * (1.0 - q * q) - 2.0 * p * p * q * q;
            let v: f64 = exact_variance_enumeration(2, 1, &src(p), Exec::Auto).unwrap();
            assert!((v - hand).abs() < 1e-14);
        }
    }

    #[test]
    fn parallel_and_sequential_agree_exactly() {
        let a: BigRational = exact_variance_enumeration(14, 3, &src(0.7), Exec::Auto).unwrap();
        let b: BigRational = exact_variance_enumeration(14, 3, &src(0.7), Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_table_examples() {
        let (a, b): (Word, Word) = ("a".parse().unwrap(), "b".parse().unwrap());
        let t: [[f64; 3]; 3] = enumerate_class_table(&a, Some(&b), 2, &src(0.7)).unwrap();
        assert!((t[1][1] - 0.42).abs() < 1e-15);
        assert_eq!(t[0][0], 0.0);
        let ab: Word = "ab".parse().unwrap();
        let t: [[BigRational; 3]; 3] = enumerate_class_table(&ab, None, 2, &src(0.7)).unwrap();
        assert_eq!(t[0][0], "79/100".parse().unwrap());
    }
}
