use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::words::{Source, Word};

/// Aho-Corasick automaton over `{a, b}` for one or two patterns, with
/// complete transitions.
#[derive(Clone, Debug)]
pub struct Automaton {
    next: Vec<[usize; 2]>,
    /// Bit `i` set when pattern `i` ends at this state.
    out: Vec<u8>,
}

impl Automaton {
    pub fn new(patterns: &[Word]) -> Self {
        const NONE: usize = usize::MAX;
        let mut next: Vec<[usize; 2]> = vec![[NONE; 2]];
        let mut out = vec![0u8];
        for (pi, w) in patterns.iter().enumerate() {
            let mut s = 0;
            for i in 0..w.len() {
                let c = usize::from(w.is_b(i));
                if next[s][c] == NONE {
                    next.push([NONE; 2]);
                    out.push(0);
                    next[s][c] = next.len() - 1;
                }
                s = next[s][c];
            }
            out[s] |= 1 << pi;
        }
        let mut fail = vec![0usize; next.len()];
        let mut queue = VecDeque::new();
        for c in 0..2 {
            match next[0][c] {
                NONE => next[0][c] = 0,
                t => queue.push_back(t),
            }
        }
        while let Some(s) = queue.pop_front() {
            out[s] |= out[fail[s]];
            for c in 0..2 {
                let f = next[fail[s]][c];
                match next[s][c] {
                    NONE => next[s][c] = f,
                    t => {
                        fail[t] = f;
                        queue.push_back(t);
                    }
                }
            }
        }
        Automaton { next, out }
    }

    pub fn states(&self) -> usize {
        self.next.len()
    }

    pub fn step(&self, state: usize, letter_is_b: bool) -> usize {
        self.next[state][usize::from(letter_is_b)]
    }

    /// Patterns ending after entering `state`, as a bit set.
    pub fn output(&self, state: usize) -> u8 {
        self.out[state]
    }
}

/// Joint distribution of occurrence classes `{0, 1, >= 2}` of one or two
/// words in the first `n_letters` letters.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution<T> {
    pub n_letters: usize,
    pub u: Word,
    pub v: Option<Word>,
    /// `table[i][j] = P(U = i, V = j)`; column `0` only when `v` is absent.
    pub table: [[T; 3]; 3],
}

impl<T: Scalar> ExactDistribution<T> {
    pub fn marginal_u(&self) -> [T; 3] {
        std::array::from_fn(|i| T::sum_iter(self.table[i].iter().cloned()))
    }

    pub fn marginal_v(&self) -> [T; 3] {
        std::array::from_fn(|j| T::sum_iter(self.table.iter().map(|row| row[j].clone())))
    }

    pub fn total(&self) -> T {
        T::sum_iter(self.table.iter().flatten().cloned())
    }
}

/// Probability-weighted run of the automaton of `{u}` or `{u, v}` over
/// `n_letters` letters, tracking occurrence counts capped at two.
pub fn joint_occurrence_dp<T: Scalar>(u: &Word, v: Option<&Word>, n_letters: usize, src: &Source) -> Result<ExactDistribution<T>> {
    let mut patterns = vec![*u];
    if let Some(v) = v {
        if v.len() != u.len() {
            return Err(Error::domain("words of unequal length"));
        }
        if v == u {
            return Err(Error::domain(format!("joint occurrences need distinct words, got {u} twice")));
        }
        patterns.push(*v);
    }
    let aut = Automaton::new(&patterns);
    let (p, q) = src.probs::<T>();
    let zero_table = || -> [[T; 3]; 3] { std::array::from_fn(|_| std::array::from_fn(|_| T::zero())) };
    let mut dist: Vec<[[T; 3]; 3]> = (0..aut.states()).map(|_| zero_table()).collect();
    dist[0][0][0] = T::one();
    for _ in 0..n_letters {
        let mut next: Vec<[[T; 3]; 3]> = (0..aut.states()).map(|_| zero_table()).collect();
        for (s, table) in dist.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                for (j, mass) in row.iter().enumerate() {
                    if *mass == T::zero() {
                        continue;
                    }
                    for (is_b, pr) in [(false, &p), (true, &q)] {
                        let t = aut.step(s, is_b);
                        let o = aut.output(t);
                        let ni = (i + usize::from(o & 1 != 0)).min(2);
                        let nj = (j + usize::from(o & 2 != 0)).min(2);
                        next[t][ni][nj] = next[t][ni][nj].clone() + mass.clone() * pr.clone();
                    }
                }
            }
        }
        dist = next;
    }
    let mut table = zero_table();
    for t in dist {
        for i in 0..3 {
            for j in 0..3 {
                table[i][j] = table[i][j].clone() + t[i][j].clone();
            }
        }
    }
    Ok(ExactDistribution {
        n_letters,
        u: *u,
        v: v.copied(),
        table,
    })
}

/// `Var(X_{n,k})` as `sum_u Var(I_u) + sum_{u != v} Cov(I_u, I_v)`, each
/// term from automaton class tables at `n + k - 1` letters through the
/// inclusion-exclusion form over the classes `0` and `1`.
pub fn variance_by_decomposition<T: Scalar>(n: usize, k: usize, src: &Source) -> Result<T> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if k > crate::words::PAIR_ENUMERATION_CAP {
        return Err(Error::resource(format!("pair decomposition capped at k <= {}", crate::words::PAIR_ENUMERATION_CAP)));
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let letters = n + k - 1;
    let words: Vec<Word> = Word::all(k)?.collect();
    let singles: Vec<[T; 3]> = words
        .iter()
        .map(|u| joint_occurrence_dp::<T>(u, None, letters, src).map(|d| d.marginal_u()))
        .collect::<Result<_>>()?;
    let mut terms = Vec::new();
    for m in &singles {
        let at_least_two = T::one() - m[0].clone() - m[1].clone();
        terms.push(at_least_two.clone() - at_least_two.clone() * at_least_two);
    }
    for (iu, u) in words.iter().enumerate() {
        for (iv, v) in words.iter().enumerate() {
            if iu == iv {
                continue;
            }
            let joint = joint_occurrence_dp::<T>(u, Some(v), letters, src)?;
            for i in 0..2 {
                for j in 0..2 {
                    terms.push(joint.table[i][j].clone() - singles[iu][i].clone() * singles[iv][j].clone());
                }
            }
        }
    }
    Ok(T::sum_iter(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn src() -> Source {
        Source::new(0.7).unwrap()
    }

    #[test]
    fn automaton_recognises_overlapping_occurrences() {
        let aut = Automaton::new(&[w("aba"), w("bab")]);
        let text = "ababab";
        let mut s = 0;
        let mut hits = [0, 0];
        for ch in text.chars() {
            s = aut.step(s, ch == 'b');
            let o = aut.output(s);
            hits[0] += usize::from(o & 1 != 0);
            hits[1] += usize::from(o & 2 != 0);
        }
        assert_eq!(hits, [2, 2]);
    }

    #[test]
    fn dp_examples() {
        let d = joint_occurrence_dp::<f64>(&w("a"), Some(&w("b")), 2, &src()).unwrap();
        assert!((d.table[1][1] - 0.42).abs() < 1e-15);
        for n in 1..6 {
            let d = joint_occurrence_dp::<BigRational>(&w("a"), Some(&w("b")), n, &src()).unwrap();
            assert_eq!(d.table[0][0], BigRational::from_integer(0.into()));
            assert_eq!(d.total(), BigRational::from_integer(1.into()));
        }
        let d = joint_occurrence_dp::<BigRational>(&w("ab"), None, 2, &src()).unwrap();
        assert_eq!(d.table[0][0], "79/100".parse().unwrap());
        assert!(joint_occurrence_dp::<f64>(&w("ab"), Some(&w("ab")), 3, &src()).is_err());
    }

    #[test]
    fn decomposition_example() {
        let v: BigRational = variance_by_decomposition(2, 1, &src()).unwrap();
        assert_eq!(v, "609/2500".parse().unwrap());
    }
}
