//! Character-level edit similarity and plain Jaccard.

use crate::corpus::Token;
use crate::{real, Real};

/// `1 - ed(a,b) / max(|a|,|b|)` with unit-cost Levenshtein distance.
/// Both strings empty gives 1 (zero distance over a vacuous max treated as
/// identity); one empty string gives 0.
pub fn edit_similarity<F: Real>(a: &Token, b: &Token) -> F {
    edit_similarity_str(a.as_str(), b.as_str())
}

pub fn edit_similarity_str<F: Real>(a: &str, b: &str) -> F {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    let max_len = ac.len().max(bc.len());
    if max_len == 0 {
        return F::one();
    }
    let ed = levenshtein(&ac, &bc);
    F::one() - real::<F>(ed as f64) / real::<F>(max_len as f64)
}

/// Wagner–Fischer over two rows.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, &lc) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(lc != sc);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Edit distance capped at `limit`: returns `None` as soon as the distance
/// provably exceeds the cap. Runs a banded DP of width `2*limit + 1`, which
/// is what the matcher's verification step wants in its inner loop.
pub fn levenshtein_within(a: &[char], b: &[char], limit: usize) -> Option<usize> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if long.len() - short.len() > limit {
        return None;
    }
    let inf = limit + 1;
    let mut prev: Vec<usize> = (0..=short.len()).map(|j| j.min(inf)).collect();
    let mut cur = vec![inf; short.len() + 1];
    for (i, &lc) in long.iter().enumerate() {
        cur[0] = (i + 1).min(inf);
        // cells outside the band can never lead to a distance <= limit
        let lo = (i + 1).saturating_sub(limit);
        let hi = (i + 1 + limit).min(short.len());
        if lo > 1 {
            cur[lo - 1] = inf;
        }
        let mut row_min = cur[0];
        for j in lo.max(1)..=hi {
            let sc = short[j - 1];
            let sub = prev[j - 1] + usize::from(lc != sc);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(inf);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > limit {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
        for v in cur.iter_mut() {
            *v = inf;
        }
    }
    (prev[short.len()] <= limit).then_some(prev[short.len()])
}

/// Edit similarity if it reaches `tau`, `None` otherwise. Uses the banded
/// distance with cap `floor((1 - tau) * max_len)`.
pub fn edit_similarity_at_least<F: Real>(a: &str, b: &str, tau: F) -> Option<F> {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    let max_len = ac.len().max(bc.len());
    if max_len == 0 {
        return Some(F::one());
    }
    let max_len_f = real::<F>(max_len as f64);
    // largest ed with 1 - ed/max_len >= tau; nudge before flooring so that
    // e.g. (1 - 0.8) * 5 = 0.999.. still admits distance 1 (the final
    // sim >= tau check stays exact, a wide cap only costs work)
    let cap = ((F::one() - tau) * max_len_f).to_f64().unwrap();
    let cap = (cap + 1e-9).floor();
    let cap = if cap < 0.0 { 0 } else { cap as usize };
    let ed = levenshtein_within(&ac, &bc, cap)?;
    let sim = F::one() - real::<F>(ed as f64) / max_len_f;
    (sim >= tau).then_some(sim)
}

/// Multiset Jaccard: `|E ∩ S| / (|E| + |S| - |E ∩ S|)` with one-to-one
/// matching of equal tokens. Both sets empty gives 1.
pub fn jaccard<F: Real>(e: &[Token], s: &[Token]) -> F {
    if e.is_empty() && s.is_empty() {
        return F::one();
    }
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for t in e {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut inter = 0usize;
    for t in s {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                inter += 1;
            }
        }
    }
    real::<F>(inter as f64) / real::<F>((e.len() + s.len() - inter) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tok(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| tok(w)).collect()
    }

    #[test]
    fn eds_one_edit() {
        let v: f64 = edit_similarity(&tok("oxford"), &tok("oxfort"));
        assert!((v - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn eds_identity() {
        let v: f64 = edit_similarity(&tok("university"), &tok("university"));
        assert_eq!(v, 1.0);
    }

    #[test]
    fn eds_vs_empty() {
        let v: f64 = edit_similarity_str("a", "");
        assert_eq!(v, 0.0);
    }

    #[test]
    fn levenshtein_known_values() {
        let d = |a: &str, b: &str| {
            levenshtein(
                &a.chars().collect::<Vec<_>>(),
                &b.chars().collect::<Vec<_>>(),
            )
        };
        assert_eq!(d("kitten", "sitting"), 3);
        assert_eq!(d("university", "univercity"), 1);
        assert_eq!(d("abc", ""), 3);
        assert_eq!(d("", ""), 0);
    }

    #[test]
    fn banded_matches_exact_when_within() {
        let pairs = [
            ("oxford", "oxfort"),
            ("university", "univercity"),
            ("press", "press"),
            ("melbourne", "melborne"),
        ];
        for (a, b) in pairs {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let exact = levenshtein(&ac, &bc);
            assert_eq!(levenshtein_within(&ac, &bc, exact), Some(exact));
            if exact > 0 {
                assert_eq!(levenshtein_within(&ac, &bc, exact - 1), None);
            }
        }
    }

    #[test]
    fn eds_at_least_threshold() {
        // eds(oxford, oxfort) = 5/6 >= 0.8
        let v = edit_similarity_at_least::<f64>("oxford", "oxfort", 0.8).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-12);
        // eds(oxford, banana) far below 0.8
        assert!(edit_similarity_at_least::<f64>("oxford", "banana", 0.8).is_none());
        // tau = 1 admits only exact equality
        assert!(edit_similarity_at_least::<f64>("oxford", "oxfort", 1.0).is_none());
        assert_eq!(
            edit_similarity_at_least::<f64>("of", "of", 1.0),
            Some(1.0)
        );
    }

    #[test]
    fn jaccard_typo_example() {
        let e = toks(&["the", "university", "of", "oxford"]);
        let s = toks(&["the", "univercity", "of", "oxfort"]);
        let v: f64 = jaccard(&e, &s);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_identity_and_disjoint() {
        let e = toks(&["a", "b"]);
        assert_eq!(jaccard::<f64>(&e, &e), 1.0);
        assert_eq!(jaccard::<f64>(&e, &toks(&["c", "d"])), 0.0);
        assert_eq!(jaccard::<f64>(&[], &[]), 1.0);
    }

    #[test]
    fn jaccard_multiset() {
        // one "a" in e can absorb only one of the two in s
        let v: f64 = jaccard(&toks(&["a", "b"]), &toks(&["a", "a"]));
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn eds_symmetric_and_bounded(a in "[a-c]{0,8}", b in "[a-c]{0,8}") {
            prop_assume!(!a.is_empty() || !b.is_empty());
            let ab: f64 = edit_similarity_str(&a, &b);
            let ba: f64 = edit_similarity_str(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
        }

        #[test]
        fn banded_agrees_with_exact(a in "[a-c]{0,8}", b in "[a-c]{0,8}", limit in 0usize..10) {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let exact = levenshtein(&ac, &bc);
            let banded = levenshtein_within(&ac, &bc, limit);
            if exact <= limit {
                prop_assert_eq!(banded, Some(exact));
            } else {
                prop_assert_eq!(banded, None);
            }
        }

        #[test]
        fn jaccard_in_range(e in prop::collection::vec("[a-b]{1,2}", 0..6),
                            s in prop::collection::vec("[a-b]{1,2}", 0..6)) {
            let e: Vec<Token> = e.iter().map(|w| tok(w)).collect();
            let s: Vec<Token> = s.iter().map(|w| tok(w)).collect();
            let v: f64 = jaccard(&e, &s);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
