//! Brute-force metric oracles: exhaustive enumeration, exact rationals
//! wherever the quantity is rational.

use std::collections::{HashMap, HashSet};

use agentzero_core::metrics::stem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite")
}

fn count_at(seq: &[String], gram: &[String]) -> u64 {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| seq[i..i + gram.len()] == *gram)
        .count() as u64
}

/// Exact clipped match and total counts per order.
pub fn bleu_counts(cand: &[String], refs: &[Vec<String>]) -> ([u64; 4], [u64; 4]) {
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    for n in 1..=4 {
        if cand.len() < n {
            continue;
        }
        totals[n - 1] = (cand.len() - n + 1) as u64;
        let mut done: Vec<&[String]> = Vec::new();
        for i in 0..=cand.len() - n {
            let g = &cand[i..i + n];
            if done.contains(&g) {
                continue;
            }
            done.push(g);
            let c = count_at(cand, g);
            let r = refs.iter().map(|r| count_at(r, g)).max().unwrap_or(0);
            matches[n - 1] += c.min(r);
        }
    }
    (matches, totals)
}

fn closest_ref_len(c: usize, refs: &[Vec<String>]) -> usize {
    let mut best = refs[0].len();
    for r in refs {
        let d = r.len().abs_diff(c);
        let bd = best.abs_diff(c);
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    best
}

/// BLEU-4 from pooled counts: product of precisions kept exact, root and
/// brevity penalty taken at the end.
pub fn bleu_from_counts(matches: [u64; 4], totals: [u64; 4], c: u64, r: u64) -> f64 {
    if c == 0 {
        return 0.0;
    }
    let eps = rat(1, 1_000_000_000);
    let mut product = BigRational::one();
    let mut k = 0;
    for n in 0..4 {
        if totals[n] == 0 {
            continue;
        }
        k += 1;
        if matches[n] == 0 {
            product *= eps.clone();
        } else {
            product *= rat(matches[n], totals[n]);
        }
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * to_f64(&product).powf(1.0 / k as f64)
}

pub fn bleu(cand: &[String], refs: &[Vec<String>]) -> f64 {
    let (m, t) = bleu_counts(cand, refs);
    bleu_from_counts(m, t, cand.len() as u64, closest_ref_len(cand.len(), refs) as u64)
}

pub fn corpus_bleu(pairs: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let mut m = [0u64; 4];
    let mut t = [0u64; 4];
    let (mut c, mut r) = (0u64, 0u64);
    for (cand, refs) in pairs {
        let (pm, pt) = bleu_counts(cand, refs);
        for n in 0..4 {
            m[n] += pm[n];
            t[n] += pt[n];
        }
        c += cand.len() as u64;
        r += closest_ref_len(cand.len(), refs) as u64;
    }
    bleu_from_counts(m, t, c, r)
}

/// Longest common subsequence by enumerating every subsequence of `a`.
pub fn lcs_brute(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16);
    let is_subseq = |mask: u32| {
        let mut j = 0;
        for (i, x) in a.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            while j < b.len() && b[j] != *x {
                j += 1;
            }
            if j == b.len() {
                return false;
            }
            j += 1;
        }
        true
    };
    (0..1u32 << a.len())
        .filter(|&m| is_subseq(m))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn rouge_l_exact(cand: &[String], reference: &[String]) -> BigRational {
    let l = lcs_brute(cand, reference) as u64;
    if l == 0 {
        return BigRational::zero();
    }
    let p = rat(l, cand.len() as u64);
    let r = rat(l, reference.len() as u64);
    let b2 = rat(36, 25);
    (BigRational::one() + &b2) * &p * &r / (&r + b2 * &p)
}

/// (matches, chunks): min chunks over every maximum-match alignment.
///
/// A candidate token may stay unmatched only while its class has more
/// candidate than reference occurrences left to leave out, which restricts
/// the enumeration to maximum alignments without ordering assumptions.
pub fn meteor_alignment(cand: &[String], reference: &[String]) -> (usize, usize) {
    let cs: Vec<String> = cand.iter().map(|t| stem(t)).collect();
    let rs: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    let mut slack: HashMap<String, usize> = HashMap::new();
    for c in &cs {
        let in_c = cs.iter().filter(|x| *x == c).count();
        let in_r = rs.iter().filter(|x| *x == c).count();
        slack.insert(c.clone(), in_c.saturating_sub(in_r));
    }
    let mut best = (0usize, 0usize);
    let mut assign: Vec<Option<usize>> = vec![None; cs.len()];
    let mut used = vec![false; rs.len()];
    #[allow(clippy::too_many_arguments)]
    fn walk(
        i: usize,
        cs: &[String],
        rs: &[String],
        slack: &mut HashMap<String, usize>,
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut (usize, usize),
    ) {
        if i == cs.len() {
            let m = assign.iter().flatten().count();
            let mut chunks = 0;
            for k in 0..assign.len() {
                if let Some(j) = assign[k] {
                    let continues = k > 0 && j > 0 && assign[k - 1] == Some(j - 1);
                    if !continues {
                        chunks += 1;
                    }
                }
            }
            if m > best.0 || (m == best.0 && m > 0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        assign[i] = None;
        let left = slack[&cs[i]];
        if left > 0 {
            slack.insert(cs[i].clone(), left - 1);
            walk(i + 1, cs, rs, slack, assign, used, best);
            slack.insert(cs[i].clone(), left);
        }
        for j in 0..rs.len() {
            if !used[j] && rs[j] == cs[i] {
                used[j] = true;
                assign[i] = Some(j);
                walk(i + 1, cs, rs, slack, assign, used, best);
                assign[i] = None;
                used[j] = false;
            }
        }
    }
    walk(0, &cs, &rs, &mut slack, &mut assign, &mut used, &mut best);
    best
}

pub fn meteor(cand: &[String], reference: &[String]) -> f64 {
    let (m, ch) = meteor_alignment(cand, reference);
    if m == 0 {
        return 0.0;
    }
    let p = rat(m as u64, cand.len() as u64);
    let r = rat(m as u64, reference.len() as u64);
    let fmean = &p * &r / (rat(9, 10) * &p + rat(1, 10) * &r);
    let frag = rat(ch as u64, m as u64);
    let penalty = rat(1, 2) * &frag * &frag * &frag;
    to_f64(&(fmean * (BigRational::one() - penalty)))
}

fn gram_key(g: &[String]) -> String {
    g.join("\u{1}")
}

fn tf(tokens: &[String], n: usize) -> HashMap<String, f64> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *out.entry(gram_key(&tokens[i..i + n])).or_insert(0.0) += 1.0;
        }
    }
    out
}

/// Corpus CIDEr by direct TF-IDF construction.
pub fn cider(pairs: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let big_n = pairs.len() as f64;
    let mut df: Vec<HashMap<String, usize>> = vec![HashMap::new(); 4];
    for (_, refs) in pairs {
        for n in 1..=4 {
            let mut seen = HashSet::new();
            for r in refs {
                seen.extend(tf(r, n).into_keys());
            }
            for g in seen {
                *df[n - 1].entry(g).or_insert(0) += 1;
            }
        }
    }
    let vec_of = |tokens: &[String], n: usize| -> HashMap<String, f64> {
        tf(tokens, n)
            .into_iter()
            .map(|(g, c)| {
                let d = df[n - 1].get(&g).copied().unwrap_or(0).max(1) as f64;
                let w = c * (big_n / d).ln();
                (g, w)
            })
            .collect()
    };
    let mut total = 0.0;
    for (cand, refs) in pairs {
        let mut per_pair = 0.0;
        for n in 1..=4 {
            let vc = vec_of(cand, n);
            let nc = vc.values().map(|x| x * x).sum::<f64>().sqrt();
            let mut acc = 0.0;
            for r in refs {
                let vr = vec_of(r, n);
                let nr = vr.values().map(|x| x * x).sum::<f64>().sqrt();
                if nc == 0.0 || nr == 0.0 {
                    continue;
                }
                let mut dot = 0.0;
                for (g, &c) in &vc {
                    if let Some(&rv) = vr.get(g) {
                        dot += c.min(rv) * rv;
                    }
                }
                acc += dot / (nc * nr);
            }
            per_pair += acc / refs.len() as f64;
        }
        total += per_pair / 4.0;
    }
    total / big_n
}

pub const VOCAB: [&str; 12] = [
    "the", "cat", "cats", "sat", "run", "runs", "running", "on", "mat", "dog", "a", ".",
];

/// Deterministic random short token sequences.
pub fn random_pairs(count: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sentence = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(1..=7);
        (0..len)
            .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
            .collect()
    };
    (0..count)
        .map(|_| {
            let a = sentence(&mut rng);
            let b = sentence(&mut rng);
            (a, b)
        })
        .collect()
}
