//! Test-only oracles shared by the core integration tests and the CLI
//! acceptance suite. Nothing here calls into the library.

#![allow(dead_code)]

/// Naive corpus BLEU: n-grams enumerated as slices and counted by linear
/// scans, no hashing, uniform weights, no smoothing.
pub fn brute_force_bleu(hyps: &[Vec<String>], refs: &[Vec<Vec<String>>], max_n: usize) -> f64 {
    let count = |tokens: &[String], gram: &[String]| -> u64 {
        if tokens.len() < gram.len() {
            return 0;
        }
        (0..=tokens.len() - gram.len())
            .filter(|&i| tokens[i..i + gram.len()] == *gram)
            .count() as u64
    };
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (mut matched, mut total) = (0u64, 0u64);
        for (hyp, rs) in hyps.iter().zip(refs) {
            if hyp.len() < n {
                continue;
            }
            let grams: Vec<&[String]> = (0..=hyp.len() - n).map(|i| &hyp[i..i + n]).collect();
            total += grams.len() as u64;
            for (i, gram) in grams.iter().enumerate() {
                // each distinct n-gram once, at its first position
                if grams[..i].contains(gram) {
                    continue;
                }
                let ceiling = rs.iter().map(|r| count(r, gram)).max().unwrap_or(0);
                matched += count(hyp, gram).min(ceiling);
            }
        }
        if matched == 0 || total == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let c: usize = hyps.iter().map(Vec::len).sum();
    let r: usize = hyps
        .iter()
        .zip(refs)
        .map(|(h, rs)| {
            let mut best = rs[0].len();
            for x in rs {
                let (d, bd) = (x.len().abs_diff(h.len()), best.abs_diff(h.len()));
                if d < bd || (d == bd && x.len() < best) {
                    best = x.len();
                }
            }
            best
        })
        .sum();
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    bp * (log_sum / max_n as f64).exp()
}
