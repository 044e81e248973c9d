//! Reference-based lexical similarity baselines.
//!
//! Three classical metrics over a shared tokenizer (lowercase, split at
//! whitespace and punctuation, separators dropped): character-level
//! normalized Levenshtein similarity, smoothed sentence BLEU-4, and
//! `meteor_lite`, a METEOR approximation with exact and stem matching
//! stages only. METEOR's synonym stage needs a lexical database this crate
//! does not ship, so `meteor_lite` is not interchangeable with full METEOR
//! scores; treat it as its own metric.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bundled reference-based metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexicalMetric {
    Levenshtein,
    Bleu,
    Meteor,
}

pub const ALL_LEXICAL_METRICS: [LexicalMetric; 3] =
    [LexicalMetric::Levenshtein, LexicalMetric::Bleu, LexicalMetric::Meteor];

impl LexicalMetric {
    pub fn name(self) -> &'static str {
        match self {
            LexicalMetric::Levenshtein => "levenshtein",
            LexicalMetric::Bleu => "bleu",
            LexicalMetric::Meteor => "meteor",
        }
    }

    pub fn score(self, hypothesis: &str, reference: &str) -> f64 {
        match self {
            LexicalMetric::Levenshtein => levenshtein_sim(hypothesis, reference),
            LexicalMetric::Bleu => bleu(hypothesis, reference),
            LexicalMetric::Meteor => meteor_lite(hypothesis, reference),
        }
    }

    pub fn scored(self, hypothesis: &str, reference: &str) -> SimilarityScore {
        SimilarityScore { metric: self, value: self.score(hypothesis, reference) }
    }
}

impl fmt::Display for LexicalMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LexicalMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "levenshtein" => Ok(LexicalMetric::Levenshtein),
            "bleu" => Ok(LexicalMetric::Bleu),
            "meteor" => Ok(LexicalMetric::Meteor),
            other => Err(Error::Data(format!("unknown lexical metric: {other}"))),
        }
    }
}

/// A metric's verdict on one pair. `value` is always in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub metric: LexicalMetric,
    pub value: f64,
}

/// Extension point for embedding-based similarity. No implementation is
/// bundled; plug in an external embedding provider and the harness treats
/// it like the lexical metrics above.
pub trait EmbeddingSimilarity: Send + Sync {
    /// Similarity of `hypothesis` to `reference`, in [0, 1].
    fn similarity(&self, hypothesis: &str, reference: &str) -> Result<f64>;
}

/// Shared tokenizer: lowercase, tokens are maximal alphanumeric runs,
/// whitespace and punctuation are separators and are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Character-level similarity: 1 − editdistance/max(|a|, |b|), and 1.0 when
/// both strings are empty. Normalizing by the longer string keeps the value
/// in [0, 1]; other normalizations would shift every calibrated threshold.
pub fn levenshtein_sim(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(&a, &b) as f64 / longest as f64
}

fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence BLEU-4: uniform weights, brevity penalty, add-one smoothing on
/// the n ≥ 2 precisions. Unigram precision stays unsmoothed, so zero
/// unigram overlap scores 0.0 rather than a smoothing floor. Without the
/// higher-order smoothing every short sentence would score exactly 0 and a
/// threshold sweep over BLEU would be degenerate.
pub fn bleu(hypothesis: &str, reference: &str) -> f64 {
    let hyp = tokenize(hypothesis);
    let reference = tokenize(reference);
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_precision_sum = 0.0;
    for n in 1..=4 {
        let ref_counts = ngram_counts(&reference, n);
        let mut total = 0usize;
        let mut matched = 0usize;
        for (gram, count) in ngram_counts(&hyp, n) {
            total += count;
            matched += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
        }
        let (num, den) = if n == 1 {
            (matched as f64, total as f64)
        } else {
            ((matched + 1) as f64, (total + 1) as f64)
        };
        if num == 0.0 {
            return 0.0;
        }
        log_precision_sum += (num / den).ln();
    }
    let c = hyp.len() as f64;
    let r = reference.len() as f64;
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    brevity * (log_precision_sum / 4.0).exp()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// METEOR-style score with exact and stem matching stages only. Unigrams
/// are aligned leftmost-first, exact matches before stem matches; then
/// F_mean = 10PR/(R + 9P), penalty = 0.5·(chunks/matches)³, and the score
/// is F_mean·(1 − penalty). No synonym stage (see module docs).
pub fn meteor_lite(hypothesis: &str, reference: &str) -> f64 {
    let hyp = tokenize(hypothesis);
    let reference = tokenize(reference);
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }

    let mut hyp_match: Vec<Option<usize>> = vec![None; hyp.len()];
    let mut ref_used = vec![false; reference.len()];
    align_leftmost(&hyp, &reference, &mut hyp_match, &mut ref_used);

    let stemmer = Stemmer::create(Algorithm::English);
    let stem = |tokens: &[String]| -> Vec<String> {
        tokens.iter().map(|t| stemmer.stem(t).into_owned()).collect()
    };
    align_leftmost(&stem(&hyp), &stem(&reference), &mut hyp_match, &mut ref_used);

    let pairs: Vec<(usize, usize)> = hyp_match
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let matches = pairs.len();
    if matches == 0 {
        return 0.0;
    }

    let mut chunks = 0usize;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let continues = k > 0 && pairs[k - 1] == (i - 1, j.wrapping_sub(1));
        if !continues {
            chunks += 1;
        }
    }

    let precision = matches as f64 / hyp.len() as f64;
    let recall = matches as f64 / reference.len() as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / matches as f64).powi(3);
    f_mean * (1.0 - penalty)
}

/// Matches each still-unmatched hypothesis token to the leftmost unused
/// reference token with the same key.
fn align_leftmost(
    hyp_keys: &[String],
    ref_keys: &[String],
    hyp_match: &mut [Option<usize>],
    ref_used: &mut [bool],
) {
    for (i, key) in hyp_keys.iter().enumerate() {
        if hyp_match[i].is_some() {
            continue;
        }
        let found = ref_keys
            .iter()
            .enumerate()
            .position(|(j, r)| !ref_used[j] && r == key);
        if let Some(j) = found {
            hyp_match[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn levenshtein_identity_and_extremes() {
        assert_eq!(levenshtein_sim("abc", "abc"), 1.0);
        assert_eq!(levenshtein_sim("", ""), 1.0);
        assert_eq!(levenshtein_sim("", "ab"), 0.0);
        assert_eq!(levenshtein_sim("ab", ""), 0.0);
    }

    #[test]
    fn levenshtein_kitten_sitting() {
        // Edit distance 3 over max length 7.
        let got = levenshtein_sim("kitten", "sitting");
        assert!((got - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_counts_chars_not_bytes() {
        // One substitution over five chars even though é is two bytes.
        assert!((levenshtein_sim("héllo", "hello") - 0.8).abs() < 1e-12);
    }

    #[test]
    fn tokenizer_lowercases_and_drops_punctuation() {
        assert_eq!(tokenize("L'enfant, dit-il."), ["l", "enfant", "dit", "il"]);
        assert_eq!(tokenize("  The CAT  sat.  "), ["the", "cat", "sat"]);
        assert_eq!(tokenize("éléphant à 2h"), ["éléphant", "à", "2h"]);
        assert!(tokenize("?!...").is_empty());
    }

    #[test]
    fn bleu_identity_is_one() {
        assert!((bleu("the cat sat down", "the cat sat down") - 1.0).abs() < 1e-12);
        // Tokenization makes case and punctuation irrelevant.
        assert!((bleu("The cat sat!", "the cat sat") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_zero_overlap_and_empty_are_zero() {
        assert_eq!(bleu("xyz", "the cat sat down"), 0.0);
        assert_eq!(bleu("", "the cat sat down"), 0.0);
        assert_eq!(bleu("the cat", ""), 0.0);
    }

    #[test]
    fn bleu_matches_reference_values() {
        // Shorter hypothesis, full n-gram overlap: only the brevity penalty
        // bites, exp(1 - 4/3).
        let got = bleu("the cat sat", "the cat sat down");
        assert!((got - 0.7165313105737893).abs() < 1e-6);

        // One substitution mid-sentence: p = (4/5, 3/5, 1/2, 1/3), BP = 1,
        // score = 0.08^(1/4).
        let got = bleu("it is a small cat", "it is a tiny cat");
        assert!((got - 0.5318295896944989).abs() < 1e-9);
    }

    #[test]
    fn bleu_is_asymmetric() {
        let forward = bleu("the cat sat", "the cat sat down");
        let backward = bleu("the cat sat down", "the cat sat");
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn meteor_identity_with_four_tokens() {
        // One chunk over four matches: 1 - 0.5/64.
        assert_eq!(meteor_lite("the cat sat down", "the cat sat down"), 0.9921875);
    }

    #[test]
    fn meteor_zero_overlap_and_empty_are_zero() {
        assert_eq!(meteor_lite("aa bb cc", "dd ee ff"), 0.0);
        assert_eq!(meteor_lite("", "the cat"), 0.0);
        assert_eq!(meteor_lite("the cat", ""), 0.0);
    }

    #[test]
    fn meteor_single_shared_word_among_four() {
        // m = 1, P = R = 1/4, F = 0.25, penalty = 0.5.
        assert_eq!(meteor_lite("a x y z", "a p q r"), 0.125);
    }

    #[test]
    fn meteor_stem_stage_matches_inflections() {
        // No exact matches; both pairs land in the stem stage.
        assert_eq!(meteor_lite("running quickly", "run quick"), 0.9375);
        // A lone inflection pair: full match, maximal fragmentation.
        assert_eq!(meteor_lite("cats", "cat"), 0.5);
    }

    #[test]
    fn meteor_fragmentation_penalty_counts_chunks() {
        // All four tokens match but the alignment breaks into two runs.
        assert_eq!(meteor_lite("the cat sat down", "down the cat sat"), 0.9375);
    }

    #[test]
    fn meteor_is_asymmetric() {
        let forward = meteor_lite("the cat", "the cat sat");
        let backward = meteor_lite("the cat sat", "the cat");
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn metric_names_round_trip() {
        for metric in ALL_LEXICAL_METRICS {
            assert_eq!(metric.name().parse::<LexicalMetric>().unwrap(), metric);
        }
        assert_eq!("BLEU".parse::<LexicalMetric>().unwrap(), LexicalMetric::Bleu);
        assert!("rouge".parse::<LexicalMetric>().is_err());
    }

    #[test]
    fn dispatch_agrees_with_direct_calls() {
        let (h, r) = ("the cat sat", "the cat sat down");
        assert_eq!(LexicalMetric::Levenshtein.score(h, r), levenshtein_sim(h, r));
        assert_eq!(LexicalMetric::Bleu.score(h, r), bleu(h, r));
        let scored = LexicalMetric::Meteor.scored(h, r);
        assert_eq!(scored.metric, LexicalMetric::Meteor);
        assert_eq!(scored.value, meteor_lite(h, r));
    }

    proptest! {
        #[test]
        fn all_metrics_stay_in_unit_interval(a in ".{0,40}", b in ".{0,40}") {
            for metric in ALL_LEXICAL_METRICS {
                let v = metric.score(&a, &b);
                prop_assert!((0.0..=1.0).contains(&v), "{metric} gave {v}");
            }
        }

        #[test]
        fn levenshtein_is_symmetric(a in ".{0,40}", b in ".{0,40}") {
            prop_assert_eq!(levenshtein_sim(&a, &b), levenshtein_sim(&b, &a));
        }

        #[test]
        fn levenshtein_is_one_exactly_on_equal_strings(a in ".{0,40}", b in ".{0,40}") {
            prop_assert_eq!(levenshtein_sim(&a, &a), 1.0);
            if levenshtein_sim(&a, &b) == 1.0 {
                prop_assert_eq!(&a, &b);
            }
        }
    }
}
