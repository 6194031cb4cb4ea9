//! Phonetic string front end.
//!
//! Grammar: `word := syllable ('.' syllable)*`, `syllable := C* V+ C*` over
//! the inventory symbols. A run of two or more vowels is a diphthong within
//! one nucleus. Explicit '.' boundaries always win; unmarked boundaries
//! inside a token are placed by maximal onset: intervocalic consonants go to
//! the following onset as far as the two-consonant cluster limit allows.

use thiserror::Error;

use crate::graph::{
    build_syllable_nucleus, concatenate, insert_pause, GraphError, SyllableGraph,
    SyllableOptions,
};
use crate::inventory::PhonemeInventory;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("unknown symbol '{symbol}' at position {position}")]
    UnknownSymbol { symbol: String, position: usize },
    #[error("syllable without a vowel at position {position}")]
    EmptySyllable { position: usize },
    #[error("more than two consonants in a cluster at position {position}")]
    ClusterTooLong { position: usize },
    #[error("empty phonetic string")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
struct Sym {
    text: String,
    position: usize,
    is_vowel: bool,
}

/// Longest-match tokenization over the inventory symbols.
fn tokenize(
    text: &str,
    start: usize,
    inventory: &PhonemeInventory,
) -> Result<Vec<Sym>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let max_len = inventory
        .vowels
        .iter()
        .map(|(s, _)| s.chars().count())
        .chain(inventory.consonants.keys().map(|s| s.chars().count()))
        .max()
        .unwrap_or(1);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut matched = None;
        for len in (1..=max_len.min(chars.len() - i)).rev() {
            let cand: String = chars[i..i + len].iter().collect();
            if inventory.is_vowel(&cand) {
                matched = Some((cand, len, true));
                break;
            }
            if inventory.is_consonant(&cand) {
                matched = Some((cand, len, false));
                break;
            }
        }
        match matched {
            Some((text, len, is_vowel)) => {
                out.push(Sym {
                    text,
                    position: start + i,
                    is_vowel,
                });
                i += len;
            }
            None => {
                return Err(ParseError::UnknownSymbol {
                    symbol: chars[i].to_string(),
                    position: start + i,
                })
            }
        }
    }
    Ok(out)
}

struct RawSyllable {
    onset: Vec<String>,
    nucleus: Vec<String>,
    coda: Vec<String>,
}

/// Maximal-onset segmentation of one dot-free token.
fn segment_token(syms: &[Sym], token_start: usize) -> Result<Vec<RawSyllable>, ParseError> {
    if syms.is_empty() {
        return Err(ParseError::EmptySyllable {
            position: token_start,
        });
    }
    // vowel runs with the consonant run preceding each
    let mut syllables: Vec<RawSyllable> = Vec::new();
    let mut i = 0;
    let mut pending_consonants: Vec<Sym> = Vec::new();
    while i < syms.len() {
        if syms[i].is_vowel {
            let mut nucleus = Vec::new();
            while i < syms.len() && syms[i].is_vowel {
                nucleus.push(syms[i].text.clone());
                i += 1;
            }
            let onset: Vec<String> = pending_consonants.drain(..).map(|s| s.text).collect();
            if onset.len() > 2 {
                // should have been split at the previous boundary
                return Err(ParseError::ClusterTooLong {
                    position: token_start,
                });
            }
            syllables.push(RawSyllable {
                onset,
                nucleus,
                coda: Vec::new(),
            });
        } else {
            let run_start = i;
            while i < syms.len() && !syms[i].is_vowel {
                i += 1;
            }
            let run: Vec<Sym> = syms[run_start..i].to_vec();
            let at_end = i >= syms.len();
            if syllables.is_empty() {
                // word-initial consonants: all onset
                if run.len() > 2 {
                    return Err(ParseError::ClusterTooLong {
                        position: run[2].position,
                    });
                }
                pending_consonants = run;
            } else if at_end {
                // word-final consonants: all coda
                if run.len() > 2 {
                    return Err(ParseError::ClusterTooLong {
                        position: run[2].position,
                    });
                }
                syllables.last_mut().unwrap().coda = run.into_iter().map(|s| s.text).collect();
            } else {
                // intervocalic: maximal onset under the cluster limit
                let onset_len = run.len().min(2);
                let coda_len = run.len() - onset_len;
                if coda_len > 2 {
                    return Err(ParseError::ClusterTooLong {
                        position: run[0].position,
                    });
                }
                let (coda, onset) = run.split_at(coda_len);
                syllables.last_mut().unwrap().coda =
                    coda.iter().map(|s| s.text.clone()).collect();
                pending_consonants = onset.to_vec();
            }
        }
    }
    if syllables.is_empty() {
        return Err(ParseError::EmptySyllable {
            position: token_start,
        });
    }
    Ok(syllables)
}

/// Parses one word (no pauses) into its graph.
pub fn parse_word(
    text: &str,
    inventory: &PhonemeInventory,
    opts: SyllableOptions,
) -> Result<SyllableGraph, ParseError> {
    if text.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut word: Option<SyllableGraph> = None;
    let mut pos = 0usize;
    for token in text.split('.') {
        let token_chars = token.chars().count();
        let syms = tokenize(token, pos, inventory)?;
        let raw = segment_token(&syms, pos)?;
        for r in raw {
            let g = build_syllable_nucleus(&r.onset, &r.nucleus, &r.coda, opts, inventory)?;
            word = Some(match word {
                None => g,
                Some(w) => concatenate(&w, &g)?,
            });
        }
        pos += token_chars + 1; // account for the dot
    }
    word.ok_or(ParseError::Empty)
}

/// Parses a whitespace-separated utterance: words joined by pauses of
/// `pause_ms`. A single word never gets a pause.
pub fn parse_utterance(
    text: &str,
    inventory: &PhonemeInventory,
    opts: SyllableOptions,
    pause_ms: f64,
) -> Result<SyllableGraph, ParseError> {
    let mut out: Option<SyllableGraph> = None;
    for word in text.split_whitespace() {
        let g = parse_word(word, inventory, opts)?;
        out = Some(match out {
            None => g,
            Some(w) => insert_pause(&w, &g, pause_ms)?,
        });
    }
    out.ok_or(ParseError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Element, NodeRole};

    fn inv() -> PhonemeInventory {
        PhonemeInventory::default_inventory()
    }

    fn opts() -> SyllableOptions {
        SyllableOptions::default()
    }

    #[test]
    fn single_cv() {
        let g = parse_word("bi", &inv(), opts()).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.arcs.len(), 4);
        assert_eq!(g.spell(), "bi");
    }

    #[test]
    fn ibia_structure() {
        // /i/ + /bi/ sharing the vowel + diphthong /ia/
        let g = parse_word("ibia", &inv(), opts()).unwrap();
        g.validate().unwrap();
        // nodes: i, b, i, a (the onset anchor is the first /i/ itself)
        assert_eq!(g.nodes.len(), 4);
        let vowels: Vec<&str> = g
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Vowel)
            .map(|n| n.label.as_str())
            .collect();
        assert_eq!(vowels, vec!["i", "i", "a"]);
        // hold(i), segment, hold(i), glide(i->a), hold(a)
        assert_eq!(g.elements.len(), 5);
        assert!(matches!(g.elements[1], Element::Segment { .. }));
        assert_eq!(g.duration_ms(100.0), 600.0);
    }

    #[test]
    fn big_bi_joins_coda_to_onset() {
        let g = parse_word("big.bi", &inv(), opts()).unwrap();
        g.validate().unwrap();
        assert_eq!(g.spell(), "big.bi");
        assert_eq!(g.duration_ms(100.0), 700.0);
        // the junction anchor is shared
        assert_eq!(g.nodes.len(), 7);
    }

    #[test]
    fn maximal_onset_splits_unmarked_boundaries() {
        // two intervocalic consonants both go to the onset
        let g = parse_word("igbi", &inv(), opts()).unwrap();
        assert_eq!(g.spell(), "i.gbi");
        // three split one coda, two onset
        let g = parse_word("igdbi", &inv(), opts()).unwrap();
        assert_eq!(g.spell(), "ig.dbi");
    }

    #[test]
    fn explicit_dot_wins() {
        let g = parse_word("ig.bi", &inv(), opts()).unwrap();
        assert_eq!(g.spell(), "ig.bi");
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_word("xq", &inv(), opts()).unwrap_err() {
            ParseError::UnknownSymbol { symbol, position } => {
                assert_eq!(symbol, "x");
                assert_eq!(position, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_word("bixq", &inv(), opts()).unwrap_err() {
            ParseError::UnknownSymbol { position, .. } => assert_eq!(position, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_word("b", &inv(), opts()).unwrap_err(),
            ParseError::EmptySyllable { .. }
        ));
        assert!(matches!(
            parse_word("bdgi", &inv(), opts()).unwrap_err(),
            ParseError::ClusterTooLong { position: 2 }
        ));
        assert!(matches!(
            parse_word("", &inv(), opts()).unwrap_err(),
            ParseError::Empty
        ));
        assert!(matches!(
            parse_word("bi.", &inv(), opts()).unwrap_err(),
            ParseError::EmptySyllable { .. }
        ));
    }

    #[test]
    fn utterance_joins_words_with_pauses() {
        let g = parse_utterance("bi gu", &inv(), opts(), 150.0).unwrap();
        assert!(g.has_pause());
        assert_eq!(g.spell(), "bi gu");
        assert_eq!(g.duration_ms(100.0), 750.0);
        let single = parse_utterance("bi", &inv(), opts(), 150.0).unwrap();
        assert!(!single.has_pause());
    }

    #[test]
    fn unicode_vowels_parse() {
        let g = parse_word("bɛ.dɔ", &inv(), opts()).unwrap();
        assert_eq!(g.spell(), "bɛ.dɔ");
    }
}
