use alloc::vec::Vec;
use core::ops::Range;

use super::Token;

/// Characters split off the front of a word, one token each.
const OPENING: &[char] = &['"', '\'', '(', '[', '{', '`', '\u{2018}', '\u{201C}', '\u{00AB}'];

/// Characters split off the end of a word, one token each.
const CLOSING: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}', '\u{2019}', '\u{201D}', '\u{00BB}',
];

/// Rule-based, case-preserving tokenizer.
///
/// Rules, applied to each whitespace-delimited chunk:
/// 1. a chunk with no alphanumeric character is a single token;
/// 2. opening quotes and brackets are split off the front, one per token;
/// 3. closing punctuation is split off the end, one per token, except that a
///    final period stays attached to an acronym such as `U.S.` and a run of
///    `.`, `!` and `?` (`...`, `?!`) stays together;
/// 4. whatever remains is one token, internal punctuation included.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_spans(text)
        .into_iter()
        .map(|span| Token(text[span].into()))
        .collect()
}

/// Byte ranges of the tokens produced by [`tokenize`].
pub fn tokenize_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                split_chunk(text, start..i, &mut spans);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(start) = chunk_start {
        split_chunk(text, start..text.len(), &mut spans);
    }
    spans
}

fn split_chunk(text: &str, chunk: Range<usize>, out: &mut Vec<Range<usize>>) {
    let word = &text[chunk.clone()];
    if !word.chars().any(char::is_alphanumeric) {
        out.push(chunk);
        return;
    }

    let mut start = chunk.start;
    let mut end = chunk.end;
    for c in word.chars() {
        if OPENING.contains(&c) {
            out.push(start..start + c.len_utf8());
            start += c.len_utf8();
        } else {
            break;
        }
    }

    let mut trailing = Vec::new();
    while let Some(c) = text[start..end].chars().next_back() {
        if !CLOSING.contains(&c) {
            break;
        }
        if c == '.' && is_acronym(&text[start..end]) {
            break;
        }
        let mut from = end - c.len_utf8();
        if is_terminal(c) {
            while let Some(p) = text[start..from].chars().next_back().filter(|&p| is_terminal(p)) {
                from -= p.len_utf8();
            }
            if from == start {
                break;
            }
        }
        trailing.push(from..end);
        end = from;
    }

    // rule 1 guarantees an alphanumeric core survives
    out.push(start..end);
    out.extend(trailing.into_iter().rev());
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// `U.S.`, `e.g.`: two or more single letters each followed by a period.
fn is_acronym(word: &str) -> bool {
    let mut pairs = 0;
    let mut chars = word.chars();
    loop {
        match (chars.next(), chars.next()) {
            (None, _) => return pairs >= 2,
            (Some(letter), Some('.')) if letter.is_alphabetic() => pairs += 1,
            _ => return false,
        }
    }
}
