use alloc::string::String;
use alloc::vec::Vec;

use super::{tokenize, tokenize_spans, CorpusError, Document};

const HIGHLIGHT_MARKER: &str = "@highlight";

/// How the article body of a story file is cut into sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SentenceSplit {
    /// Line-delimited when the body has more than one non-empty line,
    /// boundary heuristic otherwise.
    #[default]
    Auto,
    /// Every non-empty line is a sentence.
    Lines,
    /// Split after `.`, `!` or `?` tokens (acronyms keep their periods).
    Heuristic,
}

/// Parses a story file: article text, then `@highlight` blocks each holding
/// one highlight sentence.
pub fn parse_story_file(
    name: &str,
    contents: &str,
    split: SentenceSplit,
) -> Result<Document, CorpusError> {
    let mut body = Vec::new();
    let mut highlights: Vec<String> = Vec::new();
    let mut in_highlight = false;
    for line in contents.lines() {
        let line = line.trim();
        if line == HIGHLIGHT_MARKER {
            in_highlight = true;
            highlights.push(String::new());
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if in_highlight {
            let current = highlights.last_mut().expect("block opened above");
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(line);
        } else {
            body.push(line);
        }
    }

    let mode = match split {
        SentenceSplit::Auto if body.len() > 1 => SentenceSplit::Lines,
        SentenceSplit::Auto => SentenceSplit::Heuristic,
        other => other,
    };
    let raw_sentences: Vec<String> = match mode {
        SentenceSplit::Lines => body.iter().map(|l| String::from(*l)).collect(),
        _ => body.iter().flat_map(|l| split_sentences(l)).collect(),
    };

    let doc = Document::from_texts(name, &raw_sentences, &highlights);
    if doc.sentences.is_empty() {
        return Err(CorpusError::EmptyBody { name: name.into() });
    }
    Ok(doc)
}

/// Boundary heuristic: a sentence ends after a token made only of `.`, `!`
/// and `?`, plus any closing quotes or brackets attached to it.
pub fn split_sentences(text: &str) -> Vec<String> {
    let spans = tokenize_spans(text);
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < spans.len() {
        let span = &spans[i];
        let first = *start.get_or_insert(span.start);
        let piece = &text[span.clone()];
        if is_terminal(piece) {
            let mut end = span.end;
            while i + 1 < spans.len()
                && spans[i + 1].start == end
                && is_closer(&text[spans[i + 1].clone()])
            {
                i += 1;
                end = spans[i].end;
            }
            sentences.push(String::from(&text[first..end]));
            start = None;
        }
        i += 1;
    }
    if let (Some(first), Some(last)) = (start, spans.last()) {
        sentences.push(String::from(&text[first..last.end]));
    }
    sentences.retain(|s| !tokenize(s).is_empty());
    sentences
}

fn is_terminal(piece: &str) -> bool {
    !piece.is_empty() && piece.chars().all(|c| matches!(c, '.' | '!' | '?'))
}

fn is_closer(piece: &str) -> bool {
    matches!(
        piece,
        "\"" | "'" | ")" | "]" | "}" | "\u{2019}" | "\u{201D}" | "\u{00BB}"
    )
}
