use std::collections::HashMap;

use rayon::prelude::*;
use refresh_core::corpus::Sentence;
use refresh_core::{mean_rouge_reward, Reward, RougeConfig};
use serde::Serialize;

use super::{load_settings, write_snapshot};
use crate::cli::{EvaluateArgs, RougeArgs};
use crate::error::{CliError, Result};
use crate::formats::{
    read_documents, read_summaries, read_text, scores_to_bytes, to_json_pretty, write_atomic, DocumentScores,
    EvaluationReport, ScoreRecord, SummaryRecord,
};

/// Sentences of `lines` that hold at least one token.
pub fn sentences_of<S: AsRef<str>>(lines: &[S]) -> Vec<Sentence> {
    lines
        .iter()
        .filter_map(|l| Sentence::from_raw(0, l.as_ref()))
        .enumerate()
        .map(|(i, mut s)| {
            s.index = i;
            s
        })
        .collect()
}

fn mean(scores: impl Iterator<Item = ScoreRecord>, n: usize) -> ScoreRecord {
    let mut total = ScoreRecord { precision: 0.0, recall: 0.0, f1: 0.0 };
    for s in scores {
        total.precision += s.precision;
        total.recall += s.recall;
        total.f1 += s.f1;
    }
    let n = n as f64;
    ScoreRecord { precision: total.precision / n, recall: total.recall / n, f1: total.f1 / n }
}

/// Per-document scores of `summaries` against the highlights in `docs`
/// and their means.
pub fn score_summaries(
    summaries: &[SummaryRecord],
    docs: &[refresh_core::Document],
    rouge: &RougeConfig,
) -> Result<(EvaluationReport, Vec<DocumentScores>)> {
    if summaries.is_empty() {
        return Err(CliError::data("no summaries to evaluate"));
    }
    let by_id: HashMap<&str, &refresh_core::Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let missing: Vec<&str> =
        summaries.iter().map(|s| s.id.as_str()).filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!("summaries for unknown documents: {}", missing.join(", "))));
    }
    let scores = summaries
        .par_iter()
        .map(|s| {
            let doc = by_id[s.id.as_str()];
            let reward = mean_rouge_reward(&sentences_of(&s.sentences), &doc.highlights, rouge)
                .map_err(|e| CliError::data(format!("document {}: {e}", s.id)))?;
            Ok(DocumentScores {
                id: s.id.clone(),
                rouge1: reward.rouge1.into(),
                rouge2: reward.rouge2.into(),
                rouge_l: reward.rouge_l.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = scores.len();
    let report = EvaluationReport {
        documents: n,
        rouge1: mean(scores.iter().map(|s| s.rouge1), n),
        rouge2: mean(scores.iter().map(|s| s.rouge2), n),
        rouge_l: mean(scores.iter().map(|s| s.rouge_l), n),
    };
    Ok((report, scores))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let (settings, _) = load_settings(&args.settings)?;
    let summaries = read_summaries(&args.summaries)?;
    let docs = read_documents(&args.documents)?;
    let (report, scores) = score_summaries(&summaries, &docs, &settings.rouge)?;
    println!("{}", report.headline());
    if let Some(path) = &args.output {
        write_atomic(path, &to_json_pretty(&report)?)?;
        if let Some(dir) = path.parent() {
            write_snapshot(dir, &settings)?;
        }
    }
    if let Some(path) = &args.per_document {
        write_atomic(path, &scores_to_bytes(&scores)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PairReport {
    pair: usize,
    rouge1: ScoreRecord,
    rouge2: ScoreRecord,
    rouge_l: ScoreRecord,
    reward: f64,
}

/// Summaries of a text file: blocks of non-empty lines separated by blank
/// lines, one sentence per line.
pub fn line_blocks(text: &str) -> Vec<Vec<&str>> {
    let mut blocks = vec![Vec::new()];
    for line in text.lines() {
        if line.trim().is_empty() {
            if !blocks.last().is_some_and(Vec::is_empty) {
                blocks.push(Vec::new());
            }
        } else {
            blocks.last_mut().expect("never empty").push(line);
        }
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

pub fn rouge(args: &RougeArgs) -> Result<()> {
    let (settings, _) = load_settings(&args.settings)?;
    let cand_text = read_text(&args.candidate)?;
    let ref_text = read_text(&args.reference)?;
    let candidates = line_blocks(&cand_text);
    let references = line_blocks(&ref_text);
    if references.is_empty() || candidates.len() != references.len() {
        return Err(CliError::data(format!(
            "{} candidate summaries for {} reference summaries",
            candidates.len(),
            references.len()
        )));
    }
    let mut reports = Vec::with_capacity(candidates.len());
    for (pair, (c, r)) in candidates.iter().zip(&references).enumerate() {
        let reward: Reward = mean_rouge_reward(&sentences_of(c), &sentences_of(r), &settings.rouge)
            .map_err(|e| CliError::data(format!("pair {pair}: {e}")))?;
        reports.push(PairReport {
            pair,
            rouge1: reward.rouge1.into(),
            rouge2: reward.rouge2.into(),
            rouge_l: reward.rouge_l.into(),
            reward: reward.value,
        });
    }
    if args.json {
        let text = String::from_utf8(to_json_pretty(&reports)?).map_err(CliError::internal)?;
        print!("{text}");
        return Ok(());
    }
    println!("pair\tmetric\tprecision\trecall\tf1");
    for r in &reports {
        for (name, s) in [("ROUGE-1", r.rouge1), ("ROUGE-2", r.rouge2), ("ROUGE-L", r.rouge_l)] {
            println!("{}\t{name}\t{:.6}\t{:.6}\t{:.6}", r.pair, s.precision, s.recall, s.f1);
        }
        println!("{}\treward\t\t\t{:.6}", r.pair, r.reward);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_split_on_blank_lines() {
        assert_eq!(line_blocks("a\nb\n\n\nc\n  \n"), vec![vec!["a", "b"], vec!["c"]]);
        assert!(line_blocks("\n\n").is_empty());
    }
}
