use alloc::string::String;
use alloc::vec;

use super::{CorpusError, Vocabulary, PAD_ID, UNK_ID};
use crate::nn::Tensor;

/// Builds a `vocab.len() x dim` embedding matrix from text vectors, one
/// token per line followed by `dim` numbers.
///
/// Rows of tokens missing from the file, the unknown row and the padding row
/// stay zero. A leading `count dim` header line, as written by word2vec, is
/// skipped.
pub fn parse_embeddings(
    contents: &str,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<Tensor, CorpusError> {
    let mut matrix = Tensor::zeros(vec![vocab.len(), dim]);
    for (number, line) in contents.lines().enumerate() {
        let line_no = number + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: alloc::vec::Vec<&str> = fields.collect();
        if number == 0 && values.len() == 1 && is_count(token) && is_count(values[0]) {
            continue;
        }
        if values.len() != dim {
            return Err(CorpusError::EmbeddingDimension {
                line: line_no,
                expected: dim,
                found: values.len(),
            });
        }
        let id = vocab.id(token);
        let row = if id == UNK_ID || id == PAD_ID {
            None
        } else {
            Some(id as usize)
        };
        let mut parsed = vec![0.0; dim];
        for (slot, value) in parsed.iter_mut().zip(&values) {
            *slot = value.parse::<f64>().map_err(|_| CorpusError::EmbeddingValue {
                line: line_no,
                value: String::from(*value),
            })?;
            if !slot.is_finite() {
                return Err(CorpusError::EmbeddingValue {
                    line: line_no,
                    value: String::from(*value),
                });
            }
        }
        if let Some(row) = row {
            matrix.data_mut()[row * dim..(row + 1) * dim].copy_from_slice(&parsed);
        }
    }
    Ok(matrix)
}

fn is_count(field: &str) -> bool {
    !field.is_empty() && field.bytes().all(|b| b.is_ascii_digit())
}
