use alloc::vec::Vec;

use crate::corpus::Document;
use crate::oracle::{Extract, OracleError};

/// The first `min(m, n)` sentences.
pub fn lead_baseline(doc: &Document, m: usize) -> Result<Extract, OracleError> {
    let indices: Vec<usize> = (0..m.min(doc.len())).collect();
    Extract::new(indices, doc.len())
}
