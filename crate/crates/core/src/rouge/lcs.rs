use alloc::vec;
use alloc::vec::Vec;

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Reference positions covered by the rightmost LCS alignment of
/// `reference` against `candidate`, in increasing order.
///
/// Among all maximum-length alignments, the chosen one is the largest when
/// its `(reference, candidate)` index pairs are compared from the last pair
/// backwards. Walking back from the end, a reference position is taken as
/// soon as some maximum alignment can end on it, paired with the latest
/// candidate position that allows that.
pub fn lcs_reference_hits<T: PartialEq>(reference: &[T], candidate: &[T]) -> Vec<usize> {
    let rows = reference.len();
    let cols = candidate.len();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let width = cols + 1;
    let mut table = vec![0u32; (rows + 1) * width];
    for i in 1..=rows {
        for j in 1..=cols {
            table[i * width + j] = if reference[i - 1] == candidate[j - 1] {
                table[(i - 1) * width + j - 1] + 1
            } else {
                table[(i - 1) * width + j].max(table[i * width + j - 1])
            };
        }
    }

    let mut hits = Vec::new();
    let (mut i, mut j) = (rows, cols);
    while i > 0 && j > 0 {
        let remaining = table[i * width + j];
        if remaining == 0 {
            break;
        }
        let anchor = (1..=j).rev().find(|&jj| {
            reference[i - 1] == candidate[jj - 1] && table[(i - 1) * width + jj - 1] + 1 == remaining
        });
        match anchor {
            Some(jj) => {
                hits.push(i - 1);
                i -= 1;
                j = jj - 1;
            }
            None => i -= 1,
        }
    }
    hits.reverse();
    hits
}
