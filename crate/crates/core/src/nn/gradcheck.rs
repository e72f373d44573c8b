use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GradBuffer, NnError, ParamId, ParameterStore};

/// Denominator floor for the relative error, so that coordinates whose true
/// gradient is zero are judged on absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Central-difference step.
    pub delta: f64,
    /// Coordinates sampled per parameter; `None` checks all of them.
    pub samples_per_param: Option<usize>,
    pub seed: u64,
    /// Flat coordinate ranges left out (frozen rows).
    pub exclude: Vec<(ParamId, Range<usize>)>,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            delta: 1e-5,
            samples_per_param: None,
            seed: 0,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = libm::fabs(analytic)
        .max(libm::fabs(numeric))
        .max(RELATIVE_ERROR_FLOOR);
    libm::fabs(analytic - numeric) / scale
}

/// Compares `analytic` gradients with central finite differences of `loss`.
/// Every perturbed value is restored before returning.
pub fn finite_difference_check<F>(
    store: &mut ParameterStore,
    analytic: &GradBuffer,
    mut loss: F,
    check: &GradCheck,
) -> Result<GradCheckReport, NnError>
where
    F: FnMut(&ParameterStore) -> Result<f64, NnError>,
{
    let base = loss(store)?;
    if !base.is_finite() {
        return Err(NnError::NonFinite("loss"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let ids: Vec<ParamId> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let len = store.get(id).value.len();
        let coords: Vec<usize> = match check.samples_per_param {
            None => (0..len).collect(),
            Some(k) => (0..k).map(|_| rng.gen_range(0..len)).collect(),
        };
        for index in coords {
            let excluded = check
                .exclude
                .iter()
                .any(|(p, range)| *p == id && range.contains(&index));
            if excluded {
                continue;
            }
            let original = store.get(id).value.data()[index];
            store.get_mut(id).value.data_mut()[index] = original + check.delta;
            let plus = loss(store);
            store.get_mut(id).value.data_mut()[index] = original - check.delta;
            let minus = loss(store);
            store.get_mut(id).value.data_mut()[index] = original;
            let (plus, minus) = (plus?, minus?);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(NnError::NonFinite("loss"));
            }
            let numeric = (plus - minus) / (2.0 * check.delta);
            let err = relative_error(analytic.at(id, index), numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((store.get(id).name.clone(), index));
            }
        }
    }
    Ok(report)
}
