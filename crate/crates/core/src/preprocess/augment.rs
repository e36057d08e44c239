use std::collections::BTreeMap;

use super::FeatureTensor;
use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

/// Balances classes by synthesising noisy copies of training samples.
///
/// Every class with fewer samples than the largest one gains samples until
/// the counts match. Synthetic sample `k` of a class copies that class's
/// `k mod n`-th sample and adds i.i.d. `N(0, sigma^2)` noise to every
/// feature. Each synthetic sample draws from its own child stream of `rng`.
///
/// The output holds the input samples in order followed by the synthetic
/// ones grouped by ascending class.
pub fn augment(train: &[FeatureTensor], sigma: f64, rng: &Rng) -> Result<Vec<FeatureTensor>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Parameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in train.iter().enumerate() {
        by_class.entry(t.label_index).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);

    let mut out = train.to_vec();
    for (&class, members) in &by_class {
        for k in 0..target - members.len() {
            let source = &train[members[k % members.len()]];
            let mut noise_rng = rng.split(((class as u64) << 32) | k as u64);
            let noise = Tensor::normal(&mut noise_rng, source.data.shape(), 0.0, sigma)?;
            let data = source.data.zip_map(&noise, |x, n| x + n)?;
            out.push(FeatureTensor {
                data,
                label_index: class,
                source_id: source.source_id.clone(),
                synthetic: true,
            });
        }
    }
    Ok(out)
}
