//! Frame-count normalisation strategies.
//!
//! Each strategy produces a [`FrameSlot`] plan for a `(source length,
//! target length)` pair; [`normalize_frames`] materialises it. Strategies are
//! looked up by name through [`normalizers`]:
//!
//! | name | behaviour when shorter | when longer |
//! |---|---|---|
//! | `repetition` | every frame repeated as evenly as possible | evenly spaced frames kept |
//! | `truncation` | falls back to `repetition` | first `target` frames |
//! | `pad-terminal` | last frame repeated at the end | first `target` frames |
//! | `pad-special:<v>` | frames filled with `v` appended | first `target` frames |

use crate::dataset::{Frame, SkeletonSequence};
use crate::error::{Error, Result};
use crate::registry::{no_argument, Registry};

pub const DEFAULT_NORMALIZATION: &str = "repetition";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrameSlot {
    Source(usize),
    Fill(f64),
}

pub trait FrameNormalizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Spec string that recreates this strategy through the registry.
    fn spec(&self) -> String {
        self.name().to_string()
    }

    /// Exactly `target` slots for a source of `source_len >= 1` frames.
    fn plan(&self, source_len: usize, target: usize) -> Vec<FrameSlot>;
}

/// Per-frame repeat counts for stretching `n` frames to `target >= n`:
/// the first `target % n` frames get one extra copy.
pub fn repetition_counts(n: usize, target: usize) -> Vec<usize> {
    let (base, extra) = (target / n, target % n);
    (0..n).map(|i| base + usize::from(i < extra)).collect()
}

fn first_frames(n: usize, target: usize) -> Vec<FrameSlot> {
    (0..n.min(target)).map(FrameSlot::Source).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Repetition;

impl FrameNormalizer for Repetition {
    fn name(&self) -> &'static str {
        "repetition"
    }

    fn plan(&self, n: usize, target: usize) -> Vec<FrameSlot> {
        if target >= n {
            repetition_counts(n, target)
                .into_iter()
                .enumerate()
                .flat_map(|(i, c)| std::iter::repeat_n(FrameSlot::Source(i), c))
                .collect()
        } else {
            (0..target)
                .map(|i| FrameSlot::Source(i * n / target))
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Truncation;

impl FrameNormalizer for Truncation {
    fn name(&self) -> &'static str {
        "truncation"
    }

    fn plan(&self, n: usize, target: usize) -> Vec<FrameSlot> {
        if n < target {
            log::warn!("truncation: {n} frames is shorter than {target}, repeating instead");
            return Repetition.plan(n, target);
        }
        first_frames(n, target)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PadTerminal;

impl FrameNormalizer for PadTerminal {
    fn name(&self) -> &'static str {
        "pad-terminal"
    }

    fn plan(&self, n: usize, target: usize) -> Vec<FrameSlot> {
        let mut slots = first_frames(n, target);
        slots.resize(target, FrameSlot::Source(n - 1));
        slots
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PadSpecial {
    pub value: f64,
}

impl FrameNormalizer for PadSpecial {
    fn name(&self) -> &'static str {
        "pad-special"
    }

    fn spec(&self) -> String {
        format!("pad-special:{}", self.value)
    }

    fn plan(&self, n: usize, target: usize) -> Vec<FrameSlot> {
        let mut slots = first_frames(n, target);
        slots.resize(target, FrameSlot::Fill(self.value));
        slots
    }
}

pub fn normalizers() -> Registry<dyn FrameNormalizer> {
    let mut r: Registry<dyn FrameNormalizer> = Registry::new("normalization method");
    r.register("repetition", |arg| {
        no_argument("repetition", arg)?;
        Ok(Box::new(Repetition))
    })
    .register("truncation", |arg| {
        no_argument("truncation", arg)?;
        Ok(Box::new(Truncation))
    })
    .register("pad-terminal", |arg| {
        no_argument("pad-terminal", arg)?;
        Ok(Box::new(PadTerminal))
    })
    .register("pad-special", |arg| {
        let value = match arg {
            None => 0.0,
            Some(a) => a
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("pad-special value {a:?} is not a number")))?,
        };
        if !value.is_finite() {
            return Err(Error::Config("pad-special value must be finite".into()));
        }
        Ok(Box::new(PadSpecial { value }))
    });
    r
}

pub fn normalize_frames(
    seq: &SkeletonSequence,
    target: usize,
    method: &dyn FrameNormalizer,
) -> Result<SkeletonSequence> {
    if target < 1 {
        return Err(Error::Parameter("target frame count must be >= 1".into()));
    }
    let src = seq.frames();
    let plan = method.plan(src.len(), target);
    debug_assert_eq!(plan.len(), target);
    let frames = plan
        .into_iter()
        .map(|slot| match slot {
            FrameSlot::Source(i) => src[i].clone(),
            FrameSlot::Fill(v) => Frame::splat(v),
        })
        .collect();
    seq.with_frames(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Joint, JOINT_COUNT};
    use proptest::prelude::*;

    fn indices(plan: &[FrameSlot]) -> Vec<usize> {
        plan.iter()
            .map(|s| match s {
                FrameSlot::Source(i) => *i,
                FrameSlot::Fill(_) => usize::MAX,
            })
            .collect()
    }

    /// Smallest achievable maximum repeat count by trying every composition
    /// of `target` into `n` positive parts.
    fn brute_force_min_max(n: usize, target: usize) -> usize {
        fn go(parts_left: usize, remaining: usize, best_so_far: usize) -> usize {
            if parts_left == 0 {
                return if remaining == 0 {
                    best_so_far
                } else {
                    usize::MAX
                };
            }
            let mut best = usize::MAX;
            for c in 1..=remaining.saturating_sub(parts_left - 1) {
                best = best.min(go(parts_left - 1, remaining - c, best_so_far.max(c)));
            }
            best
        }
        go(n, target, 0)
    }

    #[test]
    fn repetition_three_to_seven() {
        assert_eq!(indices(&Repetition.plan(3, 7)), [0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(repetition_counts(3, 7), [3, 2, 2]);
        assert_eq!(indices(&Repetition.plan(1, 5)), [0; 5]);
    }

    #[test]
    fn repetition_matches_brute_force_optimum() {
        for n in 1..=6 {
            for t in n..=12 {
                let counts = repetition_counts(n, t);
                assert_eq!(
                    *counts.iter().max().unwrap(),
                    brute_force_min_max(n, t),
                    "n={n} t={t}"
                );
            }
        }
    }

    #[test]
    fn identity_when_lengths_match() {
        let registry = normalizers();
        for name in ["repetition", "truncation", "pad-terminal", "pad-special:-1"] {
            let m = registry.create(name).unwrap();
            assert_eq!(indices(&m.plan(9, 9)), (0..9).collect::<Vec<_>>(), "{name}");
        }
    }

    #[test]
    fn padding_and_truncation() {
        assert_eq!(indices(&PadTerminal.plan(3, 5)), [0, 1, 2, 2, 2]);
        assert_eq!(indices(&Truncation.plan(5, 3)), [0, 1, 2]);
        assert_eq!(indices(&Truncation.plan(2, 4)), [0, 0, 1, 1]);
        assert_eq!(
            PadSpecial { value: -1.0 }.plan(2, 3),
            [
                FrameSlot::Source(0),
                FrameSlot::Source(1),
                FrameSlot::Fill(-1.0)
            ]
        );
    }

    #[test]
    fn registry_round_trips_specs() {
        let r = normalizers();
        for spec in [
            "repetition",
            "truncation",
            "pad-terminal",
            "pad-special:2.5",
        ] {
            assert_eq!(r.create(spec).unwrap().spec(), spec);
        }
        assert!(r.create("pad-special:abc").is_err());
        assert!(r.create("bogus").is_err());
    }

    #[test]
    fn normalize_materialises_frames() {
        let frames: Vec<Frame> = (0..3)
            .map(|t| Frame::new([Joint::new(t as f64, 0.0, 0.0, 1.0).unwrap(); JOINT_COUNT]))
            .collect();
        let seq = SkeletonSequence::new(frames, "eating", "s").unwrap();
        let out = normalize_frames(&seq, 7, &Repetition).unwrap();
        let xs: Vec<f64> = out.frames().iter().map(|f| f.joints[0].x).collect();
        assert_eq!(xs, [0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        assert!(normalize_frames(&seq, 0, &Repetition).is_err());
        let padded = normalize_frames(&seq, 4, &PadSpecial { value: 9.0 }).unwrap();
        assert_eq!(padded.frames()[3], Frame::splat(9.0));
    }

    proptest! {
        #[test]
        fn every_method_hits_target(n in 1usize..200, t in 1usize..400) {
            let r = normalizers();
            for name in r.names().collect::<Vec<_>>() {
                let m = r.create(name).unwrap();
                prop_assert_eq!(m.plan(n, t).len(), t);
            }
        }

        #[test]
        fn repetition_is_even_and_ordered(n in 1usize..300, extra in 0usize..600) {
            let t = n + extra;
            let idx = indices(&Repetition.plan(n, t));
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
            let mut firsts = idx.clone();
            firsts.dedup();
            prop_assert_eq!(firsts, (0..n).collect::<Vec<_>>());
            let counts = repetition_counts(n, t);
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}
