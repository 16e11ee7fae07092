//! Sample correction: realistic fakes are taken out of the discriminator's
//! negative batch and replaced by less realistic fresh samples.

use ndarray::{Array2, ArrayView2, Axis};

use super::metrics::{rows_to_images, DistanceIndex};
use crate::error::{Error, Result};
use crate::geometry::{count_rectangles, DEFAULT_RECT};

/// Fresh generator samples tried per removed slot.
pub const RETRIES_PER_SLOT: usize = 8;

/// How realism is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScMode {
    /// Realistic = exactly `target` clean rectangles.
    CountFilter { target: usize },
    /// Realistic = DIF below `threshold`.
    DifFilter { threshold: f64 },
}

/// A realism judge bound to its reference data.
#[derive(Debug, Clone)]
pub struct Realism {
    mode: ScMode,
    index: Option<DistanceIndex>,
}

impl Realism {
    pub fn new(mode: ScMode, training: Option<&DistanceIndex>) -> Result<Self> {
        let index = match mode {
            ScMode::CountFilter { .. } => None,
            ScMode::DifFilter { threshold } => {
                if !(threshold > 0.0 && threshold <= 1.0) {
                    return Err(Error::invalid("threshold", format!("{threshold} outside (0, 1]")));
                }
                Some(training.cloned().ok_or(Error::EmptyDataset)?)
            }
        };
        Ok(Realism { mode, index })
    }

    pub fn mode(&self) -> ScMode {
        self.mode
    }

    /// Per row: realistic flag and an unrealism score (larger is less realistic).
    pub fn judge(&self, batch: ArrayView2<f64>) -> Result<Vec<(bool, f64)>> {
        match self.mode {
            ScMode::CountFilter { target } => Ok(rows_to_images(batch)
                .iter()
                .map(|img| {
                    let ok = count_rectangles(img, DEFAULT_RECT, DEFAULT_RECT).is_exactly(target);
                    (ok, if ok { 0.0 } else { 1.0 })
                })
                .collect()),
            ScMode::DifFilter { threshold } => {
                let index = self.index.as_ref().expect("checked at construction");
                Ok(index.dif(batch)?.into_iter().map(|d| (d < threshold, d)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScOutcome {
    /// Filtered negative batch; empty when the step is skipped.
    pub batch: Array2<f64>,
    pub removed: usize,
    pub replaced: usize,
    /// Slots that found no unrealistic replacement and were dropped.
    pub dropped: usize,
    pub skipped: bool,
}

/// Filter a batch of generated images (one per row).
///
/// Each realistic row is replaced by the least realistic of
/// [`RETRIES_PER_SLOT`] fresh samples from `fresh`, or dropped when all of
/// them are realistic too. If nothing survives, the outcome is marked skipped.
pub fn sc_filter(
    fakes: ArrayView2<f64>,
    realism: &Realism,
    mut fresh: impl FnMut(usize) -> Result<Array2<f64>>,
) -> Result<ScOutcome> {
    if fakes.nrows() == 0 {
        return Err(Error::invalid("fakes", "empty batch"));
    }
    let verdicts = realism.judge(fakes)?;
    let removed: Vec<usize> = verdicts.iter().enumerate().filter(|(_, v)| v.0).map(|(i, _)| i).collect();
    if removed.is_empty() {
        return Ok(ScOutcome { batch: fakes.to_owned(), removed: 0, replaced: 0, dropped: 0, skipped: false });
    }
    let candidates = fresh(removed.len() * RETRIES_PER_SLOT)?;
    let cand_verdicts = realism.judge(candidates.view())?;

    let mut keep: Vec<usize> = Vec::with_capacity(fakes.nrows());
    let mut rows = Vec::with_capacity(fakes.nrows());
    for (i, v) in verdicts.iter().enumerate() {
        if !v.0 {
            keep.push(i);
        }
    }
    let mut batch = fakes.select(Axis(0), &keep);
    let mut replaced = 0;
    for slot in 0..removed.len() {
        let lo = slot * RETRIES_PER_SLOT;
        let best = (lo..lo + RETRIES_PER_SLOT)
            .filter(|&c| !cand_verdicts[c].0)
            .fold(None, |acc: Option<usize>, c| match acc {
                Some(b) if cand_verdicts[b].1 >= cand_verdicts[c].1 => Some(b),
                _ => Some(c),
            });
        if let Some(c) = best {
            rows.push(c);
            replaced += 1;
        }
    }
    if !rows.is_empty() {
        let extra = candidates.select(Axis(0), &rows);
        batch = ndarray::concatenate(Axis(0), &[batch.view(), extra.view()]).expect("matching widths");
    }
    let dropped = removed.len() - replaced;
    Ok(ScOutcome {
        skipped: batch.nrows() == 0,
        batch,
        removed: removed.len(),
        replaced,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_paired, generate_with_count, BinaryImage};
    use crate::tinygan::metrics::images_to_rows;

    fn realism_count2() -> Realism {
        Realism::new(ScMode::CountFilter { target: 2 }, None).unwrap()
    }

    #[test]
    fn unrealistic_batch_passes_through() {
        let three = generate_with_count(5, 3, 1).unwrap().images;
        let rows = images_to_rows(&three);
        let out = sc_filter(rows.view(), &realism_count2(), |_| panic!("no retries needed")).unwrap();
        assert_eq!(out.batch, rows);
        assert!(!out.skipped);
    }

    #[test]
    fn realistic_slots_are_replaced_or_dropped() {
        let two = generate_paired(2, 1).unwrap().images; // 4 realistic
        let three = generate_with_count(3, 3, 1).unwrap().images; // 3 unrealistic
        let mut mixed = vec![two[0].clone(), three[0].clone(), two[1].clone(), three[1].clone(), two[2].clone()];
        mixed.push(three[2].clone());
        let rows = images_to_rows(&mixed);
        let blank = BinaryImage::zeros(32, 32);
        // first slot's retries are all realistic, the other two find a blank
        let out = sc_filter(rows.view(), &realism_count2(), |n| {
            assert_eq!(n, 3 * RETRIES_PER_SLOT);
            let mut imgs = vec![two[3].clone(); RETRIES_PER_SLOT];
            imgs.extend(std::iter::repeat_n(blank.clone(), 2 * RETRIES_PER_SLOT));
            Ok(images_to_rows(&imgs))
        })
        .unwrap();
        assert_eq!((out.removed, out.replaced, out.dropped), (3, 2, 1));
        assert_eq!(out.batch.nrows(), 5);
        let kept = rows_to_images(out.batch.view());
        // exactly the two-rectangle images are gone
        assert!(kept.iter().all(|img| !count_rectangles(img, 8, 8).is_exactly(2)));
        assert_eq!(kept.iter().filter(|img| **img == blank).count(), 2);
    }

    #[test]
    fn all_realistic_everywhere_skips() {
        let ds = generate_paired(2, 3).unwrap();
        let index = DistanceIndex::new(&ds.images).unwrap();
        let realism = Realism::new(ScMode::DifFilter { threshold: 0.1 }, Some(&index)).unwrap();
        let rows = images_to_rows(&ds.images);
        let out = sc_filter(rows.view(), &realism, |n| {
            Ok(images_to_rows(&vec![ds.images[0].clone(); n]))
        })
        .unwrap();
        assert!(out.skipped);
        assert_eq!(out.batch.nrows(), 0);
    }

    #[test]
    fn dif_mode_keeps_the_least_realistic_retry() {
        let ds = generate_paired(1, 3).unwrap();
        let index = DistanceIndex::new(&ds.images).unwrap();
        let realism = Realism::new(ScMode::DifFilter { threshold: 0.1 }, Some(&index)).unwrap();
        let rows = images_to_rows(&ds.images[..1]);
        let grey = BinaryImage::filled(32, 32, 0.5);
        let white = BinaryImage::filled(32, 32, 1.0);
        let out = sc_filter(rows.view(), &realism, |n| {
            let mut imgs = vec![ds.images[1].clone(); n];
            imgs[2] = grey.clone();
            imgs[5] = white.clone();
            Ok(images_to_rows(&imgs))
        })
        .unwrap();
        assert_eq!(rows_to_images(out.batch.view()), vec![white]);
    }

    #[test]
    fn threshold_must_be_a_fraction() {
        let ds = generate_paired(1, 3).unwrap();
        let index = DistanceIndex::new(&ds.images).unwrap();
        assert!(Realism::new(ScMode::DifFilter { threshold: 0.0 }, Some(&index)).is_err());
        assert!(Realism::new(ScMode::DifFilter { threshold: 0.1 }, None).is_err());
    }
}
