//! Labelled image sets for binary digit classification: class filtering,
//! relabelling to ±1, resizing and per-segment angle extraction.

use alloc::vec::Vec;

use crate::encoding::AngleEncodingConfig;
use crate::error::{check_len, Error, Result};
use crate::math::{ceil, floor};
use crate::partition::PartitionPlan;

/// Decoded IDX contents: byte images and digit labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDigits {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

/// Row-major images with pixels in `[0, 1]` and labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    shape: (usize, usize),
    images: Vec<Vec<f64>>,
    labels: Vec<f64>,
    source_digits: (u8, u8),
}

impl ImageSet {
    pub fn new(
        shape: (usize, usize),
        images: Vec<Vec<f64>>,
        labels: Vec<f64>,
        source_digits: (u8, u8),
    ) -> Result<Self> {
        check_len("labels", images.len(), labels.len())?;
        for img in &images {
            check_len("image pixels", shape.0 * shape.1, img.len())?;
            if img.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Validation("pixel outside [0, 1]".into()));
            }
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Validation("labels must be -1 or +1".into()));
        }
        Ok(ImageSet {
            shape,
            images,
            labels,
            source_digits,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `(digit labelled −1, digit labelled +1)`.
    pub fn source_digits(&self) -> (u8, u8) {
        self.source_digits
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The first `n` samples (all of them if fewer).
    pub fn take(&self, n: usize) -> ImageSet {
        let n = n.min(self.len());
        ImageSet {
            shape: self.shape,
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            source_digits: self.source_digits,
        }
    }

    pub fn downscaled(&self, target: (usize, usize)) -> Result<ImageSet> {
        let resizer = Resizer::new(self.shape, target)?;
        Ok(ImageSet {
            shape: target,
            images: self.images.iter().map(|img| resizer.apply(img)).collect(),
            labels: self.labels.clone(),
            source_digits: self.source_digits,
        })
    }
}

/// Keeps digits `keep.0` (label −1) and `keep.1` (label +1), scaling bytes by 1/255.
pub fn filter_and_relabel(raw: &RawDigits, keep: (u8, u8)) -> Result<ImageSet> {
    check_len("labels", raw.images.len(), raw.labels.len())?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (img, &digit) in raw.images.iter().zip(&raw.labels) {
        let y = if digit == keep.0 {
            -1.0
        } else if digit == keep.1 {
            1.0
        } else {
            continue;
        };
        images.push(img.iter().map(|&b| f64::from(b) / 255.0).collect());
        labels.push(y);
    }
    ImageSet::new((raw.rows, raw.cols), images, labels, keep)
}

/// Resizes a row-major image by averaging its bilinear reconstruction over
/// each output pixel's footprint; the result is clamped to `[0, 1]`.
pub fn downscale(image: &[f64], source: (usize, usize), target: (usize, usize)) -> Result<Vec<f64>> {
    let resizer = Resizer::new(source, target)?;
    check_len("image pixels", source.0 * source.1, image.len())?;
    Ok(resizer.apply(image))
}

struct Resizer {
    source: (usize, usize),
    target: (usize, usize),
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Resizer {
    fn new(source: (usize, usize), target: (usize, usize)) -> Result<Self> {
        let (sh, sw) = source;
        let (th, tw) = target;
        if sh == 0 || sw == 0 || th == 0 || tw == 0 || th > sh || tw > sw {
            return Err(Error::Shape {
                what: "downscale target",
                expected: sh * sw,
                found: th * tw,
            });
        }
        Ok(Resizer {
            source,
            target,
            rows: footprint_weights(sh, th),
            cols: footprint_weights(sw, tw),
        })
    }

    fn apply(&self, image: &[f64]) -> Vec<f64> {
        let (_, sw) = self.source;
        let (th, tw) = self.target;
        // rows first, then columns
        let mut tmp = alloc::vec![0.0; th * sw];
        for (i, weights) in self.rows.iter().enumerate() {
            for &(k, w) in weights {
                let src = &image[k * sw..(k + 1) * sw];
                for (t, s) in tmp[i * sw..(i + 1) * sw].iter_mut().zip(src) {
                    *t += w * s;
                }
            }
        }
        let mut out = alloc::vec![0.0; th * tw];
        for i in 0..th {
            for (j, weights) in self.cols.iter().enumerate() {
                let v: f64 = weights.iter().map(|&(k, w)| w * tmp[i * sw + k]).sum();
                out[i * tw + j] = v.clamp(0.0, 1.0);
            }
        }
        out
    }
}

/// Antiderivative of the unit hat centred at `c`.
fn hat_cdf(c: f64, x: f64) -> f64 {
    let t = x - c;
    if t <= -1.0 {
        0.0
    } else if t <= 0.0 {
        (t + 1.0) * (t + 1.0) / 2.0
    } else if t <= 1.0 {
        1.0 - (1.0 - t) * (1.0 - t) / 2.0
    } else {
        1.0
    }
}

/// Per-output `(source index, weight)` lists for resizing `n_in` samples to `n_out`.
///
/// Source sample `k` sits at `k + 0.5`; the linear interpolant is held
/// constant beyond the outermost samples.
fn footprint_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let first = floor(lo - 1.5) as i64;
            let last = ceil(hi + 0.5) as i64;
            let mut weights: Vec<(usize, f64)> = Vec::new();
            for k in first..=last {
                let c = k as f64 + 0.5;
                let w = (hat_cdf(c, hi) - hat_cdf(c, lo)) / scale;
                if w == 0.0 {
                    continue;
                }
                let idx = k.clamp(0, n_in as i64 - 1) as usize;
                match weights.last_mut() {
                    Some((j, acc)) if *j == idx => *acc += w,
                    _ => weights.push((idx, w)),
                }
            }
            weights
        })
        .collect()
}

/// Encoding angles of every segment of every image: `[sample][segment][pixel]`.
pub fn to_partitioned_angles(
    set: &ImageSet,
    plan: &PartitionPlan,
    encoding: &AngleEncodingConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if set.shape() != plan.image_shape() {
        return Err(Error::Shape {
            what: "image shape",
            expected: plan.num_pixels(),
            found: set.shape().0 * set.shape().1,
        });
    }
    set.images()
        .iter()
        .map(|img| {
            (0..plan.num_segments())
                .map(|i| encoding.angles(&plan.gather(img, i)?))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{make_partition, DeviceSpec, PartitionStrategy, Role};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn area_average(image: &[f64], n: usize, factor: usize) -> Vec<f64> {
        let m = n / factor;
        let mut out = alloc::vec![0.0; m * m];
        for r in 0..n {
            for c in 0..n {
                out[(r / factor) * m + c / factor] += image[r * n + c];
            }
        }
        out.iter().map(|v| v / (factor * factor) as f64).collect()
    }

    #[test]
    fn constant_images_stay_constant() {
        for target in [(2, 2), (3, 3), (4, 4), (6, 6), (8, 8), (5, 7), (28, 28)] {
            let out = downscale(&[0.37; 784], (28, 28), target).unwrap();
            assert_eq!(out.len(), target.0 * target.1);
            assert!(out.iter().all(|v| (v - 0.37).abs() < 1e-12), "{target:?}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for (n_in, n_out) in [(28, 4), (28, 6), (28, 3), (5, 5), (7, 2)] {
            for w in footprint_weights(n_in, n_out) {
                let s: f64 = w.iter().map(|p| p.1).sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(w.iter().all(|p| p.1 > 0.0));
            }
        }
    }

    #[test]
    fn identity_size_is_identity() {
        let img: Vec<f64> = (0..16).map(|i| f64::from(i) / 15.0).collect();
        let out = downscale(&img, (4, 4), (4, 4)).unwrap();
        // the interpolant averaged over a unit cell mixes in 1/8 of each neighbour
        for r in 1..3 {
            for c in 1..3 {
                assert!((out[r * 4 + c] - img[r * 4 + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_images_match_area_average() {
        let patterns: [fn(f64, f64) -> f64; 3] = [
            |r, c| (r + c) / 54.0,
            |r, c| 0.5 + 0.4 * (r / 9.0).sin() * (c / 7.0).cos(),
            |r, _| r / 27.0,
        ];
        for f in patterns {
            let img: Vec<f64> = (0..784).map(|i| f((i / 28) as f64, (i % 28) as f64)).collect();
            let got = downscale(&img, (28, 28), (4, 4)).unwrap();
            let oracle = area_average(&img, 28, 7);
            for (g, o) in got.iter().zip(&oracle) {
                assert!((g - o).abs() <= 0.02, "{g} vs {o}");
            }
        }
    }

    #[test]
    fn arbitrary_images_stay_near_area_average() {
        // per axis, the two footprint-edge neighbours carry weight 1/8 each
        // instead of the edge pixels themselves: |Δ| ≤ 2·(2·(1/8)/7)
        let mut img = alloc::vec![0.0; 784];
        for (i, p) in img.iter_mut().enumerate() {
            *p = if (i * 7919) % 5 < 2 { 1.0 } else { 0.0 };
        }
        let got = downscale(&img, (28, 28), (4, 4)).unwrap();
        let oracle = area_average(&img, 28, 7);
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() <= 1.0 / 14.0 + 1e-12);
        }
    }

    #[test]
    fn invalid_targets() {
        assert!(matches!(
            downscale(&[0.0; 784], (28, 28), (0, 4)),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            downscale(&[0.0; 784], (28, 28), (29, 4)),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            downscale(&[0.0; 10], (28, 28), (4, 4)),
            Err(Error::Shape { .. })
        ));
    }

    fn raw() -> RawDigits {
        RawDigits {
            rows: 2,
            cols: 2,
            images: alloc::vec![
                alloc::vec![0, 0, 0, 0],
                alloc::vec![255, 0, 0, 255],
                alloc::vec![1, 2, 3, 4],
                alloc::vec![51, 102, 153, 204],
            ],
            labels: alloc::vec![6, 3, 7, 6],
        }
    }

    #[test]
    fn filtering_keeps_pairs_together() {
        let set = filter_and_relabel(&raw(), (3, 6)).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.labels(), &[1.0, -1.0, 1.0]);
        assert_eq!(set.images()[1], alloc::vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(set.images()[2], alloc::vec![0.2, 0.4, 0.6, 0.8]);
        assert_eq!(set.source_digits(), (3, 6));
        assert_eq!(set.take(1).len(), 1);
        assert_eq!(set.take(10).len(), 3);
    }

    #[test]
    fn partitioned_angles() {
        let devices: Vec<DeviceSpec> = (0..4)
            .map(|i| DeviceSpec::new(alloc::format!("d{i}"), 4, Role::Extractor))
            .collect();
        let plan = make_partition((4, 4), &devices, PartitionStrategy::EvenNoOverlap).unwrap();
        let img: Vec<f64> = (0..16).map(|i| f64::from(i) / 15.0).collect();
        let set = ImageSet::new(
            (4, 4),
            alloc::vec![alloc::vec![0.0; 16], img.clone()],
            alloc::vec![1.0, -1.0],
            (3, 6),
        )
        .unwrap();
        let enc = AngleEncodingConfig::default();
        let angles = to_partitioned_angles(&set, &plan, &enc).unwrap();
        assert!(angles[0].iter().flatten().all(|&a| a == 0.0));
        for (s, seg) in plan.segments().iter().enumerate() {
            for (j, &px) in seg.iter().enumerate() {
                assert_eq!(angles[1][s][j], PI * img[px]);
            }
        }
        assert_eq!(angles[1][3][3], PI);
        let wrong = ImageSet::new((2, 2), alloc::vec![], alloc::vec![], (3, 6)).unwrap();
        assert!(matches!(
            to_partitioned_angles(&wrong, &plan, &enc),
            Err(Error::Shape { .. })
        ));
    }

    proptest! {
        #[test]
        fn downscale_is_monotone_and_bounded(
            base in proptest::collection::vec(0.0f64..=1.0, 784),
            bump in proptest::collection::vec(0.0f64..=0.3, 784),
            t in 1usize..=8,
        ) {
            let higher: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| (a + b).min(1.0)).collect();
            let lo = downscale(&base, (28, 28), (t, t)).unwrap();
            let hi = downscale(&higher, (28, 28), (t, t)).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                prop_assert!(*a <= *b + 1e-12);
                prop_assert!((0.0..=1.0).contains(a));
            }
        }
    }
}
