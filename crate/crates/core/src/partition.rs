//! Assignment of image pixels to feature-extractor devices.
//!
//! Segments are contiguous rectangles. Pixel indices are row-major into the
//! `height × width` image and each segment lists its pixels in row-major
//! order, which is the order they are loaded onto the device's data qubits.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::math::round;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Role {
    Extractor,
    Predictor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviceSpec {
    pub device_id: String,
    /// Data qubits available, not counting the readout qubit.
    pub data_qubit_capacity: usize,
    pub role: Role,
}

impl DeviceSpec {
    pub fn new(device_id: impl Into<String>, data_qubit_capacity: usize, role: Role) -> Self {
        DeviceSpec {
            device_id: device_id.into(),
            data_qubit_capacity,
            role,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PartitionStrategy {
    EvenNoOverlap,
    UnevenNoOverlap,
    EvenOverlap,
}

impl core::str::FromStr for PartitionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" | "EvenNoOverlap" => Ok(PartitionStrategy::EvenNoOverlap),
            "uneven" | "UnevenNoOverlap" => Ok(PartitionStrategy::UnevenNoOverlap),
            "overlap" | "EvenOverlap" => Ok(PartitionStrategy::EvenOverlap),
            other => Err(Error::Config(alloc::format!(
                "unknown partition strategy {other:?}, expected even, uneven or overlap"
            ))),
        }
    }
}

/// Axis-aligned tile of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.height * self.width
    }

    fn contains(&self, r: usize, c: usize) -> bool {
        (self.row..self.row + self.height).contains(&r) && (self.col..self.col + self.width).contains(&c)
    }

    fn pixels(&self, image_width: usize) -> Vec<usize> {
        (self.row..self.row + self.height)
            .flat_map(|r| (self.col..self.col + self.width).map(move |c| r * image_width + c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PartitionPlan {
    image_shape: (usize, usize),
    strategy: PartitionStrategy,
    tiles: Vec<Rect>,
    segments: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Builds a plan from explicit tiles, checking bounds and, for the
    /// non-overlapping strategies, exact coverage.
    pub fn from_tiles(image_shape: (usize, usize), strategy: PartitionStrategy, tiles: Vec<Rect>) -> Result<Self> {
        let (h, w) = image_shape;
        for t in &tiles {
            if t.area() == 0 || t.row + t.height > h || t.col + t.width > w {
                return Err(Error::Partition(alloc::format!(
                    "tile {t:?} does not fit a {h}x{w} image"
                )));
            }
        }
        let segments = tiles.iter().map(|t| t.pixels(w)).collect();
        let plan = PartitionPlan {
            image_shape,
            strategy,
            tiles,
            segments,
        };
        let counts = plan.coverage_counts();
        let expect_once = strategy != PartitionStrategy::EvenOverlap;
        if let Some(i) = counts.iter().position(|&c| c == 0 || (expect_once && c != 1)) {
            return Err(Error::Partition(alloc::format!(
                "pixel {i} is covered {} times under {strategy:?}",
                counts[i]
            )));
        }
        Ok(plan)
    }

    /// Re-checks a plan obtained from outside (e.g. a checkpoint).
    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::from_tiles(self.image_shape, self.strategy, self.tiles.clone())?;
        if rebuilt.segments != self.segments {
            return Err(Error::Partition("segments do not match their tiles".into()));
        }
        Ok(())
    }

    pub fn image_shape(&self) -> (usize, usize) {
        self.image_shape
    }

    pub fn num_pixels(&self) -> usize {
        self.image_shape.0 * self.image_shape.1
    }

    pub fn strategy(&self) -> PartitionStrategy {
        self.strategy
    }

    pub fn tiles(&self) -> &[Rect] {
        &self.tiles
    }

    pub fn segments(&self) -> &[Vec<usize>] {
        &self.segments
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    /// Which segments each pixel belongs to, as a count per pixel.
    pub fn coverage_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_pixels()];
        for seg in &self.segments {
            for &p in seg {
                counts[p] += 1;
            }
        }
        counts
    }

    /// Segment `i`'s pixel values, row-major.
    pub fn gather(&self, image: &[f64], i: usize) -> Result<Vec<f64>> {
        crate::error::check_len("image pixels", self.num_pixels(), image.len())?;
        crate::error::check_index(i, self.segments.len())?;
        Ok(self.segments[i].iter().map(|&p| image[p]).collect())
    }

    /// One character per pixel naming its segment (lowest id when tiles
    /// overlap). Overlapping plans get a second grid with coverage counts.
    pub fn render(&self) -> String {
        let (h, w) = self.image_shape;
        let mut out = String::new();
        for r in 0..h {
            for c in 0..w {
                let id = self.tiles.iter().position(|t| t.contains(r, c));
                out.push(id.map_or('.', segment_char));
            }
            out.push('\n');
        }
        if self.strategy == PartitionStrategy::EvenOverlap {
            let counts = self.coverage_counts();
            let shared = counts.iter().filter(|&&c| c > 1).count();
            let _ = writeln!(out, "coverage ({shared} shared pixels):");
            for row in counts.chunks(w) {
                for &c in row {
                    out.push(core::char::from_digit(c.min(35) as u32, 36).unwrap_or('#'));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn segment_char(i: usize) -> char {
    core::char::from_digit((i % 36) as u32, 36).unwrap_or('?')
}

fn extractor_capacities(devices: &[DeviceSpec]) -> Vec<usize> {
    devices
        .iter()
        .filter(|d| d.role == Role::Extractor)
        .map(|d| d.data_qubit_capacity)
        .collect()
}

/// Cuts a `height × width` image into one segment per extractor device (in
/// device order) following `strategy`. Predictor devices are ignored.
pub fn make_partition(
    image_shape: (usize, usize),
    devices: &[DeviceSpec],
    strategy: PartitionStrategy,
) -> Result<PartitionPlan> {
    let caps = extractor_capacities(devices);
    let (h, w) = image_shape;
    let infeasible = |why: &str| {
        Error::Partition(alloc::format!(
            "cannot tile a {h}x{w} image for capacities {caps:?} with {strategy:?}: {why}"
        ))
    };
    if h == 0 || w == 0 {
        return Err(infeasible("empty image"));
    }
    if caps.is_empty() {
        return Err(infeasible("no extractor devices"));
    }
    if caps.contains(&0) {
        return Err(infeasible("zero-capacity device"));
    }
    let tiles = match strategy {
        PartitionStrategy::EvenNoOverlap => {
            even_grid(h, w, &caps, false).ok_or_else(|| infeasible("no grid of equal tiles matches the capacities"))?
        }
        PartitionStrategy::EvenOverlap => {
            even_grid(h, w, &caps, true).ok_or_else(|| infeasible("no grid of equal tiles covers the image"))?
        }
        PartitionStrategy::UnevenNoOverlap => {
            if caps.iter().sum::<usize>() != h * w {
                return Err(infeasible("capacities must sum to the pixel count"));
            }
            let mut covered = alloc::vec![false; h * w];
            let mut tiles = Vec::with_capacity(caps.len());
            if !pack(h, w, &caps, &mut covered, &mut tiles) {
                return Err(infeasible("no rectangular tiling in device order"));
            }
            tiles
        }
    };
    PartitionPlan::from_tiles(image_shape, strategy, tiles)
}

/// `(height, width)` factorizations of `area`, squarest first, wider before taller.
fn shapes(area: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (1..=area)
        .filter(|d| area.is_multiple_of(*d))
        .map(|d| (d, area / d))
        .collect();
    out.sort_by_key(|&(a, b)| (a.abs_diff(b), a > b));
    out
}

fn even_grid(h: usize, w: usize, caps: &[usize], overlap: bool) -> Option<Vec<Rect>> {
    let p = caps.len();
    let c = caps[0];
    if caps.iter().any(|&x| x != c) {
        return None;
    }
    if !overlap && p * c != h * w {
        return None;
    }
    // (excess cells, grid, tile)
    type Layout = (usize, (usize, usize), (usize, usize));
    let mut best: Option<Layout> = None;
    for (gr, gc) in shapes(p) {
        for (th, tw) in shapes(c) {
            let fits = th <= h && tw <= w && gr * th >= h && gc * tw >= w && gr <= h - th + 1 && gc <= w - tw + 1;
            let exact = gr * th == h && gc * tw == w;
            if !fits || (!overlap && !exact) {
                continue;
            }
            let excess = gr * th - h + gc * tw - w;
            if best.is_none_or(|(e, _, _)| excess < e) {
                best = Some((excess, (gr, gc), (th, tw)));
            }
        }
    }
    let (_, (gr, gc), (th, tw)) = best?;
    let offsets = |n: usize, tile: usize, extent: usize| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if n == 1 {
                    0
                } else {
                    round((i * (extent - tile)) as f64 / (n - 1) as f64) as usize
                }
            })
            .collect()
    };
    let rows = offsets(gr, th, h);
    let cols = offsets(gc, tw, w);
    Some(
        rows.iter()
            .flat_map(|&row| {
                cols.iter().map(move |&col| Rect {
                    row,
                    col,
                    height: th,
                    width: tw,
                })
            })
            .collect(),
    )
}

// Places devices in order, each at the first uncovered pixel in row-major
// order, backtracking over tile shapes.
fn pack(h: usize, w: usize, caps: &[usize], covered: &mut [bool], tiles: &mut Vec<Rect>) -> bool {
    let Some(&cap) = caps.get(tiles.len()) else {
        return covered.iter().all(|&c| c);
    };
    let Some(first) = covered.iter().position(|&c| !c) else {
        return false;
    };
    let (row, col) = (first / w, first % w);
    for (th, tw) in shapes(cap) {
        let rect = Rect {
            row,
            col,
            height: th,
            width: tw,
        };
        if row + th > h || col + tw > w || rect.pixels(w).iter().any(|&p| covered[p]) {
            continue;
        }
        rect.pixels(w).iter().for_each(|&p| covered[p] = true);
        tiles.push(rect);
        if pack(h, w, caps, covered, tiles) {
            return true;
        }
        tiles.pop();
        rect.pixels(w).iter().for_each(|&p| covered[p] = false);
    }
    false
}
