//! Reader for the MNIST IDX container.
//!
//! Layout: a big-endian `u32` magic (`0x0803` for 3-D image data, `0x0801`
//! for 1-D label data), one big-endian `u32` per dimension, then the raw
//! unsigned bytes.

use std::path::{Path, PathBuf};

use sqnn_core::dataset::RawDigits;

use crate::error::{CliError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }

    pub fn images_path(self, dir: &Path) -> PathBuf {
        dir.join(format!("{}-images-idx3-ubyte", self.prefix()))
    }

    pub fn labels_path(self, dir: &Path) -> PathBuf {
        dir.join(format!("{}-labels-idx1-ubyte", self.prefix()))
    }
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail(&self, offset: usize, message: impl Into<String>) -> CliError {
        CliError::Format {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let raw = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| self.fail(self.pos, format!("truncated header: missing {what}")))?;
        self.pos += 4;
        Ok(u32::from_be_bytes(raw.try_into().expect("four bytes")))
    }

    fn header(&mut self, magic: u32, dims: usize) -> Result<Vec<usize>> {
        let found = self.u32("magic number")?;
        if found != magic {
            return Err(self.fail(0, format!("bad magic number 0x{found:08x}, expected 0x{magic:08x}")));
        }
        (0..dims)
            .map(|i| self.u32(&format!("dimension {i}")).map(|d| d as usize))
            .collect()
    }

    fn payload(&self, len: usize) -> Result<&[u8]> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(self.fail(
                self.bytes.len(),
                format!("truncated data: expected {len} bytes after the header, found {available}"),
            ));
        }
        Ok(&self.bytes[self.pos..self.pos + len])
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Decodes an image file and its label file; the counts must agree.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<RawDigits> {
    let image_bytes = read(images_path)?;
    let label_bytes = read(labels_path)?;
    let mut img = Cursor {
        path: images_path,
        bytes: &image_bytes,
        pos: 0,
    };
    let dims = img.header(IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(img.fail(8, format!("empty image dimensions {rows}x{cols}")));
    }
    let pixels = img.payload(count * rows * cols)?;

    let mut lab = Cursor {
        path: labels_path,
        bytes: &label_bytes,
        pos: 0,
    };
    let label_count = lab.header(LABELS_MAGIC, 1)?[0];
    if label_count != count {
        return Err(lab.fail(4, format!("{label_count} labels for {count} images")));
    }
    let labels = lab.payload(count)?.to_vec();
    if let Some(i) = labels.iter().position(|&d| d > 9) {
        return Err(lab.fail(8 + i, format!("label {} is not a digit", labels[i])));
    }

    Ok(RawDigits {
        rows,
        cols,
        images: pixels.chunks_exact(rows * cols).map(<[u8]>::to_vec).collect(),
        labels,
    })
}

pub fn load_split(dir: &Path, split: Split) -> Result<RawDigits> {
    load_idx(&split.images_path(dir), &split.labels_path(dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
        let (ip, lp) = (dir.join("img"), dir.join("lab"));
        std::fs::write(&ip, images).unwrap();
        std::fs::write(&lp, labels).unwrap();
        (ip, lp)
    }

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        std::iter::once(magic)
            .chain(dims.iter().copied())
            .flat_map(u32::to_be_bytes)
            .collect()
    }

    fn format_offset(r: Result<RawDigits>) -> (u64, String) {
        match r {
            Err(CliError::Format { offset, message, .. }) => (offset, message),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn reads_a_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut images = header(IMAGES_MAGIC, &[2, 2, 3]);
        images.extend(0..12u8);
        let mut labels = header(LABELS_MAGIC, &[2]);
        labels.extend([3, 6]);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        let raw = load_idx(&ip, &lp).unwrap();
        assert_eq!((raw.rows, raw.cols), (2, 3));
        assert_eq!(raw.images, vec![vec![0, 1, 2, 3, 4, 5], vec![6, 7, 8, 9, 10, 11]]);
        assert_eq!(raw.labels, vec![3, 6]);
    }

    #[test]
    fn reports_byte_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let good_labels = {
            let mut l = header(LABELS_MAGIC, &[2]);
            l.extend([3, 6]);
            l
        };

        let (ip, lp) = write_pair(dir.path(), &header(LABELS_MAGIC, &[2, 2, 2]), &good_labels);
        let (off, msg) = format_offset(load_idx(&ip, &lp));
        assert_eq!(off, 0);
        assert!(msg.contains("magic"));

        let (ip, lp) = write_pair(dir.path(), &header(IMAGES_MAGIC, &[2, 2]), &good_labels);
        assert_eq!(format_offset(load_idx(&ip, &lp)).0, 12);

        let mut short = header(IMAGES_MAGIC, &[2, 2, 2]);
        short.extend([0; 5]);
        let (ip, lp) = write_pair(dir.path(), &short, &good_labels);
        let (off, msg) = format_offset(load_idx(&ip, &lp));
        assert_eq!(off, 21);
        assert!(msg.contains("truncated"));

        let mut full = header(IMAGES_MAGIC, &[2, 2, 2]);
        full.extend([0; 8]);
        let mut three = header(LABELS_MAGIC, &[3]);
        three.extend([3, 6, 6]);
        let (ip, lp) = write_pair(dir.path(), &full, &three);
        let (off, msg) = format_offset(load_idx(&ip, &lp));
        assert_eq!(off, 4);
        assert!(msg.contains("3 labels for 2 images"));
    }

    #[test]
    fn missing_files_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_split(dir.path(), Split::Train).unwrap_err();
        assert!(matches!(err, CliError::Data(_)));
        assert_eq!(err.exit_code(), crate::error::exit::DATA);
    }
}
