//! Dataset ingestion and deterministic sampling.
//!
//! MNIST-style IDX files are parsed bit-exactly (big-endian magic, dims,
//! unsigned pixel bytes scaled to `[0,1]` by /255). Binary tasks are built
//! by sampling two digits without replacement into exactly class-balanced
//! train and test sets; basis examples are a balanced random subset of the
//! training set. A synthetic two-blob generator covers tests and demos that
//! have no IDX files at hand.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Stream;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Idx,
    Synthetic,
}

/// Raw decoded IDX pair: flattened images scaled to `[0,1]`, one byte label
/// per image.
#[derive(Debug, Clone)]
pub struct RawIdx {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

/// Examples with 0/1 labels.
///
/// `class_names` is `(negative, positive)`, e.g. `("7", "1")` for the
/// digit task where "1" is the positive class.
#[derive(Debug, Clone)]
pub struct Dataset {
    examples: Vec<Vec<f64>>,
    labels: Vec<u8>,
    class_names: (String, String),
    source: DataSource,
}

impl Dataset {
    pub fn new(
        examples: Vec<Vec<f64>>,
        labels: Vec<u8>,
        class_names: (String, String),
        source: DataSource,
    ) -> Result<Self> {
        if examples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset labels",
                expected: examples.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = examples.first() {
            let dim = first.len();
            if examples.iter().any(|x| x.len() != dim) {
                return Err(Error::InvalidConfig(
                    "dataset examples have inconsistent dimensions".into(),
                ));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidConfig("dataset labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            examples,
            labels,
            class_names,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.examples.first().map_or(0, Vec::len)
    }

    pub fn examples(&self) -> &[Vec<f64>] {
        &self.examples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_names(&self) -> (&str, &str) {
        (&self.class_names.0, &self.class_names.1)
    }

    pub fn source(&self) -> DataSource {
        self.source
    }

    /// In-place standardization `x <- (x - mean) / std` of every feature.
    pub fn standardize(&mut self, mean: f64, std: f64) -> Result<()> {
        if !(std.is_finite() && std > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "standardization needs finite mean and std > 0, got mean={mean}, std={std}"
            )));
        }
        for example in &mut self.examples {
            for value in example {
                *value = (*value - mean) / std;
            }
        }
        Ok(())
    }

    /// Borrowing view of the rows selected by `indices`.
    pub fn view<'a>(&'a self, indices: &'a [usize]) -> DataView<'a> {
        DataView {
            dataset: self,
            indices,
        }
    }
}

/// A subset of a dataset, addressed by position within the subset.
#[derive(Debug, Clone, Copy)]
pub struct DataView<'a> {
    dataset: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> DataView<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn example(&self, i: usize) -> &'a [f64] {
        &self.dataset.examples[self.indices[i]]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.dataset.labels[self.indices[i]]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [f64], u8)> + '_ {
        self.indices.iter().map(|&idx| {
            (
                self.dataset.examples[idx].as_slice(),
                self.dataset.labels[idx],
            )
        })
    }
}

/// Index lists for one experiment: disjoint train/test, basis inside train,
/// all exactly class-balanced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub basis_indices: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Plan for datasets laid out as one positive block followed by one
    /// negative block of `n_train_per_class + n_test_per_class` each (the
    /// layout [`synth_blobs`] produces).
    pub fn contiguous_balanced(
        n_train_per_class: usize,
        n_test_per_class: usize,
        seed: u64,
    ) -> Self {
        let per_class = n_train_per_class + n_test_per_class;
        let mut train_indices = Vec::with_capacity(2 * n_train_per_class);
        let mut test_indices = Vec::with_capacity(2 * n_test_per_class);
        for class in 0..2 {
            let base = class * per_class;
            train_indices.extend(base..base + n_train_per_class);
            test_indices.extend(base + n_train_per_class..base + per_class);
        }
        SplitPlan {
            train_indices,
            test_indices,
            basis_indices: Vec::new(),
            seed,
        }
    }
}

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset,
            needed: 4,
            available: bytes.len().saturating_sub(offset),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse an IDX image/label file pair.
///
/// Images: magic `0x00000803`, then count/rows/cols as big-endian u32, then
/// `count*rows*cols` unsigned pixel bytes, each scaled to `[0,1]` by /255.
/// Labels: magic `0x00000801`, then count, then `count` label bytes. The
/// two counts must agree.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<RawIdx> {
    let image_bytes = read_file(images_path)?;
    let magic = read_u32_be(&image_bytes, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: images_path.to_path_buf(),
            expected: IMAGES_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(&image_bytes, 4, images_path)? as usize;
    let rows = read_u32_be(&image_bytes, 8, images_path)? as usize;
    let cols = read_u32_be(&image_bytes, 12, images_path)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(format!(
            "{}: image dimensions {rows}x{cols} are zero",
            images_path.display()
        )));
    }
    // Header dims are attacker-controlled; don't let the product wrap.
    let pixel_bytes = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}: image dimensions {count}x{rows}x{cols} overflow",
                images_path.display()
            ))
        })?;
    if image_bytes.len() < 16 + pixel_bytes {
        return Err(Error::Truncated {
            path: images_path.to_path_buf(),
            offset: 16,
            needed: pixel_bytes,
            available: image_bytes.len() - 16,
        });
    }

    let label_bytes = read_file(labels_path)?;
    let magic = read_u32_be(&label_bytes, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: labels_path.to_path_buf(),
            expected: LABELS_MAGIC,
            got: magic,
        });
    }
    let label_count = read_u32_be(&label_bytes, 4, labels_path)? as usize;
    if label_bytes.len() < 8 + label_count {
        return Err(Error::Truncated {
            path: labels_path.to_path_buf(),
            offset: 8,
            needed: label_count,
            available: label_bytes.len() - 8,
        });
    }
    if count != label_count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }

    let images = image_bytes[16..16 + pixel_bytes]
        .chunks_exact(rows * cols)
        .map(|chunk| chunk.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    let labels = label_bytes[8..8 + label_count].to_vec();
    Ok(RawIdx {
        images,
        labels,
        rows,
        cols,
    })
}

/// Build a balanced binary task from raw digit data: `positive_digit` maps
/// to label 1, `negative_digit` to label 0. Sampling is without replacement
/// across train+test and deterministic for a fixed seed.
///
/// The returned dataset is laid out train-positive, train-negative,
/// test-positive, test-negative; the plan's basis indices start empty.
pub fn make_binary_task(
    raw: &RawIdx,
    positive_digit: u8,
    negative_digit: u8,
    n_train_per_class: usize,
    n_test_per_class: usize,
    seed: u64,
) -> Result<(Dataset, SplitPlan)> {
    let needed = n_train_per_class + n_test_per_class;
    let mut rng = Stream::new(seed);

    let mut picked: Vec<Vec<usize>> = Vec::with_capacity(2);
    for digit in [positive_digit, negative_digit] {
        let pool: Vec<usize> = raw
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == digit)
            .map(|(i, _)| i)
            .collect();
        if pool.len() < needed {
            return Err(Error::InsufficientClass {
                class: digit.to_string(),
                needed,
                available: pool.len(),
            });
        }
        picked.push(rng.sample_distinct(&pool, needed));
    }

    let mut examples = Vec::with_capacity(2 * needed);
    let mut labels = Vec::with_capacity(2 * needed);
    let mut push_block = |class_pick: &[usize], label: u8| {
        for &raw_idx in class_pick {
            examples.push(raw.images[raw_idx].clone());
            labels.push(label);
        }
    };
    // Train blocks first (positive then negative), then test blocks.
    push_block(&picked[0][..n_train_per_class], 1);
    push_block(&picked[1][..n_train_per_class], 0);
    push_block(&picked[0][n_train_per_class..], 1);
    push_block(&picked[1][n_train_per_class..], 0);

    let n_train = 2 * n_train_per_class;
    let plan = SplitPlan {
        train_indices: (0..n_train).collect(),
        test_indices: (n_train..n_train + 2 * n_test_per_class).collect(),
        basis_indices: Vec::new(),
        seed,
    };
    let dataset = Dataset::new(
        examples,
        labels,
        (negative_digit.to_string(), positive_digit.to_string()),
        DataSource::Idx,
    )?;
    Ok((dataset, plan))
}

/// Choose a class-balanced basis from the plan's training indices,
/// deterministic for a fixed seed. Positive picks come first.
pub fn select_basis(
    plan: &SplitPlan,
    labels: &[u8],
    n_per_class: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = Stream::new(seed);
    let mut basis = Vec::with_capacity(2 * n_per_class);
    for class in [1u8, 0u8] {
        let pool: Vec<usize> = plan
            .train_indices
            .iter()
            .copied()
            .filter(|&i| labels[i] == class)
            .collect();
        if pool.len() < n_per_class {
            return Err(Error::InsufficientClass {
                class: class.to_string(),
                needed: n_per_class,
                available: pool.len(),
            });
        }
        basis.extend(rng.sample_distinct(&pool, n_per_class));
    }
    Ok(basis)
}

/// Two isotropic Gaussian blobs at `+-(separation/2)` along the first axis:
/// positives (label 1) first, then negatives. Deterministic per seed.
pub fn synth_blobs(
    n_per_class: usize,
    dim: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 || dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "blobs need n_per_class >= 1 and dim >= 1, got {n_per_class} and {dim}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0 && noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "blobs need finite separation >= 0 and noise >= 0, got {separation} and {noise}"
        )));
    }

    let mut rng = Stream::new(seed);
    let half = separation / 2.0;
    let mut examples = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (center, label) in [(half, 1u8), (-half, 0u8)] {
        for _ in 0..n_per_class {
            let mut x = Vec::with_capacity(dim);
            for d in 0..dim {
                let offset = if d == 0 { center } else { 0.0 };
                x.push(offset + noise * rng.normal());
            }
            examples.push(x);
            labels.push(label);
        }
    }
    Dataset::new(
        examples,
        labels,
        ("neg".into(), "pos".into()),
        DataSource::Synthetic,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-built IDX byte strings from the format definition.
    fn idx_image_bytes(images: &[&[u8]], rows: u32, cols: u32) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&rows.to_be_bytes());
        bytes.extend_from_slice(&cols.to_be_bytes());
        for image in images {
            bytes.extend_from_slice(image);
        }
        bytes
    }

    fn idx_label_bytes(labels: &[u8]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        bytes.extend_from_slice(labels);
        bytes
    }

    fn write_temp(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn parses_hand_built_idx_pair() {
        let dir = tempfile::tempdir().unwrap();
        let images = idx_image_bytes(&[&[0, 51, 102, 255], &[10, 20, 30, 40]], 2, 2);
        let labels = idx_label_bytes(&[7, 1]);
        let images_path = write_temp(&dir, "images", &images);
        let labels_path = write_temp(&dir, "labels", &labels);

        let raw = load_idx(&images_path, &labels_path).unwrap();
        assert_eq!(raw.rows, 2);
        assert_eq!(raw.cols, 2);
        assert_eq!(raw.labels, vec![7, 1]);
        assert_eq!(raw.images[0], vec![0.0, 51.0 / 255.0, 102.0 / 255.0, 1.0]);
        assert_eq!(
            raw.images[1],
            vec![10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0, 40.0 / 255.0]
        );
    }

    #[test]
    fn rejects_images_magic_in_label_slot() {
        let dir = tempfile::tempdir().unwrap();
        let images = idx_image_bytes(&[&[0u8; 4]], 2, 2);
        // A labels file carrying the images magic is a format violation.
        let mut bad_labels = idx_label_bytes(&[0]);
        bad_labels[..4].copy_from_slice(&IMAGES_MAGIC.to_be_bytes());
        let images_path = write_temp(&dir, "images", &images);
        let labels_path = write_temp(&dir, "labels", &bad_labels);

        match load_idx(&images_path, &labels_path) {
            Err(Error::BadMagic { expected, got, .. }) => {
                assert_eq!(expected, LABELS_MAGIC);
                assert_eq!(got, IMAGES_MAGIC);
            }
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn rejects_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let images = idx_image_bytes(&[&[0u8; 4], &[0u8; 4], &[0u8; 4]], 2, 2);
        let labels = idx_label_bytes(&[0, 1]);
        let images_path = write_temp(&dir, "images", &images);
        let labels_path = write_temp(&dir, "labels", &labels);

        match load_idx(&images_path, &labels_path) {
            Err(Error::CountMismatch { images, labels }) => {
                assert_eq!(images, 3);
                assert_eq!(labels, 2);
            }
            other => panic!("expected CountMismatch, got {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_files_with_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let mut images = idx_image_bytes(&[&[0u8; 4]], 2, 2);
        images.truncate(17); // lost 3 of 4 pixel bytes
        let labels = idx_label_bytes(&[0]);
        let images_path = write_temp(&dir, "images", &images);
        let labels_path = write_temp(&dir, "labels", &labels);

        match load_idx(&images_path, &labels_path) {
            Err(Error::Truncated {
                offset,
                needed,
                available,
                ..
            }) => {
                assert_eq!(offset, 16);
                assert_eq!(needed, 4);
                assert_eq!(available, 1);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }

        // Header-level truncation.
        let stub = vec![0u8, 0, 8];
        let stub_path = write_temp(&dir, "stub", &stub);
        assert!(matches!(
            load_idx(&stub_path, &labels_path),
            Err(Error::Truncated { offset: 0, .. })
        ));
    }

    #[test]
    fn rejects_hostile_image_headers() {
        let dir = tempfile::tempdir().unwrap();
        let labels = idx_label_bytes(&[0]);
        let labels_path = write_temp(&dir, "labels", &labels);

        // Dimension product overflows usize.
        let mut overflow = Vec::new();
        overflow.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        for dim in [u32::MAX, u32::MAX, u32::MAX] {
            overflow.extend_from_slice(&dim.to_be_bytes());
        }
        overflow.extend_from_slice(&u32::MAX.to_be_bytes());
        let overflow_path = write_temp(&dir, "overflow", &overflow);
        assert!(matches!(
            load_idx(&overflow_path, &labels_path),
            Err(Error::InvalidConfig(_))
        ));

        // Zero-sized images.
        let zero = idx_image_bytes(&[&[]], 0, 5);
        let zero_path = write_temp(&dir, "zero", &zero);
        assert!(matches!(
            load_idx(&zero_path, &labels_path),
            Err(Error::InvalidConfig(_))
        ));
    }

    fn raw_fixture(per_digit: usize) -> RawIdx {
        // Digits 1 and 7 alternating, each image a constant vector marking
        // its source index so picks are traceable.
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..per_digit {
            for digit in [1u8, 7u8] {
                images.push(vec![i as f64, f64::from(digit)]);
                labels.push(digit);
            }
        }
        RawIdx {
            images,
            labels,
            rows: 1,
            cols: 2,
        }
    }

    #[test]
    fn paper_scale_split_is_balanced() {
        let raw = raw_fixture(1100);
        let (dataset, plan) = make_binary_task(&raw, 1, 7, 500, 500, 9).unwrap();
        assert_eq!(plan.train_indices.len(), 1000);
        assert_eq!(plan.test_indices.len(), 1000);
        assert_eq!(dataset.len(), 2000);

        for indices in [&plan.train_indices, &plan.test_indices] {
            let positives = indices
                .iter()
                .filter(|&&i| dataset.labels()[i] == 1)
                .count();
            assert_eq!(positives, 500);
        }
        assert_eq!(dataset.class_names(), ("7", "1"));
    }

    #[test]
    fn tiny_split_has_distinct_indices() {
        let raw = raw_fixture(3);
        let (dataset, plan) = make_binary_task(&raw, 1, 7, 1, 1, 0).unwrap();
        assert_eq!(dataset.len(), 4);
        let mut all: Vec<usize> = plan
            .train_indices
            .iter()
            .chain(&plan.test_indices)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 4);
        // Sampled source images must be distinct per class too.
        let mut sources: Vec<u64> = dataset
            .examples()
            .iter()
            .zip(dataset.labels())
            .map(|(x, &l)| (x[0] as u64) << 8 | u64::from(l))
            .collect();
        sources.sort_unstable();
        sources.dedup();
        assert_eq!(sources.len(), 4);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let raw = raw_fixture(50);
        let (a_data, a_plan) = make_binary_task(&raw, 1, 7, 10, 5, 77).unwrap();
        let (b_data, b_plan) = make_binary_task(&raw, 1, 7, 10, 5, 77).unwrap();
        assert_eq!(a_plan, b_plan);
        assert_eq!(a_data.examples(), b_data.examples());
        // Plan indices are positional, so a different seed shows up in the
        // sampled examples rather than the index lists.
        let (c_data, _) = make_binary_task(&raw, 1, 7, 10, 5, 78).unwrap();
        assert_ne!(a_data.examples(), c_data.examples()); // overwhelmingly likely
    }

    #[test]
    fn insufficient_class_is_reported() {
        let raw = raw_fixture(4);
        match make_binary_task(&raw, 1, 7, 3, 2, 0) {
            Err(Error::InsufficientClass {
                class,
                needed,
                available,
            }) => {
                assert_eq!(class, "1");
                assert_eq!(needed, 5);
                assert_eq!(available, 4);
            }
            other => panic!("expected InsufficientClass, got {other:?}"),
        }
    }

    #[test]
    fn basis_is_balanced_subset_of_train() {
        let raw = raw_fixture(200);
        let (dataset, plan) = make_binary_task(&raw, 1, 7, 100, 50, 3).unwrap();
        let basis = select_basis(&plan, dataset.labels(), 50, 4).unwrap();
        assert_eq!(basis.len(), 100);
        let positives = basis.iter().filter(|&&i| dataset.labels()[i] == 1).count();
        assert_eq!(positives, 50);
        assert!(basis.iter().all(|i| plan.train_indices.contains(i)));
        let mut dedup = basis.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);

        assert_eq!(select_basis(&plan, dataset.labels(), 50, 4).unwrap(), basis);
    }

    #[test]
    fn full_class_basis_is_whole_train_set() {
        let raw = raw_fixture(30);
        let (dataset, plan) = make_binary_task(&raw, 1, 7, 10, 5, 1).unwrap();
        let mut basis = select_basis(&plan, dataset.labels(), 10, 2).unwrap();
        basis.sort_unstable();
        let mut train = plan.train_indices.clone();
        train.sort_unstable();
        assert_eq!(basis, train);

        assert!(select_basis(&plan, dataset.labels(), 11, 2).is_err());
    }

    #[test]
    fn degenerate_blobs_collapse_to_a_point() {
        let data = synth_blobs(5, 3, 0.0, 0.0, 1).unwrap();
        assert_eq!(data.len(), 10);
        for x in data.examples() {
            assert_eq!(x, &vec![0.0, 0.0, 0.0]);
        }
        // Indistinguishable classes: any fixed classifier scores 0.5 on the
        // balanced set.
        let all_negative =
            crate::regression::evaluate(&vec![0.0; data.len()], data.labels(), 0.5).unwrap();
        assert_eq!(all_negative.accuracy, 0.5);
    }

    #[test]
    fn separated_blobs_split_at_midpoint() {
        let data = synth_blobs(50, 2, 10.0, 0.1, 5).unwrap();
        // The midpoint hyperplane (first coordinate at 0) classifies
        // everything correctly at this separation-to-noise ratio.
        for (x, &label) in data.examples().iter().zip(data.labels()) {
            let predicted = u8::from(x[0] > 0.0);
            assert_eq!(predicted, label);
        }
    }

    #[test]
    fn blobs_are_deterministic() {
        let a = synth_blobs(4, 3, 2.0, 0.5, 9).unwrap();
        let b = synth_blobs(4, 3, 2.0, 0.5, 9).unwrap();
        assert_eq!(a.examples(), b.examples());
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn blobs_reject_bad_parameters() {
        assert!(synth_blobs(0, 2, 1.0, 1.0, 0).is_err());
        assert!(synth_blobs(2, 0, 1.0, 1.0, 0).is_err());
        assert!(synth_blobs(2, 2, -1.0, 1.0, 0).is_err());
        assert!(synth_blobs(2, 2, 1.0, f64::NAN, 0).is_err());
    }

    #[test]
    fn contiguous_plan_matches_blob_layout() {
        let data = synth_blobs(7, 2, 4.0, 0.5, 3).unwrap();
        let plan = SplitPlan::contiguous_balanced(4, 3, 3);
        for &i in &plan.train_indices {
            assert!(i < data.len());
        }
        let train_pos = plan
            .train_indices
            .iter()
            .filter(|&&i| data.labels()[i] == 1)
            .count();
        assert_eq!(train_pos, 4);
        let test_pos = plan
            .test_indices
            .iter()
            .filter(|&&i| data.labels()[i] == 1)
            .count();
        assert_eq!(test_pos, 3);
        assert!(plan
            .train_indices
            .iter()
            .all(|i| !plan.test_indices.contains(i)));
    }

    #[test]
    fn view_exposes_selected_rows() {
        let data = synth_blobs(3, 2, 2.0, 0.1, 8).unwrap();
        let indices = [4, 0, 2];
        let view = data.view(&indices);
        assert_eq!(view.len(), 3);
        assert_eq!(view.example(0), data.examples()[4].as_slice());
        assert_eq!(view.label(1), data.labels()[0]);
        let collected: Vec<(&[f64], u8)> = view.iter().collect();
        assert_eq!(collected.len(), 3);
        assert_eq!(collected[2].0, data.examples()[2].as_slice());
    }

    #[test]
    fn standardize_shifts_and_scales() {
        let mut data = Dataset::new(
            vec![vec![0.0, 1.0], vec![0.5, 0.25]],
            vec![0, 1],
            ("a".into(), "b".into()),
            DataSource::Synthetic,
        )
        .unwrap();
        data.standardize(0.5, 0.25).unwrap();
        assert_eq!(data.examples()[0], vec![-2.0, 2.0]);
        assert_eq!(data.examples()[1], vec![0.0, -1.0]);
        assert!(data.standardize(0.0, 0.0).is_err());
    }
}
