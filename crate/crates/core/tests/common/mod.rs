//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::path::PathBuf;

/// Locate MNIST IDX files: `$GRADKERNEL_MNIST_DIR` first, then `data/` at
/// the workspace root. Returns `(images, labels)` when a usable pair exists.
pub fn find_mnist() -> Option<(PathBuf, PathBuf)> {
    let mut candidates = Vec::new();
    if let Ok(dir) = std::env::var("GRADKERNEL_MNIST_DIR") {
        candidates.push(PathBuf::from(dir));
    }
    let workspace_data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    candidates.push(workspace_data);

    let pairs = [
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        ("train-images.idx3-ubyte", "train-labels.idx1-ubyte"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ("t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"),
    ];
    for dir in candidates {
        for (images, labels) in pairs {
            let images = dir.join(images);
            let labels = dir.join(labels);
            if images.is_file() && labels.is_file() {
                return Some((images, labels));
            }
        }
    }
    None
}

/// Brute-force least squares `min |rows * alpha - y|^2 + ridge |alpha|^2`
/// via the normal equations and Gauss-Jordan elimination with partial
/// pivoting. Independent of the library's SVD path; needs a nonsingular
/// regularized normal matrix.
#[allow(clippy::needless_range_loop)]
pub fn lstsq_normal_equations(rows: &[Vec<f64>], y: &[f64], ridge: f64) -> Vec<f64> {
    assert_eq!(rows.len(), y.len());
    let n = rows.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0.0;
            for row in rows {
                sum += row[i] * row[j];
            }
            a[i][j] = sum + if i == j { ridge } else { 0.0 };
        }
        let mut rhs = 0.0;
        for (row, &target) in rows.iter().zip(y) {
            rhs += row[i] * target;
        }
        a[i][n] = rhs;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot_row);
        let pivot = a[col][col];
        assert!(
            pivot.abs() > 1e-12,
            "oracle given a singular system (pivot {pivot})"
        );
        for j in col..=n {
            a[col][j] /= pivot;
        }
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                for j in col..=n {
                    a[row][j] -= factor * a[col][j];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n]).collect()
}
