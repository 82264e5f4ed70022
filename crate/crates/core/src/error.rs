//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::kernel::KernelKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{context}: expected length {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context} is empty")]
    EmptyInput { context: &'static str },

    #[error("{path}: bad IDX magic at byte 0: expected 0x{expected:08x}, got 0x{got:08x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        got: u32,
    },

    #[error(
        "{path}: truncated IDX file: need {needed} bytes at offset {offset}, \
         only {available} available"
    )]
    Truncated {
        path: PathBuf,
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("IDX image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("class {class:?} has only {available} examples, {needed} required")]
    InsufficientClass {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("non-finite kernel entry in {context} at epoch {epoch}, example {example}")]
    NonFiniteKernel {
        context: &'static str,
        epoch: usize,
        example: usize,
    },

    #[error("kernel matrix is {got:?}, expected {expected:?}")]
    KernelKind {
        expected: KernelKind,
        got: KernelKind,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
