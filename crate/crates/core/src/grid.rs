//! Symmetric frequency grid of the Galerkin truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fourier modes `n` with `|n| <= radius`, plus the padded transform length
/// used for alias-free cubic (and quartic-mean) products.
///
/// The transform length is the smallest power of two with at least `4N + 1`
/// points. A cubic product of the truncation lives on modes `|n| <= 3N`, so
/// any length `M >= 4N + 1` keeps wrapped images `n +/- M` of those modes
/// outside the retained band, and `M >= 4N + 1` also makes the grid average
/// of `|u|^4` exact (the only surviving aliases in the quartic would need
/// `|n| = M <= 4N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    radius: i64,
    transform_len: usize,
}

impl FrequencyGrid {
    pub fn new(radius: i64) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(format!(
                "grid radius must be at least 1, got {radius}"
            )));
        }
        if radius > (1 << 20) {
            return Err(Error::InvalidParameter(format!(
                "grid radius {radius} is unreasonably large"
            )));
        }
        let transform_len = (4 * radius as usize + 1).next_power_of_two();
        Ok(Self {
            radius,
            transform_len,
        })
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// Number of retained modes, `2N + 1`.
    pub fn len(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn transform_len(&self) -> usize {
        self.transform_len
    }

    pub fn contains(&self, n: i64) -> bool {
        n.abs() <= self.radius
    }

    /// Storage index of mode `n`; mode `-N` sits at index 0.
    pub fn index_of(&self, n: i64) -> Result<usize> {
        if self.contains(n) {
            Ok((n + self.radius) as usize)
        } else {
            Err(Error::ModeOutsideGrid {
                mode: n,
                radius: self.radius,
            })
        }
    }

    pub fn mode_at(&self, index: usize) -> i64 {
        debug_assert!(index < self.len());
        index as i64 - self.radius
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        -self.radius..=self.radius
    }

    /// Index of mode `n` in a transform buffer of length `transform_len`,
    /// i.e. `n mod M` with the negative half stored at the top.
    pub fn transform_index(&self, n: i64) -> usize {
        let m = self.transform_len as i64;
        n.rem_euclid(m) as usize
    }
}
