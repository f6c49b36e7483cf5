//! Sliding-window schedule: which slices of the candidate list get
//! reranked, and in what order.

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("window size must be at least 1")]
    WindowTooSmall,
    #[error("stride must be in [1, window_size] (stride {stride}, window {window})")]
    BadStride { stride: usize, window: usize },
    #[error("passes must be at least 1")]
    NoPasses,
    #[error("cannot schedule windows over an empty list")]
    EmptyList,
}

/// Sliding-window geometry plus the number of progressive passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub window_size: usize,
    pub stride: usize,
    pub passes: usize,
}

impl WindowConfig {
    pub fn new(window_size: usize, stride: usize, passes: usize) -> Result<Self, ConfigError> {
        let cfg = Self {
            window_size,
            stride,
            passes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_size < 1 {
            return Err(ConfigError::WindowTooSmall);
        }
        if self.stride < 1 || self.stride > self.window_size {
            return Err(ConfigError::BadStride {
                stride: self.stride,
                window: self.window_size,
            });
        }
        if self.passes < 1 {
            return Err(ConfigError::NoPasses);
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_size: 20,
            stride: 10,
            passes: 1,
        }
    }
}

/// Ranges to rerank, in processing order: bottom of the list first, then
/// stepping up by the stride, ending with `[0, w)`. A list no longer than
/// the window yields the single range `[0, n)`.
///
/// Processing bottom-up lets a relevant document climb through the overlap
/// of consecutive windows all the way to the top in one pass. Consecutive
/// windows overlap by exactly `w - s`, except possibly the bottom window
/// when `n - w` is not a stride multiple.
pub fn window_schedule(n: usize, cfg: &WindowConfig) -> Result<Vec<Range<usize>>, ConfigError> {
    cfg.validate()?;
    if n == 0 {
        return Err(ConfigError::EmptyList);
    }
    let w = cfg.window_size;
    let s = cfg.stride;
    if n <= w {
        return Ok(std::iter::once(0..n).collect());
    }
    let mut starts = Vec::new();
    let mut start = 0;
    while start + w < n {
        starts.push(start);
        start += s;
    }
    starts.push(n - w);
    Ok(starts.into_iter().rev().map(|a| a..a + w).collect())
}
