use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::CsaParams;

/// Per-level mac shape; the presynaptic counts are derived from the level's wiring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacTemplate {
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub csa: CsaParams,
}

fn default_pi_min() -> usize {
    2
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    /// `[rows, cols]` of macs.
    pub grid: [usize; 2],
    /// `[height, width]` of each mac's receptive field, in elements of the level below.
    pub rf_shape: [usize; 2],
    /// `[row, col]` step between neighbouring receptive fields.
    pub rf_stride: [usize; 2],
    #[serde(default = "default_pi_min")]
    pub pi_min: usize,
    /// Defaults to half of each mac's receptive-field element count.
    #[serde(default)]
    pub pi_max: Option<usize>,
    #[serde(default = "one")]
    pub persistence: usize,
    pub mac_cfg: MacTemplate,
    /// Self-recurrent horizontal input from the mac's own code on the previous frame.
    #[serde(default)]
    pub horizontal: bool,
    /// Top-down input from the previous frame's codes of the overlying macs.
    #[serde(default)]
    pub top_down: bool,
    /// Learn a top-down projection onto the receptive field, used for reconstruction.
    #[serde(default)]
    pub reconstruct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `[height, width]` of the binary input frame.
    pub input_dims: [usize; 2],
    pub levels: Vec<LevelConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Size of the supervised class field over the top level, if any.
    #[serde(default)]
    pub classes: Option<usize>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `[rows, cols]` of the element grid feeding level index `i` (0 = first internal level).
    pub fn lower_dims(&self, i: usize) -> [usize; 2] {
        if i == 0 {
            self.input_dims
        } else {
            self.levels[i - 1].grid
        }
    }
}

/// Receptive-field window placement for one level.
///
/// Windows start at `index * stride - offset`, where the offset centres the whole array
/// of windows on the lower grid; windows are truncated where they cross its border.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub lower: [usize; 2],
    pub grid: [usize; 2],
    pub shape: [usize; 2],
    pub stride: [usize; 2],
}

impl Placement {
    pub fn validate(&self) -> Result<()> {
        for axis in 0..2 {
            let name = ["row", "column"][axis];
            if self.grid[axis] == 0 || self.shape[axis] == 0 || self.stride[axis] == 0 {
                return Err(Error::Config(format!(
                    "grid, rf_shape and rf_stride must be positive along the {name} axis"
                )));
            }
            if self.shape[axis] > self.lower[axis] {
                return Err(Error::Config(format!(
                    "rf_shape {} exceeds the lower level's {} {name}s",
                    self.shape[axis], self.lower[axis]
                )));
            }
            if (self.grid[axis] - 1) * self.stride[axis] >= self.lower[axis] {
                return Err(Error::Config(format!(
                    "{} {name}s of windows at stride {} overflow the lower level's {} {name}s",
                    self.grid[axis], self.stride[axis], self.lower[axis]
                )));
            }
        }
        Ok(())
    }

    fn offset(&self, axis: usize) -> isize {
        let span = (self.grid[axis] - 1) * self.stride[axis] + self.shape[axis];
        (span.saturating_sub(self.lower[axis]) / 2) as isize
    }

    /// Half-open `[start, end)` of window `index` along `axis`, clipped to the lower grid.
    pub fn range(&self, axis: usize, index: usize) -> (usize, usize) {
        let start = (index * self.stride[axis]) as isize - self.offset(axis);
        let end = start + self.shape[axis] as isize;
        (
            start.max(0) as usize,
            end.min(self.lower[axis] as isize) as usize,
        )
    }

    /// Lower-grid element indices (row-major) covered by the mac at `(row, col)`.
    pub fn elements(&self, row: usize, col: usize) -> Vec<u32> {
        let (r0, r1) = self.range(0, row);
        let (c0, c1) = self.range(1, col);
        (r0..r1)
            .flat_map(|r| (c0..c1).map(move |c| (r * self.lower[1] + c) as u32))
            .collect()
    }
}
