//! Primitive operation counters used to check that storage and retrieval cost does not
//! grow with the number of stored items.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Weight rows scanned while summing input.
    pub weight_row_reads: u64,
    /// Individual weight bits tested.
    pub weight_bit_reads: u64,
    /// Per-unit activation or selection updates.
    pub unit_updates: u64,
    /// Weight write attempts during learning (fresh or not).
    pub weight_writes: u64,
    pub random_draws: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.weight_row_reads
            + self.weight_bit_reads
            + self.unit_updates
            + self.weight_writes
            + self.random_draws
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.weight_row_reads += rhs.weight_row_reads;
        self.weight_bit_reads += rhs.weight_bit_reads;
        self.unit_updates += rhs.unit_updates;
        self.weight_writes += rhs.weight_writes;
        self.random_draws += rhs.random_draws;
    }
}
