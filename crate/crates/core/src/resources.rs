use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// CPU, memory and storage amounts in integral units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    pub cpu: u64,
    pub memory: u64,
    pub storage: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector::new(0, 0, 0);

    pub const fn new(cpu: u64, memory: u64, storage: u64) -> Self {
        ResourceVector {
            cpu,
            memory,
            storage,
        }
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        self.cpu <= other.cpu && self.memory <= other.memory && self.storage <= other.storage
    }

    /// Component-wise subtraction clamped at zero.
    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu.saturating_sub(other.cpu),
            memory: self.memory.saturating_sub(other.memory),
            storage: self.storage.saturating_sub(other.storage),
        }
    }

    /// The part an idle container keeps allocated: memory and storage, no CPU.
    pub fn idle_hold(&self) -> ResourceVector {
        ResourceVector {
            cpu: 0,
            ..*self
        }
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: Self) -> Self {
        ResourceVector {
            cpu: self.cpu + rhs.cpu,
            memory: self.memory + rhs.memory,
            storage: self.storage + rhs.storage,
        }
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Panics on underflow; accounting must never release more than it holds.
impl Sub for ResourceVector {
    type Output = ResourceVector;

    fn sub(self, rhs: Self) -> Self {
        ResourceVector {
            cpu: self.cpu.checked_sub(rhs.cpu).expect("cpu underflow"),
            memory: self.memory.checked_sub(rhs.memory).expect("memory underflow"),
            storage: self
                .storage
                .checked_sub(rhs.storage)
                .expect("storage underflow"),
        }
    }
}

impl SubAssign for ResourceVector {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}
