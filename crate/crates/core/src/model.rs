//! Identifier newtypes and the invocation record shared by all modules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident($inner:ty)) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(InvocationId(u64));
id_type!(TenantId(u32));
id_type!(
    /// Function index local to its tenant.
    FunctionId(u32)
);
id_type!(WorkerId(usize));
id_type!(
    /// Container ids are allocated in creation order, which doubles as the
    /// LRU tie-break.
    ContainerId(u64)
);

/// A function is identified by its owning tenant plus a tenant-local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionKey {
    pub tenant: TenantId,
    pub function: FunctionId,
}

impl FunctionKey {
    pub fn new(tenant: u32, function: u32) -> Self {
        FunctionKey {
            tenant: TenantId(tenant),
            function: FunctionId(function),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Benign,
    Victim,
    Attacker,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Benign, Role::Victim, Role::Attacker];

    pub fn index(self) -> usize {
        match self {
            Role::Benign => 0,
            Role::Victim => 1,
            Role::Attacker => 2,
        }
    }
}

/// One function call request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub id: InvocationId,
    pub function: FunctionKey,
    pub arrival: SimTime,
    pub service_time: f64,
    pub role: Role,
}

impl InvocationRecord {
    pub fn tenant(&self) -> TenantId {
        self.function.tenant
    }
}
