//! Index newtypes. All ids are dense and start at 0.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl From<usize> for $name {
            fn from(v: usize) -> Self {
                $name(v)
            }
        }
    };
}

id_type!(
    /// Network node.
    NodeId, "n"
);
id_type!(
    /// Server attached to a node.
    ServerId, "x"
);
id_type!(
    /// Directed link.
    LinkId, "e"
);
id_type!(
    /// Entry of the path catalog.
    PathId, "p"
);
id_type!(
    /// Service function chain.
    SfcId, "s"
);
id_type!(
    /// Traffic demand, global across all chains.
    DemandId, "l"
);
id_type!(
    /// Entry of the VNF type catalog.
    VnfTypeId, "t"
);
