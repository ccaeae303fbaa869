//! Parallel bucket orders, their ideals, reorderings and linear extensions.

mod extensions;
mod lattice;
mod order;

pub use extensions::{is_compatible, linear_extensions, MAX_EXTENSION_NODES};
pub use lattice::{enumerate_ideals, Cover, IdealLattice, LatticeShape, DEFAULT_IDEAL_CAP};
pub use order::{make_order, make_order_seeded, Flip, NodeSet, ParallelBucketOrder, Slot};

pub(crate) use order::{full_set, members};
