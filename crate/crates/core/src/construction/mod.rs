//! The disc/square hierarchy.
//!
//! Level 0 is the unit disc. Each level-`n` core disc of radius `r_n` is
//! packed with `r_n/r_{n+1}` lattice squares of side `√(π r_n r_{n+1})`
//! ([`pack_squares`]); the square centres become the level-`(n+1)` core
//! discs. A level-`n` node also owns its *enlarged* disc, the core disc
//! scaled by `1 + s_{n+1}` with `s_{n+1} = 4√(r_{n+1}/r_n)`, which contains
//! all of the node's child squares.

mod index;
mod io;
mod packing;
mod schedule;
mod tree;
mod verify;

pub use index::SpatialIndex;
pub use io::{render_node_svg, TreeFile, TreeFileError};
pub use packing::{pack_squares, PackedSquare, Packing, PackingError};
pub use schedule::{RadiiSchedule, ScheduleError};
pub use tree::{build_hierarchy, BuildError, ConstructionTree, TreeNode};
pub use verify::{centred_clearance, verify_separation, Coverage, LevelSeparation, Property, SeparationReport, Violation};
