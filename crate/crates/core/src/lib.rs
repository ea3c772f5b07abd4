//! Heights, valuations and S-integrality for orbits of rational maps over Q.
//!
//! Everything is exact unless stated: points and maps carry big integers,
//! heights are logarithms of explicit rationals, and p-adic quantities along
//! orbits are computed in p-adic floating point under a digit cap.

pub mod arith;
pub mod bounds;
pub mod error;
pub mod fermat;
pub mod heights;
pub mod integrality;
pub mod logs;
pub mod padic;
pub mod par;
pub mod places;
pub mod ratmap;

pub use error::{Error, Result};
pub use heights::{canonical_height, height_drop_constants, map_height, weil_height, HeightValue};
pub use integrality::{is_s_integral, scan_orbit, OrbitScanReport, PlaceSet};
pub use logs::{LogCombination, LogNumber};
pub use par::Execution;
pub use places::{chordal, log_chordal, valuation, Place, ProjPoint};
pub use ratmap::{build_map, MapSpec, RationalMap};
