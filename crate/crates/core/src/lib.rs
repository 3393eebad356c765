//! Reversible CCS, configuration structures, and the equivalences relating them.

pub mod ccs;
pub mod confstruct;
pub mod encode;
pub mod equiv;
pub mod process;
pub mod syntax;
