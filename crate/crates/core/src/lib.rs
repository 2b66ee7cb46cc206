pub mod amplifier;
pub mod clifford;
pub mod error;
pub mod gf2;
pub mod macros;
pub mod numbersys;
pub mod program;
pub mod state;
pub mod stateprep;
pub mod suite;
pub mod verify;
