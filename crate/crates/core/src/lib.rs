//! Two coupled spin-1/2 simulator with qubits encoded either on Zeeman
//! product states or on the exact eigenstates of the coupled Hamiltonian
//! ("virtual spins").

pub mod encoding;
pub mod error;
pub mod gates;
pub mod numfmt;
pub mod pulse;
pub mod qlin;
pub mod spectrum;
pub mod spinsys;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
