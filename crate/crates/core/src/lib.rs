pub mod agc;
pub mod diagstab;
pub mod numerics;
pub mod reduced;
pub mod sim;
