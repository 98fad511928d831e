pub mod attack;
pub mod info;
pub mod keygen;
pub mod net;
pub mod otp;
pub mod simulate;
