pub mod bench;
pub mod hsmd;
pub mod imaging;
pub mod lif;
pub mod mhsnn;
