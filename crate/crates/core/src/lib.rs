pub mod coverings;
pub mod election_m;
pub mod election_mtau;
pub mod enumeration;
pub mod families;
pub mod graph;
pub mod knowledge;
pub mod randomness;
pub mod runtime;
pub mod verifier;
