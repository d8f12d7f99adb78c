pub mod config;
pub mod device;
pub mod dr_tree;
pub mod effective_area;
pub mod engine;
pub mod error;
pub mod eve;
pub mod lsm;
pub mod lsm_drtree;
pub mod oracle;
pub mod trace;
pub mod types;
