pub mod astdiff;
pub mod corpus;
pub mod metrics;
pub mod miner;
pub mod svparse;
