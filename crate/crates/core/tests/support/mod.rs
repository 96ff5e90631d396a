pub mod svgen;
pub mod synthrepo;
