pub mod butcher;
pub mod fit;
pub mod lattice;
pub mod ptree;
pub mod quantum;
pub mod reference;
pub mod scenarios;
