pub mod autodiff;
pub mod chem;
pub mod frag;
pub mod graph;
pub mod model;
pub mod pipeline;
pub mod selftest;
