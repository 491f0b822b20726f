pub mod data;
pub mod ensemble;
pub mod error;
pub mod evalreport;
pub mod indices;
pub mod seed;
pub mod stats;
pub mod varselect;
pub mod learners;
pub mod modelspace;
pub mod pipeline;
