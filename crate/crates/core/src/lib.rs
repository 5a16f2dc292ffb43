pub mod apps;
pub mod ci;
pub mod cli;
pub mod constraint;
pub mod distributions;
pub mod error;
pub mod expr;
pub mod loglin;
pub mod lp;
pub mod models;
pub mod parser;
pub mod rational;
pub mod refuter;
pub mod recognizer;
pub mod reductions;
pub mod shannon;
