pub mod american;
pub mod black;
pub mod cir;
pub mod config;
pub mod contract;
pub mod error;
pub mod european;
pub mod mc;
pub mod models;
pub mod quadrature;
pub mod roots;
