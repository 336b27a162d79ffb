pub mod discretization;
pub mod kernels;
pub mod krylov;
pub mod oracles;
pub mod solver;
pub mod timeops;
