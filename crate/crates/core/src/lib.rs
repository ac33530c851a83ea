pub mod instance;
pub mod subsets;
pub mod pseudodist;
pub mod salp;
pub mod oracle;
pub mod min2sat;
pub mod rounding;
pub mod kcsp_decide;
pub mod cli;
