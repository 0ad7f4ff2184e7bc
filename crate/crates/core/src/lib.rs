pub mod baselines;
pub mod cascade;
pub mod experiment;
pub mod grid;
pub mod risk;
pub mod scg;
pub mod submodular;
pub mod subset;
