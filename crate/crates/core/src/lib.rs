pub mod astro;
pub mod lambert;
pub mod tle;
pub mod mission;
pub mod sequencing;
pub mod baselines;
pub mod scenarios;
pub mod env;
pub mod ppo;
pub mod harness;
