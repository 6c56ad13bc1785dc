//! Transcripts, simulators, censored tilting and the Monte Carlo checks that
//! exercise the lower-bound arguments numerically.

mod checks;
mod tilting;
mod transcript;

pub use checks::{fano_event_check, lecam_check, FanoReport, LeCamReport};
pub use tilting::{sample_measuring_event, verify_balance, TiltingKernel, TiltingReport};
pub use transcript::{run_on_source, SwapSimulator, Transcript};
