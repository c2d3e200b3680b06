//! Pulse-wave simulation and amortized Bayesian inference of arterial biomarkers.
//!
//! The crate covers the whole pipeline at desk scale:
//!
//! 1. [`vessel`] — domain model of a reduced arterial network: visco-elastic
//!    tube segments coupled in a tree, a parametric heart inflow at the root
//!    and three-element Windkessel beds at the leaves.
//! 2. [`solver`] — time-domain finite-volume solution of the 1D mass/momentum
//!    conservation system on the network, producing periodic pressure and
//!    area waveforms at measurement sites.
//! 3. [`population`] — prior distributions over physiological parameters,
//!    batch dataset generation through the solver, and derived biomarkers
//!    (pulse wave velocity, systemic vascular resistance).
//! 4. [`measurement`] — the stochastic measurement model: beat tiling, random
//!    8-second crops at 125 Hz, additive Gaussian noise at a target SNR, and
//!    train-set normalization.
//! 5. [`flow`] — a conditional density estimator (1D CNN observation encoder
//!    plus a 3-step affine masked autoregressive flow) with exact log-density,
//!    sequential inversion sampling, and hand-rolled reverse-mode gradients.
//! 6. [`npe`] — neural posterior estimation: Adam training loop on the
//!    negative conditional log-likelihood, model selection on validation
//!    loss, and experiment grids over sites, noise levels and repeats.
//! 7. [`uncertainty`] — post-hoc diagnostics: rank-based calibration, size of
//!    credible intervals, a mutual-information bound, a Laplace baseline,
//!    point-estimate metrics, and dip-test multimodality detection.
//!
//! All internal quantities are SI (m, s, Pa, kg); clinical units appear only
//! at I/O boundaries (see [`units`]).

pub mod error;
pub mod flow;
pub mod measurement;
pub mod nn;
pub mod npe;
pub mod numerics;
pub mod population;
pub mod solver;
pub mod uncertainty;
pub mod units;
pub mod vessel;
pub mod waveform;

pub use error::{Error, Result};
