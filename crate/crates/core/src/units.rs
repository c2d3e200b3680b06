//! Unit conversion constants.
//!
//! Everything inside the crate is SI: metres, seconds, pascals, kilograms,
//! m³/s for flow. Clinical units are converted exactly once, at I/O
//! boundaries (network files, CSV headers, CLI output).

/// 1 mmHg in Pa.
pub const MMHG_PA: f64 = 133.322;

/// 1 mL in m³.
pub const ML_M3: f64 = 1.0e-6;

/// 1 L/min in m³/s.
pub const LPM_M3S: f64 = 1.0e-3 / 60.0;

pub fn mmhg_to_pa(p: f64) -> f64 {
    p * MMHG_PA
}

pub fn pa_to_mmhg(p: f64) -> f64 {
    p / MMHG_PA
}

pub fn ml_to_m3(v: f64) -> f64 {
    v * ML_M3
}

pub fn m3_to_ml(v: f64) -> f64 {
    v / ML_M3
}
