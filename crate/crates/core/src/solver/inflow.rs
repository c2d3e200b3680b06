//! Parametric aortic inflow built from the five heart-function parameters.
//!
//! The beat consists of a main ejection lobe `a * sin(pi (t/LVET)^p)` whose
//! exponent is solved numerically so the combined waveform peaks at the peak
//! flow time, plus a reflected half-sine lobe over `[LVET/2, LVET]` carrying
//! the fraction RFV of the stroke volume. `a` scales the main lobe so the
//! beat integral equals the stroke volume; flow is zero outside the ejection
//! window and the waveform repeats with period 60/HR.

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect};
use crate::vessel::HeartFunction;

/// Precomputed inflow waveform; evaluate with [`InflowWave::flow`].
#[derive(Debug, Clone)]
pub struct InflowWave {
    heart: HeartFunction,
    /// Shape exponent of the main lobe.
    exponent: f64,
    /// Amplitude of the main lobe (m³/s).
    main_amplitude: f64,
    /// Amplitude of the reflected lobe (m³/s).
    reflected_amplitude: f64,
}

impl InflowWave {
    pub fn new(heart: &HeartFunction) -> Result<Self> {
        // A zero stroke volume is accepted as the degenerate "no ejection"
        // configuration; everything else must satisfy the type invariants.
        if heart.stroke_volume == 0.0 {
            return Ok(Self {
                heart: *heart,
                exponent: 1.0,
                main_amplitude: 0.0,
                reflected_amplitude: 0.0,
            });
        }
        let violations = heart.validate();
        if !violations.is_empty() {
            return Err(Error::domain(format!(
                "invalid heart function: {}",
                violations.join("; ")
            )));
        }

        let lvet = heart.lvet;
        let rfv = heart.reflected_fraction;
        let sv = heart.stroke_volume;
        let b = std::f64::consts::PI * rfv * sv / lvet;

        // Main-lobe amplitude for a given exponent: the unit lobe integrates
        // to lvet * I(p) with I(p) = \int_0^1 sin(pi s^p) ds.
        let unit_integral = |p: f64| {
            lvet * adaptive_simpson(&|s: f64| (std::f64::consts::PI * s.powf(p)).sin(), 0.0, 1.0, 1e-13)
        };
        let amplitude = |p: f64| (1.0 - rfv) * sv / unit_integral(p);

        // Peak location of the combined beat as a function of the exponent,
        // by dense grid argmax with parabolic refinement.
        let argmax = |p: f64| {
            let a = amplitude(p);
            let n = 8192usize;
            let value = |t: f64| {
                let main = a * (std::f64::consts::PI * (t / lvet).powf(p)).sin();
                let refl = if t >= 0.5 * lvet {
                    b * (std::f64::consts::PI * (t - 0.5 * lvet) / (0.5 * lvet)).sin()
                } else {
                    0.0
                };
                main + refl
            };
            let mut best = (0usize, f64::NEG_INFINITY);
            for i in 0..=n {
                let v = value(lvet * i as f64 / n as f64);
                if v > best.1 {
                    best = (i, v);
                }
            }
            let i = best.0.clamp(1, n - 1);
            let dt = lvet / n as f64;
            let (ym, y0, yp) = (value(dt * (i - 1) as f64), value(dt * i as f64), value(dt * (i + 1) as f64));
            let denom = ym - 2.0 * y0 + yp;
            let shift = if denom.abs() > 1e-300 { 0.5 * (ym - yp) / denom } else { 0.0 };
            dt * (i as f64 + shift.clamp(-0.5, 0.5))
        };

        // argmax(p) sweeps from near 0 to near LVET as p grows. With the
        // reflected lobe present the sweep can jump over a dead zone where
        // the lobe captures the global maximum; that case is rejected below.
        let (p_lo, p_hi) = (0.05, 60.0);
        let target = heart.peak_flow_time;
        let lo_peak = argmax(p_lo);
        let hi_peak = argmax(p_hi);
        if !(lo_peak < target && target < hi_peak) {
            return Err(Error::domain(format!(
                "peak flow time {target} not reachable by the inflow family (range {lo_peak:.4}..{hi_peak:.4})"
            )));
        }
        let p = bisect(&|p: f64| argmax(p) - target, p_lo, p_hi, 1e-12, 200);
        if (argmax(p) - target).abs() > 1.5e-3 * lvet {
            return Err(Error::domain(format!(
                "reflected lobe (RFV = {rfv}) captures the flow maximum; peak flow time {target} \
                 is unreachable at this LVET; reduce RFV or move the peak earlier"
            )));
        }

        Ok(Self {
            heart: *heart,
            exponent: p,
            main_amplitude: amplitude(p),
            reflected_amplitude: b,
        })
    }

    /// Volumetric inflow (m³/s) at time `t >= 0`.
    pub fn flow(&self, t: f64) -> f64 {
        let period = self.heart.period();
        let tau = t.rem_euclid(period);
        if tau >= self.heart.lvet || self.main_amplitude == 0.0 {
            return 0.0;
        }
        let lvet = self.heart.lvet;
        let main = self.main_amplitude
            * (std::f64::consts::PI * (tau / lvet).powf(self.exponent)).sin();
        let refl = if tau >= 0.5 * lvet {
            self.reflected_amplitude
                * (std::f64::consts::PI * (tau - 0.5 * lvet) / (0.5 * lvet)).sin()
        } else {
            0.0
        };
        (main + refl).max(0.0)
    }

    pub fn heart(&self) -> &HeartFunction {
        &self.heart
    }
}

/// Convenience evaluation of the periodic inflow for a heart function.
pub fn inflow_waveform(heart: &HeartFunction, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain("inflow time must be non-negative"));
    }
    Ok(InflowWave::new(heart)?.flow(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heart() -> HeartFunction {
        HeartFunction {
            heart_rate: 60.0,
            stroke_volume: 70e-6,
            lvet: 0.3,
            peak_flow_time: 0.12,
            reflected_fraction: 0.1,
        }
    }

    #[test]
    fn period_is_60_over_hr() {
        let h = heart();
        assert!((h.period() - 1.0).abs() < 1e-15);
        let w = InflowWave::new(&h).unwrap();
        // Periodicity: values repeat after one period.
        for k in 0..10 {
            let t = 0.031 * k as f64;
            assert!((w.flow(t) - w.flow(t + h.period())).abs() < 1e-15);
        }
    }

    #[test]
    fn integral_over_one_period_is_stroke_volume() {
        let h = heart();
        let w = InflowWave::new(&h).unwrap();
        let integral = adaptive_simpson(&|t| w.flow(t), 0.0, h.period(), 1e-14);
        assert!(
            (integral - h.stroke_volume).abs() / h.stroke_volume < 1e-6,
            "integral {integral} vs SV {}",
            h.stroke_volume
        );
    }

    #[test]
    fn argmax_at_peak_flow_time_within_one_millisecond_sample() {
        // (pft, rfv) pairs inside the feasible region, including one past
        // LVET/2 with no reflected lobe.
        for (pft, rfv) in [(0.08, 0.10), (0.105, 0.10), (0.114, 0.12), (0.15, 0.0), (0.2, 0.0)] {
            let mut h = heart();
            h.peak_flow_time = pft;
            h.reflected_fraction = rfv;
            let w = InflowWave::new(&h).unwrap();
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..=1000 {
                let t = h.lvet * i as f64 / 1000.0;
                let v = w.flow(t);
                if v > best.1 {
                    best = (t, v);
                }
            }
            assert!(
                (best.0 - pft).abs() <= 1.0e-3 + 1e-12,
                "argmax {} vs PFT {pft} at RFV {rfv}",
                best.0
            );
        }
    }

    #[test]
    fn dominant_reflected_lobe_is_rejected() {
        let mut h = heart();
        h.peak_flow_time = 0.135; // 0.45 LVET
        h.reflected_fraction = 0.2;
        assert!(matches!(InflowWave::new(&h), Err(Error::Domain(_))));
    }

    #[test]
    fn flow_zero_outside_ejection_and_nonnegative_inside() {
        let h = heart();
        let w = InflowWave::new(&h).unwrap();
        for i in 0..=2000 {
            let t = h.period() * i as f64 / 2000.0;
            let q = w.flow(t);
            assert!(q >= 0.0);
            if t > h.lvet && t < h.period() {
                assert_eq!(q, 0.0);
            }
        }
    }

    #[test]
    fn reflected_lobe_carries_rfv_fraction() {
        let h = heart();
        let w = InflowWave::new(&h).unwrap();
        // Integral of the reflected half-sine alone.
        let refl = w.reflected_amplitude * (0.5 * h.lvet) * 2.0 / std::f64::consts::PI;
        assert!((refl - h.reflected_fraction * h.stroke_volume).abs() / h.stroke_volume < 1e-12);
    }

    #[test]
    fn zero_stroke_volume_is_silent() {
        let mut h = heart();
        h.stroke_volume = 0.0;
        let w = InflowWave::new(&h).unwrap();
        assert_eq!(w.flow(0.1), 0.0);
    }

    #[test]
    fn invalid_heart_is_domain_error() {
        let mut h = heart();
        h.peak_flow_time = 0.5; // beyond LVET
        assert!(matches!(InflowWave::new(&h), Err(Error::Domain(_))));
    }
}
