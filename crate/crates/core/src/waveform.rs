//! Waveform records and their on-disk formats.
//!
//! Waveforms persist as little-endian f32 binary (`.f32` file) next to a JSON
//! sidecar carrying the site, sampling rate, units and provenance. A CSV
//! export (time, value) is available for plotting.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vessel::SignalKind;

/// Provenance metadata attached to a simulated or measured waveform.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct WaveformProvenance {
    /// Identifier of the generating parameter vector, when any.
    pub parameter_id: Option<String>,
    /// Signal-to-noise ratio in dB when noise was applied.
    pub snr_db: Option<f64>,
}

/// Description of the probe a waveform was recorded at.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SiteInfo {
    pub segment: String,
    /// Relative axial position z/L in [0, 1].
    pub position: f64,
    pub kind: SignalKind,
}

/// A uniformly sampled time series at one measurement site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveformRecord {
    pub samples: Vec<f64>,
    /// Sampling rate (Hz).
    pub sampling_rate: f64,
    /// Duration (s); `samples.len() == round(duration * sampling_rate)`.
    pub duration: f64,
    pub site: SiteInfo,
    /// Beat period of the generating heart function (s).
    pub beat_period: f64,
    pub provenance: WaveformProvenance,
}

impl WaveformRecord {
    pub fn new(
        samples: Vec<f64>,
        sampling_rate: f64,
        site: SiteInfo,
        beat_period: f64,
    ) -> Result<Self> {
        if !(sampling_rate > 0.0) {
            return Err(Error::domain("sampling rate must be positive"));
        }
        let duration = samples.len() as f64 / sampling_rate;
        Ok(Self { samples, sampling_rate, duration, site, beat_period, provenance: WaveformProvenance::default() })
    }

    /// Length/duration/rate consistency check.
    pub fn is_consistent(&self) -> bool {
        self.sampling_rate > 0.0
            && self.samples.len() == (self.duration * self.sampling_rate).round() as usize
            && self.samples.iter().all(|s| s.is_finite())
    }

    /// Writes `<stem>.f32` (little-endian f32) and `<stem>.json` sidecar.
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let mut bin = std::fs::File::create(stem.with_extension("f32"))?;
        let mut buf = Vec::with_capacity(self.samples.len() * 4);
        for &s in &self.samples {
            buf.extend_from_slice(&(s as f32).to_le_bytes());
        }
        bin.write_all(&buf)?;

        let sidecar = Sidecar {
            site: self.site.clone(),
            sampling_rate_hz: self.sampling_rate,
            duration_s: self.duration,
            beat_period_s: self.beat_period,
            n_samples: self.samples.len(),
            units: match self.site.kind {
                SignalKind::Pressure => "Pa".into(),
                SignalKind::PpgProxy => "normalized".into(),
            },
            provenance: self.provenance.clone(),
        };
        let json = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(stem.with_extension("json"), json)?;
        Ok(())
    }

    /// Loads a record stored by [`WaveformRecord::save`].
    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let mut bytes = Vec::new();
        std::fs::File::open(stem.with_extension("f32"))?.read_to_end(&mut bytes)?;
        if bytes.len() != sidecar.n_samples * 4 {
            return Err(Error::shape(format!(
                "waveform binary has {} bytes, sidecar promises {} samples",
                bytes.len(),
                sidecar.n_samples
            )));
        }
        let samples = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Ok(Self {
            samples,
            sampling_rate: sidecar.sampling_rate_hz,
            duration: sidecar.duration_s,
            site: sidecar.site,
            beat_period: sidecar.beat_period_s,
            provenance: sidecar.provenance,
        })
    }

    /// Exports as two-column CSV with a header row.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("time_s,value\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as f64 / self.sampling_rate, s));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    site: SiteInfo,
    sampling_rate_hz: f64,
    duration_s: f64,
    beat_period_s: f64,
    n_samples: usize,
    units: String,
    provenance: WaveformProvenance,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> WaveformRecord {
        let site = SiteInfo { segment: "tube".into(), position: 0.5, kind: SignalKind::Pressure };
        WaveformRecord::new(vec![1.0, 2.0, 3.5, -0.25], 4.0, site, 1.0).unwrap()
    }

    #[test]
    fn length_duration_consistency() {
        let r = record();
        assert!(r.is_consistent());
        assert!((r.duration - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_roundtrip_is_f32_exact() {
        let dir = std::env::temp_dir().join(format!("pulseinfer-wave-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let r = record();
        let stem = dir.join("w0");
        r.save(&stem).unwrap();
        let back = WaveformRecord::load(&stem).unwrap();
        assert_eq!(back.samples.len(), r.samples.len());
        for (a, b) in back.samples.iter().zip(&r.samples) {
            assert_eq!(*a, *b as f32 as f64);
        }
        assert_eq!(back.site, r.site);
        std::fs::remove_dir_all(&dir).ok();
    }
}
