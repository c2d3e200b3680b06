//! Domain model of the arterial network.
//!
//! A network is a rooted tree of visco-elastic vessel segments. The heart
//! drives the root with a parametric inflow; every leaf terminates in a
//! three-element Windkessel bed. Wall mechanics follow the Voigt-type
//! visco-elastic tube law
//!
//! ```text
//! P(A) = P_ext + beta (sqrt(A) - sqrt(A0)) + (Gamma / sqrt(A)) dA/dt
//! beta  = 4/3 sqrt(pi) E  h0 / A0
//! Gamma = 2/3 sqrt(pi) phi_w h0 / A0
//! ```
//!
//! with `E` the elastic modulus and `phi_w` the wall viscosity (named to
//! avoid a collision with the inference parameters). All quantities are SI.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Bulk blood properties entering the 1D momentum equation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BloodProperties {
    /// Density rho (kg/m³).
    pub density: f64,
    /// Dynamic viscosity mu (Pa·s).
    pub dynamic_viscosity: f64,
    /// Coriolis coefficient alpha (momentum-flux correction, >= 1).
    pub coriolis_coefficient: f64,
    /// Radial velocity-profile shape parameter gamma_nu.
    pub velocity_profile_shape: f64,
}

impl Default for BloodProperties {
    fn default() -> Self {
        // gamma_nu = 9 with alpha = (gamma+2)/(gamma+1) = 1.1 is the usual
        // pairing for large-artery velocity profiles.
        Self {
            density: 1060.0,
            dynamic_viscosity: 0.004,
            coriolis_coefficient: 1.1,
            velocity_profile_shape: 9.0,
        }
    }
}

/// One tapered visco-elastic tube segment.
///
/// `elastic_coefficient` (beta) and `viscous_coefficient` (Gamma) are derived
/// from the primitive wall parameters at the proximal reference area and kept
/// in sync by construction; along the segment they vary with the local
/// reference area `A0(z)` obtained from linear radius interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VesselSegment {
    pub name: String,
    /// Length L (m).
    pub length: f64,
    /// Proximal reference cross-section A0 (m²).
    pub a0_proximal: f64,
    /// Distal reference cross-section (m²); equals `a0_proximal` when the
    /// segment is not tapered.
    pub a0_distal: f64,
    /// Wall thickness h0 (m).
    pub wall_thickness: f64,
    /// Elastic modulus E (Pa).
    pub elastic_modulus: f64,
    /// Wall viscosity phi_w (Pa·s).
    pub wall_viscosity: f64,
    /// External (reference) pressure P_ext (Pa).
    pub external_pressure: f64,
    /// Derived elastic coefficient beta (Pa/m) at the proximal reference.
    pub elastic_coefficient: f64,
    /// Derived viscous coefficient Gamma (Pa·s/m) at the proximal reference.
    pub viscous_coefficient: f64,
}

/// Computes beta for given wall primitives.
pub fn elastic_coefficient(elastic_modulus: f64, wall_thickness: f64, a0: f64) -> f64 {
    4.0 / 3.0 * SQRT_PI * elastic_modulus * wall_thickness / a0
}

/// Computes Gamma for given wall primitives.
pub fn viscous_coefficient(wall_viscosity: f64, wall_thickness: f64, a0: f64) -> f64 {
    2.0 / 3.0 * SQRT_PI * wall_viscosity * wall_thickness / a0
}

impl VesselSegment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        length: f64,
        a0_proximal: f64,
        a0_distal: f64,
        wall_thickness: f64,
        elastic_modulus: f64,
        wall_viscosity: f64,
        external_pressure: f64,
    ) -> Self {
        Self {
            name: name.into(),
            length,
            a0_proximal,
            a0_distal,
            wall_thickness,
            elastic_modulus,
            wall_viscosity,
            external_pressure,
            elastic_coefficient: elastic_coefficient(elastic_modulus, wall_thickness, a0_proximal),
            viscous_coefficient: viscous_coefficient(wall_viscosity, wall_thickness, a0_proximal),
        }
    }

    /// Uniform (untapered) segment.
    pub fn uniform(
        name: impl Into<String>,
        length: f64,
        a0: f64,
        wall_thickness: f64,
        elastic_modulus: f64,
        wall_viscosity: f64,
    ) -> Self {
        Self::new(name, length, a0, a0, wall_thickness, elastic_modulus, wall_viscosity, 0.0)
    }

    /// Reference area at relative axial position `zfrac` in [0, 1]; the
    /// radius tapers linearly from proximal to distal.
    pub fn a0_at(&self, zfrac: f64) -> f64 {
        let r_p = (self.a0_proximal / std::f64::consts::PI).sqrt();
        let r_d = (self.a0_distal / std::f64::consts::PI).sqrt();
        let r = r_p + (r_d - r_p) * zfrac.clamp(0.0, 1.0);
        std::f64::consts::PI * r * r
    }

    /// Local elastic coefficient at `zfrac`.
    pub fn beta_at(&self, zfrac: f64) -> f64 {
        elastic_coefficient(self.elastic_modulus, self.wall_thickness, self.a0_at(zfrac))
    }

    /// Local viscous coefficient at `zfrac`.
    pub fn gamma_at(&self, zfrac: f64) -> f64 {
        viscous_coefficient(self.wall_viscosity, self.wall_thickness, self.a0_at(zfrac))
    }
}

/// Three-element Windkessel bed terminating a leaf segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindkesselBed {
    /// Proximal resistance R1 (Pa·s/m³).
    pub proximal_resistance: f64,
    /// Distal resistance R2 (Pa·s/m³).
    pub distal_resistance: f64,
    /// Compliance C (m³/Pa).
    pub compliance: f64,
    /// Venous outflow pressure P_out (Pa).
    pub outflow_pressure: f64,
}

/// Five-parameter heart function driving the root inflow.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeartFunction {
    /// Heart rate (beats/min).
    pub heart_rate: f64,
    /// Stroke volume (m³).
    pub stroke_volume: f64,
    /// Left-ventricular ejection time (s).
    pub lvet: f64,
    /// Peak flow time (s), inside the ejection window.
    pub peak_flow_time: f64,
    /// Fraction of the stroke volume carried by the reflected lobe, in [0, 1).
    pub reflected_fraction: f64,
}

impl HeartFunction {
    /// Beat period 60/HR (s).
    pub fn period(&self) -> f64 {
        60.0 / self.heart_rate
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.heart_rate > 0.0) {
            v.push(format!("heart rate must be positive, got {}", self.heart_rate));
        }
        // SV = 0 is tolerated as the degenerate "no ejection" configuration
        // so resting networks stay simulable.
        if self.stroke_volume < 0.0 {
            v.push(format!("stroke volume must be non-negative, got {}", self.stroke_volume));
        }
        if self.heart_rate > 0.0 && !(self.lvet < self.period()) {
            v.push(format!(
                "LVET {} must be shorter than the beat period {}",
                self.lvet,
                self.period()
            ));
        }
        if !(self.peak_flow_time > 0.0 && self.peak_flow_time < self.lvet) {
            v.push(format!(
                "peak flow time {} must lie strictly inside (0, LVET = {})",
                self.peak_flow_time, self.lvet
            ));
        }
        if !(0.0..1.0).contains(&self.reflected_fraction) {
            v.push(format!(
                "reflected fraction must be in [0, 1), got {}",
                self.reflected_fraction
            ));
        }
        v
    }
}

/// Signal kind recorded at a measurement site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Pressure,
    PpgProxy,
}

impl std::fmt::Display for SignalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignalKind::Pressure => write!(f, "pressure"),
            SignalKind::PpgProxy => write!(f, "ppg_proxy"),
        }
    }
}

/// A probe location: segment index, relative axial position and signal kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSite {
    pub segment: usize,
    /// Relative axial position z/L in [0, 1].
    pub position: f64,
    pub kind: SignalKind,
}

/// Rooted tree of vessel segments with heart inflow and terminal beds.
///
/// Immutable after construction; cheap to share read-only across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArterialNetwork {
    pub name: String,
    pub blood: BloodProperties,
    pub heart: HeartFunction,
    pub segments: Vec<VesselSegment>,
    /// Parent index per segment; `None` for the root.
    pub parent: Vec<Option<usize>>,
    /// Children indices per segment.
    pub children: Vec<Vec<usize>>,
    /// Windkessel bed per leaf segment index.
    pub beds: BTreeMap<usize, WindkesselBed>,
    pub sites: Vec<MeasurementSite>,
}

/// One rule violation found by [`validate_network`].
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    /// Offending entity (segment name, "topology", "heart", ...).
    pub subject: String,
    pub message: String,
}

/// Outcome of network validation; empty means every invariant holds.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { subject: subject.into(), message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "network valid");
        }
        for v in &self.violations {
            writeln!(f, "[{}] {}", v.subject, v.message)?;
        }
        Ok(())
    }
}

impl ArterialNetwork {
    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(|p| p.is_none())
    }

    pub fn is_leaf(&self, idx: usize) -> bool {
        self.children[idx].is_empty()
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    /// Indices of the root-to-leaf path passing through `idx`, root first.
    pub fn path_from_root(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
            if path.len() > self.segments.len() {
                break; // cyclic adjacency; validation will flag it
            }
        }
        path.reverse();
        path
    }

    /// Mean large-artery diameter (m): unweighted mean over segments of the
    /// average of proximal and distal diameters.
    pub fn mean_diameter(&self) -> f64 {
        let sum: f64 = self
            .segments
            .iter()
            .map(|s| {
                let d_p = 2.0 * (s.a0_proximal / std::f64::consts::PI).sqrt();
                let d_d = 2.0 * (s.a0_distal / std::f64::consts::PI).sqrt();
                0.5 * (d_p + d_d)
            })
            .sum();
        sum / self.segments.len() as f64
    }
}

/// Pressure from the visco-elastic tube law.
///
/// `P = P_ext + beta (sqrt(A) - sqrt(A0)) + Gamma / sqrt(A) * dA/dt`,
/// evaluated with the segment's proximal reference coefficients.
pub fn tube_law_pressure(area: f64, darea_dt: f64, seg: &VesselSegment) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain(format!(
            "tube law requires positive area, got {area} in `{}`",
            seg.name
        )));
    }
    Ok(seg.external_pressure
        + seg.elastic_coefficient * (area.sqrt() - seg.a0_proximal.sqrt())
        + seg.viscous_coefficient / area.sqrt() * darea_dt)
}

/// Local pulse wave speed `c = sqrt(beta / (2 rho)) A^{1/4}` implied by the
/// elastic part of the tube law via `c^2 = (A / rho) dP/dA`.
pub fn wave_speed(area: f64, seg: &VesselSegment, blood: &BloodProperties) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain(format!(
            "wave speed requires positive area, got {area} in `{}`",
            seg.name
        )));
    }
    Ok((seg.elastic_coefficient / (2.0 * blood.density)).sqrt() * area.powf(0.25))
}

/// Wave speed from explicit local coefficients (used by the solver on
/// tapered geometry).
pub fn wave_speed_local(area: f64, beta: f64, density: f64) -> f64 {
    (beta / (2.0 * density)).sqrt() * area.powf(0.25)
}

/// Checks all type invariants and topology rules; violations are report
/// entries, never panics or errors.
pub fn validate_network(net: &ArterialNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = net.segments.len();

    if n == 0 {
        report.push("topology", "network has no segments");
        return report;
    }
    if net.parent.len() != n || net.children.len() != n {
        report.push("topology", "adjacency arrays do not match the segment count");
        return report;
    }

    let b = &net.blood;
    if !(b.density > 0.0) {
        report.push("blood", format!("density must be positive, got {}", b.density));
    }
    if !(b.dynamic_viscosity >= 0.0) {
        report.push("blood", format!("viscosity must be non-negative, got {}", b.dynamic_viscosity));
    }
    if !(b.coriolis_coefficient >= 1.0) {
        report.push("blood", format!("Coriolis coefficient must be >= 1, got {}", b.coriolis_coefficient));
    }
    if !(b.velocity_profile_shape > 0.0) {
        report.push("blood", format!("velocity profile shape must be positive, got {}", b.velocity_profile_shape));
    }

    for msg in net.heart.validate() {
        report.push("heart", msg);
    }

    for seg in &net.segments {
        if !(seg.length > 0.0) {
            report.push(&seg.name, format!("length must be positive, got {}", seg.length));
        }
        if !(seg.a0_proximal > 0.0 && seg.a0_distal > 0.0) {
            report.push(&seg.name, "reference areas must be positive");
        }
        if !(seg.wall_thickness > 0.0) {
            report.push(&seg.name, format!("wall thickness must be positive, got {}", seg.wall_thickness));
        }
        if !(seg.elastic_modulus > 0.0) {
            report.push(&seg.name, format!("elastic modulus must be positive, got {}", seg.elastic_modulus));
        }
        if !(seg.wall_viscosity >= 0.0) {
            report.push(&seg.name, format!("wall viscosity must be non-negative, got {}", seg.wall_viscosity));
        }
        if seg.a0_proximal > 0.0 {
            let beta = elastic_coefficient(seg.elastic_modulus, seg.wall_thickness, seg.a0_proximal);
            let gamma = viscous_coefficient(seg.wall_viscosity, seg.wall_thickness, seg.a0_proximal);
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
            if rel(beta, seg.elastic_coefficient) > 1e-12 {
                report.push(&seg.name, format!(
                    "stored elastic coefficient {} inconsistent with primitives (expected {})",
                    seg.elastic_coefficient, beta
                ));
            }
            if seg.wall_viscosity > 0.0 && rel(gamma, seg.viscous_coefficient) > 1e-12 {
                report.push(&seg.name, format!(
                    "stored viscous coefficient {} inconsistent with primitives (expected {})",
                    seg.viscous_coefficient, gamma
                ));
            } else if seg.wall_viscosity == 0.0 && seg.viscous_coefficient != 0.0 {
                report.push(&seg.name, "viscous coefficient must be zero when wall viscosity is zero");
            }
        }
    }

    // Topology: exactly one root, every segment reachable, no cycles.
    let roots: Vec<usize> = (0..n).filter(|&i| net.parent[i].is_none()).collect();
    match roots.len() {
        0 => report.push("topology", "not a tree: no root segment (cycle in adjacency)"),
        1 => {}
        _ => report.push(
            "topology",
            format!(
                "not a tree: multiple roots ({})",
                roots.iter().map(|&i| net.segments[i].name.clone()).collect::<Vec<_>>().join(", ")
            ),
        ),
    }
    // Parent/children cross-consistency.
    for i in 0..n {
        if let Some(p) = net.parent[i] {
            if p >= n || !net.children[p].contains(&i) {
                report.push(&net.segments[i].name, "parent/children adjacency inconsistent");
            }
        }
    }
    if let Some(root) = roots.first().copied() {
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            if seen[i] {
                report.push("topology", "not a tree: cycle reachable from the root");
                break;
            }
            seen[i] = true;
            stack.extend(net.children[i].iter().copied());
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                report.push(
                    &net.segments[i].name,
                    "not a tree: segment unreachable from the root",
                );
            }
        }
    }

    for i in 0..n {
        let leaf = net.children[i].is_empty();
        let has_bed = net.beds.contains_key(&i);
        if leaf && !has_bed {
            report.push(&net.segments[i].name, "missing outlet bed on leaf segment");
        }
        if !leaf && has_bed {
            report.push(&net.segments[i].name, "interior segment must not carry an outlet bed");
        }
    }
    for (&i, bed) in &net.beds {
        if i >= n {
            report.push("beds", format!("bed references unknown segment index {i}"));
            continue;
        }
        if !(bed.proximal_resistance >= 0.0 && bed.distal_resistance >= 0.0) {
            report.push(&net.segments[i].name, "bed resistances must be non-negative");
        }
        if !(bed.compliance > 0.0) {
            report.push(&net.segments[i].name, format!("bed compliance must be positive, got {}", bed.compliance));
        }
    }

    for (k, site) in net.sites.iter().enumerate() {
        if site.segment >= n {
            report.push(format!("site {k}"), format!("references unknown segment index {}", site.segment));
        }
        if !(0.0..=1.0).contains(&site.position) {
            report.push(format!("site {k}"), format!("position {} outside [0, 1]", site.position));
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Network definition file (JSON with explicit units per field).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BloodFile {
    density_kg_m3: f64,
    viscosity_pa_s: f64,
    coriolis_alpha: f64,
    velocity_profile_gamma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeartFile {
    heart_rate_bpm: f64,
    stroke_volume_ml: f64,
    lvet_s: f64,
    peak_flow_time_s: f64,
    reflected_fraction: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    name: String,
    #[serde(default)]
    parent: Option<String>,
    length_m: f64,
    radius_proximal_m: f64,
    #[serde(default)]
    radius_distal_m: Option<f64>,
    wall_thickness_m: f64,
    elastic_modulus_pa: f64,
    #[serde(default)]
    wall_viscosity_pa_s: f64,
    #[serde(default)]
    external_pressure_pa: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BedFile {
    resistance_proximal_pa_s_m3: f64,
    resistance_distal_pa_s_m3: f64,
    compliance_m3_pa: f64,
    #[serde(default)]
    outflow_pressure_pa: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteFile {
    segment: String,
    position: f64,
    kind: SignalKind,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    name: String,
    blood: BloodFile,
    heart: HeartFile,
    segments: Vec<SegmentFile>,
    beds: BTreeMap<String, BedFile>,
    #[serde(default)]
    sites: Vec<SiteFile>,
}

impl ArterialNetwork {
    /// Parses a network definition from JSON text. Unknown keys are rejected;
    /// structural problems (cycles, missing beds) are left to
    /// [`validate_network`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let n = file.segments.len();
        let mut segments = Vec::with_capacity(n);
        for s in &file.segments {
            let r_p = s.radius_proximal_m;
            let r_d = s.radius_distal_m.unwrap_or(r_p);
            segments.push(VesselSegment::new(
                s.name.clone(),
                s.length_m,
                std::f64::consts::PI * r_p * r_p,
                std::f64::consts::PI * r_d * r_d,
                s.wall_thickness_m,
                s.elastic_modulus_pa,
                s.wall_viscosity_pa_s,
                s.external_pressure_pa,
            ));
        }
        let index_of = |name: &str| -> Result<usize> {
            segments
                .iter()
                .position(|s| s.name == name)
                .ok_or_else(|| Error::config(format!("unknown segment name `{name}`")))
        };
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (i, s) in file.segments.iter().enumerate() {
            if let Some(p) = &s.parent {
                let pi = index_of(p)?;
                parent[i] = Some(pi);
                children[pi].push(i);
            }
        }
        let mut beds = BTreeMap::new();
        for (name, bed) in &file.beds {
            beds.insert(
                index_of(name)?,
                WindkesselBed {
                    proximal_resistance: bed.resistance_proximal_pa_s_m3,
                    distal_resistance: bed.resistance_distal_pa_s_m3,
                    compliance: bed.compliance_m3_pa,
                    outflow_pressure: bed.outflow_pressure_pa,
                },
            );
        }
        let mut sites = Vec::new();
        for site in &file.sites {
            sites.push(MeasurementSite {
                segment: index_of(&site.segment)?,
                position: site.position,
                kind: site.kind,
            });
        }
        Ok(ArterialNetwork {
            name: file.name,
            blood: BloodProperties {
                density: file.blood.density_kg_m3,
                dynamic_viscosity: file.blood.viscosity_pa_s,
                coriolis_coefficient: file.blood.coriolis_alpha,
                velocity_profile_shape: file.blood.velocity_profile_gamma,
            },
            heart: HeartFunction {
                heart_rate: file.heart.heart_rate_bpm,
                stroke_volume: file.heart.stroke_volume_ml * crate::units::ML_M3,
                lvet: file.heart.lvet_s,
                peak_flow_time: file.heart.peak_flow_time_s,
                reflected_fraction: file.heart.reflected_fraction,
            },
            segments,
            parent,
            children,
            beds,
            sites,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_segment() -> VesselSegment {
        VesselSegment::uniform("seg", 0.5, 7.85e-5, 1e-3, 4e5, 0.0)
    }

    /// Single straight tube with one bed, used across the solver tests too.
    pub(crate) fn single_tube_network(wall_viscosity: f64) -> ArterialNetwork {
        let seg = VesselSegment::uniform("tube", 0.5, 7.85e-5, 1e-3, 4e5, wall_viscosity);
        let mut beds = BTreeMap::new();
        beds.insert(
            0,
            WindkesselBed {
                proximal_resistance: 1.0e7,
                distal_resistance: 1.5e8,
                compliance: 1.0e-8,
                outflow_pressure: 0.0,
            },
        );
        ArterialNetwork {
            name: "single_tube".into(),
            blood: BloodProperties::default(),
            heart: HeartFunction {
                heart_rate: 70.0,
                stroke_volume: 70e-6,
                lvet: 0.3,
                peak_flow_time: 0.12,
                reflected_fraction: 0.1,
            },
            segments: vec![seg],
            parent: vec![None],
            children: vec![vec![]],
            beds,
            sites: vec![MeasurementSite { segment: 0, position: 0.5, kind: SignalKind::Pressure }],
        }
    }

    #[test]
    fn tube_law_reference_state_identity() {
        let seg = test_segment();
        let p = tube_law_pressure(seg.a0_proximal, 0.0, &seg).unwrap();
        assert!((p - seg.external_pressure).abs() < 1e-12);
    }

    #[test]
    fn tube_law_linear_in_beta() {
        let seg = test_segment();
        // Doubling E doubles beta; P - P_ext doubles with dA/dt = 0.
        let stiff = VesselSegment::uniform("stiff", 0.5, 7.85e-5, 1e-3, 8e5, 0.0);
        let a = 8.5e-5;
        let p1 = tube_law_pressure(a, 0.0, &seg).unwrap() - seg.external_pressure;
        let p2 = tube_law_pressure(a, 0.0, &stiff).unwrap() - stiff.external_pressure;
        assert!((p2 - 2.0 * p1).abs() / p1.abs() < 1e-12);
    }

    #[test]
    fn tube_law_matches_scalar_oracle() {
        // Independent scalar evaluation of the closed form, frozen.
        let seg = test_segment();
        assert!((seg.elastic_coefficient - 1.204_214_930_551_518_3e7).abs() / 1.2e7 < 1e-12);
        let p = tube_law_pressure(8.5e-5, 0.0, &seg).unwrap();
        assert!((p - 4329.416_205_224_894).abs() / 4329.4 < 1e-12, "got {p}");
    }

    #[test]
    fn tube_law_rejects_nonpositive_area() {
        let seg = test_segment();
        assert!(matches!(tube_law_pressure(0.0, 0.0, &seg), Err(Error::Domain(_))));
        assert!(matches!(tube_law_pressure(-1e-5, 0.0, &seg), Err(Error::Domain(_))));
    }

    #[test]
    fn tube_law_strictly_increasing_in_area() {
        let seg = test_segment();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..100 {
            let a = 2e-5 + 2e-6 * k as f64;
            let p = tube_law_pressure(a, 0.0, &seg).unwrap();
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn wave_speed_quartic_root_scaling() {
        let seg = test_segment();
        let blood = BloodProperties::default();
        let c1 = wave_speed(7.85e-5, &seg, &blood).unwrap();
        let c16 = wave_speed(16.0 * 7.85e-5, &seg, &blood).unwrap();
        assert!((c16 / c1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wave_speed_sqrt_beta_scaling() {
        let blood = BloodProperties::default();
        let seg = test_segment();
        // E x4 scales beta x4 and c x2.
        let stiff = VesselSegment::uniform("stiff", 0.5, 7.85e-5, 1e-3, 1.6e6, 0.0);
        let c1 = wave_speed(7.85e-5, &seg, &blood).unwrap();
        let c2 = wave_speed(7.85e-5, &stiff, &blood).unwrap();
        assert!((c2 / c1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wave_speed_matches_scalar_oracle() {
        let seg = test_segment();
        let blood = BloodProperties::default();
        let c = wave_speed(7.85e-5, &seg, &blood).unwrap();
        assert!((c - 7.094_168_302_547_742).abs() < 1e-10, "got {c}");
    }

    #[test]
    fn wave_speed_invariant_under_compensating_wall_scaling() {
        // E -> kE, h0 -> h0/k leaves beta unchanged.
        let blood = BloodProperties::default();
        let a = VesselSegment::uniform("a", 0.5, 7.85e-5, 1e-3, 4e5, 0.0);
        let b = VesselSegment::uniform("b", 0.5, 7.85e-5, 1e-3 / 3.0, 1.2e6, 0.0);
        let ca = wave_speed(7.85e-5, &a, &blood).unwrap();
        let cb = wave_speed(7.85e-5, &b, &blood).unwrap();
        assert!((ca - cb).abs() / ca < 1e-12);
    }

    #[test]
    fn derived_coefficients_recoverable_to_1e12() {
        let seg = VesselSegment::uniform("s", 0.2, 3.1e-5, 4e-4, 9e5, 2500.0);
        let beta = elastic_coefficient(seg.elastic_modulus, seg.wall_thickness, seg.a0_proximal);
        let gamma = viscous_coefficient(seg.wall_viscosity, seg.wall_thickness, seg.a0_proximal);
        assert!((beta - seg.elastic_coefficient).abs() / beta < 1e-12);
        assert!((gamma - seg.viscous_coefficient).abs() / gamma < 1e-12);
    }

    #[test]
    fn validate_accepts_single_tube() {
        let net = single_tube_network(0.0);
        let report = validate_network(&net);
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn validate_flags_cycle() {
        let mut net = single_tube_network(0.0);
        let seg2 = VesselSegment::uniform("tube2", 0.3, 5e-5, 1e-3, 4e5, 0.0);
        net.segments.push(seg2);
        // tube -> tube2 -> tube: a cycle, so no root exists.
        net.parent = vec![Some(1), Some(0)];
        net.children = vec![vec![1], vec![0]];
        let report = validate_network(&net);
        assert!(!report.is_valid());
        assert!(report.violations.iter().any(|v| v.message.contains("not a tree")), "{report}");
    }

    #[test]
    fn validate_flags_missing_bed() {
        let mut net = single_tube_network(0.0);
        net.beds.clear();
        let report = validate_network(&net);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("missing outlet bed")), "{report}");
    }

    #[test]
    fn json_roundtrip_and_unknown_key_rejection() {
        let text = r#"{
            "name": "tiny",
            "blood": {"density_kg_m3": 1060.0, "viscosity_pa_s": 0.004,
                      "coriolis_alpha": 1.1, "velocity_profile_gamma": 9.0},
            "heart": {"heart_rate_bpm": 70.0, "stroke_volume_ml": 70.0,
                      "lvet_s": 0.3, "peak_flow_time_s": 0.12, "reflected_fraction": 0.1},
            "segments": [
                {"name": "tube", "length_m": 0.5, "radius_proximal_m": 0.005,
                 "wall_thickness_m": 0.001, "elastic_modulus_pa": 400000.0}
            ],
            "beds": {"tube": {"resistance_proximal_pa_s_m3": 1e7,
                              "resistance_distal_pa_s_m3": 1.5e8,
                              "compliance_m3_pa": 1e-8}},
            "sites": [{"segment": "tube", "position": 0.5, "kind": "pressure"}]
        }"#;
        let net = ArterialNetwork::from_json(text).unwrap();
        assert_eq!(net.segments.len(), 1);
        assert!((net.heart.stroke_volume - 70e-6).abs() < 1e-18);
        assert!(validate_network(&net).is_valid());

        let bad = text.replace("\"length_m\"", "\"length_furlongs\"");
        assert!(ArterialNetwork::from_json(&bad).is_err());
    }

    #[test]
    fn tapered_segment_interpolates_radius_linearly() {
        let seg = VesselSegment::new("t", 0.1, std::f64::consts::PI * 1e-4, std::f64::consts::PI * 0.25e-4, 1e-3, 4e5, 0.0, 0.0);
        // radii 0.01 -> 0.005; at midpoint radius 0.0075.
        let a_mid = seg.a0_at(0.5);
        let expect = std::f64::consts::PI * 0.0075 * 0.0075;
        assert!((a_mid - expect).abs() / expect < 1e-12);
    }
}
