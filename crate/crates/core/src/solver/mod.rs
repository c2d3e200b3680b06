//! Time-domain solution of the 1D pulse-wave system on an arterial network.
//!
//! The hyperbolic core advances with SSP-RK2 over MUSCL/HLL fluxes
//! ([`scheme`]); segment ends couple through characteristic-based boundary
//! solves ([`boundary`]); the visco-elastic wall term is applied as an
//! implicit diffusive correction on the flow after each step (operator
//! splitting). [`simulate`] runs whole heartbeats until the cycle waveform
//! stops changing, then returns one converged beat per measurement site
//! resampled to the output rate.

pub mod boundary;
pub mod inflow;
pub mod scheme;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rel_l2;
use crate::vessel::{validate_network, ArterialNetwork, SignalKind};
use crate::waveform::{SiteInfo, WaveformRecord};

pub use inflow::{inflow_waveform, InflowWave};
use boundary::{solve_inlet, solve_junction, solve_windkessel, SegmentEnd};
use scheme::{celerity, physical_flux, segment_rhs, Discretization, Flux};

/// Spatial grid request.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverGrid {
    /// Desired cell width (m); each segment gets `ceil(L / target_dx)` cells.
    pub target_dx: f64,
    /// Lower bound on cells per segment (clamped to at least 4).
    pub min_cells: usize,
    /// CFL number in (0, 1].
    pub cfl: f64,
}

impl Default for SolverGrid {
    fn default() -> Self {
        Self { target_dx: 5.0e-3, min_cells: 6, cfl: 0.9 }
    }
}

impl SolverGrid {
    fn check(&self) -> Result<()> {
        if !(self.target_dx > 0.0) {
            return Err(Error::config("grid target_dx must be positive"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("CFL must lie in (0, 1], got {}", self.cfl)));
        }
        Ok(())
    }
}

/// Simulation configuration for [`simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: SolverGrid,
    /// Periodic-convergence tolerance: max over sites of the relative L2
    /// difference between consecutive cycles.
    pub convergence_tol: f64,
    pub max_cycles: usize,
    /// Output sampling rate (Hz) of the returned beat.
    pub output_rate: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { grid: SolverGrid::default(), convergence_tol: 1e-3, max_cycles: 15, output_rate: 125.0 }
    }
}

/// Full solver state: per-cell area and flow for every segment plus the
/// internal Windkessel pressures.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub a: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// Internal bed pressure per leaf segment index.
    pub bed_pressure: BTreeMap<usize, f64>,
    pub time: f64,
}

/// Effective boundary mass fluxes applied over one full step, for
/// conservation audits: total volume change equals
/// `(inflow - outflow_total) * dt` up to round-off.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepLedger {
    /// Mass flux through the root inlet face (m³/s).
    pub inflow: f64,
    /// Summed mass flux through all outlet faces (m³/s).
    pub outflow_total: f64,
}

/// Convergence diagnostics reported by [`simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationDiagnostics {
    pub cycles_run: usize,
    /// Final max-over-sites relative L2 difference between the last two cycles.
    pub residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Result of [`simulate`]: one record per measurement site (in network site
/// order) plus diagnostics.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<WaveformRecord>,
    pub diagnostics: SimulationDiagnostics,
}

enum InflowKind {
    Heart(InflowWave),
    Constant(f64),
}

/// A prepared solver for one network and grid; owns the discretization and
/// the inflow waveform. No mutable state: many sessions can run concurrently
/// and a single session can advance several states.
pub struct SolverSession<'a> {
    net: &'a ArterialNetwork,
    disc: Discretization,
    inflow: InflowKind,
    root: usize,
}

struct StageDerivative {
    da: Vec<Vec<f64>>,
    dq: Vec<Vec<f64>>,
    dpc: BTreeMap<usize, f64>,
    ledger: StepLedger,
}

impl<'a> SolverSession<'a> {
    pub fn new(net: &'a ArterialNetwork, grid: &SolverGrid) -> Result<Self> {
        grid.check()?;
        let report = validate_network(net);
        if !report.is_valid() {
            return Err(Error::config(format!("invalid network:\n{report}")));
        }
        let root = net.root().expect("validated network has a root");
        let disc = Discretization::build(net, grid.target_dx, grid.min_cells);
        let inflow = InflowKind::Heart(InflowWave::new(&net.heart)?);
        Ok(Self { net, disc, inflow, root })
    }

    /// Replaces the heart inflow with a constant flow; used for steady-state
    /// validation runs.
    pub fn with_constant_inflow(net: &'a ArterialNetwork, grid: &SolverGrid, q: f64) -> Result<Self> {
        let mut s = Self::new(net, grid)?;
        s.inflow = InflowKind::Constant(q);
        Ok(s)
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn inflow_at(&self, t: f64) -> f64 {
        match &self.inflow {
            InflowKind::Heart(w) => w.flow(t),
            InflowKind::Constant(q) => *q,
        }
    }

    /// Rest state: `A = A0`, `Q = 0`, bed pressures at their outflow values.
    pub fn rest_state(&self) -> SolverState {
        let a = self.disc.segments.iter().map(|s| s.a0.clone()).collect();
        let q = self.disc.segments.iter().map(|s| vec![0.0; s.n]).collect();
        let bed_pressure = self.net.beds.iter().map(|(&i, b)| (i, b.outflow_pressure)).collect();
        SolverState { a, q, bed_pressure, time: 0.0 }
    }

    /// Warm initial state: uniform pressure at the mean-pressure estimate
    /// implied by cardiac output and the parallel bed resistances, which
    /// shortens the periodic transient considerably.
    pub fn initial_state(&self) -> SolverState {
        let heart = &self.net.heart;
        let co = match &self.inflow {
            InflowKind::Heart(_) => heart.stroke_volume * heart.heart_rate / 60.0,
            InflowKind::Constant(q) => *q,
        };
        let mut conductance = 0.0;
        let mut pout_avg = 0.0;
        for bed in self.net.beds.values() {
            conductance += 1.0 / (bed.proximal_resistance + bed.distal_resistance).max(1.0);
            pout_avg += bed.outflow_pressure;
        }
        pout_avg /= self.net.beds.len().max(1) as f64;
        let map_est = pout_avg + if conductance > 0.0 { co / conductance } else { 0.0 };

        let mut state = self.rest_state();
        for (sd, (a_seg, seg)) in self
            .disc
            .segments
            .iter()
            .zip(state.a.iter_mut().zip(&self.net.segments))
        {
            for i in 0..sd.n {
                let dp = map_est - seg.external_pressure;
                if dp > 0.0 {
                    let s = sd.a0[i].sqrt() + dp / sd.beta[i];
                    a_seg[i] = s * s;
                }
            }
        }
        // Steady flow field: each segment carries the summed bed flows of its
        // subtree.
        let nseg = self.net.segments.len();
        let mut seg_flow = vec![0.0; nseg];
        for (&leaf, bed) in &self.net.beds {
            let q_est = (map_est - bed.outflow_pressure)
                / (bed.proximal_resistance + bed.distal_resistance).max(1.0);
            state.bed_pressure.insert(leaf, map_est - bed.proximal_resistance * q_est);
            let mut cur = Some(leaf);
            while let Some(s) = cur {
                seg_flow[s] += q_est;
                cur = self.net.parent[s];
            }
        }
        for (s, q_seg) in state.q.iter_mut().enumerate() {
            q_seg.iter_mut().for_each(|q| *q = seg_flow[s]);
        }
        state
    }

    /// `CFL * min_cells dx / (|u| + c)` over the whole network at `state`.
    pub fn stable_dt(&self, state: &SolverState, cfl: f64) -> f64 {
        let rho = self.net.blood.density;
        let mut dt = f64::INFINITY;
        for (sd, (a_seg, q_seg)) in self.disc.segments.iter().zip(state.a.iter().zip(&state.q)) {
            for i in 0..sd.n {
                let c = celerity(a_seg[i], sd.beta[i], rho);
                let u = (q_seg[i] / a_seg[i]).abs();
                dt = dt.min(sd.dx / (u + c));
            }
        }
        cfl * dt
    }

    /// Total blood volume in the network (m³).
    pub fn total_volume(&self, state: &SolverState) -> f64 {
        self.disc
            .segments
            .iter()
            .zip(&state.a)
            .map(|(sd, a)| a.iter().sum::<f64>() * sd.dx)
            .sum()
    }

    fn stage(&self, state: &SolverState, t: f64, dt: f64) -> Result<StageDerivative> {
        let blood = &self.net.blood;
        let rho = blood.density;
        let alpha = blood.coriolis_coefficient;
        let nseg = self.disc.segments.len();

        let mut flux_prox = vec![Flux::default(); nseg];
        let mut flux_dist = vec![Flux::default(); nseg];
        let mut dpc = BTreeMap::new();
        let mut ledger = StepLedger::default();

        // Root inlet.
        {
            let sd = &self.disc.segments[self.root];
            let (a_seg, q_seg) = (&state.a[self.root], &state.q[self.root]);
            let q_in = self.inflow_at(t);
            let (a_b, q_b) = solve_inlet(q_in, a_seg[0], q_seg[0], sd.beta_prox, rho)?;
            flux_prox[self.root] = physical_flux(a_b, q_b, sd.beta_prox, rho, alpha);
            ledger.inflow = q_b;
        }

        // Junctions.
        for p in 0..nseg {
            let children = &self.net.children[p];
            if children.is_empty() {
                continue;
            }
            let sd_p = &self.disc.segments[p];
            let np = sd_p.n;
            let parent_end = SegmentEnd {
                area: state.a[p][np - 1],
                flow: state.q[p][np - 1],
                beta: sd_p.beta_dist,
                a0: sd_p.a0_dist,
                p_ext: sd_p.p_ext,
            };
            let child_ends: Vec<SegmentEnd> = children
                .iter()
                .map(|&c| {
                    let sd_c = &self.disc.segments[c];
                    SegmentEnd {
                        area: state.a[c][0],
                        flow: state.q[c][0],
                        beta: sd_c.beta_prox,
                        a0: sd_c.a0_prox,
                        p_ext: sd_c.p_ext,
                    }
                })
                .collect();
            let sol = solve_junction(
                parent_end,
                &child_ends,
                rho,
                1e-11,
                &self.net.segments[p].name,
            )?;
            flux_dist[p] = physical_flux(sol.parent.0, sol.parent.1, sd_p.beta_dist, rho, alpha);
            for (k, &c) in children.iter().enumerate() {
                let sd_c = &self.disc.segments[c];
                flux_prox[c] =
                    physical_flux(sol.children[k].0, sol.children[k].1, sd_c.beta_prox, rho, alpha);
            }
        }

        // Windkessel outlets.
        for (&leaf, bed) in &self.net.beds {
            let sd = &self.disc.segments[leaf];
            let n = sd.n;
            let pc = state.bed_pressure[&leaf];
            let (a_b, q_b, pc_next) = solve_windkessel(
                state.a[leaf][n - 1],
                state.q[leaf][n - 1],
                sd.beta_dist,
                sd.a0_dist,
                sd.p_ext,
                bed,
                pc,
                dt,
                rho,
                &self.net.segments[leaf].name,
            )?;
            flux_dist[leaf] = physical_flux(a_b, q_b, sd.beta_dist, rho, alpha);
            ledger.outflow_total += q_b;
            dpc.insert(leaf, (pc_next - pc) / dt);
        }

        let mut da = Vec::with_capacity(nseg);
        let mut dq = Vec::with_capacity(nseg);
        let mut face_buf = Vec::new();
        for s in 0..nseg {
            let sd = &self.disc.segments[s];
            let mut da_s = vec![0.0; sd.n];
            let mut dq_s = vec![0.0; sd.n];
            segment_rhs(
                sd,
                &state.a[s],
                &state.q[s],
                blood,
                flux_prox[s],
                flux_dist[s],
                &mut da_s,
                &mut dq_s,
                &mut face_buf,
            );
            da.push(da_s);
            dq.push(dq_s);
        }

        Ok(StageDerivative { da, dq, dpc, ledger })
    }

    /// One explicit SSP-RK2 step of size `dt`, followed by the implicit
    /// visco-elastic wall correction. Returns the effective boundary mass
    /// fluxes applied over the step.
    pub fn advance(&self, state: &mut SolverState, dt: f64) -> Result<StepLedger> {
        let k1 = self.stage(state, state.time, dt)?;

        let mut mid = state.clone();
        for s in 0..self.disc.segments.len() {
            for i in 0..self.disc.segments[s].n {
                mid.a[s][i] += dt * k1.da[s][i];
                mid.q[s][i] += dt * k1.dq[s][i];
            }
        }
        for (leaf, d) in &k1.dpc {
            *mid.bed_pressure.get_mut(leaf).unwrap() += dt * d;
        }
        mid.time = state.time + dt;
        self.check_state(&mid, state.time + dt)?;

        let k2 = self.stage(&mid, mid.time, dt)?;
        for s in 0..self.disc.segments.len() {
            for i in 0..self.disc.segments[s].n {
                state.a[s][i] = 0.5 * (state.a[s][i] + mid.a[s][i] + dt * k2.da[s][i]);
                state.q[s][i] = 0.5 * (state.q[s][i] + mid.q[s][i] + dt * k2.dq[s][i]);
            }
        }
        for (leaf, d) in &k2.dpc {
            let pc = state.bed_pressure[leaf];
            state.bed_pressure.insert(*leaf, 0.5 * (pc + mid.bed_pressure[leaf] + dt * d));
        }
        state.time += dt;

        self.apply_wall_viscosity(state, dt);
        self.check_state(state, state.time)?;

        Ok(StepLedger {
            inflow: 0.5 * (k1.ledger.inflow + k2.ledger.inflow),
            outflow_total: 0.5 * (k1.ledger.outflow_total + k2.ledger.outflow_total),
        })
    }

    /// Implicit Euler solve of `dQ/dt = (A/rho) d/dz[(Gamma/sqrt(A)) dQ/dz]`
    /// per segment (Thomas algorithm); zero viscous flux through segment ends.
    fn apply_wall_viscosity(&self, state: &mut SolverState, dt: f64) {
        let rho = self.net.blood.density;
        for (s, sd) in self.disc.segments.iter().enumerate() {
            if sd.gamma.iter().all(|&g| g == 0.0) {
                continue;
            }
            let n = sd.n;
            let a = &state.a[s];
            let q = &mut state.q[s];
            let mut lower = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut upper = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let dcoef: Vec<f64> = (0..n).map(|i| sd.gamma[i] / a[i].sqrt()).collect();
            for i in 0..n {
                let d_m = if i == 0 { 0.0 } else { 0.5 * (dcoef[i - 1] + dcoef[i]) };
                let d_p = if i == n - 1 { 0.0 } else { 0.5 * (dcoef[i] + dcoef[i + 1]) };
                let coef = dt * a[i] / (rho * sd.dx * sd.dx);
                lower[i] = -coef * d_m;
                upper[i] = -coef * d_p;
                diag[i] = 1.0 + coef * (d_m + d_p);
                rhs[i] = q[i];
            }
            // Thomas forward sweep.
            for i in 1..n {
                let w = lower[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            q[n - 1] = rhs[n - 1] / diag[n - 1];
            for i in (0..n - 1).rev() {
                q[i] = (rhs[i] - upper[i] * q[i + 1]) / diag[i];
            }
        }
    }

    fn check_state(&self, state: &SolverState, time: f64) -> Result<()> {
        for (s, (a_seg, q_seg)) in state.a.iter().zip(&state.q).enumerate() {
            for i in 0..a_seg.len() {
                let (a, q) = (a_seg[i], q_seg[i]);
                if !(a > 0.0) || !a.is_finite() || !q.is_finite() {
                    return Err(Error::BlowUp {
                        segment: self.net.segments[s].name.clone(),
                        cell: i,
                        time,
                        detail: format!("A = {a:.6e}, Q = {q:.6e}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Local pressure at (segment, cell) from the full tube law; `dadt` is
    /// the local area rate.
    fn cell_pressure(&self, s: usize, i: usize, a: f64, dadt: f64) -> f64 {
        let sd = &self.disc.segments[s];
        sd.p_ext + sd.beta[i] * (a.sqrt() - sd.a0[i].sqrt()) + sd.gamma[i] / a.sqrt() * dadt
    }
}

/// `stable_timestep` at the network rest state, as a standalone operation.
pub fn stable_timestep(net: &ArterialNetwork, grid: &SolverGrid) -> Result<f64> {
    for seg in &net.segments {
        if !(seg.length > 0.0) {
            return Err(Error::config(format!("segment `{}` has non-positive length", seg.name)));
        }
    }
    let session = SolverSession::new(net, grid)?;
    let state = session.rest_state();
    Ok(session.stable_dt(&state, grid.cfl))
}

/// Advances `state` by one stable step; standalone wrapper over
/// [`SolverSession::advance`] matching the per-operation contract.
pub fn advance_step(
    session: &SolverSession<'_>,
    state: &mut SolverState,
    dt: f64,
) -> Result<StepLedger> {
    session.advance(state, dt)
}

/// PPG proxy: the local area waveform min-max normalized to [0, 1] per beat.
pub fn extract_ppg(area_beat: &WaveformRecord) -> Result<WaveformRecord> {
    let min = area_beat.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = area_beat.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) || span < 1e-12 * max.abs().max(1e-300) {
        return Err(Error::signal("constant area waveform, PPG proxy undefined"));
    }
    let mut out = area_beat.clone();
    for s in &mut out.samples {
        *s = (*s - min) / span;
    }
    Ok(out)
}

/// Runs whole-heartbeat cycles until periodic convergence and returns the
/// final converged beat per measurement site at the output rate.
pub fn simulate(net: &ArterialNetwork, config: &SimulationConfig) -> Result<SimulationOutput> {
    let session = SolverSession::new(net, &config.grid)?;
    let period = net.heart.period();
    let mut state = session.initial_state();

    struct SiteProbe {
        segment: usize,
        kind: SignalKind,
        position: f64,
        lo: usize,
        hi: usize,
        frac: f64,
    }
    let probes: Vec<SiteProbe> = net
        .sites
        .iter()
        .map(|site| {
            let sd = &session.disc.segments[site.segment];
            let xc = site.position.clamp(0.0, 1.0) * sd.length;
            let pos = (xc / sd.dx - 0.5).clamp(0.0, (sd.n - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(sd.n - 1);
            SiteProbe {
                segment: site.segment,
                kind: site.kind,
                position: site.position,
                lo,
                hi,
                frac: pos - lo as f64,
            }
        })
        .collect();

    let n_out = (period * config.output_rate).round().max(1.0) as usize;
    let mut prev_cycle: Option<Vec<Vec<f64>>> = None;
    let mut last_cycle: Vec<Vec<f64>> = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut cycles_run = 0;
    let mut warnings = Vec::new();

    let mut prev_a: Vec<Vec<f64>> = state.a.clone();

    for _cycle in 0..config.max_cycles {
        // Fixed step count per cycle, with headroom for intra-cycle speed-up.
        let dt_est = session.stable_dt(&state, config.grid.cfl) / 1.3;
        let steps = (period / dt_est).ceil() as usize;
        let dt = period / steps as f64;

        let mut traces: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); probes.len()];
        let record = |traces: &mut Vec<Vec<f64>>, state: &SolverState, prev_a: &[Vec<f64>], dt: f64| {
            for (trace, probe) in traces.iter_mut().zip(&probes) {
                let s = probe.segment;
                let value = match probe.kind {
                    SignalKind::Pressure => {
                        let p_lo = {
                            let a = state.a[s][probe.lo];
                            let dadt = if dt > 0.0 { (a - prev_a[s][probe.lo]) / dt } else { 0.0 };
                            session.cell_pressure(s, probe.lo, a, dadt)
                        };
                        let p_hi = {
                            let a = state.a[s][probe.hi];
                            let dadt = if dt > 0.0 { (a - prev_a[s][probe.hi]) / dt } else { 0.0 };
                            session.cell_pressure(s, probe.hi, a, dadt)
                        };
                        p_lo * (1.0 - probe.frac) + p_hi * probe.frac
                    }
                    SignalKind::PpgProxy => {
                        state.a[s][probe.lo] * (1.0 - probe.frac)
                            + state.a[s][probe.hi] * probe.frac
                    }
                };
                trace.push(value);
            }
        };

        record(&mut traces, &state, &prev_a, 0.0);
        for _ in 0..steps {
            prev_a.clone_from(&state.a);
            session.advance(&mut state, dt)?;
            record(&mut traces, &state, &prev_a, dt);
        }
        cycles_run += 1;

        // Resample the cycle onto the fixed output grid for comparison.
        let resampled: Vec<Vec<f64>> = traces
            .iter()
            .map(|trace| {
                (0..n_out)
                    .map(|j| {
                        let t = j as f64 / config.output_rate;
                        let pos = (t / dt).min((steps) as f64);
                        let i = pos.floor() as usize;
                        let frac = pos - i as f64;
                        let a = trace[i.min(steps)];
                        let b = trace[(i + 1).min(steps)];
                        a * (1.0 - frac) + b * frac
                    })
                    .collect()
            })
            .collect();

        if let Some(prev) = &prev_cycle {
            residual = resampled
                .iter()
                .zip(prev)
                .map(|(cur, pre)| rel_l2(cur, pre))
                .fold(0.0f64, f64::max);
            if residual < config.convergence_tol {
                converged = true;
                last_cycle = resampled;
                break;
            }
        }
        prev_cycle = Some(resampled.clone());
        last_cycle = resampled;
    }

    if !converged {
        warnings.push(format!(
            "no periodic convergence after {cycles_run} cycles (residual {residual:.3e} >= {:.1e}); returning the last cycle",
            config.convergence_tol
        ));
    }

    let mut records = Vec::with_capacity(probes.len());
    for (probe, samples) in probes.iter().zip(last_cycle) {
        let site = SiteInfo {
            segment: net.segments[probe.segment].name.clone(),
            position: probe.position,
            kind: probe.kind,
        };
        let mut rec = WaveformRecord::new(samples, config.output_rate, site, period)?;
        if probe.kind == SignalKind::PpgProxy {
            rec = match extract_ppg(&rec) {
                Ok(r) => r,
                Err(Error::Signal(_)) if !converged || net.heart.stroke_volume == 0.0 => {
                    // Degenerate constant area (e.g. zero stroke volume);
                    // return the raw area so callers can still inspect it.
                    warnings.push(format!(
                        "constant area at site `{}`; PPG normalization skipped",
                        net.segments[probe.segment].name
                    ));
                    rec
                }
                Err(e) => return Err(e),
            };
        }
        records.push(rec);
    }

    Ok(SimulationOutput {
        records,
        diagnostics: SimulationDiagnostics { cycles_run, residual, converged, warnings },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vessel::{
        BloodProperties, HeartFunction, MeasurementSite, VesselSegment, WindkesselBed,
    };
    use std::collections::BTreeMap;

    pub(crate) fn single_tube(wall_viscosity: f64) -> ArterialNetwork {
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
    fn stable_timestep_matches_rest_formula() {
        let net = single_tube(0.0);
        let grid = SolverGrid { target_dx: 5e-3, min_cells: 4, cfl: 0.8 };
        let dt = stable_timestep(&net, &grid).unwrap();
        let c0 = 7.094_168_302_547_742; // frozen scalar oracle
        let dx = 0.5 / 100.0;
        assert!((dt - 0.8 * dx / c0).abs() / dt < 1e-12, "dt = {dt}");
    }

    #[test]
    fn stable_timestep_halves_with_dx() {
        let net = single_tube(0.0);
        let g1 = SolverGrid { target_dx: 5e-3, min_cells: 4, cfl: 0.9 };
        let g2 = SolverGrid { target_dx: 2.5e-3, min_cells: 4, cfl: 0.9 };
        let d1 = stable_timestep(&net, &g1).unwrap();
        let d2 = stable_timestep(&net, &g2).unwrap();
        assert!((d1 / d2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stable_timestep_shrinks_with_stiffer_wall() {
        let net = single_tube(0.0);
        let mut stiff = net.clone();
        stiff.segments[0] = VesselSegment::uniform("tube", 0.5, 7.85e-5, 1e-3, 1.6e6, 0.0);
        let grid = SolverGrid::default();
        let d_soft = stable_timestep(&net, &grid).unwrap();
        let d_stiff = stable_timestep(&stiff, &grid).unwrap();
        assert!((d_soft / d_stiff - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rest_state_is_fixed_point_without_inflow() {
        let mut net = single_tube(0.0);
        net.heart.stroke_volume = 0.0;
        let grid = SolverGrid::default();
        let session = SolverSession::new(&net, &grid).unwrap();
        let mut state = session.rest_state();
        let reference = state.clone();
        for _ in 0..50 {
            session.advance(&mut state, 1e-4).unwrap();
        }
        for (a, ar) in state.a[0].iter().zip(&reference.a[0]) {
            assert!((a - ar).abs() / ar < 1e-13);
        }
        for q in &state.q[0] {
            assert!(q.abs() < 1e-18);
        }
    }

    #[test]
    fn per_step_mass_conservation_matches_ledger() {
        let net = single_tube(2000.0);
        let grid = SolverGrid::default();
        let session = SolverSession::new(&net, &grid).unwrap();
        let mut state = session.initial_state();
        let dt = session.stable_dt(&state, 0.9) / 1.3;
        for _ in 0..200 {
            let v0 = session.total_volume(&state);
            let ledger = session.advance(&mut state, dt).unwrap();
            let v1 = session.total_volume(&state);
            let expected = (ledger.inflow - ledger.outflow_total) * dt;
            let err = ((v1 - v0) - expected).abs();
            let scale = expected.abs().max(v0 * 1e-12);
            assert!(err / scale < 1e-10, "err {err:.3e} vs scale {scale:.3e}");
        }
    }

    #[test]
    fn zero_stroke_volume_gives_constant_pressure_at_outflow() {
        let mut net = single_tube(0.0);
        net.heart.stroke_volume = 0.0;
        for bed in net.beds.values_mut() {
            bed.outflow_pressure = 666.0;
        }
        let out = simulate(&net, &SimulationConfig::default()).unwrap();
        let rec = &out.records[0];
        for &p in &rec.samples {
            assert!((p - 666.0).abs() < 1e-6, "pressure {p}");
        }
    }

    #[test]
    fn beat_duration_matches_heart_rate_within_one_sample() {
        let net = single_tube(2000.0);
        let out = simulate(&net, &SimulationConfig::default()).unwrap();
        let rec = &out.records[0];
        let period = 60.0 / 70.0;
        assert!((rec.duration - period).abs() <= 1.0 / rec.sampling_rate);
        assert!(rec.is_consistent());
    }

    #[test]
    fn extract_ppg_normalizes_and_is_affine_invariant() {
        let site = SiteInfo { segment: "tube".into(), position: 0.5, kind: SignalKind::PpgProxy };
        let base: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let rec = WaveformRecord::new(base.clone(), 125.0, site.clone(), 0.8).unwrap();
        let ppg = extract_ppg(&rec).unwrap();
        let min = ppg.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ppg.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);

        let affine: Vec<f64> = base.iter().map(|x| 3.5 * x - 7.0).collect();
        let rec2 = WaveformRecord::new(affine, 125.0, site.clone(), 0.8).unwrap();
        let ppg2 = extract_ppg(&rec2).unwrap();
        for (a, b) in ppg.samples.iter().zip(&ppg2.samples) {
            assert!((a - b).abs() < 1e-12);
        }

        let flat = WaveformRecord::new(vec![1.0; 50], 125.0, site, 0.4).unwrap();
        assert!(matches!(extract_ppg(&flat), Err(Error::Signal(_))));
    }

    #[test]
    fn windkessel_reaches_resistive_steady_state() {
        let mut net = single_tube(0.0);
        // Short time constant so 20 tau fits in a short run.
        for bed in net.beds.values_mut() {
            bed.compliance = 1e-9;
            bed.outflow_pressure = 300.0;
        }
        let q_bar = 4e-6; // 4 mL/s
        let grid = SolverGrid::default();
        let session = SolverSession::with_constant_inflow(&net, &grid, q_bar).unwrap();
        let mut state = session.initial_state();
        let dt = session.stable_dt(&state, 0.9) / 1.3;
        let tau = 1.5e8 * 1e-9;
        let t_end = 20.0 * tau;
        let steps = (t_end / dt).ceil() as usize;
        for _ in 0..steps {
            session.advance(&mut state, dt).unwrap();
        }
        let bed = &net.beds[&0];
        let expect = bed.outflow_pressure
            + q_bar * (bed.proximal_resistance + bed.distal_resistance);
        let sd = &session.disc().segments[0];
        let n = sd.n;
        let a_end = state.a[0][n - 1];
        let p_end = sd.p_ext + sd.beta[n - 1] * (a_end.sqrt() - sd.a0[n - 1].sqrt());
        assert!(
            (p_end - expect).abs() / expect < 1e-3,
            "terminal pressure {p_end:.2} vs steady {expect:.2}"
        );
    }

    #[test]
    fn bed_pressure_slew_follows_capacitor_law_for_large_c() {
        let mut net = single_tube(0.0);
        for bed in net.beds.values_mut() {
            bed.compliance = 1e-4; // enormous capacitor
            bed.proximal_resistance = 0.0;
        }
        let q_bar = 4e-6;
        let grid = SolverGrid::default();
        let session = SolverSession::with_constant_inflow(&net, &grid, q_bar).unwrap();
        let mut state = session.rest_state();
        let dt = session.stable_dt(&state, 0.9) / 1.3;
        // Let the tube transient pass, then measure the slew rate.
        for _ in 0..2000 {
            session.advance(&mut state, dt).unwrap();
        }
        let p0 = state.bed_pressure[&0];
        let steps = 2000;
        for _ in 0..steps {
            session.advance(&mut state, dt).unwrap();
        }
        let slew = (state.bed_pressure[&0] - p0) / (steps as f64 * dt);
        let expect = q_bar / 1e-4;
        assert!((slew - expect).abs() / expect < 0.02, "slew {slew:.4e} vs {expect:.4e}");
    }
}
