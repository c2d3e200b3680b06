//! Finite-volume discretization of the 1D conservation system
//!
//! ```text
//! dA/dt + dQ/dz = 0
//! dQ/dt + d/dz (alpha Q^2 / A + beta A^{3/2} / (3 rho)) =
//!     -2 (mu/rho)(gamma_nu + 2) Q/A  + S_geo(A, z)
//! ```
//!
//! MUSCL reconstruction with the minmod limiter on (A, Q), HLL interface
//! fluxes with local wave-speed estimates `u ± c`, and a cell-centred
//! geometric source `S_geo` accounting for axial variation of `beta` and
//! `A0` on tapered segments.

use crate::vessel::{ArterialNetwork, BloodProperties};

/// Per-segment geometry sampled at cell centres.
#[derive(Debug, Clone)]
pub struct SegmentDisc {
    pub n: usize,
    pub dx: f64,
    pub length: f64,
    pub a0: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub da0_dz: Vec<f64>,
    pub dbeta_dz: Vec<f64>,
    pub p_ext: f64,
    /// Coefficients at the segment ends, used by boundary coupling.
    pub beta_prox: f64,
    pub a0_prox: f64,
    pub beta_dist: f64,
    pub a0_dist: f64,
    pub tapered: bool,
}

/// Network-wide discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub segments: Vec<SegmentDisc>,
}

impl Discretization {
    pub fn build(net: &ArterialNetwork, target_dx: f64, min_cells: usize) -> Self {
        let min_cells = min_cells.max(4);
        let segments = net
            .segments
            .iter()
            .map(|seg| {
                let n = ((seg.length / target_dx).ceil() as usize).max(min_cells);
                let dx = seg.length / n as f64;
                let zfrac = |i: usize| (i as f64 + 0.5) / n as f64;
                let a0: Vec<f64> = (0..n).map(|i| seg.a0_at(zfrac(i))).collect();
                let beta: Vec<f64> = (0..n).map(|i| seg.beta_at(zfrac(i))).collect();
                let gamma: Vec<f64> = (0..n).map(|i| seg.gamma_at(zfrac(i))).collect();
                let tapered = (seg.a0_proximal - seg.a0_distal).abs() > 1e-14 * seg.a0_proximal;
                let central = |v: &Vec<f64>, i: usize| -> f64 {
                    if !tapered {
                        return 0.0;
                    }
                    if i == 0 {
                        (v[1] - v[0]) / dx
                    } else if i == n - 1 {
                        (v[n - 1] - v[n - 2]) / dx
                    } else {
                        (v[i + 1] - v[i - 1]) / (2.0 * dx)
                    }
                };
                let da0_dz: Vec<f64> = (0..n).map(|i| central(&a0, i)).collect();
                let dbeta_dz: Vec<f64> = (0..n).map(|i| central(&beta, i)).collect();
                SegmentDisc {
                    n,
                    dx,
                    length: seg.length,
                    a0,
                    beta,
                    gamma,
                    da0_dz,
                    dbeta_dz,
                    p_ext: seg.external_pressure,
                    beta_prox: seg.beta_at(0.0),
                    a0_prox: seg.a0_at(0.0),
                    beta_dist: seg.beta_at(1.0),
                    a0_dist: seg.a0_at(1.0),
                    tapered,
                }
            })
            .collect();
        Self { segments }
    }

    pub fn total_cells(&self) -> usize {
        self.segments.iter().map(|s| s.n).sum()
    }
}

/// Interface flux pair (mass flux, momentum flux).
#[derive(Debug, Clone, Copy, Default)]
pub struct Flux {
    pub f_a: f64,
    pub f_q: f64,
}

#[inline]
pub fn physical_flux(a: f64, q: f64, beta: f64, rho: f64, alpha: f64) -> Flux {
    Flux { f_a: q, f_q: alpha * q * q / a + beta * a * a.sqrt() / (3.0 * rho) }
}

#[inline]
pub fn celerity(a: f64, beta: f64, rho: f64) -> f64 {
    (beta / (2.0 * rho)).sqrt() * a.powf(0.25)
}

/// HLL approximate Riemann flux with Davis wave-speed estimates.
#[inline]
pub fn hll_flux(al: f64, ql: f64, ar: f64, qr: f64, beta: f64, rho: f64, alpha: f64) -> Flux {
    let ul = ql / al;
    let ur = qr / ar;
    let cl = celerity(al, beta, rho);
    let cr = celerity(ar, beta, rho);
    let sl = (ul - cl).min(ur - cr);
    let sr = (ul + cl).max(ur + cr);
    if sl >= 0.0 {
        physical_flux(al, ql, beta, rho, alpha)
    } else if sr <= 0.0 {
        physical_flux(ar, qr, beta, rho, alpha)
    } else {
        let fl = physical_flux(al, ql, beta, rho, alpha);
        let fr = physical_flux(ar, qr, beta, rho, alpha);
        let inv = 1.0 / (sr - sl);
        Flux {
            f_a: (sr * fl.f_a - sl * fr.f_a + sl * sr * (ar - al)) * inv,
            f_q: (sr * fl.f_q - sl * fr.f_q + sl * sr * (qr - ql)) * inv,
        }
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Evaluates the semi-discrete right-hand side of one segment given the
/// boundary-face fluxes supplied by the coupling layer.
///
/// Writes dA/dt into `da` and dQ/dt into `dq` (length `disc.n`).
#[allow(clippy::too_many_arguments)]
pub fn segment_rhs(
    disc: &SegmentDisc,
    a: &[f64],
    q: &[f64],
    blood: &BloodProperties,
    flux_prox: Flux,
    flux_dist: Flux,
    da: &mut [f64],
    dq: &mut [f64],
    face_buf: &mut Vec<Flux>,
) {
    let n = disc.n;
    let rho = blood.density;
    let alpha = blood.coriolis_coefficient;
    let fric_coef = -2.0 * (blood.dynamic_viscosity / rho) * (blood.velocity_profile_shape + 2.0);

    face_buf.clear();
    face_buf.resize(n + 1, Flux::default());
    face_buf[0] = flux_prox;
    face_buf[n] = flux_dist;

    // MUSCL-reconstructed interior faces. Boundary-adjacent cells use zero
    // slope (first order) which keeps the stencil inside the segment.
    for j in 1..n {
        let (il, ir) = (j - 1, j);
        let slope = |v: &[f64], i: usize| -> f64 {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                minmod(v[i] - v[i - 1], v[i + 1] - v[i])
            }
        };
        let mut al = a[il] + 0.5 * slope(a, il);
        let mut ar = a[ir] - 0.5 * slope(a, ir);
        let ql = q[il] + 0.5 * slope(q, il);
        let qr = q[ir] - 0.5 * slope(q, ir);
        if al <= 0.0 {
            al = a[il];
        }
        if ar <= 0.0 {
            ar = a[ir];
        }
        let beta_face = 0.5 * (disc.beta[il] + disc.beta[ir]);
        face_buf[j] = hll_flux(al, ql, ar, qr, beta_face, rho, alpha);
    }

    let inv_dx = 1.0 / disc.dx;
    for i in 0..n {
        da[i] = -(face_buf[i + 1].f_a - face_buf[i].f_a) * inv_dx;
        let mut src = fric_coef * q[i] / a[i];
        if disc.tapered {
            // Geometric source balancing the axial variation of beta and A0
            // in the conservative momentum flux.
            let sa = a[i].sqrt();
            let s0 = disc.a0[i].sqrt();
            src += disc.dbeta_dz[i] * a[i] * sa / (3.0 * rho)
                - a[i] / rho * disc.dbeta_dz[i] * (sa - s0)
                + a[i] / rho * disc.beta[i] * disc.da0_dz[i] / (2.0 * s0);
        }
        dq[i] = -(face_buf[i + 1].f_q - face_buf[i].f_q) * inv_dx + src;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hll_reduces_to_physical_flux_on_equal_states() {
        let (a, q, beta, rho, alpha) = (7.85e-5, 1e-5, 1.2e7, 1060.0, 1.1);
        let f = hll_flux(a, q, a, q, beta, rho, alpha);
        let p = physical_flux(a, q, beta, rho, alpha);
        assert!((f.f_a - p.f_a).abs() < 1e-18);
        assert!((f.f_q - p.f_q).abs() < 1e-15);
    }

    #[test]
    fn minmod_picks_smaller_same_sign_slope() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-2.0, -0.5), -0.5);
        assert_eq!(minmod(1.0, -1.0), 0.0);
    }
}
