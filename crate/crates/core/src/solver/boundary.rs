//! Boundary coupling: prescribed inflow at the root, conservative junction
//! matching between segments, and three-element Windkessel outlets.
//!
//! All couplings work on Riemann invariants of the elastic subsystem,
//! `W± = u ± 4c` with `c = sqrt(beta/(2 rho)) A^{1/4}`, extrapolated from the
//! boundary-adjacent cells.

use crate::error::{Error, Result};
use crate::vessel::WindkesselBed;

use super::scheme::celerity;

/// Tube-law pressure (elastic part) with explicit local coefficients.
#[inline]
fn elastic_pressure(a: f64, beta: f64, a0: f64, p_ext: f64) -> f64 {
    p_ext + beta * (a.sqrt() - a0.sqrt())
}

/// Solves the inlet boundary for a prescribed flow `q_in`.
///
/// The backward characteristic `u - 4c` extrapolated from the first interior
/// cell fixes the boundary area.
pub fn solve_inlet(
    q_in: f64,
    a_cell: f64,
    q_cell: f64,
    beta: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    let w2 = q_cell / a_cell - 4.0 * celerity(a_cell, beta, rho);
    let g = |a: f64| q_in / a - 4.0 * celerity(a, beta, rho) - w2;
    // g is strictly decreasing in A for q_in >= 0; bracket around the cell value.
    let mut lo = a_cell * 1e-3;
    let mut hi = a_cell * 1e3;
    if g(lo) < 0.0 || g(hi) > 0.0 {
        lo = a_cell * 1e-6;
        hi = a_cell * 1e6;
        if g(lo) < 0.0 || g(hi) > 0.0 {
            return Err(Error::BoundaryNonConvergence {
                location: "inlet".into(),
                residual: g(a_cell).abs(),
                iterations: 0,
            });
        }
    }
    let mut a = a_cell;
    for _ in 0..100 {
        let val = g(a);
        if val.abs() < 1e-14 * (1.0 + 4.0 * celerity(a_cell, beta, rho).abs()) {
            break;
        }
        if val > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let d = -q_in / (a * a) - celerity(a, beta, rho) / a;
        let next = a - val / d;
        a = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Ok((a, q_in))
}

/// End-of-segment data handed to the junction solver.
#[derive(Debug, Clone, Copy)]
pub struct SegmentEnd {
    pub area: f64,
    pub flow: f64,
    pub beta: f64,
    pub a0: f64,
    pub p_ext: f64,
}

/// Solved boundary states at a junction: `(area, flow)` at the parent's
/// distal end and each child's proximal end.
#[derive(Debug, Clone)]
pub struct JunctionSolution {
    pub parent: (f64, f64),
    pub children: Vec<(f64, f64)>,
}

/// Solves the nonlinear junction system: forward characteristic from the
/// parent, backward characteristics into the children, conservation of mass
/// and continuity of total pressure `P + rho u^2 / 2` across all ends.
///
/// Damped Newton iteration; residuals are scaled by the parent characteristic
/// scale and must fall below `tol`.
pub fn solve_junction(
    parent: SegmentEnd,
    children: &[SegmentEnd],
    rho: f64,
    tol: f64,
    label: &str,
) -> Result<JunctionSolution> {
    let nc = children.len();
    let dim = 2 * (nc + 1);
    // Unknowns: [A_p, u_p, A_1, u_1, ..., A_nc, u_nc].
    let mut x = Vec::with_capacity(dim);
    x.push(parent.area);
    x.push(parent.flow / parent.area);
    for ch in children {
        x.push(ch.area);
        x.push(ch.flow / ch.area);
    }

    let w1 = parent.flow / parent.area + 4.0 * celerity(parent.area, parent.beta, rho);
    let w2: Vec<f64> = children
        .iter()
        .map(|ch| ch.flow / ch.area - 4.0 * celerity(ch.area, ch.beta, rho))
        .collect();

    let c_ref = celerity(parent.a0, parent.beta, rho);
    let scale_u = 1.0 / c_ref;
    let scale_m = 1.0 / (parent.a0 * c_ref);
    let scale_p = 1.0 / (rho * c_ref * c_ref);

    let residual = |x: &[f64], r: &mut [f64]| {
        let (ap, up) = (x[0], x[1]);
        r[0] = (up + 4.0 * celerity(ap, parent.beta, rho) - w1) * scale_u;
        let mut mass = ap * up;
        for i in 0..nc {
            let (ai, ui) = (x[2 + 2 * i], x[3 + 2 * i]);
            mass -= ai * ui;
        }
        r[1] = mass * scale_m;
        let head_p = elastic_pressure(ap, parent.beta, parent.a0, parent.p_ext) + 0.5 * rho * up * up;
        for i in 0..nc {
            let (ai, ui) = (x[2 + 2 * i], x[3 + 2 * i]);
            let ch = &children[i];
            r[2 + 2 * i] = (ui - 4.0 * celerity(ai, ch.beta, rho) - w2[i]) * scale_u;
            let head_i = elastic_pressure(ai, ch.beta, ch.a0, ch.p_ext) + 0.5 * rho * ui * ui;
            r[3 + 2 * i] = (head_p - head_i) * scale_p;
        }
    };

    let mut r = vec![0.0; dim];
    let mut jac = vec![0.0; dim * dim];
    let mut delta = vec![0.0; dim];
    residual(&x, &mut r);
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rn = norm(&r);

    for iter in 0..50 {
        if rn < tol {
            return Ok(JunctionSolution {
                parent: (x[0], x[0] * x[1]),
                children: (0..nc).map(|i| (x[2 + 2 * i], x[2 + 2 * i] * x[3 + 2 * i])).collect(),
            });
        }
        // Analytic Jacobian of the scaled residuals.
        jac.iter_mut().for_each(|v| *v = 0.0);
        let (ap, up) = (x[0], x[1]);
        let cp = celerity(ap, parent.beta, rho);
        jac[0] = (cp / ap) * scale_u;
        jac[1] = scale_u;
        jac[dim] = up * scale_m;
        jac[dim + 1] = ap * scale_m;
        for i in 0..nc {
            let (ai, ui) = (x[2 + 2 * i], x[3 + 2 * i]);
            jac[dim + 2 + 2 * i] = -ui * scale_m;
            jac[dim + 3 + 2 * i] = -ai * scale_m;
            let ci = celerity(ai, children[i].beta, rho);
            let row_c = 2 + 2 * i;
            jac[row_c * dim + 2 + 2 * i] = -(ci / ai) * scale_u;
            jac[row_c * dim + 3 + 2 * i] = scale_u;
            let row_p = 3 + 2 * i;
            jac[row_p * dim] = parent.beta / (2.0 * ap.sqrt()) * scale_p;
            jac[row_p * dim + 1] = rho * up * scale_p;
            jac[row_p * dim + 2 + 2 * i] = -children[i].beta / (2.0 * ai.sqrt()) * scale_p;
            jac[row_p * dim + 3 + 2 * i] = -rho * ui * scale_p;
        }
        for (d, v) in delta.iter_mut().zip(&r) {
            *d = -v;
        }
        if !solve_dense(&mut jac, &mut delta, dim) {
            return Err(Error::BoundaryNonConvergence {
                location: format!("junction `{label}` (singular Jacobian)"),
                residual: rn,
                iterations: iter,
            });
        }
        // Damped update: halve the step until the residual decreases and
        // areas stay positive.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi + lambda * di).collect();
            let areas_ok = (0..=nc).all(|i| trial[2 * i] > 0.0);
            if areas_ok {
                residual(&trial, &mut r);
                let tn = norm(&r);
                if tn < rn || tn < tol {
                    x = trial;
                    rn = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::BoundaryNonConvergence {
                location: format!("junction `{label}` (stalled line search)"),
                residual: rn,
                iterations: iter,
            });
        }
    }
    Err(Error::BoundaryNonConvergence { location: format!("junction `{label}`"), residual: rn, iterations: 50 })
}

/// Solves the Windkessel outlet over one (stage) time step.
///
/// Couples the outgoing characteristic `u + 4c` of the terminal cell with the
/// three-element bed; the internal bed pressure follows implicit Euler.
/// Returns the boundary `(area, flow)` and the updated bed pressure.
#[allow(clippy::too_many_arguments)]
pub fn solve_windkessel(
    a_cell: f64,
    q_cell: f64,
    beta: f64,
    a0: f64,
    p_ext: f64,
    bed: &WindkesselBed,
    bed_pressure: f64,
    dt: f64,
    rho: f64,
    label: &str,
) -> Result<(f64, f64, f64)> {
    let w1 = q_cell / a_cell + 4.0 * celerity(a_cell, beta, rho);
    let c_ref = celerity(a0, beta, rho);

    // Implicit-Euler capacitor update for a trial boundary flow q:
    //   C dPc/dt = q - (Pc - P_out)/R2.
    let pc_next = |q: f64| -> f64 {
        if bed.distal_resistance <= 0.0 {
            bed.outflow_pressure
        } else {
            let k = dt / bed.compliance;
            (bed_pressure + k * (q + bed.outflow_pressure / bed.distal_resistance))
                / (1.0 + k / bed.distal_resistance)
        }
    };
    let dpc_dq = if bed.distal_resistance <= 0.0 {
        0.0
    } else {
        (dt / bed.compliance) / (1.0 + dt / (bed.compliance * bed.distal_resistance))
    };

    let mut a = a_cell;
    let mut q = q_cell;
    let tol_u = 1e-12 * (1.0 + w1.abs());
    let tol_p = 1e-12 * (rho * c_ref * c_ref);
    for iter in 0..60 {
        let c = celerity(a, beta, rho);
        let g1 = q / a + 4.0 * c - w1;
        let g2 = elastic_pressure(a, beta, a0, p_ext) - bed.proximal_resistance * q - pc_next(q);
        if g1.abs() < tol_u && g2.abs() < tol_p {
            return Ok((a, q, pc_next(q)));
        }
        let j11 = -q / (a * a) + c / a;
        let j12 = 1.0 / a;
        let j21 = beta / (2.0 * a.sqrt());
        let j22 = -bed.proximal_resistance - dpc_dq;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(Error::BoundaryNonConvergence {
                location: format!("windkessel `{label}` (singular Jacobian)"),
                residual: g1.abs().max(g2.abs()),
                iterations: iter,
            });
        }
        let da = (-g1 * j22 + g2 * j12) / det;
        let dq = (-j11 * g2 + j21 * g1) / det;
        let mut lambda = 1.0;
        while a + lambda * da <= 0.0 {
            lambda *= 0.5;
            if lambda < 1e-8 {
                break;
            }
        }
        a += lambda * da;
        q += lambda * dq;
    }
    let c = celerity(a, beta, rho);
    let g1 = q / a + 4.0 * c - w1;
    let g2 = elastic_pressure(a, beta, a0, p_ext) - bed.proximal_resistance * q - pc_next(q);
    Err(Error::BoundaryNonConvergence {
        location: format!("windkessel `{label}`"),
        residual: g1.abs().max(g2.abs() / (rho * c_ref * c_ref)),
        iterations: 60,
    })
}

/// Gaussian elimination with partial pivoting for the small dense junction
/// systems. Returns `false` on a singular matrix.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut max = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > max {
                max = v;
                piv = row;
            }
        }
        if max < 1e-300 {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solver_inverts_small_system() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        assert!(solve_dense(&mut a, &mut b, 3));
        let expect = [2.0, 3.0, -1.0];
        for (x, e) in b.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn inlet_at_rest_returns_reference_area() {
        let (beta, rho, a0) = (1.2042149305515183e7, 1060.0, 7.85e-5);
        let (a, q) = solve_inlet(0.0, a0, 0.0, beta, rho).unwrap();
        assert!((a - a0).abs() / a0 < 1e-12);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn junction_passthrough_at_constant_state_is_identity() {
        let end = SegmentEnd { area: 7.85e-5, flow: 3e-5, beta: 1.2e7, a0: 7.85e-5, p_ext: 0.0 };
        let sol = solve_junction(end, &[end], 1060.0, 1e-11, "test").unwrap();
        assert!((sol.parent.0 - end.area).abs() / end.area < 1e-10);
        assert!((sol.parent.1 - end.flow).abs() / end.flow < 1e-10);
        assert!((sol.children[0].0 - end.area).abs() / end.area < 1e-10);
    }

    #[test]
    fn symmetric_bifurcation_splits_flow_equally() {
        let parent = SegmentEnd { area: 8.1e-5, flow: 6e-5, beta: 1.2e7, a0: 7.85e-5, p_ext: 0.0 };
        let child = SegmentEnd { area: 4.05e-5, flow: 2.8e-5, beta: 2.1e7, a0: 3.9e-5, p_ext: 0.0 };
        let sol = solve_junction(parent, &[child, child], 1060.0, 1e-11, "bif").unwrap();
        let (q1, q2) = (sol.children[0].1, sol.children[1].1);
        assert!((q1 - q2).abs() <= 1e-12 * q1.abs().max(1.0));
        // Mass conservation at the solver tolerance.
        assert!((sol.parent.1 - q1 - q2).abs() / sol.parent.1.abs() < 1e-9);
    }

    #[test]
    fn windkessel_zero_inflow_from_equilibrium_stays_at_outflow_pressure() {
        let bed = WindkesselBed {
            proximal_resistance: 1e7,
            distal_resistance: 1.5e8,
            compliance: 1e-8,
            outflow_pressure: 500.0,
        };
        let (beta, rho) = (1.2042149305515183e7, 1060.0);
        let a0: f64 = 7.85e-5;
        // Area consistent with P = P_out at rest.
        let a_eq = {
            let s = a0.sqrt() + 500.0 / beta;
            s * s
        };
        let (a, q, pc) = solve_windkessel(a_eq, 0.0, beta, a0, 0.0, &bed, 500.0, 1e-4, rho, "t").unwrap();
        assert!((a - a_eq).abs() / a_eq < 1e-10);
        assert!(q.abs() < 1e-12);
        assert!((pc - 500.0).abs() < 1e-9);
    }
}
