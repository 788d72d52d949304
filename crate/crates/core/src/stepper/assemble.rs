//! Assembly of the two periodic pentadiagonal systems of one time step.
//!
//! Curvature row `i` lives on segment `[x[i−1], x[i]]` (length `r[i]`); its
//! left vertex carries `alpha[i−1]` and its right vertex `alpha[i]`. Position
//! row `i` lives on the dual volume around vertex `x[i]` (length `q[i]`).

use serde::{Deserialize, Serialize};

use crate::flow_models::FlowModel;
use crate::geometry::{dual_lengths, next, prev, Point};
use crate::linsolve::CyclicBandedSystem;

/// Curvature system for `k` at the new time level.
///
/// `r_new` are the lengths after the `η` update. The reaction term uses the
/// previous `r`, `k` and `β`; `b` is explicit in the previous `k`.
pub fn assemble_curvature_system(
    r_old: &[f64],
    k_old: &[f64],
    beta_old: &[f64],
    r_new: &[f64],
    alpha: &[f64],
    model: &dyn FlowModel,
    tau: f64,
) -> CyclicBandedSystem {
    let n = r_new.len();
    let q = dual_lengths(r_new);
    let b_old: Vec<f64> = k_old.iter().map(|&k| model.b(k)).collect();
    let mut sys = CyclicBandedSystem::zeros(n);

    for i in 0..n {
        let im1 = prev(i, n);
        let im2 = prev(im1, n);
        let ip1 = next(i, n);
        let (r, rm1, rp1) = (r_new[i], r_new[im1], r_new[ip1]);
        let (qi, qm1, qm2, qp1) = (q[i], q[im1], q[im2], q[ip1]);

        let a = 1.0 / (qm1 * rm1 * qm2);
        let e = 1.0 / (qi * rp1 * qp1);
        let left_mixed = 1.0 / (r * qi * qm1);
        let left_sq = 1.0 / (r * qm1 * qm1);
        let left_outer = 1.0 / (qm1 * qm1 * rm1);
        let right_sq = 1.0 / (qi * qi * rp1);
        let right_inner = 1.0 / (r * qi * qi);

        sys.a[i] = a;
        sys.e[i] = e;
        sys.b[i] = -(left_mixed + left_sq + left_outer + a) + 0.5 * alpha[im1];
        sys.d[i] = -(e + right_sq + right_inner + left_mixed) - 0.5 * alpha[i];
        sys.c[i] = right_sq + right_inner + 2.0 * left_mixed + left_sq + left_outer + r / tau
            - r_old[i] * k_old[i] * beta_old[i]
            + 0.5 * alpha[i]
            - 0.5 * alpha[im1];
        sys.f[i] = r / tau * k_old[i] + (b_old[ip1] - b_old[i]) / qi - (b_old[i] - b_old[im1]) / qm1;
    }
    sys
}

/// How `φ(k)` is sampled on the two edges meeting at a vertex in the
/// position system.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiStencil {
    /// Both edges at vertex `i` use `(φ(k_i) + φ(k_{i+1}))/2`, giving
    /// `φ·∂²ₛx` at the vertex.
    #[default]
    Centred,
    /// Edge `[x_{i−1}, x_i]` uses `(φ(k_i) + φ(k_{i−1}))/2` and edge
    /// `[x_i, x_{i+1}]` uses `(φ(k_{i+1}) + φ(k_i))/2`. This is the flux form
    /// `∂ₛ(φ ∂ₛx)` and carries an extra tangential velocity `−∂ₛφ` that the
    /// length equation does not see, so `r` drifts away from the chords.
    Staggered,
}

/// Position systems for the x and y coordinates; they share all bands.
///
/// `k_new` is the curvature solved in this step.
pub fn assemble_position_system(
    x_old: &[Point],
    r_new: &[f64],
    alpha: &[f64],
    k_new: &[f64],
    model: &dyn FlowModel,
    tau: f64,
    stencil: PhiStencil,
) -> (CyclicBandedSystem, CyclicBandedSystem) {
    let n = r_new.len();
    let q = dual_lengths(r_new);
    let phi: Vec<f64> = k_new.iter().map(|&k| model.phi(k)).collect();
    let mut sys = CyclicBandedSystem::zeros(n);
    let mut fy = vec![0.0; n];

    for i in 0..n {
        let im1 = prev(i, n);
        let ip1 = next(i, n);
        let ip2 = next(ip1, n);
        let (r, rm1, rp1, rp2) = (r_new[i], r_new[im1], r_new[ip1], r_new[ip2]);
        let (qi, qm1, qp1) = (q[i], q[im1], q[ip1]);

        let a = 1.0 / (r * qm1 * rm1);
        let e = 1.0 / (rp1 * qp1 * rp2);
        let k2_jump = 0.75 * (k_new[ip1] * k_new[ip1] - k_new[i] * k_new[i]) / qi;

        let (phi_left, phi_right) = match stencil {
            PhiStencil::Centred => {
                let v = 0.5 * (phi[i] + phi[ip1]);
                (v, v)
            }
            PhiStencil::Staggered => (0.5 * (phi[i] + phi[im1]), 0.5 * (phi[ip1] + phi[i])),
        };

        let b = -(a + 1.0 / (r * r * qm1) + 1.0 / (r * r * qi) + 1.0 / (r * qi * rp1)) + phi_left / r + 0.5 * alpha[i]
            - k2_jump;
        let d = -(1.0 / (r * qi * rp1) + 1.0 / (rp1 * rp1 * qi) + 1.0 / (rp1 * rp1 * qp1) + e) + phi_right / rp1
            - 0.5 * alpha[i]
            + k2_jump;

        let mass = qi / tau;
        sys.a[i] = a;
        sys.b[i] = b;
        sys.d[i] = d;
        sys.e[i] = e;
        sys.c[i] = mass - (a + b + d + e);
        sys.f[i] = mass * x_old[i].x;
        fy[i] = mass * x_old[i].y;
    }
    let sys_y = sys.with_rhs(fy);
    (sys, sys_y)
}
