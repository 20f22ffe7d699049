use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::hamiltonian::HamiltonianModel;
use super::integrator::{dopri5, StepStats};
use crate::error::{Error, Result};
use crate::phase_space::PhaseGrid;

/// Default local error tolerance of the flow integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Integration statistics over all grid nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorReport {
    pub tolerance: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_node_steps: usize,
}

/// The time-`t` flow evaluated at every node of a grid.
#[derive(Clone, Debug)]
pub struct FlowMap {
    grid: PhaseGrid,
    t: f64,
    images: Vec<[f64; 2]>,
    /// Row-major `[[dx/dx0, dx/dxi0], [dxi/dx0, dxi/dxi0]]` per node.
    jacobian: Option<Vec<[f64; 4]>>,
    report: IntegratorReport,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub tol: f64,
    pub jacobian: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: DEFAULT_TOL,
            jacobian: true,
        }
    }
}

impl FlowMap {
    /// The time-zero flow.
    pub fn identity(grid: PhaseGrid) -> Self {
        let images = (0..grid.len()).map(|i| grid.node(i)).collect();
        let jacobian = Some(vec![[1.0, 0.0, 0.0, 1.0]; grid.len()]);
        FlowMap {
            grid,
            t: 0.0,
            images,
            jacobian,
            report: IntegratorReport::default(),
        }
    }

    pub fn from_parts(
        grid: PhaseGrid,
        t: f64,
        images: Vec<[f64; 2]>,
        jacobian: Option<Vec<[f64; 4]>>,
    ) -> Result<Self> {
        if images.len() != grid.len() || jacobian.as_ref().is_some_and(|j| j.len() != grid.len()) {
            return Err(Error::InvalidGrid(
                "flow data length does not match grid".into(),
            ));
        }
        Ok(FlowMap {
            grid,
            t,
            images,
            jacobian,
            report: IntegratorReport::default(),
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn images(&self) -> &[[f64; 2]] {
        &self.images
    }

    pub fn jacobian(&self) -> Option<&[[f64; 4]]> {
        self.jacobian.as_deref()
    }

    pub fn report(&self) -> &IntegratorReport {
        &self.report
    }

    pub fn is_identity(&self) -> bool {
        self.t == 0.0
    }

    /// Largest `|det D phi - 1|` over nodes.
    pub fn determinant_defect(&self) -> Option<f64> {
        self.jacobian.as_ref().map(|js| {
            js.iter()
                .map(|j| (j[0] * j[3] - j[1] * j[2] - 1.0).abs())
                .fold(0.0, f64::max)
        })
    }

    /// Largest entry of `J^T (D phi)^T J (D phi) - I` over nodes, with the
    /// sign convention that makes it vanish for symplectic maps.
    pub fn symplectic_defect(&self) -> Option<f64> {
        self.jacobian.as_ref().map(|js| {
            js.iter()
                .map(|j| {
                    // For 2x2 matrices M^T J M = det(M) J.
                    let det = j[0] * j[3] - j[1] * j[2];
                    (det - 1.0).abs()
                })
                .fold(0.0, f64::max)
        })
    }

    /// Largest `|H(phi(z)) - H(z)|` over nodes.
    pub fn energy_defect(&self, h: &HamiltonianModel) -> f64 {
        self.images
            .iter()
            .enumerate()
            .map(|(i, img)| (h.eval(*img) - h.eval(self.grid.node(i))).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn rhs2(h: &HamiltonianModel, y: &[f64; 2], dir: f64) -> [f64; 2] {
    let f = h.vector_field([y[0], y[1]]);
    [dir * f[0], dir * f[1]]
}

#[inline]
fn rhs6(h: &HamiltonianModel, y: &[f64; 6], dir: f64) -> [f64; 6] {
    let f = h.vector_field([y[0], y[1]]);
    let v2 = h.potential.derivative(2, y[0]);
    // d/dt Dphi = [[0, 1], [-V'', 0]] Dphi
    [
        dir * f[0],
        dir * f[1],
        dir * y[4],
        dir * y[5],
        -dir * v2 * y[2],
        -dir * v2 * y[3],
    ]
}

fn unique_sorted(times: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = times.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

fn merge_stats(stats: &[StepStats], tol: f64) -> IntegratorReport {
    IntegratorReport {
        tolerance: tol,
        accepted_steps: stats.iter().map(|s| s.accepted).sum(),
        rejected_steps: stats.iter().map(|s| s.rejected).sum(),
        max_node_steps: stats
            .iter()
            .map(|s| s.accepted + s.rejected)
            .max()
            .unwrap_or(0),
    }
}

/// Flow maps for several durations of one sign, sharing each trajectory.
fn integrate_one_sign(
    h: &HamiltonianModel,
    grid: &PhaseGrid,
    durations: &[f64],
    dir: f64,
    opts: FlowOptions,
) -> Result<Vec<FlowMap>> {
    let stops = unique_sorted(durations);
    let h0 = 0.01;
    let n = grid.len();
    let mut maps: Vec<FlowMap> = Vec::with_capacity(stops.len());
    if opts.jacobian {
        let per_node: Vec<(Vec<[f64; 6]>, StepStats)> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let z = grid.node(idx);
                dopri5(
                    |y| rhs6(h, y, dir),
                    [z[0], z[1], 1.0, 0.0, 0.0, 1.0],
                    &stops,
                    opts.tol,
                    h0,
                )
                .map_err(|u| Error::StepUnderflow {
                    node: idx,
                    time: dir * u.t,
                })
            })
            .collect::<Result<_>>()?;
        let stats: Vec<StepStats> = per_node.iter().map(|p| p.1).collect();
        let report = merge_stats(&stats, opts.tol);
        for (k, &s) in stops.iter().enumerate() {
            let images = per_node.iter().map(|p| [p.0[k][0], p.0[k][1]]).collect();
            let jac = per_node
                .iter()
                .map(|p| [p.0[k][2], p.0[k][3], p.0[k][4], p.0[k][5]])
                .collect();
            maps.push(FlowMap {
                grid: *grid,
                t: dir * s,
                images,
                jacobian: Some(jac),
                report,
            });
        }
    } else {
        let per_node: Vec<(Vec<[f64; 2]>, StepStats)> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let z = grid.node(idx);
                dopri5(|y| rhs2(h, y, dir), z, &stops, opts.tol, h0).map_err(|u| {
                    Error::StepUnderflow {
                        node: idx,
                        time: dir * u.t,
                    }
                })
            })
            .collect::<Result<_>>()?;
        let stats: Vec<StepStats> = per_node.iter().map(|p| p.1).collect();
        let report = merge_stats(&stats, opts.tol);
        for (k, &s) in stops.iter().enumerate() {
            let images = per_node.iter().map(|p| p.0[k]).collect();
            maps.push(FlowMap {
                grid: *grid,
                t: dir * s,
                images,
                jacobian: None,
                report,
            });
        }
    }
    Ok(maps)
}

/// Flow maps for a list of times, returned in input order. Each trajectory is
/// integrated once per sign of time with steps clipped at every requested time.
pub fn integrate_flows(
    h: &HamiltonianModel,
    grid: &PhaseGrid,
    times: &[f64],
    opts: FlowOptions,
) -> Result<Vec<FlowMap>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be finite, got {t}"
        )));
    }
    let forward: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let backward: Vec<f64> = times.iter().filter(|&&t| t < 0.0).map(|t| -t).collect();
    let fwd = if forward.is_empty() {
        vec![]
    } else {
        integrate_one_sign(h, grid, &forward, 1.0, opts)?
    };
    let bwd = if backward.is_empty() {
        vec![]
    } else {
        integrate_one_sign(h, grid, &backward, -1.0, opts)?
    };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let map = if t == 0.0 {
            let mut id = FlowMap::identity(*grid);
            if !opts.jacobian {
                id.jacobian = None;
            }
            id
        } else {
            let pool = if t > 0.0 { &fwd } else { &bwd };
            pool.iter()
                .find(|m| m.t == t)
                .expect("requested time integrated")
                .clone()
        };
        out.push(map);
    }
    Ok(out)
}

/// Flow `phi^t` with Jacobians at every grid node.
pub fn integrate_flow(h: &HamiltonianModel, grid: &PhaseGrid, t: f64, tol: f64) -> Result<FlowMap> {
    let mut maps = integrate_flows(
        h,
        grid,
        &[t],
        FlowOptions {
            tol,
            jacobian: true,
        },
    )?;
    Ok(maps.pop().expect("one map"))
}

/// Single trajectory `phi^t(z0)`.
pub fn trajectory(h: &HamiltonianModel, z0: [f64; 2], t: f64, tol: f64) -> Result<[f64; 2]> {
    if t == 0.0 {
        return Ok(z0);
    }
    let dir = t.signum();
    let (ys, _) = dopri5(|y| rhs2(h, y, dir), z0, &[t.abs()], tol, 0.01).map_err(|u| {
        Error::StepUnderflow {
            node: 0,
            time: dir * u.t,
        }
    })?;
    Ok(ys[0])
}

/// Holomorphic extension of the flow from complex initial data, returned at
/// each of the nonnegative `times`.
pub fn complex_trajectory(
    h: &HamiltonianModel,
    z0: [C64; 2],
    times: &[f64],
    tol: f64,
) -> Result<Vec<[C64; 2]>> {
    let f = |y: &[f64; 4]| {
        let v = h.vector_field_complex([C64::new(y[0], y[1]), C64::new(y[2], y[3])]);
        [v[0].re, v[0].im, v[1].re, v[1].im]
    };
    let stops = unique_sorted(times);
    let (ys, _) = dopri5(
        f,
        [z0[0].re, z0[0].im, z0[1].re, z0[1].im],
        &stops,
        tol,
        0.01,
    )
    .map_err(|u| Error::StepUnderflow { node: 0, time: u.t })?;
    Ok(times
        .iter()
        .map(|t| {
            let k = stops.iter().position(|s| s == t).expect("stop present");
            let y = ys[k];
            [C64::new(y[0], y[1]), C64::new(y[2], y[3])]
        })
        .collect())
}

/// Fixed-step fourth-order symplectic (Yoshida) flow, positions only.
/// A cross-check for the adaptive integrator.
pub fn integrate_flow_symplectic(
    h: &HamiltonianModel,
    grid: &PhaseGrid,
    t: f64,
    steps: usize,
) -> Result<FlowMap> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let cbrt2 = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    let dt = t / steps as f64;
    let leapfrog = |z: &mut [f64; 2], s: f64| {
        z[1] -= 0.5 * s * h.potential.derivative(1, z[0]);
        z[0] += s * z[1];
        z[1] -= 0.5 * s * h.potential.derivative(1, z[0]);
    };
    let images = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut z = grid.node(idx);
            for _ in 0..steps {
                leapfrog(&mut z, w1 * dt);
                leapfrog(&mut z, w0 * dt);
                leapfrog(&mut z, w1 * dt);
            }
            z
        })
        .collect();
    FlowMap::from_parts(*grid, t, images, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> PhaseGrid {
        PhaseGrid::square(3.0, 16).unwrap()
    }

    #[test]
    fn harmonic_flow_is_rotation() {
        let h = HamiltonianModel::harmonic();
        let t = 1.3;
        let f = integrate_flow(&h, &small_grid(), t, 1e-11).unwrap();
        let (c, s) = (t.cos(), t.sin());
        for (i, img) in f.images().iter().enumerate() {
            let [x, p] = small_grid().node(i);
            assert!((img[0] - (x * c + p * s)).abs() < 1e-9);
            assert!((img[1] - (-x * s + p * c)).abs() < 1e-9);
            let j = f.jacobian().unwrap()[i];
            assert!((j[0] - c).abs() < 1e-9 && (j[1] - s).abs() < 1e-9);
            assert!((j[2] + s).abs() < 1e-9 && (j[3] - c).abs() < 1e-9);
        }
    }

    #[test]
    fn free_flow_straight_line() {
        let z = trajectory(&HamiltonianModel::free(), [1.0, 2.0], 0.5, 1e-12).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-12 && (z[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_exact_identity() {
        let f = integrate_flow(
            &HamiltonianModel::gaussian_well(1.0),
            &small_grid(),
            0.0,
            1e-10,
        )
        .unwrap();
        for (i, img) in f.images().iter().enumerate() {
            assert_eq!(*img, small_grid().node(i));
            assert_eq!(f.jacobian().unwrap()[i], [1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn backward_flow_inverts_forward_flow() {
        let h = HamiltonianModel::gaussian_well(1.0);
        let z = trajectory(&h, [0.3, 0.8], 1.7, 1e-12).unwrap();
        let back = trajectory(&h, z, -1.7, 1e-12).unwrap();
        assert!((back[0] - 0.3).abs() < 1e-9 && (back[1] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn batch_matches_requested_order() {
        let h = HamiltonianModel::gaussian_well(1.0);
        let maps = integrate_flows(
            &h,
            &small_grid(),
            &[0.5, 0.0, -0.25, 0.5],
            FlowOptions::default(),
        )
        .unwrap();
        let t: Vec<f64> = maps.iter().map(|m| m.time()).collect();
        assert_eq!(t, vec![0.5, 0.0, -0.25, 0.5]);
    }
}
