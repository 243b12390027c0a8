use crate::error::{Error, Result};
use crate::sphere::{BlockImage, ViewportSpec};

/// Dense per-pixel displacement on a block, in pixels per frame step.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    spec: ViewportSpec,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(spec: ViewportSpec, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = spec.pixel_count();
        if u.len() != n || v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} flow vectors"),
                actual: format!("{}/{}", u.len(), v.len()),
            });
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::invalid("flow contains non-finite values"));
        }
        Ok(Self { spec, u, v })
    }

    pub fn zeros(spec: ViewportSpec) -> Self {
        let n = spec.pixel_count();
        Self {
            spec,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn spec(&self) -> &ViewportSpec {
        &self.spec
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Multiplies every vector by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            spec: self.spec,
            u: self.u.iter().map(|x| x * k).collect(),
            v: self.v.iter().map(|x| x * k).collect(),
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// Settings of the variational flow solver.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlowParams {
    /// Weight of the smoothness term; enters the energy squared.
    pub smoothness: f64,
    pub max_iterations: usize,
    /// Stop once the mean per-pixel update falls below this many pixels.
    pub tolerance: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            smoothness: 15.0,
            max_iterations: 200,
            tolerance: 1e-4,
        }
    }
}

/// Solver output with its per-iteration energy trace.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub field: FlowField,
    /// Energy of the initial (zero) field followed by the energy after each
    /// sweep.
    pub energies: Vec<f64>,
    pub iterations: usize,
}

/// Brightness derivatives averaged over both frames, intensities on the
/// 0–255 scale.
struct Derivatives {
    ix: Vec<f64>,
    iy: Vec<f64>,
    it: Vec<f64>,
}

fn derivatives(prev: &[f64], next: &[f64], n: usize) -> Derivatives {
    let mut ix = vec![0.0; n * n];
    let mut iy = vec![0.0; n * n];
    let mut it = vec![0.0; n * n];
    for r in 0..n {
        let (ru, rd) = (r.saturating_sub(1), (r + 1).min(n - 1));
        for c in 0..n {
            let (cl, cr) = (c.saturating_sub(1), (c + 1).min(n - 1));
            let i = r * n + c;
            let dx = |img: &[f64]| 0.5 * (img[r * n + cr] - img[r * n + cl]);
            let dy = |img: &[f64]| 0.5 * (img[rd * n + c] - img[ru * n + c]);
            ix[i] = 0.5 * (dx(prev) + dx(next));
            iy[i] = 0.5 * (dy(prev) + dy(next));
            it[i] = next[i] - prev[i];
        }
    }
    Derivatives { ix, iy, it }
}

/// Variational energy `Σ (Ix·u + Iy·v + It)² + λ² Σ_edges |w_p − w_q|²`
/// over 4-neighbor edges.
fn energy(d: &Derivatives, u: &[f64], v: &[f64], n: usize, lambda: f64) -> f64 {
    let mut data = 0.0;
    let mut smooth = 0.0;
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            let e = d.ix[i] * u[i] + d.iy[i] * v[i] + d.it[i];
            data += e * e;
            if c + 1 < n {
                smooth += (u[i] - u[i + 1]).powi(2) + (v[i] - v[i + 1]).powi(2);
            }
            if r + 1 < n {
                smooth += (u[i] - u[i + n]).powi(2) + (v[i] - v[i + n]).powi(2);
            }
        }
    }
    data + lambda * lambda * smooth
}

/// Energy of a flow field for the given frame pair.
pub fn flow_energy(prev: &BlockImage, next: &BlockImage, field: &FlowField, params: &FlowParams) -> Result<f64> {
    check_pair(prev, next)?;
    let n = prev.spec().resolution();
    let d = derivatives(&prev.luma(), &next.luma(), n);
    Ok(energy(&d, &field.u, &field.v, n, params.smoothness))
}

fn check_pair(prev: &BlockImage, next: &BlockImage) -> Result<()> {
    if prev.spec() != next.spec() {
        return Err(Error::invalid("flow frames must share one viewport"));
    }
    Ok(())
}

/// Dense flow from `prev` to `next`.
///
/// Each sweep visits pixels in raster order and sets `(u, v)` to the exact
/// minimizer of the energy given the current neighbors (block Gauss–Seidel),
/// so the energy never increases.
pub fn optical_flow(prev: &BlockImage, next: &BlockImage, params: &FlowParams) -> Result<FlowField> {
    solve(prev, next, params, false).map(|s| s.field)
}

/// As [`optical_flow`], also recording the energy after every sweep.
pub fn optical_flow_traced(prev: &BlockImage, next: &BlockImage, params: &FlowParams) -> Result<FlowSolution> {
    solve(prev, next, params, true)
}

fn solve(prev: &BlockImage, next: &BlockImage, params: &FlowParams, trace: bool) -> Result<FlowSolution> {
    check_pair(prev, next)?;
    if !(params.smoothness > 0.0) {
        return Err(Error::invalid("flow smoothness must be positive"));
    }
    let spec = *prev.spec();
    let n = spec.resolution();
    let d = derivatives(&prev.luma(), &next.luma(), n);
    let lambda2 = params.smoothness * params.smoothness;
    let mut u = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    let mut energies = Vec::new();
    if trace {
        energies.push(energy(&d, &u, &v, n, params.smoothness));
    }

    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        let mut change = 0.0;
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                let (mut su, mut sv, mut k) = (0.0, 0.0, 0.0);
                if c > 0 {
                    su += u[i - 1];
                    sv += v[i - 1];
                    k += 1.0;
                }
                if c + 1 < n {
                    su += u[i + 1];
                    sv += v[i + 1];
                    k += 1.0;
                }
                if r > 0 {
                    su += u[i - n];
                    sv += v[i - n];
                    k += 1.0;
                }
                if r + 1 < n {
                    su += u[i + n];
                    sv += v[i + n];
                    k += 1.0;
                }
                let (ub, vb) = (su / k, sv / k);
                let (a, b) = (d.ix[i], d.iy[i]);
                let t = (a * ub + b * vb + d.it[i]) / (lambda2 * k + a * a + b * b);
                let (nu, nv) = (ub - a * t, vb - b * t);
                let (du, dv) = (nu - u[i], nv - v[i]);
                change += (du * du + dv * dv).sqrt();
                u[i] = nu;
                v[i] = nv;
            }
        }
        if trace {
            energies.push(energy(&d, &u, &v, n, params.smoothness));
        }
        if change / ((n * n) as f64) < params.tolerance {
            break;
        }
    }
    Ok(FlowSolution {
        field: FlowField { spec, u, v },
        energies,
        iterations,
    })
}
