//! Markov-chain weighting of viewport blocks.
//!
//! Nodes are block centers; the edge from `i` to `j` combines an equator
//! bias `sin φ_j`, the share of block saliency visible from `i`, and a
//! Gaussian penalty on the geodesic gaze-shift distance. The equilibrium
//! distribution of the row-normalized chain weights each block when the
//! block maps are rearranged back into the panorama.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::normalize_in_place;
use crate::sphere::{
    geodesic_distance, viewport_reproject_scaled_into, BlockFeatureMap, EquirectMap, SphereCoord, SphericalGaussian,
};

/// Lower bound for raw edge weights and relative lower bound for block means.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Polar half-extent of the field of view around a node.
    pub phi_delta: f64,
    /// Azimuthal half-extent of the field of view around a node.
    pub theta_delta: f64,
    /// Width of the gaze-shift distance penalty.
    pub sigma_dist: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            phi_delta: 0.3 * PI,
            theta_delta: 0.3 * PI,
            sigma_dist: 0.25 * PI,
        }
    }
}

/// Row-stochastic transition matrix over block centers, no self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionGraph {
    nodes: Vec<SphereCoord>,
    weights: Vec<f64>,
}

impl TransitionGraph {
    /// Wraps an explicit row-major matrix after checking it is a valid
    /// chain: square, nonnegative, rows summing to one.
    pub fn from_matrix(nodes: Vec<SphereCoord>, weights: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{n} matrix", n),
                actual: format!("{} entries", weights.len()),
            });
        }
        for (i, row) in weights.chunks(n.max(1)).enumerate() {
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::invalid(format!("row {i} has negative or non-finite entries")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SphereCoord] {
        &self.nodes
    }

    /// Row-major transition probabilities.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.weights[i * n..(i + 1) * n]
    }

    /// Matrix as CSV, one row per line.
    pub fn to_csv(&self) -> String {
        let n = self.nodes.len();
        let mut s = String::new();
        for i in 0..n {
            let line: Vec<String> = self.row(i).iter().map(|w| format!("{w:.17e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// Stationary distribution of a transition graph.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumWeights {
    alpha: Vec<f64>,
    iterations: usize,
}

impl EquilibriumWeights {
    /// Equal weight `1/n` for every block.
    pub fn uniform(n: usize) -> Self {
        Self {
            alpha: vec![1.0 / n as f64; n],
            iterations: 0,
        }
    }

    /// Weights from explicit values, L1-normalized.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid("equilibrium weights must be positive and finite"));
        }
        let s: f64 = values.iter().sum();
        Ok(Self {
            alpha: values.into_iter().map(|v| v / s).collect(),
            iterations: 0,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Power-iteration steps taken.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("block,alpha\n");
        for (i, a) in self.alpha.iter().enumerate() {
            let _ = writeln!(s, "{i},{a:.17e}");
        }
        s
    }
}

/// Nodes inside the field of view centered on `center`, including itself.
/// Azimuth differences wrap around the antimeridian.
pub fn fov_set(targets: &[SphereCoord], center: usize, phi_delta: f64, theta_delta: f64) -> Vec<usize> {
    let c = targets[center];
    targets
        .iter()
        .enumerate()
        .filter(|(_, q)| {
            let dt = (q.theta() - c.theta()).abs();
            let dt = dt.min(2.0 * PI - dt);
            (q.phi() - c.phi()).abs() < phi_delta && dt < theta_delta
        })
        .map(|(j, _)| j)
        .chain(std::iter::once(center))
        .fold(Vec::new(), |mut acc, j| {
            if !acc.contains(&j) {
                acc.push(j);
            }
            acc
        })
}

/// Block means floored at `WEIGHT_FLOOR · max`, so the floor scales with
/// the means. All-zero means become uniform.
pub fn floor_means(means: &[f64]) -> Vec<f64> {
    let max = means.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return vec![1.0; means.len()];
    }
    let floor = WEIGHT_FLOOR * max;
    means.iter().map(|&m| m.max(floor)).collect()
}

/// Raw (unnormalized) weight of the edge `i → j`.
///
/// `block_means` must already be floored (see [`floor_means`]) and
/// `fov_sets[i]` must hold the field of view of node `i`.
pub fn transition_weight(
    i: usize,
    j: usize,
    targets: &[SphereCoord],
    block_means: &[f64],
    fov_sets: &[Vec<usize>],
    sigma_dist: f64,
) -> f64 {
    let fov = &fov_sets[i];
    let visible: f64 = fov.iter().map(|&k| block_means[k]).sum();
    let numerator = if fov.contains(&j) { block_means[j] } else { block_means[i] };
    let equator = targets[j].phi().sin().max(WEIGHT_FLOOR);
    let g = geodesic_distance(&targets[i], &targets[j]);
    let penalty = (-g * g / (2.0 * sigma_dist * sigma_dist)).exp();
    (equator * (numerator / visible) * penalty).max(WEIGHT_FLOOR)
}

/// Complete directed graph over `targets` with row-normalized weights.
pub fn build_graph(targets: &[SphereCoord], block_means: &[f64], params: &GraphParams) -> Result<TransitionGraph> {
    let n = targets.len();
    if n < 2 {
        return Err(Error::invalid("a transition graph needs at least two nodes"));
    }
    if block_means.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} block means"),
            actual: format!("{}", block_means.len()),
        });
    }
    if block_means.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::invalid("block means must be finite and nonnegative"));
    }
    for (name, v) in [("phi_delta", params.phi_delta), ("theta_delta", params.theta_delta), ("sigma_dist", params.sigma_dist)] {
        if !(v > 0.0 && v <= PI) {
            return Err(Error::invalid(format!("{name} = {v} outside (0, π]")));
        }
    }
    let means = floor_means(block_means);
    let fovs: Vec<Vec<usize>> = (0..n).map(|i| fov_set(targets, i, params.phi_delta, params.theta_delta)).collect();

    let mut weights = vec![0.0; n * n];
    weights.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, w) in row.iter_mut().enumerate() {
            if i != j {
                *w = transition_weight(i, j, targets, &means, &fovs, params.sigma_dist);
            }
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= s);
    });
    Ok(TransitionGraph {
        nodes: targets.to_vec(),
        weights,
    })
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Stationary distribution by power iteration on the lazy chain
/// `½(I + P)`, which shares the stationary distribution of `P` and is
/// aperiodic.
pub fn equilibrium(graph: &TransitionGraph, tol: f64, max_iters: usize) -> Result<EquilibriumWeights> {
    let n = graph.len();
    if n == 0 {
        return Err(Error::invalid("empty graph"));
    }
    let p = graph.weights();
    let mut alpha = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for iteration in 1..=max_iters {
        next.iter_mut().zip(&alpha).for_each(|(x, a)| *x = 0.5 * a);
        for (i, a) in alpha.iter().enumerate() {
            let half = 0.5 * a;
            for (x, w) in next.iter_mut().zip(&p[i * n..(i + 1) * n]) {
                *x += half * w;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        change = next.iter().zip(&alpha).map(|(x, a)| (x - a).abs()).sum();
        std::mem::swap(&mut alpha, &mut next);
        if change < tol {
            return Ok(EquilibriumWeights {
                alpha,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: change,
    })
}

/// `‖αᵀP − αᵀ‖₁`.
pub fn stationarity_residual(graph: &TransitionGraph, alpha: &[f64]) -> f64 {
    let n = graph.len();
    let mut moved = vec![0.0; n];
    for (i, a) in alpha.iter().enumerate() {
        for (m, w) in moved.iter_mut().zip(graph.row(i)) {
            *m += a * w;
        }
    }
    moved.iter().zip(alpha).map(|(m, a)| (m - a).abs()).sum()
}

/// Where the on-sphere smoothing of the rearrangement is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingMode {
    /// Filter each reprojected block before summation.
    #[default]
    PerBlock,
    /// Sum reprojected blocks, then filter once.
    PostSum,
}

/// `N(Σ_i G(reproject(α_i · S_i)))` on the filter's panorama grid.
pub fn rearrange(
    alpha: &EquilibriumWeights,
    block_maps: &[BlockFeatureMap],
    filter: &SphericalGaussian,
    mode: SmoothingMode,
) -> Result<EquirectMap> {
    if alpha.len() != block_maps.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} block maps",
            alpha.len(),
            block_maps.len()
        )));
    }
    let (w, h) = (filter.width(), filter.height());
    let mut out = vec![0.0; w * h];
    match mode {
        SmoothingMode::PerBlock => {
            let bands: Vec<Option<(usize, Vec<f64>)>> = block_maps
                .par_iter()
                .zip(alpha.alpha())
                .map(|(map, &a)| {
                    if map.values().iter().all(|&v| v == 0.0) {
                        return None;
                    }
                    let mut sparse = vec![0.0; w * h];
                    viewport_reproject_scaled_into(map, a, w, h, &mut sparse);
                    let spec = map.spec();
                    Some(filter.filter_cap(&sparse, &spec.center().to_unit_vector(), spec.corner_radius()))
                })
                .collect();
            for (lo, band) in bands.into_iter().flatten() {
                for (o, b) in out[lo * w..lo * w + band.len()].iter_mut().zip(&band) {
                    *o += b;
                }
            }
        }
        SmoothingMode::PostSum => {
            let mut sum = vec![0.0; w * h];
            for (map, &a) in block_maps.iter().zip(alpha.alpha()) {
                viewport_reproject_scaled_into(map, a, w, h, &mut sum);
            }
            let filtered = filter.apply(&EquirectMap::new(w, h, sum)?)?;
            out = filtered.into_values();
        }
    }
    normalize_in_place(&mut out);
    EquirectMap::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{generate_targets, ViewportSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coord(phi: f64, theta: f64) -> SphereCoord {
        SphereCoord::new(phi, theta).unwrap()
    }

    #[test]
    fn fov_examples() {
        let t = generate_targets(40).unwrap();
        let all = fov_set(&t, 7, PI, PI);
        assert_eq!(all.len(), 40);
        let pair = [coord(PI / 2.0, 0.0), coord(PI / 2.0, PI)];
        assert_eq!(fov_set(&pair, 0, 0.3 * PI, 0.3 * PI), vec![0]);
        assert_eq!(fov_set(&pair, 1, 0.3 * PI, 0.3 * PI), vec![1]);
        // neighbors across the antimeridian
        let seam = [coord(1.0, 0.05), coord(1.0, 2.0 * PI - 0.05)];
        assert_eq!(fov_set(&seam, 0, 0.3 * PI, 0.3 * PI), vec![0, 1]);
    }

    #[test]
    fn fov_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.gen_range(1..30);
            let t: Vec<_> = (0..n).map(|_| coord(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI))).collect();
            let (dp, dt) = (rng.gen_range(0.01..PI), rng.gen_range(0.01..PI));
            let i = rng.gen_range(0..n);
            let mut expected = Vec::new();
            for j in 0..n {
                let mut d = t[j].theta() - t[i].theta();
                while d > PI {
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    d += 2.0 * PI;
                }
                if j == i || ((t[j].phi() - t[i].phi()).abs() < dp && d.abs() < dt) {
                    expected.push(j);
                }
            }
            assert_eq!(fov_set(&t, i, dp, dt), expected);
        }
    }

    #[test]
    fn weight_examples() {
        let t = [coord(PI / 2.0, 0.0), coord(PI / 2.0, 0.5)];
        let fovs = vec![vec![0, 1], vec![1, 0]];
        let sigma = 0.25 * PI;
        let w = transition_weight(0, 1, &t, &[1.0, 1.0], &fovs, sigma);
        let g = 0.5f64;
        assert_abs_diff_eq!(w, 0.5 * (-g * g / (2.0 * sigma * sigma)).exp(), epsilon = 1e-15);
        // F at σ
        assert_abs_diff_eq!((-0.5f64).exp(), 0.6065, epsilon = 1e-4);

        let poles = [coord(0.0, 0.0), coord(PI, 0.0), coord(PI / 2.0, 0.0)];
        let fovs: Vec<_> = (0..3).map(|i| fov_set(&poles, i, 0.3 * PI, 0.3 * PI)).collect();
        let w = transition_weight(2, 0, &poles, &[1.0; 3], &fovs, sigma);
        assert!(w > 0.0 && w <= 1e-12);
    }

    #[test]
    fn two_node_graph() {
        let t = [coord(PI / 2.0, 0.0), coord(PI / 2.0, 1.0)];
        let g = build_graph(&t, &[0.3, 0.9], &GraphParams::default()).unwrap();
        assert_eq!(g.weights(), &[0.0, 1.0, 1.0, 0.0]);
        let a = equilibrium(&g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_abs_diff_eq!(a.alpha()[0], 0.5, epsilon = 1e-12);
        assert!(build_graph(&t[..1], &[1.0], &GraphParams::default()).is_err());
    }

    #[test]
    fn doubly_stochastic_is_uniform() {
        let n = 5;
        let t: Vec<_> = (0..n).map(|i| coord(1.0, i as f64)).collect();
        // circulant matrix without diagonal
        let row = [0.0, 0.1, 0.2, 0.3, 0.4];
        let w: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| row[(j + n - i) % n])).collect();
        let g = TransitionGraph::from_matrix(t, w).unwrap();
        let a = equilibrium(&g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        for x in a.alpha() {
            assert_abs_diff_eq!(*x, 0.2, epsilon = 1e-10);
        }
    }

    #[test]
    fn non_convergence_reported() {
        let t = generate_targets(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let means: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
        let g = build_graph(&t, &means, &GraphParams::default()).unwrap();
        match equilibrium(&g, 1e-300, 3) {
            Err(Error::NonConvergence { iterations: 3, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pole_nodes_stay_positive() {
        let t = generate_targets(30).unwrap();
        assert_eq!(t[29].phi(), PI);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let means: Vec<f64> = (0..30).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() }).collect();
            let g = build_graph(&t, &means, &GraphParams::default()).unwrap();
            for i in 0..30 {
                for j in 0..30 {
                    if i != j {
                        assert!(g.weight(i, j) > 0.0);
                    }
                }
                assert_abs_diff_eq!(g.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equator_bias_orders_alpha() {
        // mutually visible nodes with uniform means
        let t: Vec<_> = (0..8).map(|i| coord(0.3 + 0.3 * i as f64, 0.1 * i as f64)).collect();
        let params = GraphParams {
            phi_delta: PI,
            theta_delta: PI,
            ..Default::default()
        };
        let g = build_graph(&t, &[1.0; 8], &params).unwrap();
        let a = equilibrium(&g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        let mut idx: Vec<usize> = (0..8).collect();
        idx.sort_by(|&x, &y| t[x].phi().sin().total_cmp(&t[y].phi().sin()));
        for w in idx.windows(2) {
            assert!(a.alpha()[w[1]] >= a.alpha()[w[0]], "{:?}", a.alpha());
        }
    }

    #[test]
    fn rearrange_examples() {
        let (w, h) = (64, 32);
        let filter = SphericalGaussian::new(w, h, 0.05).unwrap();
        let specs: Vec<_> = generate_targets(6)
            .unwrap()
            .into_iter()
            .map(|c| ViewportSpec::new(c, PI / 3.0, 12).unwrap())
            .collect();
        let zeros: Vec<_> = specs.iter().map(|s| BlockFeatureMap::zeros(*s)).collect();
        let a = EquilibriumWeights::uniform(6);
        let out = rearrange(&a, &zeros, &filter, SmoothingMode::PerBlock).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert!(rearrange(&a, &zeros[..5], &filter, SmoothingMode::PerBlock).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let maps: Vec<_> = specs
            .iter()
            .map(|s| BlockFeatureMap::new(*s, (0..144).map(|_| rng.gen()).collect()).unwrap())
            .collect();
        let alpha = EquilibriumWeights::from_values(vec![1.0, 2.0, 3.0, 1.0, 0.5, 4.0]).unwrap();
        let doubled = EquilibriumWeights::from_values(alpha.alpha().iter().map(|a| 2.0 * a).collect()).unwrap();
        let x = rearrange(&alpha, &maps, &filter, SmoothingMode::PerBlock).unwrap();
        let y = rearrange(&doubled, &maps, &filter, SmoothingMode::PerBlock).unwrap();
        let z = rearrange(&alpha, &maps, &filter, SmoothingMode::PostSum).unwrap();
        for ((p, q), r) in x.values().iter().zip(y.values()).zip(z.values()) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
            assert_abs_diff_eq!(p, r, epsilon = 1e-9);
        }
        assert_eq!(x.max(), 1.0);
    }

    #[test]
    fn single_block_support_is_dilated_footprint() {
        let (w, h) = (128, 64);
        let sigma = 0.04;
        let filter = SphericalGaussian::new(w, h, sigma).unwrap();
        let spec = ViewportSpec::new(coord(1.2, 2.0), PI / 3.0, 16).unwrap();
        let block = BlockFeatureMap::new(spec, vec![1.0; 256]).unwrap();
        let mut maps: Vec<_> = generate_targets(4).unwrap().into_iter().map(|c| BlockFeatureMap::zeros(ViewportSpec::new(c, PI / 3.0, 16).unwrap())).collect();
        maps[2] = block.clone();
        let out = rearrange(&EquilibriumWeights::uniform(4), &maps, &filter, SmoothingMode::PerBlock).unwrap();
        let foot = crate::sphere::reproject_block(&block, w, h).coverage;
        for row in 0..h {
            for col in 0..w {
                let p = out.pixel_coord(row, col);
                let near = (0..h)
                    .flat_map(|r| (0..w).map(move |c| (r, c)))
                    .filter(|&(r, c)| foot.get(r, c) > 0.0)
                    .map(|(r, c)| geodesic_distance(&p, &foot.pixel_coord(r, c)))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(out.get(row, col) > 0.0, near <= 3.0 * sigma, "pixel ({row},{col}) at {near}");
            }
        }
    }

    proptest! {
        #[test]
        fn scale_invariance(seed in any::<u64>(), k in prop::sample::select(vec![1e-3, 1.0, 1e3])) {
            let t = generate_targets(20).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let means: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
            let scaled: Vec<f64> = means.iter().map(|m| m * k).collect();
            let p = GraphParams::default();
            let a = build_graph(&t, &means, &p).unwrap();
            let b = build_graph(&t, &scaled, &p).unwrap();
            for (x, y) in a.weights().iter().zip(b.weights()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
