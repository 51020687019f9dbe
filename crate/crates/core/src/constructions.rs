//! Generator networks: every construction the theory builds is available as
//! a runnable artifact, so the separations become executable experiments.

use crate::geometry::{HPolytope, LpOutcome, Sense};
use crate::network::{enumerate_regions, exact_bounds, AffineLayer, Layer, Network};
use crate::rat::{qi, qone, qz, Q};
use crate::relax::{bound, RelaxationSpec};
use crate::linalg::affine_rank;
use crate::{Caps, Error, Result};
use num_traits::{Signed, Zero};

fn aff(weights: Vec<Vec<Q>>, bias: Vec<Q>) -> Layer {
    Layer::Affine(AffineLayer::new(weights, bias).expect("construction weights"))
}

/// max(x_1, ..., x_d) in nested form: each stage computes
/// max(m, x_next) = relu(m - x_next) + x_next, carrying the remaining inputs
/// through the ReLU layer (they stay nonnegative on the unit box). Exactly
/// d-1 neurons are unstable there, one per stage.
pub fn max_network(d: usize) -> Result<Network> {
    if d < 2 {
        return Err(Error::Invalid("max network needs d >= 2".into()));
    }
    let mut layers = Vec::new();
    // Stage 1 consumes (x1, ..., xd) directly.
    let width = d;
    let mut w = vec![vec![qz(); d]; width];
    w[0][0] = qone();
    w[0][1] = -qone();
    for c in 1..width {
        w[c][c] = qone();
    }
    layers.push(aff(w, vec![qz(); width]));
    layers.push(Layer::Relu(width));
    // Stage s >= 2 consumes (r1, r2, t_{s+1}, ..., t_d) of width d - s + 2.
    for s in 2..d {
        let in_dim = d - s + 2;
        let out_dim = d - s + 1;
        let mut w = vec![vec![qz(); in_dim]; out_dim];
        w[0][0] = qone();
        w[0][1] = qone();
        w[0][2] = -qone();
        for c in 1..out_dim {
            w[c][c + 1] = qone();
        }
        layers.push(aff(w, vec![qz(); out_dim]));
        layers.push(Layer::Relu(out_dim));
    }
    layers.push(aff(vec![vec![qone(), qone()]], vec![qz()]));
    Network::new(d, layers)
}

/// relu(x) - relu(x): two neurons sharing the pre-activation x, encoding the
/// zero function.
pub fn zero_network() -> Network {
    let layers = vec![
        aff(vec![vec![qone()], vec![qone()]], vec![qz(), qz()]),
        Layer::Relu(2),
        aff(vec![vec![qone(), -qone()]], vec![qz()]),
    ];
    Network::new(1, layers).expect("zero network")
}

/// x1 + relu(x2 - x1), the max encoding whose interval-propagation partition
/// complexity is infinite on the unit box.
pub fn ibp_divergence_network() -> Network {
    let layers = vec![
        aff(
            vec![vec![-qone(), qone()], vec![qone(), qz()]],
            vec![qz(), qz()],
        ),
        Layer::Relu(2),
        aff(vec![vec![qone(), qone()]], vec![qz()]),
    ];
    Network::new(2, layers).expect("ibp divergence network")
}

/// The running incompleteness example: f = f' o relu o W1 on X = [-1,1]^2,
/// with W1 = [[-1, -3/2], [-1, 3/2]] + (-1/2, -1/2) and
/// f'(u) = |u1 - 1| + |u2 - 1| spelled out as four ReLUs.
pub fn sec3_example() -> (Network, HPolytope) {
    let layers = vec![
        aff(
            vec![vec![qi(-1), crate::rat::q(-3, 2)], vec![qi(-1), crate::rat::q(3, 2)]],
            vec![crate::rat::q(-1, 2), crate::rat::q(-1, 2)],
        ),
        Layer::Relu(2),
        aff(
            vec![
                vec![qone(), qz()],
                vec![-qone(), qz()],
                vec![qz(), qone()],
                vec![qz(), -qone()],
            ],
            vec![-qone(), qone(), -qone(), qone()],
        ),
        Layer::Relu(4),
        aff(vec![vec![qone(), qone(), qone(), qone()]], vec![qz()]),
    ];
    let net = Network::new(2, layers).expect("running example network");
    let input = HPolytope::from_box(&[qi(-1), qi(-1)], &[qi(1), qi(1)]);
    (net, input)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapDirection {
    Lower,
    Upper,
}

/// A network/input pair whose layerwise-optimal bound provably misses the
/// exact bound by at least `claimed_gap` in the stated direction.
#[derive(Debug, Clone)]
pub struct GapWitness {
    pub network: Network,
    pub input: HPolytope,
    pub spec: RelaxationSpec,
    pub claimed_gap: Q,
    pub direction: GapDirection,
}

impl GapWitness {
    /// Checks the witness against the oracle: the relaxed bound must differ
    /// from the exact one by at least the claimed gap.
    pub fn validate(&self, caps: &Caps) -> Result<bool> {
        let (exact_lo, exact_hi) = exact_bounds(&self.network, &self.input, caps)?;
        let report = bound(&self.network, &self.input, self.spec, caps)?;
        Ok(match self.direction {
            GapDirection::Lower => &exact_lo[0] - &report.lower[0] >= self.claimed_gap,
            GapDirection::Upper => &report.upper[0] - &exact_hi[0] >= self.claimed_gap,
        })
    }
}

/// The arbitrarily-large-gap construction: f = f' o relu o W1 o W0 (o pi for
/// inputs beyond one dimension), where W0 normalizes the input range to
/// [-1, 1], W1(t) = (t + 1, t), and f'(u) = 2T|u1 - 1| + 2T|u2 - 1/2| (negated
/// for the upper direction). The exact optimum is T (resp. -T) while the
/// layerwise-optimal bound cannot beat 0.
pub fn gap_network(input: &HPolytope, gap: &Q, direction: GapDirection) -> Result<GapWitness> {
    if !gap.is_positive() {
        return Err(Error::Invalid("gap must be positive".into()));
    }
    let d = input.dim;
    if d == 0 {
        return Err(Error::Degenerate("zero-dimensional input".into()));
    }
    let mut layers: Vec<Layer> = Vec::new();
    if d >= 2 {
        let mut w = vec![vec![qz(); d]];
        w[0][0] = qone();
        layers.push(aff(w, vec![qz()]));
    }
    let mut first_coord = vec![qz(); d];
    first_coord[0] = qone();
    let a = match input.lp(&first_coord, Sense::Min) {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => return Err(Error::Empty),
        LpOutcome::Unbounded => return Err(Error::Unbounded),
    };
    let b = match input.lp(&first_coord, Sense::Max) {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => return Err(Error::Empty),
        LpOutcome::Unbounded => return Err(Error::Unbounded),
    };
    if a == b {
        return Err(Error::Degenerate(
            "input projects to a single point".into(),
        ));
    }
    let span = &b - &a;
    // W0: t -> 2 (t - a) / (b - a) - 1.
    layers.push(aff(
        vec![vec![qi(2) / &span]],
        vec![-(&a + &b) / &span],
    ));
    // W1: t -> (t + 1, t).
    layers.push(aff(vec![vec![qone()], vec![qone()]], vec![qone(), qz()]));
    layers.push(Layer::Relu(2));
    // f' pre-activations: (u1 - 1, 1 - u1, u2 - 1/2, 1/2 - u2).
    layers.push(aff(
        vec![
            vec![qone(), qz()],
            vec![-qone(), qz()],
            vec![qz(), qone()],
            vec![qz(), -qone()],
        ],
        vec![-qone(), qone(), crate::rat::q(-1, 2), crate::rat::q(1, 2)],
    ));
    layers.push(Layer::Relu(4));
    let two_t = qi(2) * gap;
    let out_row = match direction {
        GapDirection::Lower => vec![two_t.clone(); 4],
        GapDirection::Upper => vec![-two_t.clone(); 4],
    };
    layers.push(aff(vec![out_row], vec![qz()]));
    Ok(GapWitness {
        network: Network::new(d, layers)?,
        input: input.clone(),
        spec: RelaxationSpec::LayerwiseOptimal,
        claimed_gap: gap.clone(),
        direction,
    })
}

/// The pumping arithmetic: total depth, inserted identity layers, and the
/// cross-layer window the pumped network defeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PumpPlan {
    pub total_layers: usize,
    pub inserted: usize,
    pub window: usize,
}

/// L = ceil(max(1/alpha, (L1 + L2 + 1)/(1 - alpha))), r = max(1, floor(alpha L));
/// the identity padding L - L1 - L2 then exceeds the window: no window spans
/// both halves.
pub fn pump_plan(alpha: &Q, l1: usize, l2: usize) -> Result<PumpPlan> {
    if !alpha.is_positive() || alpha >= &qone() {
        return Err(Error::Invalid("alpha must lie strictly in (0, 1)".into()));
    }
    let inv = alpha.recip();
    let ratio = Q::from_integer((l1 + l2 + 1).into()) / (qone() - alpha);
    let l_rat = if inv > ratio { inv } else { ratio };
    let total: usize = l_rat
        .ceil()
        .to_integer()
        .try_into()
        .map_err(|_| Error::Invalid("pump depth overflow".into()))?;
    let window_rat = alpha * Q::from_integer((total as i64).into());
    let window: usize = window_rat
        .floor()
        .to_integer()
        .try_into()
        .map_err(|_| Error::Invalid("pump window overflow".into()))?;
    let window = window.max(1);
    let inserted = total - l1 - l2;
    debug_assert!(inserted >= window + 1);
    Ok(PumpPlan {
        total_layers: total,
        inserted,
        window,
    })
}

#[derive(Debug, Clone)]
pub struct PumpedNetwork {
    pub network: Network,
    pub plan: PumpPlan,
}

/// Inserts affine identity layers between `f1` and `f2` per the pump plan;
/// pointwise equal to `f2 . f1`.
pub fn pump(f1: &Network, f2: &Network, alpha: &Q) -> Result<PumpedNetwork> {
    if f1.output_dim() != f2.input_dim() {
        return Err(Error::DimensionMismatch("pump halves".into()));
    }
    let plan = pump_plan(alpha, f1.layer_count(), f2.layer_count())?;
    let mut layers: Vec<Layer> = f1.layers().to_vec();
    for _ in 0..plan.inserted {
        layers.push(Layer::Affine(AffineLayer::identity(f1.output_dim())));
    }
    layers.extend(f2.layers().iter().cloned());
    Ok(PumpedNetwork {
        network: Network::new(f1.input_dim(), layers)?,
        plan,
    })
}

/// Rebuilds `f` (on X) as a single-hidden-layer network plus input-copy
/// neurons (relu(x_j - min x_j) carries x_j through the hidden layer with
/// the base gradient on the output side). With one ReLU layer, the layerwise
/// hull of the hidden graph is taken over the exact affine image of X, so the
/// layerwise-optimal bound of the result equals the exact bound.
///
/// The synthesis reads the kink structure off the region oracle; it requires
/// every kink hyperplane of `f` on X to carry a uniform gradient jump (true
/// for one-dimensional inputs and for the separable-after-affine corpus
/// networks). Anything else is reported as unsupported rather than silently
/// approximated, as is any verification mismatch.
pub fn exact_transform(net: &Network, input: &HPolytope, caps: &Caps) -> Result<Network> {
    input.bounding_box().map_err(|e| match e {
        Error::Unbounded => Error::Unbounded,
        other => other,
    })?;
    let d = net.input_dim();
    let out_dim = net.output_dim();
    let regions = enumerate_regions(net, input, caps)?;
    // Boundary patterns have dimension-deficient domains; the kink structure
    // lives entirely on the full-dimensional cells.
    let full_dim: Vec<bool> = regions
        .iter()
        .map(|r| {
            r.domain
                .vertices(caps)
                .map(|v| affine_rank(&v.points) == d)
                .unwrap_or(false)
        })
        .collect();
    let full_dim_base = (0..regions.len())
        .find(|&i| full_dim[i])
        .ok_or_else(|| Error::Degenerate("input polytope is dimension-deficient".into()))?;
    let base = &regions[full_dim_base];

    // Kink hyperplanes with their per-output gradient jumps.
    let mut hyperplanes: Vec<(Vec<Q>, Q, Vec<Q>)> = Vec::new();
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            if !full_dim[i] || !full_dim[j] {
                continue;
            }
            let (ri, rj) = (&regions[i], &regions[j]);
            if ri.map.weights == rj.map.weights && ri.map.bias == rj.map.bias {
                continue;
            }
            let shared = ri.domain.intersect(&rj.domain)?;
            let Ok(vertices) = shared.vertices(caps) else {
                continue;
            };
            if affine_rank(&vertices.points) + 1 != d {
                continue;
            }
            let (normal, offset) = facet_hyperplane(&vertices.points, d)?;
            // Which side is which: the plus region pokes past the hyperplane.
            let max_i = match ri.domain.lp(&normal, Sense::Max) {
                LpOutcome::Optimal { value, .. } => value,
                _ => return Err(Error::Invalid("region domain degenerate".into())),
            };
            let (plus, minus) = if max_i > offset { (ri, rj) } else { (rj, ri) };
            let pivot = normal
                .iter()
                .position(|c| !c.is_zero())
                .expect("nonzero normal");
            let mut sigma = Vec::with_capacity(out_dim);
            for o in 0..out_dim {
                let diff: Vec<Q> = plus.map.weights[o]
                    .iter()
                    .zip(&minus.map.weights[o])
                    .map(|(a, b)| a - b)
                    .collect();
                let s = &diff[pivot] / &normal[pivot];
                let collinear = diff
                    .iter()
                    .zip(&normal)
                    .all(|(dv, nv)| dv == &(&s * nv));
                let bias_ok =
                    &plus.map.bias[o] - &minus.map.bias[o] == -(&s * &offset);
                if !collinear || !bias_ok {
                    return Err(Error::TransformUnsupported(
                        "gradient jump is not rank-one across a kink".into(),
                    ));
                }
                sigma.push(s);
            }
            match hyperplanes
                .iter()
                .find(|(n, c, _)| n == &normal && c == &offset)
            {
                Some((_, _, existing)) => {
                    if existing != &sigma {
                        return Err(Error::TransformUnsupported(
                            "kink jump varies along a hyperplane".into(),
                        ));
                    }
                }
                None => hyperplanes.push((normal, offset, sigma)),
            }
        }
    }

    // Orient every hyperplane so the base region sits on the negative side.
    for (normal, offset, _) in hyperplanes.iter_mut() {
        let max_base = match base.domain.lp(normal, Sense::Max) {
            LpOutcome::Optimal { value, .. } => value,
            _ => return Err(Error::Invalid("base region degenerate".into())),
        };
        if max_base > *offset {
            for c in normal.iter_mut() {
                *c = -c.clone();
            }
            *offset = -offset.clone();
        }
    }

    // Hidden layer: one neuron per kink plus one shifted copy per input.
    let mut input_lo = Vec::with_capacity(d);
    for j in 0..d {
        let mut obj = vec![qz(); d];
        obj[j] = qone();
        match input.lp(&obj, Sense::Min) {
            LpOutcome::Optimal { value, .. } => input_lo.push(value),
            _ => return Err(Error::Empty),
        }
    }
    let k = hyperplanes.len();
    let mut w1: Vec<Vec<Q>> = Vec::with_capacity(k + d);
    let mut b1: Vec<Q> = Vec::with_capacity(k + d);
    for (normal, offset, _) in &hyperplanes {
        w1.push(normal.clone());
        b1.push(-offset.clone());
    }
    for j in 0..d {
        let mut row = vec![qz(); d];
        row[j] = qone();
        w1.push(row);
        b1.push(-input_lo[j].clone());
    }
    let mut w2: Vec<Vec<Q>> = Vec::with_capacity(out_dim);
    let mut b2: Vec<Q> = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let mut row: Vec<Q> = hyperplanes.iter().map(|(_, _, s)| s[o].clone()).collect();
        row.extend(base.map.weights[o].iter().cloned());
        let shift: Q = base.map.weights[o]
            .iter()
            .zip(&input_lo)
            .map(|(w, l)| w * l)
            .sum();
        w2.push(row);
        b2.push(&base.map.bias[o] + shift);
    }
    let g = Network::new(
        d,
        vec![
            aff(w1, b1),
            Layer::Relu(k + d),
            aff(w2, b2),
        ],
    )?;

    // Exact verification: the two piecewise-linear functions agree at every
    // vertex of every cell of the common refinement, hence everywhere on X.
    let g_regions = enumerate_regions(&g, input, caps)?;
    for rf in &regions {
        for rg in &g_regions {
            let cell = rf.domain.intersect(&rg.domain)?;
            let Ok(vertices) = cell.vertices(caps) else {
                continue;
            };
            for v in &vertices.points {
                if rf.map.eval(v) != rg.map.eval(v) {
                    return Err(Error::TransformUnsupported(
                        "synthesis verification failed: non-uniform kink structure".into(),
                    ));
                }
            }
        }
    }
    Ok(g)
}


/// Normal and offset of the unique hyperplane through an affinely
/// (d-1)-dimensional point set, in a canonical primitive integer form.
fn facet_hyperplane(points: &[Vec<Q>], d: usize) -> Result<(Vec<Q>, Q)> {
    let base = &points[0];
    let diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let kernel = crate::linalg::nullspace(&diffs);
    if kernel.len() != 1 {
        return Err(Error::Invalid("facet normal is not unique".into()));
    }
    let normal = kernel.into_iter().next().unwrap();
    let offset = crate::rat::dot(&normal, base);
    let row = crate::geometry::LinRow::from_rational(
        &normal,
        crate::geometry::Rel::Eq,
        &offset,
        "",
    );
    let normal: Vec<Q> = row
        .coeffs
        .iter()
        .map(|c| Q::from_integer(c.clone()))
        .collect();
    let _ = d;
    Ok((normal, Q::from_integer(row.rhs)))
}
