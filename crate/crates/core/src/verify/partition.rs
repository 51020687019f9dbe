//! Polytope partitioning: push (input part, image) pairs through the layers,
//! keeping every image an exact convex polytope.
//!
//! Affine layers map images exactly. At a ReLU layer the image is split into
//! sign-orthant pieces over the straddling coordinates; if the union of the
//! mapped pieces is convex the pair passes through whole (the fold is
//! recorded, since the prefix map stops being affine), otherwise the pair is
//! split along the sign hyperplanes, pulled back to the input space through
//! the affine prefix. A split needed after an earlier fold is handled by
//! restarting the pair from the fold and splitting there instead, so input
//! parts always stay polytopes. Final bounds are coordinate extremes over the
//! exact image pieces.

use super::{LayerSplits, VerifierReport, VerifierStatus};
use crate::geometry::{hull, HPolytope, LpOutcome, Sense};
use crate::linalg::affine_rank;
use crate::network::{Layer, Network};
use crate::rat::{qone, qz, Q};
use crate::{Caps, Error, Result};
use num_traits::Signed;

#[derive(Debug, Clone)]
enum Prefix {
    /// Exact affine map from the input part to the current image space.
    Affine { w: Vec<Vec<Q>>, b: Vec<Q> },
    /// A convex fold happened; the snapshot can replay from just before it.
    Folded { snapshot: Box<Pair> },
}

#[derive(Debug, Clone)]
struct Pair {
    input_part: HPolytope,
    /// Vertex list of the current (convex) image.
    points: Vec<Vec<Q>>,
    prefix: Prefix,
    next_layer: usize,
    force_split: bool,
}

fn strictly_feasible(hp: &HPolytope) -> bool {
    let dim = hp.dim + 1;
    let mut rows = Vec::with_capacity(hp.rows.len() + 1);
    for (a, b) in &hp.rows {
        let mut coeffs: Vec<Q> = a.iter().map(|c| Q::from_integer(c.clone())).collect();
        coeffs.push(qone());
        rows.push(crate::geometry::LinRow::from_rational(
            &coeffs,
            crate::geometry::Rel::Le,
            &Q::from_integer(b.clone()),
            "",
        ));
    }
    let mut cap = vec![qz(); dim];
    cap[dim - 1] = qone();
    rows.push(crate::geometry::LinRow::from_rational(
        &cap,
        crate::geometry::Rel::Le,
        &qone(),
        "",
    ));
    let mut obj = vec![qz(); dim];
    obj[dim - 1] = qone();
    match crate::geometry::lp::solve(&rows, dim, &obj, Sense::Max) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Infeasible => false,
        LpOutcome::Unbounded => unreachable!("slack capped at one"),
    }
}

/// `region \ q` as closed pieces with non-empty interior.
fn subtract_strict(region: HPolytope, q: &HPolytope) -> Vec<HPolytope> {
    let mut out = Vec::new();
    let mut current = region;
    for (a, b) in &q.rows {
        let coeffs: Vec<Q> = a.iter().map(|c| Q::from_integer(c.clone())).collect();
        let rhs = Q::from_integer(b.clone());
        let mut outside = current.clone();
        let neg: Vec<Q> = coeffs.iter().map(|c| -c).collect();
        outside.push_le(&neg, &-rhs.clone());
        if strictly_feasible(&outside) {
            out.push(outside);
        }
        current.push_le(&coeffs, &rhs);
        if !strictly_feasible(&current) {
            break;
        }
    }
    out
}

/// Whether the union of the mapped pieces is convex, i.e. equals the hull of
/// all their vertices. Decided exactly inside the union's affine hull.
fn union_is_convex(pieces: &[Vec<Vec<Q>>], caps: &Caps) -> Result<bool> {
    let nonempty: Vec<&Vec<Vec<Q>>> = pieces.iter().filter(|p| !p.is_empty()).collect();
    if nonempty.len() <= 1 {
        return Ok(true);
    }
    let all: Vec<Vec<Q>> = nonempty.iter().flat_map(|p| (*p).clone()).collect();
    let pivots = crate::linalg::affine_pivots(&all);
    if pivots.is_empty() {
        return Ok(true);
    }
    let reduce = |pts: &[Vec<Q>]| -> Vec<Vec<Q>> {
        pts.iter()
            .map(|p| pivots.iter().map(|&c| p[c].clone()).collect())
            .collect()
    };
    let k = pivots.len();
    let big = hull::hull(&reduce(&all), k, caps)?;
    let mut remainder = vec![big];
    for piece in nonempty {
        let piece_hull = hull::hull(&reduce(piece), k, caps)?;
        let mut next = Vec::new();
        for region in remainder {
            next.extend(subtract_strict(region, &piece_hull));
        }
        remainder = next;
        if remainder.is_empty() {
            return Ok(true);
        }
    }
    Ok(remainder.is_empty())
}

struct Runner<'a> {
    net: &'a Network,
    caps: &'a Caps,
    budget: usize,
    queue: Vec<Pair>,
    done: Vec<Pair>,
    splits: Vec<usize>,
    relu_layers: Vec<usize>,
}

enum StepOutcome {
    Continue,
    Replaced,
}

impl<'a> Runner<'a> {
    fn record_split(&mut self, layer: usize, pieces: usize) {
        if let Some(pos) = self.relu_layers.iter().position(|&l| l == layer) {
            self.splits[pos] += pieces;
        }
    }

    fn live_count(&self) -> usize {
        self.queue.len() + self.done.len()
    }

    fn run(&mut self) -> Result<()> {
        while let Some(mut pair) = self.queue.pop() {
            loop {
                let layer_idx = pair.next_layer;
                let Some(layer) = self.net.layers().get(layer_idx) else {
                    self.done.push(pair);
                    break;
                };
                match layer {
                    Layer::Affine(a) => {
                        pair.points = pair.points.iter().map(|p| a.eval(p)).collect();
                        if let Prefix::Affine { w, b } = &pair.prefix {
                            let d = self.net.input_dim();
                            let new_w: Vec<Vec<Q>> = a
                                .weights
                                .iter()
                                .map(|row| {
                                    (0..d)
                                        .map(|j| {
                                            row.iter().zip(w).map(|(c, wr)| c * &wr[j]).sum()
                                        })
                                        .collect()
                                })
                                .collect();
                            let new_b: Vec<Q> = a
                                .weights
                                .iter()
                                .zip(&a.bias)
                                .map(|(row, bias)| crate::rat::dot(row, b) + bias)
                                .collect();
                            pair.prefix = Prefix::Affine { w: new_w, b: new_b };
                        }
                        pair.next_layer += 1;
                    }
                    Layer::Relu(width) => {
                        let width = *width;
                        match self.relu_step(&mut pair, layer_idx, width)? {
                            StepOutcome::Continue => {}
                            StepOutcome::Replaced => break,
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn relu_step(
        &mut self,
        pair: &mut Pair,
        layer_idx: usize,
        width: usize,
    ) -> Result<StepOutcome> {
        let straddling: Vec<usize> = (0..width)
            .filter(|&c| {
                let pos = pair.points.iter().any(|p| p[c].is_positive());
                let neg = pair.points.iter().any(|p| p[c].is_negative());
                pos && neg
            })
            .collect();
        let clamp = |points: &[Vec<Q>], keep: &dyn Fn(usize) -> bool| -> Vec<Vec<Q>> {
            points
                .iter()
                .map(|p| {
                    (0..width)
                        .map(|c| if keep(c) { p[c].clone() } else { qz() })
                        .collect()
                })
                .collect()
        };
        if straddling.is_empty() {
            let keep: Vec<bool> = (0..width)
                .map(|c| pair.points.iter().any(|p| p[c].is_positive()))
                .collect();
            pair.points = clamp(&pair.points, &|c| keep[c]);
            if let Prefix::Affine { w, b } = &mut pair.prefix {
                for c in 0..width {
                    if !keep[c] {
                        w[c] = vec![qz(); self.net.input_dim()];
                        b[c] = qz();
                    }
                }
            }
            pair.next_layer += 1;
            return Ok(StepOutcome::Continue);
        }

        // Orthant pieces over the straddling coordinates.
        let image_hull = hull::hull(&pair.points, width, self.caps)?;
        let image_rank = affine_rank(&pair.points);
        let mut pieces: Vec<(Vec<i8>, Vec<Vec<Q>>)> = Vec::new();
        for mask in 0..(1usize << straddling.len()) {
            let mut piece_hp = image_hull.clone();
            let mut signs = vec![0i8; width];
            for (slot, &c) in straddling.iter().enumerate() {
                let mut row = vec![qz(); width];
                if mask >> slot & 1 == 1 {
                    signs[c] = 1;
                    row[c] = -qone();
                } else {
                    signs[c] = -1;
                    row[c] = qone();
                }
                piece_hp.push_le(&row, &qz());
            }
            if piece_hp.is_empty() {
                continue;
            }
            let vertices = piece_hp.vertices(self.caps)?;
            if affine_rank(&vertices.points) != image_rank {
                continue;
            }
            pieces.push((signs, vertices.points));
        }

        let keep_nonstraddling: Vec<bool> = (0..width)
            .map(|c| pair.points.iter().any(|p| p[c].is_positive()))
            .collect();
        let active = |signs: &[i8], c: usize| -> bool {
            if straddling.contains(&c) {
                signs[c] > 0
            } else {
                keep_nonstraddling[c]
            }
        };
        let mapped: Vec<Vec<Vec<Q>>> = pieces
            .iter()
            .map(|(signs, pts)| clamp(pts, &|c| active(signs, c)))
            .collect();

        let forced = pair.force_split;
        if !forced && union_is_convex(&mapped, self.caps)? {
            // Pass through whole; the prefix folds.
            let snapshot = Box::new(Pair {
                input_part: pair.input_part.clone(),
                points: pair.points.clone(),
                prefix: pair.prefix.clone(),
                next_layer: layer_idx,
                force_split: true,
            });
            pair.points = mapped.into_iter().flatten().collect();
            if matches!(pair.prefix, Prefix::Affine { .. }) {
                pair.prefix = Prefix::Folded { snapshot };
            }
            pair.next_layer += 1;
            return Ok(StepOutcome::Continue);
        }

        // A split is required. If the prefix already folded, replay from the
        // fold and split there instead.
        let (w, b) = match &pair.prefix {
            Prefix::Affine { w, b } => (w.clone(), b.clone()),
            Prefix::Folded { snapshot } => {
                self.queue.push((**snapshot).clone());
                return Ok(StepOutcome::Replaced);
            }
        };
        if self.live_count() + pieces.len() > self.budget {
            return Err(Error::Invalid(format!(
                "partition budget {} exhausted at layer {layer_idx}",
                self.budget
            )));
        }
        self.record_split(layer_idx, pieces.len());
        for ((signs, _), image) in pieces.iter().zip(mapped) {
            let mut part = pair.input_part.clone();
            for &c in &straddling {
                if signs[c] > 0 {
                    let row: Vec<Q> = w[c].iter().map(|v| -v).collect();
                    part.push_le(&row, &b[c]);
                } else {
                    part.push_le(&w[c], &-b[c].clone());
                }
            }
            let mut child_w = w.clone();
            let mut child_b = b.clone();
            for c in 0..width {
                if !active(signs, c) {
                    child_w[c] = vec![qz(); self.net.input_dim()];
                    child_b[c] = qz();
                }
            }
            self.queue.push(Pair {
                input_part: part,
                points: image,
                prefix: Prefix::Affine {
                    w: child_w,
                    b: child_b,
                },
                next_layer: layer_idx + 1,
                force_split: false,
            });
        }
        Ok(StepOutcome::Replaced)
    }
}

/// Complete verification by exact image propagation with orthant splits.
pub fn polytope_partition(
    net: &Network,
    input: &HPolytope,
    budget: usize,
    caps: &Caps,
) -> Result<VerifierReport> {
    if budget == 0 {
        return Err(Error::Invalid("budget must be >= 1".into()));
    }
    let root_vertices = input.vertices(caps)?;
    let relu_layers: Vec<usize> = net
        .layers()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| matches!(l, Layer::Relu(_)).then_some(i))
        .collect();
    let d = net.input_dim();
    let identity = crate::network::AffineLayer::identity(d);
    let mut runner = Runner {
        net,
        caps,
        budget,
        queue: vec![Pair {
            input_part: input.clone(),
            points: root_vertices.points,
            prefix: Prefix::Affine {
                w: identity.weights,
                b: identity.bias,
            },
            next_layer: 0,
            force_split: false,
        }],
        done: Vec::new(),
        splits: vec![0; relu_layers.len()],
        relu_layers: relu_layers.clone(),
    };
    runner.run()?;

    let out_dim = net.output_dim();
    let mut lower: Vec<Option<Q>> = vec![None; out_dim];
    let mut upper: Vec<Option<Q>> = vec![None; out_dim];
    for pair in &runner.done {
        for p in &pair.points {
            for c in 0..out_dim {
                if lower[c].as_ref().map_or(true, |m| &p[c] < m) {
                    lower[c] = Some(p[c].clone());
                }
                if upper[c].as_ref().map_or(true, |m| &p[c] > m) {
                    upper[c] = Some(p[c].clone());
                }
            }
        }
    }
    Ok(VerifierReport {
        lower: lower.into_iter().map(Option::unwrap).collect(),
        upper: upper.into_iter().map(Option::unwrap).collect(),
        subproblem_count: runner.done.len(),
        status: VerifierStatus::Exact,
        trace: relu_layers
            .iter()
            .zip(runner.splits)
            .map(|(&layer, splits)| LayerSplits { layer, splits })
            .collect(),
    })
}

/// Final input parts, exposed for the tiling tests.
#[cfg(test)]
pub(crate) fn partition_parts(
    net: &Network,
    input: &HPolytope,
    budget: usize,
    caps: &Caps,
) -> Result<Vec<HPolytope>> {
    let root_vertices = input.vertices(caps)?;
    let relu_layers: Vec<usize> = net
        .layers()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| matches!(l, Layer::Relu(_)).then_some(i))
        .collect();
    let d = net.input_dim();
    let identity = crate::network::AffineLayer::identity(d);
    let mut runner = Runner {
        net,
        caps,
        budget,
        queue: vec![Pair {
            input_part: input.clone(),
            points: root_vertices.points,
            prefix: Prefix::Affine {
                w: identity.weights,
                b: identity.bias,
            },
            next_layer: 0,
            force_split: false,
        }],
        done: Vec::new(),
        splits: vec![0; relu_layers.len()],
        relu_layers,
    };
    runner.run()?;
    Ok(runner.done.into_iter().map(|p| p.input_part).collect())
}
