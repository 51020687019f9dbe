//! Interval bound propagation: per-coordinate interval arithmetic through
//! the layers, with sign-split weights on affine layers.

use super::{BoundReport, RelaxStats};
use crate::geometry::{ConstraintSystem, Rel};
use crate::network::{Layer, Network};
use crate::rat::{relu, Q};
use crate::{Error, Result};
use num_traits::Signed;

/// Interval of every block: input first, then each layer's output.
pub fn ibp_trace(net: &Network, lo: &[Q], hi: &[Q]) -> Result<Vec<(Vec<Q>, Vec<Q>)>> {
    if lo.len() != net.input_dim() || hi.len() != net.input_dim() {
        return Err(Error::DimensionMismatch("ibp input box".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::Invalid("ibp box has lo > hi".into()));
    }
    let mut trace = vec![(lo.to_vec(), hi.to_vec())];
    for layer in net.layers() {
        let (prev_lo, prev_hi) = trace.last().unwrap();
        let next = match layer {
            Layer::Affine(a) => {
                let mut out_lo = Vec::with_capacity(a.out_dim());
                let mut out_hi = Vec::with_capacity(a.out_dim());
                for (row, b) in a.weights.iter().zip(&a.bias) {
                    let mut acc_lo = b.clone();
                    let mut acc_hi = b.clone();
                    for (w, (l, h)) in row.iter().zip(prev_lo.iter().zip(prev_hi)) {
                        if w.is_negative() {
                            acc_lo += w * h;
                            acc_hi += w * l;
                        } else {
                            acc_lo += w * l;
                            acc_hi += w * h;
                        }
                    }
                    out_lo.push(acc_lo);
                    out_hi.push(acc_hi);
                }
                (out_lo, out_hi)
            }
            Layer::Relu(_) => (
                prev_lo.iter().map(relu).collect(),
                prev_hi.iter().map(relu).collect(),
            ),
        };
        trace.push(next);
    }
    Ok(trace)
}

/// IBP bounds over an axis-aligned box, reported with the induced interval
/// constraint system.
pub fn ibp_bounds(net: &Network, lo: &[Q], hi: &[Q]) -> Result<BoundReport> {
    let trace = ibp_trace(net, lo, hi)?;
    let mut system = ConstraintSystem::new();
    for (i, (blo, bhi)) in trace.iter().enumerate() {
        let name = if i == 0 { "x".to_string() } else { format!("v{i}") };
        let block = system.declare_block(&name, blo.len());
        for c in 0..blo.len() {
            let var = system.var(block, c);
            system.add_sparse(&[(var, crate::rat::qone())], Rel::Le, bhi[c].clone(), "ibp");
            system.add_sparse(&[(var, -crate::rat::qone())], Rel::Le, -blo[c].clone(), "ibp");
        }
    }
    let (out_lo, out_hi) = trace.last().unwrap().clone();
    let constraints = system.rows.len();
    Ok(BoundReport {
        lower: out_lo,
        upper: out_hi,
        system,
        stats: RelaxStats {
            constraints,
            hull_calls: 0,
            lp_calls: 0,
        },
        exact: None,
    })
}
