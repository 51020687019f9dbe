//! Command-line surface: network/polytope file formats, report schema, and
//! the drivers behind the `bound`, `exact`, `demo`, and `complexity`
//! subcommands. Rationals cross this boundary as exact `"p/q"` strings only.

use crate::constructions::{
    gap_network, ibp_divergence_network, max_network, pump, sec3_example, zero_network,
    GapDirection,
};
use crate::geometry::HPolytope;
use crate::network::{exact_bounds, AffineLayer, Layer, Network};
use crate::rat::{format_q, parse_q, q, qi, qone, qz, Q};
use crate::relax::{bound, ibp_bounds, RelaxationSpec};
use crate::verify::{bab, complexity_experiment, VerifierStatus};
use crate::{Caps, Error, Result};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_CLAIM: i32 = 4;

/// Exit code for an error per the command contract.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_PARSE,
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct NetworkFile {
    pub version: u32,
    pub layers: Vec<LayerFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum LayerFile {
    Affine { a: Vec<Vec<String>>, b: Vec<String> },
    Relu { width: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PolytopeFile {
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> NetworkFile {
        let layers = net
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Affine(a) => LayerFile::Affine {
                    a: a.weights
                        .iter()
                        .map(|row| row.iter().map(format_q).collect())
                        .collect(),
                    b: a.bias.iter().map(format_q).collect(),
                },
                Layer::Relu(w) => LayerFile::Relu { width: *w },
            })
            .collect();
        NetworkFile {
            version: 1,
            layers,
            metadata: None,
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        if self.version != 1 {
            return Err(Error::Parse(format!(
                "unsupported network file version {}",
                self.version
            )));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut dim: Option<usize> = None;
        for layer in &self.layers {
            match layer {
                LayerFile::Affine { a, b } => {
                    let weights: Result<Vec<Vec<Q>>> = a
                        .iter()
                        .map(|row| row.iter().map(|s| parse_q(s)).collect())
                        .collect();
                    let bias: Result<Vec<Q>> = b.iter().map(|s| parse_q(s)).collect();
                    let affine = AffineLayer::new(weights?, bias?)?;
                    if dim.is_none() {
                        dim = Some(affine.in_dim());
                    }
                    layers.push(Layer::Affine(affine));
                }
                LayerFile::Relu { width } => {
                    if dim.is_none() {
                        dim = Some(*width);
                    }
                    layers.push(Layer::Relu(*width));
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("network file has no layers".into()))?;
        Network::new(dim, layers)
    }
}

impl PolytopeFile {
    pub fn to_hpolytope(&self) -> Result<HPolytope> {
        if self.a.len() != self.b.len() {
            return Err(Error::Parse("polytope rows vs offsets mismatch".into()));
        }
        let dim = self.a.first().map(|r| r.len()).unwrap_or(0);
        let mut hp = HPolytope::universe(dim);
        for (row, rhs) in self.a.iter().zip(&self.b) {
            if row.len() != dim {
                return Err(Error::Parse("ragged polytope row".into()));
            }
            let coeffs: Result<Vec<Q>> = row.iter().map(|s| parse_q(s)).collect();
            hp.push_le(&coeffs?, &parse_q(rhs)?);
        }
        Ok(hp)
    }
}

/// `box:lo..hi,lo..hi` (rationals) or a path to a polytope JSON file.
pub fn parse_input_spec(spec: &str) -> Result<HPolytope> {
    if let Some(body) = spec.strip_prefix("box:") {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for part in body.split(',') {
            let (a, b) = part
                .split_once("..")
                .ok_or_else(|| Error::Parse(format!("bad box range {part:?}")))?;
            lo.push(parse_q(a)?);
            hi.push(parse_q(b)?);
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Parse("box has lo > hi".into()));
        }
        return Ok(HPolytope::from_box(&lo, &hi));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Parse(format!("cannot read input file {spec}: {e}")))?;
    let file: PolytopeFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad polytope file: {e}")))?;
    file.to_hpolytope()
}

pub fn load_network(path: &str) -> Result<Network> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read network file {path}: {e}")))?;
    let file: NetworkFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad network file: {e}")))?;
    file.to_network()
}

// ---------------------------------------------------------------------------
// Report schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq, Eq)]
pub struct Counters {
    pub lp_calls: usize,
    pub hull_calls: usize,
    pub constraints: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subproblems: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BoundsOut {
    pub lower: Vec<String>,
    pub upper: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Claim {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TableRow {
    pub d: usize,
    pub patterns: usize,
    pub bab_triangle_leaves: usize,
    pub partition_count: usize,
    pub bab_multi_neuron_leaves: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsOut>,
    pub counters: Counters,
    pub status: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub claims: Vec<Claim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TableRow>>,
    /// Excluded from diff-based comparisons.
    pub wall_time_ms: u128,
}

impl Report {
    fn new(command: &str) -> Report {
        Report {
            command: command.to_string(),
            network: None,
            input: None,
            method: None,
            bounds: None,
            counters: Counters::default(),
            status: "ok".to_string(),
            claims: Vec::new(),
            table: None,
            wall_time_ms: 0,
        }
    }

    pub fn all_claims_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }
}

fn bounds_out(lower: &[Q], upper: &[Q]) -> BoundsOut {
    BoundsOut {
        lower: lower.iter().map(format_q).collect(),
        upper: upper.iter().map(format_q).collect(),
    }
}

/// Caps from the `CONVEX_BARRIER_CAP` override, or the defaults.
pub fn caps_from_env() -> Result<Caps> {
    match std::env::var("CONVEX_BARRIER_CAP") {
        Ok(text) => {
            let cap: usize = text
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad CONVEX_BARRIER_CAP value {text:?}")))?;
            Ok(Caps::uniform(cap))
        }
        Err(_) => Ok(Caps::default()),
    }
}

// ---------------------------------------------------------------------------
// Command drivers
// ---------------------------------------------------------------------------

pub fn run_bound(network: &str, input: &str, method: &str, caps: &Caps) -> Result<Report> {
    let net = load_network(network)?;
    let hp = parse_input_spec(input)?;
    let spec = RelaxationSpec::parse(method)?;
    let report = bound(&net, &hp, spec, caps)?;
    let mut out = Report::new("bound");
    out.network = Some(network.to_string());
    out.input = Some(input.to_string());
    out.method = Some(spec.to_string());
    out.bounds = Some(bounds_out(&report.lower, &report.upper));
    out.counters = Counters {
        lp_calls: report.stats.lp_calls,
        hull_calls: report.stats.hull_calls,
        constraints: report.stats.constraints,
        subproblems: None,
    };
    Ok(out)
}

pub fn run_exact(network: &str, input: &str, caps: &Caps) -> Result<Report> {
    let net = load_network(network)?;
    let hp = parse_input_spec(input)?;
    let (lo, hi) = exact_bounds(&net, &hp, caps)?;
    let regions = crate::network::enumerate_regions(&net, &hp, caps)?;
    let mut out = Report::new("exact");
    out.network = Some(network.to_string());
    out.input = Some(input.to_string());
    out.method = Some("oracle".to_string());
    out.bounds = Some(bounds_out(&lo, &hi));
    out.counters.subproblems = Some(regions.len());
    Ok(out)
}

pub fn run_complexity(d_max: usize, csv: Option<&str>, caps: &Caps) -> Result<Report> {
    let rows = complexity_experiment(d_max, caps)?;
    let table: Vec<TableRow> = rows
        .iter()
        .map(|r| TableRow {
            d: r.d,
            patterns: r.patterns,
            bab_triangle_leaves: r.bab_triangle_leaves,
            partition_count: r.partition_count,
            bab_multi_neuron_leaves: r.bab_multi_neuron_leaves,
        })
        .collect();
    if let Some(path) = csv {
        let mut text =
            String::from("d,patterns,bab_triangle_leaves,partition_count,bab_multi_neuron_leaves\n");
        for r in &table {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.d, r.patterns, r.bab_triangle_leaves, r.partition_count, r.bab_multi_neuron_leaves
            ));
        }
        std::fs::write(path, text)
            .map_err(|e| Error::Parse(format!("cannot write csv {path}: {e}")))?;
    }
    let mut out = Report::new("complexity");
    out.method = Some(format!("d-max:{d_max}"));
    out.table = Some(table);
    Ok(out)
}

fn claim(claims: &mut Vec<Claim>, name: &str, detail: String, pass: bool) {
    claims.push(Claim {
        name: name.to_string(),
        detail,
        pass,
    });
}

pub fn run_demo(name: &str, caps: &Caps) -> Result<Report> {
    let mut out = Report::new("demo");
    out.method = Some(name.to_string());
    let claims = &mut out.claims;
    match name {
        "sec3" => {
            let (net, input) = sec3_example();
            let (lo, hi) = exact_bounds(&net, &input, caps)?;
            let relaxed = bound(&net, &input, RelaxationSpec::LayerwiseOptimal, caps)?;
            claim(
                claims,
                "exact-minimum-is-one",
                format!("oracle min = {}", format_q(&lo[0])),
                lo[0] == qone(),
            );
            claim(
                claims,
                "layerwise-lower-at-most-zero",
                format!("p1 lower = {}", format_q(&relaxed.lower[0])),
                relaxed.lower[0] <= qz(),
            );
            claim(
                claims,
                "gap-at-least-one",
                format!(
                    "exact - relaxed = {}",
                    format_q(&(&lo[0] - &relaxed.lower[0]))
                ),
                &lo[0] - &relaxed.lower[0] >= qone(),
            );
            out.bounds = Some(bounds_out(&lo, &hi));
        }
        "zero" => {
            let net = zero_network();
            let input = HPolytope::from_box(&[qi(-1)], &[qi(1)]);
            let tri = bound(&net, &input, RelaxationSpec::Triangle, caps)?;
            let m2 = bound(&net, &input, RelaxationSpec::MultiNeuron(2), caps)?;
            claim(
                claims,
                "two-neuron-hull-is-exact",
                format!(
                    "mk:2 = [{}, {}]",
                    format_q(&m2.lower[0]),
                    format_q(&m2.upper[0])
                ),
                m2.lower[0] == qz() && m2.upper[0] == qz(),
            );
            claim(
                claims,
                "single-neuron-is-inexact",
                format!(
                    "triangle = [{}, {}]",
                    format_q(&tri.lower[0]),
                    format_q(&tri.upper[0])
                ),
                tri.lower[0] < qz() && tri.upper[0] > qz(),
            );
            out.bounds = Some(bounds_out(&m2.lower, &m2.upper));
        }
        "transform" => {
            for (label, net, input) in [
                ("max2", max_network(2)?, HPolytope::unit_box(2)),
                {
                    let (net, input) = sec3_example();
                    ("sec3", net, input)
                },
            ] {
                let g = crate::constructions::exact_transform(&net, &input, caps)?;
                let (lo, hi) = exact_bounds(&net, &input, caps)?;
                let relaxed = bound(&g, &input, RelaxationSpec::LayerwiseOptimal, caps)?;
                let mut equal = true;
                let (blo, bhi) = input.bounding_box()?;
                for step in 0..=4 {
                    let x: Vec<Q> = blo
                        .iter()
                        .zip(&bhi)
                        .map(|(l, h)| l + (h - l) * q(step, 4))
                        .collect();
                    if g.eval(&x)? != net.eval(&x)? {
                        equal = false;
                    }
                }
                claim(
                    claims,
                    &format!("{label}-pointwise-equal"),
                    "sampled diagonal agrees exactly".to_string(),
                    equal,
                );
                claim(
                    claims,
                    &format!("{label}-layerwise-exact"),
                    format!(
                        "p1 = [{}, {}], oracle = [{}, {}]",
                        format_q(&relaxed.lower[0]),
                        format_q(&relaxed.upper[0]),
                        format_q(&lo[0]),
                        format_q(&hi[0])
                    ),
                    relaxed.lower == lo && relaxed.upper == hi,
                );
            }
        }
        "ibp-divergence" => {
            let net = ibp_divergence_network();
            let input = HPolytope::unit_box(2);
            let report = bab(&net, &input, RelaxationSpec::Ibp, 10_000, caps)?;
            claim(
                claims,
                "budget-exhausted",
                format!("{} subproblems", report.subproblem_count),
                report.status == VerifierStatus::BudgetExhausted,
            );
            claim(
                claims,
                "upper-bound-still-inexact",
                format!("upper = {}", format_q(&report.upper[0])),
                report.upper[0] > qone(),
            );
            let direct = ibp_bounds(&net, &[q(1, 2), qz()], &[qone(), qone()])?;
            claim(
                claims,
                "corner-box-upper-is-three-halves",
                format!("upper = {}", format_q(&direct.upper[0])),
                direct.upper[0] == q(3, 2),
            );
            out.bounds = Some(bounds_out(&report.lower, &report.upper));
        }
        other => {
            if let Some(d) = other.strip_prefix("max:") {
                let d: usize = d
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad max dimension {d:?}")))?;
                let net = max_network(d)?;
                let input = HPolytope::unit_box(d);
                let (lo, hi) = exact_bounds(&net, &input, caps)?;
                let tri = bound(&net, &input, RelaxationSpec::Triangle, caps)?;
                let m1 = bound(&net, &input, RelaxationSpec::MultiNeuron(1), caps)?;
                claim(
                    claims,
                    "multi-neuron-exact",
                    format!(
                        "mk:1 = [{}, {}]",
                        format_q(&m1.lower[0]),
                        format_q(&m1.upper[0])
                    ),
                    m1.lower == lo && m1.upper == hi,
                );
                claim(
                    claims,
                    "triangle-upper-inexact",
                    format!("triangle upper = {}", format_q(&tri.upper[0])),
                    tri.upper[0] > hi[0],
                );
                if d == 2 {
                    claim(
                        claims,
                        "triangle-upper-is-three-halves",
                        format!("triangle upper = {}", format_q(&tri.upper[0])),
                        tri.upper[0] == q(3, 2),
                    );
                }
                out.bounds = Some(bounds_out(&m1.lower, &m1.upper));
            } else if let Some(t) = other.strip_prefix("gap:") {
                let gap = parse_q(t)?;
                let input = HPolytope::from_box(&[qz()], &[qone()]);
                let witness = gap_network(&input, &gap, GapDirection::Lower)?;
                let (lo, _) = exact_bounds(&witness.network, &input, caps)?;
                let relaxed = bound(&witness.network, &input, witness.spec, caps)?;
                claim(
                    claims,
                    "exact-minimum-is-gap",
                    format!("oracle min = {}", format_q(&lo[0])),
                    lo[0] == gap,
                );
                claim(
                    claims,
                    "layerwise-lower-at-most-zero",
                    format!("p1 lower = {}", format_q(&relaxed.lower[0])),
                    relaxed.lower[0] <= qz(),
                );
                claim(
                    claims,
                    "witness-validates",
                    "oracle gap meets the claim".to_string(),
                    witness.validate(caps)?,
                );
                let twin = gap_network(&input, &gap, GapDirection::Upper)?;
                claim(claims, "upper-twin-validates", "negated output".to_string(), twin.validate(caps)?);
            } else if let Some(a) = other.strip_prefix("pump:") {
                let alpha = parse_q(a)?;
                let input = HPolytope::from_box(&[qz()], &[qone()]);
                let witness = gap_network(&input, &qi(5), GapDirection::Lower)?;
                let (f1, f2) = witness.network.split(3)?;
                let pumped = pump(&f1, &f2, &alpha)?;
                let (lo, _) = exact_bounds(&pumped.network, &input, caps)?;
                let relaxed = bound(
                    &pumped.network,
                    &input,
                    RelaxationSpec::CrossLayer(pumped.plan.window),
                    caps,
                )?;
                claim(
                    claims,
                    "pump-preserves-minimum",
                    format!("oracle min = {}", format_q(&lo[0])),
                    lo[0] == qi(5),
                );
                claim(
                    claims,
                    "cross-layer-gap-retained",
                    format!(
                        "pr:{} lower = {}",
                        pumped.plan.window,
                        format_q(&relaxed.lower[0])
                    ),
                    &lo[0] - &relaxed.lower[0] >= qi(5),
                );
                let full = bound(
                    &witness.network,
                    &input,
                    RelaxationSpec::CrossLayer(witness.network.layer_count()),
                    caps,
                )?;
                let (wlo, whi) = exact_bounds(&witness.network, &input, caps)?;
                claim(
                    claims,
                    "full-depth-window-is-exact",
                    format!(
                        "pr:{} = [{}, {}]",
                        witness.network.layer_count(),
                        format_q(&full.lower[0]),
                        format_q(&full.upper[0])
                    ),
                    full.lower == wlo && full.upper == whi,
                );
            } else {
                return Err(Error::Parse(format!(
                    "unknown demo {name:?}; expected sec3|zero|max:d|gap:T|pump:alpha|transform|ibp-divergence"
                )));
            }
        }
    }
    out.status = if out.all_claims_pass() {
        "confirmed".to_string()
    } else {
        "refuted".to_string()
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_file_round_trips_bit_exactly() {
        let (net, _) = sec3_example();
        let file = NetworkFile::from_network(&net);
        let text = serde_json::to_string_pretty(&file).unwrap();
        let parsed: NetworkFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_network().unwrap();
        assert_eq!(back, net);
        let text2 = serde_json::to_string_pretty(&NetworkFile::from_network(&back)).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn box_spec_parses_rationals() {
        let hp = parse_input_spec("box:-1..1,-1/2..3/2").unwrap();
        assert_eq!(hp.dim, 2);
        assert!(hp.contains(&[qz(), qone()]));
        assert!(!hp.contains(&[qz(), qi(2)]));
        assert!(parse_input_spec("box:1..0").is_err());
        assert!(parse_input_spec("box:nonsense").is_err());
    }

    #[test]
    fn method_strings_reach_the_engines() {
        let caps = Caps::default();
        let dir = std::env::temp_dir().join("relaxlab-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("max2.json");
        let file = NetworkFile::from_network(&max_network(2).unwrap());
        std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
        let report = run_bound(path.to_str().unwrap(), "box:0..1,0..1", "triangle", &caps).unwrap();
        assert_eq!(report.bounds.unwrap().upper, vec!["3/2".to_string()]);
        let report = run_bound(path.to_str().unwrap(), "box:0..1,0..1", "mk:1", &caps).unwrap();
        assert_eq!(report.bounds.unwrap().upper, vec!["1/1".to_string()]);
    }

    #[test]
    fn demos_confirm_their_claims() {
        let caps = Caps::default();
        for name in ["zero", "max:2", "gap:5"] {
            let report = run_demo(name, &caps).unwrap();
            assert!(report.all_claims_pass(), "demo {name} refuted: {report:?}");
            assert_eq!(report.status, "confirmed");
        }
        assert!(run_demo("nope", &caps).is_err());
    }
}
