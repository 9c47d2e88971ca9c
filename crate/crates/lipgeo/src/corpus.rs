//! Built-in example sets with known answers. Each entry carries a spec, a
//! recommended sampling recipe (region, density, graph rule, radius grid),
//! and the facts an analysis run is expected to reproduce, with a note on how
//! each expected value was obtained.

use crate::analysis::log_grid;
use crate::geom::{Point, Region};
use crate::metric::{
    build_graph, GraphRule, MetricGraph, PancakeDecomposition,
};
use crate::setdef::{sample_set, SampleCloud, SampleError, SetSpec};

/// A known quantity of a corpus entry and the oracle that produced it.
#[derive(Debug, Clone)]
pub struct KnownFact {
    pub quantity: &'static str,
    pub expected: &'static str,
    pub oracle: &'static str,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub ambient_dim: usize,
    pub unbounded: bool,
    pub region: Region,
    pub density: f64,
    pub rule: GraphRule,
    /// Recommended radius grid for link analyses.
    pub t_grid: Option<Vec<f64>>,
    /// Claimed embedding constant of the pieces, when the entry ships a
    /// decomposition (the pieces of the spec are the pancakes).
    pub pancake_m: Option<f64>,
    /// Shifted center for sphere-center comparisons.
    pub center_p: Option<Point>,
    /// Norm band for tangent-direction clustering.
    pub tangent_band: Option<(f64, f64)>,
    pub known: Vec<KnownFact>,
}

impl CorpusEntry {
    pub fn spec(&self) -> SetSpec {
        build_spec(self.name).expect("corpus entry has a spec")
    }

    pub fn sample(&self, seed: u64) -> Result<SampleCloud, SampleError> {
        sample_set(&self.spec(), &self.region, self.density, seed)
    }

    pub fn graph(&self, cloud: &SampleCloud) -> MetricGraph {
        build_graph(cloud, self.rule)
    }

    /// The entry's decomposition: pieces of the spec become the pancakes,
    /// with closures thickened by one graph edge.
    pub fn decomposition(
        &self,
        graph: &MetricGraph,
        cloud: &SampleCloud,
    ) -> Option<PancakeDecomposition> {
        self.pancake_m.map(|m| {
            PancakeDecomposition::from_piece_labels(graph, cloud.piece_label.clone(), m)
        })
    }
}

pub fn names() -> Vec<&'static str> {
    vec![
        "segment",
        "circle",
        "cone",
        "tangent-pair",
        "l-shape",
        "tangent-sheets-infinity",
        "parabola",
        "plane-annulus",
        "parallel-rays",
    ]
}

pub fn all() -> Vec<CorpusEntry> {
    names().into_iter().map(|n| get(n).unwrap()).collect()
}

fn build_spec(name: &str) -> Option<SetSpec> {
    let spec = match name {
        "segment" => SetSpec::new(
            "segment",
            2,
            vec![SetSpec::parametric_piece(&[(-1.0, 1.0)], &["u1", "0"]).unwrap()],
            false,
        ),
        "circle" => SetSpec::new(
            "circle",
            2,
            vec![SetSpec::implicit_piece(&["x1^2 + x2^2 - 1"], &[], 2).unwrap()],
            false,
        ),
        "cone" => SetSpec::new(
            "cone",
            3,
            vec![SetSpec::implicit_piece(&["x1^2 + x2^2 - x3^2"], &["x3"], 3).unwrap()],
            true,
        ),
        "tangent-pair" => SetSpec::new(
            "tangent-pair",
            2,
            vec![
                SetSpec::parametric_piece(&[(0.0, 0.5)], &["u1", "0"]).unwrap(),
                SetSpec::parametric_piece(&[(0.0, 0.5)], &["u1", "u1^2"]).unwrap(),
            ],
            false,
        ),
        "l-shape" => SetSpec::new(
            "l-shape",
            2,
            vec![
                SetSpec::parametric_piece(&[(0.0, 1.0)], &["u1", "0"]).unwrap(),
                SetSpec::parametric_piece(&[(0.0, 1.0)], &["0", "u1"]).unwrap(),
            ],
            false,
        ),
        // Two sheets z = 0 and z = 1/x over x >= 1, seamed along y = 0 by a
        // vertical band so every link is a connected "V": within a slice the
        // inner path between the far edges stays ~2 while the outer gap
        // between the sheets decays like 1/x.
        "tangent-sheets-infinity" => SetSpec::new(
            "tangent-sheets-infinity",
            3,
            vec![
                SetSpec::parametric_piece(&[(1.0, 7.0), (0.0, 1.0)], &["u1", "u2", "0"]).unwrap(),
                SetSpec::parametric_piece(&[(1.0, 7.0), (0.0, 1.0)], &["u1", "u2", "1/u1"])
                    .unwrap(),
                SetSpec::parametric_piece(&[(1.0, 7.0), (0.0, 1.0)], &["u1", "0", "u2/u1"])
                    .unwrap(),
            ],
            true,
        ),
        "parabola" => SetSpec::new(
            "parabola",
            2,
            vec![SetSpec::parametric_piece(&[(1.2, 10.2)], &["u1", "u1^2"]).unwrap()],
            true,
        ),
        "plane-annulus" => SetSpec::new(
            "plane-annulus",
            2,
            vec![SetSpec::implicit_piece(&[], &[], 2).unwrap()],
            true,
        ),
        "parallel-rays" => SetSpec::new(
            "parallel-rays",
            2,
            vec![
                SetSpec::parametric_piece(&[(1.0, 70.0)], &["u1", "0"]).unwrap(),
                SetSpec::parametric_piece(&[(1.0, 70.0)], &["u1", "1"]).unwrap(),
            ],
            true,
        ),
        _ => return None,
    };
    Some(spec)
}

pub fn get(name: &str) -> Option<CorpusEntry> {
    build_spec(name)?;
    let entry = match name {
        "segment" => CorpusEntry {
            name: "segment",
            summary: "straight segment through the origin; inner equals outer",
            ambient_dim: 2,
            unbounded: false,
            region: Region::ball(vec![0.0, 0.0], 1.5),
            density: 0.005,
            rule: GraphRule::EpsilonBall(0.015),
            t_grid: None,
            pancake_m: Some(1.0),
            center_p: None,
            tangent_band: None,
            known: vec![KnownFact {
                quantity: "embedding constant",
                expected: "1.0",
                oracle: "exact: convex sets have inner = outer",
            }],
        },
        "circle" => CorpusEntry {
            name: "circle",
            summary: "unit circle; worst inner/outer ratio at antipodes",
            ambient_dim: 2,
            unbounded: false,
            region: Region::ball(vec![0.0, 0.0], 2.0),
            density: 0.005,
            rule: GraphRule::EpsilonBall(0.015),
            t_grid: None,
            pancake_m: None,
            center_p: None,
            tangent_band: None,
            known: vec![KnownFact {
                quantity: "embedding constant",
                expected: "pi/2 ~ 1.5708",
                oracle: "analytic: antipodal arc pi over chord 2",
            }],
        },
        "cone" => CorpusEntry {
            name: "cone",
            summary: "x^2 + y^2 = z^2, z >= 0; links are round circles",
            ambient_dim: 3,
            unbounded: true,
            region: Region::annulus(vec![0.0; 3], 2.0, 66.0),
            density: 1.0,
            rule: GraphRule::EpsilonBall(3.0),
            t_grid: Some(log_grid(4.0, 64.0, 9)),
            pancake_m: None,
            center_p: Some(vec![1.0, 0.0, 0.0]),
            tangent_band: None,
            known: vec![
                KnownFact {
                    quantity: "link constants",
                    expected: "pi/2 at every level, verdict bounded",
                    oracle: "analytic: sphere sections are circles of radius t/sqrt(2)",
                },
                KnownFact {
                    quantity: "link-equivalence drift",
                    expected: "<= 1.5 over [4, 64]",
                    oracle: "analytic: unrolled-cone geodesics vs circle arcs",
                },
                KnownFact {
                    quantity: "equivalence triple",
                    expected: "bounded / bounded / bounded",
                    oracle: "inversion maps the cone onto itself",
                },
            ],
        },
        "tangent-pair" => CorpusEntry {
            name: "tangent-pair",
            summary: "{y=0} u {y=x^2} on [0, 1/2]; branches tangent at the origin",
            ambient_dim: 2,
            unbounded: false,
            region: Region::ball(vec![0.0, 0.0], 2.0),
            density: 1e-3,
            // 2h instead of the default 3h: the cross-branch tunnel cutoff
            // sits at separation eps, and the detectable ratio is ~1/(2*sqrt(eps))
            rule: GraphRule::EpsilonBall(2e-3),
            t_grid: None,
            pancake_m: Some(2f64.sqrt()),
            center_p: None,
            tangent_band: None,
            known: vec![
                KnownFact {
                    quantity: "embedding constant",
                    expected: ">= 10 at h = 1e-3, witness within 0.15 of the origin",
                    oracle: "analytic ratio 2t/t^2 cut off at the graph resolution sqrt(2h)",
                },
                KnownFact {
                    quantity: "flattened embedding constant",
                    expected: "<= 5 after the two-stage lift",
                    oracle: "appended chain distances separate the branches",
                },
            ],
        },
        "l-shape" => CorpusEntry {
            name: "l-shape",
            summary: "two unit legs meeting at a right angle; two-piece decomposition",
            ambient_dim: 2,
            unbounded: false,
            region: Region::ball(vec![0.0, 0.0], 2.0),
            density: 2.5e-3,
            rule: GraphRule::EpsilonBall(7.5e-3),
            t_grid: None,
            pancake_m: Some(2f64.sqrt()),
            center_p: None,
            tangent_band: None,
            known: vec![
                KnownFact {
                    quantity: "chain vs inner sandwich",
                    expected: "d_chain <= d_inner <= sqrt(2) d_chain on all pairs",
                    oracle: "brute force over all node pairs; sqrt(2) from (a+b)/sqrt(a^2+b^2)",
                },
                KnownFact {
                    quantity: "embedding distortion",
                    expected: "<= 2.2 for the two-stage lift",
                    oracle: "brute-force pair scan at <= 300 nodes",
                },
            ],
        },
        "tangent-sheets-infinity" => CorpusEntry {
            name: "tangent-sheets-infinity",
            summary: "sheets z=0 and z=1/x seamed along y=0; links connected, gap ~ 1/t",
            ambient_dim: 3,
            unbounded: true,
            region: Region::annulus(vec![0.0; 3], 2.0, 6.7),
            density: 0.05,
            rule: GraphRule::EpsilonBall(0.15),
            t_grid: Some(log_grid(3.0, 6.0, 9)),
            pancake_m: None,
            center_p: None,
            tangent_band: None,
            known: vec![
                KnownFact {
                    quantity: "link constants",
                    expected: "~ 2t + 1, verdict diverging, exponent ~ 0.9 on [3, 6]",
                    oracle: "analytic: within-slice path ~ 2 + 1/t, outer gap 1/t",
                },
                KnownFact {
                    quantity: "equivalence triple",
                    expected: "diverging on all three sides, exponents within 0.2",
                    oracle: "slices at fixed radius map by similarities under both transforms",
                },
            ],
        },
        "parabola" => CorpusEntry {
            name: "parabola",
            summary: "single branch (t, t^2); one escape direction",
            ambient_dim: 2,
            unbounded: true,
            region: Region::annulus(vec![0.0, 0.0], 2.0, 100.0),
            density: 0.05,
            rule: GraphRule::EpsilonBall(0.15),
            t_grid: Some(log_grid(4.0, 64.0, 9)),
            pancake_m: None,
            center_p: None,
            tangent_band: Some((98.5, 100.0)),
            known: vec![
                KnownFact {
                    quantity: "tangent directions at infinity",
                    expected: "single cluster near (0, 1)",
                    oracle: "normalize (t, t^2) for large t",
                },
                KnownFact {
                    quantity: "link constants",
                    expected: "1.0 (single-point links), verdict bounded",
                    oracle: "a branch meets each large sphere once",
                },
            ],
        },
        "plane-annulus" => CorpusEntry {
            name: "plane-annulus",
            summary: "flat R^2 sampled on an annulus; links are full circles",
            ambient_dim: 2,
            unbounded: true,
            region: Region::annulus(vec![0.0, 0.0], 2.0, 66.0),
            density: 1.0,
            rule: GraphRule::EpsilonBall(3.0),
            t_grid: Some(log_grid(4.0, 64.0, 9)),
            pancake_m: None,
            center_p: Some(vec![1.0, 0.0]),
            tangent_band: None,
            known: vec![
                KnownFact {
                    quantity: "link constants",
                    expected: "pi/2 at every level, verdict bounded",
                    oracle: "analytic: circle geodesics vs chords",
                },
                KnownFact {
                    quantity: "link-equivalence drift",
                    expected: "<= 1.5 over [4, 64]",
                    oracle: "analytic: wrap-around-the-hole geodesics at small t",
                },
            ],
        },
        "parallel-rays" => CorpusEntry {
            name: "parallel-rays",
            summary: "two parallel rays one apart; links at infinity disconnected",
            ambient_dim: 2,
            unbounded: true,
            region: Region::annulus(vec![0.0, 0.0], 2.0, 66.0),
            density: 0.05,
            rule: GraphRule::EpsilonBall(0.15),
            t_grid: Some(log_grid(4.0, 64.0, 9)),
            pancake_m: None,
            center_p: None,
            tangent_band: None,
            known: vec![KnownFact {
                quantity: "link-equivalence",
                expected: "DisconnectedLink reported, no verdict",
                oracle: "by construction: each link is two points one apart",
            }],
        },
        _ => return None,
    };
    Some(entry)
}
