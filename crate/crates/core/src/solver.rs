//! End-to-end pipeline: train, read out, refine by local search, score.
//!
//! Cut values count `W(1 − x_i x_j)` per edge, i.e. twice the weight of every
//! cut edge. Best-known values follow the benchmark convention of counting each
//! cut edge once, so ratios against them use `cut / (2·best_known)`.

use serde::{Deserialize, Serialize};

use crate::encoding::{assignment_from_expectations, build_encoding, min_qubits};
use crate::error::{Error, Result};
use crate::graph::{check_len, cut_value_unchecked, exact_maxcut, Assignment, Graph, EXACT_MAXCUT_LIMIT};
use crate::loss::{default_alpha, LossForm, LossSpec, DEFAULT_BETA};
use crate::sim::{build_brickwork, default_layers, evaluate, SIM_QUBIT_LIMIT};
use crate::training::{train, TrainConfig, TrainTrace};

/// Work done by one local-search round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSearchStats {
    pub flips: usize,
    pub edge_touches: usize,
}

fn flip_gain(g: &Graph, x: &[i8], i: usize, touches: &mut usize) -> f64 {
    let nbrs = g.neighbors(i);
    *touches += nbrs.len();
    let xi = f64::from(x[i]);
    nbrs.iter().map(|&(j, w)| 2.0 * w * xi * f64::from(x[j])).sum()
}

fn improves(gain: f64, g: &Graph, i: usize) -> bool {
    gain > 1e-12 * (1.0 + g.degree(i))
}

/// One sequential pass of single-bit flips in vertex order, keeping strict improvements.
pub fn local_search_with_stats(g: &Graph, x: &Assignment) -> Result<(Assignment, LocalSearchStats)> {
    check_len(g, x)?;
    let mut bits = x.as_slice().to_vec();
    let mut stats = LocalSearchStats::default();
    for i in 0..bits.len() {
        let gain = flip_gain(g, &bits, i, &mut stats.edge_touches);
        if improves(gain, g, i) {
            bits[i] = -bits[i];
            stats.flips += 1;
        }
    }
    Ok((Assignment::new(bits)?, stats))
}

pub fn local_search(g: &Graph, x: &Assignment) -> Result<Assignment> {
    Ok(local_search_with_stats(g, x)?.0)
}

/// Repeat rounds until no single flip improves the cut.
pub fn local_search_to_convergence(g: &Graph, x: &Assignment) -> Result<Assignment> {
    let mut cur = x.clone();
    loop {
        let (next, stats) = local_search_with_stats(g, &cur)?;
        if stats.flips == 0 {
            return Ok(next);
        }
        cur = next;
    }
}

/// Vertices whose flip would strictly increase the cut.
pub fn improving_flips(g: &Graph, x: &Assignment) -> Result<Vec<usize>> {
    check_len(g, x)?;
    let mut touches = 0;
    Ok((0..x.len())
        .filter(|&i| improves(flip_gain(g, x.as_slice(), i, &mut touches), g, i))
        .collect())
}

pub fn approximation_ratio(cut: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::InvalidArgument(format!("reference must be positive, got {reference}")));
    }
    Ok(cut / reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    pub k: usize,
    /// Brickwork layers; `None` takes one layer per `n` variables.
    pub layers: Option<usize>,
    /// Loss sharpness; `None` resolves via [`default_alpha`].
    pub alpha: Option<f64>,
    pub beta: f64,
    pub form: LossForm,
    pub train: TrainConfig,
    /// Best-known cut, counting each cut edge once.
    pub best_known: Option<f64>,
    /// Score against brute force when `m` allows it.
    pub exact_reference: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            k: 2,
            layers: None,
            alpha: None,
            beta: DEFAULT_BETA,
            form: LossForm::default(),
            train: TrainConfig::default(),
            best_known: None,
            exact_reference: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_star: Assignment,
    pub cut: f64,
    /// `cut / (2·best_known)` when a best-known value was supplied.
    pub ratio: Option<f64>,
    /// `cut / exact_maxcut` for small graphs.
    pub ratio_exact: Option<f64>,
    /// Sign readout before local search.
    pub readout: Assignment,
    pub readout_cut: f64,
    pub readout_ratio_exact: Option<f64>,
    pub exact_cut: Option<f64>,
    pub num_qubits: usize,
    pub layers: usize,
    pub two_qubit_gates: usize,
    pub alpha: f64,
    pub epochs: usize,
    pub expectations_final: Vec<f64>,
    pub trace: TrainTrace,
}

/// Qubit count for `m` variables at body order `k`, refusing registers beyond the simulator cap.
pub fn qubits_for(m: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidArgument("body order k must be ≥ 1".into()));
    }
    let n = min_qubits(m, k).max(2);
    if n > SIM_QUBIT_LIMIT {
        return Err(Error::TooLarge {
            what: "qubit count",
            size: n,
            limit: SIM_QUBIT_LIMIT,
            hint: "choose a larger body order k",
        });
    }
    Ok(n)
}

pub fn solve(g: &Graph, opts: &SolveOptions) -> Result<SolveResult> {
    let m = g.num_vertices();
    let n = qubits_for(m, opts.k)?;
    let layers = opts.layers.unwrap_or_else(|| default_layers(m, n, 1.0));
    let alpha = opts.alpha.unwrap_or_else(|| default_alpha(n, opts.k));
    let circ = build_brickwork(n, layers)?;
    let exact_cut = (opts.exact_reference && m <= EXACT_MAXCUT_LIMIT)
        .then(|| exact_maxcut(g).map(|(c, _)| c))
        .transpose()?;

    if g.num_edges() == 0 {
        let x = Assignment::all_plus(m);
        return Ok(SolveResult {
            readout: x.clone(),
            x_star: x,
            cut: 0.0,
            ratio: opts.best_known.map(|_| 1.0),
            ratio_exact: exact_cut.map(|_| 1.0),
            readout_cut: 0.0,
            readout_ratio_exact: exact_cut.map(|_| 1.0),
            exact_cut,
            num_qubits: n,
            layers,
            two_qubit_gates: circ.two_qubit_gate_count(),
            alpha,
            epochs: 0,
            expectations_final: Vec::new(),
            trace: TrainTrace {
                losses: Vec::new(),
                epochs: 0,
                best_loss: f64::NAN,
                best_epoch: 0,
                final_params: Vec::new(),
                wall_time_secs: 0.0,
            },
        });
    }

    let enc = build_encoding(n, opts.k, m)?;
    let spec = LossSpec::new(g, &enc, alpha, opts.beta)?.with_form(opts.form);
    let (theta, trace) = train(&circ, &spec, &opts.train)?;
    let expectations = evaluate(&circ, &theta, &spec)?.expectations;
    let readout = assignment_from_expectations(&expectations);
    let readout_cut = cut_value_unchecked(g, readout.as_slice());
    let x_star = local_search(g, &readout)?;
    let cut = cut_value_unchecked(g, x_star.as_slice());
    let ratio_to = |c: f64, reference: f64| if reference > 0.0 { c / reference } else { 1.0 };
    let ratio = opts
        .best_known
        .map(|b| approximation_ratio(cut, 2.0 * b))
        .transpose()?;
    Ok(SolveResult {
        ratio,
        ratio_exact: exact_cut.map(|e| ratio_to(cut, e)),
        readout_ratio_exact: exact_cut.map(|e| ratio_to(readout_cut, e)),
        exact_cut,
        x_star,
        cut,
        readout,
        readout_cut,
        num_qubits: n,
        layers,
        two_qubit_gates: circ.two_qubit_gate_count(),
        alpha,
        epochs: trace.epochs,
        expectations_final: expectations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::graph::{cut_value, generate_random_instance};
    use crate::rng;

    fn triangle() -> Graph {
        Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn optimum_of_k2_is_unchanged() {
        let g = Graph::unweighted(2, &[(0, 1)]).unwrap();
        let x = Assignment::new(vec![1, -1]).unwrap();
        let (y, stats) = local_search_with_stats(&g, &x).unwrap();
        assert_eq!(y, x);
        assert_eq!(stats.flips, 0);
    }

    #[test]
    fn triangle_hand_trace() {
        let g = triangle();
        let (y, stats) = local_search_with_stats(&g, &Assignment::all_plus(3)).unwrap();
        // vertex 0 flips (gain 4); afterwards vertex 1 and 2 each have gain 0
        assert_eq!(y.as_slice(), &[-1, 1, 1]);
        assert_eq!(stats.flips, 1);
        assert_eq!(cut_value(&g, &y).unwrap(), 4.0);
        assert_eq!(stats.edge_touches, 6);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(local_search(&triangle(), &Assignment::all_plus(2)).is_err());
    }

    #[test]
    fn sequential_pass_audit() {
        let mut r = rng::seeded(5);
        for seed in 0..20 {
            let g = generate_random_instance(18, 4.0, seed).unwrap();
            for _ in 0..10 {
                let x = Assignment::random(18, &mut r);
                let (y, stats) = local_search_with_stats(&g, &x).unwrap();
                assert!(cut_value(&g, &y).unwrap() >= cut_value(&g, &x).unwrap());
                assert!(stats.edge_touches <= 4 * g.num_edges());
                // replay: at each index, the flip is taken iff it improved the then-current state
                let mut cur = x.as_slice().to_vec();
                for i in 0..18 {
                    let before = cut_value_unchecked(&g, &cur);
                    cur[i] = -cur[i];
                    let after = cut_value_unchecked(&g, &cur);
                    if after <= before {
                        cur[i] = -cur[i];
                    }
                    assert_eq!(cur[i], y.get(i), "index {i}");
                }
                let z = local_search_to_convergence(&g, &x).unwrap();
                assert!(improving_flips(&g, &z).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approximation_ratio(4.0, 4.0).unwrap(), 1.0);
        let x = 3064.0;
        assert!((approximation_ratio(0.941 * x, x).unwrap() - 0.941).abs() < 1e-12);
        assert!((approximation_ratio(16.0 / 17.0 * x, x).unwrap() - 0.941).abs() < 1e-3);
        assert!((approximation_ratio(0.878 * x, x).unwrap() - 0.878).abs() < 1e-12);
        assert!(approximation_ratio(1.0, 0.0).is_err());
        assert!(approximation_ratio(1.0, -2.0).is_err());
    }

    #[test]
    fn edgeless_graph_short_circuits() {
        let g = Graph::new(5, vec![]).unwrap();
        let res = solve(&g, &SolveOptions { best_known: Some(0.0), ..SolveOptions::default() }).unwrap();
        assert_eq!(res.cut, 0.0);
        assert_eq!(res.ratio, Some(1.0));
        assert_eq!(res.ratio_exact, Some(1.0));
    }

    #[test]
    fn qubit_cap_recommends_larger_k() {
        let err = qubits_for(2000, 1).unwrap_err();
        assert!(err.to_string().contains("larger body order k"), "{err}");
        assert_eq!(qubits_for(2000, 3).unwrap(), 17);
    }

    #[test]
    fn solve_is_deterministic_and_consistent() {
        let g = generate_random_instance(12, 4.0, 3).unwrap();
        let opts = SolveOptions {
            layers: Some(3),
            train: TrainConfig { max_epochs: 200, learning_rate: 0.01, ..TrainConfig::default() }.with_seed(4),
            best_known: Some(10.0),
            ..SolveOptions::default()
        };
        let a = solve(&g, &opts).unwrap();
        let b = solve(&g, &opts).unwrap();
        assert_eq!(a.x_star, b.x_star);
        assert_eq!(a.trace.losses, b.trace.losses);
        assert_eq!(a.cut, cut_value(&g, &a.x_star).unwrap());
        assert!(a.cut >= a.readout_cut);
        assert_eq!(a.ratio, Some(a.cut / 20.0));
        assert!(a.ratio_exact.unwrap() <= 1.0 + 1e-12);
        assert_eq!(a.num_qubits, 4);
        assert_eq!(a.epochs, a.trace.epochs);

        // negating every correlator mirrors the readout and keeps the cut
        let neg: Vec<f64> = a.expectations_final.iter().map(|e| -e).collect();
        if a.expectations_final.iter().all(|&e| e != 0.0) {
            let mirrored = assignment_from_expectations(&neg);
            assert_eq!(mirrored, a.readout.negated());
            assert_eq!(cut_value(&g, &mirrored).unwrap(), a.readout_cut);
        }
    }

    proptest! {
        #[test]
        fn local_search_never_decreases_cut(seed in 0u64..1000, m in 4usize..30, p in 0.1f64..0.9) {
            let mut r = rng::seeded(seed);
            let mut edges = Vec::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    if rand::Rng::random::<f64>(&mut r) < p {
                        edges.push(crate::graph::Edge { u: i, v: j, w: rand::Rng::random_range(&mut r, -2.0..3.0) });
                    }
                }
            }
            let g = Graph::new(m, edges).unwrap();
            let x = Assignment::random(m, &mut r);
            let y = local_search(&g, &x).unwrap();
            prop_assert!(cut_value(&g, &y).unwrap() >= cut_value(&g, &x).unwrap() - 1e-9);
            let z = local_search_to_convergence(&g, &x).unwrap();
            prop_assert!(improving_flips(&g, &z).unwrap().is_empty());
        }
    }
}
