//! Numerical checks of the method's quantitative laws: loss-variance plateaus,
//! the shot-count bound, the parent Hamiltonian, loss-form ablations and gate budgets.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    build_encoding, dense_expectation, estimate_from_counts, min_qubits, witness_with_magnitude, Encoding,
    PauliString, DENSE_QUBIT_LIMIT,
};
use crate::error::{Error, Result};
use crate::graph::{cut_value_unchecked, exact_maxcut, generate_random_instance, Assignment, Graph, EXACT_MAXCUT_LIMIT};
use crate::loss::{loss_value, LossForm, LossSpec};
use crate::rng;
use crate::sim::{build_brickwork, encoding_expectations, run, sample_family_counts};
use crate::solver::{local_search_to_convergence, solve, SolveOptions};
use crate::training::init_params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauOptions {
    pub n: usize,
    pub k: usize,
    pub layers: usize,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub form: LossForm,
    /// Bootstrap resamples for the variance confidence interval; 0 skips it.
    pub bootstrap: usize,
}

impl PlateauOptions {
    /// Depth `9n` layers, `α = 1`, `β = 0.5`, tanh+reg, 1000 trials.
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        PlateauOptions {
            n,
            k,
            layers: 9 * n,
            trials: 1000,
            seed,
            alpha: 1.0,
            beta: 0.5,
            form: LossForm::TanhReg,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub layers: usize,
    pub trials: usize,
    pub alpha: f64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub sum_squared_weights: f64,
    /// `variance / (α⁴ Σ W²)`.
    pub normalized: f64,
    /// Leading term `2^(−2n)`.
    pub predicted: f64,
    /// 95% percentile-bootstrap interval of the normalized variance.
    pub normalized_ci: Option<(f64, f64)>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sample the loss at `trials` uniform parameter draws.
pub fn plateau_variance(instance: &Graph, opts: &PlateauOptions) -> Result<VarianceReport> {
    if opts.trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {}", opts.trials)));
    }
    let enc = build_encoding(opts.n, opts.k, instance.num_vertices())?;
    let spec = LossSpec::new(instance, &enc, opts.alpha, opts.beta)?.with_form(opts.form);
    let circ = build_brickwork(opts.n, opts.layers)?;
    let losses = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let theta = init_params(circ.num_params(), rng::derive_seed(opts.seed, &[t as u64]))?;
            let psi = run(&circ, &theta)?;
            loss_value(&encoding_expectations(&psi, &enc), &spec)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, variance) = mean_var(&losses);
    let sw2 = instance.sum_squared_weights();
    let norm = opts.alpha.powi(4) * sw2;
    let normalized_ci = (opts.bootstrap > 0 && norm > 0.0).then(|| {
        let mut r = rng::seeded(rng::derive_seed(opts.seed, &[u64::MAX]));
        let mut stats: Vec<f64> = (0..opts.bootstrap)
            .map(|_| {
                let resample: Vec<f64> = (0..losses.len()).map(|_| losses[r.random_range(0..losses.len())]).collect();
                mean_var(&resample).1 / norm
            })
            .collect();
        stats.sort_by(f64::total_cmp);
        let q = |p: f64| stats[((p * (stats.len() - 1) as f64).round()) as usize];
        (q(0.025), q(0.975))
    });
    Ok(VarianceReport {
        n: opts.n,
        k: opts.k,
        m: instance.num_vertices(),
        layers: opts.layers,
        trials: opts.trials,
        alpha: opts.alpha,
        mean,
        mean_stderr: (variance / losses.len() as f64).sqrt(),
        variance,
        sum_squared_weights: sw2,
        normalized: if norm > 0.0 { variance / norm } else { f64::NAN },
        predicted: 2f64.powi(-2 * opts.n as i32),
        normalized_ci,
    })
}

/// Shots per family sufficient for `|𝓛_est − 𝓛| ≤ ε` with probability `1 − δ`:
/// `⌊(4α²/ε²)(6|E| + m)² ln(2m/δ)⌋`.
pub fn sample_bound(epsilon: f64, delta: f64, g: &Graph, alpha: f64) -> Result<u64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(epsilon) && epsilon != 1.0 || !open(delta) {
        return Err(Error::InvalidArgument(format!(
            "need ε ∈ (0, 1] and δ ∈ (0, 1), got {epsilon} and {delta}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("α must be positive, got {alpha}")));
    }
    let m = g.num_vertices() as f64;
    let e = g.num_edges() as f64;
    let s = 4.0 * alpha * alpha / (epsilon * epsilon) * (6.0 * e + m).powi(2) * (2.0 * m / delta).ln();
    Ok(s.floor() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValidation {
    pub shots: u64,
    pub repetitions: usize,
    pub within: usize,
    pub exact_loss: f64,
    pub max_error: f64,
}

/// Estimate the loss from `shots` samples per family at one random circuit state, repeatedly.
pub fn validate_sample_bound(
    spec: &LossSpec<'_>,
    layers: usize,
    epsilon: f64,
    shots: u64,
    repetitions: usize,
    seed: u64,
) -> Result<BoundValidation> {
    let enc = spec.encoding();
    let circ = build_brickwork(enc.num_qubits(), layers)?;
    let theta = init_params(circ.num_params(), seed)?;
    let psi = run(&circ, &theta)?;
    let exact_loss = loss_value(&encoding_expectations(&psi, enc), spec)?;
    let errors = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let counts = sample_family_counts(&psi, shots, rng::derive_seed(seed, &[rep as u64]))?;
            Ok((loss_value(&estimate_from_counts(enc, &counts)?, spec)? - exact_loss).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundValidation {
        shots,
        repetitions,
        within: errors.iter().filter(|&&e| e <= epsilon).count(),
        exact_loss,
        max_error: errors.iter().copied().fold(0.0, f64::max),
    })
}

/// Largest-degree-first greedy coloring; vertex `i` gets `colors[i]`.
pub fn greedy_coloring(g: &Graph) -> Vec<usize> {
    let m = g.num_vertices();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(g.neighbors(i).len()));
    let mut colors = vec![usize::MAX; m];
    let mut taken = Vec::new();
    for &v in &order {
        taken.clear();
        taken.extend(
            g.neighbors(v)
                .iter()
                .map(|&(u, _)| colors[u])
                .filter(|&c| c != usize::MAX),
        );
        taken.sort_unstable();
        taken.dedup();
        colors[v] = taken.iter().enumerate().take_while(|(i, c)| i == *c).count();
    }
    colors
}

pub fn is_proper_coloring(g: &Graph, colors: &[usize]) -> bool {
    colors.len() == g.num_vertices() && g.edges().iter().all(|e| colors[e.u] != colors[e.v])
}

/// One color class: its vertices on a private qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorBlock {
    pub vertices: Vec<usize>,
    pub encoding: Encoding,
    pub qubit_offset: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTerm {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// `H = Σ_e W_e (I − Π_u ⊗ Π_v / (γ_c γ_c′))` over a proper coloring.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentHamiltonian {
    pub coloring: Vec<usize>,
    pub blocks: Vec<ColorBlock>,
    /// Position of each vertex inside its color block.
    pub slot: Vec<usize>,
    pub terms: Vec<EdgeTerm>,
}

impl ParentHamiltonian {
    pub fn total_qubits(&self) -> usize {
        self.blocks.iter().map(|b| b.encoding.num_qubits()).sum()
    }

    pub fn num_colors(&self) -> usize {
        self.blocks.len()
    }

    /// The pair of strings forming `O_e`, supports shifted to global qubits.
    pub fn term_strings(&self, t: &EdgeTerm) -> Result<(PauliString, PauliString)> {
        let shifted = |v: usize| {
            let b = &self.blocks[self.coloring[v]];
            let p = &b.encoding.strings()[self.slot[v]];
            PauliString::new(p.axis(), p.support().iter().map(|q| q + b.qubit_offset).collect())
        };
        Ok((shifted(t.u)?, shifted(t.v)?))
    }

    pub fn coefficient(&self, t: &EdgeTerm) -> f64 {
        t.weight / (self.blocks[self.coloring[t.u]].gamma * self.blocks[self.coloring[t.v]].gamma)
    }

    /// Replace `γ_c` for one color, in both the witness states and the coefficients.
    pub fn with_gamma(mut self, color: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || color >= self.blocks.len() {
            return Err(Error::InvalidArgument(format!("bad γ override ({color}, {gamma})")));
        }
        self.blocks[color].gamma = gamma;
        Ok(self)
    }
}

pub fn build_parent_hamiltonian(g: &Graph, k: usize) -> Result<ParentHamiltonian> {
    let coloring = greedy_coloring(g);
    let num_colors = coloring.iter().copied().max().map_or(0, |c| c + 1);
    let mut members = vec![Vec::new(); num_colors];
    let mut slot = vec![0; g.num_vertices()];
    for (v, &c) in coloring.iter().enumerate() {
        slot[v] = members[c].len();
        members[c].push(v);
    }
    let mut blocks = Vec::with_capacity(num_colors);
    let mut offset = 0;
    for vertices in members {
        let m_c = vertices.len();
        let encoding = build_encoding(min_qubits(m_c, k), k, m_c)?;
        let n_c = encoding.num_qubits();
        blocks.push(ColorBlock {
            vertices,
            encoding,
            qubit_offset: offset,
            gamma: 1.0 / m_c as f64,
        });
        offset += n_c;
    }
    let terms = g
        .edges()
        .iter()
        .map(|e| EdgeTerm { u: e.u, v: e.v, weight: e.w })
        .collect();
    Ok(ParentHamiltonian {
        coloring,
        blocks,
        slot,
        terms,
    })
}

const PARENT_VERIFY_LIMIT: usize = 12;

fn block_witness(b: &ColorBlock, x: &Assignment) -> Result<DMatrix<Complex64>> {
    let bits = Assignment::new(b.vertices.iter().map(|&v| x.get(v)).collect())?;
    witness_with_magnitude(&bits, &b.encoding, b.gamma)
}

/// `Tr[(A ⊗ B) ρ]` for commuting single-axis strings on disjoint qubits.
fn product_term(rho: &DMatrix<Complex64>, a: &PauliString, b: &PauliString) -> Complex64 {
    (0..rho.nrows())
        .map(|col| {
            let (mid, ca) = a.apply_to_basis(col);
            let (row, cb) = b.apply_to_basis(mid);
            ca * cb * rho[(col, row)]
        })
        .sum()
}

/// `|Tr[H ρ(x)] − 𝒱(x)|` with `ρ(x)` the product of per-color witness states.
pub fn verify_parent_hamiltonian(ph: &ParentHamiltonian, g: &Graph, x: &Assignment) -> Result<f64> {
    let total = ph.total_qubits();
    if total > PARENT_VERIFY_LIMIT {
        return Err(Error::TooLarge {
            what: "parent Hamiltonian register",
            size: total,
            limit: PARENT_VERIFY_LIMIT,
            hint: "verify on a graph with fewer or smaller color classes",
        });
    }
    if x.len() != g.num_vertices() || ph.coloring.len() != g.num_vertices() {
        return Err(Error::LengthMismatch {
            expected: g.num_vertices(),
            actual: x.len(),
        });
    }
    let states = ph
        .blocks
        .iter()
        .map(|b| block_witness(b, x))
        .collect::<Result<Vec<_>>>()?;
    let mut energy = 0.0;
    if total <= DENSE_QUBIT_LIMIT {
        // qubit 0 is least significant, so later blocks sit on the left of the product
        let rho = states
            .iter()
            .fold(DMatrix::identity(1, 1), |acc: DMatrix<Complex64>, s| s.kronecker(&acc));
        for t in &ph.terms {
            let (a, b) = ph.term_strings(t)?;
            energy += t.weight - ph.coefficient(t) * product_term(&rho, &a, &b).re;
        }
    } else {
        for t in &ph.terms {
            let (bu, bv) = (ph.coloring[t.u], ph.coloring[t.v]);
            let eu = dense_expectation(&states[bu], &ph.blocks[bu].encoding.strings()[ph.slot[t.u]]).re;
            let ev = dense_expectation(&states[bv], &ph.blocks[bv].encoding.strings()[ph.slot[t.v]]).re;
            energy += t.weight - ph.coefficient(t) * eu * ev;
        }
    }
    Ok((energy - cut_value_unchecked(g, x.as_slice())).abs())
}

/// Histogram of correlators over `bins` equal cells of `[−1, 1]`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        let cell = (((v.clamp(-1.0, 1.0) + 1.0) / 2.0) * bins as f64).floor() as usize;
        h[cell.min(bins - 1)] += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationVariant {
    pub form: LossForm,
    pub runs: usize,
    pub histogram: Vec<u64>,
    pub mean_abs_expectation: f64,
    /// Fraction of correlators with `|e| > 0.9`.
    pub tail_fraction: f64,
    pub mean_ratio: f64,
    pub mean_readout_ratio: f64,
}

/// Best cut used as a ratio reference: exact for small graphs, else the best of converged restarts.
pub fn reference_cut(g: &Graph, seed: u64) -> Result<f64> {
    if g.num_vertices() <= EXACT_MAXCUT_LIMIT {
        return Ok(exact_maxcut(g)?.0);
    }
    let mut r = rng::seeded(seed);
    let mut best = 0.0f64;
    for _ in 0..50 {
        let x = local_search_to_convergence(g, &Assignment::random(g.num_vertices(), &mut r))?;
        best = best.max(cut_value_unchecked(g, x.as_slice()));
    }
    Ok(best)
}

/// Train every loss form on every instance and seed, pooling final correlators.
pub fn ablation_histograms(
    instances: &[Graph],
    forms: &[LossForm],
    seeds: &[u64],
    base: &SolveOptions,
    bins: usize,
) -> Result<Vec<AblationVariant>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one histogram bin".into()));
    }
    let references = instances
        .par_iter()
        .enumerate()
        .map(|(i, g)| reference_cut(g, i as u64))
        .collect::<Result<Vec<f64>>>()?;
    let distinct: BTreeSet<_> = forms.iter().map(|f| f.name()).collect();
    if distinct.len() != forms.len() {
        return Err(Error::InvalidArgument("loss forms must be distinct".into()));
    }
    forms
        .iter()
        .map(|&form| {
            let jobs: Vec<(usize, u64)> = (0..instances.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
            let runs = jobs
                .par_iter()
                .map(|&(i, s)| {
                    let opts = SolveOptions {
                        form,
                        train: base.train.with_seed(s),
                        exact_reference: false,
                        ..*base
                    };
                    let res = solve(&instances[i], &opts)?;
                    let reference = references[i];
                    let ratio = |c: f64| if reference > 0.0 { c / reference } else { 1.0 };
                    Ok((res.expectations_final, ratio(res.cut), ratio(res.readout_cut)))
                })
                .collect::<Result<Vec<_>>>()?;
            let pooled: Vec<f64> = runs.iter().flat_map(|r| r.0.iter().copied()).collect();
            let count = runs.len().max(1) as f64;
            let pooled_len = pooled.len().max(1) as f64;
            Ok(AblationVariant {
                form,
                runs: runs.len(),
                histogram: histogram(&pooled, bins),
                mean_abs_expectation: pooled.iter().map(|e| e.abs()).sum::<f64>() / pooled_len,
                tail_fraction: pooled.iter().filter(|e| e.abs() > 0.9).count() as f64 / pooled_len,
                mean_ratio: runs.iter().map(|r| r.1).sum::<f64>() / count,
                mean_readout_ratio: runs.iter().map(|r| r.2).sum::<f64>() / count,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub n: usize,
    /// Minimal layer count reaching the target, `None` when censored.
    pub layers: Option<usize>,
    pub two_qubit_gates: Option<usize>,
    pub mean_readout_ratio: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    pub k: usize,
    pub target_mean_ratio: f64,
    pub seeds: usize,
    pub max_layers: usize,
    pub mean_degree: f64,
    pub seed: u64,
}

fn mean_readout_ratio(instances: &[(Graph, f64)], layers: usize, opts: &SweepOptions, base: &SolveOptions) -> Result<f64> {
    let ratios = instances
        .par_iter()
        .enumerate()
        .map(|(s, (g, reference))| {
            let o = SolveOptions {
                k: opts.k,
                layers: Some(layers),
                exact_reference: false,
                train: base.train.with_seed(rng::derive_seed(opts.seed, &[s as u64, 1])),
                ..*base
            };
            let res = solve(g, &o)?;
            Ok(if *reference > 0.0 { res.readout_cut / reference } else { 1.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Minimal MS-gate count whose readout-only mean ratio reaches the target, per `m`.
pub fn gate_budget_sweep(m_values: &[usize], opts: &SweepOptions, base: &SolveOptions) -> Result<Vec<SweepPoint>> {
    if opts.seeds == 0 || opts.max_layers == 0 {
        return Err(Error::InvalidArgument("sweep needs ≥ 1 seed and ≥ 1 layer".into()));
    }
    m_values
        .iter()
        .map(|&m| {
            let n = crate::solver::qubits_for(m, opts.k)?;
            let instances = (0..opts.seeds)
                .map(|s| {
                    let g = generate_random_instance(m, opts.mean_degree, rng::derive_seed(opts.seed, &[m as u64, s as u64]))?;
                    let reference = reference_cut(&g, s as u64)?;
                    Ok((g, reference))
                })
                .collect::<Result<Vec<_>>>()?;
            let top = mean_readout_ratio(&instances, opts.max_layers, opts, base)?;
            if top < opts.target_mean_ratio {
                return Ok(SweepPoint {
                    m,
                    n,
                    layers: None,
                    two_qubit_gates: None,
                    mean_readout_ratio: top,
                    censored: true,
                });
            }
            let (mut lo, mut hi, mut at_hi) = (1, opts.max_layers, top);
            while lo < hi {
                let mid = (lo + hi) / 2;
                let r = mean_readout_ratio(&instances, mid, opts, base)?;
                if r >= opts.target_mean_ratio {
                    hi = mid;
                    at_hi = r;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(SweepPoint {
                m,
                n,
                layers: Some(hi),
                two_qubit_gates: Some(build_brickwork(n, hi)?.two_qubit_gate_count()),
                mean_readout_ratio: at_hi,
                censored: false,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::graph::Edge;
    use crate::training::TrainConfig;

    fn triangle() -> Graph {
        Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn random_graph(m: usize, p: f64, seed: u64) -> Graph {
        let mut r = rng::seeded(seed);
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if r.random::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        Graph::unweighted(m, &pairs).unwrap()
    }

    #[test]
    fn sample_bound_arithmetic() {
        let k2 = Graph::unweighted(2, &[(0, 1)]).unwrap();
        assert_eq!(sample_bound(1.0, 0.5, &k2, 1.0).unwrap(), 532);
        let exact = 256.0 * 8f64.ln();
        assert_eq!(sample_bound(1.0, 0.5, &k2, 1.0).unwrap(), exact.floor() as u64);
        let g = triangle();
        let a = sample_bound(0.2, 0.1, &g, 2.0).unwrap() as f64;
        let b = sample_bound(0.1, 0.1, &g, 2.0).unwrap() as f64;
        assert!((b - 4.0 * a).abs() <= 4.0);
        assert!(sample_bound(0.0, 0.1, &g, 1.0).is_err());
        assert!(sample_bound(0.1, 1.0, &g, 1.0).is_err());
        assert!(sample_bound(1.5, 0.1, &g, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn sample_bound_monotonicity(e1 in 0.01f64..0.99, e2 in 0.01f64..0.99, d1 in 0.01f64..0.99, d2 in 0.01f64..0.99, a1 in 0.1f64..10.0, a2 in 0.1f64..10.0) {
            let g = triangle();
            let (elo, ehi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let (dlo, dhi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let (alo, ahi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            prop_assert!(sample_bound(elo, 0.1, &g, 1.0).unwrap() >= sample_bound(ehi, 0.1, &g, 1.0).unwrap());
            prop_assert!(sample_bound(0.3, dlo, &g, 1.0).unwrap() >= sample_bound(0.3, dhi, &g, 1.0).unwrap());
            prop_assert!(sample_bound(0.3, 0.1, &g, alo).unwrap() <= sample_bound(0.3, 0.1, &g, ahi).unwrap());
            let bigger = Graph::unweighted(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
            let more_vertices = Graph::unweighted(4, &[(0, 1), (1, 2), (0, 2)]).unwrap();
            prop_assert!(sample_bound(elo, dlo, &g, alo).unwrap() <= sample_bound(elo, dlo, &more_vertices, alo).unwrap());
            prop_assert!(sample_bound(elo, dlo, &more_vertices, alo).unwrap() <= sample_bound(elo, dlo, &bigger, alo).unwrap());
        }

        #[test]
        fn greedy_coloring_is_proper(m in 1usize..40, p in 0.0f64..1.0, seed in 0u64..1000) {
            let g = random_graph(m, p, seed);
            let colors = greedy_coloring(&g);
            prop_assert!(is_proper_coloring(&g, &colors));
            prop_assert!(*colors.iter().max().unwrap() <= g.max_degree());
        }
    }

    #[test]
    fn bound_validation_small_instance() {
        let g = generate_random_instance(9, 4.0, 3).unwrap();
        let enc = build_encoding(3, 2, 9).unwrap();
        let spec = LossSpec::new(&g, &enc, 1.0, 0.5).unwrap();
        let eps = 0.5;
        let shots = sample_bound(eps, 0.1, &g, 1.0).unwrap();
        let v = validate_sample_bound(&spec, 3, eps, shots, 20, 1).unwrap();
        assert_eq!(v.within, 20, "max error {}", v.max_error);
        let few = validate_sample_bound(&spec, 3, 1e-4, 10, 20, 1).unwrap();
        assert!(few.within < 20);
    }

    #[test]
    fn coloring_examples() {
        assert_eq!(greedy_coloring(&Graph::new(4, vec![]).unwrap()), vec![0; 4]);
        let tri = greedy_coloring(&triangle());
        assert_eq!(tri.iter().collect::<BTreeSet<_>>().len(), 3);
        // star with its center at the last index
        let star = Graph::unweighted(6, &[(5, 0), (5, 1), (5, 2), (5, 3), (5, 4)]).unwrap();
        assert_eq!(greedy_coloring(&star), vec![1, 1, 1, 1, 1, 0]);
    }

    #[test]
    fn triangle_parent_hamiltonian() {
        let g = triangle();
        let ph = build_parent_hamiltonian(&g, 1).unwrap();
        assert_eq!(ph.num_colors(), 3);
        assert!(ph.blocks.iter().all(|b| b.vertices.len() == 1 && b.encoding.num_qubits() == 1));
        let x = Assignment::new(vec![1, -1, 1]).unwrap();
        assert_eq!(cut_value_unchecked(&g, x.as_slice()), 4.0);
        assert!(verify_parent_hamiltonian(&ph, &g, &x).unwrap() < 1e-9);
        for t in &ph.terms {
            let (a, b) = ph.term_strings(t).unwrap();
            assert!(a.support().iter().all(|q| !b.support().contains(q)));
        }
    }

    #[test]
    fn parent_hamiltonian_exhaustive_small_graphs() {
        for seed in 0..10 {
            let m = 3 + seed as usize % 6;
            let g = random_graph(m, 0.5, seed);
            let ph = build_parent_hamiltonian(&g, 1).unwrap();
            assert!(is_proper_coloring(&g, &ph.coloring));
            let max_block = ph.blocks.iter().map(|b| b.vertices.len()).max().unwrap();
            assert!(ph.total_qubits() <= ph.num_colors() * min_qubits(max_block, 1));
            for mask in 0..(1u64 << m) {
                let x = Assignment::from_mask(mask, m);
                assert!(verify_parent_hamiltonian(&ph, &g, &x).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn parent_hamiltonian_gamma_is_immaterial() {
        let g = random_graph(7, 0.6, 4);
        let ph = build_parent_hamiltonian(&g, 1).unwrap().with_gamma(0, 0.05).unwrap();
        for mask in 0..(1u64 << 7) {
            let x = Assignment::from_mask(mask, 7);
            assert!(verify_parent_hamiltonian(&ph, &g, &x).unwrap() < 1e-9);
        }
        assert!(build_parent_hamiltonian(&g, 1).unwrap().with_gamma(0, 0.0).is_err());
    }

    #[test]
    fn parent_hamiltonian_factorized_path_and_guard() {
        // bipartite, two color classes of 16 vertices: 6 + 6 qubits
        let mut edges = Vec::new();
        for i in 0..16 {
            edges.push(Edge { u: i, v: 16 + i, w: 1.0 + i as f64 / 7.0 });
            edges.push(Edge { u: i, v: 16 + (i + 3) % 16, w: -0.5 });
        }
        let g = Graph::new(32, edges).unwrap();
        let ph = build_parent_hamiltonian(&g, 1).unwrap();
        assert_eq!(ph.total_qubits(), 12);
        let mut r = rng::seeded(1);
        for _ in 0..5 {
            let x = Assignment::random(32, &mut r);
            assert!(verify_parent_hamiltonian(&ph, &g, &x).unwrap() < 1e-9);
        }
        let wide = random_graph(60, 0.2, 1);
        let ph = build_parent_hamiltonian(&wide, 1).unwrap();
        assert!(ph.total_qubits() > 12);
        let x = Assignment::all_plus(60);
        assert!(matches!(verify_parent_hamiltonian(&ph, &wide, &x), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn plateau_report_fields() {
        let g = generate_random_instance(9, 4.0, 1).unwrap();
        let mut opts = PlateauOptions::new(3, 1, 7);
        opts.trials = 200;
        let rep = plateau_variance(&g, &opts).unwrap();
        assert_eq!(rep.layers, 27);
        assert!(rep.normalized > 0.0);
        assert_eq!(rep.predicted, 1.0 / 64.0);
        let (lo, hi) = rep.normalized_ci.unwrap();
        assert!(lo <= rep.normalized && rep.normalized <= hi);
        assert_eq!(rep, plateau_variance(&g, &opts).unwrap());
        opts.trials = 1;
        assert!(plateau_variance(&g, &opts).is_err());
    }

    #[test]
    fn plateau_mean_is_near_zero_and_instance_invariant() {
        // equal edge counts give equal Σ W², the only graph dependence of the leading term
        let edge_count = 30;
        let graphs: Vec<Graph> = (0..2)
            .map(|s| {
                let mut r = rng::seeded(50 + s);
                let mut pairs = BTreeSet::new();
                while pairs.len() < edge_count {
                    let (a, b) = (r.random_range(0..18), r.random_range(0..18));
                    if a != b {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
                Graph::unweighted(18, &pairs.into_iter().collect::<Vec<_>>()).unwrap()
            })
            .collect();
        let reps: Vec<VarianceReport> = graphs
            .iter()
            .map(|g| plateau_variance(g, &PlateauOptions::new(4, 2, 11)).unwrap())
            .collect();
        // the regularizer is positive, so the zero-mean law is for the tanh term alone
        for g in &graphs {
            let opts = PlateauOptions { form: LossForm::Tanh, ..PlateauOptions::new(4, 2, 12) };
            let rep = plateau_variance(g, &opts).unwrap();
            assert!(rep.mean.abs() < 3.0 * rep.mean_stderr, "mean {} ± {}", rep.mean, rep.mean_stderr);
        }
        assert!(reps.iter().all(|r| r.mean > 0.0));
        let ratio = reps[0].normalized / reps[1].normalized;
        assert!((1.0 / 1.5..1.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn histogram_binning() {
        let h = histogram(&[-1.0, -0.99, 0.0, 0.5, 1.0], 4);
        assert_eq!(h, vec![2, 0, 1, 2]);
        assert_eq!(h.iter().sum::<u64>(), 5);
    }

    fn quick_options() -> SolveOptions {
        SolveOptions {
            layers: Some(2),
            train: TrainConfig { max_epochs: 40, learning_rate: 0.02, ..TrainConfig::default() },
            ..SolveOptions::default()
        }
    }

    #[test]
    fn ablation_reports_every_form() {
        let g = generate_random_instance(9, 4.0, 2).unwrap();
        let out = ablation_histograms(&[g], &LossForm::ALL, &[1, 2], &quick_options(), 10).unwrap();
        assert_eq!(out.len(), 4);
        for v in &out {
            assert_eq!(v.runs, 2);
            assert_eq!(v.histogram.iter().sum::<u64>(), 18);
            assert!(v.mean_ratio <= 1.0 + 1e-12 && v.mean_ratio >= v.mean_readout_ratio - 1e-12);
        }
        assert!(ablation_histograms(&[], &[LossForm::Tanh, LossForm::Tanh], &[1], &quick_options(), 10).is_err());
    }

    #[test]
    fn sweep_finds_minimal_layers_or_censors() {
        let opts = SweepOptions {
            k: 2,
            target_mean_ratio: 0.0,
            seeds: 2,
            max_layers: 4,
            mean_degree: 4.0,
            seed: 3,
        };
        let pts = gate_budget_sweep(&[9], &opts, &quick_options()).unwrap();
        assert_eq!(pts[0].layers, Some(1));
        assert_eq!(pts[0].two_qubit_gates, Some(1));
        let impossible = SweepOptions { target_mean_ratio: 1.1, ..opts };
        let pts = gate_budget_sweep(&[9], &impossible, &quick_options()).unwrap();
        assert!(pts[0].censored && pts[0].layers.is_none());
    }
}
