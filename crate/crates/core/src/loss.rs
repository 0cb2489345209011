//! Relaxed MaxCut loss over correlator expectations.
//!
//! ```text
//! L(e) = Σ_{(i,j)∈E} W_ij t_i t_j + β ν [ (1/m) Σ_{i∈V} t_i² ]²,   t_i = tanh(α e_i)
//! ```
//!
//! Only the first `m = |V|` entries of `e` enter the loss; strings beyond the
//! graph's vertex count are ignored. The quadratic forms replace `tanh(α e)`
//! by `e` and exist for ablations.

use serde::{Deserialize, Serialize};

use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::graph::{maxcut_lower_bound_nu, Graph};

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum LossForm {
    #[serde(rename = "quadratic")]
    Quadratic,
    #[serde(rename = "quadratic+reg")]
    QuadraticReg,
    #[serde(rename = "tanh")]
    Tanh,
    #[default]
    #[serde(rename = "tanh+reg")]
    TanhReg,
}

impl LossForm {
    pub const ALL: [LossForm; 4] = [
        LossForm::Quadratic,
        LossForm::QuadraticReg,
        LossForm::Tanh,
        LossForm::TanhReg,
    ];

    pub fn uses_tanh(self) -> bool {
        matches!(self, LossForm::Tanh | LossForm::TanhReg)
    }

    pub fn regularized(self) -> bool {
        matches!(self, LossForm::QuadraticReg | LossForm::TanhReg)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossForm::Quadratic => "quadratic",
            LossForm::QuadraticReg => "quadratic+reg",
            LossForm::Tanh => "tanh",
            LossForm::TanhReg => "tanh+reg",
        }
    }
}

impl std::str::FromStr for LossForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss form `{s}`")))
    }
}

/// `1.5` for linear encodings, `1.5·n^⌊k/2⌋` otherwise.
pub fn default_alpha(n: usize, k: usize) -> f64 {
    if k <= 1 {
        1.5
    } else {
        1.5 * (n as f64).powi((k / 2) as i32)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LossSpec<'a> {
    graph: &'a Graph,
    encoding: &'a Encoding,
    alpha: f64,
    beta: f64,
    nu: f64,
    form: LossForm,
}

impl<'a> LossSpec<'a> {
    /// Spec with `ν` from the classical cut bound and the `tanh+reg` form.
    ///
    /// Disconnected weighted graphs have no spanning-tree bound; they fall back
    /// to `w(G)/2`, the expected weight of a random cut.
    pub fn new(graph: &'a Graph, encoding: &'a Encoding, alpha: f64, beta: f64) -> Result<Self> {
        let nu = match maxcut_lower_bound_nu(graph) {
            Ok(nu) => nu,
            Err(Error::Disconnected) => graph.total_weight() / 2.0,
            Err(e) => return Err(e),
        };
        LossSpec::with_nu(graph, encoding, alpha, beta, nu)
    }

    pub fn with_nu(graph: &'a Graph, encoding: &'a Encoding, alpha: f64, beta: f64, nu: f64) -> Result<Self> {
        if encoding.len() < graph.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "encoding has {} strings for {} vertices",
                encoding.len(),
                graph.num_vertices()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be ≥ 0, got {beta}")));
        }
        if !(nu > 0.0 && nu.is_finite()) && !(beta == 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
        }
        Ok(LossSpec {
            graph,
            encoding,
            alpha,
            beta,
            nu,
            form: LossForm::TanhReg,
        })
    }

    pub fn with_form(mut self, form: LossForm) -> Self {
        self.form = form;
        self
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn encoding(&self) -> &'a Encoding {
        self.encoding
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn form(&self) -> LossForm {
        self.form
    }

    fn effective_beta(&self) -> f64 {
        if self.form.regularized() {
            self.beta
        } else {
            0.0
        }
    }

    /// `(t(e), dt/de)` for the active squashing function.
    #[inline]
    fn squash(&self, e: f64) -> (f64, f64) {
        if self.form.uses_tanh() {
            let t = (self.alpha * e).tanh();
            (t, self.alpha * (1.0 - t * t))
        } else {
            (e, 1.0)
        }
    }

    fn check(&self, e: &[f64]) -> Result<()> {
        if e.len() != self.encoding.len() {
            return Err(Error::LengthMismatch {
                expected: self.encoding.len(),
                actual: e.len(),
            });
        }
        Ok(())
    }

    /// Per-component bound `2α[d(i) + 2βν/m]` on `|∂L/∂e_i|`.
    pub fn gradient_bound(&self, i: usize) -> f64 {
        let scale = if self.form.uses_tanh() { self.alpha } else { 1.0 };
        let m = self.graph.num_vertices() as f64;
        2.0 * scale * (self.graph.degree(i) + 2.0 * self.effective_beta() * self.nu / m)
    }
}

pub fn loss_value(e: &[f64], spec: &LossSpec<'_>) -> Result<f64> {
    spec.check(e)?;
    let m = spec.graph.num_vertices();
    let t: Vec<f64> = e[..m].iter().map(|&v| spec.squash(v).0).collect();
    let edge_term: f64 = spec
        .graph
        .edges()
        .iter()
        .map(|edge| edge.w * t[edge.u] * t[edge.v])
        .sum();
    let beta = spec.effective_beta();
    let reg = if beta > 0.0 {
        let mean_sq = t.iter().map(|v| v * v).sum::<f64>() / m as f64;
        beta * spec.nu * mean_sq * mean_sq
    } else {
        0.0
    };
    Ok(edge_term + reg)
}

/// Exact partial derivatives `∂L/∂e_i`; zero for strings past the vertex count.
pub fn loss_grad_expectations(e: &[f64], spec: &LossSpec<'_>) -> Result<Vec<f64>> {
    spec.check(e)?;
    let m = spec.graph.num_vertices();
    let (t, dt): (Vec<f64>, Vec<f64>) = e[..m].iter().map(|&v| spec.squash(v)).unzip();
    let beta = spec.effective_beta();
    let mean_sq = t.iter().map(|v| v * v).sum::<f64>() / m as f64;
    // d/dt_i of βν S² with S = (1/m)Σ t² is 4βν S t_i / m
    let reg_coeff = 4.0 * beta * spec.nu * mean_sq / m as f64;
    let mut grad = vec![0.0; e.len()];
    for i in 0..m {
        let field: f64 = spec
            .graph
            .neighbors(i)
            .iter()
            .map(|&(j, w)| w * t[j])
            .sum();
        grad[i] = dt[i] * (field + reg_coeff * t[i]);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_encoding;
    use crate::graph::{generate_random_instance, Graph};
    use crate::rng;
    use rand::Rng;

    fn k2() -> (Graph, Encoding) {
        (
            Graph::unweighted(2, &[(0, 1)]).unwrap(),
            build_encoding(2, 1, 2).unwrap(),
        )
    }

    #[test]
    fn default_alpha_examples() {
        for n in 1..20 {
            assert_eq!(default_alpha(n, 1), 1.5);
        }
        assert_eq!(default_alpha(10, 2), 15.0);
        assert_eq!(default_alpha(10, 3), 15.0);
        assert_eq!(default_alpha(10, 4), 150.0);
    }

    #[test]
    fn k2_loss_arithmetic() {
        let (g, enc) = k2();
        let no_reg = LossSpec::new(&g, &enc, 1.0, 0.0).unwrap();
        assert_eq!(loss_value(&[0.0, 0.0], &no_reg).unwrap(), 0.0);
        let v = loss_value(&[0.5, -0.5], &no_reg).unwrap();
        assert!((v + 0.5f64.tanh().powi(2)).abs() < 1e-15);
        assert!((v + 0.213_552).abs() < 1e-6);

        let reg = LossSpec::new(&g, &enc, 1.0, 0.5).unwrap();
        assert_eq!(reg.nu(), 0.75);
        let r = loss_value(&[0.5, -0.5], &reg).unwrap() - v;
        assert!((r - 0.375 * 0.5f64.tanh().powi(4)).abs() < 1e-15);
        assert!((r - 0.017_102).abs() < 1e-6);
    }

    #[test]
    fn k2_gradient_by_hand() {
        let (g, enc) = k2();
        let spec = LossSpec::new(&g, &enc, 1.0, 0.0).unwrap();
        let grad = loss_grad_expectations(&[0.5, -0.5], &spec).unwrap();
        let expected = (1.0 / 0.5f64.cosh().powi(2)) * (-0.5f64).tanh();
        assert!((grad[0] - expected).abs() < 1e-15);
        assert!((grad[0] + 0.363_431).abs() < 1e-6);
        let zero = LossSpec::new(&g, &enc, 2.0, 0.0).unwrap();
        assert_eq!(loss_grad_expectations(&[0.0, 0.0], &zero).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn length_checks() {
        let (g, enc) = k2();
        let spec = LossSpec::new(&g, &enc, 1.0, 0.5).unwrap();
        assert!(matches!(loss_value(&[0.1], &spec), Err(Error::LengthMismatch { .. })));
        let small = build_encoding(1, 1, 1).unwrap();
        assert!(LossSpec::new(&g, &small, 1.0, 0.5).is_err());
        assert!(LossSpec::new(&g, &enc, 0.0, 0.5).is_err());
    }

    #[test]
    fn surplus_strings_are_ignored() {
        let g = Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let enc = build_encoding(2, 1, 6).unwrap();
        let spec = LossSpec::new(&g, &enc, 1.3, 0.5).unwrap();
        let a = [0.1, -0.4, 0.3, 0.9, -0.9, 0.2];
        let mut b = a;
        b[3..].copy_from_slice(&[-0.5, 0.0, 0.7]);
        assert_eq!(loss_value(&a, &spec).unwrap(), loss_value(&b, &spec).unwrap());
        assert_eq!(&loss_grad_expectations(&a, &spec).unwrap()[3..], &[0.0; 3]);
    }

    /// Central differences on the composite loss, the independent route.
    fn finite_difference(e: &[f64], spec: &LossSpec<'_>, i: usize) -> f64 {
        let h = 1e-6;
        let mut p = e.to_vec();
        let mut q = e.to_vec();
        p[i] += h;
        q[i] -= h;
        (loss_value(&p, spec).unwrap() - loss_value(&q, spec).unwrap()) / (2.0 * h)
    }

    #[test]
    fn gradient_matches_finite_differences_and_bound() {
        let mut r = rng::seeded(99);
        for trial in 0..1000 {
            let g = generate_random_instance(18, 4.0, trial % 25).unwrap();
            let enc = build_encoding(4, 2, 18).unwrap();
            let alpha = r.random_range(0.5..8.0);
            let beta = r.random_range(0.0..1.0);
            let form = LossForm::ALL[trial as usize % 4];
            let spec = LossSpec::new(&g, &enc, alpha, beta).unwrap().with_form(form);
            let e: Vec<f64> = (0..18).map(|_| r.random_range(-1.0..1.0)).collect();
            let grad = loss_grad_expectations(&e, &spec).unwrap();
            for (i, &gi) in grad.iter().enumerate() {
                let fd = finite_difference(&e, &spec, i);
                let scale = gi.abs().max(1.0);
                assert!((gi - fd).abs() / scale < 1e-6, "trial {trial} i {i}: {gi} vs {fd}");
                assert!(gi.abs() <= spec.gradient_bound(i));
            }
        }
    }

    #[test]
    fn sign_flip_invariance_and_term_bounds() {
        let mut r = rng::seeded(5);
        let g = generate_random_instance(18, 4.0, 1).unwrap();
        let enc = build_encoding(4, 2, 18).unwrap();
        let spec = LossSpec::new(&g, &enc, 6.0, 0.5).unwrap();
        let edge_only = LossSpec::new(&g, &enc, 6.0, 0.0).unwrap();
        let abs_w: f64 = g.edges().iter().map(|e| e.w.abs()).sum();
        for _ in 0..200 {
            let e: Vec<f64> = (0..18).map(|_| r.random_range(-1.0..1.0)).collect();
            let neg: Vec<f64> = e.iter().map(|v| -v).collect();
            let a = loss_value(&e, &spec).unwrap();
            assert!((a - loss_value(&neg, &spec).unwrap()).abs() < 1e-12);
            let edge = loss_value(&e, &edge_only).unwrap();
            assert!(edge.abs() <= abs_w);
            let reg = a - edge;
            assert!(reg >= -1e-12 && reg <= 0.5 * spec.nu() + 1e-12);
        }
    }
}
