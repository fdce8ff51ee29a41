//! Random SYK instances, the 2-colored variant, and the μ-Gaussian
//! reference predictions (advisory only).

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::algebra::{i_pow, AnticommGraph, Polynomial, PolynomialJson, C64};
use crate::combin::{binom, binom_f64, colex_subsets, perfect_matchings};
use crate::error::{input, Error, Result};
use crate::repr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Syk,
    Syk2col,
    Custom,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Syk => "syk",
            Model::Syk2col => "syk2col",
            Model::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SykInstance {
    pub model: Model,
    /// Total number of indeterminates (n1 + χ count for the 2-colored model).
    pub n: usize,
    pub q: usize,
    /// First-color count (2-colored model only).
    pub n1: Option<usize>,
    pub seed: u64,
    pub h: Polynomial,
}

/// On-disk form: the polynomial JSON plus model metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub model: Model,
    pub q: usize,
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub poly: PolynomialJson,
}

impl SykInstance {
    /// Wrap an arbitrary self-adjoint polynomial on K_n.
    pub fn custom(h: Polynomial, seed: u64) -> Self {
        let q = h.degree().max(0) as usize;
        SykInstance { model: Model::Custom, n: h.n(), q, n1: None, seed, h }
    }

    pub fn graph(&self) -> AnticommGraph {
        AnticommGraph::complete(self.n)
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson { model: self.model, q: self.q, n1: self.n1, seed: self.seed, poly: self.h.to_json() }
    }

    pub fn from_json(j: &InstanceJson) -> Result<Self> {
        let h = Polynomial::from_json(&j.poly)?;
        if j.model == Model::Syk2col && j.n1.is_none() {
            return input("syk2col instance without n1");
        }
        Ok(SykInstance { model: j.model, n: h.n(), q: j.q, n1: j.n1, seed: j.seed, h })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("instance serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: InstanceJson = serde_json::from_str(s).map_err(|e| Error::Input(format!("instance JSON: {e}")))?;
        Self::from_json(&j)
    }
}

/// Counter-based standard-normal stream: ChaCha20 keyed by the seed,
/// one stream per model, inverse-CDF of 53-bit uniforms.
pub struct NormalStream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream { rng, normal: Normal::new(0.0, 1.0).expect("unit normal") }
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }
}

/// SYK_q: h = i^{binom(q,2)} Σ_S J_S χ^S, J_S ~ N(0, 1/binom(n,q)) in colex order.
pub fn sample_syk(n: usize, q: usize, seed: u64) -> Result<SykInstance> {
    if q > n {
        return input(format!("q={q} exceeds n={n}"));
    }
    if q == 0 {
        return input("q must be positive");
    }
    let mut rng = NormalStream::new(seed, 1);
    let scale = 1.0 / binom_f64(n, q).sqrt();
    let pre = i_pow(binom(q as i64, 2) as i64);
    let mut h = Polynomial::zero(n);
    for s in colex_subsets(n, q) {
        let j = rng.next() * scale;
        h.add_term(s, pre * j);
    }
    Ok(SykInstance { model: Model::Syk, n, q, n1: None, seed, h })
}

/// 2-colored SYK_4: h = (i/√n) Σ_m τ_m χ_m over K_{n1+n}, indeterminates
/// φ_1…φ_{n1} first, then χ_1…χ_n.
pub fn sample_2col(n1: usize, n: usize, seed: u64) -> Result<SykInstance> {
    if n1 % 2 == 1 {
        return input(format!("n1={n1} must be even"));
    }
    if n1 < 3 || n == 0 {
        return input("need n1 ≥ 3 and n ≥ 1");
    }
    let mut rng = NormalStream::new(seed, 2);
    let tau_scale = 1.0 / binom_f64(n1, 3).sqrt();
    let total = n1 + n;
    let mut h = Polynomial::zero(total);
    let subsets = colex_subsets(n1, 3);
    for m in 1..=n {
        for s in &subsets {
            // τ_m coefficient iJ on φ^S; (i/√n)·iJ·φ^S χ_m = −J/√n · χ^{S∪{n1+m}}
            let j = rng.next() * tau_scale;
            let mut sup = s.clone();
            sup.push(n1 + m);
            h.add_term(sup, C64::new(-j / (n as f64).sqrt(), 0.0));
        }
    }
    Ok(SykInstance { model: Model::Syk2col, n: total, q: 4, n1: Some(n1), seed, h })
}

/// τ_m (1-based m over the χ block) of a 2-colored instance, on the full index set.
pub fn two_color_tau(inst: &SykInstance, m: usize) -> Result<Polynomial> {
    let n1 = inst.n1.ok_or_else(|| Error::Input("not a 2-colored instance".into()))?;
    let nchi = inst.n - n1;
    if m == 0 || m > nchi {
        return input(format!("τ index {m} out of range 1..={nchi}"));
    }
    let mut tau = Polynomial::zero(inst.n);
    let f = C64::new(0.0, -(nchi as f64).sqrt());
    for (s, a) in inst.h.terms() {
        if s.last() == Some(&(n1 + m)) {
            // a = (i/√n)·t  ⇒  t = −i√n·a
            tau.add_term(s[..s.len() - 1].to_vec(), f * a);
        }
    }
    Ok(tau)
}

/// Split an SYK_4 instance into the A_in part (three indices ≤ 3n/4, one
/// above) and the rest; c rescales h_in to the 2-colored law.
pub fn split_two_color(inst: &SykInstance) -> Result<(Polynomial, Polynomial, f64)> {
    if inst.q != 4 {
        return input(format!("split needs q=4, got q={}", inst.q));
    }
    let n = inst.n;
    if n % 4 != 0 {
        return input(format!("split needs 4 | n, got n={n}"));
    }
    let cut = 3 * n / 4;
    let mut hin = Polynomial::zero(n);
    let mut hout = Polynomial::zero(n);
    for (s, a) in inst.h.terms() {
        let low = s.iter().filter(|&&j| j <= cut).count();
        if s.len() == 4 && low == 3 {
            hin.add_term(s.clone(), *a);
        } else {
            hout.add_term(s.clone(), *a);
        }
    }
    Ok((hin, hout, split_constant(n)))
}

/// c = sqrt(binom(n,4) / (binom(3n/4,3)·n/4)).
pub fn split_constant(n: usize) -> f64 {
    (binom_f64(n, 4) / (binom_f64(3 * n / 4, 3) * (n / 4) as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeuristicPrediction {
    pub mu: f64,
    pub support_edge: f64,
    pub opt_estimate: f64,
}

/// μ = E(−1)^{q−|S∩T|} over independent uniform q-subsets, exactly.
pub fn mu_exact(n: usize, q: usize) -> f64 {
    let total = binom_f64(n, q);
    (0..=q)
        .map(|j| {
            let p = binom_f64(q, j) * binom_f64(n.saturating_sub(q), q - j) / total;
            if (q - j) % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum()
}

pub fn heuristic_prediction(n: usize, q: usize) -> Result<HeuristicPrediction> {
    if q == 0 || q > n {
        return input(format!("need 1 ≤ q ≤ n, got q={q}, n={n}"));
    }
    let mu = mu_exact(n, q);
    let edge = if mu >= 1.0 { f64::INFINITY } else { 2.0 / (1.0 - mu).sqrt() };
    Ok(HeuristicPrediction { mu, support_edge: edge, opt_estimate: edge })
}

/// Σ over pair partitions of [k] of μ^{#crossings}.
pub fn mu_gaussian_moment(mu: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    perfect_matchings(k)
        .iter()
        .map(|m| {
            let mut cross = 0;
            for (i, &(a, b)) in m.iter().enumerate() {
                for &(c, d) in &m[i + 1..] {
                    if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                        cross += 1;
                    }
                }
            }
            mu.powi(cross)
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityComparison {
    pub mu: f64,
    /// k = 2, 4, …, max_moment.
    pub orders: Vec<usize>,
    /// tr(h^k)/tr(h²)^{k/2} from the full spectrum.
    pub empirical_moments: Vec<f64>,
    pub mu_gaussian_moments: Vec<f64>,
}

pub fn spectral_density_compare(inst: &SykInstance, max_moment: usize) -> Result<DensityComparison> {
    if max_moment % 2 == 1 || max_moment < 2 || max_moment > 12 {
        return input(format!("max_moment must be even in 2..=12, got {max_moment}"));
    }
    let rep = repr::canonical_representation(&inst.graph())?;
    let op = repr::represent(&inst.h, &rep)?;
    let spec = repr::eig_extremes(&op, repr::EigMode::Full)?.values;
    let d = spec.len() as f64;
    let m2 = spec.iter().map(|x| x * x).sum::<f64>() / d;
    let mu = mu_exact(inst.n, inst.q);
    let orders: Vec<usize> = (2..=max_moment).step_by(2).collect();
    let empirical = orders
        .iter()
        .map(|&k| spec.iter().map(|x| x.powi(k as i32)).sum::<f64>() / d / m2.powi(k as i32 / 2))
        .collect();
    let reference = orders.iter().map(|&k| mu_gaussian_moment(mu, k)).collect();
    Ok(DensityComparison { mu, orders, empirical_moments: empirical, mu_gaussian_moments: reference })
}


/// Pair-square Hamiltonian h₁ = (Σ_j χ_{2j−1}χ_{2j})*(Σ_j χ_{2j−1}χ_{2j})
/// = n/2 − 2 Σ_{I<J} χ^{I∪J}; Opt(h₁) = (n/2)² for even n.
pub fn pair_square(n: usize) -> Result<Polynomial> {
    pair_square_scaled(n, C64::new(n as f64 / 2.0, 0.0), -2.0)
}

/// Homogeneous quartic (h₁ − n/2)/(2√binom(n/2,2)) with Opt_± = √binom(n/2,2).
pub fn pair_square_quartic(n: usize) -> Result<Polynomial> {
    let m = binom_f64(n / 2, 2);
    pair_square_scaled(n, C64::new(0.0, 0.0), -1.0 / m.sqrt())
}

fn pair_square_scaled(n: usize, c0: C64, c: f64) -> Result<Polynomial> {
    if n % 2 == 1 || n < 4 {
        return input(format!("pair-square Hamiltonian needs even n ≥ 4, got {n}"));
    }
    let mut h = Polynomial::scalar(n, c0);
    for i in 0..n / 2 {
        for j in i + 1..n / 2 {
            h.add_term(vec![2 * i + 1, 2 * i + 2, 2 * j + 1, 2 * j + 2], C64::new(c, 0.0));
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = sample_syk(20, 4, 7).unwrap();
        let b = sample_syk(20, 4, 7).unwrap();
        assert_eq!(a.h, b.h);
        assert_ne!(a.h, sample_syk(20, 4, 8).unwrap().h);
    }

    #[test]
    fn two_col_structure() {
        let inst = sample_2col(12, 4, 3).unwrap();
        assert_eq!(inst.h.len(), 880);
        for (s, _) in inst.h.terms() {
            assert_eq!(s.iter().filter(|&&j| j <= 12).count(), 3);
        }
        assert!(sample_2col(11, 4, 3).is_err());
    }

    #[test]
    fn split_constant_n16() {
        assert!((split_constant(16) - (1820.0f64 / 880.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn tau_reconstructs_h() {
        let inst = sample_2col(6, 3, 1).unwrap();
        let g = inst.graph();
        let mut acc = Polynomial::zero(inst.n);
        for m in 1..=3 {
            let t = two_color_tau(&inst, m).unwrap();
            let chi = Polynomial::monomial(inst.n, vec![6 + m], C64::new(1.0, 0.0)).unwrap();
            acc = acc.add(&crate::algebra::multiply(&t, &chi, &g).unwrap()).unwrap();
        }
        let acc = acc.scale(C64::new(0.0, 1.0 / 3f64.sqrt()));
        assert!(acc.max_abs_diff(&inst.h) < 1e-14);
        assert!(crate::algebra::is_self_adjoint(&two_color_tau(&inst, 1).unwrap(), &g, 1e-14).unwrap());
    }

    #[test]
    fn mu_moments() {
        assert_eq!(mu_gaussian_moment(0.3, 2), 1.0);
        assert!((mu_gaussian_moment(0.3, 4) - 2.3).abs() < 1e-15);
        let cat = [1.0, 2.0, 5.0, 14.0, 42.0];
        for (i, c) in cat.iter().enumerate() {
            assert_eq!(mu_gaussian_moment(0.0, 2 * (i + 1)), *c);
        }
    }
}
