//! Quasi-Clifford algebra arithmetic.
//!
//! Indeterminates χ_1…χ_n square to one; a pair anticommutes exactly when it
//! is an edge of the anticommutation graph Γ and commutes otherwise.  Every
//! product of indeterminates reduces to ±χ^S with S sorted ascending.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub type C64 = Complex64;

/// Graph Γ declaring which indeterminate pairs anticommute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnticommGraph {
    n: usize,
    complete: bool,
    adj: Vec<bool>,
}

impl AnticommGraph {
    /// Build from 1-based edges {j,k}; duplicates are merged.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![false; n * n];
        for &(j, k) in edges {
            if j == k {
                return input(format!("self-loop at vertex {j}"));
            }
            if j == 0 || k == 0 || j > n || k > n {
                return input(format!("edge ({j},{k}) outside [1,{n}]"));
            }
            adj[(j - 1) * n + (k - 1)] = true;
            adj[(k - 1) * n + (j - 1)] = true;
        }
        let m = edges.len();
        let complete = n <= 1 || (m >= n * (n - 1) / 2 && adj.iter().filter(|&&b| b).count() == n * (n - 1));
        Ok(AnticommGraph { n, complete, adj })
    }

    /// K_n: the fully anticommuting (Majorana) case.
    pub fn complete(n: usize) -> Self {
        let mut adj = vec![true; n * n];
        for i in 0..n {
            adj[i * n + i] = false;
        }
        AnticommGraph { n, complete: true, adj }
    }

    /// Edgeless graph: all indeterminates commute.
    pub fn empty(n: usize) -> Self {
        AnticommGraph { n, complete: n <= 1, adj: vec![false; n * n] }
    }

    /// Cycle C_n on 1..n.
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..=n).map(|j| (j, j % n + 1)).collect();
        Self::new(n, &edges).expect("cycle edges are valid")
    }

    /// r disjoint edges {1,2},{3,4},… on 2r vertices.
    pub fn matching(r: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..r).map(|i| (2 * i + 1, 2 * i + 2)).collect();
        Self::new(2 * r, &edges).expect("matching edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Whether χ_j and χ_k (1-based, distinct) anticommute.
    #[inline]
    pub fn anticommute(&self, j: usize, k: usize) -> bool {
        self.adj[(j - 1) * self.n + (k - 1)]
    }

    /// Edges as sorted 1-based pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 1..=self.n {
            for k in j + 1..=self.n {
                if self.anticommute(j, k) {
                    out.push((j, k));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> GraphJson {
        if self.complete && self.n > 1 {
            GraphJson { n: self.n, edges: None, complete: Some(true) }
        } else {
            let edges = self.edges().into_iter().map(|(j, k)| [j, k]).collect();
            GraphJson { n: self.n, edges: Some(edges), complete: None }
        }
    }

    pub fn from_json(g: &GraphJson) -> Result<Self> {
        match (g.complete, &g.edges) {
            (Some(true), _) => Ok(Self::complete(g.n)),
            (_, Some(e)) => {
                let pairs: Vec<(usize, usize)> = e.iter().map(|p| (p[0], p[1])).collect();
                Self::new(g.n, &pairs)
            }
            _ => input("graph: expected \"edges\" or \"complete\": true"),
        }
    }
}

/// Serialized graph: `{"n", "edges": [[j,k],…]}` or `{"n", "complete": true}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub complete: Option<bool>,
}

/// Signed monomial ±χ^S in normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub support: Vec<usize>,
    pub sign: i8,
}

impl Monomial {
    pub fn new(support: Vec<usize>) -> Self {
        Monomial { support, sign: 1 }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_support(&self.support, n)?;
        if self.sign != 1 && self.sign != -1 {
            return input("monomial sign must be ±1");
        }
        Ok(())
    }
}

fn check_support(s: &[usize], n: usize) -> Result<()> {
    for w in s.windows(2) {
        if w[0] >= w[1] {
            return input(format!("support {s:?} is not strictly ascending"));
        }
    }
    if let Some(&j) = s.iter().find(|&&j| j == 0 || j > n) {
        return input(format!("index {j} outside [1,{n}]"));
    }
    Ok(())
}

/// Sorted product χ^S χ^T = sign · χ^{S△T}, unchecked.
///
/// Each element of T travels left past the larger elements of S; each such
/// adjacent swap contributes −1 when the pair anticommutes.  Equal indices
/// collapse via χ_j² = 1.
pub(crate) fn product_raw(s: &[usize], t: &[usize], g: &AnticommGraph) -> (Vec<usize>, bool) {
    let mut neg = false;
    if g.complete {
        let mut i = 0;
        for &b in t {
            while i < s.len() && s[i] <= b {
                i += 1;
            }
            // elements s[i..] exceed b, except possibly an equal one before i
            if (s.len() - i) % 2 == 1 {
                neg = !neg;
            }
        }
    } else {
        for &b in t {
            for &a in s.iter().rev() {
                if a <= b {
                    break;
                }
                if g.anticommute(a, b) {
                    neg = !neg;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(s.len() + t.len());
    let (mut i, mut j) = (0, 0);
    while i < s.len() || j < t.len() {
        if j == t.len() || (i < s.len() && s[i] < t[j]) {
            out.push(s[i]);
            i += 1;
        } else if i == s.len() || t[j] < s[i] {
            out.push(t[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    (out, neg)
}

/// Sign picked up when reversing χ^S: (−1)^{#edges inside S}.
pub(crate) fn reversal_negates(s: &[usize], g: &AnticommGraph) -> bool {
    if g.complete {
        let k = s.len();
        return (k * k.saturating_sub(1) / 2) % 2 == 1;
    }
    let mut neg = false;
    for (a, &x) in s.iter().enumerate() {
        for &y in &s[a + 1..] {
            if g.anticommute(x, y) {
                neg = !neg;
            }
        }
    }
    neg
}

/// Normal-form product of two signed monomials over Γ.
pub fn normal_form_product(s: &Monomial, t: &Monomial, g: &AnticommGraph) -> Result<Monomial> {
    s.validate(g.n)?;
    t.validate(g.n)?;
    let (support, neg) = product_raw(&s.support, &t.support, g);
    let mut sign = s.sign * t.sign;
    if neg {
        sign = -sign;
    }
    Ok(Monomial { support, sign })
}

/// Complex-coefficient element Σ_S a_S χ^S.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Vec::new(), c);
        p
    }

    /// c · χ^S for a validated ascending support.
    pub fn monomial(n: usize, support: Vec<usize>, c: C64) -> Result<Self> {
        check_support(&support, n)?;
        let mut p = Self::zero(n);
        p.add_term(support, c);
        Ok(p)
    }

    /// ℓ_a = Σ_j a_j χ_j.
    pub fn linear(a: &[f64]) -> Self {
        let mut p = Self::zero(a.len());
        for (j, &x) in a.iter().enumerate() {
            p.add_term(vec![j + 1], C64::new(x, 0.0));
        }
        p
    }

    /// Build from (support, coefficient) pairs, validating every support.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<usize>, C64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (s, c) in terms {
            check_support(&s, n)?;
            p.add_term(s, c);
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Accumulate c·χ^S (support must already be valid); exact zeros are dropped.
    pub fn add_term(&mut self, support: Vec<usize>, c: C64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(support) {
            Entry::Vacant(v) => {
                if c != C64::new(0.0, 0.0) {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == C64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn coeff(&self, support: &[usize]) -> C64 {
        self.terms.get(support).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest support size; −1 for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.terms.keys().map(|s| s.len() as isize).max().unwrap_or(-1)
    }

    /// Normalized trace tr(h) = a_∅.
    pub fn trace(&self) -> C64 {
        self.coeff(&[])
    }

    pub fn is_homogeneous(&self, d: usize) -> bool {
        self.terms.keys().all(|s| s.len() == d)
    }

    /// Σ_S |a_S|².
    pub fn coeff_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = Self::zero(self.n);
        for (s, a) in &self.terms {
            p.add_term(s.clone(), a * c);
        }
        p
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn add(&self, other: &Polynomial) -> Result<Self> {
        same_n(self, other)?;
        let mut p = self.clone();
        for (s, a) in &other.terms {
            p.add_term(s.clone(), *a);
        }
        Ok(p)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    /// Part of degree exactly d.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut p = Self::zero(self.n);
        for (s, a) in &self.terms {
            if s.len() == d {
                p.add_term(s.clone(), *a);
            }
        }
        p
    }

    /// Drop coefficients with |a| ≤ tol.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (s, a) in &self.terms {
            if a.norm() > tol {
                p.add_term(s.clone(), *a);
            }
        }
        p
    }

    /// Largest coefficientwise deviation.
    pub fn max_abs_diff(&self, other: &Polynomial) -> f64 {
        let mut m: f64 = 0.0;
        for (s, a) in &self.terms {
            m = m.max((a - other.coeff(s)).norm());
        }
        for (s, b) in &other.terms {
            if !self.terms.contains_key(s) {
                m = m.max(b.norm());
            }
        }
        m
    }

    /// Re-home the polynomial into a larger algebra (indices unchanged).
    pub fn embed(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::Dimension(format!("cannot embed n={} into n={n}", self.n)));
        }
        Ok(Polynomial { n, terms: self.terms.clone() })
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(s, c)| TermJson { support: s.clone(), re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_json(p: &PolynomialJson) -> Result<Self> {
        let mut out = Self::zero(p.n);
        for (i, t) in p.terms.iter().enumerate() {
            check_support(&t.support, p.n).map_err(|e| Error::Input(format!("terms[{i}].support: {e}")))?;
            if !t.re.is_finite() || !t.im.is_finite() {
                return input(format!("terms[{i}]: non-finite coefficient"));
            }
            out.add_term(t.support.clone(), C64::new(t.re, t.im));
        }
        Ok(out)
    }
}

/// Serialized polynomial `{"n", "terms": [{"support", "re", "im"}]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolynomialJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub support: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

fn same_n(f: &Polynomial, g: &Polynomial) -> Result<()> {
    if f.n != g.n {
        return Err(Error::Dimension(format!("polynomials over n={} and n={}", f.n, g.n)));
    }
    Ok(())
}

fn same_graph(f: &Polynomial, g: &AnticommGraph) -> Result<()> {
    if f.n != g.n {
        return Err(Error::Dimension(format!("polynomial over n={} but graph has n={}", f.n, g.n)));
    }
    Ok(())
}

/// Exact normal-form product fg.
pub fn multiply(f: &Polynomial, g: &Polynomial, gr: &AnticommGraph) -> Result<Polynomial> {
    same_n(f, g)?;
    same_graph(f, gr)?;
    let mut out = Polynomial::zero(f.n);
    for (s, a) in &f.terms {
        for (t, b) in &g.terms {
            let (u, neg) = product_raw(s, t, gr);
            let c = a * b;
            out.add_term(u, if neg { -c } else { c });
        }
    }
    Ok(out)
}

/// Formal adjoint: conjugate coefficients, reverse and re-normalize monomials.
pub fn adjoint(f: &Polynomial, gr: &AnticommGraph) -> Result<Polynomial> {
    same_graph(f, gr)?;
    let mut out = Polynomial::zero(f.n);
    for (s, a) in &f.terms {
        let c = a.conj();
        out.add_term(s.clone(), if reversal_negates(s, gr) { -c } else { c });
    }
    Ok(out)
}

/// fg − gf, or fg + gf when `anti` is set.
pub fn commutator(f: &Polynomial, g: &Polynomial, gr: &AnticommGraph, anti: bool) -> Result<Polynomial> {
    let fg = multiply(f, g, gr)?;
    let gf = multiply(g, f, gr)?;
    if anti {
        fg.add(&gf)
    } else {
        fg.sub(&gf)
    }
}

/// Whether f* = f coefficientwise within tol.
pub fn is_self_adjoint(f: &Polynomial, gr: &AnticommGraph, tol: f64) -> Result<bool> {
    Ok(adjoint(f, gr)?.max_abs_diff(f) <= tol)
}

/// tr(fg) using only matching supports: tr(χ^S χ^T) = δ_ST · (χ^S)².
pub fn trace_product(f: &Polynomial, g: &Polynomial, gr: &AnticommGraph) -> Result<C64> {
    same_n(f, g)?;
    same_graph(f, gr)?;
    let (small, large) = if f.len() <= g.len() { (f, g) } else { (g, f) };
    let mut acc = C64::new(0.0, 0.0);
    for (s, a) in &small.terms {
        if let Some(b) = large.terms.get(s) {
            let sq = if reversal_negates(s, gr) { -1.0 } else { 1.0 };
            acc += a * b * sq;
        }
    }
    Ok(acc)
}

/// i^k for integer k.
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}
