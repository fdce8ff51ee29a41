//! Generalized Kneser graphs on the Johnson scheme J(n,q): independence
//! numbers, the Delsarte LP bound on θ, and the α ≤ Ψ ≤ θ experiments.

use std::collections::BTreeSet;

use faer::complex_native::c64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::AnticommGraph;
use crate::combin::{binom, binom_f64, colex_subsets, lex_subsets};
use crate::error::{input, Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::repr::{self, GraphReduction, PauliString};
use crate::syk::NormalStream;

/// Explicit graph cap for `build_kg_graph`.
pub const MAX_EXPLICIT_VERTICES: usize = 10_000;
/// Vertex cap for the exact independence number.
pub const MAX_ALPHA_VERTICES: usize = 200;

/// Simple undirected graph with bitset adjacency rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        SimpleGraph { n, words, rows: vec![0; n * words] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        self.rows[u * self.words + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words + u / 64] |= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::new(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n);
        }
        g
    }

    /// Petersen graph as the Kneser graph K(5,2).
    pub fn petersen() -> Self {
        build_kg_graph(5, 2, &[1]).expect("small").graph
    }

    /// Vertex j−1 for indeterminate χ_j; edges where Γ anticommutes.
    pub fn from_anticomm(g: &AnticommGraph) -> Self {
        let mut out = Self::new(g.n());
        for (j, k) in g.edges() {
            out.add_edge(j - 1, k - 1);
        }
        out
    }

    pub fn adjacency(&self) -> RMat {
        RMat::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| u != v && !self.has_edge(u, v)))
    }

    /// Independent and no outside vertex can be added.
    pub fn is_maximal_independent(&self, set: &[usize]) -> bool {
        self.is_independent(set)
            && (0..self.n).all(|v| set.contains(&v) || set.iter().any(|&u| self.has_edge(u, v)))
    }
}

/// KG_D^{(n,q)} with its vertex labels.
#[derive(Clone, Debug)]
pub struct SchemeGraph {
    pub n: usize,
    pub q: usize,
    pub nonedge_distances: Vec<usize>,
    /// Lexicographically sorted q-subsets.
    pub vertices: Vec<Vec<usize>>,
    pub graph: SimpleGraph,
}

fn check_distances(q: usize, d: &[usize]) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = d.iter().copied().collect();
    if set.iter().any(|&x| x == 0 || x > q) {
        return input(format!("nonedge distances must lie in 1..={q}"));
    }
    Ok(set.into_iter().collect())
}

/// Even distances 2, 4, … ≤ q (G_even).
pub fn even_distances(q: usize) -> Vec<usize> {
    (2..=q).step_by(2).collect()
}

fn intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Explicit KG_D: {S,T} is an edge iff q − |S∩T| ∉ D.
pub fn build_kg_graph(n: usize, q: usize, d: &[usize]) -> Result<SchemeGraph> {
    if q > n {
        return input(format!("q={q} exceeds n={n}"));
    }
    let dset = check_distances(q, d)?;
    let count = binom(n as i64, q as i64);
    if count > MAX_EXPLICIT_VERTICES as i128 {
        return Err(Error::Resource(format!("binom({n},{q}) = {count} vertices exceeds {MAX_EXPLICIT_VERTICES}")));
    }
    let vertices = lex_subsets(n, q);
    let mut graph = SimpleGraph::new(vertices.len());
    for u in 0..vertices.len() {
        for v in u + 1..vertices.len() {
            let dist = q - intersection(&vertices[u], &vertices[v]);
            if !dset.contains(&dist) {
                graph.add_edge(u, v);
            }
        }
    }
    Ok(SchemeGraph { n, q, nonedge_distances: dset, vertices, graph })
}

/// Adjacency matrix A_d of the d-th Johnson relation (lex vertex order).
pub fn johnson_relation(n: usize, q: usize, d: usize) -> Result<RMat> {
    let count = binom(n as i64, q as i64);
    if count > 4000 {
        return Err(Error::Resource(format!("dense A_d with {count} rows")));
    }
    let v = lex_subsets(n, q);
    Ok(RMat::from_fn(v.len(), v.len(), |i, j| {
        if q - intersection(&v[i], &v[j]) == d {
            1.0
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndependentSetVariant {
    Def1,
    Fano8,
}

/// The Deza–Erdős–Frankl pair construction or the Fano-plane family.
pub fn construct_independent_set(n: usize, q: usize, variant: IndependentSetVariant) -> Result<Vec<Vec<usize>>> {
    match variant {
        IndependentSetVariant::Fano8 => {
            if n != 8 || q != 4 {
                return input("fano8 needs n=8, q=4");
            }
            const LINES: [[usize; 3]; 7] =
                [[1, 2, 3], [1, 4, 5], [1, 6, 7], [2, 4, 6], [2, 5, 7], [3, 4, 7], [3, 5, 6]];
            let mut out = Vec::with_capacity(14);
            for l in LINES {
                let mut s = l.to_vec();
                s.push(8);
                let comp: Vec<usize> = (1..=8).filter(|x| !s.contains(x)).collect();
                out.push(s);
                out.push(comp);
            }
            Ok(out)
        }
        IndependentSetVariant::Def1 => {
            if q == 0 || q > n {
                return input(format!("need 1 ≤ q ≤ n, got q={q}, n={n}"));
            }
            if n % 2 != q % 2 {
                return input(format!("def1 needs n ≡ q (mod 2), got n={n}, q={q}"));
            }
            let pairs = n / 2;
            let choose = q / 2;
            Ok(colex_subsets(pairs, choose)
                .into_iter()
                .map(|ps| {
                    let mut s: Vec<usize> = ps.iter().flat_map(|&p| [2 * p - 1, 2 * p]).collect();
                    if q % 2 == 1 {
                        s.push(n);
                    }
                    s.sort_unstable();
                    s
                })
                .collect())
        }
    }
}

/// Exact independence number (maximum clique of the complement with a
/// greedy-coloring bound).
pub fn alpha_exact(g: &SimpleGraph) -> Result<usize> {
    Ok(max_independent_set(g)?.len())
}

/// One maximum independent set (0-based vertex ids, ascending).
pub fn max_independent_set(g: &SimpleGraph) -> Result<Vec<usize>> {
    let n = g.n();
    if n > MAX_ALPHA_VERTICES {
        return Err(Error::Resource(format!("{n} vertices exceeds the alpha cap {MAX_ALPHA_VERTICES}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let w = g.words;
    // complement adjacency
    let mut comp = vec![0u64; n * w];
    for u in 0..n {
        for v in 0..n {
            if u != v && !g.has_edge(u, v) {
                comp[u * w + v / 64] |= 1 << (v % 64);
            }
        }
    }
    let mut cand = vec![0u64; w];
    for v in 0..n {
        cand[v / 64] |= 1 << (v % 64);
    }
    let mut st = Mcq { n, w, comp, best: Vec::new(), cur: Vec::new() };
    st.expand(cand);
    let mut b = st.best;
    b.sort_unstable();
    Ok(b)
}

struct Mcq {
    n: usize,
    w: usize,
    comp: Vec<u64>,
    best: Vec<usize>,
    cur: Vec<usize>,
}

impl Mcq {
    fn expand(&mut self, cand: Vec<u64>) {
        // greedy coloring of the candidates gives an upper bound per vertex
        let mut order = Vec::new();
        let mut colors = Vec::new();
        let mut uncolored = cand.clone();
        let mut color = 0;
        while uncolored.iter().any(|&x| x != 0) {
            color += 1;
            let mut avail = uncolored.clone();
            while let Some(v) = first_bit(&avail) {
                order.push(v);
                colors.push(color);
                uncolored[v / 64] &= !(1 << (v % 64));
                avail[v / 64] &= !(1 << (v % 64));
                for k in 0..self.w {
                    avail[k] &= !self.comp[v * self.w + k];
                }
            }
        }
        let mut cand = cand;
        for idx in (0..order.len()).rev() {
            if self.cur.len() + colors[idx] <= self.best.len() {
                return;
            }
            let v = order[idx];
            self.cur.push(v);
            let next: Vec<u64> = (0..self.w).map(|k| cand[k] & self.comp[v * self.w + k]).collect();
            if next.iter().all(|&x| x == 0) {
                if self.cur.len() > self.best.len() {
                    self.best = self.cur.clone();
                }
            } else {
                self.expand(next);
            }
            self.cur.pop();
            cand[v / 64] &= !(1 << (v % 64));
        }
        let _ = self.n;
    }
}

fn first_bit(set: &[u64]) -> Option<usize> {
    set.iter().enumerate().find(|(_, &x)| x != 0).map(|(k, &x)| k * 64 + x.trailing_zeros() as usize)
}

/// H̃_d(z) = Σ_j (−1)^{d−j} binom(q−j,d−j) binom(q−z,j) binom(n−q+j−z,j).
pub fn dual_hahn_eigenvalue(n: usize, q: usize, d: usize, z: usize) -> Result<i128> {
    if d > q || z > q || q > n {
        return input(format!("dual Hahn index out of range: n={n} q={q} d={d} z={z}"));
    }
    let (n, q, d, z) = (n as i64, q as i64, d as i64, z as i64);
    let mut acc: i128 = 0;
    for j in 0..=d {
        let t = binom(q - j, d - j) * binom(q - z, j) * binom(n - q + j - z, j);
        if (d - j) % 2 == 0 {
            acc += t;
        } else {
            acc -= t;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaCertificate {
    pub n: usize,
    pub q: usize,
    pub nonedge_distances: Vec<usize>,
    pub theta_value: f64,
    /// (e, c_e) for every edge distance e ∉ D.
    pub multipliers: Vec<(usize, f64)>,
    /// Exact multipliers as "num/den" strings when the rational path was used.
    pub multipliers_exact: Option<Vec<String>>,
    /// p(0), …, p(q).
    pub p_values: Vec<f64>,
    /// z ∈ 1..q with p(z) = 0.
    pub tight_constraints: Vec<usize>,
    /// Number of distinct optimal vertices found.
    pub ties: usize,
}

impl ThetaCertificate {
    /// p(z) ≥ −1e−9 for z ≥ 1 and θ = binom(n,q)/p(0).
    pub fn check(&self) -> Result<()> {
        if self.p_values[1..].iter().any(|&p| p < -1e-9) {
            return Err(Error::Certificate(format!("negative p(z): {:?}", self.p_values)));
        }
        let want = binom_f64(self.n, self.q) / self.p_values[0];
        if (want - self.theta_value).abs() > 1e-9 * want.max(1.0) {
            return Err(Error::Certificate("θ inconsistent with p(0)".into()));
        }
        Ok(())
    }
}

fn rat(x: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Solve a square rational system; None if singular.
fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..k {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    Some((0..k).map(|i| &b[i] / &a[i][i]).collect())
}

/// Solve a square float system with partial pivoting; None if near-singular.
fn solve_float(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|c| a[i][c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Indices of a maximal linearly independent subset of the columns (exact).
fn independent_columns(cols: &[Vec<i128>]) -> Vec<usize> {
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut keep = Vec::new();
    for (idx, c) in cols.iter().enumerate() {
        let mut v: Vec<BigRational> = c.iter().map(|&x| rat(x)).collect();
        for (b, &p) in basis.iter().zip(&pivots) {
            if !v[p].is_zero() {
                let f = &v[p] / &b[p];
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= &f * bi;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            basis.push(v);
            pivots.push(p);
            keep.push(idx);
        }
    }
    keep
}

/// Delsarte LP: maximize p(0) subject to p(z) = 1 + Σ_{e∉D} c_e H̃_e(z) ≥ 0
/// for z = 1..q; θ = binom(n,q)/p(0).  Solved by vertex enumeration.
pub fn delsarte_theta(n: usize, q: usize, d: &[usize]) -> Result<ThetaCertificate> {
    let dset = check_distances(q, d)?;
    if n <= 2 * q {
        return input(format!("Delsarte LP needs n > 2q, got n={n}, q={q}"));
    }
    let edges: Vec<usize> = (1..=q).filter(|e| !dset.contains(e)).collect();
    if edges.len() > 8 {
        return input(format!("{} multipliers exceeds the enumeration limit 8", edges.len()));
    }
    let h = |e: usize, z: usize| dual_hahn_eigenvalue(n, q, e, z).expect("in range");
    // constraint columns over z = 1..q
    let cols: Vec<Vec<i128>> = edges.iter().map(|&e| (1..=q).map(|z| h(e, z)).collect()).collect();
    let keep = independent_columns(&cols);
    let r = keep.len();
    let exact = r <= 4;

    struct Vertex {
        c: Vec<f64>,
        c_exact: Option<Vec<BigRational>>,
        p: Vec<f64>,
        obj: f64,
    }
    let mut vertices: Vec<Vertex> = Vec::new();
    let eval_f = |c: &[f64], z: usize| 1.0 + keep.iter().zip(c).map(|(&k, ci)| ci * h(edges[k], z) as f64).sum::<f64>();

    for active in lex_subsets(q, r) {
        let (c, c_exact, p) = if exact {
            let a: Vec<Vec<BigRational>> =
                active.iter().map(|&z| keep.iter().map(|&k| rat(h(edges[k], z))).collect()).collect();
            let b = vec![rat(-1); r];
            let Some(x) = solve_rational(a, b) else { continue };
            let pz: Vec<BigRational> = (0..=q)
                .map(|z| {
                    keep.iter().zip(&x).fold(rat(1), |acc, (&k, xi)| acc + xi * rat(h(edges[k], z)))
                })
                .collect();
            if pz[1..].iter().any(|v| v.is_negative()) {
                continue;
            }
            (x.iter().map(rat_to_f64).collect::<Vec<_>>(), Some(x), pz.iter().map(rat_to_f64).collect::<Vec<_>>())
        } else {
            let a: Vec<Vec<f64>> = active.iter().map(|&z| keep.iter().map(|&k| h(edges[k], z) as f64).collect()).collect();
            let Some(x) = solve_float(a, vec![-1.0; r]) else { continue };
            let pz: Vec<f64> = (0..=q).map(|z| eval_f(&x, z)).collect();
            let scale = pz.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if pz[1..].iter().any(|&v| v < -1e-9 * scale) {
                continue;
            }
            (x, None, pz)
        };
        vertices.push(Vertex { obj: p[0], c, c_exact, p });
    }
    if vertices.is_empty() {
        // r = 0: only the constant polynomial
        return Err(Error::Contract("Delsarte LP produced no feasible vertex".into()));
    }
    let best = vertices.iter().map(|v| v.obj).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * best.abs().max(1.0);
    let mut optimal: Vec<&Vertex> = vertices.iter().filter(|v| v.obj >= best - tol).collect();
    optimal.sort_by(|a, b| b.obj.total_cmp(&a.obj));
    let mut distinct: Vec<&Vertex> = Vec::new();
    for v in &optimal {
        if !distinct.iter().any(|u| u.c.iter().zip(&v.c).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))) {
            distinct.push(v);
        }
    }
    let v = distinct[0];
    let mut multipliers: Vec<(usize, f64)> = edges.iter().map(|&e| (e, 0.0)).collect();
    for (&k, ci) in keep.iter().zip(&v.c) {
        multipliers[k].1 = *ci;
    }
    let multipliers_exact = v.c_exact.as_ref().map(|x| {
        let mut s = vec!["0".to_string(); edges.len()];
        for (&k, xi) in keep.iter().zip(x) {
            s[k] = xi.to_string();
        }
        s
    });
    let pscale = v.p.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tight = (1..=q).filter(|&z| v.p[z].abs() <= 1e-9 * pscale).collect();
    let cert = ThetaCertificate {
        n,
        q,
        nonedge_distances: dset,
        theta_value: binom_f64(n, q) / v.p[0],
        multipliers,
        multipliers_exact,
        p_values: v.p.clone(),
        tight_constraints: tight,
        ties: distinct.len(),
    };
    cert.check()?;
    Ok(cert)
}

/// Explicit q=4 certificate: c3 = 1/(2(n−8)), c1 = 1/4 − c3, verified
/// exactly against the closed forms for p(0..4).
pub fn theta4_closed_form(n: usize) -> Result<ThetaCertificate> {
    if n % 2 == 1 {
        return input(format!("closed form needs even n, got {n}"));
    }
    if n < 12 {
        return Err(Error::Certificate(format!("n={n} < 12: p(1) < 0 or undefined")));
    }
    let ni = n as i128;
    let c3 = BigRational::new(BigInt::from(1), BigInt::from(2 * (ni - 8)));
    let c1 = BigRational::new(BigInt::from(1), BigInt::from(4)) - &c3;
    let p: Vec<BigRational> = (0..=4)
        .map(|z| {
            let h1 = rat(dual_hahn_eigenvalue(n, 4, 1, z).expect("range"));
            let h3 = rat(dual_hahn_eigenvalue(n, 4, 3, z).expect("range"));
            rat(1) + &c1 * h1 + &c3 * h3
        })
        .collect();
    let frac = |a: i128, b: i128| BigRational::new(BigInt::from(a), BigInt::from(b));
    let want = [
        frac((ni - 1) * (ni - 3), 3),
        frac((ni - 2) * (ni - 4) * (ni - 12), 12 * (ni - 8)),
        rat(0),
        frac((ni - 4) * (ni - 6), 4 * (ni - 8)),
        rat(0),
    ];
    for z in 0..=4 {
        if p[z] != want[z] {
            return Err(Error::Certificate(format!("p({z}) = {} but closed form gives {}", p[z], want[z])));
        }
    }
    if p[1..].iter().any(|x| x.is_negative()) {
        return Err(Error::Certificate("negative p(z)".into()));
    }
    let theta = rat(binom(ni as i64, 4)) / &p[0];
    let cert = ThetaCertificate {
        n,
        q: 4,
        nonedge_distances: vec![2, 4],
        theta_value: rat_to_f64(&theta),
        multipliers: vec![(1, rat_to_f64(&c1)), (3, rat_to_f64(&c3))],
        multipliers_exact: Some(vec![c1.to_string(), c3.to_string()]),
        p_values: p.iter().map(rat_to_f64).collect(),
        tight_constraints: (1..=4).filter(|&z| p[z].is_zero()).collect(),
        ties: 1,
    };
    if theta != rat(binom((n / 2) as i64, 2)) {
        return Err(Error::Certificate(format!("θ = {theta} ≠ binom(n/2,2)")));
    }
    Ok(cert)
}

/// θ·(Id + Σ c_e A_e) − J on the explicit scheme; returns its minimum eigenvalue.
pub fn certificate_min_eig(cert: &ThetaCertificate) -> Result<f64> {
    let v = binom(cert.n as i64, cert.q as i64) as usize;
    let mut m = RMat::identity(v, v);
    for &(e, c) in &cert.multipliers {
        if c != 0.0 {
            m += johnson_relation(cert.n, cert.q, e)? * faer::scale(c);
        }
    }
    let m = m * faer::scale(cert.theta_value) - RMat::from_fn(v, v, |_, _| 1.0);
    Ok(linalg::sym_eigvals(&m)[0])
}

/// Deza–Erdős–Frankl product Π_{d∈D} (n − q + d)/d.
pub fn def_product_bound(n: usize, q: usize, d: &[usize]) -> f64 {
    d.iter().map(|&x| (n as f64 - q as f64 + x as f64) / x as f64).product()
}

/// θ = n·(−λ_min)/(λ_max − λ_min) for vertex- and edge-transitive regular graphs.
pub fn theta_transitive(g: &SimpleGraph) -> Result<f64> {
    let n = g.n();
    if n == 0 {
        return Ok(0.0);
    }
    let d0 = g.degree(0);
    if (1..n).any(|u| g.degree(u) != d0) {
        return input("theta_transitive needs a regular graph");
    }
    if d0 == 0 {
        return Ok(n as f64);
    }
    let ev = linalg::sym_eigvals(&g.adjacency());
    let (lmin, lmax) = (ev[0], ev[n - 1]);
    Ok(n as f64 * (-lmin) / (lmax - lmin))
}

fn linear_form(rep: &GraphReduction, a: &[f64]) -> CMat {
    let d = rep.dim();
    let mut m = CMat::zeros(d, d);
    for (p, &aj) in rep.generators.iter().zip(a) {
        if aj == 0.0 {
            continue;
        }
        add_pauli(&mut m, p, aj);
    }
    m
}

fn add_pauli(m: &mut CMat, p: &PauliString, w: f64) {
    for b in 0..m.ncols() {
        let (r, v) = p.column(b);
        let cur = m.read(r, b);
        m.write(r, b, cur + v * c64::new(w, 0.0));
    }
}

fn normalize(a: &mut [f64]) -> f64 {
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// λ_max(ℓ_a²) with the gradient on the sphere.
fn psi_value_grad(rep: &GraphReduction, a: &[f64]) -> (f64, Vec<f64>) {
    let m = linear_form(rep, a);
    let (vals, vecs) = linalg::herm_eig(&m);
    let d = vals.len();
    let (lam, idx) = if vals[d - 1].abs() >= vals[0].abs() { (vals[d - 1], d - 1) } else { (vals[0], 0) };
    let v: Vec<c64> = (0..d).map(|i| vecs.read(i, idx)).collect();
    let mut g: Vec<f64> = rep
        .generators
        .iter()
        .map(|p| {
            let mut s = 0.0;
            for (b, vb) in v.iter().enumerate() {
                let (r, x) = p.column(b);
                s += (linalg::cconj(v[r]) * x * *vb).re;
            }
            2.0 * lam * s
        })
        .collect();
    let dot: f64 = g.iter().zip(a).map(|(x, y)| x * y).sum();
    g.iter_mut().zip(a).for_each(|(x, y)| *x -= dot * y);
    (lam * lam, g)
}

fn ascend(rep: &GraphReduction, mut a: Vec<f64>) -> (Vec<f64>, f64) {
    normalize(&mut a);
    let (mut f, mut g) = psi_value_grad(rep, &a);
    let mut step = 0.5;
    for _ in 0..400 {
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-10 {
            break;
        }
        let mut improved = false;
        let mut s = step;
        while s > 1e-12 {
            let mut b: Vec<f64> = a.iter().zip(&g).map(|(x, y)| x + s * y).collect();
            normalize(&mut b);
            let (fb, gb) = psi_value_grad(rep, &b);
            if fb > f + 1e-4 * s * gn * gn {
                a = b;
                f = fb;
                g = gb;
                step = (s * 2.0).min(4.0);
                improved = true;
                break;
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, f)
}

/// Signs λ_j of a common eigenvector of the commuting generators in S
/// (0-based ids); a_0 = λ/√|S| restricted to S.
fn independent_set_start(rep: &GraphReduction, set: &[usize]) -> Vec<f64> {
    let n = rep.n;
    let d = rep.dim();
    let mut m = CMat::zeros(d, d);
    for (k, &j) in set.iter().enumerate() {
        // generic weights separate distinct joint sign patterns
        add_pauli(&mut m, &rep.generators[j], 1.0 + 0.0137 * (k as f64 + 1.0).sqrt());
    }
    let (_, vecs) = linalg::herm_eig(&m);
    let v: Vec<c64> = (0..d).map(|i| vecs.read(i, d - 1)).collect();
    let mut a = vec![0.0; n];
    for &j in set {
        let p = &rep.generators[j];
        let mut s = 0.0;
        for (b, vb) in v.iter().enumerate() {
            let (r, x) = p.column(b);
            s += (linalg::cconj(v[r]) * x * *vb).re;
        }
        a[j] = s.signum();
    }
    normalize(&mut a);
    a
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiSearch {
    pub best_a: Vec<f64>,
    /// Certified lower bound on Ψ(Γ): λ_max(π(ℓ_a)²) at best_a.
    pub best_value: f64,
    pub independent_set_value: f64,
    pub alpha: usize,
    pub trial_values: Vec<f64>,
}

/// Projected-gradient search for Ψ(Γ) = max_{|a|=1} Opt(ℓ_a²).
pub fn psi_local_search(g: &AnticommGraph, trials: usize, seed: u64) -> Result<PsiSearch> {
    let rep = repr::canonical_representation(g)?;
    let sg = SimpleGraph::from_anticomm(g);
    let mis = max_independent_set(&sg)?;
    let a0 = independent_set_start(&rep, &mis);
    let (mut best_a, mut best) = ascend(&rep, a0.clone());
    let mis_value = psi_value_grad(&rep, &a0).0;
    let mut rng = NormalStream::new(seed, 3);
    let mut trial_values = Vec::with_capacity(trials);
    for _ in 0..trials {
        let start: Vec<f64> = (0..g.n()).map(|_| rng.next()).collect();
        let (a, f) = ascend(&rep, start);
        trial_values.push(f);
        if f > best {
            best = f;
            best_a = a;
        }
    }
    // report the exactly re-evaluated value at the returned point
    let best_value = psi_value_grad(&rep, &best_a).0;
    Ok(PsiSearch { best_a, best_value, independent_set_value: mis_value, alpha: mis.len(), trial_values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalOptStatus {
    /// λ_max simple at a_0.
    Checked,
    /// λ_max repeated but every tangent direction leaves it unsplit to first order.
    CheckedDegenerate,
    /// λ_max repeated and splits to first order: derivatives not defined.
    SkippedDegenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalOptReport {
    pub a0: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub hessian_max_eig: f64,
    pub hessian_eigs: Vec<f64>,
    pub multiplicity: usize,
    pub maximal: bool,
    pub status: LocalOptStatus,
}

/// Finite-difference gradient and tangent Hessian of a ↦ λ_max(π(ℓ_a)) at
/// the independent-set point a_0 (S 1-based).
pub fn local_opt_check(g: &AnticommGraph, set: &[usize]) -> Result<LocalOptReport> {
    let n = g.n();
    if set.is_empty() || set.iter().any(|&j| j == 0 || j > n) {
        return input("S must be a nonempty subset of 1..=n");
    }
    let ids: Vec<usize> = set.iter().map(|j| j - 1).collect();
    let sg = SimpleGraph::from_anticomm(g);
    if !sg.is_independent(&ids) {
        return input("S is not independent in Γ");
    }
    let maximal = sg.is_maximal_independent(&ids);
    let rep = repr::canonical_representation(g)?;
    let a0 = independent_set_start(&rep, &ids);

    // orthonormal basis of the tangent space a0^⊥
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for b in std::iter::once(&a0).chain(basis.iter()) {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        if normalize(&mut v) > 1e-8 {
            basis.push(v);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    let m = basis.len();

    let m0 = linear_form(&rep, &a0);
    let (vals, vecs) = linalg::herm_eig(&m0);
    let d = vals.len();
    let top = vals[d - 1];
    let mult = vals.iter().filter(|&&x| (x - top).abs() < 1e-8).count();
    let mut status = LocalOptStatus::Checked;
    if mult > 1 {
        // first-order splitting: P B P over every tangent direction
        let p = vecs.submatrix(0, d - mult, d, mult).to_owned();
        let mut split: f64 = 0.0;
        for u in &basis {
            let b = linear_form(&rep, u);
            let pbp = &(p.adjoint() * &b) * &p;
            split = split.max(linalg::max_abs_diff(&pbp, &CMat::zeros(mult, mult)));
        }
        status = if split < 1e-9 { LocalOptStatus::CheckedDegenerate } else { LocalOptStatus::SkippedDegenerate };
    }
    if status == LocalOptStatus::SkippedDegenerate {
        return Ok(LocalOptReport {
            a0,
            value: top,
            grad_norm: f64::NAN,
            hessian_max_eig: f64::NAN,
            hessian_eigs: Vec::new(),
            multiplicity: mult,
            maximal,
            status,
        });
    }

    let f = |t: &[f64]| -> f64 {
        let mut a = a0.clone();
        for (ti, u) in t.iter().zip(&basis) {
            a.iter_mut().zip(u).for_each(|(x, y)| *x += ti * y);
        }
        normalize(&mut a);
        let ev = linalg::herm_eigvals(&linear_form(&rep, &a));
        ev[ev.len() - 1]
    };
    let derivs = |h: f64| -> (Vec<f64>, RMat) {
        let mut grad = vec![0.0; m];
        let mut hess = RMat::zeros(m, m);
        let f0 = f(&vec![0.0; m]);
        let mut t = vec![0.0; m];
        for i in 0..m {
            t[i] = h;
            let fp = f(&t);
            t[i] = -h;
            let fm = f(&t);
            t[i] = 0.0;
            grad[i] = (fp - fm) / (2.0 * h);
            hess.write(i, i, (fp - 2.0 * f0 + fm) / (h * h));
            for j in 0..i {
                let mut val = 0.0;
                for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    t[i] = si * h;
                    t[j] = sj * h;
                    val += w * f(&t);
                }
                t[i] = 0.0;
                t[j] = 0.0;
                let hij = val / (4.0 * h * h);
                hess.write(i, j, hij);
                hess.write(j, i, hij);
            }
        }
        (grad, hess)
    };
    let (g1, h1) = derivs(1e-4);
    let (g2, h2) = derivs(5e-5);
    let grad: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let hess = RMat::from_fn(m, m, |i, j| (4.0 * h2.read(i, j) - h1.read(i, j)) / 3.0);
    let hess_eigs = if m > 0 { linalg::sym_eigvals(&hess) } else { Vec::new() };
    Ok(LocalOptReport {
        a0,
        value: top,
        grad_norm: grad.iter().map(|x| x * x).sum::<f64>().sqrt(),
        hessian_max_eig: hess_eigs.last().copied().unwrap_or(0.0),
        hessian_eigs: hess_eigs,
        multiplicity: mult,
        maximal,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_hahn_examples() {
        assert_eq!(dual_hahn_eigenvalue(12, 4, 1, 0).unwrap(), 32);
        for z in 0..=4 {
            assert_eq!(dual_hahn_eigenvalue(12, 4, 0, z).unwrap(), 1);
        }
    }

    #[test]
    fn theta_n12() {
        let c = delsarte_theta(12, 4, &[2, 4]).unwrap();
        assert!((c.theta_value - 15.0).abs() < 1e-12);
        assert!(c.multipliers_exact.is_some());
        let cf = theta4_closed_form(12).unwrap();
        assert_eq!(cf.p_values[0], 33.0);
        assert_eq!(cf.p_values[1], 0.0);
        assert!((cf.theta_value - 15.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_errors() {
        assert!(matches!(theta4_closed_form(10), Err(Error::Certificate(_))));
        assert!(matches!(theta4_closed_form(13), Err(Error::Input(_))));
    }

    #[test]
    fn alpha_small() {
        assert_eq!(alpha_exact(&SimpleGraph::cycle(5)).unwrap(), 2);
        assert_eq!(alpha_exact(&SimpleGraph::complete(6)).unwrap(), 1);
        assert_eq!(alpha_exact(&SimpleGraph::petersen()).unwrap(), 4);
    }

    #[test]
    fn theta_transitive_examples() {
        assert!((theta_transitive(&SimpleGraph::cycle(5)).unwrap() - 5f64.sqrt()).abs() < 1e-9);
        assert!((theta_transitive(&SimpleGraph::complete(7)).unwrap() - 1.0).abs() < 1e-9);
        assert!((theta_transitive(&SimpleGraph::petersen()).unwrap() - 4.0).abs() < 1e-9);
    }
}
