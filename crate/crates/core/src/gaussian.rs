//! Fermionic Gaussian states: Wick/Pfaffian moments, exact quadratic
//! optimization, the Gaussian SDP relaxation and its randomized rounding.
//!
//! Covariances are real antisymmetric with Σ_jk = E[iχ_jχ_k]; a block
//! (0, λ; −λ, 0) stands for the factor 1 + iλ ℓ_{2j−1}ℓ_{2j}.

use faer::complex_native::c64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{multiply, AnticommGraph, Polynomial, C64};
use crate::combin::colex_subsets;
use crate::error::{input, Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::repr::{DenseOperator, GraphReduction};

/// Largest n accepted by `solve_sdp_gauss`.
pub const SDP_MAX_N: usize = 24;
/// Default ADMM iteration cap.
pub const SDP_DEFAULT_MAX_ITER: usize = 5000;
const RNG_STREAM_ROUND: u64 = 4;

#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    pub n: usize,
    pub sigma: RMat,
    pub is_state: bool,
}

impl CovarianceMatrix {
    pub fn new(sigma: RMat) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n {
            return Err(Error::Dimension(format!("covariance must be square, got {}×{}", n, sigma.ncols())));
        }
        if n % 2 == 1 {
            return input(format!("covariance needs even n, got {n}"));
        }
        for i in 0..n {
            for j in 0..n {
                if (sigma.read(i, j) + sigma.read(j, i)).abs() > 1e-12 {
                    return input(format!("covariance not antisymmetric at ({},{})", i + 1, j + 1));
                }
            }
        }
        let is_state = antisym_opnorm(&sigma) <= 1.0 + 1e-10;
        Ok(CovarianceMatrix { n, sigma, is_state })
    }

    pub fn zero(n: usize) -> Self {
        CovarianceMatrix { n, sigma: RMat::zeros(n, n), is_state: true }
    }

    /// Blocks (0, λ_j; −λ_j, 0) on pairs (2j−1, 2j).
    pub fn blocks(lambdas: &[f64]) -> Self {
        let n = 2 * lambdas.len();
        let mut s = RMat::zeros(n, n);
        for (j, &l) in lambdas.iter().enumerate() {
            s.write(2 * j, 2 * j + 1, l);
            s.write(2 * j + 1, 2 * j, -l);
        }
        CovarianceMatrix { n, is_state: lambdas.iter().all(|l| l.abs() <= 1.0 + 1e-10), sigma: s }
    }

    pub fn opnorm(&self) -> f64 {
        antisym_opnorm(&self.sigma)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.sigma.read(i, j)).collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("covariance rows must have equal length".into()));
        }
        Self::new(RMat::from_fn(n, n, |i, j| rows[i][j]))
    }
}

fn antisym_opnorm(s: &RMat) -> f64 {
    // ‖Σ‖² = λ_max(ΣᵀΣ)
    let g = s.transpose() * s;
    linalg::sym_eigvals(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Youla form Σ = Oᵀ Λ O with O orthogonal and Λ = ⊕ (0, λ_j; −λ_j, 0), λ_j ≥ 0.
pub fn youla(sigma: &RMat) -> (RMat, Vec<f64>) {
    let n = sigma.nrows();
    let g = CMat::from_fn(n, n, |i, j| c64::new(0.0, sigma.read(i, j)));
    let (vals, vecs) = linalg::herm_eig(&g);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n / 2);
    for (c, &mu) in vals.iter().enumerate().rev() {
        if mu <= tol {
            break;
        }
        let x: Vec<f64> = (0..n).map(|i| vecs.read(i, c).re * std::f64::consts::SQRT_2).collect();
        let y: Vec<f64> = (0..n).map(|i| vecs.read(i, c).im * std::f64::consts::SQRT_2).collect();
        rows.push(y);
        rows.push(x);
        lambdas.push(mu);
    }
    // kernel: real and imaginary parts of null vectors, orthonormalized
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for (c, &mu) in vals.iter().enumerate() {
        if mu.abs() <= tol {
            cands.push((0..n).map(|i| vecs.read(i, c).re).collect());
            cands.push((0..n).map(|i| vecs.read(i, c).im).collect());
        }
    }
    // fall back to the standard basis if the null space is numerically thin
    cands.extend((0..n).map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()));
    for mut v in cands {
        if rows.len() == n {
            break;
        }
        for _ in 0..2 {
            for r in &rows {
                let d: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            rows.push(v.iter().map(|a| a / nrm).collect());
        }
    }
    while lambdas.len() < n / 2 {
        lambdas.push(0.0);
    }
    (RMat::from_fn(n, n, |a, j| rows[a][j]), lambdas)
}

/// Pfaffian of a real antisymmetric matrix.
pub fn pfaffian(a: &RMat) -> f64 {
    let n = a.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    if n <= 8 {
        let idx: Vec<usize> = (0..n).collect();
        return pf_expand(a, &idx);
    }
    pf_eliminate(a.clone())
}

fn pf_expand(a: &RMat, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        2 => a.read(idx[0], idx[1]),
        _ => {
            let mut acc = 0.0;
            let mut rest = Vec::with_capacity(idx.len() - 2);
            for j in 1..idx.len() {
                let v = a.read(idx[0], idx[j]);
                if v == 0.0 {
                    continue;
                }
                rest.clear();
                rest.extend(idx[1..].iter().enumerate().filter(|&(k, _)| k + 1 != j).map(|(_, &x)| x));
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * v * pf_expand(a, &rest);
            }
            acc
        }
    }
}

/// Skew Gaussian elimination with column pivoting.
fn pf_eliminate(mut a: RMat) -> f64 {
    let n = a.nrows();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for r in k + 2..n {
            if a.read(r, k).abs() > a.read(kp, k).abs() {
                kp = r;
            }
        }
        if kp != k + 1 {
            for c in 0..n {
                let t = a.read(k + 1, c);
                a.write(k + 1, c, a.read(kp, c));
                a.write(kp, c, t);
            }
            for r in 0..n {
                let t = a.read(r, k + 1);
                a.write(r, k + 1, a.read(r, kp));
                a.write(r, kp, t);
            }
            pf = -pf;
        }
        let piv = a.read(k, k + 1);
        if piv == 0.0 {
            return 0.0;
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|c| a.read(k, c) / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|r| a.read(r, k + 1)).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    let v = a.read(i, j) + tau[ii] * col[jj] - col[ii] * tau[jj];
                    a.write(i, j, v);
                }
            }
        }
        k += 2;
    }
    pf
}

/// E_Σ[χ^S] = (−i)^{|S|/2} Pf(Σ_{S,S}); zero for odd |S|.
pub fn wick_expectation(cov: &CovarianceMatrix, s: &[usize]) -> C64 {
    let k = s.len();
    if k % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    let sub = RMat::from_fn(k, k, |a, b| cov.sigma.read(s[a] - 1, s[b] - 1));
    let pf = pfaffian(&sub);
    match (k / 2) % 4 {
        0 => C64::new(pf, 0.0),
        1 => C64::new(0.0, -pf),
        2 => C64::new(-pf, 0.0),
        _ => C64::new(0.0, pf),
    }
}

/// tr(ρ_Σ h) for an arbitrary polynomial.
pub fn expectation(cov: &CovarianceMatrix, h: &Polynomial) -> Result<C64> {
    if h.n() != cov.n {
        return Err(Error::Dimension(format!("polynomial on {} vs covariance on {}", h.n(), cov.n)));
    }
    Ok(h.terms().map(|(s, a)| a * wick_expectation(cov, s)).sum())
}

fn pairing4(sig: &RMat, s: &[usize]) -> f64 {
    let at = |a: usize, b: usize| sig.read(s[a] - 1, s[b] - 1);
    -(at(0, 1) * at(2, 3) - at(0, 2) * at(1, 3) + at(0, 3) * at(1, 2))
}

/// tr(ρ_Σ h) for a homogeneous quartic via the three pairings.
pub fn expectation_deg4(cov: &CovarianceMatrix, h: &Polynomial) -> Result<f64> {
    if h.n() != cov.n {
        return Err(Error::Dimension(format!("polynomial on {} vs covariance on {}", h.n(), cov.n)));
    }
    if !h.is_homogeneous(4) {
        return input("expected a homogeneous degree-4 polynomial");
    }
    Ok(h.terms().map(|(s, a)| a.re * pairing4(&cov.sigma, s)).sum())
}

/// Dense ρ_Σ = Π_j (1 + iλ_j ℓ_{2j−1}ℓ_{2j}), ℓ = Oχ, normalized trace 1.
pub fn dense_gaussian_state(cov: &CovarianceMatrix, rep: &GraphReduction) -> Result<DenseOperator> {
    if rep.n != cov.n || rep.s != 0 {
        return Err(Error::Dimension(format!("representation of K_{} needed for covariance on {}", cov.n, cov.n)));
    }
    let n = cov.n;
    let d = rep.dim();
    let (o, lambdas) = youla(&cov.sigma);
    let gens: Vec<CMat> = (1..=n).map(|j| rep.generator_matrix(j)).collect();
    let ell = |a: usize| {
        let mut m = CMat::zeros(d, d);
        for (j, g) in gens.iter().enumerate() {
            let w = o.read(a, j);
            if w != 0.0 {
                m += g * faer::scale(c64::new(w, 0.0));
            }
        }
        m
    };
    let mut rho = CMat::identity(d, d);
    for (j, &l) in lambdas.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let f = CMat::identity(d, d) + (ell(2 * j) * ell(2 * j + 1)) * faer::scale(c64::new(0.0, l));
        rho = &rho * &f;
    }
    linalg::make_hermitian(&mut rho);
    Ok(DenseOperator::new(rho))
}

/// Real antisymmetric A with h₂ = Σ_{j<k} iA_jk χ_jχ_k.
pub fn quadratic_coefficients(h2: &Polynomial) -> Result<RMat> {
    if !h2.is_homogeneous(2) && !h2.is_empty() {
        return input("expected a homogeneous degree-2 polynomial");
    }
    let n = h2.n();
    let mut a = RMat::zeros(n, n);
    let scale = h2.terms().fold(1.0f64, |m, (_, c)| m.max(c.norm()));
    for (s, c) in h2.terms() {
        // c χ_jχ_k = iA χ_jχ_k with A = −ic
        if c.re.abs() > 1e-12 * scale {
            return input(format!("coefficient of {s:?} is not imaginary, so the term is not self-adjoint"));
        }
        a.write(s[0] - 1, s[1] - 1, c.im);
        a.write(s[1] - 1, s[0] - 1, -c.im);
    }
    Ok(a)
}

pub fn quadratic_from_coefficients(a: &RMat) -> Polynomial {
    let n = a.nrows();
    let mut h = Polynomial::zero(n);
    for j in 0..n {
        for k in j + 1..n {
            let v = a.read(j, k);
            if v != 0.0 {
                h.add_term(vec![j + 1, k + 1], C64::new(0.0, v));
            }
        }
    }
    h
}

#[derive(Clone, Debug)]
pub struct QuadraticSolution {
    pub cov: CovarianceMatrix,
    pub opt_value: f64,
}

/// max over Gaussian states of Σ_{j<k} A_jk Σ_jk, attained at Σ = Oᵀ sign(B) O.
pub fn solve_quadratic_exact(h2: &Polynomial) -> Result<QuadraticSolution> {
    let a = quadratic_coefficients(h2)?;
    if h2.n() % 2 == 1 {
        return input(format!("Gaussian states need even n, got {}", h2.n()));
    }
    Ok(maximize_quadratic(&a))
}

fn maximize_quadratic(a: &RMat) -> QuadraticSolution {
    let n = a.nrows();
    let (o, b) = youla(a);
    let lam: Vec<f64> = b.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    let l = CovarianceMatrix::blocks(&lam);
    let sigma = o.transpose() * &l.sigma * &o;
    let sigma = RMat::from_fn(n, n, |i, j| 0.5 * (sigma.read(i, j) - sigma.read(j, i)));
    QuadraticSolution { cov: CovarianceMatrix { n, sigma, is_state: true }, opt_value: b.iter().sum() }
}

/// Index of the pair {j,k} (0-based, j<k) in lexicographic order.
fn pair_index(n: usize, j: usize, k: usize) -> usize {
    j * (2 * n - j - 1) / 2 + (k - j - 1)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect()
}

/// H = −Σ a_S (|S₁S₂⟩⟨S₃S₄| − |S₁S₃⟩⟨S₂S₄| + |S₁S₄⟩⟨S₂S₃|), symmetrized;
/// |jk⟩ ↦ row (j−1)n + (k−1).
pub fn build_sdp_objective(h: &Polynomial) -> Result<RMat> {
    if !h.is_homogeneous(4) {
        return input("expected a homogeneous degree-4 polynomial");
    }
    let n = h.n();
    let mut m = RMat::zeros(n * n, n * n);
    let id = |a: usize, b: usize| (a - 1) * n + (b - 1);
    for (s, a) in h.terms() {
        let a = a.re;
        for (p, q, sg) in [((0, 1), (2, 3), 1.0), ((0, 2), (1, 3), -1.0), ((0, 3), (1, 2), 1.0)] {
            let r = id(s[p.0], s[p.1]);
            let c = id(s[q.0], s[q.1]);
            m.write(r, c, m.read(r, c) - 0.5 * sg * a);
            m.write(c, r, m.read(c, r) - 0.5 * sg * a);
        }
    }
    Ok(m)
}

/// Reduce an n²×n² matrix to the antisymmetric subspace: BᵀMB.
fn reduce(m: &RMat, n: usize) -> RMat {
    let ps = pairs(n);
    let e = |a: usize, b: usize| a * n + b;
    RMat::from_fn(ps.len(), ps.len(), |p, q| {
        let (a, b) = ps[p];
        let (c, d) = ps[q];
        0.5 * (m.read(e(a, b), e(c, d)) - m.read(e(b, a), e(c, d)) - m.read(e(a, b), e(d, c)) + m.read(e(b, a), e(d, c)))
    })
}

/// B R̃ Bᵀ back on C^n ⊗ C^n.
fn expand(r: &RMat, n: usize) -> RMat {
    let mut out = RMat::zeros(n * n, n * n);
    let ps = pairs(n);
    for (p, &(a, b)) in ps.iter().enumerate() {
        for (q, &(c, d)) in ps.iter().enumerate() {
            let v = 0.5 * r.read(p, q);
            out.write(a * n + b, c * n + d, v);
            out.write(b * n + a, c * n + d, -v);
            out.write(a * n + b, d * n + c, -v);
            out.write(b * n + a, d * n + c, v);
        }
    }
    out
}

fn sgn(j: usize, k: usize) -> f64 {
    if j < k {
        1.0
    } else {
        -1.0
    }
}

/// Tr₁ of B R̃ Bᵀ (equal to Tr₂ on the antisymmetric subspace).
fn partial_trace(r: &RMat, n: usize) -> RMat {
    let mut t = RMat::zeros(n, n);
    for k in 0..n {
        for k2 in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                if j == k || j == k2 {
                    continue;
                }
                let p = pair_index(n, j.min(k), j.max(k));
                let q = pair_index(n, j.min(k2), j.max(k2));
                acc += sgn(j, k) * sgn(j, k2) * 0.5 * r.read(p, q);
            }
            t.write(k, k2, acc);
        }
    }
    t
}

/// Adjoint of `partial_trace`.
fn partial_trace_adjoint(y: &RMat, n: usize) -> RMat {
    let ps = pairs(n);
    let m = ps.len();
    let mut out = RMat::zeros(m, m);
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            let p = pair_index(n, j.min(k), j.max(k));
            for k2 in 0..n {
                if k2 == j {
                    continue;
                }
                let q = pair_index(n, j.min(k2), j.max(k2));
                out.write(p, q, out.read(p, q) + sgn(j, k) * sgn(j, k2) * 0.5 * y.read(k, k2));
            }
        }
    }
    out
}

fn sym_from_eig(u: &RMat, d: &[f64]) -> RMat {
    let m = u.nrows();
    let scaled = RMat::from_fn(m, d.len(), |i, j| u.read(i, j) * d[j]);
    &scaled * u.transpose()
}

fn project_psd(x: &RMat) -> RMat {
    let (vals, u) = linalg::sym_eig(x);
    let d: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    sym_from_eig(&u, &d)
}

/// Frobenius projection onto {X : Tr₁(BXBᵀ) ⪯ I}, using TT*(Z) = ((n−2)Z + Tr Z·I)/4.
fn project_partial_trace(x: &RMat, n: usize) -> RMat {
    let t = partial_trace(x, n);
    let (d, u) = linalg::sym_eig(&t);
    let nf = (n - 2) as f64;
    let excess: Vec<f64> = d.iter().map(|v| 4.0 * (v - 1.0)).collect();
    if excess.iter().all(|&e| e <= 0.0) {
        return x.clone();
    }
    let total = |s: f64| excess.iter().map(|&e| ((e - s) / nf).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, excess.iter().fold(0.0f64, |m, &e| m + e.max(0.0)) / nf);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let z: Vec<f64> = excess.iter().map(|&e| ((e - s) / nf).max(0.0)).collect();
    x - partial_trace_adjoint(&sym_from_eig(&u, &z), n)
}

fn frob_inner(a: &RMat, b: &RMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a.read(i, j) * b.read(i, j);
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpResiduals {
    pub psd_min_eig: f64,
    pub trace1_excess: f64,
    pub trace2_excess: f64,
    pub antisym_violation: f64,
}

#[derive(Clone, Debug)]
pub struct SdpGaussSolution {
    pub n: usize,
    /// R restricted to the antisymmetric subspace, pairs in lexicographic order.
    pub r_reduced: RMat,
    pub objective: f64,
    pub residuals: SdpResiduals,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpGaussSolution {
    /// The full n²×n² matrix R.
    pub fn r(&self) -> RMat {
        expand(&self.r_reduced, self.n)
    }
}

fn residuals(r_red: &RMat, n: usize) -> SdpResiduals {
    let full = expand(r_red, n);
    let nn = n * n;
    let mut t1 = RMat::zeros(n, n);
    let mut t2 = RMat::zeros(n, n);
    let mut anti: f64 = 0.0;
    for a in 0..n {
        for c in 0..n {
            let (mut s1, mut s2) = (0.0, 0.0);
            for j in 0..n {
                // Tr₁ sums the first factor, Tr₂ the second
                s1 += full.read(j * n + a, j * n + c);
                s2 += full.read(a * n + j, c * n + j);
            }
            t1.write(a, c, s1);
            t2.write(a, c, s2);
        }
    }
    for r in 0..nn {
        let (a, b) = (r / n, r % n);
        for c in 0..nn {
            anti = anti.max((full.read(a * n + b, c) + full.read(b * n + a, c)).abs());
        }
    }
    let top = |m: &RMat| linalg::sym_eigvals(m).last().copied().unwrap_or(0.0);
    SdpResiduals {
        psd_min_eig: linalg::sym_eigvals(r_red).first().copied().unwrap_or(0.0),
        trace1_excess: top(&t1) - 1.0,
        trace2_excess: top(&t2) - 1.0,
        antisym_violation: anti,
    }
}

/// Maximize Tr(RH) over {R ⪰ 0, Tr₁R ⪯ I, Tr₂R ⪯ I, R antisymmetric in each
/// pair} by ADMM on the splitting PSD ∩ {Tr₁ ⪯ I}, each step one exact
/// projection per set.  The sign subspace is imposed by parametrization, where
/// Tr₁ = Tr₂.  Every PSD iterate is scaled into the feasible set and the best
/// such point is returned, so the objective is a certified lower estimate.
pub fn solve_sdp_gauss(h: &Polynomial, tol: Option<f64>, max_iter: usize) -> Result<SdpGaussSolution> {
    let n = h.n();
    if n > SDP_MAX_N {
        return Err(Error::Resource(format!("SDP supports n ≤ {SDP_MAX_N}, got {n}")));
    }
    if n < 4 {
        return input(format!("SDP needs n ≥ 4, got {n}"));
    }
    let hr = reduce(&build_sdp_objective(h)?, n);
    let hnorm = hr.norm_l2();
    let m = hr.nrows();
    if hnorm == 0.0 {
        let z = RMat::zeros(m, m);
        return Ok(SdpGaussSolution {
            n,
            residuals: residuals(&z, n),
            r_reduced: z,
            objective: 0.0,
            iterations: 0,
            status: SdpStatus::Converged,
        });
    }
    let tol = tol.unwrap_or(1e-6 * hnorm);
    let mut rho = hnorm;
    let mut z = RMat::zeros(m, m);
    let mut u = RMat::zeros(m, m);
    let mut best = RMat::zeros(m, m);
    let mut best_obj = 0.0;
    let mut last_check = 0.0;
    let mut stalls = 0;
    let mut status = SdpStatus::MaxIterations;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let x = project_psd(&(&z - &u + &hr * faer::scale(1.0 / rho)));
        let top = linalg::sym_eigvals(&partial_trace(&x, n)).last().copied().unwrap_or(0.0);
        let feas = if top > 1.0 { &x * faer::scale(1.0 / top) } else { x.clone() };
        let f = frob_inner(&feas, &hr);
        if f > best_obj {
            best_obj = f;
            best = feas;
        }
        let z_old = z;
        z = project_partial_trace(&(&x + &u), n);
        u = &u + &x - &z;
        let r_norm = (&x - &z).norm_l2();
        let s_norm = rho * (&z - &z_old).norm_l2();
        if it % 10 == 0 {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u = &u * faer::scale(0.5);
            } else if s_norm > 10.0 * r_norm {
                rho *= 0.5;
                u = &u * faer::scale(2.0);
            }
        }
        if it % 50 == 0 {
            let gain = best_obj - last_check;
            last_check = best_obj;
            // the returned point is always feasible, so a stalled objective suffices
            stalls = if gain < tol { stalls + 1 } else { 0 };
            let small = r_norm < 1e-6 * (1.0 + z.norm_l2()) && s_norm < 1e-6 * hnorm * (1.0 + u.norm_l2());
            if (gain < tol && small) || stalls >= 4 {
                status = SdpStatus::Converged;
                break;
            }
        }
    }
    Ok(SdpGaussSolution { n, residuals: residuals(&best, n), r_reduced: best, objective: best_obj, iterations: it, status })
}

#[derive(Clone, Debug)]
pub struct RoundingResult {
    pub cov: CovarianceMatrix,
    pub value: f64,
    pub sigma_scale: f64,
}

/// Factor L̃ with R̃ = L̃L̃ᵀ (PSD square root; tiny eigenvalues dropped).
fn factor(r: &RMat) -> RMat {
    let (vals, u) = linalg::sym_eig(r);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-12 * top.max(1e-300)).collect();
    RMat::from_fn(r.nrows(), keep.len(), |i, j| u.read(i, keep[j]) * vals[keep[j]].sqrt())
}

fn rademacher(rng: &mut ChaCha20Rng, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut w = rng.next_u64();
        for _ in 0..64 {
            if out.len() == k {
                break;
            }
            out.push(if w & 1 == 1 { 1.0 } else { -1.0 });
            w >>= 1;
        }
    }
    out
}

/// Σ = Mat(L x) for one Rademacher draw (before scaling by σ).
fn draw(l: &RMat, n: usize, rng: &mut ChaCha20Rng) -> RMat {
    let x = rademacher(rng, l.ncols());
    let mut w = vec![0.0; l.nrows()];
    for (j, xj) in x.iter().enumerate() {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi += l.read(i, j) * xj;
        }
    }
    let mut s = RMat::zeros(n, n);
    for (p, (a, b)) in pairs(n).into_iter().enumerate() {
        let v = w[p] / std::f64::consts::SQRT_2;
        s.write(a, b, v);
        s.write(b, a, -v);
    }
    s
}

/// Unscaled samples Σ with E[Vec(Σ)Vec(Σ)ᵀ] = R, for checking the rounding law.
pub fn rounding_samples(sol: &SdpGaussSolution, count: usize, seed: u64) -> Vec<RMat> {
    let l = factor(&sol.r_reduced);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(RNG_STREAM_ROUND);
    (0..count).map(|_| draw(&l, sol.n, &mut rng)).collect()
}

/// Keep the spectral part of G = iΣ with |λ| ≤ 1 and return Σ̂ = −iĜ.
pub fn truncate_covariance(sigma: &RMat) -> RMat {
    let n = sigma.nrows();
    let g = CMat::from_fn(n, n, |i, j| c64::new(0.0, sigma.read(i, j)));
    let (vals, u) = linalg::herm_eig(&g);
    if vals.iter().all(|v| v.abs() <= 1.0) {
        return sigma.clone();
    }
    let mut out = RMat::zeros(n, n);
    for (c, &v) in vals.iter().enumerate() {
        if v.abs() > 1.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                // −i·v·u_i ū_j, real part
                let z = u.read(i, c) * linalg::cconj(u.read(j, c));
                out.write(i, j, out.read(i, j) + v * z.im);
            }
        }
    }
    RMat::from_fn(n, n, |i, j| 0.5 * (out.read(i, j) - out.read(j, i)))
}

pub const SIGMA_GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Randomized rounding of an SDP solution to a Gaussian state; best of `trials`.
pub fn round_to_gaussian(
    sol: &SdpGaussSolution,
    h: &Polynomial,
    sigma_scale: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<RoundingResult> {
    let n = sol.n;
    if h.n() != n {
        return Err(Error::Dimension(format!("polynomial on {} vs SDP on {n}", h.n())));
    }
    let zero = RoundingResult { cov: CovarianceMatrix::zero(n), value: 0.0, sigma_scale: 0.0 };
    if sol.objective <= 0.0 || trials == 0 {
        return Ok(zero);
    }
    let l = factor(&sol.r_reduced);
    let norm_a = h.coeff_norm_sq().sqrt();
    let eps = sol.objective / (n as f64 * norm_a);
    let shape = 1.0 / (1.0f64 / eps).ln().max(1.0).sqrt();
    let grid: Vec<f64> = match sigma_scale {
        Some(s) => vec![s],
        None => SIGMA_GRID.iter().map(|c| c * shape).collect(),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(RNG_STREAM_ROUND);
    let mut best = zero;
    for _ in 0..trials {
        let raw = draw(&l, n, &mut rng);
        for &sg in &grid {
            let s = truncate_covariance(&(&raw * faer::scale(sg)));
            let cov = CovarianceMatrix { n, is_state: true, sigma: s };
            let v = expectation_deg4(&cov, h)?;
            if v > best.value {
                best = RoundingResult { cov, value: v, sigma_scale: sg };
            }
        }
    }
    debug_assert!(best.cov.opnorm() <= 1.0 + 1e-10);
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct WitnessResult {
    pub cov: CovarianceMatrix,
    pub value: f64,
    pub c: f64,
    pub g1_opnorm: f64,
}

/// Block witness g₀ + C g₁: g₀ pairs up the first n/2 Majoranas, g₁ lives on
/// the last n/2 with entries Σ_{i<j≤n/2} (g₀)_{ij} a_{ijkl}; C is scanned.
pub fn syk_gaussian_witness(h: &Polynomial) -> Result<WitnessResult> {
    let n = h.n();
    if n % 4 != 0 || n == 0 {
        return input(format!("witness needs n divisible by 4, got {n}"));
    }
    if !h.is_homogeneous(4) {
        return input("expected a homogeneous degree-4 polynomial");
    }
    let half = n / 2;
    let mut g0 = RMat::zeros(n, n);
    for t in 0..n / 4 {
        g0.write(2 * t, 2 * t + 1, 1.0);
        g0.write(2 * t + 1, 2 * t, -1.0);
    }
    let mut g1 = RMat::zeros(n, n);
    for k in half..n {
        for l in k + 1..n {
            let mut v = 0.0;
            for t in 0..n / 4 {
                v += h.coeff(&[2 * t + 1, 2 * t + 2, k + 1, l + 1]).re;
            }
            g1.write(k, l, v);
            g1.write(l, k, -v);
        }
    }
    let g1n = antisym_opnorm(&g1);
    let cmax = if g1n > 0.0 { 1.0 / g1n } else { 0.0 };
    let mut best: Option<WitnessResult> = None;
    for step in 0..=400 {
        let c = cmax * (step as f64 / 200.0 - 1.0);
        let sigma = &g0 + &g1 * faer::scale(c);
        let cov = CovarianceMatrix { n, is_state: true, sigma };
        let v = expectation_deg4(&cov, h)?;
        if best.as_ref().map_or(true, |b| v > b.value) {
            best = Some(WitnessResult { cov, value: v, c, g1_opnorm: g1n });
        }
    }
    Ok(best.expect("nonempty scan"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowRankTerm {
    pub lambda: f64,
    /// Real antisymmetric n×n matrix, row-major.
    pub a: Vec<Vec<f64>>,
}

impl LowRankTerm {
    /// The coefficient matrix, checked square and antisymmetric.
    pub fn matrix(&self) -> Result<RMat> {
        let n = self.a.len();
        if self.a.iter().any(|r| r.len() != n) {
            return input("low-rank term matrix is not square");
        }
        let m = RMat::from_fn(n, n, |i, j| self.a[i][j]);
        let defect = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (m.read(i, j) + m.read(j, i)).abs()).fold(0.0, f64::max);
        if defect > 1e-12 {
            return input(format!("low-rank term matrix is not antisymmetric (defect {defect:.1e})"));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug)]
pub struct LowRankResult {
    pub cov: CovarianceMatrix,
    pub value: f64,
    /// Σ_α λ_α t_α² per iteration (nondecreasing).
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// p = Σ_α λ_α Q_α² with Q_α = Σ_{j<k} iA_jk χ_jχ_k, as a polynomial.
pub fn lowrank_polynomial(terms: &[(f64, RMat)]) -> Result<Polynomial> {
    let n = terms.first().map_or(0, |(_, a)| a.nrows());
    let g = AnticommGraph::complete(n);
    let mut p = Polynomial::zero(n);
    for (l, a) in terms {
        let q = quadratic_from_coefficients(a);
        p = p.add(&multiply(&q, &q, &g)?.scale_real(*l))?;
    }
    Ok(p)
}

fn linear_value(a: &RMat, s: &RMat) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            t += a.read(j, k) * s.read(j, k);
        }
    }
    t
}

/// Alternating maximization of Σ λ_α t_α² over Gaussian states; each step
/// maximizes the linearization Σ 2λ_α t_α Q_α exactly.
pub fn lowrank_optimize(terms: &[(f64, RMat)]) -> Result<LowRankResult> {
    if terms.len() > 16 {
        return input(format!("at most 16 terms supported, got {}", terms.len()));
    }
    let Some((_, first)) = terms.first() else {
        return Ok(LowRankResult { cov: CovarianceMatrix::zero(0), value: 0.0, objective_trace: vec![0.0], iterations: 0 });
    };
    let n = first.nrows();
    if n % 2 == 1 {
        return input(format!("Gaussian states need even n, got {n}"));
    }
    // ‖A‖_F = 1, with the norm moved into λ
    let mut norm_terms = Vec::with_capacity(terms.len());
    for (l, a) in terms {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension("all A_α must be n×n".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (a.read(i, j) + a.read(j, i)).abs() > 1e-12 {
                    return input("A_α must be antisymmetric");
                }
            }
        }
        let f = a.norm_l2();
        if f == 0.0 {
            continue;
        }
        norm_terms.push((l * f * f, a * faer::scale(1.0 / f)));
    }
    let objective = |s: &RMat| norm_terms.iter().map(|(l, a)| l * linear_value(a, s).powi(2)).sum::<f64>();

    let mut cov = CovarianceMatrix::zero(n);
    let mut obj = 0.0;
    for (l, a) in &norm_terms {
        if *l > 0.0 {
            let c = maximize_quadratic(a).cov;
            let v = objective(&c.sigma);
            if v > obj {
                obj = v;
                cov = c;
            }
        }
    }
    let mut trace = vec![obj];
    let mut iterations = 0;
    for _ in 0..1000 {
        let mut lin = RMat::zeros(n, n);
        for (l, a) in &norm_terms {
            lin += a * faer::scale(2.0 * l * linear_value(a, &cov.sigma));
        }
        let next = maximize_quadratic(&lin).cov;
        let v = objective(&next.sigma);
        if v <= obj + 1e-9 {
            if v > obj {
                cov = next;
                obj = v;
                trace.push(obj);
            }
            break;
        }
        iterations += 1;
        cov = next;
        obj = v;
        trace.push(obj);
    }
    let p = lowrank_polynomial(terms)?;
    let value = expectation(&cov, &p)?.re;
    Ok(LowRankResult { cov, value, objective_trace: trace, iterations })
}

/// All Wick moments E[χ^S] with |S| ≤ k (used by moment checks).
pub fn gaussian_moments(cov: &CovarianceMatrix, k: usize) -> std::collections::BTreeMap<Vec<usize>, C64> {
    (0..=k.min(cov.n)).flat_map(|d| colex_subsets(cov.n, d)).map(|s| {
        let v = wick_expectation(cov, &s);
        (s, v)
    }).collect()
}
