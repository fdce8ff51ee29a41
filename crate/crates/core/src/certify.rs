//! Upper-bound certificates for degree-4 Hamiltonians on K_n, fooling
//! pseudostates, and moment-matrix verification.
//!
//! Two τ decompositions are used.  The commutator form
//! τ_m = −(i√n/8)[h, χ_m] gives h = (i/√n) Σ_m τ_m χ_m and
//!
//!   Σ_m τ_m² = n|a|²/4 − (n/64)·h(K),   K = (J^mat)²,
//!
//! where h(K) = Σ_{i,j,k,l distinct} K_{ij,kl} χ_iχ_jχ_kχ_l.  The triangular
//! form τ_m = i√n Σ_{T⊆[m−1]} a_{T∪m} χ^T gives h = −(i/√n) Σ_m τ_m χ_m.
//! Both identities are re-derived symbolically by the calibration self-test
//! before any certificate is issued.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use faer::complex_native::c64;
use serde::Serialize;
use serde_json::json;

use crate::algebra::{adjoint, commutator, multiply, reversal_negates, AnticommGraph, Polynomial, C64};
use crate::combin::{binom_f64, colex_subsets, complete_product_sign, ln_double_factorial_odd, mask_of, support_of};
use crate::error::{input, Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::repr;

/// Rows above which operator norms switch from dense eigen-solves to iteration.
pub const DENSE_NORM_MAX_ROWS: usize = 2000;
/// Row cap for the fooling matrix m.
pub const FOOLING_MAX_ROWS: usize = 4000;
/// Coefficientwise tolerance of the calibration self-test.
pub const CALIBRATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub method: String,
    pub bound: f64,
    pub side: Side,
    pub evidence: serde_json::Value,
    pub sos_degree: Option<usize>,
    /// False for bounds that hold only in expectation over the instance law.
    pub instance_specific: bool,
}

/// Antisymmetric 4-index tensor J with its n²×n² matrix view.
#[derive(Clone, Debug)]
pub struct JTensor {
    pub n: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
    /// Row (i,j) ↦ (i−1)n + (j−1), column (k,l) likewise.
    pub jmat: RMat,
}

const PERMS4: [([usize; 4], f64); 24] = perms4();

const fn perms4() -> [([usize; 4], f64); 24] {
    let mut out = [([0usize; 4], 0.0f64); 24];
    let mut idx = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                let mut d = 0;
                while d < 4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        let p = [a, b, c, d];
                        let mut inv = 0;
                        let mut i = 0;
                        while i < 4 {
                            let mut j = i + 1;
                            while j < 4 {
                                if p[i] > p[j] {
                                    inv += 1;
                                }
                                j += 1;
                            }
                            i += 1;
                        }
                        out[idx] = (p, if inv % 2 == 0 { 1.0 } else { -1.0 });
                        idx += 1;
                    }
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

fn real_quartic(h: &Polynomial) -> Result<Vec<(Vec<usize>, f64)>> {
    if !h.is_homogeneous(4) {
        return input("expected a homogeneous degree-4 polynomial");
    }
    let scale = h.terms().fold(1.0f64, |m, (_, a)| m.max(a.norm()));
    let mut out = Vec::with_capacity(h.len());
    for (s, a) in h.terms() {
        if a.im.abs() > 1e-12 * scale {
            return input(format!("coefficient of {s:?} is not real: {a}"));
        }
        out.push((s.clone(), a.re));
    }
    Ok(out)
}

/// Antisymmetric extension of the real coefficient vector of h.
pub fn build_jtensor(h: &Polynomial) -> Result<JTensor> {
    let terms = real_quartic(h)?;
    let n = h.n();
    let mut jmat = RMat::zeros(n * n, n * n);
    for (s, a) in &terms {
        for (p, sg) in PERMS4 {
            let (i, j, k, l) = (s[p[0]] - 1, s[p[1]] - 1, s[p[2]] - 1, s[p[3]] - 1);
            jmat.write(i * n + j, k * n + l, sg * a);
        }
    }
    Ok(JTensor { n, coeffs: terms.into_iter().collect(), jmat })
}

impl JTensor {
    /// J_{ijkl} (1-based): sign of the sorting permutation times a_S.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let mut idx = [i, j, k, l];
        let mut sign = 1.0;
        for x in 0..4 {
            for y in 0..3 - x {
                if idx[y] == idx[y + 1] {
                    return 0.0;
                }
                if idx[y] > idx[y + 1] {
                    idx.swap(y, y + 1);
                    sign = -sign;
                }
            }
        }
        sign * self.coeffs.get(idx.as_slice()).copied().unwrap_or(0.0)
    }

    pub fn coeff_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|a| a * a).sum()
    }

    /// K = (J^mat)².
    pub fn square(&self) -> RMat {
        &self.jmat * &self.jmat
    }

    /// Ascending eigenvalues of the symmetric J^mat.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigvals(&self.jmat)
    }

    pub fn opnorm(&self) -> f64 {
        sym_opnorm_auto(&self.jmat)
    }
}

/// Dense eigen-solve up to `DENSE_NORM_MAX_ROWS`, power iteration on A² above.
pub fn sym_opnorm_auto(a: &RMat) -> f64 {
    let n = a.nrows();
    if n <= DENSE_NORM_MAX_ROWS {
        return linalg::sym_opnorm(a);
    }
    let mut x = RMat::from_fn(n, 1, |i, _| 1.0 + ((i * 7919) % 13) as f64 * 0.01);
    let mut lam = 0.0;
    for _ in 0..10_000 {
        let y = a * (a * &x);
        let nrm = y.norm_l2();
        if nrm == 0.0 {
            return 0.0;
        }
        let next = nrm / x.norm_l2();
        x = y * faer::scale(1.0 / nrm);
        if (next - lam).abs() <= 1e-12 * next {
            lam = next;
            break;
        }
        lam = next;
    }
    lam.sqrt()
}

/// Operator norm of a Hermitian matrix, dense or Lanczos by size.
pub fn herm_opnorm_auto(a: &CMat) -> f64 {
    if a.nrows() <= DENSE_NORM_MAX_ROWS {
        return linalg::herm_opnorm(a);
    }
    let (hi, _) = repr::lanczos_extreme(a, true);
    let (lo, _) = repr::lanczos_extreme(a, false);
    hi.abs().max(lo.abs())
}

/// χ^U coefficient of h(K) for sorted U (0-based indices into K).
fn hk_coeff(k: &RMat, n: usize, u: &[usize]) -> f64 {
    let at = |a: usize, b: usize, c: usize, d: usize| k.read((a - 1) * n + (b - 1), (c - 1) * n + (d - 1));
    8.0 * (at(u[0], u[1], u[2], u[3]) - at(u[0], u[2], u[1], u[3]) + at(u[0], u[3], u[1], u[2]))
}

/// h(K) = Σ_{distinct} K_{ij,kl} χ_iχ_jχ_kχ_l as a polynomial.
pub fn h_of_matrix(k: &RMat, n: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for u in colex_subsets(n, 4) {
        let c = hk_coeff(k, n, &u);
        if c != 0.0 {
            p.add_term(u, C64::new(c, 0.0));
        }
    }
    p
}

/// Matrix form of Σ_m τ_m² (commutator τ): the scalar and degree-4 parts.
pub fn sum_tau_sq_matrix(j: &JTensor) -> (f64, Polynomial) {
    let n = j.n;
    let t0 = n as f64 * j.coeff_norm_sq() / 4.0;
    let hk = h_of_matrix(&j.square(), n);
    (t0, hk.scale_real(-(n as f64) / 64.0))
}

/// τ_m = −(i√n/8)[h, χ_m].
pub fn tau_commutator(h: &Polynomial, m: usize) -> Result<Polynomial> {
    let n = h.n();
    let g = AnticommGraph::complete(n);
    let chi = Polynomial::monomial(n, vec![m], C64::new(1.0, 0.0))?;
    Ok(commutator(h, &chi, &g, false)?.scale(C64::new(0.0, -(n as f64).sqrt() / 8.0)))
}

/// τ_m = i√n Σ_{T⊆[m−1], |T|=3} a_{T∪m} χ^T.
pub fn tau_triangular(h: &Polynomial, m: usize) -> Result<Polynomial> {
    let terms = real_quartic(h)?;
    let n = h.n();
    let mut t = Polynomial::zero(n);
    for (s, a) in terms {
        if s[3] == m {
            t.add_term(s[..3].to_vec(), C64::new(0.0, (n as f64).sqrt() * a));
        }
    }
    Ok(t)
}

/// Σ_m τ_m² by direct symbolic squaring.
pub fn sum_squares_symbolic(taus: &[Polynomial], n: usize) -> Result<Polynomial> {
    let g = AnticommGraph::complete(n);
    let mut acc = Polynomial::zero(n);
    for t in taus {
        acc = acc.add(&multiply(t, t, &g)?)?;
    }
    Ok(acc)
}

/// Fast kernel for the triangular Σ τ_m²: (scalar part, degree-4 coefficients by mask).
pub fn tau_triangular_square(h: &Polynomial) -> Result<(f64, BTreeMap<u64, f64>)> {
    let terms = real_quartic(h)?;
    let n = h.n();
    if n > 64 {
        return Err(Error::Resource("tau kernel supports n ≤ 64".into()));
    }
    let nf = n as f64;
    let mut by_m: Vec<Vec<(u64, f64)>> = vec![Vec::new(); n + 1];
    for (s, a) in &terms {
        by_m[s[3]].push((mask_of(&s[..3]), *a));
    }
    let mut deg0 = 0.0;
    let mut c: BTreeMap<u64, f64> = BTreeMap::new();
    for list in &by_m {
        for (x, &(mt, bt)) in list.iter().enumerate() {
            deg0 += nf * bt * bt;
            for &(mu, bu) in &list[x + 1..] {
                if (mt & mu).count_ones() == 1 {
                    let sg = complete_product_sign(mt, mu);
                    *c.entry(mt ^ mu).or_insert(0.0) += -2.0 * nf * bt * bu * sg;
                }
            }
        }
    }
    Ok((deg0, c))
}

/// Chernoff/trace-moment bound β = min_k (2^{n/2}(k−1)!!)^{1/k} on E[Opt_±].
pub fn chernoff_moment_bound(n: usize, q: usize) -> Result<CertificateReport> {
    chernoff_moment_bound_over(n, q, &(1..=2 * n).map(|j| 2 * j).collect::<Vec<_>>())
}

/// Same, minimizing only over the given even k.
pub fn chernoff_moment_bound_over(n: usize, q: usize, ks: &[usize]) -> Result<CertificateReport> {
    if q > n {
        return input(format!("q={q} exceeds n={n}"));
    }
    if n % 2 == 1 {
        return input(format!("chernoff bound needs even n, got {n}"));
    }
    let mut best = (f64::INFINITY, 0usize);
    for &k in ks {
        if k == 0 || k % 2 == 1 {
            return input(format!("moment order {k} must be even and positive"));
        }
        let lb = (0.5 * n as f64 * std::f64::consts::LN_2 + ln_double_factorial_odd(k)) / k as f64;
        if lb < best.0 {
            best = (lb, k);
        }
    }
    let beta = best.0.exp();
    Ok(CertificateReport {
        method: "chernoff".into(),
        bound: beta,
        side: Side::Upper,
        evidence: json!({ "k": best.1, "beta_over_sqrt_n": beta / (n as f64).sqrt() }),
        sos_degree: None,
        instance_specific: false,
    })
}

fn lovasz4_factor(n: usize) -> Result<f64> {
    if n % 2 == 1 {
        return input(format!("the q=4 θ step needs even n, got {n}"));
    }
    if n < 12 {
        return Err(Error::Certificate(format!("θ(G_even^(n,4)) ≤ binom(n/2,2) needs n ≥ 12, got n={n}")));
    }
    Ok(binom_f64(n / 2, 2).sqrt())
}

/// Degree-8 certificate from the commutator τ and the q=4 θ bound on the
/// degree-4 part of Σ τ_m².
pub fn schatten4_certificate(h: &Polynomial) -> Result<CertificateReport> {
    ensure_calibrated()?;
    let n = h.n();
    let factor = lovasz4_factor(n)?;
    let j = build_jtensor(h)?;
    let (t0, p4) = sum_tau_sq_matrix(&j);
    let p_norm = p4.coeff_norm_sq().sqrt();
    let ev = j.eigenvalues();
    let schatten4 = ev.iter().map(|x| x.powi(4)).sum::<f64>().powf(0.25);
    let bound = (t0 + p_norm * factor).sqrt();
    Ok(CertificateReport {
        method: "schatten4".into(),
        bound,
        side: Side::Upper,
        evidence: json!({
            "t0": t0,
            "deg4_norm": p_norm,
            "theta_factor": factor,
            "jmat_schatten4": schatten4,
            "n_times_schatten4": n as f64 * schatten4,
        }),
        sos_degree: Some(8),
        instance_specific: true,
    })
}

/// Degree-8 certificate from the triangular τ decomposition.
pub fn tau_triangular_certificate(h: &Polynomial) -> Result<CertificateReport> {
    ensure_calibrated()?;
    let n = h.n();
    let factor = lovasz4_factor(n)?;
    let (deg0, c) = tau_triangular_square(h)?;
    let c_norm = c.values().map(|x| x * x).sum::<f64>().sqrt();
    let bound = (deg0 + c_norm * factor).sqrt();
    Ok(CertificateReport {
        method: "tau".into(),
        bound,
        side: Side::Upper,
        evidence: json!({ "deg0": deg0, "deg4_norm": c_norm, "theta_factor": factor }),
        sos_degree: Some(8),
        instance_specific: true,
    })
}

/// κ in Σ τ_m² ≤ t₀ + κ‖J^mat‖²_op.
pub fn frag42_kappa(n: usize) -> f64 {
    let nf = n as f64;
    nf * nf * (nf - 1.0) / 64.0
}

/// SOS_{4,2} fragment certificate: −h(K) ≤ n(n−1)‖K‖ − 2Tr K with K ⪰ 0.
pub fn fragment42_certificate(h: &Polynomial) -> Result<CertificateReport> {
    ensure_calibrated()?;
    let n = h.n();
    let j = build_jtensor(h)?;
    let t0 = n as f64 * j.coeff_norm_sq() / 4.0;
    let op = j.opnorm();
    let kappa = frag42_kappa(n);
    let bound = (t0 + kappa * op * op).sqrt();
    let tr_k = 24.0 * j.coeff_norm_sq();
    let with_trace = (t0 + kappa * op * op - n as f64 * 2.0 * tr_k / 64.0).max(0.0).sqrt();
    Ok(CertificateReport {
        method: "frag42".into(),
        bound,
        side: Side::Upper,
        evidence: json!({
            "t0": t0,
            "jmat_opnorm": op,
            "kappa": kappa,
            "bound_keeping_trace_term": with_trace,
        }),
        sos_degree: Some(6),
        instance_specific: true,
    })
}

fn coeffs_by_mask(h: &Polynomial) -> Result<BTreeMap<u64, C64>> {
    if h.n() > 64 {
        return Err(Error::Resource("mask kernels support n ≤ 64".into()));
    }
    Ok(h.terms().map(|(s, a)| (mask_of(s), *a)).collect())
}

/// m'_{S,T} = tr(h (χ^S)* χ^T) over |S| = |T| = q/2 (colex order).
pub fn fooling_matrix(h: &Polynomial, q: usize) -> Result<CMat> {
    if q % 2 == 1 || q == 0 {
        return input(format!("fooling needs even q ≥ 2, got {q}"));
    }
    if !h.is_homogeneous(q) && !h.is_empty() {
        return input(format!("expected a homogeneous degree-{q} polynomial"));
    }
    let n = h.n();
    let rows = binom_f64(n, q / 2);
    if rows > FOOLING_MAX_ROWS as f64 {
        return Err(Error::Resource(format!("binom({n},{}) = {rows} rows exceeds {FOOLING_MAX_ROWS}", q / 2)));
    }
    let coeffs = coeffs_by_mask(h)?;
    let subsets: Vec<u64> = colex_subsets(n, q / 2).iter().map(|s| mask_of(s)).collect();
    let half = q / 2;
    let rev = if (half * half.saturating_sub(1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
    let sq = if (q * (q - 1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
    let d = subsets.len();
    let mut m = CMat::zeros(d, d);
    for (r, &s) in subsets.iter().enumerate() {
        for (c, &t) in subsets.iter().enumerate() {
            if s & t != 0 {
                continue;
            }
            if let Some(a) = coeffs.get(&(s | t)) {
                let f = rev * complete_product_sign(s, t) * sq;
                m.write(r, c, c64::new(f * a.re, f * a.im));
            }
        }
    }
    Ok(m)
}

/// Lower bound C·Σ|a_S|² on SOS_q(h) from the pseudostate ρ = 1 + C·h.
pub fn fooling_pseudostate(h: &Polynomial, q: usize) -> Result<CertificateReport> {
    let m = fooling_matrix(h, q)?;
    let norm = herm_opnorm_auto(&m);
    let a2 = h.coeff_norm_sq();
    if norm == 0.0 {
        return Ok(CertificateReport {
            method: "fooling".into(),
            bound: 0.0,
            side: Side::Lower,
            evidence: json!({ "C": 0.0, "m_opnorm": 0.0, "min_eig": 1.0, "coeff_norm_sq": a2 }),
            sos_degree: Some(q),
            instance_specific: true,
        });
    }
    let c = (1.0 - 1e-6) / norm;
    // I + C m' has the extremes 1 + C·λ
    let min_eig = if m.nrows() <= DENSE_NORM_MAX_ROWS {
        let ev = linalg::herm_eigvals(&m);
        1.0 + c * ev[0]
    } else {
        1.0 + c * repr::lanczos_extreme(&m, false).0
    };
    Ok(CertificateReport {
        method: "fooling".into(),
        bound: c * a2,
        side: Side::Lower,
        evidence: json!({ "C": c, "m_opnorm": norm, "min_eig": min_eig, "coeff_norm_sq": a2, "q": q }),
        sos_degree: Some(q),
        instance_specific: true,
    })
}

/// Pseudo-moments Ẽ[χ^S] = tr((1 + C h) χ^S) for every |S| ≤ 2k.
pub fn fooling_moment_values(h: &Polynomial, c: f64, k: usize) -> BTreeMap<Vec<usize>, C64> {
    let n = h.n();
    let g = AnticommGraph::complete(n);
    let mut out = BTreeMap::new();
    for d in 0..=(2 * k).min(n) {
        for s in colex_subsets(n, d) {
            let a = h.coeff(&s);
            let sq = if reversal_negates(&s, &g) { -1.0 } else { 1.0 };
            let v = if d == 0 { C64::new(1.0, 0.0) + a * c } else { a * (c * sq) };
            out.insert(s, v);
        }
    }
    out
}

/// Moments Ẽ[χ^S] = tr(ρ π(χ^S)) of a dense state with tr(ρ) = 1 (normalized trace).
pub fn state_moments(rho: &CMat, rep: &repr::GraphReduction, max_deg: usize) -> BTreeMap<Vec<usize>, C64> {
    let mut out = BTreeMap::new();
    for d in 0..=max_deg.min(rep.n) {
        for s in colex_subsets(rep.n, d) {
            let p = rep.monomial(&s);
            let mut acc = c64::new(0.0, 0.0);
            for b in 0..rep.dim() {
                let (r, v) = p.column(b);
                acc += rho.read(b, r) * v;
            }
            out.insert(s, linalg::from_c64(acc) / rep.dim() as f64);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentCheck {
    pub dim: usize,
    pub is_psd: bool,
    pub min_eig: f64,
    pub violated_linear_constraints: usize,
    pub violations: Vec<String>,
}

fn lookup(values: &BTreeMap<Vec<usize>, C64>, s: &[usize]) -> Result<C64> {
    values.get(s).copied().ok_or_else(|| Error::Input(format!("missing pseudo-moment for support {s:?}")))
}

/// Degree-2k moment matrix M_{S,T} = Ẽ[(χ^S)* χ^T] over |S|,|T| ≤ k.
pub fn moment_matrix_check(values: &BTreeMap<Vec<usize>, C64>, k: usize, g: &AnticommGraph) -> Result<MomentCheck> {
    let n = g.n();
    let rows: Vec<Vec<usize>> = (0..=k.min(n)).flat_map(|d| colex_subsets(n, d)).collect();
    let d = rows.len();
    let mut m = CMat::zeros(d, d);
    for (r, s) in rows.iter().enumerate() {
        let rs = if reversal_negates(s, g) { -1.0 } else { 1.0 };
        for (c, t) in rows.iter().enumerate() {
            let (u, neg) = crate::algebra::product_raw(s, t, g);
            let sign = rs * if neg { -1.0 } else { 1.0 };
            m.write(r, c, linalg::to_c64(lookup(values, &u)? * sign));
        }
    }
    let mut violations = Vec::new();
    let one = lookup(values, &[])?;
    if (one - C64::new(1.0, 0.0)).norm() > 1e-9 {
        violations.push(format!("normalization Ẽ[1] = {one}"));
    }
    for (s, v) in values {
        if s.len() > 2 * k {
            continue;
        }
        // Ẽ[(χ^S)*] = conj Ẽ[χ^S]
        let rev = if reversal_negates(s, g) { -1.0 } else { 1.0 };
        if (v.conj() - v * rev).norm() > 1e-9 * v.norm().max(1.0) {
            violations.push(format!("Hermiticity at {s:?}"));
        }
    }
    let defect = linalg::hermitian_defect(&m);
    linalg::make_hermitian(&mut m);
    let min_eig = linalg::herm_eigvals(&m)[0];
    if defect > 1e-9 && violations.is_empty() {
        violations.push(format!("moment matrix not Hermitian (defect {defect:.2e})"));
    }
    Ok(MomentCheck { dim: d, is_psd: min_eig >= -1e-8, min_eig, violated_linear_constraints: violations.len(), violations })
}

/// The τ-dependent blocks of the 4,2 fragment that are tied to M_{4,0}.
#[derive(Clone, Debug)]
pub struct FragmentMoments {
    /// Ẽ[χ^S] for |S| ≤ 4.
    pub chi: BTreeMap<Vec<usize>, C64>,
    /// chi_tau[i][j] = Ẽ[χ_{i+1} τ_{j+1}].
    pub chi_tau: Vec<Vec<C64>>,
    /// tau_anti[i][j] = Ẽ[τ_{i+1}τ_{j+1} + τ_{j+1}τ_{i+1}].
    pub tau_anti: Vec<Vec<C64>>,
}

fn apply(values: &BTreeMap<Vec<usize>, C64>, p: &Polynomial) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (s, a) in p.terms() {
        acc += a * lookup(values, s)?;
    }
    Ok(acc)
}

/// Fragment blocks of a dense state (commutator τ of h).
pub fn fragment_moments_from_state(h: &Polynomial, rho: &CMat, rep: &repr::GraphReduction) -> Result<FragmentMoments> {
    let n = h.n();
    let chi = state_moments(rho, rep, 4.min(n));
    let all = state_moments(rho, rep, n);
    let g = AnticommGraph::complete(n);
    let taus: Vec<Polynomial> = (1..=n).map(|m| tau_commutator(h, m)).collect::<Result<_>>()?;
    let mut chi_tau = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut tau_anti = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        let xi = Polynomial::monomial(n, vec![i + 1], C64::new(1.0, 0.0))?;
        for j in 0..n {
            chi_tau[i][j] = apply(&all, &multiply(&xi, &taus[j], &g)?)?;
            let tt = multiply(&taus[i], &taus[j], &g)?.add(&multiply(&taus[j], &taus[i], &g)?)?;
            tau_anti[i][j] = apply(&all, &tt)?;
        }
    }
    Ok(FragmentMoments { chi, chi_tau, tau_anti })
}

/// Check that M_{1,1} and the symmetric part of M_{0,2} are the linear
/// functions of M_{4,0} dictated by the algebra; returns violation messages.
pub fn fragment42_lincon_check(h: &Polynomial, fm: &FragmentMoments) -> Result<Vec<String>> {
    let n = h.n();
    let g = AnticommGraph::complete(n);
    let taus: Vec<Polynomial> = (1..=n).map(|m| tau_commutator(h, m)).collect::<Result<_>>()?;
    let mut bad = Vec::new();
    for i in 0..n {
        let xi = Polynomial::monomial(n, vec![i + 1], C64::new(1.0, 0.0))?;
        for j in 0..n {
            let p = multiply(&xi, &taus[j], &g)?;
            if p.degree() > 4 {
                return Err(Error::Contract("χ_i τ_j has degree above 4".into()));
            }
            let want = apply(&fm.chi, &p)?;
            if (want - fm.chi_tau[i][j]).norm() > 1e-9 * want.norm().max(1.0) {
                bad.push(format!("M11[{},{}]", i + 1, j + 1));
            }
            let a = multiply(&taus[i], &taus[j], &g)?.add(&multiply(&taus[j], &taus[i], &g)?)?;
            if a.degree() > 4 {
                return Err(Error::Contract("{τ_i,τ_j} has degree above 4".into()));
            }
            let want = apply(&fm.chi, &a)?;
            if (want - fm.tau_anti[i][j]).norm() > 1e-9 * want.norm().max(1.0) {
                bad.push(format!("M02[{},{}]", i + 1, j + 1));
            }
        }
    }
    Ok(bad)
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub sizes: Vec<usize>,
    /// max |matrix-form − symbolic| over Σ τ_m² coefficients (commutator τ).
    pub commutator_form_error: f64,
    /// max |fast kernel − symbolic| for the triangular τ.
    pub triangular_form_error: f64,
    /// max |(±i/√n) Σ τ_m χ_m − h| over both decompositions.
    pub reconstruction_error: f64,
    /// n(n−1)‖K‖ − 2Tr K − λ_max(−h(K)) at n=8 (must be ≥ 0).
    pub frag42_slack: f64,
}

fn run_calibration() -> Result<CalibrationReport> {
    let sizes = vec![8, 10, 12];
    let mut comm_err: f64 = 0.0;
    let mut tri_err: f64 = 0.0;
    let mut rec_err: f64 = 0.0;
    let mut slack = f64::INFINITY;
    for &n in &sizes {
        let h = crate::syk::sample_syk(n, 4, 0xC0FFEE + n as u64)?.h;
        let g = AnticommGraph::complete(n);
        let sq = C64::new(0.0, 1.0 / (n as f64).sqrt());
        let chis: Vec<Polynomial> =
            (1..=n).map(|m| Polynomial::monomial(n, vec![m], C64::new(1.0, 0.0))).collect::<Result<_>>()?;

        let taus: Vec<Polynomial> = (1..=n).map(|m| tau_commutator(&h, m)).collect::<Result<_>>()?;
        let symbolic = sum_squares_symbolic(&taus, n)?;
        let j = build_jtensor(&h)?;
        let (t0, p4) = sum_tau_sq_matrix(&j);
        let matrix_form = p4.add(&Polynomial::scalar(n, C64::new(t0, 0.0)))?;
        comm_err = comm_err.max(symbolic.max_abs_diff(&matrix_form));
        let mut rec = Polynomial::zero(n);
        for (t, c) in taus.iter().zip(&chis) {
            rec = rec.add(&multiply(t, c, &g)?)?;
        }
        rec_err = rec_err.max(rec.scale(sq).max_abs_diff(&h));
        for t in &taus {
            if adjoint(t, &g)?.max_abs_diff(t) > 1e-12 {
                return Err(Error::Calibration("commutator τ_m not self-adjoint".into()));
            }
        }

        let tri: Vec<Polynomial> = (1..=n).map(|m| tau_triangular(&h, m)).collect::<Result<_>>()?;
        let symbolic = sum_squares_symbolic(&tri, n)?;
        let (deg0, c) = tau_triangular_square(&h)?;
        let mut fast = Polynomial::scalar(n, C64::new(deg0, 0.0));
        for (mask, v) in c {
            fast.add_term(support_of(mask), C64::new(v, 0.0));
        }
        tri_err = tri_err.max(symbolic.max_abs_diff(&fast));
        let mut rec = Polynomial::zero(n);
        for (t, c) in tri.iter().zip(&chis) {
            rec = rec.add(&multiply(t, c, &g)?)?;
        }
        rec_err = rec_err.max(rec.scale(-sq).max_abs_diff(&h));

        if n == 8 {
            let k = j.square();
            let hk = h_of_matrix(&k, n);
            let rep = repr::build_gamma_representation(n)?;
            let lam = repr::eig_extremes(&repr::represent(&hk.scale_real(-1.0), &rep)?, repr::EigMode::Max)?.value();
            let knorm = linalg::sym_opnorm(&k);
            let mut tr = 0.0;
            for i in 0..k.nrows() {
                tr += k.read(i, i);
            }
            slack = (n * (n - 1)) as f64 * knorm - 2.0 * tr - lam;
        }
    }
    let rep = CalibrationReport {
        sizes,
        commutator_form_error: comm_err,
        triangular_form_error: tri_err,
        reconstruction_error: rec_err,
        frag42_slack: slack,
    };
    if comm_err > CALIBRATION_TOL || tri_err > CALIBRATION_TOL || rec_err > CALIBRATION_TOL || slack < -1e-9 {
        return Err(Error::Calibration(format!("{rep:?}")));
    }
    Ok(rep)
}

static CALIBRATION: OnceLock<Result<CalibrationReport>> = OnceLock::new();

/// Run (once per process) the symbolic-vs-matrix calibration self-test.
pub fn ensure_calibrated() -> Result<&'static CalibrationReport> {
    CALIBRATION.get_or_init(run_calibration).as_ref().map_err(|e| match e {
        Error::Calibration(m) => Error::Calibration(m.clone()),
        other => Error::Calibration(other.to_string()),
    })
}
