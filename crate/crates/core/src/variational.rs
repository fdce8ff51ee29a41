//! Variational witness states ρ_θ = e^{−θζ} ρ₀ e^{θζ} for 2-colored SYK,
//! with ζ = Σ_m τ_m σ_m over adjoined Majoranas σ_m.
//!
//! Layout on K_{n1+2n}: φ_1…φ_{n1}, then χ_1…χ_n, then σ_1…σ_n.
//! Values are computed in the eigenbasis of iζ, where conjugation by
//! e^{−θζ} is an entrywise phase.

use faer::complex_native::c64;
use serde::Serialize;

use crate::algebra::{multiply, AnticommGraph, Polynomial, C64};
use crate::error::{input, Error, Result};
use crate::linalg::{self, CMat};
use crate::repr::{self, DenseOperator, GraphReduction, SkewConjugator};
use crate::syk::{self, Model, SykInstance};

/// Cap on n1 + 2n (dimension 2^12).
pub const MAX_TOTAL_MAJORANAS: usize = 24;

pub struct VariationalSetup {
    pub n1: usize,
    pub n: usize,
    pub rep: GraphReduction,
    pub rho0: DenseOperator,
    pub zeta: DenseOperator,
    /// τ_m on K_{n1+2n}.
    pub taus: Vec<Polynomial>,
    /// The instance h embedded in K_{n1+2n}.
    pub h: Polynomial,
    pub first_order: f64,
    conj: SkewConjugator,
    rho0_eig: CMat,
    h_eig: CMat,
}

fn total(n1: usize, n: usize) -> usize {
    n1 + 2 * n
}

/// ρ₀ = Π_m (1 − iσ_mχ_m) as a polynomial.
pub fn reference_polynomial(n1: usize, n: usize) -> Result<Polynomial> {
    let t = total(n1, n);
    let g = AnticommGraph::complete(t);
    let mut rho = Polynomial::scalar(t, C64::new(1.0, 0.0));
    for m in 1..=n {
        // σχ = −χσ, so −iσ_mχ_m = +i χ^{{χ_m, σ_m}}
        let mut f = Polynomial::scalar(t, C64::new(1.0, 0.0));
        f.add_term(vec![n1 + m, n1 + n + m], C64::new(0.0, 1.0));
        rho = multiply(&rho, &f, &g)?;
    }
    Ok(rho)
}

/// h′ = (i/√n) Σ_m σ_m χ_m.
pub fn sigma_chi_form(n1: usize, n: usize) -> Polynomial {
    let mut h = Polynomial::zero(total(n1, n));
    for m in 1..=n {
        // σ_mχ_m = −χ^{{χ_m, σ_m}}
        h.add_term(vec![n1 + m, n1 + n + m], C64::new(0.0, -1.0 / (n as f64).sqrt()));
    }
    h
}

/// ζ = Σ_m τ_m σ_m.
pub fn zeta_polynomial(taus: &[Polynomial], n1: usize, n: usize) -> Result<Polynomial> {
    let t = total(n1, n);
    let g = AnticommGraph::complete(t);
    let mut z = Polynomial::zero(t);
    for (m, tau) in taus.iter().enumerate() {
        let s = Polynomial::monomial(t, vec![n1 + n + m + 1], C64::new(1.0, 0.0))?;
        z = z.add(&multiply(tau, &s, &g)?)?;
    }
    Ok(z)
}

pub fn prepare_reference(inst: &SykInstance) -> Result<VariationalSetup> {
    let n1 = inst.n1.ok_or_else(|| Error::Input("prepare_reference needs a 2-colored instance".into()))?;
    let n = inst.n - n1;
    let t = total(n1, n);
    if t > MAX_TOTAL_MAJORANAS {
        return Err(Error::Resource(format!("n1 + 2n = {t} exceeds {MAX_TOTAL_MAJORANAS}")));
    }
    let taus: Vec<Polynomial> = (1..=n).map(|m| syk::two_color_tau(inst, m)?.embed(t)).collect::<Result<_>>()?;
    let h = inst.h.embed(t)?;
    // odd totals (3n/4 odd in the pipeline) need the reduced representation
    let rep = repr::canonical_representation(&AnticommGraph::complete(t))?;
    let rho0 = repr::represent(&reference_polynomial(n1, n)?, &rep)?;
    let zeta = repr::represent(&zeta_polynomial(&taus, n1, n)?, &rep)?;
    let conj = SkewConjugator::new(&zeta)?;
    let rho0_eig = conj.to_eigenbasis(&rho0.mat);
    let h_eig = conj.to_eigenbasis(&repr::represent(&h, &rep)?.mat);
    let mut setup = VariationalSetup { n1, n, rep, rho0, zeta, taus, h, first_order: 0.0, conj, rho0_eig, h_eig };
    setup.first_order = setup.evaluator(&setup.h.clone())?.first_order();
    Ok(setup)
}

/// tr(ρ_θ h) for one fixed h, O(D²) per θ.
pub struct ThetaEvaluator<'a> {
    setup: &'a VariationalSetup,
    h_eig: CMat,
}

impl VariationalSetup {
    pub fn total_majoranas(&self) -> usize {
        total(self.n1, self.n)
    }

    pub fn evaluator(&self, h: &Polynomial) -> Result<ThetaEvaluator<'_>> {
        let h = if h.n() == self.total_majoranas() { h.clone() } else { h.embed(self.total_majoranas())? };
        if h.max_abs_diff(&self.h) == 0.0 {
            return Ok(ThetaEvaluator { setup: self, h_eig: self.h_eig.clone() });
        }
        let hm = repr::represent(&h, &self.rep)?;
        Ok(ThetaEvaluator { setup: self, h_eig: self.conj.to_eigenbasis(&hm.mat) })
    }

    /// Dense ρ_θ.
    pub fn state(&self, theta: f64) -> DenseOperator {
        self.conj.conjugate(theta, &self.rho0)
    }

    pub fn unitary(&self, theta: f64) -> CMat {
        self.conj.unitary(theta)
    }
}

impl ThetaEvaluator<'_> {
    /// Σ_ab e^{iθ(λ_a−λ_b)} ρ̃_ab h̃_ba / D.
    pub fn value_complex(&self, theta: f64) -> C64 {
        let lam = &self.setup.conj.lambda;
        let r = &self.setup.rho0_eig;
        let d = lam.len();
        // e^{iθ(λ_a−λ_b)} = p_a · conj(p_b)
        let p: Vec<c64> = lam.iter().map(|&l| c64::new((theta * l).cos(), (theta * l).sin())).collect();
        let mut acc = c64::new(0.0, 0.0);
        for b in 0..d {
            let mut col = c64::new(0.0, 0.0);
            for a in 0..d {
                col += p[a] * r.read(a, b) * self.h_eig.read(b, a);
            }
            acc += col * p[b].conj();
        }
        C64::new(acc.re, acc.im) / d as f64
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.value_complex(theta).re
    }

    /// tr(ρ₀[ζ, h]); [ζ,h] has entries −i(λ_a−λ_b)h̃_ab in the eigenbasis.
    pub fn first_order(&self) -> f64 {
        let lam = &self.setup.conj.lambda;
        let r = &self.setup.rho0_eig;
        let d = lam.len();
        let mut acc = c64::new(0.0, 0.0);
        for b in 0..d {
            for a in 0..d {
                acc += r.read(b, a) * self.h_eig.read(a, b) * c64::new(0.0, -(lam[a] - lam[b]));
            }
        }
        acc.re / d as f64
    }

    fn entrywise(&self, f: impl Fn(f64) -> c64) -> CMat {
        let lam = &self.setup.conj.lambda;
        let d = lam.len();
        let mut m = CMat::from_fn(d, d, |a, b| self.h_eig.read(a, b) * f(lam[a] - lam[b]));
        linalg::make_hermitian(&mut m);
        m
    }
}

pub fn conjugated_value(setup: &VariationalSetup, h: &Polynomial, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return input("θ must be finite");
    }
    Ok(setup.evaluator(h)?.value(theta))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaSweep {
    pub best_theta: f64,
    pub best_value: f64,
    pub curve: Vec<(f64, f64)>,
}

/// `count` evenly spaced points on [lo, hi], endpoints included.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn default_grid() -> Vec<f64> {
    linear_grid(0.0, 1.5, 40)
}

pub fn theta_sweep(setup: &VariationalSetup, h: &Polynomial, grid: &[f64]) -> Result<ThetaSweep> {
    if grid.is_empty() {
        return input("θ grid is empty");
    }
    let ev = setup.evaluator(h)?;
    let curve: Vec<(f64, f64)> = grid.iter().map(|&t| (t, ev.value(t))).collect();
    let &(best_theta, best_value) = curve.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty");
    Ok(ThetaSweep { best_theta, best_value, curve })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BchResidual {
    pub theta: f64,
    pub lhs: f64,
    pub bound: f64,
}

/// ‖h_θ − h − θ[ζ,h]‖_op against (θ²/2)‖[ζ,[ζ,h]]‖_op.
pub fn bch_residual(setup: &VariationalSetup, h: &Polynomial, theta: f64) -> Result<BchResidual> {
    Ok(bch_residuals(setup, h, &[theta])?[0])
}

/// `bch_residual` at several θ, sharing the second-commutator norm.
pub fn bch_residuals(setup: &VariationalSetup, h: &Polynomial, thetas: &[f64]) -> Result<Vec<BchResidual>> {
    if let Some(t) = thetas.iter().find(|t| !(t.abs() <= 1.0)) {
        return input(format!("|θ| = {t} exceeds 1"));
    }
    let ev = setup.evaluator(h)?;
    let second = linalg::herm_opnorm(&ev.entrywise(|dl| c64::new(-dl * dl, 0.0)));
    Ok(thetas
        .iter()
        .map(|&theta| {
            let rem = ev.entrywise(|dl| {
                let ph = -theta * dl;
                c64::new(ph.cos() - 1.0, ph.sin() + theta * dl)
            });
            BchResidual { theta, lhs: linalg::herm_opnorm(&rem), bound: 0.5 * theta * theta * second }
        })
        .collect())
}

/// One exponential factor exp(x·c·χ^T) = cos(αx) + (sin(αx)/α)·c·χ^T, with (cχ^T)² = −α².
struct TrotterFactor {
    pauli: repr::PauliString,
    a: c64,
    b: c64,
}

impl TrotterFactor {
    /// F·X.
    fn apply_left(&self, x: &CMat) -> CMat {
        let d = x.nrows();
        let mut out = x * faer::scale(self.a);
        for col in 0..d {
            let (row, v) = self.pauli.column(col);
            let w = v * self.b;
            for j in 0..d {
                let cur = out.read(row, j);
                out.write(row, j, cur + w * x.read(col, j));
            }
        }
        out
    }

    fn dense(&self, nq: usize) -> CMat {
        let d = 1usize << nq;
        CMat::identity(d, d) * faer::scale(self.a) + self.pauli.to_dense(nq) * faer::scale(self.b)
    }
}

fn trotter_factors(setup: &VariationalSetup, x: f64) -> Result<Vec<TrotterFactor>> {
    let t = setup.total_majoranas();
    let zeta = zeta_polynomial(&setup.taus, setup.n1, setup.n)?;
    let g = AnticommGraph::complete(t);
    // colex order of supports
    let mut terms: Vec<(&Vec<usize>, &C64)> = zeta.terms().collect();
    terms.sort_by(|a, b| a.0.iter().rev().cmp(b.0.iter().rev()).then(a.0.len().cmp(&b.0.len())));
    let mut out = Vec::with_capacity(terms.len());
    for (s, c) in terms {
        let sq = if crate::algebra::reversal_negates(s, &g) { -1.0 } else { 1.0 };
        let kappa = c * c * sq;
        if kappa.re > 1e-12 * c.norm_sqr() || kappa.im.abs() > 1e-12 * c.norm_sqr().max(1e-300) {
            return Err(Error::Contract(format!("term {s:?} of ζ is not skew-adjoint")));
        }
        let alpha = (-kappa.re).max(0.0).sqrt();
        let (a, sc) = if alpha == 0.0 { (1.0, x) } else { ((alpha * x).cos(), (alpha * x).sin() / alpha) };
        let b = c * sc;
        out.push(TrotterFactor { pauli: setup.rep.monomial(s), a: c64::new(a, 0.0), b: linalg::to_c64(b) });
    }
    Ok(out)
}

/// Max |FF* − I| over the first-order Trotter factors at step θ/steps.
pub fn trotter_unitarity_defect(setup: &VariationalSetup, theta: f64, steps: usize) -> Result<f64> {
    let fs = trotter_factors(setup, -theta / steps.max(1) as f64)?;
    Ok(fs.iter().map(|f| repr::unitarity_defect(&f.dense(setup.rep.qubits))).fold(0.0, f64::max))
}

#[derive(Clone, Debug)]
pub struct TrotterState {
    pub state: DenseOperator,
    /// ‖ρ_trotter − ρ_θ‖_F / ‖ρ_θ‖_F.
    pub relative_error: f64,
}

/// (Π_terms e^{−(θ/steps) c_T χ^T})^{steps} applied to ρ₀.
pub fn trotter_state(setup: &VariationalSetup, theta: f64, steps: usize) -> Result<TrotterState> {
    if steps == 0 {
        return input("steps must be ≥ 1");
    }
    let fs = trotter_factors(setup, -theta / steps as f64)?;
    let mut rho = setup.rho0.mat.clone();
    for _ in 0..steps {
        // the rightmost factor of the product acts first
        for f in fs.iter().rev() {
            let y = f.apply_left(&rho);
            rho = linalg::adjoint(&f.apply_left(&linalg::adjoint(&y)));
        }
    }
    linalg::make_hermitian(&mut rho);
    let exact = setup.state(theta);
    let relative_error = (&rho - &exact.mat).norm_l2() / exact.mat.norm_l2();
    Ok(TrotterState { state: DenseOperator::new(rho), relative_error })
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub value: f64,
    pub theta: f64,
    pub value_in: f64,
    pub value_out: f64,
    /// Best value of the rescaled c·h_in along the sweep.
    pub scaled_in_value: f64,
    pub c: f64,
    pub first_order: f64,
    pub n1: usize,
    pub n_chi: usize,
}

/// The scaled A_in part of an SYK_4 instance as a 2-colored instance.
pub fn two_color_view(inst: &SykInstance) -> Result<(SykInstance, Polynomial, Polynomial, f64)> {
    let (hin, hout, c) = syk::split_two_color(inst)?;
    let n1 = 3 * inst.n / 4;
    let view = SykInstance { model: Model::Syk2col, n: inst.n, q: 4, n1: Some(n1), seed: inst.seed, h: hin.scale_real(c) };
    Ok((view, hin, hout, c))
}

/// Sweep θ on c·h_in, then evaluate the chosen ρ_θ on the full h.
pub fn witness_pipeline(inst: &SykInstance, grid: &[f64]) -> Result<WitnessReport> {
    if inst.q != 4 {
        return input(format!("witness pipeline needs q = 4, got {}", inst.q));
    }
    if inst.n % 4 != 0 {
        return input(format!("witness pipeline needs 4 | n, got {}", inst.n));
    }
    let (view, _, hout, c) = two_color_view(inst)?;
    let setup = prepare_reference(&view)?;
    let sweep = theta_sweep(&setup, &view.h, grid)?;
    let theta = sweep.best_theta;
    // tr(ρh) is linear in h: one more projection instead of three
    let value_in = sweep.best_value / c;
    let value_out = setup.evaluator(&hout)?.value(theta);
    let value = value_in + value_out;
    Ok(WitnessReport {
        value,
        theta,
        value_in,
        value_out,
        scaled_in_value: sweep.best_value,
        c,
        first_order: setup.first_order,
        n1: view.n1.unwrap_or(0),
        n_chi: inst.n / 4,
    })
}
