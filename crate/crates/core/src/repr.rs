//! Matrix representations of 𝔠(Γ) and the dense spectral kernels.
//!
//! Generators are stored as Pauli strings i^p·X^x·Z^z on D = 2^{N−r}
//! dimensional space; qubit 0 is the leftmost tensor factor (most
//! significant bit of a basis index).

use std::io::Write;
use std::path::Path;

use faer::complex_native::c64;
use serde::Serialize;

use crate::algebra::{product_raw, AnticommGraph, Polynomial};
use crate::error::{input, Error, Result};
use crate::linalg::{self, CMat, CZERO};

/// Largest qubit count a dense operator may use (D ≤ 2^14).
pub const DEFAULT_MAX_QUBITS: usize = 14;
/// Above this dimension extremal eigenvalues come from a Lanczos iteration.
pub const FULL_EIG_MAX_DIM: usize = 4096;

const PHASES: [c64; 4] = [
    c64 { re: 1.0, im: 0.0 },
    c64 { re: 0.0, im: 1.0 },
    c64 { re: -1.0, im: 0.0 },
    c64 { re: 0.0, im: -1.0 },
];

/// Pauli string i^phase · X^x · Z^z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    fn bit(nq: usize, q: usize) -> u64 {
        1u64 << (nq - 1 - q)
    }

    pub fn single_x(nq: usize, q: usize) -> Self {
        PauliString { x: Self::bit(nq, q), z: 0, phase: 0 }
    }

    pub fn single_y(nq: usize, q: usize) -> Self {
        let b = Self::bit(nq, q);
        PauliString { x: b, z: b, phase: 1 }
    }

    pub fn single_z(nq: usize, q: usize) -> Self {
        PauliString { x: 0, z: Self::bit(nq, q), phase: 0 }
    }

    #[inline]
    pub fn mul(&self, o: &PauliString) -> PauliString {
        let swap = (self.z & o.x).count_ones() as u8;
        PauliString {
            x: self.x ^ o.x,
            z: self.z ^ o.z,
            phase: (self.phase + o.phase + 2 * (swap % 2)) % 4,
        }
    }

    pub fn scaled_by_i(&self, k: u8) -> PauliString {
        PauliString { phase: (self.phase + k) % 4, ..*self }
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase as u32 % 2) == (self.x & self.z).count_ones() % 2
    }

    pub fn anticommutes(&self, o: &PauliString) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 1
    }

    /// Entry of column b: the row index and the value.
    #[inline]
    pub fn column(&self, b: usize) -> (usize, c64) {
        let sgn = ((self.z & b as u64).count_ones() % 2) as u8;
        (b ^ self.x as usize, PHASES[((self.phase + 2 * sgn) % 4) as usize])
    }

    pub fn to_dense(&self, nq: usize) -> CMat {
        let d = 1usize << nq;
        let mut m = CMat::zeros(d, d);
        for b in 0..d {
            let (r, v) = self.column(b);
            m.write(r, b, v);
        }
        m
    }
}

/// Representation of 𝔠(Γ): images of χ_1…χ_N as Pauli strings.
#[derive(Clone, Debug)]
pub struct GraphReduction {
    pub n: usize,
    /// Half the F2 rank of the adjacency matrix.
    pub r: usize,
    /// N − 2r.
    pub s: usize,
    /// log2 of the representation dimension, N − r.
    pub qubits: usize,
    pub generators: Vec<PauliString>,
}

impl GraphReduction {
    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    /// Dense image of χ_j (1-based).
    pub fn generator_matrix(&self, j: usize) -> CMat {
        self.generators[j - 1].to_dense(self.qubits)
    }

    /// Pauli string of χ^S (product in ascending order).
    pub fn monomial(&self, support: &[usize]) -> PauliString {
        support
            .iter()
            .fold(PauliString::IDENTITY, |acc, &j| acc.mul(&self.generators[j - 1]))
    }

    /// Check Hermiticity, involution and the Γ anti/commutation pattern.
    pub fn verify(&self, g: &AnticommGraph) -> Result<()> {
        if g.n() != self.n {
            return Err(Error::Dimension(format!("graph n={} vs representation n={}", g.n(), self.n)));
        }
        for (j, p) in self.generators.iter().enumerate() {
            if !p.is_hermitian() {
                return Err(Error::Contract(format!("generator {} not Hermitian", j + 1)));
            }
            if p.mul(p) != PauliString::IDENTITY {
                return Err(Error::Contract(format!("generator {} does not square to 1", j + 1)));
            }
            for k in j + 1..self.n {
                if p.anticommutes(&self.generators[k]) != g.anticommute(j + 1, k + 1) {
                    return Err(Error::Contract(format!("pair ({},{}) violates Γ", j + 1, k + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Weyl–Brauer γ matrices: γ_{2k−1} = Z^{⊗(k−1)}⊗X⊗I…, γ_{2k} = Z^{⊗(k−1)}⊗Y⊗I….
pub fn build_gamma_representation(n: usize) -> Result<GraphReduction> {
    build_gamma_representation_capped(n, DEFAULT_MAX_QUBITS)
}

pub fn build_gamma_representation_capped(n: usize, max_qubits: usize) -> Result<GraphReduction> {
    if n % 2 == 1 {
        return input(format!("gamma representation needs even n, got {n}"));
    }
    let nq = n / 2;
    if nq > max_qubits {
        return Err(Error::Resource(format!("n={n} needs 2^{nq} dimensions (cap 2^{max_qubits})")));
    }
    let mut gens = Vec::with_capacity(n);
    for k in 0..nq {
        let zs = (0..k).fold(0u64, |m, q| m | PauliString::bit(nq, q));
        let mut gx = PauliString::single_x(nq, k);
        gx.z |= zs;
        let mut gy = PauliString::single_y(nq, k);
        gy.z |= zs;
        gens.push(gx);
        gens.push(gy);
    }
    Ok(GraphReduction { n, r: nq, s: 0, qubits: nq, generators: gens })
}

/// Symbolic generator i^phase·χ^S over the original Γ.
#[derive(Clone, Debug)]
struct Expr {
    phase: u8,
    support: Vec<usize>,
}

impl Expr {
    fn mul(&self, o: &Expr, g: &AnticommGraph) -> Expr {
        let (support, neg) = product_raw(&self.support, &o.support, g);
        Expr { phase: (self.phase + o.phase + if neg { 2 } else { 0 }) % 4, support }
    }
}

/// Reduce Γ over F2 to r matched pairs plus s isolated vertices and emit a
/// dimension-2^{N−r} representation of the *original* generators.
pub fn reduce_graph_f2(g: &AnticommGraph) -> Result<GraphReduction> {
    reduce_graph_f2_capped(g, DEFAULT_MAX_QUBITS)
}

pub fn reduce_graph_f2_capped(g: &AnticommGraph, max_qubits: usize) -> Result<GraphReduction> {
    let n = g.n();
    if n > 64 {
        return Err(Error::Resource(format!("F2 reduction supports at most 64 generators, got {n}")));
    }
    let mut a = vec![vec![false; n]; n];
    for j in 0..n {
        for k in 0..n {
            a[j][k] = j != k && g.anticommute(j + 1, k + 1);
        }
    }
    let mut expr: Vec<Expr> = (1..=n).map(|j| Expr { phase: 0, support: vec![j] }).collect();
    let mut open: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::new();
    let mut isolated = Vec::new();

    // g_w ← i^{A_wp} g_w g_p, then row/column w += row/column p
    let absorb = |w: usize, p: usize, a: &mut Vec<Vec<bool>>, expr: &mut Vec<Expr>| {
        let c = if a[w][p] { 1 } else { 0 };
        let mut e = expr[w].mul(&expr[p], g);
        e.phase = (e.phase + c) % 4;
        expr[w] = e;
        for x in 0..n {
            if x != w {
                let v = a[w][x] ^ a[p][x];
                a[w][x] = v;
                a[x][w] = v;
            }
        }
    };

    while let Some(&u) = open.first() {
        let partner = open.iter().copied().find(|&v| v != u && a[u][v]);
        match partner {
            None => {
                isolated.push(u);
                open.retain(|&x| x != u);
            }
            Some(v) => {
                pairs.push((u, v));
                open.retain(|&x| x != u && x != v);
                for &w in &open {
                    if a[w][v] {
                        absorb(w, u, &mut a, &mut expr);
                    }
                    if a[w][u] {
                        absorb(w, v, &mut a, &mut expr);
                    }
                }
            }
        }
    }

    let r = pairs.len();
    let s = isolated.len();
    let nq = n - r;
    if nq > max_qubits {
        return Err(Error::Resource(format!("Γ needs 2^{nq} dimensions (cap 2^{max_qubits})")));
    }
    let mut canon = vec![PauliString::IDENTITY; n];
    for (i, &(u, v)) in pairs.iter().enumerate() {
        canon[u] = PauliString::single_x(nq, i);
        canon[v] = PauliString::single_y(nq, i);
    }
    for (j, &u) in isolated.iter().enumerate() {
        canon[u] = PauliString::single_z(nq, r + j);
    }

    // Express each original χ_j as a product of reduced generators (F2 solve).
    let masks: Vec<u64> = expr.iter().map(|e| crate::combin::mask_of(&e.support)).collect();
    let mut rows: Vec<(u64, u64)> = masks.iter().enumerate().map(|(m, &mk)| (mk, 1u64 << m)).collect();
    let mut pivots: Vec<(u32, u64, u64)> = Vec::new();
    for bit in 0..n as u32 {
        if let Some(idx) = rows.iter().position(|&(mk, _)| mk >> bit & 1 == 1) {
            let (pm, pc) = rows.swap_remove(idx);
            for row in rows.iter_mut() {
                if row.0 >> bit & 1 == 1 {
                    row.0 ^= pm;
                    row.1 ^= pc;
                }
            }
            for pv in pivots.iter_mut() {
                if pv.1 >> bit & 1 == 1 {
                    pv.1 ^= pm;
                    pv.2 ^= pc;
                }
            }
            pivots.push((bit, pm, pc));
        }
    }
    if pivots.len() != n {
        return Err(Error::Contract("F2 substitution sequence is not invertible".into()));
    }
    let mut gens = Vec::with_capacity(n);
    for j in 0..n {
        let combo = pivots
            .iter()
            .find(|p| p.0 == j as u32)
            .map(|p| p.2)
            .ok_or_else(|| Error::Contract("missing pivot".into()))?;
        let mut sym = Expr { phase: 0, support: Vec::new() };
        let mut mat = PauliString::IDENTITY;
        for m in 0..n {
            if combo >> m & 1 == 1 {
                sym = sym.mul(&expr[m], g);
                mat = mat.mul(&canon[m]);
            }
        }
        if sym.support != vec![j + 1] {
            return Err(Error::Contract(format!("back-substitution failed for χ_{}", j + 1)));
        }
        gens.push(mat.scaled_by_i((4 - sym.phase) % 4));
    }
    let out = GraphReduction { n, r, s, qubits: nq, generators: gens };
    out.verify(g)?;
    Ok(out)
}

/// γ matrices for complete graphs with even N, F2 reduction otherwise.
pub fn canonical_representation(g: &AnticommGraph) -> Result<GraphReduction> {
    if g.is_complete() && g.n() % 2 == 0 {
        build_gamma_representation(g.n())
    } else {
        reduce_graph_f2(g)
    }
}

/// Explicit D×D complex matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub dim: usize,
    pub mat: CMat,
    pub hermitian: bool,
}

impl DenseOperator {
    /// Wrap a matrix, setting the Hermitian flag from a 1e−12 entry check.
    pub fn new(mat: CMat) -> Self {
        let dim = mat.nrows();
        let scale = max_entry(&mat).max(1.0);
        let hermitian = linalg::hermitian_defect(&mat) <= 1e-12 * scale;
        DenseOperator { dim, mat, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator { dim, mat: CMat::identity(dim, dim), hermitian: true }
    }

    /// Normalized trace.
    pub fn ntrace(&self) -> crate::algebra::C64 {
        linalg::ntrace(&self.mat)
    }

    /// Row-major interleaved (re, im) doubles plus a JSON header file.
    pub fn export(&self, bin_path: &Path, header_path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(bin_path)?);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.mat.read(i, j);
                f.write_all(&z.re.to_le_bytes())?;
                f.write_all(&z.im.to_le_bytes())?;
            }
        }
        f.flush()?;
        #[derive(Serialize)]
        struct Header {
            dim: usize,
            hermitian: bool,
        }
        let h = serde_json::to_string(&Header { dim: self.dim, hermitian: self.hermitian })
            .map_err(std::io::Error::other)?;
        std::fs::write(header_path, h)
    }
}

fn max_entry(m: &CMat) -> f64 {
    let mut x: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m.read(i, j);
            x = x.max(z.re.abs()).max(z.im.abs());
        }
    }
    x
}

/// π(h) = Σ_S a_S · (product of generators over S).
pub fn represent(h: &Polynomial, rep: &GraphReduction) -> Result<DenseOperator> {
    if h.n() != rep.n {
        return Err(Error::Dimension(format!("polynomial n={} vs representation n={}", h.n(), rep.n)));
    }
    let d = rep.dim();
    let mut m = CMat::zeros(d, d);
    for (s, a) in h.terms() {
        let p = rep.monomial(s);
        let a = linalg::to_c64(*a);
        for b in 0..d {
            let (r, v) = p.column(b);
            let cur = m.read(r, b);
            m.write(r, b, cur + v * a);
        }
    }
    Ok(DenseOperator::new(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigMode {
    Max,
    Min,
    Full,
}

/// Extremal eigen-data with the residual of each returned pair.
#[derive(Clone, Debug)]
pub struct EigenData {
    /// Full mode: the ascending spectrum; Max/Min: the single eigenvalue.
    pub values: Vec<f64>,
    /// Eigenvector of the extremal value (Max/Min modes).
    pub vector: Option<Vec<c64>>,
    /// ‖Av − λv‖ for the returned vector (0 in Full mode).
    pub residual: f64,
}

impl EigenData {
    pub fn value(&self) -> f64 {
        self.values[0]
    }
}

pub fn eig_extremes(a: &DenseOperator, mode: EigMode) -> Result<EigenData> {
    if !a.hermitian {
        return Err(Error::Contract("eigen-solve of a non-Hermitian operator".into()));
    }
    if mode == EigMode::Full {
        return Ok(EigenData { values: linalg::herm_eigvals(&a.mat), vector: None, residual: 0.0 });
    }
    let (lambda, v) = if a.dim <= FULL_EIG_MAX_DIM {
        let (vals, vecs) = linalg::herm_eig(&a.mat);
        let idx = if mode == EigMode::Max { a.dim - 1 } else { 0 };
        let v: Vec<c64> = (0..a.dim).map(|i| vecs.read(i, idx)).collect();
        (vals[idx], v)
    } else {
        lanczos_extreme(&a.mat, mode == EigMode::Max)
    };
    let av = linalg::cmatvec(&a.mat, &v);
    let res: Vec<c64> = av.iter().zip(&v).map(|(x, y)| *x - *y * c64::new(lambda, 0.0)).collect();
    let residual = linalg::cnorm(&res);
    Ok(EigenData { values: vec![lambda], vector: Some(v), residual })
}

/// Restarted Lanczos with full reorthogonalization for one extremal pair.
pub(crate) fn lanczos_extreme(a: &CMat, want_max: bool) -> (f64, Vec<c64>) {
    let d = a.nrows();
    let m = 80.min(d);
    let mut v0: Vec<c64> = (0..d).map(|i| c64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05)).collect();
    let nrm = linalg::cnorm(&v0);
    v0.iter_mut().for_each(|x| *x = *x * c64::new(1.0 / nrm, 0.0));
    let anorm = (0..d).map(|i| a.read(i, i).re.abs()).fold(1.0, f64::max);
    let mut best = (0.0, v0.clone());
    for _restart in 0..200 {
        let mut basis: Vec<Vec<c64>> = vec![v0.clone()];
        let mut t = linalg::RMat::zeros(m, m);
        let mut k_used = m;
        for k in 0..m {
            let mut w = linalg::cmatvec(a, &basis[k]);
            for (j, bj) in basis.iter().enumerate() {
                let mut dot = CZERO;
                for (x, y) in bj.iter().zip(&w) {
                    dot += linalg::cconj(*x) * *y;
                }
                if j == k {
                    t.write(k, k, dot.re);
                }
                for (wi, bi) in w.iter_mut().zip(bj) {
                    *wi -= dot * *bi;
                }
            }
            let beta = linalg::cnorm(&w);
            if k + 1 == m || beta < 1e-13 * anorm {
                k_used = k + 1;
                break;
            }
            t.write(k, k + 1, beta);
            t.write(k + 1, k, beta);
            basis.push(w.iter().map(|x| *x * c64::new(1.0 / beta, 0.0)).collect());
        }
        let tk = t.submatrix(0, 0, k_used, k_used).to_owned();
        let (vals, vecs) = linalg::sym_eig(&tk);
        let idx = if want_max { k_used - 1 } else { 0 };
        let mut y = vec![CZERO; d];
        for (j, bj) in basis.iter().enumerate().take(k_used) {
            let c = vecs.read(j, idx);
            for (yi, bi) in y.iter_mut().zip(bj) {
                *yi += *bi * c64::new(c, 0.0);
            }
        }
        let nrm = linalg::cnorm(&y);
        y.iter_mut().for_each(|x| *x = *x * c64::new(1.0 / nrm, 0.0));
        let ay = linalg::cmatvec(a, &y);
        let res = ay
            .iter()
            .zip(&y)
            .map(|(p, q)| {
                let r = *p - *q * c64::new(vals[idx], 0.0);
                r.re * r.re + r.im * r.im
            })
            .sum::<f64>()
            .sqrt();
        best = (vals[idx], y.clone());
        if res <= 1e-10 * anorm.max(vals[idx].abs()) {
            break;
        }
        v0 = y;
    }
    best
}

/// Opt(h) = λ_max(π(h)).
pub fn opt(h: &Polynomial, rep: &GraphReduction) -> Result<f64> {
    Ok(eig_extremes(&represent(h, rep)?, EigMode::Max)?.value())
}

/// Opt_±(h) = sqrt(λ_max(π(h*h))) — the operator norm of π(h).
pub fn opt_pm(h: &Polynomial, rep: &GraphReduction, g: &AnticommGraph) -> Result<f64> {
    let hh = crate::algebra::multiply(&crate::algebra::adjoint(h, g)?, h, g)?;
    if hh.is_empty() {
        return Ok(0.0);
    }
    let lam = eig_extremes(&represent(&hh, rep)?, EigMode::Max)?.value();
    Ok(lam.max(0.0).sqrt())
}

/// Cached eigendecomposition of iζ for repeated conjugations e^{−θζ}·ρ·e^{θζ}.
#[derive(Clone, Debug)]
pub struct SkewConjugator {
    pub lambda: Vec<f64>,
    pub vecs: CMat,
}

impl SkewConjugator {
    pub fn new(zeta: &DenseOperator) -> Result<Self> {
        let z = &zeta.mat;
        let d = zeta.dim;
        let mut k = CMat::zeros(d, d);
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for j in 0..d {
            for i in 0..d {
                let x = z.read(i, j);
                let y = z.read(j, i);
                defect = defect.max(((x.re + y.re).powi(2) + (x.im - y.im).powi(2)).sqrt());
                scale = scale.max(x.re.abs()).max(x.im.abs());
                // K = iζ
                k.write(i, j, c64::new(-x.im, x.re));
            }
        }
        if defect > 1e-10 * scale {
            return Err(Error::Contract(format!("ζ is not skew-adjoint (defect {defect:.3e})")));
        }
        linalg::make_hermitian(&mut k);
        let (lambda, vecs) = linalg::herm_eig(&k);
        Ok(SkewConjugator { lambda, vecs })
    }

    /// e^{−θζ} = V e^{iθΛ} V*.
    pub fn unitary(&self, theta: f64) -> CMat {
        let d = self.lambda.len();
        let mut scaled = self.vecs.clone();
        for (j, &l) in self.lambda.iter().enumerate() {
            let ph = c64::new((theta * l).cos(), (theta * l).sin());
            for i in 0..d {
                let v = scaled.read(i, j);
                scaled.write(i, j, v * ph);
            }
        }
        &scaled * self.vecs.adjoint()
    }

    /// e^{−θζ} ρ e^{θζ}.
    pub fn conjugate(&self, theta: f64, rho: &DenseOperator) -> DenseOperator {
        let u = self.unitary(theta);
        let out = &(&u * &rho.mat) * u.adjoint();
        let mut op = DenseOperator::new(out);
        if rho.hermitian {
            linalg::make_hermitian(&mut op.mat);
            op.hermitian = true;
        }
        op
    }

    /// V* A V.
    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        &(self.vecs.adjoint() * a) * &self.vecs
    }
}

/// e^{−θζ} ρ e^{θζ} for skew-adjoint ζ.
pub fn skew_exponential_conjugate(zeta: &DenseOperator, theta: f64, rho: &DenseOperator) -> Result<DenseOperator> {
    Ok(SkewConjugator::new(zeta)?.conjugate(theta, rho))
}

/// Identity check helper: max |UU* − I|.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let p = u * u.adjoint();
    let id = CMat::identity(u.nrows(), u.nrows());
    linalg::max_abs_diff(&p, &id)
}
