//! Hermitian metric, adjoint operators, Laplacians and harmonic forms on
//! the relative super complex, in the self-adjoint compact basis `ξ_a`.
//!
//! Generators are written `ψ^a(n)`, `σ^a(n)` with `n = −depth`. For
//! `x^{[a,b]} := Σ_c g_ab^c x^c` (where `[ξ_a, ξ_b] = Σ_c g_ab^c ξ_c`), the
//! generator-level rules are, in original labels:
//!
//! * `ad_a(m) ψ^b(n) = ψ^{[a,b]}(m+n)` if `m+n < 0`, else 0
//! * `R_a(m) σ^b(n) = σ^{[a,b]}(m+n)` if `m+n ≤ 0`, else 0
//! * `ad_a(m)* ψ^b(n) = ((n−m)/n) ψ^{[a,b]}(n−m)` if `n < m`, else 0
//! * `R_a(m)* = R_a(−m)`
//! * `d_a(m) σ^b(n) = ψ^{[a,b]}(m+n)` if `m+n < 0` (odd, kills `ψ`)
//! * `d_a(m)* ψ^b(n) = −σ^{[a,b]}(n−m)/n` if `n ≤ m` (odd, kills `σ`)
//! * `ψ^a(−m)* = (1/m) ι_{ψ^a(−m)}`
//!
//! and the composite operators are
//!
//! * `∂̄ = Σ_{a,m>0} ψ^a(−m) (R_a(m) + ½ ad_a(m))`
//! * `∂̄* = Σ_{a,m>0} ψ^a(−m)* R_a(−m) + ½ ad_a(m)* ψ^a(−m)*`
//! * `□̄ = ∂̄∂̄* + ∂̄*∂̄`
//! * `□ = Σ_{a,m>0} (1/m) (R_a(−m) + ad_a(−m)) (R_a(m) + ad_a(−m)*)`
//! * `D = Σ_{a,m>0} d_a(−m) d_a(−m)*`
//! * `K = Σ_{a,b,m>0} (R + ad)_{[a,b]}(0) ψ^a(−m) ψ^b(−m)*`
//! * `T = Σ_{a,b,m,n>0} ([R_a(m), R_b(−n)] − R_{[a,b]}(m−n)) ψ^a(−m) ψ^b(−n)*`
//! * `deg` = exterior degree.
//!
//! The metric makes monomials orthogonal with `‖ψ^a(−m)‖² = 1/m`,
//! `‖σ^a(−m)‖² = 1` and `‖σ^k‖² = k!` for repeated symmetric factors.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlin::{hermitian_eigen, numeric_kernel_basis, Complex, Rational, Scalar, SparseMatrix, AMBIGUITY_BAND};
use crate::gradedbasis::{
    add_scaled, add_term, contraction, enumerate_block, from_coordinates, matrix_of, metric_diagonal,
    monomial_norm_sq, product, relabel_factor, singleton, to_coordinates, wedge_lin, Block, BlockKey,
    ComplexKind, Derivation, Gen, LinComb, Monomial, Sector, Slot,
};
use crate::koszul::{Backend, CeDifferential, Labeling, OperatorRep};
use crate::liealg::{CompactBasis, LieAlgebraData};

/// Default tolerance of the operator identities.
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-8;

fn c(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// Diagonal metric of a block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricGram {
    pub key: BlockKey,
    pub diagonal: Vec<f64>,
}

impl MetricGram {
    pub fn of(block: &Block) -> Self {
        MetricGram {
            key: block.key,
            diagonal: metric_diagonal(block),
        }
    }
}

/// G-orthonormal basis of the harmonic forms of a block, in original
/// monomial coordinates.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub key: BlockKey,
    pub vectors: Vec<Vec<Complex>>,
    pub tol: f64,
}

/// Outcome of a harmonic-space computation done two ways.
#[derive(Debug, Clone)]
pub struct HarmonicReport {
    pub basis: HarmonicBasis,
    /// Dimension of the joint kernel of the first-order derivations.
    pub joint_kernel_dim: usize,
    /// Sine of the largest principal angle between the two subspaces
    /// (1 when the dimensions differ).
    pub subspace_distance: f64,
    /// Smallest eigenvalue of `□̄` on the invariants (PSD check).
    pub min_eigenvalue: f64,
    pub invariant_dim: usize,
}

/// Closed-form coefficients of the operators on a linear germ `ψ^b(−n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearGermRow {
    pub n: usize,
    pub boxbar: f64,
    pub boxbar_expected: f64,
    pub box_op: f64,
    pub box_expected: f64,
    pub d_op: f64,
    pub k_op: f64,
    pub k_expected: f64,
    /// Largest deviation from the closed forms, including off-diagonal leakage.
    pub deviation: f64,
}

/// The operator machinery for one semisimple algebra.
pub struct Hodge<'a> {
    pub alg: &'a LieAlgebraData,
    pub compact: &'a CompactBasis,
}

impl<'a> Hodge<'a> {
    pub fn new(alg: &'a LieAlgebraData, compact: &'a CompactBasis) -> Result<Self> {
        if !alg.name.is_semisimple() {
            return Err(Error::UnsupportedAlgebra(format!(
                "{} (the metric computations need a semisimple algebra)",
                alg.name
            )));
        }
        Ok(Hodge { alg, compact })
    }

    fn dim(&self) -> usize {
        self.compact.dim()
    }

    /// `x^{[a,b]}` as a list `(c, g_ab^c)`.
    fn br(&self, a: usize, b: usize) -> &'a [(usize, Complex)] {
        &self.compact.numeric.bracket[a][b]
    }

    pub fn block(&self, key: BlockKey) -> Block {
        enumerate_block(self.alg, ComplexKind::SuperRelative, key, Sector::Full)
    }

    // -- generator-level derivations (original labels) ----------------------

    pub fn ad(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            false,
            move |g| {
                let depth = g.depth as i64 - m;
                if depth < 1 {
                    return Vec::new();
                }
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Psi(Gen::new(*cc, depth as usize)), *v))
                    .collect()
            },
            |_| Vec::new(),
        )
    }

    pub fn r(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            false,
            |_| Vec::new(),
            move |g| {
                let depth = g.depth as i64 - m;
                if depth < 0 {
                    return Vec::new();
                }
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Sigma(Gen::new(*cc, depth as usize)), *v))
                    .collect()
            },
        )
    }

    pub fn ad_star(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            false,
            move |g| {
                let k = g.depth as i64;
                let depth = k + m;
                if depth < 1 {
                    return Vec::new();
                }
                let f = depth as f64 / k as f64;
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Psi(Gen::new(*cc, depth as usize)), *v * f))
                    .collect()
            },
            |_| Vec::new(),
        )
    }

    pub fn r_star(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        self.r(a, -m)
    }

    pub fn d(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            true,
            |_| Vec::new(),
            move |g| {
                let depth = g.depth as i64 - m;
                if depth < 1 {
                    return Vec::new();
                }
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Psi(Gen::new(*cc, depth as usize)), *v))
                    .collect()
            },
        )
    }

    pub fn d_star(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            true,
            move |g| {
                let k = g.depth as i64;
                let depth = k + m;
                if depth < 0 {
                    return Vec::new();
                }
                let f = 1.0 / k as f64;
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Sigma(Gen::new(*cc, depth as usize)), *v * f))
                    .collect()
            },
            |_| Vec::new(),
        )
    }

    /// `ψ^a(−m)*`.
    pub fn psi_star(&self, a: usize, m: usize) -> impl Fn(&LinComb<Complex>) -> LinComb<Complex> {
        let iota = contraction::<Complex>(Gen::new(a, m));
        let s = c(1.0 / m as f64);
        move |v| {
            let mut out = iota.apply_lin(v);
            for x in out.values_mut() {
                *x *= s;
            }
            out
        }
    }

    /// Total zero-mode action `R_a(0) + ad_a(0)`.
    pub fn zero_mode(&self, a: usize) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            false,
            move |g| {
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Psi(Gen::new(*cc, g.depth())), *v))
                    .collect()
            },
            move |g| {
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Sigma(Gen::new(*cc, g.depth())), *v))
                    .collect()
            },
        )
    }

    // -- composite operators -------------------------------------------------

    pub fn dbar(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v);
        let mut out = LinComb::new();
        for a in 0..self.dim() {
            for m in 1..=w as i64 {
                let mut inner = self.r(a, m).apply_lin(v);
                add_scaled(&mut inner, &self.ad(a, m).apply_lin(v), &c(0.5));
                wedge_lin(Gen::new(a, m as usize), &inner, &Complex::new(1.0, 0.0), &mut out);
            }
        }
        out
    }

    pub fn dbar_star(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v);
        let mut out = LinComb::new();
        for a in 0..self.dim() {
            for m in 1..=w {
                let ps = self.psi_star(a, m);
                let first = ps(&self.r(a, -(m as i64)).apply_lin(v));
                add_scaled(&mut out, &first, &c(1.0));
                let second = self.ad_star(a, m as i64).apply_lin(&ps(v));
                add_scaled(&mut out, &second, &c(0.5));
            }
        }
        out
    }

    pub fn boxbar(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let mut out = self.dbar(&self.dbar_star(v));
        add_scaled(&mut out, &self.dbar_star(&self.dbar(v)), &c(1.0));
        out
    }

    pub fn box_op(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v);
        let mut out = LinComb::new();
        for a in 0..self.dim() {
            for m in 1..=w as i64 {
                let mut inner = self.r(a, m).apply_lin(v);
                add_scaled(&mut inner, &self.ad_star(a, -m).apply_lin(v), &c(1.0));
                if inner.is_empty() {
                    continue;
                }
                let s = c(1.0 / m as f64);
                add_scaled(&mut out, &self.r(a, -m).apply_lin(&inner), &s);
                add_scaled(&mut out, &self.ad(a, -m).apply_lin(&inner), &s);
            }
        }
        out
    }

    pub fn d_op(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v);
        let mut out = LinComb::new();
        for a in 0..self.dim() {
            for m in 1..=w as i64 {
                let inner = self.d_star(a, -m).apply_lin(v);
                if !inner.is_empty() {
                    add_scaled(&mut out, &self.d(a, -m).apply_lin(&inner), &c(1.0));
                }
            }
        }
        out
    }

    pub fn k_op(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v);
        let dim = self.dim();
        let mut out = LinComb::new();
        let zero_modes: Vec<_> = (0..dim).map(|x| self.zero_mode(x)).collect();
        for b in 0..dim {
            for m in 1..=w {
                let y = self.psi_star(b, m)(v);
                if y.is_empty() {
                    continue;
                }
                for a in 0..dim {
                    let br = self.br(a, b);
                    if br.is_empty() {
                        continue;
                    }
                    let mut z = LinComb::new();
                    wedge_lin(Gen::new(a, m), &y, &c(1.0), &mut z);
                    for (cc, g) in br {
                        add_scaled(&mut out, &zero_modes[*cc].apply_lin(&z), g);
                    }
                }
            }
        }
        out
    }

    pub fn t_op(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let w = max_weight(v) as i64;
        let dim = self.dim();
        let mut out = LinComb::new();
        for b in 0..dim {
            for n in 1..=w {
                let y = self.psi_star(b, n as usize)(v);
                if y.is_empty() {
                    continue;
                }
                for a in 0..dim {
                    for m in 1..=w {
                        let mut z = LinComb::new();
                        wedge_lin(Gen::new(a, m as usize), &y, &c(1.0), &mut z);
                        if z.is_empty() {
                            continue;
                        }
                        let rb = self.r(b, -n);
                        let ra = self.r(a, m);
                        let mut t = ra.apply_lin(&rb.apply_lin(&z));
                        add_scaled(&mut t, &rb.apply_lin(&ra.apply_lin(&z)), &c(-1.0));
                        for (cc, g) in self.br(a, b) {
                            add_scaled(&mut t, &self.r(*cc, m - n).apply_lin(&z), &(-*g));
                        }
                        add_scaled(&mut out, &t, &c(1.0));
                    }
                }
            }
        }
        out
    }

    pub fn deg(&self, v: &LinComb<Complex>) -> LinComb<Complex> {
        let mut out = LinComb::new();
        for (m, x) in v {
            add_term(&mut out, m.clone(), *x * m.coh_degree() as f64);
        }
        out
    }

    // -- relabeled derivations (ψ depth lowered by one) ----------------------

    /// `ad_a(−m)* ψ^b(−n) = ψ^{[a,b]}(m−n)` for `m ≤ n`, relabeled.
    pub fn relabeled_ad_star_neg(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            false,
            move |g| {
                let depth = g.depth as i64 - m;
                if depth < 0 {
                    return Vec::new();
                }
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Psi(Gen::new(*cc, depth as usize)), *v))
                    .collect()
            },
            |_| Vec::new(),
        )
    }

    /// `d_a(−m)* ψ^b(−n) = σ^{[a,b]}(m−n−1)` for `m ≤ n+1`, relabeled.
    pub fn relabeled_d_star_neg(&self, a: usize, m: i64) -> Derivation<'a, Complex> {
        let br = &self.compact.numeric.bracket;
        Derivation::new(
            true,
            move |g| {
                let depth = g.depth as i64 + 1 - m;
                if depth < 0 {
                    return Vec::new();
                }
                br[a][g.index()]
                    .iter()
                    .map(|(cc, v)| (Slot::Sigma(Gen::new(*cc, depth as usize)), *v))
                    .collect()
            },
            |_| Vec::new(),
        )
    }

    // -- matrices ------------------------------------------------------------

    /// Matrix of a composite operator between two blocks.
    pub fn operator(
        &self,
        f: impl Fn(&LinComb<Complex>) -> LinComb<Complex>,
        source: &Block,
        target: &Block,
    ) -> Result<OperatorRep<Complex>> {
        let m = matrix_of(|x| f(&singleton(x.clone())), source, target)?;
        Ok(OperatorRep {
            source: source.key,
            target: target.key,
            matrix: m,
            labeling: Labeling::Original,
            backend: Backend::Numeric,
        })
    }

    /// Stacked matrix of the zero-mode actions on a block.
    pub fn zero_mode_matrix(&self, block: &Block) -> SparseMatrix<Complex> {
        let ops: Vec<_> = (0..self.dim()).map(|a| self.zero_mode(a)).collect();
        stacked(&ops.iter().map(|d| move |m: &Monomial| d.apply(m)).collect::<Vec<_>>(), &block.basis)
    }

    /// Numeric `𝔤`-invariants of a full block: a G-orthonormal basis in
    /// the scaled coordinates `y = G^{1/2} x`.
    pub fn invariants_scaled(&self, block: &Block, tol: f64) -> Result<DMatrix<Complex>> {
        let s = sqrt_gram(block);
        let z = self.zero_mode_matrix(block).to_dense();
        let zs = scale_cols(&z, &s.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
        if z.nrows() == 0 {
            return Ok(DMatrix::identity(block.dim(), block.dim()));
        }
        numeric_kernel_basis(&zs, tol)
    }

    /// Maximum deviation `‖□̄ − (□ + D + K)‖_max` over a full block.
    pub fn verify_laplacian_identity(&self, key: BlockKey) -> f64 {
        let block = self.block(key);
        block
            .basis
            .iter()
            .map(|m| {
                let x = singleton(m.clone());
                let mut r = self.boxbar(&x);
                add_scaled(&mut r, &self.box_op(&x), &c(-1.0));
                add_scaled(&mut r, &self.d_op(&x), &c(-1.0));
                add_scaled(&mut r, &self.k_op(&x), &c(-1.0));
                max_abs(&r)
            })
            .fold(0.0, f64::max)
    }

    /// Deviations of `T + deg = D` over the full block and of
    /// `□̄ = □ + T + deg` and `K = 0` over the invariants.
    pub fn verify_nakano(&self, key: BlockKey, tol: f64) -> Result<NakanoReport> {
        let block = self.block(key);
        let mut full = 0.0f64;
        for m in &block.basis {
            let x = singleton(m.clone());
            let mut r = self.t_op(&x);
            add_scaled(&mut r, &self.deg(&x), &c(1.0));
            add_scaled(&mut r, &self.d_op(&x), &c(-1.0));
            full = full.max(max_abs(&r));
        }
        let q = self.invariants_scaled(&block, tol)?;
        let s = sqrt_gram(&block);
        let mut on_invariants = 0.0f64;
        let mut k_on_invariants = 0.0f64;
        for j in 0..q.ncols() {
            let x: Vec<Complex> = (0..block.dim()).map(|i| q[(i, j)] / s[i]).collect();
            let v = from_coordinates(&x, &block);
            let mut r = self.boxbar(&v);
            add_scaled(&mut r, &self.box_op(&v), &c(-1.0));
            add_scaled(&mut r, &self.t_op(&v), &c(-1.0));
            add_scaled(&mut r, &self.deg(&v), &c(-1.0));
            on_invariants = on_invariants.max(metric_norm(&r));
            k_on_invariants = k_on_invariants.max(metric_norm(&self.k_op(&v)));
        }
        Ok(NakanoReport {
            key,
            full_block_deviation: full,
            invariant_deviation: on_invariants,
            k_on_invariants,
            invariant_dim: q.ncols(),
        })
    }

    /// Harmonic forms of the invariant block computed as `ker □̄` and,
    /// independently, as the joint kernel of `d_a(−m)*`, `R_a(m) +
    /// ad_a(−m)*` and the zero modes in relabeled coordinates.
    pub fn harmonic_basis(&self, key: BlockKey, tol: f64) -> Result<HarmonicReport> {
        let block = self.block(key);
        let n = block.dim();
        let s = sqrt_gram(&block);
        let s_inv: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
        let q = self.invariants_scaled(&block, tol)?;

        // Way 1: kernel of □̄ restricted to the invariants.
        let bb = self.operator(|v| self.boxbar(v), &block, &block)?.matrix.to_dense();
        let bb_scaled = scale_cols(&scale_rows(&bb, &s), &s_inv);
        let restricted = q.adjoint() * &bb_scaled * &q;
        let (values, vecs) = hermitian_eigen(&restricted);
        // Threshold relative to the spectrum of □̄ on the whole block.
        let (full_values, _) = hermitian_eigen(&bb_scaled);
        let scale = full_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let scale = if scale > 1e-12 { scale } else { 1.0 };
        crate::exactlin::count_below_threshold(&values, scale, tol, AMBIGUITY_BAND)?;
        let kernel_cols: Vec<usize> = (0..values.len()).filter(|&i| values[i].abs() / scale <= tol).collect();
        let mut harmonic_y = DMatrix::zeros(n, kernel_cols.len());
        for (k, &i) in kernel_cols.iter().enumerate() {
            let col = &q * vecs.column(i);
            harmonic_y.set_column(k, &col);
        }
        let min_eigenvalue = values.first().copied().unwrap_or(0.0);

        // Way 2: joint kernel in relabeled coordinates.
        let w = key.w as i64;
        let mut ders: Vec<Derivation<'a, Complex>> = Vec::new();
        let mut pairs: Vec<(Derivation<'a, Complex>, Derivation<'a, Complex>)> = Vec::new();
        for a in 0..self.dim() {
            ders.push(self.zero_mode(a));
            for m in 1..=w {
                ders.push(self.relabeled_d_star_neg(a, m));
                pairs.push((self.r(a, m), self.relabeled_ad_star_neg(a, m)));
            }
        }
        let relabeled: Vec<Monomial> = block.basis.iter().map(Monomial::relabel).collect();
        let mut fns: Vec<Box<dyn Fn(&Monomial) -> LinComb<Complex> + '_>> = Vec::new();
        for d in &ders {
            fns.push(Box::new(move |m: &Monomial| d.apply(m)));
        }
        for (r, ad) in &pairs {
            fns.push(Box::new(move |m: &Monomial| {
                let mut x = r.apply(m);
                add_scaled(&mut x, &ad.apply(m), &c(1.0));
                x
            }));
        }
        let joint = stacked(&fns, &relabeled).to_dense();
        let kernel_new = if joint.nrows() == 0 {
            DMatrix::identity(n, n)
        } else {
            numeric_kernel_basis(&joint, tol)?
        };
        // x_new = f · x_old, then y = G^{1/2} x_old.
        let f: Vec<f64> = block.basis.iter().map(relabel_factor).collect();
        let back: Vec<f64> = (0..n).map(|i| s[i] / f[i]).collect();
        let kernel_y = orthonormalize(&scale_rows(&kernel_new, &back));

        let subspace_distance = if kernel_y.ncols() != harmonic_y.ncols() {
            1.0
        } else if kernel_y.ncols() == 0 {
            0.0
        } else {
            let resid = &kernel_y - &harmonic_y * (harmonic_y.adjoint() * &kernel_y);
            resid.singular_values().iter().copied().fold(0.0, f64::max)
        };
        let vectors = (0..harmonic_y.ncols())
            .map(|k| (0..n).map(|i| harmonic_y[(i, k)] * s_inv[i]).collect())
            .collect();
        Ok(HarmonicReport {
            basis: HarmonicBasis { key, vectors, tol },
            joint_kernel_dim: kernel_y.ncols(),
            subspace_distance,
            min_eigenvalue,
            invariant_dim: q.ncols(),
        })
    }

    /// Largest relative residual `‖□̄ z‖ / ‖z‖` over all products `z` of
    /// harmonic vectors from two blocks.
    pub fn verify_harmonic_subalgebra(&self, left: &HarmonicBasis, right: &HarmonicBasis) -> f64 {
        let lb = self.block(left.key);
        let rb = self.block(right.key);
        let mut worst = 0.0f64;
        for x in &left.vectors {
            for y in &right.vectors {
                let z = product(&from_coordinates(x, &lb), &from_coordinates(y, &rb));
                // The inputs are unit vectors; a product this small is a
                // rounding remnant of x ∧ x = 0, not a form.
                let nz = metric_norm(&z);
                if nz <= 1e-10 {
                    continue;
                }
                worst = worst.max(metric_norm(&self.boxbar(&z)) / nz);
            }
        }
        worst
    }

    /// Closed-form coefficients on `ψ^b(−n)` for `n = 1..=max_n`.
    pub fn linear_germs(&self, max_n: usize) -> Vec<LinearGermRow> {
        (1..=max_n)
            .map(|n| {
                let harmonic: f64 = (1..n).map(|m| 1.0 / m as f64).sum();
                let box_expected = harmonic - 1.0 + 1.0 / n as f64;
                let k_expected = -1.0 / n as f64;
                let mut worst = 0.0f64;
                let mut coeffs = [0.0f64; 4];
                for b in 0..self.dim() {
                    let m = Monomial {
                        psi: vec![Gen::new(b, n)],
                        sigma: vec![],
                    };
                    let x = singleton::<Complex>(m.clone());
                    let ops = [self.boxbar(&x), self.box_op(&x), self.d_op(&x), self.k_op(&x)];
                    let expected = [harmonic, box_expected, 1.0, k_expected];
                    for (i, (img, e)) in ops.iter().zip(expected).enumerate() {
                        let diag = img.get(&m).copied().unwrap_or_default();
                        coeffs[i] = diag.re;
                        let mut r = img.clone();
                        add_term(&mut r, m.clone(), c(-e));
                        worst = worst.max(max_abs(&r));
                    }
                }
                LinearGermRow {
                    n,
                    boxbar: coeffs[0],
                    boxbar_expected: harmonic,
                    box_op: coeffs[1],
                    box_expected,
                    d_op: coeffs[2],
                    k_op: coeffs[3],
                    k_expected,
                    deviation: worst,
                }
            })
            .collect()
    }

    /// Image of a Chevalley-basis monomial in compact coordinates, using
    /// `θ^a = Σ_b θ^a(ξ_b) φ^b` factor by factor.
    pub fn chevalley_to_compact(&self, m: &Monomial) -> LinComb<Complex> {
        let mut acc = singleton::<Complex>(Monomial::one());
        let conv = &self.compact.to_chevalley;
        let factor = |g: &Gen, psi: bool| {
            let mut v = LinComb::new();
            for (b, row) in conv.iter().enumerate() {
                let x = row[g.index()];
                if x.norm() > 1e-14 {
                    let gen = Gen::new(b, g.depth());
                    let mono = if psi {
                        Monomial { psi: vec![gen], sigma: vec![] }
                    } else {
                        Monomial { psi: vec![], sigma: vec![gen] }
                    };
                    add_term(&mut v, mono, x);
                }
            }
            v
        };
        for g in &m.psi {
            acc = product(&acc, &factor(g, true));
        }
        for g in &m.sigma {
            acc = product(&acc, &factor(g, false));
        }
        acc
    }

    /// Largest entry of `Φ∘∂̄_exact − ∂̄_compact∘Φ` over a full block, where
    /// `Φ` is the Chevalley-to-compact change of coordinates.
    pub fn verify_dbar_conjugacy(&self, key: BlockKey) -> f64 {
        let block = self.block(key);
        let exact = CeDifferential::new(&self.alg.exact, self.alg, ComplexKind::SuperRelative, key.w);
        let mut worst = 0.0f64;
        for m in &block.basis {
            let lhs_exact = exact.apply(m);
            let mut lhs = LinComb::new();
            for (mm, x) in &lhs_exact {
                add_scaled(&mut lhs, &self.chevalley_to_compact(mm), &x.to_complex());
            }
            let rhs = self.dbar(&self.chevalley_to_compact(m));
            add_scaled(&mut lhs, &rhs, &c(-1.0));
            worst = worst.max(max_abs(&lhs));
        }
        worst
    }

    /// Max deviation between each literal adjoint and the metric adjoint
    /// of its operator, on a source block.
    pub fn adjointness_defect(&self, key: BlockKey) -> Result<f64> {
        let src = self.block(key);
        let g_src = metric_diagonal(&src);
        let mut worst = 0.0f64;
        let mut check = |op: &dyn Fn(&Monomial) -> LinComb<Complex>,
                         adj: &dyn Fn(&Monomial) -> LinComb<Complex>,
                         tgt_key: BlockKey|
         -> Result<()> {
            let tgt = self.block(tgt_key);
            let g_tgt = metric_diagonal(&tgt);
            let a = matrix_of(op, &src, &tgt)?;
            let b = matrix_of(adj, &tgt, &src)?;
            let diff = a.metric_adjoint(&g_src, &g_tgt).sub(&b)?;
            worst = worst.max(diff.max_abs());
            Ok(())
        };
        let BlockKey { d, p, w } = key;
        check(
            &|m| self.dbar(&singleton(m.clone())),
            &|m| self.dbar_star(&singleton(m.clone())),
            BlockKey::new(d + 1, p, w),
        )?;
        for a in 0..self.dim() {
            for m in 1..=(w as i64).max(1) {
                if (m as usize) <= w {
                    let tk = BlockKey::new(d, p, w - m as usize);
                    check(&|x| self.ad(a, m).apply(x), &|x| self.ad_star(a, m).apply(x), tk)?;
                    check(&|x| self.r(a, m).apply(x), &|x| self.r_star(a, m).apply(x), tk)?;
                }
                if p > 0 {
                    let tk = BlockKey::new(d + 1, p - 1, w + m as usize);
                    check(&|x| self.d(a, -m).apply(x), &|x| self.d_star(a, -m).apply(x), tk)?;
                }
            }
        }
        Ok(worst)
    }
}

/// Block-wise identity check result for the Nakano decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NakanoReport {
    pub key: BlockKey,
    pub full_block_deviation: f64,
    pub invariant_deviation: f64,
    pub k_on_invariants: f64,
    pub invariant_dim: usize,
}

fn max_weight(v: &LinComb<Complex>) -> usize {
    v.keys().map(Monomial::z_weight).max().unwrap_or(0)
}

pub fn max_abs(v: &LinComb<Complex>) -> f64 {
    v.values().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Metric norm of a linear combination.
pub fn metric_norm(v: &LinComb<Complex>) -> f64 {
    v.iter()
        .map(|(m, x)| x.norm_sqr() * monomial_norm_sq(m))
        .sum::<f64>()
        .sqrt()
}

fn sqrt_gram(block: &Block) -> Vec<f64> {
    metric_diagonal(block).iter().map(|g| g.sqrt()).collect()
}

fn scale_rows(m: &DMatrix<Complex>, s: &[f64]) -> DMatrix<Complex> {
    let mut out = m.clone();
    for (i, f) in s.iter().enumerate() {
        out.row_mut(i).scale_mut(*f);
    }
    out
}

fn scale_cols(m: &DMatrix<Complex>, s: &[f64]) -> DMatrix<Complex> {
    let mut out = m.clone();
    for (j, f) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(*f);
    }
    out
}

/// Orthonormal basis of the column span (columns assumed independent).
fn orthonormalize(m: &DMatrix<Complex>) -> DMatrix<Complex> {
    if m.ncols() == 0 {
        return m.clone();
    }
    m.clone().qr().q()
}

/// Stack several monomial maps into one matrix whose rows are indexed by
/// (map, image monomial) as encountered.
fn stacked<F: Fn(&Monomial) -> LinComb<Complex>>(ops: &[F], basis: &[Monomial]) -> SparseMatrix<Complex> {
    let mut rows: HashMap<(usize, Monomial), usize> = HashMap::new();
    let mut triplets = Vec::new();
    for (k, op) in ops.iter().enumerate() {
        for (j, m) in basis.iter().enumerate() {
            for (mm, x) in op(m) {
                if x.norm() < 1e-15 {
                    continue;
                }
                let next = rows.len();
                let i = *rows.entry((k, mm)).or_insert(next);
                triplets.push((i, j, x));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), basis.len(), triplets).expect("indices in range")
}

/// Exact invariant vectors converted to compact coordinates.
pub fn exact_to_compact(h: &Hodge<'_>, block: &Block, v: &[(usize, Rational)]) -> LinComb<Complex> {
    let mut out = LinComb::new();
    for (i, x) in v {
        add_scaled(&mut out, &h.chevalley_to_compact(&block.basis[*i]), &x.to_complex());
    }
    out
}

/// Coordinates of a compact-basis combination in a full block.
pub fn coordinates(v: &LinComb<Complex>, block: &Block) -> Result<Vec<Complex>> {
    to_coordinates(v, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{build_algebra, compact_basis, AlgebraName};

    fn setup() -> (LieAlgebraData, CompactBasis) {
        let a = build_algebra(AlgebraName::sl(2)).unwrap();
        let c = compact_basis(&a);
        (a, c)
    }

    fn psi(a: usize, k: usize) -> Gen {
        Gen::new(a, k)
    }

    #[test]
    fn rejects_gl() {
        let a = build_algebra(AlgebraName::gl(2)).unwrap();
        let c = compact_basis(&a);
        assert!(Hodge::new(&a, &c).is_err());
    }

    #[test]
    fn linear_germ_closed_forms() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        for row in h.linear_germs(6) {
            assert!(row.deviation < 1e-10, "{row:?}");
        }
        let row = &h.linear_germs(2)[1];
        assert!((row.boxbar - 1.0).abs() < 1e-12);
        assert!((row.box_op - 0.5).abs() < 1e-12);
        assert!((row.k_op + 0.5).abs() < 1e-12);
        // ∂̄* kills linear germs.
        for b in 0..3 {
            let x = singleton::<Complex>(Monomial { psi: vec![psi(b, 3)], sigma: vec![] });
            assert!(max_abs(&h.dbar_star(&x)) < 1e-14);
        }
    }

    #[test]
    fn dbar_star_closed_forms() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        let (b, cc, n, p) = (0usize, 1usize, 2usize, 1usize);
        // ∂̄*(ψ^b(−n) ∧ ψ^c(−p)) = ((n+p)/np) ψ^{[b,c]}(−p−n).
        let mono = Monomial { psi: vec![psi(b, n), psi(cc, p)], sigma: vec![] };
        let mut word = mono.clone();
        let sign = crate::gradedbasis::sort_psi(&mut word.psi).unwrap();
        let lhs = h.dbar_star(&singleton(word));
        let mut expected = LinComb::new();
        for (x, g) in h.br(b, cc) {
            add_term(
                &mut expected,
                Monomial { psi: vec![psi(*x, n + p)], sigma: vec![] },
                *g * ((n + p) as f64 / (n * p) as f64) * sign as f64,
            );
        }
        let mut diff = lhs;
        add_scaled(&mut diff, &expected, &c(-1.0));
        assert!(max_abs(&diff) < 1e-12);
        // ∂̄*(σ^b(−n) ψ^c(−p)) = σ^{[c,b]}(−n−p)/p.
        let mono = Monomial { psi: vec![psi(cc, p)], sigma: vec![psi(b, n)] };
        let lhs = h.dbar_star(&singleton(mono));
        let mut expected = LinComb::new();
        for (x, g) in h.br(cc, b) {
            add_term(&mut expected, Monomial { psi: vec![], sigma: vec![psi(*x, n + p)] }, *g / p as f64);
        }
        let mut diff = lhs;
        add_scaled(&mut diff, &expected, &c(-1.0));
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn adjoints_match_metric() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        for key in [BlockKey::new(1, 1, 2), BlockKey::new(2, 1, 3), BlockKey::new(1, 2, 3), BlockKey::new(0, 2, 2)] {
            let dev = h.adjointness_defect(key).unwrap();
            assert!(dev < 1e-10, "{key}: {dev}");
        }
    }

    #[test]
    fn identity_and_nakano_small() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        for key in [BlockKey::new(1, 1, 2), BlockKey::new(2, 0, 4), BlockKey::new(1, 2, 3), BlockKey::new(0, 2, 2)] {
            assert!(h.verify_laplacian_identity(key) < 1e-10, "{key}");
            let r = h.verify_nakano(key, 1e-7).unwrap();
            assert!(r.full_block_deviation < 1e-10, "{r:?}");
            assert!(r.invariant_deviation < 1e-10, "{r:?}");
            assert!(r.k_on_invariants < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn harmonic_examples() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        for (key, dim) in [
            (BlockKey::new(0, 2, 0), 1),
            (BlockKey::new(1, 1, 1), 1),
            (BlockKey::new(1, 0, 3), 0),
            (BlockKey::new(0, 0, 0), 1),
        ] {
            let r = h.harmonic_basis(key, 1e-7).unwrap();
            assert_eq!(r.basis.vectors.len(), dim, "{key}");
            assert_eq!(r.joint_kernel_dim, dim, "{key}");
            assert!(r.subspace_distance < 1e-7);
            assert!(r.min_eigenvalue > -1e-9);
        }
    }

    #[test]
    fn subalgebra_products() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        let s0 = h.harmonic_basis(BlockKey::new(0, 2, 0), 1e-7).unwrap().basis;
        let e1 = h.harmonic_basis(BlockKey::new(1, 1, 1), 1e-7).unwrap().basis;
        let e2 = h.harmonic_basis(BlockKey::new(1, 1, 2), 1e-7).unwrap().basis;
        assert!(h.verify_harmonic_subalgebra(&s0, &s0) < 1e-9);
        assert!(h.verify_harmonic_subalgebra(&s0, &e1) < 1e-9);
        assert!(h.verify_harmonic_subalgebra(&e1, &e2) < 1e-9);
        assert!(h.verify_harmonic_subalgebra(&e2, &e2) < 1e-9);
    }

    #[test]
    fn exact_and_compact_differentials_are_conjugate() {
        let (a, cb) = setup();
        let h = Hodge::new(&a, &cb).unwrap();
        for key in [BlockKey::new(1, 1, 2), BlockKey::new(0, 2, 2), BlockKey::new(1, 0, 3)] {
            assert!(h.verify_dbar_conjugacy(key) < 1e-12, "{key}");
        }
    }
}
