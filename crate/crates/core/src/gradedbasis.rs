//! Monomial bases of the graded pieces of `Λ ⊗ S`, Koszul sign
//! normalization, and a small algebra of (super-)derivations acting on
//! monomials.
//!
//! A generator `ψ^a(−m)` or `σ^a(−m)` is stored by its nonnegative depth
//! `m`; the z-weight reported everywhere is the total depth (the physical
//! weight is its negative).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exactlin::{Rational, Scalar, SparseMatrix};
use crate::liealg::LieAlgebraData;

/// One generator slot: basis index `a` at depth `depth`. Ordered by
/// `(depth, a)`, which is the canonical order of exterior factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gen {
    pub depth: u32,
    pub a: u32,
}

impl Gen {
    pub fn new(a: usize, depth: usize) -> Self {
        Gen {
            depth: depth as u32,
            a: a as u32,
        }
    }

    pub fn index(&self) -> usize {
        self.a as usize
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenKind {
    Psi,
    Sigma,
}

/// A generator with its kind: `ψ^a(−depth)` (odd) or `σ^a(−depth)` (even).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenIndex {
    pub kind: GenKind,
    pub a: usize,
    pub depth: usize,
}

impl GenIndex {
    pub fn psi(a: usize, depth: usize) -> Self {
        GenIndex {
            kind: GenKind::Psi,
            a,
            depth,
        }
    }

    pub fn sigma(a: usize, depth: usize) -> Self {
        GenIndex {
            kind: GenKind::Sigma,
            a,
            depth,
        }
    }
}

/// A canonical basis word: strictly increasing exterior factors followed by
/// a sorted multiset of symmetric factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Monomial {
    pub psi: Vec<Gen>,
    pub sigma: Vec<Gen>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn coh_degree(&self) -> usize {
        self.psi.len()
    }

    pub fn s_degree(&self) -> usize {
        self.sigma.len()
    }

    pub fn z_weight(&self) -> usize {
        self.psi.iter().chain(&self.sigma).map(|g| g.depth()).sum()
    }

    pub fn key(&self) -> BlockKey {
        BlockKey::new(self.coh_degree(), self.s_degree(), self.z_weight())
    }

    /// Sum of the root vectors of all factors.
    pub fn h_weight(&self, alg: &LieAlgebraData) -> Vec<i32> {
        let mut w = vec![0; alg.n()];
        for g in self.psi.iter().chain(&self.sigma) {
            for (acc, x) in w.iter_mut().zip(&alg.weights[g.index()]) {
                *acc += x;
            }
        }
        w
    }

    /// Multiplicities of the distinct symmetric factors, in order.
    pub fn sigma_runs(&self) -> Vec<(Gen, usize)> {
        let mut runs: Vec<(Gen, usize)> = Vec::new();
        for g in &self.sigma {
            match runs.last_mut() {
                Some((h, k)) if h == g => *k += 1,
                _ => runs.push((*g, 1)),
            }
        }
        runs
    }

    /// Relabeled word (`ψ` depths lowered by one); only meaningful when all
    /// `ψ` depths are at least one.
    pub fn relabel(&self) -> Monomial {
        Monomial {
            psi: self
                .psi
                .iter()
                .map(|g| Gen {
                    depth: g.depth - 1,
                    a: g.a,
                })
                .collect(),
            sigma: self.sigma.clone(),
        }
    }

    /// Inverse of [`Monomial::relabel`].
    pub fn unrelabel(&self) -> Monomial {
        Monomial {
            psi: self
                .psi
                .iter()
                .map(|g| Gen {
                    depth: g.depth + 1,
                    a: g.a,
                })
                .collect(),
            sigma: self.sigma.clone(),
        }
    }

    pub fn display(&self, labels: &[String]) -> String {
        if self.psi.is_empty() && self.sigma.is_empty() {
            return "1".to_string();
        }
        let mut parts: Vec<String> = self
            .psi
            .iter()
            .map(|g| format!("ψ^{}(-{})", labels[g.index()], g.depth))
            .collect();
        parts.extend(
            self.sigma
                .iter()
                .map(|g| format!("σ^{}(-{})", labels[g.index()], g.depth)),
        );
        parts.join("·")
    }
}

/// Sort the exterior factors, returning the permutation sign, or `None`
/// if a factor repeats.
pub fn sort_psi(psi: &mut [Gen]) -> Option<i32> {
    let mut sign = 1;
    // Insertion sort: each adjacent swap is one transposition.
    for i in 1..psi.len() {
        let mut j = i;
        while j > 0 && psi[j - 1] > psi[j] {
            psi.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if psi.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Bring a raw word to canonical form. The sign is `0` exactly when an
/// exterior factor repeats, otherwise the parity of the permutation that
/// sorts the exterior factors (symmetric factors commute with everything).
pub fn normalize(word: &[GenIndex]) -> (Monomial, i32) {
    let mut psi: Vec<Gen> = Vec::new();
    let mut sigma: Vec<Gen> = Vec::new();
    for g in word {
        let gen = Gen::new(g.a, g.depth);
        match g.kind {
            GenKind::Psi => psi.push(gen),
            GenKind::Sigma => sigma.push(gen),
        }
    }
    sigma.sort_unstable();
    let sign = sort_psi(&mut psi).unwrap_or(0);
    (Monomial { psi, sigma }, sign)
}

/// Product of two canonical monomials with its Koszul sign.
pub fn multiply(x: &Monomial, y: &Monomial) -> Option<(Monomial, i32)> {
    let mut psi = x.psi.clone();
    psi.extend_from_slice(&y.psi);
    let sign = sort_psi(&mut psi)?;
    let mut sigma = x.sigma.clone();
    sigma.extend_from_slice(&y.sigma);
    sigma.sort_unstable();
    Some((Monomial { psi, sigma }, sign))
}

/// Cohomological degree `d`, s-degree `p` and z-weight (depth) `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockKey {
    pub d: usize,
    pub p: usize,
    pub w: usize,
}

impl BlockKey {
    pub fn new(d: usize, p: usize, w: usize) -> Self {
        BlockKey { d, p, w }
    }

    /// Report ordering: lexicographic in `(p, w, d)`.
    pub fn report_order(&self) -> (usize, usize, usize) {
        (self.p, self.w, self.d)
    }
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d={}, p={}, w={})", self.d, self.p, self.w)
    }
}

impl PartialOrd for BlockKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BlockKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.report_order().cmp(&other.report_order())
    }
}

/// Which complex a block belongs to; decides the admissible generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComplexKind {
    /// `Λ(𝔤[z]/𝔤)* ⊗ S(s𝔤[z])*`: `ψ` depth ≥ 1, `σ` depth ≥ 0.
    SuperRelative,
    /// `Λ(𝔤[z])* ⊗ S(s𝔤[z])*`: `ψ` and `σ` depth ≥ 0.
    SuperAbsolute,
    /// `Λ(𝔤[z]/zⁿ)*`: `ψ` depth `< n`, no `σ`.
    Truncated(usize),
    /// The Iwahori pair `(𝔅[s], 𝔥)` for `𝔅 = 𝔟 + z𝔤[z]`: at depth 0 only
    /// raising `ψ` and raising/Cartan `σ`.
    Iwahori,
}

impl ComplexKind {
    pub fn allows(&self, alg: &LieAlgebraData, kind: GenKind, a: usize, depth: usize) -> bool {
        match (self, kind) {
            (ComplexKind::SuperRelative, GenKind::Psi) => depth >= 1,
            (ComplexKind::SuperRelative, GenKind::Sigma) => true,
            (ComplexKind::SuperAbsolute, _) => true,
            (ComplexKind::Truncated(n), GenKind::Psi) => depth < *n,
            (ComplexKind::Truncated(_), GenKind::Sigma) => false,
            (ComplexKind::Iwahori, GenKind::Psi) => depth >= 1 || alg.positive_roots.contains(&a),
            (ComplexKind::Iwahori, GenKind::Sigma) => {
                depth >= 1 || alg.positive_roots.contains(&a) || alg.cartan_indices.contains(&a)
            }
        }
    }

    /// Zero-mode generators are part of the `ψ` sum of the differential.
    pub fn is_absolute(&self) -> bool {
        matches!(self, ComplexKind::SuperAbsolute | ComplexKind::Truncated(_))
    }

    pub fn has_sigma(&self) -> bool {
        !matches!(self, ComplexKind::Truncated(_))
    }

    pub fn generators(&self, alg: &LieAlgebraData, kind: GenKind, max_depth: usize) -> Vec<Gen> {
        let mut out = Vec::new();
        for depth in 0..=max_depth {
            for a in 0..alg.dim() {
                if self.allows(alg, kind, a, depth) {
                    out.push(Gen::new(a, depth));
                }
            }
        }
        out
    }
}

/// Restriction of a block to a sector of the Cartan weight grading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Full,
    /// Monomials of total root weight zero. Cohomology and invariants of
    /// every complex in scope live here.
    ZeroWeight,
}

/// A graded piece with an ordered monomial basis.
#[derive(Debug, Clone)]
pub struct Block {
    pub kind: ComplexKind,
    pub key: BlockKey,
    pub sector: Sector,
    pub basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    pub invariant_subbasis: Option<Vec<Vec<(usize, Rational)>>>,
}

impl Block {
    pub fn from_basis(kind: ComplexKind, key: BlockKey, sector: Sector, basis: Vec<Monomial>) -> Self {
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Block {
            kind,
            key,
            sector,
            basis,
            index,
            invariant_subbasis: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}

/// All increasing selections of `count` generators from `gens[start..]`
/// (sorted by depth) with depth sum exactly `weight`.
fn psi_words(gens: &[Gen], count: usize, weight: usize, out: &mut Vec<Vec<Gen>>) {
    fn rec(
        gens: &[Gen],
        start: usize,
        count: usize,
        weight: usize,
        cur: &mut Vec<Gen>,
        out: &mut Vec<Vec<Gen>>,
    ) {
        if count == 0 {
            if weight == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..gens.len() {
            let g = gens[i];
            // Remaining factors have depth at least g.depth.
            if g.depth() * count > weight {
                break;
            }
            cur.push(g);
            rec(gens, i + 1, count - 1, weight - g.depth(), cur, out);
            cur.pop();
        }
    }
    rec(gens, 0, count, weight, &mut Vec::new(), out);
}

/// Same with repetition allowed (symmetric factors).
fn sigma_words(gens: &[Gen], count: usize, weight: usize, out: &mut Vec<Vec<Gen>>) {
    fn rec(
        gens: &[Gen],
        start: usize,
        count: usize,
        weight: usize,
        cur: &mut Vec<Gen>,
        out: &mut Vec<Vec<Gen>>,
    ) {
        if count == 0 {
            if weight == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..gens.len() {
            let g = gens[i];
            if g.depth() * count > weight {
                break;
            }
            cur.push(g);
            rec(gens, i, count - 1, weight - g.depth(), cur, out);
            cur.pop();
        }
    }
    rec(gens, 0, count, weight, &mut Vec::new(), out);
}

/// Every monomial of the complex with gradings `key`, in canonical order.
pub fn enumerate_block(alg: &LieAlgebraData, kind: ComplexKind, key: BlockKey, sector: Sector) -> Block {
    let BlockKey { d, p, w } = key;
    if !kind.has_sigma() && p > 0 {
        return Block::from_basis(kind, key, sector, Vec::new());
    }
    let psi_gens = kind.generators(alg, GenKind::Psi, w);
    let sigma_gens = if kind.has_sigma() {
        kind.generators(alg, GenKind::Sigma, w)
    } else {
        Vec::new()
    };
    let mut basis = Vec::new();
    for wp in 0..=w {
        let mut ps = Vec::new();
        psi_words(&psi_gens, d, wp, &mut ps);
        if ps.is_empty() {
            continue;
        }
        let mut ss = Vec::new();
        sigma_words(&sigma_gens, p, w - wp, &mut ss);
        for psi in &ps {
            for sigma in &ss {
                let m = Monomial {
                    psi: psi.clone(),
                    sigma: sigma.clone(),
                };
                if sector == Sector::ZeroWeight && m.h_weight(alg).iter().any(|&x| x != 0) {
                    continue;
                }
                basis.push(m);
            }
        }
    }
    basis.sort();
    Block::from_basis(kind, key, sector, basis)
}

/// Sparse linear combination of monomials.
pub type LinComb<T> = HashMap<Monomial, T>;

pub fn add_term<T: Scalar>(v: &mut LinComb<T>, m: Monomial, c: T) {
    if c.is_zero() {
        return;
    }
    match v.get_mut(&m) {
        Some(x) => {
            *x += c;
            if x.is_zero() {
                v.remove(&m);
            }
        }
        None => {
            v.insert(m, c);
        }
    }
}

pub fn add_scaled<T: Scalar>(acc: &mut LinComb<T>, v: &LinComb<T>, c: &T) {
    for (m, x) in v {
        add_term(acc, m.clone(), x.clone() * c.clone());
    }
}

pub fn singleton<T: Scalar>(m: Monomial) -> LinComb<T> {
    let mut v = LinComb::new();
    v.insert(m, T::one());
    v
}

/// Drop entries at or below `eps` in magnitude (numeric path only).
pub fn prune<T: Scalar>(v: &mut LinComb<T>, eps: f64) {
    v.retain(|_, x| x.magnitude() > eps);
}

/// Product of two linear combinations.
pub fn product<T: Scalar>(x: &LinComb<T>, y: &LinComb<T>) -> LinComb<T> {
    let mut out = LinComb::new();
    for (mx, cx) in x {
        for (my, cy) in y {
            if let Some((m, s)) = multiply(mx, my) {
                add_term(&mut out, m, sign_scalar::<T>(s) * cx.clone() * cy.clone());
            }
        }
    }
    out
}

pub fn sign_scalar<T: Scalar>(s: i32) -> T {
    T::from_ratio(s as i64, 1)
}

/// Image of a generator under a derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    One,
    Psi(Gen),
    Sigma(Gen),
}

type GenRule<'a, T> = Box<dyn Fn(Gen) -> Vec<(Slot, T)> + Send + Sync + 'a>;

/// A derivation of `Λ ⊗ S`, even or odd, given by its values on the
/// generators and extended with Koszul signs.
pub struct Derivation<'a, T> {
    pub odd: bool,
    pub on_psi: GenRule<'a, T>,
    pub on_sigma: GenRule<'a, T>,
}

impl<'a, T: Scalar> Derivation<'a, T> {
    pub fn new(
        odd: bool,
        on_psi: impl Fn(Gen) -> Vec<(Slot, T)> + Send + Sync + 'a,
        on_sigma: impl Fn(Gen) -> Vec<(Slot, T)> + Send + Sync + 'a,
    ) -> Self {
        Derivation {
            odd,
            on_psi: Box::new(on_psi),
            on_sigma: Box::new(on_sigma),
        }
    }

    pub fn apply(&self, m: &Monomial) -> LinComb<T> {
        let mut out = LinComb::new();
        self.apply_into(m, &T::one(), &mut out);
        out
    }

    pub fn apply_lin(&self, v: &LinComb<T>) -> LinComb<T> {
        let mut out = LinComb::new();
        for (m, c) in v {
            self.apply_into(m, c, &mut out);
        }
        out
    }

    /// Accumulate `scale · D(m)` into `out`.
    pub fn apply_into(&self, m: &Monomial, scale: &T, out: &mut LinComb<T>) {
        let d = m.psi.len();
        for (i, g) in m.psi.iter().enumerate() {
            let images = (self.on_psi)(*g);
            if images.is_empty() {
                continue;
            }
            let pre = if self.odd && i % 2 == 1 { -1 } else { 1 };
            for (slot, c) in images {
                let mut psi: Vec<Gen> = m.psi.clone();
                let mut sigma = m.sigma.clone();
                let sign = match slot {
                    Slot::Psi(h) => {
                        psi[i] = h;
                        match sort_psi(&mut psi) {
                            Some(s) => s,
                            None => continue,
                        }
                    }
                    Slot::Sigma(h) => {
                        // Removing an odd factor at position i and putting an
                        // even one there: moving it to the symmetric part is
                        // sign-free.
                        psi.remove(i);
                        sigma.push(h);
                        sigma.sort_unstable();
                        1
                    }
                    Slot::One => {
                        psi.remove(i);
                        1
                    }
                };
                let coeff = sign_scalar::<T>(pre * sign) * c * scale.clone();
                add_term(out, Monomial { psi, sigma }, coeff);
            }
        }
        for (g, mult) in m.sigma_runs() {
            let images = (self.on_sigma)(g);
            if images.is_empty() {
                continue;
            }
            // Passing an odd derivation over all exterior factors.
            let pre = if self.odd && d % 2 == 1 { -1 } else { 1 };
            let pos = m.sigma.iter().position(|h| *h == g).expect("run member");
            for (slot, c) in images {
                let mut psi = m.psi.clone();
                let mut sigma = m.sigma.clone();
                sigma.remove(pos);
                let sign = match slot {
                    Slot::Psi(h) => {
                        // The new odd factor sits after all exterior factors.
                        psi.push(h);
                        match sort_psi(&mut psi) {
                            Some(s) => s,
                            None => continue,
                        }
                    }
                    Slot::Sigma(h) => {
                        sigma.push(h);
                        sigma.sort_unstable();
                        1
                    }
                    Slot::One => 1,
                };
                let coeff = sign_scalar::<T>(pre * sign)
                    * T::from_ratio(mult as i64, 1)
                    * c
                    * scale.clone();
                add_term(out, Monomial { psi, sigma }, coeff);
            }
        }
    }
}

/// Left multiplication by an exterior generator.
pub fn wedge<T: Scalar>(g: Gen, m: &Monomial) -> Option<(Monomial, T)> {
    let mut psi = Vec::with_capacity(m.psi.len() + 1);
    psi.push(g);
    psi.extend_from_slice(&m.psi);
    let s = sort_psi(&mut psi)?;
    Some((
        Monomial {
            psi,
            sigma: m.sigma.clone(),
        },
        sign_scalar(s),
    ))
}

pub fn wedge_lin<T: Scalar>(g: Gen, v: &LinComb<T>, scale: &T, out: &mut LinComb<T>) {
    for (m, c) in v {
        if let Some((mm, s)) = wedge::<T>(g, m) {
            add_term(out, mm, s * c.clone() * scale.clone());
        }
    }
}

/// Contraction with the dual of exterior generator `g` (an odd
/// derivation sending `g` to 1 and every other generator to 0).
pub fn contraction<'a, T: Scalar>(g: Gen) -> Derivation<'a, T> {
    Derivation::new(
        true,
        move |h| if h == g { vec![(Slot::One, T::one())] } else { Vec::new() },
        |_| Vec::new(),
    )
}

/// Matrix of a monomial-level map `f` from `source` to `target`, with
/// columns indexed by the source basis. Any output monomial outside the
/// target basis is a grading bug and reported as an error.
pub fn matrix_of<T: Scalar>(
    f: impl Fn(&Monomial) -> LinComb<T>,
    source: &Block,
    target: &Block,
) -> Result<SparseMatrix<T>> {
    let mut triplets = Vec::new();
    for (j, m) in source.basis.iter().enumerate() {
        for (mm, c) in f(m) {
            let i = target.position(&mm).ok_or_else(|| {
                crate::error::Error::DimensionMismatch(format!(
                    "image monomial {:?} of block {} is not in block {}",
                    mm, source.key, target.key
                ))
            })?;
            triplets.push((i, j, c));
        }
    }
    SparseMatrix::from_triplets(target.dim(), source.dim(), triplets)
}

/// Coordinates of a linear combination in a block basis.
pub fn to_coordinates<T: Scalar>(v: &LinComb<T>, block: &Block) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); block.dim()];
    for (m, c) in v {
        let i = block.position(m).ok_or_else(|| {
            crate::error::Error::DimensionMismatch(format!("monomial {:?} not in block {}", m, block.key))
        })?;
        out[i] = c.clone();
    }
    Ok(out)
}

pub fn from_coordinates<T: Scalar>(x: &[T], block: &Block) -> LinComb<T> {
    let mut v = LinComb::new();
    for (i, c) in x.iter().enumerate() {
        add_term(&mut v, block.basis[i].clone(), c.clone());
    }
    v
}

/// Hermitian metric on a block: monomials are orthogonal with
/// `‖ψ^a(−m)‖² = 1/m` and `‖σ^k‖² = k!` for a repeated symmetric factor.
pub fn metric_diagonal(block: &Block) -> Vec<f64> {
    block.basis.iter().map(monomial_norm_sq).collect()
}

pub fn monomial_norm_sq(m: &Monomial) -> f64 {
    let mut v = 1.0;
    for g in &m.psi {
        v /= g.depth as f64;
    }
    for (_, k) in m.sigma_runs() {
        v *= (1..=k).product::<usize>() as f64;
    }
    v
}

/// Metric after relabeling: `‖ψ_new(−m)‖² = m + 1`.
pub fn relabeled_norm_sq(m: &Monomial) -> f64 {
    let mut v = 1.0;
    for g in &m.psi {
        v *= (g.depth + 1) as f64;
    }
    for (_, k) in m.sigma_runs() {
        v *= (1..=k).product::<usize>() as f64;
    }
    v
}

/// Factor converting original coordinates to relabeled ones: a monomial
/// with exterior depths `k_i` picks up `Π 1/k_i`.
pub fn relabel_factor(m: &Monomial) -> f64 {
    m.psi.iter().map(|g| 1.0 / g.depth as f64).product()
}

/// Exact kernel of the zero-mode action of the simple raising and
/// lowering generators on a block (the `𝔤`-invariants).
pub fn invariant_subspace(alg: &LieAlgebraData, block: &Block) -> Vec<Vec<(usize, Rational)>> {
    let gens: Vec<usize> = alg
        .simple_raising
        .iter()
        .chain(&alg.simple_lowering)
        .copied()
        .collect();
    invariant_subspace_for(alg, block, &gens)
}

/// Same with an explicit list of acting basis elements.
pub fn invariant_subspace_for(
    alg: &LieAlgebraData,
    block: &Block,
    acting: &[usize],
) -> Vec<Vec<(usize, Rational)>> {
    let m = zero_mode_action_matrix(alg, block, acting);
    crate::exactlin::kernel_basis_sparse(&m)
}

/// Stacked matrix of the zero-mode actions of the given basis elements,
/// with rows indexed by (acting element, image monomial) as discovered.
pub fn zero_mode_action_matrix(
    alg: &LieAlgebraData,
    block: &Block,
    acting: &[usize],
) -> SparseMatrix<Rational> {
    let mut rows: HashMap<(usize, Monomial), usize> = HashMap::new();
    let mut triplets = Vec::new();
    for &x in acting {
        let der = zero_mode_derivation(&alg.exact, x, block.kind, alg);
        for (j, m) in block.basis.iter().enumerate() {
            for (mm, c) in der.apply(m) {
                let next = rows.len();
                let i = *rows.entry((x, mm)).or_insert(next);
                triplets.push((i, j, c));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), block.dim(), triplets).expect("indices in range")
}

/// The coadjoint action of `x_a` (depth-preserving) on both kinds of
/// generators, restricted to the admissible generators of `kind`.
pub fn zero_mode_derivation<'a, T: Scalar>(
    structure: &'a crate::liealg::Structure<T>,
    a: usize,
    kind: ComplexKind,
    alg: &'a LieAlgebraData,
) -> Derivation<'a, T> {
    Derivation::new(
        false,
        move |g| {
            structure.coadjoint[a][g.index()]
                .iter()
                .filter(|(c, _)| kind.allows(alg, GenKind::Psi, *c, g.depth()))
                .map(|(c, v)| (Slot::Psi(Gen::new(*c, g.depth())), v.clone()))
                .collect()
        },
        move |g| {
            structure.coadjoint[a][g.index()]
                .iter()
                .filter(|(c, _)| kind.allows(alg, GenKind::Sigma, *c, g.depth()))
                .map(|(c, v)| (Slot::Sigma(Gen::new(*c, g.depth())), v.clone()))
                .collect()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;
    use crate::liealg::{build_algebra, AlgebraName};

    fn sl2() -> LieAlgebraData {
        build_algebra(AlgebraName::sl(2)).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let (m, s) = normalize(&[GenIndex::psi(1, 2), GenIndex::psi(1, 1)]);
        assert_eq!(s, -1);
        assert_eq!(m.psi, vec![Gen::new(1, 1), Gen::new(1, 2)]);
        let (_, s) = normalize(&[GenIndex::psi(1, 1), GenIndex::psi(1, 1)]);
        assert_eq!(s, 0);
        let (m, s) = normalize(&[GenIndex::sigma(2, 0), GenIndex::sigma(1, 1)]);
        assert_eq!(s, 1);
        assert_eq!(m.sigma.len(), 2);
    }

    #[test]
    fn block_examples() {
        let a = sl2();
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(0, 1, 0), Sector::Full);
        assert_eq!(b.dim(), 3);
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(1, 0, 2), Sector::Full);
        assert_eq!(b.dim(), 3);
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(2, 0, 3), Sector::Full);
        assert_eq!(b.dim(), 9);
        let mut sorted = b.basis.clone();
        sorted.sort();
        assert_eq!(sorted, b.basis);
    }

    #[test]
    fn block_counts_match_generating_series() {
        // Coefficients of Π_{m≥1}(1+tq^m)^3 Π_{m≥0}(1−uq^m)^{−3}, p ≤ 2, w ≤ 4.
        let expected: &[((usize, usize, usize), usize)] = &[
            ((1, 0, 3), 3),
            ((2, 0, 3), 9),
            ((3, 0, 3), 1),
            ((2, 0, 4), 12),
            ((3, 0, 4), 9),
            ((1, 1, 2), 18),
            ((2, 1, 4), 72),
            ((0, 2, 4), 24),
            ((2, 2, 4), 198),
            ((3, 2, 4), 63),
        ];
        let a = sl2();
        for &((d, p, w), n) in expected {
            let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(d, p, w), Sector::Full);
            assert_eq!(b.dim(), n, "block {:?}", (d, p, w));
        }
    }

    #[test]
    fn truncated_blocks() {
        let a = sl2();
        let total: usize = (0..=6)
            .flat_map(|d| (0..=6).map(move |w| (d, w)))
            .map(|(d, w)| enumerate_block(&a, ComplexKind::Truncated(2), BlockKey::new(d, 0, w), Sector::Full).dim())
            .sum();
        assert_eq!(total, 64);
        let b = enumerate_block(&a, ComplexKind::Truncated(2), BlockKey::new(1, 1, 0), Sector::Full);
        assert_eq!(b.dim(), 0);
    }

    #[test]
    fn invariant_examples() {
        let a = sl2();
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(0, 2, 0), Sector::Full);
        assert_eq!(b.dim(), 6);
        assert_eq!(invariant_subspace(&a, &b).len(), 1);
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(0, 1, 0), Sector::Full);
        assert_eq!(invariant_subspace(&a, &b).len(), 0);
        let b = enumerate_block(&a, ComplexKind::SuperRelative, BlockKey::new(1, 1, 1), Sector::Full);
        assert_eq!(b.dim(), 9);
        let inv = invariant_subspace(&a, &b);
        assert_eq!(inv.len(), 1);
        // Dual pairing: θ^e θ^f pairs with the Killing form; check support.
        assert_eq!(inv[0].len(), 3);
    }

    #[test]
    fn all_generators_give_same_invariants() {
        let a = build_algebra(AlgebraName::sl(3)).unwrap();
        let all: Vec<usize> = (0..a.dim()).collect();
        for key in [BlockKey::new(0, 2, 0), BlockKey::new(1, 1, 1), BlockKey::new(2, 0, 3), BlockKey::new(0, 3, 0)] {
            let b = enumerate_block(&a, ComplexKind::SuperRelative, key, Sector::Full);
            assert_eq!(
                invariant_subspace(&a, &b).len(),
                invariant_subspace_for(&a, &b, &all).len()
            );
            let z = enumerate_block(&a, ComplexKind::SuperRelative, key, Sector::ZeroWeight);
            assert_eq!(invariant_subspace(&a, &b).len(), invariant_subspace(&a, &z).len());
        }
    }

    #[test]
    fn products_are_graded() {
        let x = Monomial {
            psi: vec![Gen::new(0, 1)],
            sigma: vec![Gen::new(2, 0)],
        };
        let y = Monomial {
            psi: vec![Gen::new(0, 1)],
            sigma: vec![],
        };
        assert!(multiply(&x, &y).is_none());
        let z = Monomial {
            psi: vec![Gen::new(1, 0)],
            sigma: vec![Gen::new(2, 3)],
        };
        let (m, s) = multiply(&x, &z).unwrap();
        assert_eq!(s, -1);
        assert_eq!(m.key(), BlockKey::new(x.coh_degree() + 1, 2, 1 + 3));
    }

    #[test]
    fn odd_derivation_signs() {
        // ι = contraction with ψ(0,2): ι(ψ(0,1)ψ(0,2)) = −ψ(0,1).
        let m = Monomial {
            psi: vec![Gen::new(0, 1), Gen::new(0, 2)],
            sigma: vec![Gen::new(1, 0), Gen::new(1, 0)],
        };
        let iota = contraction::<Rational>(Gen::new(0, 2));
        let out = iota.apply(&m);
        assert_eq!(out.len(), 1);
        let (mm, c) = out.into_iter().next().unwrap();
        assert_eq!(mm.psi, vec![Gen::new(0, 1)]);
        assert_eq!(c, rat(-1, 1));
        // Even derivation on a repeated symmetric factor counts multiplicity.
        let der = Derivation::<Rational>::new(false, |_| Vec::new(), |g| vec![(Slot::Sigma(Gen::new(2, g.depth())), rat(1, 1))]);
        let out = der.apply(&m);
        let target = Monomial {
            psi: m.psi.clone(),
            sigma: vec![Gen::new(1, 0), Gen::new(2, 0)],
        };
        assert_eq!(out.get(&target), Some(&rat(2, 1)));
    }

    #[test]
    fn relabel_round_trip_and_metric() {
        let m = Monomial {
            psi: vec![Gen::new(0, 1), Gen::new(2, 3)],
            sigma: vec![Gen::new(1, 0), Gen::new(1, 0)],
        };
        assert_eq!(m.relabel().unrelabel(), m);
        assert!((monomial_norm_sq(&m) - 2.0 / 3.0).abs() < 1e-15);
        assert!((relabel_factor(&m) - 1.0 / 3.0).abs() < 1e-15);
        // ‖M_old‖² = Π(1/k)² ‖M_new‖²  with k = old depths.
        let f = relabel_factor(&m);
        assert!((monomial_norm_sq(&m) - f * f * relabeled_norm_sq(&m.relabel())).abs() < 1e-15);
    }
}
