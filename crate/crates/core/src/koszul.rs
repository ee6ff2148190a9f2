//! Chevalley–Eilenberg differentials and cohomology tables.
//!
//! The differential is built basis-free from the coadjoint action: for the
//! exterior generators `ψ^a(−k)` of `𝔏/𝔨` and the dual basis elements
//! `z^k x_a`,
//!
//! `∂̄ = Σ ψ^a(−k) · (ρ_S(z^k x_a) + ½ ρ_Λ(z^k x_a))`,
//!
//! where `ρ` is the coadjoint action extended as an even derivation and
//! generators leaving the admissible range are set to zero ("brutal
//! truncation"). On the complexes in scope this squares to zero on all of
//! `Λ ⊗ S`, and restricts to the invariant subcomplex.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlin::{rank_exact, Rational, Scalar, SparseMatrix};
use crate::gradedbasis::{
    add_scaled, enumerate_block, invariant_subspace, matrix_of, wedge_lin, Block, BlockKey,
    ComplexKind, Derivation, Gen, GenKind, LinComb, Monomial, Sector, Slot,
};
use crate::liealg::{AlgebraName, LieAlgebraData, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Labeling {
    Original,
    Relabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Numeric,
}

/// A graded operator between two blocks, as a sparse matrix acting on
/// coordinate columns.
#[derive(Debug, Clone)]
pub struct OperatorRep<T> {
    pub source: BlockKey,
    pub target: BlockKey,
    pub matrix: SparseMatrix<T>,
    pub labeling: Labeling,
    pub backend: Backend,
}

impl<T: Scalar> OperatorRep<T> {
    pub fn build(
        f: impl Fn(&Monomial) -> LinComb<T>,
        source: &Block,
        target: &Block,
        labeling: Labeling,
        backend: Backend,
    ) -> Result<Self> {
        Ok(OperatorRep {
            source: source.key,
            target: target.key,
            matrix: matrix_of(f, source, target)?,
            labeling,
            backend,
        })
    }
}

/// Admissible image of a generator under the action of `z^m x_a`: the
/// coadjoint list at depth `depth − m`, filtered by the complex.
fn shifted_images<T: Scalar>(
    structure: &Structure<T>,
    alg: &LieAlgebraData,
    kind: ComplexKind,
    gen_kind: GenKind,
    a: usize,
    m: i64,
    g: Gen,
) -> Vec<(Gen, T)> {
    let depth = g.depth as i64 - m;
    if depth < 0 {
        return Vec::new();
    }
    let depth = depth as usize;
    structure.coadjoint[a][g.index()]
        .iter()
        .filter(|(c, _)| kind.allows(alg, gen_kind, *c, depth))
        .map(|(c, v)| (Gen::new(*c, depth), v.clone()))
        .collect()
}

/// Action of `z^m x_a` on the exterior generators only (`m` may be
/// negative, raising depth).
pub fn ad_op<'a, T: Scalar>(
    structure: &'a Structure<T>,
    alg: &'a LieAlgebraData,
    kind: ComplexKind,
    a: usize,
    m: i64,
) -> Derivation<'a, T> {
    Derivation::new(
        false,
        move |g| {
            shifted_images(structure, alg, kind, GenKind::Psi, a, m, g)
                .into_iter()
                .map(|(h, v)| (Slot::Psi(h), v))
                .collect()
        },
        |_| Vec::new(),
    )
}

/// Action of `z^m x_a` on the symmetric generators only.
pub fn r_op<'a, T: Scalar>(
    structure: &'a Structure<T>,
    alg: &'a LieAlgebraData,
    kind: ComplexKind,
    a: usize,
    m: i64,
) -> Derivation<'a, T> {
    Derivation::new(
        false,
        |_| Vec::new(),
        move |g| {
            shifted_images(structure, alg, kind, GenKind::Sigma, a, m, g)
                .into_iter()
                .map(|(h, v)| (Slot::Sigma(h), v))
                .collect()
        },
    )
}

/// The differential of a complex, valid on monomials of depth at most
/// `max_depth`.
pub struct CeDifferential<'a, T> {
    terms: Vec<(Gen, Derivation<'a, T>)>,
}

impl<'a, T: Scalar> CeDifferential<'a, T> {
    pub fn new(
        structure: &'a Structure<T>,
        alg: &'a LieAlgebraData,
        kind: ComplexKind,
        max_depth: usize,
    ) -> Self {
        let half = T::from_ratio(1, 2);
        let terms = kind
            .generators(alg, GenKind::Psi, max_depth)
            .into_iter()
            .map(|gen| {
                let a = gen.index();
                let k = gen.depth as i64;
                let h = half.clone();
                let der = Derivation::new(
                    false,
                    move |g| {
                        shifted_images(structure, alg, kind, GenKind::Psi, a, k, g)
                            .into_iter()
                            .map(|(x, v)| (Slot::Psi(x), v * h.clone()))
                            .collect()
                    },
                    move |g| {
                        shifted_images(structure, alg, kind, GenKind::Sigma, a, k, g)
                            .into_iter()
                            .map(|(x, v)| (Slot::Sigma(x), v))
                            .collect()
                    },
                );
                (gen, der)
            })
            .collect();
        CeDifferential { terms }
    }

    pub fn apply(&self, m: &Monomial) -> LinComb<T> {
        let w = m.z_weight();
        let mut out = LinComb::new();
        let one = T::one();
        for (gen, der) in &self.terms {
            if gen.depth() > w {
                continue;
            }
            let inner = der.apply(m);
            wedge_lin(*gen, &inner, &one, &mut out);
        }
        out
    }

    pub fn apply_lin(&self, v: &LinComb<T>) -> LinComb<T> {
        let mut out = LinComb::new();
        for (m, c) in v {
            add_scaled(&mut out, &self.apply(m), c);
        }
        out
    }
}

/// Exact differential of the given complex on the block `key`.
pub fn dbar_exact(
    alg: &LieAlgebraData,
    kind: ComplexKind,
    key: BlockKey,
    sector: Sector,
) -> Result<OperatorRep<Rational>> {
    let source = enumerate_block(alg, kind, key, sector);
    let target = enumerate_block(alg, kind, BlockKey::new(key.d + 1, key.p, key.w), sector);
    let diff = CeDifferential::new(&alg.exact, alg, kind, key.w);
    OperatorRep::build(|m| diff.apply(m), &source, &target, Labeling::Original, Backend::Exact)
}

/// Chevalley–Eilenberg differential of `𝔤[z]/zⁿ` from `(d, w)` to
/// `(d+1, w)`.
pub fn ce_differential(
    alg: &LieAlgebraData,
    n: usize,
    d: usize,
    w: usize,
) -> Result<OperatorRep<Rational>> {
    if n == 0 {
        return Err(Error::Config("truncation n must be at least 1".into()));
    }
    dbar_exact(alg, ComplexKind::Truncated(n), BlockKey::new(d, 0, w), Sector::Full)
}

/// Truncation bounds of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub max_d: usize,
    pub max_p: usize,
    pub max_w: usize,
}

impl Bounds {
    pub fn new(max_d: usize, max_p: usize, max_w: usize) -> Self {
        Bounds { max_d, max_p, max_w }
    }

    pub fn contains(&self, key: &BlockKey) -> bool {
        key.d <= self.max_d && key.p <= self.max_p && key.w <= self.max_w
    }

    pub fn keys(&self) -> Vec<BlockKey> {
        let mut out = Vec::new();
        for p in 0..=self.max_p {
            for w in 0..=self.max_w {
                for d in 0..=self.max_d {
                    out.push(BlockKey::new(d, p, w));
                }
            }
        }
        out
    }
}

/// Cohomology dimensions per block, together with the cochain dimensions
/// they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohomologyTable {
    pub algebra: AlgebraName,
    pub kind: ComplexKind,
    pub bounds: Bounds,
    #[serde(with = "block_map")]
    pub entries: BTreeMap<BlockKey, usize>,
    #[serde(with = "block_map")]
    pub cochain_dims: BTreeMap<BlockKey, usize>,
}

/// Serialize block-keyed maps as lists of `{d, p, w, value}` records, so
/// that they survive formats with string-only map keys.
pub mod block_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::gradedbasis::BlockKey;

    #[derive(Serialize, Deserialize)]
    struct Entry<V> {
        d: usize,
        p: usize,
        w: usize,
        value: V,
    }

    pub fn serialize<S, V>(map: &BTreeMap<BlockKey, V>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        V: Serialize + Clone,
    {
        let list: Vec<Entry<V>> = map
            .iter()
            .map(|(k, v)| Entry {
                d: k.d,
                p: k.p,
                w: k.w,
                value: v.clone(),
            })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D, V>(d: D) -> Result<BTreeMap<BlockKey, V>, D::Error>
    where
        D: Deserializer<'de>,
        V: Deserialize<'de>,
    {
        let list: Vec<Entry<V>> = Vec::deserialize(d)?;
        Ok(list
            .into_iter()
            .map(|e| (BlockKey::new(e.d, e.p, e.w), e.value))
            .collect())
    }
}

impl CohomologyTable {
    pub fn get(&self, key: &BlockKey) -> usize {
        self.entries.get(key).copied().unwrap_or(0)
    }

    /// Whether `Σ_d (−1)^d dim C = Σ_d (−1)^d dim H` in every `(p, w)`
    /// column whose degree range is complete.
    pub fn euler_consistent(&self) -> bool {
        let mut cols: BTreeMap<(usize, usize), (i64, i64)> = BTreeMap::new();
        for (k, &h) in &self.entries {
            let c = self.cochain_dims.get(k).copied().unwrap_or(0);
            let s = if k.d % 2 == 0 { 1 } else { -1 };
            let e = cols.entry((k.p, k.w)).or_default();
            e.0 += s * c as i64;
            e.1 += s * h as i64;
        }
        cols.values().all(|(c, h)| c == h)
    }
}

/// Cochain space used for cohomology: the invariant vectors for the
/// relative super complex, the zero-weight monomials otherwise.
pub fn cochain_basis(alg: &LieAlgebraData, kind: ComplexKind, block: &Block) -> Vec<Vec<(usize, Rational)>> {
    match kind {
        ComplexKind::SuperRelative => invariant_subspace(alg, block),
        _ => (0..block.dim()).map(|i| vec![(i, Rational::from_integer(1.into()))]).collect(),
    }
}

/// Exact rank of a family of linear combinations.
pub fn rank_of_lincombs(vectors: &[LinComb<Rational>]) -> usize {
    let mut index: HashMap<Monomial, usize> = HashMap::new();
    let mut triplets = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        for (m, c) in v {
            let next = index.len();
            triplets.push((i, *index.entry(m.clone()).or_insert(next), c.clone()));
        }
    }
    let m = SparseMatrix::from_triplets(vectors.len(), index.len(), triplets).expect("indices in range");
    rank_exact(&m)
}

/// The coboundaries landing in block `key`: images of the cochain basis of
/// the block one degree lower.
pub fn coboundaries(alg: &LieAlgebraData, kind: ComplexKind, key: BlockKey) -> Vec<LinComb<Rational>> {
    if key.d == 0 {
        return Vec::new();
    }
    let diff = CeDifferential::new(&alg.exact, alg, kind, key.w);
    let block = enumerate_block(alg, kind, BlockKey::new(key.d - 1, key.p, key.w), Sector::ZeroWeight);
    cochain_basis(alg, kind, &block)
        .iter()
        .map(|v| {
            let mut acc = LinComb::new();
            for (i, c) in v {
                add_scaled(&mut acc, &diff.apply(&block.basis[*i]), c);
            }
            acc
        })
        .filter(|v| !v.is_empty())
        .collect()
}

/// Images of cochain vectors under the differential, as sparse rows over
/// a column index discovered on the fly.
fn image_rank(
    diff: &CeDifferential<'_, Rational>,
    block: &Block,
    vectors: &[Vec<(usize, Rational)>],
) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<LinComb<Rational>> = block.basis.iter().map(|m| diff.apply(m)).collect();
    let mut index: HashMap<Monomial, usize> = HashMap::new();
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut acc = LinComb::new();
        for (i, c) in v {
            add_scaled(&mut acc, &cols[*i], c);
        }
        let row: Vec<(usize, Rational)> = acc
            .into_iter()
            .map(|(m, c)| {
                let next = index.len();
                (*index.entry(m).or_insert(next), c)
            })
            .collect();
        rows.push(row);
    }
    let width = index.len();
    let m = SparseMatrix::from_triplets(
        rows.len(),
        width,
        rows.into_iter()
            .enumerate()
            .flat_map(|(i, r)| r.into_iter().map(move |(j, c)| (i, j, c))),
    )
    .expect("indices in range");
    rank_exact(&m)
}

/// One `(p, w)` column: `(d, dim C^d, dim H^d)` for `d ≤ max_d`.
pub fn column_cohomology(
    alg: &LieAlgebraData,
    kind: ComplexKind,
    p: usize,
    w: usize,
    max_d: usize,
) -> Vec<(usize, usize, usize)> {
    let diff = CeDifferential::new(&alg.exact, alg, kind, w);
    let mut dims = Vec::new();
    let mut ranks = Vec::new();
    for d in 0..=max_d {
        let block = enumerate_block(alg, kind, BlockKey::new(d, p, w), Sector::ZeroWeight);
        let basis = cochain_basis(alg, kind, &block);
        dims.push(basis.len());
        ranks.push(image_rank(&diff, &block, &basis));
    }
    (0..=max_d)
        .map(|d| {
            let incoming = if d == 0 { 0 } else { ranks[d - 1] };
            (d, dims[d], dims[d] - ranks[d] - incoming)
        })
        .collect()
}

/// Exact cohomology table over all blocks within `bounds`, one parallel
/// task per `(p, w)` column.
pub fn cohomology_table(alg: &LieAlgebraData, kind: ComplexKind, bounds: Bounds) -> CohomologyTable {
    let max_p = if kind.has_sigma() { bounds.max_p } else { 0 };
    let columns: Vec<(usize, usize)> = (0..=max_p)
        .flat_map(|p| (0..=bounds.max_w).map(move |w| (p, w)))
        .collect();
    let results: Vec<(usize, usize, Vec<(usize, usize, usize)>)> = columns
        .par_iter()
        .map(|&(p, w)| (p, w, column_cohomology(alg, kind, p, w, bounds.max_d)))
        .collect();
    let mut entries = BTreeMap::new();
    let mut cochain_dims = BTreeMap::new();
    for (p, w, col) in results {
        for (d, c, h) in col {
            let key = BlockKey::new(d, p, w);
            entries.insert(key, h);
            cochain_dims.insert(key, c);
        }
    }
    CohomologyTable {
        algebra: alg.name,
        kind,
        bounds: Bounds::new(bounds.max_d, max_p, bounds.max_w),
        entries,
        cochain_dims,
    }
}

/// Whether `∂̄ ∘ ∂̄` vanishes exactly on every monomial of the block.
pub fn dbar_squares_to_zero(alg: &LieAlgebraData, kind: ComplexKind, key: BlockKey, sector: Sector) -> bool {
    let block = enumerate_block(alg, kind, key, sector);
    let diff = CeDifferential::new(&alg.exact, alg, kind, key.w);
    block.basis.iter().all(|m| diff.apply_lin(&diff.apply(m)).is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;
    use crate::gradedbasis::zero_mode_derivation;
    use crate::liealg::build_algebra;

    fn sl2() -> LieAlgebraData {
        build_algebra(AlgebraName::sl(2)).unwrap()
    }

    #[test]
    fn classical_sl2_cohomology() {
        let a = sl2();
        let t = cohomology_table(&a, ComplexKind::Truncated(1), Bounds::new(3, 0, 0));
        let dims: Vec<usize> = (0..=3).map(|d| t.get(&BlockKey::new(d, 0, 0))).collect();
        assert_eq!(dims, vec![1, 0, 0, 1]);
        let op = ce_differential(&a, 1, 1, 0).unwrap();
        assert_eq!(op.matrix.rows(), 3);
        assert_eq!(rank_exact(&op.matrix), 3);
    }

    #[test]
    fn truncated_sl2_n2() {
        let a = sl2();
        let t = cohomology_table(&a, ComplexKind::Truncated(2), Bounds::new(6, 0, 6));
        assert_eq!(t.get(&BlockKey::new(3, 0, 3)), 1);
        assert_eq!(t.get(&BlockKey::new(3, 0, 1)), 0);
        assert_eq!(t.get(&BlockKey::new(3, 0, 2)), 0);
        assert_eq!(t.get(&BlockKey::new(6, 0, 3)), 1);
        let total: usize = t.entries.values().sum();
        assert_eq!(total, 4);
        assert!(t.euler_consistent());
    }

    #[test]
    fn super_relative_small_entries() {
        let a = sl2();
        let t = cohomology_table(&a, ComplexKind::SuperRelative, Bounds::new(1, 2, 1));
        assert_eq!(t.get(&BlockKey::new(0, 2, 0)), 1);
        assert_eq!(t.get(&BlockKey::new(1, 1, 1)), 1);
        assert_eq!(t.get(&BlockKey::new(0, 0, 0)), 1);
        assert_eq!(t.get(&BlockKey::new(0, 1, 0)), 0);
    }

    #[test]
    fn r_op_examples() {
        let a = sl2();
        let (e, h, f) = (0usize, 1usize, 2usize);
        let sig = |b: usize, depth: usize| Monomial {
            psi: vec![],
            sigma: vec![Gen::new(b, depth)],
        };
        // Coadjoint action of e on θ^h at depth 1, shifted by one: −f_{e,c}^h θ^c,
        // nonzero for c = f ([e, f] = h).
        let r = r_op(&a.exact, &a, ComplexKind::SuperRelative, e, 1);
        let out = r.apply(&sig(h, 1));
        assert_eq!(out.len(), 1);
        assert_eq!(out.get(&sig(f, 0)), Some(&rat(-1, 1)));
        let r2 = r_op(&a.exact, &a, ComplexKind::SuperRelative, e, 2);
        assert!(r2.apply(&sig(h, 1)).is_empty());
        let ad = ad_op(&a.exact, &a, ComplexKind::SuperRelative, e, 0);
        assert!(ad.apply(&sig(h, 1)).is_empty());
    }

    #[test]
    fn differential_squares_to_zero() {
        let a = sl2();
        for kind in [
            ComplexKind::SuperRelative,
            ComplexKind::SuperAbsolute,
            ComplexKind::Truncated(3),
            ComplexKind::Iwahori,
        ] {
            for d in 0..3 {
                for p in 0..3 {
                    for w in 0..4 {
                        assert!(
                            dbar_squares_to_zero(&a, kind, BlockKey::new(d, p, w), Sector::Full),
                            "{kind:?} ({d},{p},{w})"
                        );
                    }
                }
            }
        }
        let b = build_algebra(AlgebraName::gl(2)).unwrap();
        assert!(dbar_squares_to_zero(&b, ComplexKind::SuperRelative, BlockKey::new(1, 1, 2), Sector::Full));
    }

    #[test]
    fn differential_commutes_with_zero_modes() {
        let a = sl2();
        let kind = ComplexKind::SuperRelative;
        for key in [BlockKey::new(1, 1, 2), BlockKey::new(0, 2, 2), BlockKey::new(2, 0, 3)] {
            let diff = CeDifferential::new(&a.exact, &a, kind, key.w);
            let block = enumerate_block(&a, kind, key, Sector::Full);
            for x in 0..a.dim() {
                let rho = zero_mode_derivation(&a.exact, x, kind, &a);
                for m in &block.basis {
                    let lhs = diff.apply_lin(&rho.apply(m));
                    let rhs = rho.apply_lin(&diff.apply(m));
                    let mut delta = lhs;
                    add_scaled(&mut delta, &rhs, &rat(-1, 1));
                    assert!(delta.is_empty());
                }
            }
        }
    }

    #[test]
    fn linear_generator_differential() {
        // ∂̄ψ^b(−2) = ½ Σ_a ψ^a(−1)∧ψ^{[a,b]}(−1) has only ψψ terms.
        let a = sl2();
        let diff = CeDifferential::new(&a.exact, &a, ComplexKind::SuperRelative, 2);
        let m = Monomial {
            psi: vec![Gen::new(1, 2)],
            sigma: vec![],
        };
        let out = diff.apply(&m);
        assert!(!out.is_empty());
        assert!(out.keys().all(|k| k.psi.len() == 2 && k.psi.iter().all(|g| g.depth == 1)));
        let one = diff.apply(&Monomial::one());
        assert!(one.is_empty());
    }
}
