//! Classical Lie algebras sl(n) and gl(n) in two coordinate systems.
//!
//! The exact system is a Chevalley-style basis of matrix units `E_ij`
//! (i != j) and Cartan elements, with integer structure constants. The
//! numeric system is a basis of self-adjoint (hermitian) matrices that is
//! orthonormal for the Killing form; it is only used where the hermitian
//! metric enters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlin::{rat, Complex, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Sl,
    Gl,
}

/// `sl(n)` or `gl(n)`, parsed from `sl2`, `sl(2)`, `gl3`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraName {
    pub family: Family,
    pub n: usize,
}

impl AlgebraName {
    pub fn sl(n: usize) -> Self {
        AlgebraName { family: Family::Sl, n }
    }

    pub fn gl(n: usize) -> Self {
        AlgebraName { family: Family::Gl, n }
    }

    pub fn is_semisimple(&self) -> bool {
        self.family == Family::Sl
    }
}

impl fmt::Display for AlgebraName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Sl => write!(f, "sl{}", self.n),
            Family::Gl => write!(f, "gl{}", self.n),
        }
    }
}

impl FromStr for AlgebraName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | '_' | ' '))
            .collect();
        let (family, rest) = if let Some(r) = t.strip_prefix("sl") {
            (Family::Sl, r)
        } else if let Some(r) = t.strip_prefix("gl") {
            (Family::Gl, r)
        } else {
            return Err(Error::UnsupportedAlgebra(s.to_string()));
        };
        let n: usize = rest
            .parse()
            .map_err(|_| Error::UnsupportedAlgebra(s.to_string()))?;
        if n < 2 {
            return Err(Error::UnsupportedAlgebra(s.to_string()));
        }
        Ok(AlgebraName { family, n })
    }
}

/// Small dense square matrix used for the defining representation.
pub type SmallMat<T> = Vec<Vec<T>>;

fn mat_zero<T: Scalar>(n: usize) -> SmallMat<T> {
    vec![vec![T::zero(); n]; n]
}

pub fn mat_mul<T: Scalar>(a: &SmallMat<T>, b: &SmallMat<T>) -> SmallMat<T> {
    let n = a.len();
    let mut c = mat_zero(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                c[i][j] += a[i][k].clone() * b[k][j].clone();
            }
        }
    }
    c
}

pub fn mat_commutator<T: Scalar>(a: &SmallMat<T>, b: &SmallMat<T>) -> SmallMat<T> {
    let ab = mat_mul(a, b);
    let ba = mat_mul(b, a);
    ab.into_iter()
        .zip(ba)
        .map(|(r, s)| r.into_iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn mat_trace<T: Scalar>(a: &SmallMat<T>) -> T {
    (0..a.len()).fold(T::zero(), |acc, i| acc + a[i][i].clone())
}

/// Structure constants and the induced coadjoint action on dual
/// coordinates in one fixed basis.
#[derive(Debug, Clone)]
pub struct Structure<T> {
    pub dim: usize,
    /// `bracket[a][b]` lists `(c, f)` with `[x_a, x_b] = sum f x_c`.
    pub bracket: Vec<Vec<Vec<(usize, T)>>>,
    /// `coadjoint[a][b]` lists `(c, v)` with `x_a . θ^b = sum v θ^c`,
    /// where `θ` is the dual basis; `v = -f_{ac}^b`.
    pub coadjoint: Vec<Vec<Vec<(usize, T)>>>,
}

impl<T: Scalar> Structure<T> {
    pub fn from_bracket(bracket: Vec<Vec<Vec<(usize, T)>>>) -> Self {
        let dim = bracket.len();
        let mut coadjoint: Vec<Vec<Vec<(usize, T)>>> = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for c in 0..dim {
                for (b, f) in &bracket[a][c] {
                    coadjoint[a][*b].push((c, -f.clone()));
                }
            }
        }
        for row in &mut coadjoint {
            for entry in row.iter_mut() {
                entry.sort_by_key(|(c, _)| *c);
            }
        }
        Structure {
            dim,
            bracket,
            coadjoint,
        }
    }

    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> T {
        self.bracket[a][b]
            .iter()
            .find(|(k, _)| *k == c)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(T::zero)
    }

    /// Matrix of `ad(x_a)` as `ad[c][d] = f_{ad}^c`.
    pub fn ad_matrix(&self, a: usize) -> SmallMat<T> {
        let mut m = mat_zero(self.dim);
        for d in 0..self.dim {
            for (c, f) in &self.bracket[a][d] {
                m[*c][d] = f.clone();
            }
        }
        m
    }

    /// `tr(ad x_a ad x_b)`.
    pub fn killing_from_structure(&self) -> SmallMat<T> {
        let ads: Vec<_> = (0..self.dim).map(|a| self.ad_matrix(a)).collect();
        (0..self.dim)
            .map(|a| {
                (0..self.dim)
                    .map(|b| mat_trace(&mat_mul(&ads[a], &ads[b])))
                    .collect()
            })
            .collect()
    }

    pub fn bracket_vec(&self, x: &[T], y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() {
                    continue;
                }
                for (c, f) in &self.bracket[a][b] {
                    out[*c] += xa.clone() * yb.clone() * f.clone();
                }
            }
        }
        out
    }
}

/// Exact description of sl(n) or gl(n) in the Chevalley-style basis.
#[derive(Debug, Clone)]
pub struct LieAlgebraData {
    pub name: AlgebraName,
    pub labels: Vec<String>,
    /// Defining-representation matrix of each basis element.
    pub matrices: Vec<SmallMat<Rational>>,
    pub exact: Structure<Rational>,
    pub killing_gram: SmallMat<Rational>,
    pub cartan_indices: Vec<usize>,
    pub simple_raising: Vec<usize>,
    pub simple_lowering: Vec<usize>,
    /// Indices of the raising operators `E_ij`, `i < j`.
    pub positive_roots: Vec<usize>,
    pub exponents: Vec<usize>,
    /// Root of each basis element as an integer vector in `Z^n`
    /// (`e_i - e_j` for `E_ij`, zero on the Cartan).
    pub weights: Vec<Vec<i32>>,
}

impl LieAlgebraData {
    pub fn dim(&self) -> usize {
        self.exact.dim
    }

    pub fn rank(&self) -> usize {
        self.exponents.len()
    }

    pub fn n(&self) -> usize {
        self.name.n
    }

    /// Coordinates of a matrix in the basis (the matrix must lie in the
    /// algebra, so traceless for sl).
    pub fn coordinates<T: Scalar>(&self, m: &SmallMat<T>) -> Vec<T> {
        chevalley_coordinates(self.name, &self.unit_positions(), m)
    }

    fn unit_positions(&self) -> Vec<(usize, usize)> {
        unit_positions(self.name.n)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Off-diagonal matrix units in basis order: raising `(i, j)` with `i < j`
/// first, lowering afterwards.
fn unit_positions(n: usize) -> Vec<(usize, usize)> {
    let mut up = Vec::new();
    let mut low = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j {
                up.push((i, j));
            } else if i > j {
                low.push((i, j));
            }
        }
    }
    up.extend(low);
    up
}

/// Basis order: raising units, Cartan elements, lowering units. For sl(2)
/// this is `{e, h, f}`.
fn basis_layout(name: AlgebraName) -> (Vec<(usize, usize)>, usize) {
    let n = name.n;
    let units = unit_positions(n);
    let cartan = match name.family {
        Family::Sl => n - 1,
        Family::Gl => n,
    };
    (units, cartan)
}

fn chevalley_coordinates<T: Scalar>(
    name: AlgebraName,
    units: &[(usize, usize)],
    m: &SmallMat<T>,
) -> Vec<T> {
    let n = name.n;
    let half = units.len() / 2;
    let cartan = match name.family {
        Family::Sl => n - 1,
        Family::Gl => n,
    };
    let mut out = vec![T::zero(); units.len() + cartan];
    for (k, &(i, j)) in units.iter().enumerate() {
        let slot = if k < half { k } else { k + cartan };
        out[slot] = m[i][j].clone();
    }
    match name.family {
        Family::Sl => {
            // diag(d) = sum_i c_i (E_ii - E_{i+1,i+1}) with c_i = d_1 + ... + d_i.
            let mut acc = T::zero();
            for i in 0..n - 1 {
                acc += m[i][i].clone();
                out[half + i] = acc.clone();
            }
        }
        Family::Gl => {
            for i in 0..n {
                out[half + i] = m[i][i].clone();
            }
        }
    }
    out
}

pub fn build_algebra(name: AlgebraName) -> Result<LieAlgebraData> {
    let n = name.n;
    if n < 2 {
        return Err(Error::UnsupportedAlgebra(name.to_string()));
    }
    let (units, cartan) = basis_layout(name);
    let half = units.len() / 2;
    let dim = units.len() + cartan;
    let mut matrices: Vec<SmallMat<Rational>> = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    let mut weights = Vec::with_capacity(dim);
    let unit = |i: usize, j: usize| {
        let mut m = mat_zero::<Rational>(n);
        m[i][j] = rat(1, 1);
        m
    };
    let root = |i: usize, j: usize| {
        let mut w = vec![0i32; n];
        w[i] += 1;
        w[j] -= 1;
        w
    };
    for &(i, j) in &units[..half] {
        matrices.push(unit(i, j));
        labels.push(format!("E{}{}", i + 1, j + 1));
        weights.push(root(i, j));
    }
    for k in 0..cartan {
        let mut m = mat_zero::<Rational>(n);
        match name.family {
            Family::Sl => {
                m[k][k] = rat(1, 1);
                m[k + 1][k + 1] = rat(-1, 1);
                labels.push(format!("H{}", k + 1));
            }
            Family::Gl => {
                m[k][k] = rat(1, 1);
                labels.push(format!("E{}{}", k + 1, k + 1));
            }
        }
        matrices.push(m);
        weights.push(vec![0; n]);
    }
    for &(i, j) in &units[half..] {
        matrices.push(unit(i, j));
        labels.push(format!("E{}{}", i + 1, j + 1));
        weights.push(root(i, j));
    }

    let bracket: Vec<Vec<Vec<(usize, Rational)>>> = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|b| {
                    let c = mat_commutator(&matrices[a], &matrices[b]);
                    chevalley_coordinates(name, &units, &c)
                        .into_iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_zero())
                        .collect()
                })
                .collect()
        })
        .collect();
    let exact = Structure::from_bracket(bracket);
    let killing_gram = exact.killing_from_structure();

    let positive_roots: Vec<usize> = (0..half).collect();
    let simple_raising: Vec<usize> = (0..half)
        .filter(|&k| units[k].1 == units[k].0 + 1)
        .collect();
    let simple_lowering: Vec<usize> = simple_raising
        .iter()
        .map(|&k| {
            let (i, j) = units[k];
            half + cartan + units[half..].iter().position(|&u| u == (j, i)).expect("lowering unit")
        })
        .collect();
    let exponents = match name.family {
        Family::Sl => (1..n).collect(),
        Family::Gl => (0..n).collect(),
    };
    Ok(LieAlgebraData {
        name,
        labels,
        matrices,
        exact,
        killing_gram,
        cartan_indices: (half..half + cartan).collect(),
        simple_raising,
        simple_lowering,
        positive_roots,
        exponents,
        weights,
    })
}

/// Self-adjoint basis of the compact form, orthonormal for the invariant
/// form `B`: the Killing form `2n tr(xy)` on the traceless part, and
/// `tr(xy)` on the center (gl only).
#[derive(Debug, Clone)]
pub struct CompactBasis {
    pub name: AlgebraName,
    pub xi: Vec<SmallMat<Complex>>,
    pub numeric: Structure<Complex>,
    /// `to_compact[a]` are the coordinates of Chevalley element `x_a` in
    /// the basis `ξ`.
    pub to_compact: Vec<Vec<Complex>>,
    /// `to_chevalley[b]` are the coordinates of `ξ_b` in the Chevalley basis.
    pub to_chevalley: Vec<Vec<Complex>>,
}

impl CompactBasis {
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// The invariant form used for orthonormality.
    pub fn form(&self, x: &SmallMat<Complex>, y: &SmallMat<Complex>) -> Complex {
        metric_form(self.name.n, x, y)
    }
}

fn metric_form(n: usize, x: &SmallMat<Complex>, y: &SmallMat<Complex>) -> Complex {
    let nf = n as f64;
    let txy = mat_trace(&mat_mul(x, y));
    let tx = mat_trace(x);
    let ty = mat_trace(y);
    txy * (2.0 * nf) - tx * ty * 2.0 + tx * ty / nf
}

pub fn compact_basis(alg: &LieAlgebraData) -> CompactBasis {
    let n = alg.n();
    let nf = n as f64;
    let zero = Complex::new(0.0, 0.0);
    let mut xi: Vec<SmallMat<Complex>> = Vec::new();
    // Killing-normalized generalized Gell-Mann matrices: tr(λ²) = 2 and
    // K(λ, λ) = 4n, so ξ = λ / (2 sqrt(n)).
    let s = 1.0 / (2.0 * nf.sqrt());
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sym = vec![vec![zero; n]; n];
            sym[i][j] = Complex::new(s, 0.0);
            sym[j][i] = Complex::new(s, 0.0);
            xi.push(sym);
            let mut anti = vec![vec![zero; n]; n];
            anti[i][j] = Complex::new(0.0, -s);
            anti[j][i] = Complex::new(0.0, s);
            xi.push(anti);
        }
    }
    for k in 1..n {
        let kf = k as f64;
        let c = (2.0 / (kf * (kf + 1.0))).sqrt() * s;
        let mut d = vec![vec![zero; n]; n];
        for (l, row) in d.iter_mut().enumerate().take(k) {
            row[l] = Complex::new(c, 0.0);
        }
        d[k][k] = Complex::new(-kf * c, 0.0);
        xi.push(d);
    }
    if alg.name.family == Family::Gl {
        let mut c = vec![vec![zero; n]; n];
        for (l, row) in c.iter_mut().enumerate() {
            row[l] = Complex::new(1.0 / nf.sqrt(), 0.0);
        }
        xi.push(c);
    }
    let dim = xi.len();
    let bracket: Vec<Vec<Vec<(usize, Complex)>>> = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|b| {
                    let comm = mat_commutator(&xi[a], &xi[b]);
                    (0..dim)
                        .map(|c| (c, metric_form(n, &xi[c], &comm)))
                        .filter(|(_, v)| v.norm() > 1e-13)
                        .collect()
                })
                .collect()
        })
        .collect();
    let numeric = Structure::from_bracket(bracket);
    let chev_c: Vec<SmallMat<Complex>> = alg
        .matrices
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(Scalar::to_complex).collect()).collect())
        .collect();
    let to_compact = chev_c
        .iter()
        .map(|x| xi.iter().map(|e| metric_form(n, e, x)).collect())
        .collect();
    let to_chevalley = xi.iter().map(|e| alg.coordinates(e)).collect();
    CompactBasis {
        name: alg.name,
        xi,
        numeric,
        to_compact,
        to_chevalley,
    }
}

/// A symmetric invariant multilinear form `Φ: S^k g -> C`, stored by its
/// values on sorted index multisets of one basis.
#[derive(Debug, Clone)]
pub struct InvariantForm<T> {
    pub degree: usize,
    pub coefficients: BTreeMap<Vec<usize>, T>,
}

impl<T: Scalar> InvariantForm<T> {
    pub fn value(&self, indices: &[usize]) -> T {
        let mut key = indices.to_vec();
        key.sort_unstable();
        self.coefficients.get(&key).cloned().unwrap_or_else(T::zero)
    }

    /// Largest violation of `sum_i Φ(y_1, .., [x, y_i], .., y_k) = 0` over
    /// basis elements `x` and index multisets `y`.
    pub fn invariance_defect(&self, structure: &Structure<T>) -> f64 {
        let dim = structure.dim;
        let mut worst = 0.0f64;
        for key in multisets(dim, self.degree) {
            for x in 0..dim {
                let mut total = T::zero();
                for pos in 0..key.len() {
                    for (c, f) in &structure.bracket[x][key[pos]] {
                        let mut k2 = key.clone();
                        k2[pos] = *c;
                        total += f.clone() * self.value(&k2);
                    }
                }
                worst = worst.max(total.magnitude());
            }
        }
        worst
    }
}

/// All sorted multisets of size `k` from `0..dim`.
pub fn multisets(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..dim {
            cur.push(a);
            rec(dim, k, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, 0, &mut Vec::new(), &mut out);
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// `sum over permutations of tr(x_{σ1} ... x_{σk}) / k`, an integral
/// symmetrization because cyclic rotations give equal traces.
fn symmetrized_trace<T: Scalar>(mats: &[SmallMat<T>], key: &[usize]) -> T {
    let k = key.len();
    let mut total = T::zero();
    for p in permutations(k) {
        let mut prod = mats[key[p[0]]].clone();
        for &i in &p[1..] {
            prod = mat_mul(&prod, &mats[key[i]]);
        }
        total += mat_trace(&prod);
    }
    total / T::from_ratio(k as i64, 1)
}

fn check_exponent(alg: &LieAlgebraData, degree: usize) -> Result<()> {
    if degree == 0 || !alg.exponents.contains(&(degree - 1)) {
        return Err(Error::NotAnExponent {
            algebra: alg.name.to_string(),
            degree,
        });
    }
    Ok(())
}

fn form_from_matrices<T: Scalar>(
    mats: &[SmallMat<T>],
    degree: usize,
    quadratic: impl Fn(usize, usize) -> T,
) -> InvariantForm<T> {
    let dim = mats.len();
    let mut coefficients = BTreeMap::new();
    for key in multisets(dim, degree) {
        let v = match degree {
            1 => mat_trace(&mats[key[0]]),
            2 => quadratic(key[0], key[1]),
            _ => symmetrized_trace(mats, &key),
        };
        if !v.is_zero() && v.magnitude() > 1e-14 {
            coefficients.insert(key, v);
        }
    }
    InvariantForm {
        degree,
        coefficients,
    }
}

/// Generator of the invariant ring in degree `degree` (an exponent plus
/// one), in the Chevalley basis: trace for degree 1, the Killing form for
/// degree 2, symmetrized traces above.
pub fn invariant_form(alg: &LieAlgebraData, degree: usize) -> Result<InvariantForm<Rational>> {
    check_exponent(alg, degree)?;
    Ok(form_from_matrices(&alg.matrices, degree, |a, b| {
        alg.killing_gram[a][b].clone()
    }))
}

/// The same generator evaluated on the compact basis; in degree 2 this is
/// the identity matrix `Φ(ξ_a, ξ_b) = δ_ab` (sl only).
pub fn compact_invariant_form(
    alg: &LieAlgebraData,
    compact: &CompactBasis,
    degree: usize,
) -> Result<InvariantForm<Complex>> {
    check_exponent(alg, degree)?;
    let n = alg.n();
    Ok(form_from_matrices(&compact.xi, degree, |a, b| {
        let x = &compact.xi[a];
        let y = &compact.xi[b];
        // Killing form 2n tr(xy) - 2 tr(x) tr(y).
        mat_trace(&mat_mul(x, y)) * (2.0 * n as f64) - mat_trace(x) * mat_trace(y) * 2.0
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(n: usize) -> LieAlgebraData {
        build_algebra(AlgebraName::sl(n)).unwrap()
    }

    #[test]
    fn dimensions_and_exponents() {
        let a = sl(2);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.exponents, vec![1]);
        assert_eq!(a.labels, vec!["E12", "H1", "E21"]);
        let g = build_algebra(AlgebraName::gl(2)).unwrap();
        assert_eq!(g.dim(), 4);
        assert_eq!(g.exponents, vec![0, 1]);
        let a3 = sl(3);
        assert_eq!(a3.dim(), 8);
        assert_eq!(a3.exponents, vec![1, 2]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("sl(3)".parse::<AlgebraName>().unwrap(), AlgebraName::sl(3));
        assert_eq!("gl2".parse::<AlgebraName>().unwrap(), AlgebraName::gl(2));
        assert!(matches!("so5".parse::<AlgebraName>(), Err(Error::UnsupportedAlgebra(_))));
        assert!("sl1".parse::<AlgebraName>().is_err());
    }

    #[test]
    fn sl2_chevalley_brackets() {
        let a = sl(2);
        let (e, h, f) = (0, 1, 2);
        assert_eq!(a.exact.bracket[e][f], vec![(h, rat(1, 1))]);
        assert_eq!(a.exact.bracket[h][e], vec![(e, rat(2, 1))]);
        assert_eq!(a.exact.bracket[h][f], vec![(f, rat(-2, 1))]);
        assert_eq!(a.simple_raising, vec![e]);
        assert_eq!(a.simple_lowering, vec![f]);
    }

    #[test]
    fn antisymmetry_and_jacobi() {
        for name in [AlgebraName::sl(2), AlgebraName::sl(3), AlgebraName::sl(4), AlgebraName::gl(3)] {
            let a = build_algebra(name).unwrap();
            let s = &a.exact;
            let dim = a.dim();
            let basis = |i: usize| {
                let mut v = vec![Rational::zero(); dim];
                v[i] = rat(1, 1);
                v
            };
            for x in 0..dim {
                for y in 0..dim {
                    for c in 0..dim {
                        assert_eq!(s.structure_constant(x, y, c), -s.structure_constant(y, x, c));
                    }
                    for z in 0..dim {
                        let (bx, by, bz) = (basis(x), basis(y), basis(z));
                        let t1 = s.bracket_vec(&bx, &s.bracket_vec(&by, &bz));
                        let t2 = s.bracket_vec(&by, &s.bracket_vec(&bz, &bx));
                        let t3 = s.bracket_vec(&bz, &s.bracket_vec(&bx, &by));
                        for c in 0..dim {
                            assert!((t1[c].clone() + t2[c].clone() + t3[c].clone()).is_zero());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn killing_gram_matches_trace_formula() {
        for name in [AlgebraName::sl(2), AlgebraName::sl(3), AlgebraName::gl(2)] {
            let a = build_algebra(name).unwrap();
            let n = a.n() as i64;
            for x in 0..a.dim() {
                for y in 0..a.dim() {
                    let txy = mat_trace(&mat_mul(&a.matrices[x], &a.matrices[y]));
                    let tt = mat_trace(&a.matrices[x]) * mat_trace(&a.matrices[y]);
                    let expected = txy * rat(2 * n, 1) - tt * rat(2, 1);
                    assert_eq!(a.killing_gram[x][y], expected);
                }
            }
        }
    }

    #[test]
    fn sl2_compact_basis_is_scaled_pauli() {
        let a = sl(2);
        let c = compact_basis(&a);
        let s = 1.0 / (2.0 * 2f64.sqrt());
        // ξ_1 = σ_x s, ξ_2 = σ_y s, ξ_3 = σ_z s.
        assert!((c.xi[0][0][1] - Complex::new(s, 0.0)).norm() < 1e-15);
        assert!((c.xi[1][1][0] - Complex::new(0.0, s)).norm() < 1e-15);
        assert!((c.xi[2][1][1] - Complex::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn compact_basis_invariants() {
        for n in 2..=4 {
            let a = sl(n);
            let c = compact_basis(&a);
            let dim = c.dim();
            for x in 0..dim {
                let m = &c.xi[x];
                for i in 0..n {
                    for j in 0..n {
                        assert!((m[i][j] - m[j][i].conj()).norm() < 1e-12);
                    }
                }
                for y in 0..dim {
                    let k = c.form(&c.xi[x], &c.xi[y]);
                    let expected = if x == y { 1.0 } else { 0.0 };
                    assert!((k - Complex::new(expected, 0.0)).norm() < 1e-10);
                }
            }
            // Casimir in the adjoint: sum_a ad(ξ_a)^2 = 1.
            let mut cas = vec![vec![Complex::new(0.0, 0.0); dim]; dim];
            for x in 0..dim {
                let ad = c.numeric.ad_matrix(x);
                let sq = mat_mul(&ad, &ad);
                for i in 0..dim {
                    for j in 0..dim {
                        cas[i][j] += sq[i][j];
                    }
                }
            }
            for i in 0..dim {
                for j in 0..dim {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((cas[i][j] - Complex::new(expected, 0.0)).norm() < 1e-10);
                }
            }
            // <[ξ_a, ξ_b], ξ_c> totally antisymmetric and purely imaginary.
            for x in 0..dim {
                for y in 0..dim {
                    for z in 0..dim {
                        let g = c.numeric.structure_constant(x, y, z);
                        assert!(g.re.abs() < 1e-12);
                        assert!((g + c.numeric.structure_constant(x, z, y)).norm() < 1e-12);
                        assert!((g - c.numeric.structure_constant(y, z, x)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn gl2_compact_center_is_inert() {
        let a = build_algebra(AlgebraName::gl(2)).unwrap();
        let c = compact_basis(&a);
        assert_eq!(c.dim(), 4);
        let center = 3;
        for x in 0..4 {
            assert!(c.numeric.bracket[center][x].is_empty());
        }
        for x in 0..4 {
            for y in 0..4 {
                let expected = if x == y { 1.0 } else { 0.0 };
                assert!((c.form(&c.xi[x], &c.xi[y]).re - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn change_of_basis_round_trip() {
        let a = sl(3);
        let c = compact_basis(&a);
        let dim = a.dim();
        for x in 0..dim {
            for y in 0..dim {
                let v: Complex = (0..dim).map(|b| c.to_compact[x][b] * c.to_chevalley[b][y]).sum();
                let expected = if x == y { 1.0 } else { 0.0 };
                assert!((v - Complex::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invariant_forms() {
        let a = sl(2);
        let k = invariant_form(&a, 2).unwrap();
        assert_eq!(k.value(&[0, 2]), rat(4, 1));
        assert_eq!(k.value(&[1, 1]), rat(8, 1));
        assert_eq!(k.invariance_defect(&a.exact), 0.0);
        let c = compact_basis(&a);
        let kc = compact_invariant_form(&a, &c, 2).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expected = if x == y { 1.0 } else { 0.0 };
                assert!((kc.value(&[x, y]).re - expected).abs() < 1e-12);
            }
        }
        assert!(matches!(invariant_form(&a, 3), Err(Error::NotAnExponent { .. })));
        assert!(matches!(invariant_form(&a, 1), Err(Error::NotAnExponent { .. })));

        let a3 = sl(3);
        let cubic = invariant_form(&a3, 3).unwrap();
        assert!(!cubic.coefficients.is_empty());
        assert_eq!(cubic.invariance_defect(&a3.exact), 0.0);
        let c3 = compact_basis(&a3);
        let cubic_c = compact_invariant_form(&a3, &c3, 3).unwrap();
        assert!(cubic_c.invariance_defect(&c3.numeric) < 1e-10);

        let g = build_algebra(AlgebraName::gl(2)).unwrap();
        let tr = invariant_form(&g, 1).unwrap();
        // Trace is 1 on E11 and E22 (indices 1 and 2) and zero elsewhere.
        assert_eq!(tr.coefficients.len(), 2);
        assert_eq!(tr.value(&[1]), rat(1, 1));
        assert_eq!(tr.invariance_defect(&g.exact), 0.0);
    }
}
