use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::matrix::IntegerMatrix;
use super::word::{Generator, Letter, Word};
use crate::error::{Error, Result};

/// An element of the group in semidirect-product normal form: the exponent
/// sum of `a` together with a rational translation vector.
///
/// The pair `(k, w)` acts on `Q^n` as `x -> B^k x + w`, where `B` is the
/// transpose of the defining matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub shift: i64,
    pub translation: Vec<BigRational>,
}

impl GroupElement {
    pub fn dim(&self) -> usize {
        self.translation.len()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: Vec<String> = self.translation.iter().map(|v| v.to_string()).collect();
        write!(f, "({}, [{}])", self.shift, t.join(", "))
    }
}

/// The abelian-by-cyclic group attached to a non-singular integer matrix `A`,
/// presented by `b_i b_j = b_j b_i` and `a b_i a^-1 = prod_j b_j^(A_ij)`.
///
/// Conjugation by `a` sends the translation `e_i` to row `i` of `A`, so the
/// acting matrix on translations is `B = A^T`, not `A`.
#[derive(Clone, Debug)]
pub struct AbcGroup {
    a: IntegerMatrix,
    b: Vec<BigRational>,
    b_inv: Vec<BigRational>,
}

impl AbcGroup {
    pub fn new(a: IntegerMatrix) -> Self {
        let bt = a.transpose();
        let b = bt
            .entries()
            .iter()
            .map(|v| BigRational::from_integer(v.clone()))
            .collect();
        let b_inv = bt.inverse();
        AbcGroup { a, b, b_inv }
    }

    pub fn matrix(&self) -> &IntegerMatrix {
        &self.a
    }

    pub fn rank(&self) -> usize {
        self.a.dim()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            shift: 0,
            translation: vec![BigRational::zero(); self.rank()],
        }
    }

    pub fn a(&self) -> GroupElement {
        GroupElement {
            shift: 1,
            ..self.identity()
        }
    }

    /// The generator `b_i`, one-based.
    pub fn b(&self, i: usize) -> Result<GroupElement> {
        self.check_index(i)?;
        let mut g = self.identity();
        g.translation[i - 1] = BigRational::one();
        Ok(g)
    }

    /// Builds an element from raw parts, checking that every denominator
    /// divides a power of `det(A)`.
    pub fn element(&self, shift: i64, translation: Vec<BigRational>) -> Result<GroupElement> {
        let g = GroupElement { shift, translation };
        self.check_dim(&g)?;
        if !self.contains(&g) {
            return Err(Error::NotInGroup(g.to_string()));
        }
        Ok(g)
    }

    /// Membership of the translation part in the kernel `Z[1/det]`-lattice
    /// reachable from `Z^n`.
    pub fn contains(&self, g: &GroupElement) -> bool {
        if g.dim() != self.rank() {
            return false;
        }
        let det = self.a.det().abs();
        g.translation.iter().all(|t| {
            let mut d = t.denom().clone();
            loop {
                if d.is_one() {
                    return true;
                }
                let c = d.gcd(&det);
                if c.is_one() {
                    return false;
                }
                d /= c;
            }
        }) && self.integral_power(g).is_some()
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check_dim(g)?;
        self.check_dim(h)?;
        let shift = g.shift.checked_add(h.shift).ok_or(Error::ShiftOverflow)?;
        let moved = self.act(g.shift, &h.translation);
        let translation = g
            .translation
            .iter()
            .zip(moved)
            .map(|(x, y)| x + y)
            .collect();
        Ok(GroupElement { shift, translation })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check_dim(g)?;
        let shift = g.shift.checked_neg().ok_or(Error::ShiftOverflow)?;
        let translation = self
            .act(shift, &g.translation)
            .into_iter()
            .map(|v| -v)
            .collect();
        Ok(GroupElement { shift, translation })
    }

    /// `g^e` for any integer `e`.
    pub fn pow(&self, g: &GroupElement, e: &BigInt) -> Result<GroupElement> {
        let base = if e.is_negative() {
            self.inverse(g)?
        } else {
            g.clone()
        };
        let mut e = e.abs();
        let mut result = self.identity();
        let mut sq = base;
        let two = BigInt::from(2);
        while !e.is_zero() {
            if e.is_odd() {
                result = self.multiply(&result, &sq)?;
            }
            e /= &two;
            if !e.is_zero() {
                sq = self.multiply(&sq, &sq)?;
            }
        }
        Ok(result)
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        g.shift == 0 && g.translation.iter().all(Zero::is_zero)
    }

    /// Evaluates a word letter by letter.
    pub fn from_word(&self, w: &Word) -> Result<GroupElement> {
        let mut g = self.identity();
        for letter in w.letters() {
            g = self.append_letter(g, letter)?;
        }
        Ok(g)
    }

    fn append_letter(&self, g: GroupElement, letter: &Letter) -> Result<GroupElement> {
        match letter.generator {
            Generator::A => {
                let e = letter.exponent.to_i64().ok_or(Error::ShiftOverflow)?;
                let shift = g.shift.checked_add(e).ok_or(Error::ShiftOverflow)?;
                Ok(GroupElement {
                    shift,
                    translation: g.translation,
                })
            }
            Generator::B(i) => {
                self.check_index(i)?;
                let mut v = vec![BigRational::zero(); self.rank()];
                v[i - 1] = BigRational::from_integer(letter.exponent.clone());
                let moved = self.act(g.shift, &v);
                let translation = g.translation.into_iter().zip(moved).map(|(x, y)| x + y).collect();
                Ok(GroupElement {
                    shift: g.shift,
                    translation,
                })
            }
        }
    }

    /// Canonical word `a^-m (prod_j b_j^u_j) a^(m + shift)` with `m >= 0`
    /// minimal such that `u = B^m * translation` is integral.
    pub fn to_word(&self, g: &GroupElement) -> Word {
        let (m, u) = self
            .integral_power(g)
            .expect("group elements always have an integral conjugate");
        let mut w = Word::empty();
        w.push(Letter::new(Generator::A, -BigInt::from(m)));
        for (j, uj) in u.into_iter().enumerate() {
            w.push(Letter::new(Generator::B(j + 1), uj));
        }
        w.push(Letter::new(Generator::A, BigInt::from(m) + BigInt::from(g.shift)));
        w
    }

    /// Row `i` (one-based) of `A^k`: the exponents in
    /// `a^k b_i a^-k = prod_j b_j^((A^k)_ij)`.
    pub fn conjugate_power(&self, i: usize, k: u32) -> Result<Vec<BigInt>> {
        self.check_index(i)?;
        if k == 0 {
            return Err(Error::InvalidParameter("conjugation power k must be >= 1".into()));
        }
        Ok(self.a.pow(k).row(i - 1).to_vec())
    }

    /// The word `prod_j b_j^((A^k)_ij)`.
    pub fn conjugate_power_word(&self, i: usize, k: u32) -> Result<Word> {
        let row = self.conjugate_power(i, k)?;
        Ok(Word::from_letters(
            row.into_iter()
                .enumerate()
                .map(|(j, e)| Letter::new(Generator::B(j + 1), e)),
        ))
    }

    /// Defining relators: commutators `b_i b_j b_i^-1 b_j^-1` and
    /// `a b_i a^-1 prod_j b_j^(-A_ij)`.
    pub fn relators(&self) -> Vec<Word> {
        let n = self.rank();
        let mut out = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                out.push(Word::from_letters([
                    Letter::new(Generator::B(i), 1),
                    Letter::new(Generator::B(j), 1),
                    Letter::new(Generator::B(i), -1),
                    Letter::new(Generator::B(j), -1),
                ]));
            }
        }
        for i in 1..=n {
            let mut w = Word::from_letters([
                Letter::new(Generator::A, 1),
                Letter::new(Generator::B(i), 1),
                Letter::new(Generator::A, -1),
            ]);
            for j in 1..=n {
                w.push(Letter::new(Generator::B(j), -self.a.get(i - 1, j - 1).clone()));
            }
            out.push(w);
        }
        out
    }

    fn integral_power(&self, g: &GroupElement) -> Option<(u64, Vec<BigInt>)> {
        let mut u = g.translation.clone();
        // B acts on (1/d)Z^n / Z^n with d the common denominator; an orbit
        // reaching zero does so within the length of the kernel chain of B,
        // at most n times the number of prime factors of d.
        let bits = g
            .translation
            .iter()
            .map(|t| t.denom().bits())
            .sum::<u64>();
        let bound = (self.rank() as u64) * bits + 1;
        for m in 0..=bound {
            if u.iter().all(|v| v.is_integer()) {
                return Some((m, u.into_iter().map(|v| v.to_integer()).collect()));
            }
            u = self.apply(&self.b, &u);
        }
        None
    }

    /// `B^k v` for any integer `k`.
    pub fn act(&self, k: i64, v: &[BigRational]) -> Vec<BigRational> {
        let mat = if k >= 0 { &self.b } else { &self.b_inv };
        let mut out = v.to_vec();
        for _ in 0..k.unsigned_abs() {
            out = self.apply(mat, &out);
        }
        out
    }

    fn apply(&self, mat: &[BigRational], v: &[BigRational]) -> Vec<BigRational> {
        let n = self.rank();
        (0..n)
            .map(|i| {
                let mut s = BigRational::zero();
                for (j, vj) in v.iter().enumerate() {
                    if !vj.is_zero() && !mat[i * n + j].is_zero() {
                        s += &mat[i * n + j] * vj;
                    }
                }
                s
            })
            .collect()
    }

    fn check_dim(&self, g: &GroupElement) -> Result<()> {
        if g.dim() != self.rank() {
            return Err(Error::Dimension {
                expected: self.rank(),
                found: g.dim(),
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.rank() {
            return Err(Error::GeneratorIndex {
                index: i,
                rank: self.rank(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(rows: &[&[i64]]) -> AbcGroup {
        AbcGroup::new(IntegerMatrix::from_rows(rows).unwrap())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn a_times_a_inverse() {
        let g = group(&[&[2, 3], &[4, 5]]);
        let a = g.a();
        let prod = g.multiply(&a, &g.inverse(&a).unwrap()).unwrap();
        assert!(g.is_identity(&prod));
    }

    #[test]
    fn a_b1_uses_transpose() {
        let g = group(&[&[2, 3], &[4, 5]]);
        let ab = g.multiply(&g.a(), &g.b(1).unwrap()).unwrap();
        assert_eq!(ab.shift, 1);
        assert_eq!(ab.translation, vec![q(2, 1), q(3, 1)]);
    }

    #[test]
    fn bs12_half_translation() {
        let g = group(&[&[2]]);
        let x = g.from_word(&w("a^-1 b a")).unwrap();
        assert_eq!(x, g.element(0, vec![q(1, 2)]).unwrap());
        let sq = g.multiply(&x, &x).unwrap();
        assert_eq!(sq, g.b(1).unwrap());
    }

    #[test]
    fn defining_relations_from_example() {
        let g = group(&[&[2, 3], &[4, 5]]);
        assert!(g.is_identity(&g.from_word(&w("a b1 a^-1 b1^-2 b2^-3")).unwrap()));
        assert!(g.is_identity(&g.from_word(&w("a b2 a^-1 b1^-4 b2^-5")).unwrap()));
        assert!(g.is_identity(&g.from_word(&w("b1 b2 b1^-1 b2^-1")).unwrap()));
        for r in g.relators() {
            assert!(g.is_identity(&g.from_word(&r).unwrap()), "{r}");
        }
    }

    #[test]
    fn generators_nontrivial() {
        let g = group(&[&[2, 3], &[4, 5]]);
        assert!(!g.is_identity(&g.b(1).unwrap()));
        assert!(!g.is_identity(&g.a()));
        assert!(g.is_identity(&g.from_word(&Word::empty()).unwrap()));
    }

    #[test]
    fn to_word_examples() {
        let g = group(&[&[2]]);
        assert!(g.to_word(&g.identity()).is_empty());
        let half = g.element(0, vec![q(1, 2)]).unwrap();
        assert_eq!(g.to_word(&half).to_string(), "a^-1 b1 a");
        let g2 = group(&[&[2, 3], &[4, 5]]);
        assert_eq!(g2.to_word(&g2.b(1).unwrap()).to_string(), "b1");
        assert_eq!(g2.to_word(&g2.a()).to_string(), "a");
    }

    #[test]
    fn conjugate_power_examples() {
        let g = group(&[&[2, 3], &[4, 5]]);
        assert_eq!(g.conjugate_power(1, 1).unwrap(), vec![BigInt::from(2), BigInt::from(3)]);
        assert_eq!(g.conjugate_power(1, 2).unwrap(), vec![BigInt::from(16), BigInt::from(21)]);
        for n in 2..6i64 {
            let bs = group(&[&[n]]);
            assert_eq!(bs.conjugate_power(1, 3).unwrap(), vec![BigInt::from(n * n * n)]);
        }
    }

    #[test]
    fn conjugate_power_matches_multiply_chain() {
        let g = group(&[&[2, 3], &[4, 5]]);
        for i in 1..=2 {
            for k in 1..=5u32 {
                let ak = g.pow(&g.a(), &BigInt::from(k)).unwrap();
                let lhs = g
                    .multiply(&g.multiply(&ak, &g.b(i).unwrap()).unwrap(), &g.inverse(&ak).unwrap())
                    .unwrap();
                let rhs = g.from_word(&g.conjugate_power_word(i, k).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn index_and_dimension_errors() {
        let g = group(&[&[2, 3], &[4, 5]]);
        assert!(matches!(g.b(3), Err(Error::GeneratorIndex { index: 3, rank: 2 })));
        assert!(matches!(g.from_word(&w("b3")), Err(Error::GeneratorIndex { .. })));
        let other = group(&[&[2]]);
        assert!(matches!(
            g.multiply(&g.a(), &other.a()),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(g.conjugate_power(1, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn membership_rejects_foreign_denominators() {
        let g = group(&[&[2]]);
        assert!(g.element(0, vec![q(1, 3)]).is_err());
        assert!(g.element(3, vec![q(5, 8)]).is_ok());
        let unimodular = group(&[&[2, 1], &[1, 1]]);
        assert!(unimodular.element(0, vec![q(1, 2), q(0, 1)]).is_err());
    }

    #[test]
    fn negative_shift_word_round_trip() {
        let g = group(&[&[2, 3], &[4, 5]]);
        let x = g.from_word(&w("a^-2 b1 a b2^-1 a^-1")).unwrap();
        assert_eq!(g.from_word(&g.to_word(&x)).unwrap(), x);
    }
}
