//! Periodic lattices and bit-packed spin configurations.

use std::fmt;

use crate::error::{Error, Result};

/// Displacement vector in Z^d.
pub type Displacement = Vec<i64>;

/// Largest number of sites a configuration can hold (one bit per site).
pub const MAX_SITES: usize = 64;

/// The torus (Z / LZ)^d with sites numbered in row-major order.
///
/// Site `s` has coordinates `(c_0, ..., c_{d-1})` with
/// `s = c_0 L^{d-1} + ... + c_{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeTorus {
    dim: usize,
    side: usize,
}

impl LatticeTorus {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(Error::Geometry(format!(
                "dimension and side must be positive (got d={dim}, L={side})"
            )));
        }
        let n = (side as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if n > MAX_SITES as u128 {
            return Err(Error::Geometry(format!(
                "torus with L={side}, d={dim} has {n} sites; at most {MAX_SITES} supported"
            )));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut s = site;
        for k in (0..self.dim).rev() {
            c[k] = s % self.side;
            s /= self.side;
        }
        c
    }

    /// Site index of the (wrapped) integer point `p`.
    pub fn site_of(&self, p: &[i64]) -> usize {
        debug_assert_eq!(p.len(), self.dim);
        let l = self.side as i64;
        p.iter()
            .fold(0usize, |acc, &x| acc * self.side + x.rem_euclid(l) as usize)
    }

    /// Site reached from `site` by the displacement `y`.
    pub fn shift(&self, site: usize, y: &[i64]) -> usize {
        let l = self.side as i64;
        let c = self.coords(site);
        c.iter().zip(y).fold(0usize, |acc, (&ci, &yi)| {
            acc * self.side + (ci as i64 + yi).rem_euclid(l) as usize
        })
    }

    /// Permutation `p` with `p[z] = z + y` (mod L componentwise).
    pub fn translation_table(&self, y: &[i64]) -> Vec<usize> {
        (0..self.n_sites()).map(|z| self.shift(z, y)).collect()
    }

    /// Unit vector along axis `i`, optionally negated.
    pub fn unit(&self, axis: usize, sign: i64) -> Displacement {
        let mut e = vec![0; self.dim];
        e[axis] = sign;
        e
    }

    /// Sup-norm distance of `site` from the origin on the torus.
    pub fn sup_norm(&self, site: usize) -> usize {
        self.coords(site)
            .into_iter()
            .map(|c| c.min(self.side - c))
            .max()
            .unwrap_or(0)
    }

    /// Nearest neighbours of `site`, counted with multiplicity (2d entries).
    pub fn neighbours(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).flat_map(move |axis| {
            [1i64, -1]
                .into_iter()
                .map(move |s| self.shift(site, &self.unit(axis, s)))
        })
    }
}

impl fmt::Display for LatticeTorus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T^{}_{}", self.dim, self.side)
    }
}

/// {0,1}-valued configuration on a torus, one bit per site.
///
/// Bit `s` of the packed word is the occupation of site `s`, so the integer
/// value is the canonical state id used by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    bits: u64,
    n_sites: u32,
}

impl SpinConfig {
    pub fn from_bits(bits: u64, n_sites: usize) -> Self {
        debug_assert!(n_sites <= MAX_SITES);
        Self {
            bits: bits & mask(n_sites),
            n_sites: n_sites as u32,
        }
    }

    pub fn empty(torus: &LatticeTorus) -> Self {
        Self::from_bits(0, torus.n_sites())
    }

    pub fn full(torus: &LatticeTorus) -> Self {
        Self::from_bits(u64::MAX, torus.n_sites())
    }

    pub fn from_spins(spins: &[u8]) -> Self {
        let bits = spins
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc | (u64::from(s != 0) << i));
        Self::from_bits(bits, spins.len())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Integer id in `0..2^n_sites`.
    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    #[inline]
    pub fn get(&self, site: usize) -> u8 {
        ((self.bits >> site) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, site: usize, spin: u8) {
        if spin != 0 {
            self.bits |= 1 << site;
        } else {
            self.bits &= !(1 << site);
        }
    }

    #[inline]
    pub fn flipped(&self, site: usize) -> Self {
        Self {
            bits: self.bits ^ (1 << site),
            n_sites: self.n_sites,
        }
    }

    pub fn occupied(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn vacancies(&self) -> usize {
        self.n_sites() - self.occupied()
    }

    pub fn spins(&self) -> Vec<u8> {
        (0..self.n_sites()).map(|s| self.get(s)).collect()
    }

    /// The shifted configuration `tau_x eta` with `(tau_x eta)(z) = eta(z + x)`.
    pub fn translate(&self, torus: &LatticeTorus, x: &[i64]) -> Self {
        Self::from_bits(translate_bits(torus, self.bits, x), self.n_sites())
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in 0..self.n_sites() {
            write!(f, "{}", self.get(s))?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn mask(n_sites: usize) -> u64 {
    if n_sites >= 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

/// Bitwise `tau_x`: bit `z` of the result is bit `z + x` of `bits`.
pub(crate) fn translate_bits(torus: &LatticeTorus, bits: u64, x: &[i64]) -> u64 {
    if torus.dim() == 1 {
        let n = torus.side() as u32;
        let k = x[0].rem_euclid(n as i64) as u32;
        if k == 0 {
            return bits;
        }
        let m = mask(n as usize);
        return ((bits >> k) | (bits << (n - k))) & m;
    }
    (0..torus.n_sites()).fold(0u64, |acc, z| acc | (((bits >> torus.shift(z, x)) & 1) << z))
}

/// Translations by a fixed displacement, precomputed as a site permutation.
#[derive(Debug, Clone)]
pub(crate) struct Translator {
    table: Vec<usize>,
    rotate: Option<(u32, u32)>,
}

impl Translator {
    pub(crate) fn new(torus: &LatticeTorus, x: &[i64]) -> Self {
        let rotate = (torus.dim() == 1).then(|| {
            let n = torus.side() as u32;
            (x[0].rem_euclid(n as i64) as u32, n)
        });
        Self {
            table: torus.translation_table(x),
            rotate,
        }
    }

    #[inline]
    pub(crate) fn apply(&self, bits: u64) -> u64 {
        if let Some((k, n)) = self.rotate {
            if k == 0 {
                return bits;
            }
            return ((bits >> k) | (bits << (n - k))) & mask(n as usize);
        }
        self.table
            .iter()
            .enumerate()
            .fold(0u64, |acc, (z, &src)| acc | (((bits >> src) & 1) << z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_major_roundtrip() {
        let t = LatticeTorus::new(2, 3).unwrap();
        for s in 0..t.n_sites() {
            let c: Vec<i64> = t.coords(s).into_iter().map(|c| c as i64).collect();
            assert_eq!(t.site_of(&c), s);
        }
        assert_eq!(t.coords(5), vec![1, 2]);
    }

    #[test]
    fn full_period_is_identity() {
        let t = LatticeTorus::new(2, 4).unwrap();
        for axis in 0..2 {
            let mut y = vec![0; 2];
            y[axis] = 4;
            let table = t.translation_table(&y);
            assert!(table.iter().enumerate().all(|(i, &j)| i == j));
        }
    }

    #[test]
    fn translate_reads_shifted_site() {
        let t = LatticeTorus::new(1, 5).unwrap();
        let eta = SpinConfig::from_spins(&[1, 0, 0, 1, 0]);
        let shifted = eta.translate(&t, &[3]);
        for z in 0..5 {
            assert_eq!(shifted.get(z), eta.get((z + 3) % 5));
        }
    }

    #[test]
    fn rejects_oversized_torus() {
        assert!(LatticeTorus::new(1, 65).is_err());
        assert!(LatticeTorus::new(3, 5).is_err());
        assert!(LatticeTorus::new(0, 4).is_err());
    }

    #[test]
    fn sup_norm_wraps() {
        let t = LatticeTorus::new(1, 10).unwrap();
        assert_eq!(t.sup_norm(0), 0);
        assert_eq!(t.sup_norm(3), 3);
        assert_eq!(t.sup_norm(7), 3);
        assert_eq!(t.sup_norm(5), 5);
    }

    proptest! {
        #[test]
        fn translate_inverts(bits in any::<u64>(), d in 1usize..=2, side in 2usize..=5,
                             y0 in -7i64..7, y1 in -7i64..7) {
            let t = LatticeTorus::new(d, side).unwrap();
            let eta = SpinConfig::from_bits(bits, t.n_sites());
            let y: Vec<i64> = [y0, y1][..d].to_vec();
            let back: Vec<i64> = y.iter().map(|v| -v).collect();
            prop_assert_eq!(eta.translate(&t, &y).translate(&t, &back), eta);
            prop_assert_eq!(Translator::new(&t, &y).apply(eta.bits()), eta.translate(&t, &y).bits());
        }

        #[test]
        fn translation_is_permutation(d in 1usize..=3, side in 1usize..=4, y0 in -5i64..5, y1 in -5i64..5, y2 in -5i64..5) {
            prop_assume!(side.pow(d as u32) <= MAX_SITES);
            let t = LatticeTorus::new(d, side).unwrap();
            let y = [y0, y1, y2][..d].to_vec();
            let mut table = t.translation_table(&y);
            table.sort_unstable();
            prop_assert!(table.into_iter().eq(0..t.n_sites()));
        }
    }
}
