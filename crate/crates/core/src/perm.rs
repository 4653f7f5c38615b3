//! Dense permutations of {0..m-1}, stored as image arrays.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    images: Vec<u32>,
}

impl Perm {
    pub fn identity(m: usize) -> Perm {
        Perm { images: (0..m as u32).collect() }
    }

    pub fn from_images(images: Vec<u32>) -> Result<Perm> {
        let m = images.len();
        let mut seen = vec![false; m];
        for &i in &images {
            let i = i as usize;
            if i >= m || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config("image array is not a bijection".into()));
            }
        }
        Ok(Perm { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn apply(&self, v: usize) -> usize {
        self.images[v] as usize
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    /// (self ∘ other)(v) = self(other(v)).
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm { images: other.images.iter().map(|&v| self.images[v as usize]).collect() }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u32; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        Perm { images: inv }
    }

    /// v ↦ v + k (mod m).
    pub fn rotation(m: usize, k: i64) -> Perm {
        let m_i = m as i64;
        let k = k.rem_euclid(m_i);
        Perm { images: (0..m_i).map(|v| ((v + k) % m_i) as u32).collect() }
    }

    pub fn random(m: usize, rng: &mut impl Rng) -> Perm {
        let mut images: Vec<u32> = (0..m as u32).collect();
        // Fisher-Yates
        for i in (1..m).rev() {
            let j = rng.random_range(0..=i);
            images.swap(i, j);
        }
        Perm { images }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn compose_and_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = Perm::random(13, &mut rng);
            let q = Perm::random(13, &mut rng);
            assert_eq!(p.compose(&p.inverse()), Perm::identity(13));
            for v in 0..13 {
                assert_eq!(p.compose(&q).apply(v), p.apply(q.apply(v)));
            }
        }
    }

    #[test]
    fn rotation_wraps() {
        let r = Perm::rotation(8, -3);
        assert_eq!(r.apply(1), 6);
        assert_eq!(r.apply(5), 2);
    }
}
