use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::AlgebraError;

/// A finite Abelian group `Z_{m_1} × … × Z_{m_k}`.
///
/// Elements are identified with indices `0..order()` in lexicographic order
/// of their coordinate tuples (first coordinate most significant), so the
/// neutral element is always index `0`.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    moduli: Vec<usize>,
    order: usize,
    add: Vec<usize>,
    neg: Vec<usize>,
}

/// Index of a group element in the canonical enumeration.
pub type Element = usize;

impl FiniteAbelianGroup {
    pub fn new(moduli: &[usize]) -> Result<Self, AlgebraError> {
        if moduli.contains(&0) {
            return Err(AlgebraError::ZeroModulus);
        }
        let order: usize = moduli.iter().product();
        if order > 4096 {
            return Err(AlgebraError::GroupTooLarge(order));
        }
        let mut g = FiniteAbelianGroup {
            moduli: moduli.to_vec(),
            order,
            add: Vec::new(),
            neg: Vec::new(),
        };
        let coords: Vec<Vec<usize>> = (0..order).map(|i| g.coords(i)).collect();
        g.add = Vec::with_capacity(order * order);
        for x in &coords {
            for y in &coords {
                let sum: Vec<usize> = x
                    .iter()
                    .zip(y)
                    .zip(&g.moduli)
                    .map(|((a, b), m)| (a + b) % m)
                    .collect();
                g.add.push(g.index_of(&sum));
            }
        }
        g.neg = coords
            .iter()
            .map(|x| {
                let n: Vec<usize> = x.iter().zip(&g.moduli).map(|(a, m)| (m - a) % m).collect();
                g.index_of(&n)
            })
            .collect();
        Ok(g)
    }

    pub fn cyclic(n: usize) -> Result<Self, AlgebraError> {
        Self::new(&[n])
    }

    /// The trivial group `Z_1`.
    pub fn trivial() -> Self {
        Self::new(&[1]).expect("Z_1 is valid")
    }

    pub fn moduli(&self) -> &[usize] {
        &self.moduli
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn zero(&self) -> Element {
        0
    }

    pub fn elements(&self) -> std::ops::Range<Element> {
        0..self.order
    }

    #[inline]
    pub fn add(&self, x: Element, y: Element) -> Element {
        self.add[x * self.order + y]
    }

    #[inline]
    pub fn neg(&self, x: Element) -> Element {
        self.neg[x]
    }

    #[inline]
    pub fn sub(&self, x: Element, y: Element) -> Element {
        self.add(x, self.neg[y])
    }

    pub fn coords(&self, mut x: Element) -> Vec<usize> {
        let mut out = vec![0; self.moduli.len()];
        for (slot, m) in out.iter_mut().zip(&self.moduli).rev() {
            *slot = x % m;
            x /= m;
        }
        out
    }

    pub fn index_of(&self, coords: &[usize]) -> Element {
        coords
            .iter()
            .zip(&self.moduli)
            .fold(0, |acc, (c, m)| acc * m + c % m)
    }

    /// Element syntax `(x1,…,xk)`.
    pub fn format_element(&self, x: Element) -> String {
        let parts: Vec<String> = self.coords(x).iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }

    pub fn parse_element(&self, text: &str) -> Result<Element, AlgebraError> {
        let err = || AlgebraError::BadElement(text.to_string());
        let inner = text
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(err)?;
        let coords: Vec<usize> = inner
            .split(',')
            .map(|c| c.trim().parse::<usize>().map_err(|_| err()))
            .collect::<Result<_, _>>()?;
        if coords.len() != self.moduli.len() || coords.iter().zip(&self.moduli).any(|(c, m)| c >= m)
        {
            return Err(err());
        }
        Ok(self.index_of(&coords))
    }

    pub fn empty_set(&self) -> Subset {
        Subset(FixedBitSet::with_capacity(self.order))
    }

    pub fn full_set(&self) -> Subset {
        let mut s = self.empty_set();
        s.0.insert_range(..);
        s
    }

    pub fn singleton(&self, x: Element) -> Subset {
        self.subset(&[x])
    }

    pub fn subset(&self, xs: &[Element]) -> Subset {
        let mut s = self.empty_set();
        for &x in xs {
            s.0.insert(x);
        }
        s
    }

    /// Subset whose members are the set bits of `mask` (element `i` ↔ bit `i`).
    pub fn subset_from_mask(&self, mask: u64) -> Subset {
        let mut s = self.empty_set();
        for x in self.elements().take(64) {
            if mask >> x & 1 == 1 {
                s.0.insert(x);
            }
        }
        s
    }

    /// All nonempty subsets, ordered by bitmask. Only for `order() <= 20`.
    pub fn nonempty_subsets(&self) -> impl Iterator<Item = Subset> + '_ {
        assert!(self.order <= 20, "subset enumeration limited to |G| <= 20");
        (1u64..(1u64 << self.order)).map(move |m| self.subset_from_mask(m))
    }

    /// `B + s = {b + s : b ∈ B}`.
    pub fn translate(&self, set: &Subset, s: Element) -> Subset {
        let mut out = self.empty_set();
        for b in set.iter() {
            out.0.insert(self.add(b, s));
        }
        out
    }

    /// Boxes `Π [a_i, a_i + l_i)` (cyclically wrapped) for every corner and side lengths.
    pub fn boxes(&self) -> Vec<Subset> {
        let mut out = Vec::new();
        let side_choices: Vec<Vec<usize>> =
            self.moduli.iter().map(|&m| (1..=m).collect()).collect();
        for sides in cartesian(&side_choices) {
            for corner in self.elements() {
                let origin = self.coords(corner);
                let ranges: Vec<Vec<usize>> = sides.iter().map(|&l| (0..l).collect()).collect();
                let mut set = self.empty_set();
                for offs in cartesian(&ranges) {
                    let c: Vec<usize> = origin.iter().zip(&offs).map(|(o, d)| o + d).collect();
                    set.0.insert(self.index_of(&c));
                }
                if !out.contains(&set) {
                    out.push(set);
                }
            }
        }
        out
    }
}

fn cartesian(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    choices.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect()
    })
}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(|m| format!("Z{m}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl Serialize for FiniteAbelianGroup {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.moduli.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteAbelianGroup {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let moduli = Vec::<usize>::deserialize(deserializer)?;
        FiniteAbelianGroup::new(&moduli).map_err(serde::de::Error::custom)
    }
}

/// A subset of a finite group, as a bit set over the element enumeration.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset(FixedBitSet);

impl Subset {
    pub fn contains(&self, x: Element) -> bool {
        self.0.contains(x)
    }

    /// λ(B) for counting Haar measure.
    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = Element> + '_ {
        self.0.ones()
    }

    pub fn insert(&mut self, x: Element) {
        self.0.insert(x);
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset(&self.0 & &other.0)
    }

    pub fn to_vec(&self) -> Vec<Element> {
        self.iter().collect()
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
