use super::{AlgebraError, Element, FiniteAbelianGroup, Scalar, Subset};

/// A finite measure on a finite group, stored densely as one mass per element.
///
/// The table length equals the order of the group it lives on; operations
/// that need the group law take it explicitly.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GMeasure {
    masses: Vec<Scalar>,
}

impl GMeasure {
    /// Fails if any mass is negative.
    pub fn new(masses: Vec<Scalar>) -> Result<Self, AlgebraError> {
        if let Some(i) = masses.iter().position(Scalar::is_negative) {
            return Err(AlgebraError::NegativeMass {
                element: i,
                mass: masses[i].clone(),
            });
        }
        Ok(GMeasure { masses })
    }

    pub(crate) fn from_vec_unchecked(masses: Vec<Scalar>) -> Self {
        GMeasure { masses }
    }

    pub fn zero(group: &FiniteAbelianGroup) -> Self {
        GMeasure {
            masses: vec![Scalar::zero(); group.order()],
        }
    }

    pub fn dirac(group: &FiniteAbelianGroup, x: Element) -> Self {
        let mut m = Self::zero(group);
        m.masses[x] = Scalar::one();
        m
    }

    /// Counting (Haar) measure λ.
    pub fn haar(group: &FiniteAbelianGroup) -> Self {
        GMeasure {
            masses: vec![Scalar::one(); group.order()],
        }
    }

    /// λ_C: the uniform distribution on `c`.
    pub fn uniform_on(group: &FiniteAbelianGroup, c: &Subset) -> Result<Self, AlgebraError> {
        if c.is_empty() {
            return Err(AlgebraError::EmptySet);
        }
        let w = Scalar::ratio(1, c.len() as i64);
        let mut m = Self::zero(group);
        for x in c.iter() {
            m.masses[x] = w.clone();
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    #[inline]
    pub fn mass(&self, x: Element) -> &Scalar {
        &self.masses[x]
    }

    pub fn masses(&self) -> &[Scalar] {
        &self.masses
    }

    pub fn total(&self) -> Scalar {
        self.masses.iter().sum()
    }

    /// μ(B).
    pub fn measure_of(&self, set: &Subset) -> Scalar {
        set.iter().map(|x| &self.masses[x]).sum()
    }

    pub fn is_null(&self) -> bool {
        self.masses.iter().all(Scalar::is_zero)
    }

    pub fn support(&self, group: &FiniteAbelianGroup) -> Subset {
        let mut s = group.empty_set();
        for (x, m) in self.masses.iter().enumerate() {
            if !m.is_zero() {
                s.insert(x);
            }
        }
        s
    }

    /// θ_s μ with `(θ_s μ){b} = μ{b + s}`.
    pub fn shift(&self, group: &FiniteAbelianGroup, s: Element) -> Self {
        GMeasure {
            masses: group
                .elements()
                .map(|b| self.masses[group.add(b, s)].clone())
                .collect(),
        }
    }

    pub fn restrict(&self, set: &Subset) -> Self {
        GMeasure {
            masses: self
                .masses
                .iter()
                .enumerate()
                .map(|(x, m)| {
                    if set.contains(x) {
                        m.clone()
                    } else {
                        Scalar::zero()
                    }
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &GMeasure) -> Self {
        GMeasure {
            masses: self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `c·μ`; rejects negative `c`.
    pub fn scale(&self, c: &Scalar) -> Result<Self, AlgebraError> {
        if c.is_negative() {
            return Err(AlgebraError::NegativeScale(c.clone()));
        }
        Ok(self.scale_unchecked(c))
    }

    pub(crate) fn scale_unchecked(&self, c: &Scalar) -> Self {
        GMeasure {
            masses: self.masses.iter().map(|m| m * c).collect(),
        }
    }

    /// In-place `self += c·other`.
    pub(crate) fn add_scaled(&mut self, other: &GMeasure, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (a, b) in self.masses.iter_mut().zip(&other.masses) {
            if !b.is_zero() {
                *a += &(b * c);
            }
        }
    }
}
