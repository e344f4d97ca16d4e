use crate::config::TorusError;

/// Largest number of sites accepted.
pub const MAX_SITES: usize = 1 << 20;
const DIFF_TABLE_SITES: usize = 1024;

/// The torus `Z_n^d` with sites indexed by `Σ x_i n^i`.
#[derive(Clone, Debug)]
pub struct Torus {
    n: usize,
    d: usize,
    size: usize,
    coords: Vec<usize>,
    /// Position of each displacement in the order (L1 norm, centered coordinates).
    rank: Vec<u32>,
    /// Sup norm of each displacement.
    sup: Vec<u32>,
    /// Displacements sorted by rank.
    order: Vec<usize>,
    /// `a − b` at `a * size + b`, for small tori.
    diff: Option<Vec<u32>>,
}

impl Torus {
    pub fn new(n: usize, d: usize) -> Result<Self, TorusError> {
        if n == 0 || d == 0 {
            return Err(TorusError::Shape { n, d });
        }
        let size = (n as u128)
            .checked_pow(d as u32)
            .filter(|&s| s <= MAX_SITES as u128)
            .ok_or(TorusError::TooLarge { n, d })? as usize;
        let mut coords = Vec::with_capacity(size * d);
        for mut i in 0..size {
            for _ in 0..d {
                coords.push(i % n);
                i /= n;
            }
        }
        let mut t = Torus {
            n,
            d,
            size,
            coords,
            rank: Vec::new(),
            sup: Vec::new(),
            order: Vec::new(),
            diff: None,
        };
        let centered: Vec<Vec<i64>> = (0..size).map(|x| t.centered(x)).collect();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by_key(|&x| {
            (
                centered[x].iter().map(|c| c.unsigned_abs()).sum::<u64>(),
                centered[x].clone(),
            )
        });
        t.rank = vec![0; size];
        for (r, &x) in order.iter().enumerate() {
            t.rank[x] = r as u32;
        }
        t.order = order;
        if size <= DIFF_TABLE_SITES {
            let table = (0..size * size)
                .map(|i| t.sub_slow(i / size, i % size) as u32)
                .collect();
            t.diff = Some(table);
        }
        t.sup = centered
            .iter()
            .map(|c| c.iter().map(|v| v.unsigned_abs() as u32).max().unwrap_or(0))
            .collect();
        Ok(t)
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coords(&self, x: usize) -> &[usize] {
        &self.coords[x * self.d..(x + 1) * self.d]
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.n + c % self.n)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (0..self.d)
            .rev()
            .fold(0, |acc, i| acc * self.n + (ca[i] + cb[i]) % self.n)
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        match &self.diff {
            Some(table) => table[a * self.size + b] as usize,
            None => self.sub_slow(a, b),
        }
    }

    fn sub_slow(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (0..self.d)
            .rev()
            .fold(0, |acc, i| acc * self.n + (ca[i] + self.n - cb[i]) % self.n)
    }

    pub fn neg(&self, a: usize) -> usize {
        self.sub(0, a)
    }

    /// Coordinates of `x` with representatives in `(−n/2, n/2]`.
    pub fn centered(&self, x: usize) -> Vec<i64> {
        let n = self.n as i64;
        self.coords(x)
            .iter()
            .map(|&c| {
                let c = c as i64;
                if 2 * c > n {
                    c - n
                } else {
                    c
                }
            })
            .collect()
    }

    /// Minimal L1 torus distance.
    pub fn distance(&self, a: usize, b: usize) -> u64 {
        self.centered(self.sub(a, b))
            .iter()
            .map(|c| c.unsigned_abs())
            .sum()
    }

    /// Preference key of the pair (site, point): smaller is better for both sides.
    pub(crate) fn pair_rank(&self, site: usize, point: usize) -> u32 {
        self.rank[self.sub(site, point)]
    }

    /// Displacements from best to worst preference rank.
    pub(crate) fn displacement_order(&self) -> &[usize] {
        &self.order
    }

    /// Sup-norm distance from `center` to `x`.
    pub(crate) fn sup_distance(&self, x: usize, center: usize) -> u32 {
        self.sup[self.sub(x, center)]
    }

    /// The box `{0, …, side − 1}^d`.
    pub fn box_window(&self, side: usize) -> Vec<usize> {
        let side = side.min(self.n);
        (0..self.size)
            .filter(|&x| self.coords(x).iter().all(|&c| c < side))
            .collect()
    }
}
