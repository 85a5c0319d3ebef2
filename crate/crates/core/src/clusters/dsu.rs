/// Disjoint-set forest over `0..len` with union by size and path halving.
#[derive(Debug, Clone, Default)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(len: usize) -> Self {
        let mut d = DisjointSets::default();
        d.reset(len);
        d
    }

    /// Reinitializes to `len` singletons, keeping the allocation.
    pub fn reset(&mut self, len: usize) {
        assert!(
            len <= u32::MAX as usize,
            "too many elements for u32 indices"
        );
        self.parent.clear();
        self.parent.extend(0..len as u32);
        self.size.clear();
        self.size.resize(len, 1);
    }

    /// Adds a new singleton carrying weight `size` and returns its index.
    #[inline]
    pub fn push(&mut self, size: u32) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(size);
        id
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    #[inline]
    pub fn is_root(&self, x: u32) -> bool {
        self.parent[x as usize] == x
    }

    /// Size of the set rooted at `root`; only meaningful for roots.
    #[inline]
    pub fn root_size(&self, root: u32) -> u32 {
        self.size[root as usize]
    }
}
