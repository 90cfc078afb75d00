/// A `width x height` lattice with wrap-around edges. Locations are
/// addressed by a flat row-major index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Torus {
    width: u32,
    height: u32,
}

/// Offsets of the eight surrounding locations, clockwise from north-west.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

impl Torus {
    /// Both sides must be at least 3 so the eight neighbours are distinct.
    pub fn new(width: u32, height: u32) -> Option<Self> {
        (width >= 3 && height >= 3).then_some(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> u32 {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, idx: u32) -> (u32, u32) {
        (idx % self.width, idx / self.width)
    }

    #[inline]
    pub fn offset(&self, idx: u32, dx: i32, dy: i32) -> u32 {
        let (x, y) = self.coords(idx);
        let nx = (x as i64 + dx as i64).rem_euclid(self.width as i64) as u32;
        let ny = (y as i64 + dy as i64).rem_euclid(self.height as i64) as u32;
        self.index(nx, ny)
    }

    #[inline]
    pub fn neighbors(&self, idx: u32) -> [u32; 8] {
        NEIGHBOR_OFFSETS.map(|(dx, dy)| self.offset(idx, dx, dy))
    }

    /// The location itself followed by its eight neighbours.
    #[inline]
    pub fn block(&self, idx: u32) -> [u32; 9] {
        let n = self.neighbors(idx);
        [idx, n[0], n[1], n[2], n[3], n[4], n[5], n[6], n[7]]
    }

    /// King-move distance with wrap-around.
    pub fn chebyshev(&self, a: u32, b: u32) -> u32 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        dx.min(self.width - dx).max(dy.min(self.height - dy))
    }
}
