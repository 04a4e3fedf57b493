//! Uniform cell grid on the unit torus for fixed-radius neighbour queries.

const ABSENT: u32 = u32::MAX;

/// Agent buckets kept in sync with positions. Cell side length is never
/// below the query radius, so every neighbour lies in the 3x3 block around
/// a cell.
#[derive(Debug)]
pub(crate) struct CellGrid {
    side: usize,
    side_f: f64,
    cells: Vec<Vec<u32>>,
    /// Per agent: current cell, or `ABSENT`.
    cell_of: Vec<u32>,
    /// Per agent: index inside its cell bucket.
    slot: Vec<u32>,
}

impl CellGrid {
    /// Grid resolution for `radius` and `population`: at most one cell per
    /// agent on average, and a single cell when the 3x3 block would wrap
    /// onto itself.
    pub(crate) fn side_for(radius: f64, population: usize) -> usize {
        let by_radius = if radius > 0.0 { (1.0 / radius).floor() } else { f64::INFINITY };
        let by_population = (population as f64).sqrt().ceil().max(3.0);
        let side = by_radius.min(by_population) as usize;
        if side < 3 {
            1
        } else {
            side
        }
    }

    pub(crate) fn new(side: usize, n_agents: usize) -> Self {
        Self {
            side,
            side_f: side as f64,
            cells: vec![Vec::new(); side * side],
            cell_of: vec![ABSENT; n_agents],
            slot: vec![0; n_agents],
        }
    }

    #[inline]
    fn cell_index(&self, pos: [f64; 2]) -> usize {
        cell_coord(pos[1], self.side_f, self.side) * self.side + cell_coord(pos[0], self.side_f, self.side)
    }

    pub(crate) fn insert(&mut self, agent: u32, pos: [f64; 2]) {
        let c = self.cell_index(pos);
        self.place(agent, c);
    }

    fn place(&mut self, agent: u32, c: usize) {
        self.slot[agent as usize] = self.cells[c].len() as u32;
        self.cell_of[agent as usize] = c as u32;
        self.cells[c].push(agent);
    }

    pub(crate) fn remove(&mut self, agent: u32) {
        let c = self.cell_of[agent as usize];
        if c == ABSENT {
            return;
        }
        let bucket = &mut self.cells[c as usize];
        let s = self.slot[agent as usize] as usize;
        bucket.swap_remove(s);
        if let Some(&moved) = bucket.get(s) {
            self.slot[moved as usize] = s as u32;
        }
        self.cell_of[agent as usize] = ABSENT;
    }

    /// Re-bucket `agent` after it moved to `pos`.
    #[inline]
    pub(crate) fn update(&mut self, agent: u32, pos: [f64; 2]) {
        let c = self.cell_index(pos);
        let old = self.cell_of[agent as usize];
        if old != c as u32 {
            self.remove(agent);
            self.place(agent, c);
        }
    }

    /// Visit every bucketed agent in the 3x3 block around `pos`. The visitor
    /// returns `false` to stop early.
    pub(crate) fn visit_near<F: FnMut(u32) -> bool>(&self, pos: [f64; 2], mut visit: F) {
        let side = self.side;
        if side == 1 {
            for &m in &self.cells[0] {
                if !visit(m) {
                    return;
                }
            }
            return;
        }
        let cx = cell_coord(pos[0], self.side_f, side);
        let cy = cell_coord(pos[1], self.side_f, side);
        let wrap = |c: usize| {
            [
                if c == 0 { side - 1 } else { c - 1 },
                c,
                if c + 1 == side { 0 } else { c + 1 },
            ]
        };
        let cols = wrap(cx);
        for row in wrap(cy) {
            for &col in &cols {
                for &m in &self.cells[row * side + col] {
                    if !visit(m) {
                        return;
                    }
                }
            }
        }
    }
}

#[inline]
fn cell_coord(v: f64, side_f: f64, side: usize) -> usize {
    // Coordinates lie in [0,1); the signed conversion is the cheap one.
    ((v * side_f) as i32 as usize).min(side - 1)
}

/// Squared Euclidean distance on the unit torus.
#[inline]
pub(crate) fn torus_dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if dx > 0.5 {
        dx = 1.0 - dx;
    }
    if dy > 0.5 {
        dy = 1.0 - dy;
    }
    dx * dx + dy * dy
}
