//! Two-dimensional Sobol sequence in Gray-code order.
//!
//! The first coordinate is the base-2 van der Corput sequence. The second
//! uses the primitive polynomial `x + 1` with initial direction number 1,
//! which gives direction integers `m_k = 2 m_{k-1} xor m_{k-1}`.

const BITS: usize = 32;

fn direction_numbers() -> [[u32; BITS]; 2] {
    let mut v = [[0u32; BITS]; 2];
    let mut m: u32 = 1;
    for k in 0..BITS {
        v[0][k] = 1 << (BITS - 1 - k);
        if k > 0 {
            m ^= m << 1;
        }
        v[1][k] = m << (BITS - 1 - k);
    }
    v
}

/// Incremental generator; index 0 is the origin.
#[derive(Debug, Clone)]
pub struct Sobol2 {
    v: [[u32; BITS]; 2],
    state: [u32; 2],
    index: u64,
}

impl Default for Sobol2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Sobol2 {
    pub fn new() -> Self {
        Sobol2 {
            v: direction_numbers(),
            state: [0, 0],
            index: 0,
        }
    }

    /// Point at the current index, then advance.
    pub fn next_point(&mut self) -> [f64; 2] {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let p = [self.state[0] as f64 * scale, self.state[1] as f64 * scale];
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            self.state[0] ^= self.v[0][c];
            self.state[1] ^= self.v[1][c];
        }
        self.index += 1;
        p
    }
}

/// The first `n` points after discarding `skip` leading points.
pub fn sobol_2d(n: usize, skip: usize) -> Vec<[f64; 2]> {
    let mut g = Sobol2::new();
    for _ in 0..skip {
        g.next_point();
    }
    (0..n).map(|_| g.next_point()).collect()
}
