//! Zonal spherical-harmonic kernels `Z_q(ω·ω') = Σ_l Y_ql(ω) Y_ql(ω')`.

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    let pi = std::f64::consts::PI;
    // Γ(n/2)
    let gamma = if n % 2 == 0 {
        (1..n / 2).fold(1.0, |a, k| a * k as f64)
    } else {
        let k = (n - 1) / 2;
        (0..k).fold(pi.sqrt(), |a, i| a * (i as f64 + 0.5))
    };
    2.0 * pi.powf(n as f64 / 2.0) / gamma
}

fn binom_f64(n: i64, k: i64) -> f64 {
    if k < 0 || n < k {
        return 0.0;
    }
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

/// Number of independent spherical harmonics of degree `q` on `S^{n-1}`.
pub fn degeneracy(q: u32, n: u32) -> f64 {
    let (q, n) = (q as i64, n as i64);
    binom_f64(q + n - 1, n - 1) - binom_f64(q + n - 3, n - 1)
}

/// Gegenbauer polynomials normalized to 1 at `x = 1`, generated in order.
#[derive(Clone, Debug)]
pub struct ZonalSeq {
    n: u32,
    area: f64,
    x: f64,
    q: u32,
    prev: f64,
    cur: f64,
}

impl ZonalSeq {
    pub fn new(n: u32, x: f64) -> Self {
        ZonalSeq { n, area: sphere_area(n), x, q: 0, prev: 0.0, cur: 1.0 }
    }

    /// Current degree.
    pub fn degree(&self) -> u32 {
        self.q
    }

    /// Normalized Gegenbauer value `R_q(x)` at the current degree.
    pub fn normalized(&self) -> f64 {
        self.cur
    }

    /// `Z_q(x)` at the current degree.
    pub fn value(&self) -> f64 {
        degeneracy(self.q, self.n) / self.area * self.cur
    }

    pub fn advance(&mut self) {
        let q = self.q as f64 + 1.0;
        let alpha = self.n as f64 / 2.0 - 1.0;
        let next = if self.q == 0 {
            self.x
        } else {
            (2.0 * (q + alpha - 1.0) * self.x * self.cur - (q - 1.0) * self.prev) / (q + 2.0 * alpha - 1.0)
        };
        self.prev = self.cur;
        self.cur = next;
        self.q += 1;
    }
}

pub fn zonal(q: u32, n: u32, x: f64) -> f64 {
    let mut z = ZonalSeq::new(n, x);
    for _ in 0..q {
        z.advance();
    }
    z.value()
}
