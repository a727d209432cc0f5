//! Converter parameters and the small dense linear algebra shared by the
//! plant model and the controller prediction step.

use crate::error::{Error, Result};

/// 2x2 matrix stored row-major. Big enough for the arm-current subsystem,
/// small enough to keep everything on the stack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * other.m[0][j] + self.m[i][1] * other.m[1][j];
            }
        }
        Mat2 { m: r }
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    /// Solve `self * x = b` by Cramer's rule.
    pub fn solve(&self, b: [f64; 2]) -> Option<[f64; 2]> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some([
            (b[0] * self.m[1][1] - self.m[0][1] * b[1]) / d,
            (self.m[0][0] * b[1] - b[0] * self.m[1][0]) / d,
        ])
    }
}

/// Physical and electrical constants of the plant and its load.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConverterParams {
    /// Arm inductance [H].
    pub l: f64,
    /// Arm resistance [Ohm].
    pub r: f64,
    /// Per-capacitor capacitance [F].
    pub c: f64,
    /// Capacitors per arm.
    pub n: usize,
    /// Load inductance [H].
    pub la: f64,
    /// Load resistance [Ohm].
    pub ra: f64,
    /// DC-link voltage [V].
    pub vdc: f64,
    /// Load-source amplitude [V].
    pub va_m: f64,
    /// Load-source phase [rad].
    pub alpha_va: f64,
    /// Angular frequency [rad/s].
    pub omega: f64,
    /// Control sample time [s].
    pub ts: f64,
}

impl ConverterParams {
    /// Verification setup: n = 3, capacitors initially at 110 V.
    pub fn table1() -> Self {
        Self {
            l: 10e-3,
            r: 0.1,
            c: 1000e-6,
            n: 3,
            la: 50e-3,
            ra: 19.0,
            vdc: 250.0,
            va_m: 10.0,
            alpha_va: std::f64::consts::FRAC_PI_6,
            omega: 2.0 * std::f64::consts::PI * 50.0,
            ts: 1e-4,
        }
    }

    /// Closed-loop control setup: n = 8, capacitors initially at 31.25 V.
    pub fn table2() -> Self {
        Self {
            n: 8,
            ..Self::table1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.l, "L"),
            (self.c, "C"),
            (self.la, "La"),
            (self.ts, "Ts"),
            (self.omega, "omega"),
        ];
        for (v, name) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be strictly positive, got {v}")));
            }
        }
        let nonneg = [
            (self.r, "R"),
            (self.ra, "Ra"),
            (self.vdc, "Vdc"),
            (self.va_m, "VaM"),
        ];
        for (v, name) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !self.alpha_va.is_finite() {
            return Err(Error::Config("alphaVa must be finite".into()));
        }
        Ok(())
    }

    /// Rejects R = 0 in addition to [`validate`](Self::validate). The
    /// circulating-current offset loop divides by R.
    pub fn validate_for_control(&self) -> Result<()> {
        self.validate()?;
        if self.r == 0.0 {
            return Err(Error::Config(
                "R must be strictly positive when the controller is used (Id0 = Vd0 / R)".into(),
            ));
        }
        Ok(())
    }

    /// Total arm capacitance C_T = n C.
    pub fn c_t(&self) -> f64 {
        self.n as f64 * self.c
    }

    /// Load-loop inductance L_T = L + 2 La.
    pub fn l_t(&self) -> f64 {
        self.l + 2.0 * self.la
    }

    /// Load-loop resistance R_T = R + 2 Ra.
    pub fn r_t(&self) -> f64 {
        self.r + 2.0 * self.ra
    }

    /// Series impedance magnitude sqrt(R^2 + L^2 w^2) of one arm.
    pub fn arm_impedance(&self) -> f64 {
        (self.r * self.r + self.l * self.l * self.omega * self.omega).sqrt()
    }

    /// Inductance matrix of the arm-current subsystem.
    pub fn inductance_matrix(&self) -> Mat2 {
        Mat2::new(self.l + self.la, self.la, self.la, self.l + self.la)
    }

    /// Resistance matrix A_L (already negated, as it enters the dynamics).
    pub fn resistance_matrix(&self) -> Mat2 {
        Mat2::new(
            -(self.r + self.ra),
            -self.ra,
            -self.ra,
            -(self.r + self.ra),
        )
    }

    /// Cached inverse of the inductance matrix. Errors when L = 0 makes it
    /// singular.
    pub fn inductance_inverse(&self) -> Result<Mat2> {
        self.inductance_matrix().inverse().ok_or_else(|| {
            Error::Config("inductance matrix is singular (L * (L + 2 La) must be nonzero)".into())
        })
    }

    /// Load source voltage Va(t).
    pub fn va(&self, t: f64) -> f64 {
        self.va_m * (self.omega * t + self.alpha_va).sin()
    }
}
