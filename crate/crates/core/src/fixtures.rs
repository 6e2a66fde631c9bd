//! Reference domains shared by tests, suites and the command line.

use crate::domain::{Arc, BilateralModuli, ChordalModuli, Slit};

/// One slit `[-1, 1] + i`.
pub fn m1() -> ChordalModuli {
    ChordalModuli::new(vec![Slit::new(1.0, -1.0, 1.0)])
}

/// Two slits of different heights.
pub fn m2() -> ChordalModuli {
    ChordalModuli::new(vec![Slit::new(1.0, -1.0, 1.0), Slit::new(0.6, 1.8, 2.6)])
}

/// Pure annulus with inner radius 0.3.
pub fn b1() -> BilateralModuli {
    BilateralModuli::new(0.3f64.ln(), vec![])
}

/// Annulus `e^-1.2 < |z| < 1` with one circular arc.
pub fn b2() -> BilateralModuli {
    BilateralModuli::new(-1.2, vec![Arc::new(-0.7, 0.3, 1.2)])
}

/// Looks a fixture up by name (`m1`, `m2`, `b1`, `b2`, `h` for the half plane).
pub fn by_name(name: &str) -> Option<crate::domain::Moduli> {
    Some(match name.to_ascii_lowercase().as_str() {
        "h" | "half_plane" => ChordalModuli::half_plane().into(),
        "m1" => m1().into(),
        "m2" => m2().into(),
        "b1" => b1().into(),
        "b2" => b2().into(),
        _ => return None,
    })
}
