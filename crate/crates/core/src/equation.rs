/// Elliptic operator solved or barred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equation {
    /// `div(∇u / √(1+|∇u|²)) = 0`.
    Minimal,
    /// `div(|∇u|^{p-2} ∇u) = 0`.
    PLaplace { p: f64 },
    /// `Δu = 0`; reference path for `p = 2`.
    Harmonic,
}

impl Equation {
    pub fn name(&self) -> &'static str {
        match self {
            Equation::Minimal => "minimal",
            Equation::PLaplace { .. } => "p-laplace",
            Equation::Harmonic => "harmonic",
        }
    }

    pub fn p(&self) -> Option<f64> {
        match *self {
            Equation::PLaplace { p } => Some(p),
            _ => None,
        }
    }
}
