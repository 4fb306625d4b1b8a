//! Drift families on the space of pasts.
//!
//! Each family maps a past `x_-` to a drift vector `a(x_-)`, reading memory
//! only through registered kernel integrals:
//!
//! * `Ou(b)`: `a = -b * x(0)`, memoryless linear damping,
//! * `ModulatedDamping(b, eps, lambda)`: `a = -b * (1 + eps * tanh(M)) * x(0)`
//!   with `M = integral of lambda * exp(lambda*s) * <e_1, x(s)> ds`, a bounded
//!   modulation of the damping strength by the exponentially weighted past,
//! * `LinearDistributedDelay(b, kappa, lambda)`:
//!   `a = -b * x(0) + kappa * integral of lambda * exp(lambda*s) * x(s) ds`,
//!   kept as a negative control: its memory term is unbounded relative to
//!   `|x(0)|`, so the dissipativity and growth conditions fail, while the
//!   pair (state, memory) is exactly solvable through a Markovian lift,
//! * `Composite`: sum of member drifts; the empty composite is the zero drift.

pub mod estimate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{PastHistory, Transform};
use crate::real::Real;

/// Parametric drift family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DriftFamily<T> {
    Ou {
        b: T,
    },
    ModulatedDamping {
        b: T,
        epsilon: T,
        lambda: T,
    },
    LinearDistributedDelay {
        b: T,
        kappa: T,
        lambda: T,
    },
    Composite {
        members: Vec<DriftFamily<T>>,
    },
}

impl<T: Real> DriftFamily<T> {
    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: T| -> Result<()> {
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::InvalidDrift {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
            Ok(())
        };
        match self {
            DriftFamily::Ou { b } => positive("b", *b),
            DriftFamily::ModulatedDamping { b, epsilon, lambda } => {
                positive("b", *b)?;
                positive("lambda", *lambda)?;
                if !epsilon.is_finite() || *epsilon < T::zero() || *epsilon >= T::one() {
                    return Err(Error::InvalidDrift {
                        name: "epsilon",
                        reason: format!("must lie in [0, 1), got {epsilon}"),
                    });
                }
                Ok(())
            }
            DriftFamily::LinearDistributedDelay { b, kappa, lambda } => {
                positive("b", *b)?;
                positive("lambda", *lambda)?;
                if !kappa.is_finite() {
                    return Err(Error::InvalidDrift {
                        name: "kappa",
                        reason: "must be finite".to_string(),
                    });
                }
                Ok(())
            }
            DriftFamily::Composite { members } => {
                members.iter().try_for_each(DriftFamily::validate)
            }
        }
    }
}

/// Analytic constants a family guarantees, used by the bound checkers.
/// `lipschitz` is the contraction constant on the endpoint ball of the given
/// radius; `dissipativity` is `(C1, C2)`; `growth` is `C3`.  `None` means the
/// family does not satisfy the corresponding condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConditions<T> {
    pub radius: T,
    pub lipschitz: Option<T>,
    pub dissipativity: Option<(T, T)>,
    pub growth: Option<T>,
}

/// A validated drift family together with its state dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec<T> {
    family: DriftFamily<T>,
    dim: usize,
}

impl<T: Real> DriftSpec<T> {
    pub fn new(family: DriftFamily<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        family.validate()?;
        Ok(Self { family, dim })
    }

    pub fn ou(b: T, dim: usize) -> Result<Self> {
        Self::new(DriftFamily::Ou { b }, dim)
    }

    pub fn modulated_damping(b: T, epsilon: T, lambda: T, dim: usize) -> Result<Self> {
        Self::new(DriftFamily::ModulatedDamping { b, epsilon, lambda }, dim)
    }

    pub fn linear_distributed_delay(b: T, kappa: T, lambda: T, dim: usize) -> Result<Self> {
        Self::new(DriftFamily::LinearDistributedDelay { b, kappa, lambda }, dim)
    }

    /// The zero drift (`dX = dW`), expressed as an empty composite.
    pub fn zero(dim: usize) -> Self {
        Self {
            family: DriftFamily::Composite {
                members: Vec::new(),
            },
            dim,
        }
    }

    #[must_use]
    pub fn family(&self) -> &DriftFamily<T> {
        &self.family
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel integrals the family reads, as `(rate, transform)` pairs.
    #[must_use]
    pub fn required_kernels(&self) -> Vec<(T, Transform)> {
        fn collect<T: Real>(family: &DriftFamily<T>, out: &mut Vec<(T, Transform)>) {
            match family {
                DriftFamily::Ou { .. } => {}
                DriftFamily::ModulatedDamping { lambda, .. } => {
                    out.push((*lambda, Transform::Coordinate(0)));
                }
                DriftFamily::LinearDistributedDelay { lambda, .. } => {
                    out.push((*lambda, Transform::Identity));
                }
                DriftFamily::Composite { members } => {
                    members.iter().for_each(|m| collect(m, out));
                }
            }
        }
        let mut out = Vec::new();
        collect(&self.family, &mut out);
        out.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        out
    }

    /// Registers every kernel the family needs on a fresh history.
    pub fn register_kernels(&self, history: &mut PastHistory<T>) -> Result<()> {
        for (rate, transform) in self.required_kernels() {
            history.register_kernel(rate, transform)?;
        }
        Ok(())
    }

    /// Memory rate of the family, if it has a memory term.
    #[must_use]
    pub fn memory_rate(&self) -> Option<T> {
        self.required_kernels().first().map(|(rate, _)| *rate)
    }

    /// Evaluates the drift at a past, writing into `out`.
    pub fn evaluate_into(&self, history: &PastHistory<T>, out: &mut [T]) -> Result<()> {
        if history.dim() != self.dim || out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: history.dim(),
            });
        }
        out.iter_mut().for_each(|v| *v = T::zero());
        self.accumulate(history, out)
    }

    fn accumulate(&self, history: &PastHistory<T>, out: &mut [T]) -> Result<()> {
        let x0 = history.current();
        match &self.family {
            DriftFamily::Ou { b } => {
                for j in 0..self.dim {
                    out[j] -= *b * x0[j];
                }
            }
            DriftFamily::ModulatedDamping { b, epsilon, lambda } => {
                let m = *lambda
                    * history.kernel_integral_scalar(*lambda, Transform::Coordinate(0))?;
                let factor = -*b * (T::one() + *epsilon * m.tanh());
                for j in 0..self.dim {
                    out[j] += factor * x0[j];
                }
            }
            DriftFamily::LinearDistributedDelay { b, kappa, lambda } => {
                let memory = history.kernel_integral(*lambda, Transform::Identity)?;
                for j in 0..self.dim {
                    out[j] += -*b * x0[j] + *kappa * *lambda * memory[j];
                }
            }
            DriftFamily::Composite { members } => {
                for member in members {
                    let sub = Self {
                        family: member.clone(),
                        dim: self.dim,
                    };
                    sub.accumulate(history, out)?;
                }
            }
        }
        Ok(())
    }

    /// Evaluates the drift at a past.
    pub fn evaluate(&self, history: &PastHistory<T>) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.evaluate_into(history, &mut out)?;
        Ok(out)
    }

    /// Analytic condition constants on the endpoint ball of `radius`.
    #[must_use]
    pub fn declared_conditions(&self, radius: T) -> DeclaredConditions<T> {
        fn conditions<T: Real>(family: &DriftFamily<T>, radius: T) -> DeclaredConditions<T> {
            match family {
                DriftFamily::Ou { b } => DeclaredConditions {
                    radius,
                    lipschitz: Some(T::zero()),
                    dissipativity: Some((T::zero(), *b)),
                    growth: Some(*b),
                },
                DriftFamily::ModulatedDamping { b, epsilon, lambda } => DeclaredConditions {
                    radius,
                    // |tanh' | <= 1, so on {|x(0)| <= R} the memory modulation
                    // is (b*eps*lambda*R)-Lipschitz in the kernel distance
                    lipschitz: Some(*b * *epsilon * *lambda * radius),
                    dissipativity: Some((T::zero(), *b * (T::one() - *epsilon))),
                    growth: Some(*b * (T::one() + *epsilon)),
                },
                DriftFamily::LinearDistributedDelay { kappa, lambda, .. } => {
                    DeclaredConditions {
                        radius,
                        lipschitz: Some(kappa.abs() * *lambda),
                        dissipativity: None,
                        growth: None,
                    }
                }
                DriftFamily::Composite { members } => {
                    let parts: Vec<_> =
                        members.iter().map(|m| conditions(m, radius)).collect();
                    let sum_opt = |get: &dyn Fn(&DeclaredConditions<T>) -> Option<T>| {
                        parts
                            .iter()
                            .map(get)
                            .try_fold(T::zero(), |acc, v| v.map(|v| acc + v))
                    };
                    let dissipativity = parts
                        .iter()
                        .map(|p| p.dissipativity)
                        .try_fold((T::zero(), T::zero()), |acc, v| {
                            v.map(|(c1, c2)| (acc.0 + c1, acc.1 + c2))
                        })
                        .filter(|(_, c2)| *c2 > T::zero());
                    DeclaredConditions {
                        radius,
                        lipschitz: sum_opt(&|p| p.lipschitz),
                        dissipativity,
                        growth: sum_opt(&|p| p.growth),
                    }
                }
            }
        }
        conditions(&self.family, radius)
    }

    /// Short human-readable family label for reports.
    #[must_use]
    pub fn label(&self) -> String {
        fn label<T: Real>(family: &DriftFamily<T>) -> String {
            match family {
                DriftFamily::Ou { b } => format!("ou(b={b})"),
                DriftFamily::ModulatedDamping { b, epsilon, lambda } => {
                    format!("modulated_damping(b={b}, epsilon={epsilon}, lambda={lambda})")
                }
                DriftFamily::LinearDistributedDelay { b, kappa, lambda } => {
                    format!("linear_distributed_delay(b={b}, kappa={kappa}, lambda={lambda})")
                }
                DriftFamily::Composite { members } => {
                    let inner: Vec<_> = members.iter().map(label).collect();
                    format!("composite[{}]", inner.join(", "))
                }
            }
        }
        label(&self.family)
    }
}
