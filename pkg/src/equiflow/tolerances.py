"""Single shared tolerance policy for the numerical kernel."""

from dataclasses import dataclass


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical thresholds used across all modules.

    eig_tol       relative eigen-residual bound
    cluster_tol   absolute gap for grouping eigenvalues into clusters
    zero_tol      threshold for treating an eigenvalue/phase as zero (or pi)
    quad_rel_tol  relative tolerance of the adaptive quadrature
    commute_tol   allowed commutator norm in equivariance checks
    """

    eig_tol: float = 1e-12
    cluster_tol: float = 1e-9
    zero_tol: float = 1e-9
    quad_rel_tol: float = 1e-8
    commute_tol: float = 1e-10

    def __post_init__(self):
        for name in ("eig_tol", "cluster_tol", "zero_tol", "quad_rel_tol", "commute_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"tolerance {name} must be strictly positive")
        if self.cluster_tol < self.eig_tol:
            raise ValueError("cluster_tol must be >= eig_tol")


DEFAULT = TolerancePolicy()
