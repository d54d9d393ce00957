"""Shared configuration objects and exception types."""

from dataclasses import dataclass


class NumericalError(RuntimeError):
    """A numerical operation failed (singular factorization, non-convergence)."""


class AssemblyError(NumericalError):
    """Global or local assembly could not be completed."""


class SolverError(NumericalError):
    """Linear solver failed or did not meet its residual contract."""


class ConfigError(ValueError):
    """Invalid run configuration (bad variant, degree, mesh parameters)."""


@dataclass(frozen=True)
class QuadSettings:
    """Extra quadrature degrees added on top of the polynomially exact base rules.

    Base rules integrate every product of discrete polynomials exactly:
    degree 2(k+2) in cells, 2(k+2)+1 on faces.  The extras below only matter
    for integrands involving non-polynomial data (loads, boundary data,
    projections of smooth functions, error norms).
    """

    rhs_extra_degree: int = 2      # load integrals (f, phi)_K
    bc_extra_degree: int = 4       # boundary data projections and penalty terms
    data_extra_degree: int = 8     # reductions / projection oracles of smooth v
    error_extra_degree: int = 4    # error norm integration

    def cell_base(self, k: int) -> int:
        return 2 * (k + 2)

    def face_base(self, k: int) -> int:
        return 2 * (k + 2) + 1


DEFAULT_QUAD = QuadSettings()

STAB_SCALINGS = ("plain", "k2-all", "k2-hm1-only")


def stab_factors(scaling: str, k: int) -> tuple[float, float]:
    """Multipliers (on the h^-3/h^-4 terms, on the h^-1 terms) for a scaling mode."""
    if scaling not in STAB_SCALINGS:
        raise ConfigError(f"unknown stabilization scaling {scaling!r}; "
                          f"expected one of {STAB_SCALINGS}")
    k2 = float((k + 1) ** 2)
    if scaling == "plain":
        return 1.0, 1.0
    if scaling == "k2-hm1-only":
        return 1.0, k2
    return k2, k2
