"""Manufactured solutions with closed-form derivatives and loads f = Lap^2 u.

Two smooth benchmark cases are registered ("1" and "2") together with exact
polynomial cases of any total degree built from coefficient matrices, for
which every derivative is computed by exact coefficient shifts.
Vectorized convention: every callable takes an (n, 2) point array; `grad`
returns (n, 2), `hess` returns (n, 3) as (u_xx, u_xy, u_yy), and `third`
returns (n, 4) as (u_xxx, u_xxy, u_xyy, u_yyy).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.polynomial import polyval2d

__all__ = ["ManufacturedCase", "get_case", "polynomial_case",
           "random_polynomial_case", "CASE_NAMES"]


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    u: object
    grad: object
    hess: object
    third: object
    f: object
    homogeneous: bool   # u and d_n u vanish on the boundary of (0,1)^2


def _sinsq() -> ManufacturedCase:
    # u = sin^2(pi x) sin^2(pi y) = (1 - cos a)(1 - cos b)/4, a = 2 pi x, b = 2 pi y
    tau = 2.0 * np.pi

    def u(p):
        a, b = tau * p[:, 0], tau * p[:, 1]
        return 0.25 * (1 - np.cos(a)) * (1 - np.cos(b))

    def grad(p):
        a, b = tau * p[:, 0], tau * p[:, 1]
        gx = 0.5 * np.pi * np.sin(a) * (1 - np.cos(b))
        gy = 0.5 * np.pi * (1 - np.cos(a)) * np.sin(b)
        return np.column_stack([gx, gy])

    def hess(p):
        a, b = tau * p[:, 0], tau * p[:, 1]
        pi2 = np.pi ** 2
        return np.column_stack([pi2 * np.cos(a) * (1 - np.cos(b)),
                                pi2 * np.sin(a) * np.sin(b),
                                pi2 * (1 - np.cos(a)) * np.cos(b)])

    def third(p):
        a, b = tau * p[:, 0], tau * p[:, 1]
        pi3 = np.pi ** 3
        return np.column_stack([-2 * pi3 * np.sin(a) * (1 - np.cos(b)),
                                2 * pi3 * np.cos(a) * np.sin(b),
                                2 * pi3 * np.sin(a) * np.cos(b),
                                -2 * pi3 * (1 - np.cos(a)) * np.sin(b)])

    def f(p):
        a, b = tau * p[:, 0], tau * p[:, 1]
        ca, cb = np.cos(a), np.cos(b)
        return 4.0 * np.pi ** 4 * (4.0 * ca * cb - ca - cb)

    return ManufacturedCase("sinsq", u, grad, hess, third, f, homogeneous=True)


def _gaussian_bump(x0=0.5, y0=0.5):
    """exp(-(x-x0)^2 - (y-y0)^2) and its derivatives."""

    def parts(p):
        X = p[:, 0] - x0
        Y = p[:, 1] - y0
        return X, Y, np.exp(-X * X - Y * Y)

    def u(p):
        return parts(p)[2]

    def grad(p):
        X, Y, g = parts(p)
        return np.column_stack([-2 * X * g, -2 * Y * g])

    def hess(p):
        X, Y, g = parts(p)
        return np.column_stack([(4 * X * X - 2) * g, 4 * X * Y * g,
                                (4 * Y * Y - 2) * g])

    def third(p):
        X, Y, g = parts(p)
        return np.column_stack([(12 * X - 8 * X ** 3) * g,
                                (4 * Y - 8 * X * X * Y) * g,
                                (4 * X - 8 * X * Y * Y) * g,
                                (12 * Y - 8 * Y ** 3) * g])

    def f(p):
        X, Y, g = parts(p)
        r2 = X * X + Y * Y
        return 16.0 * (r2 * r2 - 4.0 * r2 + 2.0) * g

    return u, grad, hess, third, f


def _sinsq_gauss() -> ManufacturedCase:
    base = _sinsq()
    gu, gg, gh, gt, gf = _gaussian_bump()

    return ManufacturedCase(
        "sinsq-gauss",
        u=lambda p: base.u(p) + gu(p),
        grad=lambda p: base.grad(p) + gg(p),
        hess=lambda p: base.hess(p) + gh(p),
        third=lambda p: base.third(p) + gt(p),
        f=lambda p: base.f(p) + gf(p),
        homogeneous=False,
    )


def _poly_dx(C):
    if C.shape[0] == 1:
        return np.zeros((1, C.shape[1]))
    return C[1:, :] * np.arange(1, C.shape[0])[:, None]


def _poly_dy(C):
    if C.shape[1] == 1:
        return np.zeros((C.shape[0], 1))
    return C[:, 1:] * np.arange(1, C.shape[1])[None, :]


def polynomial_case(C, name=None) -> ManufacturedCase:
    """Exact case from a coefficient matrix C[i, j] of x^i y^j."""
    C = np.asarray(C, dtype=np.float64)
    Cx, Cy = _poly_dx(C), _poly_dy(C)
    Cxx, Cxy, Cyy = _poly_dx(Cx), _poly_dy(Cx), _poly_dy(Cy)
    Cxxx, Cxxy = _poly_dx(Cxx), _poly_dy(Cxx)
    Cxyy, Cyyy = _poly_dy(Cxy), _poly_dy(Cyy)
    Cxxxx = _poly_dx(Cxxx)
    Cxxyy = _poly_dy(Cxxy)
    Cyyyy = _poly_dy(Cyyy)

    def ev(M):
        return lambda p: polyval2d(p[:, 0], p[:, 1], M)

    def pack(*Ms):
        fns = [ev(M) for M in Ms]
        return lambda p: np.column_stack([fn(p) for fn in fns])

    def f(p):
        return (polyval2d(p[:, 0], p[:, 1], Cxxxx)
                + 2.0 * polyval2d(p[:, 0], p[:, 1], Cxxyy)
                + polyval2d(p[:, 0], p[:, 1], Cyyyy))

    deg = C.shape[0] + C.shape[1] - 2
    return ManufacturedCase(name or f"poly{deg}", ev(C), pack(Cx, Cy),
                            pack(Cxx, Cxy, Cyy), pack(Cxxx, Cxxy, Cxyy, Cyyy),
                            f, homogeneous=False)


def random_polynomial_case(degree: int, seed: int = 0) -> ManufacturedCase:
    """Full polynomial of exactly the given total degree, O(1) coefficients."""
    rng = np.random.default_rng(seed)
    C = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            C[i, j] = rng.uniform(-1.0, 1.0)
    # Make sure the top total degree is actually present.
    C[degree, 0] = 0.5 + abs(C[degree, 0])
    return polynomial_case(C, name=f"poly{degree}-seed{seed}")


CASE_NAMES = ("1", "sinsq", "2", "sinsq-gauss",
              "poly2", "poly3", "poly4", "poly5", "poly6", "poly7")


def get_case(key) -> ManufacturedCase:
    """Look up a registered case by id ("1", "2") or name."""
    key = str(key)
    if key in ("1", "sinsq"):
        return _sinsq()
    if key in ("2", "sinsq-gauss"):
        return _sinsq_gauss()
    if key.startswith("poly"):
        try:
            deg = int(key[4:])
        except ValueError:
            raise KeyError(f"unknown manufactured case {key!r}") from None
        if not 0 <= deg <= 12:
            raise KeyError(f"polynomial case degree out of range: {key!r}")
        return random_polynomial_case(deg, seed=deg)
    raise KeyError(f"unknown manufactured case {key!r}")
