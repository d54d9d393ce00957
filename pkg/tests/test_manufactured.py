import numpy as np
import pytest

from hhobiharm.manufactured import get_case, polynomial_case, random_polynomial_case


def fd_biharmonic(u, pts, h=1e-3):
    """13-point finite-difference Lap^2 u (central stencils)."""
    def shift(dx, dy):
        return u(pts + np.array([dx, dy]) * h)

    u0 = u(pts)
    uxxxx = (shift(-2, 0) - 4 * shift(-1, 0) + 6 * u0
             - 4 * shift(1, 0) + shift(2, 0)) / h ** 4
    uyyyy = (shift(0, -2) - 4 * shift(0, -1) + 6 * u0
             - 4 * shift(0, 1) + shift(0, 2)) / h ** 4
    uxxyy = (shift(-1, -1) - 2 * shift(0, -1) + shift(1, -1)
             - 2 * shift(-1, 0) + 4 * u0 - 2 * shift(1, 0)
             + shift(-1, 1) - 2 * shift(0, 1) + shift(1, 1)) / h ** 4
    return uxxxx + 2 * uxxyy + uyyyy


def fd_gradient(u, pts, h=1e-6):
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    gx = (u(pts + ex) - u(pts - ex)) / (2 * h)
    gy = (u(pts + ey) - u(pts - ey)) / (2 * h)
    return np.column_stack([gx, gy])


@pytest.mark.parametrize("case_id", ["1", "2", "poly4", "poly6"])
class TestDerivativeTranscription:
    def _points(self, seed):
        rng = np.random.default_rng(seed)
        return rng.uniform(0.05, 0.95, size=(100, 2))

    def test_biharmonic_load_fd(self, case_id):
        case = get_case(case_id)
        pts = self._points(1)
        # step balances the h^2 truncation against the eps/h^4 roundoff for
        # the polynomial degrees used here; transcendental cases need 1e-3
        h = 3e-3 if case_id.startswith("poly") else 1e-3
        fd = fd_biharmonic(case.u, pts, h=h)
        exact = case.f(pts)
        scale = max(np.max(np.abs(exact)), 1.0)
        assert np.max(np.abs(fd - exact)) <= 1e-4 * scale

    def test_gradient_fd(self, case_id):
        case = get_case(case_id)
        pts = self._points(2)
        fd = fd_gradient(case.u, pts)
        exact = case.grad(pts)
        scale = max(np.max(np.abs(exact)), 1.0)
        assert np.max(np.abs(fd - exact)) <= 1e-6 * scale

    def test_hessian_fd(self, case_id):
        case = get_case(case_id)
        pts = self._points(3)
        h = 1e-5
        gx = lambda p: np.asarray(case.grad(p))[:, 0]
        gy = lambda p: np.asarray(case.grad(p))[:, 1]
        fd_xx = fd_gradient(gx, pts, h)[:, 0]
        fd_xy = fd_gradient(gx, pts, h)[:, 1]
        fd_yy = fd_gradient(gy, pts, h)[:, 1]
        exact = np.asarray(case.hess(pts))
        scale = max(np.max(np.abs(exact)), 1.0)
        assert np.max(np.abs(fd_xx - exact[:, 0])) <= 1e-5 * scale
        assert np.max(np.abs(fd_xy - exact[:, 1])) <= 1e-5 * scale
        assert np.max(np.abs(fd_yy - exact[:, 2])) <= 1e-5 * scale

    def test_third_derivatives_fd(self, case_id):
        case = get_case(case_id)
        pts = self._points(4)
        h = 1e-5
        hxx = lambda p: np.asarray(case.hess(p))[:, 0]
        hxy = lambda p: np.asarray(case.hess(p))[:, 1]
        hyy = lambda p: np.asarray(case.hess(p))[:, 2]
        exact = np.asarray(case.third(pts))
        fd = np.column_stack([fd_gradient(hxx, pts, h)[:, 0],
                              fd_gradient(hxx, pts, h)[:, 1],
                              fd_gradient(hyy, pts, h)[:, 0],
                              fd_gradient(hyy, pts, h)[:, 1]])
        scale = max(np.max(np.abs(exact)), 1.0)
        assert np.max(np.abs(fd - exact)) <= 1e-4 * scale


class TestRegistry:
    def test_aliases(self):
        assert get_case("1").name == get_case("sinsq").name
        assert get_case("2").name == get_case("sinsq-gauss").name

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_case("nope")

    def test_case1_homogeneous_boundary(self):
        case = get_case("1")
        t = np.linspace(0, 1, 17)
        edges = [np.column_stack([t, np.zeros_like(t)]),
                 np.column_stack([t, np.ones_like(t)]),
                 np.column_stack([np.zeros_like(t), t]),
                 np.column_stack([np.ones_like(t), t])]
        for pts in edges:
            assert np.max(np.abs(case.u(pts))) < 1e-14
            assert np.max(np.abs(case.grad(pts))) < 1e-13
        assert case.homogeneous

    def test_case2_not_homogeneous(self):
        case = get_case("2")
        pts = np.array([[0.0, 0.5]])
        assert abs(case.u(pts)[0]) > 0.1
        assert not case.homogeneous


class TestPolynomialCases:
    def test_exact_biharmonic_of_x4(self):
        C = np.zeros((5, 1))
        C[4, 0] = 1.0   # u = x^4 -> Lap^2 u = 24
        case = polynomial_case(C)
        pts = np.random.default_rng(0).uniform(0, 1, (10, 2))
        assert np.allclose(case.f(pts), 24.0)

    def test_random_case_degree_present(self):
        case = random_polynomial_case(3, seed=1)
        pts = np.array([[10.0, 0.0]])
        assert abs(case.u(pts)[0]) > 100.0  # the x^3 term is really there
