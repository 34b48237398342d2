"""Registry of manufactured solutions.

Every entry has the separable form ``u(x, t) = g(t) phi(x)`` with ``g`` a
finite sum of powers ``c t**p``, so ``D^alpha g`` follows from the power
rule and ``L u = g(t) (L phi)(x)``.  Scalar entries use ``phi = 1`` and no
spatial operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from fracl1.caputo_l1 import caputo_power_oracle
from fracl1.exceptions import InvalidParameterError
from fracl1.fd_space import FdCoefficients, evaluate
from fracl1.scalar_solver import ScalarProblem

__all__ = ["Manufactured", "REGISTRY", "get", "names"]


@dataclass(frozen=True)
class SpatialProfile:
    phi: Callable
    grad: Callable  # x -> (n, d)
    second: Callable  # x -> (n, d), pure second derivatives d2 phi / dx_k^2
    dims: tuple
    homogeneous: bool


@dataclass(frozen=True)
class Manufactured:
    """A manufactured solution ``g(t) * phi(x)``.

    ``terms`` are ``(coefficient, exponent)`` pairs where the exponent may
    be a callable of ``alpha``.
    """

    name: str
    terms: tuple
    profile: Optional[SpatialProfile] = None
    description: str = ""

    def powers(self, alpha: float) -> list:
        out = []
        for c, p in self.terms:
            out.append((float(c), float(p(alpha) if callable(p) else p)))
        return out

    def g(self, alpha, t):
        t = np.asarray(t, dtype=float)
        return sum(c * t**p if p != 0 else c * np.ones_like(t) for c, p in self.powers(alpha))

    def dg(self, alpha, t):
        t = np.asarray(t, dtype=float)
        return sum(c * p * t ** (p - 1) if p != 0 else 0.0 * t for c, p in self.powers(alpha))

    def d2g(self, alpha, t):
        t = np.asarray(t, dtype=float)
        return sum(c * p * (p - 1) * t ** (p - 2) if p not in (0, 1) else 0.0 * t for c, p in self.powers(alpha))

    def caputo_g(self, alpha, t):
        t = np.asarray(t, dtype=float)
        return sum(c * caputo_power_oracle(alpha, p, t) for c, p in self.powers(alpha))

    @property
    def is_scalar(self) -> bool:
        return self.profile is None

    def scalar_problem(self, alpha: float) -> ScalarProblem:
        return ScalarProblem(
            alpha=alpha,
            u0=float(self.g(alpha, 0.0)),
            f=lambda t: self.caputo_g(alpha, t),
            exact=lambda t: self.g(alpha, t),
            du=lambda t: self.dg(alpha, t),
            d2u=lambda t: self.d2g(alpha, t),
        )

    def _phi(self, x):
        if self.profile is None:
            return np.ones(np.atleast_2d(x).shape[0])
        return self.profile.phi(np.atleast_2d(x))

    def exact(self, alpha: float) -> Callable:
        """``u(x, t)`` for points ``x`` of shape ``(n, d)``."""
        return lambda x, t: self.g(alpha, t) * self._phi(x)

    def L_phi(self, x, coeffs: FdCoefficients, d: int):
        """``(L phi)(x)`` for ``L = sum_k -(a_k phi_k)_k + b_k phi_k + c phi``."""
        x = np.atleast_2d(x)
        if self.profile is None:
            return evaluate(coeffs.c, x)
        grad = self.profile.grad(x)
        sec = self.profile.second(x)
        out = evaluate(coeffs.c, x) * self.profile.phi(x)
        for k in range(d):
            ak = coeffs.axis("a", k, d)
            if callable(ak):
                if coeffs.da is None:
                    raise InvalidParameterError("variable a_k needs its derivative 'da' for a manufactured source")
                dak = evaluate(coeffs.axis("da", k, d), x)
            else:
                dak = 0.0
            out += -dak * grad[:, k] - evaluate(ak, x) * sec[:, k] + evaluate(coeffs.axis("b", k, d), x) * grad[:, k]
        return out

    def source(self, alpha: float, coeffs: FdCoefficients | None = None, d: int = 2) -> Callable:
        """``f(x, t) = D^alpha u + L u``."""
        coeffs = coeffs or FdCoefficients()

        def f(x, t):
            return self.caputo_g(alpha, t) * self._phi(x) + self.g(alpha, t) * self.L_phi(x, coeffs, d)

        return f


def _sinprod():
    def phi(x):
        return np.prod(np.sin(np.pi * x), axis=1)

    def grad(x):
        s = np.sin(np.pi * x)
        out = np.empty_like(x)
        for k in range(x.shape[1]):
            rest = np.prod(np.delete(s, k, axis=1), axis=1) if x.shape[1] > 1 else 1.0
            out[:, k] = np.pi * np.cos(np.pi * x[:, k]) * rest
        return out

    def second(x):
        return -(np.pi**2) * phi(x)[:, None] * np.ones_like(x)

    return SpatialProfile(phi, grad, second, dims=(1, 2, 3), homogeneous=True)


def _cosxy():
    def phi(x):
        return np.cos(x[:, 0] * x[:, 1])

    def grad(x):
        s = np.sin(x[:, 0] * x[:, 1])
        return np.column_stack([-x[:, 1] * s, -x[:, 0] * s])

    def second(x):
        c = np.cos(x[:, 0] * x[:, 1])
        return np.column_stack([-x[:, 1] ** 2 * c, -x[:, 0] ** 2 * c])

    return SpatialProfile(phi, grad, second, dims=(2,), homogeneous=False)


def _const():
    return SpatialProfile(
        phi=lambda x: np.ones(x.shape[0]),
        grad=lambda x: np.zeros_like(x),
        second=lambda x: np.zeros_like(x),
        dims=(1, 2, 3),
        homogeneous=False,
    )


def _alpha(a):
    return a


def _two_alpha(a):
    return 2.0 * a


REGISTRY = {
    m.name: m
    for m in (
        Manufactured("t_alpha", ((1.0, _alpha),), description="u = t^alpha"),
        Manufactured("t_alpha_plus_t", ((1.0, _alpha), (1.0, 1.0)), description="u = t^alpha + t"),
        Manufactured("t_2alpha", ((1.0, _two_alpha),), description="u = t^(2 alpha)"),
        Manufactured("linear", ((1.0, 0.0), (2.0, 1.0)), description="u = 1 + 2t"),
        Manufactured("t_alpha_sinsin", ((1.0, _alpha),), _sinprod(),
                     description="u = t^alpha prod_k sin(pi x_k), homogeneous Dirichlet data"),
        Manufactured("t_alpha_cosxy", ((1.0, _alpha),), _cosxy(),
                     description="u = t^alpha cos(x1 x2), non-homogeneous Dirichlet data (2D)"),
        Manufactured("t_alpha_const", ((1.0, _alpha),), _const(),
                     description="u = t^alpha, constant in space, with matching boundary data"),
    )
}


def names() -> Sequence[str]:
    return tuple(REGISTRY)


def get(name: str) -> Manufactured:
    try:
        return REGISTRY[name]
    except KeyError:
        raise InvalidParameterError(f"unknown manufactured solution {name!r}; known: {', '.join(REGISTRY)}") from None
