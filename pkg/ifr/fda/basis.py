"""
Clamped B-spline bases: construction, evaluation, Gram matrices and
least-squares smoothing of discretely observed curves.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import BSpline

from ..exceptions import BasisDomainError, ConfigurationError, DataValidationError

logger = logging.getLogger(__name__)

# Relative slack for domain checks on evaluation points.
_DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """A clamped B-spline basis on a closed interval.

    Attributes:
        order: polynomial degree + 1.
        num_basis: number of basis functions K.
        domain: closed interval (a, b).
        knots: full knot vector of length K + order, clamped at both ends.
    """

    order: int
    num_basis: int
    domain: Tuple[float, float]
    knots: Tuple[float, ...]

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ConfigurationError(f"basis domain must satisfy a < b, got {self.domain}")
        if self.order < 1:
            raise ConfigurationError(f"basis order must be >= 1, got {self.order}")
        if self.num_basis < self.order:
            raise ConfigurationError(
                f"num_basis ({self.num_basis}) must be >= order ({self.order})"
            )
        knots = np.asarray(self.knots, dtype=float)
        if knots.size != self.num_basis + self.order:
            raise ConfigurationError(
                f"expected {self.num_basis + self.order} knots, got {knots.size}"
            )
        if np.any(np.diff(knots) < 0):
            raise ConfigurationError("knots must be nondecreasing")
        if np.any(knots[: self.order] != a) or np.any(knots[-self.order:] != b):
            raise ConfigurationError("knots must be clamped: endpoints repeated `order` times")

    @classmethod
    def clamped(
        cls,
        domain: Tuple[float, float] = (0.0, 1.0),
        num_basis: int = 8,
        order: int = 4,
        interior_knots: Optional[Sequence[float]] = None,
    ) -> "BasisSpec":
        """Build a clamped basis; interior knots are equally spaced unless supplied."""
        a, b = float(domain[0]), float(domain[1])
        n_interior = num_basis - order
        if n_interior < 0:
            raise ConfigurationError(f"num_basis ({num_basis}) must be >= order ({order})")
        if interior_knots is None:
            interior = np.linspace(a, b, n_interior + 2)[1:-1]
        else:
            interior = np.sort(np.asarray(interior_knots, dtype=float))
            if interior.size != n_interior:
                raise ConfigurationError(
                    f"expected {n_interior} interior knots, got {interior.size}"
                )
            if interior.size and (interior[0] <= a or interior[-1] >= b):
                raise ConfigurationError("interior knots must lie strictly inside the domain")
        knots = np.concatenate([np.full(order, a), interior, np.full(order, b)])
        return cls(
            order=int(order),
            num_basis=int(num_basis),
            domain=(a, b),
            knots=tuple(float(k) for k in knots),
        )

    @property
    def degree(self) -> int:
        return self.order - 1

    @property
    def breakpoints(self) -> NDArray[np.float64]:
        """Distinct knot values, i.e. the polynomial pieces' boundaries."""
        return np.unique(np.asarray(self.knots))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "num_basis": self.num_basis,
            "domain": list(self.domain),
            "knots": list(self.knots),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BasisSpec":
        return cls(
            order=int(data["order"]),
            num_basis=int(data["num_basis"]),
            domain=(float(data["domain"][0]), float(data["domain"][1])),
            knots=tuple(float(k) for k in data["knots"]),
        )


def check_in_domain(spec: BasisSpec, points: ArrayLike) -> NDArray[np.float64]:
    """Return points as a float array, raising if any lies outside the domain."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    a, b = spec.domain
    slack = _DOMAIN_TOL * max(1.0, abs(a), abs(b))
    outside = (x < a - slack) | (x > b + slack) | ~np.isfinite(x)
    if np.any(outside):
        bad = x[outside][0]
        raise BasisDomainError(f"point {bad!r} lies outside basis domain [{a}, {b}]")
    # Points within rounding slack are snapped onto the endpoints.
    return np.clip(x, a, b)


def basis_matrix(spec: BasisSpec, points: ArrayLike) -> NDArray[np.float64]:
    """Evaluate all K basis functions at each point; returns a (len(points), K) matrix."""
    x = check_in_domain(spec, points)
    knots = np.asarray(spec.knots, dtype=float)
    design = BSpline.design_matrix(x, knots, spec.degree)
    return np.asarray(design.toarray(), dtype=float)


def evaluate_basis(spec: BasisSpec, t: float) -> NDArray[np.float64]:
    """Values phi_1(t), ..., phi_K(t) at a single point t in the domain."""
    return basis_matrix(spec, [t])[0]


@lru_cache(maxsize=None)
def _gauss_legendre(n_nodes: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    return np.polynomial.legendre.leggauss(n_nodes)


def _span_quadrature(
    breakpoints: NDArray[np.float64], n_nodes: int
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Legendre nodes and weights on every span between consecutive breakpoints."""
    ref_nodes, ref_weights = _gauss_legendre(n_nodes)
    left, right = breakpoints[:-1], breakpoints[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def cross_gram(spec_row: BasisSpec, spec_col: BasisSpec) -> NDArray[np.float64]:
    """Matrix of integrals of phi_j(t) psi_k(t) over the shared domain.

    Each integrand is a piecewise polynomial of degree at most
    (order_row - 1) + (order_col - 1) on the merged knot spans, so
    max(order_row, order_col) Gauss-Legendre nodes per span integrate it exactly.
    """
    if not np.allclose(spec_row.domain, spec_col.domain, rtol=0.0, atol=1e-14):
        raise BasisDomainError(
            f"cross_gram needs identical domains, got {spec_row.domain} and {spec_col.domain}"
        )
    breakpoints = np.union1d(spec_row.breakpoints, spec_col.breakpoints)
    nodes, weights = _span_quadrature(breakpoints, max(spec_row.order, spec_col.order))
    phi = basis_matrix(spec_row, nodes)
    psi = basis_matrix(spec_col, nodes)
    return phi.T @ (weights[:, None] * psi)


@lru_cache(maxsize=256)
def gram_matrix(spec: BasisSpec) -> NDArray[np.float64]:
    """Symmetric K x K matrix of integrals of phi_j(t) phi_k(t). Cached per spec; read-only."""
    gram = cross_gram(spec, spec)
    gram = 0.5 * (gram + gram.T)
    gram.setflags(write=False)
    return gram


def check_grid(spec: BasisSpec, grid: ArrayLike) -> NDArray[np.float64]:
    """Validate an observation grid: strictly increasing, inside the domain, J >= K."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1:
        raise DataValidationError(f"grid must be one-dimensional, got shape {g.shape}")
    if g.size < spec.num_basis:
        raise DataValidationError(
            f"under-determined smoothing: {g.size} grid points for {spec.num_basis} basis functions"
        )
    if np.any(np.diff(g) <= 0):
        raise DataValidationError("grid points must be strictly increasing")
    return check_in_domain(spec, g)


def smoothing_operator(spec: BasisSpec, grid: ArrayLike) -> NDArray[np.float64]:
    """Pseudoinverse of the basis matrix; maps grid values to coefficients."""
    g = check_grid(spec, grid)
    return scipy.linalg.pinv(basis_matrix(spec, g))


def smooth_matrix(spec: BasisSpec, grid: ArrayLike, values: ArrayLike) -> NDArray[np.float64]:
    """Least-squares coefficients for N curves observed on a shared grid.

    Args:
        values: (N, J) matrix, one curve per row.

    Returns:
        (N, K) coefficient matrix.
    """
    g = np.asarray(grid, dtype=float)
    y = np.atleast_2d(np.asarray(values, dtype=float))
    if y.shape[1] != g.size:
        raise DataValidationError(
            f"values have {y.shape[1]} columns but the grid has {g.size} points"
        )
    if not np.all(np.isfinite(y)):
        raise DataValidationError("values contain missing or non-finite entries")
    return y @ smoothing_operator(spec, g).T


def smooth(spec: BasisSpec, grid: ArrayLike, values: ArrayLike) -> NDArray[np.float64]:
    """Least-squares coefficient vector of one discretely observed curve."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise DataValidationError(f"values must be one-dimensional, got shape {v.shape}")
    return smooth_matrix(spec, grid, v[None, :])[0]
