"""Problem descriptions and assembly of the dense discrete systems.

Three problem families share one weight table:

- Dirichlet: data prescribed on the closed exterior |x| >= half_width moves
  into the right hand side (exterior sums plus the beyond-support boundary
  integral B).
- Real line: the solution is modelled beyond the window by a power decay
  profile anchored at the window edge; the exterior sums and the
  beyond-support integrals attach to the first and last matrix columns, in
  that printed normalization (for even data the reflected attachment gives
  the identical solution).
- Neumann flux closure: rewritten as a real line problem whose forcing takes
  the exterior branch on |x| >= split_radius (closed exterior convention).

All matrices are dense; sizes stay in the low thousands for every shipped
experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .expint import exp_int
from .grids import Grid, WeightSet, compute_weights
from .kernels import Kernel
from .quadrature import DecayCertificate, adaptive_quad

__all__ = [
    "DecayModel",
    "GrowthCertificate",
    "DirichletProblem",
    "RealLineProblem",
    "NeumannProblem",
    "AnyProblem",
    "DiscreteSystem",
    "dirichlet_boundary_term",
    "realline_boundary_terms",
    "neumann_to_realline",
    "assemble_dirichlet",
    "assemble_realline",
    "assemble",
]


@dataclass(frozen=True)
class DecayModel:
    """Exterior model u(x) ~ u(edge) * (edge/|x|)**exponent, exponent > 0."""

    exponent: float

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise ValueError("decay exponent must be positive")

    def profile(self, x, edge: float) -> np.ndarray:
        ax = np.maximum(np.abs(np.asarray(x, dtype=float)), edge)
        return (edge / ax) ** self.exponent


@dataclass(frozen=True)
class GrowthCertificate:
    """Bound |g(x)| <= constant * (1 + |x|)**degree on the exterior."""

    degree: float
    constant: float

    def __post_init__(self) -> None:
        if self.degree < 0 or self.constant <= 0:
            raise ValueError("growth certificate needs degree >= 0 and constant > 0")


@dataclass(frozen=True)
class DirichletProblem:
    kernel: Kernel
    forcing: Callable[[np.ndarray], np.ndarray]
    exterior_data: Callable[[np.ndarray], np.ndarray]
    closed_boundary_term: Callable[[np.ndarray, float], np.ndarray] | None = None
    exterior_growth: GrowthCertificate | None = None


@dataclass(frozen=True)
class RealLineProblem:
    kernel: Kernel
    forcing: Callable[[np.ndarray], np.ndarray]
    decay: DecayModel


@dataclass(frozen=True)
class NeumannProblem:
    kernel: Kernel
    forcing: Callable[[np.ndarray], np.ndarray]
    exterior_forcing: Callable[[np.ndarray], np.ndarray]
    split_radius: float
    decay: DecayModel

    def __post_init__(self) -> None:
        if not self.split_radius > 0:
            raise ValueError("split radius must be positive")


AnyProblem = Union[DirichletProblem, RealLineProblem, NeumannProblem]


@dataclass
class DiscreteSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    variant: str
    grid: Grid
    kernel: Kernel
    weights: WeightSet
    indices: np.ndarray
    decay: DecayModel | None = None
    exterior_data: Callable[[np.ndarray], np.ndarray] | None = None


def _toeplitz_core(weights: WeightSet, indices: np.ndarray) -> np.ndarray:
    m = weights.grid.steps
    shift = indices[:, None] - indices[None, :] + m
    core = -weights.weights[shift]
    diag = weights.total + weights.tail_mass
    core[np.arange(indices.size), np.arange(indices.size)] += diag
    return core


def _tail_certificate_for_growth(
    kernel: Kernel, growth: GrowthCertificate, center: float
) -> DecayCertificate:
    # certificate for y -> |g(center - y) nu(y)| on a half line
    rate = kernel.decay_rate / 2.0
    base = 1.0 + abs(center)
    peak_at = max(0.0, growth.degree / rate - base)
    peak = (base + peak_at) ** growth.degree * math.exp(-rate * peak_at)
    return DecayCertificate(rate, kernel.decay_constant * growth.constant * peak * 1.0000001)


def dirichlet_boundary_term(problem: DirichletProblem, grid: Grid, i: int) -> float:
    """Boundary integral of the exterior data beyond the weight support,
    B_i = int_{|y| >= weight_radius} g(x_i - y) nu(y) dy."""
    if abs(i) > grid.steps // 2 - 1:
        raise ValueError("boundary term index %d outside the solution range" % i)
    xi = grid.node(i)
    radius = grid.weight_radius
    if problem.closed_boundary_term is not None:
        return float(np.asarray(problem.closed_boundary_term(np.asarray([xi]), radius))[0])
    if problem.exterior_growth is None:
        raise ValueError(
            "dirichlet boundary term needs a closed form or a growth certificate "
            "for the exterior data"
        )
    cert = _tail_certificate_for_growth(problem.kernel, problem.exterior_growth, xi)
    g = problem.exterior_data
    nu = problem.kernel.evaluate
    # the integral is itself a kernel tail, so an absolute tolerance must be
    # scaled to the certified tail size or the answer drowns in slack
    tol = max(1e-12 * cert.tail_bound(radius), 1e-300)
    right = adaptive_quad(
        lambda y: np.asarray(g(xi - y), dtype=float) * nu(y),
        radius,
        math.inf,
        tol,
        rel=1e-12,
        decay=cert,
    ).value
    left = adaptive_quad(
        lambda y: np.asarray(g(xi + y), dtype=float) * nu(y),
        radius,
        math.inf,
        tol,
        rel=1e-12,
        decay=cert,
    ).value
    return right + left


def realline_boundary_terms(
    kernel: Kernel, grid: Grid, decay: DecayModel, method: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """Beyond-support exterior moments (B1, B2) for the real line system,
    normalized by the decay profile at the window edge.

    B1_i covers the left tail y <= -weight_radius, B2 the mirror image; with
    a symmetric kernel B2_i = B1_{-i}.  The exponential kernel admits a
    closed form through exp_int; anything else integrates numerically.
    """
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError("unknown boundary method %r" % method)
    k = grid.steps // 2
    xi = grid.spacing * np.arange(-k, k + 1)
    radius = grid.weight_radius
    scale = grid.half_width ** decay.exponent
    closed_ok = kernel.name == "laplace-exponential"
    if method == "closed" and not closed_ok:
        raise ValueError("no closed exterior moment for kernel %r" % kernel.name)
    if closed_ok and method != "quadrature":
        arg = radius + xi
        b1 = scale * 0.5 * np.exp(xi) * arg ** (1.0 - decay.exponent) * exp_int(
            decay.exponent, arg
        )
        return b1, b1[::-1].copy()

    q = decay.exponent
    floor = radius - grid.half_width
    cert = DecayCertificate(
        kernel.decay_rate, kernel.decay_constant * floor ** (-q) * 1.0000001
    )
    # scale the tolerance to the certified tail size; these integrals sit far
    # below any fixed absolute tolerance
    tol = max(1e-12 * cert.tail_bound(radius), 1e-300)
    b1 = np.empty(xi.size)
    for r, center in enumerate(xi):
        b1[r] = (
            scale
            * adaptive_quad(
                lambda s: np.abs(center + s) ** (-q) * kernel.evaluate(s),
                radius,
                math.inf,
                tol,
                rel=1e-12,
                decay=cert,
            ).value
        )
    return b1, b1[::-1].copy()


def assemble_dirichlet(
    problem: DirichletProblem, grid: Grid, weights: WeightSet | None = None
) -> DiscreteSystem:
    if weights is None:
        weights = compute_weights(problem.kernel, grid)
    m = grid.steps
    k = m // 2
    h = grid.spacing
    idx = np.arange(-k + 1, k)
    core = _toeplitz_core(weights, idx)

    w = weights.weights
    g = problem.exterior_data
    # exterior node data, right side m in [k, k+m] and mirrored left side
    g_right = np.asarray(g(h * np.arange(k, k + m + 1)), dtype=float)
    g_left = np.asarray(g(-h * np.arange(k, k + m + 1)), dtype=float)

    exterior = np.empty(idx.size)
    for r, i in enumerate(idx):
        js = np.arange(-m, i - k + 1)
        right_sum = w[js + m] @ g_right[i - js - k]
        js = np.arange(i + k, m + 1)
        left_sum = w[js + m] @ g_left[js - i - k]
        exterior[r] = right_sum + left_sum

    radius = grid.weight_radius
    if problem.closed_boundary_term is not None:
        boundary = np.asarray(problem.closed_boundary_term(h * idx, radius), dtype=float)
    else:
        boundary = np.array([dirichlet_boundary_term(problem, grid, int(i)) for i in idx])

    rhs = np.asarray(problem.forcing(h * idx), dtype=float) + exterior + boundary
    return DiscreteSystem(
        matrix=core,
        rhs=rhs,
        variant="dirichlet",
        grid=grid,
        kernel=problem.kernel,
        weights=weights,
        indices=idx,
        exterior_data=g,
    )


def assemble_realline(
    problem: RealLineProblem,
    grid: Grid,
    weights: WeightSet | None = None,
    *,
    variant: str = "realline",
) -> DiscreteSystem:
    if weights is None:
        weights = compute_weights(problem.kernel, grid)
    m = grid.steps
    k = m // 2
    h = grid.spacing
    idx = np.arange(-k, k + 1)
    core = _toeplitz_core(weights, idx)

    w = weights.weights
    q = problem.decay.exponent
    # decay profile at exterior nodes, strictly beyond the window edge
    mm = np.arange(k, k + m + 1)
    prof = np.zeros(mm.size)
    prof[1:] = (grid.half_width / (h * mm[1:])) ** q

    right_sums = np.empty(idx.size)
    left_sums = np.empty(idx.size)
    for r, i in enumerate(idx):
        js = np.arange(-m, i - k)
        right_sums[r] = w[js + m] @ prof[i - js - k] if js.size else 0.0
        js = np.arange(i + k + 1, m + 1)
        left_sums[r] = w[js + m] @ prof[js - i - k] if js.size else 0.0

    b1, b2 = realline_boundary_terms(problem.kernel, grid, problem.decay)
    core[:, 0] -= right_sums + b1
    core[:, -1] -= left_sums + b2

    rhs = np.asarray(problem.forcing(h * idx), dtype=float)
    return DiscreteSystem(
        matrix=core,
        rhs=rhs,
        variant=variant,
        grid=grid,
        kernel=problem.kernel,
        weights=weights,
        indices=idx,
        decay=problem.decay,
    )


def neumann_to_realline(problem: NeumannProblem) -> RealLineProblem:
    """Close the flux problem: the forcing takes the exterior branch on the
    closed region |x| >= split_radius and the interior branch inside."""
    split = problem.split_radius
    interior = problem.forcing
    exterior = problem.exterior_forcing

    def closed_forcing(x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < split
        ext_arg = np.where(inside, split, x)
        int_arg = np.where(inside, x, 0.0)
        return np.where(
            inside,
            np.asarray(interior(int_arg), dtype=float),
            np.asarray(exterior(ext_arg), dtype=float),
        )

    return RealLineProblem(kernel=problem.kernel, forcing=closed_forcing, decay=problem.decay)


def assemble(problem: AnyProblem, grid: Grid, weights: WeightSet | None = None) -> DiscreteSystem:
    if isinstance(problem, DirichletProblem):
        return assemble_dirichlet(problem, grid, weights)
    if isinstance(problem, RealLineProblem):
        return assemble_realline(problem, grid, weights)
    if isinstance(problem, NeumannProblem):
        if not problem.split_radius < grid.half_width:
            raise ValueError(
                "neumann split radius %.6g must lie strictly inside the grid half width %.6g"
                % (problem.split_radius, grid.half_width)
            )
        return assemble_realline(neumann_to_realline(problem), grid, weights, variant="neumann")
    raise TypeError("unknown problem type %r" % type(problem).__name__)
