"""Adaptive Runge-Kutta-Fehlberg 4(5) integration of complex matrix-valued
first-order systems along piecewise-linear paths in the complex plane.

Each path segment r(t) = r_a + t*(r_b - r_a), t in [0, 1], is traversed with
the classic six-stage Fehlberg tableau; the right-hand side is chain-ruled by
the (complex) segment direction so that step-size control runs on real t.
The fifth-order solution is propagated and the embedded fourth-order
difference drives the per-component error test
``|err_i| <= abs_tol + rel_tol * |y_i|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, ValidationError

THETA_LIMIT = 0.5 * math.pi

# Classic Fehlberg 4(5) tableau.
RKF_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
RKF_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
RKF_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
RKF_E = RKF_B5 - RKF_B4

_MIN_STEP = 1e-14
_SAFETY = 0.9
_GROW_MAX = 5.0
_SHRINK_MIN = 0.2


@dataclass(frozen=True)
class ComplexPath:
    """Piecewise-linear integration path r(t) through the complex plane.

    The canonical two-segment path runs from r_min to b on the real axis and
    then along the rotated ray b -> b + (R - b)*exp(i*theta).
    """

    vertices: tuple[complex, ...]
    rotation_angle: float = 0.0

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 2:
            raise ValidationError("a path needs at least two vertices")
        for a, b in zip(verts, verts[1:]):
            if a == b:
                raise ValidationError("consecutive path vertices must be distinct")
        if not abs(self.rotation_angle) < THETA_LIMIT:
            raise ValidationError("|rotation angle| must be below pi/2")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "rotation_angle", float(self.rotation_angle))

    @property
    def segments(self) -> tuple[tuple[complex, complex], ...]:
        return tuple(zip(self.vertices, self.vertices[1:]))


def two_segment_path(r_min: float, b: float, R: float, theta: float) -> ComplexPath:
    """The canonical path r_min -> b -> b + (R - b)*exp(i*theta)."""
    if not (0 < r_min < b < R):
        raise ValidationError("path geometry requires 0 < r_min < b < R")
    end = b + (R - b) * complex(math.cos(theta), math.sin(theta))
    return ComplexPath(vertices=(complex(r_min), complex(b), end), rotation_angle=theta)


@dataclass(frozen=True)
class IntegratorConfig:
    """Error tolerances and work bounds for the adaptive integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    initial_step: float = 1e-3
    max_steps: int = 2_000_000

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.initial_step) <= 0 or self.max_steps <= 0:
            raise ValidationError("integrator tolerances and bounds must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class IntegrationResult:
    """Final state plus diagnostics of one integrate() call."""

    state: np.ndarray
    steps: int
    max_error: float
    vertex_states: tuple[np.ndarray, ...] = ()


def integrate(
    rhs,
    path: ComplexPath,
    initial_state,
    config: IntegratorConfig = DEFAULT_CONFIG,
    record_vertices: bool = False,
) -> IntegrationResult:
    """Propagate ``initial_state`` along ``path`` under dy/dr = rhs(r, y).

    ``rhs`` maps (complex r, complex ndarray y) to an ndarray of the same
    shape.  The local error per step is kept below
    ``abs_tol + rel_tol * |component|`` in every component.

    Raises :class:`IntegrationError` on step underflow (a singularity or
    stiffness on the path), on exceeding ``max_steps``, and on non-finite
    state values.
    """
    y = np.array(initial_state, dtype=complex)
    steps_total = 0
    max_err = 0.0
    snapshots = [y.copy()] if record_vertices else []

    for r_a, r_b in path.segments:
        y, steps_total, max_err = _segment(
            rhs, r_a, r_b, y, config, steps_total, max_err
        )
        if record_vertices:
            snapshots.append(y.copy())

    return IntegrationResult(
        state=y,
        steps=steps_total,
        max_error=max_err,
        vertex_states=tuple(snapshots),
    )


def _segment(rhs, r_a, r_b, y, config, steps_total, max_err):
    dr = r_b - r_a
    t = 0.0
    h = min(config.initial_step, 1.0)
    k = [None] * 6

    while t < 1.0:
        if steps_total >= config.max_steps:
            raise IntegrationError(f"step budget of {config.max_steps} exhausted")
        h = min(h, 1.0 - t)
        if h < _MIN_STEP:
            raise IntegrationError(
                f"step size underflow near r = {r_a + t * dr}: "
                "singularity or stiffness on the path"
            )

        k[0] = dr * rhs(r_a + t * dr, y)
        for s in range(1, 6):
            ys = y + h * sum(a * k[j] for j, a in enumerate(RKF_A[s]))
            k[s] = dr * rhs(r_a + (t + RKF_C[s] * h) * dr, ys)

        y5 = y + h * sum(b * ki for b, ki in zip(RKF_B5, k))
        err = h * sum(e * ki for e, ki in zip(RKF_E, k))
        if not np.isfinite(y5).all():
            raise IntegrationError(f"state overflowed near r = {r_a + t * dr}")

        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y5))
        ratio = float(np.max(np.abs(err) / scale))
        steps_total += 1

        if ratio <= 1.0:
            t += h
            y = y5
            max_err = max(max_err, ratio)

        if ratio == 0.0:
            h *= _GROW_MAX
        else:
            h *= min(_GROW_MAX, max(_SHRINK_MIN, _SAFETY * ratio ** (-0.2)))

    return y, steps_total, max_err
