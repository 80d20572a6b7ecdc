import cmath

import numpy as np
import pytest

from jostscatter.errors import IntegrationError, ValidationError
from jostscatter.odeint import (
    ComplexPath,
    IntegratorConfig,
    integrate,
    two_segment_path,
)


def test_zero_rhs_exact():
    y0 = np.array([[1.0 + 2.0j, 0.5j], [0.0, -1.0]])
    path = ComplexPath(vertices=(0.0, 1.0, 1.0 + 1.0j))
    res = integrate(lambda r, y: np.zeros_like(y), path, y0)
    assert np.array_equal(res.state, y0)


def test_linear_exponential():
    path = ComplexPath(vertices=(0.0, 1.0))
    res = integrate(lambda r, y: 1j * y, path, np.array([1.0 + 0j]))
    assert res.state[0] == pytest.approx(cmath.exp(1j), abs=1e-9)


def test_separable_closed_form_on_complex_path():
    # y' = 2 r y  ->  y = exp(r^2); endpoint (1+i)^2 = 2i
    path = ComplexPath(vertices=(0.0, 1.0 + 1.0j))
    res = integrate(lambda r, y: 2.0 * r * y, path, np.array([1.0 + 0j]))
    assert res.state[0] == pytest.approx(cmath.exp(2j), abs=1e-9)


def test_path_independence_for_holomorphic_rhs():
    rhs = lambda r, y: 2.0 * r * y  # noqa: E731
    y0 = np.array([1.0 + 0j])
    direct = integrate(rhs, ComplexPath(vertices=(0.0, 1.0 + 1.0j)), y0)
    dogleg = integrate(rhs, ComplexPath(vertices=(0.0, 1.0, 1.0 + 1.0j)), y0)
    tol = 10.0 * 1e-10
    assert abs(direct.state[0] - dogleg.state[0]) < tol


def test_halving_tolerances_never_increases_error():
    rhs = lambda r, y: 2.0 * r * y  # noqa: E731
    exact = cmath.exp(2j)
    errs = []
    tol = 1e-6
    for _ in range(4):
        config = IntegratorConfig(abs_tol=tol, rel_tol=tol)
        res = integrate(rhs, ComplexPath(vertices=(0.0, 1.0 + 1.0j)),
                        np.array([1.0 + 0j]), config)
        errs.append(abs(res.state[0] - exact))
        tol /= 2.0
    for a, b in zip(errs, errs[1:]):
        assert b <= a + 1e-15


def test_reversibility():
    rhs = lambda r, y: (1j - 0.3) * y  # noqa: E731
    y0 = np.array([1.0 + 0.5j])
    fwd = integrate(rhs, ComplexPath(vertices=(0.0, 2.0 + 1.0j)), y0)
    back = integrate(rhs, ComplexPath(vertices=(2.0 + 1.0j, 0.0)), fwd.state)
    assert abs(back.state[0] - y0[0]) < 10.0 * 1e-10


def test_step_underflow_at_singularity():
    # logarithmic blow-up on the path forces the step below machine size
    rhs = lambda r, y: np.array([1.0 / (r - 0.5)])  # noqa: E731
    with pytest.raises(IntegrationError, match="underflow"):
        integrate(rhs, ComplexPath(vertices=(0.0, 1.0)), np.array([1.0 + 0j]))


def test_max_steps_budget():
    config = IntegratorConfig(max_steps=3)
    with pytest.raises(IntegrationError, match="budget"):
        integrate(lambda r, y: 1j * y, ComplexPath(vertices=(0.0, 50.0)),
                  np.array([1.0 + 0j]), config)


def test_record_vertices():
    path = ComplexPath(vertices=(0.0, 0.5, 1.0))
    res = integrate(lambda r, y: 1j * y, path, np.array([1.0 + 0j]),
                    record_vertices=True)
    assert len(res.vertex_states) == 3
    assert res.vertex_states[1][0] == pytest.approx(cmath.exp(0.5j), abs=1e-9)


def test_path_validation():
    with pytest.raises(ValidationError):
        ComplexPath(vertices=(1.0,))
    with pytest.raises(ValidationError):
        ComplexPath(vertices=(1.0, 1.0))
    with pytest.raises(ValidationError):
        ComplexPath(vertices=(0.0, 1.0), rotation_angle=2.0)
    with pytest.raises(ValidationError):
        two_segment_path(r_min=1.0, b=0.5, R=30.0, theta=0.0)


def test_config_validation():
    with pytest.raises(ValidationError):
        IntegratorConfig(abs_tol=0.0)
    with pytest.raises(ValidationError):
        IntegratorConfig(max_steps=0)


def test_two_segment_path_geometry():
    path = two_segment_path(1e-4, 1.0, 30.0, 0.3)
    assert path.vertices[0] == 1e-4
    assert path.vertices[1] == 1.0
    end = path.vertices[2]
    assert abs(end - (1.0 + 29.0 * cmath.exp(0.3j))) < 1e-12
