import numpy as np
import pytest

from brillouin_omit.model import REFERENCE_PARAMS

KAPPA, GAMMA = 3.438e6, 7.130e6
CALIB_203 = 2.03e12

_acceptance = []


def langevin_oracle(kappa, gamma, g, delta, x, amp=1.0):
    """a_s, b_m and R from a stacked 2x2 linear solve of the steady-state equations.

    ``x`` is the probe offset from omega_m.  Independent of the closed form used
    by the package.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.zeros((x.size, 2, 2), complex)
    m[:, 0, 0] = kappa / 2 - 1j * (x - delta)
    m[:, 0, 1] = m[:, 1, 0] = -1j * g
    m[:, 1, 1] = gamma / 2 - 1j * x
    rhs = np.zeros((x.size, 2, 1), complex)
    rhs[:, 0, 0] = 1
    sol = np.linalg.solve(m, rhs)[:, :, 0]
    a, b = sol[:, 0], sol[:, 1]
    return a, b, np.abs(1 - amp * kappa / 2 * a) ** 2


def eig_oracle(kappa, gamma, g, delta):
    """Hybrid-mode offsets as eigenvalues of the dynamical matrix."""
    k = np.array([[kappa / 2 + 1j * delta, -1j * g], [-1j * g, gamma / 2]])
    return sorted(-1j * np.linalg.eigvals(k), key=lambda z: (-z.real, z.imag))


@pytest.fixture
def device():
    return REFERENCE_PARAMS


@pytest.fixture
def record():
    """Record one acceptance line: ``record("A1", ok, detail)``."""
    def _rec(tag, ok, detail):
        _acceptance.append((tag, bool(ok), detail))
        print(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return _rec


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for tag, ok, detail in sorted(_acceptance):
        terminalreporter.write_line(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
