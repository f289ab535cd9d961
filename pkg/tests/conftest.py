import numpy as np
import pytest


def fd_grad(f, X, h=1e-5):
    """Central finite differences of a scalar function of an array."""
    X = np.array(X, dtype=float)
    G = np.zeros_like(X)
    flat = X.reshape(-1)
    g = G.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = f(X)
        flat[k] = old - h
        fm = f(X)
        flat[k] = old
        g[k] = (fp - fm) / (2 * h)
    return G


def fd_jac(grad, X, h=1e-5):
    """Finite-difference Jacobian of an array-valued gradient, flattened to (n, n)."""
    X = np.array(X, dtype=float)
    flat = X.reshape(-1)
    cols = []
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        gp = np.asarray(grad(X)).reshape(-1)
        flat[k] = old - h
        gm = np.asarray(grad(X)).reshape(-1)
        flat[k] = old
        cols.append((gp - gm) / (2 * h))
    return np.column_stack(cols)


def rel_err(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def mc(values):
    """Mean and standard error."""
    values = np.asarray(values, float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ---------------------------------------------------------------

CRITERIA = []


def record(label, passed, detail=""):
    """Store one acceptance line; all lines are printed in the terminal summary."""
    line = f"criterion {label}: {'PASS' if passed else 'FAIL'}" + (f"  {detail}" if detail else "")
    CRITERIA.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
