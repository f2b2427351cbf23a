"""Independent oracles and random oscillator generators shared by the tests."""

import math

import numpy as np

from anharm.model import OscillatorSpec, UnitSystem
from anharm.stationary import solve_branches


def bisection_roots(f, lo=0.0, hi=10.0, step=1e-4, tol=1e-12):
    """Roots of a scalar function from sign changes on a uniform grid, refined by bisection."""
    grid = np.arange(lo + step, hi + step / 2, step)
    values = np.array([f(x) for x in grid])
    roots = []
    for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        a, b = grid[k], grid[k + 1]
        fa = f(a)
        while b - a > tol:
            mid = 0.5 * (a + b)
            fm = f(mid)
            if np.sign(fm) == np.sign(fa):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(0.5 * (a + b))
    return roots


def random_spec(rng, order, negative=False, eta=0.1):
    """Coefficients with log-uniform magnitudes that shrink geometrically with the power."""
    a2 = math.exp(rng.uniform(math.log(0.2), math.log(2.0)))
    coeffs = {2: a2}
    previous = a2
    for i in range(3, order + 1):
        ratio = math.exp(rng.uniform(math.log(0.02), math.log(0.08)))
        sign = -1.0 if negative or rng.random() < 0.5 else 1.0
        previous = previous * ratio
        coeffs[i] = sign * previous
    return OscillatorSpec(units=UnitSystem(), order=order, intrinsic_coeffs=coeffs, n_max=5, eta=eta)


def random_accepted_specs(count, seed, negative=False, orders=(3, 4, 5, 6, 7, 8)):
    """``count`` random specs that keep at least one branch through the convergence filter."""
    rng = np.random.default_rng(seed)
    specs = []
    while len(specs) < count:
        spec = random_spec(rng, int(rng.choice(orders)), negative=negative)
        if any(b.accepted for b in solve_branches(spec)):
            specs.append(spec)
    return specs


# filled by test_acceptance.py, echoed in the terminal summary by conftest.py
ACCEPTANCE_LINES = []
