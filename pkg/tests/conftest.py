from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from pcgt.synthetic import surface_cloud


def charpoly_exact(mat):
    """Characteristic polynomial coefficients (leading 1) via Faddeev-LeVerrier in exact rationals."""
    n = len(mat)
    a = [[Fraction(float(v)) for v in row] for row in mat]
    coeffs = [Fraction(1)]
    m = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        am = [[sum(a[i][l] * m[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            am[i][i] += coeffs[-1]
        m = am
        am2 = [[sum(a[i][l] * m[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        c = -sum(am2[i][i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def charpoly_roots(mat, dps=60):
    """Eigenvalues as roots of the exact characteristic polynomial.

    The polynomial is split into square-free factors first, so repeated
    eigenvalues (several components, coincident points) stay well posed.
    """
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in charpoly_exact(mat)], x)
    _, factors = sympy.sqf_list(poly)
    roots = []
    with mpmath.workdps(dps):
        for factor, mult in factors:
            coeffs = [mpmath.mpf(int(c.p)) / int(c.q) for c in factor.all_coeffs()]
            if len(coeffs) == 1:
                continue
            found = mpmath.polyroots(coeffs, maxsteps=500, extraprec=400) if len(coeffs) > 2 else [-coeffs[1] / coeffs[0]]
            roots.extend(float(mpmath.re(r)) for r in found for _ in range(mult))
    return np.sort(np.array(roots))


def union_find_components(adjacency) -> int:
    n = len(adjacency)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if adjacency[i][j] != 0:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    return len({find(i) for i in range(n)})


@pytest.fixture(scope="session")
def small_cloud():
    return surface_cloud(3000, seed=7)


@pytest.fixture(scope="session")
def medium_cloud():
    return surface_cloud(12000, seed=3)


_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.skipped and not rep.failed):
        return
    number, text = mark.args
    status = "SKIP" if rep.skipped else ("FAIL" if rep.failed else "PASS")
    note = getattr(item, "criterion_note", "")
    entry = _CRITERIA.setdefault(number, [text, "PASS", []])
    if status == "FAIL" or (status == "SKIP" and entry[1] == "PASS"):
        entry[1] = status
    if note:
        entry[2].append(note)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, status, notes = _CRITERIA[number]
        line = f"criterion {number:>2} {status}: {text}"
        if notes:
            line += " [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
