"""Dense simplex over exact rational arithmetic.

Solves  max c.x  s.t.  A x <= b,  x >= 0  with every coefficient a
fractions.Fraction.  All right-hand sides must be nonnegative, which makes
the all-slack basis feasible and a single phase sufficient; the capacity
LPs in this package are all of that form.

Pivoting uses Dantzig's rule (most positive reduced cost, lowest column
index on ties) and falls back to Bland's rule after a run of degenerate
pivots, which guarantees termination with exact arithmetic.
"""

from fractions import Fraction


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


_BLAND_TRIGGER = 64


def solve_max(c, A, b, max_pivots=100000):
    """Maximize c.x subject to A x <= b, x >= 0.  Returns (value, x).

    c: list of n Fractions; A: list of m rows of n Fractions; b: list of m
    nonnegative Fractions.
    """
    m = len(A)
    n = len(c)
    c = [Fraction(v) for v in c]
    b = [Fraction(v) for v in b]
    for bi in b:
        if bi < 0:
            raise Infeasible("negative right-hand side; all-slack basis infeasible")
    # tableau rows: m constraint rows + objective row; columns: n structural
    # + m slack + 1 rhs
    width = n + m + 1
    rows = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        if len(row) != n:
            raise ValueError("row %d has %d entries, expected %d" % (i, len(row), n))
        row += [Fraction(1) if j == i else Fraction(0) for j in range(m)]
        row.append(b[i])
        rows.append(row)
    obj = [-ci for ci in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = list(range(n, n + m))

    degenerate_run = 0
    for _ in range(max_pivots):
        bland = degenerate_run >= _BLAND_TRIGGER
        # entering column: reduced cost obj[j] < 0 means improving
        enter = -1
        if bland:
            for j in range(n + m):
                if obj[j] < 0:
                    enter = j
                    break
        else:
            best = Fraction(0)
            for j in range(n + m):
                if obj[j] < best:
                    best = obj[j]
                    enter = j
        if enter < 0:
            x = [Fraction(0)] * n
            for i, bv in enumerate(basis):
                if bv < n:
                    x[bv] = rows[i][-1]
            value = sum(ci * xi for ci, xi in zip(c, x))
            return value, x
        # ratio test: smallest rhs/coeff over positive coeffs; ties toward
        # the smallest basis variable index
        leave = -1
        best_ratio = None
        for i in range(m):
            coeff = rows[i][enter]
            if coeff > 0:
                ratio = rows[i][-1] / coeff
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise Unbounded("entering column %d has no positive coefficients" % enter)
        degenerate_run = degenerate_run + 1 if best_ratio == 0 else 0
        _pivot(rows, obj, basis, leave, enter)
    raise RuntimeError("simplex did not terminate within %d pivots" % max_pivots)


def _pivot(rows, obj, basis, leave, enter):
    piv_row = rows[leave]
    piv = piv_row[enter]
    inv = Fraction(1) / piv
    rows[leave] = [v * inv for v in piv_row]
    piv_row = rows[leave]
    for i in range(len(rows)):
        if i == leave:
            continue
        factor = rows[i][enter]
        if factor:
            rows[i] = [v - factor * p for v, p in zip(rows[i], piv_row)]
    factor = obj[enter]
    if factor:
        for j in range(len(obj)):
            obj[j] -= factor * piv_row[j]
    basis[leave] = enter
