"""Independent reference computations used by the tests.

Nothing here imports the code paths it checks.
"""

import math

import numpy as np
from scipy.integrate import quad


def t_density(x, df):
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - (df + 1) / 2 * math.log1p(x * x / df))


def t_two_sided_quad(t, df):
    """P(|T| >= |t|) by adaptive quadrature of the density."""
    t = abs(t)
    if t <= 5:
        inner, _ = quad(t_density, 0.0, t, args=(df,), epsabs=1e-14, epsrel=1e-13, limit=200)
        return 1.0 - 2.0 * inner
    tail, _ = quad(t_density, t, math.inf, args=(df,), epsabs=1e-15, epsrel=1e-12, limit=200)
    return 2.0 * tail


def level3_key(code5, term):
    stem = code5.rstrip(".")
    if len(stem) <= 3:
        return code5 + term
    return stem[:3].ljust(5, ".") + "00"


def brute_force_matrices(index, events, keys, mode, window):
    """Dense A and B by scanning every (patient, key, event) triple."""
    patients = sorted(index)
    a = np.zeros((len(patients), len(keys)), dtype=np.int64)
    b = np.zeros_like(a)
    for i, pid in enumerate(patients):
        anchor = index[pid]
        anchor = anchor if isinstance(anchor, int) else anchor.toordinal()
        for j, key in enumerate(keys):
            for e in events:
                if e.patient_id != pid:
                    continue
                code5, term = e.event_code.code, e.event_code.term
                k = level3_key(code5, term) if mode == "level13" else code5 + term
                if k != key:
                    continue
                day = e.date if isinstance(e.date, int) else e.date.toordinal()
                if anchor - window <= day < anchor:
                    a[i, j] = 1
                if anchor < day <= anchor + window:
                    b[i, j] = 1
    return a, b


def brute_force_groups(dense, group_size):
    n = dense.shape[0]
    n_groups = max(1, n // group_size)
    rows = []
    for g in range(n_groups):
        lo = g * group_size
        hi = n if g == n_groups - 1 else lo + group_size
        rows.append(dense[lo:hi].sum(axis=0))
    return np.array(rows)
