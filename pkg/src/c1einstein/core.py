"""Right-hand sides and algebraic identities for diagonal cohomogeneity-one
Einstein metrics g = dt^2 + sum_i f_i(t)^2 sigma_i^2 with dsigma_i = -2 sigma_j ^ sigma_k.

All triple-valued quantities are numpy arrays of shape (3,), indexed cyclically:
for index i the companions are j = (i+1) % 3 and k = (i+2) % 3.  Every function
here is pure; nothing is mutated.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FrameState",
    "GapState",
    "triple",
    "lr_from_frame",
    "lr_rhs",
    "frame_rhs",
    "constraint_residual",
    "ab_coeffs",
    "ab_rhs",
    "curv_eigs",
    "curv_eigs_rhs",
    "gap_rhs",
    "uij_residual",
]

# pair order used for u_ij = log(f_i/f_j) residuals
UIJ_PAIRS = ((0, 1), (1, 2), (2, 0))


def triple(x1, x2, x3=None):
    """Build a (3,) float array; accepts three scalars or one sequence."""
    if x3 is None:
        a = np.asarray(x1, dtype=float)
    else:
        a = np.array([x1, x2, x3], dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite triple {a}")
    return a


def _cyc(x):
    """Return (x_j, x_k) companions of x_i under cyclic indexing."""
    return np.roll(x, -1), np.roll(x, -2)


@dataclass(frozen=True)
class FrameState:
    """Metric profile at one arc-length value: t, f_i and df_i/dt."""

    t: float
    f: np.ndarray
    df: np.ndarray

    def require_positive(self):
        bad = np.nonzero(np.asarray(self.f) <= 0.0)[0]
        if bad.size:
            raise ValueError(
                f"f_{bad[0] + 1} = {self.f[bad[0]]} is not positive at t = {self.t}"
            )


@dataclass(frozen=True)
class GapState:
    """Two curvature-eigenvalue gaps; role 'F' pairs with A, 'E' with B."""

    g1: float
    g2: float
    role: str  # "F": (a1-a2, a1-a3); "E": (b2-b1, b2-b3)


def _check_positive(f):
    f = np.asarray(f, dtype=float)
    bad = np.nonzero(f <= 0.0)[0]
    if bad.size:
        raise ValueError(f"f_{bad[0] + 1} = {f[bad[0]]} must be positive")
    return f


def lr_from_frame(f, df):
    """Logarithmic derivatives L_i = f_i'/f_i, ratios R_i = f_i/(f_j f_k),
    and the principal-orbit mean curvature S = sum L_i."""
    f = _check_positive(f)
    df = np.asarray(df, dtype=float)
    fj, fk = _cyc(f)
    L = df / f
    R = f / (fj * fk)
    return L, R, float(np.sum(L))


def lr_rhs(L, R, lam):
    """First-order evolution of (L, R):
    L_i' = -S L_i + 2 R_i^2 - 2 (R_j - R_k)^2 - lambda,
    R_i' = R_i (L_i - L_j - L_k)."""
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    S = np.sum(L)
    Rj, Rk = _cyc(R)
    Lj, Lk = _cyc(L)
    dL = -S * L + 2.0 * R**2 - 2.0 * (Rj - Rk) ** 2 - lam
    dR = R * (L - Lj - Lk)
    return dL, dR


def frame_rhs(f, df, lam):
    """Second derivatives f_i'' = f_i (L_i' + L_i^2); the integrator's native form."""
    L, R, _ = lr_from_frame(f, df)
    dL, _ = lr_rhs(L, R, lam)
    return np.asarray(f, dtype=float) * (dL + L**2)


def constraint_residual(L, R, lam):
    """Residual of the conserved constraint
    lambda = -sum R_i^2 + 2 sum_{i<j} R_i R_j - sum_{i<j} L_i L_j."""
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    sum_RR = R[0] * R[1] + R[1] * R[2] + R[2] * R[0]
    sum_LL = L[0] * L[1] + L[1] * L[2] + L[2] * L[0]
    return float(-np.sum(R**2) + 2.0 * sum_RR - sum_LL - lam)


def ab_coeffs(L, R):
    """Connection coefficients on Lambda^2_+/-:
    A_i = L_i + R_j + R_k - R_i,  B_i = L_i - R_j - R_k + R_i."""
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    Rj, Rk = _cyc(R)
    A = L + Rj + Rk - R
    B = L - Rj - Rk + R
    return A, B


def ab_rhs(A, B, R):
    """Evolution of the connection coefficients (cross-check use only):
    A_i' = (R_j + R_k - 3 R_i) A_i - A_i^2 + A_j A_k,
    B_i' = (3 R_i - R_j - R_k) B_i - B_i^2 + B_j B_k."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    R = np.asarray(R, dtype=float)
    Rj, Rk = _cyc(R)
    Aj, Ak = _cyc(A)
    Bj, Bk = _cyc(B)
    dA = (Rj + Rk - 3.0 * R) * A - A**2 + Aj * Ak
    dB = (3.0 * R - Rj - Rk) * B - B**2 + Bj * Bk
    return dA, dB


def curv_eigs(R, A, B):
    """Curvature-operator eigenvalues in the invariant frames:
    a_i = 2 R_i A_i - A_j A_k on Lambda^2_+,
    b_i = -2 R_i B_i - B_j B_k on Lambda^2_-."""
    R = np.asarray(R, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Aj, Ak = _cyc(A)
    Bj, Bk = _cyc(B)
    a = 2.0 * R * A - Aj * Ak
    b = -2.0 * R * B - Bj * Bk
    return a, b


def curv_eigs_rhs(a, b, A, B):
    """Evolution of the eigenvalue triples (cross-check use only):
    a_i' = -A_j (a_i - a_k) - A_k (a_i - a_j), likewise b with B."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    aj, ak = _cyc(a)
    bj, bk = _cyc(b)
    Aj, Ak = _cyc(A)
    Bj, Bk = _cyc(B)
    da = -Aj * (a - ak) - Ak * (a - aj)
    db = -Bj * (b - bk) - Bk * (b - bj)
    return da, db


def gap_rhs(g: GapState, coeffs) -> GapState:
    """Derivative of an eigenvalue-gap pair.

    Role "F" evolves (F2, F3) = (a1-a2, a1-a3) with the A coefficients:
        F2' = (A1-A2) F3 - (A1+2A3) F2,   F3' = (A1-A3) F2 - (A1+2A2) F3.
    Role "E" evolves (E1, E3) = (b2-b1, b2-b3) with the B coefficients:
        E1' = (B2-B1) E3 - (B2+2B3) E1,   E3' = (B2-B3) E1 - (2B1+B2) E3.
    """
    c = np.asarray(coeffs, dtype=float)
    if g.role == "F":
        d1 = (c[0] - c[1]) * g.g2 - (c[0] + 2.0 * c[2]) * g.g1
        d2 = (c[0] - c[2]) * g.g1 - (c[0] + 2.0 * c[1]) * g.g2
    elif g.role == "E":
        d1 = (c[1] - c[0]) * g.g2 - (c[1] + 2.0 * c[2]) * g.g1
        d2 = (c[1] - c[2]) * g.g1 - (2.0 * c[0] + c[1]) * g.g2
    else:
        raise ValueError(f"unknown gap role {g.role!r}")
    return GapState(float(d1), float(d2), g.role)


def uij_residual(f, df, ddf):
    """Residual of the ratio equation for u_ij = log(f_i/f_j), pairs
    (1,2), (2,3), (3,1):

        u_ij'' + S u_ij' - 4 (f_i^2 - f_j^2)(f_i^2 + f_j^2 - f_k^2) / (f1 f2 f3)^2.

    Zero along Einstein solutions."""
    f = _check_positive(f)
    df = np.asarray(df, dtype=float)
    ddf = np.asarray(ddf, dtype=float)
    L = df / f
    S = np.sum(L)
    # u_i'' relative to a fixed reference: d/dt(L_i) = f_i''/f_i - L_i^2
    dL = ddf / f - L**2
    prod2 = np.prod(f**2)
    out = np.empty(3)
    for m, (i, j) in enumerate(UIJ_PAIRS):
        k = 3 - i - j
        upp = dL[i] - dL[j]
        up = L[i] - L[j]
        src = 4.0 * (f[i] ** 2 - f[j] ** 2) * (f[i] ** 2 + f[j] ** 2 - f[k] ** 2) / prod2
        out[m] = upp + S * up - src
    return out
