"""Desk-scale checks in a truncated bosonic Fock space on a Neumann box."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.special import roots_genlaguerre

from .potentials import (ConvergenceError, LocalizationProfile, ParameterError, PotentialParams,
                         chi_1d, smooth_step)

DIM_CAP = 200_000


# ---------------------------------------------------------------- modes and basis

@dataclass(frozen=True)
class ModeSet:
    """Neumann cosine modes p = (pi/ell) (n1, n2, n3) with nonnegative integers."""
    indices: tuple
    ell: float = 1.0

    def __post_init__(self):
        idx = tuple(tuple(int(v) for v in m) for m in self.indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("modes must be distinct")
        if any(len(m) != 3 or min(m) < 0 for m in idx):
            raise ParameterError("modes are nonnegative integer triples")
        if (0, 0, 0) not in idx:
            raise ParameterError("the zero mode must be included")
        # zero mode first so that index 0 is the condensate
        idx = ((0, 0, 0),) + tuple(m for m in idx if m != (0, 0, 0))
        object.__setattr__(self, "indices", idx)

    @classmethod
    def lowest(cls, count: int, ell: float = 1.0, max_index: int = 2) -> "ModeSet":
        """The `count` lowest-energy modes with every n_i <= max_index."""
        cand = sorted(product(range(max_index + 1), repeat=3), key=lambda m: (sum(v * v for v in m), m))
        return cls(tuple(cand[:count]), ell)

    def __len__(self):
        return len(self.indices)

    @property
    def momenta(self) -> np.ndarray:
        return np.pi / self.ell * np.array(self.indices, dtype=float)

    @property
    def kinetic(self) -> np.ndarray:
        return np.sum(self.momenta ** 2, axis=1)

    @property
    def max_index(self) -> int:
        return max(max(m) for m in self.indices)


def _occupations(n_modes: int, total: int, cutoff: int, fixed: bool) -> np.ndarray:
    """Occupation rows; the zero mode (column 0) is unrestricted, excited modes hold <= cutoff."""
    rows = []

    def rec(prefix, left, slots):
        if slots == 0:
            rows.append(prefix)
            return
        for v in range(min(left, cutoff), -1, -1):
            rec(prefix + [v], left - v, slots - 1)

    totals = [total] if fixed else range(total + 1)
    for N in totals:
        for n0 in range(N, -1, -1):
            before = len(rows)
            rec([n0], N - n0, n_modes - 1)
            # keep only rows that place every particle
            rows[before:] = [r for r in rows[before:] if sum(r) == N]
    return np.array(rows, dtype=np.int64).reshape(-1, n_modes)


@dataclass
class TruncatedFockSpace:
    """Occupation basis with fixed total number (or all totals <= n_total).

    per_mode_cutoff caps each excited mode; the zero mode carries the remainder.
    """
    mode_set: ModeSet
    n_total: int
    per_mode_cutoff: Optional[int] = None
    fixed_number: bool = True

    def __post_init__(self):
        if self.n_total < 0:
            raise ParameterError("n_total must be nonnegative")
        if self.per_mode_cutoff is None:
            self.per_mode_cutoff = self.n_total
        self.basis = _occupations(len(self.mode_set), self.n_total, self.per_mode_cutoff,
                                  self.fixed_number)
        self.radix = self.n_total + 2
        self._caps = np.array([self.n_total] + [self.per_mode_cutoff] * (len(self.mode_set) - 1))
        self.keys = self._encode(self.basis)
        order = np.argsort(self.keys)
        self.basis, self.keys = self.basis[order], self.keys[order]

    def _encode(self, occ):
        w = self.radix ** np.arange(occ.shape[1], dtype=np.int64)
        return occ @ w

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, occ) -> np.ndarray:
        """Basis index of each occupation row, -1 if outside the truncated space."""
        occ = np.atleast_2d(occ)
        ok = np.all((occ >= 0) & (occ <= self._caps), axis=1)
        keys = self._encode(np.clip(occ, 0, self.radix - 1))
        pos = np.searchsorted(self.keys, keys)
        pos = np.clip(pos, 0, self.dim - 1)
        hit = ok & (self.keys[pos] == keys)
        return np.where(hit, pos, -1)

    @property
    def number(self) -> np.ndarray:
        return self.basis.sum(axis=1)

    @property
    def excited_number(self) -> np.ndarray:
        return self.basis[:, 1:].sum(axis=1)


# ---------------------------------------------------------------- w-hat coefficients

_GL200_X, _GL200_W = np.polynomial.legendre.leggauss(200)


def profile_transform(q, t: float) -> np.ndarray:
    """X(q) = int chi_1d(u) e^(iqu) du, real and even.

    Integration by parts moves the work onto the transition layer, where chi' lives:
    X(q) = 2 int_0^1 S'(x) sin(q a(x))/q dx with a(x) = (1-t)/2 - x t/2.
    """
    x = 0.5 * (_GL200_X + 1)
    w = 0.5 * _GL200_W
    S = smooth_step(x)
    dS = S * (1 - S) * (1 / (1 - x) ** 2 + 1 / x ** 2)
    a = (1 - t) / 2 - x * t / 2
    q = np.asarray(q, dtype=float)
    return 2 * (np.sinc(np.multiply.outer(q, a) / np.pi) * a) @ (w * dS)


def axis_transform(i: int, j: int, kappa, t: float) -> np.ndarray:
    """tau_ij(kappa) = int c_i c_j cos(i pi (u+1/2)) cos(j pi (u+1/2)) chi_1d(u) e^(i kappa u) du."""
    kappa = np.asarray(kappa, dtype=float)
    ci = 1.0 if i == 0 else np.sqrt(2.0)
    cj = 1.0 if j == 0 else np.sqrt(2.0)
    out = np.zeros(kappa.shape, dtype=complex)
    for m in (i - j, i + j):
        for sgn in (1, -1):
            out += np.exp(sgn * 1j * m * np.pi / 2) * profile_transform(kappa + sgn * m * np.pi, t)
    return ci * cj / 4 * out


class WHatTable:
    """All w-hat_{pq,mn} for a mode set, via the axis factorization of T_pm(k).

    w_hat = int d^3k/(2 pi)^3 V_R(k) T_pm(k) conj(T_qn(k)), and with
    1/(1 + k^2 R^2)^2 = int_0^inf s e^(-s) e^(-s k^2 R^2) ds the k integral splits
    into products of one-dimensional integrals at each Laguerre node s.
    """

    def __init__(self, modes: ModeSet, lp: LocalizationProfile, R: float,
                 n_s: int = 80, k_extent: float = 25.0, panel_nodes: int = 12):
        if not R > 0:
            raise ParameterError("R must be positive")
        self.modes, self.lp, self.R = modes, lp, R
        ell, t = modes.ell, lp.t
        nmax = modes.max_index
        # kappa = k ell on [0, K]; panels one half period wide
        K = max(k_extent / t, 40.0 * ell / R, 20.0 * np.pi * (nmax + 1))
        npan = int(np.ceil(K / np.pi))
        kx, kw = np.polynomial.legendre.leggauss(panel_nodes)
        a = np.arange(npan) * (K / npan)
        kap = (a[:, None] + (0.5 * kx + 0.5) * (K / npan)).ravel()
        wk = np.tile(0.5 * kw * (K / npan), npan)
        tau = {}
        for i in range(nmax + 1):
            for j in range(i, nmax + 1):
                tau[(i, j)] = tau[(j, i)] = axis_transform(i, j, kap, t)
        s, ws = roots_genlaguerre(n_s, 1.0)          # weight s e^-s
        self.s, self.ws = s, ws
        damp = np.exp(-np.outer(s, (kap * R / ell) ** 2))  # (ns, nk)
        pairs = [(i, j) for i in range(nmax + 1) for j in range(nmax + 1)]
        self._pairs = {pr: n for n, pr in enumerate(pairs)}
        A = np.zeros((len(pairs), len(pairs), n_s))
        for x, pa in enumerate(pairs):
            for y, pb in enumerate(pairs):
                if y < x:
                    A[x, y] = A[y, x]
                    continue
                if (sum(pa) + sum(pb)) % 2:
                    continue                     # odd parity: integral vanishes exactly
                integrand = (tau[pa] * np.conj(tau[pb])).real
                # int over the full line = 2 int_0^inf of the real part, dk = dkappa/ell
                A[x, y] = 2 * (damp @ (wk * integrand)) / (2 * np.pi * ell)
        self._A = A
        self._cache = {}

    def T(self, p, m, k) -> complex:
        """T_pm(k) = int phi_p phi_m chi(x/ell) e^(ikx) d^3x."""
        ell, t = self.modes.ell, self.lp.t
        out = 1.0 + 0j
        for pj, mj, kj in zip(p, m, k):
            out *= complex(axis_transform(pj, mj, kj * ell, t))
        return out

    def __call__(self, p, q, m, n) -> float:
        """w-hat for mode triples p, q, m, n."""
        key = (tuple(p), tuple(q), tuple(m), tuple(n))
        if key in self._cache:
            return self._cache[key]
        prod = np.ones_like(self.s)
        for j in range(3):
            if (p[j] + m[j] + q[j] + n[j]) % 2:
                self._cache[key] = 0.0
                return 0.0
            prod = prod * self._A[self._pairs[(p[j], m[j])], self._pairs[(q[j], n[j])]]
        val = 8 * np.pi * self.R ** 3 * float(np.dot(self.ws, prod))
        self._cache[key] = val
        return val


def w_hat_coefficient(p, q, m, n, lp: LocalizationProfile, R: float, modes: Optional[ModeSet] = None,
                      table: Optional[WHatTable] = None) -> float:
    if table is None:
        mx = max(max(v) for v in (p, q, m, n))
        modes = modes or ModeSet.lowest(1, lp.ell, max(mx, 1))
        table = WHatTable(_modes_cover(modes, mx), lp, R)
    return table(p, q, m, n)


def _modes_cover(modes: ModeSet, mx: int) -> ModeSet:
    if modes.max_index >= mx:
        return modes
    extra = tuple(m for m in product(range(mx + 1), repeat=3) if m not in modes.indices)
    return ModeSet(modes.indices + extra, modes.ell)


def w0000_direct(lp: LocalizationProfile, R: float, nang: int = 24) -> float:
    """w-hat_{00,00} = ell^-3 / gamma int d^3z e^(-|z|/R) h(z/ell), by spherical quadrature."""
    from scipy.integrate import quad
    ell = lp.ell
    gx, gw = np.polynomial.legendre.leggauss(nang)
    # octant symmetry: mu = cos(theta) in (0, 1), phi in (0, pi/2)
    mu = 0.5 * gx + 0.5
    wmu = 0.5 * gw
    ph = 0.25 * np.pi * (gx + 1)
    wph = 0.25 * np.pi * gw
    M, P = np.meshgrid(mu, ph, indexing="ij")
    W = np.outer(wmu, wph) * 8
    dirs = np.stack([np.sqrt(1 - M ** 2) * np.cos(P), np.sqrt(1 - M ** 2) * np.sin(P), M], axis=-1)

    from .lower_bound import _h_axis_spline
    spline, edge = _h_axis_spline(lp.t), 1 - lp.t

    def h(z):
        s = np.abs(z) / ell
        return np.prod(np.where(s < edge, spline(np.minimum(s, edge)), 0.0), axis=-1)

    def ang(r):
        return float(np.sum(W * h(r * dirs)))

    rmax = np.sqrt(3) * (1 - lp.t) * ell
    val = quad(lambda r: r * r * np.exp(-r / R) * ang(r), 0, rmax, epsabs=0, epsrel=1e-9, limit=200)[0]
    return val / (ell ** 3 * lp.gamma)


def w0000_monte_carlo(lp: LocalizationProfile, R: float, n: int = 400_000, seed: int = 0):
    """6D Monte-Carlo estimate of ell^-6 int int chi chi e^(-|x-y|/R); returns (mean, std error)."""
    rng = np.random.default_rng(seed)
    ell = lp.ell
    x = rng.uniform(-ell / 2, ell / 2, (n, 3))
    y = rng.uniform(-ell / 2, ell / 2, (n, 3))
    v = lp.chi(x) * lp.chi(y) * np.exp(-np.linalg.norm(x - y, axis=1) / R)
    return float(v.mean() / ell ** 0), float(v.std(ddof=1) / np.sqrt(n))


# ---------------------------------------------------------------- Hamiltonian

def _apply(fs: TruncatedFockSpace, ops):
    """Apply a product of ladder operators (rightmost first) to every basis state.

    ops: sequence of (mode, +1 creation / -1 annihilation). Returns (rows, cols, amp)
    for the matrix elements <target| ops |source> that stay inside the space.
    """
    occ = fs.basis.copy()
    amp = np.ones(fs.dim)
    for mode, kind in reversed(ops):
        if kind < 0:
            amp = amp * np.sqrt(np.maximum(occ[:, mode], 0))
            occ[:, mode] -= 1
        else:
            amp = amp * np.sqrt(np.maximum(occ[:, mode] + 1, 0))
            occ[:, mode] += 1
    tgt = fs.index(occ)
    ok = (amp != 0) & (tgt >= 0)
    return tgt[ok], np.nonzero(ok)[0], amp[ok]


@dataclass
class BoxHamiltonian:
    H: sp.csr_matrix
    parts: dict                     # sparse pieces before the coupling factor (see build_box_hamiltonian)
    coupling: float
    constant: float
    w0000: float
    asymmetry: float                # max |H - H^T| before symmetrization

    def ground_energy(self) -> float:
        return lowest_eigenvalue(self.H)


def _sparse_lowest(H) -> float:
    n = H.shape[0]
    v0 = np.ones(n, dtype=H.dtype) / np.sqrt(n)
    e_sa = eigsh(H, k=1, which="SA", tol=1e-13, maxiter=50000, v0=v0, ncv=min(n, 40))[0][0]
    # Lanczos can stall on a degenerate excited level; shift-invert below the Gershgorin
    # bound targets the bottom of the spectrum directly
    absH = abs(H)
    diag = H.diagonal().real
    sigma = float(np.min(diag - (np.asarray(absH.sum(axis=1)).ravel() - np.abs(diag)))) - 1.0
    e_si = eigsh(H, k=1, sigma=sigma, which="LM", tol=1e-13, v0=v0)[0][0]
    return float(min(e_sa.real, e_si.real))


def lowest_eigenvalue(H) -> float:
    n = H.shape[0]
    if n <= 1500:
        return float(np.linalg.eigvalsh(H.toarray() if sp.issparse(H) else H)[0])
    return _sparse_lowest(sp.csr_matrix(H))


def build_box_hamiltonian(fs: TruncatedFockSpace, rho: float, p: PotentialParams,
                          lp: LocalizationProfile, R: float, coupling_scale: float = 1.0,
                          table: Optional[WHatTable] = None, dim_cap: int = DIM_CAP) -> BoxHamiltonian:
    """Second-quantized box Hamiltonian restricted to the truncated space.

    parts: kinetic, pairing (the quadratic Bogoliubov two-body terms), quartic (all
    indices excited), rest (every other two-body term, the one-body background term
    and the constant).  H = kinetic + coupling * (pairing + quartic + rest).
    """
    if fs.dim > dim_cap:
        raise ParameterError(f"dimension {fs.dim} exceeds cap {dim_cap}")
    modes = fs.mode_set
    if abs(modes.ell - lp.ell) > 1e-12 * lp.ell:
        raise ParameterError("mode set and localization profile use different boxes")
    table = table or WHatTable(modes, lp, R)
    coupling = coupling_scale * lp.gamma * p.a0 * R / p.R0 ** 4
    nm = len(modes)
    idx = modes.indices
    dim = fs.dim
    acc = {k: ([], [], []) for k in ("pairing", "quartic", "rest")}

    def add(part, r, c, v):
        acc[part][0].append(r)
        acc[part][1].append(c)
        acc[part][2].append(v)

    for a, b, c, d in product(range(nm), repeat=4):
        w = table(idx[a], idx[b], idx[c], idx[d])
        if w == 0.0:
            continue
        zeros = (a == 0) + (b == 0) + (c == 0) + (d == 0)
        if zeros == 0:
            part = "quartic"
        elif zeros == 2 and ((a == 0) == (b == 0) or (a == 0) == (d == 0)):
            part = "pairing"           # patterns pq,00 / 00,mn / p0,0n / 0q,m0
        else:
            part = "rest"
        r, cidx, amp = _apply(fs, [(a, 1), (b, 1), (c, -1), (d, -1)])
        if len(r):
            add(part, r, cidx, 0.5 * w * amp)
    w00 = table(idx[0], idx[0], idx[0], idx[0])
    nbox = rho * modes.ell ** 3
    for a, b in product(range(nm), repeat=2):
        w = table(idx[0], idx[a], idx[0], idx[b])
        if w == 0.0:
            continue
        r, cidx, amp = _apply(fs, [(a, 1), (b, -1)])
        if len(r):
            add("rest", r, cidx, -nbox * w * amp)
    constant = 0.5 * nbox ** 2 * w00
    add("rest", np.arange(dim), np.arange(dim), np.full(dim, constant))

    def mat(part):
        rows, cols, vals = acc[part]
        if not rows:
            return sp.csr_matrix((dim, dim))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(dim, dim))

    parts = {k: mat(k) for k in acc}
    parts["kinetic"] = sp.diags(fs.basis @ modes.kinetic).tocsr()
    raw = parts["kinetic"] + coupling * (parts["pairing"] + parts["quartic"] + parts["rest"])
    asym = abs(raw - raw.T).max() if raw.nnz else 0.0
    H = ((raw + raw.T) * 0.5).tocsr()
    for k in ("pairing", "quartic", "rest"):
        parts[k] = ((parts[k] + parts[k].T) * 0.5).tocsr()
    return BoxHamiltonian(H, parts, coupling, constant * coupling, w00, float(asym))


def band_width_in_excitations(fs: TruncatedFockSpace, H) -> int:
    """Largest change of n_+ across a nonzero matrix element."""
    coo = sp.coo_matrix(H)
    keep = coo.data != 0
    ex = fs.excited_number
    if not keep.any():
        return 0
    return int(np.max(np.abs(ex[coo.row[keep]] - ex[coo.col[keep]])))


def number_conserved(fs: TruncatedFockSpace, H) -> bool:
    coo = sp.coo_matrix(H)
    N = fs.number
    keep = coo.data != 0
    return bool(np.all(N[coo.row[keep]] == N[coo.col[keep]]))


# ---------------------------------------------------------------- two-mode inequality

@dataclass(frozen=True)
class QuadraticFormParams:
    A: float
    B: float
    kappa: complex = 0.0

    def __post_init__(self):
        if not (self.A >= self.B > 0):
            raise ParameterError(f"need A >= B > 0, got A={self.A}, B={self.B}")


def _two_mode_operator(qf: QuadraticFormParams, s: float, cutoff: int) -> sp.csr_matrix:
    n = cutoff + 1
    a = sp.diags(np.sqrt(np.arange(1, n)), 1, shape=(n, n)).tocsr()
    I = sp.identity(n, format="csr")
    b = np.sqrt(s) * sp.kron(a, I, format="csr")
    c = np.sqrt(s) * sp.kron(I, a, format="csr")
    bd, cd = b.T.tocsr(), c.T.tocsr()
    k = complex(qf.kappa)
    H = qf.A * (bd @ b + cd @ c) + qf.B * (bd @ cd + b @ c) + k * (bd + c) + np.conj(k) * (b + cd)
    return ((H + H.conj().T) * 0.5).tocsr()


def _min_eig_complex(H) -> float:
    if np.allclose(H.data.imag, 0):
        return lowest_eigenvalue(H.real)
    if H.shape[0] <= 1500:
        return float(np.linalg.eigvalsh(H.toarray())[0])
    return _sparse_lowest(H)


@dataclass
class QuadraticCheck:
    lhs_min_eig: float
    rhs_bound: float
    slack: float
    converged_difference: float


def quadratic_bound_check(qf: QuadraticFormParams, commutator_norm: float = 1.0, cutoff: int = 40,
                          tol: float = 1e-8) -> QuadraticCheck:
    """Lowest eigenvalue of the two-mode Bogoliubov form against its closed-form lower bound."""
    if cutoff < 10:
        raise ParameterError("cutoff must be >= 10")
    if not commutator_norm > 0:
        raise ParameterError("commutator norm must be positive")
    e1 = _min_eig_complex(_two_mode_operator(qf, commutator_norm, cutoff))
    e2 = _min_eig_complex(_two_mode_operator(qf, commutator_norm, 2 * cutoff))
    diff = abs(e1 - e2)
    if diff > tol:
        raise ConvergenceError(f"cutoff {cutoff} not converged (doubling changes {diff:.3g})", diff)
    A, B = qf.A, qf.B
    rhs = -0.5 * (A - np.sqrt(A * A - B * B)) * 2 * commutator_norm - 2 * abs(qf.kappa) ** 2 / (A + B)
    return QuadraticCheck(e2, float(rhs), float(e2 - rhs), diff)


# ---------------------------------------------------------------- band localization

def diagonal_sums(A: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """d_k = (psi, A^k psi) with A^k the k-th supra- plus infra-diagonal."""
    N = len(psi)
    d = np.zeros(N)
    d[0] = float(np.real(np.vdot(psi, np.diag(A) * psi)))
    for k in range(1, N):
        sup = np.diagonal(A, k)
        d[k] = 2 * float(np.real(np.sum(np.conj(psi[:-k]) * sup * psi[k:])))
    return d


def correction_sum(d: np.ndarray, M: int) -> float:
    k = np.arange(len(d))
    lo = (k >= 1) & (k < M)
    return float(np.sum(k[lo] ** 2 * np.abs(d[lo])) / M ** 2 + np.sum(np.abs(d[k >= M])))


@dataclass
class Localization:
    phi: np.ndarray
    window_start: int
    energy: float
    lam: float
    correction: float            # (1/M^2) sum_{k<M} k^2 |d_k| + sum_{k>=M} |d_k|
    bound_rhs: Optional[float]   # lam + C * correction when C is given

    @property
    def ratio(self) -> float:
        """(energy - lam)/correction; -inf when the window beats lam with no correction."""
        gap = self.energy - self.lam
        if self.correction == 0:
            return 0.0 if gap <= 1e-12 * max(1.0, abs(self.lam)) else np.inf
        return gap / self.correction


def band_localization(A: np.ndarray, psi: np.ndarray, M: int, C: Optional[float] = None,
                      tapered: bool = False) -> Localization:
    """Best window-localized trial vector: psi truncated to indices [n, n+M) and renormalized.

    With tapered=True, sine-tapered windows at every offset (clipped to the index range)
    are also tried; their norm-weighted average energy is lam minus tapered off-diagonal
    contributions, which makes the search much stronger than plain truncation.
    """
    A = np.asarray(A)
    psi = np.asarray(psi)
    N = len(psi)
    if not 1 <= M <= N:
        raise ParameterError("need 1 <= M <= N")
    if not np.allclose(A, A.conj().T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ParameterError("matrix must be Hermitian")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ParameterError("psi has zero norm")
    psi = psi / norm
    lam = float(np.real(np.vdot(psi, A @ psi)))
    d = diagonal_sums(A, psi)
    corr = correction_sum(d, M)
    taper = np.sin(np.pi * (np.arange(M) + 1) / (M + 1))
    best = (np.inf, None, 0)
    for n0 in range(-M + 1, N):
        for w in ((taper, None) if tapered else (None,)):
            if w is None and not 0 <= n0 <= N - M:
                continue
            lo, hi = max(n0, 0), min(n0 + M, N)
            phi = np.zeros_like(psi, dtype=complex)
            seg = psi[lo:hi] * (1.0 if w is None else w[lo - n0:hi - n0])
            nrm = np.linalg.norm(seg)
            if nrm == 0:
                continue
            phi[lo:hi] = seg / nrm
            e = float(np.real(np.vdot(phi, A @ phi)))
            if e < best[0]:
                best = (e, phi, min(max(n0, 0), N - M))
    if best[1] is None:
        raise ParameterError("all windows have zero mass")
    e, phi, start = best
    rhs = None if C is None else lam + C * corr
    return Localization(phi, start, e, lam, corr, rhs)


def random_banded_hermitian(rng, N: int, bandwidth: int = 3, complex_entries: bool = True,
                            psi_kind: str = "random"):
    """Random Hermitian matrix with d_k = 0 for k >= bandwidth and a unit vector psi.

    psi_kind: 'random' (Gaussian vector) or 'ground' (lowest eigenvector, so lam = min spectrum).
    """
    A = np.zeros((N, N), dtype=complex if complex_entries else float)
    A[np.diag_indices(N)] = rng.normal(size=N) * 2
    for k in range(1, bandwidth):
        v = rng.normal(size=N - k) + (1j * rng.normal(size=N - k) if complex_entries else 0)
        idx = np.arange(N - k)
        A[idx, idx + k] = v
        A[idx + k, idx] = np.conj(v)
    if psi_kind == "ground":
        psi = np.linalg.eigh(A)[1][:, 0]
    elif psi_kind == "random":
        psi = rng.normal(size=N) + (1j * rng.normal(size=N) if complex_entries else 0)
    else:
        raise ParameterError(f"unknown psi_kind {psi_kind!r}")
    return A, psi / np.linalg.norm(psi)


def localization_ratios(rng, count: int = 200, N: int = 40, Ms=(5, 10, 20), tapered: bool = False,
                        psi_kind: str = "mixed"):
    """(energy - lam)/correction over random instances.

    psi_kind 'mixed' alternates random and ground-state psi; 'random' or 'ground' fixes it.
    """
    if psi_kind not in ("mixed", "random", "ground"):
        raise ParameterError(f"unknown psi_kind {psi_kind!r}")
    out = []
    for i in range(count):
        kind = ("random", "ground")[(i // len(Ms)) % 2] if psi_kind == "mixed" else psi_kind
        A, psi = random_banded_hermitian(rng, N, psi_kind=kind)
        out.append(band_localization(A, psi, Ms[i % len(Ms)], tapered=tapered).ratio)
    return np.array(out)


def calibrate_localization_constant(rng, count: int = 200, N: int = 40, Ms=(5, 10, 20),
                                    tapered: bool = False, psi_kind: str = "mixed"):
    """C_meas = max observed ratio over a pilot set (never below 0)."""
    ratios = localization_ratios(rng, count, N, Ms, tapered, psi_kind)
    return max(0.0, float(ratios.max())), ratios


# ---------------------------------------------------------------- sandwich

@dataclass
class SandwichRecord:
    exact: float
    upper: float
    lower: float
    budget: float
    budget_terms: dict
    exponent_terms: dict
    ordering_ok: bool
    dim: int


def sandwich_report(fs: TruncatedFockSpace, rho: float, p: PotentialParams, lp: LocalizationProfile,
                    R: float, exponent_triple=None, coupling_scale: float = 1.0,
                    Cprime: float = 1.0, tol: float = 1e-9, table: Optional[WHatTable] = None) -> SandwichRecord:
    """Exact truncated ground energy between -nI minus its budget and a variational value.

    The variational value is the ground energy on the subspace n_+ <= 2 (pair excitations
    of the condensate; n_+ <= min n_+ + 2 when the cutoff forbids a full condensate), an upper bound by Rayleigh-Ritz. The budget collects the terms
    dropped on the way from the box Hamiltonian to its quadratic part: the excited
    one-body bound (8 pi R^3/ell^3) n, the non-neutral term, and the most negative
    eigenvalue of the remaining non-quartic two-body and background terms.
    """
    from .lower_bound import lower_bound_integral
    from .exponents import error_budget

    if coupling_scale < 0:
        raise ParameterError("coupling_scale must be nonnegative")
    if coupling_scale > 0:
        p = PotentialParams(p.a0 * coupling_scale, p.R0)
    bh = build_box_hamiltonian(fs, rho, p, lp, R, 1.0 if coupling_scale > 0 else 0.0, table)
    n = fs.n_total
    H = bh.H
    exact = lowest_eigenvalue(H)
    ex = fs.excited_number
    small = np.nonzero(ex <= ex.min() + 2)[0]
    upper = lowest_eigenvalue(H[small][:, small])
    ell = lp.ell
    lam = bh.coupling
    if lam == 0:
        lower, terms = 0.0, {"excited_one_body": 0.0, "non_neutral": 0.0, "rest": 0.0}
    else:
        if not R <= p.R0:
            raise ParameterError("need R <= R0")
        # c_omega that reproduces the given R through lower_bound.box_range
        c_omega = max((1 / R - 1 / p.R0) * lp.t * ell ** 2 / p.R0, 1e-300)
        lb = lower_bound_integral(rho, p, ell, lp.t, n, Cprime=Cprime, c_omega=c_omega, gamma=lp.gamma)
        lower = -n * lb.I
        rest_min = lowest_eigenvalue(lam * bh.parts["rest"])
        terms = {
            "excited_one_body": lam * 8 * np.pi * R ** 3 / ell ** 3 * n,
            "non_neutral": 0.5 * lam * (n - rho * ell ** 3) ** 2 * bh.w0000,
            "rest": max(0.0, -rest_min),
        }
    budget = float(sum(terms.values()))
    expo = {}
    if exponent_triple is not None:
        Y = rho * p.a0 ** 3
        eb = error_budget(exponent_triple, Y)
        expo = {e.label: e.magnitude * 4 * np.pi * rho * p.a0 * n for e in eb.entries}
    ok = (lower - budget <= exact + tol) and (exact <= upper + tol)
    return SandwichRecord(exact, upper, lower, budget, terms, expo, bool(ok), fs.dim)
