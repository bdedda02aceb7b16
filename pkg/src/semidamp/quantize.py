"""1D grid discretization of the damped Schrodinger operator.

Builds the selfadjoint part H1 = -h^2 Lap + V1, the full operator
H = H1 - i nu(h) V2 - i sponge, weight operators <x>^-s, the generator of
dilations A = (h/2)(x.hD + hD.x), and Weyl quantizations of phase-space
symbols.

Domain truncation uses a complex absorbing sponge in the outer fraction of
the box instead of bare Dirichlet walls; the sponge only ever adds to the
anti-adjoint part, so dissipativity is preserved.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import PreconditionViolated, ResolutionError, SymbolDecayError
from .linalg import as_dense, hermiticity_defect
from .potentials import Potential

ROLE_IDS = {"other": 0, "H1": 1, "H": 2, "weight": 3, "A_h": 4,
            "weyl": 5, "sponge": 6}
_MAGIC = b"SDOP\x01\x00\x00\x00"


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError("grid needs at least 8 points")
        if self.x_max <= self.x_min:
            raise ValueError("empty box")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.x_min, self.x_max, factor * self.n_points)


@dataclass(frozen=True)
class NuLaw:
    """Damping-strength law nu(h), clipped into (0, 1].

    kinds: "linear" nu=h, "quadratic" nu=h^2, "power" nu=c*h^k,
    "table" exact lookup.
    """

    kind: str = "linear"
    c: float = 1.0
    k: float = 1.0
    table: dict | None = None

    def value(self, h: float) -> float:
        if self.kind == "linear":
            nu = h
        elif self.kind == "quadratic":
            nu = h * h
        elif self.kind == "power":
            nu = self.c * h**self.k
        elif self.kind == "table":
            if self.table is None or h not in self.table:
                raise ValueError(f"nu table has no entry for h={h}")
            nu = self.table[h]
        else:
            raise ValueError(f"unknown nu law {self.kind!r}")
        if nu <= 0:
            raise ValueError("nu(h) must be positive")
        return min(1.0, float(nu))

    def label(self) -> str:
        if self.kind == "power":
            return f"power({self.c},{self.k})"
        return self.kind


@dataclass(frozen=True)
class SemiclassicalParams:
    h: float
    nu_law: NuLaw = field(default_factory=NuLaw)

    def __post_init__(self):
        if not (0.0 < self.h <= 1.0):
            raise ValueError("h must lie in (0, 1]")

    @property
    def nu(self) -> float:
        return self.nu_law.value(self.h)

    @property
    def nu_tilde(self) -> float:
        return min(1.0, self.nu / self.h)


@dataclass
class DiscreteOperator:
    """Matrix on the grid with a role tag.

    matrix may be dense or scipy sparse; hermitian records whether the
    builder certified max|M - M*| <= 1e-12.
    """

    matrix: object
    role: str
    hermitian: bool
    grid: Grid | None = None
    params: SemiclassicalParams | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    def to_dense(self) -> np.ndarray:
        return as_dense(self.matrix)

    def imag_part_diagonal(self) -> np.ndarray | None:
        """Diagonal of (M - M*)/(2i) when that matrix is diagonal, else None."""
        m = self.matrix
        anti = (m - (m.conj().T if not sp.issparse(m) else m.conj().T)) / 2j
        anti_d = as_dense(anti)
        d = np.diag(np.diag(anti_d))
        if np.allclose(anti_d, d, atol=1e-14):
            return np.real(np.diag(anti_d))
        return None


@dataclass(frozen=True)
class SpongeConfig:
    strength: float = 2.0
    width_fraction: float = 0.2
    power: int = 4


def sponge_profile(grid: Grid, cfg: SpongeConfig) -> np.ndarray:
    """Nonnegative absorbing ramp supported in the outer band of the box."""
    x = grid.nodes
    w = cfg.width_fraction * (grid.x_max - grid.x_min) / 2.0
    left = np.clip((grid.x_min + w - x) / w, 0.0, None)
    right = np.clip((x - (grid.x_max - w)) / w, 0.0, None)
    return cfg.strength * (left**cfg.power + right**cfg.power)


def _second_derivative(grid: Grid, order: int):
    """Sparse matrix of -d^2/dx^2 (implicit zero outside the box)."""
    n, dx = grid.n_points, grid.spacing
    if order == 2:
        main = np.full(n, 2.0)
        off = np.full(n - 1, -1.0)
        lap = sp.diags([off, main, off], [-1, 0, 1], format="csr")
        return lap / dx**2
    if order == 4:
        main = np.full(n, 30.0)
        off1 = np.full(n - 1, -16.0)
        off2 = np.full(n - 2, 1.0)
        lap = sp.diags([off2, off1, main, off1, off2], [-2, -1, 0, 1, 2],
                       format="csr")
        return lap / (12.0 * dx**2)
    raise ValueError("stencil order must be 2 or 4")


def _first_derivative(grid: Grid, order: int = 2):
    """Sparse antisymmetric central-difference matrix d/dx."""
    n, dx = grid.n_points, grid.spacing
    if order == 2:
        off = np.full(n - 1, 0.5)
        return sp.diags([-off, off], [-1, 1], format="csr") / dx
    if order == 4:
        o1 = np.full(n - 1, 8.0)
        o2 = np.full(n - 2, 1.0)
        return sp.diags([o2, -o1, o1, -o2], [-2, -1, 1, 2],
                        format="csr") / (12.0 * dx)
    raise ValueError("stencil order must be 2 or 4")


def _spectral_kinetic(grid: Grid, h: float) -> np.ndarray:
    """Dense periodic spectral -h^2 d^2/dx^2 (dispersion-exact to Nyquist)."""
    n = grid.n_points
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
    eye = np.eye(n)
    t = np.fft.ifft((h * h * k * k)[:, None] * np.fft.fft(eye, axis=0), axis=0)
    t = np.real(t)
    return (t + t.T) / 2.0


def check_resolution(grid: Grid, h: float, e_max: float = 1.0,
                     guard_factor: float = 4.0) -> None:
    """Oscillation guard: spacing <= h / (guard_factor * sqrt(e_max))."""
    required = h / (guard_factor * np.sqrt(e_max))
    if grid.spacing > required * (1.0 + 1e-12):
        raise ResolutionError(
            f"spacing {grid.spacing:.4e} > {required:.4e} "
            f"(h={h}, e_max={e_max}, guard={guard_factor})")


def build_hamiltonian(grid: Grid, pot: Potential, params: SemiclassicalParams,
                      sponge: SpongeConfig | None = None,
                      stencil_order: int = 2, e_max: float | None = 1.0,
                      guard_factor: float = 4.0, kinetic: str = "fd"):
    """Assemble (H1, H) on the grid.

    H1 = -h^2 Lap + diag(V1) is real symmetric; H = H1 - i nu(h) diag(V2)
    - i diag(sponge). Raises ResolutionError when the oscillation guard is
    violated (pass e_max=None to skip the guard). kinetic="spectral" swaps
    the finite-difference Laplacian for the dense periodic spectral one
    (used where phase accuracy matters more than sparsity).
    """
    if e_max is not None:
        check_resolution(grid, params.h, e_max, guard_factor)
    x = grid.nodes
    h = params.h
    if kinetic == "spectral":
        h1 = sp.csr_matrix(_spectral_kinetic(grid, h)) + sp.diags(pot.v1(x))
    elif kinetic == "fd":
        h1 = (h * h) * _second_derivative(grid, stencil_order) \
            + sp.diags(pot.v1(x))
    else:
        raise ValueError("kinetic must be 'fd' or 'spectral'")
    sponge_vec = sponge_profile(grid, sponge) if sponge is not None \
        else np.zeros(grid.n_points)
    damp = params.nu * pot.v2(x) + sponge_vec
    hfull = (h1.astype(complex) - 1j * sp.diags(damp)).tocsr()
    op1 = DiscreteOperator(h1.tocsr(), "H1", hermitian=True, grid=grid,
                           params=params,
                           meta={"stencil_order": stencil_order,
                                 "kinetic": kinetic})
    meta = {"stencil_order": stencil_order, "sponge": sponge,
            "kinetic": kinetic, "nu": params.nu, "nu_tilde": params.nu_tilde,
            "dissipative": bool(np.all(damp >= 0.0)),
            "damp_diagonal": damp}
    op = DiscreteOperator(hfull, "H", hermitian=False, grid=grid,
                          params=params, meta=meta)
    return op1, op


def weight_operator(grid: Grid, s: float) -> DiscreteOperator:
    """Diagonal weight <x>^-s with entries (1 + x^2)^(-s/2)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    w = (1.0 + grid.nodes**2) ** (-s / 2.0)
    return DiscreteOperator(sp.diags(w), "weight", hermitian=True, grid=grid,
                            meta={"s": s, "diagonal": w})


def weight_vector(grid: Grid, s: float) -> np.ndarray:
    return (1.0 + grid.nodes**2) ** (-s / 2.0)


def dilation_generator(grid: Grid, h: float,
                       stencil_order: int = 2) -> DiscreteOperator:
    """A = (h/2)(X D + D X) with D = -i * central difference; symmetrized."""
    d = _first_derivative(grid, 2 if stencil_order == 2 else 2)
    dmat = -1j * d
    xdiag = sp.diags(grid.nodes)
    a = (h / 2.0) * (xdiag @ dmat + dmat @ xdiag)
    a = (a + a.conj().T) / 2.0  # kill roundoff asymmetry
    return DiscreteOperator(a.tocsr(), "A_h", hermitian=True, grid=grid,
                            meta={"h": h})


@dataclass(frozen=True)
class PolySymbol:
    """Symbol polynomial in xi: c0(x) + c1(x) xi + c2(x) xi^2.

    Quantized by exact differential rules, no xi quadrature.
    """

    c0: Callable | None = None
    c1: Callable | None = None
    c2: Callable | None = None
    name: str = "poly"


def xi_quadrature_grid(grid: Grid, h: float, n_xi: int | None = None):
    """Dual xi grid matched to the DFT phases of the position grid.

    With xi_q = 2 pi h q / (n_xi dx) the quadrature phases are exact DFT
    roots of unity, so the discrete quantization inherits the discrete
    orthogonality of plane waves.
    """
    n = grid.n_points
    if n_xi is None:
        n_xi = 2 * n + 1
    if n_xi % 2 == 0:
        n_xi += 1
    half = n_xi // 2
    dxi = 2.0 * np.pi * h / (n_xi * grid.spacing)
    q = np.arange(-half, half + 1)
    return q * dxi, dxi


def weyl_quantize(grid: Grid, symbol, h: float, n_xi: int | None = None,
                  decay_tol: float = 1e-6) -> DiscreteOperator:
    """Weyl quantization Op(a) on the grid.

    PolySymbol inputs use exact differential rules. Callable symbols
    a(x, xi) are quantized through the midpoint kernel

        K(x, y) = (2 pi h)^-1  int  e^{i (x - y) xi / h} a((x+y)/2, xi) dxi

    with the xi integral on the matched dual grid; the symbol must decay in
    xi by decay_tol relative to its peak at the quadrature edges, else
    SymbolDecayError.
    """
    if isinstance(symbol, PolySymbol):
        return _weyl_poly(grid, symbol, h)
    n = grid.n_points
    xi, dxi = xi_quadrature_grid(grid, h, n_xi)
    mids = grid.x_min + 0.5 * grid.spacing * np.arange(2 * n - 1)
    a_tab = np.asarray(symbol(mids[:, None], xi[None, :]), dtype=complex)
    peak = np.max(np.abs(a_tab))
    if peak == 0.0:
        return DiscreteOperator(np.zeros((n, n), dtype=complex), "weyl",
                                hermitian=True, grid=grid)
    edge = max(np.max(np.abs(a_tab[:, 0])), np.max(np.abs(a_tab[:, -1])))
    if edge > decay_tol * peak:
        raise SymbolDecayError(
            f"symbol tail {edge:.2e} exceeds {decay_tol:.1e} * peak {peak:.2e} "
            "at the xi quadrature edge")
    n_xi_eff = len(xi)
    r = np.arange(-(n - 1), n)
    q = np.arange(-(n_xi_eff // 2), n_xi_eff // 2 + 1)
    phases = np.exp(2j * np.pi * np.outer(q, r) / n_xi_eff)
    table = (a_tab @ phases) * (grid.spacing * dxi / (2.0 * np.pi * h))
    jj = np.arange(n, dtype=np.int32)
    mid_idx = jj[:, None] + jj[None, :]
    diff_idx = (jj[:, None] - jj[None, :]) + np.int32(n - 1)
    m = table[mid_idx, diff_idx]
    a_real = bool(np.max(np.abs(a_tab.imag)) <= 1e-14 * max(peak, 1.0))
    if a_real:
        m = (m + m.conj().T) / 2.0
    return DiscreteOperator(m, "weyl", hermitian=a_real, grid=grid,
                            meta={"h": h, "n_xi": n_xi_eff})


def _weyl_poly(grid: Grid, symbol: PolySymbol, h: float) -> DiscreteOperator:
    n = grid.n_points
    x = grid.nodes
    p = (-1j * h) * _first_derivative(grid, 2)  # h D, D = -i d/dx
    m = sp.csr_matrix((n, n), dtype=complex)
    if symbol.c0 is not None:
        m = m + sp.diags(np.asarray(symbol.c0(x), dtype=complex))
    if symbol.c1 is not None:
        c1 = sp.diags(np.asarray(symbol.c1(x), dtype=complex))
        m = m + 0.5 * (c1 @ p + p @ c1)
    if symbol.c2 is not None:
        c2 = sp.diags(np.asarray(symbol.c2(x), dtype=complex))
        m = m + 0.25 * (c2 @ p @ p + 2.0 * (p @ c2 @ p) + p @ p @ c2)
    herm = hermiticity_defect(m) <= 1e-10
    return DiscreteOperator(m.tocsr(), "weyl", hermitian=herm, grid=grid,
                            meta={"h": h, "poly": symbol.name})


def dissipativity_check(op: DiscreteOperator) -> float:
    """Largest eigenvalue of (M - M*)/(2i); dissipative iff <= 1e-12."""
    m = op.matrix
    anti = (m - m.conj().T) / 2j
    anti_d = as_dense(anti)
    offdiag = anti_d - np.diag(np.diag(anti_d))
    if np.max(np.abs(offdiag)) <= 1e-15:
        return float(np.max(np.real(np.diag(anti_d))))
    vals = np.linalg.eigvalsh(anti_d)
    return float(vals[-1])


def require_hermitian(op: DiscreteOperator, tol: float = 1e-12) -> None:
    defect = hermiticity_defect(op.matrix)
    if defect > tol:
        raise PreconditionViolated(
            f"{op.role} not hermitian: defect {defect:.2e} > {tol:.1e}")


def export_operator(op: DiscreteOperator, path) -> None:
    """Write the documented binary layout.

    32-byte header: 8-byte magic, uint32 n_rows, uint32 n_cols, uint32
    role id, uint32 flags (bit 0: hermitian), 8 zero bytes. Payload:
    row-major complex128 pairs, little-endian.
    """
    m = op.to_dense().astype(np.complex128)
    role_id = ROLE_IDS.get(op.role, 0)
    flags = 1 if op.hermitian else 0
    header = _MAGIC + struct.pack("<IIII", m.shape[0], m.shape[1],
                                  role_id, flags) + b"\x00" * 8
    with open(path, "wb") as f:
        f.write(header)
        f.write(m.astype("<c16").tobytes(order="C"))


def load_operator(path) -> DiscreteOperator:
    with open(path, "rb") as f:
        header = f.read(32)
        if header[:8] != _MAGIC:
            raise ValueError("bad magic in operator file")
        nr, nc, role_id, flags = struct.unpack("<IIII", header[8:24])
        data = np.frombuffer(f.read(), dtype="<c16").reshape(nr, nc)
    role = next((k for k, v in ROLE_IDS.items() if v == role_id), "other")
    return DiscreteOperator(np.array(data), role, hermitian=bool(flags & 1))
