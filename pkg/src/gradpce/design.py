"""Assembly and diagnostics of gradient-enhanced measurement systems.

A gradient-enhanced design stacks the basis matrix with the partial-derivative
matrices of the included directions, then applies a diagonal row weighting W
(square root of the ratio between each block's natural density and the
sampling density) and a diagonal column normalization P chosen so that the
expected Gram matrix of the weighted system is the identity.  For Hermite
bases under Gaussian sampling W is the identity and only P acts.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pce import PceBasis
from .polynomials import JacobiParams, Measure, density_ratio_to_chebyshev
from .sampling import SampleBatch, sample, split_stream

_MATRIX_MAGIC = b"GEPCMAT1"

# Guard for exact second-moment computation: tensor rules grow as (n+1)^d.
_QUADRATURE_DIM_CAP = 4


def _check_pairing(basis: PceBasis, batch: SampleBatch) -> None:
    if basis.dim != batch.dim:
        raise ValueError("basis and sample batch dimensions differ")
    if basis.kind == "jacobi":
        if batch.measure != Measure.chebyshev():
            raise ValueError(
                "gradient-enhanced Jacobi designs require Chebyshev sampling, "
                f"got {batch.measure.label}"
            )
    elif batch.measure != Measure.gaussian():
        raise ValueError(
            f"Hermite designs require Gaussian sampling, got {batch.measure.label}"
        )


def _normalize_directions(dim: int, directions) -> tuple[int, ...]:
    if directions is None:
        return tuple(range(dim))
    dirs = tuple(sorted(int(a) for a in directions))
    if len(set(dirs)) != len(dirs):
        raise ValueError("duplicate gradient directions")
    if dirs and not (0 <= dirs[0] and dirs[-1] < dim):
        raise ValueError("gradient direction out of range")
    return dirs


def _row_weights(basis: PceBasis, points: np.ndarray, directions: tuple[int, ...]) -> np.ndarray:
    """Stacked diagonal of W: one block for values, one per direction."""
    n = points.shape[0]
    if basis.kind != "jacobi":
        return np.ones(n * (1 + len(directions)))
    ratios = np.empty((basis.dim, n))
    raised = np.empty((basis.dim, n))
    for j, fam in enumerate(basis.families):
        ratios[j] = density_ratio_to_chebyshev(fam.params, points[:, j])
        raised[j] = density_ratio_to_chebyshev(fam.params.raised(), points[:, j])
    blocks = [np.sqrt(np.prod(ratios, axis=0))]
    for axis in directions:
        parts = [raised[j] if j == axis else ratios[j] for j in range(basis.dim)]
        blocks.append(np.sqrt(np.prod(parts, axis=0)))
    return np.concatenate(blocks)


def column_normalizer(basis: PceBasis, directions=None) -> np.ndarray:
    """Diagonal of P: unit expected stacked column energy per basis function.

    Entry k is (1 + sum over included directions of c(k_j)^2)^(-1/2), where c
    is the derivative constant of the family in that direction (sqrt(k_j) for
    Hermite).
    """
    dirs = _normalize_directions(basis.dim, directions)
    idx = basis.index_set.indices
    energy = np.ones(basis.size)
    for axis in dirs:
        fam = basis.families[axis]
        consts = np.array(
            [fam.derivative_constant(n) for n in range(basis.degree + 1)]
        )
        energy += consts[idx[:, axis]] ** 2
    return 1.0 / np.sqrt(energy)


def design_matrices(
    basis: PceBasis, batch: SampleBatch, directions=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Raw stacked system and its weights: (phi, phi_tilde, w, p)."""
    _check_pairing(basis, batch)
    dirs = _normalize_directions(basis.dim, directions)
    phi = basis.matrix(batch.points)
    blocks = [phi] + [basis.gradient_matrix(batch.points, a) for a in dirs]
    phi_tilde = np.vstack(blocks)
    w = _row_weights(basis, batch.points, dirs)
    p = column_normalizer(basis, dirs)
    return phi, phi_tilde, w, p


@dataclass(frozen=True)
class GradientDesign:
    """Weighted gradient-enhanced measurement system for one sample batch."""

    basis: PceBasis
    batch: SampleBatch
    directions: tuple[int, ...]
    phi: np.ndarray = field(repr=False)        # (N, M) raw basis values
    phi_tilde: np.ndarray = field(repr=False)  # (N*(1+q), M) stacked raw system
    w: np.ndarray = field(repr=False)          # stacked diagonal of W
    p: np.ndarray = field(repr=False)          # diagonal of P
    phi_hat: np.ndarray = field(repr=False)    # W * phi_tilde * P
    f_tilde: np.ndarray = field(repr=False)    # stacked data [values, gradients...]

    def __post_init__(self):
        if not np.all(self.w > 0.0):
            raise ValueError("row weights must be strictly positive")
        if not np.all((self.p > 0.0) & (self.p <= 1.0)):
            raise ValueError("column normalizers must lie in (0, 1]")

    @property
    def n_samples(self) -> int:
        return len(self.batch)

    @property
    def rhs(self) -> np.ndarray:
        """Right-hand side matching phi_hat: W applied to the stacked data."""
        return self.w * self.f_tilde

    def value_block(self) -> np.ndarray:
        """Rows of phi_hat coming from plain function evaluations."""
        return self.phi_hat[: self.n_samples]

    def unscale(self, scaled_coefficients: np.ndarray) -> np.ndarray:
        """Map coefficients of the P-scaled system back to basis coefficients."""
        return self.p * scaled_coefficients


def assemble_gradient_enhanced(
    basis: PceBasis,
    batch: SampleBatch,
    values: np.ndarray,
    gradients: np.ndarray | None = None,
    directions=None,
) -> GradientDesign:
    """Build the weighted stacked system from samples, values, and gradients.

    ``gradients`` holds one column per basis dimension (columns of excluded
    directions are ignored); it may be omitted only when no directions are
    included.
    """
    dirs = _normalize_directions(basis.dim, directions)
    phi, phi_tilde, w, p = design_matrices(basis, batch, dirs)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != len(batch):
        raise ValueError("one value per sample required")
    if dirs:
        if gradients is None:
            raise ValueError("gradient data required for the included directions")
        gradients = np.asarray(gradients, dtype=float)
        if gradients.shape != (len(batch), basis.dim):
            raise ValueError(f"gradients must have shape ({len(batch)}, {basis.dim})")
        f_tilde = np.concatenate([values] + [gradients[:, a] for a in dirs])
    else:
        f_tilde = values
    phi_hat = (w[:, None] * phi_tilde) * p[None, :]
    return GradientDesign(basis, batch, dirs, phi, phi_tilde, w, p, phi_hat, f_tilde)


def assemble_standard(
    basis: PceBasis, batch: SampleBatch, precondition: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Value-only design matrix and its diagonal row weights.

    With ``precondition`` the rows are scaled by the square root of the ratio
    between the basis measure's density and the sampling density, making the
    expected Gram matrix the identity.  The sampling measure must share the
    basis support.
    """
    if basis.dim != batch.dim:
        raise ValueError("basis and sample batch dimensions differ")
    if (basis.kind == "jacobi") != (batch.measure.kind == "jacobi"):
        raise ValueError("sample support does not match the basis support")
    phi = basis.matrix(batch.points)
    if not precondition or basis.kind != "jacobi":
        return phi, np.ones(len(batch))
    if batch.measure != Measure.chebyshev():
        raise ValueError("preconditioning is defined for Chebyshev sampling")
    w = _row_weights(basis, batch.points, ())
    return w[:, None] * phi, w


# -- coherence diagnostics -------------------------------------------------


def mic(matrix: np.ndarray) -> float:
    """Mutual incoherence: largest |cosine| between distinct columns."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[1] < 2:
        raise ValueError("need a 2-d matrix with at least two columns")
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("matrix has a zero column")
    gram = (m / norms).T @ (m / norms)
    np.fill_diagonal(gram, 0.0)
    return float(np.abs(gram).max())


def recovery_guarantee(mic_value: float, sparsity: int) -> bool:
    """Sufficient condition mic < 1/(2s - 1) for unique s-sparse recovery."""
    if sparsity < 1:
        raise ValueError("sparsity must be at least 1")
    if not 0.0 <= mic_value <= 1.0:
        raise ValueError("mic must lie in [0, 1]")
    return mic_value < 1.0 / (2.0 * sparsity - 1.0)


def coherence_bound(params_list) -> tuple[float, float]:
    """Product bound on the weighted suprema and its growth ratio.

    Returns (bound, growth) where bound is the product over dimensions of
    2e(2 + sqrt(alpha^2 + beta^2)) and growth is the largest per-dimension
    ratio between the raised-parameter factor and this one; growth lies in
    [1, 1 + sqrt(2)/2].
    """
    bound = 1.0
    growth = 1.0
    for p in params_list:
        base = 2.0 + math.hypot(p.alpha, p.beta)
        bound *= 2.0 * math.e * base
        growth = max(growth, (2.0 + math.hypot(p.alpha + 1.0, p.beta + 1.0)) / base)
    return bound, growth


@dataclass(frozen=True)
class CoherenceReport:
    """Incoherence numbers of one design plus their analytic bounds."""

    mic: float
    value_coherence: float    # sup of squared entries of the weighted value block
    stacked_coherence: float  # sup of squared stacked, normalized column energy
    coherence_bound: float    # product bound for value_coherence (nan for Hermite)
    bound_growth: float       # ratio constant extending the bound to the stack

    @property
    def stacked_bound(self) -> float:
        return self.bound_growth * self.coherence_bound


def _weighted_profiles(basis: PceBasis, grid: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-dimension tables of (ratio * p_n^2) and raised-ratio derivative
    squares on a grid; used for suprema scans."""
    value_tables = []
    deriv_tables = []
    for fam in basis.families:
        values, derivs = fam.eval_table(grid, basis.degree)
        ratio = density_ratio_to_chebyshev(fam.params, grid)
        raised = density_ratio_to_chebyshev(fam.params.raised(), grid)
        value_tables.append(ratio[:, None] * values**2)
        deriv_tables.append(raised[:, None] * derivs**2)
    return value_tables, deriv_tables


def _grid_suprema(basis: PceBasis, directions, p: np.ndarray, points: int) -> tuple[float, float]:
    """Suprema of the weighted squares over a tensor grid (dim <= 2)."""
    if basis.dim > 2:
        raise ValueError("grid scan supported for dimension <= 2 only")
    grid = np.linspace(-1.0, 1.0, points)
    value_tables, deriv_tables = _weighted_profiles(basis, grid)
    idx = basis.index_set.indices
    if basis.dim == 1:
        value_sq = value_tables[0][:, idx[:, 0]]
        mu_sup = float(value_sq.max())
        stacked = value_sq.copy()
        if 0 in directions:
            stacked += deriv_tables[0][:, idx[:, 0]]
        beta_sup = float((stacked * p[None, :] ** 2).max())
        return mu_sup, beta_sup
    mu_sup = 0.0
    beta_sup = 0.0
    for col, (k0, k1) in enumerate(basis.index_set):
        v0 = value_tables[0][:, k0]
        v1 = value_tables[1][:, k1]
        # Value term factorizes, so its sup is the product of the 1-d sups.
        mu_sup = max(mu_sup, float(v0.max() * v1.max()))
        total = np.outer(v0, v1)
        if 0 in directions:
            total += np.outer(deriv_tables[0][:, k0], v1)
        if 1 in directions:
            total += np.outer(v0, deriv_tables[1][:, k1])
        beta_sup = max(beta_sup, float(p[col] ** 2 * total.max()))
    return mu_sup, beta_sup


def coherence_suprema(basis: PceBasis, directions=None, grid_points: int = 2001) -> tuple[float, float]:
    """Grid-scanned suprema (value, stacked) of the weighted squared basis.

    Sample-free counterpart of the suprema in :func:`coherence_params`; limited
    to dimension <= 2 where a tensor grid is affordable.
    """
    dirs = _normalize_directions(basis.dim, directions)
    p = column_normalizer(basis, dirs)
    return _grid_suprema(basis, dirs, p, grid_points)


def coherence_params(design: GradientDesign, grid_points: int | None = None) -> CoherenceReport:
    """Coherence diagnostics of an assembled design.

    The suprema are taken over the realized sample set; pass ``grid_points``
    to additionally scan a dense tensor grid (dimension <= 2).  The analytic
    bounds apply to Jacobi bases and are nan for Hermite designs.
    """
    n = design.n_samples
    weighted = design.w[:, None] * design.phi_tilde  # stack without P
    value_sq = weighted[:n] ** 2
    mu = float(value_sq.max())
    stacked_sq = value_sq.copy()
    for j in range(1, 1 + len(design.directions)):
        stacked_sq += weighted[j * n : (j + 1) * n] ** 2
    beta = float((stacked_sq * design.p[None, :] ** 2).max())
    if grid_points:
        g_mu, g_beta = _grid_suprema(design.basis, design.directions, design.p, grid_points)
        mu = max(mu, g_mu)
        beta = max(beta, g_beta)
    if design.basis.kind == "jacobi":
        bound, growth = coherence_bound([fam.params for fam in design.basis.families])
    else:
        bound, growth = math.nan, math.nan
    return CoherenceReport(mic(design.phi_hat), mu, beta, bound, growth)


# -- second-moment (isotropy) checks ---------------------------------------


def _tensor_rule(families, sizes) -> tuple[np.ndarray, np.ndarray]:
    nodes_1d = []
    weights = np.ones(1)
    for fam, m in zip(families, sizes):
        x, w = fam.gauss_quadrature(m)
        nodes_1d.append(x)
        weights = np.multiply.outer(weights, w)
    grids = np.meshgrid(*nodes_1d, indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    return pts, weights.ravel()


def expected_gram(basis: PceBasis, directions=None) -> np.ndarray:
    """Exact expectation of the weighted Gram matrix phi_hat^T phi_hat / N.

    Each block's expectation reduces to an integral against its own Jacobi
    (or Gaussian) measure, evaluated with an exact tensor Gauss rule, so the
    result is the per-block Gramian identity up to quadrature roundoff.
    """
    if basis.dim > _QUADRATURE_DIM_CAP:
        raise ValueError(
            f"exact second moments limited to dimension <= {_QUADRATURE_DIM_CAP}"
        )
    dirs = _normalize_directions(basis.dim, directions)
    m = basis.degree + 1
    p = column_normalizer(basis, dirs)
    pts, w = _tensor_rule(basis.families, [m] * basis.dim)
    mat = basis.matrix(pts)
    gram = (mat * w[:, None]).T @ mat
    for axis in dirs:
        families = [
            fam.raised(basis.degree) if j == axis else fam
            for j, fam in enumerate(basis.families)
        ]
        pts, w = _tensor_rule(families, [m] * basis.dim)
        grad = basis.gradient_matrix(pts, axis)
        gram += (grad * w[:, None]).T @ grad
    return (gram * p[None, :]) * p[:, None]


def isotropy_gap(
    basis: PceBasis,
    mode: str = "quadrature",
    directions=None,
    mc_samples: int = 100_000,
    seed: int = 0,
) -> float:
    """Max-entry deviation of the expected weighted Gram matrix from identity.

    ``mode`` is "quadrature" (exact tensor rule) or "monte-carlo" (empirical
    second moment over a fresh sample batch of size ``mc_samples``).
    """
    if mode == "quadrature":
        gram = expected_gram(basis, directions)
        return float(np.abs(gram - np.eye(basis.size)).max())
    if mode == "monte-carlo":
        gap, _ = monte_carlo_isotropy(basis, mc_samples, seed, directions)
        return gap
    raise ValueError(f"unknown mode {mode!r}")


def monte_carlo_isotropy(
    basis: PceBasis,
    n_samples: int,
    seed: int = 0,
    directions=None,
    chunk: int = 100_000,
) -> tuple[float, float]:
    """Empirical isotropy gap and its worst entry in CLT units.

    Returns (gap, studentized) where gap is the max-entry deviation of the
    empirical second-moment matrix from the identity and studentized is the
    largest |deviation| / sqrt(entry variance / N).
    """
    measure = Measure.chebyshev() if basis.kind == "jacobi" else Measure.gaussian()
    dirs = _normalize_directions(basis.dim, directions)
    msize = basis.size
    total = np.zeros((msize, msize))
    total_sq = np.zeros((msize, msize))
    done = 0
    part = 0
    while done < n_samples:
        count = min(chunk, n_samples - done)
        batch = sample(measure, basis.dim, count, split_stream(seed, part))
        _, phi_tilde, w, p = design_matrices(basis, batch, dirs)
        weighted = (w[:, None] * phi_tilde) * p[None, :]
        blocks = weighted.reshape(1 + len(dirs), count, msize)
        total += np.einsum("bnk,bnl->kl", blocks, blocks)
        # Sum over samples of t_n(i,j)^2, with t_n the per-sample contribution,
        # expands into Hadamard-product Gramians over block pairs.
        for a in range(blocks.shape[0]):
            for b in range(blocks.shape[0]):
                prod = blocks[a] * blocks[b]
                total_sq += prod.T @ prod
        done += count
        part += 1
    mean = total / n_samples
    second = total_sq / n_samples
    var = np.maximum(second - mean**2, 0.0)
    dev = np.abs(mean - np.eye(msize))
    gap = float(dev.max())
    stderr = np.sqrt(var / n_samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(stderr > 0, dev / stderr, np.where(dev > 0, np.inf, 0.0))
    return gap, float(ratio.max())


def empirical_isotropy_gap(design: GradientDesign) -> float:
    """Gap of one realized design's Gram matrix from the identity."""
    gram = design.phi_hat.T @ design.phi_hat / design.n_samples
    return float(np.abs(gram - np.eye(design.basis.size)).max())


# -- nullspace comparison ---------------------------------------------------


def numeric_nullspace_dim(matrix: np.ndarray, tol: float = 1e-10) -> int:
    """Number of singular values at or below tol times the largest."""
    s = np.linalg.svd(np.asarray(matrix, float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return matrix.shape[1]
    return int(matrix.shape[1] - np.count_nonzero(s > tol * s[0]))


def nullspace_containment(phi: np.ndarray, phi_hat: np.ndarray, tol: float = 1e-10) -> bool:
    """Whether the numeric nullspace of phi_hat lies inside that of phi.

    Every right-singular vector of phi_hat with singular value <= tol times
    the largest must be mapped by phi to a vector of norm <= tol * ||phi||.
    """
    phi = np.asarray(phi, dtype=float)
    phi_hat = np.asarray(phi_hat, dtype=float)
    if phi.shape[1] != phi_hat.shape[1]:
        raise ValueError("matrices must share their column count")
    _, s, vt = np.linalg.svd(phi_hat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    null_mask = np.ones(phi_hat.shape[1], dtype=bool)
    null_mask[: s.size] = ~(s > tol * smax)
    basis_vectors = vt[null_mask]
    if basis_vectors.size == 0:
        return True
    phi_norm = np.linalg.norm(phi, 2)
    images = phi @ basis_vectors.T
    return bool(np.all(np.linalg.norm(images, axis=0) <= tol * phi_norm))


# -- matrix serialization ----------------------------------------------------


def save_matrix(matrix: np.ndarray, path) -> None:
    """Dense binary layout: 8-byte magic, uint32 rows, uint32 cols, then
    row-major float64 payload, all little-endian."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    if m.ndim != 2:
        raise ValueError("only 2-d matrices are serialized")
    with Path(path).open("wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != _MATRIX_MAGIC:
        raise ValueError("not a recognized matrix file")
    rows, cols = struct.unpack("<II", raw[8:16])
    payload = np.frombuffer(raw[16:], dtype="<f8")
    if payload.size != rows * cols:
        raise ValueError("matrix payload size mismatch")
    return payload.reshape(rows, cols).copy()


def save_matrix_csv(matrix: np.ndarray, path) -> None:
    m = np.asarray(matrix, dtype=float)
    with Path(path).open("w") as fh:
        for row in np.atleast_2d(m):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
