"""Mass-lumped P1 finite elements on a hexagon with domain decomposition splitting.

The regular hexagon with vertices (+-1, 0), (+-1/2, +-sqrt(3)/2) is covered
by a structured lattice of equilateral triangles.  The Laplacian is split as
sum_j div(psi_j grad u), where psi_1..psi_4 are tensor products of a 1D
plateau function psi and 1 - psi.  Each split stiffness matrix is supported
on a few disjoint node sets, and every stage solve decomposes into
independent sparse solves on those sets.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .core import AffineOperator, Layout, SplitSystem
from .problems import SchnakParams, schnakenberg_initial, schnakenberg_reaction

SQRT3 = math.sqrt(3.0)


class FactorizationError(RuntimeError):
    pass


@dataclass
class MeshHex:
    nodes: np.ndarray      # (n_nodes, 2)
    triangles: np.ndarray  # (n_tri, 3), counter-clockwise
    n_sub: int
    edge: float = 1.0

    @property
    def h(self) -> float:
        return self.edge / self.n_sub

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def write(self, path) -> None:
        """Plain text: ``v x y`` per node, then ``t i j k`` (0-based) per triangle."""
        with open(path, "w") as fh:
            for x, y in self.nodes.tolist():
                fh.write(f"v {x!r} {y!r}\n")
            for i, j, k in self.triangles.tolist():
                fh.write(f"t {i} {j} {k}\n")

    @classmethod
    def read(cls, path, n_sub: int = 0, edge: float = 1.0) -> "MeshHex":
        nodes, tris = [], []
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    nodes.append((float(parts[1]), float(parts[2])))
                elif parts[0] == "t":
                    tris.append(tuple(int(q) for q in parts[1:4]))
        return cls(np.array(nodes), np.array(tris, dtype=np.int64), n_sub, edge)


def triangulate_hexagon(n_sub: int, edge: float = 1.0) -> MeshHex:
    """Structured mesh with 6*n_sub**2 equilateral triangles of side edge/n_sub.

    Nodes are the lattice points i*e1 + j*e2 (e1 = (h, 0), e2 = (h/2, h*sqrt(3)/2))
    with |i|, |j|, |i+j| <= n_sub.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    n = n_sub
    h = edge / n
    index = {}
    coords = []
    for j in range(-n, n + 1):
        for i in range(-n, n + 1):
            if abs(i + j) <= n:
                index[(i, j)] = len(coords)
                coords.append((h * (i + 0.5 * j), h * 0.5 * SQRT3 * j))
    tris = []
    for j in range(-n - 1, n + 1):
        for i in range(-n - 1, n + 1):
            a, b, c, d = (index.get(q) for q in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)))
            if b is None or c is None:
                continue
            if a is not None:
                tris.append((a, b, c))
            if d is not None:
                tris.append((b, d, c))
    return MeshHex(np.array(coords), np.array(tris, dtype=np.int64), n_sub, edge)


@dataclass(frozen=True)
class PartitionOfUnity:
    """1D plateau function psi on [a, b] and its four tensor products.

    psi is 1 within r of the plateau centres z_k = a + (b-a)(k-1/2)/K for odd k,
    0 for even k, constant beyond the outermost plateaus, and a quintic
    smoothstep (C^2) in between.
    """

    K: int = 4
    r_overlap: float = 0.1
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if not 0 < self.r_overlap < (self.b - self.a) / (2 * self.K):
            raise ValueError("plateau half-width must satisfy 0 < r < (b-a)/(2K)")

    @property
    def centres(self) -> np.ndarray:
        k = np.arange(1, self.K + 1)
        return self.a + (self.b - self.a) * (k - 0.5) / self.K

    def psi(self, z) -> np.ndarray:
        z = np.clip(np.asarray(z, dtype=float), self.a, self.b)
        zc = self.centres
        r = self.r_overlap
        values = np.where(np.arange(1, self.K + 1) % 2 == 1, 1.0, 0.0)
        out = np.full(z.shape, values[0])
        out = np.where(z >= zc[-1] - r, values[-1], out)
        for k in range(self.K):
            lo, hi = zc[k] - r, zc[k] + r
            out = np.where((z >= lo) & (z <= hi), values[k], out)
            if k + 1 < self.K:
                start, stop = hi, zc[k + 1] - r
                t = np.clip((z - start) / (stop - start), 0.0, 1.0)
                blend = t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
                inside = (z > start) & (z < stop)
                out = np.where(inside, values[k] + (values[k + 1] - values[k]) * blend, out)
        return out

    def weights(self, x, y) -> np.ndarray:
        """psi_1..psi_4 at the points, shape (4, ...)."""
        px, py = self.psi(x), self.psi(y)
        return np.stack([px * py, (1 - px) * py, px * (1 - py), (1 - px) * (1 - py)])


def pou_psi(z, p: PartitionOfUnity):
    return p.psi(z)


@dataclass
class SplitStiffness:
    """A_j = -D * (stiffness weighted by psi_j) and the lumped mass M.

    Semi-discretely, M u' = sum_j A_j u, so the split operators in the ODE are
    M^{-1} A_j.
    """

    A: list          # sparse CSR, each symmetric negative semidefinite
    M: np.ndarray    # lumped mass diagonal
    components: list  # components[j] = list of node index arrays
    _lu_cache: dict = field(default_factory=dict, repr=False)

    @property
    def s(self) -> int:
        return len(self.A)

    def total(self):
        out = self.A[0].copy()
        for a in self.A[1:]:
            out = out + a
        return out


def _element_stiffness(nodes, tris):
    """Local P1 stiffness matrices, shape (n_tri, 3, 3), and element areas."""
    p = nodes[tris]
    # b_i = y_{i+1} - y_{i+2}, c_i = x_{i+2} - x_{i+1}
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(area <= 1e-14 * (np.ptp(nodes) ** 2 if nodes.size else 1.0)):
        raise ValueError("degenerate element (zero area)")
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area[:, None, None])
    return ke, area


def _assemble(tris, ke, n):
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    mat = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def find_components(A) -> list:
    """Connected node sets of the off-diagonal graph of A; unsupported nodes dropped."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    A.eliminate_zeros()
    supported = np.flatnonzero(np.diff(A.indptr) > 0)
    if supported.size == 0:
        return []
    offdiag = A - sp.diags(A.diagonal())
    offdiag.eliminate_zeros()
    _, labels = connected_components(offdiag, directed=False)
    groups = {}
    for node in supported:
        groups.setdefault(labels[node], []).append(node)
    comps = [np.array(g, dtype=np.int64) for g in groups.values()]
    comps.sort(key=lambda c: c[0])
    return comps


def assemble_split_fem(mesh: MeshHex, pou: PartitionOfUnity, D: float = 1.0) -> SplitStiffness:
    """Split stiffness with psi_j evaluated at element centroids.

    One-point weighting keeps sum_j A_j = A exactly, since the psi_j sum to
    one at every centroid.
    """
    ke, area = _element_stiffness(mesh.nodes, mesh.triangles)
    cen = mesh.centroids()
    w = pou.weights(cen[:, 0], cen[:, 1])
    n = mesh.n_nodes
    A = []
    for j in range(w.shape[0]):
        keep = w[j] > 0
        Aj = _assemble(mesh.triangles[keep], -D * w[j][keep, None, None] * ke[keep], n)
        Aj.eliminate_zeros()
        A.append(Aj)
    M = np.zeros(n)
    np.add.at(M, mesh.triangles.ravel(), np.repeat(area / 3.0, 3))
    return SplitStiffness(A, M, [find_components(a) for a in A])


def assemble_stiffness(mesh: MeshHex, D: float = 1.0):
    """Unweighted -D*K, the sum of all split parts."""
    ke, _ = _element_stiffness(mesh.nodes, mesh.triangles)
    return _assemble(mesh.triangles, -D * ke, mesh.n_nodes)


def _spd_factor(mat, comp_id):
    """Sparse LU without row pivoting; positive pivots certify SPD."""
    try:
        lu = splu(sp.csc_matrix(mat), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise FactorizationError(f"factorization failed on component {comp_id}: {exc}") from exc
    piv = lu.U.diagonal()
    if not np.all(piv > 0) or not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationError(f"component {comp_id}: matrix is not symmetric positive definite")
    return lu


def _factors(S: SplitStiffness, j: int, gamma: float):
    key = (j, float(gamma))
    facs = S._lu_cache.get(key)
    if facs is None:
        facs = []
        for cid, comp in enumerate(S.components[j]):
            sub = S.A[j][comp][:, comp]
            mat = sp.diags(S.M[comp]) - gamma * sub
            facs.append(_spd_factor(mat, cid))
        S._lu_cache[key] = facs
    return facs


def stage_solve_dd(S: SplitStiffness, j: int, gamma: float, rhs, workers: int = 1) -> np.ndarray:
    """Solve (M - gamma*A_j) w = M rhs component by component.

    ``j`` is 0-based.  Nodes outside the support of A_j keep their rhs value.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    rhs = np.asarray(rhs, dtype=float)
    w = rhs.copy()
    if gamma == 0:
        return w
    comps = S.components[j]
    facs = _factors(S, j, gamma)
    Mrhs = S.M * rhs

    def solve(k):
        return facs[k].solve(Mrhs[comps[k]])

    if workers <= 1:
        parts = [solve(k) for k in range(len(comps))]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(solve, range(len(comps))))
    for comp, part in zip(comps, parts):
        w[comp] = part
    return w


class _SpeciesPart:
    """Implicit part j acting on every species block of an interleaved state."""

    def __init__(self, S: SplitStiffness, j: int, diffusivities, workers=1):
        self.S = S
        self.j = j
        self.D = list(diffusivities)
        self.nsp = len(self.D)
        self.workers = workers
        self.zero = np.zeros(S.M.size * self.nsp)

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        for q, D in enumerate(self.D):
            out[q::self.nsp] = D * (self.S.A[self.j] @ v[q::self.nsp]) / self.S.M
        return out

    def source(self, t):
        return self.zero

    def stage_solve(self, rhs, gamma):
        rhs = np.asarray(rhs, dtype=float)
        out = np.empty_like(rhs)
        for q, D in enumerate(self.D):
            out[q::self.nsp] = stage_solve_dd(self.S, self.j, gamma * D, rhs[q::self.nsp], self.workers)
        return out


def build_diffusion_system(S: SplitStiffness, diffusivities, explicit, workers: int = 1) -> SplitSystem:
    """Species-diagonal DD-split diffusion with homogeneous Neumann data."""
    nsp = len(diffusivities)
    parts = []
    for j in range(S.s):
        sp_part = _SpeciesPart(S, j, diffusivities, workers)
        parts.append(AffineOperator(sp_part.apply, sp_part.source, sp_part.stage_solve, name=f"DD_{j + 1}"))
    n = S.M.size
    return SplitSystem(explicit, parts, n * nsp, Layout("mesh", (n,), nsp))


def build_schnakenberg_system(mesh: MeshHex, pou: PartitionOfUnity, params: SchnakParams | None = None,
                              split: SplitStiffness | None = None, workers: int = 1,
                              reaction: bool = True) -> SplitSystem:
    """Two-species system, state interleaved as (u_0, v_0, u_1, v_1, ...)."""
    p = params or SchnakParams()
    S = split if split is not None else assemble_split_fem(mesh, pou)

    def explicit(t, y):
        out = np.zeros_like(y)
        if reaction:
            du, dv = schnakenberg_reaction(y[0::2], y[1::2], p)
            out[0::2] = du
            out[1::2] = dv
        return out

    return build_diffusion_system(S, (p.D1, p.D2), explicit, workers)


def schnakenberg_state(mesh: MeshHex, params: SchnakParams | None = None) -> np.ndarray:
    p = params or SchnakParams()
    u0, v0 = schnakenberg_initial(mesh.nodes[:, 0], mesh.nodes[:, 1], p)
    y = np.empty(2 * mesh.n_nodes)
    y[0::2] = u0
    y[1::2] = v0
    return y


def write_snapshot(path, mesh: MeshHex, y: np.ndarray) -> None:
    """CSV ``x,y,u,v``, one row per node; ``path`` may be an open text file."""
    rows = ["x,y,u,v\n"]
    for (x, yy), u, v in zip(mesh.nodes.tolist(), y[0::2].tolist(), y[1::2].tolist()):
        rows.append(f"{x!r},{yy!r},{u!r},{v!r}\n")
    if hasattr(path, "write"):
        path.writelines(rows)
    else:
        with open(path, "w") as fh:
            fh.writelines(rows)
